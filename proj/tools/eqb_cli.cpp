// eqb: run convergence scenarios and print reports.
//
//   eqb run scenarios/blend_grid_quotient.json --format csv
//   eqb suite scenarios --out report.json
//   eqb list

#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eqb/harness.hpp"

namespace h = eqb::harness;

namespace {

std::vector<int> parse_schedule_flag(const std::string& s) {
  std::vector<int> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      const int v = std::stoi(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw h::ConfigError("bad --schedule entry '" + item + "'");
    }
  }
  if (out.empty()) throw h::ConfigError("--schedule is empty");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Convergence scenarios for lambda-sum approximations"};
  app.require_subcommand(1);

  std::string format = "json";
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::string schedule;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--format", format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", out_path, "output file (default stdout)");
    sub->add_option("--seed", seed, "override rng_seed");
    sub->add_option("--eps", eps, "override eps");
    sub->add_option("--schedule", schedule, "override schedule, e.g. 1,2,4,8");
  };

  std::string scenario_path;
  auto* run = app.add_subcommand("run", "run one scenario file");
  run->add_option("scenario", scenario_path, "scenario JSON")->required();
  add_common(run);

  std::string suite_dir;
  auto* suite = app.add_subcommand("suite", "run every *.json in a directory");
  suite->add_option("dir", suite_dir, "scenario directory")->required();
  add_common(suite);

  auto* list = app.add_subcommand("list", "list operators and functions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : h::kConfigError;
  }

  if (list->parsed()) {
    std::cout << "operators:";
    for (const auto& o : h::operators()) std::cout << ' ' << o;
    std::cout << "\nfunctions:";
    for (const auto& f : h::functions()) std::cout << ' ' << f;
    std::cout << "\nx_model: euclidean sorgenfrey\nz_connector: affine warped\n"
                 "y specs: number {\"rational\":[p,q]} {\"rational_index\":k} "
                 "{\"irrational\":\"sqrt2|pi|e\"} {\"irrational_value\":v,\"label\":s}\n";
    return h::kPass;
  }

  try {
    h::Overrides ov;
    ov.seed = seed;
    ov.eps = eps;
    if (!schedule.empty()) ov.schedule = parse_schedule_flag(schedule);
    const h::Format fmt = h::parse_format(format);

    std::vector<h::ConvergenceReport> reports;
    if (run->parsed()) {
      reports.push_back(h::run_scenario(h::load_scenario(scenario_path, ov)));
    } else {
      reports = h::run_suite(suite_dir, ov);
    }
    h::emit(h::render(reports, fmt, run->parsed()), out_path);
    for (const auto& r : reports) {
      if (!r.all_pass) return h::kCheckFailure;
    }
    return h::kPass;
  } catch (const h::ConfigError& e) {
    std::fprintf(stderr, "eqb: %s\n", e.what());
    return h::kConfigError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "eqb: %s\n", e.what());
    return h::kConfigError;
  }
}
