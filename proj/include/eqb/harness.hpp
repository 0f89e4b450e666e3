#pragma once

// Scenario runner: wires schemes, functions and operators into convergence
// and exact-value checks, and serializes deterministic reports.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <initializer_list>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "eqb/approx.hpp"
#include "eqb/core.hpp"
#include "eqb/gallery.hpp"
#include "eqb/pou.hpp"
#include "eqb/tagged_real.hpp"

namespace eqb::harness {

using Json = nlohmann::ordered_json;

class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum ExitCode : int { kPass = 0, kCheckFailure = 1, kConfigError = 2 };

struct Probe {
  std::vector<double> x;
  TaggedReal y;
  std::string label;
};

struct SchemeSpec {
  int n_max = 0;  // 0: max of the schedule
  double domain_lo = -1.0;
  double domain_hi = 1.0;
  int max_denominator = 4096;
};

struct Scenario {
  std::string name;
  std::string op;
  std::string x_model = "euclidean";
  std::string z_connector = "affine";
  std::string function;
  double constant_value = 0.0;
  SchemeSpec scheme;
  std::vector<Probe> probes;
  std::vector<int> levels;
  std::vector<double> deltas;
  std::vector<double> base_x;
  int slice = 1;
  std::vector<int> schedule = default_schedule();
  double eps = kDefaultEps;
  int tail_k = static_cast<int>(kDefaultTailK);
  std::uint64_t rng_seed = 0;
  Json config;  // canonical echo, after overrides
};

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::optional<std::vector<int>> schedule;
};

struct ProbeRecord {
  std::string label;
  std::vector<double> point;
  std::vector<int> schedule;
  std::vector<double> values;
  double target = 0.0;
  double final_gap = 0.0;
  bool pass = false;
};

struct ConvergenceReport {
  std::string scenario;
  std::string op;
  Json config;
  std::vector<ProbeRecord> records;
  std::size_t pass_count = 0;
  double max_final_gap = 0.0;
  bool all_pass = true;
};

inline const std::vector<std::string>& operators() {
  static const std::vector<std::string> ops{"lambda_blend",   "piecewise_anchor",
                                            "ambiguous_limit", "tower_tail",
                                            "dirichlet_section", "section_modulus"};
  return ops;
}

inline const std::vector<std::string>& functions() {
  static const std::vector<std::string> fns{"sepcont_quotient", "sin_sum", "constant",
                                            "two_cell",         "dirichlet_tower", "example1",
                                            "example2"};
  return fns;
}

namespace detail {

inline void reject_unknown(const Json& j, std::initializer_list<const char*> allowed,
                           const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError(where + ": unknown field '" + k + "'");
    }
  }
}

template <class T>
T get_as(const Json& j, const std::string& what) {
  try {
    return j.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("bad value for '" + what + "'");
  }
}

inline double number(const Json& j, const std::string& what) {
  if (!j.is_number()) throw ConfigError("'" + what + "' must be a number");
  return j.get<double>();
}

inline TaggedReal parse_y(const Json& j, const RationalEnumeration* table) {
  if (j.is_number()) return TaggedReal(j.get<double>());
  reject_unknown(j, {"rational", "rational_index", "irrational", "irrational_value", "label"}, "y");
  if (j.contains("rational")) {
    const auto& r = j["rational"];
    if (!r.is_array() || r.size() != 2) throw ConfigError("y.rational must be [p, q]");
    const auto p = get_as<std::int64_t>(r[0], "y.rational"), q = get_as<std::int64_t>(r[1], "y.rational");
    if (q == 0) throw ConfigError("y.rational: zero denominator");
    return TaggedReal::rational(p, q);
  }
  if (j.contains("rational_index")) {
    const auto k = get_as<int>(j["rational_index"], "y.rational_index");
    if (k < 1 || table == nullptr || static_cast<std::size_t>(k) > table->size()) {
      throw ConfigError("y.rational_index out of range");
    }
    return (*table)(static_cast<std::size_t>(k));
  }
  if (j.contains("irrational")) {
    const auto name = get_as<std::string>(j["irrational"], "y.irrational");
    if (name == "sqrt2") return TaggedReal::sqrt2();
    if (name == "pi") return TaggedReal::pi();
    if (name == "e") return TaggedReal::e();
    throw ConfigError("y.irrational: unknown constant '" + name + "'");
  }
  if (j.contains("irrational_value")) {
    const std::string label = j.contains("label") ? get_as<std::string>(j["label"], "y.label")
                                                   : std::string("irrational");
    return TaggedReal::irrational(number(j["irrational_value"], "y.irrational_value"), label);
  }
  throw ConfigError("y: empty specification");
}

inline std::string y_label(const TaggedReal& y) {
  if (y.is_plain()) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", y.value());
    return buf;
  }
  return y.describe();
}

inline std::vector<int> parse_schedule(const Json& j) {
  if (!j.is_array() || j.empty()) throw ConfigError("schedule must be a nonempty array");
  std::vector<int> s;
  for (const auto& v : j) {
    const int n = get_as<int>(v, "schedule");
    if (n < 1) throw ConfigError("schedule entries must be positive");
    if (!s.empty() && n <= s.back()) throw ConfigError("schedule must be increasing");
    s.push_back(n);
  }
  return s;
}

inline std::vector<double> parse_range(const Json& j, std::size_t len, const std::string& what) {
  if (!j.is_array() || j.size() != len) throw ConfigError(what + ": wrong array length");
  std::vector<double> out;
  for (const auto& v : j) out.push_back(number(v, what));
  return out;
}

inline void parse_probes(const Json& j, Scenario& s, const RationalEnumeration& table) {
  reject_unknown(j, {"points", "grid", "random", "y"}, "probes");
  if (j.contains("points")) {
    for (const auto& p : j["points"]) {
      if (!p.is_array() || p.size() != 2) throw ConfigError("probes.points entries must be [x, y]");
      Probe pr{{number(p[0], "probes.points")}, parse_y(p[1], &table), ""};
      s.probes.push_back(std::move(pr));
    }
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    reject_unknown(g, {"x", "y"}, "probes.grid");
    if (!g.contains("x") || !g.contains("y")) throw ConfigError("probes.grid needs x and y");
    const auto xr = parse_range(g["x"], 3, "probes.grid.x");
    const auto yr = parse_range(g["y"], 3, "probes.grid.y");
    const int nx = static_cast<int>(xr[2]), ny = static_cast<int>(yr[2]);
    if (nx < 1 || ny < 1) throw ConfigError("probes.grid: counts must be positive");
    for (int i = 0; i < nx; ++i) {
      const double x = nx == 1 ? xr[0] : xr[0] + (xr[1] - xr[0]) * i / (nx - 1);
      for (int k = 0; k < ny; ++k) {
        const double y = ny == 1 ? yr[0] : yr[0] + (yr[1] - yr[0]) * k / (ny - 1);
        s.probes.push_back({{x}, TaggedReal(y), ""});
      }
    }
  }
  if (j.contains("random")) {
    const auto& r = j["random"];
    reject_unknown(r, {"count", "x", "y"}, "probes.random");
    if (!r.contains("count") || !r.contains("x") || !r.contains("y")) {
      throw ConfigError("probes.random needs count, x and y");
    }
    const int count = get_as<int>(r["count"], "probes.random.count");
    if (count < 0) throw ConfigError("probes.random.count must be nonnegative");
    const auto xr = parse_range(r["x"], 2, "probes.random.x");
    const auto yr = parse_range(r["y"], 2, "probes.random.y");
    std::mt19937_64 rng(s.rng_seed);
    for (int i = 0; i < count; ++i) {
      const double x = uniform(rng, xr[0], xr[1]);
      const double y = uniform(rng, yr[0], yr[1]);
      s.probes.push_back({{x}, TaggedReal(y), ""});
    }
  }
  if (j.contains("y")) {
    for (const auto& y : j["y"]) s.probes.push_back({{}, parse_y(y, &table), ""});
  }
  for (auto& p : s.probes) {
    std::string l;
    for (double v : p.x) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g", v);
      l += std::string(buf) + ",";
    }
    p.label = "(" + l + y_label(p.y) + ")";
  }
}

}  // namespace detail

/// Builds a scenario from JSON; every field is checked and unknown fields are
/// rejected.
inline Scenario parse_scenario(const Json& j, const Overrides& ov = {}) {
  detail::reject_unknown(j,
                         {"name", "operator", "x_model", "z_connector", "function",
                          "constant_value", "scheme", "probes", "levels", "deltas", "base_x",
                          "slice", "schedule", "eps", "tail_k", "rng_seed"},
                         "scenario");
  Scenario s;
  if (!j.contains("name") || !j.contains("operator")) {
    throw ConfigError("scenario: 'name' and 'operator' are required");
  }
  s.name = detail::get_as<std::string>(j["name"], "name");
  s.op = detail::get_as<std::string>(j["operator"], "operator");
  if (std::find(operators().begin(), operators().end(), s.op) == operators().end()) {
    throw ConfigError("unknown operator '" + s.op + "'");
  }
  if (j.contains("x_model")) s.x_model = detail::get_as<std::string>(j["x_model"], "x_model");
  if (s.x_model != "euclidean" && s.x_model != "sorgenfrey") {
    throw ConfigError("unknown x_model '" + s.x_model + "'");
  }
  if (j.contains("z_connector")) s.z_connector = detail::get_as<std::string>(j["z_connector"], "z_connector");
  if (s.z_connector != "affine" && s.z_connector != "warped") {
    throw ConfigError("unknown z_connector '" + s.z_connector + "'");
  }
  if (!j.contains("function")) throw ConfigError("scenario: 'function' is required");
  s.function = detail::get_as<std::string>(j["function"], "function");
  if (std::find(functions().begin(), functions().end(), s.function) == functions().end()) {
    throw ConfigError("unknown function '" + s.function + "'");
  }
  if (j.contains("constant_value")) s.constant_value = detail::number(j["constant_value"], "constant_value");
  if (j.contains("scheme")) {
    const auto& sc = j["scheme"];
    detail::reject_unknown(sc, {"n_max", "domain", "max_denominator"}, "scheme");
    if (sc.contains("n_max")) s.scheme.n_max = detail::get_as<int>(sc["n_max"], "scheme.n_max");
    if (sc.contains("domain")) {
      const auto d = detail::parse_range(sc["domain"], 2, "scheme.domain");
      s.scheme.domain_lo = d[0];
      s.scheme.domain_hi = d[1];
      if (!(d[0] < d[1])) throw ConfigError("scheme.domain must be increasing");
    }
    if (sc.contains("max_denominator")) {
      s.scheme.max_denominator = detail::get_as<int>(sc["max_denominator"], "scheme.max_denominator");
      if (s.scheme.max_denominator < 1) throw ConfigError("scheme.max_denominator must be positive");
    }
  }
  if (j.contains("schedule")) s.schedule = detail::parse_schedule(j["schedule"]);
  if (j.contains("eps")) s.eps = detail::number(j["eps"], "eps");
  if (j.contains("tail_k")) s.tail_k = detail::get_as<int>(j["tail_k"], "tail_k");
  if (j.contains("rng_seed")) s.rng_seed = detail::get_as<std::uint64_t>(j["rng_seed"], "rng_seed");
  if (ov.seed) s.rng_seed = *ov.seed;
  if (ov.eps) s.eps = *ov.eps;
  if (ov.schedule) {
    Json sj = *ov.schedule;
    s.schedule = detail::parse_schedule(sj);
  }
  if (!(s.eps >= 0.0)) throw ConfigError("eps must be nonnegative");
  if (s.tail_k < 1) throw ConfigError("tail_k must be positive");
  if (j.contains("levels")) {
    for (const auto& v : j["levels"]) {
      const int n = detail::get_as<int>(v, "levels");
      if (n < 1) throw ConfigError("levels must be positive");
      s.levels.push_back(n);
    }
  }
  if (j.contains("deltas")) {
    for (const auto& v : j["deltas"]) {
      const double d = detail::number(v, "deltas");
      if (!(d > 0.0)) throw ConfigError("deltas must be positive");
      s.deltas.push_back(d);
    }
  }
  if (j.contains("base_x")) {
    const auto& b = j["base_x"];
    if (b.is_number()) {
      s.base_x = {b.get<double>()};
    } else if (b.is_array()) {
      for (const auto& v : b) s.base_x.push_back(detail::number(v, "base_x"));
    } else {
      throw ConfigError("base_x must be a number or an array");
    }
  }
  if (j.contains("slice")) {
    s.slice = detail::get_as<int>(j["slice"], "slice");
    if (s.slice < 1) throw ConfigError("slice must be positive");
  }
  if (s.scheme.n_max == 0) s.scheme.n_max = s.schedule.back();
  if (s.scheme.n_max < s.schedule.back()) throw ConfigError("schedule exceeds scheme.n_max");

  static const RationalEnumeration table(4096);
  if (j.contains("probes")) detail::parse_probes(j["probes"], s, table);

  // operator/function compatibility
  const bool blend_like = s.op == "lambda_blend" || s.op == "piecewise_anchor";
  if (blend_like && s.function != "sepcont_quotient" && s.function != "sin_sum" &&
      s.function != "constant") {
    throw ConfigError(s.op + " needs a two-variable witness function");
  }
  if (s.op == "piecewise_anchor" && s.x_model != "sorgenfrey") {
    throw ConfigError("piecewise_anchor runs on the disjointified Sorgenfrey tiles");
  }
  if (s.op == "ambiguous_limit" && s.function != "two_cell") {
    throw ConfigError("ambiguous_limit needs function 'two_cell'");
  }
  if (s.op == "tower_tail" && s.function != "dirichlet_tower" && s.function != "example1") {
    throw ConfigError("tower_tail needs 'dirichlet_tower' or 'example1'");
  }
  if (s.op == "dirichlet_section" && s.function != "example2") {
    throw ConfigError("dirichlet_section needs function 'example2'");
  }
  if (s.op == "section_modulus") {
    if (s.deltas.empty()) throw ConfigError("section_modulus needs deltas");
    if (s.function == "example2" && s.base_x.empty()) s.base_x = {0.0};
    if (s.base_x.empty()) throw ConfigError("section_modulus needs base_x");
  }
  if (blend_like || s.op == "ambiguous_limit") {
    for (const auto& p : s.probes) {
      if (p.x.size() != 1) throw ConfigError("probe without an x coordinate");
      if (blend_like && (p.x[0] < s.scheme.domain_lo || p.x[0] > s.scheme.domain_hi)) {
        throw ConfigError("probe " + p.label + " lies outside the scheme domain");
      }
    }
  }

  Json echo;
  echo["name"] = s.name;
  echo["operator"] = s.op;
  echo["x_model"] = s.x_model;
  echo["z_connector"] = s.z_connector;
  echo["function"] = s.function;
  if (s.function == "constant") echo["constant_value"] = s.constant_value;
  echo["scheme"] = {{"n_max", s.scheme.n_max},
                    {"domain", {s.scheme.domain_lo, s.scheme.domain_hi}},
                    {"dense", "rationals"},
                    {"max_denominator", s.scheme.max_denominator}};
  echo["probe_count"] = s.probes.size();
  if (!s.levels.empty()) echo["levels"] = s.levels;
  if (!s.deltas.empty()) echo["deltas"] = s.deltas;
  if (!s.base_x.empty()) echo["base_x"] = s.base_x;
  if (s.op == "section_modulus") echo["slice"] = s.slice;
  echo["schedule"] = s.schedule;
  echo["eps"] = s.eps;
  echo["tail_k"] = s.tail_k;
  echo["rng_seed"] = s.rng_seed;
  s.config = std::move(echo);
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path, const Overrides& ov = {}) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_scenario(j, ov);
}

/// Max over y and over the allowed perturbation signs of |f(x', y) - f(x, y)|,
/// one entry per delta. `perturb(x, delta, sign)` returns the moved point or
/// nothing when that side is not part of the neighborhood basis.
template <class X, class Eval, class Perturb>
std::vector<double> section_probe(const Eval& f, const X& x, std::span<const TaggedReal> y_grid,
                                  std::span<const double> deltas, const Perturb& perturb) {
  std::vector<double> table;
  for (double d : deltas) {
    double worst = 0.0;
    for (int sign : {-1, 1}) {
      std::optional<X> moved = perturb(x, d, sign);
      if (!moved) continue;
      for (const auto& y : y_grid) {
        worst = std::max(worst, value_distance(f(*moved, y), f(x, y)));
      }
    }
    table.push_back(worst);
  }
  return table;
}

namespace detail {

inline SectionedFunction witness(const Scenario& s) {
  if (s.function == "sepcont_quotient") return sepcont_quotient();
  if (s.function == "sin_sum") return sin_sum();
  return constant_function(Point{s.constant_value});
}

inline ConnectorSpace connector(const Scenario& s) {
  return s.z_connector == "warped" ? warped_line() : affine_box(1);
}

inline AnchoredScheme scheme(const Scenario& s) {
  const DenseSet d = rationals(s.scheme.max_denominator);
  if (s.x_model == "sorgenfrey") {
    return sorgenfrey_scheme(d, s.scheme.n_max, s.scheme.domain_lo, s.scheme.domain_hi);
  }
  return grid_scheme(1, {s.scheme.domain_lo}, {s.scheme.domain_hi}, d, s.scheme.n_max);
}

inline ProbeRecord record(std::string label, std::vector<double> point, std::vector<int> schedule,
                          std::vector<double> values, double target, double eps,
                          std::size_t tail_k) {
  ProbeRecord r;
  r.label = std::move(label);
  r.point = std::move(point);
  r.pass = tail_passes(values, target, eps, tail_k);
  r.final_gap = values.empty() ? 0.0 : std::abs(values.back() - target);
  r.schedule = std::move(schedule);
  r.values = std::move(values);
  r.target = target;
  return r;
}

inline void run_sequence(const Scenario& s, const ApproximantSequence& seq,
                         const Approximant& target, ConvergenceReport& rep) {
  const auto k = static_cast<std::size_t>(s.tail_k);
  std::vector<std::vector<double>> values(s.probes.size());
  for (int n : s.schedule) {
    const Approximant term = seq.term(n);
    for (std::size_t i = 0; i < s.probes.size(); ++i) {
      values[i].push_back(term(s.probes[i].x, s.probes[i].y).at(0));
    }
  }
  for (std::size_t i = 0; i < s.probes.size(); ++i) {
    const auto& p = s.probes[i];
    const double t = target(p.x, p.y).at(0);
    rep.records.push_back(record(p.label, {p.x[0], p.y.value()}, s.schedule, std::move(values[i]),
                                 t, s.eps, k));
  }
}

inline void run_tower(const Scenario& s, ConvergenceReport& rep) {
  const auto k = static_cast<std::size_t>(s.tail_k);
  const Example1 ex1;
  const bool via_sections = s.function == "example1";
  const auto& g = ex1.tower();
  using SP = SequentialPoint;
  for (const auto& p : s.probes) {
    // g_n(y) -> g(y)
    std::vector<double> vals;
    for (int n : s.schedule) vals.push_back(via_sections ? ex1(SP::level(n), p.y) : g.at(n).limit_eval(p.y));
    const double lim = via_sections ? ex1(SP::origin(), p.y) : g.limit_eval(p.y);
    rep.records.push_back(record("g_n" + p.label, {p.y.value()}, s.schedule, std::move(vals), lim,
                                 s.eps, k));
    // g_{n,m}(y) -> g_n(y)
    for (int n : s.levels) {
      std::vector<double> lv;
      const auto gn = g.at(n);
      for (int m : s.schedule) {
        lv.push_back(via_sections ? ex1(SP::leaf(n, n * n + m), p.y) : gn.at(m).limit_eval(p.y));
      }
      const double t = via_sections ? ex1(SP::level(n), p.y) : gn.limit_eval(p.y);
      rep.records.push_back(record("g_" + std::to_string(n) + ",m" + p.label,
                                   {static_cast<double>(n), p.y.value()}, s.schedule,
                                   std::move(lv), t, s.eps, k));
    }
  }
}

inline void run_dirichlet_section(const Scenario& s, ConvergenceReport& rep) {
  const Example2 ex2(4096);
  const FinSeq zero;
  for (const auto& p : s.probes) {
    const double v = ex2(zero, p.y);
    // second route: the partial sum of the terms f_k(0, y), k <= K
    std::size_t K = 64;
    if (auto idx = ex2.rationals().index_of(p.y)) K = std::max(K, *idx);
    double t = 0.0;
    for (std::size_t kk = 1; kk <= K; ++kk) t += ex2.term(static_cast<int>(kk), zero, p.y);
    rep.records.push_back(record("f(0," + y_label(p.y) + ")", {p.y.value()}, {}, {v}, t, 0.0, 1));
  }
}

inline void run_section_modulus(const Scenario& s, ConvergenceReport& rep) {
  std::vector<TaggedReal> ys;
  for (const auto& p : s.probes) ys.push_back(p.y);
  std::vector<double> table;
  if (s.function == "example2") {
    const Example2 ex2(20000);
    FinSeq base;
    for (std::size_t i = 0; i < s.base_x.size(); ++i) base.set(static_cast<int>(i) + 1, s.base_x[i]);
    const int slice = s.slice;
    table = section_probe<FinSeq>(
        [&](const FinSeq& x, const TaggedReal& y) { return ex2(x, y); }, base, ys, s.deltas,
        [slice](const FinSeq& x, double d, int sign) -> std::optional<FinSeq> {
          FinSeq m = x;
          m.set(slice, x.get(slice) + sign * d);
          return m;
        });
  } else if (s.function == "sepcont_quotient" || s.function == "sin_sum" ||
             s.function == "constant") {
    const SectionedFunction f = witness(s);
    const bool right_only = s.x_model == "sorgenfrey";
    table = section_probe<Point>(
        [&](const Point& x, const TaggedReal& y) { return f.eval(x, y); }, Point{s.base_x.at(0)},
        ys, s.deltas, [right_only](const Point& x, double d, int sign) -> std::optional<Point> {
          if (right_only && sign < 0) return std::nullopt;
          return Point{x[0] + sign * d};
        });
  } else {
    throw ConfigError("section_modulus does not support function '" + s.function + "'");
  }
  // deltas listed in decreasing order must give a non-increasing modulus
  ProbeRecord r;
  r.label = "modulus";
  r.point = s.base_x;
  r.values = table;
  r.target = 0.0;
  r.final_gap = table.empty() ? 0.0 : table.back();
  r.pass = !table.empty() && table.back() <= s.eps;
  for (std::size_t i = 1; i < table.size(); ++i) {
    if (s.deltas[i] < s.deltas[i - 1] && table[i] > table[i - 1]) r.pass = false;
  }
  rep.records.push_back(std::move(r));
}

}  // namespace detail

inline ConvergenceReport run_scenario(const Scenario& s) {
  ConvergenceReport rep;
  rep.scenario = s.name;
  rep.op = s.op;
  rep.config = s.config;
  try {
    if (s.op == "lambda_blend" || s.op == "piecewise_anchor") {
      const SectionedFunction f = detail::witness(s);
      const AnchoredScheme sc = detail::scheme(s);
      const ApproximantSequence seq = s.op == "lambda_blend"
                                          ? lambda_blend_sequence(f, sc, detail::connector(s))
                                          : piecewise_anchor_sequence(f, sc);
      detail::run_sequence(s, seq, f.eval, rep);
    } else if (s.op == "ambiguous_limit") {
      auto pieces = two_cell_instance();
      const Contraction c = straight_line_contraction(Point{0.0});
      detail::run_sequence(s, ambiguous_limit_sequence(c, pieces), ambiguous_target(pieces), rep);
    } else if (s.op == "tower_tail") {
      detail::run_tower(s, rep);
    } else if (s.op == "dirichlet_section") {
      detail::run_dirichlet_section(s, rep);
    } else if (s.op == "section_modulus") {
      detail::run_section_modulus(s, rep);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    // precondition failures of the operators are configuration problems
    throw ConfigError(s.name + ": " + e.what());
  }
  for (const auto& r : rep.records) {
    rep.pass_count += r.pass ? 1 : 0;
    rep.max_final_gap = std::max(rep.max_final_gap, r.final_gap);
  }
  rep.all_pass = rep.pass_count == rep.records.size();
  return rep;
}

// ---------------------------------------------------------------- emission

namespace detail {

inline std::string fmt_double(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof buf, "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out + "\"";
}

// Serializer with a fixed float format; key order is insertion order.
inline void write_json(const Json& j, std::string& out, int indent, int depth) {
  const std::string pad(static_cast<std::size_t>(indent * (depth + 1)), ' ');
  const std::string close(static_cast<std::size_t>(indent * depth), ' ');
  const char* nl = indent > 0 ? "\n" : "";
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{";
      out += nl;
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) {
          out += ",";
          out += nl;
        }
        first = false;
        out += pad + quote(k) + (indent > 0 ? ": " : ":");
        write_json(v, out, indent, depth + 1);
      }
      out += nl;
      out += close + "}";
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out += "[";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += flat ? ", " : ",";
        if (!flat) {
          out += nl;
          out += pad;
        }
        first = false;
        write_json(v, out, indent, depth + 1);
      }
      if (!flat) {
        out += nl;
        out += close;
      }
      out += "]";
      return;
    }
    case Json::value_t::string: out += quote(j.get<std::string>()); return;
    case Json::value_t::boolean: out += j.get<bool>() ? "true" : "false"; return;
    case Json::value_t::number_integer: out += std::to_string(j.get<std::int64_t>()); return;
    case Json::value_t::number_unsigned: out += std::to_string(j.get<std::uint64_t>()); return;
    case Json::value_t::number_float: out += fmt_double(j.get<double>()); return;
    default: out += "null"; return;
  }
}

}  // namespace detail

inline Json to_json_value(const ConvergenceReport& r) {
  Json j;
  j["scenario"] = r.scenario;
  j["operator"] = r.op;
  j["config"] = r.config;
  Json recs = Json::array();
  for (const auto& p : r.records) {
    Json e;
    e["label"] = p.label;
    e["point"] = p.point;
    e["schedule"] = p.schedule;
    e["values"] = p.values;
    e["target"] = p.target;
    e["final_gap"] = p.final_gap;
    e["pass"] = p.pass;
    recs.push_back(std::move(e));
  }
  j["records"] = std::move(recs);
  j["summary"] = {{"records", r.records.size()},
                  {"passed", r.pass_count},
                  {"max_final_gap", r.max_final_gap},
                  {"all_pass", r.all_pass}};
  return j;
}

inline std::string dump(const Json& j) {
  std::string out;
  detail::write_json(j, out, 2, 0);
  return out + "\n";
}

inline std::string to_json(const ConvergenceReport& r) { return dump(to_json_value(r)); }

inline std::string to_json(std::span<const ConvergenceReport> reports) {
  Json j;
  Json arr = Json::array();
  std::size_t passed = 0;
  for (const auto& r : reports) {
    arr.push_back(to_json_value(r));
    passed += r.all_pass ? 1 : 0;
  }
  j["reports"] = std::move(arr);
  j["summary"] = {{"scenarios", reports.size()},
                  {"passed", passed},
                  {"all_pass", passed == reports.size()}};
  return dump(j);
}

inline std::string csv_header() { return "scenario,operator,label,point,index,n,value,target,gap,pass\n"; }

inline std::string to_csv_rows(const ConvergenceReport& r) {
  std::string out;
  auto field = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (const auto& p : r.records) {
    std::string point;
    for (std::size_t i = 0; i < p.point.size(); ++i) {
      point += (i ? ";" : "") + detail::fmt_double(p.point[i]);
    }
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const std::string n = i < p.schedule.size() ? std::to_string(p.schedule[i]) : "";
      out += field(r.scenario) + "," + r.op + "," + field(p.label) + "," + point + "," +
             std::to_string(i) + "," + n + "," + detail::fmt_double(p.values[i]) + "," +
             detail::fmt_double(p.target) + "," +
             detail::fmt_double(std::abs(p.values[i] - p.target)) + "," +
             (p.pass ? "true" : "false") + "\n";
    }
  }
  return out;
}

inline std::string to_csv(const ConvergenceReport& r) { return csv_header() + to_csv_rows(r); }

inline std::string to_csv(std::span<const ConvergenceReport> reports) {
  std::string out = csv_header();
  for (const auto& r : reports) out += to_csv_rows(r);
  return out;
}

enum class Format { json, csv };

inline Format parse_format(const std::string& s) {
  if (s == "json") return Format::json;
  if (s == "csv") return Format::csv;
  throw ConfigError("unknown format '" + s + "'");
}

/// Writes to `path`, or to stdout when the path is empty or "-".
inline void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::fwrite(text.data(), 1, text.size(), stdout);
    std::fflush(stdout);
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

inline std::string render(std::span<const ConvergenceReport> reports, Format f, bool single) {
  if (single && reports.size() == 1) {
    return f == Format::json ? to_json(reports.front()) : to_csv(reports.front());
  }
  return f == Format::json ? to_json(reports) : to_csv(reports);
}

/// Scenario files (*.json) of a directory in file-name order.
inline std::vector<std::filesystem::path> suite_files(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw ConfigError("not a directory: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end(),
            [](const auto& a, const auto& b) { return a.filename() < b.filename(); });
  return files;
}

inline std::vector<ConvergenceReport> run_suite(const std::filesystem::path& dir,
                                                const Overrides& ov = {}) {
  std::vector<ConvergenceReport> out;
  for (const auto& f : suite_files(dir)) out.push_back(run_scenario(load_scenario(f, ov)));
  return out;
}

}  // namespace eqb::harness
