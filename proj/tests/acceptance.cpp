// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "eqb/eqb.hpp"

using namespace eqb;
namespace h = eqb::harness;

namespace {

int failures = 0;

void report(const char* id, const std::string& title, bool ok, const std::string& detail) {
  std::printf("%s %-3s %s (%s)\n", ok ? "PASS" : "FAIL", id, title.c_str(), detail.c_str());
  if (!ok) ++failures;
}

void criterion(const char* id, const std::string& title, const std::function<bool(std::string&)>& body) {
  std::string detail;
  bool ok = false;
  try {
    ok = body(detail);
  } catch (const std::exception& e) {
    detail = std::string("exception: ") + e.what();
  }
  report(id, title, ok, detail);
}

Point rand_point(std::mt19937_64& rng, std::size_t dim) {
  Point p(dim);
  for (double& v : p) v = uniform(rng, -5.0, 5.0);
  return p;
}

std::vector<double> rand_weights(std::mt19937_64& rng, std::size_t n, bool zeros) {
  std::vector<double> w(n);
  double s = 0.0;
  for (double& v : w) {
    v = uniform01(rng) + 1e-3;
    if (zeros && uniform01(rng) < 0.3) v = 0.0;
    s += v;
  }
  if (s == 0.0) {
    w[0] = 1.0;
    return w;
  }
  for (double& v : w) v /= s;
  return w;
}

Point cc(const ConnectorSpace& s, const std::vector<Point>& p, const std::vector<double>& w) {
  return convex_combination(s, p, SimplexWeights(w));
}

h::ConvergenceReport run_file(const std::string& name) {
  return h::run_scenario(h::load_scenario(std::string(EQB_SCENARIO_DIR) + "/" + name));
}

std::string num(double v) {
  char b[40];
  std::snprintf(b, sizeof b, "%.3g", v);
  return b;
}

FinSeq random_finseq(std::mt19937_64& rng) {
  FinSeq x;
  const int top = 1 + static_cast<int>(rng() % 4);
  const double scale = std::pow(10.0, -uniform(rng, 0.0, 2.0));
  for (int i = 1; i <= top; ++i) {
    if (rng() % 4 != 0) x.set(i, uniform(rng, -1.0, 1.0) * scale);
  }
  if (x.is_zero()) x.set(top, 0.5 * scale);
  return x;
}

}  // namespace

int main() {
  criterion("1", "lambda identities: zero-drop, idempotence, recursion", [](std::string& d) {
    std::mt19937_64 rng(101);
    int bad = 0, zero_branch = 0;
    double worst_idem = 0.0, worst_rec = 0.0;
    for (const auto& s : {affine_box(3), warped_line()}) {
      for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t n = 2 + rng() % 7;
        std::vector<Point> pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(rand_point(rng, s.point_dim));
        auto w = rand_weights(rng, n, true);
        if (trial % 4 == 0) {
          const double m = w[0] + w[1];
          w[0] = w[1] = 0.0;
          w[n - 1] += m;
        }
        // zero-drop
        const std::size_t k = rng() % n;
        auto wz = w;
        wz[(k + 1) % n] += wz[k];
        wz[k] = 0.0;
        auto p2 = pts;
        auto w2 = wz;
        p2.erase(p2.begin() + static_cast<long>(k));
        w2.erase(w2.begin() + static_cast<long>(k));
        if (!(cc(s, pts, wz) == cc(s, p2, w2))) ++bad;
        // idempotence
        const Point x = pts[0];
        worst_idem = std::max(worst_idem, s.metric(cc(s, std::vector<Point>(n, x), w), x));
        // recursion
        Point rhs;
        if (w[0] + w[1] > 0.0) {
          std::vector<Point> q{s.connect(pts[0], pts[1], w[1] / (w[0] + w[1]))};
          std::vector<double> qw{w[0] + w[1]};
          for (std::size_t i = 2; i < n; ++i) {
            q.push_back(pts[i]);
            qw.push_back(w[i]);
          }
          rhs = cc(s, q, qw);
        } else {
          ++zero_branch;
          rhs = cc(s, std::vector<Point>(pts.begin() + 1, pts.end()), std::vector<double>(w.begin() + 1, w.end()));
        }
        worst_rec = std::max(worst_rec, s.metric(cc(s, pts, w), rhs));
      }
    }
    d = "2x1000 trials, zero-drop mismatches " + std::to_string(bad) + ", idempotence " + num(worst_idem) +
        ", recursion " + num(worst_rec) + ", zero-branch cases " + std::to_string(zero_branch);
    return bad == 0 && worst_idem <= 1e-12 && worst_rec <= 1e-12 && zero_branch >= 500;
  });

  criterion("2", "affine oracle", [](std::string& d) {
    std::mt19937_64 rng(102);
    const auto s = affine_box(3);
    double worst = 0.0;
    for (int t = 0; t < 1000; ++t) {
      const std::size_t n = 1 + rng() % 8;
      std::vector<Point> pts;
      for (std::size_t i = 0; i < n; ++i) {
        Point p(3);
        for (double& v : p) v = uniform(rng, -1.0, 1.0);
        pts.push_back(p);
      }
      const auto w = rand_weights(rng, n, t % 3 == 0);
      Point direct(3, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) direct[j] += w[i] * pts[i][j];
      }
      worst = std::max(worst, euclidean_distance(cc(s, pts, w), direct));
    }
    d = "1000 instances, max deviation " + num(worst);
    return worst <= 1e-12;
  });

  criterion("3", "sampled continuity of lambda_n", [](std::string& d) {
    std::mt19937_64 rng(103);
    bool ok = true;
    for (const auto& s : {affine_box(3), warped_line()}) {
      int good = 0;
      for (int t = 0; t < 500; ++t) {
        const std::size_t n = 2 + rng() % 6;
        std::vector<Point> pts;
        for (std::size_t i = 0; i < n; ++i) pts.push_back(rand_point(rng, s.point_dim));
        const auto w = rand_weights(rng, n, false);
        const Point base = cc(s, pts, w);
        auto disp = [&](double delta) {
          auto p2 = pts;
          for (auto& p : p2) {
            for (auto& v : p) v += delta;
          }
          auto w2 = w;
          w2[0] += delta;
          double sum = 0.0;
          for (double v : w2) sum += v;
          for (double& v : w2) v /= sum;
          return s.metric(cc(s, p2, w2), base);
        };
        good += disp(1e-5) <= disp(1e-3) ? 1 : 0;
      }
      d += s.name + " " + std::to_string(good) + "/500 ";
      ok = ok && good >= 495;
    }
    return ok;
  });

  criterion("4", "Sorgenfrey strong-PP scheme", [](std::string& d) {
    const auto s = sorgenfrey_scheme(rationals(), 256, 0.0, 1.0);
    std::mt19937_64 rng(104);
    int bound_ok = 0;
    bool sums = true;
    std::size_t kmax = 0;
    std::vector<BumpFamily> fams;
    for (int n = 1; n <= 256; ++n) fams.push_back(s.partition(n));
    for (int i = 0; i < 200; ++i) {
      const double x = uniform(rng, 0.0, 0.99);
      const double r = uniform(rng, 0.01, 1.0);
      bound_ok += verify_anchoring(s, {x}, r) <= static_cast<int>(std::ceil(2.0 / r)) + 1 ? 1 : 0;
      for (const auto& f : fams) sums = sums && partition_sum(f, {x}) == 1.0;
      kmax = std::max(kmax, pointwise_finiteness(fams, {x}));
    }
    d = std::to_string(bound_ok) + "/200 within bound, sums exact " + (sums ? "yes" : "no") + ", k_x " +
        std::to_string(kmax);
    return bound_ok == 200 && sums && kmax == 1;
  });

  criterion("5", "blend convergence on 2xy/(x^2+y^2), grid and Sorgenfrey", [](std::string& d) {
    bool ok = true;
    for (const char* f : {"blend_grid_quotient.json", "blend_sorgenfrey_quotient.json"}) {
      const auto r = run_file(f);
      bool origin_zero = false;
      for (const auto& rec : r.records) {
        if (rec.point == std::vector<double>{0.0, 0.0}) {
          origin_zero = true;
          for (double v : rec.values) origin_zero = origin_zero && v == 0.0;
        }
      }
      const bool cfg = r.config["eps"].get<double>() == 1e-3 && r.config["schedule"].back() == 256;
      d += std::string(f) + ": " + std::to_string(r.pass_count) + "/" + std::to_string(r.records.size()) +
           " max gap " + num(r.max_final_gap) + (origin_zero ? ", origin 0" : ", origin nonzero") + "; ";
      ok = ok && r.all_pass && r.records.size() >= 30 && origin_zero && cfg;
    }
    return ok;
  });

  criterion("6", "piecewise anchor equals Sorgenfrey blend bit-for-bit", [](std::string& d) {
    const auto a = run_file("blend_sorgenfrey_quotient.json");
    const auto b = run_file("piecewise_sorgenfrey_quotient.json");
    bool same = a.records.size() == b.records.size();
    for (std::size_t i = 0; same && i < a.records.size(); ++i) {
      same = a.records[i].values == b.records[i].values && a.records[i].point == b.records[i].point;
    }
    d = std::to_string(b.records.size()) + " probes, identical " + (same ? "yes" : "no") + ", passing " +
        std::to_string(b.pass_count);
    return same && b.all_pass;
  });

  criterion("7", "glue and ambiguous-limit case values, two-cell convergence", [](std::string& d) {
    std::mt19937_64 rng(107);
    const auto c = straight_line_contraction({0.0});
    auto tent = [](double lo, double hi) {
      return [lo, hi](const Point& x) {
        const double m = 0.5 * (lo + hi), hw = 0.5 * (hi - lo);
        return std::clamp(2.0 * (1.0 - std::abs(x[0] - m) / hw), 0.0, 1.0);
      };
    };
    const std::vector<GlueBump> bumps{
        {Box{{{0.0, 2.0, true, true}}}, tent(0.0, 2.0), [](const TaggedReal& y) { return Point{std::cos(y.value())}; }},
        {Box{{{3.0, 5.0, true, true}}}, tent(3.0, 5.0), [](const TaggedReal& y) { return Point{y.value() * y.value()}; }}};
    const auto pieces = two_cell_instance();
    int checked = 0, wrong = 0;
    while (checked < 100) {
      const double x = uniform(rng, -1.0, 6.0);
      const TaggedReal y(uniform(rng, -2.0, 2.0));
      for (const auto& b : bumps) {
        if (b.phi({x}) == 1.0) {
          ++checked;
          wrong += contractible_glue(c, bumps, {x}, y) == b.g(y) ? 0 : 1;
        }
      }
      if (!bumps[0].support.contains({x}) && !bumps[1].support.contains({x})) {
        ++checked;
        wrong += contractible_glue(c, bumps, {x}, y) == c.star ? 0 : 1;
      }
      const int n = 1 + static_cast<int>(rng() % 20);
      const auto fn = ambiguous_limit(c, pieces, n);
      for (const auto& p : *pieces) {
        if (p.phi(n, {x}) == 1.0) {
          ++checked;
          wrong += fn({x}, y) == tower_level_value(p.g, n, y) ? 0 : 1;
        }
      }
      const double gap = -0.3 / n;  // between the left and right U-sets
      ++checked;
      wrong += fn({gap}, y) == c.star ? 0 : 1;
    }
    const auto r = run_file("ambiguous_two_cell.json");
    d = std::to_string(checked) + " case values, " + std::to_string(wrong) + " wrong; two-cell " +
        std::to_string(r.pass_count) + "/" + std::to_string(r.records.size());
    return wrong == 0 && r.all_pass;
  });

  criterion("8", "two-set builder clauses and bump boundary values", [](std::string& d) {
    std::mt19937_64 rng(108);
    const Example2 ex(64);
    int wrong = 0, h_hits = 0, off_g = 0, f_hits = 0;
    for (int i = 0; i < 200; ++i) {
      const FinSeq x = i % 10 == 0 ? FinSeq() : random_finseq(rng);
      const int n = 1 + i % 8;
      const TaggedReal a = rational_enumeration(n);
      const TaggedReal y = i % 2 == 0 ? a : (i % 4 == 1 ? TaggedReal::sqrt2() : TaggedReal(uniform(rng, -2, 2)));
      const double v = ex.term(n, x, y);
      const bool in_g = rinfty_membership(x, n, RinftySet::G);
      const bool in_h = rinfty_membership(x, n, RinftySet::H);
      const bool in_f = rinfty_membership(x, 1, RinftySet::H);
      if (!in_g) {
        ++off_g;
        wrong += v == 0.0 ? 0 : 1;
      }
      if (in_f && !y.same_point(a)) {
        ++f_hits;
        wrong += v == 0.0 ? 0 : 1;
      }
      if (in_h && y.same_point(a)) {
        ++h_hits;
        wrong += v == 1.0 ? 0 : 1;
      }
    }
    bool bump = bump_g(0.25, 0.5, 0.25) == 1.0;
    for (double u : {0.75, -0.25, 1.0, 7.0, -3.0}) bump = bump && bump_g(u, 0.5, 0.25) == 0.0;
    d = "200 samples (H " + std::to_string(h_hits) + ", F " + std::to_string(f_hits) + ", off G " +
        std::to_string(off_g) + "), " + std::to_string(wrong) + " wrong, bump boundaries " + (bump ? "exact" : "off");
    return wrong == 0 && bump && h_hits > 0 && f_hits > 0 && off_g > 0;
  });

  criterion("9", "Example 2: Dirichlet section, truncation, x-continuity", [](std::string& d) {
    const auto r = run_file("dirichlet_section_example2.json");
    int ones = 0, zeros = 0;
    for (std::size_t i = 0; i < r.records.size(); ++i) {
      const double v = r.records[i].values[0];
      if (i < 20) ones += v == 1.0 ? 1 : 0;
      else zeros += v == 0.0 ? 1 : 0;
    }
    const Example2 ex(20000);
    std::mt19937_64 rng(109);
    int trunc_ok = 0;
    for (int i = 0; i < 50; ++i) {
      const FinSeq x = random_finseq(rng);
      int n0 = 1;
      while (x.max_abs_upto(n0) < 1.0 / (n0 - 0.5)) ++n0;
      const TaggedReal y = i % 2 ? TaggedReal(uniform(rng, -2, 2)) : rational_enumeration(1 + i % 9);
      double sum = 0.0;
      for (int k = 1; k <= n0; ++k) sum += ex.term(k, x, y);
      trunc_ok += ex(x, y) == sum ? 1 : 0;
    }
    const auto m = run_file("section_modulus_example2.json");
    const auto& mod = m.records.at(0).values;
    bool dec = mod.size() == 3;
    for (std::size_t i = 1; i < mod.size(); ++i) dec = dec && mod[i] <= mod[i - 1];
    d = "rationals " + std::to_string(ones) + "/20, irrationals " + std::to_string(zeros) + "/20, truncation " +
        std::to_string(trunc_ok) + "/50, moduli " + num(mod[0]) + "," + num(mod[1]) + "," + num(mod[2]);
    return r.records.size() == 40 && ones == 20 && zeros == 20 && trunc_ok == 50 && dec && m.all_pass;
  });

  criterion("10", "Example 1: tower coherence, sequential convergence, oscillation", [](std::string& d) {
    const auto r = run_file("tower_example1.json");
    using SP = SequentialPoint;
    std::vector<SP> leaves, levels;
    for (int m = 4; m < 400; ++m) leaves.push_back(SP::leaf(2, m));
    for (int n = 1; n < 400; ++n) levels.push_back(SP::level(n));
    const bool seq = sequential_convergence_probe(SP::level(2), leaves) &&
                     sequential_convergence_probe(SP::origin(), levels);
    const auto g = dirichlet_tower();
    int osc = 0;
    for (int k = 0; k < 100; ++k) {
      const auto q = TaggedReal::rational(2 * k + 1, 200);
      const auto irr = TaggedReal::irrational(k / 100.0 + 0.01 * (std::numbers::sqrt2 - 1.0), "shifted sqrt2");
      osc += (g.limit_eval(q) == 1.0 && g.limit_eval(irr) == 0.0) ? 1 : 0;
    }
    d = "tails " + std::to_string(r.pass_count) + "/" + std::to_string(r.records.size()) + ", convergence " +
        (seq ? "confirmed" : "refuted") + ", oscillating intervals " + std::to_string(osc) + "/100";
    return r.all_pass && r.records.size() == 60 && seq && osc == 100;
  });

  criterion("11", "disjointify on random interval covers", [](std::string& d) {
    std::mt19937_64 rng(111);
    int bad = 0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<CoverSet> cover;
      const int m = 1 + static_cast<int>(rng() % 8);
      for (int k = 0; k < m; ++k) {
        const double a = uniform(rng, -0.2, 0.9), b = a + uniform(rng, 0.05, 0.6);
        const bool lc = rng() % 2, rc = rng() % 2;
        const Interval iv{a, b, lc, rc};
        cover.push_back({{k}, [iv](const Point& x) { return iv.contains(x[0]); }});
      }
      cover.push_back({{m}, [](const Point& x) { return x[0] >= 0.0 && x[0] <= 1.0; }});
      const auto p = disjointify(cover);
      for (int i = 0; i < 200; ++i) {
        const Point x{uniform01(rng)};
        int hits = 0;
        for (std::size_t k = 0; k < p.cells.size(); ++k) {
          if (p.cells[k].contains(x)) {
            ++hits;
            if (!cover[k].contains(x)) ++bad;
          }
        }
        if (hits != 1) ++bad;
      }
    }
    d = "100 covers x 200 points, " + std::to_string(bad) + " violations";
    return bad == 0;
  });

  criterion("12", "harness determinism over the full suite", [](std::string& d) {
    const auto a = h::run_suite(EQB_SCENARIO_DIR);
    const auto b = h::run_suite(EQB_SCENARIO_DIR);
    const bool same = h::to_json(a) == h::to_json(b) && h::to_csv(a) == h::to_csv(b);
    bool all = !a.empty();
    for (const auto& r : a) all = all && r.all_pass;
    d = std::to_string(a.size()) + " scenarios, byte-identical " + (same ? "yes" : "no") + ", exit code " +
        std::to_string(all ? h::kPass : h::kCheckFailure);
    return same && all;
  });

  std::printf("%s: %d criteria failed\n", failures == 0 ? "ACCEPTED" : "REJECTED", failures);
  return failures == 0 ? 0 : 1;
}
