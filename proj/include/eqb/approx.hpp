#pragma once

// Baire towers of depth <= 2 and the four approximation operators:
// lambda-blend, piecewise-anchor, contractible glue and the ambiguous-cell
// limit.

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eqb/core.hpp"
#include "eqb/pou.hpp"
#include "eqb/tagged_real.hpp"

namespace eqb {

inline double value_distance(double a, double b) { return std::abs(a - b); }
inline double value_distance(const Point& a, const Point& b) { return euclidean_distance(a, b); }

/// A function Y -> V together with a witness of its Baire class: depth 0 is a
/// continuous closed form; depth d >= 1 carries levels n -> tower of depth
/// d-1 whose limits converge pointwise to `limit_eval`.
template <class V>
struct BaireTower {
  int depth = 0;
  std::function<V(const TaggedReal&)> limit_eval;
  std::function<BaireTower<V>(int)> level;

  BaireTower<V> at(int n) const {
    if (depth == 0) throw std::logic_error("BaireTower: depth-0 tower has no levels");
    if (n < 1) throw std::invalid_argument("BaireTower: level index must be positive");
    BaireTower<V> t = level(n);
    if (t.depth != depth - 1) throw std::logic_error("BaireTower: level has wrong depth");
    return t;
  }
};

template <class V>
BaireTower<V> make_tower(int depth, std::function<V(const TaggedReal&)> limit,
                         std::function<BaireTower<V>(int)> level = {}) {
  if (depth < 0 || depth > 2) throw std::invalid_argument("make_tower: depth must be 0, 1 or 2");
  if (depth > 0 && !level) throw std::invalid_argument("make_tower: missing levels");
  return BaireTower<V>{depth, std::move(limit), std::move(level)};
}

template <class V>
BaireTower<V> continuous_tower(std::function<V(const TaggedReal&)> f) {
  return make_tower<V>(0, std::move(f));
}

/// Depth-`depth` tower whose every level is the same function.
template <class V>
BaireTower<V> constant_tower(std::function<V(const TaggedReal&)> f, int depth = 1) {
  if (depth == 0) return continuous_tower<V>(f);
  return make_tower<V>(depth, f, [f, depth](int) { return constant_tower<V>(f, depth - 1); });
}

namespace detail {

/// max(0, 1 - m|d|), exactly zero once |d| >= 1/m.
inline double tent(int m, double d) {
  const double a = std::abs(d), dm = static_cast<double>(m);
  if (a >= 1.0 / dm) return 0.0;
  return std::max(0.0, 1.0 - dm * a);
}

}  // namespace detail

/// Indicator of {r} as the pointwise limit of tents max(0, 1 - m|y - r|).
inline BaireTower<double> point_indicator_tower(TaggedReal r) {
  return make_tower<double>(
      1, [r](const TaggedReal& y) { return y.same_point(r) ? 1.0 : 0.0; },
      [r](int m) {
        return continuous_tower<double>(
            [r, m](const TaggedReal& y) { return detail::tent(m, y.value() - r.value()); });
      });
}

/// Tail criterion: the last `tail_k` values lie within eps of the target.
template <class V>
bool tail_passes(const std::vector<V>& values, const V& target, double eps, std::size_t tail_k) {
  if (values.empty() || tail_k == 0) return false;
  const std::size_t from = values.size() > tail_k ? values.size() - tail_k : 0;
  for (std::size_t i = from; i < values.size(); ++i) {
    if (!(value_distance(values[i], target) <= eps)) return false;
  }
  return true;
}

template <class V>
struct TailReport {
  std::vector<int> schedule;
  std::vector<V> values;
  V target{};
  bool pass = false;
  double final_gap = std::numeric_limits<double>::infinity();
};

inline const std::vector<int>& default_schedule() {
  static const std::vector<int> s{1, 2, 4, 8, 16, 32, 64, 128, 256};
  return s;
}
inline constexpr double kDefaultEps = 1e-3;
inline constexpr std::size_t kDefaultTailK = 3;

template <class V>
TailReport<V> make_tail_report(std::vector<int> schedule, std::vector<V> values, V target,
                               double eps, std::size_t tail_k) {
  TailReport<V> r;
  r.pass = tail_passes(values, target, eps, tail_k);
  r.final_gap = values.empty() ? std::numeric_limits<double>::infinity()
                               : value_distance(values.back(), target);
  r.schedule = std::move(schedule);
  r.values = std::move(values);
  r.target = std::move(target);
  return r;
}

/// Evaluates level n of the tower at y along the schedule against the
/// tower's own limit.
template <class V>
TailReport<V> tower_tail(const BaireTower<V>& t, const TaggedReal& y,
                         const std::vector<int>& schedule, double eps,
                         std::size_t tail_k = kDefaultTailK) {
  if (t.depth < 1) throw std::invalid_argument("tower_tail: tower depth must be at least 1");
  std::vector<V> values;
  values.reserve(schedule.size());
  for (int n : schedule) values.push_back(t.at(n).limit_eval(y));
  return make_tail_report<V>(schedule, std::move(values), t.limit_eval(y), eps, tail_k);
}

using Approximant = std::function<Point(const Point&, const TaggedReal&)>;

/// A two-variable function X x Y -> Z with its declared regular sections.
struct SectionedFunction {
  std::string name;
  std::size_t value_dim = 1;
  std::function<Point(const Point&, const TaggedReal&)> eval;
  /// Tower witnessing the regularity of the section f^x, when declared.
  std::function<std::optional<BaireTower<Point>>(const Point&)> anchor_regularity;
  bool x_continuity_declared = true;

  std::function<Point(const TaggedReal&)> x_section(const Point& x) const {
    return [f = eval, x](const TaggedReal& y) { return f(x, y); };
  }
  std::function<Point(const Point&)> y_section(const TaggedReal& y) const {
    return [f = eval, y](const Point& x) { return f(x, y); };
  }
};

/// f(x,y) = 2xy/(x^2+y^2), f(0,0) = 0: separately continuous, jointly
/// discontinuous at the origin.
inline SectionedFunction sepcont_quotient() {
  SectionedFunction f;
  f.name = "sepcont_quotient";
  f.eval = [](const Point& x, const TaggedReal& y) {
    const double a = x[0], b = y.value();
    const double r2 = a * a + b * b;
    return Point{r2 == 0.0 ? 0.0 : 2.0 * a * b / r2};
  };
  f.anchor_regularity = [eval = f.eval](const Point& x) -> std::optional<BaireTower<Point>> {
    return continuous_tower<Point>([eval, x](const TaggedReal& y) { return eval(x, y); });
  };
  return f;
}

inline SectionedFunction sin_sum() {
  SectionedFunction f;
  f.name = "sin_sum";
  f.eval = [](const Point& x, const TaggedReal& y) { return Point{std::sin(x[0] + y.value())}; };
  f.anchor_regularity = [eval = f.eval](const Point& x) -> std::optional<BaireTower<Point>> {
    return continuous_tower<Point>([eval, x](const TaggedReal& y) { return eval(x, y); });
  };
  return f;
}

inline SectionedFunction constant_function(Point c) {
  SectionedFunction f;
  f.name = "constant";
  f.value_dim = c.size();
  f.eval = [c](const Point&, const TaggedReal&) { return c; };
  f.anchor_regularity = [c](const Point&) -> std::optional<BaireTower<Point>> {
    return continuous_tower<Point>([c](const TaggedReal&) { return c; });
  };
  return f;
}

enum class ApproximantKind { lambda_blend, piecewise_anchor, contractible_glue, ambiguous_limit };

inline const char* to_string(ApproximantKind k) {
  switch (k) {
    case ApproximantKind::lambda_blend: return "lambda_blend";
    case ApproximantKind::piecewise_anchor: return "piecewise_anchor";
    case ApproximantKind::contractible_glue: return "contractible_glue";
    case ApproximantKind::ambiguous_limit: return "ambiguous_limit";
  }
  return "?";
}

struct ApproximantSequence {
  ApproximantKind kind = ApproximantKind::lambda_blend;
  std::string metadata;
  std::function<Approximant(int)> term;
};

class PartitionViolation : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// f_n(x,y) = lambda-sum over i of phi_{i,n}(x) f(x_{i,n}, y). Only anchors of
/// bumps active at x are evaluated.
inline Approximant lambda_blend(const SectionedFunction& f, const AnchoredScheme& s,
                                const ConnectorSpace& z, int n) {
  if (n < 1) throw std::invalid_argument("lambda_blend: n must be positive");
  auto fam = std::make_shared<const BumpFamily>(s.partition(n));
  return [f = f.eval, anchor = s.anchor, fam, z, n](const Point& x, const TaggedReal& y) {
    std::vector<WeightedEntry> entries;
    for (auto& k : support_keys(*fam, x)) {
      const double w = fam->eval(k, x);
      if (w > 0.0) {
        Point v = f(anchor(n, k), y);
        entries.push_back({std::move(k), w, std::move(v)});
      }
    }
    if (entries.empty()) throw PartitionViolation("lambda_blend: no active bump at x");
    return lambda_sum(z, OrderedWeightFamily(std::move(entries)));
  };
}

inline ApproximantSequence lambda_blend_sequence(const SectionedFunction& f,
                                                 const AnchoredScheme& s,
                                                 const ConnectorSpace& z) {
  return {ApproximantKind::lambda_blend, std::string(to_string(s.kind())) + "/" + z.name,
          [f, s, z](int n) { return lambda_blend(f, s, z, n); }};
}

using CellPartitionFamily = std::function<CoverCellPartition(int)>;
using CellAnchor = std::function<Point(int, const OrderKey&)>;

/// f_n(x,y) = f(anchor of the cell containing x, y).
inline Approximant piecewise_anchor(const SectionedFunction& f, const CellPartitionFamily& cells,
                                    const CellAnchor& anchor_of_cell, int n) {
  if (n < 1) throw std::invalid_argument("piecewise_anchor: n must be positive");
  auto part = std::make_shared<const CoverCellPartition>(cells(n));
  return [f = f.eval, part, anchor_of_cell, n](const Point& x, const TaggedReal& y) {
    return f(anchor_of_cell(n, part->cell_of(x)), y);
  };
}

/// Disjointified supports of the scheme's level-n family; each cell sits in
/// the support of the bump with the same key, whose anchor it uses.
inline CellPartitionFamily disjointified_supports(const AnchoredScheme& s) {
  return [s](int n) { return disjointify(support_cover(s.partition(n))); };
}

inline ApproximantSequence piecewise_anchor_sequence(const SectionedFunction& f,
                                                     const AnchoredScheme& s) {
  auto cells = disjointified_supports(s);
  return {ApproximantKind::piecewise_anchor, std::string(to_string(s.kind())) + "/cells",
          [f, cells, anchor = s.anchor](int n) { return piecewise_anchor(f, cells, anchor, n); }};
}

/// One piece of a glued map: a bump phi with declared support and a section g.
struct GlueBump {
  Box support;
  std::function<double(const Point&)> phi;
  std::function<Point(const TaggedReal&)> g;
};

class DiscretenessViolation : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// gamma(g_i(y), 1 - phi_i(x)) if x lies in supp phi_i, else the star point.
/// At most one support may contain x.
inline Point contractible_glue(const Contraction& c, std::span<const GlueBump> bumps,
                               const Point& x, const TaggedReal& y) {
  const GlueBump* hit = nullptr;
  for (const auto& b : bumps) {
    const bool in_support = b.support.contains(x);
    if (!in_support) {
      if (b.phi(x) > 0.0) {
        throw std::logic_error("contractible_glue: phi positive outside its declared support");
      }
      continue;
    }
    if (hit != nullptr) throw DiscretenessViolation("contractible_glue: overlapping supports");
    hit = &b;
  }
  if (hit == nullptr) return c.star;
  const double phi = hit->phi(x);
  if (std::isnan(phi) || phi < 0.0 || phi > 1.0) {
    throw std::domain_error("contractible_glue: phi outside [0,1]");
  }
  return contract_eval(c, hit->g(y), 1.0 - phi);
}

/// Data of one ambiguous cell X_s = union of F_{s,n}: phi(n, x) equals 1 on
/// F_{s,n} and is positive exactly on U_{s,n}; g is the tower g_{s,n} -> g_s.
struct AmbiguousPiece {
  OrderKey key;
  std::function<double(int, const Point&)> phi;
  BaireTower<Point> g;
  std::function<bool(const Point&)> in_cell;
};

inline Point tower_level_value(const BaireTower<Point>& t, int n, const TaggedReal& y) {
  return t.depth == 0 ? t.limit_eval(y) : t.at(n).limit_eval(y);
}

/// f_n(x,y) = gamma(g_{s,n}(y), 1 - phi_{s,n}(x)) if x in U_{s,n}, else the
/// star point.
inline Approximant ambiguous_limit(const Contraction& c,
                                   std::shared_ptr<const std::vector<AmbiguousPiece>> pieces,
                                   int n) {
  if (n < 1) throw std::invalid_argument("ambiguous_limit: n must be positive");
  return [c, pieces, n](const Point& x, const TaggedReal& y) {
    const AmbiguousPiece* hit = nullptr;
    double phi = 0.0;
    for (const auto& p : *pieces) {
      const double v = p.phi(n, x);
      if (v > 0.0) {
        if (hit != nullptr) throw DiscretenessViolation("ambiguous_limit: overlapping U-sets");
        hit = &p;
        phi = v;
      }
    }
    if (hit == nullptr) return c.star;
    return contract_eval(c, tower_level_value(hit->g, n, y), 1.0 - phi);
  };
}

/// The target f(x,y) = g_s(y) for x in X_s.
inline Approximant ambiguous_target(std::shared_ptr<const std::vector<AmbiguousPiece>> pieces) {
  return [pieces](const Point& x, const TaggedReal& y) {
    for (const auto& p : *pieces) {
      if (p.in_cell(x)) return p.g.limit_eval(y);
    }
    throw CoverViolation("ambiguous_target: point lies in no cell");
  };
}

inline ApproximantSequence ambiguous_limit_sequence(
    const Contraction& c, std::shared_ptr<const std::vector<AmbiguousPiece>> pieces) {
  return {ApproximantKind::ambiguous_limit, "cells/" + c.name,
          [c, pieces](int n) { return ambiguous_limit(c, pieces, n); }};
}

/// Two cells on the line: X_left = (-inf, 0) with F_n = (-inf, -1/n] and
/// U_n = (-inf, -1/(2n)); X_right = [0, inf) with F_n = X_right and
/// U_n = (-1/(4n), inf). g_left is the indicator of {0}, g_right = sin.
inline std::shared_ptr<const std::vector<AmbiguousPiece>> two_cell_instance() {
  auto pieces = std::make_shared<std::vector<AmbiguousPiece>>();

  AmbiguousPiece left;
  left.key = {0};
  left.phi = [](int n, const Point& x) {
    const double dn = n;
    const double hi = -1.0 / dn, cut = -0.5 / dn;
    if (x[0] <= hi) return 1.0;
    if (x[0] >= cut) return 0.0;
    return (cut - x[0]) / (cut - hi);
  };
  const auto ind = point_indicator_tower(TaggedReal::rational(0, 1));
  left.g = make_tower<Point>(
      1, [ind](const TaggedReal& y) { return Point{ind.limit_eval(y)}; },
      [ind](int m) {
        auto lvl = ind.at(m);
        return continuous_tower<Point>([lvl](const TaggedReal& y) { return Point{lvl.limit_eval(y)}; });
      });
  left.in_cell = [](const Point& x) { return x[0] < 0.0; };

  AmbiguousPiece right;
  right.key = {1};
  right.phi = [](int n, const Point& x) {
    const double cut = -0.25 / static_cast<double>(n);
    if (x[0] >= 0.0) return 1.0;
    if (x[0] <= cut) return 0.0;
    return (x[0] - cut) / (0.0 - cut);
  };
  right.g = constant_tower<Point>([](const TaggedReal& y) { return Point{std::sin(y.value())}; });
  right.in_cell = [](const Point& x) { return x[0] >= 0.0; };

  pieces->push_back(std::move(left));
  pieces->push_back(std::move(right));
  return pieces;
}

/// Values of a sequence at (x,y) along the schedule, checked against target.
inline TailReport<Point> sequence_tail(const ApproximantSequence& seq, const Point& x,
                                       const TaggedReal& y, const Point& target,
                                       const std::vector<int>& schedule, double eps,
                                       std::size_t tail_k = kDefaultTailK) {
  std::vector<Point> values;
  values.reserve(schedule.size());
  for (int n : schedule) values.push_back(seq.term(n)(x, y));
  return make_tail_report<Point>(schedule, std::move(values), target, eps, tail_k);
}

}  // namespace eqb
