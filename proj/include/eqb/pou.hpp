#pragma once

// Partitions of unity with exactly known supports, anchored schemes on the
// Euclidean grid and on the Sorgenfrey line, and cover combinatorics.

#include <algorithm>
#include <cmath>
#include <cstdint>
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

namespace eqb {

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool lo_closed = true;
  bool hi_closed = true;

  bool contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }
};

/// Product of intervals; membership is exact.
struct Box {
  std::vector<Interval> sides;

  bool contains(const Point& x) const {
    if (x.size() != sides.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (!sides[i].contains(x[i])) return false;
    }
    return true;
  }
};

enum class SpaceKind { euclidean_grid, sorgenfrey, abstract };

inline const char* to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::euclidean_grid: return "euclidean_grid";
    case SpaceKind::sorgenfrey: return "sorgenfrey";
    case SpaceKind::abstract: return "abstract";
  }
  return "?";
}

/// One partition of unity (phi_key : key in keys()).
///
/// `eval` is exactly zero outside `support_of(key)`. `candidates(x)` is the
/// local-finiteness witness: a finite superset of the keys whose supports
/// contain x.
struct BumpFamily {
  SpaceKind kind = SpaceKind::abstract;
  int level = 0;
  std::function<std::vector<OrderKey>()> keys;
  std::function<std::vector<OrderKey>(const Point&)> candidates;
  std::function<Box(const OrderKey&)> support_of;
  std::function<double(const OrderKey&, const Point&)> eval;
};

/// Family over an explicit key list; every key is a candidate everywhere.
inline BumpFamily family_from_list(std::vector<OrderKey> keys,
                                   std::function<Box(const OrderKey&)> support_of,
                                   std::function<double(const OrderKey&, const Point&)> eval,
                                   int level = 0) {
  std::sort(keys.begin(), keys.end());
  auto shared = std::make_shared<const std::vector<OrderKey>>(std::move(keys));
  BumpFamily f;
  f.kind = SpaceKind::abstract;
  f.level = level;
  f.keys = [shared] { return *shared; };
  f.candidates = [shared](const Point&) { return *shared; };
  f.support_of = std::move(support_of);
  f.eval = [support = f.support_of, eval = std::move(eval)](const OrderKey& k, const Point& x) {
    return support(k).contains(x) ? eval(k, x) : 0.0;
  };
  return f;
}

/// Keys whose declared support contains x, in increasing order.
inline std::vector<OrderKey> support_keys(const BumpFamily& fam, const Point& x) {
  std::vector<OrderKey> out;
  for (auto& k : fam.candidates(x)) {
    if (fam.support_of(k).contains(x)) out.push_back(std::move(k));
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

inline double partition_sum(const BumpFamily& fam, const Point& x) {
  double s = 0.0;
  for (const auto& k : support_keys(fam, x)) s += fam.eval(k, x);
  return s;
}

/// A dense subset D given by a deterministic picker: `pick(region, target)`
/// returns a point of D in the region, preferring points close to target.
struct DenseSet {
  std::string tag;
  int max_denominator = 0;
  std::function<std::optional<Point>(const Box&, const Point&)> pick;
};

/// Rationals p/q with q <= max_denominator, searched coordinatewise; the
/// candidate nearest the target wins, ties going to the smaller denominator.
inline DenseSet rationals(int max_denominator = 4096) {
  if (max_denominator < 1) throw std::invalid_argument("rationals: max_denominator must be positive");
  DenseSet d;
  d.tag = "rationals";
  d.max_denominator = max_denominator;
  d.pick = [max_denominator](const Box& region, const Point& target) -> std::optional<Point> {
    Point out(region.sides.size());
    for (std::size_t j = 0; j < region.sides.size(); ++j) {
      const Interval& iv = region.sides[j];
      const double t = target.size() == region.sides.size() ? target[j] : iv.lo;
      std::optional<double> best;
      double best_gap = std::numeric_limits<double>::infinity();
      for (int q = 1; q <= max_denominator && best_gap > 0.0; ++q) {
        const double dq = q;
        const double p0 = std::floor(t * dq);
        for (double p : {p0 - 1.0, p0, p0 + 1.0, p0 + 2.0}) {
          const double v = p / dq;
          if (!iv.contains(v)) continue;
          const double gap = std::abs(v - t);
          if (gap < best_gap) {
            best_gap = gap;
            best = v;
          }
        }
        if (!best) {
          // the interval may sit away from the target: try its left end
          const double pl = std::ceil(iv.lo * dq);
          for (double p : {pl, pl + 1.0}) {
            const double v = p / dq;
            if (iv.contains(v) && std::abs(v - t) < best_gap) {
              best_gap = std::abs(v - t);
              best = v;
            }
          }
        }
      }
      if (!best) return std::nullopt;
      out[j] = *best;
    }
    return out;
  };
  return d;
}

/// Serializable description of a built-in scheme.
struct SchemeDescription {
  SpaceKind kind = SpaceKind::abstract;
  std::size_t dim = 1;
  std::vector<double> lower;
  std::vector<double> upper;
  int n_max = 0;
  std::string dense_tag;
  int max_denominator = 0;
};

/// A sequence of partitions of unity n = 1..n_max with anchor points in a
/// dense set D.
struct AnchoredScheme {
  SchemeDescription description;
  std::function<BumpFamily(int)> partition;
  std::function<Point(int, const OrderKey&)> anchor;

  SpaceKind kind() const { return description.kind; }
  int n_max() const { return description.n_max; }
};

class DenseSetExhausted : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Tent (piecewise multilinear) partitions on the mesh 1/n, with anchors
/// within 1/(2n) of each node.
inline AnchoredScheme grid_scheme(std::size_t dim, const std::vector<double>& lower,
                                  const std::vector<double>& upper, DenseSet dense, int n_max) {
  if (dim == 0) throw std::invalid_argument("grid_scheme: dim must be positive");
  if (lower.size() != dim || upper.size() != dim) {
    throw std::invalid_argument("grid_scheme: bounds dimension mismatch");
  }
  for (std::size_t j = 0; j < dim; ++j) {
    if (!(lower[j] < upper[j]) || !std::isfinite(lower[j]) || !std::isfinite(upper[j])) {
      throw std::invalid_argument("grid_scheme: invalid box");
    }
  }
  if (n_max < 1) throw std::invalid_argument("grid_scheme: n_max must be positive");

  AnchoredScheme s;
  s.description = {SpaceKind::euclidean_grid, dim, lower, upper, n_max, dense.tag,
                   dense.max_denominator};

  s.partition = [dim, lower, upper](int n) {
    if (n < 1) throw std::invalid_argument("grid_scheme: level must be positive");
    const double dn = n;
    std::vector<std::int64_t> kmin(dim), kmax(dim);
    for (std::size_t j = 0; j < dim; ++j) {
      kmin[j] = static_cast<std::int64_t>(std::floor(lower[j] * dn));
      kmax[j] = static_cast<std::int64_t>(std::ceil(upper[j] * dn));
    }
    BumpFamily f;
    f.kind = SpaceKind::euclidean_grid;
    f.level = n;
    f.support_of = [dn](const OrderKey& k) {
      Box b;
      for (auto kj : k) {
        b.sides.push_back({static_cast<double>(kj - 1) / dn, static_cast<double>(kj + 1) / dn,
                           true, true});
      }
      return b;
    };
    f.eval = [dn, support = f.support_of](const OrderKey& k, const Point& x) {
      if (!support(k).contains(x)) return 0.0;
      double v = 1.0;
      for (std::size_t j = 0; j < k.size(); ++j) {
        v *= std::max(0.0, 1.0 - std::abs(x[j] * dn - static_cast<double>(k[j])));
      }
      return v;
    };
    f.keys = [kmin, kmax] {
      std::vector<OrderKey> out;
      OrderKey k = kmin;
      while (true) {
        out.push_back(k);
        std::size_t j = k.size();
        while (j > 0) {
          --j;
          if (k[j] < kmax[j]) {
            ++k[j];
            break;
          }
          k[j] = kmin[j];
          if (j == 0) return out;
        }
      }
    };
    f.candidates = [dn, kmin, kmax](const Point& x) {
      std::vector<OrderKey> out;
      if (x.size() != kmin.size()) return out;
      std::vector<std::vector<std::int64_t>> per(x.size());
      for (std::size_t j = 0; j < x.size(); ++j) {
        if (!std::isfinite(x[j])) return out;
        const auto c = static_cast<std::int64_t>(std::floor(x[j] * dn));
        for (std::int64_t k = c - 1; k <= c + 2; ++k) {
          if (k >= kmin[j] && k <= kmax[j]) per[j].push_back(k);
        }
        if (per[j].empty()) return out;
      }
      std::vector<std::size_t> pos(x.size(), 0);
      while (true) {
        OrderKey k(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) k[j] = per[j][pos[j]];
        out.push_back(std::move(k));
        std::size_t j = x.size();
        while (j > 0) {
          --j;
          if (++pos[j] < per[j].size()) break;
          pos[j] = 0;
          if (j == 0) return out;
        }
      }
    };
    return f;
  };

  s.anchor = [pick = dense.pick](int n, const OrderKey& k) {
    const double dn = n;
    Box region;
    Point node;
    for (auto kj : k) {
      const double c = static_cast<double>(kj) / dn;
      node.push_back(c);
      region.sides.push_back({c - 0.5 / dn, c + 0.5 / dn, true, true});
    }
    auto p = pick(region, node);
    if (!p) throw DenseSetExhausted("grid_scheme: no dense point near a grid node");
    return *p;
  };
  return s;
}

/// Characteristic functions of [(i-1)/n, i/n) with anchors in
/// [i/n, (i+1)/n) ∩ D. The index range per level covers
/// [domain_lo, domain_hi] with one spare tile on each side.
inline AnchoredScheme sorgenfrey_scheme(DenseSet dense, int n_max, double domain_lo = 0.0,
                                        double domain_hi = 1.0) {
  if (n_max < 1) throw std::invalid_argument("sorgenfrey_scheme: n_max must be positive");
  if (!(domain_lo < domain_hi) || !std::isfinite(domain_lo) || !std::isfinite(domain_hi)) {
    throw std::invalid_argument("sorgenfrey_scheme: invalid domain");
  }
  AnchoredScheme s;
  s.description = {SpaceKind::sorgenfrey, 1, {domain_lo}, {domain_hi}, n_max, dense.tag,
                   dense.max_denominator};

  s.partition = [domain_lo, domain_hi](int n) {
    if (n < 1) throw std::invalid_argument("sorgenfrey_scheme: level must be positive");
    const double dn = n;
    const auto imin = static_cast<std::int64_t>(std::floor(domain_lo * dn));
    const auto imax = static_cast<std::int64_t>(std::ceil(domain_hi * dn)) + 1;
    BumpFamily f;
    f.kind = SpaceKind::sorgenfrey;
    f.level = n;
    f.support_of = [dn](const OrderKey& k) {
      return Box{{{static_cast<double>(k[0] - 1) / dn, static_cast<double>(k[0]) / dn, true,
                   false}}};
    };
    f.eval = [support = f.support_of](const OrderKey& k, const Point& x) {
      return support(k).contains(x) ? 1.0 : 0.0;
    };
    f.keys = [imin, imax] {
      std::vector<OrderKey> out;
      for (auto i = imin; i <= imax; ++i) out.push_back({i});
      return out;
    };
    f.candidates = [dn, imin, imax](const Point& x) {
      std::vector<OrderKey> out;
      if (x.size() != 1 || !std::isfinite(x[0])) return out;
      const auto c = static_cast<std::int64_t>(std::floor(x[0] * dn)) + 1;
      for (auto i = c - 1; i <= c + 1; ++i) {
        if (i >= imin && i <= imax) out.push_back({i});
      }
      return out;
    };
    return f;
  };

  s.anchor = [pick = dense.pick](int n, const OrderKey& k) {
    const double dn = n;
    const double lo = static_cast<double>(k[0]) / dn;
    const Box region{{{lo, static_cast<double>(k[0] + 1) / dn, true, false}}};
    auto p = pick(region, Point{lo});
    if (!p) throw DenseSetExhausted("sorgenfrey_scheme: dense set misses a half-open tile");
    return *p;
  };
  return s;
}

class AnchoringFailure : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Whether `a` lies in the basic neighborhood of x of size radius: the open
/// ball for Euclidean schemes, [x, x+radius) for the Sorgenfrey line.
inline bool in_basic_neighborhood(SpaceKind kind, const Point& x, double radius, const Point& a) {
  if (std::isinf(radius)) return true;
  if (kind == SpaceKind::sorgenfrey) return a[0] >= x[0] && a[0] < x[0] + radius;
  return euclidean_distance(a, x) < radius;
}

/// Least n0 such that for every n in [n0, n_max], every anchor of a bump whose
/// support contains x lies in the neighborhood of radius `radius`.
inline int verify_anchoring(const AnchoredScheme& s, const Point& x, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("verify_anchoring: radius must be positive");
  if (std::isinf(radius)) return 1;
  int n0 = s.n_max() + 1;
  for (int n = s.n_max(); n >= 1; --n) {
    const BumpFamily fam = s.partition(n);
    bool ok = true;
    for (const auto& k : support_keys(fam, x)) {
      if (!in_basic_neighborhood(s.kind(), x, radius, s.anchor(n, k))) {
        ok = false;
        break;
      }
    }
    if (!ok) break;
    n0 = n;
  }
  if (n0 > s.n_max()) {
    throw AnchoringFailure("verify_anchoring: anchors outside the neighborhood at n_max");
  }
  return n0;
}

/// max over the families of #{keys : x in supp}.
inline std::size_t pointwise_finiteness(std::span<const BumpFamily> families, const Point& x) {
  std::size_t k = 0;
  for (const auto& f : families) k = std::max(k, support_keys(f, x).size());
  return k;
}

struct CoverSet {
  OrderKey key;
  std::function<bool(const Point&)> contains;
};

enum class Provenance { disjointified, supplied };

class CoverViolation : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Pairwise disjoint cells, listed in the order of the cover they came from.
struct CoverCellPartition {
  std::vector<CoverSet> cells;
  Provenance provenance = Provenance::supplied;

  /// Key of the unique cell containing x.
  const OrderKey& cell_of(const Point& x) const {
    for (const auto& c : cells) {
      if (c.contains(x)) return c.key;
    }
    throw CoverViolation("cover cell partition: point lies in no cell");
  }
};

/// A_k = G_k minus the union of the earlier G's.
inline CoverCellPartition disjointify(std::vector<CoverSet> cover) {
  auto shared = std::make_shared<const std::vector<CoverSet>>(std::move(cover));
  CoverCellPartition out;
  out.provenance = Provenance::disjointified;
  for (std::size_t k = 0; k < shared->size(); ++k) {
    out.cells.push_back({(*shared)[k].key, [shared, k](const Point& x) {
                           if (!(*shared)[k].contains(x)) return false;
                           for (std::size_t j = 0; j < k; ++j) {
                             if ((*shared)[j].contains(x)) return false;
                           }
                           return true;
                         }});
  }
  return out;
}

/// Checks that every sample lies in exactly one cell.
inline void validate_cover(const CoverCellPartition& p, std::span<const Point> samples) {
  for (const auto& x : samples) {
    const auto hits = std::count_if(p.cells.begin(), p.cells.end(),
                                    [&](const CoverSet& c) { return c.contains(x); });
    if (hits != 1) throw CoverViolation("validate_cover: point not in exactly one cell");
  }
}

/// The supports of a family as a cover, in key order.
inline std::vector<CoverSet> support_cover(const BumpFamily& fam) {
  std::vector<CoverSet> out;
  for (auto& k : fam.keys()) {
    out.push_back({k, [b = fam.support_of(k)](const Point& x) { return b.contains(x); }});
  }
  return out;
}

struct OpenSet {
  std::string label;
  std::function<bool(const Point&)> contains;
};

using StratifyingFunction = std::function<OpenSet(int, const Point&)>;
using ConvergenceOracle = std::function<bool(std::span<const Point>, const Point&)>;

struct StratProbe {
  Point x;
  std::vector<Point> seq;  // seq[n-1] is x_n
};

struct StratReport {
  std::vector<bool> converges;
  bool all_converge = true;
};

/// Witness check for a quarter-stratifying function: for every probe with
/// x in g(n, x_n) for all n, asks the oracle whether x_n -> x.
inline StratReport quarter_strat_check(const StratifyingFunction& g,
                                       const ConvergenceOracle& converges,
                                       std::span<const StratProbe> probes) {
  StratReport r;
  for (const auto& p : probes) {
    for (std::size_t i = 0; i < p.seq.size(); ++i) {
      if (!g(static_cast<int>(i) + 1, p.seq[i]).contains(p.x)) {
        throw std::invalid_argument("quarter_strat_check: probe violates x in g(n, x_n)");
      }
    }
    const bool ok = converges(p.seq, p.x);
    r.converges.push_back(ok);
    r.all_converge = r.all_converge && ok;
  }
  return r;
}

/// Finite-horizon surrogate for x_n -> x: the last `tail` terms are within
/// eps of x and the distances there do not increase.
inline ConvergenceOracle euclidean_tail_oracle(double eps = 1e-3, std::size_t tail = 3) {
  return [eps, tail](std::span<const Point> seq, const Point& x) {
    if (seq.size() < tail || tail == 0) return false;
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = seq.size() - tail; i < seq.size(); ++i) {
      const double d = euclidean_distance(seq[i], x);
      if (d > eps || d > prev) return false;
      prev = d;
    }
    return true;
  };
}

}  // namespace eqb
