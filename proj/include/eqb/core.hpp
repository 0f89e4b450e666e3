#pragma once

// Equiconnected calculus: connectors, the n-point convex combination built
// from a connector, lambda-sums over ordered weight families, iterated hulls
// and contractions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace eqb {

using Point = std::vector<double>;

/// Totally ordered index: integer tuples compared lexicographically.
using OrderKey = std::vector<std::int64_t>;

inline constexpr double kIdentityTol = 1e-12;
inline constexpr double kNormalizeTol = 1e-9;
inline constexpr double kHullTol = 1e-9;

inline double euclidean_distance(const Point& a, const Point& b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument("euclidean_distance: dimension mismatch");
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

/// Uniform draw in [0,1) from the top 53 bits; portable across standard
/// libraries, unlike std::uniform_real_distribution.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// A point universe with a connector map and a metric.
///
/// `connect(x, y, t)` must satisfy connect(x,y,0)=x, connect(x,y,1)=y and
/// connect(x,x,t)=x. Local convexity is declared, never checked.
struct ConnectorSpace {
  std::string name;
  std::size_t point_dim = 1;
  std::function<bool(const Point&)> contains;
  std::function<Point(const Point&, const Point&, double)> connect;
  std::function<double(const Point&, const Point&)> metric;
  bool locally_convex_declared = false;
};

/// Affine connector (1-t)x + t y on the box [lo, hi]^dim (infinite bounds
/// allowed).
inline ConnectorSpace affine_box(std::size_t dim,
                                 double lo = -std::numeric_limits<double>::infinity(),
                                 double hi = std::numeric_limits<double>::infinity()) {
  if (dim == 0) throw std::invalid_argument("affine_box: dim must be positive");
  if (!(lo <= hi)) throw std::invalid_argument("affine_box: empty box");
  ConnectorSpace s;
  s.name = "affine";
  s.point_dim = dim;
  s.contains = [dim, lo, hi](const Point& p) {
    if (p.size() != dim) return false;
    return std::all_of(p.begin(), p.end(),
                       [&](double v) { return !std::isnan(v) && v >= lo && v <= hi; });
  };
  s.connect = [](const Point& x, const Point& y, double t) {
    if (t == 0.0 || x == y) return x;
    if (t == 1.0) return y;
    Point out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = (1.0 - t) * x[i] + t * y[i];
    return out;
  };
  s.metric = euclidean_distance;
  s.locally_convex_declared = true;
  return s;
}

namespace detail {

inline double warp(double u) { return u * u * u + u; }

// Real root of u^3 + u - v = 0 (Cardano, written to avoid cancellation),
// polished by Newton.
inline double unwarp(double v) {
  if (v == 0.0) return 0.0;
  const double av = std::abs(v);
  const double s = std::sqrt(av * av / 4.0 + 1.0 / 27.0);
  const double a = std::cbrt(av / 2.0 + s);
  double u = a - 1.0 / (3.0 * a);
  for (int k = 0; k < 2; ++k) u -= (warp(u) - av) / (3.0 * u * u + 1.0);
  return v < 0 ? -u : u;
}

}  // namespace detail

/// Nonlinear connector on the real line: h^{-1}((1-t)h(x) + t h(y)) with
/// h(u) = u^3 + u.
inline ConnectorSpace warped_line() {
  ConnectorSpace s;
  s.name = "warped";
  s.point_dim = 1;
  s.contains = [](const Point& p) { return p.size() == 1 && std::isfinite(p[0]); };
  s.connect = [](const Point& x, const Point& y, double t) {
    if (t == 0.0 || x == y) return x;
    if (t == 1.0) return y;
    const double hv = (1.0 - t) * detail::warp(x[0]) + t * detail::warp(y[0]);
    return Point{detail::unwarp(hv)};
  };
  s.metric = euclidean_distance;
  // h is a homeomorphism onto R, so intervals are preserved.
  s.locally_convex_declared = true;
  return s;
}

/// A point of the standard simplex S_n. Inputs within 1e-9 of summing to one
/// are renormalized; tiny negative entries are clamped to exact zero.
class SimplexWeights {
 public:
  explicit SimplexWeights(std::vector<double> w) : w_(std::move(w)) {
    if (w_.empty()) throw std::invalid_argument("SimplexWeights: empty weight vector");
    double sum = 0.0;
    for (double& v : w_) {
      if (std::isnan(v) || v < -kNormalizeTol || v > 1.0 + kNormalizeTol) {
        throw std::invalid_argument("SimplexWeights: weight outside [0,1]");
      }
      if (v < 0.0) v = 0.0;
      sum += v;
    }
    if (std::abs(sum - 1.0) > kNormalizeTol) {
      throw std::invalid_argument("SimplexWeights: weights do not sum to 1");
    }
    if (sum != 1.0) {
      for (double& v : w_) v = std::min(1.0, v / sum);
    }
  }

  std::size_t size() const { return w_.size(); }
  double operator[](std::size_t i) const { return w_[i]; }
  std::span<const double> values() const { return w_; }

 private:
  std::vector<double> w_;
};

/// lambda_n(points, w): the n-point convex combination generated by the
/// connector. The pair (head, mass) carries the first argument of the
/// shorter combination at each step of the recursion.
inline Point convex_combination(const ConnectorSpace& space, std::span<const Point> points,
                                const SimplexWeights& w) {
  if (points.empty()) throw std::invalid_argument("convex_combination: no points");
  if (points.size() != w.size()) {
    throw std::invalid_argument("convex_combination: points/weights length mismatch");
  }
  for (const Point& p : points) {
    if (p.size() != space.point_dim) {
      throw std::invalid_argument("convex_combination: point dimension mismatch");
    }
    if (!space.contains(p)) {
      throw std::invalid_argument("convex_combination: point outside the space");
    }
  }
  Point head = points[0];
  double mass = w[0];
  for (std::size_t k = 1; k < points.size(); ++k) {
    const double next = w[k];
    if (mass + next > 0.0) {
      head = space.connect(head, points[k], next / (mass + next));
      mass += next;
    } else {
      // both weights exactly zero: drop the head
      head = points[k];
    }
  }
  return head;
}

/// One entry of an ordered weight family.
struct WeightedEntry {
  OrderKey key;
  double weight = 0.0;
  Point point;
};

/// Finite family of (key, weight, point) with strictly increasing keys and
/// weights summing to one.
class OrderedWeightFamily {
 public:
  OrderedWeightFamily() = default;
  explicit OrderedWeightFamily(std::vector<WeightedEntry> entries) : entries_(std::move(entries)) {
    double sum = 0.0;
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (i > 0 && !(entries_[i - 1].key < entries_[i].key)) {
        throw std::invalid_argument("OrderedWeightFamily: keys not strictly increasing");
      }
      const double w = entries_[i].weight;
      if (std::isnan(w) || w < 0.0) {
        throw std::invalid_argument("OrderedWeightFamily: negative weight");
      }
      sum += w;
    }
    if (sum == 0.0) throw std::invalid_argument("OrderedWeightFamily: all weights are zero");
    if (std::abs(sum - 1.0) > kNormalizeTol) {
      throw std::invalid_argument("OrderedWeightFamily: weights do not sum to 1");
    }
  }

  const std::vector<WeightedEntry>& entries() const { return entries_; }

 private:
  std::vector<WeightedEntry> entries_;
};

/// The lambda-sum: convex combination over the nonzero-weight entries, in key
/// order.
inline Point lambda_sum(const ConnectorSpace& space, const OrderedWeightFamily& fam) {
  std::vector<Point> pts;
  std::vector<double> ws;
  for (const auto& e : fam.entries()) {
    if (e.weight > 0.0) {
      pts.push_back(e.point);
      ws.push_back(e.weight);
    }
  }
  if (pts.empty()) throw std::invalid_argument("lambda_sum: empty nonzero support");
  return convex_combination(space, pts, SimplexWeights(std::move(ws)));
}

/// Result of a Monte-Carlo search in lambda^n(seeds). A negative answer is
/// not a certificate of non-membership.
struct HullSearchResult {
  bool found = false;
  std::vector<std::size_t> seed_indices;
  std::vector<double> weights;
  Point value;
  double distance = std::numeric_limits<double>::infinity();
  int trials_used = 0;
};

namespace detail {

inline std::vector<double> dirichlet_sample(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> w(n);
  double s = 0.0;
  for (double& v : w) {
    v = -std::log(1.0 - uniform01(rng));
    s += v;
  }
  for (double& v : w) v /= s;
  return w;
}

// Moves mass between pairs of coordinates with a golden-section line search.
inline double refine_weights(const ConnectorSpace& space, std::span<const Point> pts,
                             std::vector<double>& w, const Point& probe) {
  auto dist = [&](const std::vector<double>& ww) {
    return space.metric(convex_combination(space, pts, SimplexWeights(ww)), probe);
  };
  double best = dist(w);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int sweep = 0; sweep < 20 && best > kHullTol; ++sweep) {
    const double before = best;
    for (std::size_t i = 0; i < w.size(); ++i) {
      for (std::size_t j = i + 1; j < w.size(); ++j) {
        const double total = w[i] + w[j];
        if (total <= 0.0) continue;
        auto at = [&](double s) {
          std::vector<double> ww = w;
          ww[i] = total * s;
          ww[j] = total - ww[i];
          return ww;
        };
        double lo = 0.0, hi = 1.0;
        double a = hi - phi * (hi - lo), b = lo + phi * (hi - lo);
        double fa = dist(at(a)), fb = dist(at(b));
        for (int it = 0; it < 64; ++it) {
          if (fa < fb) {
            hi = b;
            b = a;
            fb = fa;
            a = hi - phi * (hi - lo);
            fa = dist(at(a));
          } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + phi * (hi - lo);
            fb = dist(at(b));
          }
        }
        for (double s : {lo, hi, 0.5 * (lo + hi), 0.0, 1.0}) {
          auto cand = at(s);
          const double d = dist(cand);
          if (d < best) {
            best = d;
            w = std::move(cand);
          }
        }
        if (best <= kHullTol) return best;
      }
    }
    if (best >= before) break;
  }
  return best;
}

}  // namespace detail

/// Searches for (x_1..x_n) in seeds^n and w in S_n with lambda_n within 1e-9
/// of `probe`.
inline HullSearchResult iterated_hull_contains(const ConnectorSpace& space,
                                               const std::vector<Point>& seeds, int n,
                                               const Point& probe, int trials,
                                               std::uint64_t rng_seed) {
  if (seeds.empty()) throw std::invalid_argument("iterated_hull_contains: no seed points");
  if (n < 1) throw std::invalid_argument("iterated_hull_contains: n must be positive");
  if (trials < 1) throw std::invalid_argument("iterated_hull_contains: trials must be positive");
  for (const auto& s : seeds) {
    if (!space.contains(s)) throw std::invalid_argument("iterated_hull_contains: seed outside space");
  }
  if (probe.size() != space.point_dim) {
    throw std::invalid_argument("iterated_hull_contains: probe dimension mismatch");
  }
  std::mt19937_64 rng(rng_seed);
  const auto un = static_cast<std::size_t>(n);
  HullSearchResult best;
  for (int trial = 0; trial < trials; ++trial) {
    std::vector<std::size_t> idx(un);
    std::vector<Point> pts(un);
    for (std::size_t k = 0; k < un; ++k) {
      idx[k] = static_cast<std::size_t>(rng() % seeds.size());
      pts[k] = seeds[idx[k]];
    }
    std::vector<double> w =
        trial % 2 == 0 ? std::vector<double>(un, 1.0 / static_cast<double>(n))
                       : detail::dirichlet_sample(rng, un);
    const double d = detail::refine_weights(space, pts, w, probe);
    if (d < best.distance) {
      best.distance = d;
      best.seed_indices = idx;
      best.weights = w;
      best.value = convex_combination(space, pts, SimplexWeights(w));
    }
    best.trials_used = trial + 1;
    if (best.distance <= kHullTol) {
      best.found = true;
      break;
    }
  }
  return best;
}

/// A contraction (gamma, star): gamma(z,0)=z, gamma(z,1)=star.
struct Contraction {
  std::string name;
  std::function<Point(const Point&, double)> gamma;
  Point star;
};

inline Point contract_eval(const Contraction& c, const Point& z, double t) {
  if (std::isnan(t) || t < 0.0 || t > 1.0) {
    throw std::invalid_argument("contract_eval: t outside [0,1]");
  }
  return c.gamma(z, t);
}

inline Contraction straight_line_contraction(Point star) {
  Contraction c;
  c.name = "straight_line";
  c.star = star;
  c.gamma = [star = std::move(star)](const Point& z, double t) {
    if (t == 0.0) return z;
    if (t == 1.0) return star;
    Point out(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) out[i] = (1.0 - t) * z[i] + t * star[i];
    return out;
  };
  return c;
}

/// Every equiconnected space contracts to any of its points along its
/// connector.
inline Contraction contraction_along(const ConnectorSpace& space, Point star) {
  Contraction c;
  c.name = space.name + "_contraction";
  c.star = star;
  c.gamma = [connect = space.connect, star = std::move(star)](const Point& z, double t) {
    return connect(z, star, t);
  };
  return c;
}

}  // namespace eqb
