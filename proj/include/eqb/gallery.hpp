#pragma once

// Explicit functions and spaces: the cosine bump and the two-set builder on
// top of it, finitely supported sequences with the sets F_n, F~_n, G_n, H_n,
// a function on R^inf x R whose zero section is the Dirichlet function, the
// depth-2 Dirichlet tower and the two-level sequential space.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "eqb/approx.hpp"
#include "eqb/tagged_real.hpp"

namespace eqb {

/// cos(pi (u - a) / (2v)) for |u - a| < v, else 0.
inline double bump_g(double u, double v, double a) {
  if (!(v > 0.0)) throw std::invalid_argument("bump_g: v must be positive");
  const double d = std::abs(u - a);
  if (d >= v) return 0.0;
  if (d == 0.0) return 1.0;
  return std::cos(std::numbers::pi * (u - a) / (2.0 * v));
}

/// Level-set data for the two-set builder: H = phi^{-1}(1),
/// X \ G = phi^{-1}(0), F = psi^{-1}(0), with H inside F ∩ G.
template <class X>
struct Lemma81Data {
  std::function<double(const X&)> phi;
  std::function<double(const X&)> psi;
  std::function<bool(const X&)> in_H;
  std::function<bool(const X&)> in_G;
  std::function<bool(const X&)> in_F;
};

/// Throws if a sample breaks H ⊆ F ∩ G or one of the declared level sets.
template <class X>
void check_lemma81_data(const Lemma81Data<X>& d, std::span<const X> samples) {
  for (const X& x : samples) {
    const bool h = d.in_H(x), g = d.in_G(x), f = d.in_F(x);
    if (h && !(f && g)) throw std::invalid_argument("lemma81: H is not inside F ∩ G");
    const double p = d.phi(x), q = d.psi(x);
    if (p < 0.0 || p > 1.0 || q < 0.0 || q > 1.0) {
      throw std::invalid_argument("lemma81: phi/psi outside [0,1]");
    }
    if ((p == 1.0) != h) throw std::invalid_argument("lemma81: phi^{-1}(1) differs from H");
    if ((p == 0.0) != !g) throw std::invalid_argument("lemma81: phi^{-1}(0) differs from X \\ G");
    if ((q == 0.0) != f) throw std::invalid_argument("lemma81: psi^{-1}(0) differs from F");
  }
}

/// f(x,y) = phi(x) g(y, psi(x)) off F and phi(x) chi_{a}(y) on F.
template <class X>
std::function<double(const X&, const TaggedReal&)> lemma81_build(Lemma81Data<X> d, TaggedReal a,
                                                                  std::span<const X> samples = {}) {
  if (!samples.empty()) check_lemma81_data(d, samples);
  return [d = std::move(d), a = std::move(a)](const X& x, const TaggedReal& y) {
    const double p = d.phi(x);
    if (p == 0.0) return 0.0;
    if (d.in_F(x)) return y.same_point(a) ? p : 0.0;
    return p * bump_g(y.value(), d.psi(x), a.value());
  };
}

/// Finitely supported real sequence (xi_1, xi_2, ...); absent entries are 0.
class FinSeq {
 public:
  FinSeq() = default;
  FinSeq(std::initializer_list<double> leading) {
    int i = 1;
    for (double v : leading) set(i++, v);
  }

  void set(int index, double v) {
    if (index < 1) throw std::invalid_argument("FinSeq: indices start at 1");
    if (v == 0.0) {
      entries_.erase(index);
    } else {
      entries_[index] = v;
    }
  }
  double get(int index) const {
    auto it = entries_.find(index);
    return it == entries_.end() ? 0.0 : it->second;
  }
  bool is_zero() const { return entries_.empty(); }
  int top_index() const { return entries_.empty() ? 0 : entries_.rbegin()->first; }
  const std::map<int, double>& entries() const { return entries_; }

  /// max(|xi_1|, ..., |xi_n|)
  double max_abs_upto(int n) const {
    double m = 0.0;
    for (const auto& [i, v] : entries_) {
      if (i > n) break;
      m = std::max(m, std::abs(v));
    }
    return m;
  }
  /// max over indices > n of |xi_j|
  double max_abs_beyond(int n) const {
    double m = 0.0;
    for (auto it = entries_.upper_bound(n); it != entries_.end(); ++it) {
      m = std::max(m, std::abs(it->second));
    }
    return m;
  }

 private:
  std::map<int, double> entries_;
};

enum class RinftySet { F, F_tilde, G, H };

namespace detail {

inline double g_radius(int n) { return 1.0 / (static_cast<double>(n) - 0.5); }
inline double f_radius(int n) { return 1.0 / static_cast<double>(n); }

// Nonnegative "distances" with exact zero sets F_k and F~_m.
inline double gap_F(const FinSeq& x, int k) {
  return std::max(0.0, x.max_abs_upto(k) - f_radius(k)) + x.max_abs_beyond(k);
}
inline double gap_F_tilde(const FinSeq& x, int m) {
  return std::max(0.0, x.max_abs_upto(m) - f_radius(m));
}

}  // namespace detail

/// Index up to which the intersection defining H_n has to be evaluated; from
/// there on the terms no longer change.
inline int h_depth(const FinSeq& x, int n) { return std::max(n, x.top_index()); }

/// Exact membership of x in F_n, F~_n, G_n or H_n. For H, `m_cap`, when
/// given, must reach h_depth(x, n).
inline bool rinfty_membership(const FinSeq& x, int n, RinftySet which,
                              std::optional<int> m_cap = std::nullopt) {
  if (n < 1) throw std::invalid_argument("rinfty_membership: n must be positive");
  switch (which) {
    case RinftySet::F:
      return x.max_abs_upto(n) <= detail::f_radius(n) && x.top_index() <= n;
    case RinftySet::F_tilde:
      return x.max_abs_upto(n) <= detail::f_radius(n);
    case RinftySet::G:
      return x.max_abs_upto(n) < detail::g_radius(n);
    case RinftySet::H:
      break;
  }
  const int depth = h_depth(x, n);
  if (m_cap && *m_cap < depth) {
    throw std::invalid_argument("rinfty_membership: m_cap below the stabilization index");
  }
  const int last = m_cap.value_or(depth);
  bool union_F = false;
  for (int m = n; m <= last; ++m) {
    union_F = union_F || rinfty_membership(x, m, RinftySet::F);
    if (!union_F && !rinfty_membership(x, m, RinftySet::F_tilde)) return false;
  }
  return true;
}

/// r_1 = 0, then p/q in lowest terms along the diagonals p + q = s
/// (s = 2, 3, ...; q ascending), each followed by its negative.
class RationalEnumeration {
 public:
  explicit RationalEnumeration(std::size_t count) {
    values_.reserve(count);
    if (count == 0) return;
    push(TaggedReal::rational(0, 1));
    for (std::int64_t s = 2; values_.size() < count; ++s) {
      for (std::int64_t q = 1; q < s && values_.size() < count; ++q) {
        const std::int64_t p = s - q;
        if (std::gcd(p, q) != 1) continue;
        push(TaggedReal::rational(p, q));
        if (values_.size() < count) push(TaggedReal::rational(-p, q));
      }
    }
  }

  std::size_t size() const { return values_.size(); }

  /// r_n, 1-based.
  const TaggedReal& operator()(std::size_t n) const {
    if (n < 1 || n > values_.size()) throw std::out_of_range("RationalEnumeration: index out of range");
    return values_[n - 1];
  }

  /// n with r_n = y, if it falls inside the table.
  std::optional<std::size_t> index_of(const TaggedReal& y) const {
    if (!y.is_rational()) return std::nullopt;
    auto it = index_.find({y.num(), y.den()});
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

 private:
  void push(TaggedReal r) {
    index_.emplace(std::pair{r.num(), r.den()}, values_.size() + 1);
    values_.push_back(std::move(r));
  }

  std::vector<TaggedReal> values_;
  std::map<std::pair<std::int64_t, std::int64_t>, std::size_t> index_;
};

inline TaggedReal rational_enumeration(int n) {
  if (n < 1) throw std::invalid_argument("rational_enumeration: n must be positive");
  return RationalEnumeration(static_cast<std::size_t>(n))(static_cast<std::size_t>(n));
}

/// Indicator of the rationals. Untagged reals are rejected: every double is
/// rational, so the answer would say nothing.
inline double dirichlet(const TaggedReal& y) {
  if (y.is_plain()) throw std::domain_error("dirichlet: rationality of an untagged real is undecidable");
  return y.is_rational() ? 1.0 : 0.0;
}

/// Depth-2 tower for the Dirichlet function: g_n = indicator of
/// {r_1..r_n}, g_{n,m} = min(1, sum_{k<=n} max(0, 1 - m|y - r_k|)).
inline BaireTower<double> dirichlet_tower() {
  return make_tower<double>(2, dirichlet, [](int n) {
    auto table = std::make_shared<const RationalEnumeration>(static_cast<std::size_t>(n));
    return make_tower<double>(
        1,
        [table](const TaggedReal& y) {
          if (y.is_plain()) throw std::domain_error("dirichlet_tower: untagged real");
          return table->index_of(y) ? 1.0 : 0.0;
        },
        [table](int m) {
          return continuous_tower<double>([table, m](const TaggedReal& y) {
            double s = 0.0;
            for (std::size_t k = 1; k <= table->size(); ++k) {
              s += detail::tent(m, y.value() - (*table)(k).value());
            }
            return std::min(1.0, s);
          });
        });
  });
}

/// f(x,y) = sum_n f_n(x,y) on R^inf x R, where f_n comes from the two-set
/// builder with a = r_n and the sets F = H_1, H_n, G_n.
class Example2 {
 public:
  explicit Example2(int n_terms_cap = 20000)
      : cap_(n_terms_cap), r_(static_cast<std::size_t>(std::max(1, n_terms_cap))) {
    if (n_terms_cap < 1) throw std::invalid_argument("Example2: cap must be positive");
  }

  int cap() const { return cap_; }
  const RationalEnumeration& rationals() const { return r_; }

  /// Zero exactly on H_n (nonnegative, continuous on every finite slice).
  static double h_gap(const FinSeq& x, int n) {
    const int depth = h_depth(x, n);
    double worst = 0.0;
    double union_gap = std::numeric_limits<double>::infinity();
    for (int m = n; m <= depth; ++m) {
      union_gap = std::min(union_gap, detail::gap_F(x, m));
      worst = std::max(worst, std::min(union_gap, detail::gap_F_tilde(x, m)));
    }
    return worst;
  }

  /// 1 exactly on H_n, 0 exactly off G_n.
  static double phi(int n, const FinSeq& x) {
    const double a = std::max(0.0, detail::g_radius(n) - x.max_abs_upto(n));
    const double b = h_gap(x, n);
    return a / (a + b);
  }

  /// Zero exactly on F = H_1.
  static double psi(const FinSeq& x) { return std::min(1.0, h_gap(x, 1)); }

  static Lemma81Data<FinSeq> sets(int n) {
    return {[n](const FinSeq& x) { return phi(n, x); },
            [](const FinSeq& x) { return psi(x); },
            [n](const FinSeq& x) { return rinfty_membership(x, n, RinftySet::H); },
            [n](const FinSeq& x) { return rinfty_membership(x, n, RinftySet::G); },
            [](const FinSeq& x) { return rinfty_membership(x, 1, RinftySet::H); }};
  }

  /// f_n(x, y).
  double term(int n, const FinSeq& x, const TaggedReal& y) const {
    return lemma81_build<FinSeq>(sets(n), r_(static_cast<std::size_t>(n)))(x, y);
  }

  /// Least n0 with x outside G_n for every n >= n0 (x nonzero).
  static int truncation_index(const FinSeq& x) {
    if (x.is_zero()) throw std::invalid_argument("Example2: zero sequence lies in every G_n");
    for (int n = 1;; ++n) {
      if (!rinfty_membership(x, n, RinftySet::G)) return n;
    }
  }

  double operator()(const FinSeq& x, const TaggedReal& y) const {
    if (x.is_zero()) return dirichlet(y);
    const int n0 = truncation_index(x);
    if (n0 > cap_) throw std::out_of_range("Example2: truncation index exceeds the term cap");
    double s = 0.0;
    for (int k = 1; k <= n0; ++k) s += term(k, x, y);
    return s;
  }

 private:
  int cap_;
  RationalEnumeration r_;
};

inline double example2_eval(const FinSeq& x, const TaggedReal& y, int n_terms_cap) {
  return Example2(n_terms_cap)(x, y);
}

/// Points of X = {0} ∪ ⋃ X_n, X_n = {1/n} ∪ {1/n + 1/m : m >= n^2}.
struct SequentialPoint {
  enum class Kind { origin, level, leaf };
  Kind kind = Kind::origin;
  int n = 0;
  int m = 0;

  static SequentialPoint origin() { return {}; }
  static SequentialPoint level(int n) {
    SequentialPoint p{Kind::level, n, 0};
    p.validate();
    return p;
  }
  static SequentialPoint leaf(int n, int m) {
    SequentialPoint p{Kind::leaf, n, m};
    p.validate();
    return p;
  }

  void validate() const {
    if (kind == Kind::origin) return;
    if (n < 1) throw std::invalid_argument("SequentialPoint: level index must be positive");
    if (kind == Kind::leaf && static_cast<std::int64_t>(m) < static_cast<std::int64_t>(n) * n) {
      throw std::invalid_argument("SequentialPoint: leaf requires m >= n^2");
    }
  }

  /// Coordinate on the real line.
  double coordinate() const {
    switch (kind) {
      case Kind::origin: return 0.0;
      case Kind::level: return 1.0 / n;
      case Kind::leaf: return 1.0 / n + 1.0 / m;
    }
    return 0.0;
  }

  bool operator==(const SequentialPoint&) const = default;
};

/// f(x0,y) = g(y), f(x_n,y) = g_n(y), f(x_nm,y) = g_nm(y) for a depth-2
/// tower g.
class Example1 {
 public:
  explicit Example1(BaireTower<double> tower = dirichlet_tower()) : tower_(std::move(tower)) {
    if (tower_.depth != 2) throw std::invalid_argument("Example1: tower must have depth 2");
  }

  double operator()(const SequentialPoint& x, const TaggedReal& y) const {
    x.validate();
    switch (x.kind) {
      case SequentialPoint::Kind::origin: return tower_.limit_eval(y);
      case SequentialPoint::Kind::level: return tower_.at(x.n).limit_eval(y);
      case SequentialPoint::Kind::leaf: return tower_.at(x.n).at(x.m).limit_eval(y);
    }
    return 0.0;
  }

  /// Baire depth of the section f^x: 0 on leaves, 1 on levels, 2 at 0.
  static int section_depth(const SequentialPoint& x) {
    switch (x.kind) {
      case SequentialPoint::Kind::origin: return 2;
      case SequentialPoint::Kind::level: return 1;
      case SequentialPoint::Kind::leaf: return 0;
    }
    return 2;
  }

  const BaireTower<double>& tower() const { return tower_; }

 private:
  BaireTower<double> tower_;
};

inline double example1_eval(const SequentialPoint& x, const TaggedReal& y) {
  return Example1()(x, y);
}

/// Decides convergence of a finite sequence to `target` in the sequential
/// space. The first half of the list fixes a basic neighborhood (excluding
/// whatever finitely many leaves and levels the head touched); the sequence
/// converges iff its second half lies inside that neighborhood.
///
/// Leaves are isolated; a neighborhood of 1/n is X_n minus leaves with
/// m <= k; a neighborhood of 0 drops finitely many X_n and finitely many
/// leaves from each remaining X_n. Sequences shorter than 2 never converge.
inline bool sequential_convergence_probe(const SequentialPoint& target,
                                         std::span<const SequentialPoint> seq) {
  target.validate();
  for (const auto& p : seq) p.validate();
  if (seq.size() < 2) return false;
  const std::size_t half = seq.size() / 2;
  auto head = seq.first(half);
  auto tail = seq.subspan(half);

  switch (target.kind) {
    case SequentialPoint::Kind::leaf:
      return std::all_of(tail.begin(), tail.end(), [&](const auto& p) { return p == target; });

    case SequentialPoint::Kind::level: {
      int k = target.n * target.n - 1;
      for (const auto& p : head) {
        if (p.kind == SequentialPoint::Kind::leaf && p.n == target.n) k = std::max(k, p.m);
      }
      return std::all_of(tail.begin(), tail.end(), [&](const auto& p) {
        if (p.n != target.n || p.kind == SequentialPoint::Kind::origin) return false;
        return p.kind == SequentialPoint::Kind::level || p.m > k;
      });
    }

    case SequentialPoint::Kind::origin: {
      std::vector<int> dropped_levels;
      for (const auto& p : head) {
        if (p.kind != SequentialPoint::Kind::origin) dropped_levels.push_back(p.n);
      }
      // Every leaf of the sequence is removed from the neighborhood as well:
      // finitely many per X_n.
      return std::all_of(tail.begin(), tail.end(), [&](const auto& p) {
        if (p.kind == SequentialPoint::Kind::origin) return true;
        if (p.kind == SequentialPoint::Kind::leaf) return false;
        return std::find(dropped_levels.begin(), dropped_levels.end(), p.n) == dropped_levels.end();
      });
    }
  }
  return false;
}

}  // namespace eqb
