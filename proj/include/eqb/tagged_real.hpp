#pragma once

#include <cstdint>
#include <cstdlib>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>

namespace eqb {

/// A real number that remembers whether it is exactly rational (p/q), a
/// sample standing in for an irrational, or a plain double.
///
/// Point identity (`same_point`) consults the tags, so indicator functions of
/// rational sets are exact even though the stored double is rounded.
class TaggedReal {
 public:
  enum class Exactness { rational, irrational, plain };

  TaggedReal() = default;
  TaggedReal(double v) : value_(v) {}  // NOLINT: plain reals convert implicitly

  static TaggedReal rational(std::int64_t p, std::int64_t q) {
    if (q == 0) throw std::invalid_argument("TaggedReal::rational: zero denominator");
    if (q < 0) {
      p = -p;
      q = -q;
    }
    const std::int64_t g = std::gcd(p < 0 ? -p : p, q);
    TaggedReal r;
    r.tag_ = Exactness::rational;
    r.num_ = g == 0 ? 0 : p / g;
    r.den_ = g == 0 ? 1 : q / g;
    r.value_ = static_cast<double>(r.num_) / static_cast<double>(r.den_);
    return r;
  }

  /// `approx` is the stored double; `label` identifies the irrational.
  static TaggedReal irrational(double approx, std::string label) {
    TaggedReal r(approx);
    r.tag_ = Exactness::irrational;
    r.label_ = std::move(label);
    return r;
  }

  static TaggedReal sqrt2() { return irrational(1.4142135623730951, "sqrt2"); }
  static TaggedReal pi() { return irrational(3.141592653589793, "pi"); }
  static TaggedReal e() { return irrational(2.718281828459045, "e"); }

  double value() const { return value_; }
  Exactness exactness() const { return tag_; }
  bool is_rational() const { return tag_ == Exactness::rational; }
  bool is_irrational() const { return tag_ == Exactness::irrational; }
  bool is_plain() const { return tag_ == Exactness::plain; }
  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  const std::string& label() const { return label_; }

  /// Exact identity where the tags allow it. A rational never equals an
  /// irrational sample; plain values fall back to double equality.
  bool same_point(const TaggedReal& o) const {
    if (is_plain() || o.is_plain()) return value_ == o.value_;
    if (tag_ != o.tag_) return false;
    if (is_rational()) return num_ == o.num_ && den_ == o.den_;
    return label_ == o.label_ && value_ == o.value_;
  }

  std::string describe() const {
    switch (tag_) {
      case Exactness::rational:
        return std::to_string(num_) + "/" + std::to_string(den_);
      case Exactness::irrational:
        return label_;
      case Exactness::plain:
        break;
    }
    return "plain";
  }

 private:
  double value_ = 0.0;
  Exactness tag_ = Exactness::plain;
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
  std::string label_;
};

}  // namespace eqb
