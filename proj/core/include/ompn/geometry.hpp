#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ompn {

using Point = std::vector<double>;

/// An l_p norm with p either a rational number >= 1 (kept as a reduced
/// fraction so models can encode it exactly) or infinity.
class NormSpec {
 public:
  static NormSpec rational(std::int64_t num, std::int64_t den = 1);
  static NormSpec one() { return rational(1); }
  static NormSpec euclidean() { return rational(2); }
  static NormSpec infinity();

  /// Parses "1", "2", "inf", or "num/den".  Throws ValidationError.
  static NormSpec parse(const std::string& text);
  std::string to_string() const;

  bool is_infinity() const { return num_ == 0; }
  /// Numeric exponent; +inf for the max norm.
  double exponent() const;
  std::int64_t numerator() const { return num_; }
  std::int64_t denominator() const { return den_; }

  bool operator==(const NormSpec& other) const = default;

 private:
  NormSpec(std::int64_t num, std::int64_t den) : num_(num), den_(den) {}
  std::int64_t num_ = 2;  ///< 0 encodes infinity
  std::int64_t den_ = 1;
};

/// A ball { y : ||y - center||_norm <= radius } in which a facility may be
/// placed.  radius == 0 degenerates to the fixed point `center`.
struct Neighborhood {
  Point center;
  double radius = 0.0;
  NormSpec norm = NormSpec::euclidean();
};

/// ||v|| under the given norm.
double norm_value(const NormSpec& norm, const Point& v);

/// A subgradient of v -> ||v||.  At v = 0 returns the zero vector; for the
/// max norm, weight goes to the lowest-index maximal coordinate.
Point norm_subgradient(const NormSpec& norm, const Point& v);

/// Euclidean projection of x onto the ball.  Supported ball norms: 1, 2, inf.
Point project_to_ball(const Point& x, const Neighborhood& ball);

/// True when x lies in the ball up to the given slack.
bool contains(const Neighborhood& ball, const Point& x, double slack = 1e-9);

/// Interval [lo, hi] bracketing the distance ||a - y||_nu over all y in the
/// ball.  Exact when the ball norm equals nu, when the ball norm is inf, and
/// for several other combinations; otherwise conservative (lo never above the
/// true minimum, hi never below the true maximum).
struct DistanceInterval {
  double lo = 0.0;
  double hi = 0.0;
};

DistanceInterval distance_interval(const Point& a, const Neighborhood& ball,
                                   const NormSpec& nu);

/// Pairwise assignment-cost brackets for a set of sites: for i != j,
/// lo(i,j) <= ||a_i - y||_nu <= hi(i,j) for every y in ball j.  Diagonal
/// entries bracket the self-assignment cost, which is identically zero by
/// convention, so lo(i,i) = hi(i,i) = 0.
class BoundsMatrix {
 public:
  BoundsMatrix() = default;
  BoundsMatrix(std::size_t n) : n_(n), lo_(n * n, 0.0), hi_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double lo(std::size_t i, std::size_t j) const { return lo_[i * n_ + j]; }
  double hi(std::size_t i, std::size_t j) const { return hi_[i * n_ + j]; }
  double& lo(std::size_t i, std::size_t j) { return lo_[i * n_ + j]; }
  double& hi(std::size_t i, std::size_t j) { return hi_[i * n_ + j]; }

 private:
  std::size_t n_ = 0;
  std::vector<double> lo_, hi_;
};

BoundsMatrix compute_bounds(const std::vector<Point>& sites,
                            const std::vector<Neighborhood>& balls,
                            const NormSpec& nu);

}  // namespace ompn
