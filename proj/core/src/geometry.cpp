#include "ompn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ompn/errors.hpp"
#include "ompn/parallel.hpp"

namespace ompn {

namespace {

std::int64_t gcd64(std::int64_t a, std::int64_t b) {
  while (b != 0) {
    const std::int64_t t = a % b;
    a = b;
    b = t;
  }
  return a;
}

double abs_sum(const Point& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double abs_max(const Point& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

NormSpec NormSpec::rational(std::int64_t num, std::int64_t den) {
  if (den <= 0 || num <= 0) {
    throw ValidationError("norm: exponent must be a positive fraction, got " +
                          std::to_string(num) + "/" + std::to_string(den));
  }
  if (num < den) {
    throw ValidationError("norm: exponent must be >= 1, got " +
                          std::to_string(num) + "/" + std::to_string(den));
  }
  const std::int64_t g = gcd64(num, den);
  return NormSpec(num / g, den / g);
}

NormSpec NormSpec::infinity() { return NormSpec(0, 1); }

NormSpec NormSpec::parse(const std::string& text) {
  if (text == "inf" || text == "Inf" || text == "INF" || text == "infinity") {
    return infinity();
  }
  const auto slash = text.find('/');
  try {
    if (slash == std::string::npos) {
      return rational(std::stoll(text));
    }
    return rational(std::stoll(text.substr(0, slash)),
                    std::stoll(text.substr(slash + 1)));
  } catch (const ValidationError&) {
    throw;
  } catch (const std::exception&) {
    throw ValidationError("norm: cannot parse exponent '" + text +
                          "' (expected an integer, 'num/den', or 'inf')");
  }
}

std::string NormSpec::to_string() const {
  if (is_infinity()) return "inf";
  if (den_ == 1) return std::to_string(num_);
  return std::to_string(num_) + "/" + std::to_string(den_);
}

double NormSpec::exponent() const {
  if (is_infinity()) return std::numeric_limits<double>::infinity();
  return static_cast<double>(num_) / static_cast<double>(den_);
}

double norm_value(const NormSpec& norm, const Point& v) {
  if (norm.is_infinity()) return abs_max(v);
  const double p = norm.exponent();
  if (p == 1.0) return abs_sum(v);
  if (p == 2.0) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

Point norm_subgradient(const NormSpec& norm, const Point& v) {
  Point g(v.size(), 0.0);
  if (norm.is_infinity()) {
    const double m = abs_max(v);
    if (m == 0.0) return g;
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (std::abs(v[k]) == m) {
        g[k] = v[k] > 0.0 ? 1.0 : -1.0;
        return g;
      }
    }
    return g;
  }
  const double p = norm.exponent();
  if (p == 1.0) {
    for (std::size_t k = 0; k < v.size(); ++k) {
      if (v[k] > 0.0) g[k] = 1.0;
      else if (v[k] < 0.0) g[k] = -1.0;
    }
    return g;
  }
  const double value = norm_value(norm, v);
  if (value == 0.0) return g;
  for (std::size_t k = 0; k < v.size(); ++k) {
    if (v[k] == 0.0) continue;
    const double mag = std::pow(std::abs(v[k]) / value, p - 1.0);
    g[k] = v[k] > 0.0 ? mag : -mag;
  }
  return g;
}

namespace {

/// Euclidean projection of y onto { z : ||z||_1 <= r } (Duchi et al. 2008).
Point project_l1(const Point& y, double r) {
  if (abs_sum(y) <= r) return y;
  std::vector<double> mags(y.size());
  for (std::size_t k = 0; k < y.size(); ++k) mags[k] = std::abs(y[k]);
  std::sort(mags.begin(), mags.end(), std::greater<double>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < mags.size(); ++j) {
    cumulative += mags[j];
    const double candidate = (cumulative - r) / static_cast<double>(j + 1);
    if (mags[j] - candidate > 0.0) theta = candidate;
  }
  Point z(y.size(), 0.0);
  for (std::size_t k = 0; k < y.size(); ++k) {
    const double m = std::abs(y[k]) - theta;
    if (m > 0.0) z[k] = y[k] > 0.0 ? m : -m;
  }
  return z;
}

}  // namespace

Point project_to_ball(const Point& x, const Neighborhood& ball) {
  if (x.size() != ball.center.size()) {
    throw ValidationError("project_to_ball: point dimension " +
                          std::to_string(x.size()) + " != ball dimension " +
                          std::to_string(ball.center.size()));
  }
  if (ball.radius == 0.0) return ball.center;
  Point d(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) d[k] = x[k] - ball.center[k];

  if (ball.norm.is_infinity()) {
    Point out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
      out[k] = ball.center[k] + std::clamp(d[k], -ball.radius, ball.radius);
    return out;
  }
  const double p = ball.norm.exponent();
  if (p == 2.0) {
    const double len = norm_value(ball.norm, d);
    if (len <= ball.radius) return x;
    const double scale = ball.radius / len;
    Point out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k)
      out[k] = ball.center[k] + scale * d[k];
    return out;
  }
  if (p == 1.0) {
    const Point z = project_l1(d, ball.radius);
    Point out(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) out[k] = ball.center[k] + z[k];
    return out;
  }
  throw ValidationError("project_to_ball: ball norm " + ball.norm.to_string() +
                        " is not supported (use 1, 2, or inf)");
}

bool contains(const Neighborhood& ball, const Point& x, double slack) {
  Point d(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) d[k] = x[k] - ball.center[k];
  return norm_value(ball.norm, d) <= ball.radius + slack;
}

DistanceInterval distance_interval(const Point& a, const Neighborhood& ball,
                                   const NormSpec& nu) {
  if (a.size() != ball.center.size()) {
    throw ValidationError("distance_interval: dimension mismatch");
  }
  const std::size_t dim = a.size();
  Point diff(dim);
  for (std::size_t k = 0; k < dim; ++k) diff[k] = a[k] - ball.center[k];
  const double r = ball.radius;

  if (r == 0.0) {
    const double g = norm_value(nu, diff);
    return {g, g};
  }
  if (ball.norm == nu) {
    const double g = norm_value(nu, diff);
    return {std::max(0.0, g - r), g + r};
  }
  if (ball.norm.is_infinity()) {
    // Coordinates vary independently inside a box, so both envelope points
    // are attained coordinate-wise: this case is exact for every nu.
    Point lo(dim), hi(dim);
    for (std::size_t k = 0; k < dim; ++k) {
      lo[k] = std::max(0.0, std::abs(diff[k]) - r);
      hi[k] = std::abs(diff[k]) + r;
    }
    return {norm_value(nu, lo), norm_value(nu, hi)};
  }

  DistanceInterval out{0.0, std::numeric_limits<double>::infinity()};
  bool have_lo = false;

  if (ball.norm.exponent() == 1.0) {
    // The cross-polytope has 2*dim vertices; a norm maximum over a polytope
    // is attained at a vertex, so the upper bound is exact.
    double worst = 0.0;
    Point probe(diff);
    for (std::size_t k = 0; k < dim; ++k) {
      for (const double s : {r, -r}) {
        probe[k] = diff[k] - s;
        worst = std::max(worst, norm_value(nu, probe));
      }
      probe[k] = diff[k];
    }
    out.hi = worst;
    if (nu.exponent() == 2.0) {
      // Euclidean projection onto the l1 ball realizes the closest point.
      const Point z = project_l1(diff, r);
      Point gap(dim);
      for (std::size_t k = 0; k < dim; ++k) gap[k] = diff[k] - z[k];
      out.lo = norm_value(nu, gap);
      have_lo = true;
    }
  }

  // Conservative envelope via norm equivalence: every point of the ball is
  // within r * dim^max(0, 1/nu - 1/tau) of the center in the nu norm.
  const double inv_nu = nu.is_infinity() ? 0.0 : 1.0 / nu.exponent();
  const double inv_tau =
      ball.norm.is_infinity() ? 0.0 : 1.0 / ball.norm.exponent();
  const double scale =
      std::pow(static_cast<double>(dim), std::max(0.0, inv_nu - inv_tau));
  const double g = norm_value(nu, diff);
  const double reach = r * scale;
  if (!have_lo) out.lo = std::max(0.0, g - reach);
  out.hi = std::min(out.hi, g + reach);
  return out;
}

BoundsMatrix compute_bounds(const std::vector<Point>& sites,
                            const std::vector<Neighborhood>& balls,
                            const NormSpec& nu) {
  if (sites.size() != balls.size()) {
    throw ValidationError("compute_bounds: " + std::to_string(sites.size()) +
                          " sites but " + std::to_string(balls.size()) +
                          " neighborhoods");
  }
  const std::size_t n = sites.size();
  BoundsMatrix bounds(n);
  parallel_for(0, n, 8, [&](std::size_t i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;  // self-assignment costs exactly zero
      const DistanceInterval iv = distance_interval(sites[i], balls[j], nu);
      bounds.lo(i, j) = iv.lo;
      bounds.hi(i, j) = iv.hi;
    }
  });
  return bounds;
}

}  // namespace ompn
