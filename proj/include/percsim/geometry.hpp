#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace percsim {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Points live in dimension d <= kMaxDim; the runtime dimension travels with
// the window/configuration, unused coordinates stay zero.
inline constexpr int kMaxDim = 3;

using Vec = std::array<double, kMaxDim>;

inline Vec make_vec(double x, double y = 0.0, double z = 0.0) {
  return Vec{x, y, z};
}

inline double dot(const Vec& a, const Vec& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a, int d) { return dot(a, a, d); }

inline double norm(const Vec& a, int d) { return std::sqrt(norm2(a, d)); }

inline double dist2(const Vec& a, const Vec& b, int d) {
  double s = 0.0;
  for (int i = 0; i < d; ++i) {
    const double t = a[i] - b[i];
    s += t * t;
  }
  return s;
}

inline double dist(const Vec& a, const Vec& b, int d) {
  return std::sqrt(dist2(a, b, d));
}

inline double sup_norm(const Vec& a, int d) {
  double m = 0.0;
  for (int i = 0; i < d; ++i) m = std::max(m, std::abs(a[i]));
  return m;
}

inline void check_dimension(int d) {
  if (d < 1 || d > kMaxDim)
    throw std::invalid_argument("dimension d must be in [1, " +
                                std::to_string(kMaxDim) + "]");
}

// Volume of the unit Euclidean ball.
inline double unit_ball_volume(int d) {
  check_dimension(d);
  return std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

inline double ball_volume(int d, double r) {
  return unit_ball_volume(d) * std::pow(r, d);
}

// Volume of the axis box of half-width w enlarged so that it contains every
// center whose ball of radius r can meet the box: side L = 2w + 2r.
inline double enlarged_box_volume(int d, double half_width, double r) {
  return std::pow(2.0 * (half_width + r), d);
}

}  // namespace percsim
