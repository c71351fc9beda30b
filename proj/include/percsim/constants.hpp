#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "percsim/geometry.hpp"

namespace percsim {

// Finite net K on the sphere of the given radius with S_r subset K + B(0, mesh).
//   d = 1  the two endpoints
//   d = 2  equally spaced circle points, angular step <= 2 asin(mesh / 2r)
//   d = 3  cubic lattice of spacing mesh/(2 sqrt(3)) cut to the spherical
//          shell and projected; lattice cell diagonals bound the covering
inline std::vector<Vec> sphere_net(double radius, int d, double mesh = 1.0) {
  check_dimension(d);
  if (!(radius > 0.0)) throw std::invalid_argument("sphere_net: radius must be > 0");
  if (!(mesh > 0.0)) throw std::invalid_argument("sphere_net: mesh must be > 0");
  std::vector<Vec> net;
  if (d == 1) {
    net.push_back(make_vec(-radius));
    net.push_back(make_vec(radius));
    return net;
  }
  if (d == 2) {
    const double ratio = std::min(1.0, mesh / (2.0 * radius));
    const double step = 2.0 * std::asin(ratio);
    const int n = std::max(1, static_cast<int>(std::ceil(2.0 * M_PI / step)));
    net.reserve(n);
    for (int j = 0; j < n; ++j) {
      const double t = 2.0 * M_PI * j / n;
      net.push_back(make_vec(radius * std::cos(t), radius * std::sin(t)));
    }
    return net;
  }
  const double h = mesh / (2.0 * std::sqrt(3.0));
  const double shell = h * std::sqrt(3.0) / 2.0 + 1e-12;
  const auto m = static_cast<std::int64_t>(std::ceil((radius + shell) / h));
  for (std::int64_t i = -m; i <= m; ++i)
    for (std::int64_t j = -m; j <= m; ++j)
      for (std::int64_t k = -m; k <= m; ++k) {
        const Vec g = make_vec(i * h, j * h, k * h);
        const double n2 = norm(g, 3);
        if (std::abs(n2 - radius) > shell || n2 == 0.0) continue;
        net.push_back(
            make_vec(g[0] * radius / n2, g[1] * radius / n2, g[2] * radius / n2));
      }
  return net;
}

// D1 = |K| |L| with nets on the spheres of radius rho and 2 rho,
// D2 = |B(0,3)|, D3 = |B(0,3 rho)|, and their max with 1.
struct ConstantsBundle {
  int d = 2;
  double rho = 8.0;
  std::vector<Vec> net_K, net_L;
  double omega_d = 0.0;
  double D1 = 0.0, D2 = 0.0, D3 = 0.0, D_tilde = 0.0;
};

inline ConstantsBundle make_constants(int d, double rho) {
  if (!(rho >= 2.0)) throw std::invalid_argument("constants: rho must be >= 2");
  ConstantsBundle c;
  c.d = d;
  c.rho = rho;
  c.net_K = sphere_net(rho, d);
  c.net_L = sphere_net(2.0 * rho, d);
  c.omega_d = unit_ball_volume(d);
  c.D1 = static_cast<double>(c.net_K.size()) * static_cast<double>(c.net_L.size());
  c.D2 = ball_volume(d, 3.0);
  c.D3 = ball_volume(d, 3.0 * rho);
  c.D_tilde = std::max({1.0, c.D1, c.D2, c.D3});
  return c;
}

}  // namespace percsim
