#pragma once

#include <cmath>
#include <memory>
#include <stdexcept>

#include "percsim/radius_measure.hpp"
#include "percsim/rng.hpp"
#include "percsim/window.hpp"

namespace percsim {

// P(some ball with radius above r_max meets the padded box) is at most the
// expected number of such balls; the enlarged-box volume (2w+2r)^d dominates
// the Minkowski sum, so the bound stays valid.
inline double truncation_error(double lambda, const RadiusMeasure& mu,
                               const Window& window, double r_max) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("truncation_error: lambda < 0");
  const double w = window.padded_half_width();
  auto res = weighted_moment(
      mu, 0.0, std::nextafter(r_max, kInf), kInf,
      [&](double r) { return enlarged_box_volume(window.d, w, r); });
  if (!res.finite()) return 1.0;
  // atomic kinds: mass exactly at r_max is kept by the sampler, drop it
  double v = lambda * res.value;
  if (mu.is_atomic()) {
    v = 0.0;
    for (const Atom& a : mu.atom_list())
      if (a.r > r_max)
        v += lambda * a.mass * enlarged_box_volume(window.d, w, a.r);
  }
  return std::min(1.0, v);
}

// Draws radii from the normalized restriction of mu to [r_min, r_max]:
// alias table over atoms, inverse tail transform for the pareto kind.
class RadiusSampler {
 public:
  RadiusSampler(const RadiusMeasure& mu, double r_min, double r_max)
      : mu_(mu), r_min_(r_min), r_max_(r_max) {
    if (!(r_min <= r_max))
      throw std::invalid_argument("radius sampler: r_min > r_max");
    if (mu.is_atomic()) {
      std::vector<double> weights;
      for (const Atom& a : mu.atom_list()) {
        if (a.r >= r_min && a.r <= r_max) {
          values_.push_back(a.r);
          weights.push_back(a.mass);
        }
      }
      restricted_mass_ = 0.0;
      for (double w : weights) restricted_mass_ += w;
      if (restricted_mass_ > 0.0)
        alias_ = std::make_unique<AliasTable>(weights);
    } else {
      if (!(r_min > 0.0) && !(mu.pareto_r0() > 0.0))
        throw std::invalid_argument(
            "radius sampler: measure with infinite mass near 0 needs r_min > 0");
      const double lo = std::max(r_min, mu.pareto_r0());
      tail_lo_ = lo > r_max ? 0.0 : mu.tail_mass(lo);
      tail_hi_ = r_max == kInf ? 0.0 : mu.tail_mass(r_max);
      restricted_mass_ = std::max(0.0, tail_lo_ - tail_hi_);
      lo_ = lo;
    }
  }

  double restricted_mass() const { return restricted_mass_; }

  double sample(Rng& rng) const {
    if (restricted_mass_ <= 0.0)
      throw std::logic_error("radius sampler: empty restriction");
    if (mu_.is_atomic()) return values_[alias_->sample(rng)];
    // invert T(r) = mass*(r/r0)^-gamma between the two tail values
    const double t = tail_hi_ + (tail_lo_ - tail_hi_) * rng.uniform01();
    const double g = mu_.pareto_gamma();
    const double r =
        mu_.pareto_r0() * std::pow(t / mu_.total_mass(), -1.0 / g);
    return std::min(std::max(r, lo_), r_max_);
  }

 private:
  const RadiusMeasure& mu_;
  double r_min_, r_max_, lo_ = 0.0;
  double restricted_mass_ = 0.0;
  double tail_lo_ = 0.0, tail_hi_ = 0.0;
  std::vector<double> values_;
  std::unique_ptr<AliasTable> alias_;
};

// Marked Poisson sample with intensity lambda |.| x mu, radii restricted to
// [r_min, r_max], centers uniform in the padded box. Identical inputs give
// identical output, bit for bit.
inline BallConfiguration sample_poisson_marked(double lambda,
                                               const RadiusMeasure& mu,
                                               const Window& window,
                                               double r_min, double r_max,
                                               std::uint64_t seed) {
  check_dimension(window.d);
  if (!(lambda >= 0.0))
    throw std::invalid_argument("sample_poisson_marked: lambda must be >= 0");
  if (!mu.is_atomic() && !(r_min > 0.0) && mu.pareto_r0() <= 0.0)
    throw std::invalid_argument(
        "sample_poisson_marked: r_min must be positive for measures with "
        "infinite mass near 0");
  BallConfiguration out;
  out.window = window;
  out.generator_seed = seed;
  out.truncation.r_max = r_max;
  out.truncation.omitted_intersection_bound =
      lambda > 0.0 ? truncation_error(lambda, mu, window, r_max) : 0.0;

  RadiusSampler radii(mu, r_min, r_max);
  const double mean = lambda * radii.restricted_mass() * window.padded_volume();
  if (mean <= 0.0) return out;

  Rng rng(seed);
  const std::uint64_t n = rng.poisson(mean);
  out.points.reserve(n);
  const double w = window.padded_half_width();
  for (std::uint64_t i = 0; i < n; ++i) {
    MarkedPoint p;
    for (int k = 0; k < window.d; ++k) p.center[k] = rng.uniform(-w, w);
    p.radius = radii.sample(rng);
    out.points.push_back(p);
  }
  return out;
}

// Union over scales n = 0..depth of a^-n xi_n where each xi_n has intensity
// lambda |.| x nu. Scale n is sampled in the box blown up by a^n and mapped
// back, so its centers land uniformly in the original padded box with the
// a^(nd)-inflated intensity.
inline BallConfiguration sample_multiscale(double lambda,
                                           const RadiusMeasure& nu, double a,
                                           int depth, const Window& window,
                                           std::uint64_t seed) {
  check_dimension(window.d);
  if (!(a > 1.0)) throw std::invalid_argument("sample_multiscale: a must be > 1");
  if (depth < 0)
    throw std::invalid_argument("sample_multiscale: depth must be >= 0");
  if (!restricted_moment(nu, window.d, 1e-300, kInf).finite())
    throw std::invalid_argument("sample_multiscale: nu d-moment must be finite");

  BallConfiguration out;
  out.window = window;
  out.generator_seed = seed;
  out.truncation.r_max = nu.max_support();

  Rng rng(seed);
  RadiusSampler radii(nu, 0.0, kInf);
  if (radii.restricted_mass() <= 0.0 || lambda <= 0.0) return out;
  const double w = window.padded_half_width();
  for (int n = 0; n <= depth; ++n) {
    const double scale = inv_scale_pow(a, n);
    const double blown_volume =
        std::pow(2.0 * w / scale, window.d);
    const std::uint64_t count =
        rng.poisson(lambda * radii.restricted_mass() * blown_volume);
    for (std::uint64_t i = 0; i < count; ++i) {
      MarkedPoint p;
      for (int k = 0; k < window.d; ++k)
        p.center[k] = rng.uniform(-w / scale, w / scale) * scale;
      p.radius = radii.sample(rng) * scale;
      p.scale_index = n;
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace percsim
