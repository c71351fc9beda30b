#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace percsim {

// Monte Carlo proportion with a Wilson score interval. Wilson behaves at
// zero successes, which is where the subcritical regimes live.
struct EstimateWithCI {
  std::uint64_t successes = 0;
  std::uint64_t replicas = 0;
  double point = 0.0;
  double ci_low = 0.0;
  double ci_high = 1.0;
  double confidence = 0.95;
};

inline EstimateWithCI wilson_estimate(std::uint64_t successes,
                                      std::uint64_t replicas,
                                      double confidence = 0.95) {
  if (replicas == 0) throw std::invalid_argument("wilson: replicas == 0");
  if (successes > replicas)
    throw std::invalid_argument("wilson: successes > replicas");
  if (!(confidence > 0.0 && confidence < 1.0))
    throw std::invalid_argument("wilson: confidence must be in (0,1)");
  EstimateWithCI e;
  e.successes = successes;
  e.replicas = replicas;
  e.confidence = confidence;
  const double n = static_cast<double>(replicas);
  const double p = static_cast<double>(successes) / n;
  e.point = p;
  const boost::math::normal_distribution<double> normal;
  const double z = boost::math::quantile(normal, 0.5 + 0.5 * confidence);
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half =
      z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  e.ci_low = std::max(0.0, center - half);
  e.ci_high = std::min(1.0, center + half);
  return e;
}

}  // namespace percsim
