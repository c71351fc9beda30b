#pragma once

#include <cstdint>
#include <vector>

#include "percsim/geometry.hpp"

namespace percsim {

// Analysis box [-half_width, half_width]^d; centers are sampled in the
// padded box [-(half_width+padding), half_width+padding]^d so that every
// ball with radius <= padding that can meet the analysis box is present.
struct Window {
  int d = 2;
  double half_width = 1.0;
  double padding = 0.0;

  double padded_half_width() const { return half_width + padding; }
  double padded_volume() const {
    return std::pow(2.0 * padded_half_width(), d);
  }
};

struct MarkedPoint {
  Vec center{};
  double radius = 0.0;
  int scale_index = 0;  // 0 for the plain Boolean model
};

struct Truncation {
  double r_max = kInf;
  // upper bound on P(some ball excluded by the radius cap meets the padded
  // box), clamped to [0, 1]
  double omitted_intersection_bound = 0.0;
};

struct BallConfiguration {
  std::vector<MarkedPoint> points;
  Window window;
  std::uint64_t generator_seed = 0;
  Truncation truncation;
};

}  // namespace percsim
