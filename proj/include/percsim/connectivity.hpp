#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "percsim/window.hpp"

namespace percsim {

struct RadiusFilter {
  double lo = 0.0;
  double hi = kInf;

  bool contains(double r) const { return r >= lo && r <= hi; }
  static RadiusFilter all() { return {}; }
  static RadiusFilter band(double lo, double hi) { return {lo, hi}; }
};

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n), rank_(n, 0) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];  // path halving
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (rank_[a] < rank_[b]) std::swap(a, b);
    parent_[b] = a;
    if (rank_[a] == rank_[b]) ++rank_[a];
    return true;
  }

  std::size_t size() const { return parent_.size(); }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::uint8_t> rank_;
};

namespace detail {

// Open balls intersect iff center distance < radius sum.
inline bool balls_intersect(const MarkedPoint& a, const MarkedPoint& b, int d) {
  const double s = a.radius + b.radius;
  return dist2(a.center, b.center, d) < s * s;
}

// Uniform grid over an axis box; every ball is inserted into all cells its
// bounding box meets, so intersecting balls always share a cell whatever the
// cell size. Cell size defaults to the max inserted radius.
class CandidateGrid {
 public:
  CandidateGrid(const Vec& lo, const Vec& hi, int d, double cell_size)
      : d_(d), lo_(lo), cell_(std::max(cell_size, 1e-12)) {
    std::size_t total = 1;
    for (int k = 0; k < d_; ++k) {
      const double span = std::max(hi[k] - lo[k], 0.0);
      n_[k] = std::max<std::int64_t>(1, static_cast<std::int64_t>(span / cell_) + 1);
      total *= static_cast<std::size_t>(n_[k]);
      if (total > (std::size_t{1} << 24)) {
        // too many cells: coarsen, correctness does not depend on cell size
        *this = CandidateGrid(lo, hi, d, cell_ * 2.0);
        return;
      }
    }
    cells_.resize(total);
  }

  void insert(std::uint32_t id, const Vec& center, double radius) {
    std::int64_t lo_idx[kMaxDim], hi_idx[kMaxDim];
    for (int k = 0; k < d_; ++k) {
      lo_idx[k] = clampi(cell_index(center[k] - radius, k), k);
      hi_idx[k] = clampi(cell_index(center[k] + radius, k), k);
    }
    walk(0, lo_idx, hi_idx, 0, [&](std::size_t flat) {
      cells_[flat].push_back(id);
    });
  }

  template <class F>
  void for_each_cell(F&& f) const {
    for (const auto& cell : cells_) f(cell);
  }

 private:
  std::int64_t cell_index(double x, int k) const {
    return static_cast<std::int64_t>(std::floor((x - lo_[k]) / cell_));
  }

  std::int64_t clampi(std::int64_t i, int k) const {
    return std::min(std::max<std::int64_t>(i, 0), n_[k] - 1);
  }

  template <class F>
  void walk(int k, const std::int64_t* lo, const std::int64_t* hi,
            std::size_t base, F&& f) {
    if (k == d_) {
      f(base);
      return;
    }
    for (std::int64_t i = lo[k]; i <= hi[k]; ++i)
      walk(k + 1, lo, hi, base * static_cast<std::size_t>(n_[k]) +
                              static_cast<std::size_t>(i), f);
  }

  int d_;
  Vec lo_;
  double cell_;
  std::int64_t n_[kMaxDim] = {1, 1, 1};
  std::vector<std::vector<std::uint32_t>> cells_;
};

// Grid-accelerated union of intersecting balls among `ids` (indices into
// points). Pairs sharing several cells are examined more than once; unite is
// idempotent so only time is spent, never correctness.
inline void unite_intersecting(const std::vector<MarkedPoint>& points,
                               const std::vector<std::uint32_t>& ids, int d,
                               UnionFind& uf) {
  if (ids.size() < 2) return;
  Vec lo = points[ids[0]].center, hi = points[ids[0]].center;
  double max_r = 0.0;
  for (std::uint32_t id : ids) {
    const MarkedPoint& p = points[id];
    for (int k = 0; k < d; ++k) {
      lo[k] = std::min(lo[k], p.center[k]);
      hi[k] = std::max(hi[k], p.center[k]);
    }
    max_r = std::max(max_r, p.radius);
  }
  CandidateGrid grid(lo, hi, d, max_r);
  for (std::size_t pos = 0; pos < ids.size(); ++pos)
    grid.insert(static_cast<std::uint32_t>(pos), points[ids[pos]].center,
                points[ids[pos]].radius);
  grid.for_each_cell([&](const std::vector<std::uint32_t>& cell) {
    for (std::size_t i = 0; i < cell.size(); ++i)
      for (std::size_t j = i + 1; j < cell.size(); ++j) {
        const std::uint32_t a = cell[i], b = cell[j];
        if (uf.find(a) == uf.find(b)) continue;
        if (balls_intersect(points[ids[a]], points[ids[b]], d)) uf.unite(a, b);
      }
  });
}

}  // namespace detail

struct ComponentInfo {
  std::vector<std::uint32_t> members;  // indices into config.points
  Vec bbox_lo{}, bbox_hi{};
  bool boundary_censored = false;  // some member ball reaches the analysis
                                   // box boundary or beyond
  bool contains_origin = false;
};

struct ComponentLabeling {
  std::vector<std::uint32_t> filtered;  // point indices that passed the filter
  std::vector<std::uint32_t> component_of;  // per filtered position
  std::vector<ComponentInfo> components;
};

inline ComponentLabeling build_components(const BallConfiguration& config,
                                          RadiusFilter filter = RadiusFilter::all()) {
  const int d = config.window.d;
  ComponentLabeling out;
  for (std::uint32_t i = 0; i < config.points.size(); ++i)
    if (filter.contains(config.points[i].radius)) out.filtered.push_back(i);

  UnionFind uf(out.filtered.size());
  detail::unite_intersecting(config.points, out.filtered, d, uf);

  std::vector<std::uint32_t> root_to_comp(out.filtered.size(),
                                          UINT32_MAX);
  out.component_of.resize(out.filtered.size());
  const double w = config.window.half_width;
  for (std::size_t pos = 0; pos < out.filtered.size(); ++pos) {
    const std::size_t root = uf.find(pos);
    if (root_to_comp[root] == UINT32_MAX) {
      root_to_comp[root] = static_cast<std::uint32_t>(out.components.size());
      out.components.emplace_back();
    }
    const std::uint32_t c = root_to_comp[root];
    out.component_of[pos] = c;
    ComponentInfo& info = out.components[c];
    const MarkedPoint& p = config.points[out.filtered[pos]];
    if (info.members.empty()) {
      info.bbox_lo = info.bbox_hi = p.center;
    }
    info.members.push_back(out.filtered[pos]);
    for (int k = 0; k < d; ++k) {
      info.bbox_lo[k] = std::min(info.bbox_lo[k], p.center[k] - p.radius);
      info.bbox_hi[k] = std::max(info.bbox_hi[k], p.center[k] + p.radius);
    }
    if (sup_norm(p.center, d) + p.radius >= w) info.boundary_censored = true;
    if (norm(p.center, d) < p.radius) info.contains_origin = true;
  }
  return out;
}

struct OriginComponent {
  std::vector<std::uint32_t> members;
  double m_observed = 0.0;  // sup over member balls of |center| + radius
  bool censored = false;
};

// Balls containing the origin pairwise intersect at 0, so they are already
// one component; merging is a lookup, not extra union work.
inline OriginComponent origin_component(const BallConfiguration& config,
                                        RadiusFilter filter = RadiusFilter::all()) {
  const int d = config.window.d;
  const ComponentLabeling labeling = build_components(config, filter);
  OriginComponent out;
  for (const ComponentInfo& info : labeling.components) {
    if (!info.contains_origin) continue;
    out.members = info.members;
    out.censored = info.boundary_censored;
    for (std::uint32_t id : info.members) {
      const MarkedPoint& p = config.points[id];
      out.m_observed =
          std::max(out.m_observed, norm(p.center, d) + p.radius);
    }
    break;
  }
  return out;
}

// Euclidean diameter of the union of the member balls: the farthest pair of
// boundary points lies on two ball surfaces, so the pair scan is exact.
inline double component_diameter(const BallConfiguration& config,
                                 const std::vector<std::uint32_t>& members) {
  const int d = config.window.d;
  double best = 0.0;
  for (std::size_t i = 0; i < members.size(); ++i) {
    const MarkedPoint& a = config.points[members[i]];
    best = std::max(best, 2.0 * a.radius);
    for (std::size_t j = i + 1; j < members.size(); ++j) {
      const MarkedPoint& b = config.points[members[j]];
      best = std::max(best,
                      dist(a.center, b.center, d) + a.radius + b.radius);
    }
  }
  return best;
}

// Core crossing event: does the component of Sigma(filter) U B(x, beta)
// containing x reach outside B(x, 2 beta)?
//
// Only balls meeting B(x, 2 beta) can influence the outcome, so the padded
// window must contain every center for which such a ball could have been
// sampled; otherwise the evaluation would be silently biased and we refuse.
inline bool crossing_event(const BallConfiguration& config, const Vec& x,
                           double beta, RadiusFilter filter) {
  if (!(beta > 0.0)) throw std::invalid_argument("crossing_event: beta must be > 0");
  const int d = config.window.d;
  double r_cap = std::min(filter.hi, config.truncation.r_max);
  if (r_cap == kInf)
    for (const MarkedPoint& p : config.points)
      r_cap = std::max(r_cap == kInf ? 0.0 : r_cap, p.radius);
  if (r_cap == kInf) r_cap = 0.0;
  const double reach = 2.0 * beta + r_cap;
  const double w_pad = config.window.padded_half_width();
  for (int k = 0; k < d; ++k)
    if (std::abs(x[k]) + reach > w_pad + 1e-9)
      throw std::invalid_argument(
          "crossing_event: padded window must contain B(x, 2*beta + radius "
          "cap); required half-width " +
          std::to_string(std::abs(x[k]) + reach) + ", have " +
          std::to_string(w_pad));

  std::vector<std::uint32_t> relevant;
  for (std::uint32_t i = 0; i < config.points.size(); ++i) {
    const MarkedPoint& p = config.points[i];
    if (!filter.contains(p.radius)) continue;
    const double s = p.radius + 2.0 * beta;
    if (dist2(p.center, x, d) < s * s) relevant.push_back(i);
  }
  if (relevant.empty()) return false;

  // virtual ball B(x, beta) occupies slot `relevant.size()`
  UnionFind uf(relevant.size() + 1);
  const std::size_t virt = relevant.size();
  for (std::size_t pos = 0; pos < relevant.size(); ++pos) {
    const MarkedPoint& p = config.points[relevant[pos]];
    const double s = p.radius + beta;
    if (dist2(p.center, x, d) < s * s) uf.unite(pos, virt);
  }
  detail::unite_intersecting(config.points, relevant, d, uf);

  const std::size_t root = uf.find(virt);
  for (std::size_t pos = 0; pos < relevant.size(); ++pos) {
    const MarkedPoint& p = config.points[relevant[pos]];
    if (dist(p.center, x, d) + p.radius > 2.0 * beta && uf.find(pos) == root)
      return true;
  }
  return false;
}

// G(x, alpha, beta): crossing with radii restricted to [alpha, beta]
inline bool event_G(const BallConfiguration& config, const Vec& x,
                    double alpha, double beta) {
  if (alpha < 0.0) throw std::invalid_argument("event_G: alpha must be >= 0");
  return crossing_event(config, x, beta, RadiusFilter::band(alpha, beta));
}

// G~(beta): crossing with the full radius range
inline bool event_G_tilde(const BallConfiguration& config, double beta) {
  return crossing_event(config, Vec{}, beta, RadiusFilter::all());
}

enum class HVariant { H, H_tilde };

inline bool event_H(const BallConfiguration& config, double rho, double beta,
                    HVariant variant = HVariant::H) {
  if (!(beta > 0.0)) throw std::invalid_argument("event_H: beta must be > 0");
  const int d = config.window.d;
  if (variant == HVariant::H) {
    if (!(rho >= 2.0)) throw std::invalid_argument("event_H: rho must be >= 2");
    const double reach = 3.0 * rho * beta;
    if (reach > config.window.padded_half_width() + 1e-9)
      throw std::invalid_argument(
          "event_H: padded window must contain B(0, 3*rho*beta)");
    for (const MarkedPoint& p : config.points)
      if (p.radius >= beta && p.radius <= rho * beta &&
          norm(p.center, d) < reach)
        return true;
    return false;
  }
  for (const MarkedPoint& p : config.points)
    if (p.radius > beta && norm(p.center, d) < p.radius + 2.0 * beta)
      return true;
  return false;
}

// Finite-window percolation proxy: the origin's component reaches
// |x| >= escape_radius.
inline bool percolation_proxy(const BallConfiguration& config,
                              double escape_radius,
                              RadiusFilter filter = RadiusFilter::all()) {
  if (escape_radius > config.window.half_width)
    throw std::invalid_argument(
        "percolation_proxy: escape_radius must be <= window half-width");
  return origin_component(config, filter).m_observed >= escape_radius;
}

}  // namespace percsim
