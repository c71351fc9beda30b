#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <queue>
#include <stdexcept>
#include <vector>

#include "percsim/estimate.hpp"
#include "percsim/geometry.hpp"
#include "percsim/parallel.hpp"
#include "percsim/rng.hpp"
#include "percsim/window.hpp"

namespace percsim {

// All stabilization radii are almost surely finite when the appetite is
// strictly below 2^-d; nothing here is meaningful outside that range.
inline void check_appetite(double alpha, int d) {
  check_dimension(d);
  if (!(alpha > 0.0 && alpha < std::pow(2.0, -d)))
    throw std::invalid_argument(
        "appetite must lie strictly inside (0, 2^-d)");
}

inline double chernoff_g(double x) { return (x - 1.0 - std::log(x)) / x; }

inline double chernoff_h(double x) {
  return x * x / (1.0 - x) * chernoff_g(x);
}

// exp(h(sqrt(alpha 2^d))) * exp(-omega_d r^d g(sqrt(alpha 2^d))), an upper
// bound for P(2 R(0, chi u {0}) > r); vacuous (>1) for small r.
inline double chernoff_bound(double alpha, int d, double r) {
  check_appetite(alpha, d);
  const double x = std::sqrt(alpha * std::pow(2.0, d));
  return std::exp(chernoff_h(x)) *
         std::exp(-unit_ball_volume(d) * std::pow(r, d) * chernoff_g(x));
}

// Radius at which the Chernoff bound drops below `target`.
inline double chernoff_clip_radius(double alpha, int d, double target) {
  check_appetite(alpha, d);
  if (!(target > 0.0 && target < 1.0))
    throw std::invalid_argument("chernoff_clip_radius: target must be in (0,1)");
  const double x = std::sqrt(alpha * std::pow(2.0, d));
  const double e = (chernoff_h(x) - std::log(target)) /
                   (unit_ball_volume(d) * chernoff_g(x));
  return std::pow(e, 1.0 / d);
}

struct StabilizationResult {
  double radius = kInf;
  bool exhausted = false;  // scan left the region where chi is known
};

// R(a, chi): minimal r with |B(0,r)| in alpha*N and
// alpha * card(chi cap closed B(a, 2r)) = |B(a, r)|. Only radii r_k with
// omega_d r_k^d = k alpha can realize the minimum, so the scan walks k
// against the sorted neighbor distances. `scan_radius` is how far from `a`
// the point set is known; past it the result cannot be certified.
inline StabilizationResult stabilization_radius_capped(
    const Vec& a, const std::vector<Vec>& chi, double alpha, int d,
    double scan_radius) {
  check_appetite(alpha, d);
  std::vector<double> dists;
  dists.reserve(chi.size());
  bool self_seen = false;
  for (const Vec& p : chi) {
    const double dd = dist(p, a, d);
    if (dd == 0.0) self_seen = true;
    dists.push_back(dd);
  }
  if (!self_seen)
    throw std::invalid_argument("stabilization_radius: a must belong to chi");
  std::sort(dists.begin(), dists.end());
  const double omega = unit_ball_volume(d);
  for (std::size_t k = 1; k <= dists.size(); ++k) {
    const double r_k = std::pow(static_cast<double>(k) * alpha / omega, 1.0 / d);
    if (2.0 * r_k > scan_radius) return {kInf, true};
    const auto card = static_cast<std::size_t>(
        std::upper_bound(dists.begin(), dists.end(), 2.0 * r_k) - dists.begin());
    if (card <= k) return {r_k, false};
  }
  return {kInf, true};
}

inline double stabilization_radius(const Vec& a, const std::vector<Vec>& chi,
                                   double alpha, int d,
                                   double scan_radius = kInf) {
  const StabilizationResult res =
      stabilization_radius_capped(a, chi, alpha, d, scan_radius);
  if (res.exhausted)
    throw std::runtime_error(
        "stabilization_radius: scan range exhausted (window too small)");
  return res.radius;
}

// One realization of the marriage pipeline: centers in an extended box so
// that every center of the padded analysis box has a certified scan range.
struct MarriageRealization {
  int d = 2;
  double alpha = 0.1;
  double lambda = 1.0;
  Window window;
  double ext_half_width = 0.0;
  std::vector<Vec> chi;          // all centers in the extended box
  std::vector<double> two_R;     // per center; kInf where the scan exhausted
  std::uint64_t seed = 0;
  std::uint64_t exhausted_count = 0;
};

inline MarriageRealization sample_marriage(double lambda, double alpha,
                                           const Window& window,
                                           std::uint64_t seed,
                                           double tail_target = 1e-8) {
  check_appetite(alpha, window.d);
  MarriageRealization out;
  out.d = window.d;
  out.alpha = alpha;
  out.lambda = lambda;
  out.window = window;
  out.seed = seed;
  const double clip = chernoff_clip_radius(alpha, window.d, tail_target);
  out.ext_half_width = window.padded_half_width() + clip;
  Rng rng(seed);
  const double vol = std::pow(2.0 * out.ext_half_width, window.d);
  const std::uint64_t n = rng.poisson(lambda * vol);
  out.chi.reserve(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    Vec p{};
    for (int k = 0; k < window.d; ++k)
      p[k] = rng.uniform(-out.ext_half_width, out.ext_half_width);
    out.chi.push_back(p);
  }
  out.two_R.assign(out.chi.size(), kInf);
  for (std::size_t i = 0; i < out.chi.size(); ++i) {
    double scan = kInf;
    for (int k = 0; k < window.d; ++k)
      scan = std::min(scan, out.ext_half_width - std::abs(out.chi[i][k]));
    const StabilizationResult r =
        stabilization_radius_capped(out.chi[i], out.chi, alpha, window.d, scan);
    if (r.exhausted)
      ++out.exhausted_count;
    else
      out.two_R[i] = 2.0 * r.radius;
  }
  return out;
}

// Derived Boolean-type process {(a, 2R(a, chi))} restricted to the padded
// box. Centers whose scan exhausted are an error: the caller sized the
// window, so the failure must surface with the offending center.
inline BallConfiguration domination_config(const MarriageRealization& real) {
  BallConfiguration out;
  out.window = real.window;
  out.generator_seed = real.seed;
  const double w_pad = real.window.padded_half_width();
  double max_r = 0.0;
  for (std::size_t i = 0; i < real.chi.size(); ++i) {
    if (sup_norm(real.chi[i], real.d) > w_pad) continue;
    if (real.two_R[i] == kInf)
      throw std::runtime_error(
          "domination_config: stabilization scan exhausted for a center "
          "inside the padded box; enlarge the window or the tail target");
    MarkedPoint p;
    p.center = real.chi[i];
    p.radius = real.two_R[i];
    out.points.push_back(p);
    max_r = std::max(max_r, p.radius);
  }
  const double clip = real.ext_half_width - w_pad;
  out.truncation.r_max = std::max(clip, max_r);
  out.truncation.omitted_intersection_bound = std::min(
      1.0, real.lambda * std::pow(2.0 * w_pad, real.d) *
               chernoff_bound(real.alpha, real.d, clip));
  return out;
}

struct PalmTailCurve {
  std::vector<double> r_grid;
  std::vector<EstimateWithCI> tail;     // per grid point, P(2R > r)
  std::vector<double> chernoff;         // matching bound values
  double window_half_width = 0.0;
  std::uint64_t exhausted = 0;          // counted as exceedances everywhere
};

// Empirical Palm tail of the derived radius measure: per replica, sample chi
// Poisson(1), adjoin the origin, compute 2R(0, chi u {0}) and tally
// exceedances over the grid.
inline PalmTailCurve palm_tail_estimate(double alpha, int d,
                                        std::vector<double> r_grid,
                                        std::uint64_t replicas,
                                        std::uint64_t seed, int workers = 0,
                                        double confidence = 0.95,
                                        double tail_target = 1e-6) {
  check_appetite(alpha, d);
  std::sort(r_grid.begin(), r_grid.end());
  PalmTailCurve out;
  out.r_grid = r_grid;
  out.window_half_width =
      std::max(chernoff_clip_radius(alpha, d, tail_target),
               r_grid.empty() ? 0.0 : r_grid.back());
  const double w = out.window_half_width;

  struct Replica {
    double two_R = kInf;  // kInf marks an exhausted scan
  };
  auto one = [&](std::size_t k) -> Replica {
    Rng rng(derive_stream(seed, k));
    const double vol = std::pow(2.0 * w, d);
    const std::uint64_t n = rng.poisson(vol);
    std::vector<Vec> chi;
    chi.reserve(n + 1);
    chi.push_back(Vec{});
    for (std::uint64_t i = 0; i < n; ++i) {
      Vec p{};
      for (int j = 0; j < d; ++j) p[j] = rng.uniform(-w, w);
      chi.push_back(p);
    }
    const StabilizationResult r =
        stabilization_radius_capped(Vec{}, chi, alpha, d, w);
    Replica rep;
    if (!r.exhausted) rep.two_R = 2.0 * r.radius;
    return rep;
  };
  const std::vector<Replica> reps =
      run_replicas<Replica>(replicas, workers, one);

  for (double r : r_grid) {
    std::uint64_t exceed = 0;
    for (const Replica& rep : reps)
      if (rep.two_R > r) ++exceed;
    out.tail.push_back(wilson_estimate(exceed, replicas, confidence));
    out.chernoff.push_back(chernoff_bound(alpha, d, r));
  }
  for (const Replica& rep : reps)
    if (rep.two_R == kInf) ++out.exhausted;
  return out;
}

// Discretized stable allocation. Cells are the centers of an eps-grid over
// [-half_width, half_width]^d; each center may hold at most
// floor(alpha / eps^d) cells.
struct AllocationGrid {
  int d = 2;
  double eps = 0.0;
  double half_width = 0.0;
  std::int64_t n_side = 0;
  std::size_t quota = 0;
  std::vector<std::int32_t> assignment;       // flat cell -> center or -1
  std::vector<std::uint32_t> claimed_cells;   // per center
  std::vector<double> max_territory_radius;   // per center, cell-center dist

  std::size_t cell_count() const { return assignment.size(); }

  Vec cell_center(std::size_t flat) const {
    Vec v{};
    std::size_t rest = flat;
    for (int k = d - 1; k >= 0; --k) {
      const auto i = static_cast<std::int64_t>(rest % n_side);
      rest /= n_side;
      v[k] = -half_width + (i + 0.5) * eps;
    }
    return v;
  }

  double claimed_volume(std::size_t center) const {
    return static_cast<double>(claimed_cells[center]) * std::pow(eps, d);
  }

  bool sated(std::size_t center) const {
    return claimed_cells[center] == quota;
  }
};

namespace detail {

struct CellCandidate {
  double dist2;
  std::size_t flat;
  bool operator<(const CellCandidate& o) const {
    return dist2 != o.dist2 ? dist2 < o.dist2 : flat < o.flat;
  }
};

// cells with center-distance in (r_lo, r_hi] of p, sorted by distance
inline std::vector<CellCandidate> cells_in_annulus(const AllocationGrid& g,
                                                   const Vec& p, double r_lo,
                                                   double r_hi) {
  std::vector<CellCandidate> out;
  std::int64_t lo[kMaxDim] = {0, 0, 0}, hi[kMaxDim] = {0, 0, 0};
  for (int k = 0; k < g.d; ++k) {
    lo[k] = std::max<std::int64_t>(
        0, static_cast<std::int64_t>((p[k] - r_hi + g.half_width) / g.eps) - 1);
    hi[k] = std::min<std::int64_t>(
        g.n_side - 1,
        static_cast<std::int64_t>((p[k] + r_hi + g.half_width) / g.eps) + 1);
  }
  const double lo2 = r_lo * r_lo, hi2 = r_hi * r_hi;
  std::int64_t idx[kMaxDim] = {0, 0, 0};
  auto visit = [&](auto&& self, int k, std::size_t base) -> void {
    if (k == g.d) {
      Vec c{};
      for (int j = 0; j < g.d; ++j)
        c[j] = -g.half_width + (idx[j] + 0.5) * g.eps;
      const double d2 = dist2(c, p, g.d);
      if (d2 > lo2 && d2 <= hi2) out.push_back({d2, base});
      return;
    }
    for (idx[k] = lo[k]; idx[k] <= hi[k]; ++idx[k])
      self(self, k + 1, base * static_cast<std::size_t>(g.n_side) +
                            static_cast<std::size_t>(idx[k]));
  };
  visit(visit, 0, 0);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

// Deferred acceptance with centers proposing in increasing cell distance.
// Cell preferences and center preferences are both ruled by the same
// distance, ties broken by index, so the stable outcome is unique and the
// single-threaded proposal order is just the deterministic route to it.
inline AllocationGrid stable_allocation_grid(const std::vector<Vec>& chi,
                                             double alpha, int d,
                                             double half_width, double eps) {
  check_appetite(alpha, d);
  if (!(eps > 0.0)) throw std::invalid_argument("allocation: eps must be > 0");
  const double quota_real = alpha / std::pow(eps, d);
  if (quota_real < 10.0)
    throw std::invalid_argument(
        "allocation: alpha/eps^d must be at least 10 cells (resolution guard)");
  AllocationGrid g;
  g.d = d;
  g.eps = eps;
  g.half_width = half_width;
  g.n_side = static_cast<std::int64_t>(std::round(2.0 * half_width / eps));
  if (g.n_side < 1) throw std::invalid_argument("allocation: empty grid");
  g.quota = static_cast<std::size_t>(std::floor(quota_real + 1e-9));
  std::size_t cells = 1;
  for (int k = 0; k < d; ++k) cells *= static_cast<std::size_t>(g.n_side);
  g.assignment.assign(cells, -1);
  g.claimed_cells.assign(chi.size(), 0);
  g.max_territory_radius.assign(chi.size(), 0.0);

  struct CenterState {
    std::vector<detail::CellCandidate> candidates;
    std::size_t cursor = 0;
    double cap = 0.0;
  };
  std::vector<CenterState> st(chi.size());
  const double base_cap =
      1.5 * std::pow(static_cast<double>(g.quota) * std::pow(eps, d) /
                         unit_ball_volume(d),
                     1.0 / d) +
      2.0 * eps;

  std::vector<double> assigned_d2(cells, 0.0);
  // LIFO order; any order reaches the same allocation
  std::vector<std::uint32_t> active;
  for (std::uint32_t c = 0; c < chi.size(); ++c) {
    st[c].cap = base_cap;
    st[c].candidates = detail::cells_in_annulus(g, chi[c], -1.0, base_cap);
    active.push_back(c);
  }
  const double grid_diag = 2.0 * half_width * std::sqrt(static_cast<double>(d));
  while (!active.empty()) {
    const std::uint32_t c = active.back();
    if (g.claimed_cells[c] == g.quota) {
      active.pop_back();
      continue;
    }
    CenterState& s = st[c];
    if (s.cursor == s.candidates.size()) {
      if (s.cap >= grid_diag) {
        active.pop_back();  // grid exhausted, center stays unsated
        continue;
      }
      const double new_cap = std::min(grid_diag, s.cap * 1.5 + eps);
      s.candidates = detail::cells_in_annulus(g, chi[c], s.cap, new_cap);
      s.cap = new_cap;
      s.cursor = 0;
      continue;
    }
    const detail::CellCandidate cand = s.candidates[s.cursor++];
    const std::int32_t incumbent = g.assignment[cand.flat];
    bool wins = incumbent < 0;
    if (!wins) {
      const double inc_d2 = assigned_d2[cand.flat];
      wins = cand.dist2 < inc_d2 ||
             (cand.dist2 == inc_d2 &&
              c < static_cast<std::uint32_t>(incumbent));
    }
    if (wins) {
      if (incumbent >= 0) {
        --g.claimed_cells[incumbent];
        active.push_back(static_cast<std::uint32_t>(incumbent));
      }
      g.assignment[cand.flat] = static_cast<std::int32_t>(c);
      assigned_d2[cand.flat] = cand.dist2;
      ++g.claimed_cells[c];
    }
  }
  for (std::size_t flat = 0; flat < cells; ++flat) {
    const std::int32_t c = g.assignment[flat];
    if (c < 0) continue;
    g.max_territory_radius[c] = std::max(
        g.max_territory_radius[c],
        dist(g.cell_center(flat), chi[static_cast<std::size_t>(c)], d));
  }
  return g;
}

struct ContainmentViolation {
  std::uint32_t center = 0;
  std::size_t cell = 0;
  double cell_distance = 0.0;
  double allowed = 0.0;
};

// Cells allocated to a center must sit inside B(a, R(a,chi)) up to the
// eps*sqrt(d) grid slack. Only centers whose slack ball is certifiably
// inside the gridded region are judged.
inline std::vector<ContainmentViolation> check_containment(
    const AllocationGrid& grid, const std::vector<Vec>& chi,
    const std::vector<double>& two_R, double judge_half_width) {
  if (chi.size() != two_R.size() || chi.size() != grid.claimed_cells.size())
    throw std::invalid_argument(
        "check_containment: allocation and domination process disagree on chi");
  std::vector<ContainmentViolation> out;
  const double slack = grid.eps * std::sqrt(static_cast<double>(grid.d));
  for (std::size_t flat = 0; flat < grid.cell_count(); ++flat) {
    const std::int32_t c = grid.assignment[flat];
    if (c < 0) continue;
    const auto ci = static_cast<std::size_t>(c);
    if (sup_norm(chi[ci], grid.d) > judge_half_width) continue;
    const double R = two_R[ci] / 2.0;
    const double allowed = R + slack;
    const double dd = dist(grid.cell_center(flat), chi[ci], grid.d);
    if (dd > allowed + 1e-12)
      out.push_back({static_cast<std::uint32_t>(ci), flat, dd, allowed});
  }
  return out;
}

// Exhaustive unstable-pair scan at the given margin: a pair (cell, center)
// counts when the cell strictly prefers the center and the center strictly
// covets the cell, both by more than `margin`.
inline std::size_t count_unstable_pairs(const AllocationGrid& grid,
                                        const std::vector<Vec>& chi,
                                        double margin) {
  std::size_t bad = 0;
  std::vector<double> cell_dist(grid.cell_count(), kInf);
  for (std::size_t flat = 0; flat < grid.cell_count(); ++flat)
    if (grid.assignment[flat] >= 0)
      cell_dist[flat] = dist(grid.cell_center(flat),
                             chi[static_cast<std::size_t>(grid.assignment[flat])],
                             grid.d);
  for (std::uint32_t c = 0; c < chi.size(); ++c) {
    const bool sated = grid.sated(c);
    // a sated center covets nothing at or beyond its farthest held cell
    const double covet_reach =
        sated ? grid.max_territory_radius[c] - margin : kInf;
    if (covet_reach <= 0.0) continue;
    const auto cands = detail::cells_in_annulus(
        grid, chi[c], -1.0,
        std::min(covet_reach, 2.0 * grid.half_width *
                                  std::sqrt(static_cast<double>(grid.d))));
    for (const auto& cand : cands) {
      if (grid.assignment[cand.flat] == static_cast<std::int32_t>(c)) continue;
      const double d_new = std::sqrt(cand.dist2);
      if (sated && d_new >= grid.max_territory_radius[c] - margin) continue;
      if (d_new < cell_dist[cand.flat] - margin) ++bad;
    }
  }
  return bad;
}

}  // namespace percsim
