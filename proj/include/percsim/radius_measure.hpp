#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "percsim/geometry.hpp"

namespace percsim {

// a^(-n) and a^(nd) by repeated multiplication, so every consumer of the
// same (a, n) sees the same double.
inline double inv_scale_pow(double a, int n) {
  double s = 1.0;
  for (int i = 0; i < n; ++i) s /= a;
  return s;
}

inline double scale_mass_pow(double a, int d, int n) {
  double ad = 1.0;
  for (int i = 0; i < d; ++i) ad *= a;
  double s = 1.0;
  for (int i = 0; i < n; ++i) s *= ad;
  return s;
}

struct Atom {
  double r;
  double mass;
};

enum class MeasureKind { atoms, pareto, empirical };

// Locally finite measure on (0, inf). Three concrete kinds:
//   atoms      finite list of point masses
//   pareto     density mass*gamma*r0^gamma * b^(-gamma-1) on [r0, inf)
//   empirical  weighted sample, same machinery as atoms
class RadiusMeasure {
 public:
  static RadiusMeasure atoms(std::vector<Atom> a) {
    return from_atoms(std::move(a), MeasureKind::atoms);
  }

  static RadiusMeasure dirac(double r, double mass = 1.0) {
    return atoms({{r, mass}});
  }

  static RadiusMeasure pareto(double gamma, double r0, double mass) {
    if (!(gamma > 0.0)) throw std::invalid_argument("pareto: gamma must be > 0");
    if (!(r0 > 0.0)) throw std::invalid_argument("pareto: r0 must be > 0");
    if (!(mass >= 0.0)) throw std::invalid_argument("pareto: mass must be >= 0");
    RadiusMeasure m;
    m.kind_ = MeasureKind::pareto;
    m.gamma_ = gamma;
    m.r0_ = r0;
    m.mass_ = mass;
    return m;
  }

  static RadiusMeasure empirical(const std::vector<double>& samples,
                                 const std::vector<double>& weights) {
    if (samples.size() != weights.size())
      throw std::invalid_argument("empirical: samples/weights size mismatch");
    std::vector<Atom> a;
    a.reserve(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
      a.push_back({samples[i], weights[i]});
    return from_atoms(std::move(a), MeasureKind::empirical);
  }

  MeasureKind kind() const { return kind_; }
  bool is_atomic() const { return kind_ != MeasureKind::pareto; }
  const std::vector<Atom>& atom_list() const { return atoms_; }
  double pareto_gamma() const { return gamma_; }
  double pareto_r0() const { return r0_; }
  bool total_mass_finite() const { return true; }

  double total_mass() const {
    if (is_atomic()) {
      double s = 0.0;
      for (const Atom& a : atoms_) s += a.mass;
      return s;
    }
    return mass_;
  }

  // smallest / largest radius carrying mass (min_support of pareto is r0,
  // max_support is +inf)
  double min_support() const {
    if (is_atomic()) return atoms_.empty() ? kInf : atoms_.front().r;
    return r0_;
  }

  double max_support() const {
    if (is_atomic()) return atoms_.empty() ? 0.0 : atoms_.back().r;
    return mass_ > 0.0 ? kInf : 0.0;
  }

  // mu([r, inf))
  double tail_mass(double r) const {
    if (!(r > 0.0)) throw std::invalid_argument("tail_mass: r must be > 0");
    if (is_atomic()) {
      double s = 0.0;
      for (auto it = atoms_.rbegin(); it != atoms_.rend() && it->r >= r; ++it)
        s += it->mass;
      return s;
    }
    if (r <= r0_) return mass_;
    return mass_ * std::pow(r / r0_, -gamma_);
  }

  // mu((r, inf))
  double tail_mass_open(double r) const {
    double t = tail_mass(r);
    if (is_atomic()) t -= mass_at(r);
    return t;
  }

  // mu([lo, hi]), closed interval
  double mass_in(double lo, double hi) const {
    if (lo > hi) return 0.0;
    if (is_atomic()) {
      double s = 0.0;
      for (const Atom& a : atoms_) {
        if (a.r > hi) break;
        if (a.r >= lo) s += a.mass;
      }
      return s;
    }
    if (hi == kInf) return tail_mass(std::max(lo, r0_ * 0.5));
    const double a = std::max(lo, r0_);
    if (a > hi) return 0.0;
    return tail_mass(a) - tail_mass(hi);
  }

  double mass_at(double r) const {
    if (!is_atomic()) return 0.0;
    double s = 0.0;
    auto it = std::lower_bound(
        atoms_.begin(), atoms_.end(), r,
        [](const Atom& a, double v) { return a.r < v; });
    for (; it != atoms_.end() && it->r == r; ++it) s += it->mass;
    return s;
  }

  // pareto density at b (0 outside the support)
  double density(double b) const {
    if (is_atomic()) throw std::logic_error("density: atomic measure");
    if (b < r0_) return 0.0;
    return mass_ * gamma_ * std::pow(r0_, gamma_) * std::pow(b, -gamma_ - 1.0);
  }

 private:
  static RadiusMeasure from_atoms(std::vector<Atom> a, MeasureKind kind) {
    for (const Atom& at : a) {
      if (!(at.r > 0.0))
        throw std::invalid_argument("atoms: radii must be strictly positive");
      if (!(at.mass >= 0.0))
        throw std::invalid_argument("atoms: masses must be nonnegative");
    }
    std::sort(a.begin(), a.end(),
              [](const Atom& x, const Atom& y) { return x.r < y.r; });
    // merge exact duplicates
    std::vector<Atom> merged;
    for (const Atom& at : a) {
      if (!merged.empty() && merged.back().r == at.r)
        merged.back().mass += at.mass;
      else
        merged.push_back(at);
    }
    RadiusMeasure m;
    m.kind_ = kind;
    m.atoms_ = std::move(merged);
    return m;
  }

  MeasureKind kind_ = MeasureKind::atoms;
  std::vector<Atom> atoms_;
  double gamma_ = 0.0, r0_ = 0.0, mass_ = 0.0;
};

enum class MomentStatus { exact, quadrature, divergent, inconclusive };

struct MomentResult {
  double value = 0.0;  // +inf when divergent
  double error = 0.0;  // quadrature error bound, 0 for exact results
  MomentStatus status = MomentStatus::exact;

  bool finite() const {
    return status == MomentStatus::exact || status == MomentStatus::quadrature;
  }
};

namespace detail {

// Improper integral of f over [lo, inf) on dyadic blocks [b, 2b]. Divergence
// is declared when block sums fail to decay geometrically within 40 blocks.
template <class F>
MomentResult integrate_tail_blocks(F&& f, double lo) {
  using boost::math::quadrature::gauss_kronrod;
  constexpr int kMaxBlocks = 40;
  double acc = 0.0, err = 0.0;
  double b = lo;
  double prev = -1.0, ratio = 0.0;
  for (int k = 0; k < kMaxBlocks; ++k) {
    double block_err = 0.0;
    const double block =
        gauss_kronrod<double, 15>::integrate(f, b, 2.0 * b, 10, 1e-12, &block_err);
    acc += block;
    err += block_err;
    if (prev > 0.0 && block > 0.0) ratio = block / prev;
    prev = block;
    b *= 2.0;
    if (block <= 1e-300 || (acc > 0.0 && block < 1e-16 * acc)) {
      // tail already negligible
      return {acc, err + block, MomentStatus::quadrature};
    }
  }
  if (ratio >= 0.999)
    return {kInf, 0.0, MomentStatus::divergent};
  if (ratio > 0.95)
    return {acc, kInf, MomentStatus::inconclusive};
  // geometric extrapolation of the remaining tail
  const double tail = prev * ratio / (1.0 - ratio);
  return {acc + tail, err + tail * 0.5, MomentStatus::quadrature};
}

}  // namespace detail

// integral of b^p * w(b) mu(db) over [lo, hi]; w defaults to 1, log weight
// gives the Theorem-style log moments.
template <class Weight>
MomentResult weighted_moment(const RadiusMeasure& mu, double p, double lo,
                             double hi, Weight&& w) {
  if (!(lo <= hi)) throw std::invalid_argument("moment: lo must be <= hi");
  if (mu.is_atomic()) {
    double s = 0.0;
    for (const Atom& a : mu.atom_list()) {
      if (a.r > hi) break;
      if (a.r >= lo) s += a.mass * std::pow(a.r, p) * w(a.r);
    }
    return {s, 0.0, MomentStatus::exact};
  }
  const double a = std::max(lo, mu.pareto_r0());
  if (a > hi) return {0.0, 0.0, MomentStatus::quadrature};
  auto f = [&](double b) { return std::pow(b, p) * w(b) * mu.density(b); };
  if (hi != kInf) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double v = gauss_kronrod<double, 15>::integrate(f, a, hi, 10, 1e-12, &err);
    return {v, err, MomentStatus::quadrature};
  }
  return detail::integrate_tail_blocks(f, a);
}

// integral of b^p mu(db) over [lo, hi]
inline MomentResult restricted_moment(const RadiusMeasure& mu, double p,
                                      double lo, double hi) {
  return weighted_moment(mu, p, lo, hi, [](double) { return 1.0; });
}

// integral of b^d ln(b) mu(db) over [1, inf)
inline MomentResult log_moment(const RadiusMeasure& mu, int d) {
  return weighted_moment(mu, static_cast<double>(d), 1.0, kInf,
                         [](double b) { return std::log(b); });
}

struct ScaledTailSup {
  double value = 0.0;
  double witness = 0.0;  // radius where the scan attains the value
  bool attained = false;
  bool finite() const { return value != kInf; }
};

// sup over r > 0 of r^d mu([r, inf)). Between atoms the map is increasing in
// r, so for atomic measures the scan over atom radii is exact.
inline ScaledTailSup sup_scaled_tail(const RadiusMeasure& mu, int d) {
  if (d < 1) throw std::invalid_argument("sup_scaled_tail: d must be >= 1");
  if (mu.is_atomic()) {
    const auto& atoms = mu.atom_list();
    ScaledTailSup out;
    double tail = 0.0;
    for (auto it = atoms.rbegin(); it != atoms.rend(); ++it) {
      tail += it->mass;
      const double v = std::pow(it->r, d) * tail;
      if (v >= out.value) {
        out.value = v;
        out.witness = it->r;
        out.attained = true;
      }
    }
    return out;
  }
  const double g = mu.pareto_gamma(), r0 = mu.pareto_r0();
  const double at_r0 = std::pow(r0, d) * mu.total_mass();
  if (g < static_cast<double>(d)) return {kInf, kInf, false};
  // r^d tail = mass * r0^gamma * r^(d-gamma) beyond r0, nonincreasing there
  return {at_r0, r0, true};
}

struct AbisBounds {
  double sup_window = 0.0;  // sup_r r^d mu([r, rho r])
  double sup_tail = 0.0;    // sup_r r^d mu([r, inf))
  double upper_bound = 0.0; // sup_window / (1 - rho^-d)
};

// Candidate maximizers of r^d mu([r, rho r]) for atomic measures are atom
// radii and atom radii divided by rho; membership tests are done with the
// multiplied-out comparison so no division noise leaks in.
inline AbisBounds abis_bounds(const RadiusMeasure& mu, int d, double rho) {
  if (!(rho > 1.0)) throw std::invalid_argument("abis_bounds: rho must be > 1");
  AbisBounds out;
  const ScaledTailSup st = sup_scaled_tail(mu, d);
  out.sup_tail = st.value;
  if (mu.is_atomic()) {
    const auto& atoms = mu.atom_list();
    for (const Atom& cand : atoms) {
      // window [cand.r, rho*cand.r]
      double m1 = 0.0;
      // window [cand.r/rho, cand.r]
      double m2 = 0.0;
      for (const Atom& a : atoms) {
        if (a.r >= cand.r && a.r <= rho * cand.r) m1 += a.mass;
        if (a.r <= cand.r && rho * a.r >= cand.r) m2 += a.mass;
      }
      out.sup_window = std::max(out.sup_window, std::pow(cand.r, d) * m1);
      out.sup_window =
          std::max(out.sup_window, std::pow(cand.r / rho, d) * m2);
    }
  } else if (mu.total_mass() > 0.0) {
    // dense log-grid scan; the map is piecewise monotone so this meets the
    // quadrature-kind tolerance
    const double r0 = mu.pareto_r0();
    const double lo = r0 / rho * 0.999, hi = r0 * 1.001;
    double best = 0.0;
    const int n = 4000;
    for (int i = 0; i <= n; ++i) {
      const double r = lo * std::pow(hi / lo, static_cast<double>(i) / n);
      const double m = mu.tail_mass(std::max(r, r0 * 1e-12)) -
                       mu.tail_mass_open(rho * r);
      best = std::max(best, std::pow(r, d) * m);
    }
    // beyond r0 the window mass is mass*r0^g*(r^-g - (rho r)^-g), and
    // r^d * that is monotone in r; check the r0 endpoint and the tail limit
    const double g = mu.pareto_gamma();
    const double c = mu.total_mass() * std::pow(r0, g);
    const double coeff = c * (1.0 - std::pow(rho, -g));
    if (g < static_cast<double>(d)) {
      out.sup_window = kInf;
      out.upper_bound = kInf;
      out.sup_tail = kInf;
      return out;
    }
    if (g == static_cast<double>(d)) best = std::max(best, coeff);
    best = std::max(best, coeff * std::pow(r0, d - g));
    out.sup_window = best;
  }
  out.upper_bound = out.sup_window / (1.0 - std::pow(rho, -static_cast<double>(d)));
  return out;
}

// Truncation of mu(B) = sum_n a^(nd) nu(a^n B) to n <= N. Exact for atomic
// nu; density bases are not representable in this catalogue and are refused.
inline RadiusMeasure multiscale_measure(const RadiusMeasure& nu, double a,
                                        int d, int depth) {
  if (!(a > 1.0)) throw std::invalid_argument("multiscale: a must be > 1");
  if (depth < 0) throw std::invalid_argument("multiscale: depth must be >= 0");
  if (!nu.is_atomic())
    throw std::invalid_argument(
        "multiscale: base measure must be atomic (atoms or empirical)");
  if (!restricted_moment(nu, d, nu.is_atomic() ? 1e-300 : 0.0, kInf).finite())
    throw std::invalid_argument("multiscale: base d-moment must be finite");
  std::vector<Atom> out;
  out.reserve(nu.atom_list().size() * (depth + 1));
  for (int n = 0; n <= depth; ++n) {
    const double s = inv_scale_pow(a, n);
    const double m = scale_mass_pow(a, d, n);
    for (const Atom& at : nu.atom_list()) out.push_back({at.r * s, at.mass * m});
  }
  return RadiusMeasure::atoms(std::move(out));
}

// Mass omitted on [eps, inf) by the depth-N truncation:
// sum_{n > N} a^(nd) nu([a^n eps, inf)).
inline double multiscale_omitted_tail(const RadiusMeasure& nu, double a, int d,
                                      int depth, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("omitted tail: eps must be > 0");
  if (!nu.is_atomic())
    throw std::invalid_argument("omitted tail: base measure must be atomic");
  const double top = nu.max_support();
  double total = 0.0;
  for (int n = depth + 1;; ++n) {
    const double scaled_eps = eps / inv_scale_pow(a, n);
    if (scaled_eps > top) break;
    total += scale_mass_pow(a, d, n) * nu.tail_mass(scaled_eps);
  }
  return total;
}

enum class ConditionFlag { holds, fails, inconclusive };

inline ConditionFlag flag_of(const MomentResult& m) {
  switch (m.status) {
    case MomentStatus::divergent:
      return ConditionFlag::fails;
    case MomentStatus::inconclusive:
      return ConditionFlag::inconclusive;
    default:
      return ConditionFlag::holds;
  }
}

struct ConditionReport {
  ScaledTailSup sup_scaled_tail;  // A1 quantity
  MomentResult moment_d;          // A2 quantity
  MomentResult moment_d_plus_s;   // A3 quantity (s > 0)
  MomentResult log_moment;        // multiscale subcriticality quantity
  double s = 0.0;
  ConditionFlag a1 = ConditionFlag::holds;
  ConditionFlag a2 = ConditionFlag::holds;
  ConditionFlag a3 = ConditionFlag::holds;
};

inline ConditionReport check_conditions(const RadiusMeasure& mu, int d,
                                        double s = 0.0) {
  if (s < 0.0) throw std::invalid_argument("check_conditions: s must be >= 0");
  ConditionReport rep;
  rep.s = s;
  rep.sup_scaled_tail = sup_scaled_tail(mu, d);
  rep.moment_d = restricted_moment(mu, d, 1.0, kInf);
  rep.moment_d_plus_s =
      s > 0.0 ? restricted_moment(mu, d + s, 1.0, kInf) : rep.moment_d;
  rep.log_moment = log_moment(mu, d);
  rep.a1 = rep.sup_scaled_tail.finite() ? ConditionFlag::holds
                                        : ConditionFlag::fails;
  rep.a2 = flag_of(rep.moment_d);
  rep.a3 = flag_of(rep.moment_d_plus_s);
  return rep;
}

}  // namespace percsim
