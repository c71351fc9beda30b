#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "percsim/connectivity.hpp"
#include "percsim/constants.hpp"
#include "percsim/estimate.hpp"
#include "percsim/marriage.hpp"
#include "percsim/parallel.hpp"
#include "percsim/sampler.hpp"

namespace percsim {

// The three processes the toolkit can drive through the estimators.
struct ModelSpec {
  enum class Kind { boolean, multiscale, marriage };
  Kind kind = Kind::boolean;
  double lambda = 1.0;
  RadiusMeasure measure = RadiusMeasure::dirac(1.0);  // mu, or nu for multiscale
  double a = 2.0;
  int depth = 0;
  double appetite = 0.1;
  double r_min = 0.0;
  double r_max = kInf;

  // spatial independence range constant: Poisson-driven processes decouple
  // at C = 2, the marriage-derived process at C = 7
  double independence_C() const { return kind == Kind::marriage ? 7.0 : 2.0; }
  double zero_covariance_rho() const { return std::max(4.0 * independence_C(), 2.0); }
};

inline BallConfiguration sample_model(const ModelSpec& m, const Window& window,
                                      std::uint64_t seed) {
  switch (m.kind) {
    case ModelSpec::Kind::boolean: {
      double r_max = m.r_max;
      if (r_max == kInf && m.measure.is_atomic()) r_max = m.measure.max_support();
      if (r_max == kInf)
        throw std::invalid_argument(
            "sample_model: r_max is required for measures with unbounded support");
      return sample_poisson_marked(m.lambda, m.measure, window, m.r_min, r_max,
                                   seed);
    }
    case ModelSpec::Kind::multiscale:
      return sample_multiscale(m.lambda, m.measure, m.a, m.depth, window, seed);
    case ModelSpec::Kind::marriage:
      return domination_config(sample_marriage(m.lambda, m.appetite, window, seed));
  }
  throw std::logic_error("sample_model: unreachable");
}

// The paper-side radius measure of a model is lambda * mu; inequality terms
// below always carry the lambda factor.
inline MomentResult model_d_moment(const ModelSpec& m, int d, double lo,
                                   double hi) {
  const RadiusMeasure* mu = &m.measure;
  RadiusMeasure scaled = RadiusMeasure::dirac(1.0);
  if (m.kind == ModelSpec::Kind::multiscale) {
    scaled = multiscale_measure(m.measure, m.a, d, m.depth);
    mu = &scaled;
  }
  MomentResult r = restricted_moment(*mu, static_cast<double>(d), lo, hi);
  r.value *= m.lambda;
  r.error *= m.lambda;
  return r;
}

struct RunParams {
  std::uint64_t replicas = 1000;
  std::uint64_t seed = 1;
  int workers = 0;
  double confidence = 0.95;
};

struct PiEstimate {
  EstimateWithCI estimate;
  double alpha = 0.0;
  double beta = 1.0;
  double truncation_bound = 0.0;
};

// pi(alpha, beta) = P(G(0, alpha, beta)). Radii above beta never enter
// Sigma(alpha, beta), so the effective cap is min(r_max, beta) and the
// estimate carries no truncation error of its own for Poisson models.
inline PiEstimate estimate_pi(const ModelSpec& model, const Window& window,
                              double alpha, double beta, const RunParams& run) {
  if (!(beta > 0.0)) throw std::invalid_argument("estimate_pi: beta must be > 0");
  if (window.half_width + window.padding < 3.0 * beta)
    throw std::invalid_argument(
        "estimate_pi: padded window must cover B(0, 3*beta) (locality region)");
  ModelSpec m = model;
  if (m.kind == ModelSpec::Kind::boolean)
    m.r_max = std::min(m.r_max, beta);
  auto one = [&](std::size_t k) -> std::pair<bool, double> {
    const BallConfiguration cfg =
        sample_model(m, window, derive_stream(run.seed, k));
    return {event_G(cfg, Vec{}, alpha, beta),
            cfg.truncation.omitted_intersection_bound};
  };
  const auto results =
      run_replicas<std::pair<bool, double>>(run.replicas, run.workers, one);
  std::uint64_t successes = 0;
  double trunc = 0.0;
  for (const auto& [hit, bound] : results) {
    successes += hit ? 1 : 0;
    trunc = std::max(trunc, bound);
  }
  PiEstimate out;
  out.alpha = alpha;
  out.beta = beta;
  out.estimate = wilson_estimate(successes, run.replicas, run.confidence);
  out.truncation_bound = m.kind == ModelSpec::Kind::boolean ? 0.0 : trunc;
  return out;
}

// pi~(beta) with its coupled companions: pi(0, beta) and P(M_obs > 2 beta)
// evaluated on the same configurations, so the pathwise inclusions
// {M > 2b} in G~(b) and G(0,0,b) in G~(b) hold replica by replica.
struct PiTildeEstimate {
  EstimateWithCI pi_tilde;
  EstimateWithCI pi_zero;       // pi(0, beta), coupled
  EstimateWithCI m_exceed;      // P(M_obs > 2 beta), coupled
  double beta = 1.0;
  double truncation_bound = 0.0;
  double prop2_integral = 0.0;  // lambda * int_[beta,inf) r^d mu(dr)
  double d_tilde = 1.0;
};

inline PiTildeEstimate estimate_pitilde(const ModelSpec& model,
                                        const Window& window, double beta,
                                        const RunParams& run) {
  if (!(beta > 0.0))
    throw std::invalid_argument("estimate_pitilde: beta must be > 0");
  if (window.half_width + window.padding < 3.0 * beta)
    throw std::invalid_argument(
        "estimate_pitilde: padded window must cover B(0, 3*beta)");
  struct Row {
    bool g_tilde, g_zero, m_exceed;
    double trunc;
  };
  auto one = [&](std::size_t k) -> Row {
    const BallConfiguration cfg =
        sample_model(model, window, derive_stream(run.seed, k));
    Row r{};
    r.g_tilde = event_G_tilde(cfg, beta);
    r.g_zero = event_G(cfg, Vec{}, 0.0, beta);
    const OriginComponent oc = origin_component(cfg);
    r.m_exceed = oc.m_observed > 2.0 * beta;
    r.trunc = cfg.truncation.omitted_intersection_bound;
    return r;
  };
  const auto rows = run_replicas<Row>(run.replicas, run.workers, one);
  std::uint64_t n_tilde = 0, n_zero = 0, n_m = 0;
  double trunc = 0.0;
  for (const Row& r : rows) {
    n_tilde += r.g_tilde;
    n_zero += r.g_zero;
    n_m += r.m_exceed;
    trunc = std::max(trunc, r.trunc);
  }
  PiTildeEstimate out;
  out.beta = beta;
  out.pi_tilde = wilson_estimate(n_tilde, run.replicas, run.confidence);
  out.pi_zero = wilson_estimate(n_zero, run.replicas, run.confidence);
  out.m_exceed = wilson_estimate(n_m, run.replicas, run.confidence);
  out.truncation_bound = trunc;
  out.prop2_integral =
      model_d_moment(model, window.d, beta, kInf).value;
  out.d_tilde = make_constants(window.d, model.zero_covariance_rho()).D_tilde;
  return out;
}

enum class InequalityVerdict {
  satisfied_with_margin,
  satisfied_within_ci,
  violated_beyond_ci,
};

inline const char* to_string(InequalityVerdict v) {
  switch (v) {
    case InequalityVerdict::satisfied_with_margin: return "satisfied-with-margin";
    case InequalityVerdict::satisfied_within_ci: return "satisfied-within-CI";
    case InequalityVerdict::violated_beyond_ci: return "violated-beyond-CI";
  }
  return "?";
}

struct InequalityReport {
  PiEstimate lhs;       // pi(alpha, rho beta)
  PiEstimate rhs_pi;    // pi(alpha, beta)
  double measure_term = 0.0;  // lambda * int_[beta, rho beta] r^d mu(dr)
  double i_plus = 0.0;
  double d_tilde = 1.0;
  double rho = 8.0;
  double rhs_low = 0.0;   // built from the lower-consistent pi(alpha,beta)
  double rhs_high = 0.0;  // built from its upper CI
  InequalityVerdict verdict = InequalityVerdict::satisfied_within_ci;
};

// pi(alpha, rho beta) <= D~ pi(alpha, beta)^2 + D~ * measure term + D~ I+.
// I+ vanishes exactly once rho >= max(4C, 2); estimating it for smaller rho
// is out of scope, so such calls are refused.
inline InequalityReport check_key_inequality(const ModelSpec& model,
                                             const Window& window, double rho,
                                             double alpha, double beta,
                                             const RunParams& run) {
  if (!(rho >= 2.0))
    throw std::invalid_argument("check_key_inequality: rho must be >= 2");
  if (rho < model.zero_covariance_rho())
    throw std::invalid_argument(
        "check_key_inequality: rho below max(4C,2); the decorrelation term "
        "would not vanish and cannot be estimated here");
  if (window.half_width + window.padding < 3.0 * rho * beta)
    throw std::invalid_argument(
        "check_key_inequality: padded window must cover B(0, 3*rho*beta)");
  InequalityReport rep;
  rep.rho = rho;
  rep.d_tilde = make_constants(window.d, rho).D_tilde;
  rep.i_plus = 0.0;

  RunParams lhs_run = run;
  lhs_run.seed = derive_stream(run.seed, 0x10d);
  rep.lhs = estimate_pi(model, window, alpha, rho * beta, lhs_run);

  // pi(alpha, beta) only needs the 3*beta locality region
  Window small = window;
  small.half_width = 3.0 * beta;
  RunParams rhs_run = run;
  rhs_run.seed = derive_stream(run.seed, 0x20d);
  rep.rhs_pi = estimate_pi(model, small, alpha, beta, rhs_run);

  rep.measure_term = model_d_moment(model, window.d, beta, rho * beta).value;

  const double q_low = rep.rhs_pi.estimate.ci_low;
  const double q_high = rep.rhs_pi.estimate.ci_high;
  rep.rhs_low = rep.d_tilde * (q_low * q_low + rep.measure_term + rep.i_plus);
  rep.rhs_high = rep.d_tilde * (q_high * q_high + rep.measure_term + rep.i_plus);
  if (rep.lhs.estimate.ci_high <= rep.rhs_low)
    rep.verdict = InequalityVerdict::satisfied_with_margin;
  else if (rep.lhs.estimate.ci_low > rep.rhs_high)
    rep.verdict = InequalityVerdict::violated_beyond_ci;
  else
    rep.verdict = InequalityVerdict::satisfied_within_ci;
  return rep;
}

// Numeric checks for the recursion f(rho b) <= f(b)^2 + g(b) on the grid
// b_k = beta0 rho^k. Inputs violating the recursion are outside the
// hypothesis and rejected.
struct RecursionCheck {
  bool applicable = false;
  bool holds = false;
};

struct RecursionReport {
  RecursionCheck item1;  // smallness propagates
  RecursionCheck item2;  // f tends to 0
  RecursionCheck item3;  // discrete integral of b^(s-1) f is finite
};

inline RecursionReport analyse_recursion(const std::vector<double>& f,
                                         const std::vector<double>& g,
                                         double rho, double eps, double s,
                                         double beta0 = 1.0) {
  if (f.size() != g.size())
    throw std::invalid_argument("analyse_recursion: f/g size mismatch");
  if (f.size() < 3)
    throw std::invalid_argument("analyse_recursion: need at least 3 grid points");
  if (!(rho > 1.0)) throw std::invalid_argument("analyse_recursion: rho must be > 1");
  if (!(eps > 0.0 && eps <= 1.0))
    throw std::invalid_argument("analyse_recursion: eps must be in (0,1]");
  const std::size_t n = f.size();
  for (std::size_t k = 0; k < n; ++k)
    if (!(f[k] >= 0.0) || !(g[k] >= 0.0))
      throw std::invalid_argument("analyse_recursion: samples must be nonnegative");
  for (std::size_t k = 0; k + 1 < n; ++k)
    if (f[k + 1] > f[k] * f[k] + g[k] + 1e-12)
      throw std::invalid_argument(
          "analyse_recursion: samples violate f(rho b) <= f(b)^2 + g(b)");

  RecursionReport rep;

  // item 1: f <= eps/2 on [b0, rho b0] and g <= eps/4 beyond propagate
  {
    bool applicable = f[0] <= eps / 2.0 + 1e-15 && f[1] <= eps / 2.0 + 1e-15;
    for (double gv : g) applicable = applicable && gv <= eps / 4.0 + 1e-15;
    rep.item1.applicable = applicable;
    if (applicable) {
      bool ok = true;
      for (double fv : f) ok = ok && fv <= eps / 2.0 + 1e-12;
      rep.item1.holds = ok;
    }
  }

  // item 2: once f <= 1/2, each step halves f up to the g forcing, so the
  // grid end must satisfy f_K <= 2^-(K-k0) f_k0 + 2 max g
  {
    std::size_t k0 = n;
    for (std::size_t k = n; k-- > 0;) {
      if (f[k] <= 0.5 + 1e-15)
        k0 = k;
      else
        break;
    }
    rep.item2.applicable = k0 + 2 <= n;  // at least one step available
    if (rep.item2.applicable) {
      double gmax = 0.0;
      for (std::size_t k = k0; k < n; ++k) gmax = std::max(gmax, g[k]);
      const double bound =
          std::ldexp(f[k0], -static_cast<int>(n - 1 - k0)) + 2.0 * gmax;
      rep.item2.holds = f[n - 1] <= bound + 1e-12;
    }
  }

  // item 3: the tail terms of sum b_k^(s-1) f(b_k) (b_{k+1} - b_k) must
  // decay geometrically once the g-sum does
  {
    std::vector<double> bf(n), bg(n);
    double b = beta0;
    for (std::size_t k = 0; k < n; ++k) {
      const double db = b * (rho - 1.0);
      bf[k] = std::pow(b, s - 1.0) * f[k] * db;
      bg[k] = std::pow(b, s - 1.0) * g[k] * db;
      b *= rho;
    }
    auto tail_decays = [&](const std::vector<double>& t) {
      const std::size_t m = std::min<std::size_t>(4, n - 1);
      bool ok = true;
      for (std::size_t k = n - m; k < n; ++k) {
        if (t[k - 1] <= 0.0) {
          ok = ok && t[k] <= 1e-300;
          continue;
        }
        ok = ok && t[k] / t[k - 1] <= 0.95;
      }
      return ok;
    };
    rep.item3.applicable = tail_decays(bg) && f[n - 1] <= 0.5;
    if (rep.item3.applicable) rep.item3.holds = tail_decays(bf);
  }
  return rep;
}

struct ThresholdBracket {
  std::optional<double> lambda_low;
  std::optional<double> lambda_high;
  std::vector<double> lambda_grid;
  std::vector<double> beta_grid;
  // curve[i][j] = pi~ estimate at lambda_grid[i], beta_grid[j]
  std::vector<std::vector<EstimateWithCI>> curve;

  bool conclusive() const {
    return lambda_low && lambda_high && *lambda_low < *lambda_high;
  }
};

// lambda_low: largest grid density whose pi~ curve decays across the beta
// grid (CI-separated ratio < 1/2); lambda_high: smallest density with
// pi~(beta_max) > 1/2 beyond CI.
inline ThresholdBracket bracket_threshold(const ModelSpec& model, int d,
                                          std::vector<double> beta_grid,
                                          std::vector<double> lambda_grid,
                                          const RunParams& run) {
  if (beta_grid.size() < 2)
    throw std::invalid_argument("bracket_threshold: need at least 2 betas");
  if (lambda_grid.empty())
    throw std::invalid_argument("bracket_threshold: empty lambda grid");
  std::sort(beta_grid.begin(), beta_grid.end());
  std::sort(lambda_grid.begin(), lambda_grid.end());
  const double r_cap = model.measure.max_support();
  if (r_cap == kInf)
    throw std::invalid_argument(
        "bracket_threshold: bounded-radius model required");
  Window window;
  window.d = d;
  window.half_width = 3.0 * beta_grid.back();
  window.padding = r_cap;

  ThresholdBracket out;
  out.beta_grid = beta_grid;
  out.lambda_grid = lambda_grid;
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    ModelSpec m = model;
    m.lambda = lambda_grid[i];
    std::vector<EstimateWithCI> row;
    for (std::size_t j = 0; j < beta_grid.size(); ++j) {
      RunParams r = run;
      r.seed = derive_stream(run.seed, i * 1000 + j);
      row.push_back(estimate_pitilde(m, window, beta_grid[j], r).pi_tilde);
    }
    out.curve.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
    const EstimateWithCI& lo_b = out.curve[i].front();
    const EstimateWithCI& hi_b = out.curve[i].back();
    const bool decays = hi_b.ci_high < 0.5 * lo_b.ci_low;
    const bool blows = hi_b.ci_low > 0.5;
    if (decays) out.lambda_low = lambda_grid[i];
    if (blows && !out.lambda_high) out.lambda_high = lambda_grid[i];
  }
  return out;
}

struct CoverageEstimate {
  EstimateWithCI covered;
  double lower_bound = 0.0;       // 1 - exp(-lambda 2^-d omega_d int_[2r, r_max] b^d mu)
  double exact_probability = 0.0; // closed-form coverage probability at the cap
  double r = 1.0;
  double r_max = kInf;
};

// P(some sampled ball covers B(0, r)) with radii capped at r_max. The cap
// makes both the exact probability and the lower bound finite integrals.
inline CoverageEstimate estimate_coverage(double lambda,
                                          const RadiusMeasure& mu, int d,
                                          double r, double r_max,
                                          const RunParams& run) {
  if (!(r > 0.0)) throw std::invalid_argument("estimate_coverage: r must be > 0");
  if (!(r_max > r)) throw std::invalid_argument("estimate_coverage: r_max <= r");
  Window window;
  window.d = d;
  window.half_width = r_max;
  window.padding = 0.0;
  auto one = [&](std::size_t k) -> bool {
    const BallConfiguration cfg = sample_poisson_marked(
        lambda, mu, window, 0.0, r_max, derive_stream(run.seed, k));
    for (const MarkedPoint& p : cfg.points)
      if (p.radius >= norm(p.center, d) + r) return true;
    return false;
  };
  const auto hits = run_replicas<bool>(run.replicas, run.workers, one);
  std::uint64_t successes = 0;
  for (bool h : hits) successes += h;
  CoverageEstimate out;
  out.r = r;
  out.r_max = r_max;
  out.covered = wilson_estimate(successes, run.replicas, run.confidence);
  out.lower_bound =
      1.0 - std::exp(-lambda * std::pow(2.0, -d) * unit_ball_volume(d) *
                     restricted_moment(mu, d, 2.0 * r, r_max).value);
  out.exact_probability =
      1.0 - std::exp(-lambda *
                     weighted_moment(mu, 0.0, r, r_max, [&](double b) {
                       return ball_volume(d, b - r);
                     }).value);
  return out;
}

}  // namespace percsim
