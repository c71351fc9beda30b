#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "percsim/radius_measure.hpp"
#include "percsim/rng.hpp"

using namespace percsim;

namespace {

// Independent quadrature oracle: plain Simpson refinement on [lo, hi],
// deliberately not sharing any code with the library's Gauss-Kronrod path.
template <class F>
double simpson_oracle(F f, double lo, double hi, int n = 1 << 16) {
  double s = f(lo) + f(hi);
  const double h = (hi - lo) / n;
  for (int i = 1; i < n; ++i) s += f(lo + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double pareto_density(double gamma, double r0, double mass, double b) {
  return b < r0 ? 0.0 : mass * gamma * std::pow(r0, gamma) * std::pow(b, -gamma - 1.0);
}

}  // namespace

TEST_CASE("tail_mass on atoms and pareto") {
  const auto d1 = RadiusMeasure::dirac(1.0);
  CHECK(d1.tail_mass(0.5) == 1.0);
  CHECK(d1.tail_mass(1.0) == 1.0);  // closed tail includes the atom
  CHECK(d1.tail_mass(1.5) == 0.0);

  const auto par = RadiusMeasure::pareto(3.0, 1.0, 1.0);
  // oracle: quadrature of the density over [2, big]
  const double oracle = simpson_oracle(
      [](double b) { return pareto_density(3, 1, 1, b); }, 2.0, 4096.0);
  CHECK_THAT(par.tail_mass(2.0), Catch::Matchers::WithinRel(0.125, 1e-9));
  CHECK_THAT(par.tail_mass(2.0), Catch::Matchers::WithinRel(oracle, 1e-4));

  SECTION("tail monotonicity, random measures") {
    Rng rng(42);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<Atom> atoms;
      const int n = 1 + static_cast<int>(rng.uniform_index(20));
      for (int i = 0; i < n; ++i)
        atoms.push_back({rng.uniform(0.01, 10.0), rng.uniform(0.0, 5.0)});
      const auto m = RadiusMeasure::atoms(atoms);
      double prev = m.tail_mass(1e-6);
      for (double r = 0.01; r < 12.0; r += 0.37) {
        const double t = m.tail_mass(r);
        CHECK(t <= prev + 1e-12);
        prev = t;
      }
    }
  }
}

TEST_CASE("restricted_moment: exact atoms, quadrature pareto, divergence") {
  const auto d1 = RadiusMeasure::dirac(1.0);
  CHECK(restricted_moment(d1, 2.0, 1.0, kInf).value == 1.0);
  CHECK(restricted_moment(d1, 2.0, 1.0, kInf).status == MomentStatus::exact);

  const auto par3 = RadiusMeasure::pareto(3.0, 1.0, 1.0);
  const auto m = restricted_moment(par3, 2.0, 1.0, kInf);
  REQUIRE(m.finite());
  // oracle: int_1^inf 3 b^-2 db = 3, cross-checked by Simpson on [1, 2^20]
  const double oracle = simpson_oracle(
      [](double b) { return b * b * pareto_density(3, 1, 1, b); }, 1.0,
      1048576.0, 1 << 22);
  CHECK_THAT(m.value, Catch::Matchers::WithinRel(3.0, 1e-8));
  CHECK_THAT(m.value, Catch::Matchers::WithinRel(oracle, 1e-3));

  const auto par2 = RadiusMeasure::pareto(2.0, 1.0, 1.0);
  const auto div = restricted_moment(par2, 2.0, 1.0, kInf);
  CHECK(div.status == MomentStatus::divergent);
  CHECK(div.value == kInf);

  // finite window stays finite even for the divergent-tail exponent
  const auto fin = restricted_moment(par2, 2.0, 1.0, 64.0);
  REQUIRE(fin.finite());
  CHECK_THAT(fin.value, Catch::Matchers::WithinRel(2.0 * std::log(64.0), 1e-9));

  CHECK_THROWS_AS(restricted_moment(d1, 2.0, 3.0, 1.0), std::invalid_argument);
}

TEST_CASE("sup_scaled_tail") {
  const auto d1 = RadiusMeasure::dirac(1.0);
  const auto s = sup_scaled_tail(d1, 2);
  CHECK(s.value == 1.0);
  CHECK(s.witness == 1.0);
  CHECK(s.attained);

  SECTION("truncated multiscale of dirac: scan approaches 4/3 from below") {
    const auto mu = multiscale_measure(RadiusMeasure::dirac(1.0), 2.0, 2, 30);
    const auto sup = sup_scaled_tail(mu, 2);
    CHECK_THAT(sup.value, Catch::Matchers::WithinRel(4.0 / 3.0, 1e-15));
    // oracle: direct scan over r = 2^-n of r^2 * sum_{m <= n} 4^m
    double oracle = 0.0;
    for (int n = 0; n <= 30; ++n) {
      double tail = 0.0;
      for (int m = 0; m <= n; ++m) tail += scale_mass_pow(2.0, 2, m);
      oracle = std::max(oracle, std::pow(inv_scale_pow(2.0, n), 2) * tail);
    }
    CHECK_THAT(sup.value, Catch::Matchers::WithinRel(oracle, 1e-12));
    CHECK(sup.witness == inv_scale_pow(2.0, 30));
  }

  SECTION("pareto: gamma == d finite, gamma < d infinite") {
    const auto crit = sup_scaled_tail(RadiusMeasure::pareto(2.0, 1.0, 1.0), 2);
    CHECK(crit.finite());
    CHECK(crit.value == 1.0);
    // oracle: r^d * tail evaluated on the dyadic grid must not decay for
    // gamma < d (grows without bound)
    const auto heavy = RadiusMeasure::pareto(1.0, 1.0, 1.0);
    double prev = 0.0;
    bool grows = true;
    for (int k = 0; k <= 40; ++k) {
      const double r = std::pow(2.0, k);
      const double v = r * r * heavy.tail_mass(r);
      grows = grows && v >= prev;
      prev = v;
    }
    CHECK(grows);
    CHECK_FALSE(sup_scaled_tail(heavy, 2).finite());
  }
}

TEST_CASE("abis_bounds: sandwich inequality") {
  SECTION("dirac, d=2, rho=2") {
    const auto b = abis_bounds(RadiusMeasure::dirac(1.0), 2, 2.0);
    CHECK(b.sup_window == 1.0);
    CHECK(b.sup_tail == 1.0);
    CHECK_THAT(b.upper_bound, Catch::Matchers::WithinRel(4.0 / 3.0, 1e-12));
  }
  SECTION("zero measure") {
    const auto b = abis_bounds(RadiusMeasure::atoms({}), 2, 2.0);
    CHECK(b.sup_window == 0.0);
    CHECK(b.sup_tail == 0.0);
    CHECK(b.upper_bound == 0.0);
  }
  SECTION("two atoms, d=1, rho=2 (exhaustive-scan oracle)") {
    const auto mu = RadiusMeasure::atoms({{1.0, 1.0}, {4.0, 1.0}});
    const auto b = abis_bounds(mu, 1, 2.0);
    // oracle: scan candidates {1, 4, 0.5, 2} by hand
    CHECK(b.sup_window == 4.0);
    CHECK(b.sup_tail == 4.0);
    CHECK(b.upper_bound == 8.0);
  }
  SECTION("sandwich holds on random atomic measures") {
    Rng rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<Atom> atoms;
      const int n = 1 + static_cast<int>(rng.uniform_index(12));
      for (int i = 0; i < n; ++i)
        atoms.push_back({rng.uniform(0.05, 20.0), rng.uniform(0.0, 3.0)});
      const int d = 1 + static_cast<int>(rng.uniform_index(3));
      const double rho = 1.0 + rng.uniform(0.1, 3.0);
      const auto b = abis_bounds(RadiusMeasure::atoms(atoms), d, rho);
      CHECK(b.sup_window <= b.sup_tail * (1.0 + 1e-9));
      CHECK(b.sup_tail <= b.upper_bound * (1.0 + 1e-9));
    }
  }
  SECTION("sandwich holds for pareto within quadrature tolerance") {
    for (double gamma : {2.5, 3.0, 5.0}) {
      const auto mu = RadiusMeasure::pareto(gamma, 1.0, 1.0);
      const auto b = abis_bounds(mu, 2, 2.0);
      CHECK(b.sup_window <= b.sup_tail * (1.0 + 1e-6));
      CHECK(b.sup_tail <= b.upper_bound * (1.0 + 1e-6));
    }
  }
}

TEST_CASE("multiscale_measure") {
  SECTION("dirac base, a=2, d=2, N=2") {
    const auto mu = multiscale_measure(RadiusMeasure::dirac(1.0), 2.0, 2, 2);
    REQUIRE(mu.atom_list().size() == 3);
    CHECK(mu.atom_list()[0].r == 0.25);
    CHECK(mu.atom_list()[0].mass == 16.0);
    CHECK(mu.atom_list()[1].r == 0.5);
    CHECK(mu.atom_list()[1].mass == 4.0);
    CHECK(mu.atom_list()[2].r == 1.0);
    CHECK(mu.atom_list()[2].mass == 1.0);
  }
  SECTION("only the n=0 atom reaches [1, inf)") {
    const auto mu = multiscale_measure(RadiusMeasure::dirac(1.0), 2.0, 2, 12);
    CHECK(restricted_moment(mu, 2.0, 1.0, kInf).value == 1.0);
  }
  SECTION("two-atom base, a=3, d=1, N=1") {
    const auto nu = RadiusMeasure::atoms({{1.0, 0.5}, {2.0, 0.5}});
    const auto mu = multiscale_measure(nu, 3.0, 1, 1);
    REQUIRE(mu.atom_list().size() == 4);
    CHECK_THAT(mu.atom_list()[0].r, Catch::Matchers::WithinRel(1.0 / 3.0, 1e-15));
    CHECK(mu.atom_list()[0].mass == 1.5);
    CHECK_THAT(mu.atom_list()[1].r, Catch::Matchers::WithinRel(2.0 / 3.0, 1e-15));
    CHECK(mu.atom_list()[1].mass == 1.5);
    CHECK(mu.atom_list()[2].r == 1.0);
    CHECK(mu.atom_list()[2].mass == 0.5);
    CHECK(mu.atom_list()[3].r == 2.0);
    CHECK(mu.atom_list()[3].mass == 0.5);
  }
  SECTION("rejects bad parameters") {
    CHECK_THROWS_AS(multiscale_measure(RadiusMeasure::dirac(1.0), 1.0, 2, 3),
                    std::invalid_argument);
    CHECK_THROWS_AS(
        multiscale_measure(RadiusMeasure::pareto(3.0, 1.0, 1.0), 2.0, 2, 3),
        std::invalid_argument);
  }
  SECTION("truncation tail accounting") {
    // for dirac base, a=2, d=2: term n contributes 4^n exactly while
    // 2^-n >= eps
    const auto nu = RadiusMeasure::dirac(1.0);
    const double omitted = multiscale_omitted_tail(nu, 2.0, 2, 2, 1.0 / 32.0);
    // scales 3, 4, 5 have radii 1/8, 1/16, 1/32 >= eps
    CHECK(omitted == 64.0 + 256.0 + 1024.0);
  }
  SECTION("restricted d-moment equals the direct double sum") {
    const auto nu = RadiusMeasure::atoms({{0.7, 0.3}, {1.3, 1.1}, {2.9, 0.2}});
    const double a = 1.7;
    const int d = 2, N = 6;
    const auto mu = multiscale_measure(nu, a, d, N);
    const double eps = inv_scale_pow(a, N);
    const double via_measure = restricted_moment(mu, d, eps, kInf).value;
    double direct = 0.0;
    for (int n = 0; n <= N; ++n) {
      const double s = inv_scale_pow(a, n);
      for (const Atom& at : nu.atom_list())
        if (at.r * s >= eps)
          direct += scale_mass_pow(a, d, n) * at.mass * std::pow(at.r * s, d);
    }
    CHECK_THAT(via_measure, Catch::Matchers::WithinRel(direct, 1e-12));
  }
}

TEST_CASE("log_moment") {
  CHECK(log_moment(RadiusMeasure::dirac(1.0), 2).value == 0.0);

  const auto par3 = RadiusMeasure::pareto(3.0, 1.0, 1.0);
  const auto lm = log_moment(par3, 2);
  REQUIRE(lm.finite());
  // closed form: 3 * int_1^inf b^-2 ln b db = 3; Simpson oracle agrees
  const double oracle = simpson_oracle(
      [](double b) {
        return b * b * std::log(b) * pareto_density(3, 1, 1, b);
      },
      1.0, 1048576.0, 1 << 22);
  CHECK_THAT(lm.value, Catch::Matchers::WithinRel(3.0, 1e-8));
  CHECK_THAT(lm.value, Catch::Matchers::WithinRel(oracle, 1e-3));

  const auto par2 = RadiusMeasure::pareto(2.0, 1.0, 1.0);
  CHECK(log_moment(par2, 2).status == MomentStatus::divergent);
}

TEST_CASE("theorem-style identity: full multiscale d-moment of a dirac base") {
  // for nu = delta_b with b >= 1 the full multiscale measure puts
  // (floor(ln b / ln a) + 1) * b^d of d-moment mass on [1, inf)
  for (double b : {1.0, 1.5, 2.0, 3.7, 8.0}) {
    for (double a : {2.0, 3.0, 1.5}) {
      const int d = 2;
      const int levels = static_cast<int>(std::floor(std::log(b) / std::log(a)));
      const auto mu = multiscale_measure(RadiusMeasure::dirac(b), a, d, 40);
      const double got = restricted_moment(mu, d, 1.0, kInf).value;
      const double expected = (levels + 1) * std::pow(b, d);
      CHECK_THAT(got, Catch::Matchers::WithinRel(expected, 1e-9));
    }
  }
}

TEST_CASE("check_conditions") {
  SECTION("dirac: everything holds") {
    const auto rep = check_conditions(RadiusMeasure::dirac(1.0), 2, 1.0);
    CHECK(rep.a1 == ConditionFlag::holds);
    CHECK(rep.a2 == ConditionFlag::holds);
    CHECK(rep.a3 == ConditionFlag::holds);
    CHECK(rep.moment_d.value == 1.0);
    CHECK(rep.moment_d_plus_s.value == 1.0);
  }
  SECTION("truncated multiscale of dirac") {
    const auto mu = multiscale_measure(RadiusMeasure::dirac(1.0), 2.0, 2, 30);
    const auto rep = check_conditions(mu, 2, 0.0);
    CHECK(rep.a1 == ConditionFlag::holds);
    CHECK_THAT(rep.sup_scaled_tail.value,
               Catch::Matchers::WithinRel(4.0 / 3.0, 1e-12));
    CHECK(rep.a2 == ConditionFlag::holds);
    CHECK(rep.moment_d.value == 1.0);
  }
  SECTION("heavy pareto fails the moment condition") {
    const auto rep = check_conditions(RadiusMeasure::pareto(2.0, 1.0, 1.0), 2, 0.0);
    CHECK(rep.a2 == ConditionFlag::fails);
    CHECK(rep.a1 == ConditionFlag::holds);  // gamma == d keeps the sup finite
  }
  SECTION("finite d-moment forces the sup condition beyond 1") {
    // whenever A2 holds, A1 failure can only come from small radii; for
    // measures supported in [1, inf) A2 therefore implies A1
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Atom> atoms;
      const int n = 1 + static_cast<int>(rng.uniform_index(10));
      for (int i = 0; i < n; ++i)
        atoms.push_back({rng.uniform(1.0, 50.0), rng.uniform(0.0, 2.0)});
      const auto rep = check_conditions(RadiusMeasure::atoms(atoms), 2, 0.0);
      if (rep.a2 == ConditionFlag::holds) CHECK(rep.a1 == ConditionFlag::holds);
    }
  }
}

TEST_CASE("empirical kind shares the atomic machinery") {
  const auto emp = RadiusMeasure::empirical({2.0, 1.0, 2.0}, {0.5, 1.0, 0.25});
  CHECK(emp.kind() == MeasureKind::empirical);
  CHECK(emp.tail_mass(1.5) == 0.75);
  CHECK(emp.total_mass() == 1.75);
}
