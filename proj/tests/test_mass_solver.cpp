#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "torusgff/greens.hpp"
#include "torusgff/lattice.hpp"
#include "torusgff/mass_solver.hpp"

using namespace torusgff;

TEST_CASE("constructed fixed point recovers m^2 = 1") {
  const TorusLattice lat(2, 2);
  const double beta = massive_green(lat, 1.0)(0, 0);  // 17/45
  const MassSolution sol = solve_torus_mass(lat, aggregate_spectrum(lat), beta);
  REQUIRE_THAT(sol.m_squared, Catch::Matchers::WithinAbs(1.0, 1e-10));
  REQUIRE(sol.residual <= 1e-12 * std::max(1.0, beta));
}

TEST_CASE("defining property on a (beta, n) grid") {
  for (auto [d, n] : {std::pair{2, 4}, {2, 8}, {3, 4}, {3, 8}, {3, 16}}) {
    const TorusLattice lat(d, n);
    const AggregatedSpectrum agg = aggregate_spectrum(lat);
    for (double beta : {0.05, 0.2, 0.37, 0.5}) {
      const MassSolution sol = solve_torus_mass(lat, agg, beta);
      REQUIRE(sol.m_squared > 0.0);
      REQUIRE(sol.residual <= 1e-12 * std::max(1.0, beta));
      const GreenTable g = massive_green(lat, sol.m_squared);
      REQUIRE_THAT(g(0, 0), Catch::Matchers::WithinAbs(beta, 1e-12 * std::max(1.0, beta)));
    }
  }
}

TEST_CASE("solution is strictly decreasing in beta") {
  const TorusLattice lat(3, 8);
  const AggregatedSpectrum agg = aggregate_spectrum(lat);
  double prev = 1e300;
  for (double beta : {0.05, 0.1, 0.2, 0.3, 0.5, 0.8}) {
    const double m2 = solve_torus_mass(lat, agg, beta).m_squared;
    REQUIRE(m2 < prev);
    prev = m2;
  }
}

TEST_CASE("high-temperature torus masses approach the Z^d mass") {
  const double beta = 0.2;
  const double m2_inf = solve_zd_mass(3, beta);
  double prev = 1e300;
  for (int n : {8, 16, 32}) {
    const TorusLattice lat(3, n);
    const double m2 = solve_torus_mass(lat, aggregate_spectrum(lat), beta).m_squared;
    const double gap = std::abs(m2 - m2_inf);
    REQUIRE(gap < prev);
    prev = gap;
  }
  REQUIRE(prev < 5e-3);
}

TEST_CASE("low-temperature scaling m^2 (beta - beta_c) n^3 -> 1") {
  const double beta = 0.5;
  const double bc = beta_critical(3);
  double prev_gap = 1e300;
  for (int n : {8, 16, 32}) {
    const TorusLattice lat(3, n);
    const double m2 = solve_torus_mass(lat, aggregate_spectrum(lat), beta).m_squared;
    const double scaled = m2 * (beta - bc) * lat.volume();
    const double gap = std::abs(scaled - 1.0);
    REQUIRE(gap < prev_gap);
    prev_gap = gap;
    if (n == 32) REQUIRE((scaled >= 0.9 && scaled <= 1.1));
  }
}

TEST_CASE("Z^d solver") {
  const double m2 = solve_zd_mass(3, 0.1);
  REQUIRE(m2 > 0.0);
  REQUIRE_THAT(zd_green(3, m2), Catch::Matchers::WithinAbs(0.1, 1e-10));

  // monotone in beta; mass vanishes as beta -> beta_c
  REQUIRE(solve_zd_mass(3, 0.24) < solve_zd_mass(3, 0.2));
  REQUIRE(solve_zd_mass(3, 0.2525) < 1e-2);

  // d = 2 accepts any beta > 0
  const double m22 = solve_zd_mass(2, 10.0);
  REQUIRE(m22 > 0.0);
  REQUIRE_THAT(zd_green(2, m22), Catch::Matchers::WithinAbs(10.0, 1e-9));

  REQUIRE_THROWS_AS(solve_zd_mass(3, beta_critical(3)), std::domain_error);
  REQUIRE_THROWS_AS(solve_zd_mass(3, 0.3), std::domain_error);
}

TEST_CASE("regime classification") {
  const TorusLattice lat(3, 8);
  REQUIRE(ModelParams(lat, 0.2).regime() == Regime::HighT);
  REQUIRE(ModelParams(lat, 0.5).regime() == Regime::LowT);
  REQUIRE(ModelParams(lat, beta_critical(3)).regime() == Regime::Critical);
  const TorusLattice plane(2, 8);
  REQUIRE(ModelParams(plane, 100.0).regime() == Regime::HighT);
  REQUIRE_THROWS_AS(ModelParams(lat, -0.1), std::domain_error);
}

TEST_CASE("critical torus mass scales like 1/n^2 (diagnostic)") {
  const double bc = beta_critical(3);
  for (int n : {8, 16, 32}) {
    const TorusLattice lat(3, n);
    const double m2 = solve_torus_mass(lat, aggregate_spectrum(lat), bc).m_squared;
    const double scaled = m2 * n * n;
    REQUIRE(scaled > 0.05);
    REQUIRE(scaled < 50.0);
  }
}
