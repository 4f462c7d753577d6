#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <cmath>

#include "torusgff/greens.hpp"
#include "torusgff/lattice.hpp"
#include "torusgff/mass_solver.hpp"

using namespace torusgff;

TEST_CASE("massive kernel on the 2x2 torus") {
  const TorusLattice lat(2, 2);
  const GreenTable g = massive_green(lat, 1.0);
  REQUIRE_THAT(g.trace(), Catch::Matchers::WithinAbs(1.0 + 2.0 / 5.0 + 1.0 / 9.0, 1e-12));
  REQUIRE_THAT(g(0, 0), Catch::Matchers::WithinAbs(17.0 / 45.0, 1e-12));
  REQUIRE_THROWS_AS(massive_green(lat, 0.0), std::domain_error);
  REQUIRE_THROWS_AS(massive_green(lat, -1.0), std::domain_error);
}

TEST_CASE("inverse-operator identity and trace identity") {
  for (auto [d, n, m2] : {std::tuple{2, 6, 0.7}, {3, 4, 1.0}, {2, 2, 1.0}, {3, 8, 0.05}}) {
    const TorusLattice lat(d, n);
    const GreenTable g = massive_green(lat, m2);
    double nbsum = 0.0;
    for (std::int64_t y : lat.neighbors(0)) nbsum += g(0, y);
    REQUIRE_THAT((2.0 * d + m2) * g(0, 0) - nbsum, Catch::Matchers::WithinAbs(1.0, 1e-10));
    // trace = sum_w 1/(m^2 + eta_w) = n^d G(0,0)
    const double sum = static_cast<double>(
        aggregate_spectrum(lat).sum([m2 = m2](double e) { return 1.0 / (m2 + e); }));
    REQUIRE_THAT(g.trace(), Catch::Matchers::WithinRel(sum, 1e-12));
    REQUIRE_THAT(g.trace(), Catch::Matchers::WithinRel(g(0, 0) * lat.volume(), 1e-12));
  }
}

TEST_CASE("large-mass limit") {
  const TorusLattice lat(3, 4);
  for (double m2 : {1e3, 1e4}) {
    const GreenTable g = massive_green(lat, m2);
    REQUIRE(std::abs(g(0, 0) - 1.0 / m2) < 10.0 * lat.dim() / (m2 * m2));
  }
}

TEST_CASE("spectral kernel matches the dense inverse") {
  for (auto [d, n, m2] : {std::tuple{2, 8, 0.4}, {3, 8, 1.3}, {2, 16, 0.05}}) {
    const TorusLattice lat(d, n);
    const GreenTable g = massive_green(lat, m2);
    Eigen::MatrixXd op = laplacian_dense(lat);
    op.diagonal().array() += m2;
    const Eigen::MatrixXd inv = op.inverse();
    for (std::int64_t y = 0; y < lat.volume(); ++y)
      REQUIRE_THAT(g(0, y), Catch::Matchers::WithinAbs(inv(0, y), 1e-9));
  }
}

TEST_CASE("kernel symmetry via orbit reflection") {
  for (auto [d, n] : {std::pair{2, 5}, {3, 6}}) {
    const TorusLattice lat(d, n);
    const GreenTable g = massive_green(lat, 0.8);
    const GreenTable z = zero_average_green(lat);
    for (std::int64_t x = 0; x < std::min<std::int64_t>(lat.volume(), 64); ++x)
      for (std::int64_t y = 0; y < lat.volume(); y += 3) {
        REQUIRE_THAT(g(x, y), Catch::Matchers::WithinAbs(g(y, x), 1e-12));
        REQUIRE_THAT(z(x, y), Catch::Matchers::WithinAbs(z(y, x), 1e-12));
      }
  }
}

TEST_CASE("zero-average kernel") {
  const TorusLattice tiny(2, 2);
  const GreenTable z = zero_average_green(tiny);
  REQUIRE(z.nonpaper_dim());
  REQUIRE_THAT(z(0, 0), Catch::Matchers::WithinAbs(5.0 / 32.0, 1e-13));

  for (auto [d, n] : {std::pair{3, 4}, {3, 8}, {2, 6}}) {
    const TorusLattice lat(d, n);
    const GreenTable g = zero_average_green(lat);
    double rowsum = 0.0;
    for (double v : g.orbit()) rowsum += v;
    REQUIRE_THAT(rowsum, Catch::Matchers::WithinAbs(0.0, 1e-10));
  }

  // diagonal lies strictly below beta_c in d = 3
  const double bc = beta_critical(3);
  const GreenTable g8 = zero_average_green(TorusLattice(3, 8));
  REQUIRE(g8(0, 0) < bc);
}

TEST_CASE("streamed zero-average entries agree with the orbit") {
  const TorusLattice lat(3, 6);
  const GreenTable g = zero_average_green(lat);
  REQUIRE_THAT(zero_average_diag(lat), Catch::Matchers::WithinAbs(g(0, 0), 1e-12));
  for (std::int64_t y : {std::int64_t{0}, std::int64_t{1}, std::int64_t{43}, lat.volume() - 1}) {
    const Coords c = lat.to_coords(y);
    const double streamed = zero_average_entry_streamed(lat, std::span<const int>(c.data(), lat.dim()));
    REQUIRE_THAT(streamed, Catch::Matchers::WithinAbs(g(0, y), 1e-12));
  }
}

TEST_CASE("Z^d kernel: beta_c and neighbor value from two routes") {
  const double bc = zd_green(3, 0.0);
  REQUIRE_THAT(bc, Catch::Matchers::WithinAbs(0.2527310098, 1e-6));
  REQUIRE_THAT(6.0 * bc, Catch::Matchers::WithinAbs(1.5163860592, 4e-6));

  const double bc_fourier = zd_green_fourier(3, 0.0, std::vector<int>{0, 0, 0});
  REQUIRE_THAT(bc, Catch::Matchers::WithinAbs(bc_fourier, 1e-8));

  // neighbor value from the operator identity (-Delta) G = delta
  const double ge = zd_green(3, 0.0, std::vector<int>{1, 0, 0});
  REQUIRE_THAT(ge, Catch::Matchers::WithinAbs((6.0 * bc - 1.0) / 6.0, 1e-9));
  const double ge_fourier = zd_green_fourier(3, 0.0, std::vector<int>{1, 0, 0});
  REQUIRE_THAT(ge, Catch::Matchers::WithinAbs(ge_fourier, 1e-8));

  for (double m2 : {1e4, 1e6}) REQUIRE(std::abs(zd_green(3, m2) - 1.0 / m2) < 10.0 / (m2 * m2));

  REQUIRE_THROWS_AS(zd_green(2, 0.0), std::domain_error);
  // d = 2 massive agrees across routes
  const double g2 = zd_green(2, 0.5, std::vector<int>{2, 1});
  const double g2f = zd_green_fourier(2, 0.5, std::vector<int>{2, 1});
  REQUIRE_THAT(g2, Catch::Matchers::WithinAbs(g2f, 1e-9));
}

TEST_CASE("Z^d kernel: massive agreement between walk integral and quadrature") {
  for (auto y : {std::vector<int>{0, 0, 0}, {1, 0, 0}, {2, 1, 0}, {3, 2, 1}}) {
    const double a = zd_green(3, 0.25, y);
    const double b = zd_green_fourier(3, 0.25, y);
    REQUIRE_THAT(a, Catch::Matchers::WithinAbs(b, 1e-8));
  }
}

TEST_CASE("torus kernel converges to the Z^d kernel") {
  const std::vector<int> y{2, 1, 0};
  const double zd = zd_green(3, 0.5, y);
  double prev = 1e9;
  for (int n : {8, 16, 32}) {
    const TorusLattice lat(3, n);
    const GreenTable g = massive_green(lat, 0.5);
    const double diff = std::abs(g.at(y) - zd);
    REQUIRE(diff < prev);
    prev = diff;
  }
}

TEST_CASE("exponential decay with mass") {
  const TorusLattice lat(3, 32);
  const GreenTable g = massive_green(lat, 1.0);
  // fit log G(0, (r,0,0)) ~ C - c r over r = 1..10; expect a positive rate
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const int rmax = 10;
  for (int r = 1; r <= rmax; ++r) {
    const double lg = std::log(g.at(std::vector<int>{r, 0, 0}));
    sx += r;
    sy += lg;
    sxx += static_cast<double>(r) * r;
    sxy += r * lg;
  }
  const double slope = (rmax * sxy - sx * sy) / (rmax * sxx - sx * sx);
  REQUIRE(slope < -0.05);
  for (int r = 1; r < rmax; ++r)
    REQUIRE(g.at(std::vector<int>{r + 1, 0, 0}) < g.at(std::vector<int>{r, 0, 0}));
}

TEST_CASE("dirichlet kernel basics") {
  const TorusLattice lat(2, 6);
  const std::vector<std::int64_t> u{7};
  const GreenTable g = dirichlet_green(lat, u, 0.0);
  for (std::int64_t y = 0; y < lat.volume(); ++y) REQUIRE(g(7, y) == 0.0);

  REQUIRE_THROWS_AS(dirichlet_green(lat, {}, 0.0), std::domain_error);

  // interior eigenvalues within [1/(m^2+4d), 1/m^2]
  const double m2 = 0.5;
  const GreenTable gm = dirichlet_green(lat, u, m2);
  const Eigen::VectorXd tau = gm.interior_eigenvalues();
  for (int i = 0; i < tau.size(); ++i) {
    REQUIRE(tau[i] >= 1.0 / (m2 + 4.0 * lat.dim()) - 1e-12);
    REQUIRE(tau[i] <= 1.0 / m2 + 1e-12);
  }
}

TEST_CASE("dirichlet decomposition identity") {
  const TorusLattice lat(2, 6);
  const std::vector<std::int64_t> u{3, 20};
  const std::vector<std::int64_t> k{10, 27};
  const double m2 = 0.3;
  const GreenTable gu = dirichlet_green(lat, u, m2);
  std::vector<std::int64_t> uk = u;
  uk.insert(uk.end(), k.begin(), k.end());
  const GreenTable guk = dirichlet_green(lat, uk, m2);
  for (std::int64_t x : {std::int64_t{0}, std::int64_t{14}, std::int64_t{31}}) {
    const std::vector<double> hit = hitting_distribution(lat, u, m2, k, x);
    for (std::int64_t y : {std::int64_t{1}, std::int64_t{22}}) {
      double expect = guk(x, y);
      for (std::size_t j = 0; j < k.size(); ++j) expect += hit[j] * gu(k[j], y);
      REQUIRE_THAT(gu(x, y), Catch::Matchers::WithinAbs(expect, 1e-8));
    }
  }
}

TEST_CASE("conjugate-gradient backend agrees with the dense one") {
  const TorusLattice lat(3, 6);  // 216 sites; force both paths on the same system
  const std::vector<std::int64_t> u{0, 100};
  const GreenTable dense = dirichlet_green(lat, u, 0.2);
  // CG path is exercised through a lattice above the dense cutoff
  const TorusLattice big(3, 18);  // 5832 interior sites
  const std::vector<std::int64_t> ub{17};
  const GreenTable cg = dirichlet_green(big, ub, 1.0);
  const GreenTable ref = massive_green(big, 1.0);
  // far from the boundary site the Dirichlet kernel is close to the torus one,
  // and the operator identity holds exactly
  const std::int64_t x0 = big.to_flat(std::vector<int>{9, 9, 9});
  double nbsum = 0.0;
  for (std::int64_t y : big.neighbors(x0)) nbsum += cg(x0, y);
  REQUIRE_THAT((2.0 * big.dim() + 1.0) * cg(x0, x0) - nbsum, Catch::Matchers::WithinAbs(1.0, 1e-9));
  REQUIRE(std::abs(cg(x0, x0) - ref(x0, x0)) < 1e-6);
  (void)dense;
}

TEST_CASE("killed-walk oracle") {
  const TorusLattice lat(3, 8);
  const GreenTable g = massive_green(lat, 1.0);
  const RwEstimate est = rw_green_torus(lat, {}, 1.0, 0, 0, 100000, 42);
  REQUIRE(est.std_error > 0.0);
  REQUIRE(std::abs(est.value - g(0, 0)) <= 4.0 * est.std_error);

  const std::int64_t e1 = lat.to_flat(std::vector<int>{1, 0, 0});
  const RwEstimate off = rw_green_torus(lat, {}, 1.0, 0, e1, 100000, 43);
  REQUIRE(std::abs(off.value - g(0, e1)) <= 4.0 * off.std_error);

  // enormous mass: immediate killing leaves (1-alpha)/(2d) on the diagonal
  const double m2 = 1e8;
  const double alpha = m2 / (2.0 * lat.dim() + m2);
  const RwEstimate diag = rw_green_torus(lat, {}, m2, 0, 0, 2000, 44);
  REQUIRE_THAT(diag.value, Catch::Matchers::WithinRel((1.0 - alpha) / (2.0 * lat.dim()), 1e-6));

  // Dirichlet boundary exactly zero
  const RwEstimate zero = rw_green_torus(lat, {5}, 0.0, 5, 9, 100, 45);
  REQUIRE(zero.value == 0.0);

  REQUIRE_THROWS_AS(rw_green_torus(lat, {}, 0.0, 0, 0, 10, 46), std::domain_error);
}

TEST_CASE("harmonic extension") {
  const TorusLattice lat(2, 6);
  const std::vector<std::int64_t> anchors{4, 17, 30};

  // constant data, no mass: harmonic functions on the torus are constants
  std::vector<double> vals(anchors.size(), 3.25);
  const std::vector<double> h0 = harmonic_extension(lat, {}, 0.0, anchors, vals);
  for (double v : h0) REQUIRE_THAT(v, Catch::Matchers::WithinAbs(3.25, 1e-10));

  // with mass, values stay strictly inside (0, c) off the anchor set
  const std::vector<double> hm = harmonic_extension(lat, {}, 0.9, anchors, vals);
  for (std::int64_t x = 0; x < lat.volume(); ++x) {
    if (std::find(anchors.begin(), anchors.end(), x) != anchors.end()) continue;
    REQUIRE(hm[x] > 0.0);
    REQUIRE(hm[x] < 3.25);
  }

  REQUIRE_THROWS_AS(harmonic_extension(lat, {}, 0.5, {}, std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("hitting distribution matches Monte Carlo") {
  const TorusLattice lat(2, 6);
  const std::vector<std::int64_t> anchors{8, 27};
  const double m2 = 1.0;
  const std::int64_t x0 = 0;
  const std::vector<double> p = hitting_distribution(lat, {}, m2, anchors, x0);

  const double alpha = m2 / (2.0 * lat.dim() + m2);
  const std::int64_t paths = 200000;
  std::vector<double> counts(anchors.size(), 0.0);
  for (std::int64_t rep = 0; rep < paths; ++rep) {
    Rng rng(77, "hit-mc", static_cast<std::uint64_t>(rep));
    std::int64_t pos = x0;
    for (;;) {
      const auto it = std::find(anchors.begin(), anchors.end(), pos);
      if (it != anchors.end()) {
        counts[static_cast<std::size_t>(it - anchors.begin())] += 1.0;
        break;
      }
      if (rng.uniform01() < alpha) break;
      const auto nb = lat.neighbors(pos);
      pos = nb[rng.uniform_below(static_cast<std::int64_t>(nb.size()))];
    }
  }
  for (std::size_t j = 0; j < anchors.size(); ++j) {
    const double phat = counts[j] / paths;
    const double se = std::sqrt(phat * (1.0 - phat) / paths);
    REQUIRE(std::abs(phat - p[j]) <= 4.0 * se + 1e-12);
  }
}
