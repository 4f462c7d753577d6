#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "torusgff/greens.hpp"
#include "torusgff/lattice.hpp"
#include "torusgff/rng.hpp"
#include "torusgff/spectral.hpp"

using namespace torusgff;

namespace {
std::vector<double> sorted_multiset(const SpectrumTable& t) {
  std::vector<double> v = t.eigenvalues;
  std::sort(v.begin(), v.end());
  return v;
}
}  // namespace

TEST_CASE("eigenvalue formula") {
  TorusLattice lat(3, 8);
  std::vector<int> zero{0, 0, 0};
  REQUIRE(eigenvalue(lat, zero) == 0.0);
  std::vector<int> top{4, 4, 4};
  REQUIRE_THAT(eigenvalue(lat, top), Catch::Matchers::WithinAbs(12.0, 1e-13));
  TorusLattice line(1, 4);
  std::vector<int> one{1};
  REQUIRE_THAT(eigenvalue(line, one), Catch::Matchers::WithinAbs(2.0, 1e-13));
}

TEST_CASE("spectrum multisets match enumeration") {
  auto m22 = sorted_multiset(build_spectrum(TorusLattice(2, 2)));
  REQUIRE(m22.size() == 4);
  REQUIRE_THAT(m22[0], Catch::Matchers::WithinAbs(0.0, 1e-13));
  REQUIRE_THAT(m22[1], Catch::Matchers::WithinAbs(4.0, 1e-13));
  REQUIRE_THAT(m22[2], Catch::Matchers::WithinAbs(4.0, 1e-13));
  REQUIRE_THAT(m22[3], Catch::Matchers::WithinAbs(8.0, 1e-13));

  auto m31 = sorted_multiset(build_spectrum(TorusLattice(1, 3)));
  REQUIRE(m31.size() == 3);
  REQUIRE_THAT(m31[0], Catch::Matchers::WithinAbs(0.0, 1e-13));
  REQUIRE_THAT(m31[1], Catch::Matchers::WithinAbs(3.0, 1e-12));
  REQUIRE_THAT(m31[2], Catch::Matchers::WithinAbs(3.0, 1e-12));

  auto m23 = sorted_multiset(build_spectrum(TorusLattice(3, 2)));
  const std::vector<double> expect{0, 4, 4, 4, 8, 8, 8, 12};
  REQUIRE(m23.size() == expect.size());
  for (std::size_t i = 0; i < expect.size(); ++i)
    REQUIRE_THAT(m23[i], Catch::Matchers::WithinAbs(expect[i], 1e-12));
}

TEST_CASE("spectrum table invariants") {
  for (auto [d, n] : {std::pair{2, 5}, {3, 4}, {2, 6}}) {
    const TorusLattice lat(d, n);
    const SpectrumTable t = build_spectrum(lat);
    int zeros = 0;
    for (double e : t.eigenvalues) {
      REQUIRE(e >= 0.0);
      REQUIRE(e <= 4.0 * d + 1e-12);
      if (e == 0.0) ++zeros;
    }
    REQUIRE(zeros == 1);
    REQUIRE(t.eigenvalues[0] == 0.0);
    for (std::int64_t k = 1; k < lat.volume(); ++k)
      REQUIRE(t.sorted_eta(k) >= t.sorted_eta(k - 1));
    // mode reflection symmetry
    for (std::int64_t w = 0; w < lat.volume(); ++w) {
      Coords c = lat.to_coords(w);
      Coords r{};
      for (int i = 0; i < d; ++i) r[i] = (n - c[i]) % n;
      const std::int64_t wr = lat.to_flat(std::span<const int>(r.data(), d));
      REQUIRE_THAT(t.eigenvalues[w], Catch::Matchers::WithinAbs(t.eigenvalues[wr], 1e-13));
    }
  }
}

TEST_CASE("aggregated spectrum agrees with the full table") {
  for (auto [d, n] : {std::pair{2, 6}, {3, 5}, {3, 8}, {4, 4}}) {
    const TorusLattice lat(d, n);
    const SpectrumTable t = build_spectrum(lat);
    const AggregatedSpectrum agg = aggregate_spectrum(lat);
    std::int64_t total = 0;
    for (auto m : agg.mult) total += m;
    REQUIRE(total == lat.volume());
    const double sum_agg = static_cast<double>(agg.sum([](double e) { return 1.0 / (0.7 + e); }));
    double sum_full = 0.0;
    for (double e : t.eigenvalues) sum_full += 1.0 / (0.7 + e);
    REQUIRE_THAT(sum_agg, Catch::Matchers::WithinRel(sum_full, 1e-12));
  }
}

TEST_CASE("basis is orthonormal and diagonalizes the Laplacian (n <= 6, d <= 3)") {
  for (auto [d, n] : {std::pair{1, 4}, {1, 5}, {2, 2}, {2, 3}, {2, 4}, {2, 5}, {2, 6},
                      {3, 2}, {3, 3}, {3, 4}, {3, 5}, {3, 6}}) {
    const TorusLattice lat(d, n);
    const std::int64_t vol = lat.volume();
    const std::vector<double> q = basis_matrix(lat);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Q(
        q.data(), vol, vol);
    const Eigen::MatrixXd gram = Q.transpose() * Q;
    REQUIRE((gram - Eigen::MatrixXd::Identity(vol, vol)).cwiseAbs().maxCoeff() < 1e-10);

    const Eigen::MatrixXd lap = laplacian_dense(lat);
    const Eigen::MatrixXd diag = Q.transpose() * lap * Q;
    const SpectrumTable t = build_spectrum(lat);
    for (std::int64_t i = 0; i < vol; ++i)
      for (std::int64_t j = 0; j < vol; ++j) {
        const double expect = (i == j) ? t.eigenvalues[i] : 0.0;
        REQUIRE_THAT(diag(i, j), Catch::Matchers::WithinAbs(expect, 1e-10));
      }
  }
}

TEST_CASE("fast transform matches the dense basis") {
  for (auto [d, n] : {std::pair{2, 5}, {3, 4}, {2, 8}}) {
    const TorusLattice lat(d, n);
    const std::int64_t vol = lat.volume();
    const std::vector<double> q = basis_matrix(lat);
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> Q(
        q.data(), vol, vol);
    Rng rng(11, "transform", static_cast<std::uint64_t>(d * 10 + n));
    Eigen::VectorXd f(vol);
    for (std::int64_t i = 0; i < vol; ++i) f[i] = rng.normal();
    const Eigen::VectorXd dense = Q.transpose() * f;
    HartleyTransform ht(lat);
    std::vector<double> fast(vol);
    ht.to_modes(std::span<const double>(f.data(), vol), fast);
    for (std::int64_t i = 0; i < vol; ++i)
      REQUIRE_THAT(fast[i], Catch::Matchers::WithinAbs(dense[i], 1e-11));
  }
}

TEST_CASE("transform round trip, Parseval, and the two delta cases") {
  const TorusLattice lat(3, 6);
  const std::int64_t vol = lat.volume();
  HartleyTransform ht(lat);

  std::vector<double> constant(vol, 2.5), modes(vol);
  ht.to_modes(constant, modes);
  REQUIRE_THAT(modes[0], Catch::Matchers::WithinRel(2.5 * std::sqrt(static_cast<double>(vol)), 1e-12));
  for (std::int64_t i = 1; i < vol; ++i) REQUIRE_THAT(modes[i], Catch::Matchers::WithinAbs(0.0, 1e-10));

  std::vector<double> delta(vol, 0.0);
  delta[0] = 1.0;
  ht.to_modes(delta, modes);
  const double q0 = 1.0 / std::sqrt(static_cast<double>(vol));
  for (std::int64_t i = 0; i < vol; ++i) REQUIRE_THAT(modes[i], Catch::Matchers::WithinAbs(q0, 1e-12));

  Rng rng(3, "roundtrip", 0);
  std::vector<double> f(vol), back(vol);
  for (auto& v : f) v = rng.normal();
  ht.to_modes(f, modes);
  ht.from_modes(modes, back);
  double norm_site = 0.0, norm_mode = 0.0, max_rel = 0.0;
  for (std::int64_t i = 0; i < vol; ++i) {
    norm_site += f[i] * f[i];
    norm_mode += modes[i] * modes[i];
    max_rel = std::max(max_rel, std::abs(back[i] - f[i]) / std::max(1.0, std::abs(f[i])));
  }
  REQUIRE(max_rel < 1e-12);
  REQUIRE_THAT(norm_mode, Catch::Matchers::WithinRel(norm_site, 1e-10));

  std::vector<double> wrong(vol - 1);
  REQUIRE_THROWS_AS(ht.to_modes(wrong, modes), std::invalid_argument);
}

TEST_CASE("eigenvalue growth law in d = 3") {
  // eta_(k) * n^2 / k^{2/3} stays in one fixed band over n in {8, 16, 32}
  for (int n : {8, 16, 32}) {
    const TorusLattice lat(3, n);
    const SpectrumTable t = build_spectrum(lat);
    double lo = 1e300, hi = 0.0;
    for (std::int64_t k = 1; k < lat.volume(); ++k) {
      const double ratio = t.sorted_eta(k) * n * n / std::pow(static_cast<double>(k), 2.0 / 3.0);
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    REQUIRE(lo > 5.0);
    REQUIRE(hi < 45.0);
  }
}
