#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "torusgff/analysis.hpp"
#include "torusgff/samplers.hpp"

using namespace torusgff;

TEST_CASE("empty conditioning set reproduces the inverse spectrum") {
  const TorusLattice lat(3, 4);
  const CriticalSpectrumReport rep = conditioned_covariance_spectrum(lat, {});
  const SpectrumTable t = build_spectrum(lat);
  REQUIRE(rep.mu.size() == static_cast<std::size_t>(lat.volume()));
  // mu non-increasing vs eta ascending: mu_k = 1/eta_{k+1}
  for (std::int64_t k = 1; k < lat.volume(); ++k)
    REQUIRE_THAT(rep.mu[k - 1], Catch::Matchers::WithinRel(1.0 / t.sorted_eta(k), 1e-10));
  REQUIRE_THAT(rep.mu.back(), Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("single-site spectrum agrees with a dense Schur oracle") {
  for (int n : {4, 6, 8}) {
    const TorusLattice lat(3, n);
    const std::int64_t vol = lat.volume();
    // dense oracle built from the kernel table directly
    const GreenTable g = zero_average_green(lat);
    const std::int64_t m = vol - 1;
    Eigen::MatrixXd gcc(m, m);
    Eigen::VectorXd gcu(m);
    for (std::int64_t i = 0; i < m; ++i) {
      gcu[i] = g(i + 1, 0);
      for (std::int64_t j = 0; j < m; ++j) gcc(i, j) = g(i + 1, j + 1);
    }
    const Eigen::MatrixXd xi = gcc - gcu * gcu.transpose() / g(0, 0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xi, Eigen::EigenvaluesOnly);

    const CriticalSpectrumReport rep = conditioned_covariance_spectrum(lat, {0});
    REQUIRE(rep.mu.size() == static_cast<std::size_t>(m));
    for (std::int64_t k = 0; k < m; ++k)
      REQUIRE_THAT(rep.mu[k],
                   Catch::Matchers::WithinAbs(es.eigenvalues()[m - 1 - k],
                                              1e-8 * std::max(1.0, rep.mu[k])));
  }
}

TEST_CASE("interlacing bound for a single conditioned site") {
  const TorusLattice lat(3, 8);
  const CriticalSpectrumReport rep = conditioned_covariance_spectrum(lat, {0});
  REQUIRE(rep.interlacing_ok);
  REQUIRE(rep.min_mu >= -1e-10);
  const SpectrumTable t = build_spectrum(lat);
  for (std::size_t k = 0; k < rep.mu.size(); ++k) {
    if (static_cast<std::int64_t>(k) + 1 < lat.volume())
      REQUIRE(rep.mu[k] <= 1.0 / t.sorted_eta(k + 1) * (1.0 + 1e-9));
  }
}

TEST_CASE("interlacing holds exhaustively for |U| <= 2, n <= 8") {
  for (int n : {4, 6, 8}) {
    const TorusLattice lat(3, n);
    // singleton class
    REQUIRE(conditioned_covariance_spectrum(lat, {0}).interlacing_ok);
    // pair classes up to translation and reflection
    std::set<std::int64_t> seen;
    for (std::int64_t delta = 1; delta < lat.volume(); ++delta) {
      Coords c = lat.to_coords(delta);
      Coords neg{};
      for (int i = 0; i < lat.dim(); ++i) neg[i] = (lat.side() - c[i]) % lat.side();
      const std::int64_t mirrored = lat.to_flat(std::span<const int>(neg.data(), lat.dim()));
      if (seen.count(mirrored)) continue;
      seen.insert(delta);
      const CriticalSpectrumReport rep = conditioned_covariance_spectrum(lat, {0, delta});
      REQUIRE(rep.interlacing_ok);
      REQUIRE(rep.min_mu >= -1e-10);
    }
  }
}

TEST_CASE("trace-power ratios increase toward one in d = 3") {
  double prev = 0.0;
  for (int n : {8, 16, 32}) {
    const TorusLattice lat(3, n);
    const CriticalSpectrumReport rep = conditioned_covariance_spectrum(lat, {0});
    for (int l = 2; l <= 6; ++l) {
      REQUIRE(rep.trace_ratio[l] > 0.0);
      REQUIRE(rep.trace_ratio[l] <= 1.0 + 1e-12);
    }
    REQUIRE(rep.trace_ratio[3] > prev);
    prev = rep.trace_ratio[3];
  }
  REQUIRE(prev > 0.9);
}

TEST_CASE("variance identity: spectral sum vs exact-sampler estimate") {
  const TorusLattice lat(3, 6);
  const CriticalSpectrumReport rep = conditioned_covariance_spectrum(lat, {});
  GaussianFieldSampler sampler(lat, GaussianFieldSampler::Law::ZeroAverage);
  const int samples = 10000;
  std::vector<double> normsq(samples), buf(lat.volume());
  for (int s = 0; s < samples; ++s) {
    Rng rng(64, "var-ident", static_cast<std::uint64_t>(s));
    sampler.draw(rng, buf);
    long double q = 0.0L;
    for (double v : buf) q += static_cast<long double>(v) * v;
    normsq[s] = static_cast<double>(q);
  }
  const double est_var = variance_of(normsq);
  // standard error of a sample variance ~ var * sqrt(2/(n-1)) for Gaussian-ish data
  const double se = est_var * std::sqrt(2.0 / (samples - 1.0)) * 2.0;
  REQUIRE(std::abs(est_var - rep.var_gamma) <= 4.0 * se);
}

TEST_CASE("conditioned variance converges to the unconditioned one") {
  const std::vector<double> y{0.7};
  double prev_gap = 1e300;
  for (int n : {8, 12, 16}) {
    const TorusLattice lat(3, n);
    const CriticalSpectrumReport rep = conditioned_covariance_spectrum(lat, {0}, y);
    const double ratio = rep.var_gamma_hat / rep.var_gamma;
    const double gap = std::abs(ratio - 1.0);
    REQUIRE(gap <= 4.0 / n);
    REQUIRE(gap < prev_gap);
    prev_gap = gap;
  }
}

TEST_CASE("norm statistics against exact spectral moments") {
  const TorusLattice lat(3, 8);
  const AggregatedSpectrum agg = aggregate_spectrum(lat);
  const double exact_mean =
      static_cast<double>(agg.sum([](double e) { return e > 0.0 ? 1.0 / e : 0.0; }));
  const double exact_var =
      static_cast<double>(2.0L * agg.sum([](double e) { return e > 0.0 ? 1.0 / (e * e) : 0.0; }));

  GaussianFieldSampler sampler(lat, GaussianFieldSampler::Law::ZeroAverage);
  const int samples = 10000;
  std::vector<double> normsq(samples), buf(lat.volume());
  for (int s = 0; s < samples; ++s) {
    Rng rng(99, "norm-stats", static_cast<std::uint64_t>(s));
    sampler.draw(rng, buf);
    long double q = 0.0L;
    for (double v : buf) q += static_cast<long double>(v) * v;
    normsq[s] = static_cast<double>(q);
  }
  const NormStatistics stats = norm_statistics(normsq, exact_mean, exact_var);
  REQUIRE(std::abs(stats.normsq_mean.value - exact_mean) <= 4.0 * stats.normsq_mean.std_error);
  const double var_emp = variance_of(normsq);
  REQUIRE(std::abs(var_emp - exact_var) <= 4.0 * exact_var * std::sqrt(2.0 / samples) * 2.0);
  // d = 3 norm fluctuations are visibly non-Gaussian: positive excess kurtosis
  REQUIRE(stats.kurtosis.excess > 2.0 * stats.kurtosis.std_error);
}

TEST_CASE("variance times eta_2^2 sits in a stable band in d = 3") {
  for (int n : {8, 16, 32}) {
    const TorusLattice lat(3, n);
    const AggregatedSpectrum agg = aggregate_spectrum(lat);
    const double var =
        static_cast<double>(2.0L * agg.sum([](double e) { return e > 0.0 ? 1.0 / (e * e) : 0.0; }));
    const double eta2 = axis_eigen_term(n, 1);  // smallest positive eigenvalue
    // limit is 2 sum_{w in Z^3 \ 0} |w|^{-4} ~ 33.1
    const double scaled = var * eta2 * eta2;
    REQUIRE(scaled > 20.0);
    REQUIRE(scaled < 40.0);
  }
}

TEST_CASE("KDE sanity on standard normal draws") {
  Rng rng(123, "kde-sanity", 0);
  std::vector<double> x(100000);
  for (auto& v : x) v = rng.normal();
  const double h = silverman_bandwidth(x);
  const std::vector<double> grid = uniform_grid(-4.0, 4.0, 321);
  const std::vector<double> kde = kde_on_grid(x, grid, h);
  std::vector<double> ref(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) ref[i] = normal_pdf(grid[i]);
  REQUIRE(sup_distance(kde, ref) < 0.01);
}

TEST_CASE("local CLT: closed-form chi-square case") {
  const std::vector<double> lam{1.0, 1.0};
  const DensityDiagnostic diag = local_clt_diagnostic(lam, 100000, 17);
  // the target leaves e^{-5} ~ 0.007 of mass beyond z = 4
  REQUIRE(std::abs(diag.integral - (1.0 - std::exp(-5.0))) < 2e-3);
  // (chi^2_2 - 2)/2 has the shifted-exponential density e^{-(z+1)}, z >= -1;
  // compare against this density smoothed by the same kernel, since a raw KDE
  // cannot track the jump at the support edge
  std::vector<double> ref(diag.grid.size());
  const double h = diag.bandwidth;
  for (std::size_t i = 0; i < diag.grid.size(); ++i) {
    const double z = diag.grid[i];
    ref[i] = std::exp(-(z + 1.0) + 0.5 * h * h) * normal_cdf((z + 1.0) / h - h);
  }
  REQUIRE(sup_distance(diag.empirical, ref) < 0.02);
}

TEST_CASE("local CLT: d = 5 spectra approach the normal, d = 3 spectra do not") {
  auto weights_for = [](int d, int n) {
    const TorusLattice lat(d, n);
    const SpectrumTable t = build_spectrum(lat);
    std::vector<double> lam;
    for (double e : t.eigenvalues)
      if (e > 0.0) lam.push_back(1.0 / e);
    return lam;
  };

  const DensityDiagnostic d5small = local_clt_diagnostic(weights_for(5, 4), 20000, 5);
  const DensityDiagnostic d5big = local_clt_diagnostic(weights_for(5, 6), 20000, 6);
  REQUIRE(d5big.sup_distance < d5small.sup_distance);
  REQUIRE(std::abs(d5big.integral - 1.0) < 1e-3);
  REQUIRE(d5big.cond_a_ok);
  REQUIRE(d5big.cond_b_ok);

  const DensityDiagnostic d3 = local_clt_diagnostic(weights_for(3, 12), 20000, 7);
  REQUIRE(d3.sup_distance > 0.05);
  REQUIRE_FALSE(d3.cond_b_ok);  // the heavy top eigenvalue breaks the truncation bound
  REQUIRE(d3.lindeberg_ratio > 0.1);

  const DensityDiagnostic d5 = local_clt_diagnostic(weights_for(5, 6), 20000, 8);
  REQUIRE(d5.lindeberg_ratio < d3.lindeberg_ratio);

  REQUIRE_THROWS_AS(local_clt_diagnostic(std::vector<double>{1.0, -1.0}, 20000, 9),
                    std::domain_error);
  REQUIRE_THROWS_AS(local_clt_diagnostic(std::vector<double>{1.0, 1.0}, 100, 9),
                    std::invalid_argument);
}

TEST_CASE("moment table on spherical samples") {
  const TorusLattice lat(2, 4);
  SphericalGibbs chain(lat, 0.5, 31, 0);
  std::vector<std::vector<double>> samples;
  for (int s = 0; s < 6000; ++s) {
    chain.sweep();
    if (s >= 500) samples.push_back(chain.site_field());
  }
  const MomentEstimate second = moment_table(samples, std::vector<SitePower>{{0, 2}}, "theta0^2");
  REQUIRE(std::abs(second.value - 1.0) <= 4.0 * second.std_error);
  const MomentEstimate odd = moment_table(samples, std::vector<SitePower>{{0, 1}, {1, 2}}, "odd");
  REQUIRE(std::abs(odd.value) <= 4.0 * odd.std_error);
  const MomentEstimate fourth = moment_table(samples, std::vector<SitePower>{{0, 4}}, "theta0^4");
  REQUIRE(fourth.value + 4.0 * fourth.std_error <= even_moment_factorial_bound(2));
  REQUIRE(even_moment_factorial_bound(2) == 24.0);
}
