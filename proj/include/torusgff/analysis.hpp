#pragma once

// Critical-regime spectral analytics: the conditioned covariance (Schur
// complement) of the zero-average field, its eigenvalue interlacing and trace
// powers, standardized norm statistics, and the local-CLT density diagnostic.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <complex>
#include <functional>

#include "torusgff/greens.hpp"
#include "torusgff/lattice.hpp"
#include "torusgff/mass_solver.hpp"
#include "torusgff/rng.hpp"
#include "torusgff/spectral.hpp"
#include "torusgff/stats.hpp"

namespace torusgff {

// ---------------------------------------------------------------------------
// Conditioned covariance spectrum
// ---------------------------------------------------------------------------

struct CriticalSpectrumReport {
  int dim = 0;
  int side = 0;
  std::vector<std::int64_t> conditioned_sites;
  std::vector<double> mu;           // eigenvalues of the Schur complement, non-increasing
  std::vector<double> h;            // P^T nu(y); empty when y = 0
  std::vector<double> nu;           // conditional mean field on U^c (dense path only)
  double var_gamma = 0.0;           // 2 sum_{w != 0} eta_w^{-2}
  double var_gamma_hat = 0.0;       // 2 sum (mu_k^2 + 2 h_k^2 mu_k)
  double trace_ratio[7] = {0, 0, 0, 0, 0, 0, 0};  // T_n(l) = sum mu^l / sum eta^{-l}, l = 2..6
  double t_statistic = 0.0;         // (beta_c n^d - E||gamma||^2) / sqrt(Var||gamma||^2)
  double normalized_power_sum[7] = {0, 0, 0, 0, 0, 0, 0};  // sum_k (mu_k^2/sum mu^2)^{l/2}
  bool interlacing_ok = true;
  double min_mu = 0.0;
};

namespace detail {

// distinct positive eigenvalues of -Delta with multiplicities, merged on a
// relative tolerance
inline void distinct_positive_eta(const TorusLattice& lat, std::vector<double>& eta,
                                  std::vector<std::int64_t>& mult) {
  const AggregatedSpectrum agg = aggregate_spectrum(lat);
  std::vector<std::size_t> idx(agg.eta.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return agg.eta[a] < agg.eta[b]; });
  eta.clear();
  mult.clear();
  for (std::size_t k : idx) {
    if (agg.eta[k] <= 0.0) continue;
    if (!eta.empty() && std::abs(agg.eta[k] - eta.back()) <= 1e-12 * std::max(1.0, eta.back())) {
      mult.back() += agg.mult[k];
    } else {
      eta.push_back(agg.eta[k]);
      mult.push_back(agg.mult[k]);
    }
  }
}

// Schur eigenvalues for U = {single site}: the padded complement is the
// circulant kernel minus the rank-one term g g^T / G(0,0); its spectrum is
// {0} plus, per gap between consecutive distinct lambda = 1/eta, the root of
//   f(mu) = 1 - sum_j rho_j / (lambda_j - mu),  rho_j = m_j lambda_j^2 / (n^d G00).
inline std::vector<double> schur_single_site_secular(const TorusLattice& lat) {
  std::vector<double> eta;
  std::vector<std::int64_t> mult;
  distinct_positive_eta(lat, eta, mult);
  const std::size_t d_count = eta.size();
  std::vector<double> lambda(d_count);
  for (std::size_t j = 0; j < d_count; ++j) lambda[j] = 1.0 / eta[d_count - 1 - j];
  std::vector<std::int64_t> lm(d_count);
  for (std::size_t j = 0; j < d_count; ++j) lm[j] = mult[d_count - 1 - j];
  // lambda ascending now
  long double g00 = 0.0L;
  for (std::size_t j = 0; j < d_count; ++j) g00 += static_cast<long double>(lm[j]) * lambda[j];
  g00 /= lat.volume();  // = G^{0-avg}(0,0)

  std::vector<double> rho(d_count);
  const long double denom = static_cast<long double>(lat.volume()) * g00;
  for (std::size_t j = 0; j < d_count; ++j)
    rho[j] = static_cast<double>(static_cast<long double>(lm[j]) * lambda[j] * lambda[j] / denom);

  const auto f = [&](double x) {
    long double s = 0.0L;
    for (std::size_t j = 0; j < d_count; ++j) s += static_cast<long double>(rho[j]) / (lambda[j] - x);
    return static_cast<double>(1.0L - s);
  };

  std::vector<double> mu;
  mu.reserve(lat.volume() - 1);
  mu.push_back(0.0);  // exact root: the constant direction
  for (std::size_t j = 0; j < d_count; ++j)
    for (std::int64_t r = 0; r < lm[j] - 1; ++r) mu.push_back(lambda[j]);
  for (std::size_t j = 0; j + 1 < d_count; ++j) {
    const double gap = lambda[j + 1] - lambda[j];
    double lo = lambda[j] + 1e-14 * std::max(1.0, lambda[j]);
    double hi = lambda[j + 1] - 1e-14 * std::max(1.0, lambda[j + 1]);
    if (lo >= hi || gap <= 1e-13 * std::max(1.0, lambda[j])) {
      mu.push_back(lambda[j]);  // degenerate gap
      continue;
    }
    // f decreases from +inf at the left pole to -inf at the right pole
    const double flo = f(lo), fhi = f(hi);
    if (flo <= 0.0) {  // root pinned against the left pole
      mu.push_back(lo);
      continue;
    }
    if (fhi >= 0.0) {  // root pinned against the right pole
      mu.push_back(hi);
      continue;
    }
    for (int it = 0; it < 100; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (f(mid) < 0.0)
        hi = mid;
      else
        lo = mid;
    }
    mu.push_back(0.5 * (lo + hi));
  }
  std::sort(mu.begin(), mu.end(), std::greater<double>());
  return mu;
}

}  // namespace detail

// Eigenvalues mu_k of Xi = G|_{U^c x U^c} - G|_{U^c x U} G|_{U x U}^{-1} G|_{U x U^c}
// for the zero-average kernel, the conditional mean map nu(y), and the trace
// statistics. Dense path for n^d <= 4096; the single-site secular path covers
// the large-lattice diagonal case.
inline CriticalSpectrumReport conditioned_covariance_spectrum(
    const TorusLattice& lat, const std::vector<std::int64_t>& u_sites,
    std::span<const double> y = {}) {
  if (lat.dim() < 2) throw std::domain_error("conditioned spectrum needs d >= 2");
  if (u_sites.size() > 4) throw std::domain_error("conditioning restricted to |U| <= 4");
  if (!y.empty() && y.size() != u_sites.size()) throw std::invalid_argument("y size mismatch");

  CriticalSpectrumReport rep;
  rep.dim = lat.dim();
  rep.side = lat.side();
  rep.conditioned_sites = u_sites;

  const std::int64_t vol = lat.volume();
  const bool y_zero = y.empty() || std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });

  if (u_sites.size() == 1 && y_zero) {
    lat.check(u_sites[0]);  // spectrum is translation invariant in the site
    rep.mu = detail::schur_single_site_secular(lat);
  } else if (u_sites.empty()) {
    const SpectrumTable t = build_spectrum(lat);
    rep.mu.assign(vol, 0.0);
    for (std::int64_t k = 1; k < vol; ++k) rep.mu[k - 1] = 1.0 / t.sorted_eta(vol - k);
    std::sort(rep.mu.begin(), rep.mu.end(), std::greater<double>());
  } else {
    if (vol > 4096) throw std::length_error("dense conditioned spectrum restricted to n^d <= 4096");
    const GreenTable g = zero_average_green(lat);
    std::vector<std::int64_t> interior;
    std::vector<char> in_u(vol, 0);
    for (auto u : u_sites) {
      lat.check(u);
      in_u[u] = 1;
    }
    for (std::int64_t x = 0; x < vol; ++x)
      if (!in_u[x]) interior.push_back(x);
    const std::int64_t m = static_cast<std::int64_t>(interior.size());
    const std::int64_t q = static_cast<std::int64_t>(u_sites.size());

    Eigen::MatrixXd gcc(m, m), gcu(m, q), guu(q, q);
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < m; ++j) gcc(i, j) = g(interior[i], interior[j]);
    for (std::int64_t i = 0; i < m; ++i)
      for (std::int64_t j = 0; j < q; ++j) gcu(i, j) = g(interior[i], u_sites[j]);
    for (std::int64_t i = 0; i < q; ++i)
      for (std::int64_t j = 0; j < q; ++j) guu(i, j) = g(u_sites[i], u_sites[j]);

    Eigen::LDLT<Eigen::MatrixXd> ldlt(guu);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("G|_{UxU} numerically singular");
    const Eigen::MatrixXd xi = gcc - gcu * ldlt.solve(gcu.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(
        xi, y_zero ? Eigen::EigenvaluesOnly : Eigen::ComputeEigenvectors);
    rep.mu.assign(m, 0.0);
    for (std::int64_t k = 0; k < m; ++k) rep.mu[k] = es.eigenvalues()[m - 1 - k];
    if (!y_zero) {
      Eigen::VectorXd yv(q);
      for (std::int64_t j = 0; j < q; ++j) yv[j] = y[j];
      const Eigen::VectorXd nu = gcu * ldlt.solve(yv);
      const Eigen::VectorXd h = es.eigenvectors().transpose() * nu;
      rep.nu.assign(nu.data(), nu.data() + m);
      rep.h.assign(m, 0.0);
      for (std::int64_t k = 0; k < m; ++k) rep.h[k] = h[m - 1 - k];  // align with mu order
    }
  }

  // spectral reference sums over eta
  const AggregatedSpectrum agg = aggregate_spectrum(lat);
  long double inv_pow[7] = {0, 0, 0, 0, 0, 0, 0};
  for (int l = 2; l <= 6; ++l)
    inv_pow[l] = agg.sum([l](double eta) { return eta > 0.0 ? std::pow(1.0 / eta, l) : 0.0; });
  const long double inv_sum = agg.sum([](double eta) { return eta > 0.0 ? 1.0 / eta : 0.0; });

  rep.var_gamma = static_cast<double>(2.0L * inv_pow[2]);

  long double mu_pow[7] = {0, 0, 0, 0, 0, 0, 0};
  long double var_hat = 0.0L;
  for (std::size_t k = 0; k < rep.mu.size(); ++k) {
    const double mu = rep.mu[k];
    long double p = mu;
    for (int l = 2; l <= 6; ++l) {
      p *= mu;
      mu_pow[l] += p;
    }
    const double hk = rep.h.empty() ? 0.0 : rep.h[k];
    var_hat += 2.0L * (static_cast<long double>(mu) * mu + 2.0L * hk * hk * mu);
  }
  rep.var_gamma_hat = static_cast<double>(var_hat);
  for (int l = 2; l <= 6; ++l) rep.trace_ratio[l] = static_cast<double>(mu_pow[l] / inv_pow[l]);
  for (int l = 2; l <= 6; ++l)
    rep.normalized_power_sum[l] = [&] {
      long double s = 0.0L;
      for (double mu : rep.mu) s += std::pow(static_cast<long double>(mu) * mu / mu_pow[2], 0.5L * l);
      return static_cast<double>(s);
    }();

  rep.min_mu = rep.mu.empty() ? 0.0 : rep.mu.back();

  // Weyl interlacing: mu_k in [1/eta_{k + 2|U| + 1}, 1/eta_{k+1}] (sorted
  // ascending eta with eta_1 = 0); checked on the sorted spectrum
  {
    std::vector<double> eta_d;
    std::vector<std::int64_t> mult_d;
    detail::distinct_positive_eta(lat, eta_d, mult_d);
    std::vector<double> eta_sorted;
    eta_sorted.reserve(vol);
    eta_sorted.push_back(0.0);
    for (std::size_t j = 0; j < eta_d.size(); ++j)
      for (std::int64_t r = 0; r < mult_d[j]; ++r) eta_sorted.push_back(eta_d[j]);
    const std::int64_t usz = static_cast<std::int64_t>(u_sites.size());
    const double slack = 1e-9;
    for (std::size_t k = 0; k < rep.mu.size(); ++k) {
      const std::int64_t upper_idx = static_cast<std::int64_t>(k) + 1;  // eta_{k+1}, 0-based k
      if (upper_idx < vol) {
        const double upper = 1.0 / std::max(eta_sorted[upper_idx], 1e-300);
        if (rep.mu[k] > upper * (1.0 + slack) + slack) rep.interlacing_ok = false;
      }
      const std::int64_t lower_idx = static_cast<std::int64_t>(k) + 2 * usz + 1;
      if (usz > 0 && lower_idx < vol) {
        const double lower = 1.0 / eta_sorted[lower_idx];
        if (rep.mu[k] < lower * (1.0 - slack) - slack) rep.interlacing_ok = false;
      }
    }
  }

  // T statistic (beta_c n^d - E||gamma||^2)/sqrt(Var); meaningful for d >= 3
  if (lat.dim() >= 3) {
    const double bc = beta_critical(lat.dim());
    rep.t_statistic = static_cast<double>(
        (static_cast<long double>(bc) * vol - inv_sum) / std::sqrt(2.0L * inv_pow[2]));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Norm statistics
// ---------------------------------------------------------------------------

struct NormStatistics {
  MomentEstimate normsq_mean;     // of ||gamma||^2
  double exact_mean = 0.0;        // sum 1/eta
  double exact_var = 0.0;         // 2 sum 1/eta^2
  std::vector<double> standardized;  // X_n samples
  double ad_score = 0.0;          // Anderson-Darling A*^2 (normality, d >= 4)
  KurtosisEstimate kurtosis;      // excess kurtosis with CI (d = 3)
};

inline NormStatistics norm_statistics(std::span<const double> normsq_samples, double exact_mean,
                                      double exact_var) {
  if (normsq_samples.size() < 100) throw std::invalid_argument("need at least 100 samples");
  NormStatistics s;
  s.exact_mean = exact_mean;
  s.exact_var = exact_var;
  s.normsq_mean = chain_estimate(normsq_samples, "norm-squared");
  s.standardized.resize(normsq_samples.size());
  const double sd = std::sqrt(exact_var);
  for (std::size_t i = 0; i < normsq_samples.size(); ++i)
    s.standardized[i] = (normsq_samples[i] - exact_mean) / sd;
  s.ad_score = anderson_darling_stat(s.standardized);
  s.kurtosis = excess_kurtosis(s.standardized);
  return s;
}

// ---------------------------------------------------------------------------
// Local CLT diagnostic
// ---------------------------------------------------------------------------

struct DensityDiagnostic {
  std::vector<double> grid;
  std::vector<double> empirical;
  std::vector<double> reference;
  double sup_distance = 0.0;
  double integral = 0.0;          // of the empirical density over the grid
  double lindeberg_ratio = 0.0;   // at eps = 0.1
  // structural conditions of the triangular-array density CLT with the
  // documented defaults l_* = 1, l^* = 6 (r = 3/2), K = 30 x median sigma
  double cond_a = 0.0;
  double cond_b = 0.0;
  double cond_c = 0.0;
  bool cond_a_ok = false;
  bool cond_b_ok = false;
  bool cond_c_ok = false;
  double bandwidth = 0.0;
};

namespace detail {

// E[(Y^2-1)^2 ; |Y^2-1| > c] for standard normal Y, in closed form
inline double truncated_square_mass(double c) {
  const auto upper = [](double a) {  // moments restricted to Y > a, a >= 0
    const double q = 1.0 - normal_cdf(a);
    const double p = normal_pdf(a);
    const double m2 = a * p + q;
    const double m4 = (a * a * a + 3.0 * a) * p + 3.0 * q;
    return m4 - 2.0 * m2 + q;
  };
  double mass = 2.0 * upper(std::sqrt(1.0 + c));  // region Y^2 > 1 + c
  if (c < 1.0) {                                   // region Y^2 < 1 - c
    const double b = std::sqrt(1.0 - c);
    const double inside_p = 2.0 * normal_cdf(b) - 1.0;
    const double inside_m2 = inside_p - 2.0 * b * normal_pdf(b);
    const double inside_m4 = 3.0 * inside_p - 2.0 * (b * b * b + 3.0 * b) * normal_pdf(b);
    mass += inside_m4 - 2.0 * inside_m2 + inside_p;
  }
  return mass;
}

}  // namespace detail

inline DensityDiagnostic local_clt_diagnostic(std::span<const double> weights, std::int64_t samples,
                                              std::uint64_t seed,
                                              std::span<const double> reference_pdf_on_grid = {}) {
  if (samples < 10000) throw std::invalid_argument("need at least 10^4 samples");
  std::vector<double> lam(weights.begin(), weights.end());
  for (double l : lam)
    if (!(l > 0.0)) throw std::domain_error("weights must be positive");
  std::sort(lam.begin(), lam.end(), std::greater<double>());
  const std::size_t n = lam.size();

  long double s2 = 0.0L;
  for (double l : lam) s2 += 2.0L * static_cast<long double>(l) * l;
  const double sn = std::sqrt(static_cast<double>(s2));
  if (!(sn > 0.0)) throw std::domain_error("degenerate weights");

  DensityDiagnostic diag;
  diag.grid = uniform_grid(-4.0, 4.0, 321);

  std::vector<double> replicas(samples);
  for (std::int64_t s = 0; s < samples; ++s) {
    Rng rng(seed, "local-clt", static_cast<std::uint64_t>(s));
    long double acc = 0.0L;
    for (double l : lam) {
      const double yv = rng.normal();
      acc += static_cast<long double>(l) * (yv * yv - 1.0);
    }
    replicas[s] = static_cast<double>(acc) / sn;
  }

  diag.bandwidth = silverman_bandwidth(replicas);
  diag.empirical = kde_on_grid(replicas, diag.grid, diag.bandwidth);
  if (!reference_pdf_on_grid.empty()) {
    diag.reference.assign(reference_pdf_on_grid.begin(), reference_pdf_on_grid.end());
  } else {
    diag.reference.resize(diag.grid.size());
    for (std::size_t i = 0; i < diag.grid.size(); ++i) diag.reference[i] = normal_pdf(diag.grid[i]);
  }
  diag.sup_distance = sup_distance(diag.empirical, diag.reference);
  long double integral = 0.0L;
  for (std::size_t i = 1; i < diag.grid.size(); ++i)
    integral += 0.5L * (diag.empirical[i] + diag.empirical[i - 1]) * (diag.grid[i] - diag.grid[i - 1]);
  diag.integral = static_cast<double>(integral);

  // Lindeberg ratio at eps = 0.1: sum_i E[X_i^2; |X_i| > eps s_n] / s_n^2
  const double eps = 0.1;
  long double lind = 0.0L;
  for (double l : lam)
    lind += static_cast<long double>(l) * l * detail::truncated_square_mass(eps * sn / l);
  diag.lindeberg_ratio = static_cast<double>(lind / s2);

  // structural conditions (a)-(c)
  const std::size_t l_star = 1, l_hi = std::min<std::size_t>(6, n);
  const double sigma_med = std::sqrt(2.0) * lam[n / 2];
  const double big_k = 30.0 * sigma_med;
  long double tail_var = 0.0L;
  for (std::size_t i = l_star - 1; i < n; ++i)
    tail_var += 2.0L * static_cast<long double>(lam[i]) * lam[i];
  diag.cond_a = static_cast<double>(tail_var / s2);
  diag.cond_a_ok = diag.cond_a >= 0.5;

  long double trunc = 0.0L;
  for (std::size_t i = l_star - 1; i < n; ++i)
    trunc += static_cast<long double>(lam[i]) * lam[i] * detail::truncated_square_mass(big_k / lam[i]);
  diag.cond_b = static_cast<double>(trunc / tail_var);
  diag.cond_b_ok = diag.cond_b <= 0.125;

  const double sigma_lhi_sq = 2.0 * lam[l_hi - 1] * lam[l_hi - 1];
  diag.cond_c = (static_cast<double>(n) - static_cast<double>(l_hi)) /
                (std::max(sigma_lhi_sq, big_k * big_k) * std::log(static_cast<double>(s2)));
  diag.cond_c_ok = diag.cond_c > 5.0;
  return diag;
}

// ---------------------------------------------------------------------------
// Exact finite-n moments of the spherical model
// ---------------------------------------------------------------------------

// Contour representation of moments under the density prop to
// exp(-(beta/2) sum eta_w v_w^2) on the sphere sum v_w^2 = n^d. Writing the
// sphere constraint as an inverse Laplace transform gives
//   Z  prop to  int_R exp(g(y)) dy,   g(y) = i n^d y - (1/2) sum_w log(c_w + i y),
// with c_w = s* + (beta/2) eta_w and the contour through the saddle s*, where
// g'(0) = 0 exactly when sum_w 1/(2 c_w) = n^d -- the torus mass equation with
// m^2 = 2 s* / beta. Mode moments insert rational factors:
//   E[v_w^2] = <1/(2(c_w+iy))>,  E[v_w^4] = <3/(2(c_w+iy))^2>,
// where <.> is the g-weighted normalized contour average.
struct SphericalExactMoments {
  double pair_energy = 0.0;     // E[(1/n^d) sum_{x~y, ordered} theta_x theta_y]
  double neighbor_cov = 0.0;    // E[theta_0 theta_e]
  double zero_mode_sq = 0.0;    // E[m-bar^2]
  double zero_mode_4th = 0.0;   // E[m-bar^4]
  double saddle = 0.0;          // s*
};

inline SphericalExactMoments spherical_exact_moments(const TorusLattice& lat, double beta) {
  using cplx = std::complex<double>;
  std::vector<double> eta;
  std::vector<std::int64_t> mult;
  detail::distinct_positive_eta(lat, eta, mult);
  const double vol = static_cast<double>(lat.volume());

  // saddle: sum_w 1/(2(s + beta eta_w / 2)) = n^d, strictly decreasing in s
  const auto saddle_fn = [&](double s) {
    long double acc = 1.0L / (2.0 * s);  // zero mode
    for (std::size_t j = 0; j < eta.size(); ++j)
      acc += static_cast<long double>(mult[j]) / (2.0 * (s + 0.5 * beta * eta[j]));
    return static_cast<double>(acc) - vol;
  };
  double lo = 1e-300, hi = 1.0;
  while (saddle_fn(hi) > 0.0) hi *= 2.0;
  lo = hi * 1e-20;
  while (saddle_fn(lo) < 0.0) lo *= 0.5;
  for (int it = 0; it < 2000 && hi - lo > 1e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (saddle_fn(mid) > 0.0 ? lo : hi) = mid;
  }
  const double s_star = 0.5 * (lo + hi);

  std::vector<double> c(eta.size() + 1);
  std::vector<double> weight(eta.size() + 1);
  std::vector<double> eta_all(eta.size() + 1);
  c[0] = s_star;
  weight[0] = 1.0;
  eta_all[0] = 0.0;
  for (std::size_t j = 0; j < eta.size(); ++j) {
    c[j + 1] = s_star + 0.5 * beta * eta[j];
    weight[j + 1] = static_cast<double>(mult[j]);
    eta_all[j + 1] = eta[j];
  }

  const auto g_shifted = [&](cplx zeta) {  // g(zeta) - g(0); Re <= 0 on the real axis
    cplx acc = cplx(0.0, 1.0) * vol * zeta;
    for (std::size_t j = 0; j < c.size(); ++j)
      acc -= 0.5 * weight[j] * std::log(1.0 + cplx(0.0, 1.0) * zeta / c[j]);
    return acc;
  };
  // horizontal leg up to y1, then the contour turns vertical: for Re zeta > 0
  // the integrand is analytic and the vertical leg decays like e^{-n^d sigma}
  const double c_max = *std::max_element(c.begin(), c.end());
  double y1 = 1.0 / std::sqrt(vol);
  int guard = 0;
  while (g_shifted(cplx(y1, 0.0)).real() > -70.0 && y1 < 30.0 * c_max && guard++ < 200) y1 *= 2.0;
  const double sigma_max = 200.0 / vol;

  // integrand(-y) = conj(integrand(y)): twice the real part of the half-line;
  // factors are kept O(1) so one relative tolerance serves all moments
  const auto contour = [&](const std::function<cplx(cplx)>& factor) {
    const auto horiz = [&](double y) {
      const cplx z(y, 0.0);
      return (std::exp(g_shifted(z)) * factor(z)).real();
    };
    double total = integrate_qag(horiz, 0.0, y1, 1e-14, 1e-11, 4000).value;
    if (g_shifted(cplx(y1, 0.0)).real() > -70.0) {
      const auto vert = [&](double sigma) {
        const cplx z(y1, sigma);
        return (cplx(0.0, 1.0) * std::exp(g_shifted(z)) * factor(z)).real();
      };
      total += integrate_qag(vert, 0.0, sigma_max, 1e-14, 1e-11, 4000).value;
    }
    return total;
  };

  const double z_norm = contour([](cplx) { return cplx(1.0, 0.0); });

  SphericalExactMoments out;
  out.saddle = s_star;
  const double quad_scale = [&] {
    double s = 0.0;
    for (std::size_t j = 1; j < c.size(); ++j) s += weight[j] * eta_all[j] / (2.0 * c[j]);
    return s;
  }();
  const cplx iunit(0.0, 1.0);
  const double quad_mean = quad_scale *
                           contour([&](cplx z) {
                             cplx acc(0.0, 0.0);
                             for (std::size_t j = 1; j < c.size(); ++j)
                               acc += weight[j] * eta_all[j] / (2.0 * (c[j] + iunit * z));
                             return acc / quad_scale;
                           }) /
                           z_norm;
  out.pair_energy = 2.0 * lat.dim() - quad_mean / vol;
  out.neighbor_cov = out.pair_energy / (2.0 * lat.dim());

  const double c0 = c[0];
  const double v0sq =
      contour([&](cplx z) { return c0 / (c0 + iunit * z); }) / (2.0 * c0 * z_norm);
  out.zero_mode_sq = v0sq / vol;
  const double v0fourth = 3.0 / (4.0 * c0 * c0) *
                          contour([&](cplx z) {
                            const cplx r = c0 / (c0 + iunit * z);
                            return r * r;
                          }) /
                          z_norm;
  out.zero_mode_4th = v0fourth / (vol * vol);
  return out;
}

// ---------------------------------------------------------------------------
// Mixed moments of sampled fields
// ---------------------------------------------------------------------------

struct SitePower {
  std::int64_t site;
  int power;
};

inline MomentEstimate moment_table(const std::vector<std::vector<double>>& field_samples,
                                   std::span<const SitePower> powers, std::string label = {}) {
  std::vector<double> vals(field_samples.size());
  for (std::size_t s = 0; s < field_samples.size(); ++s) {
    double v = 1.0;
    for (const auto& [site, power] : powers)
      for (int p = 0; p < power; ++p) v *= field_samples[s][site];
    vals[s] = v;
  }
  return chain_estimate(vals, std::move(label));
}

inline double even_moment_factorial_bound(int p) {  // (2p)!
  double f = 1.0;
  for (int k = 2; k <= 2 * p; ++k) f *= k;
  return f;
}

}  // namespace torusgff
