#pragma once

// Samplers for every random object in the toolkit:
//   * exact massive / zero-average GFF draws in the eigenbasis,
//   * the spherical model via pair-rotation Gibbs moves in mode space, with a
//     Bingham-type rejection sampler and an importance-sampling oracle as
//     independent cross-checks,
//   * the spin O(N) heat bath with exact von Mises-Fisher site conditionals.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "torusgff/lattice.hpp"
#include "torusgff/mass_solver.hpp"
#include "torusgff/rng.hpp"
#include "torusgff/spectral.hpp"
#include "torusgff/stats.hpp"

namespace torusgff {

// ---------------------------------------------------------------------------
// Sample containers
// ---------------------------------------------------------------------------

enum class LawTag { MassiveGFF, ZeroAvgGFF, ZeroAvgPlusConstant, Spherical, SpinON };

inline const char* to_string(LawTag t) {
  switch (t) {
    case LawTag::MassiveGFF: return "massive-gff";
    case LawTag::ZeroAvgGFF: return "zero-avg-gff";
    case LawTag::ZeroAvgPlusConstant: return "zero-avg-plus-constant";
    case LawTag::Spherical: return "spherical";
    case LawTag::SpinON: return "spin-on";
  }
  return "?";
}

struct RngProvenance {
  std::uint64_t seed = 0;
  std::string stream;
  std::uint64_t index = 0;
  std::int64_t sweeps = 0;
};

struct FieldSample {
  TorusLattice lattice;
  int components = 1;
  std::vector<double> values;  // site-major: values[site * components + c]
  LawTag law = LawTag::MassiveGFF;
  double m2 = 0.0;
  double beta = 0.0;
  int spin_n = 0;
  double constant_shift = 0.0;
  RngProvenance provenance;

  double at(std::int64_t site, int comp = 0) const { return values[site * components + comp]; }
};

struct ChainDiagnostics {
  std::int64_t sweeps = 0;
  std::int64_t burn_in = 0;
  double moves_per_site = 0.0;
  double rejection_trials_per_move = 0.0;
  double autocorrelation_time = 0.5;
  double ess = 0.0;
  std::string observable;
  double max_norm_drift = 0.0;  // spherical chains: pre-renormalization drift
};

// ---------------------------------------------------------------------------
// Exact Gaussian samplers
// ---------------------------------------------------------------------------

class GaussianFieldSampler {
 public:
  enum class Law { Massive, ZeroAverage };

  GaussianFieldSampler(const TorusLattice& lat, Law law, double m2 = 0.0)
      : lattice_(lat), transform_(lat), law_(law), m2_(m2), scale_(lat.volume()) {
    if (law == Law::Massive && !(m2 > 0.0)) throw std::domain_error("massive GFF requires m^2 > 0");
    const int n = lat.side();
    std::vector<double> c(n);
    for (int w = 0; w < n; ++w) c[w] = axis_eigen_term(n, w);
    Coords mode{};
    for (std::int64_t f = 0; f < lat.volume(); ++f) {
      double eta = 0.0;
      for (int i = 0; i < lat.dim(); ++i) eta += c[mode[i]];
      scale_[f] = (law == Law::Massive) ? 1.0 / std::sqrt(m2 + eta)
                                        : (eta > 0.0 ? 1.0 / std::sqrt(eta) : 0.0);
      for (int i = lat.dim() - 1; i >= 0; --i) {
        if (++mode[i] < n) break;
        mode[i] = 0;
      }
    }
  }

  const TorusLattice& lattice() const { return lattice_; }
  const HartleyTransform& transform() const { return transform_; }

  void draw(Rng& rng, std::span<double> site_field) const {
    const std::int64_t vol = lattice_.volume();
    std::vector<double> modes(vol);
    for (std::int64_t w = 0; w < vol; ++w) modes[w] = scale_[w] * rng.normal();
    transform_.from_modes(modes, site_field);
  }

 private:
  TorusLattice lattice_;
  HartleyTransform transform_;
  Law law_;
  double m2_;
  std::vector<double> scale_;
};

inline FieldSample sample_massive_gff(const TorusLattice& lat, double m2, int components,
                                      std::uint64_t seed) {
  GaussianFieldSampler s(lat, GaussianFieldSampler::Law::Massive, m2);
  FieldSample f{lat, components, std::vector<double>(lat.volume() * components),
                LawTag::MassiveGFF, m2, 0.0, 0, 0.0, RngProvenance{seed, "gff", 0, 0}};
  std::vector<double> buf(lat.volume());
  for (int c = 0; c < components; ++c) {
    Rng rng(seed, "gff", static_cast<std::uint64_t>(c));
    s.draw(rng, buf);
    for (std::int64_t x = 0; x < lat.volume(); ++x) f.values[x * components + c] = buf[x];
  }
  return f;
}

inline FieldSample sample_zero_avg_gff(const TorusLattice& lat, std::uint64_t seed) {
  GaussianFieldSampler s(lat, GaussianFieldSampler::Law::ZeroAverage);
  FieldSample f{lat, 1, std::vector<double>(lat.volume()), LawTag::ZeroAvgGFF,
                0.0,  0.0, 0, 0.0, RngProvenance{seed, "zero-avg-gff", 0, 0}};
  Rng rng(seed, "zero-avg-gff", 0);
  s.draw(rng, f.values);
  return f;
}

// ---------------------------------------------------------------------------
// Spherical model: pair-rotation Gibbs in mode space
// ---------------------------------------------------------------------------

// State lives on the sphere sum_w v_w^2 = n^d in the eigenbasis, where the
// target density is proportional to exp(-(beta/2) sum_w eta_w v_w^2). A move
// rotates one random mode pair: with (v_i, v_j) = r (cos phi, sin phi), the
// angle conditional is exp(-(beta r^2 / 4)(eta_i - eta_j) cos 2 phi), a von
// Mises law in psi = 2 phi, sampled exactly. The zero mode takes part like
// any other mode; the low-temperature physics lives there.
class SphericalGibbs {
 public:
  SphericalGibbs(const TorusLattice& lat, double beta, std::uint64_t seed, std::uint64_t chain_index)
      : lattice_(lat),
        transform_(lat),
        beta_(beta),
        rng_(seed, "spherical-gibbs", chain_index),
        eta_(build_spectrum(lat).eigenvalues),
        v_(lat.volume()) {
    if (beta < 0.0) throw std::domain_error("beta must be nonnegative");
    build_low_modes();
    // start from the uniform law on the sphere (the beta -> 0 target)
    double norm2 = 0.0;
    for (auto& v : v_) {
      v = rng_.normal();
      norm2 += v * v;
    }
    rescale(std::sqrt(static_cast<double>(lattice_.volume()) / norm2));
  }

  // start the chain at a normalized massive-GFF draw; with the solved torus
  // mass this is already close to the target and cuts burn-in
  void init_from_gff(double m2) {
    double norm2 = 0.0;
    for (std::int64_t w = 0; w < lattice_.volume(); ++w) {
      v_[w] = rng_.normal() / std::sqrt(m2 + eta_[w]);
      norm2 += v_[w] * v_[w];
    }
    rescale(std::sqrt(static_cast<double>(lattice_.volume()) / norm2));
  }

  void sweep() {
    const std::int64_t vol = lattice_.volume();
    for (std::int64_t move = 0; move < vol; ++move) {
      const std::int64_t i = rng_.uniform_below(vol);
      std::int64_t j = rng_.uniform_below(vol - 1);
      if (j >= i) ++j;
      const double r2 = v_[i] * v_[i] + v_[j] * v_[j];
      if (r2 <= 0.0) continue;
      const double s = 0.25 * beta_ * r2 * (eta_[i] - eta_[j]);
      double psi = sample_doubled_angle(s);
      double phi = 0.5 * psi;
      if (rng_.uniform01() < 0.5) phi += std::numbers::pi;
      const double r = std::sqrt(r2);
      v_[i] = r * std::cos(phi);
      v_[j] = r * std::sin(phi);
    }
    ++sweeps_done_;
    // the moves preserve the sphere exactly in exact arithmetic; track the
    // numerical drift and renormalize
    double norm2 = 0.0;
    for (double v : v_) norm2 += v * v;
    const double drift = std::abs(norm2 / static_cast<double>(lattice_.volume()) - 1.0);
    max_drift_ = std::max(max_drift_, drift);
    rescale(std::sqrt(static_cast<double>(lattice_.volume()) / norm2));
  }

  const TorusLattice& lattice() const { return lattice_; }
  double beta() const { return beta_; }
  const std::vector<double>& modes() const { return v_; }
  const std::vector<double>& eta() const { return eta_; }

  std::vector<double> site_field() const {
    std::vector<double> out(lattice_.volume());
    transform_.from_modes(v_, out);
    return out;
  }

  // m-bar = n^{-d} sum_x theta_x = v_0 / sqrt(n^d)
  double magnetization() const { return v_[0] / std::sqrt(static_cast<double>(lattice_.volume())); }

  // (1/n^d) sum over ordered neighbor pairs of theta_x theta_y
  double energy_per_site() const {
    long double quad = 0.0L;
    for (std::int64_t w = 0; w < lattice_.volume(); ++w)
      quad += static_cast<long double>(eta_[w]) * v_[w] * v_[w];
    return static_cast<double>(2.0L * lattice_.dim() - quad / lattice_.volume());
  }

  // energy carried by the softest modes (zero mode included); the designated
  // slow observable for burn-in estimation
  double low_mode_energy() const {
    double s = 0.0;
    for (std::int64_t k = 0; k < low_cut_; ++k) s += v_[low_modes_[k]] * v_[low_modes_[k]];
    return s / static_cast<double>(lattice_.volume());
  }

  double max_norm_drift() const { return max_drift_; }
  std::int64_t sweeps_done() const { return sweeps_done_; }
  double rejection_trials_per_move() const {
    return moves_ > 0 ? static_cast<double>(vm_trials_) / moves_ : 0.0;
  }

 private:
  void rescale(double factor) {
    for (auto& v : v_) v *= factor;
  }

  // density prop to exp(-s cos psi') after centering; exact von Mises draw
  double sample_doubled_angle(double s) {
    ++moves_;
    const double kappa = std::abs(s);
    if (kappa < 1e-12) {
      ++vm_trials_;
      return (2.0 * rng_.uniform01() - 1.0) * std::numbers::pi;
    }
    const double tau = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
    const double rho = (tau - std::sqrt(2.0 * tau)) / (2.0 * kappa);
    const double rk = (1.0 + rho * rho) / (2.0 * rho);
    double psi0;
    for (;;) {
      ++vm_trials_;
      const double z = std::cos(std::numbers::pi * rng_.uniform01());
      const double f = std::clamp((1.0 + rk * z) / (rk + z), -1.0, 1.0);
      const double c = kappa * (rk - f);
      const double u = rng_.uniform_pos();
      if (c * (2.0 - c) - u > 0.0 || std::log(c / u) + 1.0 - c >= 0.0) {
        psi0 = (rng_.uniform01() < 0.5 ? -1.0 : 1.0) * std::acos(f);
        break;
      }
    }
    // s > 0 wants cos psi = -1: shift the mode to pi
    return s > 0.0 ? psi0 + std::numbers::pi : psi0;
  }

  void build_low_modes() {
    const std::int64_t vol = lattice_.volume();
    low_cut_ = std::min<std::int64_t>(8, vol);
    std::vector<std::int64_t> idx(vol);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::int64_t a, std::int64_t b) { return eta_[a] < eta_[b]; });
    low_modes_.assign(idx.begin(), idx.begin() + low_cut_);
  }

  TorusLattice lattice_;
  HartleyTransform transform_;
  double beta_;
  Rng rng_;
  std::vector<double> eta_;
  std::vector<double> v_;
  std::vector<std::int64_t> low_modes_;
  std::int64_t low_cut_ = 0;
  std::int64_t sweeps_done_ = 0;
  std::int64_t moves_ = 0;
  std::int64_t vm_trials_ = 0;
  double max_drift_ = 0.0;
};

struct SphericalRun {
  FieldSample sample;
  ChainDiagnostics diagnostics;
};

// Convenience wrapper matching the one-shot contract: run a chain, return the
// final configuration plus diagnostics on the low-mode-energy observable.
inline SphericalRun sample_spherical_gibbs(const ModelParams& params, std::int64_t sweeps,
                                           std::int64_t burn_in, std::uint64_t seed,
                                           std::uint64_t chain_index = 0) {
  if (sweeps <= burn_in) throw std::invalid_argument("sweeps must exceed burn_in");
  SphericalGibbs chain(params.lattice, params.beta, seed, chain_index);
  std::vector<double> obs;
  obs.reserve(sweeps - burn_in);
  for (std::int64_t s = 0; s < sweeps; ++s) {
    chain.sweep();
    if (s >= burn_in) obs.push_back(chain.low_mode_energy());
  }
  SphericalRun run{
      FieldSample{params.lattice, 1, chain.site_field(), LawTag::Spherical, 0.0, params.beta, 0,
                  0.0, RngProvenance{seed, "spherical-gibbs", chain_index, sweeps}},
      ChainDiagnostics{}};
  run.diagnostics.sweeps = sweeps;
  run.diagnostics.burn_in = burn_in;
  run.diagnostics.moves_per_site = 1.0;
  run.diagnostics.rejection_trials_per_move = chain.rejection_trials_per_move();
  run.diagnostics.autocorrelation_time = integrated_autocorrelation_time(obs);
  run.diagnostics.ess =
      static_cast<double>(obs.size()) / (2.0 * run.diagnostics.autocorrelation_time);
  run.diagnostics.observable = "low-mode-energy";
  run.diagnostics.max_norm_drift = chain.max_norm_drift();
  return run;
}

// pilot-run heuristic: 20 x the autocorrelation time of the low-mode energy
inline std::int64_t adaptive_burn_in(const ModelParams& params, std::uint64_t seed,
                                     std::int64_t pilot_sweeps = 400) {
  SphericalGibbs chain(params.lattice, params.beta, seed, 0xb00b5);
  std::vector<double> obs;
  obs.reserve(pilot_sweeps);
  for (std::int64_t s = 0; s < pilot_sweeps; ++s) {
    chain.sweep();
    obs.push_back(chain.low_mode_energy());
  }
  const double tau = integrated_autocorrelation_time(obs);
  return std::max<std::int64_t>(50, static_cast<std::int64_t>(std::ceil(20.0 * tau)));
}

// ---------------------------------------------------------------------------
// Importance-sampling oracle for tiny spheres
// ---------------------------------------------------------------------------

struct TinyMomentRequest {
  std::vector<int> powers;  // one exponent per site, length n^d
  std::string label;
};

struct TinyMomentTable {
  std::vector<MomentEstimate> moments;
  double ess = 0.0;
  bool low_ess_warning = false;
};

// Uniform-sphere proposals reweighted by exp((beta/2) sum_{x~y} theta_x theta_y);
// the brute-force oracle for the Gibbs sampler on n^d <= 16 sites.
inline TinyMomentTable spherical_exact_tiny(const ModelParams& params, std::int64_t samples,
                                            std::uint64_t seed,
                                            const std::vector<TinyMomentRequest>& requests) {
  const TorusLattice& lat = params.lattice;
  const std::int64_t vol = lat.volume();
  if (vol > 16) throw std::domain_error("importance-sampling oracle restricted to n^d <= 16");
  std::vector<std::vector<std::int64_t>> nbs(vol);
  for (std::int64_t x = 0; x < vol; ++x) nbs[x] = lat.neighbors(x);

  std::vector<std::vector<double>> values(requests.size());
  std::vector<double> logw(samples);
  std::vector<double> theta(vol);
  Rng rng(seed, "spherical-is", 0);
  for (auto& v : values) v.resize(samples);

  for (std::int64_t s = 0; s < samples; ++s) {
    double norm2 = 0.0;
    for (auto& t : theta) {
      t = rng.normal();
      norm2 += t * t;
    }
    const double scale = std::sqrt(static_cast<double>(vol) / norm2);
    for (auto& t : theta) t *= scale;
    double energy = 0.0;  // ordered pairs
    for (std::int64_t x = 0; x < vol; ++x)
      for (std::int64_t y : nbs[x]) energy += theta[x] * theta[y];
    logw[s] = 0.5 * params.beta * energy;
    for (std::size_t r = 0; r < requests.size(); ++r) {
      double v = 1.0;
      for (std::int64_t x = 0; x < vol; ++x)
        for (int p = 0; p < requests[r].powers[x]; ++p) v *= theta[x];
      values[r][s] = v;
    }
  }
  const double logw_max = *std::max_element(logw.begin(), logw.end());
  std::vector<double> w(samples);
  for (std::int64_t s = 0; s < samples; ++s) w[s] = std::exp(logw[s] - logw_max);

  TinyMomentTable table;
  for (std::size_t r = 0; r < requests.size(); ++r) {
    const WeightedEstimate e = weighted_estimate(values[r], w);
    table.moments.push_back(MomentEstimate{e.value, e.std_error, e.ess, requests[r].label});
    table.ess = e.ess;
  }
  table.low_ess_warning = table.ess < 100.0;
  return table;
}

// ---------------------------------------------------------------------------
// Bingham-type global rejection sampler (exactness cross-check, n^d <= 64)
// ---------------------------------------------------------------------------

// Draws the mode vector v on the radius-sqrt(n^d) sphere with density prop to
// exp(-(beta/2) sum eta_w v_w^2), by rejection from an angular central
// Gaussian envelope.
class SphericalRejection {
 public:
  SphericalRejection(const TorusLattice& lat, double beta, std::uint64_t seed)
      : lattice_(lat), rng_(seed, "spherical-acg", 0) {
    const std::int64_t vol = lat.volume();
    if (vol > 64) throw std::domain_error("rejection sampler restricted to n^d <= 64");
    const SpectrumTable t = build_spectrum(lat);
    b_.resize(vol);
    for (std::int64_t w = 0; w < vol; ++w)
      b_[w] = 0.5 * beta * static_cast<double>(vol) * t.eigenvalues[w];
    // solve sum_i 1/(b0 + 2 b_i) = 1 for the envelope parameter
    double lo = 1e-12, hi = static_cast<double>(vol);
    auto g = [&](double b0) {
      double s = 0.0;
      for (double bi : b_) s += 1.0 / (b0 + 2.0 * bi);
      return s - 1.0;
    };
    while (g(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) > 0.0 ? lo : hi) = mid;
    }
    b0_ = 0.5 * (lo + hi);
    omega_.resize(vol);
    for (std::int64_t w = 0; w < vol; ++w) omega_[w] = 1.0 + 2.0 * b_[w] / b0_;
  }

  std::vector<double> draw() {
    const std::int64_t vol = lattice_.volume();
    const double p = static_cast<double>(vol);
    std::vector<double> u(vol);
    for (;;) {
      ++trials_;
      double q = 0.0, norm2 = 0.0;
      for (std::int64_t w = 0; w < vol; ++w) {
        u[w] = rng_.normal() / std::sqrt(omega_[w]);
        norm2 += u[w] * u[w];
      }
      const double inv = 1.0 / norm2;
      double bu = 0.0, ou = 0.0;
      for (std::int64_t w = 0; w < vol; ++w) {
        bu += b_[w] * u[w] * u[w] * inv;
        ou += omega_[w] * u[w] * u[w] * inv;
      }
      const double log_accept =
          -bu + 0.5 * p * std::log(ou) + 0.5 * (p - b0_) - 0.5 * p * std::log(p / b0_);
      if (std::log(rng_.uniform_pos()) < log_accept) {
        const double scale = std::sqrt(p / norm2);
        for (auto& x : u) x *= scale;
        ++accepted_;
        return u;
      }
    }
  }

  double acceptance_rate() const {
    return trials_ > 0 ? static_cast<double>(accepted_) / trials_ : 0.0;
  }

 private:
  TorusLattice lattice_;
  Rng rng_;
  std::vector<double> b_;
  std::vector<double> omega_;
  double b0_ = 1.0;
  std::int64_t trials_ = 0;
  std::int64_t accepted_ = 0;
};

// ---------------------------------------------------------------------------
// Spin O(N) heat bath
// ---------------------------------------------------------------------------

// cosine of the polar angle of a vMF(kappa) draw on S^{N-1} (Ulrich/Wood)
inline double sample_vmf_cos(Rng& rng, int n_dim, double kappa, std::int64_t* trials = nullptr) {
  const double df = static_cast<double>(n_dim - 1);
  const double b = (-2.0 * kappa + std::sqrt(4.0 * kappa * kappa + df * df)) / df;
  const double x0 = (1.0 - b) / (1.0 + b);
  const double c = kappa * x0 + df * std::log(1.0 - x0 * x0);
  for (;;) {
    if (trials) ++(*trials);
    const double z = rng.beta(0.5 * df, 0.5 * df);
    const double w = (1.0 - (1.0 + b) * z) / (1.0 - (1.0 - b) * z);
    const double u = rng.uniform_pos();
    if (kappa * w + df * std::log(1.0 - x0 * w) - c >= std::log(u)) return w;
  }
}

// vMF draw with mean direction mu (unit vector); writes a unit vector
inline void sample_vmf(Rng& rng, std::span<const double> mu, double kappa, std::span<double> out,
                       std::int64_t* trials = nullptr) {
  const int n_dim = static_cast<int>(mu.size());
  const double w = kappa > 0.0 ? sample_vmf_cos(rng, n_dim, kappa, trials) : [&] {
    if (trials) ++(*trials);
    // kappa = 0: w has density prop to (1-w^2)^{(N-3)/2}, the b = 1 case
    const double z = rng.beta(0.5 * (n_dim - 1), 0.5 * (n_dim - 1));
    return 1.0 - 2.0 * z;
  }();
  // uniform direction in the tangent space
  double dot = 0.0, norm2 = 0.0;
  std::vector<double> t(n_dim);
  do {
    dot = 0.0;
    norm2 = 0.0;
    for (int i = 0; i < n_dim; ++i) {
      t[i] = rng.normal();
      dot += t[i] * mu[i];
    }
    for (int i = 0; i < n_dim; ++i) {
      t[i] -= dot * mu[i];
      norm2 += t[i] * t[i];
    }
  } while (norm2 <= 0.0);
  const double tang = std::sqrt(std::max(0.0, 1.0 - w * w) / norm2);
  for (int i = 0; i < n_dim; ++i) out[i] = w * mu[i] + tang * t[i];
}

class SpinONHeatBath {
 public:
  SpinONHeatBath(const TorusLattice& lat, double beta, int spin_n, std::uint64_t seed,
                 std::uint64_t chain_index)
      : lattice_(lat),
        beta_(beta),
        n_(spin_n),
        rng_(seed, "spin-on-heatbath", chain_index),
        spins_(lat.volume() * spin_n) {
    if (spin_n < 2) throw std::domain_error("spin O(N) needs N >= 2");
    // independent uniform spins on sqrt(N) S^{N-1}
    for (std::int64_t x = 0; x < lat.volume(); ++x) {
      double norm2 = 0.0;
      for (int i = 0; i < n_; ++i) {
        spins_[x * n_ + i] = rng_.normal();
        norm2 += spins_[x * n_ + i] * spins_[x * n_ + i];
      }
      const double scale = std::sqrt(static_cast<double>(n_) / norm2);
      for (int i = 0; i < n_; ++i) spins_[x * n_ + i] *= scale;
    }
  }

  void sweep() {
    const std::int64_t vol = lattice_.volume();
    std::vector<double> h(n_), mu(n_), u(n_);
    std::vector<std::int64_t> nb(2 * lattice_.dim());
    const double sqrt_n = std::sqrt(static_cast<double>(n_));
    for (std::int64_t x = 0; x < vol; ++x) {
      lattice_.neighbors(x, nb);
      std::fill(h.begin(), h.end(), 0.0);
      for (std::int64_t y : nb)
        for (int i = 0; i < n_; ++i) h[i] += spins_[y * n_ + i];
      double hnorm = 0.0;
      for (int i = 0; i < n_; ++i) hnorm += h[i] * h[i];
      hnorm = std::sqrt(hnorm);
      double kappa = 0.0;
      if (hnorm > 0.0) {
        for (int i = 0; i < n_; ++i) mu[i] = h[i] / hnorm;
        kappa = beta_ * sqrt_n * hnorm;
      } else {
        std::fill(mu.begin(), mu.end(), 0.0);
        mu[0] = 1.0;
      }
      sample_vmf(rng_, mu, kappa, u, &vmf_trials_);
      for (int i = 0; i < n_; ++i) spins_[x * n_ + i] = sqrt_n * u[i];
      ++site_updates_;
    }
    ++sweeps_done_;
  }

  const TorusLattice& lattice() const { return lattice_; }
  int spin_dim() const { return n_; }
  double spin(std::int64_t site, int comp) const { return spins_[site * n_ + comp]; }

  double magnetization_component(int comp) const {
    long double s = 0.0L;
    for (std::int64_t x = 0; x < lattice_.volume(); ++x) s += spins_[x * n_ + comp];
    return static_cast<double>(s / lattice_.volume());
  }

  // (1/(N n^d)) sum over ordered neighbor pairs of S_x . S_y
  double energy_per_site() const {
    long double acc = 0.0L;
    std::vector<std::int64_t> nb(2 * lattice_.dim());
    for (std::int64_t x = 0; x < lattice_.volume(); ++x) {
      lattice_.neighbors(x, nb);
      for (std::int64_t y : nb) {
        long double dot = 0.0L;
        for (int i = 0; i < n_; ++i)
          dot += static_cast<long double>(spins_[x * n_ + i]) * spins_[y * n_ + i];
        acc += dot;
      }
    }
    return static_cast<double>(acc / (static_cast<long double>(n_) * lattice_.volume()));
  }

  // first M components of the configuration
  FieldSample project(int m_components, std::uint64_t seed, std::uint64_t chain_index) const {
    FieldSample f{lattice_, m_components,
                  std::vector<double>(lattice_.volume() * m_components), LawTag::SpinON,
                  0.0, beta_, n_, 0.0,
                  RngProvenance{seed, "spin-on-heatbath", chain_index, sweeps_done_}};
    for (std::int64_t x = 0; x < lattice_.volume(); ++x)
      for (int c = 0; c < m_components; ++c) f.values[x * m_components + c] = spins_[x * n_ + c];
    return f;
  }

  double site_norm_sq(std::int64_t x) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += spins_[x * n_ + i] * spins_[x * n_ + i];
    return s;
  }

  double vmf_trials_per_update() const {
    return site_updates_ > 0 ? static_cast<double>(vmf_trials_) / site_updates_ : 0.0;
  }
  std::int64_t sweeps_done() const { return sweeps_done_; }

 private:
  TorusLattice lattice_;
  double beta_;
  int n_;
  Rng rng_;
  std::vector<double> spins_;
  std::int64_t sweeps_done_ = 0;
  std::int64_t site_updates_ = 0;
  std::int64_t vmf_trials_ = 0;
};

struct SpinONRun {
  FieldSample sample;
  ChainDiagnostics diagnostics;
};

inline SpinONRun sample_spin_on_gibbs(const ModelParams& params, int spin_n, std::int64_t sweeps,
                                      std::int64_t burn_in, std::uint64_t seed, int project_to,
                                      std::uint64_t chain_index = 0) {
  if (sweeps <= burn_in) throw std::invalid_argument("sweeps must exceed burn_in");
  if (project_to > spin_n) throw std::invalid_argument("projection exceeds spin dimension");
  SpinONHeatBath chain(params.lattice, params.beta, spin_n, seed, chain_index);
  std::vector<double> obs;
  obs.reserve(sweeps - burn_in);
  for (std::int64_t s = 0; s < sweeps; ++s) {
    chain.sweep();
    if (s >= burn_in) obs.push_back(chain.magnetization_component(0));
  }
  SpinONRun run{chain.project(project_to, seed, chain_index), ChainDiagnostics{}};
  run.diagnostics.sweeps = sweeps;
  run.diagnostics.burn_in = burn_in;
  run.diagnostics.moves_per_site = 1.0;
  run.diagnostics.rejection_trials_per_move = chain.vmf_trials_per_update();
  run.diagnostics.autocorrelation_time = integrated_autocorrelation_time(obs);
  run.diagnostics.ess =
      static_cast<double>(obs.size()) / (2.0 * run.diagnostics.autocorrelation_time);
  run.diagnostics.observable = "magnetization-component-0";
  return run;
}

}  // namespace torusgff
