#pragma once

// Solves G_{Lambda_n, m^2}(0,0) = beta (equivalently sum_w 1/(m^2+eta_w) =
// beta n^d) and the infinite-volume analogue G_{Z^d, m^2}(0,0) = beta, and
// classifies the temperature regime against beta_c(d) = G_{Z^d}(0,0).

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <mutex>
#include <stdexcept>

#include "torusgff/greens.hpp"
#include "torusgff/lattice.hpp"
#include "torusgff/spectral.hpp"

namespace torusgff {

inline double beta_critical(int d) {
  if (d < 2) throw std::domain_error("dimension must be >= 2");
  if (d == 2) return std::numeric_limits<double>::infinity();
  static std::mutex mu;
  static std::map<int, double> cache;
  std::lock_guard<std::mutex> g(mu);
  auto it = cache.find(d);
  if (it == cache.end()) it = cache.emplace(d, zd_green(d, 0.0)).first;
  return it->second;
}

enum class Regime { HighT, Critical, LowT };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::HighT: return "HighT";
    case Regime::Critical: return "Critical";
    case Regime::LowT: return "LowT";
  }
  return "?";
}

struct ModelParams {
  TorusLattice lattice;
  double beta;
  double beta_c;  // +inf sentinel in d = 2
  double tol_c;

  ModelParams(const TorusLattice& lat, double beta_in)
      : lattice(lat), beta(beta_in), beta_c(beta_critical(lat.dim())) {
    if (!(beta > 0.0)) throw std::domain_error("beta must be positive");
    tol_c = std::isfinite(beta_c) ? 1e-9 * beta_c : 0.0;
  }

  Regime regime() const {
    if (!std::isfinite(beta_c)) return Regime::HighT;
    if (beta < beta_c - tol_c) return Regime::HighT;
    if (beta > beta_c + tol_c) return Regime::LowT;
    return Regime::Critical;
  }
};

struct MassSolution {
  double m_squared = 0.0;
  double residual = 0.0;  // |G(0,0) - beta|
  int iterations = 0;
  double bracket_lo = 0.0;
  double bracket_hi = 0.0;
};

// sum_w 1/(m^2 + eta_w), long-double accumulation over the aggregated spectrum
inline long double torus_trace_sum(const AggregatedSpectrum& agg, double m2) {
  return agg.sum([m2](double eta) { return 1.0 / (m2 + eta); });
}

inline MassSolution solve_torus_mass(const TorusLattice& lat, const AggregatedSpectrum& agg, double beta) {
  if (!(beta > 0.0)) throw std::domain_error("beta must be positive");
  const double vol = static_cast<double>(lat.volume());
  const long double target = static_cast<long double>(beta) * lat.volume();
  const auto f = [&](double m2) { return static_cast<long double>(torus_trace_sum(agg, m2)) - target; };

  MassSolution sol;
  // the sum decreases strictly from +inf at m^2 -> 0 to 0 at m^2 -> inf
  double lo = 0.5 / (beta * vol);
  double hi = 2.0 * std::max(4.0 * lat.dim(), 1.0 / beta);
  int guard = 0;
  while (f(lo) < 0.0L && guard++ < 200) lo *= 0.25;
  guard = 0;
  while (f(hi) > 0.0L && guard++ < 200) hi *= 4.0;
  sol.bracket_lo = lo;
  sol.bracket_hi = hi;

  int it = 0;
  while ((hi - lo) > 1e-14 * hi && it < 400) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) > 0.0L)
      lo = mid;
    else
      hi = mid;
    ++it;
  }
  double m2 = 0.5 * (lo + hi);
  for (int k = 0; k < 3; ++k) {  // Newton polish with the analytic derivative
    const long double val = f(m2);
    const long double deriv = -agg.sum([m2](double eta) {
      const double t = 1.0 / (m2 + eta);
      return t * t;
    });
    const double step = static_cast<double>(val / deriv);
    if (m2 - step > 0.0) m2 -= step;
    ++it;
  }
  sol.m_squared = m2;
  sol.iterations = it;
  sol.residual = std::abs(static_cast<double>(torus_trace_sum(agg, m2) / lat.volume() - beta));
  return sol;
}

inline MassSolution solve_torus_mass(const ModelParams& params) {
  return solve_torus_mass(params.lattice, aggregate_spectrum(params.lattice), params.beta);
}

// unique m^2 > 0 with G_{Z^d, m^2}(0,0) = beta; requires beta < beta_c for d >= 3
inline double solve_zd_mass(int d, double beta) {
  if (!(beta > 0.0)) throw std::domain_error("beta must be positive");
  const double bc = beta_critical(d);
  if (beta >= bc) throw std::domain_error("no positive-mass solution: beta >= beta_c");
  const auto g = [&](double m2) { return zd_green(d, m2) - beta; };
  double lo = 1e-12, hi = std::max(4.0 * d, 2.0 / beta);
  int guard = 0;
  while (g(lo) < 0.0 && guard++ < 60) lo *= 0.1;   // G(lo) must exceed beta
  guard = 0;
  while (g(hi) > 0.0 && guard++ < 60) hi *= 4.0;
  for (int it = 0; it < 200 && (hi - lo) > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double m2 = 0.5 * (lo + hi);
  for (int k = 0; k < 2; ++k) {
    const double val = g(m2);
    const double deriv = zd_green_diag_deriv(d, m2);
    const double next = m2 - val / deriv;
    if (next > 0.0) m2 = next;
  }
  return m2;
}

}  // namespace torusgff
