#pragma once

// Spectrum of -Delta on the torus and the orthonormal real eigenbasis
//   q^w_x = n^{-d/2} prod_i (cos + sin)(2 pi x_i w_i / n).
// The basis is the separable cas (Hartley) basis, so the mode transform is a
// multidimensional DHT: orthonormal, involutive, and FFTW-native. Site->mode
// and mode->site are the same operation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include <fftw3.h>

#include "torusgff/lattice.hpp"

namespace torusgff {

inline double axis_eigen_term(int side, int w) {
  return 2.0 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(w) / side));
}

inline double eigenvalue(const TorusLattice& lat, std::span<const int> mode) {
  double eta = 0.0;
  for (int i = 0; i < lat.dim(); ++i) eta += axis_eigen_term(lat.side(), mode[i]);
  return eta;
}

inline double eigenvalue(const TorusLattice& lat, std::int64_t mode_flat) {
  const Coords w = lat.to_coords(mode_flat);
  return eigenvalue(lat, std::span<const int>(w.data(), lat.dim()));
}

// (eta, multiplicity) pairs aggregated over axis-reflection symmetry; the
// list has O((n/2)^d / d!) entries, which keeps spectral sums cheap on
// lattices too large to tabulate mode by mode.
struct AggregatedSpectrum {
  std::vector<double> eta;
  std::vector<std::int64_t> mult;

  template <class F>
  long double sum(F&& f) const {  // sum over all n^d modes of f(eta_w)
    long double acc = 0.0L;
    for (std::size_t i = 0; i < eta.size(); ++i) acc += static_cast<long double>(f(eta[i])) * mult[i];
    return acc;
  }
};

inline AggregatedSpectrum aggregate_spectrum(const TorusLattice& lat) {
  const int n = lat.side();
  const int d = lat.dim();
  const int reps = n / 2 + 1;
  std::vector<double> c(reps);
  std::vector<std::int64_t> axis_mult(reps);
  for (int w = 0; w < reps; ++w) {
    c[w] = axis_eigen_term(n, w);
    axis_mult[w] = (w == 0 || 2 * w == n) ? 1 : 2;
  }
  AggregatedSpectrum out;
  std::vector<double> fact(d + 1, 1.0);
  for (int i = 1; i <= d; ++i) fact[i] = fact[i - 1] * i;

  // nondecreasing representative tuples
  std::vector<int> tuple(d);
  auto rec = [&](auto&& self, int axis, int lo, double eta_acc, std::int64_t mult_acc) -> void {
    if (axis == d) {
      // ordered arrangements of the multiset
      double arrangements = fact[d];
      int run = 1;
      for (int i = 1; i < d; ++i) {
        if (tuple[i] == tuple[i - 1]) {
          ++run;
          arrangements /= run;
        } else {
          run = 1;
        }
      }
      out.eta.push_back(eta_acc);
      out.mult.push_back(mult_acc * static_cast<std::int64_t>(std::llround(arrangements)));
      return;
    }
    for (int w = lo; w < reps; ++w) {
      tuple[axis] = w;
      self(self, axis + 1, w, eta_acc + c[w], mult_acc * axis_mult[w]);
    }
  };
  rec(rec, 0, 0, 0.0, 1);
  return out;
}

struct SpectrumTable {
  TorusLattice lattice;
  std::vector<double> eigenvalues;       // by flat mode index
  std::vector<std::int64_t> sorted_view; // ascending eta, ties by flat index

  double sorted_eta(std::int64_t k) const { return eigenvalues[sorted_view[k]]; }
};

inline SpectrumTable build_spectrum(const TorusLattice& lat) {
  const std::int64_t vol = lat.volume();
  if (vol > (std::int64_t{1} << 26)) throw std::length_error("spectrum table too large; use aggregate_spectrum");
  SpectrumTable t{lat, std::vector<double>(vol), std::vector<std::int64_t>(vol)};
  const int n = lat.side();
  const int d = lat.dim();
  std::vector<double> c(n);
  for (int w = 0; w < n; ++w) c[w] = axis_eigen_term(n, w);
  Coords w{};
  for (std::int64_t f = 0; f < vol; ++f) {
    double eta = 0.0;
    for (int i = 0; i < d; ++i) eta += c[w[i]];
    t.eigenvalues[f] = eta;
    for (int i = d - 1; i >= 0; --i) {
      if (++w[i] < n) break;
      w[i] = 0;
    }
  }
  std::iota(t.sorted_view.begin(), t.sorted_view.end(), 0);
  std::stable_sort(t.sorted_view.begin(), t.sorted_view.end(), [&](std::int64_t a, std::int64_t b) {
    if (t.eigenvalues[a] != t.eigenvalues[b]) return t.eigenvalues[a] < t.eigenvalues[b];
    return a < b;
  });
  return t;
}

inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

// Orthonormal separable cas transform. forward() maps a site-space field to
// its coefficients in the q^w basis; the transform is its own inverse.
class HartleyTransform {
 public:
  explicit HartleyTransform(const TorusLattice& lat)
      : lattice_(lat), norm_(1.0 / std::sqrt(static_cast<double>(lat.volume()))) {
    int dims[kMaxDim];
    fftw_r2r_kind kinds[kMaxDim];
    for (int i = 0; i < lat.dim(); ++i) {
      dims[i] = lat.side();
      kinds[i] = FFTW_DHT;
    }
    std::vector<double> a(lat.volume()), b(lat.volume());
    std::lock_guard<std::mutex> g(fftw_planner_mutex());
    plan_ = fftw_plan_r2r(lat.dim(), dims, a.data(), b.data(), kinds,
                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!plan_) throw std::runtime_error("fftw plan creation failed");
  }

  ~HartleyTransform() {
    std::lock_guard<std::mutex> g(fftw_planner_mutex());
    fftw_destroy_plan(plan_);
  }

  HartleyTransform(const HartleyTransform&) = delete;
  HartleyTransform& operator=(const HartleyTransform&) = delete;

  const TorusLattice& lattice() const { return lattice_; }

  void forward(std::span<const double> in, std::span<double> out) const {
    const std::int64_t vol = lattice_.volume();
    if (static_cast<std::int64_t>(in.size()) != vol || static_cast<std::int64_t>(out.size()) != vol)
      throw std::invalid_argument("field length does not match lattice volume");
    if (in.data() == out.data()) {
      std::vector<double> tmp(in.begin(), in.end());
      fftw_execute_r2r(plan_, tmp.data(), out.data());
    } else {
      fftw_execute_r2r(plan_, const_cast<double*>(in.data()), out.data());
    }
    for (std::int64_t i = 0; i < vol; ++i) out[i] *= norm_;
  }

  std::vector<double> forward(std::span<const double> in) const {
    std::vector<double> out(lattice_.volume());
    forward(in, out);
    return out;
  }

  void to_modes(std::span<const double> site, std::span<double> modes) const { forward(site, modes); }
  void from_modes(std::span<const double> modes, std::span<double> site) const { forward(modes, site); }

 private:
  TorusLattice lattice_;
  double norm_;
  fftw_plan plan_;
};

// Dense basis matrix Q(x, w) = q^w_x; test oracle for small lattices.
inline std::vector<double> basis_matrix(const TorusLattice& lat) {
  const std::int64_t vol = lat.volume();
  if (vol > 4096) throw std::length_error("dense basis restricted to n^d <= 4096");
  std::vector<double> q(vol * vol);
  const double norm = 1.0 / std::sqrt(static_cast<double>(vol));
  for (std::int64_t x = 0; x < vol; ++x) {
    const Coords cx = lat.to_coords(x);
    for (std::int64_t w = 0; w < vol; ++w) {
      const Coords cw = lat.to_coords(w);
      double v = norm;
      for (int i = 0; i < lat.dim(); ++i) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(cx[i]) * cw[i] / lat.side();
        v *= std::cos(t) + std::sin(t);
      }
      q[x * vol + w] = v;
    }
  }
  return q;
}

}  // namespace torusgff
