#pragma once

// Geometry of the d-dimensional discrete torus of side n: flat/coordinate
// indexing, neighbor enumeration, canonical lift to the centered box and
// graph distance. Flat indices are row-major with axis 0 slowest.

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace torusgff {

constexpr int kMaxDim = 8;

using Coords = std::array<int, kMaxDim>;

class TorusLattice {
 public:
  TorusLattice(int dim, int side) : dim_(dim), side_(side) {
    if (dim < 1 || dim > kMaxDim) throw std::invalid_argument("torus dim out of range");
    if (side < 2) throw std::invalid_argument("torus side must be >= 2");
    // volume = side^dim, rejected if it leaves the exactly-representable range
    std::int64_t v = 1;
    for (int i = 0; i < dim; ++i) {
      if (v > (std::int64_t{1} << 52) / side) throw std::overflow_error("n^d exceeds safe integer range");
      v *= side;
    }
    volume_ = v;
  }

  int dim() const { return dim_; }
  int side() const { return side_; }
  std::int64_t volume() const { return volume_; }

  bool valid(std::int64_t flat) const { return flat >= 0 && flat < volume_; }

  void check(std::int64_t flat) const {
    if (!valid(flat)) throw std::domain_error("site index " + std::to_string(flat) + " out of range");
  }

  // Row-major, axis 0 slowest: flat = ((c0*n + c1)*n + c2)*n + ...
  std::int64_t to_flat(std::span<const int> c) const {
    std::int64_t f = 0;
    for (int i = 0; i < dim_; ++i) f = f * side_ + c[i];
    return f;
  }

  Coords to_coords(std::int64_t flat) const {
    check(flat);
    Coords c{};
    for (int i = dim_ - 1; i >= 0; --i) {
      c[i] = static_cast<int>(flat % side_);
      flat /= side_;
    }
    return c;
  }

  // The 2d neighbors of x in the fixed order (+axis0, -axis0, +axis1, ...).
  // For n = 2 the +1 and -1 shifts coincide as sites; both entries are kept.
  void neighbors(std::int64_t x, std::span<std::int64_t> out) const {
    check(x);
    Coords c = to_coords(x);
    std::int64_t stride = 1;
    for (int i = dim_ - 1; i >= 0; --i) {
      const int up = (c[i] + 1 == side_) ? 1 - side_ : 1;
      const int dn = (c[i] == 0) ? side_ - 1 : -1;
      out[2 * i] = x + up * stride;
      out[2 * i + 1] = x + dn * stride;
      stride *= side_;
    }
  }

  std::vector<std::int64_t> neighbors(std::int64_t x) const {
    std::vector<std::int64_t> out(2 * dim_);
    neighbors(x, out);
    return out;
  }

  // Coordinatewise representative in [-floor(n/2), n - floor(n/2)).
  Coords canonical_lift(std::int64_t x) const {
    Coords c = to_coords(x);
    const int half = side_ / 2;
    for (int i = 0; i < dim_; ++i)
      if (c[i] >= side_ - half) c[i] -= side_;
    return c;
  }

  std::int64_t graph_distance(std::int64_t x, std::int64_t y) const {
    Coords a = to_coords(x), b = to_coords(y);
    std::int64_t d = 0;
    for (int i = 0; i < dim_; ++i) {
      int diff = a[i] - b[i];
      if (diff < 0) diff = -diff;
      d += std::min(diff, side_ - diff);
    }
    return d;
  }

  bool operator==(const TorusLattice& o) const { return dim_ == o.dim_ && side_ == o.side_; }

 private:
  int dim_;
  int side_;
  std::int64_t volume_;
};

}  // namespace torusgff
