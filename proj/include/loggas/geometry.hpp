#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

namespace loggas {

using Point = std::array<double, 3>;  // unused trailing coordinates stay 0

struct Domain {
  enum class Kind { torus, free_space };
  Kind kind = Kind::torus;
  int d = 1;
  double radius = 1.0;  // free space: base measures live in [-radius, radius]^d

  static Domain torus(int d);
  static Domain free_space(int d, double radius = 1.0);
  bool is_torus() const { return kind == Kind::torus; }
  double period() const { return 1.0; }
};

inline double wrap01(double x) {
  double r = x - std::floor(x);
  return r >= 1.0 ? 0.0 : r;
}

/// Displacement x - y; on the torus each coordinate is reduced to [-1/2, 1/2).
Point displacement(const Domain& dom, const Point& x, const Point& y);
double norm(const Point& z, int d);

/// Ordered list of N points, flat storage (n * d).
struct Configuration {
  int d = 1;
  std::vector<double> coords;

  Configuration() = default;
  Configuration(int dim, std::size_t n) : d(dim), coords(n * static_cast<std::size_t>(dim), 0.0) {}

  std::size_t size() const { return coords.size() / static_cast<std::size_t>(d); }
  Point point(std::size_t i) const;
  void set(std::size_t i, const Point& p);
  double* data(std::size_t i) { return coords.data() + i * static_cast<std::size_t>(d); }
  const double* data(std::size_t i) const { return coords.data() + i * static_cast<std::size_t>(d); }
  void wrap();  // reduce mod 1 (torus only)
};

}  // namespace loggas
