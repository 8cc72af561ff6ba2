#include "loggas/geometry.hpp"

#include "loggas/errors.hpp"

namespace loggas {

Domain Domain::torus(int d) {
  require(d >= 1 && d <= 3, ErrorKind::configuration, "dimension must be 1, 2 or 3");
  return Domain{Kind::torus, d, 1.0};
}

Domain Domain::free_space(int d, double radius) {
  require(d >= 1 && d <= 3, ErrorKind::configuration, "dimension must be 1, 2 or 3");
  require(radius > 0.0, ErrorKind::configuration, "free-space radius must be positive");
  return Domain{Kind::free_space, d, radius};
}

Point displacement(const Domain& dom, const Point& x, const Point& y) {
  Point z{0.0, 0.0, 0.0};
  for (int c = 0; c < dom.d; ++c) {
    double v = x[c] - y[c];
    if (dom.is_torus()) v -= std::floor(v + 0.5);
    z[c] = v;
  }
  return z;
}

double norm(const Point& z, int d) {
  double s = 0.0;
  for (int c = 0; c < d; ++c) s += z[c] * z[c];
  return std::sqrt(s);
}

Point Configuration::point(std::size_t i) const {
  Point p{0.0, 0.0, 0.0};
  for (int c = 0; c < d; ++c) p[c] = coords[i * static_cast<std::size_t>(d) + c];
  return p;
}

void Configuration::set(std::size_t i, const Point& p) {
  for (int c = 0; c < d; ++c) coords[i * static_cast<std::size_t>(d) + c] = p[c];
}

void Configuration::wrap() {
  for (double& v : coords) v = wrap01(v);
}

}  // namespace loggas
