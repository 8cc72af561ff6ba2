#include "loggas/kernel.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "loggas/errors.hpp"

namespace loggas {

using std::numbers::pi;

std::string to_string(Family f) {
  switch (f) {
    case Family::torus_log: return "torus-log";
    case Family::free_log: return "free-log";
    case Family::zero: return "zero";
  }
  return "?";
}

std::string to_string(SemigroupOrder s) { return s == SemigroupOrder::full ? "full" : "half"; }

Family family_from_string(const std::string& s) {
  if (s == "torus-log") return Family::torus_log;
  if (s == "free-log") return Family::free_log;
  if (s == "zero") return Family::zero;
  raise(ErrorKind::configuration, "unknown kernel family '" + s + "'");
}

namespace {

bool positive_half(const std::array<int, 3>& k) {
  for (int v : k) {
    if (v > 0) return true;
    if (v < 0) return false;
  }
  return false;
}

// Mean of ln|x - y| over the sphere |y| = rho in R^3, with |x| = r.
double sphere_log_mean(double r, double rho) {
  const double big = std::max(r, rho), small = std::min(r, rho);
  if (small < 1e-3 * big) {
    const double t = small / big;
    return std::log(big) + t * t / 6.0;
  }
  auto f = [](double s) { return s == 0.0 ? 0.0 : s * s * std::log(std::abs(s)); };
  return (f(r + rho) - f(r - rho)) / (4.0 * r * rho) - 0.5;
}

// d/dr of sphere_log_mean.
double sphere_log_mean_dr(double r, double rho) {
  if (rho < 1e-3 * r) {
    const double t = rho / r;
    return (1.0 - t * t / 3.0) / r;
  }
  if (r < 1e-3 * rho) return r / (3.0 * rho * rho);
  auto f = [](double s) { return s == 0.0 ? 0.0 : s * s * std::log(std::abs(s)); };
  auto fp = [](double s) { return s == 0.0 ? 0.0 : 2.0 * s * std::log(std::abs(s)) + s; };
  return (fp(r + rho) - fp(r - rho)) / (4.0 * r * rho) - (f(r + rho) - f(r - rho)) / (4.0 * r * r * rho);
}

template <class F>
double integrate(F f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-8, &err);
}

// Splits [0, inf) at u_split (the kink of the radial integrand) and integrates both pieces.
template <class F>
double radial_integral(F f, double u_split) {
  const double inf = std::numeric_limits<double>::infinity();
  if (u_split <= 0.0) return integrate(f, 0.0, inf);
  if (u_split > 12.0) return integrate(f, 0.0, u_split);  // Gaussian weight below 1e-60 beyond
  return integrate(f, 0.0, u_split) + integrate(f, u_split, inf);
}

}  // namespace

Kernel::Kernel(Domain domain, Family family, int cutoff)
    : domain_(domain), family_(family), cutoff_(cutoff),
      order_(domain.d == 1 ? SemigroupOrder::half : SemigroupOrder::full) {
  require(domain.d >= 1 && domain.d <= 3, ErrorKind::configuration, "dimension must be 1, 2 or 3");
  if (family == Family::torus_log) {
    require(domain.is_torus(), ErrorKind::configuration, "torus-log kernel needs a torus domain");
    require(cutoff >= 1, ErrorKind::configuration, "Fourier cutoff K must be >= 1");
    const int K = cutoff, d = domain.d;
    const int lo1 = d == 1 ? 1 : 0;
    for (int a = lo1; a <= K; ++a) {
      for (int b = (d >= 2 ? -K : 0); b <= (d >= 2 ? K : 0); ++b) {
        for (int c = (d == 3 ? -K : 0); c <= (d == 3 ? K : 0); ++c) {
          std::array<int, 3> k{a, b, c};
          if (!positive_half(k)) continue;
          Mode m;
          m.k = k;
          m.freq = 2.0 * pi * std::sqrt(double(a) * a + double(b) * b + double(c) * c);
          m.coeff = std::pow(m.freq, -d);
          modes_.push_back(m);
        }
      }
    }
  } else if (family == Family::free_log) {
    require(!domain.is_torus(), ErrorKind::configuration, "free-log kernel needs a free-space domain");
  }
}

Kernel Kernel::torus_log(int d, int cutoff) {
  return Kernel(Domain::torus(d), Family::torus_log, cutoff == 0 ? default_cutoff(d) : cutoff);
}

Kernel Kernel::free_log(int d, double radius) { return Kernel(Domain::free_space(d, radius), Family::free_log, 0); }

Kernel Kernel::zero(Domain domain) { return Kernel(domain, Family::zero, 0); }

double Kernel::coefficient(const std::array<int, 3>& k) const {
  if (family_ != Family::torus_log) return 0.0;
  double s = 0.0;
  for (int c = 0; c < dim(); ++c) {
    if (std::abs(k[c]) > cutoff_) return 0.0;
    s += double(k[c]) * k[c];
  }
  if (s == 0.0) return 0.0;
  return std::pow(2.0 * pi * std::sqrt(s), -dim());
}

double Kernel::multiplier(double freq, double eps) const {
  return order_ == SemigroupOrder::full ? std::exp(-freq * freq * eps) : std::exp(-freq * eps);
}

double Kernel::series(double eps, const Point& z) const {
  const int K = cutoff_, d = dim();
  std::vector<std::complex<double>> ph(static_cast<std::size_t>(d) * (2 * K + 1));
  for (int c = 0; c < d; ++c) {
    const std::complex<double> step = std::polar(1.0, 2.0 * pi * z[c]);
    auto* row = ph.data() + static_cast<std::size_t>(c) * (2 * K + 1) + K;
    row[0] = 1.0;
    for (int k = 1; k <= K; ++k) {
      row[k] = k % 16 == 0 ? std::polar(1.0, 2.0 * pi * k * z[c]) : row[k - 1] * step;
      row[-k] = std::conj(row[k]);
    }
  }
  double s = 0.0;
  for (const Mode& m : modes_) {
    std::complex<double> e = 1.0;
    for (int c = 0; c < d; ++c) e *= ph[static_cast<std::size_t>(c) * (2 * K + 1) + K + m.k[c]];
    const double w = eps > 0.0 ? m.coeff * multiplier(m.freq, eps) : m.coeff;
    s += w * e.real();
  }
  return 2.0 * s;
}

Point Kernel::series_gradient(double eps, const Point& z) const {
  const int K = cutoff_, d = dim();
  std::vector<std::complex<double>> ph(static_cast<std::size_t>(d) * (2 * K + 1));
  for (int c = 0; c < d; ++c) {
    auto* row = ph.data() + static_cast<std::size_t>(c) * (2 * K + 1) + K;
    for (int k = -K; k <= K; ++k) row[k] = std::polar(1.0, 2.0 * pi * k * z[c]);
  }
  Point g{0.0, 0.0, 0.0};
  for (const Mode& m : modes_) {
    std::complex<double> e = 1.0;
    for (int c = 0; c < d; ++c) e *= ph[static_cast<std::size_t>(c) * (2 * K + 1) + K + m.k[c]];
    const double w = eps > 0.0 ? m.coeff * multiplier(m.freq, eps) : m.coeff;
    for (int c = 0; c < d; ++c) g[c] -= 2.0 * w * 2.0 * pi * m.k[c] * e.imag();
  }
  return g;
}

double Kernel::eval(const Point& x, const Point& y) const {
  const Point z = displacement(domain_, x, y);
  switch (family_) {
    case Family::zero: return 0.0;
    case Family::torus_log: return series(0.0, z);
    case Family::free_log: {
      const double r = norm(z, dim());
      require(r > 0.0, ErrorKind::domain, "free-log kernel evaluated on the diagonal");
      return -std::log(r);
    }
  }
  return 0.0;
}

double Kernel::free_regularized(double eps, double r) const {
  const int d = dim();
  if (d == 1) return -0.5 * std::log(r * r + eps * eps);  // Poisson semigroup, harmonic extension
  const double s = std::sqrt(4.0 * eps);
  if (d == 2) {
    auto f = [&](double u) { return std::log(std::max(r, s * u)) * 2.0 * u * std::exp(-u * u); };
    return -radial_integral(f, r / s);
  }
  auto f = [&](double u) {
    return sphere_log_mean(r, s * u) * (4.0 / std::sqrt(pi)) * u * u * std::exp(-u * u);
  };
  return -radial_integral(f, r / s);
}

double Kernel::free_regularized_slope(double eps, double r) const {
  const int d = dim();
  if (r == 0.0) return 0.0;
  if (d == 1) return -r / (r * r + eps * eps);
  const double u = r * r / (4.0 * eps);
  if (d == 2) return -(1.0 - std::exp(-u)) / r;  // radial derivative of the split integral
  const double s = std::sqrt(4.0 * eps);
  auto f = [&](double v) {
    return sphere_log_mean_dr(r, s * v) * (4.0 / std::sqrt(pi)) * v * v * std::exp(-v * v);
  };
  return -radial_integral(f, r / s);
}

double Kernel::value_eps(double eps, const Point& x, const Point& y) const {
  if (eps == 0.0) return eval(x, y);
  const Point z = displacement(domain_, x, y);
  switch (family_) {
    case Family::zero: return 0.0;
    case Family::torus_log: return series(eps, z);
    case Family::free_log: return free_regularized(eps, norm(z, dim()));
  }
  return 0.0;
}

double Kernel::eval_regularized(double eps, const Point& x, const Point& y) const {
  require(eps > 0.0, ErrorKind::domain, "regularization eps must be > 0");
  return value_eps(eps, x, y);
}

Point Kernel::gradient(double eps, const Point& x, const Point& y) const {
  require(eps >= 0.0, ErrorKind::domain, "regularization eps must be >= 0");
  const Point z = displacement(domain_, x, y);
  const int d = dim();
  switch (family_) {
    case Family::zero: return Point{0.0, 0.0, 0.0};
    case Family::torus_log: return series_gradient(eps, z);
    case Family::free_log: {
      const double r = norm(z, d);
      Point g{0.0, 0.0, 0.0};
      if (eps == 0.0) {
        require(r > 0.0, ErrorKind::domain, "free-log gradient evaluated on the diagonal");
        for (int c = 0; c < d; ++c) g[c] = -z[c] / (r * r);
        return g;
      }
      if (r == 0.0) return g;
      const double slope = free_regularized_slope(eps, r);
      for (int c = 0; c < d; ++c) g[c] = slope * z[c] / r;
      return g;
    }
  }
  return Point{0.0, 0.0, 0.0};
}

double Kernel::diagonal(double eps) const {
  const Point o{0.0, 0.0, 0.0};
  if (family_ == Family::free_log) {
    require(eps > 0.0, ErrorKind::domain, "free-log kernel is infinite on the diagonal");
    return free_regularized(eps, 0.0);
  }
  return value_eps(eps, o, o);
}

double Kernel::tail_bound(double eps) const {
  if (family_ != Family::torus_log) return 0.0;
  const int d = dim();
  if (eps == 0.0) return std::numeric_limits<double>::infinity();
  // Shell |k|_inf = s has at most c_d s^{d-1} points, each with |k| >= s.
  const double shell_count[4] = {0.0, 2.0, 8.0, 26.0};
  double total = 0.0;
  for (long s = cutoff_ + 1; s < 100000000L; ++s) {
    const double f = 2.0 * pi * double(s);
    const double term = shell_count[d] * std::pow(double(s), d - 1) * std::pow(f, -d) * multiplier(f, eps);
    total += term;
    if (term < 1e-18 * total || term < 1e-300) return total;
  }
  return std::numeric_limits<double>::infinity();
}

double Kernel::tail_bound_at(double z) const {
  require(dim() == 1 && family_ == Family::torus_log, ErrorKind::unsupported,
          "pointwise tail bound is available for the d = 1 torus kernel only");
  // Abel summation: |sum_{k>K} cos(2 pi k z)/(pi k)| <= 1 / (pi (K+1) |sin(pi z)|).
  const double s = std::abs(std::sin(pi * z));
  if (s == 0.0) return std::numeric_limits<double>::infinity();
  return 1.0 / (pi * (cutoff_ + 1) * s);
}

std::vector<double> synthesize_on_grid(const Kernel& kernel, int M, const std::vector<double>& factor) {
  const int d = kernel.dim();
  std::size_t total = 1;
  for (int c = 0; c < d; ++c) total *= static_cast<std::size_t>(M);
  std::vector<cplx> spec(total, cplx(0.0, 0.0));
  const auto& modes = kernel.half_modes();
  auto index = [&](const std::array<int, 3>& k, int sign) {
    std::size_t idx = 0;
    for (int c = 0; c < d; ++c) idx = idx * M + static_cast<std::size_t>(wrap_index(sign * k[c], M));
    return idx;
  };
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const double a = modes[m].coeff * factor[m];
    spec[index(modes[m].k, 1)] += a;
    spec[index(modes[m].k, -1)] += a;
  }
  FftPlan plan(d, M);
  std::vector<cplx> out;
  plan.backward(spec, out);
  std::vector<double> values(total);
  for (std::size_t i = 0; i < total; ++i) values[i] = out[i].real();
  return values;
}

}  // namespace loggas
