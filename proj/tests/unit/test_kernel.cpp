#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/special_functions/expint.hpp>

#include "loggas/errors.hpp"
#include "loggas/kernel.hpp"
#include "loggas/measure.hpp"
#include "loggas/rng.hpp"

using namespace loggas;
using std::numbers::pi;

namespace {

double closed_form_d1(double x) { return -std::log(2.0 * std::sin(pi * x)) / pi; }

// Abel-regularized d = 1 series in closed form: q = e^{-2 pi eps}.
double abel_d1(double x, double eps) {
  const double q = std::exp(-2.0 * pi * eps);
  return -std::log(1.0 - 2.0 * q * std::cos(2.0 * pi * x) + q * q) / (2.0 * pi);
}
double abel_d1_slope(double x, double eps) {
  const double q = std::exp(-2.0 * pi * eps);
  return -2.0 * q * std::sin(2.0 * pi * x) / (1.0 - 2.0 * q * std::cos(2.0 * pi * x) + q * q);
}

Point pt(double a, double b = 0.0, double c = 0.0) { return Point{a, b, c}; }

}  // namespace

TEST_CASE("torus d=1 series matches the logarithmic closed form within the tail bound") {
  const Kernel k = Kernel::torus_log(1, 64);
  const double v = k.eval(pt(0.5), pt(0.0));
  CHECK(std::abs(v - (-std::log(2.0) / pi)) <= k.tail_bound_at(0.5));
  CHECK(v == doctest::Approx(-0.22064).epsilon(1e-2));
  for (int j = 0; j < 64; ++j) {
    const double x = (j + 0.5) / 64.0;
    CHECK(std::abs(k.eval(pt(x), pt(0.0)) - closed_form_d1(x)) <= k.tail_bound_at(x));
  }
}

TEST_CASE("d=1 truncation error shrinks as K doubles") {
  // Below K = 32 the 64-point maximum is dominated by the node nearest 0 and oscillates.
  double previous = 1e300;
  for (int K : {32, 64, 128, 256, 512}) {
    const Kernel k = Kernel::torus_log(1, K);
    double worst = 0.0;
    for (int j = 0; j < 64; ++j) {
      const double x = (j + 0.5) / 64.0;
      const double e = std::abs(k.eval(pt(x), pt(0.0)) - closed_form_d1(x));
      CHECK(e <= k.tail_bound_at(x));
      worst = std::max(worst, e);
    }
    CHECK(worst < previous);
    previous = worst;
  }
}

TEST_CASE("regularized d=1 series matches the Abel-summed closed form") {
  const Kernel k = Kernel::torus_log(1, 4096);
  for (double eps : {0.01, 0.003}) {
    for (double x : {0.1, 0.25, 0.5, 0.8}) {
      CHECK(k.eval_regularized(eps, pt(x), pt(0.0)) == doctest::Approx(abel_d1(x, eps)).epsilon(1e-9));
      CHECK(k.gradient(eps, pt(x), pt(0.0))[0] == doctest::Approx(abel_d1_slope(x, eps)).epsilon(1e-8));
    }
  }
}

TEST_CASE("d=1 derivative at 1/4 tends to -cot(pi/4) = -1") {
  const Kernel k = Kernel::torus_log(1, 8192);
  const double eps = 1e-3;  // Abel summation of the divergent derivative series
  const double g = k.gradient(eps, pt(0.25), pt(0.0))[0];
  CHECK(std::abs(g - abel_d1_slope(0.25, eps)) < 1e-6);
  CHECK(std::abs(g + 1.0) < 1e-4);
}

TEST_CASE("torus d=2 kernel has zero mean") {
  const Kernel k = Kernel::torus_log(2, 8);
  double s = 0.0;
  const int M = 32;
  for (int i = 0; i < M; ++i)
    for (int j = 0; j < M; ++j) s += k.eval(pt(double(i) / M, double(j) / M), pt(0.0, 0.0));
  CHECK(std::abs(s / (M * M)) < 1e-13);

  const Kernel big = Kernel::torus_log(2, 64);
  std::vector<double> ones(big.half_modes().size(), 1.0);
  double t = 0.0;
  for (double v : synthesize_on_grid(big, 256, ones)) t += v;
  CHECK(std::abs(t / (256.0 * 256.0)) < 1e-12);
}

TEST_CASE("grid synthesis agrees with pointwise evaluation, including aliased grids") {
  const Kernel k = Kernel::torus_log(2, 6);
  for (int M : {8, 16}) {
    std::vector<double> f;
    for (const Mode& m : k.half_modes()) f.push_back(k.multiplier(m.freq, 0.01));
    const auto vals = synthesize_on_grid(k, M, f);
    for (int i = 0; i < M; ++i)
      for (int j = 0; j < M; ++j)
        CHECK(vals[i * M + j] ==
              doctest::Approx(k.eval_regularized(0.01, pt(double(i) / M, double(j) / M), pt(0.0, 0.0))).epsilon(1e-10));
  }
}

TEST_CASE("free-log basics") {
  const Kernel k = Kernel::free_log(2);
  CHECK(k.eval(pt(1.0, 0.0), pt(0.0, 0.0)) == 0.0);
  const Point g = k.gradient(0.0, pt(1.0, 0.0), pt(0.0, 0.0));
  CHECK(g[0] == doctest::Approx(-1.0));
  CHECK(g[1] == 0.0);
  CHECK_THROWS_AS(k.eval(pt(0.3, 0.3), pt(0.3, 0.3)), Error);
  try {
    k.eval(pt(0.3, 0.3), pt(0.3, 0.3));
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::domain);
  }
  CHECK_THROWS_AS(k.gradient(0.0, pt(0.1, 0.1), pt(0.1, 0.1)), Error);
  CHECK(std::isfinite(k.eval_regularized(0.01, pt(0.1, 0.1), pt(0.1, 0.1))));
}

TEST_CASE("free-log d=2 radial quadrature matches the exponential-integral closed form") {
  const Kernel k = Kernel::free_log(2);
  for (double eps : {1e-3, 0.05, 0.4}) {
    for (double r : {1e-4, 0.02, 0.3, 1.0, 3.0}) {
      const double exact = -std::log(r) - 0.5 * boost::math::expint(1, r * r / (4.0 * eps));
      CHECK(k.free_regularized(eps, r) == doctest::Approx(exact).epsilon(1e-7));
    }
    const double at0 = -0.5 * std::log(4.0 * eps) + 0.5 * std::numbers::egamma;
    CHECK(k.diagonal(eps) == doctest::Approx(at0).epsilon(1e-7));
  }
}

TEST_CASE("free-log d=3 quadrature matches the noncentral radial law") {
  const Kernel k = Kernel::free_log(3);
  using boost::math::quadrature::gauss_kronrod;
  for (double eps : {0.01, 0.2}) {
    const double s2 = 2.0 * eps, s = std::sqrt(s2);
    for (double r : {0.05, 0.4, 2.0}) {
      // |x + Y| for Y ~ N(0, s2 I_3), |x| = r
      auto f = [&](double R) {
        const double dens = R / (r * s * std::sqrt(2.0 * pi)) *
                            (std::exp(-(R - r) * (R - r) / (2 * s2)) - std::exp(-(R + r) * (R + r) / (2 * s2)));
        return -std::log(R) * dens;
      };
      const double lo = std::max(0.0, r - 12 * s), hi = r + 12 * s;
      const double oracle = lo > 0.0 ? gauss_kronrod<double, 61>::integrate(f, lo, hi, 20, 1e-12)
                                     : gauss_kronrod<double, 61>::integrate(f, 0.0, r, 20, 1e-12) +
                                           gauss_kronrod<double, 61>::integrate(f, r, hi, 20, 1e-12);
      CHECK(k.free_regularized(eps, r) == doctest::Approx(oracle).epsilon(1e-7));
      const double h = 1e-5 * r;
      const double fd = (k.free_regularized(eps, r + h) - k.free_regularized(eps, r - h)) / (2 * h);
      CHECK(k.free_regularized_slope(eps, r) == doctest::Approx(fd).epsilon(1e-4));
    }
  }
}

TEST_CASE("free-log d=1 uses the Poisson regularization") {
  const Kernel k = Kernel::free_log(1);
  boost::math::quadrature::tanh_sinh<double> ts;
  const double eps = 0.1, z = 0.37;
  // -int ln|z - y| eps / (pi (y^2 + eps^2)) dy with y = eps tan(t)
  const double ts_star = std::atan(z / eps);
  auto f = [&](double t) { return -std::log(std::abs(z - eps * std::tan(t))) / pi; };
  const double oracle = ts.integrate(f, -pi / 2, ts_star) + ts.integrate(f, ts_star, pi / 2);
  CHECK(k.eval_regularized(eps, pt(z), pt(0.0)) == doctest::Approx(oracle).epsilon(1e-8));
}

TEST_CASE("regularized diagonal is translation invariant, decreasing in eps, and vanishes for large eps") {
  const Kernel k = Kernel::torus_log(2, 64);
  const double eps = 0.01;
  CHECK(k.eval_regularized(eps, pt(0, 0), pt(0, 0)) == k.eval_regularized(eps, pt(0.3, 0.7), pt(0.3, 0.7)));
  double prev = 1e300;
  for (int j = 12; j >= 2; --j) {
    const double v = k.diagonal(std::ldexp(1.0, -j));
    CHECK(v < prev);
    prev = v;
  }
  CHECK(std::abs(k.eval_regularized(10.0, pt(0.1, 0.2), pt(0.7, 0.4))) < 1e-100);
  CHECK_THROWS_AS(k.eval_regularized(0.0, pt(0, 0), pt(0.5, 0.5)), Error);
  CHECK_THROWS_AS(k.eval_regularized(-1.0, pt(0, 0), pt(0.5, 0.5)), Error);
}

TEST_CASE("kernel construction guards") {
  CHECK_THROWS_AS(Kernel(Domain::torus(2), Family::torus_log, 0), Error);
  CHECK(Kernel::torus_log(1).order() == SemigroupOrder::half);
  CHECK(Kernel::torus_log(2).order() == SemigroupOrder::full);
  CHECK(Kernel::torus_log(3).cutoff() == 24);
  CHECK(Kernel::torus_log(2).cutoff() == 64);
  const Kernel k = Kernel::torus_log(3, 3);
  for (const Mode& m : k.half_modes()) {
    CHECK(m.coeff > 0.0);
    CHECK(k.coefficient(m.k) == m.coeff);
    CHECK(k.coefficient({-m.k[0], -m.k[1], -m.k[2]}) == m.coeff);
  }
  CHECK(k.coefficient({0, 0, 0}) == 0.0);
  CHECK(k.half_modes().size() == (7u * 7u * 7u - 1u) / 2u);
}

TEST_CASE("property: gradient antisymmetry and symmetry of evaluation") {
  Stream s(11);
  const Kernel kernels[] = {Kernel::torus_log(1, 16), Kernel::torus_log(2, 16), Kernel::torus_log(3, 5),
                            Kernel::free_log(2), Kernel::free_log(3)};
  for (const Kernel& k : kernels) {
    for (int t = 0; t < 20; ++t) {
      Point x{s.uniform(), s.uniform(), s.uniform()}, y{s.uniform(), s.uniform(), s.uniform()};
      for (int c = k.dim(); c < 3; ++c) x[c] = y[c] = 0.0;
      const double eps = t % 2 ? 0.0 : 0.01;
      CHECK(k.value_eps(eps, x, y) == doctest::Approx(k.value_eps(eps, y, x)).epsilon(1e-12));
      const Point a = k.gradient(eps, x, y), b = k.gradient(eps, y, x);
      for (int c = 0; c < k.dim(); ++c) CHECK(std::abs(a[c] + b[c]) <= 1e-9 * (1.0 + std::abs(a[c])));
    }
  }
}

TEST_CASE("property: gradient matches finite differences of the value") {
  Stream s(12);
  const Kernel kernels[] = {Kernel::torus_log(2, 12), Kernel::free_log(2), Kernel::free_log(3)};
  for (const Kernel& k : kernels) {
    for (int t = 0; t < 10; ++t) {
      Point x{s.uniform(), s.uniform(), s.uniform()}, y{s.uniform(), s.uniform(), s.uniform()};
      for (int c = k.dim(); c < 3; ++c) x[c] = y[c] = 0.0;
      const double eps = 0.02;
      const Point g = k.gradient(eps, x, y);
      for (int c = 0; c < k.dim(); ++c) {
        Point xp = x, xm = x;
        xp[c] += 1e-5;
        xm[c] -= 1e-5;
        const double fd = (k.value_eps(eps, xp, y) - k.value_eps(eps, xm, y)) / 2e-5;
        CHECK(g[c] == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("property: H-stability on zero-sum atomic signed measures") {
  Stream s(13);
  const Kernel k = Kernel::torus_log(2, 10);
  for (int t = 0; t < 25; ++t) {
    const int n = 2 + static_cast<int>(s.index(7));
    std::vector<Point> y(n);
    std::vector<double> q(n);
    double total = 0.0;
    for (int a = 0; a < n; ++a) {
      y[a] = pt(s.uniform(), s.uniform());
      q[a] = s.normal();
      total += q[a];
    }
    for (double& v : q) v -= total / n;
    const double eps = t % 3 == 0 ? 0.0 : 0.005 * (t % 3);
    double quad = 0.0;
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) quad += q[a] * q[b] * k.value_eps(eps, y[a], y[b]);
    // spectral side over the full cube of modes
    double spec = 0.0;
    for (int k1 = -10; k1 <= 10; ++k1)
      for (int k2 = -10; k2 <= 10; ++k2) {
        if (k1 == 0 && k2 == 0) continue;
        const double f = 2.0 * pi * std::hypot(double(k1), double(k2));
        std::complex<double> eta = 0.0;
        for (int a = 0; a < n; ++a) eta += q[a] * std::polar(1.0, 2.0 * pi * (k1 * y[a][0] + k2 * y[a][1]));
        spec += std::pow(f, -2) * std::exp(-f * f * eps) * std::norm(eta);
      }
    CHECK(spec >= 0.0);
    CHECK(quad == doctest::Approx(spec).epsilon(1e-10).scale(1.0));
  }
}

TEST_CASE("semigroup property of the multipliers") {
  for (const Kernel& k : {Kernel::torus_log(1, 32), Kernel::torus_log(2, 16)}) {
    for (const Mode& m : k.half_modes()) {
      const double a = k.multiplier(m.freq, 0.003) * k.multiplier(m.freq, 0.011);
      CHECK(a == doctest::Approx(k.multiplier(m.freq, 0.014)).epsilon(1e-13));
    }
    std::vector<double> two, one;
    for (const Mode& m : k.half_modes()) {
      two.push_back(k.multiplier(m.freq, 0.003) * k.multiplier(m.freq, 0.011));
      one.push_back(k.multiplier(m.freq, 0.014));
    }
    const auto a = synthesize_on_grid(k, 64, two), b = synthesize_on_grid(k, 64, one);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("tail bounds") {
  const Kernel k1 = Kernel::torus_log(1, 64);
  CHECK(std::isinf(k1.tail_bound(0.0)));
  CHECK(k1.tail_bound_at(0.5) == doctest::Approx(1.0 / (65.0 * pi)));
  const Kernel k2 = Kernel::torus_log(2, 64);
  CHECK(std::isinf(k2.tail_bound(0.0)));
  CHECK(k2.tail_bound(0.01) < 1e-30);
  CHECK(k2.tail_bound(1e-5) > 0.0);
  CHECK(std::isfinite(k2.tail_bound(1e-5)));
}

TEST_CASE("Besov report: single mode closed form and determinism") {
  const Kernel k = Kernel::torus_log(1, 1);
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(1));
  const std::vector<double> eps{0.1, 0.05, 0.01};
  const auto rep = verify_besov(k, u, 1, eps, 4096, 32);
  for (std::size_t i = 0; i < eps.size(); ++i)
    CHECK(rep.besov_norms[i] == doctest::Approx(2.0 * (1.0 - std::exp(-2.0 * pi * eps[i])) / (pi * pi)).epsilon(1e-6));
  const auto again = verify_besov(k, u, 1, eps, 4096, 32);
  CHECK(again.besov_norms == rep.besov_norms);
  CHECK(again.fitted_exponents == rep.fitted_exponents);
  CHECK_THROWS_AS(verify_besov(k, u, 1, {}, 64, 32), Error);
  CHECK_THROWS_AS(verify_besov(k, u, 0, eps, 64, 32), Error);
}

TEST_CASE("Besov report: d=2 single mode with p=2 against Parseval") {
  const Kernel k = Kernel::torus_log(2, 1);
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(2));
  const std::vector<double> eps{0.02, 0.01};
  const auto rep = verify_besov(k, u, 2, eps, 64, 32);
  for (std::size_t i = 0; i < eps.size(); ++i) {
    // modes (+-1,0), (0,+-1): c = 1/(2pi)^2; (+-1,+-1): c = 1/(8 pi^2); ||.||_2^2 = sum_k c^2 (1-m)^2
    const double c1 = 1.0 / (4 * pi * pi), c2 = 1.0 / (8 * pi * pi);
    const double m1 = std::exp(-4 * pi * pi * eps[i]), m2 = std::exp(-8 * pi * pi * eps[i]);
    const double exact = 4 * c1 * c1 * (1 - m1) * (1 - m1) + 4 * c2 * c2 * (1 - m2) * (1 - m2);
    CHECK(rep.besov_norms[i] == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("superharmonicity report") {
  const Kernel f2 = Kernel::free_log(2);
  const auto rep = verify_superharmonicity(f2, {0.0625, 0.015625}, 16);
  for (double m : rep.superharm_minima) CHECK(m >= -1e-6);
  CHECK_THROWS_AS(verify_superharmonicity(f2, {0.1}, 7), Error);
  const Kernel t3 = Kernel::torus_log(3, 8);
  const auto r3 = verify_superharmonicity(t3, {0.0625, 0.03125, 0.015625}, 16);
  CHECK(std::isfinite(r3.fitted_exponents[0]));
}
