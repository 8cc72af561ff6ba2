#include <algorithm>
#include <cmath>
#include <limits>

#include "loggas/errors.hpp"
#include "loggas/kernel.hpp"
#include "loggas/measure.hpp"
#include "loggas/stats.hpp"

namespace loggas {

namespace {

void check_epsilons(const std::vector<double>& epsilons, double upper) {
  require(!epsilons.empty(), ErrorKind::configuration, "empty eps list");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(epsilons[i] > 0.0 && epsilons[i] < upper, ErrorKind::configuration, "eps values must lie in (0, 1/2)");
    if (i > 0) require(epsilons[i] < epsilons[i - 1], ErrorKind::configuration, "eps values must strictly decrease");
  }
}

std::size_t grid_total(int d, int M) {
  std::size_t t = 1;
  for (int c = 0; c < d; ++c) t *= static_cast<std::size_t>(M);
  return t;
}

std::vector<double> mode_factor(const Kernel& kernel, double eps, bool complement) {
  std::vector<double> f;
  f.reserve(kernel.half_modes().size());
  for (const Mode& m : kernel.half_modes()) {
    const double mult = kernel.multiplier(m.freq, eps);
    f.push_back(complement ? 1.0 - mult : mult);
  }
  return f;
}

}  // namespace

RegularityReport verify_diagonal(const Kernel& kernel, const std::vector<double>& epsilons) {
  check_epsilons(epsilons, 0.5);
  RegularityReport rep;
  rep.kind = "diagonal";
  rep.epsilons = epsilons;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double eps : epsilons) {
    const double v = kernel.diagonal(eps);
    rep.diagonal_values.push_back(v);
    const double ratio = v / (std::abs(std::log(eps)) + 1.0);
    rep.residuals.push_back(ratio);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  rep.fitted_exponents = {hi, lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity()};
  rep.tail_bound = kernel.tail_bound(epsilons.back());
  return rep;
}

RegularityReport verify_besov(const Kernel& kernel, const BaseMeasure& measure, int p,
                              const std::vector<double>& epsilons, int quadrature, int sup_grid) {
  require(p >= 1 && p <= 16, ErrorKind::configuration, "Besov exponent p must lie in [1, 16]");
  check_epsilons(epsilons, 0.5);
  require(kernel.family() == Family::torus_log, ErrorKind::unsupported,
          "Besov verification is implemented for torus kernels");
  const int d = kernel.dim();
  int M = quadrature;
  if (M <= 0) {
    M = 64;
    while (M < 4 * kernel.cutoff()) M *= 2;
  }
  require(M >= 8, ErrorKind::configuration, "quadrature grid too coarse");
  const std::size_t total = grid_total(d, M);
  const double h = 1.0 / M;
  // rho at quadrature nodes (j + 1/2)/M
  std::vector<cplx> rho(total);
  for (std::size_t idx = 0; idx < total; ++idx) {
    Point y{0.0, 0.0, 0.0};
    std::size_t rest = idx;
    for (int c = d - 1; c >= 0; --c) {
      y[c] = (static_cast<double>(rest % M) + 0.5) * h;
      rest /= M;
    }
    rho[idx] = measure.density_at(y);
  }
  FftPlan plan(d, M);
  std::vector<cplx> rho_hat, a, a_hat, conv;
  plan.forward(rho, rho_hat);
  const int stride = (sup_grid > 0 && M % sup_grid == 0) ? M / sup_grid : 1;
  const double cell = std::pow(h, d);

  RegularityReport rep;
  rep.kind = "besov";
  rep.epsilons = epsilons;
  for (double eps : epsilons) {
    // (P_eps - id) W on the displacement lattice j/M
    const auto diff = synthesize_on_grid(kernel, M, mode_factor(kernel, eps, true));
    a.resize(total);
    for (std::size_t i = 0; i < total; ++i) a[i] = std::pow(std::abs(diff[i]), p);
    plan.forward(a, a_hat);
    for (std::size_t i = 0; i < total; ++i) a_hat[i] *= rho_hat[i];
    plan.backward(a_hat, conv);  // sum_j |D|^p(x_i - y_j) rho(y_j), times total
    double sup = 0.0;
    for (std::size_t idx = 0; idx < total; ++idx) {
      bool on = true;
      std::size_t rest = idx;
      for (int c = 0; c < d; ++c) {
        if ((rest % M) % static_cast<std::size_t>(stride) != 0) on = false;
        rest /= M;
      }
      if (on) sup = std::max(sup, conv[idx].real() / static_cast<double>(total) * cell);
    }
    rep.besov_norms.push_back(std::max(sup, 0.0));
    rep.diagonal_values.push_back(kernel.diagonal(eps));
  }
  if (epsilons.size() >= 2) {
    const auto fit = stats::fit_power_law(epsilons, rep.besov_norms);
    rep.fitted_exponents = {fit.slope, fit.intercept};
    rep.residuals = fit.residuals;
  }
  rep.tail_bound = kernel.tail_bound(epsilons.back());
  return rep;
}

RegularityReport verify_superharmonicity(const Kernel& kernel, const std::vector<double>& epsilons,
                                         int grid_resolution) {
  require(grid_resolution >= 8, ErrorKind::configuration, "grid resolution must be >= 8");
  check_epsilons(epsilons, 0.5);
  const int d = kernel.dim();
  const int R = grid_resolution;
  const std::size_t total = grid_total(d, R);
  RegularityReport rep;
  rep.kind = "superharmonicity";
  rep.epsilons = epsilons;
  for (double eps : epsilons) {
    double lo = std::numeric_limits<double>::infinity();
    if (kernel.family() == Family::torus_log) {
      for (double v : synthesize_on_grid(kernel, R, mode_factor(kernel, eps, true))) lo = std::min(lo, v);
    } else if (kernel.family() == Family::free_log) {
      // cell centers of [-R_dom, R_dom]^d never hit the singular point z = 0
      const double L = kernel.domain().radius, h = 2.0 * L / R;
      for (std::size_t idx = 0; idx < total; ++idx) {
        Point z{0.0, 0.0, 0.0};
        std::size_t rest = idx;
        for (int c = d - 1; c >= 0; --c) {
          z[c] = -L + (static_cast<double>(rest % R) + 0.5) * h;
          rest /= R;
        }
        const double r = norm(z, d);
        lo = std::min(lo, -std::log(r) - kernel.free_regularized(eps, r));
      }
    } else {
      lo = 0.0;
    }
    rep.superharm_minima.push_back(lo);
    rep.diagonal_values.push_back(kernel.family() == Family::free_log ? kernel.free_regularized(eps, 0.0)
                                                                      : kernel.diagonal(eps));
  }
  // Fit min >= -K eps^alpha on the negative minima.
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < epsilons.size(); ++i)
    if (rep.superharm_minima[i] < 0.0) {
      xs.push_back(epsilons[i]);
      ys.push_back(-rep.superharm_minima[i]);
    }
  if (xs.size() >= 2) {
    const auto fit = stats::fit_power_law(xs, ys);
    double K = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) K = std::max(K, ys[i] / std::pow(xs[i], fit.slope));
    rep.fitted_exponents = {K, fit.slope};
    rep.residuals = fit.residuals;
  } else if (xs.size() == 1) {
    rep.fitted_exponents = {ys[0], 0.0};
  }
  rep.tail_bound = kernel.tail_bound(epsilons.back());
  return rep;
}

}  // namespace loggas
