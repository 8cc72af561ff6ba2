#include "loggas/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "loggas/errors.hpp"
#include "loggas/simd/kernels.hpp"
#include "loggas/stats.hpp"

namespace loggas {

EnergyEvaluator::EnergyEvaluator(const Kernel& kernel, double eps, const BaseMeasure& measure, Normalization norm)
    : kernel_(kernel), eps_(eps), measure_(measure), norm_(norm) {
  require(eps >= 0.0, ErrorKind::domain, "eps must be >= 0");
  require(kernel.dim() == measure.domain().d, ErrorKind::configuration, "kernel and measure dimensions differ");
  if (kernel.family() == Family::torus_log) {
    lattice_.emplace(kernel, eps);
    lattice_->scatter(kernel, measure.fourier_table(kernel), rho_re_, rho_im_);
    work_.resize(*lattice_);
  }
  self_ = loggas::self_energy(kernel, eps, measure);
}

void EnergyEvaluator::check_distinct(const Configuration& cfg) const {
  if (eps_ > 0.0 || kernel_.family() != Family::free_log) return;
  for (std::size_t i = 0; i < cfg.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.size(); ++j)
      if (norm(displacement(kernel_.domain(), cfg.point(i), cfg.point(j)), cfg.d) == 0.0)
        raise(ErrorKind::domain, "coincident points with the bare free-log kernel");
}

double EnergyEvaluator::pair(const Configuration& cfg) {
  const double n = static_cast<double>(cfg.size());
  if (kernel_.family() == Family::zero || cfg.size() < 2) return 0.0;
  if (!lattice_) {
    check_distinct(cfg);
    return pair_sum_direct(kernel_, eps_, cfg) / (2.0 * n);
  }
  structure_factor(*lattice_, cfg, sr_, si_, work_);
  const double s2 = simd::kernels().weighted_norm2(lattice_->weight().data(), sr_.data(), si_.data(), sr_.size());
  return (s2 - n * lattice_->diagonal()) / (2.0 * n);
}

EnergyBreakdown EnergyEvaluator::evaluate(const Configuration& cfg) {
  require(cfg.d == kernel_.dim(), ErrorKind::configuration, "configuration dimension mismatch");
  require(cfg.size() >= 1, ErrorKind::configuration, "configuration must hold at least one point");
  const double n = static_cast<double>(cfg.size());
  EnergyBreakdown e;
  e.eps = eps_;
  if (kernel_.family() == Family::zero) return e;
  e.pair = pair(cfg);
  if (lattice_ && cfg.size() < 2) structure_factor(*lattice_, cfg, sr_, si_, work_);
  if (lattice_) {
    // sr_/si_ hold S from pair(); cross = sum_i (W*rho)(x_i) = sum w Re(conj(rho) S)
    e.cross = simd::kernels().weighted_real_dot(lattice_->weight().data(), rho_re_.data(), rho_im_.data(),
                                                sr_.data(), si_.data(), sr_.size());
  } else {
    std::vector<Point> pts(cfg.size());
    for (std::size_t i = 0; i < cfg.size(); ++i) pts[i] = cfg.point(i);
    for (double v : convolve_at(kernel_, eps_, measure_, pts)) e.cross += v;
  }
  e.mean = 0.5 * n * self_;
  if (norm_ == Normalization::literal) {
    e.cross /= n;
    e.mean /= n * n;
  }
  e.total = e.pair - e.cross + e.mean;
  return e;
}

void EnergyEvaluator::gradient(const Configuration& cfg, std::vector<double>& grad, bool pair_only) {
  const std::size_t n = cfg.size();
  const int d = cfg.d;
  grad.assign(n * static_cast<std::size_t>(d), 0.0);
  if (kernel_.family() == Family::zero) return;
  const double nn = static_cast<double>(n);
  if (!lattice_) {
    require(pair_only || measure_.kind() == BaseMeasure::Kind::atomic, ErrorKind::unsupported,
            "free-space gradients against a non-atomic measure");
    check_distinct(cfg);
    for (std::size_t i = 0; i < n; ++i) {
      const Point xi = cfg.point(i);
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        const Point g = kernel_.gradient(eps_, xi, cfg.point(j));
        for (int c = 0; c < d; ++c) grad[i * d + c] += g[c] / nn;
      }
      if (pair_only) continue;
      const double scale = norm_ == Normalization::literal ? 1.0 / nn : 1.0;
      for (std::size_t a = 0; a < measure_.atoms().size(); ++a) {
        const Point g = kernel_.gradient(eps_, xi, measure_.atoms()[a]);
        for (int c = 0; c < d; ++c) grad[i * d + c] -= scale * measure_.weights()[a] * g[c];
      }
    }
    return;
  }
  structure_factor(*lattice_, cfg, sr_, si_, work_);
  // d/dx_i of (1/2N) sum w |S - N c rho|^2 is the gradient of x -> (1/N) sum w Re(conj(e_x)(S - N c rho)).
  const double c = pair_only ? 0.0 : (norm_ == Normalization::literal ? 1.0 : nn);
  const auto& w = lattice_->weight();
  br_.resize(w.size());
  bi_.resize(w.size());
  for (std::size_t m = 0; m < w.size(); ++m) {
    br_[m] = w[m] * (sr_[m] - c * rho_re_[m]) / nn;
    bi_[m] = w[m] * (si_[m] - c * rho_im_[m]) / nn;
  }
  field_at_particles(*lattice_, br_, bi_, cfg, nullptr, &grad, work_);
}

EnergyBreakdown interaction_energy(const Kernel& kernel, double eps, const BaseMeasure& measure,
                                   const Configuration& cfg, Normalization norm) {
  EnergyEvaluator ev(kernel, eps, measure, norm);
  return ev.evaluate(cfg);
}

double pair_sum_direct(const Kernel& kernel, double eps, const Configuration& cfg) {
  double s = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const Point xi = cfg.point(i);
    double row = 0.0;
    for (std::size_t j = 0; j < cfg.size(); ++j)
      if (j != i) row += kernel.value_eps(eps, xi, cfg.point(j));
    s += row;
  }
  return s;
}

double mean_energy(const Kernel& kernel, double eps, const BaseMeasure& measure, std::size_t n) {
  require(n >= 1, ErrorKind::configuration, "n must be >= 1");
  return -0.5 * self_energy(kernel, eps, measure);
}

namespace {

struct Annealer {
  const ModeLattice& lat;
  std::vector<double> rho_re, rho_im;
  std::size_t n;
  int d;
  std::vector<double> tr, ti;  // T = S - N rho
  SpectralWork work;
  std::vector<double> nrr, nri, ncr, nci;

  double energy() const {
    const double s2 = simd::kernels().weighted_norm2(lat.weight().data(), tr.data(), ti.data(), tr.size());
    return s2 / (2.0 * static_cast<double>(n)) - 0.5 * lat.diagonal();
  }

  void rebuild(const Configuration& cfg) {
    structure_factor(lat, cfg, tr, ti, work);
    for (std::size_t m = 0; m < tr.size(); ++m) {
      tr[m] -= static_cast<double>(n) * rho_re[m];
      ti[m] -= static_cast<double>(n) * rho_im[m];
    }
  }

  // Energy change when particle at `from` moves to `to`; leaves the new phases in n*.
  double delta(const double* from, const double* to) {
    lat.phases(from, work.rr.data(), work.ri.data(), work.cr.data(), work.ci.data());
    lat.phases(to, nrr.data(), nri.data(), ncr.data(), nci.data());
    const auto& K = simd::kernels();
    const std::size_t cols = lat.cols();
    double s = 0.0;
    for (std::size_t p = 0; p < lat.rows(); ++p)
      s += K.move_delta(lat.weight().data() + p * cols, tr.data() + p * cols, ti.data() + p * cols, work.rr[p],
                        work.ri[p], work.cr.data(), work.ci.data(), nrr[p], nri[p], ncr.data(), nci.data(), cols);
    return s / (2.0 * static_cast<double>(n));
  }

  void accept() {
    const auto& K = simd::kernels();
    const std::size_t cols = lat.cols();
    for (std::size_t p = 0; p < lat.rows(); ++p) {
      K.caxpy(nrr[p], nri[p], ncr.data(), nci.data(), tr.data() + p * cols, ti.data() + p * cols, cols);
      K.caxpy(-work.rr[p], -work.ri[p], work.cr.data(), work.ci.data(), tr.data() + p * cols, ti.data() + p * cols,
              cols);
    }
  }
};

}  // namespace

std::vector<LowerBoundRow> probe_lower_bound(const Kernel& kernel, const BaseMeasure& measure,
                                             const std::vector<std::size_t>& n_values, int search_budget,
                                             std::uint64_t seed, const AnnealOptions& opts) {
  require(search_budget > 0, ErrorKind::configuration, "search budget must be > 0");
  require(kernel.family() == Family::torus_log, ErrorKind::unsupported, "lower-bound probe needs a torus kernel");
  require(opts.sweeps >= 1, ErrorKind::configuration, "annealing needs >= 1 sweep");
  const int d = kernel.dim();
  EnergyEvaluator ev(kernel, opts.eps, measure);
  std::vector<LowerBoundRow> rows;
  for (std::size_t n : n_values) {
    require(n >= 2, ErrorKind::configuration, "probe needs N >= 2");
    Annealer an{ev.lattice(), ev.rho_re(), ev.rho_im(), n, d, {}, {}, {}, {}, {}, {}, {}};
    an.work.resize(ev.lattice());
    an.nrr.resize(ev.lattice().rows());
    an.nri.resize(ev.lattice().rows());
    an.ncr.resize(ev.lattice().cols());
    an.nci.resize(ev.lattice().cols());
    const double step = opts.step * std::pow(static_cast<double>(n), -1.0 / d);
    LowerBoundRow best;
    best.n = n;
    best.min_energy = std::numeric_limits<double>::infinity();
    for (int run = 0; run < search_budget; ++run) {
      Stream stream(seed, {n, static_cast<std::uint64_t>(run)});
      Configuration cfg(d, n);
      if (run == 0) {
        Point center{stream.uniform(), stream.uniform(), stream.uniform()};
        for (std::size_t i = 0; i < n; ++i) {
          Point p{0.0, 0.0, 0.0};
          double r2;
          do {
            r2 = 0.0;
            for (int c = 0; c < d; ++c) {
              p[c] = stream.uniform(-1.0, 1.0);
              r2 += p[c] * p[c];
            }
          } while (r2 > 1.0);
          for (int c = 0; c < d; ++c) p[c] = wrap01(center[c] + p[c] / static_cast<double>(n));
          cfg.set(i, p);
        }
      } else {
        cfg = measure.sample(n, stream);
      }
      an.rebuild(cfg);
      // Temperature unit: spread of single-move energy changes from the starting state.
      stats::Running probe;
      std::vector<double> trial(static_cast<std::size_t>(d));
      for (int t = 0; t < 64; ++t) {
        const std::size_t i = stream.index(n);
        for (int c = 0; c < d; ++c) trial[c] = wrap01(cfg.data(i)[c] + step * stream.normal());
        probe.add(std::abs(an.delta(cfg.data(i), trial.data())));
      }
      const double unit = std::max(probe.mean(), 1e-12);
      const double t0 = opts.t_start * unit, t1 = opts.t_end * unit;
      const double cool = std::pow(t1 / t0, 1.0 / std::max(1, opts.sweeps - 1));
      double temp = t0;
      for (int sweep = 0; sweep < opts.sweeps; ++sweep, temp *= cool) {
        for (std::size_t move = 0; move < n; ++move) {
          const std::size_t i = stream.index(n);
          for (int c = 0; c < d; ++c) trial[c] = wrap01(cfg.data(i)[c] + step * stream.normal());
          const double de = an.delta(cfg.data(i), trial.data());
          if (de <= 0.0 || stream.uniform() < std::exp(-de / temp)) {
            an.accept();
            for (int c = 0; c < d; ++c) cfg.data(i)[c] = trial[c];
          }
        }
        an.rebuild(cfg);
        const double e = an.energy();
        if (e < best.min_energy) {
          best.min_energy = e;
          best.argmin = cfg;
        }
      }
    }
    best.min_energy = ev.total(best.argmin);
    best.ratio = best.min_energy / (-std::log(static_cast<double>(n)));
    rows.push_back(std::move(best));
  }
  return rows;
}

}  // namespace loggas
