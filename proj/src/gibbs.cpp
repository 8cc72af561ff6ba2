#include "loggas/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/gauss.hpp>

#include "loggas/energy.hpp"
#include "loggas/parallel.hpp"
#include "loggas/partition.hpp"

namespace loggas {

namespace {

std::size_t grid_total(int d, int M) {
  std::size_t t = 1;
  for (int c = 0; c < d; ++c) t *= static_cast<std::size_t>(M);
  return t;
}

Point cell_center(std::size_t idx, int d, int M) {
  Point x{0.0, 0.0, 0.0};
  for (int c = d - 1; c >= 0; --c) {
    x[static_cast<std::size_t>(c)] = (static_cast<double>(idx % static_cast<std::size_t>(M)) + 0.5) / M;
    idx /= static_cast<std::size_t>(M);
  }
  return x;
}

std::string history_summary(const std::vector<double>& h) {
  std::ostringstream os;
  os.precision(3);
  const std::size_t head = std::min<std::size_t>(h.size(), 3);
  for (std::size_t i = 0; i < head; ++i) os << (i ? ", " : "") << h[i];
  if (h.size() > head + 5) os << ", ...";
  for (std::size_t i = std::max(head, h.size() >= 5 ? h.size() - 5 : 0); i < h.size(); ++i) os << ", " << h[i];
  return os.str();
}

}  // namespace

BaseMeasure MeanFieldMinimizer::measure() const { return BaseMeasure::grid(Domain::torus(d), cells, density); }

MeanFieldMinimizer solve_minimizer(const Kernel& kernel, const Potential& potential, int cells,
                                   const MinimizerOptions& opts) {
  const Domain& dom = kernel.domain();
  require(dom.is_torus(), ErrorKind::unsupported, "the mean-field fixed point is solved on the torus");
  require(dom.d == 1 || dom.d == 2, ErrorKind::unsupported, "the mean-field fixed point handles d = 1, 2");
  require(cells >= 4 && cells % 2 == 0, ErrorKind::configuration, "cells must be even and >= 4");
  require(opts.damping > 0.0 && opts.damping <= 1.0, ErrorKind::configuration, "damping must lie in (0, 1]");
  require(opts.tol > 0.0 && opts.max_iter >= 1, ErrorKind::configuration, "tol > 0 and max_iter >= 1 required");
  const int d = dom.d;
  const std::size_t total = grid_total(d, cells);
  const auto vnodes = potential.sample(d, cells);

  std::vector<double> mu(total, 1.0);
  if (opts.initial) {
    double s = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      mu[i] = opts.initial(cell_center(i, d, cells));
      require(mu[i] > 0.0 && std::isfinite(mu[i]), ErrorKind::configuration, "initial density must be positive");
      s += mu[i];
    }
    for (double& v : mu) v *= static_cast<double>(total) / s;
  }

  MeanFieldMinimizer out;
  out.d = d;
  out.cells = cells;
  std::vector<double> field(total), next(total);
  for (int it = 0; it <= opts.max_iter; ++it) {
    std::vector<double> conv(total, 0.0);
    if (kernel.family() != Family::zero) conv = convolve(kernel, opts.eps, BaseMeasure::grid(dom, cells, mu));
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < total; ++i) {
      field[i] = conv[i] + vnodes[i];
      lo = std::min(lo, field[i]);
    }
    double s = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      next[i] = std::exp(lo - field[i]);
      s += next[i];
    }
    const double mean = s / static_cast<double>(total);
    double res = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
      next[i] /= mean;
      res = std::max(res, std::abs(mu[i] - next[i]));
    }
    out.residual_history.push_back(res);
    if (res < opts.tol) {
      out.density = mu;
      out.z_mu = mean * std::exp(-lo);
      out.residual = res;
      out.iterations = it;
      PdeState st;
      st.d = d;
      st.cells = cells;
      st.density = mu;
      out.energy = free_energy(st, kernel, potential, opts.eps);
      return out;
    }
    if (it == opts.max_iter) break;
    for (std::size_t i = 0; i < total; ++i) mu[i] = (1.0 - opts.damping) * mu[i] + opts.damping * next[i];
  }
  std::ostringstream msg;
  msg << "mean-field fixed point did not reach tol " << opts.tol << " in " << opts.max_iter
      << " iterations; residual history: " << history_summary(out.residual_history);
  throw ConvergenceFailure(msg.str(), out.residual_history);
}

double interaction_square_mean(const Kernel& kernel, double eps, const BaseMeasure& measure) {
  if (kernel.family() == Family::zero) return 0.0;
  require(eps >= 0.0, ErrorKind::domain, "eps must be >= 0");
  if (measure.kind() == BaseMeasure::Kind::atomic) {
    const auto& a = measure.atoms();
    const auto& w = measure.weights();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
      for (std::size_t j = 0; j < a.size(); ++j) {
        const double v = kernel.value_eps(eps, a[i], a[j]);
        s += w[i] * w[j] * v * v;
      }
    return s;
  }
  require(measure.domain().is_torus() && kernel.spectral(), ErrorKind::unsupported,
          "W^2 mean needs a torus kernel for non-atomic measures");
  const auto& modes = kernel.half_modes();
  if (measure.kind() == BaseMeasure::Kind::uniform) {
    double s = 0.0;
    for (const auto& m : modes) {
      const double c = m.coeff * kernel.multiplier(m.freq, eps);
      s += 2.0 * c * c;
    }
    return s;
  }
  const int d = measure.domain().d;
  const int M = measure.cells();
  std::vector<double> factor(modes.size());
  for (std::size_t i = 0; i < modes.size(); ++i) factor[i] = kernel.multiplier(modes[i].freq, eps);
  const auto f = synthesize_on_grid(kernel, M, factor);
  const auto& rho = measure.density();
  const std::size_t total = rho.size();
  // midpoint rule: differences of cell centers are grid nodes
  std::vector<int> ia(static_cast<std::size_t>(d)), ib(static_cast<std::size_t>(d));
  double s = 0.0;
  for (std::size_t a = 0; a < total; ++a) {
    std::size_t ra = a;
    for (int c = d - 1; c >= 0; --c) {
      ia[static_cast<std::size_t>(c)] = static_cast<int>(ra % static_cast<std::size_t>(M));
      ra /= static_cast<std::size_t>(M);
    }
    double row = 0.0;
    for (std::size_t b = 0; b < total; ++b) {
      std::size_t rb = b;
      std::size_t idx = 0;
      for (int c = d - 1; c >= 0; --c) {
        ib[static_cast<std::size_t>(c)] = static_cast<int>(rb % static_cast<std::size_t>(M));
        rb /= static_cast<std::size_t>(M);
      }
      for (int c = 0; c < d; ++c) {
        const int diff = ((ia[static_cast<std::size_t>(c)] - ib[static_cast<std::size_t>(c)]) % M + M) % M;
        idx = idx * static_cast<std::size_t>(M) + static_cast<std::size_t>(diff);
      }
      row += f[idx] * f[idx] * rho[b];
    }
    s += row * rho[a];
  }
  const double vol = static_cast<double>(total);
  return s / (vol * vol);
}

namespace {

class MalaChain {
 public:
  MalaChain(const GibbsTarget& t, std::size_t n)
      : t_(t), ev_(t.kernel, t.eps, t.reference), dom_(t.reference.domain()), n_(n) {
    const auto& ref = t.reference;
    if (ref.kind() == BaseMeasure::Kind::grid && dom_.is_torus()) {
      std::vector<double> u(ref.density().size());
      for (std::size_t i = 0; i < u.size(); ++i) u[i] = -std::log(std::max(ref.density()[i], 1e-300));
      hint_ = Potential::grid(dom_.d, ref.cells(), std::move(u));
    }
  }

  // log target up to a constant; energy_out receives I(x)
  double log_target(const Configuration& x, double& energy_out) {
    const int d = dom_.d;
    if (!dom_.is_torus()) {
      for (double v : x.coords)
        if (v < -dom_.radius || v > dom_.radius) return -std::numeric_limits<double>::infinity();
    }
    energy_out = ev_.total(x);
    double lp = -t_.beta * energy_out;
    const bool ref_density = t_.reference.kind() == BaseMeasure::Kind::grid;
    for (std::size_t i = 0; i < n_; ++i) {
      const Point p = x.point(i);
      if (ref_density) {
        const double r = t_.reference.density_at(p);
        if (r <= 0.0) return -std::numeric_limits<double>::infinity();
        lp += std::log(r);
      }
      if (t_.potential.kind != Potential::Kind::zero) lp -= t_.potential.value(p, d);
    }
    return lp;
  }

  void drift(const Configuration& x, std::vector<double>& out) {
    const int d = dom_.d;
    ev_.gradient(x, grad_);
    out.resize(grad_.size());
    for (std::size_t i = 0; i < n_; ++i) {
      const Point p = x.point(i);
      Point gv{0.0, 0.0, 0.0};
      if (t_.potential.kind != Potential::Kind::zero) gv = t_.potential.gradient(p, d);
      Point gh{0.0, 0.0, 0.0};
      if (hint_) gh = hint_->gradient(p, d);
      for (int c = 0; c < d; ++c) {
        const auto cc = static_cast<std::size_t>(c);
        out[i * d + c] = -t_.beta * grad_[i * d + c] - gv[cc] - gh[cc];
      }
    }
  }

 private:
  const GibbsTarget& t_;
  EnergyEvaluator ev_;
  Domain dom_;
  std::size_t n_;
  std::optional<Potential> hint_;
  std::vector<double> grad_;
};

}  // namespace

GibbsRun sample_gibbs(const GibbsTarget& target, std::size_t n, const MalaOptions& opts, Stream& stream) {
  const Domain& dom = target.reference.domain();
  require(n >= 1, ErrorKind::configuration, "n must be >= 1");
  require(target.beta >= 0.0, ErrorKind::configuration, "beta must be >= 0");
  require(opts.samples >= 1, ErrorKind::configuration, "the chain needs at least one sample");
  require(opts.target_acceptance > 0.0 && opts.target_acceptance < 1.0, ErrorKind::configuration,
          "target acceptance must lie in (0, 1)");
  require(target.kernel.dim() == dom.d, ErrorKind::configuration, "kernel and reference dimensions differ");
  require(dom.is_torus() || target.kernel.family() == Family::zero, ErrorKind::unsupported,
          "Gibbs sampling with an interaction needs the torus");
  require(target.reference.kind() != BaseMeasure::Kind::atomic, ErrorKind::unsupported,
          "Langevin proposals need a reference measure with a density");

  const int d = dom.d;
  const double side = dom.is_torus() ? 1.0 : 2.0 * dom.radius;
  const double h_max = opts.max_step > 0.0 ? opts.max_step : side * side / 288.0;
  double h = std::min(opts.initial_step > 0.0 ? opts.initial_step : 1e-3, h_max);

  MalaChain chain(target, n);
  Configuration x = target.reference.sample(n, stream);
  double ex = 0.0;
  double lpx = chain.log_target(x, ex);
  require(std::isfinite(lpx), ErrorKind::estimation, "initial state has zero target density");
  std::vector<double> bx, by;
  chain.drift(x, bx);

  GibbsRun run;
  run.n = n;
  run.beta = target.beta;
  run.burn_in = opts.burn_in;
  run.samples = opts.samples;
  run.energies.reserve(opts.samples);

  Configuration y(d, n);
  std::vector<double> xi(x.coords.size());
  std::size_t accepted = 0;
  const std::size_t steps = opts.burn_in + opts.samples;
  for (std::size_t t = 0; t < steps; ++t) {
    const double sd = std::sqrt(2.0 * h);
    double fwd = 0.0;
    for (std::size_t k = 0; k < xi.size(); ++k) {
      xi[k] = stream.normal();
      fwd += xi[k] * xi[k];
      y.coords[k] = x.coords[k] + h * bx[k] + sd * xi[k];
    }
    if (dom.is_torus()) y.wrap();
    double ey = 0.0;
    double la = -std::numeric_limits<double>::infinity();
    const double lpy = chain.log_target(y, ey);
    if (std::isfinite(lpy)) {
      chain.drift(y, by);
      double rev = 0.0;
      for (std::size_t k = 0; k < xi.size(); ++k) {
        double z = x.coords[k] - y.coords[k] - h * by[k];
        if (dom.is_torus()) z -= std::round(z);
        rev += z * z;
      }
      la = lpy - lpx - rev / (4.0 * h) + 0.5 * fwd;
    }
    const double a = la >= 0.0 ? 1.0 : std::exp(la);
    const bool accept = stream.uniform() < a;
    if (accept) {
      std::swap(x, y);
      std::swap(bx, by);
      lpx = lpy;
      ex = ey;
    }
    if (t < opts.burn_in) {
      const double gain = std::pow(static_cast<double>(t) + 1.0, -0.6);
      h = std::clamp(h * std::exp(gain * (a - opts.target_acceptance)), 1e-12, h_max);
      continue;
    }
    if (accept) ++accepted;
    run.energies.push_back(ex);
    const std::size_t k = t - opts.burn_in + 1;
    if (opts.record_every > 0 && k % opts.record_every == 0) run.states.push_back(x);
  }

  run.step = h;
  run.step_capped = h >= h_max * (1.0 - 1e-12);
  run.acceptance = static_cast<double>(accepted) / static_cast<double>(opts.samples);
  run.flagged = !(run.acceptance > 0.2 && run.acceptance < 0.9);
  const bool capped_flat = run.step_capped && run.acceptance >= 0.95;
  if (!(run.acceptance > 0.05 && run.acceptance < 0.95) && !capped_flat) {
    std::ostringstream msg;
    msg << "MALA acceptance " << run.acceptance << " at frozen step " << h << " (N = " << n << ", beta = "
        << target.beta << ") is outside (0.05, 0.95)";
    raise(ErrorKind::tuning, msg.str());
  }
  run.mean_energy = stats::mean(run.energies);
  run.energy_std_error = run.energies.size() >= 64 ? stats::batch_means_std_error(run.energies)
                                                    : stats::std_error(run.energies);
  run.final_state = x;
  return run;
}

EntropyTable entropy_rates(const Kernel& kernel, const Potential& potential, const std::vector<std::size_t>& n_values,
                           std::uint64_t seed, const EntropyOptions& opts) {
  require(kernel.domain().is_torus(), ErrorKind::unsupported, "entropy rates are computed on the torus");
  require(!n_values.empty(), ErrorKind::configuration, "empty N list");
  for (std::size_t n : n_values)
    require(n >= 1 && n <= 256, ErrorKind::configuration, "N values must lie in [1, 256]");
  const int workers = resolve_workers(opts.workers);

  EntropyTable table;
  table.minimizer = solve_minimizer(kernel, potential, opts.minimizer_cells, opts.minimizer);
  table.uniform_reference = potential.kind == Potential::Kind::zero;
  const BaseMeasure reference =
      table.uniform_reference ? BaseMeasure::uniform(kernel.domain()) : table.minimizer.measure();
  const double w2 = interaction_square_mean(kernel, opts.eps, reference);

  // Gauss-Legendre on [0, 1]
  using GL = boost::math::quadrature::gauss<double, 8>;
  std::vector<double> nodes, weights;
  for (std::size_t i = 0; i < GL::abscissa().size(); ++i) {
    const double a = GL::abscissa()[i], w = GL::weights()[i];
    nodes.push_back(0.5 * (1.0 - a));
    weights.push_back(0.5 * w);
    if (a != 0.0) {
      nodes.push_back(0.5 * (1.0 + a));
      weights.push_back(0.5 * w);
    }
  }
  const std::size_t ti_nodes = nodes.size();

  struct Task {
    std::size_t row;
    std::size_t node;  // ti_nodes = the beta = 1 chain
  };
  std::vector<Task> tasks;
  table.rows.resize(n_values.size());
  for (std::size_t r = 0; r < n_values.size(); ++r) {
    const std::size_t n = n_values[r];
    const bool ti = opts.ti_n_values.empty() ||
                    std::find(opts.ti_n_values.begin(), opts.ti_n_values.end(), n) != opts.ti_n_values.end();
    table.rows[r].n = n;
    table.rows[r].has_ti = ti;
    if (ti)
      for (std::size_t k = 0; k < ti_nodes; ++k) tasks.push_back({r, k});
    tasks.push_back({r, ti_nodes});
  }

  std::vector<GibbsRun> runs(tasks.size());
  parallel_blocks(workers, tasks.size(), [&](std::size_t b) {
    const Task& task = tasks[b];
    const std::size_t n = n_values[task.row];
    GibbsTarget target{kernel, opts.eps, reference, Potential::zero(),
                       task.node < ti_nodes ? nodes[task.node] : 1.0};
    Stream stream(seed, {static_cast<std::uint64_t>(n), 1, static_cast<std::uint64_t>(task.node)});
    GibbsRun run = sample_gibbs(target, n, opts.chain, stream);
    run.energies.clear();
    run.energies.shrink_to_fit();
    runs[b] = std::move(run);
  });

  PartitionOptions popts;
  popts.workers = workers;
  for (std::size_t r = 0; r < n_values.size(); ++r) {
    EntropyRow& row = table.rows[r];
    const std::size_t n = row.n;
    const std::uint64_t is_seed = derive_seed(seed, {static_cast<std::uint64_t>(n), 0});
    const auto energies = sample_energies(kernel, reference, n, opts.eps, opts.is_samples, is_seed, popts);
    const auto est = estimate_from_energies(energies, n, {1.0, 2.0}, opts.eps, is_seed, popts);
    row.log_z_is = std::log(est[0].mean);
    row.log_z_is_se = est[0].std_error / est[0].mean;
    row.log_z_is_ci = est[0].ci_halfwidth / est[0].mean;
    row.z2 = est[1].mean;
    row.z2_se = est[1].std_error;

    double ti = 0.0, ti_var = 0.0;
    for (std::size_t b = 0; b < tasks.size(); ++b) {
      if (tasks[b].row != r) continue;
      const GibbsRun& run = runs[b];
      row.min_acceptance = std::min(row.min_acceptance, run.acceptance);
      row.flagged = row.flagged || run.flagged;
      row.flagged_chains += run.flagged ? 1 : 0;
      row.flagged_at_cap += run.flagged && run.step_capped ? 1 : 0;
      if (tasks[b].node == ti_nodes) {
        row.gibbs_energy = run.mean_energy;
        row.gibbs_energy_se = run.energy_std_error;
      } else {
        const double w = weights[tasks[b].node];
        ti -= w * run.mean_energy;
        ti_var += w * w * run.energy_std_error * run.energy_std_error;
      }
    }
    row.log_z = row.log_z_is;
    row.log_z_se = row.log_z_is_se;
    if (row.has_ti) {
      row.log_z_ti = ti;
      row.log_z_ti_se = std::sqrt(ti_var);
      const double is_var = row.log_z_is_se * row.log_z_is_se;
      const double both = std::sqrt(is_var + ti_var);
      row.agree = std::abs(row.log_z_is - row.log_z_ti) <= 3.0 * both;
      if (row.agree && is_var > 0.0 && ti_var > 0.0) {
        const double wi = 1.0 / is_var, wt = 1.0 / ti_var;
        row.log_z = (wi * row.log_z_is + wt * row.log_z_ti) / (wi + wt);
        row.log_z_se = 1.0 / std::sqrt(wi + wt);
      }
    }
    row.reference_energy = mean_energy(kernel, opts.eps, reference, n);
    row.h_forward = -row.gibbs_energy - row.log_z + 0.0;
    row.h_forward_se = std::hypot(row.gibbs_energy_se, row.log_z_se);
    row.h_backward = row.log_z + row.reference_energy + 0.0;
    row.h_backward_se = row.log_z_se;
    row.w2 = w2;
    const double z = std::exp(row.log_z);
    row.entropy_bound = w2 / z + row.z2 / z - row.log_z;
    const double slack = 3.0 * std::sqrt(row.h_forward_se * row.h_forward_se + (row.z2_se / z) * (row.z2_se / z) +
                                         row.log_z_se * row.log_z_se);
    row.bound_holds = row.h_forward <= row.entropy_bound + slack;
    row.nonnegative = row.h_forward >= -3.0 * row.h_forward_se && row.h_backward >= -3.0 * row.h_backward_se;
  }

  if (table.rows.size() >= 2) {
    std::vector<double> ns, fwd, bwd;
    bool fwd_ok = true, bwd_ok = true;
    for (const auto& row : table.rows) {
      ns.push_back(static_cast<double>(row.n));
      fwd.push_back(row.h_forward / static_cast<double>(row.n));
      bwd.push_back(row.h_backward / static_cast<double>(row.n));
      fwd_ok = fwd_ok && row.h_forward > 0.0;
      bwd_ok = bwd_ok && row.h_backward > 0.0;
    }
    if (fwd_ok) table.forward_fit = stats::fit_power_law(ns, fwd);
    if (bwd_ok) table.backward_fit = stats::fit_power_law(ns, bwd);
  }
  return table;
}

}  // namespace loggas
