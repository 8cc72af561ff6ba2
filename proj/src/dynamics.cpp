#include "loggas/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "loggas/errors.hpp"
#include "loggas/fft.hpp"
#include "loggas/parallel.hpp"
#include "loggas/stats.hpp"

namespace loggas {

namespace {

constexpr double pi = std::numbers::pi;

std::size_t grid_total(int d, int M) {
  std::size_t t = 1;
  for (int c = 0; c < d; ++c) t *= static_cast<std::size_t>(M);
  return t;
}

// Multi-index of a row-major flat index.
std::array<int, 3> unflatten(std::size_t idx, int d, int M) {
  std::array<int, 3> j{0, 0, 0};
  for (int c = d - 1; c >= 0; --c) {
    j[static_cast<std::size_t>(c)] = static_cast<int>(idx % static_cast<std::size_t>(M));
    idx /= static_cast<std::size_t>(M);
  }
  return j;
}

Point cell_center(std::size_t idx, int d, int M) {
  const auto j = unflatten(idx, d, M);
  Point x{0, 0, 0};
  for (int c = 0; c < d; ++c) x[static_cast<std::size_t>(c)] = (j[static_cast<std::size_t>(c)] + 0.5) / M;
  return x;
}

double min_pair_distance(const Domain& dom, const Configuration& cfg) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < cfg.size(); ++i)
    for (std::size_t j = i + 1; j < cfg.size(); ++j)
      best = std::min(best, norm(displacement(dom, cfg.point(i), cfg.point(j)), cfg.d));
  return best;
}

}  // namespace

std::string to_string(Potential::Kind k) {
  switch (k) {
    case Potential::Kind::zero: return "zero";
    case Potential::Kind::cosine: return "cosine";
    case Potential::Kind::quadratic: return "quadratic";
    case Potential::Kind::grid: return "grid";
  }
  return "?";
}

Potential Potential::cosine(double amplitude, std::array<int, 3> mode) {
  Potential v;
  v.kind = Kind::cosine;
  v.amplitude = amplitude;
  v.mode = mode;
  return v;
}

Potential Potential::quadratic(double stiffness) {
  require(stiffness >= 0.0, ErrorKind::configuration, "stiffness must be >= 0");
  Potential v;
  v.kind = Kind::quadratic;
  v.stiffness = stiffness;
  return v;
}

Potential Potential::grid(int d, int cells, std::vector<double> values) {
  require(d >= 1 && d <= 3 && cells >= 2, ErrorKind::configuration, "grid potential needs d in 1..3 and cells >= 2");
  require(values.size() == grid_total(d, cells), ErrorKind::configuration, "grid potential needs cells^d values");
  Potential v;
  v.kind = Kind::grid;
  v.dim = d;
  v.cells = cells;
  v.values = std::move(values);
  return v;
}

double Potential::value(const Point& x, int d) const {
  switch (kind) {
    case Kind::zero: return 0.0;
    case Kind::cosine: {
      double ph = 0.0;
      for (int c = 0; c < d; ++c) ph += mode[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
      return amplitude * std::cos(2.0 * pi * ph);
    }
    case Kind::quadratic: return 0.5 * stiffness * norm(x, d) * norm(x, d);
    case Kind::grid: {
      std::array<int, 3> i0{};
      std::array<double, 3> t{};
      for (int c = 0; c < d; ++c) {
        const double u = wrap01(x[static_cast<std::size_t>(c)]) * cells - 0.5;
        const double f = std::floor(u);
        i0[static_cast<std::size_t>(c)] = static_cast<int>(f);
        t[static_cast<std::size_t>(c)] = u - f;
      }
      double s = 0.0;
      for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        std::size_t idx = 0;
        for (int c = 0; c < d; ++c) {
          const int bit = (corner >> c) & 1;
          w *= bit ? t[static_cast<std::size_t>(c)] : 1.0 - t[static_cast<std::size_t>(c)];
          idx = idx * static_cast<std::size_t>(cells) + static_cast<std::size_t>(wrap_index(i0[static_cast<std::size_t>(c)] + bit, cells));
        }
        s += w * values[idx];
      }
      return s;
    }
  }
  return 0.0;
}

Point Potential::gradient(const Point& x, int d) const {
  Point g{0, 0, 0};
  switch (kind) {
    case Kind::zero: break;
    case Kind::cosine: {
      double ph = 0.0;
      for (int c = 0; c < d; ++c) ph += mode[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
      const double s = -amplitude * 2.0 * pi * std::sin(2.0 * pi * ph);
      for (int c = 0; c < d; ++c) g[static_cast<std::size_t>(c)] = s * mode[static_cast<std::size_t>(c)];
      break;
    }
    case Kind::quadratic:
      for (int c = 0; c < d; ++c) g[static_cast<std::size_t>(c)] = stiffness * x[static_cast<std::size_t>(c)];
      break;
    case Kind::grid: {
      std::array<int, 3> i0{};
      std::array<double, 3> t{};
      for (int c = 0; c < d; ++c) {
        const double u = wrap01(x[static_cast<std::size_t>(c)]) * cells - 0.5;
        const double f = std::floor(u);
        i0[static_cast<std::size_t>(c)] = static_cast<int>(f);
        t[static_cast<std::size_t>(c)] = u - f;
      }
      for (int corner = 0; corner < (1 << d); ++corner) {
        std::size_t idx = 0;
        std::array<double, 3> w{}, dw{};
        for (int c = 0; c < d; ++c) {
          const int bit = (corner >> c) & 1;
          w[static_cast<std::size_t>(c)] = bit ? t[static_cast<std::size_t>(c)] : 1.0 - t[static_cast<std::size_t>(c)];
          dw[static_cast<std::size_t>(c)] = bit ? cells : -cells;
          idx = idx * static_cast<std::size_t>(cells) + static_cast<std::size_t>(wrap_index(i0[static_cast<std::size_t>(c)] + bit, cells));
        }
        for (int c = 0; c < d; ++c) {
          double prod = dw[static_cast<std::size_t>(c)];
          for (int o = 0; o < d; ++o)
            if (o != c) prod *= w[static_cast<std::size_t>(o)];
          g[static_cast<std::size_t>(c)] += prod * values[idx];
        }
      }
      break;
    }
  }
  return g;
}

std::vector<double> Potential::sample(int d, int M) const {
  std::vector<double> out(grid_total(d, M));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(cell_center(i, d, M), d);
  return out;
}

// ---------------------------------------------------------------------------------------------
// SDE

std::vector<Stream> particle_streams(std::size_t n, std::uint64_t seed, std::uint64_t tag) {
  std::vector<Stream> s;
  s.reserve(n);
  for (std::size_t i = 0; i < n; ++i) s.emplace_back(seed, std::initializer_list<std::uint64_t>{tag, i});
  return s;
}

SdeIntegrator::SdeIntegrator(const Kernel& kernel, Potential potential, Configuration initial,
                             std::vector<Stream> streams, const SdeOptions& opts)
    : kernel_(kernel), potential_(std::move(potential)), streams_(std::move(streams)) {
  require(opts.dt > 0.0, ErrorKind::configuration, "dt must be > 0");
  require(opts.eps_reg >= 0.0, ErrorKind::configuration, "eps_reg must be >= 0");
  require(initial.d == kernel.dim(), ErrorKind::configuration, "configuration dimension mismatch");
  require(streams_.size() == initial.size(), ErrorKind::configuration, "one stream per particle");
  if (kernel.domain().is_torus() && potential_.kind == Potential::Kind::quadratic)
    raise(ErrorKind::configuration, "quadratic potentials need free space");
  state_.config = std::move(initial);
  state_.dt = opts.dt;
  state_.eps_reg = opts.eps_reg;
  state_.noise = opts.noise;
  state_.force_cap = opts.force_cap > 0.0 ? opts.force_cap : 10.0 / std::sqrt(opts.dt);
  if (kernel.spectral()) pair_.emplace(kernel, opts.eps_reg, BaseMeasure::uniform(kernel.domain()));
}

void SdeIntegrator::drift(std::vector<double>& out) {
  const Configuration& cfg = state_.config;
  const std::size_t n = cfg.size();
  const int d = cfg.d;
  if (pair_) {
    pair_->gradient(cfg, grad_, true);
  } else {
    grad_.assign(n * static_cast<std::size_t>(d), 0.0);
    if (kernel_.family() != Family::zero) {
      for (std::size_t i = 0; i < n; ++i) {
        const Point xi = cfg.point(i);
        for (std::size_t j = 0; j < n; ++j) {
          if (j == i) continue;
          const Point g = kernel_.gradient(state_.eps_reg, xi, cfg.point(j));
          for (int c = 0; c < d; ++c) grad_[i * d + c] += g[static_cast<std::size_t>(c)] / static_cast<double>(n);
        }
      }
    }
  }
  out.resize(grad_.size());
  for (std::size_t i = 0; i < n; ++i) {
    const Point gv = potential_.gradient(cfg.point(i), d);
    for (int c = 0; c < d; ++c) out[i * d + c] = -gv[static_cast<std::size_t>(c)] - grad_[i * d + c];
  }
}

void SdeIntegrator::step_with(double h) {
  std::vector<double> b;
  try {
    drift(b);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::domain) throw;
    std::ostringstream msg;
    msg << "singular drift at t = " << state_.time << " (" << e.what() << "); closest pair distance "
        << min_pair_distance(kernel_.domain(), state_.config);
    raise(ErrorKind::integration, msg.str());
  }
  Configuration& cfg = state_.config;
  const std::size_t n = cfg.size();
  const int d = cfg.d;
  const double noise = state_.noise * std::sqrt(2.0 * h);
  const Configuration before = cfg;
  bool finite = true;
  for (std::size_t i = 0; i < n; ++i) {
    double mag = 0.0;
    for (int c = 0; c < d; ++c) mag += b[i * d + c] * b[i * d + c];
    mag = std::sqrt(mag);
    double scale = 1.0;
    if (mag > state_.force_cap) {
      scale = state_.force_cap / mag;
      ++state_.cap_activations;
    }
    double* x = cfg.data(i);
    for (int c = 0; c < d; ++c) {
      x[c] += h * scale * b[i * d + c] + (noise != 0.0 ? noise * streams_[i].normal() : 0.0);
      if (!std::isfinite(x[c])) finite = false;
    }
  }
  if (!finite) {
    std::ostringstream msg;
    msg << "non-finite position at t = " << state_.time << "; closest pair distance before the step "
        << min_pair_distance(kernel_.domain(), before);
    raise(ErrorKind::integration, msg.str());
  }
  if (kernel_.domain().is_torus()) cfg.wrap();
  state_.time += h;
  ++state_.steps;
}

void SdeIntegrator::step() { step_with(state_.dt); }

void SdeIntegrator::advance_to(double t) {
  while (state_.time < t - 1e-12) step_with(std::min(state_.dt, t - state_.time));
}

// ---------------------------------------------------------------------------------------------
// Mean-field PDE

namespace {

// Coefficients a_k = FFT(values)/M^d on an M^d grid, with 3/2 padding for products.
class SpectralGrid {
 public:
  SpectralGrid(int d, int M, const Kernel& kernel, double eps, const std::vector<double>& vnodes)
      : d_(d), M_(M), P_(3 * M / 2), plan_(d, M), pad_(d, 3 * M / 2) {
    const std::size_t n = grid_total(d, M);
    k_.resize(n);
    lap_.resize(n);
    w_.resize(n);
    padmap_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto j = unflatten(i, d, M);
      std::array<int, 3> k{0, 0, 0};
      double s = 0.0;
      bool nyq = false;
      std::size_t pidx = 0;
      for (int c = 0; c < d; ++c) {
        k[static_cast<std::size_t>(c)] = signed_freq(j[static_cast<std::size_t>(c)], M);
        if (2 * std::abs(k[static_cast<std::size_t>(c)]) == M) nyq = true;
        s += double(k[static_cast<std::size_t>(c)]) * k[static_cast<std::size_t>(c)];
        pidx = pidx * static_cast<std::size_t>(P_) + static_cast<std::size_t>(wrap_index(k[static_cast<std::size_t>(c)], P_));
      }
      k_[i] = k;
      lap_[i] = -4.0 * pi * pi * s;
      const double c = nyq ? 0.0 : kernel.coefficient(k);
      w_[i] = c > 0.0 && eps > 0.0 ? c * kernel.multiplier(2.0 * pi * std::sqrt(s), eps) : c;
      padmap_[i] = nyq ? std::numeric_limits<std::size_t>::max() : pidx;
    }
    vhat_ = to_coeffs(vnodes);
    dx_ = 1.0 / M;
  }

  std::size_t size() const { return k_.size(); }
  const std::vector<double>& lap() const { return lap_; }
  const std::vector<double>& weight() const { return w_; }

  std::vector<cplx> to_coeffs(const std::vector<double>& values) {
    std::vector<cplx> in(values.begin(), values.end()), out;
    plan_.forward(in, out);
    const double s = 1.0 / static_cast<double>(out.size());
    for (auto& v : out) v *= s;
    return out;
  }

  std::vector<double> to_values(const std::vector<cplx>& coeffs) {
    std::vector<cplx> out;
    plan_.backward(coeffs, out);
    std::vector<double> v(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) v[i] = out[i].real();
    return v;
  }

  // Physical values on the padded grid of a coefficient array.
  std::vector<double> padded_values(const std::vector<cplx>& coeffs) {
    std::vector<cplx> big(grid_total(d_, P_), cplx(0.0, 0.0)), out;
    for (std::size_t i = 0; i < coeffs.size(); ++i)
      if (padmap_[i] != std::numeric_limits<std::size_t>::max()) big[padmap_[i]] = coeffs[i];
    pad_.backward(big, out);
    std::vector<double> v(out.size());
    for (std::size_t i = 0; i < out.size(); ++i) v[i] = out[i].real();
    return v;
  }

  std::vector<cplx> truncate(const std::vector<double>& padded) {
    std::vector<cplx> in(padded.begin(), padded.end()), out;
    pad_.forward(in, out);
    const double s = 1.0 / static_cast<double>(out.size());
    std::vector<cplx> c(size(), cplx(0.0, 0.0));
    for (std::size_t i = 0; i < size(); ++i)
      if (padmap_[i] != std::numeric_limits<std::size_t>::max()) c[i] = out[padmap_[i]] * s;
    return c;
  }

  // Velocity field u = grad(W * rho) + grad V on the padded grid, per axis.
  void velocity(const std::vector<cplx>& rho, std::vector<std::vector<double>>& u) {
    u.resize(static_cast<std::size_t>(d_));
    for (int c = 0; c < d_; ++c) {
      std::vector<cplx> g(size());
      for (std::size_t i = 0; i < size(); ++i) {
        const cplx ik(0.0, 2.0 * pi * k_[i][static_cast<std::size_t>(c)]);
        g[i] = ik * (w_[i] * rho[i] + vhat_[i]);
      }
      u[static_cast<std::size_t>(c)] = padded_values(g);
    }
  }

  double max_speed(const std::vector<cplx>& rho) {
    std::vector<std::vector<double>> u;
    velocity(rho, u);
    double best = 0.0;
    for (std::size_t p = 0; p < u[0].size(); ++p) {
      double s = 0.0;
      for (int c = 0; c < d_; ++c) s += u[static_cast<std::size_t>(c)][p] * u[static_cast<std::size_t>(c)][p];
      best = std::max(best, std::sqrt(s));
    }
    return best;
  }

  // div(rho u), dealiased.
  std::vector<cplx> transport(const std::vector<cplx>& rho) {
    std::vector<std::vector<double>> u;
    velocity(rho, u);
    const std::vector<double> r = padded_values(rho);
    std::vector<cplx> out(size(), cplx(0.0, 0.0));
    std::vector<double> flux(r.size());
    for (int c = 0; c < d_; ++c) {
      for (std::size_t p = 0; p < r.size(); ++p) flux[p] = r[p] * u[static_cast<std::size_t>(c)][p];
      const auto fh = truncate(flux);
      for (std::size_t i = 0; i < size(); ++i)
        out[i] += cplx(0.0, 2.0 * pi * k_[i][static_cast<std::size_t>(c)]) * fh[i];
    }
    return out;
  }

  double dx() const { return dx_; }

 private:
  int d_, M_, P_;
  FftPlan plan_, pad_;
  std::vector<std::array<int, 3>> k_;
  std::vector<double> lap_, w_;
  std::vector<std::size_t> padmap_;
  std::vector<cplx> vhat_;
  double dx_;
};

void check_pde(const PdeState& s) {
  require(s.d == 1 || s.d == 2, ErrorKind::unsupported, "the mean-field solver handles d = 1, 2");
  require(s.cells >= 4 && s.cells % 2 == 0, ErrorKind::configuration, "cells must be even and >= 4");
  require(s.density.size() == grid_total(s.d, s.cells), ErrorKind::configuration, "density size mismatch");
}

double free_energy_coeffs(const std::vector<double>& rho, const std::vector<cplx>& coeffs,
                          const std::vector<double>& vnodes, const std::vector<double>& w) {
  double ent = 0.0, pot = 0.0, inter = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] > 0.0) ent += rho[i] * std::log(rho[i]);
    pot += vnodes[i] * rho[i];
  }
  for (std::size_t i = 0; i < coeffs.size(); ++i) inter += w[i] * std::norm(coeffs[i]);
  const double n = static_cast<double>(rho.size());
  return ent / n + pot / n + 0.5 * inter;
}

}  // namespace

PdeState pde_state_from(int d, int cells, const std::function<double(const Point&)>& f, double dt) {
  PdeState s;
  s.d = d;
  s.cells = cells;
  s.dt = dt;
  s.density.resize(grid_total(d, cells));
  double mass = 0.0;
  for (std::size_t i = 0; i < s.density.size(); ++i) {
    s.density[i] = f(cell_center(i, d, cells));
    require(s.density[i] >= 0.0, ErrorKind::domain, "initial density must be nonnegative");
    mass += s.density[i];
  }
  mass /= static_cast<double>(s.density.size());
  require(mass > 0.0, ErrorKind::domain, "initial density has zero mass");
  for (auto& v : s.density) v /= mass;
  return s;
}

double free_energy(const PdeState& state, const Kernel& kernel, const Potential& potential, double eps) {
  check_pde(state);
  const auto vnodes = potential.sample(state.d, state.cells);
  SpectralGrid grid(state.d, state.cells, kernel, eps, vnodes);
  return free_energy_coeffs(state.density, grid.to_coeffs(state.density), vnodes, grid.weight());
}

MvTrajectory mv_solve(const PdeState& initial, const Kernel& kernel, const Potential& potential, double t_end,
                      const MvOptions& opts) {
  check_pde(initial);
  require(kernel.domain().is_torus() && kernel.dim() == initial.d, ErrorKind::configuration,
          "the mean-field solver needs a torus kernel of matching dimension");
  require(t_end >= 0.0 && opts.dt > 0.0, ErrorKind::configuration, "need t_end >= 0 and dt > 0");
  require(potential.kind != Potential::Kind::quadratic, ErrorKind::configuration,
          "quadratic potentials need free space");

  const int d = initial.d, M = initial.cells;
  const auto vnodes = potential.sample(d, M);
  SpectralGrid grid(d, M, kernel, opts.eps, vnodes);
  const std::size_t n = grid.size();

  std::vector<double> targets = opts.snapshot_times;
  targets.push_back(t_end);
  std::sort(targets.begin(), targets.end());
  targets.erase(std::unique(targets.begin(), targets.end(), [](double a, double b) { return b - a < 1e-10; }),
                targets.end());
  targets.erase(std::remove_if(targets.begin(), targets.end(), [&](double t) { return t <= initial.time || t > t_end; }),
                targets.end());

  MvTrajectory traj;
  std::vector<double> rho = initial.density;
  std::vector<cplx> v = grid.to_coeffs(rho);
  {
    const double mass = v[0].real();
    for (auto& c : v) c /= mass;
    for (auto& r : rho) r /= mass;
  }
  traj.times.push_back(initial.time);
  traj.densities.push_back(rho);
  traj.min_density = *std::min_element(rho.begin(), rho.end());
  if (opts.monitor) traj.initial_free_energy = free_energy_coeffs(rho, v, vnodes, grid.weight());

  double t = initial.time, dt = opts.dt;
  std::vector<double> E(n), E2(n);
  std::vector<cplx> k1, k2, k3, k4, tmp(n);
  double last_h = -1.0;

  for (double target : targets) {
    while (t < target - 1e-13) {
      const double h = std::min(dt, target - t);
      if (grid.max_speed(v) * h > grid.dx()) {
        dt *= 0.5;
        ++traj.halvings;
        require(traj.halvings <= opts.max_halvings, ErrorKind::integration,
                "CFL condition still violated after the maximum number of step halvings");
        continue;
      }
      if (h != last_h) {
        for (std::size_t i = 0; i < n; ++i) {
          E[i] = std::exp(grid.lap()[i] * h);
          E2[i] = std::exp(grid.lap()[i] * h * 0.5);
        }
        last_h = h;
      }
      k1 = grid.transport(v);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = E2[i] * (v[i] + 0.5 * h * k1[i]);
      k2 = grid.transport(tmp);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = E2[i] * v[i] + 0.5 * h * k2[i];
      k3 = grid.transport(tmp);
      for (std::size_t i = 0; i < n; ++i) tmp[i] = E[i] * v[i] + h * E2[i] * k3[i];
      k4 = grid.transport(tmp);
      for (std::size_t i = 0; i < n; ++i)
        v[i] = E[i] * v[i] + (h / 6.0) * (E[i] * k1[i] + 2.0 * E2[i] * (k2[i] + k3[i]) + k4[i]);

      double mass = v[0].real();
      traj.max_mass_correction = std::max(traj.max_mass_correction, std::abs(mass - 1.0));
      for (auto& c : v) c /= mass;
      v[0] = cplx(1.0, 0.0);
      rho = grid.to_values(v);
      const double lo = *std::min_element(rho.begin(), rho.end());
      traj.min_density = std::min(traj.min_density, lo);
      if (lo < -1e-8) {
        for (auto& r : rho)
          if (r < 0.0) {
            r = 0.0;
            ++traj.clipped;
          }
        v = grid.to_coeffs(rho);
        mass = v[0].real();
        for (auto& c : v) c /= mass;
        for (auto& r : rho) r /= mass;
      }
      t += h;
      ++traj.steps;
      traj.step_times.push_back(t);
      if (opts.monitor) traj.free_energy.push_back(free_energy_coeffs(rho, v, vnodes, grid.weight()));
    }
    traj.times.push_back(target);
    traj.densities.push_back(rho);
  }
  traj.final_state = initial;
  traj.final_state.density = rho;
  traj.final_state.time = t;
  traj.final_state.dt = dt;
  return traj;
}

std::vector<double> interpolate_snapshots(const MvTrajectory& traj, double t) {
  const auto& ts = traj.times;
  require(!ts.empty(), ErrorKind::configuration, "trajectory has no snapshots");
  require(t >= ts.front() - 1e-12 && t <= ts.back() + 1e-12, ErrorKind::configuration,
          "time outside the recorded trajectory");
  for (std::size_t i = 0; i < ts.size(); ++i)
    if (std::abs(ts[i] - t) <= 1e-12) return traj.densities[i];
  if (ts.size() < 4) {
    // linear fallback
    const std::size_t hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
    const std::size_t a = hi - 1, b = hi;
    const double s = (t - ts[a]) / (ts[b] - ts[a]);
    std::vector<double> out(traj.densities[a].size());
    for (std::size_t k = 0; k < out.size(); ++k)
      out[k] = (1 - s) * traj.densities[a][k] + s * traj.densities[b][k];
    return out;
  }
  std::size_t hi = static_cast<std::size_t>(std::upper_bound(ts.begin(), ts.end(), t) - ts.begin());
  std::size_t start = hi >= 2 ? hi - 2 : 0;
  start = std::min(start, ts.size() - 4);
  std::vector<double> out(traj.densities[start].size(), 0.0);
  for (std::size_t a = start; a < start + 4; ++a) {
    double l = 1.0;
    for (std::size_t b = start; b < start + 4; ++b)
      if (b != a) l *= (t - ts[b]) / (ts[a] - ts[b]);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += l * traj.densities[a][k];
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Modulated energy

ModulatedSweep modulated_energy_sweep(const Kernel& kernel, const BaseMeasure& rho0, const Potential& potential,
                                      const std::vector<std::size_t>& n_values, const std::vector<double>& t_grid,
                                      int replicas, std::uint64_t seed, const ModulatedOptions& opts) {
  require(kernel.domain().is_torus() && rho0.domain().is_torus(), ErrorKind::unsupported,
          "the modulated energy sweep runs on the torus");
  require(replicas >= 2, ErrorKind::configuration, "need at least two replicas");
  require(!n_values.empty() && !t_grid.empty(), ErrorKind::configuration, "empty N or t grid");
  require(rho0.kind() != BaseMeasure::Kind::atomic, ErrorKind::configuration, "rho0 needs a density");
  const int d = kernel.dim();
  std::vector<double> times = t_grid;
  std::sort(times.begin(), times.end());
  require(times.front() >= 0.0, ErrorKind::configuration, "times must be >= 0");

  // mean-field solution, snapshots every snapshot_spacing and at every requested time
  PdeState init = pde_state_from(d, opts.cells, [&](const Point& x) { return rho0.density_at(x); }, opts.pde_dt);
  MvOptions mv;
  mv.dt = opts.pde_dt;
  mv.eps = opts.eps_reg;
  mv.monitor = false;
  for (int k = 1; k * opts.snapshot_spacing < times.back(); ++k) mv.snapshot_times.push_back(k * opts.snapshot_spacing);
  for (double s : times)
    if (s > 0.0) mv.snapshot_times.push_back(s);
  const MvTrajectory traj = mv_solve(init, kernel, potential, times.back(), mv);
  std::vector<BaseMeasure> rho_t;
  for (double s : times)
    rho_t.push_back(BaseMeasure::grid(Domain::torus(d), opts.cells, interpolate_snapshots(traj, s)));

  ModulatedSweep out;
  out.eps_reg = opts.eps_reg;
  const std::size_t nt = times.size();
  std::vector<std::vector<ModulatedRow>> by_n;
  for (std::size_t n : n_values) {
    require(n >= 2, ErrorKind::configuration, "N must be >= 2");
    std::vector<double> val(static_cast<std::size_t>(replicas) * nt);
    std::vector<std::size_t> caps(static_cast<std::size_t>(replicas), 0);
    parallel_blocks(resolve_workers(opts.workers), static_cast<std::size_t>(replicas), [&](std::size_t r) {
      std::vector<EnergyEvaluator> ev;
      ev.reserve(nt);
      for (const auto& m : rho_t) ev.emplace_back(kernel, opts.eps_reg, m);
      Stream init_stream(seed, {n, r, 0});
      Configuration cfg = rho0.sample(n, init_stream);
      SdeOptions so;
      so.dt = opts.dt;
      so.eps_reg = opts.eps_reg;
      SdeIntegrator sde(kernel, potential, std::move(cfg), particle_streams(n, derive_seed(seed, {n, r, 1}), 0), so);
      for (std::size_t k = 0; k < nt; ++k) {
        sde.advance_to(times[k]);
        val[r * nt + k] = ev[k].total(sde.state().config) / static_cast<double>(n);
      }
      caps[r] = sde.state().cap_activations;
    });
    std::vector<ModulatedRow> rows(nt);
    std::size_t cap_total = 0;
    for (auto c : caps) cap_total += c;
    for (std::size_t k = 0; k < nt; ++k) {
      stats::Running a, b;
      for (int r = 0; r < replicas; ++r) {
        a.add(val[static_cast<std::size_t>(r) * nt + k]);
        b.add(std::abs(val[static_cast<std::size_t>(r) * nt + k]));
      }
      rows[k] = {n, times[k], replicas, a.mean(), a.std_error(), b.mean(), b.std_error(), cap_total};
    }
    by_n.push_back(std::move(rows));
  }
  for (std::size_t k = 0; k < nt; ++k) {
    std::vector<double> xs, ys;
    for (std::size_t a = 0; a < n_values.size(); ++a) {
      out.rows.push_back(by_n[a][k]);
      xs.push_back(static_cast<double>(n_values[a]));
      ys.push_back(by_n[a][k].abs_mean);
    }
    ModulatedSlope s;
    s.t = times[k];
    if (xs.size() >= 2) {
      const auto fit = stats::fit_power_law(xs, ys);
      s.slope = fit.slope;
      s.slope_std_error = fit.slope_std_error;
    }
    out.slopes.push_back(s);
  }
  return out;
}

}  // namespace loggas
