#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loggas/energy.hpp"
#include "loggas/geometry.hpp"
#include "loggas/kernel.hpp"
#include "loggas/measure.hpp"
#include "loggas/rng.hpp"

namespace loggas {

/// External potential V.
///   cosine:    a cos(2 pi k.x)          (torus)
///   quadratic: (kappa/2)|x|^2            (free space)
///   grid:      multilinear interpolation of values at cell centers of a cells^d torus grid
struct Potential {
  enum class Kind { zero, cosine, quadratic, grid };
  Kind kind = Kind::zero;
  double amplitude = 0.0;
  std::array<int, 3> mode{1, 0, 0};
  double stiffness = 0.0;
  int dim = 1;
  int cells = 0;
  std::vector<double> values;

  static Potential zero() { return {}; }
  static Potential cosine(double amplitude, std::array<int, 3> mode = {1, 0, 0});
  static Potential quadratic(double stiffness);
  static Potential grid(int d, int cells, std::vector<double> values);

  double value(const Point& x, int d) const;
  Point gradient(const Point& x, int d) const;
  /// Values at the cell centers (j + 1/2)/M of an M^d torus grid.
  std::vector<double> sample(int d, int M) const;
};

std::string to_string(Potential::Kind k);

struct SdeOptions {
  double dt = 1e-3;
  double eps_reg = 1e-3;  // regularization of the interaction in the drift
  double force_cap = 0.0; // per-particle drift cap; 0 picks 10 / sqrt(dt)
  double noise = 1.0;     // multiplies the Brownian increment; 0 freezes the noise
};

struct SdeState {
  Configuration config;
  double time = 0.0;
  double dt = 1e-3;
  double eps_reg = 0.0;
  double force_cap = 0.0;
  double noise = 1.0;
  std::size_t steps = 0;
  std::size_t cap_activations = 0;  // particle-steps whose drift hit the cap
};

/// Euler-Maruyama for dX_i = -grad V(X_i) - (1/N) sum_{j != i} grad_1 W_eps(X_i, X_j) + sqrt(2) dB_i.
/// Particle i draws its noise from its own stream, so relabelling particles together with their
/// streams relabels the trajectory.
class SdeIntegrator {
 public:
  SdeIntegrator(const Kernel& kernel, Potential potential, Configuration initial, std::vector<Stream> streams,
                const SdeOptions& opts = {});

  void step();
  /// Steps of size dt, with a shortened last step landing exactly on t.
  void advance_to(double t);
  const SdeState& state() const { return state_; }
  /// Drift of the current configuration (n*d entries), before capping.
  void drift(std::vector<double>& out);

 private:
  void step_with(double h);

  Kernel kernel_;
  Potential potential_;
  std::optional<EnergyEvaluator> pair_;  // torus kernels; free space sums pairs directly
  SdeState state_;
  std::vector<Stream> streams_;
  std::vector<double> grad_;
};

/// Independent streams for n particles derived from (seed, path..., i).
std::vector<Stream> particle_streams(std::size_t n, std::uint64_t seed, std::uint64_t tag);

struct PdeState {
  int d = 1;
  int cells = 64;
  std::vector<double> density;  // values at cell centers, mean 1
  double time = 0.0;
  double dt = 1e-4;
};

/// Density from a function at cell centers, rescaled to mass 1.
PdeState pde_state_from(int d, int cells, const std::function<double(const Point&)>& f, double dt = 1e-4);

struct MvOptions {
  double dt = 1e-4;
  double eps = 0.0;      // kernel regularization used for W * rho
  int max_halvings = 10;
  std::vector<double> snapshot_times;  // in (0, t_end]; t = 0 is always recorded
  bool monitor = true;   // free energy after every step
};

struct MvTrajectory {
  std::vector<double> times;                  // snapshot times
  std::vector<std::vector<double>> densities; // snapshot densities
  std::vector<double> step_times;             // after every accepted step
  std::vector<double> free_energy;            // same length as step_times (if monitored)
  double initial_free_energy = 0.0;
  double max_mass_correction = 0.0;
  double min_density = 0.0;
  std::size_t clipped = 0;                    // nodes clipped after dipping below -1e-8
  int halvings = 0;
  std::size_t steps = 0;
  PdeState final_state;
};

/// Pseudospectral Lawson RK4 for d rho = Lap rho + div(rho (grad W * rho + grad V)) on the
/// torus: diffusion through the integrating factor, transport in physical space with 3/2
/// zero padding.
MvTrajectory mv_solve(const PdeState& initial, const Kernel& kernel, const Potential& potential, double t_end,
                      const MvOptions& opts = {});

/// int rho ln rho + int V rho + (1/2) int int W_eps rho rho on the cell-center grid.
double free_energy(const PdeState& state, const Kernel& kernel, const Potential& potential, double eps = 0.0);

/// Cubic Lagrange interpolation in time between recorded snapshots.
std::vector<double> interpolate_snapshots(const MvTrajectory& traj, double t);

struct ModulatedOptions {
  double dt = 1e-3;
  double eps_reg = 1e-3;
  double pde_dt = 1e-4;
  int cells = 32;
  double snapshot_spacing = 0.01;
  int workers = 1;
};

struct ModulatedRow {
  std::size_t n = 0;
  double t = 0.0;
  int replicas = 0;
  double mean = 0.0;        // E[(1/N) I(eta)] against rho_t
  double std_error = 0.0;
  double abs_mean = 0.0;    // E|(1/N) I(eta)|
  double abs_std_error = 0.0;
  std::size_t cap_activations = 0;
};

struct ModulatedSlope {
  double t = 0.0;
  double slope = 0.0;
  double slope_std_error = 0.0;
};

struct ModulatedSweep {
  std::vector<ModulatedRow> rows;  // ordered by t then N
  std::vector<ModulatedSlope> slopes;
  double eps_reg = 0.0;
};

/// Modulated interaction energy of SDE replicas against the mean-field solution at the times of
/// t_grid, for every N. Replica r of size N draws from stream (seed, {N, r, ...}).
ModulatedSweep modulated_energy_sweep(const Kernel& kernel, const BaseMeasure& rho0, const Potential& potential,
                                      const std::vector<std::size_t>& n_values, const std::vector<double>& t_grid,
                                      int replicas, std::uint64_t seed, const ModulatedOptions& opts = {});

}  // namespace loggas
