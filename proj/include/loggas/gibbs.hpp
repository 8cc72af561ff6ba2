#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "loggas/dynamics.hpp"
#include "loggas/errors.hpp"
#include "loggas/kernel.hpp"
#include "loggas/measure.hpp"
#include "loggas/rng.hpp"
#include "loggas/stats.hpp"

namespace loggas {

/// Fixed point mu = Z^{-1} exp(-W * mu - V) on a cell-centered torus grid.
struct MeanFieldMinimizer {
  int d = 1;
  int cells = 0;
  std::vector<double> density;  // cell-center values, mean 1
  double z_mu = 1.0;            // int exp(-W * mu - V) dx
  double residual = 0.0;        // sup |mu - normalize(exp(-W * mu - V))|
  int iterations = 0;
  std::vector<double> residual_history;
  double energy = 0.0;          // E[mu] = int mu ln mu + int V mu + (1/2) int int W mu mu

  BaseMeasure measure() const;
};

class ConvergenceFailure : public Error {
 public:
  ConvergenceFailure(const std::string& what, std::vector<double> residuals)
      : Error(ErrorKind::convergence, what), residuals_(std::move(residuals)) {}
  const std::vector<double>& residuals() const { return residuals_; }

 private:
  std::vector<double> residuals_;
};

struct MinimizerOptions {
  double damping = 0.5;  // theta in (0, 1]
  double tol = 1e-10;
  int max_iter = 5000;
  double eps = 0.0;
  std::function<double(const Point&)> initial;  // empty: uniform
};

MeanFieldMinimizer solve_minimizer(const Kernel& kernel, const Potential& potential, int cells,
                                   const MinimizerOptions& opts = {});

/// Target density exp(-beta I(x)) prod_i reference(x_i) exp(-V(x_i)), where I is the centered
/// diagonal-removed energy against the reference measure. With the mean-field minimizer as
/// reference, V = 0 and beta = 1 this is the Gibbs measure exp(-H_N) / Z~_N.
struct GibbsTarget {
  Kernel kernel;
  double eps = 0.0;
  BaseMeasure reference;
  Potential potential;  // extra single-particle potential
  double beta = 1.0;
};

struct MalaOptions {
  std::size_t burn_in = 2000;
  std::size_t samples = 20000;
  std::size_t record_every = 0;  // keep every k-th state after burn-in; 0 keeps none
  double initial_step = 1e-3;
  double target_acceptance = 0.57;
  double max_step = 0.0;         // 0 picks L^2 / 288 with L the box side
};

struct GibbsRun {
  std::size_t n = 0;
  double beta = 1.0;
  std::size_t burn_in = 0;
  std::size_t samples = 0;
  double step = 0.0;
  bool step_capped = false;      // tuning ran into max_step
  double acceptance = 0.0;       // after burn-in, step frozen
  bool flagged = false;          // acceptance outside (0.2, 0.9)
  std::vector<double> energies;  // I after every post-burn-in step
  double mean_energy = 0.0;
  double energy_std_error = 0.0; // batch means
  std::vector<Configuration> states;
  Configuration final_state;
};

/// Metropolis-adjusted Langevin chain. The step size is tuned by Robbins-Monro towards the
/// target acceptance during burn-in and frozen afterwards.
GibbsRun sample_gibbs(const GibbsTarget& target, std::size_t n, const MalaOptions& opts, Stream& stream);

struct EntropyOptions {
  MalaOptions chain;
  std::size_t is_samples = 100000;
  double eps = 0.0;
  int minimizer_cells = 64;
  MinimizerOptions minimizer;
  /// N values that also get a thermodynamic-integration estimate; empty means all.
  std::vector<std::size_t> ti_n_values;
  int workers = 1;
};

struct EntropyRow {
  std::size_t n = 0;
  double log_z_is = 0.0;
  double log_z_is_se = 0.0;
  double log_z_is_ci = 0.0;
  bool has_ti = false;
  double log_z_ti = 0.0;
  double log_z_ti_se = 0.0;
  bool agree = true;             // |IS - TI| <= 3 combined SE
  double log_z = 0.0;            // inverse-variance combination when both agree, else IS
  double log_z_se = 0.0;
  double gibbs_energy = 0.0;     // E_{M_N}[I]
  double gibbs_energy_se = 0.0;
  double reference_energy = 0.0; // E over mu^{(x)N} of I, exact
  double h_forward = 0.0;        // H[M_N | mu^{(x)N}]
  double h_forward_se = 0.0;
  double h_backward = 0.0;       // H[mu^{(x)N} | M_N]
  double h_backward_se = 0.0;
  double z2 = 1.0;               // E exp(-2 I)
  double z2_se = 0.0;
  double w2 = 0.0;               // int int W^2 dmu dmu
  double entropy_bound = 0.0;    // w2 / Z + Z2 / Z - log Z
  bool bound_holds = true;
  bool nonnegative = true;
  double min_acceptance = 1.0;
  bool flagged = false;
  int flagged_chains = 0;
  int flagged_at_cap = 0;  // flagged chains whose step sat at the cap
};

struct EntropyTable {
  std::vector<EntropyRow> rows;
  MeanFieldMinimizer minimizer;
  bool uniform_reference = false;
  std::optional<stats::LinearFit> forward_fit;   // log(H_fwd / N) against log N
  std::optional<stats::LinearFit> backward_fit;  // log(H_bwd / N) against log N
};

/// Relative entropies between M_N and mu^{(x)N} for every N. log Z_N comes from importance
/// sampling under mu^{(x)N} and from 8-node Gauss-Legendre integration of -E_beta[I] over
/// beta in [0, 1]. Chain (N, node) draws from stream (seed, {N, 1, node}).
EntropyTable entropy_rates(const Kernel& kernel, const Potential& potential, const std::vector<std::size_t>& n_values,
                           std::uint64_t seed, const EntropyOptions& opts = {});

/// int int W_eps^2 dmu dmu for a uniform or grid torus measure.
double interaction_square_mean(const Kernel& kernel, double eps, const BaseMeasure& measure);

}  // namespace loggas
