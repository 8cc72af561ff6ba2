#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "loggas/geometry.hpp"
#include "loggas/kernel.hpp"
#include "loggas/measure.hpp"
#include "loggas/rng.hpp"
#include "loggas/spectral.hpp"

namespace loggas {

/// centered: eta = N^{-1/2}(sum delta_{x_i} - N rho); literal: N^{-1/2}(sum delta_{x_i} - rho).
enum class Normalization { centered, literal };

struct EnergyBreakdown {
  double pair = 0.0;   // (1/2N) sum_{i != j} W_eps(x_i, x_j)
  double cross = 0.0;  // sum_i (W_eps * rho)(x_i)     [literal: divided by N]
  double mean = 0.0;   // (N/2) int int W_eps drho drho [literal: divided by N^2]
  double total = 0.0;  // pair - cross + mean
  double eps = 0.0;
};

/// Diagonal-removed fluctuation energy of configurations against a fixed base measure.
/// Torus kernels use mode sums over the structure factor; free space sums pairs directly.
/// Pairs are indexed (i != j), so coincident atoms still interact through W_eps(0).
class EnergyEvaluator {
 public:
  EnergyEvaluator(const Kernel& kernel, double eps, const BaseMeasure& measure,
                  Normalization norm = Normalization::centered);

  EnergyBreakdown evaluate(const Configuration& cfg);
  double total(const Configuration& cfg) { return evaluate(cfg).total; }
  /// (1/2N) sum_{i != j} W_eps(x_i, x_j) only.
  double pair(const Configuration& cfg);

  /// d total / d x_i for every particle (n*d entries). `pair_only` drops the rho terms.
  void gradient(const Configuration& cfg, std::vector<double>& grad, bool pair_only = false);

  const Kernel& kernel() const { return kernel_; }
  double eps() const { return eps_; }
  bool spectral() const { return lattice_.has_value(); }
  const ModeLattice& lattice() const { return *lattice_; }
  /// Measure coefficients on the lattice table.
  const std::vector<double>& rho_re() const { return rho_re_; }
  const std::vector<double>& rho_im() const { return rho_im_; }
  double self_energy() const { return self_; }

 private:
  void check_distinct(const Configuration& cfg) const;

  Kernel kernel_;
  double eps_;
  BaseMeasure measure_;
  Normalization norm_;
  std::optional<ModeLattice> lattice_;
  std::vector<double> rho_re_, rho_im_;
  double self_;
  SpectralWork work_;
  std::vector<double> sr_, si_, br_, bi_;
};

EnergyBreakdown interaction_energy(const Kernel& kernel, double eps, const BaseMeasure& measure,
                                   const Configuration& cfg, Normalization norm = Normalization::centered);

/// sum_{i != j} W_eps(x_i, x_j) by explicit double loop (oracle path, any family).
double pair_sum_direct(const Kernel& kernel, double eps, const Configuration& cfg);

/// E over rho^{(x)n} of the total energy: -(1/2) int int W_eps drho drho for every n.
double mean_energy(const Kernel& kernel, double eps, const BaseMeasure& measure, std::size_t n);

struct LowerBoundRow {
  std::size_t n = 0;
  double min_energy = 0.0;
  double ratio = 0.0;  // min_energy / (-ln N)
  Configuration argmin;
};

struct AnnealOptions {
  int sweeps = 200;
  double t_start = 1.0;  // initial temperature in units of the typical single-move energy change
  double t_end = 1e-3;   // final temperature, same units
  double step = 0.5;     // proposal standard deviation times N^{1/d}
  double eps = 0.0;
};

/// Simulated annealing over configurations with single-particle moves and geometric cooling.
/// search_budget annealing runs per N: the first starts clustered in a ball of radius 1/N,
/// the rest start from draws of the base measure.
std::vector<LowerBoundRow> probe_lower_bound(const Kernel& kernel, const BaseMeasure& measure,
                                             const std::vector<std::size_t>& n_values, int search_budget,
                                             std::uint64_t seed, const AnnealOptions& opts = {});

}  // namespace loggas
