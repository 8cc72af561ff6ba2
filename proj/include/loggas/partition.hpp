#pragma once

#include <cstdint>
#include <vector>

#include "loggas/kernel.hpp"
#include "loggas/measure.hpp"

namespace loggas {

struct PartitionEstimate {
  std::size_t n = 0;
  double beta = 0.0;
  double eps = 0.0;
  std::size_t samples = 0;     // requested draws
  std::size_t discarded = 0;   // non-finite energies
  double mean = 0.0;           // Z estimate
  double log_mean = 0.0;
  double ci_halfwidth = 0.0;   // 95% percentile bootstrap
  double std_error = 0.0;
  double ess = 0.0;
  double mean_energy = 0.0;    // sample mean of the energy
  std::uint64_t seed = 0;
};

struct PartitionOptions {
  int workers = 1;
  std::size_t block = 1024;  // samples per rng stream
  int bootstrap = 200;
};

/// Energies of `samples` i.i.d. configurations. Block b of size opts.block draws from stream
/// (seed, {n, b}), so the output does not depend on the worker count.
std::vector<double> sample_energies(const Kernel& kernel, const BaseMeasure& measure, std::size_t n, double eps,
                                    std::size_t samples, std::uint64_t seed, const PartitionOptions& opts = {});

/// Z_{N,beta} for each beta from one shared set of energies.
std::vector<PartitionEstimate> estimate_from_energies(const std::vector<double>& energies, std::size_t n,
                                                      const std::vector<double>& betas, double eps,
                                                      std::uint64_t seed, const PartitionOptions& opts = {});

PartitionEstimate estimate_partition(const Kernel& kernel, const BaseMeasure& measure, std::size_t n, double beta,
                                     double eps, std::size_t samples, std::uint64_t seed,
                                     const PartitionOptions& opts = {});

/// One estimate per (N, beta); rows ordered by N then beta.
std::vector<PartitionEstimate> sweep_partition(const Kernel& kernel, const BaseMeasure& measure,
                                               const std::vector<std::size_t>& n_values,
                                               const std::vector<double>& betas, double eps, std::size_t samples,
                                               std::uint64_t seed, const PartitionOptions& opts = {});

struct TrendVerdict {
  double beta = 0.0;
  bool above_one = true;        // every estimate >= 1 - CI
  bool jensen = true;           // every estimate >= exp(-beta E[energy]) - CI
  bool flat = true;             // last-quarter mean <= first-quarter mean + 2 CI
  bool ess_ok = true;           // every ESS >= min_ess
  double first_quarter = 0.0;
  double last_quarter = 0.0;
  double ci = 0.0;              // largest CI half-width among the estimates
  double min_ess = 0.0;
  std::vector<double> running_max;
  bool pass() const { return above_one && jensen && flat && ess_ok; }
};

/// Flatness diagnostics for the rows of a single beta; `jensen_floor` = exp(-beta * mean_energy).
TrendVerdict trend_flatness(const std::vector<PartitionEstimate>& rows, double jensen_floor,
                            double required_ess = 50.0);

/// log Z convex in beta: checks every interior beta against the chord of its neighbours.
bool log_partition_convex(const std::vector<PartitionEstimate>& rows_same_n);

/// Exact Z by enumerating all m^n configurations of an atomic base measure, with energies
/// from direct pair and atom sums (no mode sums).
double exact_partition(const Kernel& kernel, double eps, const BaseMeasure& atomic, std::size_t n, double beta);

/// Calls f(configuration, probability) for every configuration of n draws from an atomic
/// measure; budget m^n <= max_configs.
template <class F>
void enumerate_atomic(const BaseMeasure& atomic, std::size_t n, F f, double max_configs = 1e6);

}  // namespace loggas

#include "loggas/detail/enumerate_atomic.hpp"
