#include "loggas/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loggas/energy.hpp"
#include "loggas/errors.hpp"
#include "loggas/parallel.hpp"
#include "loggas/stats.hpp"

namespace loggas {

std::vector<double> sample_energies(const Kernel& kernel, const BaseMeasure& measure, std::size_t n, double eps,
                                    std::size_t samples, std::uint64_t seed, const PartitionOptions& opts) {
  require(n >= 1, ErrorKind::configuration, "N must be >= 1");
  require(opts.block >= 1, ErrorKind::configuration, "block size must be >= 1");
  const std::size_t blocks = (samples + opts.block - 1) / opts.block;
  try {
    EnergyEvaluator probe(kernel, eps, measure);
  } catch (const Error& err) {
    // e.g. atomic base measure under the bare free-log kernel: the mean term itself diverges
    if (err.kind() == ErrorKind::domain)
      raise(ErrorKind::estimation, std::string("every energy is non-finite: ") + err.what());
    throw;
  }
  std::vector<double> energies(samples, 0.0);
  parallel_blocks(resolve_workers(opts.workers), blocks, [&](std::size_t b) {
    EnergyEvaluator ev(kernel, eps, measure);
    Stream stream(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(b)});
    const std::size_t lo = b * opts.block, hi = std::min(samples, lo + opts.block);
    Configuration cfg(measure.domain().d, n);
    for (std::size_t t = lo; t < hi; ++t) {
      for (std::size_t i = 0; i < n; ++i) measure.sample_point(stream, cfg.data(i));
      double e;
      try {
        e = ev.total(cfg);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::domain) throw;
        e = std::numeric_limits<double>::quiet_NaN();  // coincident draw under a singular kernel
      }
      energies[t] = e;
    }
  });
  return energies;
}

std::vector<PartitionEstimate> estimate_from_energies(const std::vector<double>& energies, std::size_t n,
                                                      const std::vector<double>& betas, double eps,
                                                      std::uint64_t seed, const PartitionOptions& opts) {
  std::vector<double> kept;
  kept.reserve(energies.size());
  for (double e : energies)
    if (std::isfinite(e)) kept.push_back(e);
  const std::size_t discarded = energies.size() - kept.size();
  if (static_cast<double>(discarded) > 1e-3 * static_cast<double>(energies.size()))
    raise(ErrorKind::estimation, std::to_string(discarded) + " of " + std::to_string(energies.size()) +
                                     " energies were non-finite (limit 0.1%)");
  require(!kept.empty(), ErrorKind::estimation, "no finite energies");
  const double mean_e = stats::mean(kept);
  std::vector<PartitionEstimate> out;
  for (double beta : betas) {
    require(beta >= 0.0 && std::isfinite(beta), ErrorKind::configuration, "beta must be finite and >= 0");
    PartitionEstimate est;
    est.n = n;
    est.beta = beta;
    est.eps = eps;
    est.samples = energies.size();
    est.discarded = discarded;
    est.seed = seed;
    est.mean_energy = mean_e;
    if (beta == 0.0) {
      est.mean = 1.0;
      est.ess = static_cast<double>(kept.size());
      out.push_back(est);
      continue;
    }
    // weights relative to the largest one; mean = exp(shift) * average(relative)
    double shift = -std::numeric_limits<double>::infinity();
    for (double e : kept) shift = std::max(shift, -beta * e);
    std::vector<double> w(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) w[i] = std::exp(-beta * kept[i] - shift);
    stats::Running r;
    for (double v : w) r.add(v);
    const double scale = std::exp(shift);
    est.mean = r.mean() * scale;
    est.log_mean = std::log(r.mean()) + shift;
    est.std_error = r.std_error() * scale;
    est.ess = stats::effective_sample_size(w);
    est.ci_halfwidth =
        stats::bootstrap_mean_halfwidth(w, opts.bootstrap, derive_seed(seed, {n, 0xb0075742ULL}), 0.95) * scale;
    out.push_back(est);
  }
  return out;
}

PartitionEstimate estimate_partition(const Kernel& kernel, const BaseMeasure& measure, std::size_t n, double beta,
                                     double eps, std::size_t samples, std::uint64_t seed,
                                     const PartitionOptions& opts) {
  require(samples >= 1000, ErrorKind::configuration, "partition estimates need >= 1000 samples");
  const auto energies = sample_energies(kernel, measure, n, eps, samples, seed, opts);
  return estimate_from_energies(energies, n, {beta}, eps, seed, opts).front();
}

std::vector<PartitionEstimate> sweep_partition(const Kernel& kernel, const BaseMeasure& measure,
                                               const std::vector<std::size_t>& n_values,
                                               const std::vector<double>& betas, double eps, std::size_t samples,
                                               std::uint64_t seed, const PartitionOptions& opts) {
  require(samples >= 1000, ErrorKind::configuration, "partition estimates need >= 1000 samples");
  require(!n_values.empty(), ErrorKind::configuration, "empty N list");
  for (std::size_t i = 1; i < n_values.size(); ++i)
    require(n_values[i] > n_values[i - 1], ErrorKind::configuration, "N values must increase");
  std::vector<PartitionEstimate> rows;
  for (std::size_t n : n_values) {
    const auto energies = sample_energies(kernel, measure, n, eps, samples, seed, opts);
    for (auto& e : estimate_from_energies(energies, n, betas, eps, seed, opts)) rows.push_back(e);
  }
  return rows;
}

TrendVerdict trend_flatness(const std::vector<PartitionEstimate>& rows, double jensen_floor, double required_ess) {
  TrendVerdict v;
  require(!rows.empty(), ErrorKind::configuration, "no estimates");
  v.beta = rows.front().beta;
  v.min_ess = std::numeric_limits<double>::infinity();
  double running = -std::numeric_limits<double>::infinity();
  for (const auto& r : rows) {
    v.ci = std::max(v.ci, r.ci_halfwidth);
    if (r.mean < 1.0 - r.ci_halfwidth) v.above_one = false;
    if (r.mean < jensen_floor - r.ci_halfwidth) v.jensen = false;
    v.min_ess = std::min(v.min_ess, r.ess);
    running = std::max(running, r.mean);
    v.running_max.push_back(running);
  }
  v.ess_ok = v.min_ess >= required_ess;
  const std::size_t q = std::max<std::size_t>(1, rows.size() / 4);
  for (std::size_t i = 0; i < q; ++i) {
    v.first_quarter += rows[i].mean / static_cast<double>(q);
    v.last_quarter += rows[rows.size() - q + i].mean / static_cast<double>(q);
  }
  v.flat = v.last_quarter <= v.first_quarter + 2.0 * v.ci;
  return v;
}

bool log_partition_convex(const std::vector<PartitionEstimate>& rows) {
  for (std::size_t i = 1; i + 1 < rows.size(); ++i) {
    const double b0 = rows[i - 1].beta, b1 = rows[i].beta, b2 = rows[i + 1].beta;
    const double lam = (b2 - b1) / (b2 - b0);
    const double chord = lam * rows[i - 1].log_mean + (1.0 - lam) * rows[i + 1].log_mean;
    if (rows[i].log_mean > chord + 1e-12 * (1.0 + std::abs(chord))) return false;
  }
  return true;
}

double exact_partition(const Kernel& kernel, double eps, const BaseMeasure& atomic, std::size_t n, double beta) {
  const auto& atoms = atomic.atoms();
  const auto& w = atomic.weights();
  const std::size_t m = atoms.size();
  // W_eps between atoms, tabulated once by direct evaluation
  std::vector<double> table(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) table[a * m + b] = kernel.value_eps(eps, atoms[a], atoms[b]);
  std::vector<double> pot(m, 0.0);  // (W * rho)(atom a)
  double self = 0.0;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) {
      pot[a] += w[b] * table[a * m + b];
      self += w[a] * w[b] * table[a * m + b];
    }
  const double nn = static_cast<double>(n);
  double z = 0.0;
  enumerate_atomic(atomic, n, [&](const Configuration&, double prob, const std::vector<std::size_t>& idx) {
    double pair = 0.0, cross = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      cross += pot[idx[i]];
      for (std::size_t j = 0; j < n; ++j)
        if (j != i) pair += table[idx[i] * m + idx[j]];
    }
    const double energy = pair / (2.0 * nn) - cross + 0.5 * nn * self;
    z += prob * std::exp(-beta * energy);
  });
  return z;
}

}  // namespace loggas
