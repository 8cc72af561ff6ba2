#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "loggas/kernel.hpp"
#include "loggas/measure.hpp"
#include "loggas/spectral.hpp"

namespace loggas {

/// Assignment of p slots to ordered pairs (i, j), i != j, of n particles. Entries are stored
/// per pair slot i*(n-1) + (j < i ? j : j-1).
struct MultiIndex {
  int n = 0;
  int p = 0;
  std::vector<int> entries;

  std::size_t slots() const { return entries.size(); }
  static std::size_t slot(int n, int i, int j) { return static_cast<std::size_t>(i) * (n - 1) + (j < i ? j : j - 1); }
  static std::pair<int, int> pair(int n, std::size_t slot);
  int at(int i, int j) const { return entries[slot(n, i, j)]; }
};

struct MultiplicityProfile {
  std::vector<int> m;       // m_i = sum_j I(i,j) + I(j,i)
  std::vector<int> active;  // particles with m_i != 0, increasing
  int act = 0;
  bool restricted = false;  // no m_i equals 1

  int max_multiplicity() const;
};

/// Number of p-multiindices on n particles: multichoose(n(n-1), p).
std::uint64_t count_multiindices(int n, int p);

/// Streams every p-multiindex once; n(n-1) <= 30 and p <= 4.
void enumerate_multiindices(int n, int p, const std::function<void(const MultiIndex&)>& visit);

MultiplicityProfile classify(const MultiIndex& index);

/// max_i m_i <= 2p - 2(act - 1) for a restricted index.
bool multiplicity_bound_holds(const MultiplicityProfile& profile, int p);

/// binom(n, ell) (ell^2 - ell)^p.
double restricted_count_bound(int n, int p, int ell);

/// |E_{p, ell}| by filtering the enumeration. Raises if the cardinality bound fails.
std::uint64_t count_restricted(int n, int p, int ell);

/// Support of I split along the active particles i_1 < ... < i_ell:
///   A_k = support pairs touching i_k,  C_k = A_k minus A_1..A_{k-1}  (k = 1..ell-1),
///   gamma_k = sum of I over C_k.
struct PairDecomposition {
  std::vector<std::vector<std::size_t>> a, c;
  std::vector<int> gamma;
  bool partition = false;  // C_k disjoint and covering the support
  bool gamma_sum = false;  // sum gamma_k = p
};

PairDecomposition decompose(const MultiIndex& index, const MultiplicityProfile& profile);

/// Symmetric pair function on the m atoms of an atomic measure (row-major m x m).
struct AtomTable {
  std::vector<double> weights;
  std::vector<double> values;
  std::size_t m() const { return weights.size(); }
  double operator()(std::size_t a, std::size_t b) const { return values[a * weights.size() + b]; }
  /// Largest |sum_b w_b G(a, b)|.
  double marginal_defect() const;
};

/// Double centering of a symmetric table against its weights:
/// G(a,b) - g(a) - g(b) + sum w g with g(a) = sum_b w_b G(a,b).
AtomTable center_table(std::vector<double> weights, const std::vector<double>& raw);

/// Interface for a symmetric pair function G used in U-statistics.
class PairKernel {
 public:
  virtual ~PairKernel() = default;
  virtual double operator()(const Point& x, const Point& y) const = 0;
  /// sum_{i != j} G(x_i, x_j); the default sums pairs directly.
  virtual double pair_sum(const Configuration& cfg) const;
};

/// G_eps(x, y): W - W_eps doubly centered against the base measure.
class CenteredKernel : public PairKernel {
 public:
  CenteredKernel(const Kernel& kernel, double eps, const BaseMeasure& measure);

  double operator()(const Point& x, const Point& y) const override;
  double pair_sum(const Configuration& cfg) const override;

  /// int (W - W_eps)(x, z) drho(z)
  double marginal(const Point& x) const;
  double total() const { return total_; }
  double eps() const { return eps_; }
  const BaseMeasure& measure() const { return measure_; }

 private:
  Kernel kernel_;
  double eps_;
  BaseMeasure measure_;
  double total_ = 0.0;
  // torus: weights of W - W_eps on the mode lattice and the measure's coefficients
  std::shared_ptr<ModeLattice> lattice_;
  std::vector<double> gap_weight_, rho_re_, rho_im_;
  double gap_diag_ = 0.0;
};

/// g(x) g(y).
class RankOneKernel : public PairKernel {
 public:
  explicit RankOneKernel(std::function<double(const Point&)> g) : g_(std::move(g)) {}
  double operator()(const Point& x, const Point& y) const override { return g_(x) * g_(y); }
  double pair_sum(const Configuration& cfg) const override;

 private:
  std::function<double(const Point&)> g_;
};

AtomTable tabulate(const PairKernel& g, const BaseMeasure& atomic);

struct ExactMoment {
  double absolute = 0.0;  // E |T|^p
  double raw = 0.0;       // E T^p
};

/// T = (1/n) sum_{i != j} G(X_i, X_j) with X_i i.i.d. from the table weights; exact sum over
/// all m^n configurations (m^n <= 1e6).
ExactMoment moment_oracle(const AtomTable& g, int n, int p);
ExactMoment moment_oracle(const PairKernel& g, const BaseMeasure& atomic, int n, int p);

/// int prod_{(i,j)} G(x_i, x_j)^{I(i,j)} drho^{n}, summed over the active particles only.
double multiindex_term(const AtomTable& g, const MultiIndex& index);

/// E T^p through n^{-p} sum_I p!/prod I! term(I). With restricted_only, indices outside E_p
/// are skipped.
double expansion_moment(const AtomTable& g, int n, int p, bool restricted_only);

struct MonteCarloMoment {
  std::size_t samples = 0;
  double mean = 0.0;  // E |T|^p
  double std_error = 0.0;
  double raw_mean = 0.0;  // E T^p
  double raw_std_error = 0.0;
};

MonteCarloMoment moment_monte_carlo(const AtomTable& g, int n, int p, std::size_t samples, std::uint64_t seed,
                                    int workers = 1);
MonteCarloMoment moment_monte_carlo(const PairKernel& g, const BaseMeasure& measure, int n, int p,
                                    std::size_t samples, std::uint64_t seed, int workers = 1);

/// sup_x (int |G(x, y)|^q drho(y)), with x over a probe grid of `probes`^d points and y
/// integrated on `nodes`^d cell centers weighted by the density (exact sums for atoms).
double sup_norm_power(const PairKernel& g, const BaseMeasure& measure, double q, int probes = 8, int nodes = 64);

struct CorrelationScaling {
  int p = 0;
  double gamma = 0.0;
  int rhs_exponent = 0;         // p - 1 - floor(gamma p)
  double lp_term = 0.0;         // sup ||G(x,.)||_p^p
  double floor_term = 0.0;      // sup ||G(x,.)||_{2(p - ceil(gamma p))}^p
  std::vector<int> n_values;
  std::vector<MonteCarloMoment> lhs;
  std::vector<double> rhs;      // C_p (N^{-e} lp_term + floor_term)
  double constant = 0.0;        // C_p fitted at the smallest N
  bool bounded = true;          // lhs <= rhs within 3 standard errors at every N
  double constant_drift = 1.0;  // max over N of (lhs / (N^{-e} lp_term + floor_term)) / C_p
  double fitted_floor = 0.0;    // B in lhs ~ A N^{-a} + B
  double fitted_exponent = 0.0; // a
  bool inconclusive = false;    // N-dependent part within noise
  bool exponent_ok = true;      // a >= rhs_exponent - 0.3, or inconclusive
  bool pass() const { return bounded && exponent_ok; }
};

CorrelationScaling verify_corineq_scaling(const PairKernel& g, const BaseMeasure& measure, int p, double gamma,
                                          const std::vector<int>& n_values, std::size_t samples,
                                          std::uint64_t seed, int workers = 1);

}  // namespace loggas
