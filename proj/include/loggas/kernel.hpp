#pragma once

#include <array>
#include <string>
#include <vector>

#include "loggas/fft.hpp"
#include "loggas/geometry.hpp"

namespace loggas {

class BaseMeasure;

enum class Family { torus_log, free_log, zero };
enum class SemigroupOrder { full, half };

std::string to_string(Family f);
std::string to_string(SemigroupOrder s);
Family family_from_string(const std::string& s);

/// One representative k of a +-k pair (k in the positive half-space).
struct Mode {
  std::array<int, 3> k{0, 0, 0};
  double freq = 0.0;   // |2 pi k|
  double coeff = 0.0;  // c_k = |2 pi k|^-d
};

/// Interaction potential W(x, y) = F(x - y) and its regularizations W_eps = P_eps W.
///
/// torus-log: F(z) = sum_{0 < |k|_inf <= K} c_k cos(2 pi k.z), c_k = |2 pi k|^-d.
/// free-log:  F(z) = -ln|z|; W_eps is the heat semigroup (Gaussian of variance 2 eps per
///            coordinate) applied to F, or the Poisson semigroup when d = 1.
/// zero:      W = 0 (control runs).
class Kernel {
 public:
  Kernel(Domain domain, Family family, int cutoff);

  static Kernel torus_log(int d, int cutoff = 0);  // cutoff 0 picks the default
  static Kernel free_log(int d, double radius = 1.0);
  static Kernel zero(Domain domain);
  static int default_cutoff(int d) { return d == 3 ? 24 : 64; }

  const Domain& domain() const { return domain_; }
  int dim() const { return domain_.d; }
  Family family() const { return family_; }
  int cutoff() const { return cutoff_; }
  SemigroupOrder order() const { return order_; }
  bool spectral() const { return family_ != Family::free_log; }

  /// Positive half-space modes with |k|_inf <= K (empty for free-log and zero).
  const std::vector<Mode>& half_modes() const { return modes_; }

  double coefficient(const std::array<int, 3>& k) const;
  double multiplier(double freq, double eps) const;

  double eval(const Point& x, const Point& y) const;
  double eval_regularized(double eps, const Point& x, const Point& y) const;
  /// W_eps for eps > 0, the bare kernel for eps = 0.
  double value_eps(double eps, const Point& x, const Point& y) const;
  Point gradient(double eps, const Point& x, const Point& y) const;

  /// W_eps(x, x); eps = 0 gives the bare truncated series value at 0 on the torus.
  double diagonal(double eps) const;

  /// Radial profile of the free-space regularization by adaptive quadrature.
  double free_regularized(double eps, double r) const;
  double free_regularized_slope(double eps, double r) const;

  /// Uniform bound on sum over |k|_inf > K of c_k m_k(eps); +inf when it diverges.
  double tail_bound(double eps) const;
  /// Pointwise bound on the truncation error of the bare series at z (d = 1 only).
  double tail_bound_at(double z) const;

 private:
  double series(double eps, const Point& z) const;
  Point series_gradient(double eps, const Point& z) const;

  Domain domain_;
  Family family_;
  int cutoff_;
  SemigroupOrder order_;
  std::vector<Mode> modes_;
};

/// Values of sum_{0<|k|_inf<=K} c_k g_k cos(2 pi k.z) at the nodes z = j/M of an M^d grid;
/// g is indexed like half_modes(). Aliased modes are accumulated, so node values are exact
/// for every M.
std::vector<double> synthesize_on_grid(const Kernel& kernel, int M, const std::vector<double>& half_mode_factor);

struct RegularityReport {
  std::string kind;  // "besov" | "superharmonicity" | "diagonal"
  std::vector<double> epsilons;
  std::vector<double> diagonal_values;
  std::vector<double> besov_norms;
  std::vector<double> superharm_minima;
  // besov: (kappa, log C); superharmonicity: (K, alpha); diagonal: (C0, max/min ratio)
  std::array<double, 2> fitted_exponents{0.0, 0.0};
  std::vector<double> residuals;
  double tail_bound = 0.0;
};

/// Diagonal values W_eps(x,x) and their ratio to |ln eps| + 1 over the sweep.
RegularityReport verify_diagonal(const Kernel& kernel, const std::vector<double>& epsilons);

RegularityReport verify_besov(const Kernel& kernel, const BaseMeasure& measure, int p,
                              const std::vector<double>& epsilons, int quadrature = 0, int sup_grid = 32);

RegularityReport verify_superharmonicity(const Kernel& kernel, const std::vector<double>& epsilons,
                                         int grid_resolution);

}  // namespace loggas
