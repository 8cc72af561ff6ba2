#pragma once

#include <functional>
#include <string>
#include <vector>

#include "loggas/fft.hpp"
#include "loggas/geometry.hpp"
#include "loggas/kernel.hpp"
#include "loggas/rng.hpp"

namespace loggas {

/// Vose alias table over a finite discrete law.
class AliasTable {
 public:
  AliasTable() = default;
  explicit AliasTable(const std::vector<double>& weights);
  std::size_t draw(Stream& stream) const;
  std::size_t size() const { return prob_.size(); }

 private:
  std::vector<double> prob_;
  std::vector<std::size_t> alias_;
};

/// Base measure on the domain: uniform, piecewise-constant grid density, or atoms.
/// Torus grids cover [0,1)^d; free-space grids cover [-R, R]^d.
class BaseMeasure {
 public:
  enum class Kind { uniform, grid, atomic };

  static BaseMeasure uniform(const Domain& domain);
  /// Density values at cells (row-major, cells^d entries); rescaled to unit mass.
  static BaseMeasure grid(const Domain& domain, int cells, std::vector<double> density);
  /// Grid density from a function of the cell center.
  static BaseMeasure grid_from(const Domain& domain, int cells, const std::function<double(const Point&)>& f);
  static BaseMeasure single_mode(const Domain& domain, int cells, double amplitude);
  static BaseMeasure two_bump(const Domain& domain, int cells, double width = 0.08);
  static BaseMeasure atomic(const Domain& domain, std::vector<Point> points, std::vector<double> weights);

  const Domain& domain() const { return domain_; }
  Kind kind() const { return kind_; }
  int cells() const { return cells_; }
  const std::vector<double>& density() const { return density_; }
  const std::vector<Point>& atoms() const { return atoms_; }
  const std::vector<double>& weights() const { return weights_; }
  double linf_density() const { return linf_; }
  double cell_width() const;
  double lower_corner() const { return domain_.is_torus() ? 0.0 : -domain_.radius; }
  std::string describe() const { return description_; }

  Configuration sample(std::size_t n, Stream& stream) const;
  void sample_point(Stream& stream, double* out) const;

  /// Density at x (piecewise constant); atomic measures have none.
  double density_at(const Point& x) const;
  double total_mass() const;

  /// Exact coefficient int e^{2 pi i k.y} drho(y) (torus only; piecewise-constant cells are
  /// integrated exactly).
  cplx fourier(const std::array<int, 3>& k) const;
  /// fourier() for every half-space mode of `kernel`, in half_modes() order.
  std::vector<cplx> fourier_table(const Kernel& kernel) const;

 private:
  Domain domain_;
  Kind kind_ = Kind::uniform;
  int cells_ = 0;
  std::vector<double> density_;
  std::vector<Point> atoms_;
  std::vector<double> weights_;
  double linf_ = 1.0;
  AliasTable alias_;
  std::vector<cplx> dft_;  // forward DFT of the cell values (grid, torus)
  std::string description_;
};

/// (W_eps * rho)(x) on the measure's grid, at cell centers, via the DFT of the cell values
/// (forward transform carries 1/cells^d) times c_k m_k(eps). Uniform measures need `cells`.
std::vector<double> convolve(const Kernel& kernel, double eps, const BaseMeasure& measure, int cells = 0);

/// (W_eps * rho)(x) at given points. Atomic: direct summation over atoms. Otherwise spectral.
std::vector<double> convolve_at(const Kernel& kernel, double eps, const BaseMeasure& measure,
                                const std::vector<Point>& points);
/// Spectral route for any torus measure, from its exact Fourier coefficients.
std::vector<double> convolve_at_spectral(const Kernel& kernel, double eps, const BaseMeasure& measure,
                                         const std::vector<Point>& points);

/// int int W_eps drho drho.
double self_energy(const Kernel& kernel, double eps, const BaseMeasure& measure);

}  // namespace loggas
