#pragma once

#include <cstddef>
#include <vector>

#include "loggas/fft.hpp"
#include "loggas/geometry.hpp"
#include "loggas/kernel.hpp"

namespace loggas {

/// Half-space Fourier modes of a torus kernel laid out as a rows x cols table so that
/// e^{2 pi i k.x} = R[p] * C[q]: the column carries the last axis, the row the others.
///   d=1: one row, q = k in [0, K]
///   d=2: p = k1 in [0, K], q = k2 + K
///   d=3: p = k1 (2K+1) + k2 + K, q = k3 + K
/// Entries outside the positive half-space have weight 0. weight = 2 c_k m_k(eps), so for any
/// real configuration sum_{k != 0} c_k m_k |S(k)|^2 = sum_table weight |S|^2.
class ModeLattice {
 public:
  ModeLattice(const Kernel& kernel, double eps);

  int dim() const { return d_; }
  int cutoff() const { return K_; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return rows_ * cols_; }

  const std::vector<double>& weight() const { return weight_; }
  /// Per-column k of the last axis and per-row k of the leading axes.
  const std::vector<double>& col_k() const { return col_k_; }
  const std::vector<double>& row_k(int axis) const { return row_k_[axis]; }
  /// sum of weights = W_eps(x, x)
  double diagonal() const { return diag_; }

  /// Table position of a half-space mode.
  std::size_t position(const std::array<int, 3>& k) const;
  /// Values indexed like kernel.half_modes() scattered into the table (0 elsewhere).
  void scatter(const Kernel& kernel, const std::vector<cplx>& per_mode, std::vector<double>& re,
               std::vector<double>& im) const;

  void phases(const double* x, double* rr, double* ri, double* cr, double* ci) const;

 private:
  int d_, K_;
  std::size_t rows_, cols_;
  std::vector<double> weight_, col_k_;
  std::vector<double> row_k_[2];
  double diag_ = 0.0;
};

/// Split complex table (rows x cols) with per-particle phase scratch.
struct SpectralWork {
  std::vector<double> re, im;       // table
  std::vector<double> rr, ri, cr, ci;  // phases of one particle
  std::vector<double> ur, ui;       // one row-contracted vector
  void resize(const ModeLattice& lat);
};

/// S(k) = sum_i e^{2 pi i k.x_i} over the lattice table.
void structure_factor(const ModeLattice& lat, const Configuration& cfg, std::vector<double>& sr,
                      std::vector<double>& si, SpectralWork& work);

/// For the real field f(x) = sum_table Re(conj(e_x) B), value and gradient at every particle.
/// B must already include the mode weights.
void field_at_particles(const ModeLattice& lat, const std::vector<double>& br, const std::vector<double>& bi,
                        const Configuration& cfg, std::vector<double>* values, std::vector<double>* grads,
                        SpectralWork& work);

}  // namespace loggas
