#include "loggas/spectral.hpp"

#include <cmath>
#include <numbers>

#include "loggas/errors.hpp"
#include "loggas/simd/kernels.hpp"

namespace loggas {

using std::numbers::pi;

ModeLattice::ModeLattice(const Kernel& kernel, double eps) : d_(kernel.dim()), K_(kernel.cutoff()) {
  require(kernel.family() == Family::torus_log, ErrorKind::unsupported, "mode lattice needs a torus-log kernel");
  require(eps >= 0.0, ErrorKind::domain, "eps must be >= 0");
  const std::size_t span = static_cast<std::size_t>(2 * K_ + 1);
  if (d_ == 1) {
    rows_ = 1;
    cols_ = static_cast<std::size_t>(K_ + 1);
  } else {
    rows_ = d_ == 2 ? static_cast<std::size_t>(K_ + 1) : static_cast<std::size_t>(K_ + 1) * span;
    cols_ = span;
  }
  weight_.assign(rows_ * cols_, 0.0);
  col_k_.resize(cols_);
  for (std::size_t q = 0; q < cols_; ++q) col_k_[q] = d_ == 1 ? double(q) : double(q) - K_;
  for (auto& v : row_k_) v.assign(rows_, 0.0);
  for (std::size_t p = 0; p < rows_; ++p) {
    if (d_ == 2) row_k_[0][p] = double(p);
    if (d_ == 3) {
      row_k_[0][p] = double(p / span);
      row_k_[1][p] = double(p % span) - K_;
    }
  }
  for (const Mode& m : kernel.half_modes()) {
    const double w = 2.0 * m.coeff * (eps > 0.0 ? kernel.multiplier(m.freq, eps) : 1.0);
    weight_[position(m.k)] = w;
    diag_ += w;
  }
}

std::size_t ModeLattice::position(const std::array<int, 3>& k) const {
  const std::size_t span = static_cast<std::size_t>(2 * K_ + 1);
  switch (d_) {
    case 1: return static_cast<std::size_t>(k[0]);
    case 2: return static_cast<std::size_t>(k[0]) * cols_ + static_cast<std::size_t>(k[1] + K_);
    default: {
      const std::size_t p = static_cast<std::size_t>(k[0]) * span + static_cast<std::size_t>(k[1] + K_);
      return p * cols_ + static_cast<std::size_t>(k[2] + K_);
    }
  }
}

void ModeLattice::scatter(const Kernel& kernel, const std::vector<cplx>& per_mode, std::vector<double>& re,
                          std::vector<double>& im) const {
  re.assign(size(), 0.0);
  im.assign(size(), 0.0);
  const auto& modes = kernel.half_modes();
  for (std::size_t m = 0; m < modes.size(); ++m) {
    const std::size_t pos = position(modes[m].k);
    re[pos] = per_mode[m].real();
    im[pos] = per_mode[m].imag();
  }
}

namespace {

// e^{2 pi i k x} for k = k0, k0+1, ..., k0+n-1, by recurrence refreshed every 32 steps.
void phase_run(double x, int k0, std::size_t n, double* re, double* im) {
  const double sr = std::cos(2.0 * pi * x), si = std::sin(2.0 * pi * x);
  double cr = 0.0, ci = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j % 32 == 0) {
      const double a = 2.0 * pi * (double(k0) + double(j)) * x;
      cr = std::cos(a);
      ci = std::sin(a);
    } else {
      const double t = cr * sr - ci * si;
      ci = cr * si + ci * sr;
      cr = t;
    }
    re[j] = cr;
    im[j] = ci;
  }
}

}  // namespace

void ModeLattice::phases(const double* x, double* rr, double* ri, double* cr, double* ci) const {
  if (d_ == 1) {
    rr[0] = 1.0;
    ri[0] = 0.0;
    phase_run(x[0], 0, cols_, cr, ci);
    return;
  }
  phase_run(x[d_ - 1], -K_, cols_, cr, ci);
  if (d_ == 2) {
    phase_run(x[0], 0, rows_, rr, ri);
    return;
  }
  const std::size_t span = cols_;
  std::vector<double> ar(static_cast<std::size_t>(K_ + 1)), ai(ar.size()), br(span), bi(span);
  phase_run(x[0], 0, ar.size(), ar.data(), ai.data());
  phase_run(x[1], -K_, span, br.data(), bi.data());
  for (std::size_t a = 0; a < ar.size(); ++a)
    for (std::size_t b = 0; b < span; ++b) {
      rr[a * span + b] = ar[a] * br[b] - ai[a] * bi[b];
      ri[a * span + b] = ar[a] * bi[b] + ai[a] * br[b];
    }
}

void SpectralWork::resize(const ModeLattice& lat) {
  re.assign(lat.size(), 0.0);
  im.assign(lat.size(), 0.0);
  rr.assign(lat.rows(), 0.0);
  ri.assign(lat.rows(), 0.0);
  cr.assign(lat.cols(), 0.0);
  ci.assign(lat.cols(), 0.0);
  ur.assign(lat.cols(), 0.0);
  ui.assign(lat.cols(), 0.0);
}

void structure_factor(const ModeLattice& lat, const Configuration& cfg, std::vector<double>& sr,
                      std::vector<double>& si, SpectralWork& work) {
  if (work.cr.size() != lat.cols() || work.rr.size() != lat.rows()) work.resize(lat);
  const auto& K = simd::kernels();
  const std::size_t rows = lat.rows(), cols = lat.cols();
  sr.assign(lat.size(), 0.0);
  si.assign(lat.size(), 0.0);
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    lat.phases(cfg.data(i), work.rr.data(), work.ri.data(), work.cr.data(), work.ci.data());
    for (std::size_t p = 0; p < rows; ++p)
      K.caxpy(work.rr[p], work.ri[p], work.cr.data(), work.ci.data(), sr.data() + p * cols, si.data() + p * cols,
              cols);
  }
}

void field_at_particles(const ModeLattice& lat, const std::vector<double>& br, const std::vector<double>& bi,
                        const Configuration& cfg, std::vector<double>* values, std::vector<double>* grads,
                        SpectralWork& work) {
  if (work.cr.size() != lat.cols() || work.rr.size() != lat.rows()) work.resize(lat);
  const auto& K = simd::kernels();
  const std::size_t rows = lat.rows(), cols = lat.cols(), n = cfg.size();
  const int d = lat.dim();
  if (values) values->assign(n, 0.0);
  if (grads) grads->assign(n * static_cast<std::size_t>(d), 0.0);
  const std::vector<double> ones(cols, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    lat.phases(cfg.data(i), work.rr.data(), work.ri.data(), work.cr.data(), work.ci.data());
    // U[q] = sum_p conj(R[p]) B[p][q]
    std::fill(work.ur.begin(), work.ur.end(), 0.0);
    std::fill(work.ui.begin(), work.ui.end(), 0.0);
    for (std::size_t p = 0; p < rows; ++p)
      K.caxpy(work.rr[p], -work.ri[p], br.data() + p * cols, bi.data() + p * cols, work.ur.data(), work.ui.data(),
              cols);
    if (values)
      (*values)[i] = K.weighted_real_dot(ones.data(), work.cr.data(), work.ci.data(), work.ur.data(),
                                         work.ui.data(), cols);
    if (!grads) continue;
    double* g = grads->data() + i * static_cast<std::size_t>(d);
    // d/dx Re(conj(e_x) B) = 2 pi k Im(conj(e_x) B)
    g[d - 1] = 2.0 * pi *
               K.weighted_imag_dot(lat.col_k().data(), work.cr.data(), work.ci.data(), work.ur.data(),
                                   work.ui.data(), cols);
    for (int axis = 0; axis + 1 < d; ++axis) {
      const auto& kr = lat.row_k(axis);
      std::fill(work.ur.begin(), work.ur.end(), 0.0);
      std::fill(work.ui.begin(), work.ui.end(), 0.0);
      for (std::size_t p = 0; p < rows; ++p) {
        if (kr[p] == 0.0) continue;
        K.caxpy(kr[p] * work.rr[p], -kr[p] * work.ri[p], br.data() + p * cols, bi.data() + p * cols,
                work.ur.data(), work.ui.data(), cols);
      }
      g[axis] = 2.0 * pi *
                K.weighted_imag_dot(ones.data(), work.cr.data(), work.ci.data(), work.ur.data(), work.ui.data(),
                                    cols);
    }
  }
}

}  // namespace loggas
