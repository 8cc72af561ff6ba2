#include "loggas/simd/kernels.hpp"

namespace loggas::simd {
namespace {

void caxpy(double ar, double ai, const double* xr, const double* xi, double* yr, double* yi, std::size_t n) {
  for (std::size_t k = 0; k < n; ++k) {
    yr[k] += ar * xr[k] - ai * xi[k];
    yi[k] += ar * xi[k] + ai * xr[k];
  }
}

double weighted_norm2(const double* w, const double* re, const double* im, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += w[k] * (re[k] * re[k] + im[k] * im[k]);
  return s;
}

double weighted_real_dot(const double* w, const double* ar, const double* ai, const double* br,
                         const double* bi, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += w[k] * (ar[k] * br[k] + ai[k] * bi[k]);
  return s;
}

double weighted_imag_dot(const double* w, const double* ar, const double* ai, const double* br,
                         const double* bi, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) s += w[k] * (ar[k] * bi[k] - ai[k] * br[k]);
  return s;
}

double move_delta(const double* w, const double* sr, const double* si, double ro_r, double ro_i,
                  const double* cor, const double* coi, double rn_r, double rn_i, const double* cnr,
                  const double* cni, std::size_t n) {
  double s = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double dr = (rn_r * cnr[k] - rn_i * cni[k]) - (ro_r * cor[k] - ro_i * coi[k]);
    const double di = (rn_r * cni[k] + rn_i * cnr[k]) - (ro_r * coi[k] + ro_i * cor[k]);
    s += w[k] * (2.0 * (sr[k] * dr + si[k] * di) + dr * dr + di * di);
  }
  return s;
}

const Kernels table{caxpy, weighted_norm2, weighted_real_dot, weighted_imag_dot, move_delta};

}  // namespace

const Kernels& scalar_kernels() { return table; }

}  // namespace loggas::simd
