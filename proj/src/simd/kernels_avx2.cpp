// Compiled with -mavx2 -mfma; only reached after a runtime CPU check.
#include <immintrin.h>

#include "loggas/simd/kernels.hpp"

namespace loggas::simd {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(lo, _mm_unpackhi_pd(lo, lo)));
}

void caxpy(double ar, double ai, const double* xr, const double* xi, double* yr, double* yi, std::size_t n) {
  const __m256d var = _mm256_set1_pd(ar), vai = _mm256_set1_pd(ai);
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d x_r = _mm256_loadu_pd(xr + k), x_i = _mm256_loadu_pd(xi + k);
    __m256d y_r = _mm256_loadu_pd(yr + k), y_i = _mm256_loadu_pd(yi + k);
    y_r = _mm256_fmadd_pd(var, x_r, y_r);
    y_r = _mm256_fnmadd_pd(vai, x_i, y_r);
    y_i = _mm256_fmadd_pd(var, x_i, y_i);
    y_i = _mm256_fmadd_pd(vai, x_r, y_i);
    _mm256_storeu_pd(yr + k, y_r);
    _mm256_storeu_pd(yi + k, y_i);
  }
  for (; k < n; ++k) {
    yr[k] += ar * xr[k] - ai * xi[k];
    yi[k] += ar * xi[k] + ai * xr[k];
  }
}

double weighted_norm2(const double* w, const double* re, const double* im, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 8 <= n; k += 8) {
    __m256d r = _mm256_loadu_pd(re + k), i = _mm256_loadu_pd(im + k);
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), _mm256_fmadd_pd(r, r, _mm256_mul_pd(i, i)), acc0);
    r = _mm256_loadu_pd(re + k + 4);
    i = _mm256_loadu_pd(im + k + 4);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(w + k + 4), _mm256_fmadd_pd(r, r, _mm256_mul_pd(i, i)), acc1);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; k < n; ++k) s += w[k] * (re[k] * re[k] + im[k] * im[k]);
  return s;
}

double weighted_real_dot(const double* w, const double* ar, const double* ai, const double* br,
                         const double* bi, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d t = _mm256_fmadd_pd(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(br + k),
                                      _mm256_mul_pd(_mm256_loadu_pd(ai + k), _mm256_loadu_pd(bi + k)));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), t, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) s += w[k] * (ar[k] * br[k] + ai[k] * bi[k]);
  return s;
}

double weighted_imag_dot(const double* w, const double* ar, const double* ai, const double* br,
                         const double* bi, std::size_t n) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d t = _mm256_fmsub_pd(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(bi + k),
                                      _mm256_mul_pd(_mm256_loadu_pd(ai + k), _mm256_loadu_pd(br + k)));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), t, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) s += w[k] * (ar[k] * bi[k] - ai[k] * br[k]);
  return s;
}

double move_delta(const double* w, const double* sr, const double* si, double ro_r, double ro_i,
                  const double* cor, const double* coi, double rn_r, double rn_i, const double* cnr,
                  const double* cni, std::size_t n) {
  const __m256d vor = _mm256_set1_pd(ro_r), voi = _mm256_set1_pd(ro_i);
  const __m256d vnr = _mm256_set1_pd(rn_r), vni = _mm256_set1_pd(rn_i);
  const __m256d two = _mm256_set1_pd(2.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t k = 0;
  for (; k + 4 <= n; k += 4) {
    const __m256d c_or = _mm256_loadu_pd(cor + k), c_oi = _mm256_loadu_pd(coi + k);
    const __m256d c_nr = _mm256_loadu_pd(cnr + k), c_ni = _mm256_loadu_pd(cni + k);
    const __m256d new_r = _mm256_fmsub_pd(vnr, c_nr, _mm256_mul_pd(vni, c_ni));
    const __m256d new_i = _mm256_fmadd_pd(vnr, c_ni, _mm256_mul_pd(vni, c_nr));
    const __m256d old_r = _mm256_fmsub_pd(vor, c_or, _mm256_mul_pd(voi, c_oi));
    const __m256d old_i = _mm256_fmadd_pd(vor, c_oi, _mm256_mul_pd(voi, c_or));
    const __m256d dr = _mm256_sub_pd(new_r, old_r), di = _mm256_sub_pd(new_i, old_i);
    const __m256d cross = _mm256_fmadd_pd(_mm256_loadu_pd(sr + k), dr, _mm256_mul_pd(_mm256_loadu_pd(si + k), di));
    const __m256d t = _mm256_fmadd_pd(two, cross, _mm256_fmadd_pd(dr, dr, _mm256_mul_pd(di, di)));
    acc = _mm256_fmadd_pd(_mm256_loadu_pd(w + k), t, acc);
  }
  double s = hsum(acc);
  for (; k < n; ++k) {
    const double dr = (rn_r * cnr[k] - rn_i * cni[k]) - (ro_r * cor[k] - ro_i * coi[k]);
    const double di = (rn_r * cni[k] + rn_i * cnr[k]) - (ro_r * coi[k] + ro_i * cor[k]);
    s += w[k] * (2.0 * (sr[k] * dr + si[k] * di) + dr * dr + di * di);
  }
  return s;
}

const Kernels table{caxpy, weighted_norm2, weighted_real_dot, weighted_imag_dot, move_delta};

}  // namespace

const Kernels* avx2_kernels() { return &table; }

}  // namespace loggas::simd
