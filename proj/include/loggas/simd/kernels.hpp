#pragma once

#include <cstddef>
#include <string_view>

// Inner loops of the mode sums. Complex arrays are split into real/imag planes.
// Every function has a scalar reference and an AVX2+FMA variant; the active table
// is picked at startup from the CPU flags (override with LOGGAS_SIMD=scalar|avx2).

namespace loggas::simd {

enum class Backend { scalar, avx2 };

struct Kernels {
  // y += a * x
  void (*caxpy)(double ar, double ai, const double* xr, const double* xi, double* yr, double* yi,
                std::size_t n);
  // sum w |z|^2
  double (*weighted_norm2)(const double* w, const double* re, const double* im, std::size_t n);
  // sum w Re(conj(a) b)
  double (*weighted_real_dot)(const double* w, const double* ar, const double* ai, const double* br,
                              const double* bi, std::size_t n);
  // sum w Im(conj(a) b)
  double (*weighted_imag_dot)(const double* w, const double* ar, const double* ai, const double* br,
                              const double* bi, std::size_t n);
  // sum w (2 Re(conj(s) d) + |d|^2) with d = rn*cn - ro*co, rn/ro scalars, cn/co arrays:
  // change of sum w |s|^2 when one particle moves.
  double (*move_delta)(const double* w, const double* sr, const double* si, double ro_r, double ro_i,
                       const double* cor, const double* coi, double rn_r, double rn_i, const double* cnr,
                       const double* cni, std::size_t n);
};

const Kernels& scalar_kernels();
const Kernels* avx2_kernels();  // nullptr when not compiled in

Backend detected_backend();
Backend active_backend();
void set_backend(Backend b);  // throws unsupported if the CPU lacks it
const Kernels& kernels();
const Kernels& kernels_for(Backend b);
std::string_view to_string(Backend b);

}  // namespace loggas::simd
