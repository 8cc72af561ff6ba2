#pragma once

#include <complex>
#include <vector>

namespace loggas {

using cplx = std::complex<double>;

/// Complex DFT on an M^d periodic grid (row-major, last axis fastest), backed by FFTW.
/// forward:  X[k] = sum_j x[j] e^{-2 pi i k.j/M}   (unnormalized)
/// backward: x[j] = sum_k X[k] e^{+2 pi i k.j/M}   (unnormalized)
class FftPlan {
 public:
  FftPlan(int d, int M);
  ~FftPlan();
  FftPlan(const FftPlan&) = delete;
  FftPlan& operator=(const FftPlan&) = delete;

  int dim() const { return d_; }
  int size() const { return M_; }
  std::size_t total() const { return total_; }

  void forward(const std::vector<cplx>& in, std::vector<cplx>& out);
  void backward(const std::vector<cplx>& in, std::vector<cplx>& out);

 private:
  void run(void* plan, const std::vector<cplx>& in, std::vector<cplx>& out);

  int d_, M_;
  std::size_t total_;
  cplx* buf_in_;
  cplx* buf_out_;
  void* fwd_;
  void* bwd_;
};

/// Signed frequency of grid index j in [0, M).
inline int signed_freq(int j, int M) { return j <= M / 2 ? (j == M / 2 && M % 2 == 0 ? -j : j) : j - M; }
inline int wrap_index(int k, int M) { return ((k % M) + M) % M; }

}  // namespace loggas
