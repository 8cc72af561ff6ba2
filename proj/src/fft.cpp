#include "loggas/fft.hpp"

#include <algorithm>
#include <mutex>

#include <fftw3.h>

#include "loggas/errors.hpp"

namespace loggas {
namespace {
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

FftPlan::FftPlan(int d, int M) : d_(d), M_(M), total_(1) {
  require(d >= 1 && d <= 3 && M >= 1, ErrorKind::configuration, "bad FFT grid");
  for (int c = 0; c < d; ++c) total_ *= static_cast<std::size_t>(M);
  int dims[3] = {M, M, M};
  std::lock_guard lock(planner_mutex());
  buf_in_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * total_));
  buf_out_ = reinterpret_cast<cplx*>(fftw_malloc(sizeof(fftw_complex) * total_));
  auto* in = reinterpret_cast<fftw_complex*>(buf_in_);
  auto* out = reinterpret_cast<fftw_complex*>(buf_out_);
  fwd_ = fftw_plan_dft(d, dims, in, out, FFTW_FORWARD, FFTW_ESTIMATE);
  bwd_ = fftw_plan_dft(d, dims, in, out, FFTW_BACKWARD, FFTW_ESTIMATE);
}

FftPlan::~FftPlan() {
  std::lock_guard lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(bwd_));
  fftw_free(buf_in_);
  fftw_free(buf_out_);
}

void FftPlan::run(void* plan, const std::vector<cplx>& in, std::vector<cplx>& out) {
  require(in.size() == total_, ErrorKind::configuration, "FFT input has wrong size");
  std::copy(in.begin(), in.end(), buf_in_);
  fftw_execute(static_cast<fftw_plan>(plan));
  out.assign(buf_out_, buf_out_ + total_);
}

void FftPlan::forward(const std::vector<cplx>& in, std::vector<cplx>& out) { run(fwd_, in, out); }
void FftPlan::backward(const std::vector<cplx>& in, std::vector<cplx>& out) { run(bwd_, in, out); }

}  // namespace loggas
