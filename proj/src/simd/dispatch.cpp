#include <atomic>
#include <cstdlib>
#include <string>

#include "loggas/errors.hpp"
#include "loggas/simd/kernels.hpp"

namespace loggas::simd {

#ifndef LOGGAS_HAVE_AVX2
const Kernels* avx2_kernels() { return nullptr; }
#endif

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend initial_backend() {
  const Backend best = detected_backend();
  if (const char* env = std::getenv("LOGGAS_SIMD")) {
    const std::string v(env);
    if (v == "scalar") return Backend::scalar;
    if (v == "avx2" && best == Backend::avx2) return Backend::avx2;
  }
  return best;
}

std::atomic<Backend>& active() {
  static std::atomic<Backend> b{initial_backend()};
  return b;
}

}  // namespace

Backend detected_backend() {
  static const Backend b = (avx2_kernels() != nullptr && cpu_has_avx2()) ? Backend::avx2 : Backend::scalar;
  return b;
}

Backend active_backend() { return active().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
  if (b == Backend::avx2 && detected_backend() != Backend::avx2)
    raise(ErrorKind::unsupported, "avx2 kernels not available on this CPU/build");
  active().store(b, std::memory_order_relaxed);
}

const Kernels& kernels_for(Backend b) {
  if (b == Backend::avx2) {
    require(detected_backend() == Backend::avx2, ErrorKind::unsupported, "avx2 kernels not available");
    return *avx2_kernels();
  }
  return scalar_kernels();
}

const Kernels& kernels() { return kernels_for(active_backend()); }

std::string_view to_string(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

}  // namespace loggas::simd
