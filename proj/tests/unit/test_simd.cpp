#include <doctest.h>

#include <cmath>
#include <vector>

#include "loggas/energy.hpp"
#include "loggas/rng.hpp"
#include "loggas/simd/kernels.hpp"

using namespace loggas;

namespace {

struct Arrays {
  std::vector<double> w, ar, ai, br, bi, cr, ci;
  explicit Arrays(std::size_t n, Stream& s) {
    for (auto* v : {&w, &ar, &ai, &br, &bi, &cr, &ci}) {
      v->resize(n);
      for (double& x : *v) x = s.uniform(-1.0, 1.0);
    }
    for (double& x : w) x = std::abs(x);
  }
};

bool close(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

}  // namespace

TEST_CASE("avx2 kernels agree with the scalar reference on every length") {
  if (simd::detected_backend() != simd::Backend::avx2) {
    MESSAGE("avx2 not available; scalar only");
    return;
  }
  const auto& S = simd::kernels_for(simd::Backend::scalar);
  const auto& V = simd::kernels_for(simd::Backend::avx2);
  Stream s(3);
  for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 7u, 8u, 9u, 15u, 16u, 17u, 65u, 129u, 1000u}) {
    Arrays a(n, s);
    CHECK(close(S.weighted_norm2(a.w.data(), a.ar.data(), a.ai.data(), n),
                V.weighted_norm2(a.w.data(), a.ar.data(), a.ai.data(), n)));
    CHECK(close(S.weighted_real_dot(a.w.data(), a.ar.data(), a.ai.data(), a.br.data(), a.bi.data(), n),
                V.weighted_real_dot(a.w.data(), a.ar.data(), a.ai.data(), a.br.data(), a.bi.data(), n)));
    CHECK(close(S.weighted_imag_dot(a.w.data(), a.ar.data(), a.ai.data(), a.br.data(), a.bi.data(), n),
                V.weighted_imag_dot(a.w.data(), a.ar.data(), a.ai.data(), a.br.data(), a.bi.data(), n)));
    CHECK(close(S.move_delta(a.w.data(), a.ar.data(), a.ai.data(), 0.3, -0.7, a.br.data(), a.bi.data(), -0.2, 0.9,
                             a.cr.data(), a.ci.data(), n),
                V.move_delta(a.w.data(), a.ar.data(), a.ai.data(), 0.3, -0.7, a.br.data(), a.bi.data(), -0.2, 0.9,
                             a.cr.data(), a.ci.data(), n)));
    std::vector<double> y1r = a.br, y1i = a.bi, y2r = a.br, y2i = a.bi;
    S.caxpy(0.4, -1.3, a.ar.data(), a.ai.data(), y1r.data(), y1i.data(), n);
    V.caxpy(0.4, -1.3, a.ar.data(), a.ai.data(), y2r.data(), y2i.data(), n);
    for (std::size_t k = 0; k < n; ++k) {
      CHECK(close(y1r[k], y2r[k]));
      CHECK(close(y1i[k], y2i[k]));
    }
  }
}

TEST_CASE("move_delta equals the change of the weighted norm") {
  Stream s(4);
  for (auto backend : {simd::Backend::scalar, simd::detected_backend()}) {
    const auto& K = simd::kernels_for(backend);
    const std::size_t n = 37;
    Arrays a(n, s);
    const double ror = 0.6, roi = 0.8, rnr = -0.28, rni = 0.96;
    std::vector<double> tr = a.ar, ti = a.ai;
    const double before = K.weighted_norm2(a.w.data(), tr.data(), ti.data(), n);
    const double delta = K.move_delta(a.w.data(), tr.data(), ti.data(), ror, roi, a.br.data(), a.bi.data(), rnr, rni,
                                      a.cr.data(), a.ci.data(), n);
    K.caxpy(rnr, rni, a.cr.data(), a.ci.data(), tr.data(), ti.data(), n);
    K.caxpy(-ror, -roi, a.br.data(), a.bi.data(), tr.data(), ti.data(), n);
    const double after = K.weighted_norm2(a.w.data(), tr.data(), ti.data(), n);
    CHECK(delta == doctest::Approx(after - before).epsilon(1e-12));
  }
}

TEST_CASE("energies are backend independent") {
  const Kernel k = Kernel::torus_log(2, 32);
  const BaseMeasure m = BaseMeasure::single_mode(Domain::torus(2), 16, 0.4);
  Stream s(5);
  const Configuration cfg = m.sample(50, s);
  const simd::Backend original = simd::active_backend();
  simd::set_backend(simd::Backend::scalar);
  EnergyEvaluator ev(k, 0.0, m);
  const double a = ev.total(cfg);
  std::vector<double> ga;
  ev.gradient(cfg, ga);
  simd::set_backend(simd::detected_backend());
  const double b = ev.total(cfg);
  std::vector<double> gb;
  ev.gradient(cfg, gb);
  simd::set_backend(original);
  CHECK(a == doctest::Approx(b).epsilon(1e-12));
  for (std::size_t i = 0; i < ga.size(); ++i) CHECK(ga[i] == doctest::Approx(gb[i]).epsilon(1e-10).scale(1.0));
}

TEST_CASE("backend selection") {
  CHECK((simd::to_string(simd::Backend::scalar) == "scalar"));
  simd::set_backend(simd::Backend::scalar);
  CHECK(simd::active_backend() == simd::Backend::scalar);
  simd::set_backend(simd::detected_backend());
}
