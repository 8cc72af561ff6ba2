#include <doctest.h>

#include <cmath>

#include "loggas/energy.hpp"
#include "loggas/errors.hpp"
#include "loggas/partition.hpp"

using namespace loggas;

namespace {
BaseMeasure atoms2(int m) {
  std::vector<Point> p;
  std::vector<double> w;
  const Point all[4] = {{0.1, 0.2, 0}, {0.6, 0.7, 0}, {0.3, 0.85, 0}, {0.9, 0.4, 0}};
  for (int i = 0; i < m; ++i) {
    p.push_back(all[i]);
    w.push_back(1.0 / m);
  }
  return BaseMeasure::atomic(Domain::torus(2), p, w);
}
}  // namespace

TEST_CASE("trivial partition functions are exactly one") {
  const Kernel k = Kernel::torus_log(2, 16);
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(2));
  CHECK(estimate_partition(k, u, 1, 3.0, 0.0, 2000, 1).mean == 1.0);
  CHECK(estimate_partition(k, u, 10, 0.0, 0.0, 2000, 1).mean == 1.0);
}

TEST_CASE("two equal atoms, two particles: Monte Carlo vs the 4-configuration enumeration") {
  const Kernel k = Kernel::torus_log(2, 16);
  const BaseMeasure m = atoms2(2);
  const double beta = 1.5;
  const double exact = exact_partition(k, 0.0, m, 2, beta);
  // hand enumeration over the table W(a,b)
  const Point a = m.atoms()[0], b = m.atoms()[1];
  const double waa = k.eval(a, a), wbb = k.eval(b, b), wab = k.eval(a, b);
  const double pa = 0.5 * (waa + wab), pb = 0.5 * (wab + wbb), self = 0.25 * (waa + wbb + 2 * wab);
  auto en = [&](double w12, double p1, double p2) { return w12 / 2.0 - (p1 + p2) + self; };
  const double hand = 0.25 * (std::exp(-beta * en(waa, pa, pa)) + std::exp(-beta * en(wbb, pb, pb)) +
                              2.0 * std::exp(-beta * en(wab, pa, pb)));
  CHECK(exact == doctest::Approx(hand).epsilon(1e-12));
  const auto est = estimate_partition(k, m, 2, beta, 0.0, 20000, 5);
  CHECK(std::abs(est.mean - exact) <= est.ci_halfwidth);
}

TEST_CASE("enumeration: direct-sum route agrees with the mode-sum energy route") {
  const Kernel k = Kernel::torus_log(2, 12);
  for (int m = 2; m <= 4; ++m) {
    const BaseMeasure mu = atoms2(m);
    EnergyEvaluator ev(k, 0.0, mu);
    for (std::size_t n : {2u, 3u, 4u}) {
      double z = 0.0;
      enumerate_atomic(mu, n, [&](const Configuration& c, double p, const std::vector<std::size_t>&) {
        z += p * std::exp(-0.7 * ev.total(c));
      });
      CHECK(z == doctest::Approx(exact_partition(k, 0.0, mu, n, 0.7)).epsilon(1e-11));
    }
  }
}

TEST_CASE("property: Monte Carlo agrees with enumeration for m <= 4 atoms, N <= 6") {
  const Kernel k = Kernel::torus_log(2, 8);
  std::uint64_t seed = 100;
  for (int m : {2, 3, 4})
    for (std::size_t n : {2u, 4u, 6u}) {
      if (std::pow(m, n) > 4096) continue;
      const BaseMeasure mu = atoms2(m);
      const double exact = exact_partition(k, 0.0, mu, n, 1.0);
      const auto est = estimate_partition(k, mu, n, 1.0, 0.0, 20000, ++seed);
      CHECK(std::abs(est.mean - exact) <= 4.0 * est.std_error);
    }
}

TEST_CASE("seed determinism and worker-count independence") {
  const Kernel k = Kernel::torus_log(2, 16);
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(2));
  PartitionOptions one, three;
  one.block = three.block = 500;
  three.workers = 3;
  const auto a = estimate_partition(k, u, 16, 1.0, 0.0, 3000, 42, one);
  const auto b = estimate_partition(k, u, 16, 1.0, 0.0, 3000, 42, one);
  const auto c = estimate_partition(k, u, 16, 1.0, 0.0, 3000, 42, three);
  CHECK(a.mean == b.mean);
  CHECK(a.ci_halfwidth == b.ci_halfwidth);
  CHECK(a.mean == c.mean);
  CHECK(a.ess == c.ess);
  const auto d = estimate_partition(k, u, 16, 1.0, 0.0, 3000, 43, one);
  CHECK(a.mean != d.mean);
}

TEST_CASE("sweep: Jensen floor, log-convexity in beta, trend diagnostics") {
  const Kernel k = Kernel::torus_log(2, 16);
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(2));
  const std::vector<double> betas{0.5, 1.0, 2.0};
  const auto rows = sweep_partition(k, u, {2, 4, 8, 16}, betas, 0.0, 4000, 9);
  REQUIRE(rows.size() == 12);
  for (std::size_t i = 0; i < 4; ++i) {
    std::vector<PartitionEstimate> same(rows.begin() + 3 * i, rows.begin() + 3 * i + 3);
    CHECK(log_partition_convex(same));
    CHECK(same[0].log_mean <= same[1].log_mean);
    CHECK(same[1].log_mean <= same[2].log_mean);
  }
  std::vector<PartitionEstimate> b1;
  for (const auto& r : rows)
    if (r.beta == 1.0) b1.push_back(r);
  const auto v = trend_flatness(b1, std::exp(-1.0 * mean_energy(k, 0.0, u, 2)), 50.0);
  CHECK(v.above_one);
  CHECK(v.jensen);
  CHECK(v.running_max.size() == 4);
  CHECK(v.min_ess > 50.0);
  CHECK_THROWS_AS(sweep_partition(k, u, {4, 2}, betas, 0.0, 4000, 9), Error);
}

TEST_CASE("estimation guards") {
  const Kernel k = Kernel::torus_log(2, 16);
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(2));
  CHECK_THROWS_AS(estimate_partition(k, u, 4, 1.0, 0.0, 999, 1), Error);
  // free-log with two atoms and no regularization: coincident draws are common
  const Kernel f = Kernel::free_log(2);
  const BaseMeasure two = BaseMeasure::atomic(Domain::free_space(2), {Point{0, 0, 0}, Point{0.5, 0, 0}}, {0.5, 0.5});
  try {
    estimate_partition(f, two, 3, 1.0, 0.0, 2000, 1);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::estimation);
  }
  CHECK_THROWS_AS(exact_partition(k, 0.0, atoms2(4), 11, 1.0), Error);
}
