#include <doctest.h>

#include <algorithm>
#include <boost/math/quadrature/gauss.hpp>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "loggas/errors.hpp"
#include "loggas/moments.hpp"

using namespace loggas;

namespace {

// Independent enumeration: every ordered p-tuple of pair slots, deduplicated as a multiset.
std::set<std::vector<int>> brute_multiindices(int n, int p) {
  const int s = n * (n - 1);
  std::set<std::vector<int>> out;
  std::vector<int> t(static_cast<std::size_t>(p), 0);
  while (true) {
    std::vector<int> e(static_cast<std::size_t>(s), 0);
    for (int v : t) ++e[static_cast<std::size_t>(v)];
    out.insert(e);
    int k = 0;
    while (k < p && ++t[static_cast<std::size_t>(k)] == s) t[static_cast<std::size_t>(k++)] = 0;
    if (k == p) break;
  }
  return out;
}

// Multiplicities straight from the ordered-pair list (i, j), i != j, in row-major order.
std::vector<int> brute_multiplicity(int n, const std::vector<int>& e) {
  std::vector<int> m(static_cast<std::size_t>(n), 0);
  std::size_t s = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      m[static_cast<std::size_t>(i)] += e[s];
      m[static_cast<std::size_t>(j)] += e[s];
      ++s;
    }
  return m;
}

// Centered table with dyadic weights and small integer raw entries: all arithmetic is exact.
AtomTable dyadic_table(std::mt19937_64& rng, std::size_t m) {
  std::vector<double> w;
  if (m == 2) w = {0.5, 0.5};
  else if (m == 3) w = {0.5, 0.25, 0.25};
  else w = {0.25, 0.25, 0.25, 0.25};
  std::uniform_int_distribution<int> entry(-4, 4);
  std::vector<double> raw(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) raw[a * m + b] = raw[b * m + a] = entry(rng);
  return center_table(w, raw);
}

BaseMeasure atoms_2d(std::size_t m) {
  const Point all[4] = {{0.1, 0.2, 0}, {0.6, 0.7, 0}, {0.3, 0.85, 0}, {0.9, 0.4, 0}};
  std::vector<Point> p(all, all + m);
  return BaseMeasure::atomic(Domain::torus(2), p, std::vector<double>(m, 1.0 / static_cast<double>(m)));
}

}  // namespace

TEST_CASE("multiindex counts for small systems") {
  auto count = [](int n, int p) {
    std::size_t c = 0;
    enumerate_multiindices(n, p, [&](const MultiIndex&) { ++c; });
    return c;
  };
  CHECK(count(2, 1) == 2);
  CHECK(count(2, 2) == 3);
  CHECK(count(3, 2) == 21);
  CHECK(count_multiindices(3, 2) == 21);
}

TEST_CASE("enumeration matches an independent brute-force multiset enumeration") {
  for (auto [n, p] : {std::pair{2, 1}, {2, 2}, {2, 4}, {3, 2}, {3, 3}, {4, 2}, {4, 3}}) {
    const auto expected = brute_multiindices(n, p);
    std::set<std::vector<int>> seen;
    std::size_t visits = 0;
    enumerate_multiindices(n, p, [&](const MultiIndex& idx) {
      ++visits;
      int sum = 0;
      for (int e : idx.entries) sum += e;
      CHECK(sum == p);
      seen.insert(idx.entries);
    });
    CHECK(visits == expected.size());
    CHECK(seen == expected);
    CHECK(count_multiindices(n, p) == expected.size());
  }
}

TEST_CASE("enumeration budget is a hard error") {
  CHECK_THROWS_AS(enumerate_multiindices(7, 2, [](const MultiIndex&) {}), Error);
  CHECK_THROWS_AS(enumerate_multiindices(3, 5, [](const MultiIndex&) {}), Error);
  try {
    enumerate_multiindices(7, 1, [](const MultiIndex&) {});
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::configuration);
  }
}

TEST_CASE("classification of hand-built multiindices") {
  MultiIndex a{2, 1, std::vector<int>(2, 0)};
  a.entries[MultiIndex::slot(2, 0, 1)] = 1;
  auto pa = classify(a);
  CHECK(pa.m == std::vector<int>{1, 1});
  CHECK_FALSE(pa.restricted);

  MultiIndex b{2, 2, std::vector<int>(2, 0)};
  b.entries[MultiIndex::slot(2, 0, 1)] = 2;
  auto pb = classify(b);
  CHECK(pb.m == std::vector<int>{2, 2});
  CHECK(pb.restricted);
  CHECK(pb.act == 2);

  MultiIndex c{4, 2, std::vector<int>(12, 0)};
  c.entries[MultiIndex::slot(4, 0, 1)] = 1;
  c.entries[MultiIndex::slot(4, 2, 3)] = 1;
  auto pc = classify(c);
  CHECK(pc.m == std::vector<int>{1, 1, 1, 1});
  CHECK_FALSE(pc.restricted);
}

TEST_CASE("slot indexing round-trips and matches row-major order") {
  for (int n = 2; n <= 6; ++n) {
    std::size_t s = 0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        if (i == j) continue;
        CHECK(MultiIndex::slot(n, i, j) == s);
        CHECK(MultiIndex::pair(n, s) == std::pair{i, j});
        ++s;
      }
  }
}

TEST_CASE("profile invariants and the multiplicity bound over every enumerated index") {
  for (auto [n, p] : {std::pair{2, 1}, {2, 2}, {3, 2}, {3, 3}, {4, 2}, {4, 3}, {5, 2}, {3, 4}}) {
    enumerate_multiindices(n, p, [&, n = n, p = p](const MultiIndex& idx) {
      const auto prof = classify(idx);
      CHECK(prof.m == brute_multiplicity(n, idx.entries));
      int sum = 0;
      for (int v : prof.m) sum += v;
      CHECK(sum == 2 * p);
      CHECK(prof.act <= std::min(2 * p, n));
      if (prof.restricted) {
        CHECK(std::none_of(prof.m.begin(), prof.m.end(), [](int v) { return v == 1; }));
        CHECK(multiplicity_bound_holds(prof, p));
      }
    });
  }
}

TEST_CASE("restricted counts: bound, single-particle zero, partition over ell") {
  const auto c22 = count_restricted(2, 2, 2);
  CHECK(c22 >= 1);
  CHECK(static_cast<double>(c22) <= restricted_count_bound(2, 2, 2));
  CHECK(restricted_count_bound(2, 2, 2) == 4.0);
  for (auto [n, p] : {std::pair{2, 1}, {2, 2}, {3, 2}, {3, 3}, {4, 2}}) {
    CHECK(count_restricted(n, p, 1) == 0);
    // independent tally from the brute-force enumeration
    std::map<int, std::uint64_t> by_ell;
    std::uint64_t restricted = 0;
    for (const auto& e : brute_multiindices(n, p)) {
      const auto m = brute_multiplicity(n, e);
      if (std::any_of(m.begin(), m.end(), [](int v) { return v == 1; })) continue;
      ++restricted;
      ++by_ell[static_cast<int>(std::count_if(m.begin(), m.end(), [](int v) { return v != 0; }))];
    }
    std::uint64_t total = 0;
    for (int ell = 0; ell <= n; ++ell) {
      const auto c = count_restricted(n, p, ell);
      CHECK(c == by_ell[ell]);
      total += c;
    }
    CHECK(total == restricted);
  }
}

TEST_CASE("pair decomposition partitions the support for every index") {
  for (auto [n, p] : {std::pair{3, 2}, {3, 3}, {4, 2}, {4, 3}, {3, 4}}) {
    enumerate_multiindices(n, p, [&, p = p](const MultiIndex& idx) {
      const auto prof = classify(idx);
      const auto dec = decompose(idx, prof);
      CHECK(dec.partition);
      CHECK(dec.gamma_sum);
      CHECK(static_cast<int>(dec.c.size()) == prof.act - 1);
      int g = 0;
      for (int v : dec.gamma) g += v;
      CHECK(g == p);
    });
  }
}

TEST_CASE("p = 1 signed moment of a centered table is exactly zero") {
  std::mt19937_64 rng(7);
  for (std::size_t m = 2; m <= 4; ++m) {
    const auto t = dyadic_table(rng, m);
    CHECK(t.marginal_defect() == 0.0);
    for (int n = 2; n <= 5; ++n) CHECK(moment_oracle(t, n, 1).raw == 0.0);
  }
}

TEST_CASE("two antisymmetric atoms: hand enumeration") {
  const double g = 0.75;
  AtomTable t{{0.5, 0.5}, {g, -g, -g, g}};
  CHECK(t.marginal_defect() == 0.0);
  // n = 2: T = G(X1, X2) = +-g
  CHECK(moment_oracle(t, 2, 2).absolute == doctest::Approx(g * g).epsilon(1e-15));
  // n = 3: T = (g/3)((sum s)^2 - 3); sum s = +-3 in 2 of 8 configurations, +-1 in 6
  const double by_hand = (2.0 / 8.0) * (2 * g) * (2 * g) + (6.0 / 8.0) * (2 * g / 3) * (2 * g / 3);
  const auto e3 = moment_oracle(t, 3, 2);
  CHECK(e3.absolute == doctest::Approx(by_hand).epsilon(1e-14));
  CHECK(e3.raw == expansion_moment(t, 3, 2, false));
  CHECK(e3.raw == expansion_moment(t, 3, 2, true));
}

TEST_CASE("non-restricted terms vanish exactly for centered dyadic tables") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 6; ++trial) {
    const auto t = dyadic_table(rng, 2 + static_cast<std::size_t>(trial % 3));
    for (int n = 2; n <= 3; ++n)
      for (int p = 1; p <= 3; ++p) {
        enumerate_multiindices(n, p, [&](const MultiIndex& idx) {
          const auto prof = classify(idx);
          CHECK(decompose(idx, prof).partition);
          if (!prof.restricted) CHECK(multiindex_term(t, idx) == 0.0);
        });
        const double full = expansion_moment(t, n, p, false);
        CHECK(full == expansion_moment(t, n, p, true));
        CHECK(full == moment_oracle(t, n, p).raw);
      }
  }
}

TEST_CASE("Monte Carlo agrees with exact enumeration within 4 standard errors") {
  std::mt19937_64 rng(99);
  const auto t = dyadic_table(rng, 3);
  for (auto [n, p] : {std::pair{3, 2}, {4, 3}, {5, 4}}) {
    const auto exact = moment_oracle(t, n, p);
    const auto mc = moment_monte_carlo(t, n, p, 100000, 5, 2);
    CHECK(std::abs(mc.mean - exact.absolute) <= 4.0 * mc.std_error);
    CHECK(std::abs(mc.raw_mean - exact.raw) <= 4.0 * mc.raw_std_error);
  }
}

TEST_CASE("Monte Carlo moments do not depend on the worker count") {
  std::mt19937_64 rng(3);
  const auto t = dyadic_table(rng, 4);
  const auto a = moment_monte_carlo(t, 5, 2, 5000, 11, 1);
  const auto b = moment_monte_carlo(t, 5, 2, 5000, 11, 3);
  CHECK(a.mean == b.mean);
  CHECK(a.std_error == b.std_error);
}

TEST_CASE("centered gap kernel: symmetry and marginal centering") {
  SUBCASE("uniform measure, node quadrature exact for the truncated series") {
    const Kernel k = Kernel::torus_log(1, 16);
    const BaseMeasure u = BaseMeasure::uniform(Domain::torus(1));
    const CenteredKernel g(k, 0.01, u);
    const int M = 256;
    for (double x : {0.0, 0.137, 0.5, 0.91}) {
      double s = 0.0;
      for (int j = 0; j < M; ++j) s += g({x, 0, 0}, {(j + 0.5) / M, 0, 0});
      CHECK(std::abs(s / M) <= 1e-6);
      CHECK(g({x, 0, 0}, {0.3, 0, 0}) == doctest::Approx(g({0.3, 0, 0}, {x, 0, 0})).epsilon(1e-13));
    }
  }
  SUBCASE("grid density, Gauss-Legendre per cell") {
    const Kernel k = Kernel::torus_log(1, 8);
    const BaseMeasure rho = BaseMeasure::single_mode(Domain::torus(1), 16, 0.6);
    const CenteredKernel g(k, 0.02, rho);
    const double h = 1.0 / 16;
    for (double x : {0.05, 0.4, 0.77}) {
      double s = 0.0;
      for (int c = 0; c < 16; ++c) {
        const double dens = rho.density()[static_cast<std::size_t>(c)];
        s += dens * boost::math::quadrature::gauss<double, 30>::integrate(
                        [&](double y) { return g({x, 0, 0}, {y, 0, 0}); }, c * h, (c + 1) * h);
      }
      CHECK(std::abs(s) <= 1e-6);
    }
  }
  SUBCASE("atomic measure, exact weighted sums") {
    const Kernel k = Kernel::torus_log(2, 12);
    const BaseMeasure rho = atoms_2d(3);
    const CenteredKernel g(k, 0.05, rho);
    const auto t = tabulate(g, rho);
    CHECK(t.marginal_defect() <= 1e-12);
    for (double x : {0.21, 0.64}) {
      double s = 0.0;
      for (std::size_t b = 0; b < 3; ++b) s += rho.weights()[b] * g({x, 1.0 - x, 0}, rho.atoms()[b]);
      CHECK(std::abs(s) <= 1e-12);
    }
  }
}

TEST_CASE("spectral pair sum of the gap kernel matches direct pair sums") {
  const Kernel k = Kernel::torus_log(2, 10);
  const BaseMeasure rho = BaseMeasure::two_bump(Domain::torus(2), 16);
  const CenteredKernel g(k, 0.03, rho);
  Stream stream(17);
  const Configuration cfg = rho.sample(7, stream);
  const double fast = g.pair_sum(cfg);
  const double direct = g.PairKernel::pair_sum(cfg);
  CHECK(fast == doctest::Approx(direct).epsilon(1e-10));
}

TEST_CASE("gap kernel rejects free space and eps = 0") {
  const Kernel f = Kernel::free_log(2, 1.0);
  CHECK_THROWS_AS(CenteredKernel(f, 0.1, BaseMeasure::uniform(Domain::free_space(2, 1.0))), Error);
  const Kernel k = Kernel::torus_log(1, 8);
  CHECK_THROWS_AS(CenteredKernel(k, 0.0, BaseMeasure::uniform(Domain::torus(1))), Error);
}

TEST_CASE("rank-one centered kernel: closed-form second moment vs Monte Carlo") {
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(1));
  const RankOneKernel g([](const Point& x) { return std::cos(2 * M_PI * x[0]) + 0.5 * std::sin(6 * M_PI * x[0]); });
  // E g^2 by quadrature
  const double eg2 = boost::math::quadrature::gauss<double, 30>::integrate(
      [](double x) {
        const double v = std::cos(2 * M_PI * x) + 0.5 * std::sin(6 * M_PI * x);
        return v * v;
      },
      0.0, 1.0);
  CHECK(eg2 == doctest::Approx(0.625).epsilon(1e-12));
  for (int n : {2, 5, 12}) {
    const double closed = 2.0 * (1.0 - 1.0 / n) * eg2 * eg2;
    const auto mc = moment_monte_carlo(g, u, n, 2, 60000, 21, 2);
    CHECK(std::abs(mc.mean - closed) <= 4.0 * mc.std_error);
    const auto p1 = moment_monte_carlo(g, u, n, 1, 60000, 22, 2);
    CHECK(std::abs(p1.raw_mean) <= 4.0 * p1.raw_std_error);
  }
}

TEST_CASE("correlation scaling at p = 2: flat exponent, constant drift from the exact law") {
  const Kernel k = Kernel::torus_log(1, 16);
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(1));
  const CenteredKernel g(k, 0.05, u);
  const auto rep = verify_corineq_scaling(g, u, 2, 0.5, {4, 8, 16, 32}, 40000, 8, 2);
  CHECK(rep.rhs_exponent == 0);
  CHECK(rep.lp_term > 0.0);
  CHECK(rep.exponent_ok);
  // degenerate U-statistic: E T^2 = 2 (1 - 1/N) E G^2, so C_p fitted at N = 4 drifts by (31/32)/(3/4)
  CHECK(rep.constant_drift == doctest::Approx((31.0 / 32.0) / 0.75).epsilon(0.04));
  // every N sits on the exact curve
  const double eg2 = rep.lhs.front().mean / (2.0 * 0.75);
  for (std::size_t i = 0; i < rep.n_values.size(); ++i) {
    const double exact = 2.0 * (1.0 - 1.0 / rep.n_values[i]) * eg2;
    CHECK(rep.lhs[i].mean == doctest::Approx(exact).epsilon(0.05));
  }
}

TEST_CASE("correlation scaling input validation") {
  const BaseMeasure u = BaseMeasure::uniform(Domain::torus(1));
  const RankOneKernel g([](const Point& x) { return std::cos(2 * M_PI * x[0]); });
  CHECK_THROWS_AS(verify_corineq_scaling(g, u, 5, 0.5, {8}, 100, 1), Error);
  CHECK_THROWS_AS(verify_corineq_scaling(g, u, 2, 1.0, {8}, 100, 1), Error);
  CHECK_THROWS_AS(verify_corineq_scaling(g, u, 3, 0.5, {2}, 100, 1), Error);
}
