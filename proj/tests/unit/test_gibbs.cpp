#include <doctest.h>

#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "loggas/energy.hpp"
#include "loggas/errors.hpp"
#include "loggas/gibbs.hpp"
#include "loggas/partition.hpp"
#include "loggas/stats.hpp"

using namespace loggas;

namespace {
constexpr double pi = std::numbers::pi;

// Trigonometric interpolant of cell-center samples, evaluated at x (d = 1).
double trig_interpolate(const std::vector<double>& v, double x) {
  const int M = static_cast<int>(v.size());
  double s = 0.0;
  for (int k = -M / 2 + 1; k < M / 2; ++k) {
    double re = 0.0, im = 0.0;
    for (int j = 0; j < M; ++j) {
      const double ph = -2 * pi * k * (j + 0.5) / M;
      re += v[static_cast<std::size_t>(j)] * std::cos(ph);
      im += v[static_cast<std::size_t>(j)] * std::sin(ph);
    }
    s += (re * std::cos(2 * pi * k * x) - im * std::sin(2 * pi * k * x)) / M;
  }
  return s;
}

std::vector<std::size_t> histogram(const std::vector<double>& xs, double lo, double hi, int bins) {
  std::vector<std::size_t> h(static_cast<std::size_t>(bins), 0);
  for (double x : xs) {
    int b = static_cast<int>(std::floor((x - lo) / (hi - lo) * bins));
    h[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
  }
  return h;
}

std::vector<double> coordinates(const GibbsRun& run) {
  std::vector<double> xs;
  for (const auto& s : run.states) xs.insert(xs.end(), s.coords.begin(), s.coords.end());
  return xs;
}
}  // namespace

TEST_CASE("minimizer with V = 0 relaxes to the uniform density") {
  MinimizerOptions o;
  o.initial = [](const Point& x) { return 1.0 + 0.3 * std::cos(2 * pi * x[0]); };
  const auto m = solve_minimizer(Kernel::torus_log(1), Potential::zero(), 64, o);
  CHECK(m.residual < 1e-10);
  for (double v : m.density) CHECK(v == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(m.residual_history.size() == static_cast<std::size_t>(m.iterations) + 1);
  CHECK(m.energy == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("decoupled minimizer is exp(-V) after one undamped iteration") {
  MinimizerOptions o;
  o.damping = 1.0;
  const Potential v = Potential::cosine(0.8);
  const auto m = solve_minimizer(Kernel::zero(Domain::torus(1)), v, 32, o);
  CHECK(m.iterations == 1);
  double z = 0.0;
  for (int j = 0; j < 32; ++j) z += std::exp(-0.8 * std::cos(2 * pi * (j + 0.5) / 32)) / 32;
  for (int j = 0; j < 32; ++j)
    CHECK(m.density[static_cast<std::size_t>(j)] ==
          doctest::Approx(std::exp(-0.8 * std::cos(2 * pi * (j + 0.5) / 32)) / z).epsilon(1e-13));
  CHECK(m.z_mu == doctest::Approx(z).epsilon(1e-13));
}

TEST_CASE("minimizer is self-consistent under grid refinement") {
  MinimizerOptions o;
  o.tol = 1e-12;
  const Kernel k = Kernel::torus_log(1);
  const Potential v = Potential::cosine(0.5);
  const auto coarse = solve_minimizer(k, v, 64, o);
  const auto fine = solve_minimizer(k, v, 128, o);
  CHECK(coarse.residual < 1e-8);
  // independent defect check: W * mu by direct mode sums at the nodes
  const auto& modes = k.half_modes();
  double z = 0.0;
  std::vector<double> t(64);
  for (int j = 0; j < 64; ++j) {
    const double x = (j + 0.5) / 64;
    double conv = 0.0;
    for (const auto& md : modes) {
      double re = 0.0, im = 0.0;
      for (int i = 0; i < 64; ++i) {
        re += coarse.density[static_cast<std::size_t>(i)] * std::cos(2 * pi * md.k[0] * (i + 0.5) / 64) / 64;
        im += coarse.density[static_cast<std::size_t>(i)] * std::sin(2 * pi * md.k[0] * (i + 0.5) / 64) / 64;
      }
      if (md.k[0] >= 32) continue;
      conv += 2 * md.coeff * (re * std::cos(2 * pi * md.k[0] * x) + im * std::sin(2 * pi * md.k[0] * x));
    }
    t[static_cast<std::size_t>(j)] = std::exp(-conv - 0.5 * std::cos(2 * pi * x));
    z += t[static_cast<std::size_t>(j)] / 64;
  }
  double defect = 0.0;
  for (int j = 0; j < 64; ++j)
    defect = std::max(defect, std::abs(coarse.density[static_cast<std::size_t>(j)] - t[static_cast<std::size_t>(j)] / z));
  CHECK(defect < 1e-8);
  for (int j = 0; j < 64; ++j)
    CHECK(std::abs(coarse.density[static_cast<std::size_t>(j)] - trig_interpolate(fine.density, (j + 0.5) / 64)) <
          1e-4);
  // the repulsive interaction flattens exp(-V)
  double spread_mu = 0.0, spread_v = 0.0;
  for (int j = 0; j < 64; ++j) {
    spread_mu = std::max(spread_mu, coarse.density[static_cast<std::size_t>(j)]);
    spread_v = std::max(spread_v, std::exp(-0.5 * std::cos(2 * pi * (j + 0.5) / 64)));
  }
  CHECK(spread_mu < spread_v / z);
}

TEST_CASE("minimizer reports its residual history on failure") {
  MinimizerOptions o;
  o.max_iter = 2;
  o.damping = 0.1;
  try {
    solve_minimizer(Kernel::torus_log(1), Potential::cosine(1.0), 32, o);
    FAIL("expected a convergence failure");
  } catch (const ConvergenceFailure& e) {
    CHECK(e.kind() == ErrorKind::convergence);
    CHECK(e.residuals().size() == 3);
    CHECK(e.residuals()[2] < e.residuals()[0]);
  }
  CHECK_THROWS_AS(solve_minimizer(Kernel::free_log(1), Potential::zero(), 32), Error);
  CHECK_THROWS_AS(solve_minimizer(Kernel::torus_log(3, 4), Potential::zero(), 8), Error);
  o.damping = 0.0;
  CHECK_THROWS_AS(solve_minimizer(Kernel::torus_log(1), Potential::zero(), 32, o), Error);
}

TEST_CASE("mean of W^2 matches midpoint quadrature") {
  const Kernel k = Kernel::torus_log(1, 32);
  double quad = 0.0;
  const int M = 4096;
  for (int j = 0; j < M; ++j) {
    const double w = k.eval(Point{(j + 0.5) / M, 0, 0}, Point{0, 0, 0});
    quad += w * w / M;
  }
  const double uni = interaction_square_mean(k, 0.0, BaseMeasure::uniform(Domain::torus(1)));
  CHECK(uni == doctest::Approx(quad).epsilon(1e-12));
  const double flat = interaction_square_mean(k, 0.0, BaseMeasure::grid(Domain::torus(1), 128,
                                                                         std::vector<double>(128, 1.0)));
  CHECK(flat == doctest::Approx(uni).epsilon(1e-12));
  // single atom pair
  const auto at = BaseMeasure::atomic(Domain::torus(1), {Point{0.1, 0, 0}, Point{0.6, 0, 0}}, {0.5, 0.5});
  const double w0 = k.eval(Point{0.1, 0, 0}, Point{0.1, 0, 0}), w1 = k.eval(Point{0.1, 0, 0}, Point{0.6, 0, 0});
  CHECK(interaction_square_mean(k, 0.0, at) == doctest::Approx(0.5 * w0 * w0 + 0.5 * w1 * w1));
  CHECK(interaction_square_mean(Kernel::zero(Domain::torus(1)), 0.0, at) == 0.0);
}

TEST_CASE("MALA with W = 0, V = 0 samples the uniform law") {
  const Domain dom = Domain::torus(1);
  GibbsTarget t{Kernel::zero(dom), 0.0, BaseMeasure::uniform(dom), Potential::zero(), 1.0};
  MalaOptions o;
  o.burn_in = 500;
  o.samples = 200000;
  o.record_every = 200;
  Stream s(11);
  const auto run = sample_gibbs(t, 4, o, s);
  CHECK(run.acceptance == 1.0);
  CHECK(run.step_capped);
  CHECK(run.flagged);
  for (double e : run.energies) REQUIRE(e == 0.0);
  const auto xs = coordinates(run);
  REQUIRE(xs.size() == 4000);
  const auto h = histogram(xs, 0.0, 1.0, 10);
  const std::vector<double> p(10, 0.1);
  CHECK(stats::chi_square_gof(h, p).p_value > 1e-3);
}

TEST_CASE("MALA marginal in a free-space quadratic well matches quadrature") {
  const Domain dom = Domain::free_space(1, 1.0);
  const double kappa = 4.0;
  GibbsTarget t{Kernel::zero(dom), 0.0, BaseMeasure::uniform(dom), Potential::quadratic(kappa), 1.0};
  MalaOptions o;
  o.burn_in = 2000;
  o.samples = 400000;
  o.record_every = 200;
  Stream s(12);
  const auto run = sample_gibbs(t, 3, o, s);
  const auto xs = coordinates(run);
  for (double x : xs) REQUIRE(std::abs(x) <= 1.0);
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto f = [&](double x) { return std::exp(-0.5 * kappa * x * x); };
  const double z = GK::integrate(f, -1.0, 1.0);
  auto cdf = [&](double x) { return x <= -1.0 ? 0.0 : GK::integrate(f, -1.0, std::min(x, 1.0)) / z; };
  const double dks = stats::ks_distance(xs, cdf);
  CHECK(stats::ks_p_value(dks, static_cast<double>(xs.size())) > 1e-3);
}

TEST_CASE("MALA on a smoothed two-bump reference matches atomic enumeration at N = 2") {
  const Domain dom = Domain::torus(1);
  const Kernel k = Kernel::torus_log(1, 16);
  const int M = 256;
  const BaseMeasure ref = BaseMeasure::two_bump(dom, M);
  std::vector<Point> atoms;
  std::vector<double> w;
  for (int j = 0; j < M; ++j) {
    atoms.push_back(Point{(j + 0.5) / M, 0, 0});
    w.push_back(ref.density()[static_cast<std::size_t>(j)] / M);
  }
  const BaseMeasure atomic = BaseMeasure::atomic(dom, atoms, w);
  EnergyEvaluator ev(k, 0.0, ref);
  double zsum = 0.0, esum = 0.0;
  enumerate_atomic(atomic, 2, [&](const Configuration& c, double p, const std::vector<std::size_t>&) {
    const double e = ev.total(c);
    zsum += p * std::exp(-e);
    esum += p * e * std::exp(-e);
  });
  const double oracle = esum / zsum;

  GibbsTarget t{k, 0.0, ref, Potential::zero(), 1.0};
  MalaOptions o;
  o.burn_in = 5000;
  o.samples = 400000;
  Stream s(13);
  const auto run = sample_gibbs(t, 2, o, s);
  CHECK(run.acceptance > 0.3);
  CHECK(std::abs(run.mean_energy - oracle) < 4 * run.energy_std_error);
  CHECK(run.energy_std_error < 0.02);
}

TEST_CASE("MALA on a double well obeys detailed balance") {
  const Domain dom = Domain::torus(1);
  const double a = 1.0;
  GibbsTarget t{Kernel::zero(dom), 0.0, BaseMeasure::uniform(dom), Potential::cosine(a, {2, 0, 0}), 1.0};
  MalaOptions o;
  o.burn_in = 2000;
  o.samples = 1000000;
  o.record_every = 1;
  Stream s(14);
  const auto run = sample_gibbs(t, 1, o, s);
  const int bins = 8;
  std::vector<std::vector<double>> flux(bins, std::vector<double>(bins, 0.0));
  std::vector<double> thinned;
  int prev = -1;
  for (std::size_t i = 0; i < run.states.size(); ++i) {
    const double x = run.states[i].coords[0];
    const int b = std::min(bins - 1, static_cast<int>(x * bins));
    if (prev >= 0 && prev != b) flux[static_cast<std::size_t>(prev)][static_cast<std::size_t>(b)] += 1.0;
    prev = b;
    if (i % 100 == 0) thinned.push_back(x);
  }
  for (int i = 0; i < bins; ++i)
    for (int j = i + 1; j < bins; ++j) {
      const double fij = flux[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
      const double fji = flux[static_cast<std::size_t>(j)][static_cast<std::size_t>(i)];
      CHECK(std::abs(fij - fji) <= 4.0 * std::sqrt(fij + fji) + 1.0);
    }
  using GK = boost::math::quadrature::gauss_kronrod<double, 31>;
  auto f = [&](double x) { return std::exp(-a * std::cos(4 * pi * x)); };
  const double z = GK::integrate(f, 0.0, 1.0);
  std::vector<double> p(bins);
  for (int b = 0; b < bins; ++b) p[static_cast<std::size_t>(b)] = GK::integrate(f, double(b) / bins, double(b + 1) / bins) / z;
  const auto h = histogram(thinned, 0.0, 1.0, bins);
  CHECK(stats::chi_square_gof(h, p).p_value > 1e-3);
}

TEST_CASE("MALA raises a tuning error when acceptance collapses") {
  const Domain dom = Domain::torus(1);
  GibbsTarget t{Kernel::zero(dom), 0.0, BaseMeasure::uniform(dom), Potential::cosine(2000.0), 1.0};
  MalaOptions o;
  o.burn_in = 0;
  o.samples = 2000;
  Stream s(15);
  try {
    sample_gibbs(t, 4, o, s);
    FAIL("expected a tuning error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::tuning);
  }
}

TEST_CASE("MALA chains are reproducible from their stream") {
  const Domain dom = Domain::torus(1);
  GibbsTarget t{Kernel::torus_log(1), 0.0, BaseMeasure::uniform(dom), Potential::zero(), 1.0};
  MalaOptions o;
  o.burn_in = 500;
  o.samples = 2000;
  Stream a(21), b(21), c(22);
  const auto r1 = sample_gibbs(t, 8, o, a);
  const auto r2 = sample_gibbs(t, 8, o, b);
  const auto r3 = sample_gibbs(t, 8, o, c);
  CHECK(r1.energies == r2.energies);
  CHECK(r1.final_state.coords == r2.final_state.coords);
  CHECK(r1.energies != r3.energies);
  CHECK(r1.acceptance > 0.3);
  CHECK(r1.acceptance < 0.85);
}

TEST_CASE("W = 0 control gives exactly zero entropies for random N lists") {
  Stream gen(31);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<std::size_t> ns;
    const int len = 1 + static_cast<int>(gen.index(3));
    for (int i = 0; i < len; ++i) ns.push_back(2 + gen.index(30));
    EntropyOptions o;
    o.chain.burn_in = 100;
    o.chain.samples = 500;
    o.is_samples = 2000;
    o.minimizer_cells = 16;
    const auto tab = entropy_rates(Kernel::zero(Domain::torus(1 + static_cast<int>(gen.index(2)))), Potential::zero(),
                                   ns, gen.index(1000), o);
    for (const auto& r : tab.rows) {
      CHECK(r.log_z_is == 0.0);
      CHECK(r.log_z_ti == 0.0);
      CHECK(r.log_z == 0.0);
      CHECK(r.h_forward == 0.0);
      CHECK(r.h_backward == 0.0);
      CHECK(!std::signbit(r.h_forward));
      CHECK(r.agree);
    }
    CHECK(!tab.backward_fit.has_value());
  }
}

TEST_CASE("entropy rates for the d = 1 log gas are nonnegative and cross-validated") {
  EntropyOptions o;
  o.chain.burn_in = 2000;
  o.chain.samples = 40000;
  o.is_samples = 50000;
  o.workers = 2;
  const auto tab = entropy_rates(Kernel::torus_log(1), Potential::zero(), {4, 8}, 41, o);
  REQUIRE(tab.uniform_reference);
  for (const auto& r : tab.rows) {
    CHECK(r.reference_energy == 0.0);
    CHECK(r.log_z_is >= -3 * r.log_z_is_se);
    CHECK(r.has_ti);
    CHECK(r.agree);
    CHECK(r.nonnegative);
    CHECK(r.bound_holds);
    CHECK(r.h_backward == doctest::Approx(r.log_z));
    CHECK(r.min_acceptance > 0.2);
  }
  const auto again = entropy_rates(Kernel::torus_log(1), Potential::zero(), {4, 8}, 41, o);
  CHECK(again.rows[1].log_z_ti == tab.rows[1].log_z_ti);
  CHECK(again.rows[1].h_forward == tab.rows[1].h_forward);
}

TEST_CASE("entropy rates with a confining potential use the minimizer") {
  EntropyOptions o;
  o.chain.burn_in = 1000;
  o.chain.samples = 10000;
  o.is_samples = 20000;
  o.minimizer_cells = 32;
  o.ti_n_values = {4};
  const auto tab = entropy_rates(Kernel::torus_log(1), Potential::cosine(0.5), {4, 6}, 42, o);
  CHECK(!tab.uniform_reference);
  CHECK(tab.minimizer.residual < 1e-10);
  CHECK(tab.rows[0].has_ti);
  CHECK(!tab.rows[1].has_ti);
  for (const auto& r : tab.rows) {
    CHECK(r.reference_energy < 0.0);
    CHECK(std::isfinite(r.h_forward));
    CHECK(r.nonnegative);
  }
}
