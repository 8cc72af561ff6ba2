#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "loggas/cli.hpp"
#include "loggas/dynamics.hpp"
#include "loggas/energy.hpp"
#include "loggas/errors.hpp"
#include "loggas/gibbs.hpp"
#include "loggas/moments.hpp"
#include "loggas/parallel.hpp"
#include "loggas/partition.hpp"

namespace loggas::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : f_(std::fopen(path.c_str(), "w")) {
    require(f_ != nullptr, ErrorKind::configuration, "cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) std::fprintf(f_, "%s%s", i ? "," : "", header[i].c_str());
    std::fputc('\n', f_);
  }
  ~Csv() { std::fclose(f_); }
  Csv(const Csv&) = delete;
  Csv& operator=(const Csv&) = delete;

  Csv& operator<<(double v) {
    sep();
    std::fprintf(f_, "%.17g", v);
    return *this;
  }
  Csv& operator<<(std::int64_t v) {
    sep();
    std::fprintf(f_, "%lld", static_cast<long long>(v));
    return *this;
  }
  Csv& operator<<(std::size_t v) { return *this << static_cast<std::int64_t>(v); }
  Csv& operator<<(int v) { return *this << static_cast<std::int64_t>(v); }
  Csv& seed(std::uint64_t v) {
    sep();
    std::fprintf(f_, "%llu", static_cast<unsigned long long>(v));
    return *this;
  }
  void end() {
    std::fputc('\n', f_);
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) std::fputc(',', f_);
    first_ = false;
  }
  std::FILE* f_;
  bool first_ = true;
};

struct Outcome {
  std::vector<Check> checks;
  std::vector<std::string> files;
  json results = json::object();
  json series = json::array();
};

Check check(const std::string& name, bool ok, const std::string& detail) {
  return {name, ok ? Verdict::pass : Verdict::fail, detail};
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

json series(const std::string& name, const std::string& x, const std::string& y, const std::vector<double>& xs,
            const std::vector<double>& ys, const std::vector<double>& ci) {
  json pts = json::array();
  for (std::size_t i = 0; i < xs.size(); ++i) pts.push_back({xs[i], ys[i], ci.empty() ? 0.0 : ci[i]});
  return {{"name", name}, {"x", x}, {"y", y}, {"points", pts}};
}

std::vector<std::size_t> sizes(const IntList& v) {
  std::vector<std::size_t> out;
  for (auto x : v) {
    require(x >= 1, ErrorKind::configuration, "N values must be positive");
    out.push_back(static_cast<std::size_t>(x));
  }
  return out;
}

Outcome kernel_verify(const ExperimentConfig& c, const fs::path& out) {
  Outcome o;
  const Kernel k = c.make_kernel();
  const std::string what = c.text("check");
  const auto& eps = c.reals("epsilons");
  o.results["check"] = what;
  if (what == "exactness") {
    require(k.family() == Family::torus_log && k.dim() == 1, ErrorKind::configuration,
            "exactness compares the d = 1 torus series with its closed form");
    const int pts = static_cast<int>(c.integer("points"));
    Csv csv(out / "kernel_exactness.csv", {"x", "series", "closed_form", "error", "bound"});
    double worst = 0.0, worst_bound = 0.0;
    bool ok = true;
    for (int j = 0; j < pts; ++j) {
      const double x = (j + 0.5) / pts;
      const double s = k.eval(Point{x, 0, 0}, Point{0, 0, 0});
      const double exact = -std::log(2.0 * std::sin(std::numbers::pi * x)) / std::numbers::pi;
      const double err = std::abs(s - exact), bound = k.tail_bound_at(x);
      ok = ok && err <= bound;
      worst = std::max(worst, err);
      worst_bound = std::max(worst_bound, bound);
      csv << x << s << exact << err << bound;
      csv.end();
    }
    o.files.push_back("kernel_exactness.csv");
    o.results["max_error"] = worst;
    o.results["max_bound"] = worst_bound;
    o.checks.push_back(check("series_within_tail_bound", ok, "max error " + fmt(worst)));
    return o;
  }
  if (what == "diagonal") {
    const auto rep = verify_diagonal(k, eps);
    Csv csv(out / "kernel_diagonal.csv", {"eps", "diagonal", "ratio"});
    std::vector<double> ratios;
    for (std::size_t i = 0; i < eps.size(); ++i) {
      const double r = rep.diagonal_values[i] / (std::abs(std::log(eps[i])) + 1.0);
      ratios.push_back(r);
      csv << eps[i] << rep.diagonal_values[i] << r;
      csv.end();
    }
    o.files.push_back("kernel_diagonal.csv");
    const double spread = rep.fitted_exponents[1];
    o.results["c0"] = rep.fitted_exponents[0];
    o.results["max_min_ratio"] = spread;
    o.series.push_back(series("diagonal_ratio", "eps", "ratio", eps, ratios, {}));
    o.checks.push_back(check("diagonal_log_bounded", spread <= c.real("ratio_max"), "max/min ratio " + fmt(spread)));
    return o;
  }
  if (what == "besov") {
    const auto rep = verify_besov(k, c.make_measure(), static_cast<int>(c.integer("p")), eps,
                                  static_cast<int>(c.integer("quadrature")), static_cast<int>(c.integer("sup_grid")));
    Csv csv(out / "kernel_besov.csv", {"eps", "norm"});
    for (std::size_t i = 0; i < eps.size(); ++i) {
      csv << eps[i] << rep.besov_norms[i];
      csv.end();
    }
    o.files.push_back("kernel_besov.csv");
    const double kappa = rep.fitted_exponents[0];
    o.results["kappa"] = kappa;
    o.results["log_c"] = rep.fitted_exponents[1];
    o.series.push_back(series("besov", "eps", "norm", eps, rep.besov_norms, {}));
    o.checks.push_back(check("besov_exponent", kappa >= c.real("kappa_lo") && kappa <= c.real("kappa_hi"),
                             "kappa " + fmt(kappa)));
    return o;
  }
  if (what == "superharmonicity") {
    const auto rep = verify_superharmonicity(k, eps, static_cast<int>(c.integer("grid_resolution")));
    Csv csv(out / "kernel_superharmonicity.csv", {"eps", "minimum"});
    double lo = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < eps.size(); ++i) {
      csv << eps[i] << rep.superharm_minima[i];
      csv.end();
      lo = std::min(lo, rep.superharm_minima[i]);
    }
    o.files.push_back("kernel_superharmonicity.csv");
    o.results["minimum"] = lo;
    o.checks.push_back(check("gap_nonnegative", lo >= c.real("floor"), "grid minimum " + fmt(lo)));
    return o;
  }
  raise(ErrorKind::configuration, "unknown kernel check '" + what + "'");
}

Outcome zsweep(const ExperimentConfig& c, const fs::path& out) {
  Outcome o;
  const Kernel k = c.make_kernel();
  const BaseMeasure m = c.make_measure();
  const auto ns = sizes(c.integers("n_values"));
  const auto& betas = c.reals("betas");
  const double eps = c.real("eps");
  PartitionOptions po;
  po.workers = c.workers;
  po.block = static_cast<std::size_t>(c.integer("block"));
  po.bootstrap = static_cast<int>(c.integer("bootstrap"));
  const auto rows = sweep_partition(k, m, ns, betas, eps, static_cast<std::size_t>(c.integer("samples")), c.seed, po);
  {
    Csv csv(out / "zsweep.csv", {"N", "beta", "eps", "samples", "mean", "ci", "ess", "seed"});
    for (const auto& r : rows) {
      csv << r.n << r.beta << r.eps << r.samples << r.mean << r.ci_halfwidth << r.ess;
      csv.seed(r.seed).end();
    }
  }
  o.files.push_back("zsweep.csv");
  const double e_mean = mean_energy(k, eps, m, 1);
  json verdicts = json::array();
  for (double beta : betas) {
    std::vector<PartitionEstimate> sel;
    std::vector<double> xs, ys, ci;
    for (const auto& r : rows)
      if (r.beta == beta) {
        sel.push_back(r);
        xs.push_back(static_cast<double>(r.n));
        ys.push_back(r.mean);
        ci.push_back(r.ci_halfwidth);
      }
    const auto v = trend_flatness(sel, std::exp(-beta * e_mean), c.real("min_ess"));
    const std::string tag = "beta=" + fmt(beta);
    o.checks.push_back(check(tag + " above_one", v.above_one, "every estimate >= 1 - CI"));
    o.checks.push_back(check(tag + " jensen", v.jensen, "every estimate >= exp(-beta E) - CI"));
    o.checks.push_back(check(tag + " flat", v.flat,
                             "last quarter " + fmt(v.last_quarter) + " vs first " + fmt(v.first_quarter) +
                                 " + 2 CI " + fmt(2 * v.ci)));
    o.checks.push_back(check(tag + " ess", v.ess_ok, "min ESS " + fmt(v.min_ess)));
    verdicts.push_back({{"beta", beta},
                        {"first_quarter", v.first_quarter},
                        {"last_quarter", v.last_quarter},
                        {"ci", v.ci},
                        {"min_ess", v.min_ess},
                        {"pass", v.pass()}});
    o.series.push_back(series("z_" + tag, "N", "Z", xs, ys, ci));
  }
  o.results["trend"] = verdicts;
  return o;
}

Outcome moments_verify(const ExperimentConfig& c, const fs::path& out) {
  Outcome o;
  const int m = static_cast<int>(c.integer("atoms"));
  require(m >= 2 && m <= 64, ErrorKind::configuration, "atoms must lie in [2, 64]");
  const double max_se = c.real("max_se");
  bool vanish = true, counts_ok = true, mult_ok = true, mc_ok = true;
  Csv counts(out / "moments_counts.csv", {"n", "p", "ell", "restricted", "bound"});
  Csv oracle(out / "moments_oracle.csv", {"n", "p", "oracle", "monte_carlo", "std_error", "abs_oracle", "abs_monte_carlo",
                                          "abs_std_error"});
  json cases = json::array();
  for (const auto& [n64, p64] : c.pairs("cases")) {
    const int n = static_cast<int>(n64), p = static_cast<int>(p64);
    Stream table_stream(c.seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p), 0});
    // dyadic raw table and equal weights keep the centering exact
    std::vector<double> raw(static_cast<std::size_t>(m * m));
    for (int a = 0; a < m; ++a)
      for (int b = 0; b <= a; ++b) {
        const double v = static_cast<double>(static_cast<int>(table_stream.index(17)) - 8) / 8.0;
        raw[static_cast<std::size_t>(a * m + b)] = raw[static_cast<std::size_t>(b * m + a)] = v;
      }
    const AtomTable g = center_table(std::vector<double>(static_cast<std::size_t>(m), 1.0 / m), raw);
    std::size_t nonzero = 0, restricted = 0, violations = 0;
    enumerate_multiindices(n, p, [&](const MultiIndex& idx) {
      const auto prof = classify(idx);
      if (prof.restricted) {
        ++restricted;
        if (!multiplicity_bound_holds(prof, p)) ++violations;
      } else if (multiindex_term(g, idx) != 0.0) {
        ++nonzero;
      }
    });
    vanish = vanish && nonzero == 0;
    mult_ok = mult_ok && violations == 0;
    json per_ell = json::array();
    for (int ell = 2; ell <= std::min(n, 2 * p); ++ell) {
      const auto cnt = count_restricted(n, p, ell);
      const double bound = restricted_count_bound(n, p, ell);
      counts_ok = counts_ok && static_cast<double>(cnt) <= bound;
      counts << n << p << ell << static_cast<std::int64_t>(cnt) << bound;
      counts.end();
      per_ell.push_back({{"ell", ell}, {"count", cnt}, {"bound", bound}});
    }
    const auto exact = moment_oracle(g, n, p);
    const auto mc = moment_monte_carlo(g, n, p, static_cast<std::size_t>(c.integer("samples")),
                                       derive_seed(c.seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p), 1}),
                                       c.workers);
    const bool agree = std::abs(mc.raw_mean - exact.raw) <= max_se * mc.raw_std_error + 1e-15 &&
                       std::abs(mc.mean - exact.absolute) <= max_se * mc.std_error + 1e-15;
    mc_ok = mc_ok && agree;
    oracle << n << p << exact.raw << mc.raw_mean << mc.raw_std_error << exact.absolute << mc.mean << mc.std_error;
    oracle.end();
    cases.push_back({{"n", n},
                     {"p", p},
                     {"multiindices", count_multiindices(n, p)},
                     {"restricted", restricted},
                     {"nonrestricted_nonzero", nonzero},
                     {"multiplicity_violations", violations},
                     {"counts", per_ell},
                     {"oracle", exact.raw},
                     {"monte_carlo", mc.raw_mean},
                     {"std_error", mc.raw_std_error}});
  }
  o.files = {"moments_counts.csv", "moments_oracle.csv"};
  o.results["cases"] = cases;
  o.checks.push_back(check("nonrestricted_terms_vanish", vanish, "exact zero for centered dyadic tables"));
  o.checks.push_back(check("restricted_count_bound", counts_ok, "count <= binom(n, l) (l^2 - l)^p"));
  o.checks.push_back(check("multiplicity_bound", mult_ok, "every restricted index"));
  o.checks.push_back(check("oracle_vs_monte_carlo", mc_ok, "within " + fmt(max_se) + " SE"));
  return o;
}

Outcome sde_run(const ExperimentConfig& c, const fs::path& out, bool dump) {
  Outcome o;
  const Kernel k = c.make_kernel();
  const BaseMeasure m = c.make_measure();
  const auto n = static_cast<std::size_t>(c.integer("n"));
  SdeOptions so;
  so.dt = c.real("dt");
  so.eps_reg = c.real("eps_reg");
  so.force_cap = c.real("force_cap");
  so.noise = c.real("noise");
  Stream init(c.seed, {0});
  SdeIntegrator sde(k, c.make_potential(), m.sample(n, init), particle_streams(n, derive_seed(c.seed, {1}), 0), so);
  const double t_end = c.real("t_end");
  const auto every = static_cast<std::size_t>(std::max<std::int64_t>(1, c.integer("snapshot_every")));
  dump = dump || c.flag("dump");
  const bool energies = k.spectral();
  std::optional<EnergyEvaluator> ev;
  if (energies) ev.emplace(k, so.eps_reg, m);
  const int d = k.dim();
  std::vector<std::string> head{"t", "particle"};
  for (int cc = 0; cc < d; ++cc) head.push_back("x" + std::to_string(cc));
  std::optional<Csv> snaps;
  if (dump) {
    snaps.emplace(out / "sde_snapshots.csv", head);
    o.files.push_back("sde_snapshots.csv");
  }
  Csv trace(out / "sde_energy.csv", {"t", "energy"});
  o.files.push_back("sde_energy.csv");
  auto record = [&] {
    const auto& s = sde.state();
    if (snaps) {
      for (std::size_t i = 0; i < n; ++i) {
        *snaps << s.time << i;
        for (int cc = 0; cc < d; ++cc) *snaps << s.config.coords[i * d + cc];
        snaps->end();
      }
    }
    trace << s.time << (ev ? ev->total(s.config) / static_cast<double>(n) : 0.0);
    trace.end();
  };
  record();
  while (sde.state().time < t_end - 1e-12) {
    const double t = std::min(t_end, sde.state().time + static_cast<double>(every) * so.dt);
    sde.advance_to(t);
    record();
  }
  const auto& s = sde.state();
  bool finite = true;
  for (double v : s.config.coords) finite = finite && std::isfinite(v);
  o.results["steps"] = s.steps;
  o.results["time"] = s.time;
  o.results["cap_activations"] = s.cap_activations;
  o.results["force_cap"] = s.force_cap;
  o.checks.push_back(check("finite_state", finite, std::to_string(s.steps) + " steps"));
  return o;
}

Outcome mv_run(const ExperimentConfig& c, const fs::path& out) {
  Outcome o;
  const Kernel k = c.make_kernel();
  const BaseMeasure m = c.make_measure();
  const int cells = static_cast<int>(c.integer("cells"));
  const int d = k.dim();
  const PdeState init = pde_state_from(d, cells, [&](const Point& x) { return m.density_at(x); }, c.real("dt"));
  MvOptions mo;
  mo.dt = c.real("dt");
  mo.eps = c.real("eps");
  mo.max_halvings = static_cast<int>(c.integer("max_halvings"));
  mo.snapshot_times = c.reals("snapshots");
  const auto traj = mv_solve(init, k, c.make_potential(), c.real("t_end"), mo);
  {
    std::vector<std::string> head{"t", "cell"};
    for (int cc = 0; cc < d; ++cc) head.push_back("x" + std::to_string(cc));
    head.push_back("rho");
    Csv csv(out / "mv_snapshots.csv", head);
    for (std::size_t s = 0; s < traj.times.size(); ++s) {
      const auto& rho = traj.densities[s];
      for (std::size_t i = 0; i < rho.size(); ++i) {
        csv << traj.times[s] << i;
        std::size_t rest = i;
        std::array<double, 3> x{};
        for (int cc = d - 1; cc >= 0; --cc) {
          x[static_cast<std::size_t>(cc)] = (static_cast<double>(rest % static_cast<std::size_t>(cells)) + 0.5) / cells;
          rest /= static_cast<std::size_t>(cells);
        }
        for (int cc = 0; cc < d; ++cc) csv << x[static_cast<std::size_t>(cc)];
        csv << rho[i];
        csv.end();
      }
    }
  }
  bool monotone = true;
  double worst = 0.0, prev = traj.initial_free_energy;
  {
    Csv csv(out / "mv_free_energy.csv", {"t", "free_energy"});
    csv << 0.0 << traj.initial_free_energy;
    csv.end();
    for (std::size_t i = 0; i < traj.free_energy.size(); ++i) {
      csv << traj.step_times[i] << traj.free_energy[i];
      csv.end();
      const double rise = traj.free_energy[i] - prev;
      worst = std::max(worst, rise);
      monotone = monotone && rise <= 1e-12 * (1.0 + std::abs(prev));
      prev = traj.free_energy[i];
    }
  }
  o.files = {"mv_snapshots.csv", "mv_free_energy.csv"};
  o.results["steps"] = traj.steps;
  o.results["halvings"] = traj.halvings;
  o.results["max_mass_correction"] = traj.max_mass_correction;
  o.results["min_density"] = traj.min_density;
  o.results["clipped"] = traj.clipped;
  o.results["max_free_energy_rise"] = worst;
  o.checks.push_back(check("free_energy_monotone", monotone, "largest rise " + fmt(worst)));
  o.checks.push_back(check("mass_conserved", traj.max_mass_correction < 1e-8,
                           "max mass correction " + fmt(traj.max_mass_correction)));
  return o;
}

Outcome mfl_sweep(const ExperimentConfig& c, const fs::path& out) {
  Outcome o;
  ModulatedOptions mo;
  mo.dt = c.real("dt");
  mo.eps_reg = c.real("eps_reg");
  mo.pde_dt = c.real("pde_dt");
  mo.cells = static_cast<int>(c.integer("cells"));
  mo.snapshot_spacing = c.real("snapshot_spacing");
  mo.workers = c.workers;
  const auto sw = modulated_energy_sweep(c.make_kernel(), c.make_measure(), c.make_potential(),
                                         sizes(c.integers("n_values")), c.reals("t_grid"),
                                         static_cast<int>(c.integer("replicas")), c.seed, mo);
  {
    Csv csv(out / "mfl_sweep.csv",
            {"N", "t", "replicas", "mean", "std_error", "abs_mean", "abs_std_error", "cap_activations"});
    for (const auto& r : sw.rows) {
      csv << r.n << r.t << r.replicas << r.mean << r.std_error << r.abs_mean << r.abs_std_error << r.cap_activations;
      csv.end();
    }
  }
  o.files.push_back("mfl_sweep.csv");
  json slopes = json::array();
  for (const auto& s : sw.slopes) {
    const bool ok = s.slope >= c.real("slope_lo") && s.slope <= c.real("slope_hi");
    o.checks.push_back(check("slope t=" + fmt(s.t), ok, "slope " + fmt(s.slope) + " +- " + fmt(s.slope_std_error)));
    slopes.push_back({{"t", s.t}, {"slope", s.slope}, {"slope_std_error", s.slope_std_error}});
    std::vector<double> xs, ys, ci;
    for (const auto& r : sw.rows)
      if (r.t == s.t) {
        xs.push_back(static_cast<double>(r.n));
        ys.push_back(r.abs_mean);
        ci.push_back(r.abs_std_error);
      }
    o.series.push_back(series("modulated_t=" + fmt(s.t), "N", "E|I/N|", xs, ys, ci));
  }
  o.results["slopes"] = slopes;
  o.results["eps_reg"] = sw.eps_reg;
  return o;
}

Outcome gibbs_run(const ExperimentConfig& c, const fs::path& out) {
  Outcome o;
  const Kernel k = c.make_kernel();
  EntropyOptions eo;
  eo.chain.burn_in = static_cast<std::size_t>(c.integer("burn_in"));
  eo.chain.samples = static_cast<std::size_t>(c.integer("chain_samples"));
  eo.is_samples = static_cast<std::size_t>(c.integer("is_samples"));
  eo.eps = c.real("eps");
  eo.minimizer_cells = static_cast<int>(c.integer("minimizer_cells"));
  eo.ti_n_values = sizes(c.integers("ti_n_values"));
  eo.workers = c.workers;
  const auto tab = entropy_rates(k, c.make_potential(), sizes(c.integers("n_values")), c.seed, eo);
  {
    Csv csv(out / "gibbs.csv", {"N", "logZ_is", "logZ_is_se", "logZ_is_ci", "logZ_ti", "logZ_ti_se", "logZ", "logZ_se",
                                "H_fwd", "H_fwd_se", "H_bwd", "H_bwd_se", "acceptance", "seed"});
    for (const auto& r : tab.rows) {
      csv << r.n << r.log_z_is << r.log_z_is_se << r.log_z_is_ci << (r.has_ti ? r.log_z_ti : std::nan(""))
          << r.log_z_ti_se << r.log_z << r.log_z_se << r.h_forward << r.h_forward_se << r.h_backward << r.h_backward_se
          << r.min_acceptance;
      csv.seed(c.seed).end();
    }
  }
  o.files.push_back("gibbs.csv");
  bool agree = true, nonneg = true, bound = true, zeros = true;
  int flagged = 0, at_cap = 0;
  std::vector<double> xs, ys, ci;
  for (const auto& r : tab.rows) {
    agree = agree && r.agree;
    nonneg = nonneg && r.nonnegative;
    bound = bound && r.bound_holds;
    flagged += r.flagged_chains;
    at_cap += r.flagged_at_cap;
    zeros = zeros && r.h_forward == 0.0 && r.h_backward == 0.0 && r.log_z == 0.0;
    xs.push_back(static_cast<double>(r.n));
    ys.push_back(r.h_backward / static_cast<double>(r.n));
    ci.push_back(r.h_backward_se / static_cast<double>(r.n));
  }
  o.checks.push_back(check("logz_estimators_agree", agree, "IS vs TI within 3 combined SE"));
  o.checks.push_back(check("entropies_nonnegative", nonneg, "both entropies >= -3 SE"));
  o.checks.push_back(check("entropy_bound", bound, "H_fwd <= W2/Z + Z2/Z - log Z"));
  if (k.family() == Family::zero) {
    o.checks.push_back(check("zero_interaction_control", zeros, "all entropies and log Z exactly 0"));
  } else {
    if (tab.backward_fit) {
      const double s = tab.backward_fit->slope;
      o.checks.push_back(check("backward_rate", s >= c.real("slope_lo") && s <= c.real("slope_hi"),
                               "slope " + fmt(s) + " +- " + fmt(tab.backward_fit->slope_std_error)));
      o.results["backward_slope"] = s;
      o.results["backward_slope_se"] = tab.backward_fit->slope_std_error;
    } else {
      o.checks.push_back({"backward_rate", Verdict::inconclusive, "nonpositive entropy estimate, no log-log fit"});
    }
    if (tab.forward_fit) {
      o.results["forward_slope"] = tab.forward_fit->slope;
      o.results["forward_slope_se"] = tab.forward_fit->slope_std_error;
    }
    if (flagged > at_cap) {
      o.checks.push_back({"mala_acceptance", Verdict::inconclusive,
                          std::to_string(flagged - at_cap) + " chain(s) left (0.2, 0.9) below the step cap"});
    } else if (flagged > 0) {
      o.checks.push_back({"mala_acceptance", Verdict::pass,
                          std::to_string(flagged) + " flagged chain(s), all at the step cap"});
    }
  }
  o.results["flagged_chains"] = flagged;
  o.results["flagged_at_step_cap"] = at_cap;
  o.results["uniform_reference"] = tab.uniform_reference;
  o.results["minimizer_residual"] = tab.minimizer.residual;
  o.results["minimizer_iterations"] = tab.minimizer.iterations;
  o.series.push_back(series("entropy_backward", "N", "H_bwd/N", xs, ys, ci));
  return o;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorKind::configuration, "cannot write " + path.string());
  f << text;
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass: return "pass";
    case Verdict::fail: return "fail";
    case Verdict::inconclusive: return "inconclusive";
  }
  return "?";
}

int exit_code(const std::vector<Check>& checks) {
  bool fail = false, inconclusive = false;
  for (const auto& c : checks) {
    fail = fail || c.verdict == Verdict::fail;
    inconclusive = inconclusive || c.verdict == Verdict::inconclusive;
  }
  if (fail) return exit_fail;
  if (inconclusive) return exit_inconclusive;
  return exit_ok;
}

ExperimentRecord run_experiment(const ExperimentConfig& config, const fs::path& out, const RunOptions& opts) {
  const auto start = std::chrono::steady_clock::now();
  fs::create_directories(out);
  write_text(out / "config.yaml", to_yaml(config));

  Outcome o;
  const std::string& kind = config.kind;
  if (kind == "kernel-verify") o = kernel_verify(config, out);
  else if (kind == "zsweep") o = zsweep(config, out);
  else if (kind == "moments-verify") o = moments_verify(config, out);
  else if (kind == "sde-run") o = sde_run(config, out, opts.dump);
  else if (kind == "mv-solve") o = mv_run(config, out);
  else if (kind == "mfl-sweep") o = mfl_sweep(config, out);
  else if (kind == "gibbs") o = gibbs_run(config, out);
  else raise(ErrorKind::configuration, "unknown experiment kind '" + kind + "'");

  ExperimentRecord rec;
  rec.kind = kind;
  rec.config_hash = config_hash(config);
  rec.kernel_hash = kernel_hash(config);
  rec.version = version_string();
  rec.checks = o.checks;
  rec.data_files = o.files;
  rec.directory = out;

  json checks = json::array();
  json verdicts = json::object();
  for (const auto& c : o.checks) {
    checks.push_back({{"name", c.name}, {"verdict", to_string(c.verdict)}, {"detail", c.detail}});
    verdicts[c.name] = to_string(c.verdict);
  }
  json summary = {{"kind", kind},
                  {"config_hash", rec.config_hash},
                  {"kernel_hash", rec.kernel_hash},
                  {"kernel", {{"family", config.kernel.family}, {"dim", config.kernel.dim},
                              {"cutoff", config.kernel.cutoff}}},
                  {"seed", config.seed},
                  {"workers", config.workers},
                  {"checks", checks},
                  {"results", o.results},
                  {"series", o.series},
                  {"data_files", o.files}};
  write_text(out / "summary.json", summary.dump(2) + "\n");

  std::ostringstream txt;
  txt << kind << "  config " << rec.config_hash.substr(0, 12) << "  seed " << config.seed << "  workers "
      << config.workers << "\n";
  for (const auto& c : o.checks) txt << "  [" << to_string(c.verdict) << "] " << c.name << ": " << c.detail << "\n";
  write_text(out / "summary.txt", txt.str());

  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  json files = o.files;
  json record = {{"kind", kind},
                 {"config_hash", rec.config_hash},
                 {"kernel_hash", rec.kernel_hash},
                 {"version", rec.version},
                 {"wall_seconds", rec.wall_seconds},
                 {"verdicts", verdicts},
                 {"data_files", files},
                 {"summary", "summary.json"}};
  write_text(out / "record.json", record.dump(2) + "\n");
  return rec;
}

}  // namespace loggas::cli
