#include "loggas/moments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "loggas/errors.hpp"
#include "loggas/parallel.hpp"
#include "loggas/rng.hpp"
#include "loggas/stats.hpp"

namespace loggas {

namespace {

constexpr std::size_t kBlock = 1024;

void check_budget(int n, int p) {
  require(n >= 2 && p >= 1, ErrorKind::configuration, "multiindices need n >= 2 and p >= 1");
  require(n * (n - 1) <= 30 && p <= 4, ErrorKind::configuration,
          "enumeration budget exceeded (need n(n-1) <= 30 and p <= 4)");
}

double power_int(double x, int p) {
  double r = 1.0;
  for (int i = 0; i < p; ++i) r *= x;
  return r;
}

double factorial(int p) {
  double r = 1.0;
  for (int i = 2; i <= p; ++i) r *= i;
  return r;
}

// Per-block sums of T^p, |T|^p and (T^p)^2.
struct BlockSums {
  double raw = 0.0, abs = 0.0, sq = 0.0;
  void add(double tp) {
    raw += tp;
    abs += std::abs(tp);
    sq += tp * tp;
  }
};

MonteCarloMoment reduce_blocks(const std::vector<BlockSums>& blocks, std::size_t samples) {
  BlockSums t;
  for (const auto& b : blocks) {
    t.raw += b.raw;
    t.abs += b.abs;
    t.sq += b.sq;
  }
  const double n = static_cast<double>(samples);
  MonteCarloMoment out;
  out.samples = samples;
  out.mean = t.abs / n;
  out.raw_mean = t.raw / n;
  out.std_error = std::sqrt(std::max(0.0, (t.sq - t.abs * out.mean) / (n - 1.0)) / n);
  out.raw_std_error = std::sqrt(std::max(0.0, (t.sq - t.raw * out.raw_mean) / (n - 1.0)) / n);
  return out;
}

}  // namespace

std::pair<int, int> MultiIndex::pair(int n, std::size_t slot) {
  const int i = static_cast<int>(slot / static_cast<std::size_t>(n - 1));
  const int r = static_cast<int>(slot % static_cast<std::size_t>(n - 1));
  return {i, r < i ? r : r + 1};
}

int MultiplicityProfile::max_multiplicity() const { return m.empty() ? 0 : *std::max_element(m.begin(), m.end()); }

std::uint64_t count_multiindices(int n, int p) {
  // multichoose(s, p) = binom(s + p - 1, p)
  const std::uint64_t s = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n - 1);
  std::uint64_t r = 1;
  for (int i = 1; i <= p; ++i) r = r * (s + static_cast<std::uint64_t>(i) - 1) / static_cast<std::uint64_t>(i);
  return r;
}

void enumerate_multiindices(int n, int p, const std::function<void(const MultiIndex&)>& visit) {
  check_budget(n, p);
  MultiIndex idx;
  idx.n = n;
  idx.p = p;
  const std::size_t s = static_cast<std::size_t>(n) * static_cast<std::size_t>(n - 1);
  idx.entries.assign(s, 0);
  // nondecreasing slot sequences of length p, one per multiset
  std::vector<std::size_t> seq(static_cast<std::size_t>(p), 0);
  while (true) {
    std::fill(idx.entries.begin(), idx.entries.end(), 0);
    for (std::size_t v : seq) ++idx.entries[v];
    visit(idx);
    int k = p - 1;
    while (k >= 0 && seq[static_cast<std::size_t>(k)] == s - 1) --k;
    if (k < 0) break;
    const std::size_t next = seq[static_cast<std::size_t>(k)] + 1;
    for (int j = k; j < p; ++j) seq[static_cast<std::size_t>(j)] = next;
  }
}

MultiplicityProfile classify(const MultiIndex& index) {
  MultiplicityProfile prof;
  prof.m.assign(static_cast<std::size_t>(index.n), 0);
  for (std::size_t s = 0; s < index.slots(); ++s) {
    if (index.entries[s] == 0) continue;
    const auto [i, j] = MultiIndex::pair(index.n, s);
    prof.m[static_cast<std::size_t>(i)] += index.entries[s];
    prof.m[static_cast<std::size_t>(j)] += index.entries[s];
  }
  prof.restricted = true;
  for (int i = 0; i < index.n; ++i) {
    const int mi = prof.m[static_cast<std::size_t>(i)];
    if (mi != 0) prof.active.push_back(i);
    if (mi == 1) prof.restricted = false;
  }
  prof.act = static_cast<int>(prof.active.size());
  return prof;
}

bool multiplicity_bound_holds(const MultiplicityProfile& profile, int p) {
  if (!profile.restricted) return true;
  return profile.max_multiplicity() <= 2 * p - 2 * (profile.act - 1);
}

double restricted_count_bound(int n, int p, int ell) {
  if (ell < 0 || ell > n) return 0.0;
  double binom = 1.0;
  for (int i = 1; i <= ell; ++i) binom = binom * (n - ell + i) / i;
  return binom * power_int(static_cast<double>(ell) * ell - ell, p);
}

std::uint64_t count_restricted(int n, int p, int ell) {
  std::uint64_t count = 0;
  enumerate_multiindices(n, p, [&](const MultiIndex& idx) {
    const auto prof = classify(idx);
    if (prof.restricted && prof.act == ell) ++count;
  });
  require(static_cast<double>(count) <= restricted_count_bound(n, p, ell), ErrorKind::estimation,
          "restricted multiindex count exceeds binom(n, l)(l^2 - l)^p");
  return count;
}

PairDecomposition decompose(const MultiIndex& index, const MultiplicityProfile& profile) {
  PairDecomposition dec;
  const int ell = profile.act;
  std::vector<std::size_t> support;
  for (std::size_t s = 0; s < index.slots(); ++s)
    if (index.entries[s] > 0) support.push_back(s);

  for (int k = 0; k < ell; ++k) {
    const int ik = profile.active[static_cast<std::size_t>(k)];
    std::vector<std::size_t> ak;
    for (std::size_t s : support) {
      const auto [i, j] = MultiIndex::pair(index.n, s);
      if (i == ik || j == ik) ak.push_back(s);
    }
    dec.a.push_back(std::move(ak));
  }
  std::vector<char> taken(index.slots(), 0);
  for (int k = 0; k + 1 < ell; ++k) {
    std::vector<std::size_t> ck;
    int g = 0;
    for (std::size_t s : dec.a[static_cast<std::size_t>(k)]) {
      if (taken[s]) continue;
      taken[s] = 1;
      ck.push_back(s);
      g += index.entries[s];
    }
    dec.c.push_back(std::move(ck));
    dec.gamma.push_back(g);
  }

  // audit: every support pair lands in exactly one C_k
  std::vector<int> hits(index.slots(), 0);
  for (const auto& ck : dec.c)
    for (std::size_t s : ck) ++hits[s];
  bool ok = true;
  for (std::size_t s = 0; s < index.slots(); ++s) {
    const bool in_support = index.entries[s] > 0;
    if ((in_support && hits[s] != 1) || (!in_support && hits[s] != 0)) ok = false;
  }
  dec.partition = ok;
  int total = 0;
  for (int g : dec.gamma) total += g;
  dec.gamma_sum = total == index.p;
  return dec;
}

double AtomTable::marginal_defect() const {
  double worst = 0.0;
  for (std::size_t a = 0; a < m(); ++a) {
    double s = 0.0;
    for (std::size_t b = 0; b < m(); ++b) s += weights[b] * (*this)(a, b);
    worst = std::max(worst, std::abs(s));
  }
  return worst;
}

AtomTable center_table(std::vector<double> weights, const std::vector<double>& raw) {
  const std::size_t m = weights.size();
  require(raw.size() == m * m, ErrorKind::configuration, "table must be m x m");
  std::vector<double> g(m, 0.0);
  double c = 0.0;
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = 0; b < m; ++b) g[a] += weights[b] * raw[a * m + b];
    c += weights[a] * g[a];
  }
  AtomTable t;
  t.values.resize(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) t.values[a * m + b] = raw[a * m + b] - g[a] - g[b] + c;
  t.weights = std::move(weights);
  return t;
}

double PairKernel::pair_sum(const Configuration& cfg) const {
  const std::size_t n = cfg.size();
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) s += (*this)(cfg.point(i), cfg.point(j));
  return 2.0 * s;
}

double RankOneKernel::pair_sum(const Configuration& cfg) const {
  double s = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < cfg.size(); ++i) {
    const double v = g_(cfg.point(i));
    s += v;
    s2 += v * v;
  }
  return s * s - s2;
}

CenteredKernel::CenteredKernel(const Kernel& kernel, double eps, const BaseMeasure& measure)
    : kernel_(kernel), eps_(eps), measure_(measure) {
  require(eps > 0.0, ErrorKind::domain, "the centered gap kernel needs eps > 0");
  require(kernel.domain().is_torus(), ErrorKind::unsupported,
          "the centered gap kernel is bounded only on the torus");
  require(measure.domain().is_torus() && measure.domain().d == kernel.dim(), ErrorKind::configuration,
          "measure and kernel domains differ");
  if (!kernel.spectral() || kernel.half_modes().empty()) return;  // zero family: G = 0
  lattice_ = std::make_shared<ModeLattice>(kernel, 0.0);
  const ModeLattice reg(kernel, eps);
  gap_weight_.resize(lattice_->size());
  for (std::size_t s = 0; s < gap_weight_.size(); ++s) {
    gap_weight_[s] = lattice_->weight()[s] - reg.weight()[s];
    gap_diag_ += gap_weight_[s];
  }
  lattice_->scatter(kernel, measure.fourier_table(kernel), rho_re_, rho_im_);
  for (std::size_t s = 0; s < gap_weight_.size(); ++s)
    total_ += gap_weight_[s] * (rho_re_[s] * rho_re_[s] + rho_im_[s] * rho_im_[s]);
}

double CenteredKernel::marginal(const Point& x) const {
  if (!lattice_) return 0.0;
  // sum over half-space modes of 2 c_k (1 - m_k) Re(e^{2 pi i k.x} conj(rho_k))
  double s = 0.0;
  const auto& modes = kernel_.half_modes();
  const auto fhat = measure_.fourier_table(kernel_);
  for (std::size_t m = 0; m < modes.size(); ++m) {
    double phase = 0.0;
    for (int c = 0; c < kernel_.dim(); ++c) phase += modes[m].k[static_cast<std::size_t>(c)] * x[static_cast<std::size_t>(c)];
    phase *= 2.0 * M_PI;
    const double w = 2.0 * modes[m].coeff * (1.0 - kernel_.multiplier(modes[m].freq, eps_));
    s += w * (std::cos(phase) * fhat[m].real() + std::sin(phase) * fhat[m].imag());
  }
  return s;
}

double CenteredKernel::operator()(const Point& x, const Point& y) const {
  if (!lattice_) return 0.0;
  const double gap = kernel_.value_eps(0.0, x, y) - kernel_.value_eps(eps_, x, y);
  return gap - marginal(x) - marginal(y) + total_;
}

double CenteredKernel::pair_sum(const Configuration& cfg) const {
  if (!lattice_) return 0.0;
  const double n = static_cast<double>(cfg.size());
  SpectralWork work;
  std::vector<double> sr, si;
  structure_factor(*lattice_, cfg, sr, si, work);
  double pairs = -n * gap_diag_, cross = 0.0;
  for (std::size_t s = 0; s < gap_weight_.size(); ++s) {
    pairs += gap_weight_[s] * (sr[s] * sr[s] + si[s] * si[s]);
    cross += gap_weight_[s] * (rho_re_[s] * sr[s] + rho_im_[s] * si[s]);
  }
  return pairs - 2.0 * (n - 1.0) * cross + n * (n - 1.0) * total_;
}

AtomTable tabulate(const PairKernel& g, const BaseMeasure& atomic) {
  require(atomic.kind() == BaseMeasure::Kind::atomic, ErrorKind::configuration, "tabulation needs atoms");
  const auto& pts = atomic.atoms();
  const std::size_t m = pts.size();
  AtomTable t;
  t.weights = atomic.weights();
  t.values.resize(m * m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) t.values[a * m + b] = t.values[b * m + a] = g(pts[a], pts[b]);
  return t;
}

ExactMoment moment_oracle(const AtomTable& g, int n, int p) {
  require(n >= 1 && p >= 1, ErrorKind::configuration, "moment oracle needs n >= 1 and p >= 1");
  const std::size_t m = g.m();
  require(std::pow(static_cast<double>(m), n) <= 1e6, ErrorKind::configuration,
          "enumeration budget exceeded (m^n > 1e6)");
  std::vector<std::size_t> digit(static_cast<std::size_t>(n), 0);
  // accumulate E (sum G)^p and divide by n^p once, so dyadic tables stay exact
  double abs_sum = 0.0, raw_sum = 0.0;
  while (true) {
    double prob = 1.0, s = 0.0;
    for (int i = 0; i < n; ++i) {
      prob *= g.weights[digit[static_cast<std::size_t>(i)]];
      for (int j = 0; j < n; ++j)
        if (i != j) s += g(digit[static_cast<std::size_t>(i)], digit[static_cast<std::size_t>(j)]);
    }
    const double sp = power_int(s, p);
    raw_sum += prob * sp;
    abs_sum += prob * std::abs(sp);
    int i = 0;
    while (i < n && ++digit[static_cast<std::size_t>(i)] == m) digit[static_cast<std::size_t>(i++)] = 0;
    if (i == n) break;
  }
  const double scale = power_int(static_cast<double>(n), p);
  return {abs_sum / scale, raw_sum / scale};
}

ExactMoment moment_oracle(const PairKernel& g, const BaseMeasure& atomic, int n, int p) {
  return moment_oracle(tabulate(g, atomic), n, p);
}

double multiindex_term(const AtomTable& g, const MultiIndex& index) {
  const auto prof = classify(index);
  const std::size_t m = g.m();
  std::vector<int> local(static_cast<std::size_t>(index.n), -1);
  for (int a = 0; a < prof.act; ++a) local[static_cast<std::size_t>(prof.active[static_cast<std::size_t>(a)])] = a;
  struct Factor {
    int i, j, power;
  };
  std::vector<Factor> factors;
  for (std::size_t s = 0; s < index.slots(); ++s) {
    if (index.entries[s] == 0) continue;
    const auto [i, j] = MultiIndex::pair(index.n, s);
    factors.push_back({local[static_cast<std::size_t>(i)], local[static_cast<std::size_t>(j)], index.entries[s]});
  }
  std::vector<std::size_t> digit(static_cast<std::size_t>(prof.act), 0);
  double total = 0.0;
  while (true) {
    double prob = 1.0, prod = 1.0;
    for (std::size_t a = 0; a < digit.size(); ++a) prob *= g.weights[digit[a]];
    for (const auto& f : factors)
      prod *= power_int(g(digit[static_cast<std::size_t>(f.i)], digit[static_cast<std::size_t>(f.j)]), f.power);
    total += prob * prod;
    std::size_t a = 0;
    while (a < digit.size() && ++digit[a] == m) digit[a++] = 0;
    if (a == digit.size()) break;
  }
  return total;
}

double expansion_moment(const AtomTable& g, int n, int p, bool restricted_only) {
  double sum = 0.0;
  const double pf = factorial(p);
  enumerate_multiindices(n, p, [&](const MultiIndex& idx) {
    if (restricted_only && !classify(idx).restricted) return;
    double denom = 1.0;
    for (int e : idx.entries) denom *= factorial(e);
    sum += (pf / denom) * multiindex_term(g, idx);
  });
  return sum / power_int(static_cast<double>(n), p);
}

MonteCarloMoment moment_monte_carlo(const AtomTable& g, int n, int p, std::size_t samples, std::uint64_t seed,
                                    int workers) {
  require(samples >= 2, ErrorKind::configuration, "need at least two samples");
  const AliasTable alias(g.weights);
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<BlockSums> sums(blocks);
  parallel_blocks(resolve_workers(workers), blocks, [&](std::size_t b) {
    Stream stream(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p), b});
    const std::size_t lo = b * kBlock, hi = std::min(samples, lo + kBlock);
    std::vector<std::size_t> x(static_cast<std::size_t>(n));
    for (std::size_t t = lo; t < hi; ++t) {
      for (auto& xi : x) xi = alias.draw(stream);
      double s = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          if (i != j) s += g(x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)]);
      sums[b].add(power_int(s / n, p));
    }
  });
  return reduce_blocks(sums, samples);
}

MonteCarloMoment moment_monte_carlo(const PairKernel& g, const BaseMeasure& measure, int n, int p,
                                    std::size_t samples, std::uint64_t seed, int workers) {
  require(samples >= 2, ErrorKind::configuration, "need at least two samples");
  const std::size_t blocks = (samples + kBlock - 1) / kBlock;
  std::vector<BlockSums> sums(blocks);
  parallel_blocks(resolve_workers(workers), blocks, [&](std::size_t b) {
    Stream stream(seed, {static_cast<std::uint64_t>(n), static_cast<std::uint64_t>(p), b});
    const std::size_t lo = b * kBlock, hi = std::min(samples, lo + kBlock);
    for (std::size_t t = lo; t < hi; ++t) {
      const Configuration cfg = measure.sample(static_cast<std::size_t>(n), stream);
      sums[b].add(power_int(g.pair_sum(cfg) / n, p));
    }
  });
  return reduce_blocks(sums, samples);
}

double sup_norm_power(const PairKernel& g, const BaseMeasure& measure, double q, int probes, int nodes) {
  const Domain& dom = measure.domain();
  const int d = dom.d;
  const double lo = dom.is_torus() ? 0.0 : -dom.radius;
  const double span = dom.is_torus() ? 1.0 : 2.0 * dom.radius;

  std::vector<Point> ys;
  std::vector<double> wy;
  if (measure.kind() == BaseMeasure::Kind::atomic) {
    ys = measure.atoms();
    wy = measure.weights();
  } else {
    const double h = span / nodes;
    std::size_t total = 1;
    for (int c = 0; c < d; ++c) total *= static_cast<std::size_t>(nodes);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Point y{0, 0, 0};
      std::size_t r = idx;
      for (int c = d - 1; c >= 0; --c) {
        y[static_cast<std::size_t>(c)] = lo + (static_cast<double>(r % static_cast<std::size_t>(nodes)) + 0.5) * h;
        r /= static_cast<std::size_t>(nodes);
      }
      ys.push_back(y);
      wy.push_back(std::pow(h, d) * measure.density_at(y));
    }
  }

  std::vector<Point> xs;
  if (measure.kind() == BaseMeasure::Kind::atomic) {
    xs = measure.atoms();
  } else {
    const double h = span / probes;
    std::size_t total = 1;
    for (int c = 0; c < d; ++c) total *= static_cast<std::size_t>(probes);
    for (std::size_t idx = 0; idx < total; ++idx) {
      Point x{0, 0, 0};
      std::size_t r = idx;
      for (int c = d - 1; c >= 0; --c) {
        x[static_cast<std::size_t>(c)] = lo + (static_cast<double>(r % static_cast<std::size_t>(probes)) + 0.5) * h;
        r /= static_cast<std::size_t>(probes);
      }
      xs.push_back(x);
    }
  }

  double best = 0.0;
  for (const auto& x : xs) {
    double s = 0.0;
    for (std::size_t k = 0; k < ys.size(); ++k)
      if (wy[k] > 0.0) s += wy[k] * std::pow(std::abs(g(x, ys[k])), q);
    best = std::max(best, s);
  }
  return best;
}

CorrelationScaling verify_corineq_scaling(const PairKernel& g, const BaseMeasure& measure, int p, double gamma,
                                          const std::vector<int>& n_values, std::size_t samples,
                                          std::uint64_t seed, int workers) {
  require(p >= 1 && p <= 4, ErrorKind::configuration, "p must be in 1..4");
  require(gamma >= 0.5 && gamma < 1.0, ErrorKind::configuration, "gamma must be in [1/2, 1)");
  require(!n_values.empty(), ErrorKind::configuration, "n_values is empty");
  for (int n : n_values) require(n >= p, ErrorKind::configuration, "every N must be >= p");

  CorrelationScaling rep;
  rep.p = p;
  rep.gamma = gamma;
  rep.n_values = n_values;
  const int fl = static_cast<int>(std::floor(gamma * p));
  const int cl = static_cast<int>(std::ceil(gamma * p));
  rep.rhs_exponent = p - 1 - fl;
  rep.lp_term = sup_norm_power(g, measure, p);
  const int q2 = 2 * (p - cl);
  rep.floor_term = q2 > 0 ? std::pow(sup_norm_power(g, measure, q2), static_cast<double>(p) / q2) : 0.0;

  for (int n : n_values) rep.lhs.push_back(moment_monte_carlo(g, measure, n, p, samples, seed, workers));

  auto unit = [&](int n) { return std::pow(static_cast<double>(n), -rep.rhs_exponent) * rep.lp_term + rep.floor_term; };
  const double u0 = unit(n_values.front());
  rep.constant = u0 > 0.0 ? rep.lhs.front().mean / u0 : 0.0;
  const double c_hi = u0 > 0.0 ? (rep.lhs.front().mean + 3.0 * rep.lhs.front().std_error) / u0 : 0.0;
  for (std::size_t k = 0; k < n_values.size(); ++k) {
    rep.rhs.push_back(rep.constant * unit(n_values[k]));
    if (rep.constant > 0.0) rep.constant_drift = std::max(rep.constant_drift, rep.lhs[k].mean / rep.rhs.back());
    if (rep.lhs[k].mean - 3.0 * rep.lhs[k].std_error > c_hi * unit(n_values[k])) rep.bounded = false;
  }

  // lhs ~ A N^{-a} + B: weighted least squares in (A, B) on a grid of a
  double max_se = 0.0;
  for (const auto& l : rep.lhs) max_se = std::max(max_se, l.std_error);
  if (n_values.size() < 3) {
    rep.inconclusive = true;
    return rep;
  }
  double best = std::numeric_limits<double>::infinity(), best_a = 0.0, best_A = 0.0, best_B = 0.0;
  for (int step = 5; step <= 400; ++step) {
    const double a = 0.01 * step;
    double s00 = 0, s01 = 0, s11 = 0, t0 = 0, t1 = 0;
    for (std::size_t k = 0; k < n_values.size(); ++k) {
      const double se = std::max(rep.lhs[k].std_error, 1e-300);
      const double w = 1.0 / (se * se);
      const double f = std::pow(static_cast<double>(n_values[k]), -a);
      s00 += w * f * f;
      s01 += w * f;
      s11 += w;
      t0 += w * f * rep.lhs[k].mean;
      t1 += w * rep.lhs[k].mean;
    }
    const double det = s00 * s11 - s01 * s01;
    if (std::abs(det) < 1e-300) continue;
    const double A = (t0 * s11 - t1 * s01) / det, B = (s00 * t1 - s01 * t0) / det;
    double chi = 0.0;
    for (std::size_t k = 0; k < n_values.size(); ++k) {
      const double se = std::max(rep.lhs[k].std_error, 1e-300);
      const double r = (rep.lhs[k].mean - A * std::pow(static_cast<double>(n_values[k]), -a) - B) / se;
      chi += r * r;
    }
    if (chi < best) {
      best = chi;
      best_a = a;
      best_A = A;
      best_B = B;
    }
  }
  rep.fitted_exponent = best_a;
  rep.fitted_floor = best_B;
  const double dependent = std::abs(best_A) * std::pow(static_cast<double>(n_values.front()), -best_a);
  rep.inconclusive = dependent < 3.0 * max_se;
  rep.exponent_ok = rep.inconclusive || best_a >= rep.rhs_exponent - 0.3;
  return rep;
}

}  // namespace loggas
