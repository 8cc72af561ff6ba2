#include "loggas/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "loggas/errors.hpp"
#include "loggas/rng.hpp"

namespace loggas::stats {

void Running::add(double x) {
  ++n_;
  const double delta = x - mean_;
  mean_ += delta / static_cast<double>(n_);
  m2_ += delta * (x - mean_);
}

double Running::variance() const { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }

double Running::std_error() const {
  return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
}

double mean(std::span<const double> xs) {
  Running r;
  for (double x : xs) r.add(x);
  return r.mean();
}

double std_error(std::span<const double> xs) {
  Running r;
  for (double x : xs) r.add(x);
  return r.std_error();
}

double bootstrap_mean_halfwidth(std::span<const double> xs, int resamples, std::uint64_t seed, double level) {
  const std::size_t n = xs.size();
  if (n < 2 || resamples < 2) return 0.0;
  Stream stream(seed);
  std::vector<double> means(static_cast<std::size_t>(resamples));
  for (auto& m : means) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += xs[stream.index(n)];
    m = s / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  const double alpha = 0.5 * (1.0 - level);
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, means.size() - 1);
    return means[lo] + (pos - static_cast<double>(lo)) * (means[hi] - means[lo]);
  };
  return 0.5 * (quantile(1.0 - alpha) - quantile(alpha));
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

double batch_means_std_error(std::span<const double> xs, std::size_t batches) {
  const std::size_t n = xs.size();
  if (n < 2 * batches) return std_error(xs);
  const std::size_t len = n / batches;
  Running r;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += xs[i];
    r.add(s / static_cast<double>(len));
  }
  return r.std_error();
}

LinearFit fit_line(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size() && x.size() >= 2, ErrorKind::configuration, "fit_line needs >= 2 paired points");
  const double n = static_cast<double>(x.size());
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  require(sxx > 0.0, ErrorKind::configuration, "fit_line needs distinct abscissae");
  LinearFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    fit.residuals.push_back(r);
    rss += r * r;
  }
  fit.slope_std_error = x.size() > 2 ? std::sqrt(rss / (n - 2.0) / sxx) : 0.0;
  return fit;
}

LinearFit fit_power_law(std::span<const double> x, std::span<const double> y) {
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(std::abs(y[i])));
  }
  return fit_line(lx, ly);
}

ChiSquare chi_square_gof(std::span<const std::size_t> observed, std::span<const double> probabilities) {
  require(observed.size() == probabilities.size() && observed.size() >= 2, ErrorKind::configuration,
          "chi-square needs matching bins");
  const double total = static_cast<double>(std::accumulate(observed.begin(), observed.end(), std::size_t{0}));
  ChiSquare out;
  int used = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    const double expected = total * probabilities[i];
    if (expected <= 0.0) continue;
    const double d = static_cast<double>(observed[i]) - expected;
    out.statistic += d * d / expected;
    ++used;
  }
  out.dof = used - 1;
  boost::math::chi_squared dist(out.dof);
  out.p_value = boost::math::cdf(boost::math::complement(dist, out.statistic));
  return out;
}

double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf) {
  std::sort(xs.begin(), xs.end());
  const double n = static_cast<double>(xs.size());
  double d = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double f = cdf(xs[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

double ks_p_value(double d, double n) {
  // Kolmogorov limit law with the Stephens small-sample correction.
  const double sn = std::sqrt(n);
  const double lambda = (sn + 0.12 + 0.11 / sn) * d;
  if (lambda < 0.2) return 1.0;
  double q = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    q += (j % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-16) break;
  }
  return std::clamp(q, 0.0, 1.0);
}

double normal_quantile(double p) { return boost::math::quantile(boost::math::normal(), p); }

}  // namespace loggas::stats
