#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace loggas::stats {

/// Welford accumulator.
class Running {
 public:
  void add(double x);
  std::size_t count() const { return n_; }
  double mean() const { return mean_; }
  double variance() const;  // unbiased
  double std_error() const;

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

double mean(std::span<const double> xs);
double std_error(std::span<const double> xs);

/// Half-width of the percentile bootstrap interval for the mean.
double bootstrap_mean_halfwidth(std::span<const double> xs, int resamples, std::uint64_t seed,
                                double level = 0.95);

/// Kish effective sample size (sum w)^2 / sum w^2.
double effective_sample_size(std::span<const double> weights);

/// Standard error of a correlated series' mean via non-overlapping batch means.
double batch_means_std_error(std::span<const double> xs, std::size_t batches = 32);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_std_error = 0.0;
  std::vector<double> residuals;
};

/// Ordinary least squares y = intercept + slope * x. Needs at least two distinct x.
LinearFit fit_line(std::span<const double> x, std::span<const double> y);

/// Log-log slope of |y| against x.
LinearFit fit_power_law(std::span<const double> x, std::span<const double> y);

struct ChiSquare {
  double statistic = 0.0;
  double p_value = 1.0;
  int dof = 0;
};

ChiSquare chi_square_gof(std::span<const std::size_t> observed, std::span<const double> probabilities);

/// Kolmogorov-Smirnov distance between the empirical law of `xs` and `cdf`.
double ks_distance(std::vector<double> xs, const std::function<double(double)>& cdf);

/// Asymptotic KS p-value for distance d at effective sample size n.
double ks_p_value(double d, double n);

double normal_quantile(double p);

}  // namespace loggas::stats
