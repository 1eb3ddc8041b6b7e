#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

namespace billiards {

using Cdf = std::function<double(double)>;
using Density = std::function<double(double)>;

namespace cdf {
// 1 - exp(-r^2 / 2) for r >= 0, zero below.
double rayleigh(double r);
double std_normal(double x);
double uniform01(double x);
}  // namespace cdf

struct KsResult {
  double d = 0.0;
  double p_value = 1.0;
};

// Upper tail of the Kolmogorov distribution, P(K > lambda); the series is
// cut once its next term drops below 1e-10.
double kolmogorov_q(double lambda);

// One-sample KS against a continuous reference. Needs at least 8 samples.
KsResult ks_test(std::span<const double> samples, const Cdf& cdf);
// Same, when the sample is already sorted ascending (not re-checked).
KsResult ks_test_sorted(std::span<const double> sorted, const Cdf& cdf);

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b);

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
  int degrees_of_freedom = 0;
  int cells = 0;  // after merging
};

// Pearson test. Adjacent cells are merged left to right until each merged
// cell expects at least 5 counts; a short remainder joins the last cell.
ChiSquareResult chi_square_test(std::span<const std::int64_t> counts,
                                std::span<const double> probs);

// Time-weighted histogram with explicit under/overflow mass. Within a bin
// the mass is treated as uniformly spread.
class Histogram {
 public:
  Histogram(double lo, double hi, std::size_t bins);

  void add_point(double x, double weight);
  // Spreads `weight` uniformly over [min(a,b), max(a,b)]; a point mass when
  // a == b.
  void add_uniform(double a, double b, double weight);
  void merge(const Histogram& other);

  std::size_t bins() const { return weights_.size(); }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double edge(std::size_t i) const;
  const std::vector<double>& weights() const { return weights_; }
  double underflow() const { return underflow_; }
  double overflow() const { return overflow_; }
  double total() const;

 private:
  std::size_t bin_of(double x) const;

  double lo_;
  double hi_;
  double width_;
  std::vector<double> weights_;
  double underflow_ = 0.0;
  double overflow_ = 0.0;
};

// Raw samples with nonnegative weights, kept sorted by value.
class WeightedSamples {
 public:
  WeightedSamples() = default;
  WeightedSamples(std::vector<double> values, std::vector<double> weights);

  const std::vector<double>& values() const { return values_; }
  const std::vector<double>& weights() const { return weights_; }
  double total() const { return total_; }
  std::size_t size() const { return values_.size(); }

 private:
  std::vector<double> values_;
  std::vector<double> weights_;
  double total_ = 0.0;
};

using EmpiricalDistribution = std::variant<Histogram, WeightedSamples>;

double total_weight(const EmpiricalDistribution& dist);

// Sup-distance between the normalized empirical CDF and `cdf`. For a
// histogram the empirical CDF is compared at every bin edge (linear inside
// bins); for weighted samples the comparison is exact at every atom.
double ks_distance(const EmpiricalDistribution& dist, const Cdf& cdf);

// Adaptive Gauss-Kronrod (31 point) integral over a finite interval.
double integrate(const Density& f, double a, double b, double tol = 1e-12);

// CDF of `density` at every point of the ascending sequence `points`,
// integrating piecewise from `origin`.
std::vector<double> numeric_cdf_at(const Density& density, double origin,
                                   std::span<const double> points);

}  // namespace billiards
