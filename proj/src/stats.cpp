#include "billiards/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "billiards/error.hpp"
#include "billiards/exp_sums.hpp"

namespace billiards {

namespace cdf {

double rayleigh(double r) { return r <= 0.0 ? 0.0 : -std::expm1(-0.5 * r * r); }

double std_normal(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double uniform01(double x) { return std::clamp(x, 0.0, 1.0); }

}  // namespace cdf

double kolmogorov_q(double lambda) {
  constexpr double kCut = 1e-10;
  if (lambda <= 0.0) return 1.0;
  if (lambda < 1.0) {
    // Jacobi-theta form, fast for small lambda.
    const double c = std::numbers::pi * std::numbers::pi / (8.0 * lambda * lambda);
    double sum = 0.0;
    for (int k = 1;; ++k) {
      const double m = 2.0 * k - 1.0;
      const double term = std::exp(-m * m * c);
      sum += term;
      if (term < kCut) break;
    }
    return std::clamp(1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * sum, 0.0, 1.0);
  }
  double sum = 0.0;
  for (int k = 1;; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += (k % 2 == 1) ? term : -term;
    if (term < kCut) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

KsResult ks_test_sorted(std::span<const double> sorted, const Cdf& cdf) {
  if (sorted.size() < 8) throw InvalidInput("KS test needs at least 8 samples");
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    const double f = cdf(sorted[i]);
    d = std::max({d, f - static_cast<double>(i) / n,
                  static_cast<double>(i + 1) / n - f});
  }
  return {d, kolmogorov_q(std::sqrt(n) * d)};
}

KsResult ks_test(std::span<const double> samples, const Cdf& cdf) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  return ks_test_sorted(sorted, cdf);
}

KsResult ks_two_sample(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 8 || b.size() < 8) {
    throw InvalidInput("two-sample KS needs at least 8 samples per side");
  }
  std::vector<double> x(a.begin(), a.end());
  std::vector<double> y(b.begin(), b.end());
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size());
  const double m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  const double eff = n * m / (n + m);
  return {d, kolmogorov_q(std::sqrt(eff) * d)};
}

ChiSquareResult chi_square_test(std::span<const std::int64_t> counts,
                                std::span<const double> probs) {
  if (counts.size() != probs.size()) {
    throw InvalidInput("counts and probabilities differ in length");
  }
  if (counts.size() < 2) throw InvalidInput("chi-square needs at least two cells");
  double psum = 0.0;
  std::int64_t total = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] < 0) throw InvalidInput("negative count");
    if (!(probs[i] >= 0.0)) throw InvalidInput("negative probability");
    psum += probs[i];
    total += counts[i];
  }
  if (std::abs(psum - 1.0) > 1e-9) throw InvalidInput("probabilities must sum to 1");
  if (total == 0) throw InvalidInput("no observations");

  const double ntot = static_cast<double>(total);
  std::vector<double> obs, expct;
  double acc_obs = 0.0, acc_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    acc_obs += static_cast<double>(counts[i]);
    acc_exp += ntot * probs[i];
    if (acc_exp >= 5.0) {
      obs.push_back(acc_obs);
      expct.push_back(acc_exp);
      acc_obs = acc_exp = 0.0;
    }
  }
  if (acc_exp > 0.0 || acc_obs > 0.0) {
    if (obs.empty()) {
      obs.push_back(acc_obs);
      expct.push_back(acc_exp);
    } else {
      obs.back() += acc_obs;
      expct.back() += acc_exp;
    }
  }

  ChiSquareResult res;
  res.cells = static_cast<int>(obs.size());
  res.degrees_of_freedom = res.cells - 1;
  if (res.degrees_of_freedom < 1) {
    throw InvalidInput("chi-square has zero degrees of freedom after merging");
  }
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const double diff = obs[i] - expct[i];
    res.statistic += diff * diff / expct[i];
  }
  res.p_value = res.statistic <= 0.0
                    ? 1.0
                    : boost::math::gamma_q(0.5 * res.degrees_of_freedom,
                                           0.5 * res.statistic);
  return res;
}

Histogram::Histogram(double lo, double hi, std::size_t bins)
    : lo_(lo), hi_(hi), width_((hi - lo) / static_cast<double>(bins)),
      weights_(bins, 0.0) {
  if (!(hi > lo) || bins == 0) throw InvalidInput("histogram needs lo < hi and bins > 0");
}

double Histogram::edge(std::size_t i) const {
  return i == weights_.size() ? hi_ : lo_ + width_ * static_cast<double>(i);
}

std::size_t Histogram::bin_of(double x) const {
  const auto b = static_cast<std::size_t>((x - lo_) / width_);
  return std::min(b, weights_.size() - 1);
}

void Histogram::add_point(double x, double weight) {
  if (x < lo_) {
    underflow_ += weight;
  } else if (x >= hi_) {
    overflow_ += weight;
  } else {
    weights_[bin_of(x)] += weight;
  }
}

void Histogram::add_uniform(double a, double b, double weight) {
  if (a > b) std::swap(a, b);
  const double len = b - a;
  if (!(len > 0.0)) {
    add_point(a, weight);
    return;
  }
  const double density = weight / len;
  if (a < lo_) underflow_ += density * (std::min(b, lo_) - a);
  if (b > hi_) overflow_ += density * (b - std::max(a, hi_));
  const double ca = std::max(a, lo_);
  const double cb = std::min(b, hi_);
  if (!(cb > ca)) return;
  std::size_t i = bin_of(ca);
  const std::size_t last = bin_of(cb);
  for (; i <= last; ++i) {
    const double overlap = std::min(cb, edge(i + 1)) - std::max(ca, edge(i));
    if (overlap > 0.0) weights_[i] += density * overlap;
  }
}

void Histogram::merge(const Histogram& other) {
  if (other.weights_.size() != weights_.size() || other.lo_ != lo_ || other.hi_ != hi_) {
    throw InvalidInput("cannot merge histograms with different binning");
  }
  for (std::size_t i = 0; i < weights_.size(); ++i) weights_[i] += other.weights_[i];
  underflow_ += other.underflow_;
  overflow_ += other.overflow_;
}

double Histogram::total() const {
  return std::accumulate(weights_.begin(), weights_.end(), 0.0) + underflow_ + overflow_;
}

WeightedSamples::WeightedSamples(std::vector<double> values, std::vector<double> weights) {
  if (values.size() != weights.size()) throw InvalidInput("values and weights differ in length");
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return values[i] < values[j]; });
  values_.reserve(values.size());
  weights_.reserve(values.size());
  for (std::size_t i : order) {
    if (!(weights[i] >= 0.0)) throw InvalidInput("weights must be nonnegative");
    values_.push_back(values[i]);
    weights_.push_back(weights[i]);
    total_ += weights[i];
  }
}

double total_weight(const EmpiricalDistribution& dist) {
  return std::visit([](const auto& d) { return d.total(); }, dist);
}

double ks_distance(const EmpiricalDistribution& dist, const Cdf& cdf) {
  if (const auto* h = std::get_if<Histogram>(&dist)) {
    const double total = h->total();
    if (!(total > 0.0)) throw InvalidInput("empty histogram");
    double acc = h->underflow();
    double d = std::abs(acc / total - cdf(h->lo()));
    for (std::size_t i = 0; i < h->bins(); ++i) {
      acc += h->weights()[i];
      d = std::max(d, std::abs(acc / total - cdf(h->edge(i + 1))));
    }
    return d;
  }
  const auto& s = std::get<WeightedSamples>(dist);
  if (!(s.total() > 0.0)) throw InvalidInput("empty sample");
  const auto& v = s.values();
  const auto& w = s.weights();
  KahanSum acc;
  double d = 0.0;
  std::size_t i = 0;
  while (i < v.size()) {
    const double x = v[i];
    const double before = acc.value() / s.total();
    while (i < v.size() && v[i] == x) acc.add(w[i++]);
    const double after = acc.value() / s.total();
    const double f = cdf(x);
    d = std::max({d, std::abs(f - before), std::abs(f - after)});
  }
  return d;
}

// Bisection cap. Beyond it the estimate is at round-off and refining only
// multiplies the cost.
constexpr unsigned kIntegrateDepth = 15;

double integrate(const Density& f, double a, double b, double tol) {
  using boost::math::quadrature::gauss_kronrod;
  double err = 0.0;
  return gauss_kronrod<double, 31>::integrate(f, a, b, kIntegrateDepth, tol, &err);
}

constexpr double kCdfPieceTol = 1e-12;

std::vector<double> numeric_cdf_at(const Density& density, double origin,
                                   std::span<const double> points) {
  using boost::math::quadrature::gauss_kronrod;
  std::vector<double> out(points.size());
  double prev = origin;
  double acc = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i] < prev) throw InvalidInput("points must be ascending");
    if (points[i] > prev) {
      // CDF values are O(1), so the per-piece target is absolute. Short pieces
      // have error estimates at the round-off of the density itself, which a
      // relative target would chase down to the maximum depth.
      double err = 0.0;
      double piece = gauss_kronrod<double, 15>::integrate(density, prev, points[i], 0, 0.0, &err);
      if (err > kCdfPieceTol) {
        piece = gauss_kronrod<double, 15>::integrate(density, prev, points[i], 10, 1e-12, &err);
      }
      acc += piece;
      prev = points[i];
    }
    out[i] = acc;
  }
  return out;
}

}  // namespace billiards
