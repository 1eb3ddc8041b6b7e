#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "billiards/random.hpp"

namespace billiards {

// Minimum pairwise relative gap |a - b| / max(a, b) between means that the
// distinct-rate closed forms accept.
inline constexpr double kMinRelativeGap = 1e-6;

// Law of sum_j alpha_j * (E_1 + ... + E_{k_j}) with E i.i.d. mean-one
// exponentials: `means` are the alpha_j, `multiplicities` the k_j.
struct ExpSumSpec {
  std::vector<double> means;
  std::vector<int> multiplicities;  // empty means all ones

  ExpSumSpec() = default;
  explicit ExpSumSpec(std::vector<double> m) : means(std::move(m)) {}
  ExpSumSpec(std::vector<double> m, std::vector<int> k)
      : means(std::move(m)), multiplicities(std::move(k)) {}

  int multiplicity(std::size_t i) const {
    return multiplicities.empty() ? 1 : multiplicities[i];
  }
  bool all_simple() const;
  // Total number of exponential summands.
  int count() const;

  // Throws InvalidInput on non-positive means or multiplicities.
  void validate() const;
  // Throws DegenerateRates if two means are closer than kMinRelativeGap.
  void require_distinct() const;
};

// Density of the hypoexponential law (all multiplicities 1, distinct means).
// Terms are accumulated from log-magnitudes with compensated summation; when
// their cancellation costs more than 1e-13 relative accuracy the value is
// recomputed by uniformization, which sums only nonnegative terms.
double hypoexp_density(const ExpSumSpec& spec, double u);

// P(sum >= t) for the same law.
double hypoexp_tail(const ExpSumSpec& spec, double t);

// Density for arbitrary multiplicities over distinct means (Jasiulewicz and
// Kordecki). Reduces to hypoexp_density when every multiplicity is one.
double mixed_density(const ExpSumSpec& spec, double u);

// |LHS - RHS| of the partial fraction identity
//   1 / prod_j (z_j - z0) = sum_i 1 / ((z_i - z0) prod_{j != i} (z_j - z_i)).
double partial_fraction_check(std::span<const double> z, double z0);

double sample_exp_sum(const ExpSumSpec& spec, Stream& rng);

// A point T with P(sum > T) below `eps`, from the bound
// sum <= max(alpha) * Gamma(count, 1).
double tail_cutoff(const ExpSumSpec& spec, double eps);

// Compensated (Neumaier) accumulator.
class KahanSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace billiards
