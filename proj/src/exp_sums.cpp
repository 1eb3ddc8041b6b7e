#include "billiards/exp_sums.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/binomial.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "billiards/error.hpp"

namespace billiards {

namespace {

constexpr double kClampRelTol = 1e-12;
constexpr double kTailTol = 1e-9;
constexpr double kCancelTol = 1e-13;
constexpr double kUniformizeTol = 1e-17;
constexpr std::size_t kUniformizeMaxSteps = 10000000;

bool too_close(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 || std::abs(a - b) <= kMinRelativeGap * scale;
}

std::vector<double> rates_of(const ExpSumSpec& spec) {
  std::vector<double> r(spec.means.size());
  std::transform(spec.means.begin(), spec.means.end(), r.begin(),
                 [](double a) { return 1.0 / a; });
  return r;
}

void require_simple(const ExpSumSpec& spec) {
  spec.validate();
  if (!spec.all_simple()) {
    throw InvalidInput("closed form needs every multiplicity equal to one");
  }
  spec.require_distinct();
}

// Signed coefficient prod_{i != j} r_i / (r_i - r_j) stored as log|.| and a
// sign; multiplying by exp(-r_j t) gives the tail term, and by r_j the
// density term.
struct Coefficient {
  double log_mag;
  double sign;
};

std::vector<Coefficient> coefficients(const std::vector<double>& r) {
  std::vector<Coefficient> out(r.size());
  for (std::size_t j = 0; j < r.size(); ++j) {
    double log_mag = 0.0;
    double sign = 1.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i == j) continue;
      const double diff = r[i] - r[j];
      log_mag += std::log(r[i]) - std::log(std::abs(diff));
      if (diff < 0) sign = -sign;
    }
    out[j] = {log_mag, sign};
  }
  return out;
}

// Phases visited in order with rates r; the chain is watched on a Poisson
// clock of rate max(r) and every term is nonnegative. Returns the density
// at u, or P(sum > u) when `tail` is set.
double uniformized(const std::vector<double>& r, double u, bool tail) {
  const double lam = *std::max_element(r.begin(), r.end());
  const double mean = lam * u;
  const std::size_t m = r.size();
  if (mean == 0.0) return tail ? 1.0 : (m == 1 ? r[0] : 0.0);
  std::vector<double> pi(m, 0.0), next(m);
  pi[0] = 1.0;
  KahanSum sum;
  for (std::size_t n = 0;; ++n) {
    const double w = std::exp(-mean + n * std::log(mean) - std::lgamma(n + 1.0));
    double mass = 0.0;
    if (tail) {
      for (double x : pi) mass += x;
    } else {
      mass = pi[m - 1] * r[m - 1];
    }
    sum.add(w * mass);
    // Past the Poisson mode the remaining weights fall geometrically.
    if (static_cast<double>(n) > mean) {
      const double ratio = mean / (n + 1.0);
      const double rest = w * ratio / (1.0 - ratio) * (tail ? 1.0 : lam);
      if (rest <= kUniformizeTol * sum.value()) break;
    }
    if (n > kUniformizeMaxSteps) throw NoConvergence("uniformized exponential sum did not converge");
    for (std::size_t i = 0; i < m; ++i) {
      next[i] = pi[i] * (1.0 - r[i] / lam) + (i > 0 ? pi[i - 1] * r[i - 1] / lam : 0.0);
    }
    pi.swap(next);
  }
  return sum.value();
}

// True when the alternating closed form has lost more than kCancelTol of
// relative accuracy.
bool cancelled(double value, double scale, std::size_t terms) {
  const double err = 4.0 * terms * std::numeric_limits<double>::epsilon() * scale;
  return err > kCancelTol * std::abs(value);
}

}  // namespace

bool ExpSumSpec::all_simple() const {
  return std::all_of(multiplicities.begin(), multiplicities.end(),
                     [](int k) { return k == 1; });
}

int ExpSumSpec::count() const {
  int total = 0;
  for (std::size_t i = 0; i < means.size(); ++i) total += multiplicity(i);
  return total;
}

void ExpSumSpec::validate() const {
  if (means.empty()) throw InvalidInput("exponential sum needs at least one mean");
  if (!multiplicities.empty() && multiplicities.size() != means.size()) {
    throw InvalidInput("multiplicities and means differ in length");
  }
  for (std::size_t i = 0; i < means.size(); ++i) {
    if (!(means[i] > 0.0) || !std::isfinite(means[i])) {
      throw InvalidInput("mean " + std::to_string(i) + " must be positive");
    }
    if (multiplicity(i) < 1) {
      throw InvalidInput("multiplicity " + std::to_string(i) + " must be >= 1");
    }
  }
}

void ExpSumSpec::require_distinct() const {
  for (std::size_t i = 0; i < means.size(); ++i) {
    for (std::size_t j = i + 1; j < means.size(); ++j) {
      if (too_close(means[i], means[j])) {
        throw DegenerateRates("means " + std::to_string(i) + " and " +
                              std::to_string(j) + " are not separated");
      }
    }
  }
}

double hypoexp_density(const ExpSumSpec& spec, double u) {
  require_simple(spec);
  if (!(u >= 0.0)) throw InvalidInput("density argument must be >= 0");
  const auto r = rates_of(spec);
  if (r.size() == 1) return r[0] * std::exp(-r[0] * u);

  const auto coef = coefficients(r);
  KahanSum sum;
  double scale = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double term =
        coef[j].sign * std::exp(coef[j].log_mag + std::log(r[j]) - r[j] * u);
    sum.add(term);
    scale += std::abs(term);
  }
  double f = sum.value();
  if (cancelled(f, scale, r.size())) return uniformized(r, u, false);
  if (f < 0.0) {
    if (-f > kClampRelTol * scale) {
      throw DegenerateRates("hypoexponential density lost all precision");
    }
    f = 0.0;
  }
  return f;
}

double hypoexp_tail(const ExpSumSpec& spec, double t) {
  require_simple(spec);
  if (!(t >= 0.0)) throw InvalidInput("tail argument must be >= 0");
  const auto r = rates_of(spec);
  if (r.size() == 1) return std::exp(-r[0] * t);

  const auto coef = coefficients(r);
  KahanSum sum;
  double scale = 0.0;
  for (std::size_t j = 0; j < r.size(); ++j) {
    const double term = coef[j].sign * std::exp(coef[j].log_mag - r[j] * t);
    sum.add(term);
    scale += std::abs(term);
  }
  const double p = sum.value();
  if (cancelled(p, scale, r.size())) return std::clamp(uniformized(r, t, true), 0.0, 1.0);
  if (p < -kTailTol || p > 1.0 + kTailTol) {
    throw DegenerateRates("hypoexponential tail outside [0, 1]: " +
                          std::to_string(p));
  }
  return std::clamp(p, 0.0, 1.0);
}

double mixed_density(const ExpSumSpec& spec, double u) {
  spec.validate();
  spec.require_distinct();
  if (!(u >= 0.0)) throw InvalidInput("density argument must be >= 0");

  const std::size_t groups = spec.means.size();
  const auto lam = rates_of(spec);
  KahanSum total;
  double scale = 0.0;

  for (std::size_t i = 0; i < groups; ++i) {
    const int ki = spec.multiplicity(i);
    const int depth = ki - 1;
    // conv[s] = sum over compositions (m_l)_{l != i} with sum s of
    //   prod_l binom(k_l + m_l - 1, m_l) lam_l^{k_l} / (lam_l - lam_i)^{k_l + m_l}
    std::vector<double> conv(depth + 1, 0.0);
    conv[0] = 1.0;
    for (std::size_t l = 0; l < groups; ++l) {
      if (l == i) continue;
      const int kl = spec.multiplicity(l);
      const double diff = lam[l] - lam[i];
      std::vector<double> series(depth + 1);
      for (int m = 0; m <= depth; ++m) {
        series[m] = boost::math::binomial_coefficient<double>(kl + m - 1, m) *
                    std::pow(lam[l], kl) / std::pow(diff, kl + m);
      }
      std::vector<double> next(depth + 1, 0.0);
      for (int a = 0; a <= depth; ++a) {
        for (int b = 0; a + b <= depth; ++b) next[a + b] += conv[a] * series[b];
      }
      conv = std::move(next);
    }
    const double lead = std::pow(lam[i], ki) * std::exp(-lam[i] * u);
    for (int j = 1; j <= ki; ++j) {
      const double sign = ((ki - j) % 2 == 0) ? 1.0 : -1.0;
      const double term = lead * sign * std::pow(u, j - 1) /
                          boost::math::factorial<double>(j - 1) *
                          conv[ki - j];
      total.add(term);
      scale += std::abs(term);
    }
  }
  double f = total.value();
  if (f < 0.0) {
    if (-f > kClampRelTol * scale) {
      throw DegenerateRates("mixed density lost all precision");
    }
    f = 0.0;
  }
  return f;
}

double partial_fraction_check(std::span<const double> z, double z0) {
  if (z.size() < 2) throw InvalidInput("partial fraction check needs >= 2 points");
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (too_close(z[i], z0)) throw DegenerateRates("z0 coincides with a point");
    for (std::size_t j = i + 1; j < z.size(); ++j) {
      if (too_close(z[i], z[j])) throw DegenerateRates("coincident points");
    }
  }
  double lhs = 1.0;
  for (double zj : z) lhs /= (zj - z0);
  KahanSum rhs;
  for (std::size_t i = 0; i < z.size(); ++i) {
    double denom = z[i] - z0;
    for (std::size_t j = 0; j < z.size(); ++j) {
      if (j != i) denom *= (z[j] - z[i]);
    }
    rhs.add(1.0 / denom);
  }
  return std::abs(lhs - rhs.value());
}

double sample_exp_sum(const ExpSumSpec& spec, Stream& rng) {
  spec.validate();
  double s = 0.0;
  for (std::size_t i = 0; i < spec.means.size(); ++i) {
    double g = 0.0;
    for (int m = 0; m < spec.multiplicity(i); ++m) g += rng.exponential();
    s += spec.means[i] * g;
  }
  return s;
}

double tail_cutoff(const ExpSumSpec& spec, double eps) {
  spec.validate();
  if (!(eps > 0.0 && eps < 1.0)) throw InvalidInput("eps must be in (0, 1)");
  const double amax = *std::max_element(spec.means.begin(), spec.means.end());
  return amax * boost::math::gamma_q_inv(static_cast<double>(spec.count()), eps);
}

}  // namespace billiards
