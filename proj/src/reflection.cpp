#include "billiards/reflection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "billiards/error.hpp"
#include "billiards/exp_sums.hpp"

namespace billiards {

namespace {

constexpr double kProbClamp = 1e-9;
constexpr double kMonotoneSlack = 1e-12;

void require_negative(double ell) {
  if (!(ell < 0.0) || !std::isfinite(ell)) {
    throw InvalidInput("incoming memory must be finite and negative");
  }
}

double clamp_prob(double p, const char* what) {
  if (p < -kProbClamp || p > 1.0 + kProbClamp) {
    throw DegenerateRates(std::string(what) + " outside [0, 1]: " + std::to_string(p));
  }
  return std::clamp(p, 0.0, 1.0);
}

ExpSumSpec suffix(const std::vector<double>& v, std::size_t from) {
  return ExpSumSpec(std::vector<double>(v.begin() + static_cast<std::ptrdiff_t>(from), v.end()));
}

double log_binomial(double n, double k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// int_0^t u^{j-1} exp(-c u) du, returned as a logarithm.
double log_partial_moment(int j, double c, double t) {
  const double x = c * t;
  if (x > 1.0) {
    const double gp = boost::math::gamma_p(static_cast<double>(j), x);
    return std::lgamma(static_cast<double>(j)) + std::log(gp) - j * std::log(c);
  }
  // t^j sum_m (-x)^m / (m! (j + m))
  double sum = 0.0;
  double pw = 1.0;
  for (int m = 0; m < 100000; ++m) {
    const double term = pw / (j + m);
    sum += term;
    if (m > std::abs(x) && std::abs(term) < 1e-18 * std::abs(sum)) break;
    pw *= -x / (m + 1);
  }
  return j * std::log(t) + std::log(sum);
}

struct TermValue {
  double value;
  double scale;
};

TermValue noisy_term_closed(std::size_t kk, double a, double b, double t) {
  const int k = static_cast<int>(kk);
  const double rates[2] = {a, b};
  const double prefix = k * (std::log(a) + std::log(b)) - a * t;
  KahanSum sum;
  double scale = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double d = rates[1 - i] - rates[i];
    const double c = rates[i] - a;
    for (int j = 1; j <= k; ++j) {
      const int power = 2 * k - j;
      double sign = ((k - j) % 2 == 0) ? 1.0 : -1.0;
      if (d < 0.0 && power % 2 == 1) sign = -sign;
      const double log_int = (c == 0.0) ? j * std::log(t) - std::log(static_cast<double>(j))
                                        : log_partial_moment(j, c, t);
      const double log_mag = prefix - std::lgamma(static_cast<double>(j)) + log_int +
                             log_binomial(2.0 * k - j - 1, k - j) -
                             power * std::log(std::abs(d));
      const double term = sign * std::exp(log_mag);
      sum.add(term);
      scale += std::abs(term);
    }
  }
  return {sum.value(), scale};
}

double noisy_term_uniformized(std::size_t kk, double a, double b, double t) {
  const double k = static_cast<double>(kk);
  const double big = std::max(a, b);
  const double p = std::min(a, b) / big;
  const double mean = big * t;
  const double log_p = std::log(p);
  const double log_q = p < 1.0 ? std::log1p(-p) : -std::numeric_limits<double>::infinity();
  const bool a_fast = a >= b;
  KahanSum sum;
  for (double m = 2.0 * k;; m += 1.0) {
    const double log_pois = m * std::log(mean) - mean - std::lgamma(m + 1.0);
    double log_rest;
    const double extra = m - 2.0 * k;  // failures among the slow trials
    const double fail_part = extra == 0.0 ? 0.0 : extra * log_q;
    if (a_fast) {
      // p * P(Bin(m - k - 1, p) = k - 1)
      log_rest = log_binomial(m - k - 1.0, k - 1.0) + k * log_p + fail_part;
    } else {
      // P(Bin(m - k, p) = k)
      log_rest = log_binomial(m - k, k) + k * log_p + fail_part;
    }
    const double term = std::exp(log_pois + log_rest);
    sum.add(term);
    if (!std::isfinite(log_rest) || (m > mean && term <= 1e-18 * sum.value())) break;
    if (m > 2.0 * k + 1e6) throw NoConvergence("uniformized series did not settle");
  }
  return sum.value();
}

std::size_t truncation_index(const SummableSequence& seq, double bound, std::size_t cap,
                             const char* what) {
  for (std::size_t j = 0; j < cap; ++j) {
    if (seq.tail_after(j) < bound) return j;
  }
  throw TruncationFailure(std::string(what) + " tail not below tolerance within " +
                          std::to_string(cap) + " terms");
}

double speed_from(const std::vector<double>& lambdas, std::size_t k, Stream& rng) {
  double s = 0.0;
  for (std::size_t j = k; j < lambdas.size(); ++j) s += lambdas[j] * rng.exponential();
  return std::sqrt(2.0 * s);
}

double sample_finite(double ell, const BoundaryLayer& layer, Stream& rng) {
  std::size_t level = 0;
  if (layer.depth() > 0) {
    const auto p = level_probabilities(ell, layer);
    const double u = rng.uniform();
    double acc = 0.0;
    level = p.size() - 1;
    for (std::size_t k = 0; k < p.size(); ++k) {
      acc += p[k];
      if (u < acc) {
        level = k;
        break;
      }
    }
  }
  return speed_from(layer.lambdas, level, rng);
}

double sample_truncated(double ell, const NoiselessTruncatedInfinite& law, Stream& rng) {
  const double t = 0.5 * ell * ell;
  const std::size_t jm = truncation_index(law.layer.mus, law.eps * t, kTruncationCap, "mu");
  // Race: level m wins iff Z_m < t <= Z_{m-1}, Z_m = sum_{j=m}^{J} mu_j E_j.
  std::vector<double> z(jm + 2, 0.0);
  for (std::size_t j = jm + 1; j-- > 0;) {
    z[j] = z[j + 1] + law.layer.mus.term(j) * rng.exponential();
  }
  std::size_t level = 0;
  for (std::size_t m = jm + 1; m >= 1; --m) {
    if (z[m - 1] >= t) {
      level = m;
      break;
    }
  }
  const std::size_t jl = std::max(
      truncation_index(law.layer.lambdas, law.eps, kTruncationCap, "lambda"), level);
  double s = 0.0;
  for (std::size_t j = level; j <= jl; ++j) s += law.layer.lambdas.term(j) * rng.exponential();
  return std::sqrt(2.0 * s);
}

}  // namespace

BoundaryLayer derive_rates(std::vector<double> betas) {
  if (betas.empty()) throw InvalidInput("layer needs at least one beta");
  double total = 0.0;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    if (!(betas[i] > 0.0) || !std::isfinite(betas[i])) {
      throw InvalidInput("beta " + std::to_string(i) + " must be positive");
    }
    if (i > 0 && betas[i] > betas[i - 1] * (1.0 + kMonotoneSlack)) {
      throw InvalidInput("betas must be nonincreasing (beta " + std::to_string(i) +
                         " exceeds its predecessor)");
    }
    total += betas[i];
  }
  BoundaryLayer layer;
  layer.betas.resize(betas.size());
  for (std::size_t i = 0; i < betas.size(); ++i) layer.betas[i] = betas[i] / total;

  KahanSum cum;
  for (std::size_t i = 0; i < betas.size(); ++i) {
    cum.add(layer.betas[i]);
    const double s = cum.value();
    layer.lambdas.push_back(i == 0 ? 1.0 : layer.betas[i] / s);
    if (i + 1 < betas.size()) layer.mus.push_back(layer.betas[i + 1] / s);
  }
  return layer;
}

std::vector<double> level_probabilities_discrete(double ell, const std::vector<double>& mus) {
  require_negative(ell);
  const std::size_t n0 = mus.size();
  std::vector<double> p(n0 + 1, 0.0);
  if (n0 == 0) {
    p[0] = 1.0;
    return p;
  }
  for (double m : mus) {
    if (!(m > 0.0) || !std::isfinite(m)) throw InvalidInput("mu must be positive");
  }
  ExpSumSpec(mus).require_distinct();
  const double t = 0.5 * ell * ell;
  // p_k = mu_{k-1} * density of sum_{j >= k-1} mu_j E_j at t.
  KahanSum upper;
  for (std::size_t k = 1; k <= n0; ++k) {
    const double pk = mus[k - 1] * hypoexp_density(suffix(mus, k - 1), t);
    p[k] = clamp_prob(pk, "level probability");
    upper.add(p[k]);
  }
  p[0] = clamp_prob(1.0 - upper.value(), "complementary level probability");
  return p;
}

std::vector<double> level_probabilities(double ell, const BoundaryLayer& layer) {
  return level_probabilities_discrete(ell, layer.mus);
}

double exit_speed_density(std::size_t k, const std::vector<double>& lambdas, double r) {
  if (k >= lambdas.size()) throw InvalidInput("level index beyond layer depth");
  if (!(r >= 0.0)) throw InvalidInput("speed must be nonnegative");
  return r * hypoexp_density(suffix(lambdas, k), 0.5 * r * r);
}

double exit_speed_cdf(std::size_t k, const std::vector<double>& lambdas, double r) {
  if (k >= lambdas.size()) throw InvalidInput("level index beyond layer depth");
  if (!(r >= 0.0)) throw InvalidInput("speed must be nonnegative");
  return 1.0 - hypoexp_tail(suffix(lambdas, k), 0.5 * r * r);
}

SummableSequence SummableSequence::geometric(double first, double ratio) {
  if (!(first > 0.0) || !(ratio > 0.0 && ratio < 1.0)) {
    throw InvalidInput("geometric sequence needs first > 0 and ratio in (0, 1)");
  }
  return {[=](std::size_t j) { return first * std::pow(ratio, static_cast<double>(j)); },
          [=](std::size_t j) {
            return first * std::pow(ratio, static_cast<double>(j + 1)) / (1.0 - ratio);
          }};
}

InfiniteLayer InfiniteLayer::geometric(double r) {
  if (!(r > 0.0 && r < 1.0)) throw InvalidInput("geometric layer ratio must be in (0, 1)");
  // Partial sums are 1 - r^{j+1}.
  InfiniteLayer layer;
  layer.lambdas.term = [=](std::size_t j) {
    const double rj = std::pow(r, static_cast<double>(j));
    return (1.0 - r) * rj / -std::expm1(static_cast<double>(j + 1) * std::log(r));
  };
  layer.lambdas.tail_after = [=](std::size_t j) {
    return std::pow(r, static_cast<double>(j + 1)) / (1.0 - r);
  };
  layer.mus.term = [=](std::size_t j) {
    const double rj1 = std::pow(r, static_cast<double>(j + 1));
    return (1.0 - r) * rj1 / -std::expm1(static_cast<double>(j + 1) * std::log(r));
  };
  layer.mus.tail_after = [=](std::size_t j) {
    return std::pow(r, static_cast<double>(j + 2)) / (1.0 - r);
  };
  return layer;
}

TruncatedLevels level_probabilities_truncated(double ell, const SummableSequence& mus,
                                              double eps, std::size_t cap) {
  require_negative(ell);
  if (!(eps > 0.0)) throw InvalidInput("eps must be positive");
  const double t = 0.5 * ell * ell;
  TruncatedLevels out;
  out.cutoff = truncation_index(mus, eps * t, cap, "mu");
  std::vector<double> head(out.cutoff + 1);
  for (std::size_t j = 0; j <= out.cutoff; ++j) head[j] = mus.term(j);
  out.probs = level_probabilities_discrete(ell, head);
  return out;
}

void NoisyLawParams::validate() const {
  if (!(theta1 >= 0.0) || !std::isfinite(theta1)) throw InvalidInput("theta1 must be >= 0");
  if (!(gamma0 > 0.0) || !(gamma1 > 0.0)) throw InvalidInput("gamma0 and gamma1 must be positive");
  if (!(gamma3 > 0.0 && gamma3 <= 1.0)) throw InvalidInput("gamma3 must lie in (0, 1]");
  if ((gamma3 == 1.0) != (theta1 == 0.0)) {
    throw InvalidInput("gamma3 equals 1 exactly when theta1 is 0");
  }
  if (gamma2.has_value() != (theta1 > 0.0)) {
    throw InvalidInput("gamma2 is finite exactly when theta1 > 0");
  }
  if (gamma2 && !(*gamma2 > 0.0)) throw InvalidInput("gamma2 must be positive");
  if (!(beta1_rate > 0.0)) throw InvalidInput("beta1 rate must be positive");
  if (!(beta2_rate >= 0.0) || ((beta2_rate == 0.0) != (theta1 == 0.0))) {
    throw InvalidInput("beta2 rate must be positive, or zero when theta1 is 0");
  }
}

NoisyLawParams NoisyLawParams::from_layer(double beta0, double beta1, double theta1) {
  const auto layer = derive_rates({beta0, beta1});
  const double b0 = layer.betas[0];
  const double b1 = layer.betas[1];
  if (!(theta1 >= 0.0) || !std::isfinite(theta1)) throw InvalidInput("theta1 must be >= 0");
  NoisyLawParams p;
  p.theta1 = theta1;
  p.beta1_rate = (b0 + theta1) / b1;
  p.beta2_rate = theta1 / b0;
  p.gamma0 = 2.0 * b0 / (b0 + theta1);
  p.gamma1 = 2.0 * b1 / (1.0 + theta1);
  if (theta1 > 0.0) p.gamma2 = 2.0 * b1 / (1.0 + theta1);
  p.gamma3 = 1.0 / (1.0 + theta1);
  return p;
}

namespace detail {

double noisy_term(std::size_t k, double a, double b, double t, NoisyRoute route) {
  if (k == 0) return std::exp(-a * t);
  if (!(a > 0.0 && b > 0.0) || a == b) throw InvalidInput("distinct positive rates required");
  if (route == NoisyRoute::Uniformized) return noisy_term_uniformized(k, a, b, t);
  const auto closed = noisy_term_closed(k, a, b, t);
  if (route == NoisyRoute::ClosedForm) return closed.value;
  // Accept the alternating closed form only while its round-off stays far
  // below the series tolerance.
  const double roundoff = closed.scale * 4.0 * static_cast<double>(k) *
                          std::numeric_limits<double>::epsilon();
  if (std::isfinite(closed.scale) && roundoff < 1e-17) return closed.value;
  return noisy_term_uniformized(k, a, b, t);
}

}  // namespace detail

double noisy_sign_change_prob(double ell, const NoisyLawParams& params, double tol) {
  require_negative(ell);
  params.validate();
  if (!(tol > 0.0)) throw InvalidInput("tol must be positive");
  const double t = 0.5 * ell * ell;
  const double a = params.beta1_rate;
  const double b = params.beta2_rate;
  if (b == 0.0) return std::exp(-a * t);

  const double q = -std::expm1(-a * t);
  const double pois_mean = std::max(a, b) * t;
  const bool equal = (a == b);
  const double x = a * t;

  KahanSum sum;
  sum.add(std::exp(-a * t));
  for (std::size_t k = 1; k <= kNoisyMaxTerms; ++k) {
    double term;
    if (equal) {
      const double kk = static_cast<double>(k);
      term = std::exp(2.0 * kk * std::log(x) - x - std::lgamma(2.0 * kk + 1.0));
    } else {
      term = detail::noisy_term(k, a, b, t, detail::NoisyRoute::Auto);
    }
    sum.add(term);
    // Remaining mass: each term is at most q^k, and also at most
    // P(Poisson(max(a, b) t) >= 2k).
    const double geometric_bound = std::pow(q, static_cast<double>(k + 1)) / (1.0 - q);
    const double poisson_bound =
        pois_mean * boost::math::gamma_p(2.0 * static_cast<double>(k), pois_mean);
    if (std::min(geometric_bound, poisson_bound) < tol) {
      return clamp_prob(sum.value(), "sign change probability");
    }
  }
  throw NoConvergence("sign change series did not reach tolerance");
}

double sample_reflection_noisy(double ell, const NoisyLawParams& params, Stream& rng) {
  // Batches of draws usually share the incoming velocity.
  thread_local struct {
    double ell = 0.0, a = -1.0, b = -1.0, p1 = 0.0;
  } memo;
  if (memo.ell != ell || memo.a != params.beta1_rate || memo.b != params.beta2_rate) {
    const double p1 = noisy_sign_change_prob(ell, params);
    memo = {ell, params.beta1_rate, params.beta2_rate, p1};
  }
  const double p1 = memo.p1;
  std::size_t visits = 1;
  if (params.gamma3 < 1.0) {
    visits += static_cast<std::size_t>(
        std::floor(std::log(rng.uniform_pos()) / std::log1p(-params.gamma3)));
  }
  double s = params.gamma1 * rng.exponential();
  for (std::size_t j = 1; j < visits; ++j) {
    s += params.gamma0 * rng.exponential();
    s += *params.gamma2 * rng.exponential();
  }
  if (rng.uniform() < p1) return std::sqrt(s);
  return std::sqrt(params.gamma0 * rng.exponential() + s);
}

ReflectionLaw ReflectionLaw::rayleigh(Endpoint end) {
  return finite(derive_rates({1.0}), end);
}

ReflectionLaw ReflectionLaw::finite(const BoundaryLayer& layer, Endpoint end) {
  return {NoiselessFinite{layer}, end};
}

double sample_reflection(double ell, const ReflectionLaw& law, Stream& rng) {
  if (ell == 0.0 || !std::isfinite(ell)) throw InvalidInput("incoming velocity must be nonzero");
  const double in = -std::abs(ell);
  const double speed = std::visit(
      [&](const auto& k) -> double {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, NoiselessFinite>) {
          return sample_finite(in, k.layer, rng);
        } else if constexpr (std::is_same_v<T, NoiselessTruncatedInfinite>) {
          return sample_truncated(in, k, rng);
        } else {
          return sample_reflection_noisy(in, k.params, rng);
        }
      },
      law.kind);
  return ell < 0.0 ? speed : -speed;
}

}  // namespace billiards
