#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "billiards/random.hpp"

namespace billiards {

// beta_0 >= beta_1 >= ... >= beta_N > 0, normalized to sum to one, with
//   lambda_i = beta_i / (beta_0 + ... + beta_i)
//   mu_i     = beta_{i+1} / (beta_0 + ... + beta_i),   i < N.
struct BoundaryLayer {
  std::vector<double> betas;
  std::vector<double> lambdas;
  std::vector<double> mus;

  std::size_t depth() const { return betas.size() - 1; }  // N
};

BoundaryLayer derive_rates(std::vector<double> betas);

// p_0..p_N for incoming memory ell < 0. Index k is the site at which the
// memory changes sign; p_N = exp(-ell^2 / (2 mu_{N-1})).
std::vector<double> level_probabilities(double ell, const BoundaryLayer& layer);

// Same, from an arbitrary positive, pairwise distinct mu_0..mu_{N0-1}.
std::vector<double> level_probabilities_discrete(double ell, const std::vector<double>& mus);

// Density and CDF of (2 * sum_{j >= k} lambda_j E_j)^{1/2}.
double exit_speed_density(std::size_t k, const std::vector<double>& lambdas, double r);
double exit_speed_cdf(std::size_t k, const std::vector<double>& lambdas, double r);

// A nonnegative summable sequence together with a certified bound on
// sum_{j > J} term(j).
struct SummableSequence {
  std::function<double(std::size_t)> term;
  std::function<double(std::size_t)> tail_after;

  // first * ratio^j, with the exact geometric tail.
  static SummableSequence geometric(double first, double ratio);
};

// Infinite noiseless layer, described by its lambda and mu sequences.
struct InfiniteLayer {
  SummableSequence lambdas;
  SummableSequence mus;

  // beta_j = (1 - r) r^j, j >= 0.
  static InfiniteLayer geometric(double r);
};

inline constexpr std::size_t kTruncationCap = 10000;

struct TruncatedLevels {
  std::vector<double> probs;  // p_0..p_{J+1}
  std::size_t cutoff = 0;     // J
};

// Truncates mu after the first J with sum_{j > J} mu_j < eps * ell^2 / 2;
// the last level absorbs every deeper one.
TruncatedLevels level_probabilities_truncated(double ell, const SummableSequence& mus,
                                              double eps, std::size_t cap = kTruncationCap);

struct NoisyLawParams {
  double gamma0 = 0.0;
  double gamma1 = 0.0;
  std::optional<double> gamma2;  // empty iff theta1 == 0
  double gamma3 = 1.0;
  double beta1_rate = 0.0;
  double beta2_rate = 0.0;
  double theta1 = 0.0;

  void validate() const;

  // Limits for a one-site noisy layer with v_0 = beta0 n, v_1 = beta1 n,
  // b_1 = theta1 n, c_0 = v_0 + b_1 and c_1 = n.
  static NoisyLawParams from_layer(double beta0, double beta1, double theta1);
};

inline constexpr std::size_t kNoisyMaxTerms = 100000;

// Probability that incoming memory ell < 0 changes sign at site 1.
double noisy_sign_change_prob(double ell, const NoisyLawParams& params, double tol = 1e-13);

namespace detail {
enum class NoisyRoute { Auto, ClosedForm, Uniformized };
// P(Y_k < t <= Y_k + E / a), Y_k a sum of k Exp(a) and k Exp(b), a != b.
double noisy_term(std::size_t k, double a, double b, double t, NoisyRoute route);
}  // namespace detail

double sample_reflection_noisy(double ell, const NoisyLawParams& params, Stream& rng);

struct NoiselessFinite {
  BoundaryLayer layer;
};

struct NoiselessTruncatedInfinite {
  InfiniteLayer layer;
  double eps = 1e-8;
};

struct Noisy {
  NoisyLawParams params;
};

enum class Endpoint { Zero = 0, One = 1 };

struct ReflectionLaw {
  std::variant<NoiselessFinite, NoiselessTruncatedInfinite, Noisy> kind;
  Endpoint orientation = Endpoint::Zero;

  static ReflectionLaw rayleigh(Endpoint end);
  static ReflectionLaw finite(const BoundaryLayer& layer, Endpoint end);
};

// Outgoing velocity for incoming velocity ell != 0. The law is stated for
// ell < 0 (the endpoint at 0); for ell > 0 it is mirrored. The result always
// has the sign opposite to ell.
double sample_reflection(double ell, const ReflectionLaw& law, Stream& rng);

}  // namespace billiards
