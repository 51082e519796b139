#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mslab/laws.hpp"
#include "mslab/microstates.hpp"
#include "mslab/random.hpp"

namespace mslab {

/// Monte Carlo estimate of a measure: p_hat * reference measure.
struct VolumeEstimate {
  std::uint64_t hits = 0;
  std::uint64_t samples = 0;
  int n = 1;
  double p_hat = 0.0;
  double std_error = 0.0;
  double log_reference = 0.0;
  double log_measure = 0.0;         // -inf when hits == 0
  double log_measure_per_N2 = 0.0;  // -inf when hits == 0
  /// One-sided 95% upper bound on p when hits == 0 (rule of three), else p_hat.
  double p_upper95 = 0.0;
  /// Base failed a marginal test, so the orbital set is empty and p is 0 without sampling.
  bool forced_zero = false;
  std::vector<std::string> warnings;
};

VolumeEstimate make_volume_estimate(std::uint64_t hits, std::uint64_t samples, double log_reference, int n);

enum class UnitarySampler { Haar, RotatedSpecialUnitary };

UnitaryTuple sample_unitary_tuple(int count, int n, StreamEngine& rng, UnitarySampler sampler = UnitarySampler::Haar);

struct SamplingOptions {
  std::uint64_t samples = 1000;
  RandomSeed seed;
  int workers = 1;
  UnitarySampler sampler = UnitarySampler::Haar;
};

/// Groups of `base` that fail their own marginal microstate test (with cut-off R).
std::vector<int> failing_marginals(const std::vector<HermitianTuple>& base, const NCLaw& law,
                                   const MicrostateParams& params);

/// Per-sample orbital hit indicators; sample k draws its unitaries from seed.child(k).
std::vector<std::uint8_t> orbital_hits(const std::vector<HermitianTuple>& base, const NCLaw& law,
                                       const MicrostateParams& params, const SamplingOptions& options);

/// Haar probability of the orbital microstate set of `base`.
VolumeEstimate orbital_hit_probability(const std::vector<HermitianTuple>& base, const NCLaw& law,
                                       const MicrostateParams& params, const SamplingOptions& options);

/// How base tuples are chosen for the sup over bases.
struct BaseTupleStrategy {
  enum class Kind { Fixed, Diagonalized, BestOfRandom };
  Kind kind = Kind::Diagonalized;
  std::vector<std::vector<HermitianTuple>> fixed;  // candidate bases for Kind::Fixed
  int count = 1;                                   // candidates for Kind::BestOfRandom
  std::uint64_t budget = kDefaultRejectionCap;     // membership attempts per group

  static BaseTupleStrategy fixed_bases(std::vector<std::vector<HermitianTuple>> bases);
  static BaseTupleStrategy diagonalized();
  static BaseTupleStrategy best_of_random(int k, std::uint64_t budget = kDefaultRejectionCap);
  std::string describe() const;
};

/// Single-variable group microstate with eigenvalues at quantiles (k - 1/2)/N.
HermitianTuple quantile_diagonal(const ScalarDistribution& d, int n);
std::vector<HermitianTuple> diagonalized_base(const NCLaw& law, int n);

struct NuSample {
  std::vector<HermitianTuple> tuples;
  std::vector<std::uint64_t> attempts;  // membership tests per group
};

/// One draw from nu_R: per group, Lebesgue-uniform on Gamma_R(X_i; N, m, delta) by
/// rejection from the operator-norm ball. Group g uses seed.child(g).
NuSample sample_nu_R(const std::vector<NCLaw>& marginals, const MicrostateParams& params, const RandomSeed& seed,
                     std::uint64_t budget = kDefaultRejectionCap);

/// Marginal laws of the groups of a joint law.
std::vector<NCLaw> group_marginals(const NCLaw& law);

/// Stream tags separating the uses of one seed.
namespace stream_tag {
inline constexpr std::uint64_t kCandidate = 1;
inline constexpr std::uint64_t kHaar = 2;
inline constexpr std::uint64_t kVolume = 3;
inline constexpr std::uint64_t kFubiniJoint = 4;
inline constexpr std::uint64_t kFubiniFraction = 5;
inline constexpr std::uint64_t kFubiniNu = 6;
inline constexpr std::uint64_t kFubiniInner = 7;
inline constexpr std::uint64_t kCloud = 8;
}  // namespace stream_tag

struct CandidateBases {
  std::vector<std::vector<HermitianTuple>> bases;
  std::vector<std::uint64_t> attempts;  // membership tests spent building each candidate
};

/// Base tuples proposed by a strategy; best_of_random candidate j is drawn from
/// seed.derive(kCandidate, j).
CandidateBases candidate_bases(const BaseTupleStrategy& strategy, const NCLaw& law, const MicrostateParams& params,
                               const RandomSeed& seed);

struct ChiOrbResult {
  std::size_t best_index = 0;
  std::vector<HermitianTuple> best_base;
  VolumeEstimate best;
  std::vector<VolumeEstimate> candidates;
  std::vector<std::uint64_t> candidate_attempts;
};

/// max over candidate bases of the orbital log-volume per N^2. Candidate j uses
/// seed.derive(kCandidate, j) to build its base and seed.derive(kHaar, j) for the unitaries.
ChiOrbResult chi_orb_bar_estimate(const BaseTupleStrategy& strategy, const NCLaw& law, const MicrostateParams& params,
                                  const SamplingOptions& options);

struct LebesgueEstimate {
  VolumeEstimate volume;
  /// log_measure / N^2 + (sum_i r(i) / 2) log N.
  double chi_proxy = 0.0;
};

/// Lebesgue measure of Gamma_R(law; N, m, delta): uniform samples from the product of
/// Frobenius balls of radius R sqrt(N), one per variable.
LebesgueEstimate lebesgue_volume_estimate(const NCLaw& law, const MicrostateParams& params,
                                          const SamplingOptions& options);

struct FubiniRecord {
  double lhs = 0.0;
  double lhs_se = 0.0;
  std::uint64_t lhs_hits = 0;
  double rhs = 0.0;
  double rhs_se = 0.0;
  std::vector<double> group_fraction;
  std::vector<double> group_fraction_se;
  double inner_mean = 0.0;
  double inner_se = 0.0;
  double z = 0.0;
  std::uint64_t outer = 0;
  std::uint64_t inner = 0;
};

/// Both sides of the Fubini identity for mu = uniform on the product of
/// operator-norm balls:
///   LHS = P[(U, A) : Phi_N(U, A) in Gamma_R(joint)]
///   RHS = prod_i P[A_i in Gamma_R(X_i)] * E_{nu_R}[ Haar(Gamma_orb(A)) ].
FubiniRecord fubini_check(const std::vector<NCLaw>& marginals, const NCLaw& joint, const MicrostateParams& params,
                          std::uint64_t outer, std::uint64_t inner, const RandomSeed& seed, int workers = 1,
                          std::uint64_t budget = kDefaultRejectionCap);

struct SubadditivityReport {
  std::uint64_t samples = 0;
  std::uint64_t full_hits = 0;
  std::uint64_t implication_failures = 0;
};

/// For each sampled unitary tuple that is a hit for the full family, checks that the
/// sub-tuples are hits for each listed subfamily under the restricted law.
SubadditivityReport check_subfamily_hits(const std::vector<HermitianTuple>& base, const NCLaw& law,
                                         const MicrostateParams& params,
                                         const std::vector<std::vector<int>>& subfamilies,
                                         const SamplingOptions& options);

/// Parameters of the operator-norm cut-off comparison for (m, delta) at radius R > rho:
///   L = max((rho^{2m} + 1)^{1/2m}, R),  delta' < min(1, delta/2),
///   m' = smallest even m' >= m with R((rho/R)^{m'} + delta'/R^{m'})^{1/m} < delta/(2 m L^{m-1}).
struct TruncationParameters {
  double rho = 0.0;
  double radius = 0.0;
  int m = 1;
  double delta = 0.0;
  double L = 0.0;
  double delta_prime = 0.0;
  int m_prime = 0;
  /// delta / (2 m L^{m-1}).
  double residual_bound = 0.0;
  /// R((rho/R)^{m'} + delta'/R^{m'})^{1/m}.
  double residual_estimate = 0.0;
};

/// delta' = fraction * min(1, delta/2) with fraction in (0, 1). Throws InvalidInput
/// when R <= rho or when no even m' <= kMaxLawDegree works.
TruncationParameters truncation_parameters(double rho, double radius, int m, double delta, double fraction = 0.96);

struct TruncationReport {
  TruncationParameters parameters;
  std::uint64_t samples = 0;
  /// Samples lying in Gamma_orb at (m', delta') around the untruncated base.
  std::uint64_t premise_hits = 0;
  /// Samples where f_R actually changed some matrix.
  std::uint64_t truncated = 0;
  std::uint64_t truncated_premise_hits = 0;
  /// Premise hits whose truncated tuple fails Gamma_orb at (m, delta).
  std::uint64_t conclusion_failures = 0;
  /// Premise hits with some ||A - f_R(A)||_m >= residual_bound.
  std::uint64_t residual_failures = 0;
  double max_residual = 0.0;
  double max_op_norm = 0.0;
};

/// Samples bases from the law's quantile-diagonal microstates with the largest
/// eigenvalue of each matrix moved to +-spike (spike <= 0 leaves it alone),
/// conjugated by independent Haar unitaries, and checks the cut-off implication:
/// membership at (m', delta') implies membership of (f_R(A_i)) at (m, delta).
/// `law` must cover degree m'.
TruncationReport truncation_check(const NCLaw& law, const TruncationParameters& tp, int n, double spike,
                                  const SamplingOptions& options);

}  // namespace mslab
