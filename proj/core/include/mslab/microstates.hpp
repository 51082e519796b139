#pragma once

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "mslab/laws.hpp"
#include "mslab/linalg.hpp"

namespace mslab {

/// (N, m, delta, R) for Gamma_R(.; N, m, delta). R = +inf disables the norm cut-off.
struct MicrostateParams {
  int n = 1;
  int m = 1;
  double delta = 0.1;
  double radius = std::numeric_limits<double>::infinity();

  MicrostateParams with_radius(double r) const {
    MicrostateParams p = *this;
    p.radius = r;
    return p;
  }
};

/// Slack on the operator-norm cut-off, absorbing rounding from conjugation.
inline constexpr double kNormSlack = 1e-12;

struct NormViolation {
  int group = 0;
  int index = 0;
  double norm = 0.0;
};

struct MembershipReport {
  bool member = false;
  /// Largest |tr_N(w) - tau(w)| over the words examined.
  double max_deviation = 0.0;
  std::optional<Word> worst_word;
  std::vector<NormViolation> norm_violations;
  /// Some operator norm fell in (R, R + kNormSlack].
  bool slack_consumed = false;
  /// Evaluation stopped at the first failing word.
  bool early_exit = false;
};

enum class Scan { Full, StopAtFirstFailure };

/// Membership in Gamma_R(law; N, m, delta): operator norms <= R and every word of
/// degree 1..m within delta (strict) of the law.
MembershipReport gamma_membership(const std::vector<HermitianTuple>& tuples, const NCLaw& law,
                                  const MicrostateParams& params, Scan scan = Scan::Full);

/// Conjugates group i by U_i and tests against Gamma_infinity.
MembershipReport orbital_membership(const std::vector<HermitianTuple>& base, const UnitaryTuple& u, const NCLaw& law,
                                    const MicrostateParams& params, Scan scan = Scan::Full);

/// Microstates in presence of unitaries: mixed words in the variables and V_k, V_k^*.
/// When `orbital` is given the variable groups are conjugated by it first; the
/// presence unitaries are never conjugated.
MembershipReport presence_membership(const std::vector<HermitianTuple>& tuples, const UnitaryTuple& presence,
                                     const NCLaw& law, const MicrostateParams& params,
                                     const UnitaryTuple* orbital = nullptr, Scan scan = Scan::Full);

/// Operational (m, delta)-freeness: distance of the joint empirical law from the free
/// product of the groups' empirical marginals. This surrogate stands in for the
/// external definition; both delta and the achieved deviation are reported.
struct FreenessReport {
  bool free = false;
  double deviation = 0.0;
  Word worst_word;
};
FreenessReport mdelta_freeness(const std::vector<HermitianTuple>& groups, int m, double delta);

std::vector<HermitianTuple> select_groups(const std::vector<HermitianTuple>& tuples, const std::vector<int>& groups);
UnitaryTuple select_unitaries(const UnitaryTuple& u, const std::vector<int>& groups);
std::vector<HermitianTuple> conjugate_groups(const std::vector<HermitianTuple>& base, const UnitaryTuple& u);

}  // namespace mslab
