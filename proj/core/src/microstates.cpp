#include "mslab/microstates.hpp"

#include <cmath>

namespace mslab {
namespace {

void check_params(const MicrostateParams& p, const NCLaw& law) {
  if (p.m < 1) throw InvalidInput("membership: m must be positive");
  if (p.m > law.max_degree()) throw InvalidInput("membership: law does not cover degree m");
  if (!(p.delta > 0.0)) throw InvalidInput("membership: delta must be positive");
  if (!(p.radius > 0.0)) throw InvalidInput("membership: R must be positive");
}

void check_shapes(const std::vector<HermitianTuple>& tuples, const NCLaw& law, int n) {
  const Alphabet& a = law.alphabet();
  if (static_cast<int>(tuples.size()) != a.group_count())
    throw InvalidInput("membership: " + std::to_string(tuples.size()) + " groups given, law declares " +
                       std::to_string(a.group_count()));
  for (int g = 0; g < a.group_count(); ++g) {
    const auto& t = tuples[static_cast<std::size_t>(g)];
    if (t.arity() != a.arity(g)) throw InvalidInput("membership: group arity does not match the law");
    if (t.size() != n) throw InvalidInput("membership: matrix size differs from N");
  }
}

MembershipReport evaluate(const std::vector<HermitianTuple>& tuples, const UnitaryTuple* presence, const NCLaw& law,
                          const MicrostateParams& params, Scan scan) {
  MembershipReport report;
  if (std::isfinite(params.radius)) {
    for (int g = 0; g < static_cast<int>(tuples.size()); ++g) {
      const auto& t = tuples[static_cast<std::size_t>(g)];
      for (int j = 0; j < t.arity(); ++j) {
        const double norm = op_norm(t[j]);
        if (norm > params.radius + kNormSlack) {
          report.norm_violations.push_back({g, j, norm});
        } else if (norm > params.radius) {
          report.slack_consumed = true;
        }
      }
    }
    if (!report.norm_violations.empty() && scan == Scan::StopAtFirstFailure) {
      report.early_exit = true;
      return report;
    }
  }

  WordTraceEvaluator eval(symbol_matrices(tuples, presence), params.m);
  const WordSpace& space = eval.space();
  bool moments_ok = true;
  double worst = -1.0;
  std::size_t worst_rank = 0;
  for (std::size_t k = space.offset(1); k < space.offset(params.m + 1); ++k) {
    const double dev = std::abs(eval.trace_at(k) - law.moment_at(k));
    if (dev > worst) {
      worst = dev;
      worst_rank = k;
    }
    if (!(dev < params.delta)) {
      moments_ok = false;
      if (scan == Scan::StopAtFirstFailure) {
        report.early_exit = true;
        break;
      }
    }
  }
  report.max_deviation = std::max(worst, 0.0);
  if (worst_rank != 0) report.worst_word = space.word(worst_rank);
  report.member = moments_ok && report.norm_violations.empty();
  return report;
}

}  // namespace

MembershipReport gamma_membership(const std::vector<HermitianTuple>& tuples, const NCLaw& law,
                                  const MicrostateParams& params, Scan scan) {
  check_params(params, law);
  if (law.alphabet().unitary_count() != 0)
    throw InvalidInput("gamma_membership: law declares unitary generators; use presence_membership");
  check_shapes(tuples, law, params.n);
  return evaluate(tuples, nullptr, law, params, scan);
}

std::vector<HermitianTuple> conjugate_groups(const std::vector<HermitianTuple>& base, const UnitaryTuple& u) {
  if (static_cast<int>(base.size()) != u.count()) throw InvalidInput("orbital: one unitary per group required");
  std::vector<HermitianTuple> out;
  out.reserve(base.size());
  for (std::size_t i = 0; i < base.size(); ++i) out.push_back(conjugate_tuple(u[static_cast<int>(i)], base[i]));
  return out;
}

MembershipReport orbital_membership(const std::vector<HermitianTuple>& base, const UnitaryTuple& u, const NCLaw& law,
                                    const MicrostateParams& params, Scan scan) {
  return gamma_membership(conjugate_groups(base, u), law,
                          params.with_radius(std::numeric_limits<double>::infinity()), scan);
}

MembershipReport presence_membership(const std::vector<HermitianTuple>& tuples, const UnitaryTuple& presence,
                                     const NCLaw& law, const MicrostateParams& params, const UnitaryTuple* orbital,
                                     Scan scan) {
  check_params(params, law);
  if (law.alphabet().unitary_count() != presence.count())
    throw InvalidInput("presence_membership: law declares " + std::to_string(law.alphabet().unitary_count()) +
                       " unitary generators, " + std::to_string(presence.count()) + " given");
  if (presence.count() > 0 && presence.size() != params.n)
    throw InvalidInput("presence_membership: unitary size differs from N");
  if (orbital) {
    const auto conj = conjugate_groups(tuples, *orbital);
    check_shapes(conj, law, params.n);
    return evaluate(conj, &presence, law, params.with_radius(std::numeric_limits<double>::infinity()), scan);
  }
  check_shapes(tuples, law, params.n);
  return evaluate(tuples, &presence, law, params, scan);
}

FreenessReport mdelta_freeness(const std::vector<HermitianTuple>& groups, int m, double delta) {
  if (m < 1 || m > kMaxLawDegree) throw InvalidInput("mdelta_freeness: degree outside the free-product cap");
  if (groups.empty()) throw InvalidInput("mdelta_freeness: no groups");
  std::vector<NCLaw> marginals;
  marginals.reserve(groups.size());
  for (const auto& g : groups) marginals.push_back(empirical_law({g}, m));
  const NCLaw joint = empirical_law(groups, m);
  const NCLaw free = free_product_law(marginals, m);
  const LawDeviation dev = law_deviation(joint, free, m);
  return {dev.max_deviation < delta, dev.max_deviation, dev.worst_word};
}

std::vector<HermitianTuple> select_groups(const std::vector<HermitianTuple>& tuples, const std::vector<int>& groups) {
  std::vector<HermitianTuple> out;
  for (int g : groups) out.push_back(tuples.at(static_cast<std::size_t>(g)));
  return out;
}

UnitaryTuple select_unitaries(const UnitaryTuple& u, const std::vector<int>& groups) {
  std::vector<UnitaryMatrix> out;
  for (int g : groups) out.push_back(u.unitaries().at(static_cast<std::size_t>(g)));
  return UnitaryTuple(u.size(), std::move(out));
}

}  // namespace mslab
