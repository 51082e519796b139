#include "mslab/estimators.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "mslab/parallel.hpp"

namespace mslab {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_samples(std::uint64_t samples, const char* what) {
  if (samples == 0) throw InvalidInput(std::string(what) + ": sample count must be positive");
}

std::uint64_t count_hits(const std::vector<std::uint8_t>& flags) {
  return static_cast<std::uint64_t>(std::accumulate(flags.begin(), flags.end(), std::uint64_t{0}));
}

int total_variables(const NCLaw& law) {
  return std::accumulate(law.alphabet().arities().begin(), law.alphabet().arities().end(), 0);
}

std::vector<HermitianTuple> sample_ball_groups(const Alphabet& alphabet, int n, double radius, StreamEngine& rng) {
  std::vector<HermitianTuple> out;
  for (int g = 0; g < alphabet.group_count(); ++g) {
    std::vector<HermitianMatrix> mats;
    for (int j = 0; j < alphabet.arity(g); ++j) mats.push_back(uniform_opnorm_ball(n, radius, rng).matrix);
    out.emplace_back(std::move(mats));
  }
  return out;
}

}  // namespace

VolumeEstimate make_volume_estimate(std::uint64_t hits, std::uint64_t samples, double log_reference, int n) {
  require_samples(samples, "volume estimate");
  VolumeEstimate e;
  e.hits = hits;
  e.samples = samples;
  e.n = n;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(samples);
  e.std_error = std::sqrt(e.p_hat * (1.0 - e.p_hat) / static_cast<double>(samples));
  e.log_reference = log_reference;
  if (hits == 0) {
    e.log_measure = kNegInf;
    e.log_measure_per_N2 = kNegInf;
    e.p_upper95 = std::min(1.0, 3.0 / static_cast<double>(samples));
  } else {
    e.log_measure = std::log(e.p_hat) + log_reference;
    e.log_measure_per_N2 = e.log_measure / (static_cast<double>(n) * n);
    e.p_upper95 = e.p_hat;
  }
  return e;
}

UnitaryTuple sample_unitary_tuple(int count, int n, StreamEngine& rng, UnitarySampler sampler) {
  std::vector<UnitaryMatrix> us;
  us.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i)
    us.push_back(sampler == UnitarySampler::Haar ? haar_unitary(n, rng) : rotated_special_unitary(n, rng));
  return UnitaryTuple(n, std::move(us));
}

std::vector<int> failing_marginals(const std::vector<HermitianTuple>& base, const NCLaw& law,
                                   const MicrostateParams& params) {
  if (static_cast<int>(base.size()) != law.alphabet().group_count())
    throw InvalidInput("orbital estimate: base has " + std::to_string(base.size()) + " groups, law declares " +
                       std::to_string(law.alphabet().group_count()));
  std::vector<int> failing;
  for (int g = 0; g < static_cast<int>(base.size()); ++g) {
    const NCLaw marginal = restrict_groups(law, {g});
    if (!gamma_membership({base[static_cast<std::size_t>(g)]}, marginal, params, Scan::StopAtFirstFailure).member)
      failing.push_back(g);
  }
  return failing;
}

std::vector<std::uint8_t> orbital_hits(const std::vector<HermitianTuple>& base, const NCLaw& law,
                                       const MicrostateParams& params, const SamplingOptions& options) {
  require_samples(options.samples, "orbital_hits");
  const int groups = static_cast<int>(base.size());
  std::vector<std::uint8_t> flags(options.samples, 0);
  parallel_for(options.samples, options.workers, [&](std::size_t k) {
    StreamEngine rng(options.seed.child(k));
    const UnitaryTuple u = sample_unitary_tuple(groups, params.n, rng, options.sampler);
    flags[k] = orbital_membership(base, u, law, params, Scan::StopAtFirstFailure).member ? 1 : 0;
  });
  return flags;
}

VolumeEstimate orbital_hit_probability(const std::vector<HermitianTuple>& base, const NCLaw& law,
                                       const MicrostateParams& params, const SamplingOptions& options) {
  require_samples(options.samples, "orbital_hit_probability");
  const auto failing = failing_marginals(base, law, params);
  if (!failing.empty()) {
    VolumeEstimate e = make_volume_estimate(0, options.samples, 0.0, params.n);
    e.forced_zero = true;
    std::ostringstream os;
    os << "base group " << failing.front() + 1 << " is outside its marginal microstate set; orbital set is empty";
    e.warnings.push_back(os.str());
    return e;
  }
  return make_volume_estimate(count_hits(orbital_hits(base, law, params, options)), options.samples, 0.0, params.n);
}

// ---------------------------------------------------------------------------

BaseTupleStrategy BaseTupleStrategy::fixed_bases(std::vector<std::vector<HermitianTuple>> bases) {
  if (bases.empty()) throw InvalidInput("fixed strategy: no bases");
  BaseTupleStrategy s;
  s.kind = Kind::Fixed;
  s.fixed = std::move(bases);
  s.count = static_cast<int>(s.fixed.size());
  return s;
}

BaseTupleStrategy BaseTupleStrategy::diagonalized() { return {}; }

BaseTupleStrategy BaseTupleStrategy::best_of_random(int k, std::uint64_t budget) {
  if (k < 1 || budget == 0) throw InvalidInput("best_of_random: k and budget must be positive");
  BaseTupleStrategy s;
  s.kind = Kind::BestOfRandom;
  s.count = k;
  s.budget = budget;
  return s;
}

std::string BaseTupleStrategy::describe() const {
  switch (kind) {
    case Kind::Fixed:
      return "fixed(" + std::to_string(fixed.size()) + ")";
    case Kind::Diagonalized:
      return "diagonalized";
    case Kind::BestOfRandom:
      return "best_of_random(" + std::to_string(count) + ")";
  }
  return "?";
}

HermitianTuple quantile_diagonal(const ScalarDistribution& d, int n) {
  if (n < 1) throw InvalidInput("quantile_diagonal: N must be positive");
  std::vector<double> eig(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) eig[static_cast<std::size_t>(k)] = d.quantile((k + 0.5) / n);
  return HermitianTuple({HermitianMatrix::diagonal(eig)});
}

std::vector<HermitianTuple> diagonalized_base(const NCLaw& law, int n) {
  std::vector<HermitianTuple> out;
  for (int g = 0; g < law.alphabet().group_count(); ++g) {
    if (law.alphabet().arity(g) != 1)
      throw InvalidInput("diagonalized strategy: group " + std::to_string(g + 1) +
                         " has several variables; supply fixed tuples instead");
    const auto& d = law.distribution(g);
    if (!d) throw InvalidInput("diagonalized strategy: group " + std::to_string(g + 1) + " has no known spectral distribution");
    out.push_back(quantile_diagonal(*d, n));
  }
  return out;
}

std::vector<NCLaw> group_marginals(const NCLaw& law) {
  std::vector<NCLaw> out;
  for (int g = 0; g < law.alphabet().group_count(); ++g) out.push_back(restrict_groups(law, {g}));
  return out;
}

NuSample sample_nu_R(const std::vector<NCLaw>& marginals, const MicrostateParams& params, const RandomSeed& seed,
                     std::uint64_t budget) {
  if (!std::isfinite(params.radius)) throw InvalidInput("sample_nu_R: R must be finite");
  NuSample out;
  for (std::size_t g = 0; g < marginals.size(); ++g) {
    const NCLaw& law = marginals[g];
    if (law.alphabet().group_count() != 1 || law.alphabet().unitary_count() != 0)
      throw InvalidInput("sample_nu_R: each marginal must describe exactly one group");
    StreamEngine rng(seed.child(g));
    bool found = false;
    std::uint64_t attempt = 0;
    while (!found && attempt < budget) {
      ++attempt;
      auto groups = sample_ball_groups(law.alphabet(), params.n, params.radius, rng);
      if (gamma_membership(groups, law, params, Scan::StopAtFirstFailure).member) {
        out.tuples.push_back(std::move(groups.front()));
        found = true;
      }
    }
    out.attempts.push_back(attempt);
    if (!found) {
      std::ostringstream os;
      os << "sample_nu_R: group " << g + 1 << " accepted 0 of " << attempt << " candidates (N = " << params.n
         << ", m = " << params.m << ", delta = " << params.delta << ", R = " << params.radius << ")";
      for (std::size_t h = 0; h < g; ++h) os << "; group " << h + 1 << " needed " << out.attempts[h] << " attempts";
      throw FeasibilityError(os.str());
    }
  }
  return out;
}

CandidateBases candidate_bases(const BaseTupleStrategy& strategy, const NCLaw& law, const MicrostateParams& params,
                               const RandomSeed& seed) {
  CandidateBases out;
  switch (strategy.kind) {
    case BaseTupleStrategy::Kind::Fixed:
      out.bases = strategy.fixed;
      break;
    case BaseTupleStrategy::Kind::Diagonalized:
      out.bases.push_back(diagonalized_base(law, params.n));
      break;
    case BaseTupleStrategy::Kind::BestOfRandom: {
      if (!std::isfinite(params.radius)) throw InvalidInput("best_of_random: requires a finite cut-off R");
      const auto marginals = group_marginals(law);
      for (int j = 0; j < strategy.count; ++j) {
        NuSample s;
        try {
          s = sample_nu_R(marginals, params, seed.derive(stream_tag::kCandidate, static_cast<std::uint64_t>(j)),
                          strategy.budget);
        } catch (const FeasibilityError& e) {
          throw FeasibilityError("best_of_random candidate " + std::to_string(j) + ": " + e.what());
        }
        out.bases.push_back(std::move(s.tuples));
        out.attempts.push_back(std::accumulate(s.attempts.begin(), s.attempts.end(), std::uint64_t{0}));
      }
      break;
    }
  }
  out.attempts.resize(out.bases.size(), 0);
  return out;
}

ChiOrbResult chi_orb_bar_estimate(const BaseTupleStrategy& strategy, const NCLaw& law, const MicrostateParams& params,
                                  const SamplingOptions& options) {
  require_samples(options.samples, "chi_orb_bar_estimate");
  ChiOrbResult result;
  CandidateBases cands = candidate_bases(strategy, law, params, options.seed);
  const auto& bases = cands.bases;
  result.candidate_attempts = cands.attempts;
  for (std::size_t j = 0; j < bases.size(); ++j) {
    SamplingOptions opts = options;
    opts.seed = options.seed.derive(stream_tag::kHaar, j);
    VolumeEstimate e = orbital_hit_probability(bases[j], law, params, opts);
    if (j == 0 || e.log_measure_per_N2 > result.best.log_measure_per_N2) {
      result.best = e;
      result.best_index = j;
    }
    result.candidates.push_back(std::move(e));
  }
  result.best_base = bases[result.best_index];
  return result;
}

LebesgueEstimate lebesgue_volume_estimate(const NCLaw& law, const MicrostateParams& params,
                                          const SamplingOptions& options) {
  require_samples(options.samples, "lebesgue_volume_estimate");
  if (!std::isfinite(params.radius)) throw InvalidInput("lebesgue_volume_estimate: R must be finite");
  if (law.alphabet().unitary_count() != 0) throw InvalidInput("lebesgue_volume_estimate: law carries unitaries");
  const int n = params.n;
  const int r_total = total_variables(law);
  const double frob = params.radius * std::sqrt(static_cast<double>(n));
  std::vector<std::uint8_t> flags(options.samples, 0);
  parallel_for(options.samples, options.workers, [&](std::size_t k) {
    StreamEngine rng(options.seed.child(k));
    std::vector<HermitianTuple> groups;
    for (int g = 0; g < law.alphabet().group_count(); ++g) {
      std::vector<HermitianMatrix> mats;
      for (int j = 0; j < law.alphabet().arity(g); ++j) mats.push_back(uniform_frobenius_ball(n, frob, rng));
      groups.emplace_back(std::move(mats));
    }
    flags[k] = gamma_membership(groups, law, params, Scan::StopAtFirstFailure).member ? 1 : 0;
  });
  LebesgueEstimate out;
  out.volume = make_volume_estimate(count_hits(flags), options.samples,
                                    r_total * log_euclidean_ball_volume(n * n, frob), n);
  if (out.volume.hits == 0) {
    std::ostringstream os;
    os << "no accepted samples; Lebesgue measure below " << out.volume.p_upper95
       << " of the reference volume at 95% confidence";
    out.volume.warnings.push_back(os.str());
  }
  out.chi_proxy = out.volume.log_measure_per_N2 + 0.5 * r_total * std::log(static_cast<double>(n));
  return out;
}

FubiniRecord fubini_check(const std::vector<NCLaw>& marginals, const NCLaw& joint, const MicrostateParams& params,
                          std::uint64_t outer, std::uint64_t inner, const RandomSeed& seed, int workers,
                          std::uint64_t budget) {
  require_samples(outer, "fubini_check outer");
  require_samples(inner, "fubini_check inner");
  if (!std::isfinite(params.radius)) throw InvalidInput("fubini_check: R must be finite");
  const int groups = joint.alphabet().group_count();
  if (static_cast<int>(marginals.size()) != groups) throw InvalidInput("fubini_check: one marginal per group required");
  for (int g = 0; g < groups; ++g)
    if (marginals[static_cast<std::size_t>(g)].alphabet().group_count() != 1 ||
        marginals[static_cast<std::size_t>(g)].alphabet().arity(0) != joint.alphabet().arity(g))
      throw InvalidInput("fubini_check: marginal shapes do not match the joint law");

  FubiniRecord rec;
  rec.outer = outer;
  rec.inner = inner;
  const double nout = static_cast<double>(outer);

  // LHS: joint sample (U, A) with A uniform on the product of operator-norm balls.
  std::vector<std::uint8_t> joint_flags(outer, 0);
  parallel_for(outer, workers, [&](std::size_t k) {
    StreamEngine rng(seed.derive(stream_tag::kFubiniJoint, k));
    const UnitaryTuple u = sample_unitary_tuple(groups, params.n, rng);
    const auto a = sample_ball_groups(joint.alphabet(), params.n, params.radius, rng);
    joint_flags[k] = gamma_membership(conjugate_groups(a, u), joint, params, Scan::StopAtFirstFailure).member ? 1 : 0;
  });
  rec.lhs_hits = count_hits(joint_flags);
  rec.lhs = static_cast<double>(rec.lhs_hits) / nout;
  rec.lhs_se = std::sqrt(rec.lhs * (1.0 - rec.lhs) / nout);

  // Per-group Lebesgue fractions of Gamma_R(X_i) inside the operator-norm ball.
  double rel_var = 0.0;
  double product = 1.0;
  for (int g = 0; g < groups; ++g) {
    const NCLaw& law = marginals[static_cast<std::size_t>(g)];
    std::vector<std::uint8_t> flags(outer, 0);
    parallel_for(outer, workers, [&](std::size_t k) {
      StreamEngine rng(seed.derive(stream_tag::kFubiniFraction, static_cast<std::uint64_t>(g)).child(k));
      const auto a = sample_ball_groups(law.alphabet(), params.n, params.radius, rng);
      flags[k] = gamma_membership(a, law, params, Scan::StopAtFirstFailure).member ? 1 : 0;
    });
    const double f = static_cast<double>(count_hits(flags)) / nout;
    const double se = std::sqrt(f * (1.0 - f) / nout);
    rec.group_fraction.push_back(f);
    rec.group_fraction_se.push_back(se);
    product *= f;
    if (f > 0.0) rel_var += (se * se) / (f * f);
  }

  // Inner Haar probabilities at nu_R-distributed bases.
  std::vector<double> inner_p(outer, 0.0);
  if (product > 0.0) {
    parallel_for(outer, workers, [&](std::size_t k) {
      const NuSample nu = sample_nu_R(marginals, params, seed.derive(stream_tag::kFubiniNu, k), budget);
      const RandomSeed inner_seed = seed.derive(stream_tag::kFubiniInner, k);
      std::uint64_t hits = 0;
      for (std::uint64_t j = 0; j < inner; ++j) {
        StreamEngine rng(inner_seed.child(j));
        const UnitaryTuple u = sample_unitary_tuple(groups, params.n, rng);
        if (orbital_membership(nu.tuples, u, joint, params, Scan::StopAtFirstFailure).member) ++hits;
      }
      inner_p[k] = static_cast<double>(hits) / static_cast<double>(inner);
    });
  }
  const double mean = std::accumulate(inner_p.begin(), inner_p.end(), 0.0) / nout;
  double ss = 0.0;
  for (double p : inner_p) ss += (p - mean) * (p - mean);
  rec.inner_mean = mean;
  rec.inner_se = outer > 1 ? std::sqrt(ss / (nout - 1.0) / nout) : 0.0;
  if (mean > 0.0) rel_var += (rec.inner_se * rec.inner_se) / (mean * mean);

  rec.rhs = product * mean;
  rec.rhs_se = rec.rhs * std::sqrt(rel_var);
  const double denom = std::sqrt(rec.lhs_se * rec.lhs_se + rec.rhs_se * rec.rhs_se);
  const double diff = rec.lhs - rec.rhs;
  if (denom > 0.0)
    rec.z = diff / denom;
  else
    rec.z = diff == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), diff);
  return rec;
}

SubadditivityReport check_subfamily_hits(const std::vector<HermitianTuple>& base, const NCLaw& law,
                                         const MicrostateParams& params,
                                         const std::vector<std::vector<int>>& subfamilies,
                                         const SamplingOptions& options) {
  require_samples(options.samples, "check_subfamily_hits");
  std::vector<NCLaw> restricted;
  for (const auto& sub : subfamilies) restricted.push_back(restrict_groups(law, sub));
  const int groups = static_cast<int>(base.size());
  std::vector<std::uint8_t> hit(options.samples, 0), failure(options.samples, 0);
  parallel_for(options.samples, options.workers, [&](std::size_t k) {
    StreamEngine rng(options.seed.child(k));
    const UnitaryTuple u = sample_unitary_tuple(groups, params.n, rng, options.sampler);
    if (!orbital_membership(base, u, law, params, Scan::StopAtFirstFailure).member) return;
    hit[k] = 1;
    for (std::size_t s = 0; s < subfamilies.size(); ++s) {
      const auto& sub = subfamilies[s];
      if (!orbital_membership(select_groups(base, sub), select_unitaries(u, sub), restricted[s], params,
                              Scan::StopAtFirstFailure)
               .member)
        failure[k] = 1;
    }
  });
  return {options.samples, count_hits(hit), count_hits(failure)};
}

}  // namespace mslab

namespace mslab {

TruncationParameters truncation_parameters(double rho, double radius, int m, double delta, double fraction) {
  if (!(rho >= 0.0) || !std::isfinite(radius) || !(radius > rho))
    throw InvalidInput("truncation: need a finite R strictly above rho");
  if (m < 1 || !(delta > 0.0)) throw InvalidInput("truncation: need m >= 1 and delta > 0");
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidInput("truncation: delta' fraction must lie in (0, 1)");
  TruncationParameters tp;
  tp.rho = rho;
  tp.radius = radius;
  tp.m = m;
  tp.delta = delta;
  tp.L = std::max(std::pow(std::pow(rho, 2.0 * m) + 1.0, 1.0 / (2.0 * m)), radius);
  tp.delta_prime = fraction * std::min(1.0, delta / 2.0);
  tp.residual_bound = delta / (2.0 * m * std::pow(tp.L, m - 1));
  for (int mp = m + (m % 2); mp <= kMaxLawDegree; mp += 2) {
    const double est =
        radius * std::pow(std::pow(rho / radius, mp) + tp.delta_prime / std::pow(radius, mp), 1.0 / m);
    if (est < tp.residual_bound) {
      tp.m_prime = mp;
      tp.residual_estimate = est;
      return tp;
    }
  }
  throw InvalidInput("truncation: no even m' <= " + std::to_string(kMaxLawDegree) + " satisfies the residual bound");
}

TruncationReport truncation_check(const NCLaw& law, const TruncationParameters& tp, int n, double spike,
                                  const SamplingOptions& options) {
  require_samples(options.samples, "truncation_check");
  if (law.max_degree() < tp.m_prime)
    throw InvalidInput("truncation_check: law covers degree " + std::to_string(law.max_degree()) + " < m' = " +
                       std::to_string(tp.m_prime));
  if (law.alphabet().unitary_count() != 0) throw InvalidInput("truncation_check: law carries unitaries");
  std::vector<HermitianTuple> base = diagonalized_base(law, n);
  if (spike > 0.0) {
    for (auto& t : base) {
      const RVector ev = t[0].eigenvalues();
      std::vector<double> eig(ev.data(), ev.data() + ev.size());
      std::size_t top = 0;
      for (std::size_t k = 1; k < eig.size(); ++k)
        if (std::abs(eig[k]) > std::abs(eig[top])) top = k;
      eig[top] = eig[top] < 0.0 ? -spike : spike;
      t = HermitianTuple({HermitianMatrix::diagonal(eig)});
    }
  }
  const int groups = static_cast<int>(base.size());
  const MicrostateParams premise{n, tp.m_prime, tp.delta_prime};
  const MicrostateParams conclusion{n, tp.m, tp.delta};
  const NCLaw law_m = restrict_degree(law, tp.m);

  struct Outcome {
    bool premise = false, truncated = false, conclusion_failure = false, residual_failure = false;
    double residual = 0.0, op = 0.0;
  };
  std::vector<Outcome> outcomes(options.samples);
  parallel_for(options.samples, options.workers, [&](std::size_t k) {
    StreamEngine rng(options.seed.child(k));
    const UnitaryTuple w = sample_unitary_tuple(groups, n, rng, options.sampler);
    const auto a = conjugate_groups(base, w);
    Outcome o;
    std::vector<HermitianTuple> cut;
    for (const auto& t : a) {
      std::vector<HermitianMatrix> mats;
      for (const auto& x : t.matrices()) {
        HermitianMatrix y = truncate_fR(x, tp.radius);
        const CMatrix diff = x.matrix() - y.matrix();
        if (diff.cwiseAbs().maxCoeff() > 0.0) o.truncated = true;
        o.residual = std::max(o.residual, p_norm(diff, static_cast<double>(tp.m)));
        o.op = std::max(o.op, op_norm(x));
        mats.push_back(std::move(y));
      }
      cut.emplace_back(std::move(mats));
    }
    o.premise = gamma_membership(a, law, premise, Scan::StopAtFirstFailure).member;
    if (o.premise) {
      o.conclusion_failure = !gamma_membership(cut, law_m, conclusion, Scan::StopAtFirstFailure).member;
      o.residual_failure = !(o.residual < tp.residual_bound);
    }
    outcomes[k] = o;
  });
  TruncationReport r;
  r.parameters = tp;
  r.samples = options.samples;
  for (const auto& o : outcomes) {
    r.premise_hits += o.premise;
    r.truncated += o.truncated;
    r.truncated_premise_hits += o.truncated && o.premise;
    r.conclusion_failures += o.conclusion_failure;
    r.residual_failures += o.residual_failure;
    r.max_residual = std::max(r.max_residual, o.residual);
    r.max_op_norm = std::max(r.max_op_norm, o.op);
  }
  return r;
}

}  // namespace mslab
