#include "mslab/metric.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <sstream>

#include "mslab/error.hpp"
#include "mslab/parallel.hpp"

namespace mslab {
namespace {

void require_eps(double eps) {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidInput("epsilon must be positive and finite");
}

}  // namespace

DistanceMatrix::DistanceMatrix(std::size_t size, std::vector<double> values)
    : size_(size), values_(std::move(values)) {
  if (values_.size() != size_ * size_) throw InvalidInput("DistanceMatrix: expected size^2 values");
}

double DistanceMatrix::diameter() const { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

DistanceMatrix distance_matrix(const PointCloud& cloud, int workers) {
  const std::size_t k = cloud.size();
  if (k == 0) throw InvalidInput("point cloud is empty");
  std::vector<double> v(k * k, 0.0);
  parallel_for(k, workers, [&](std::size_t i) {
    for (std::size_t j = i + 1; j < k; ++j) v[i * k + j] = d2_distance(cloud.points[i], cloud.points[j]);
  });
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < i; ++j) v[i * k + j] = v[j * k + i];
  return DistanceMatrix(k, std::move(v));
}

Selection greedy_packing(const DistanceMatrix& d, double eps) {
  require_eps(eps);
  Selection s;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool separated =
        std::all_of(s.centers.begin(), s.centers.end(), [&](std::size_t c) { return d(i, c) > 2.0 * eps; });
    if (separated) s.centers.push_back(i);
  }
  s.count = s.centers.size();
  return s;
}

Selection greedy_covering(const DistanceMatrix& d, double eps) {
  require_eps(eps);
  const std::size_t k = d.size();
  std::vector<bool> covered(k, false);
  std::size_t remaining = k;
  Selection s;
  while (remaining > 0) {
    std::size_t best = 0, best_gain = 0;
    for (std::size_t c = 0; c < k; ++c) {
      std::size_t gain = 0;
      for (std::size_t j = 0; j < k; ++j)
        if (!covered[j] && d(c, j) <= eps) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best = c;
      }
    }
    s.centers.push_back(best);
    for (std::size_t j = 0; j < k; ++j)
      if (!covered[j] && d(best, j) <= eps) {
        covered[j] = true;
        --remaining;
      }
  }
  s.count = s.centers.size();
  return s;
}

ExactCounts exact_cover_pack(const DistanceMatrix& d, double eps) {
  require_eps(eps);
  const std::size_t k = d.size();
  if (k == 0) throw InvalidInput("exact_cover_pack: empty cloud");
  if (k > kExactSolverCap)
    throw InvalidInput("exact_cover_pack: " + std::to_string(k) + " points exceeds the cap of " +
                       std::to_string(kExactSolverCap));
  std::vector<std::uint32_t> ball(k, 0), conflict(k, 0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      if (d(i, j) <= eps) ball[i] |= 1u << j;
      if (i != j && d(i, j) <= 2.0 * eps) conflict[i] |= 1u << j;
    }
  const std::uint32_t full = (1u << k) - 1u;
  ExactCounts out{k, 1};
  for (std::uint32_t mask = 1; mask <= full; ++mask) {
    const auto bits = static_cast<std::size_t>(std::popcount(mask));
    std::uint32_t cover = 0;
    bool independent = true;
    for (std::size_t i = 0; i < k; ++i) {
      if (!(mask >> i & 1u)) continue;
      cover |= ball[i];
      if (conflict[i] & mask) independent = false;
    }
    if (cover == full) out.covering = std::min(out.covering, bits);
    if (independent) out.packing = std::max(out.packing, bits);
  }
  return out;
}

PackingProfile packing_profile(const PointCloud& cloud, std::vector<double> epsilons, int workers) {
  if (epsilons.empty()) throw InvalidInput("packing_profile: empty epsilon grid");
  for (double e : epsilons) require_eps(e);
  std::sort(epsilons.begin(), epsilons.end());
  epsilons.erase(std::unique(epsilons.begin(), epsilons.end()), epsilons.end());

  const DistanceMatrix d = distance_matrix(cloud, workers);
  PackingProfile p;
  p.n = cloud.points.front().size();
  p.groups = cloud.points.front().count();
  p.cloud_size = cloud.size();
  p.provenance = cloud.provenance;
  const double n2 = static_cast<double>(p.n) * p.n;
  for (double e : epsilons) {
    ProfileRow r;
    r.epsilon = e;
    r.greedy_cover = greedy_covering(d, e).count;
    r.greedy_pack = greedy_packing(d, e).count;
    if (d.size() <= kExactSolverCap) r.exact = exact_cover_pack(d, e);
    p.rows.push_back(r);
  }
  std::size_t running = p.rows.front().greedy_cover;
  for (auto& r : p.rows) {
    running = std::min(running, r.greedy_cover);
    r.K_upper = running;
  }
  running = 0;
  for (auto it = p.rows.rbegin(); it != p.rows.rend(); ++it) {
    running = std::max(running, it->greedy_pack);
    it->P_lower = running;
  }
  for (auto& r : p.rows) {
    r.log_K_per_N2 = std::log(static_cast<double>(r.K_upper)) / n2;
    r.log_P_per_N2 = std::log(static_cast<double>(r.P_lower)) / n2;
    if (r.epsilon < 1.0) r.slope = r.log_K_per_N2 / std::abs(std::log(r.epsilon)) - p.groups;
  }
  return p;
}

PointCloud orbital_cloud(const std::vector<HermitianTuple>& base, const NCLaw& law, const MicrostateParams& params,
                         const SamplingOptions& options) {
  const auto flags = orbital_hits(base, law, params, options);
  PointCloud cloud;
  const int groups = static_cast<int>(base.size());
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (!flags[k]) continue;
    StreamEngine rng(options.seed.child(k));
    cloud.points.push_back(sample_unitary_tuple(groups, params.n, rng, options.sampler));
  }
  std::ostringstream os;
  os << "orbital hits: " << cloud.size() << " of " << options.samples << " Haar samples";
  cloud.provenance = os.str();
  return cloud;
}

PackingProfile delta1_profile(const NCLaw& law, const MicrostateParams& params, const BaseTupleStrategy& strategy,
                              const std::vector<double>& epsilons, const SamplingOptions& options) {
  const auto cands = candidate_bases(strategy, law, params, options.seed);
  SamplingOptions opts = options;
  opts.seed = options.seed.derive(stream_tag::kCloud, 0);
  const PointCloud cloud = orbital_cloud(cands.bases.front(), law, params, opts);
  if (cloud.points.empty()) {
    std::ostringstream os;
    os << "delta1_profile: no orbital hits in " << options.samples << " samples (N = " << params.n
       << ", m = " << params.m << ", delta = " << params.delta << ")";
    throw FeasibilityError(os.str());
  }
  PackingProfile p = packing_profile(cloud, epsilons, options.workers);
  p.samples = options.samples;
  return p;
}

std::string profile_csv(const PackingProfile& profile) {
  std::ostringstream os;
  os.precision(17);
  os << "epsilon,K_upper,P_lower,K_exact,P_exact,log_K_per_N2,log_P_per_N2\n";
  for (const auto& r : profile.rows) {
    os << r.epsilon << ',' << r.K_upper << ',' << r.P_lower << ',';
    if (r.exact) os << r.exact->covering << ',' << r.exact->packing;
    else os << ',';
    os << ',' << r.log_K_per_N2 << ',' << r.log_P_per_N2 << '\n';
  }
  return os.str();
}

}  // namespace mslab
