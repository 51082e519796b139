#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "mslab/estimators.hpp"
#include "mslab/linalg.hpp"

namespace mslab {

/// Finite sample of U(N)^n; counts computed on it are cloud-relative.
struct PointCloud {
  std::vector<UnitaryTuple> points;
  std::string provenance;

  std::size_t size() const noexcept { return points.size(); }
};

/// Symmetric matrix of pairwise d_2 distances.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t size, std::vector<double> values);

  std::size_t size() const noexcept { return size_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * size_ + j]; }
  double diameter() const;

 private:
  std::size_t size_ = 0;
  std::vector<double> values_;
};

DistanceMatrix distance_matrix(const PointCloud& cloud, int workers = 1);

struct Selection {
  std::size_t count = 0;
  std::vector<std::size_t> centers;
};

/// Scans points in index order and keeps those at distance > 2 eps from every kept
/// center: the kept eps-balls are disjoint and, by maximality, a 2 eps-cover.
Selection greedy_packing(const DistanceMatrix& d, double eps);
/// Greedy set cover by closed eps-balls centred at cloud points; ties go to the lowest index.
Selection greedy_covering(const DistanceMatrix& d, double eps);

inline constexpr std::size_t kExactSolverCap = 15;

struct ExactCounts {
  std::size_t covering = 0;  // K_eps
  std::size_t packing = 0;   // P_eps
};

/// Minimum cover and maximum packing by subset enumeration (at most kExactSolverCap points).
ExactCounts exact_cover_pack(const DistanceMatrix& d, double eps);

struct ProfileRow {
  double epsilon = 0.0;
  /// Raw greedy counts at this epsilon.
  std::size_t greedy_cover = 0;
  std::size_t greedy_pack = 0;
  /// Monotone envelopes: K_upper = min of greedy covers at eps' <= eps,
  /// P_lower = max of greedy packings at eps' >= eps.
  std::size_t K_upper = 0;
  std::size_t P_lower = 0;
  std::optional<ExactCounts> exact;
  double log_K_per_N2 = 0.0;
  double log_P_per_N2 = 0.0;
  /// log_K_per_N2 / |log eps| - n; absent for eps >= 1.
  std::optional<double> slope;
};

struct PackingProfile {
  int n = 1;       // matrix size N
  int groups = 1;  // tuple length
  std::size_t cloud_size = 0;
  std::uint64_t samples = 0;
  std::string provenance;
  std::vector<ProfileRow> rows;  // sorted by increasing epsilon
};

PackingProfile packing_profile(const PointCloud& cloud, std::vector<double> epsilons, int workers = 1);

/// Orbital hits of Haar samples around the strategy's first base tuple.
PointCloud orbital_cloud(const std::vector<HermitianTuple>& base, const NCLaw& law, const MicrostateParams& params,
                         const SamplingOptions& options);

/// Samples an orbital cloud and tabulates cloud-relative covering/packing counts.
/// Throws FeasibilityError when no sample is a hit.
PackingProfile delta1_profile(const NCLaw& law, const MicrostateParams& params, const BaseTupleStrategy& strategy,
                              const std::vector<double>& epsilons, const SamplingOptions& options);

std::string profile_csv(const PackingProfile& profile);

}  // namespace mslab
