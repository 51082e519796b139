#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "mslab/metric.hpp"
#include "support.hpp"

using namespace mslab;
using testing::engine;

namespace {

PointCloud haar_cloud(std::size_t size, int count, int n, std::uint64_t root) {
  PointCloud c;
  for (std::size_t k = 0; k < size; ++k) {
    StreamEngine rng(RandomSeed{root, k});
    c.points.push_back(sample_unitary_tuple(count, n, rng));
  }
  c.provenance = "haar";
  return c;
}

DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows) {
  std::vector<double> v;
  for (const auto& r : rows) v.insert(v.end(), r.begin(), r.end());
  return DistanceMatrix(rows.size(), v);
}

DistanceMatrix line(const std::vector<double>& xs) {
  std::vector<std::vector<double>> rows;
  for (double a : xs) {
    std::vector<double> r;
    for (double b : xs) r.push_back(std::abs(a - b));
    rows.push_back(r);
  }
  return from_rows(rows);
}

}  // namespace

TEST_CASE("distance matrix of a cloud") {
  const auto cloud = haar_cloud(12, 2, 3, 1);
  const auto d = distance_matrix(cloud);
  const auto d3 = distance_matrix(cloud, 3);
  for (std::size_t i = 0; i < 12; ++i) {
    CHECK(d(i, i) == 0.0);
    for (std::size_t j = 0; j < 12; ++j) {
      CHECK(d(i, j) == d(j, i));
      CHECK(d(i, j) == d3(i, j));
      CHECK(d(i, j) == doctest::Approx(d2_distance(cloud.points[i], cloud.points[j])));
    }
  }
  CHECK(d.diameter() <= 2.0 * std::sqrt(2.0) + 1e-12);
}

TEST_CASE("greedy selections on a line") {
  const auto d = line({0, 1, 2, 3, 4, 5});
  const auto p = greedy_packing(d, 0.6);
  CHECK(p.centers == std::vector<std::size_t>{0, 2, 4});
  const auto c = greedy_covering(d, 1.0);
  CHECK(c.count == 2);
  CHECK(c.centers == std::vector<std::size_t>{1, 4});
  CHECK(greedy_packing(d, 10.0).count == 1);
  CHECK(greedy_covering(d, 10.0).count == 1);
  CHECK(greedy_covering(d, 0.1).count == 6);
  CHECK_THROWS_AS(greedy_covering(d, 0.0), InvalidInput);
}

TEST_CASE("exact counts") {
  const double dd = 1.0;
  const auto d = line({0, dd, 2 * dd});
  const auto e = exact_cover_pack(d, dd / 4);
  CHECK(e.packing == 3);
  CHECK(e.covering == 3);
  const auto big = exact_cover_pack(d, 5.0);
  CHECK(big.covering == 1);
  CHECK(big.packing == 1);
  const auto mid = exact_cover_pack(d, 1.0);
  CHECK(mid.covering == 1);
  CHECK(mid.packing == 1);
  const auto half = exact_cover_pack(line({0, 1, 2, 3, 4}), 0.5);
  CHECK(half.packing == 3);
  CHECK(half.covering == 5);

  const auto many = haar_cloud(16, 1, 2, 2);
  CHECK_THROWS_AS(exact_cover_pack(distance_matrix(many), 0.1), InvalidInput);
}

TEST_CASE("greedy packing is a 2 eps-cover and greedy covering is near optimal") {
  const auto cloud = haar_cloud(100, 1, 3, 3);
  const auto d = distance_matrix(cloud, 2);
  for (double eps : {0.05, 0.2, 0.4, 0.8}) {
    const auto p = greedy_packing(d, eps);
    for (std::size_t i = 0; i < p.centers.size(); ++i)
      for (std::size_t j = i + 1; j < p.centers.size(); ++j) CHECK(d(p.centers[i], p.centers[j]) > 2 * eps);
    for (std::size_t x = 0; x < d.size(); ++x) {
      double best = 1e9;
      for (auto c : p.centers) best = std::min(best, d(x, c));
      CHECK(best <= 2 * eps);
    }
  }
  for (std::uint64_t trial = 0; trial < 20; ++trial) {
    const auto small = distance_matrix(haar_cloud(12, 1, 2, 100 + trial));
    for (double eps : {0.3, 0.6, 1.0}) {
      const auto exact = exact_cover_pack(small, eps);
      const auto g = greedy_covering(small, eps);
      CHECK(g.count >= exact.covering);
      CHECK(static_cast<double>(g.count) <= exact.covering * (1.0 + std::log(12.0)));
      CHECK(greedy_packing(small, eps).count <= exact.packing);
    }
  }
}

TEST_CASE("packing/covering chain on random clouds") {
  for (std::uint64_t trial = 0; trial < 30; ++trial) {
    const auto d = distance_matrix(haar_cloud(10, 2, 2, 200 + trial));
    for (double eps : {0.05, 0.1, 0.2, 0.35, 0.5}) {
      const auto a = exact_cover_pack(d, eps), b = exact_cover_pack(d, 2 * eps), c = exact_cover_pack(d, 4 * eps);
      CHECK(a.packing >= b.covering);
      CHECK(b.covering >= c.packing);
    }
  }
}

TEST_CASE("raw greedy packing can grow with eps; the envelopes do not") {
  const auto d = from_rows({{0, 2.5, 4, 4}, {2.5, 0, 2, 2}, {4, 2, 0, 4}, {4, 2, 4, 0}});
  CHECK(greedy_packing(d, 1.0).count == 2);
  CHECK(greedy_packing(d, 1.5).count == 3);

  const auto cloud = haar_cloud(60, 1, 2, 4);
  const auto prof = packing_profile(cloud, {0.8, 0.1, 0.2, 0.3, 0.2, 0.5, 1.2});
  REQUIRE(prof.rows.size() == 6);
  CHECK(prof.cloud_size == 60);
  for (std::size_t r = 0; r < prof.rows.size(); ++r) {
    const auto& row = prof.rows[r];
    CHECK(row.K_upper <= row.greedy_cover);
    CHECK(row.P_lower >= row.greedy_pack);
    CHECK(row.slope.has_value() == (row.epsilon < 1.0));
    if (r > 0) {
      CHECK(row.epsilon > prof.rows[r - 1].epsilon);
      CHECK(row.K_upper <= prof.rows[r - 1].K_upper);
      CHECK(row.P_lower <= prof.rows[r - 1].P_lower);
    }
    CHECK(row.log_K_per_N2 == doctest::Approx(std::log(static_cast<double>(row.K_upper)) / 4.0));
    if (row.slope) CHECK(*row.slope == doctest::Approx(row.log_K_per_N2 / std::abs(std::log(row.epsilon)) - 1.0));
  }
  CHECK_FALSE(prof.rows[0].exact.has_value());
}

TEST_CASE("profile is invariant under right translation of the cloud") {
  auto cloud = haar_cloud(40, 2, 3, 5);
  StreamEngine rng(RandomSeed{6, 0});
  const auto w = sample_unitary_tuple(2, 3, rng);
  PointCloud moved = cloud;
  for (auto& p : moved.points) p = multiply_right(p, w);
  const std::vector<double> eps{0.2, 0.4, 0.7};
  const auto a = packing_profile(cloud, eps), b = packing_profile(moved, eps);
  for (std::size_t r = 0; r < eps.size(); ++r) {
    CHECK(a.rows[r].K_upper == b.rows[r].K_upper);
    CHECK(a.rows[r].P_lower == b.rows[r].P_lower);
  }
  const auto small = packing_profile(haar_cloud(9, 1, 2, 7), eps);
  for (const auto& row : small.rows) REQUIRE(row.exact.has_value());
}

TEST_CASE("delta1_profile") {
  const NCLaw one = two_point_law(1.0, -1.0, 0.5, 2);
  SamplingOptions o;
  o.samples = 30;
  o.seed = {8, 0};
  const auto prof = delta1_profile(one, {4, 2, 0.1}, BaseTupleStrategy::diagonalized(), {0.1, 0.5}, o);
  CHECK(prof.cloud_size == 30);
  CHECK(prof.samples == 30);
  CHECK(prof.n == 4);
  CHECK(prof.groups == 1);

  const NCLaw three = two_point_law(1.0, -1.0, 0.5, 3);
  const NCLaw law = free_product_law({three, three}, 3);
  CHECK_THROWS_AS(delta1_profile(law, {4, 3, 1e-4}, BaseTupleStrategy::diagonalized(), {0.1}, o), FeasibilityError);

  const std::string csv = profile_csv(prof);
  CHECK(csv.rfind("epsilon,K_upper,P_lower,K_exact,P_exact,log_K_per_N2,log_P_per_N2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}
