#include <doctest.h>

#include <cmath>
#include <functional>
#include <map>

#include "mslab/laws.hpp"
#include "mslab/random.hpp"
#include "support.hpp"

using namespace mslab;
using testing::engine;
using testing::random_hermitian;

namespace {

// ---- Non-crossing partition oracle -------------------------------------------------

using Partition = std::vector<std::vector<int>>;

void set_partitions(int n, int i, Partition& cur, std::vector<Partition>& out) {
  if (i == n) {
    out.push_back(cur);
    return;
  }
  for (std::size_t b = 0; b < cur.size(); ++b) {
    cur[b].push_back(i);
    set_partitions(n, i + 1, cur, out);
    cur[b].pop_back();
  }
  cur.push_back({i});
  set_partitions(n, i + 1, cur, out);
  cur.pop_back();
}

bool crossing(const Partition& p) {
  std::vector<int> label(64, -1);
  int n = 0;
  for (std::size_t b = 0; b < p.size(); ++b)
    for (int x : p[b]) {
      label[static_cast<std::size_t>(x)] = static_cast<int>(b);
      n = std::max(n, x + 1);
    }
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d)
          if (label[a] == label[c] && label[b] == label[d] && label[a] != label[b]) return true;
  return false;
}

const std::vector<Partition>& nc_partitions(int n) {
  static std::map<int, std::vector<Partition>> cache;
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<Partition> all, nc;
  Partition cur;
  set_partitions(n, 0, cur, all);
  for (auto& p : all)
    if (!crossing(p)) nc.push_back(p);
  return cache[n] = nc;
}

// Free cumulants kappa_1..kappa_K of a single variable from its moments.
std::vector<double> free_cumulants(const std::vector<double>& moments, int K) {
  std::vector<double> kappa(static_cast<std::size_t>(K + 1), 0.0);
  for (int n = 1; n <= K; ++n) {
    double rest = 0.0;
    for (const auto& p : nc_partitions(n)) {
      if (p.size() == 1) continue;
      double prod = 1.0;
      for (const auto& b : p) prod *= kappa[b.size()];
      rest += prod;
    }
    kappa[static_cast<std::size_t>(n)] = moments[static_cast<std::size_t>(n)] - rest;
  }
  return kappa;
}

// tau(x_{c_1} ... x_{c_k}) for free single variables, via sum over NC(k) of products of
// cumulants over monochromatic blocks.
double nc_mixed_moment(const std::vector<int>& colors, const std::vector<std::vector<double>>& kappas) {
  double total = 0.0;
  for (const auto& p : nc_partitions(static_cast<int>(colors.size()))) {
    double prod = 1.0;
    for (const auto& b : p) {
      const int c = colors[static_cast<std::size_t>(b[0])];
      for (int x : b)
        if (colors[static_cast<std::size_t>(x)] != c) prod = 0.0;
      if (prod == 0.0) break;
      prod *= kappas[static_cast<std::size_t>(c)][b.size()];
    }
    total += prod;
  }
  return total;
}

std::vector<double> power_moments(const NCLaw& law, int K) {
  std::vector<double> out{1.0};
  for (int k = 1; k <= K; ++k) out.push_back(law.moment(Word(static_cast<std::size_t>(k), 0)).real());
  return out;
}

bool invariants_hold(const NCLaw& law, double tol = 1e-10) {
  const auto r = check_law_invariants(law);
  return r.adjoint_defect < tol && r.cyclic_defect < tol && r.bound_excess < tol;
}

}  // namespace

TEST_CASE("alphabet names and parsing") {
  const Alphabet a({2, 1}, 1);
  CHECK(a.symbol_count() == 5);
  const Word w{static_cast<Symbol>(a.variable_symbol(0, 0)), static_cast<Symbol>(a.variable_symbol(1, 0)),
               static_cast<Symbol>(a.variable_symbol(0, 1))};
  CHECK(a.format(w) == "X[1,1] X[2,1] X[1,2]");
  CHECK(a.parse("X[1,1] X[2,1] X[1,2]") == w);
  const Word u = a.parse("V[1] X[1,2] V[1]*");
  CHECK(a.format(u) == "V[1] X[1,2] V[1]*");
  CHECK(a.format(adjoint_word(a, u)) == "V[1] X[1,2] V[1]*");
  CHECK(a.format(adjoint_word(a, a.parse("V[1] X[2,1]"))) == "X[2,1] V[1]*");
  CHECK_THROWS_AS(a.parse("X[3,1]"), InvalidInput);
  CHECK_THROWS_AS(a.parse("V[2]"), InvalidInput);
}

TEST_CASE("word space ranks are dense and ordered by degree") {
  const WordSpace s(3, 4);
  CHECK(s.size() == 1 + 3 + 9 + 27 + 81);
  for (std::size_t r = 0; r < s.size(); ++r) CHECK(s.rank(s.word(r)) == r);
  CHECK(s.word(0).empty());
  CHECK(s.degree(s.offset(3)) == 3);
}

TEST_CASE("empirical_law") {
  const auto flip = empirical_law({HermitianTuple({HermitianMatrix::diagonal({1.0, -1.0})})}, 2);
  CHECK(std::abs(flip.moment({0})) < 1e-15);
  CHECK(std::abs(flip.moment({0, 0}) - 1.0) < 1e-15);
  const auto id = empirical_law({HermitianTuple({HermitianMatrix::diagonal({1.0, 1.0})})}, 1);
  CHECK(std::abs(id.moment({0}) - 1.0) < 1e-15);
  CHECK(id.rho(0, 0) == doctest::Approx(1.0));

  auto rng = engine(21);
  const HermitianMatrix a = random_hermitian(4, rng), b = random_hermitian(4, rng);
  const std::vector<HermitianTuple> groups{HermitianTuple({a}), HermitianTuple({b})};
  const NCLaw law = empirical_law(groups, 3);
  const std::vector<const CMatrix*> mats{&a.matrix(), &b.matrix()};
  for (std::size_t r = 1; r < law.space().size(); ++r) {
    const Word w = law.space().word(r);
    CMatrix p = CMatrix::Identity(4, 4);
    for (Symbol s : w) p = p * *mats[s];
    CHECK(std::abs(law.moment_at(r) - p.trace() / 4.0) < 1e-10);
  }
  CHECK(invariants_hold(law, 1e-9));
  CHECK_THROWS_AS(empirical_law({HermitianTuple({a}), HermitianTuple({HermitianMatrix::zero(3)})}, 2), InvalidInput);
}

TEST_CASE("empirical law of a conjugated single group is unchanged") {
  auto rng = engine(22);
  const HermitianTuple a({random_hermitian(5, rng), random_hermitian(5, rng)});
  const UnitaryMatrix u = haar_unitary(5, rng);
  const NCLaw before = empirical_law({a}, 4), after = empirical_law({conjugate_tuple(u, a)}, 4);
  CHECK(law_deviation(before, after, 4).max_deviation < 1e-9);
}

TEST_CASE("standard laws") {
  const NCLaw p = projection_law(0.5, 3);
  CHECK(p.moment({0}).real() == doctest::Approx(0.5));
  CHECK(p.moment({0, 0}).real() == doctest::Approx(0.5));
  const NCLaw s = semicircular_law(1.0, 6);
  CHECK(s.moment({0, 0}).real() == doctest::Approx(1.0));
  CHECK(s.moment({0, 0, 0, 0}).real() == doctest::Approx(2.0));
  CHECK(s.moment(Word(6, 0)).real() == doctest::Approx(5.0));
  CHECK(std::abs(s.moment({0, 0, 0})) < 1e-15);
  const NCLaw t = two_point_law(1.0, -1.0, 0.5, 2);
  CHECK(std::abs(t.moment({0})) < 1e-15);
  CHECK(t.moment({0, 0}).real() == doctest::Approx(1.0));
  CHECK_THROWS_AS(projection_law(1.0, 2), InvalidInput);
  CHECK_THROWS_AS(semicircular_law(0.0, 2), InvalidInput);
  CHECK_THROWS_AS(two_point_law(1.0, 0.0, 1.5, 2), InvalidInput);
  CHECK_THROWS_AS(standard_law("gamma(1)", 2), InvalidInput);
  CHECK(law_deviation(standard_law("two_point(1, -1, 0.5)", 4), two_point_law(1.0, -1.0, 0.5, 4), 4).max_deviation ==
        0.0);
  CHECK(invariants_hold(s));

  // GUE at N = 256 against the semicircle.
  auto rng = engine(23);
  const HermitianMatrix h = gue_hermitian(256, rng);
  const NCLaw e = empirical_law({HermitianTuple({h})}, 4);
  CHECK(std::abs(e.moment({0, 0}) - s.moment({0, 0})) < 0.05);
  CHECK(std::abs(e.moment({0, 0, 0, 0}) - s.moment({0, 0, 0, 0})) < 0.1);
}

TEST_CASE("law_deviation") {
  const NCLaw p = projection_law(0.5, 4);
  CHECK(law_deviation(p, p, 4).max_deviation == 0.0);
  CHECK(law_deviation(p, two_point_law(1.0, 0.0, 0.5, 4), 4).max_deviation < 1e-15);
  const NCLaw id = empirical_law({HermitianTuple({HermitianMatrix::diagonal({1.0, 1.0})})}, 2);
  const auto d = law_deviation(id, two_point_law(1.0, -1.0, 0.5, 2), 2);
  CHECK(d.max_deviation == doctest::Approx(1.0));
  CHECK(d.worst_word == Word{0});
  CHECK_THROWS_AS(law_deviation(p, free_product_law({p, p}, 2), 2), InvalidInput);
}

TEST_CASE("free product: lowest cases") {
  const NCLaw x = two_point_law(2.0, -1.0, 0.3, 4), y = projection_law(0.4, 4);
  const NCLaw f = free_product_law({x, y}, 4);
  const Complex tx = x.moment({0}), ty = y.moment({0}), tx2 = x.moment({0, 0}), ty2 = y.moment({0, 0});
  CHECK(std::abs(f.moment({0, 1}) - tx * ty) < 1e-14);
  CHECK(std::abs(f.moment({0, 1, 0, 1}) - (tx2 * ty * ty + tx * tx * ty2 - tx * tx * ty * ty)) < 1e-13);
  for (int k = 1; k <= 4; ++k) {
    CHECK(f.moment(Word(static_cast<std::size_t>(k), 0)) == x.moment(Word(static_cast<std::size_t>(k), 0)));
    CHECK(f.moment(Word(static_cast<std::size_t>(k), 1)) == y.moment(Word(static_cast<std::size_t>(k), 0)));
  }
  CHECK(invariants_hold(f));
  CHECK_THROWS_AS(free_product_law({x, two_point_law(1.0, 0.0, 0.5, 2)}, 3), InvalidInput);
}

TEST_CASE("free product agrees with the non-crossing cumulant oracle up to degree 8") {
  const int K = 8;
  const std::vector<NCLaw> marginals{semicircular_law(1.3, K), two_point_law(1.0, -0.5, 0.3, K),
                                     projection_law(0.4, K)};
  std::vector<std::vector<double>> kappas;
  for (const auto& m : marginals) kappas.push_back(free_cumulants(power_moments(m, K), K));
  // Semicircle cumulants: only kappa_2 = sigma^2.
  CHECK(std::abs(kappas[0][2] - 1.69) < 1e-12);
  CHECK(std::abs(kappas[0][4]) < 1e-12);

  const NCLaw two = free_product_law({marginals[0], marginals[1]}, K);
  double worst = 0.0;
  for (std::size_t r = 1; r < two.space().size(); ++r) {
    const Word w = two.space().word(r);
    const std::vector<int> colors(w.begin(), w.end());
    worst = std::max(worst, std::abs(two.moment_at(r) - nc_mixed_moment(colors, kappas)));
  }
  CHECK(worst < 1e-10);

  const NCLaw three = free_product_law(marginals, 6);
  worst = 0.0;
  for (std::size_t r = 1; r < three.space().size(); ++r) {
    const Word w = three.space().word(r);
    const std::vector<int> colors(w.begin(), w.end());
    worst = std::max(worst, std::abs(three.moment_at(r) - nc_mixed_moment(colors, kappas)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("free product: degree restriction, single marginal, group restriction") {
  auto rng = engine(24);
  const NCLaw a = empirical_law({HermitianTuple({random_hermitian(3, rng), random_hermitian(3, rng)})}, 5);
  const NCLaw b = semicircular_law(1.0, 5);
  const NCLaw f5 = free_product_law({a, b}, 5), f3 = free_product_law({a, b}, 3);
  CHECK(law_deviation(restrict_degree(f5, 3), f3, 3).max_deviation < 1e-12);
  CHECK(law_deviation(free_product_law({a}, 4), restrict_degree(a, 4), 4).max_deviation == 0.0);
  CHECK(law_deviation(restrict_groups(f5, {0}), a, 5).max_deviation < 1e-14);
  CHECK(law_deviation(restrict_groups(f5, {1}), b, 5).max_deviation < 1e-14);
  CHECK(invariants_hold(f5, 1e-9));
  // Group order does not matter.
  const NCLaw g = free_product_law({b, a}, 4);
  CHECK(law_deviation(restrict_groups(g, {1, 0}), restrict_degree(f5, 4), 4).max_deviation < 1e-12);
}

TEST_CASE("free unitary Brownian motion moments") {
  for (double t : {0.0, 0.3, 1.0, 2.5}) {
    CHECK(free_unitary_bm_moment(t, 1) == doctest::Approx(std::exp(-t / 2)));
    CHECK(free_unitary_bm_moment(t, 2) == doctest::Approx(std::exp(-t) * (1.0 - t)));
    CHECK(free_unitary_bm_moment(t, 3) == doctest::Approx(std::exp(-1.5 * t) * (1.0 - 3.0 * t + 1.5 * t * t)));
  }
  const NCLaw u = free_unitary_bm_law(0.5, 4);
  CHECK(invariants_hold(u));
  const Alphabet& al = u.alphabet();
  CHECK(std::abs(u.moment(al.parse("V[1] V[1]*")) - 1.0) < 1e-14);
  CHECK(std::abs(u.moment(al.parse("V[1] V[1]")) - free_unitary_bm_moment(0.5, 2)) < 1e-14);
  CHECK(std::abs(u.moment(al.parse("V[1]* V[1]*")) - free_unitary_bm_moment(0.5, 2)) < 1e-14);
}

TEST_CASE("conjugated presence law") {
  const NCLaw x = two_point_law(1.0, -1.0, 0.3, 6);
  const NCLaw v = free_unitary_bm_law(0.4, 6);
  const NCLaw law = conjugated_presence_law({x}, {v}, 2);
  const Alphabet& al = law.alphabet();
  const double tx = x.moment({0}).real();
  CHECK(std::abs(law.moment(al.parse("X[1,1]")) - tx) < 1e-14);
  CHECK(std::abs(law.moment(al.parse("X[1,1] X[1,1]")) - 1.0) < 1e-14);
  // tau(v . v x v^*) = tau(v x) = tau(v) tau(x).
  CHECK(std::abs(law.moment(al.parse("V[1] X[1,1]")) - std::exp(-0.2) * tx) < 1e-14);
  CHECK(invariants_hold(law));
  CHECK_THROWS_AS(conjugated_presence_law({x}, {v}, 5), InvalidInput);

  // Monte Carlo oracle: deterministic diagonal X and Haar v are asymptotically free,
  // so (v X v^*, v) at N = 300 approximates the law with tau(v^k) = 0.
  const NCLaw haar = unitary_law({1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0}, 6);
  const NCLaw target = conjugated_presence_law({x}, {haar}, 2);
  const int n = 300;
  std::vector<double> eig(n);
  for (int k = 0; k < n; ++k) eig[static_cast<std::size_t>(k)] = k < 90 ? 1.0 : -1.0;
  auto rng = engine(25);
  const UnitaryMatrix w = haar_unitary(n, rng);
  const HermitianTuple conj = conjugate_tuple(w, HermitianTuple({HermitianMatrix::diagonal(eig)}));
  const NCLaw emp = empirical_law({conj}, UnitaryTuple(n, {w}), 2);
  CHECK(law_deviation(emp, target, 2).max_deviation < 0.05);
}
