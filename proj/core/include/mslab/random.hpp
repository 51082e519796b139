#pragma once

#include <cstdint>
#include <limits>

#include "mslab/linalg.hpp"

namespace mslab {

/// (root seed, stream id). Child streams are derived by hashing, so every
/// sample index owns an independent generator regardless of which worker draws it.
struct RandomSeed {
  std::uint64_t root = 0;
  std::uint64_t stream = 0;

  RandomSeed child(std::uint64_t index) const;
  /// Domain-separated child: child(tag)·child(index).
  RandomSeed derive(std::uint64_t tag, std::uint64_t index) const { return child(tag).child(index); }

  bool operator==(const RandomSeed&) const = default;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Counter-based generator: output k is a SplitMix64 finalizer of key + k * golden.
/// Satisfies UniformRandomBitGenerator.
class StreamEngine {
 public:
  using result_type = std::uint64_t;

  explicit StreamEngine(const RandomSeed& seed);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double normal();

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Haar unitary: complex Ginibre, QR, phases of diag(R) absorbed into Q.
UnitaryMatrix haar_unitary(int n, StreamEngine& rng);
/// Haar on SU(N): Haar on U(N) times the principal-branch root det(U)^{-1/N}.
UnitaryMatrix haar_special_unitary(int n, StreamEngine& rng);
/// zeta * V with zeta uniform on the circle and V Haar on SU(N); Haar on U(N).
UnitaryMatrix rotated_special_unitary(int n, StreamEngine& rng);

/// GUE normalized so that E tr_N(H^2) = 1.
HermitianMatrix gue_hermitian(int n, StreamEngine& rng);

/// Coordinates x in R^{N^2} of a Hermitian matrix in the orthonormal basis
/// {E_jj, (E_jk + E_kj)/sqrt2, i(E_jk - E_kj)/sqrt2} of the Hilbert-Schmidt
/// inner product; |x| equals the Frobenius norm.
HermitianMatrix hermitian_from_coordinates(int n, const RVector& x);

/// Uniform on the Frobenius ball of radius `radius` in M_N^sa.
HermitianMatrix uniform_frobenius_ball(int n, double radius, StreamEngine& rng);

struct BallSample {
  HermitianMatrix matrix;
  std::uint64_t attempts = 0;
};

inline constexpr std::uint64_t kDefaultRejectionCap = 1'000'000;

/// Lebesgue-uniform on {A : ||A||_op <= R}: Frobenius ball of radius R sqrt(N),
/// rejected until the operator norm is at most R. Throws SamplingBudgetError past `cap`.
BallSample uniform_opnorm_ball(int n, double radius, StreamEngine& rng,
                               std::uint64_t cap = kDefaultRejectionCap);

/// log of the Euclidean volume of a ball of radius r in dimension d.
double log_euclidean_ball_volume(int dim, double radius);

/// log Lebesgue volume of the operator-norm ball (M_N^sa)_R, from the Weyl
/// integration formula and the Selberg integral.
double log_opnorm_ball_volume(int n, double radius);

struct BrownianConfig {
  int n = 1;
  double t = 0.0;
  int steps = 1;
  RandomSeed seed;
};

/// V = prod_{k=steps..1} exp(i sqrt(t/steps) H_k) with independent GUE increments.
UnitaryMatrix brownian_unitary(const BrownianConfig& config);

}  // namespace mslab
