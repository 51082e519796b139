#include "mslab/random.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace mslab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomSeed RandomSeed::child(std::uint64_t index) const {
  return {root, splitmix64(stream ^ splitmix64(index + 0x632BE59BD9B4E019ULL))};
}

StreamEngine::StreamEngine(const RandomSeed& seed)
    : key_(splitmix64(splitmix64(seed.root) ^ (seed.stream * 0xD1342543DE82EF95ULL + 1))) {}

StreamEngine::result_type StreamEngine::operator()() {
  return splitmix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_);
}

double StreamEngine::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

double StreamEngine::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // Box-Muller; 1 - uniform() lies in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
  has_spare_ = true;
  return r * std::cos(2.0 * std::numbers::pi * u2);
}

UnitaryMatrix haar_unitary(int n, StreamEngine& rng) {
  if (n < 1) throw InvalidInput("haar_unitary: N must be positive");
  CMatrix z(n, n);
  const double scale = std::sqrt(0.5);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) z(i, j) = Complex(rng.normal(), rng.normal()) * scale;
  Eigen::HouseholderQR<CMatrix> qr(z);
  CMatrix q = qr.householderQ();
  const CMatrix& r = qr.matrixQR();
  for (int k = 0; k < n; ++k) {
    const double mag = std::abs(r(k, k));
    const Complex phase = mag > 0.0 ? r(k, k) / mag : Complex(1.0);
    q.col(k) *= phase;
  }
  return UnitaryMatrix::trusted(std::move(q));
}

UnitaryMatrix haar_special_unitary(int n, StreamEngine& rng) {
  if (n == 1) return UnitaryMatrix::identity(1);
  UnitaryMatrix u = haar_unitary(n, rng);
  const double theta = std::arg(u.matrix().determinant());
  return UnitaryMatrix::trusted(u.matrix() * std::polar(1.0, -theta / n));
}

UnitaryMatrix rotated_special_unitary(int n, StreamEngine& rng) {
  const Complex zeta = std::polar(1.0, 2.0 * std::numbers::pi * rng.uniform());
  UnitaryMatrix v = haar_special_unitary(n, rng);
  return UnitaryMatrix::trusted(v.matrix() * zeta);
}

HermitianMatrix gue_hermitian(int n, StreamEngine& rng) {
  if (n < 1) throw InvalidInput("gue_hermitian: N must be positive");
  CMatrix h(n, n);
  const double diag = 1.0 / std::sqrt(static_cast<double>(n));
  const double off = std::sqrt(0.5 / n);
  for (int j = 0; j < n; ++j) {
    h(j, j) = rng.normal() * diag;
    for (int i = j + 1; i < n; ++i) {
      h(i, j) = Complex(rng.normal(), rng.normal()) * off;
      h(j, i) = std::conj(h(i, j));
    }
  }
  return HermitianMatrix(h);
}

HermitianMatrix hermitian_from_coordinates(int n, const RVector& x) {
  if (x.size() != static_cast<Eigen::Index>(n) * n) throw InvalidInput("hermitian_from_coordinates: need N^2 coordinates");
  CMatrix a = CMatrix::Zero(n, n);
  Eigen::Index k = 0;
  for (int j = 0; j < n; ++j) a(j, j) = x(k++);
  const double s = std::sqrt(0.5);
  for (int j = 0; j < n; ++j)
    for (int l = j + 1; l < n; ++l) {
      const Complex v(x(k) * s, x(k + 1) * s);
      k += 2;
      a(j, l) = v;
      a(l, j) = std::conj(v);
    }
  return HermitianMatrix(a);
}

HermitianMatrix uniform_frobenius_ball(int n, double radius, StreamEngine& rng) {
  const int dim = n * n;
  RVector x(dim);
  for (int k = 0; k < dim; ++k) x(k) = rng.normal();
  const double norm = x.norm();
  const double r = radius * std::pow(rng.uniform(), 1.0 / dim);
  return hermitian_from_coordinates(n, x * (r / (norm > 0.0 ? norm : 1.0)));
}

BallSample uniform_opnorm_ball(int n, double radius, StreamEngine& rng, std::uint64_t cap) {
  if (n < 1) throw InvalidInput("uniform_opnorm_ball: N must be positive");
  if (!(radius > 0.0) || !std::isfinite(radius)) throw InvalidInput("uniform_opnorm_ball: R must be positive and finite");
  const double frob = radius * std::sqrt(static_cast<double>(n));
  for (std::uint64_t attempt = 1; attempt <= cap; ++attempt) {
    HermitianMatrix a = uniform_frobenius_ball(n, frob, rng);
    if (n == 1 || op_norm(a) <= radius) return {std::move(a), attempt};
  }
  throw SamplingBudgetError("uniform_opnorm_ball: no acceptance within " + std::to_string(cap) + " attempts at N = " +
                                std::to_string(n),
                            cap);
}

double log_euclidean_ball_volume(int dim, double radius) {
  const double d = dim;
  return 0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0) + d * std::log(radius);
}

double log_opnorm_ball_volume(int n, double radius) {
  if (n < 1 || !(radius > 0.0)) throw InvalidInput("log_opnorm_ball_volume: bad arguments");
  const double nn = n;
  // Weyl constant for the Hilbert-Schmidt Lebesgue measure with the integral over unordered spectra.
  double out = 0.5 * nn * (nn - 1.0) * std::log(2.0 * std::numbers::pi);
  for (int j = 1; j <= n; ++j) out -= std::lgamma(j + 1.0);
  // int_{[-R,R]^N} Vandermonde^2 = (2R)^{N^2} * Selberg(1,1,1).
  out += nn * nn * std::log(2.0 * radius);
  for (int j = 0; j < n; ++j) out += 2.0 * std::lgamma(j + 1.0) + std::lgamma(j + 2.0) - std::lgamma(nn + j + 1.0);
  return out;
}

UnitaryMatrix brownian_unitary(const BrownianConfig& c) {
  if (c.n < 1 || c.steps < 1 || !(c.t >= 0.0)) throw InvalidInput("brownian_unitary: invalid configuration");
  if (c.t == 0.0) return UnitaryMatrix::identity(c.n);
  StreamEngine rng(c.seed);
  const double s = std::sqrt(c.t / c.steps);
  CMatrix v = CMatrix::Identity(c.n, c.n);
  for (int k = 0; k < c.steps; ++k) v = exp_i(gue_hermitian(c.n, rng), s).matrix() * v;
  return UnitaryMatrix::trusted(std::move(v));
}

}  // namespace mslab
