#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "mslab/linalg.hpp"
#include "mslab/random.hpp"

namespace testing {

inline mslab::StreamEngine engine(std::uint64_t root, std::uint64_t stream = 0) {
  return mslab::StreamEngine(mslab::RandomSeed{root, stream});
}

// Hermitian matrix with independent standard normal entries (not GUE-scaled).
inline mslab::HermitianMatrix random_hermitian(int n, mslab::StreamEngine& rng, double scale = 1.0) {
  mslab::CMatrix a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = mslab::Complex(rng.normal(), rng.normal()) * scale;
  return mslab::HermitianMatrix((a + a.adjoint()) / 2.0);
}

inline double max_abs(const mslab::CMatrix& a) { return a.cwiseAbs().maxCoeff(); }

// Running mean and variance.
struct Moments {
  double n = 0.0, mean = 0.0, m2 = 0.0;
  void add(double x) {
    n += 1.0;
    const double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double variance() const { return n > 1.0 ? m2 / (n - 1.0) : 0.0; }
  double se() const { return std::sqrt(variance() / n); }
};

}  // namespace testing
