#pragma once

#include <complex>
#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "mslab/error.hpp"

namespace mslab {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using RVector = Eigen::VectorXd;

/// Tolerances shared by the numerical routines.
namespace tol {
inline constexpr double kHermitianInput = 1e-8;  // max |A - A^*| entry before symmetrization
inline constexpr double kUnitary = 1e-9;          // max |U U^* - I| entry
inline constexpr double kEigen = 1e-10;
}  // namespace tol

/// N x N self-adjoint matrix. Construction symmetrizes (A + A^*)/2 and rejects
/// inputs whose Hermitian defect exceeds tol::kHermitianInput.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const CMatrix& a);

  static HermitianMatrix diagonal(const std::vector<double>& values);
  static HermitianMatrix zero(int n);

  int size() const noexcept { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const noexcept { return m_; }

  /// Eigenvalues in ascending order.
  RVector eigenvalues() const;

 private:
  CMatrix m_;
};

/// N x N unitary matrix; construction checks U U^* = I to tol::kUnitary.
class UnitaryMatrix {
 public:
  UnitaryMatrix() = default;
  explicit UnitaryMatrix(const CMatrix& u);

  static UnitaryMatrix identity(int n);
  /// Wraps a matrix already known to be unitary (sampler output) without the O(N^3) check.
  static UnitaryMatrix trusted(CMatrix u);

  int size() const noexcept { return static_cast<int>(m_.rows()); }
  const CMatrix& matrix() const noexcept { return m_; }
  UnitaryMatrix adjoint() const { return trusted(m_.adjoint()); }

 private:
  CMatrix m_;
};

/// A group's multi-matrix (A_1, ..., A_r), all of size N, r >= 1.
class HermitianTuple {
 public:
  HermitianTuple() = default;
  explicit HermitianTuple(std::vector<HermitianMatrix> matrices);

  int size() const noexcept { return n_; }
  int arity() const noexcept { return static_cast<int>(mats_.size()); }
  const HermitianMatrix& operator[](int j) const { return mats_[static_cast<std::size_t>(j)]; }
  const std::vector<HermitianMatrix>& matrices() const noexcept { return mats_; }

 private:
  int n_ = 0;
  std::vector<HermitianMatrix> mats_;
};

/// Ordered unitaries (U_1, ..., U_n) sharing N. May be empty (n = 0) for a given N.
class UnitaryTuple {
 public:
  UnitaryTuple() = default;
  UnitaryTuple(int n, std::vector<UnitaryMatrix> unitaries);
  explicit UnitaryTuple(std::vector<UnitaryMatrix> unitaries);

  static UnitaryTuple identity(int count, int n);

  int size() const noexcept { return n_; }
  int count() const noexcept { return static_cast<int>(us_.size()); }
  const UnitaryMatrix& operator[](int i) const { return us_[static_cast<std::size_t>(i)]; }
  const std::vector<UnitaryMatrix>& unitaries() const noexcept { return us_; }

 private:
  int n_ = 0;
  std::vector<UnitaryMatrix> us_;
};

/// tr_N(A) = Tr(A)/N.
Complex normalized_trace(const CMatrix& a);

/// Largest singular value; spectral radius for Hermitian input.
double op_norm(const CMatrix& a);
double op_norm(const HermitianMatrix& a);

/// (tr_N |A|^p)^{1/p}, p >= 1.
double p_norm(const CMatrix& a, double p);
double p_norm(const HermitianMatrix& a, double p);

/// Largest |(U U^* - I)_{jk}|.
double unitarity_defect(const CMatrix& u);

/// f(A) through the eigendecomposition A = V diag(lambda) V^*.
HermitianMatrix apply_spectral(const HermitianMatrix& a, const std::function<double(double)>& f);

/// Clamps the spectrum to [-R, R] (the cut-off t -> R f(t/R) with f the clamp to [-1, 1]).
HermitianMatrix truncate_fR(const HermitianMatrix& a, double radius);

/// exp(i s H), exactly unitary up to rounding.
UnitaryMatrix exp_i(const HermitianMatrix& h, double s);

HermitianMatrix conjugate(const UnitaryMatrix& u, const HermitianMatrix& a);
HermitianTuple conjugate_tuple(const UnitaryMatrix& u, const HermitianTuple& a);

/// sqrt(sum_i ||U_i - V_i||_{2,tr_N}^2).
double d2_distance(const UnitaryTuple& u, const UnitaryTuple& v);

/// Componentwise U_i W_i.
UnitaryTuple multiply_right(const UnitaryTuple& u, const UnitaryTuple& w);

}  // namespace mslab
