#include "mslab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mslab {
namespace {

void require_finite(const CMatrix& a, const char* what) {
  if (!a.allFinite()) throw InvalidInput(std::string(what) + ": non-finite entries");
}

void require_square(const CMatrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0)
    throw InvalidInput(std::string(what) + ": expected a non-empty square matrix");
}

Eigen::SelfAdjointEigenSolver<CMatrix> eig(const CMatrix& a) {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(a, Eigen::ComputeEigenvectors);
  if (solver.info() != Eigen::Success) throw InvalidInput("Hermitian eigensolver did not converge");
  return solver;
}

}  // namespace

HermitianMatrix::HermitianMatrix(const CMatrix& a) {
  require_square(a, "HermitianMatrix");
  require_finite(a, "HermitianMatrix");
  const double defect = (a - a.adjoint()).cwiseAbs().maxCoeff();
  if (defect > tol::kHermitianInput)
    throw InvalidInput("HermitianMatrix: input is not self-adjoint (defect " + std::to_string(defect) + ")");
  m_ = (a + a.adjoint()) * 0.5;
}

HermitianMatrix HermitianMatrix::diagonal(const std::vector<double>& values) {
  if (values.empty()) throw InvalidInput("HermitianMatrix::diagonal: empty spectrum");
  RVector d = Eigen::Map<const RVector>(values.data(), static_cast<Eigen::Index>(values.size()));
  return HermitianMatrix(CMatrix(d.cast<Complex>().asDiagonal()));
}

HermitianMatrix HermitianMatrix::zero(int n) {
  if (n < 1) throw InvalidInput("HermitianMatrix::zero: size must be positive");
  return HermitianMatrix(CMatrix::Zero(n, n));
}

RVector HermitianMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<CMatrix> solver(m_, Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success) throw InvalidInput("Hermitian eigensolver did not converge");
  return solver.eigenvalues();
}

UnitaryMatrix::UnitaryMatrix(const CMatrix& u) {
  require_square(u, "UnitaryMatrix");
  require_finite(u, "UnitaryMatrix");
  const double defect = unitarity_defect(u);
  if (defect > tol::kUnitary)
    throw InvalidInput("UnitaryMatrix: unitarity defect " + std::to_string(defect));
  m_ = u;
}

UnitaryMatrix UnitaryMatrix::identity(int n) {
  if (n < 1) throw InvalidInput("UnitaryMatrix::identity: size must be positive");
  return trusted(CMatrix::Identity(n, n));
}

UnitaryMatrix UnitaryMatrix::trusted(CMatrix u) {
  UnitaryMatrix out;
  out.m_ = std::move(u);
  return out;
}

HermitianTuple::HermitianTuple(std::vector<HermitianMatrix> matrices) : mats_(std::move(matrices)) {
  if (mats_.empty()) throw InvalidInput("HermitianTuple: needs at least one matrix");
  n_ = mats_.front().size();
  for (const auto& m : mats_)
    if (m.size() != n_) throw InvalidInput("HermitianTuple: matrices of different sizes");
}

UnitaryTuple::UnitaryTuple(int n, std::vector<UnitaryMatrix> unitaries) : n_(n), us_(std::move(unitaries)) {
  if (n < 1) throw InvalidInput("UnitaryTuple: size must be positive");
  for (const auto& u : us_)
    if (u.size() != n_) throw InvalidInput("UnitaryTuple: unitaries of different sizes");
}

UnitaryTuple::UnitaryTuple(std::vector<UnitaryMatrix> unitaries)
    : UnitaryTuple(unitaries.empty() ? 0 : unitaries.front().size(), std::move(unitaries)) {}

UnitaryTuple UnitaryTuple::identity(int count, int n) {
  return UnitaryTuple(n, std::vector<UnitaryMatrix>(static_cast<std::size_t>(count), UnitaryMatrix::identity(n)));
}

Complex normalized_trace(const CMatrix& a) { return a.trace() / static_cast<double>(a.rows()); }

double op_norm(const CMatrix& a) {
  require_square(a, "op_norm");
  require_finite(a, "op_norm");
  Eigen::JacobiSVD<CMatrix> svd(a);
  return svd.singularValues()(0);
}

double op_norm(const HermitianMatrix& a) { return a.eigenvalues().cwiseAbs().maxCoeff(); }

double p_norm(const CMatrix& a, double p) {
  if (!(p >= 1.0)) throw InvalidInput("p_norm: p must be >= 1");
  require_square(a, "p_norm");
  require_finite(a, "p_norm");
  Eigen::JacobiSVD<CMatrix> svd(a);
  const RVector s = svd.singularValues();
  return std::pow(s.array().pow(p).mean(), 1.0 / p);
}

double p_norm(const HermitianMatrix& a, double p) {
  if (!(p >= 1.0)) throw InvalidInput("p_norm: p must be >= 1");
  return std::pow(a.eigenvalues().cwiseAbs().array().pow(p).mean(), 1.0 / p);
}

double unitarity_defect(const CMatrix& u) {
  return (u * u.adjoint() - CMatrix::Identity(u.rows(), u.cols())).cwiseAbs().maxCoeff();
}

HermitianMatrix apply_spectral(const HermitianMatrix& a, const std::function<double(double)>& f) {
  const auto solver = eig(a.matrix());
  RVector mapped = solver.eigenvalues().unaryExpr(f);
  const CMatrix& v = solver.eigenvectors();
  return HermitianMatrix(v * mapped.cast<Complex>().asDiagonal() * v.adjoint());
}

HermitianMatrix truncate_fR(const HermitianMatrix& a, double radius) {
  if (!(radius > 0.0)) throw InvalidInput("truncate_fR: R must be positive");
  const auto solver = eig(a.matrix());
  const RVector& lambda = solver.eigenvalues();
  // Identity on [-R, R]: return the input bit-for-bit when nothing moves.
  if (lambda.cwiseAbs().maxCoeff() <= radius) return a;
  const RVector clamped = lambda.cwiseMax(-radius).cwiseMin(radius);
  const CMatrix& v = solver.eigenvectors();
  return HermitianMatrix(v * clamped.cast<Complex>().asDiagonal() * v.adjoint());
}

UnitaryMatrix exp_i(const HermitianMatrix& h, double s) {
  // Scaling and squaring with a Taylor series run to machine precision.
  const CMatrix& a = h.matrix();
  const double bound = std::abs(s) * a.norm();
  int squarings = 0;
  double scale = 1.0;
  while (bound * scale > 0.5) {
    scale *= 0.5;
    ++squarings;
  }
  const CMatrix x = Complex(0.0, s * scale) * a;
  const Eigen::Index n = a.rows();
  CMatrix term = CMatrix::Identity(n, n);
  CMatrix sum = term;
  for (int k = 1; k < 40; ++k) {
    term = (term * x) / static_cast<double>(k);
    sum += term;
    if (term.norm() < 1e-18) break;
  }
  for (int j = 0; j < squarings; ++j) sum = sum * sum;
  return UnitaryMatrix::trusted(std::move(sum));
}

HermitianMatrix conjugate(const UnitaryMatrix& u, const HermitianMatrix& a) {
  if (u.size() != a.size()) throw InvalidInput("conjugate: size mismatch");
  return HermitianMatrix(u.matrix() * a.matrix() * u.matrix().adjoint());
}

HermitianTuple conjugate_tuple(const UnitaryMatrix& u, const HermitianTuple& a) {
  if (u.size() != a.size()) throw InvalidInput("conjugate_tuple: size mismatch");
  std::vector<HermitianMatrix> out;
  out.reserve(a.matrices().size());
  for (const auto& m : a.matrices()) out.push_back(conjugate(u, m));
  return HermitianTuple(std::move(out));
}

double d2_distance(const UnitaryTuple& u, const UnitaryTuple& v) {
  if (u.count() != v.count() || u.size() != v.size()) throw InvalidInput("d2_distance: shape mismatch");
  double acc = 0.0;
  for (int i = 0; i < u.count(); ++i)
    acc += (u[i].matrix() - v[i].matrix()).squaredNorm() / static_cast<double>(u.size());
  return std::sqrt(acc);
}

UnitaryTuple multiply_right(const UnitaryTuple& u, const UnitaryTuple& w) {
  if (u.count() != w.count() || u.size() != w.size()) throw InvalidInput("multiply_right: shape mismatch");
  std::vector<UnitaryMatrix> out;
  out.reserve(static_cast<std::size_t>(u.count()));
  for (int i = 0; i < u.count(); ++i) out.push_back(UnitaryMatrix::trusted(u[i].matrix() * w[i].matrix()));
  return UnitaryTuple(u.size(), std::move(out));
}

}  // namespace mslab
