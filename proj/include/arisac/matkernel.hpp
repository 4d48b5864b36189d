#pragma once

// Dense complex linear-algebra primitives shared by every module. All
// routines are free functions over Eigen expressions; storage is column-major
// so that vec() is column stacking.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <string>

#include "arisac/errors.hpp"

namespace arisac {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kPi = 3.14159265358979323846;

/// Largest absolute entry, 0 for empty matrices.
template <typename Derived>
double max_abs(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) return 0.0;
  return x.cwiseAbs().maxCoeff();
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& x, double rel_tol = 1e-12) {
  if (x.rows() != x.cols()) return false;
  const double scale = std::max(1.0, max_abs(x));
  return max_abs(x - x.adjoint()) <= rel_tol * scale;
}

/// Column stacking.
template <typename Derived>
Vector<typename Derived::Scalar> vec(const Eigen::MatrixBase<Derived>& x) {
  Matrix<typename Derived::Scalar> tmp = x;
  return Eigen::Map<const Vector<typename Derived::Scalar>>(tmp.data(), tmp.size());
}

/// Inverse of vec for a rows x cols target.
template <typename Derived>
Matrix<typename Derived::Scalar> unvec(const Eigen::MatrixBase<Derived>& v, Index rows,
                                       Index cols) {
  if (v.size() != rows * cols) {
    throw DimensionError("unvec: length " + std::to_string(v.size()) + " != " +
                         std::to_string(rows) + "x" + std::to_string(cols));
  }
  Vector<typename Derived::Scalar> tmp = v;
  return Eigen::Map<const Matrix<typename Derived::Scalar>>(tmp.data(), rows, cols);
}

template <typename DerivedX, typename DerivedY>
auto kron(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedX::Scalar,
                                                      typename DerivedY::Scalar>::ReturnType;
  Matrix<Scalar> out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Index j = 0; j < x.cols(); ++j) {
    for (Index i = 0; i < x.rows(); ++i) {
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) =
          Scalar(x(i, j)) * y.template cast<Scalar>();
    }
  }
  return out;
}

template <typename DerivedX, typename DerivedY>
auto hadamard(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y) {
  if (x.rows() != y.rows() || x.cols() != y.cols()) {
    throw DimensionError("hadamard: shapes " + std::to_string(x.rows()) + "x" +
                         std::to_string(x.cols()) + " and " + std::to_string(y.rows()) + "x" +
                         std::to_string(y.cols()) + " differ");
  }
  using Scalar = typename Eigen::ScalarBinaryOpTraits<typename DerivedX::Scalar,
                                                      typename DerivedY::Scalar>::ReturnType;
  Matrix<Scalar> out = x.template cast<Scalar>().cwiseProduct(y.template cast<Scalar>());
  return out;
}

template <typename Scalar>
struct HermitianEigen {
  RVector values;          // ascending
  Matrix<Scalar> vectors;  // columns are eigenvectors
};

template <typename Derived>
HermitianEigen<typename Derived::Scalar> eig_hermitian(const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  if (x.rows() != x.cols()) throw DimensionError("eig_hermitian: matrix is not square");
  if (!is_hermitian(x, 1e-10)) throw DimensionError("eig_hermitian: matrix is not Hermitian");
  if (x.size() == 0) return {RVector(0), Matrix<Scalar>(0, 0)};
  Matrix<Scalar> sym = (x + x.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(sym);
  return {solver.eigenvalues(), solver.eigenvectors()};
}

/// Smallest eigenvalue of the Hermitian part of x.
template <typename Derived>
double min_eig(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) return 0.0;
  Matrix<typename Derived::Scalar> sym = (x + x.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix<typename Derived::Scalar>> solver(sym,
                                                                         Eigen::EigenvaluesOnly);
  return solver.eigenvalues()(0);
}

/// Spectral norm of a Hermitian matrix.
template <typename Derived>
double hermitian_norm(const Eigen::MatrixBase<Derived>& x) {
  if (x.size() == 0) return 0.0;
  Matrix<typename Derived::Scalar> sym = (x + x.adjoint()) / 2.0;
  Eigen::SelfAdjointEigenSolver<Matrix<typename Derived::Scalar>> solver(sym,
                                                                         Eigen::EigenvaluesOnly);
  return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Lower-triangular L with L L^H = X + eps I. eps is zero when X is numerically
/// positive definite and at most 10 * shift_tol * ||X|| otherwise.
template <typename Derived>
Matrix<typename Derived::Scalar> cholesky_psd(const Eigen::MatrixBase<Derived>& x,
                                              double shift_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  using Mat = Matrix<Scalar>;
  if (x.rows() != x.cols()) throw DimensionError("cholesky_psd: matrix is not square");
  if (!is_hermitian(x, 1e-10)) throw DimensionError("cholesky_psd: matrix is not Hermitian");
  const Index n = x.rows();
  Mat sym = (x + x.adjoint()) / 2.0;
  const double norm = hermitian_norm(sym);
  if (norm == 0.0) return Mat::Zero(n, n);
  const double lo = min_eig(sym);
  if (lo < -shift_tol * norm) {
    throw NotPsdError("cholesky_psd: min eigenvalue " + std::to_string(lo) +
                      " below tolerance " + std::to_string(-shift_tol * norm));
  }
  Eigen::LLT<Mat> llt(sym);
  if (llt.info() == Eigen::Success && lo > 0.0) {
    Mat l = llt.matrixL();
    if (l.diagonal().real().minCoeff() > 0.0) return l;
  }
  double eps = std::max(0.0, -lo) + shift_tol * norm;
  for (int attempt = 0; attempt < 4 && eps <= 10.0 * shift_tol * norm; ++attempt) {
    Mat shifted = sym;
    shifted.diagonal().array() += Scalar(eps);
    Eigen::LLT<Mat> shifted_llt(shifted);
    if (shifted_llt.info() == Eigen::Success) return shifted_llt.matrixL();
    eps *= 2.0;
  }
  throw NotPsdError("cholesky_psd: factorization failed after diagonal shift");
}

/// F with F F^H = X for Hermitian PSD X; eigenvalues below zero are clipped.
/// Only columns with eigenvalue above rank_tol * max eigenvalue are kept.
template <typename Derived>
Matrix<typename Derived::Scalar> psd_factor(const Eigen::MatrixBase<Derived>& x,
                                            double rank_tol = 0.0) {
  using Scalar = typename Derived::Scalar;
  auto eig = eig_hermitian(x);
  const Index n = x.rows();
  if (n == 0) return Matrix<Scalar>(0, 0);
  const double top = std::max(0.0, eig.values(n - 1));
  Index keep = 0;
  for (Index i = 0; i < n; ++i) {
    if (eig.values(i) > rank_tol * top && eig.values(i) > 0.0) ++keep;
  }
  Matrix<Scalar> f(n, keep);
  Index col = 0;
  for (Index i = n - 1; i >= 0 && col < keep; --i) {
    if (eig.values(i) > rank_tol * top && eig.values(i) > 0.0) {
      f.col(col++) = eig.vectors.col(i) * std::sqrt(eig.values(i));
    }
  }
  return f;
}

/// Solves X Y = B for Hermitian positive definite X.
template <typename DerivedX, typename DerivedB>
Matrix<typename DerivedX::Scalar> hermitian_solve(const Eigen::MatrixBase<DerivedX>& x,
                                                  const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedX::Scalar;
  using Mat = Matrix<Scalar>;
  if (x.rows() != x.cols() || x.rows() != b.rows()) {
    throw DimensionError("hermitian_solve: incompatible shapes");
  }
  if (!is_hermitian(x, 1e-10)) throw DimensionError("hermitian_solve: matrix is not Hermitian");
  Mat sym = (x + x.adjoint()) / 2.0;
  Eigen::LLT<Mat> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw ConditioningError("hermitian_solve: matrix is not positive definite");
  }
  Mat rhs = b.template cast<Scalar>();
  Mat y = llt.solve(rhs);
  const double bn = rhs.norm();
  const double res = (sym * y - rhs).norm();
  if (!std::isfinite(res) || res > 1e-9 * std::max(bn, 1e-300)) {
    // one refinement step before giving up
    y += llt.solve(Mat(rhs - sym * y));
    const double res2 = (sym * y - rhs).norm();
    if (!std::isfinite(res2) || (bn > 0.0 && res2 > 1e-9 * bn)) {
      throw ConditioningError("hermitian_solve: residual " + std::to_string(res2) +
                              " exceeds tolerance");
    }
  }
  return y;
}

template <typename Derived>
Matrix<typename Derived::Scalar> diag_matrix(const Eigen::MatrixBase<Derived>& v) {
  return v.asDiagonal();
}

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }

}  // namespace arisac
