#pragma once

// Symmetric cones used by the interior-point solver. Each cone works on a
// contiguous segment of the slack/dual vectors and owns its Nesterov-Todd
// scaling for the current iterate:  W z = W^{-T} s = lambda.

#include <memory>
#include <vector>

#include "arisac/conic.hpp"

namespace arisac::conic {

using VecRef = Eigen::Ref<RVector>;
using ConstVecRef = Eigen::Ref<const RVector>;

class Cone {
 public:
  virtual ~Cone() = default;
  virtual Index dim() const = 0;
  virtual Index degree() const = 0;

  virtual void identity(VecRef out) const = 0;
  /// Smallest "eigenvalue" of u in the cone's Jordan algebra.
  virtual double min_eig(ConstVecRef u) const = 0;
  virtual void product(ConstVecRef u, ConstVecRef v, VecRef out) const = 0;
  /// Solves lambda o x = v for x using the current scaling point lambda.
  virtual void divide(ConstVecRef v, VecRef out) const = 0;
  /// Largest a >= 0 with lambda + a d in the cone (infinity if unbounded).
  virtual double max_step(ConstVecRef d) const = 0;

  /// Sets the scaling for interior s, z; returns false when not interior.
  virtual bool set_scaling(ConstVecRef s, ConstVecRef z) = 0;
  virtual const RVector& lambda() const = 0;
  /// out = W in, W^T in, W^{-1} in, W^{-T} in.
  virtual void apply(ConstVecRef in, VecRef out, bool transpose, bool inverse) const = 0;
  /// Adds G_c' H^{-1} G_c to out, H = W'W, where G_c holds this cone's rows.
  virtual void add_hinv_gram(const RMatrix& gc, RMatrix& out) const;
  /// Called once with this cone's rows of G before any add_hinv_gram.
  virtual void prepare(const RMatrix& /*gc*/) {}

  /// Euclidean projection onto the cone.
  virtual void project(ConstVecRef u, VecRef out) const = 0;
};

std::unique_ptr<Cone> make_cone(const ConeSpec& spec);

// Packing of Hermitian (complex) / symmetric (real) matrices into isometric
// real vectors: diagonal entries first per column, off-diagonal entries
// scaled by sqrt(2) (for complex: sqrt(2) Re, sqrt(2) Im).
Index packed_size(Index n, bool complex);
template <typename Scalar>
RVector pack_matrix(const Matrix<Scalar>& x);
template <typename Scalar>
Matrix<Scalar> unpack_matrix(const Eigen::Ref<const RVector>& v, Index n);

template <>
RVector pack_matrix<double>(const RMatrix& x);
template <>
RVector pack_matrix<cplx>(const CMatrix& x);
template <>
RMatrix unpack_matrix<double>(const Eigen::Ref<const RVector>& v, Index n);
template <>
CMatrix unpack_matrix<cplx>(const Eigen::Ref<const RVector>& v, Index n);

}  // namespace arisac::conic
