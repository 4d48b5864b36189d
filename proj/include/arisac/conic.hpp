#pragma once

// Small dense conic solver for problems over Hermitian PSD matrices, free
// complex/real vectors, linear (in)equalities and second-order cones.
//
// Problems are stated in terms of an SdpProblem (maximization over typed
// blocks); internally they are lowered to the standard cone program
//
//     minimize  c'x   s.t.  G x + s = h,  A x = b,  s in K
//
// and solved with a primal-dual interior-point method on the homogeneous
// embedding with Nesterov-Todd scaling.

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "arisac/matkernel.hpp"

namespace arisac::conic {

/// Real-valued affine function of the parameter vector: coeffs'x + constant.
struct LinearForm {
  RVector coeffs;
  double constant = 0.0;

  double operator()(const RVector& x) const { return coeffs.dot(x) + constant; }
  LinearForm& operator+=(const LinearForm& other);
  LinearForm& operator*=(double s);
};

enum class BlockKind { HermitianPsd, FreeComplex, FreeReal };

struct Block {
  BlockKind kind;
  Index rows = 0;  // Hermitian: n; free: shape of the value matrix
  Index cols = 0;
  Index offset = 0;  // first parameter index
  Index params = 0;  // number of real parameters
};

using BlockId = std::size_t;

enum class Relation { LessEqual, Equal, GreaterEqual };

struct LinearConstraint {
  LinearForm form;
  Relation relation = Relation::LessEqual;
  double bound = 0.0;
  std::string family;  // grouping label used in infeasibility reports
};

/// ||F x + g||_2 <= bound(x)
struct SocConstraint {
  RMatrix f;
  RVector g;
  LinearForm bound;
  std::string family;
};

enum class SdpStatus { Optimal, Infeasible, Unbounded, NumericalLimit };

std::string to_string(SdpStatus status);

enum class HermitianMode {
  Native,        // Hermitian PSD cone in complex arithmetic
  RealEmbedding  // [[Re, -Im], [Im, Re]] real symmetric cone of twice the order
};

struct SolverOptions {
  double tol = 1e-7;
  int max_iter = 200;
  HermitianMode mode = HermitianMode::Native;
  bool verbose = false;
};

class SdpProblem {
 public:
  BlockId add_hermitian_psd(Index n);
  BlockId add_free_complex(Index rows, Index cols = 1);
  BlockId add_free_real(Index len);

  Index num_params() const { return num_params_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Block& block(BlockId id) const { return blocks_.at(id); }

  /// Value of block `id` (Hermitian matrix, complex matrix or real column) in x.
  CMatrix value(BlockId id, const RVector& x) const;
  /// Writes `value` of block `id` into x (inverse of value()).
  void pack(BlockId id, const CMatrix& value, RVector& x) const;
  /// Matrix carried by the j-th parameter of block `id` (all others zero).
  CMatrix basis(BlockId id, Index j) const;

  /// Coefficients of a real-linear functional of one block.
  LinearForm form(BlockId id, const std::function<double(const CMatrix&)>& f) const;
  /// Re Tr(C^H X) for a block value X.
  LinearForm trace_form(BlockId id, const CMatrix& c) const;
  /// Real matrix [Re; Im] of a real-linear complex-vector-valued map of one block.
  RMatrix linear_map(BlockId id, Index out_len,
                     const std::function<CVector(const CMatrix&)>& f) const;
  /// linear_map of X -> K vec(X) (column-major vec of the block value).
  RMatrix vec_map(BlockId id, const CMatrix& k) const;
  LinearForm zero_form() const;

  void set_objective(LinearForm objective);  // maximized
  const LinearForm& objective() const { return objective_; }

  std::size_t add_constraint(LinearForm form, Relation rel, double bound,
                             std::string family = {});
  std::size_t add_soc(RMatrix f, RVector g, LinearForm bound, std::string family = {});
  /// ||F x + g||^2 <= rhs(x), added as a rotated cone. `scale` should be of the
  /// order of the expected rhs value; it only affects conditioning.
  std::size_t add_quadratic_le(const RMatrix& f, const RVector& g, const LinearForm& rhs,
                               double scale, std::string family = {});

  const std::vector<LinearConstraint>& constraints() const { return constraints_; }
  const std::vector<SocConstraint>& socs() const { return socs_; }

  /// Throws DimensionError when a functional has the wrong length.
  void validate() const;

 private:
  std::vector<Block> blocks_;
  Index num_params_ = 0;
  LinearForm objective_;
  std::vector<LinearConstraint> constraints_;
  std::vector<SocConstraint> socs_;
};

struct SdpSolution {
  SdpStatus status = SdpStatus::NumericalLimit;
  RVector x;                    // parameter vector
  std::vector<CMatrix> blocks;  // value of each block
  double objective = 0.0;       // primal objective (maximization, incl. constant)
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;

  // Dual multipliers (for Infeasible: a normalized certificate).
  RVector constraint_duals;            // one per linear constraint, >= 0 for inequalities
  std::vector<RVector> soc_duals;      // in the (t, u) cone coordinates
  std::vector<CMatrix> psd_duals;      // one per Hermitian block (Hermitian PSD)

  /// Per-family weight of the infeasibility certificate, largest first.
  std::vector<std::pair<std::string, double>> certificate_families;
};

struct KktReport {
  double primal_feasibility = 0.0;
  double dual_feasibility = 0.0;
  double complementarity = 0.0;
  double max() const;
};

// ---------------------------------------------------------------------------
// Standard-form cone program

enum class ConeKind { NonNegative, SecondOrder, PsdReal, PsdHermitian };

struct ConeSpec {
  ConeKind kind;
  Index order;  // LP/SOC: vector length; PSD: matrix order
  Index dim() const;
  Index degree() const;
};

struct ConeProgram {
  RVector c;
  RMatrix g;
  RVector h;
  RMatrix a;
  RVector b;
  std::vector<ConeSpec> cones;

  Index num_vars() const { return c.size(); }
  Index num_cone_rows() const { return h.size(); }
  Index num_equalities() const { return b.size(); }
  void validate() const;
};

struct ConeSolution {
  SdpStatus status = SdpStatus::NumericalLimit;
  RVector x, s, y, z;
  double primal_objective = 0.0;  // c'x
  double dual_objective = 0.0;    // -b'y - h'z
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
};

/// Lowering of an SdpProblem with Hermitian blocks kept as Hermitian cones
/// (Native) or mapped through the real embedding (RealEmbedding).
ConeProgram to_cone_program(const SdpProblem& p, HermitianMode mode);

/// Real symmetric form of `p`: every Hermitian n x n block becomes a 2n x 2n
/// real symmetric PSD cone [[Re X, -Im X], [Im X, Re X]].
ConeProgram real_embed(const SdpProblem& p);

ConeSolution solve_cone_program(const ConeProgram& cp, const SolverOptions& options = {});

SdpSolution solve(const SdpProblem& p, const SolverOptions& options = {});
inline SdpSolution solve(const SdpProblem& p, double tol, int max_iter) {
  SolverOptions o;
  o.tol = tol;
  o.max_iter = max_iter;
  return solve(p, o);
}

/// Residuals of a (possibly modified) solution against the problem, on the
/// same equilibrated scale used by the solver's stopping rule.
KktReport kkt_report(const SdpProblem& p, const SdpSolution& s);

/// Writes the cone program as sparse triplets; see README for the format.
void dump_triplets(std::ostream& os, const ConeProgram& cp);

// Hermitian <-> real-embedding helpers
RMatrix embed_hermitian(const CMatrix& x);
CMatrix extract_hermitian(const RMatrix& y);  // adjoint-consistent projection

}  // namespace arisac::conic
