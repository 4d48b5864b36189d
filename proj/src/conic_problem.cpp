#include <cmath>
#include <iomanip>
#include <ostream>

#include "arisac/conic.hpp"
#include "arisac/conic_cones.hpp"

namespace arisac::conic {

LinearForm& LinearForm::operator+=(const LinearForm& other) {
  if (coeffs.size() == 0) coeffs = RVector::Zero(other.coeffs.size());
  if (other.coeffs.size() != coeffs.size()) {
    throw DimensionError("LinearForm: adding forms of different length");
  }
  coeffs += other.coeffs;
  constant += other.constant;
  return *this;
}

LinearForm& LinearForm::operator*=(double s) {
  coeffs *= s;
  constant *= s;
  return *this;
}

double KktReport::max() const {
  return std::max({primal_feasibility, dual_feasibility, complementarity});
}

std::string to_string(SdpStatus status) {
  switch (status) {
    case SdpStatus::Optimal:
      return "optimal";
    case SdpStatus::Infeasible:
      return "infeasible";
    case SdpStatus::Unbounded:
      return "unbounded";
    case SdpStatus::NumericalLimit:
      return "numerical-limit";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// SdpProblem

BlockId SdpProblem::add_hermitian_psd(Index n) {
  if (n < 1) throw DimensionError("add_hermitian_psd: order must be positive");
  blocks_.push_back({BlockKind::HermitianPsd, n, n, num_params_, n * n});
  num_params_ += n * n;
  return blocks_.size() - 1;
}

BlockId SdpProblem::add_free_complex(Index rows, Index cols) {
  if (rows < 1 || cols < 1) throw DimensionError("add_free_complex: empty block");
  blocks_.push_back({BlockKind::FreeComplex, rows, cols, num_params_, 2 * rows * cols});
  num_params_ += 2 * rows * cols;
  return blocks_.size() - 1;
}

BlockId SdpProblem::add_free_real(Index len) {
  if (len < 1) throw DimensionError("add_free_real: empty block");
  blocks_.push_back({BlockKind::FreeReal, len, 1, num_params_, len});
  num_params_ += len;
  return blocks_.size() - 1;
}

CMatrix SdpProblem::value(BlockId id, const RVector& x) const {
  const Block& b = block(id);
  if (x.size() != num_params_) throw DimensionError("value: parameter vector has wrong length");
  const auto seg = x.segment(b.offset, b.params);
  switch (b.kind) {
    case BlockKind::HermitianPsd:
      return unpack_matrix<cplx>(seg, b.rows);
    case BlockKind::FreeComplex: {
      CMatrix out(b.rows, b.cols);
      for (Index e = 0; e < b.rows * b.cols; ++e) out(e) = cplx(seg(2 * e), seg(2 * e + 1));
      return out;
    }
    case BlockKind::FreeReal:
      return seg.cast<cplx>();
  }
  return {};
}

void SdpProblem::pack(BlockId id, const CMatrix& v, RVector& x) const {
  const Block& b = block(id);
  if (x.size() != num_params_) x = RVector::Zero(num_params_);
  if (v.rows() != b.rows || v.cols() != b.cols) throw DimensionError("pack: value has wrong shape");
  auto seg = x.segment(b.offset, b.params);
  switch (b.kind) {
    case BlockKind::HermitianPsd:
      seg = pack_matrix<cplx>(v);
      break;
    case BlockKind::FreeComplex:
      for (Index e = 0; e < b.rows * b.cols; ++e) {
        seg(2 * e) = v(e).real();
        seg(2 * e + 1) = v(e).imag();
      }
      break;
    case BlockKind::FreeReal:
      seg = v.col(0).real();
      break;
  }
}

CMatrix SdpProblem::basis(BlockId id, Index j) const {
  const Block& b = block(id);
  if (j < 0 || j >= b.params) throw DimensionError("basis: index out of range");
  RVector x = RVector::Zero(num_params_);
  x(b.offset + j) = 1.0;
  return value(id, x);
}

LinearForm SdpProblem::zero_form() const { return {RVector::Zero(num_params_), 0.0}; }

LinearForm SdpProblem::form(BlockId id, const std::function<double(const CMatrix&)>& f) const {
  const Block& b = block(id);
  LinearForm out = zero_form();
  for (Index j = 0; j < b.params; ++j) out.coeffs(b.offset + j) = f(basis(id, j));
  return out;
}

LinearForm SdpProblem::trace_form(BlockId id, const CMatrix& c) const {
  const Block& b = block(id);
  if (c.rows() != b.rows || c.cols() != b.cols) {
    throw DimensionError("trace_form: coefficient matrix has wrong shape");
  }
  LinearForm out = zero_form();
  switch (b.kind) {
    case BlockKind::HermitianPsd: {
      // Re Tr(C^H X) = <pack(herm(C)), pack(X)>
      const CMatrix h = 0.5 * (c + c.adjoint());
      out.coeffs.segment(b.offset, b.params) = pack_matrix<cplx>(h);
      break;
    }
    case BlockKind::FreeComplex:
      for (Index e = 0; e < b.rows * b.cols; ++e) {
        out.coeffs(b.offset + 2 * e) = c(e).real();
        out.coeffs(b.offset + 2 * e + 1) = c(e).imag();
      }
      break;
    case BlockKind::FreeReal:
      out.coeffs.segment(b.offset, b.params) = c.col(0).real();
      break;
  }
  return out;
}

RMatrix SdpProblem::linear_map(BlockId id, Index out_len,
                               const std::function<CVector(const CMatrix&)>& f) const {
  const Block& b = block(id);
  RMatrix out = RMatrix::Zero(2 * out_len, num_params_);
  for (Index j = 0; j < b.params; ++j) {
    const CVector y = f(basis(id, j));
    if (y.size() != out_len) throw DimensionError("linear_map: map returned wrong length");
    out.col(b.offset + j).head(out_len) = y.real();
    out.col(b.offset + j).tail(out_len) = y.imag();
  }
  return out;
}

RMatrix SdpProblem::vec_map(BlockId id, const CMatrix& k) const {
  const Block& b = block(id);
  if (k.cols() != b.rows * b.cols) throw DimensionError("vec_map: map has wrong width");
  const Index out_len = k.rows();
  RMatrix out = RMatrix::Zero(2 * out_len, num_params_);
  CVector y(out_len);
  for (Index j = 0; j < b.params; ++j) {
    const CMatrix bj = basis(id, j);
    y.setZero();
    for (Index e = 0; e < bj.size(); ++e) {
      if (bj(e) != cplx(0.0)) y += bj(e) * k.col(e);
    }
    out.col(b.offset + j).head(out_len) = y.real();
    out.col(b.offset + j).tail(out_len) = y.imag();
  }
  return out;
}

void SdpProblem::set_objective(LinearForm objective) {
  if (objective.coeffs.size() != num_params_) {
    throw DimensionError("set_objective: form length differs from parameter count");
  }
  objective_ = std::move(objective);
}

std::size_t SdpProblem::add_constraint(LinearForm form, Relation rel, double bound,
                                       std::string family) {
  if (form.coeffs.size() != num_params_) {
    throw DimensionError("add_constraint: form length differs from parameter count");
  }
  constraints_.push_back({std::move(form), rel, bound, std::move(family)});
  return constraints_.size() - 1;
}

std::size_t SdpProblem::add_soc(RMatrix f, RVector g, LinearForm bound, std::string family) {
  if (f.cols() != num_params_ || bound.coeffs.size() != num_params_ || g.size() != f.rows()) {
    throw DimensionError("add_soc: inconsistent shapes");
  }
  socs_.push_back({std::move(f), std::move(g), std::move(bound), std::move(family)});
  return socs_.size() - 1;
}

std::size_t SdpProblem::add_quadratic_le(const RMatrix& f, const RVector& g,
                                         const LinearForm& rhs, double scale,
                                         std::string family) {
  if (f.cols() != num_params_ || rhs.coeffs.size() != num_params_ || g.size() != f.rows()) {
    throw DimensionError("add_quadratic_le: inconsistent shapes");
  }
  if (!(scale > 0.0)) throw DomainError("add_quadratic_le: scale must be positive");

  // restrict to the columns F actually touches and drop redundant rows
  std::vector<Index> support;
  for (Index j = 0; j < f.cols(); ++j) {
    if (f.col(j).cwiseAbs().maxCoeff() > 0.0) support.push_back(j);
  }
  const Index k = static_cast<Index>(support.size());
  RMatrix fr;
  RVector gr;
  LinearForm ell = rhs;
  if (f.rows() > k + 1) {
    RMatrix fs(f.rows(), k);
    for (Index j = 0; j < k; ++j) fs.col(j) = f.col(support[j]);
    Eigen::HouseholderQR<RMatrix> qr(fs);
    const RMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
    const RVector qg = qr.householderQ().transpose() * g;
    fr = RMatrix::Zero(k, num_params_);
    for (Index j = 0; j < k; ++j) fr.col(support[j]) = r.col(j);
    gr = qg.head(k);
    ell.constant -= qg.tail(qg.size() - k).squaredNorm();
  } else {
    fr = f;
    gr = g;
  }

  // ||u||^2 <= l  <=>  ||(2 sqrt(c) u, l - c)|| <= l + c
  const double rc = 2.0 * std::sqrt(scale);
  RMatrix fo(fr.rows() + 1, num_params_);
  RVector go(fr.rows() + 1);
  fo.topRows(fr.rows()) = rc * fr;
  go.head(fr.rows()) = rc * gr;
  fo.row(fr.rows()) = ell.coeffs.transpose();
  go(fr.rows()) = ell.constant - scale;
  LinearForm bound = ell;
  bound.constant += scale;
  return add_soc(std::move(fo), std::move(go), std::move(bound), std::move(family));
}

void SdpProblem::validate() const {
  if (objective_.coeffs.size() != 0 && objective_.coeffs.size() != num_params_) {
    throw DimensionError("objective length differs from parameter count");
  }
  for (const auto& c : constraints_) {
    if (c.form.coeffs.size() != num_params_) throw DimensionError("constraint length mismatch");
  }
  for (const auto& s : socs_) {
    if (s.f.cols() != num_params_ || s.bound.coeffs.size() != num_params_ ||
        s.g.size() != s.f.rows()) {
      throw DimensionError("second-order cone shape mismatch");
    }
  }
}

// ---------------------------------------------------------------------------
// Lowering

RMatrix embed_hermitian(const CMatrix& x) {
  const Index n = x.rows();
  RMatrix y(2 * n, 2 * n);
  y.topLeftCorner(n, n) = x.real();
  y.topRightCorner(n, n) = -x.imag();
  y.bottomLeftCorner(n, n) = x.imag();
  y.bottomRightCorner(n, n) = x.real();
  return y;
}

CMatrix extract_hermitian(const RMatrix& y) {
  const Index n = y.rows() / 2;
  CMatrix x(n, n);
  x.real() = y.topLeftCorner(n, n) + y.bottomRightCorner(n, n);
  x.imag() = y.bottomLeftCorner(n, n) - y.topRightCorner(n, n);
  return x;
}

ConeProgram to_cone_program(const SdpProblem& p, HermitianMode mode) {
  p.validate();
  const Index n = p.num_params();
  ConeProgram cp;
  cp.c = p.objective().coeffs.size() ? RVector(-p.objective().coeffs) : RVector::Zero(n);

  Index n_eq = 0, n_lp = 0, n_soc_rows = 0, n_psd_rows = 0;
  for (const auto& c : p.constraints()) (c.relation == Relation::Equal ? n_eq : n_lp)++;
  for (const auto& s : p.socs()) n_soc_rows += s.f.rows() + 1;
  for (const auto& b : p.blocks()) {
    if (b.kind != BlockKind::HermitianPsd) continue;
    n_psd_rows += mode == HermitianMode::Native ? packed_size(b.rows, true)
                                                : packed_size(2 * b.rows, false);
  }
  const Index m = n_lp + n_soc_rows + n_psd_rows;
  cp.g = RMatrix::Zero(m, n);
  cp.h = RVector::Zero(m);
  cp.a = RMatrix::Zero(n_eq, n);
  cp.b = RVector::Zero(n_eq);

  Index row = 0, eq = 0;
  for (const auto& c : p.constraints()) {
    const double rhs = c.bound - c.form.constant;
    switch (c.relation) {
      case Relation::Equal:
        cp.a.row(eq) = c.form.coeffs.transpose();
        cp.b(eq++) = rhs;
        break;
      case Relation::LessEqual:
        cp.g.row(row) = c.form.coeffs.transpose();
        cp.h(row++) = rhs;
        break;
      case Relation::GreaterEqual:
        cp.g.row(row) = -c.form.coeffs.transpose();
        cp.h(row++) = -rhs;
        break;
    }
  }
  if (n_lp > 0) cp.cones.push_back({ConeKind::NonNegative, n_lp});

  for (const auto& s : p.socs()) {
    const Index d = s.f.rows() + 1;
    cp.g.row(row) = -s.bound.coeffs.transpose();
    cp.h(row) = s.bound.constant;
    cp.g.block(row + 1, 0, d - 1, n) = -s.f;
    cp.h.segment(row + 1, d - 1) = s.g;
    row += d;
    cp.cones.push_back({ConeKind::SecondOrder, d});
  }

  for (BlockId id = 0; id < p.blocks().size(); ++id) {
    const Block& b = p.block(id);
    if (b.kind != BlockKind::HermitianPsd) continue;
    if (mode == HermitianMode::Native) {
      cp.g.block(row, b.offset, b.params, b.params) = -RMatrix::Identity(b.params, b.params);
      row += b.params;
      cp.cones.push_back({ConeKind::PsdHermitian, b.rows});
    } else {
      const Index d = packed_size(2 * b.rows, false);
      for (Index j = 0; j < b.params; ++j) {
        cp.g.block(row, b.offset + j, d, 1) =
            -pack_matrix<double>(embed_hermitian(p.basis(id, j)));
      }
      row += d;
      cp.cones.push_back({ConeKind::PsdReal, 2 * b.rows});
    }
  }
  return cp;
}

ConeProgram real_embed(const SdpProblem& p) {
  return to_cone_program(p, HermitianMode::RealEmbedding);
}

void ConeProgram::validate() const {
  const Index n = c.size();
  if (g.cols() != n || a.cols() != n || g.rows() != h.size() || a.rows() != b.size()) {
    throw DimensionError("cone program: inconsistent shapes");
  }
  Index m = 0;
  for (const auto& k : cones) m += k.dim();
  if (m != h.size()) throw DimensionError("cone program: cone dimensions do not cover G rows");
}

void dump_triplets(std::ostream& os, const ConeProgram& cp) {
  cp.validate();
  const auto old_prec = os.precision(17);
  os << "dims " << cp.num_vars() << ' ' << cp.num_cone_rows() << ' ' << cp.num_equalities()
     << '\n';
  for (const auto& k : cp.cones) {
    const char* name = "lp";
    if (k.kind == ConeKind::SecondOrder) name = "soc";
    if (k.kind == ConeKind::PsdReal) name = "psd_real";
    if (k.kind == ConeKind::PsdHermitian) name = "psd_herm";
    os << "cone " << name << ' ' << k.order << '\n';
  }
  auto vec_out = [&](const char* tag, const RVector& v) {
    for (Index i = 0; i < v.size(); ++i) {
      if (v(i) != 0.0) os << tag << ' ' << i << ' ' << v(i) << '\n';
    }
  };
  auto mat_out = [&](const char* tag, const RMatrix& m) {
    for (Index j = 0; j < m.cols(); ++j) {
      for (Index i = 0; i < m.rows(); ++i) {
        if (m(i, j) != 0.0) os << tag << ' ' << i << ' ' << j << ' ' << m(i, j) << '\n';
      }
    }
  };
  vec_out("c", cp.c);
  mat_out("G", cp.g);
  vec_out("h", cp.h);
  mat_out("A", cp.a);
  vec_out("b", cp.b);
  os.precision(old_prec);
}

}  // namespace arisac::conic
