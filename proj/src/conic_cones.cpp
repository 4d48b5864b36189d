#include "arisac/conic_cones.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace arisac::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kSqrt2 = std::sqrt(2.0);

}  // namespace

Index packed_size(Index n, bool complex) { return complex ? n * n : n * (n + 1) / 2; }

template <>
RVector pack_matrix<double>(const RMatrix& x) {
  const Index n = x.rows();
  RVector v(packed_size(n, false));
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    v(k++) = x(j, j);
    for (Index i = j + 1; i < n; ++i) v(k++) = kSqrt2 * 0.5 * (x(i, j) + x(j, i));
  }
  return v;
}

template <>
RVector pack_matrix<cplx>(const CMatrix& x) {
  const Index n = x.rows();
  RVector v(packed_size(n, true));
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    v(k++) = x(j, j).real();
    for (Index i = j + 1; i < n; ++i) {
      const cplx e = 0.5 * (x(i, j) + std::conj(x(j, i)));
      v(k++) = kSqrt2 * e.real();
      v(k++) = kSqrt2 * e.imag();
    }
  }
  return v;
}

template <>
RMatrix unpack_matrix<double>(const Eigen::Ref<const RVector>& v, Index n) {
  if (v.size() != packed_size(n, false)) throw DimensionError("unpack_matrix: bad length");
  RMatrix x(n, n);
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    x(j, j) = v(k++);
    for (Index i = j + 1; i < n; ++i) {
      x(i, j) = x(j, i) = v(k++) / kSqrt2;
    }
  }
  return x;
}

template <>
CMatrix unpack_matrix<cplx>(const Eigen::Ref<const RVector>& v, Index n) {
  if (v.size() != packed_size(n, true)) throw DimensionError("unpack_matrix: bad length");
  CMatrix x(n, n);
  Index k = 0;
  for (Index j = 0; j < n; ++j) {
    x(j, j) = v(k++);
    for (Index i = j + 1; i < n; ++i) {
      const double re = v(k++) / kSqrt2;
      const double im = v(k++) / kSqrt2;
      x(i, j) = cplx(re, im);
      x(j, i) = cplx(re, -im);
    }
  }
  return x;
}

void Cone::add_hinv_gram(const RMatrix& gc, RMatrix& out) const {
  RMatrix t(gc.rows(), gc.cols());
  for (Index j = 0; j < gc.cols(); ++j) apply(gc.col(j), t.col(j), true, true);
  out.noalias() += t.transpose() * t;
}

namespace {

class NonNegCone final : public Cone {
 public:
  explicit NonNegCone(Index d) : d_(d), w_(RVector::Ones(d)), lambda_(RVector::Ones(d)) {}
  Index dim() const override { return d_; }
  Index degree() const override { return d_; }
  void identity(VecRef out) const override { out.setOnes(); }
  double min_eig(ConstVecRef u) const override { return d_ ? u.minCoeff() : kInf; }
  void product(ConstVecRef u, ConstVecRef v, VecRef out) const override {
    out = u.cwiseProduct(v);
  }
  void divide(ConstVecRef v, VecRef out) const override { out = v.cwiseQuotient(lambda_); }
  double max_step(ConstVecRef d) const override {
    double a = kInf;
    for (Index i = 0; i < d_; ++i) {
      if (d(i) < 0.0) a = std::min(a, -lambda_(i) / d(i));
    }
    return a;
  }
  bool set_scaling(ConstVecRef s, ConstVecRef z) override {
    if (d_ == 0) return true;
    if (s.minCoeff() <= 0.0 || z.minCoeff() <= 0.0) return false;
    w_ = (s.array() / z.array()).sqrt();
    lambda_ = (s.array() * z.array()).sqrt();
    return true;
  }
  const RVector& lambda() const override { return lambda_; }
  void apply(ConstVecRef in, VecRef out, bool, bool inverse) const override {
    out = inverse ? RVector(in.cwiseQuotient(w_)) : RVector(in.cwiseProduct(w_));
  }
  void add_hinv_gram(const RMatrix& gc, RMatrix& out) const override {
    RMatrix t = w_.cwiseInverse().asDiagonal() * gc;
    out.noalias() += t.transpose() * t;
  }
  void project(ConstVecRef u, VecRef out) const override { out = u.cwiseMax(0.0); }

 private:
  Index d_;
  RVector w_, lambda_;
};

class SocCone final : public Cone {
 public:
  explicit SocCone(Index d) : d_(d), wbar_(RVector::Zero(d)), lambda_(RVector::Zero(d)) {
    wbar_(0) = 1.0;
    lambda_(0) = 1.0;
  }
  Index dim() const override { return d_; }
  Index degree() const override { return 1; }
  void identity(VecRef out) const override {
    out.setZero();
    out(0) = 1.0;
  }
  double min_eig(ConstVecRef u) const override { return u(0) - u.tail(d_ - 1).norm(); }
  void product(ConstVecRef u, ConstVecRef v, VecRef out) const override {
    const double head = u.dot(v);
    out.tail(d_ - 1) = u(0) * v.tail(d_ - 1) + v(0) * u.tail(d_ - 1);
    out(0) = head;
  }
  void divide(ConstVecRef v, VecRef out) const override {
    const double l0 = lambda_(0);
    const auto l1 = lambda_.tail(d_ - 1);
    const double det = l0 * l0 - l1.squaredNorm();
    const double x0 = (l0 * v(0) - l1.dot(v.tail(d_ - 1))) / det;
    out.tail(d_ - 1) = (v.tail(d_ - 1) - x0 * l1) / l0;
    out(0) = x0;
  }
  double max_step(ConstVecRef d) const override {
    // map lambda to e by a hyperbolic rotation; then e + a rho in K iff
    // a (|rho_1| - rho_0) <= 1
    const double nrm = std::sqrt(jdot(lambda_, lambda_));
    const RVector lb = lambda_ / nrm;
    const double aa = jdot(lb, d);
    const double rho0 = aa / nrm;
    const RVector rho1 =
        (d.tail(d_ - 1) - ((aa + d(0)) / (lb(0) + 1.0)) * lb.tail(d_ - 1)) / nrm;
    const double t = rho1.norm() - rho0;
    return t > 0.0 ? 1.0 / t : kInf;
  }
  bool set_scaling(ConstVecRef s, ConstVecRef z) override {
    const double sn = jdot(s, s);
    const double zn = jdot(z, z);
    if (s(0) <= 0.0 || z(0) <= 0.0 || sn <= 0.0 || zn <= 0.0) return false;
    const RVector sb = s / std::sqrt(sn);
    const RVector zb = z / std::sqrt(zn);
    const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
    wbar_ = sb;
    wbar_(0) += zb(0);
    wbar_.tail(d_ - 1) -= zb.tail(d_ - 1);
    wbar_ /= 2.0 * gamma;
    beta_ = std::pow(sn / zn, 0.25);
    apply(z, lambda_, false, false);
    return std::isfinite(beta_) && lambda_.allFinite();
  }
  const RVector& lambda() const override { return lambda_; }
  void apply(ConstVecRef in, VecRef out, bool, bool inverse) const override {
    // W = beta B(wbar),  W^{-1} = J B(wbar) J / beta; both symmetric
    if (!inverse) {
      out = beta_ * boost(in);
    } else {
      RVector t = in;
      t.tail(d_ - 1) = -t.tail(d_ - 1);
      RVector b = boost(t);
      b.tail(d_ - 1) = -b.tail(d_ - 1);
      out = b / beta_;
    }
  }
  void add_hinv_gram(const RMatrix& gc, RMatrix& out) const override {
    // H^{-1} = (2 J w w' J - J) / beta^2
    RVector jw = wbar_;
    jw.tail(d_ - 1) = -jw.tail(d_ - 1);
    const RVector u = gc.transpose() * jw;
    const double b2 = beta_ * beta_;
    out.noalias() += (2.0 / b2) * u * u.transpose() - gjg_ / b2;
  }
  void prepare(const RMatrix& gc) override {
    RMatrix jg = gc;
    jg.bottomRows(d_ - 1) = -jg.bottomRows(d_ - 1);
    gjg_ = gc.transpose() * jg;
  }
  void project(ConstVecRef u, VecRef out) const override {
    const double t = u(0);
    const double nx = u.tail(d_ - 1).norm();
    if (nx <= t) {
      out = u;
    } else if (nx <= -t) {
      out.setZero();
    } else {
      const double a = 0.5 * (t + nx);
      out(0) = a;
      out.tail(d_ - 1) = (a / nx) * u.tail(d_ - 1);
    }
  }

 private:
  static double jdot(ConstVecRef a, ConstVecRef b) {
    return a(0) * b(0) - a.tail(a.size() - 1).dot(b.tail(b.size() - 1));
  }
  RVector boost(ConstVecRef u) const {
    const double w0 = wbar_(0);
    const auto w1 = wbar_.tail(d_ - 1);
    const double wu = w1.dot(u.tail(d_ - 1));
    RVector out(d_);
    out(0) = w0 * u(0) + wu;
    out.tail(d_ - 1) = u.tail(d_ - 1) + (u(0) + wu / (1.0 + w0)) * w1;
    return out;
  }

  Index d_;
  RVector wbar_, lambda_;
  double beta_ = 1.0;
  RMatrix gjg_;  // G_c' J G_c, fixed across iterations
};

template <typename Scalar>
class PsdCone final : public Cone {
 public:
  using Mat = Matrix<Scalar>;
  static constexpr bool kComplex = !std::is_same_v<Scalar, double>;

  explicit PsdCone(Index n)
      : n_(n),
        r_(Mat::Identity(n, n)),
        rinv_(Mat::Identity(n, n)),
        lam_(RVector::Ones(n)),
        lambda_(pack_matrix<Scalar>(Mat::Identity(n, n))) {}
  Index dim() const override { return packed_size(n_, kComplex); }
  Index degree() const override { return n_; }
  void identity(VecRef out) const override { out = pack_matrix<Scalar>(Mat::Identity(n_, n_)); }
  double min_eig(ConstVecRef u) const override {
    return arisac::min_eig(unpack_matrix<Scalar>(u, n_));
  }
  void product(ConstVecRef u, ConstVecRef v, VecRef out) const override {
    const Mat a = unpack_matrix<Scalar>(u, n_);
    const Mat b = unpack_matrix<Scalar>(v, n_);
    out = pack_matrix<Scalar>(Mat(0.5 * (a * b + b * a)));
  }
  void divide(ConstVecRef v, VecRef out) const override {
    Mat x = unpack_matrix<Scalar>(v, n_);
    for (Index j = 0; j < n_; ++j) {
      for (Index i = 0; i < n_; ++i) x(i, j) *= 2.0 / (lam_(i) + lam_(j));
    }
    out = pack_matrix<Scalar>(x);
  }
  double max_step(ConstVecRef d) const override {
    const RVector is = lam_.cwiseSqrt().cwiseInverse();
    const Mat dm = is.asDiagonal() * unpack_matrix<Scalar>(d, n_) * is.asDiagonal();
    const double t = -arisac::min_eig(dm);
    return t > 0.0 ? 1.0 / t : kInf;
  }
  bool set_scaling(ConstVecRef s, ConstVecRef z) override {
    const Mat sm = unpack_matrix<Scalar>(s, n_);
    const Mat zm = unpack_matrix<Scalar>(z, n_);
    Eigen::LLT<Mat> ls(sm), lz(zm);
    if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
    const Mat l_s = ls.matrixL();
    const Mat l_z = lz.matrixL();
    Eigen::JacobiSVD<Mat> svd(l_z.adjoint() * l_s, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RVector sig = svd.singularValues();
    if (!(sig.minCoeff() > 0.0) || !sig.allFinite()) return false;
    const RVector rs = sig.cwiseSqrt();
    r_ = l_s * svd.matrixV() * rs.cwiseInverse().asDiagonal();
    rinv_ = rs.cwiseInverse().asDiagonal() * svd.matrixU().adjoint() * l_z.adjoint();
    lam_ = sig;
    lambda_ = pack_matrix<Scalar>(Mat(sig.template cast<Scalar>().asDiagonal()));
    return true;
  }
  const RVector& lambda() const override { return lambda_; }
  void apply(ConstVecRef in, VecRef out, bool transpose, bool inverse) const override {
    const Mat y = unpack_matrix<Scalar>(in, n_);
    Mat res;
    if (!inverse && !transpose) {
      res = r_.adjoint() * y * r_;
    } else if (!inverse) {
      res = r_ * y * r_.adjoint();
    } else if (!transpose) {
      res = rinv_.adjoint() * y * rinv_;
    } else {
      res = rinv_ * y * rinv_.adjoint();
    }
    out = pack_matrix<Scalar>(res);
  }
  void add_hinv_gram(const RMatrix& gc, RMatrix& out) const override {
    if constexpr (!kComplex) {
      Cone::add_hinv_gram(gc, out);
    } else {
      // packed matrix of X -> Rinv X Rinv^H, column by column from outer
      // products of the columns of Rinv
      const Index d = dim();
      RMatrix m(d, d);
      Index p = 0;
      for (Index j = 0; j < n_; ++j) {
        const auto rj = rinv_.col(j);
        m.col(p++) = pack_matrix<cplx>(Mat(rj * rj.adjoint()));
        for (Index i = j + 1; i < n_; ++i) {
          const Mat pm = rinv_.col(i) * rj.adjoint();
          const Mat ph = pm.adjoint();
          m.col(p++) = pack_matrix<cplx>(Mat((pm + ph) / kSqrt2));
          m.col(p++) = pack_matrix<cplx>(Mat(cplx(0.0, 1.0) * (pm - ph) / kSqrt2));
        }
      }
      RMatrix t;
      if (sel_rows_.size() == static_cast<std::size_t>(gc.cols())) {
        t.resize(d, gc.cols());
        for (Index j = 0; j < gc.cols(); ++j) {
          t.col(j) = sel_vals_[static_cast<std::size_t>(j)] * m.col(sel_rows_[static_cast<std::size_t>(j)]);
        }
      } else {
        t = m * gc;
      }
      RMatrix g = RMatrix::Zero(gc.cols(), gc.cols());
      g.selfadjointView<Eigen::Lower>().rankUpdate(t.transpose());
      out += RMatrix(g.selfadjointView<Eigen::Lower>());
    }
  }
  void prepare(const RMatrix& gc) override {
    // columns with a single nonzero make G_c a scaled selection
    sel_rows_.clear();
    sel_vals_.clear();
    for (Index j = 0; j < gc.cols(); ++j) {
      Index row = -1, nnz = 0;
      for (Index i = 0; i < gc.rows(); ++i) {
        if (gc(i, j) != 0.0) {
          row = i;
          ++nnz;
        }
      }
      if (nnz != 1) {
        sel_rows_.clear();
        sel_vals_.clear();
        return;
      }
      sel_rows_.push_back(row);
      sel_vals_.push_back(gc(row, j));
    }
  }
  void project(ConstVecRef u, VecRef out) const override {
    auto e = eig_hermitian(unpack_matrix<Scalar>(u, n_));
    const RVector clipped = e.values.cwiseMax(0.0);
    Mat p = e.vectors * clipped.template cast<Scalar>().asDiagonal() * e.vectors.adjoint();
    out = pack_matrix<Scalar>(p);
  }

 private:
  Index n_;
  Mat r_, rinv_;
  RVector lam_;
  RVector lambda_;
  std::vector<Index> sel_rows_;
  std::vector<double> sel_vals_;
};

}  // namespace

std::unique_ptr<Cone> make_cone(const ConeSpec& spec) {
  switch (spec.kind) {
    case ConeKind::NonNegative:
      return std::make_unique<NonNegCone>(spec.order);
    case ConeKind::SecondOrder:
      if (spec.order < 1) throw DimensionError("second-order cone needs dimension >= 1");
      return std::make_unique<SocCone>(spec.order);
    case ConeKind::PsdReal:
      return std::make_unique<PsdCone<double>>(spec.order);
    case ConeKind::PsdHermitian:
      return std::make_unique<PsdCone<cplx>>(spec.order);
  }
  throw DimensionError("unknown cone kind");
}

Index ConeSpec::dim() const {
  switch (kind) {
    case ConeKind::NonNegative:
    case ConeKind::SecondOrder:
      return order;
    case ConeKind::PsdReal:
      return packed_size(order, false);
    case ConeKind::PsdHermitian:
      return packed_size(order, true);
  }
  return 0;
}

Index ConeSpec::degree() const {
  return kind == ConeKind::SecondOrder ? 1 : order;
}

}  // namespace arisac::conic
