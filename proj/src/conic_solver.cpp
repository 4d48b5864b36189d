#include <cmath>
#include <iostream>
#include <limits>
#include <map>

#include "arisac/conic.hpp"
#include "arisac/conic_cones.hpp"

namespace arisac::conic {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Diagonal equilibration: G~ = E G D / rho_p-free, c~ = D c / rho_d, etc.
// Cone blocks other than the nonnegative orthant share one row factor so the
// scaled slack stays in the same cone.
struct Equilibration {
  RVector d, e, f;
  double rho_p = 1.0;
  double rho_d = 1.0;
};

struct ScaledData {
  RMatrix g, a;
  RVector c, h, b;
};

Equilibration equilibrate(const ConeProgram& cp) {
  const Index n = cp.num_vars(), m = cp.num_cone_rows(), p = cp.num_equalities();
  Equilibration eq{RVector::Ones(n), RVector::Ones(m), RVector::Ones(p)};
  std::vector<std::pair<Index, Index>> groups;
  Index off = 0;
  for (const auto& k : cp.cones) {
    if (k.kind == ConeKind::NonNegative) {
      for (Index i = 0; i < k.dim(); ++i) groups.emplace_back(off + i, 1);
    } else {
      groups.emplace_back(off, k.dim());
    }
    off += k.dim();
  }
  RMatrix g = cp.g, a = cp.a;
  auto inv_sqrt = [](double v) { return v > 0.0 ? 1.0 / std::sqrt(v) : 1.0; };
  for (int it = 0; it < 10; ++it) {
    RVector dc(n);
    for (Index j = 0; j < n; ++j) {
      double v = 0.0;
      if (m) v = g.col(j).cwiseAbs().maxCoeff();
      if (p) v = std::max(v, a.col(j).cwiseAbs().maxCoeff());
      dc(j) = inv_sqrt(v);
    }
    RVector er(m), fr(p);
    for (const auto& [start, len] : groups) {
      const double v = n ? g.middleRows(start, len).cwiseAbs().maxCoeff() : 0.0;
      er.segment(start, len).setConstant(inv_sqrt(v));
    }
    for (Index i = 0; i < p; ++i) fr(i) = inv_sqrt(n ? a.row(i).cwiseAbs().maxCoeff() : 0.0);
    g.array().colwise() *= er.array();
    g.array().rowwise() *= dc.transpose().array();
    a.array().colwise() *= fr.array();
    a.array().rowwise() *= dc.transpose().array();
    eq.d.array() *= dc.array();
    eq.e.array() *= er.array();
    eq.f.array() *= fr.array();
    double change = 0.0;
    if (n) change = std::max(change, (dc.array() - 1.0).abs().maxCoeff());
    if (m) change = std::max(change, (er.array() - 1.0).abs().maxCoeff());
    if (p) change = std::max(change, (fr.array() - 1.0).abs().maxCoeff());
    if (change < 1e-2) break;
  }
  const RVector cs = eq.d.cwiseProduct(cp.c);
  const double cmax = max_abs(cs);
  eq.rho_d = cmax > 0.0 ? cmax : 1.0;
  double pmax = 0.0;
  if (m) pmax = std::max(pmax, max_abs(eq.e.cwiseProduct(cp.h)));
  if (p) pmax = std::max(pmax, max_abs(eq.f.cwiseProduct(cp.b)));
  eq.rho_p = pmax > 0.0 ? pmax : 1.0;
  return eq;
}

ScaledData apply_equilibration(const ConeProgram& cp, const Equilibration& eq) {
  ScaledData s;
  s.g = eq.e.asDiagonal() * cp.g * eq.d.asDiagonal();
  s.a = eq.f.asDiagonal() * cp.a * eq.d.asDiagonal();
  s.c = eq.d.cwiseProduct(cp.c) / eq.rho_d;
  s.h = eq.e.cwiseProduct(cp.h) / eq.rho_p;
  s.b = eq.f.cwiseProduct(cp.b) / eq.rho_p;
  return s;
}

struct Measures {
  double pres = kInf, dres = kInf, gap = kInf;
  double pcost = 0.0, dcost = 0.0;
  double worst() const { return std::max({pres, dres, gap}); }
};

// Residual measures of a (non-homogenized) point on the scaled data.
Measures measure(const ScaledData& d, const RVector& x, const RVector& s, const RVector& y,
                 const RVector& z) {
  Measures m;
  const double pnorm = 1.0 + std::max(d.b.norm(), d.h.norm());
  const double dnorm = 1.0 + d.c.norm();
  const double rp = std::max((d.a * x - d.b).norm(), (d.g * x + s - d.h).norm());
  const double rd = (d.a.transpose() * y + d.g.transpose() * z + d.c).norm();
  m.pcost = d.c.dot(x);
  m.dcost = -d.b.dot(y) - d.h.dot(z);
  m.pres = rp / pnorm;
  m.dres = rd / dnorm;
  m.gap = std::abs(s.dot(z)) / (1.0 + std::abs(m.pcost));
  return m;
}

class InteriorPoint {
 public:
  InteriorPoint(const ScaledData& data, const std::vector<ConeSpec>& specs,
                const SolverOptions& opt)
      : d_(data), opt_(opt), n_(data.c.size()), m_(data.h.size()), p_(data.b.size()) {
    Index off = 0;
    for (const auto& k : specs) {
      cones_.push_back(make_cone(k));
      offsets_.push_back(off);
      nu_ += k.degree();
      // columns of G touched by this cone
      std::vector<Index> cols;
      for (Index j = 0; j < n_; ++j) {
        if (d_.g.block(off, j, k.dim(), 1).cwiseAbs().maxCoeff() > 0.0) cols.push_back(j);
      }
      RMatrix gc(k.dim(), static_cast<Index>(cols.size()));
      for (Index j = 0; j < gc.cols(); ++j) gc.col(j) = d_.g.block(off, cols[j], k.dim(), 1);
      cones_.back()->prepare(gc);
      support_.push_back(std::move(cols));
      gc_.push_back(std::move(gc));
      off += k.dim();
    }
  }

  ConeSolution run();

 private:
  template <typename F>
  void for_cones(F&& f) const {
    for (std::size_t c = 0; c < cones_.size(); ++c) f(*cones_[c], offsets_[c]);
  }
  auto seg(RVector& v, const Cone& k, Index off) const { return v.segment(off, k.dim()); }

  RVector apply_w(const RVector& v, bool transpose, bool inverse) const {
    RVector out(m_);
    for (std::size_t c = 0; c < cones_.size(); ++c) {
      const Index o = offsets_[c], dim = cones_[c]->dim();
      cones_[c]->apply(v.segment(o, dim), out.segment(o, dim), transpose, inverse);
    }
    return out;
  }
  RVector apply_hinv(const RVector& v) const {
    return apply_w(apply_w(v, true, true), false, true);
  }
  RVector apply_h(const RVector& v) const { return apply_w(apply_w(v, false, false), true, false); }

  bool set_scaling(const RVector& s, const RVector& z) {
    for (std::size_t c = 0; c < cones_.size(); ++c) {
      const Index o = offsets_[c], dim = cones_[c]->dim();
      if (!cones_[c]->set_scaling(s.segment(o, dim), z.segment(o, dim))) return false;
    }
    lambda_ = RVector(m_);
    for (std::size_t c = 0; c < cones_.size(); ++c) {
      lambda_.segment(offsets_[c], cones_[c]->dim()) = cones_[c]->lambda();
    }
    return true;
  }

  bool factor();
  void kkt_solve(const RVector& r1, const RVector& r2, const RVector& r3, RVector& x,
                 RVector& y, RVector& z) const;
  void kkt_solve_once(const RVector& r1, const RVector& r2, const RVector& r3, RVector& x,
                      RVector& y, RVector& z) const;

  const ScaledData& d_;
  SolverOptions opt_;
  Index n_, m_, p_;
  Index nu_ = 0;
  std::vector<std::unique_ptr<Cone>> cones_;
  std::vector<Index> offsets_;
  std::vector<std::vector<Index>> support_;
  std::vector<RMatrix> gc_;
  RVector lambda_;
  // Cholesky of P with a Schur complement for the equalities; LU of the
  // whole system when P is numerically indefinite.
  Eigen::LLT<RMatrix> llt_;
  Eigen::PartialPivLU<RMatrix> schur_;
  RMatrix pinv_at_;
  bool use_llt_ = false;
  Eigen::PartialPivLU<RMatrix> lu_;
  double reg_ = 0.0;
};

bool InteriorPoint::factor() {
  RMatrix p = RMatrix::Zero(n_, n_);
  for (std::size_t c = 0; c < cones_.size(); ++c) {
    const auto& cols = support_[c];
    const Index k = static_cast<Index>(cols.size());
    if (k == 0) continue;
    RMatrix local = RMatrix::Zero(k, k);
    cones_[c]->add_hinv_gram(gc_[c], local);
    for (Index j = 0; j < k; ++j) {
      for (Index i = 0; i < k; ++i) p(cols[i], cols[j]) += local(i, j);
    }
  }
  const double scale = std::max(1.0, p.diagonal().cwiseAbs().maxCoeff());
  reg_ = 1e-13 * scale;
  if (!p.allFinite()) return false;
  p.diagonal().array() += reg_;
  llt_.compute(p);
  use_llt_ = llt_.info() == Eigen::Success;
  if (use_llt_) {
    if (p_ > 0) {
      pinv_at_ = llt_.solve(d_.a.transpose());
      RMatrix sc = d_.a * pinv_at_;
      sc.diagonal().array() += reg_;
      schur_.compute(sc);
    }
    return true;
  }
  p.diagonal().array() -= reg_;
  RMatrix kkt = RMatrix::Zero(n_ + p_, n_ + p_);
  kkt.topLeftCorner(n_, n_) = p;
  kkt.topLeftCorner(n_, n_).diagonal().array() += reg_;
  if (p_ > 0) {
    kkt.topRightCorner(n_, p_) = d_.a.transpose();
    kkt.bottomLeftCorner(p_, n_) = d_.a;
    kkt.bottomRightCorner(p_, p_).diagonal().setConstant(-reg_);
  }
  if (!kkt.allFinite()) return false;
  lu_.compute(kkt);
  return true;
}

void InteriorPoint::kkt_solve_once(const RVector& r1, const RVector& r2, const RVector& r3,
                                   RVector& x, RVector& y, RVector& z) const {
  const RVector t = apply_hinv(r3);
  RVector rhs(n_ + p_);
  rhs.head(n_) = r1 + d_.g.transpose() * t;
  rhs.tail(p_) = r2;
  if (use_llt_) {
    x = llt_.solve(rhs.head(n_));
    if (p_ > 0) {
      y = schur_.solve(d_.a * x - r2);
      x -= pinv_at_ * y;
    } else {
      y = RVector(0);
    }
  } else {
    const RVector sol = lu_.solve(rhs);
    x = sol.head(n_);
    y = sol.tail(p_);
  }
  z = apply_hinv(d_.g * x) - t;
}

// Solves [0 A' G'; A 0 0; G 0 -H] [x; y; z] = [r1; r2; r3] with refinement.
void InteriorPoint::kkt_solve(const RVector& r1, const RVector& r2, const RVector& r3,
                              RVector& x, RVector& y, RVector& z) const {
  kkt_solve_once(r1, r2, r3, x, y, z);
  const double rnorm = std::sqrt(r1.squaredNorm() + r2.squaredNorm() + r3.squaredNorm());
  double last = kInf;
  for (int it = 0; it < 5; ++it) {
    const RVector e1 = r1 - d_.a.transpose() * y - d_.g.transpose() * z;
    const RVector e2 = r2 - d_.a * x;
    const RVector e3 = r3 - d_.g * x + apply_h(z);
    const double en = std::sqrt(e1.squaredNorm() + e2.squaredNorm() + e3.squaredNorm());
    if (!(en > 1e-13 * rnorm) || !(en < 0.5 * last)) break;
    last = en;
    RVector dx, dy, dz;
    kkt_solve_once(e1, e2, e3, dx, dy, dz);
    x += dx;
    y += dy;
    z += dz;
  }
}

ConeSolution InteriorPoint::run() {
  ConeSolution out;
  RVector x(n_), y(p_), z(m_), s(m_);
  RVector e(m_);
  for_cones([&](const Cone& k, Index o) { k.identity(e.segment(o, k.dim())); });

  // starting point from the scaled-identity KKT system
  {
    RVector id(m_);
    for_cones([&](const Cone& k, Index o) { k.identity(id.segment(o, k.dim())); });
    set_scaling(id, id);
    if (!factor()) {
      out.status = SdpStatus::NumericalLimit;
      return out;
    }
    RVector xp, yp, zp;
    kkt_solve(RVector::Zero(n_), d_.b, d_.h, xp, yp, zp);
    x = xp;
    s = -zp;
    RVector xd, yd, zd;
    kkt_solve(-d_.c, RVector::Zero(p_), RVector::Zero(m_), xd, yd, zd);
    y = yd;
    z = zd;
    auto shift = [&](RVector& v) {
      double a = -kInf;
      for_cones([&](const Cone& k, Index o) {
        a = std::max(a, -k.min_eig(v.segment(o, k.dim())));
      });
      if (m_ > 0 && a >= -1e-8) v += (1.0 + std::max(a, 0.0)) * e;
    };
    shift(s);
    shift(z);
  }
  double tau = 1.0, kappa = 1.0;

  struct Best {
    RVector x, y, z, s;
    Measures m;
  } best;

  auto finish_optimal = [&](const Measures& m, int iter) {
    out.status = SdpStatus::Optimal;
    out.x = x / tau;
    out.y = y / tau;
    out.z = z / tau;
    out.s = s / tau;
    out.primal_objective = m.pcost;
    out.dual_objective = m.dcost;
    out.primal_residual = m.pres;
    out.dual_residual = m.dres;
    out.gap = m.gap;
    out.iterations = iter;
  };

  int stalls = 0;
  for (int iter = 0;; ++iter) {
    const RVector rx = d_.a.transpose() * y + d_.g.transpose() * z + tau * d_.c;
    const RVector ry = -d_.a * x + tau * d_.b;
    const RVector rz = d_.g * x + s - tau * d_.h;
    const double cx = d_.c.dot(x), by_hz = d_.b.dot(y) + d_.h.dot(z);
    const double rt = kappa + cx + by_hz;

    const Measures m = measure(d_, x / tau, s / tau, y / tau, z / tau);
    if (opt_.verbose) {
      std::cerr << "ipm " << iter << " pcost " << m.pcost << " dcost " << m.dcost << " pres "
                << m.pres << " dres " << m.dres << " gap " << m.gap << " tau " << tau
                << " kappa " << kappa << '\n';
    }
    if (std::isfinite(m.worst()) && (best.x.size() == 0 || m.worst() < best.m.worst())) {
      best = {x / tau, y / tau, z / tau, s / tau, m};
    }
    if (m.pres <= opt_.tol && m.dres <= opt_.tol && m.gap <= opt_.tol) {
      finish_optimal(m, iter);
      return out;
    }
    // infeasibility certificates of the homogeneous embedding
    if (by_hz < 0.0) {
      const double pinf = (d_.a.transpose() * y + d_.g.transpose() * z).norm() / -by_hz;
      if (pinf <= opt_.tol) {
        out.status = SdpStatus::Infeasible;
        out.y = y / -by_hz;
        out.z = z / -by_hz;
        out.x = RVector::Zero(n_);
        out.s = RVector::Zero(m_);
        out.primal_residual = pinf;
        out.iterations = iter;
        return out;
      }
    }
    if (cx < 0.0) {
      const double dinf =
          std::max((d_.a * x).norm(), (d_.g * x + s).norm()) / -cx;
      if (dinf <= opt_.tol) {
        out.status = SdpStatus::Unbounded;
        out.x = x / -cx;
        out.s = s / -cx;
        out.y = RVector::Zero(p_);
        out.z = RVector::Zero(m_);
        out.dual_residual = dinf;
        out.iterations = iter;
        return out;
      }
    }
    if (iter >= opt_.max_iter || stalls >= 5 || !set_scaling(s, z) || !factor()) break;

    const double mu = (s.dot(z) + tau * kappa) / static_cast<double>(nu_ + 1);
    RVector x1, y1, z1;
    kkt_solve(-d_.c, d_.b, d_.h, x1, y1, z1);
    const double denom = d_.c.dot(x1) + d_.b.dot(y1) + d_.h.dot(z1) - kappa / tau;

    RVector dss_a, dzs_a;
    double dt_a = 0.0, dk_a = 0.0, sigma = 0.0, alpha = 0.0;
    RVector dx, dy, dz, dss;
    double dt = 0.0, dk = 0.0;
    for (int pass = 0; pass < 2; ++pass) {
      RVector ds(m_);
      double dkap;
      for_cones([&](const Cone& k, Index o) {
        const Index dim = k.dim();
        RVector ll(dim);
        k.product(lambda_.segment(o, dim), lambda_.segment(o, dim), ll);
        if (pass == 1) {
          RVector cc(dim);
          k.product(dss_a.segment(o, dim), dzs_a.segment(o, dim), cc);
          ll += cc - sigma * mu * e.segment(o, dim);
        }
        ds.segment(o, dim) = -ll;
      });
      dkap = -kappa * tau;
      if (pass == 1) dkap += -dk_a * dt_a + sigma * mu;

      RVector t(m_);
      for_cones([&](const Cone& k, Index o) {
        k.divide(ds.segment(o, k.dim()), t.segment(o, k.dim()));
      });
      const double w = 1.0 - sigma;
      RVector x2, y2, z2;
      kkt_solve(-w * rx, w * ry, -w * rz - apply_w(t, true, false), x2, y2, z2);
      dt = (-w * rt - dkap / tau - (d_.c.dot(x2) + d_.b.dot(y2) + d_.h.dot(z2))) / denom;
      dx = x2 + dt * x1;
      dy = y2 + dt * y1;
      dz = z2 + dt * z1;
      const RVector dzs = apply_w(dz, false, false);
      dss = t - dzs;
      dk = (dkap - kappa * dt) / tau;

      double amax = kInf;
      for_cones([&](const Cone& k, Index o) {
        amax = std::min(amax, k.max_step(dss.segment(o, k.dim())));
        amax = std::min(amax, k.max_step(dzs.segment(o, k.dim())));
      });
      if (dt < 0.0) amax = std::min(amax, -tau / dt);
      if (dk < 0.0) amax = std::min(amax, -kappa / dk);
      if (pass == 0) {
        const double aa = std::min(1.0, amax);
        sigma = std::clamp(std::pow(1.0 - aa, 3), 0.0, 1.0);
        dss_a = dss;
        dzs_a = dzs;
        dt_a = dt;
        dk_a = dk;
      } else {
        alpha = std::min(1.0, 0.99 * amax);
      }
    }
    if (!(alpha > 0.0) || !dx.allFinite() || !dz.allFinite()) break;
    stalls = alpha < 1e-8 ? stalls + 1 : 0;

    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * apply_w(dss, true, false);
    tau += alpha * dt;
    kappa += alpha * dk;
    out.iterations = iter + 1;
  }

  out.status = SdpStatus::NumericalLimit;
  if (best.x.size()) {
    out.x = best.x;
    out.y = best.y;
    out.z = best.z;
    out.s = best.s;
    out.primal_objective = best.m.pcost;
    out.dual_objective = best.m.dcost;
    out.primal_residual = best.m.pres;
    out.dual_residual = best.m.dres;
    out.gap = best.m.gap;
  } else {
    out.x = RVector::Zero(n_);
    out.y = RVector::Zero(p_);
    out.z = RVector::Zero(m_);
    out.s = RVector::Zero(m_);
  }
  return out;
}

// Removes linearly dependent equality rows. Returns false when the system
// A x = b is inconsistent; `cert` then holds y with A'y = 0, b'y < 0.
bool presolve_equalities(ScaledData& d, std::vector<Index>& kept, RVector& cert) {
  const Index p = d.b.size();
  kept.clear();
  if (p == 0) return true;
  Eigen::ColPivHouseholderQR<RMatrix> qr(d.a.transpose());
  qr.setThreshold(1e-10);
  const Index r = qr.rank();
  const auto perm = qr.colsPermutation().indices();
  for (Index i = 0; i < r; ++i) kept.push_back(perm(i));
  std::sort(kept.begin(), kept.end());
  // consistency: least-squares residual of the full system
  Eigen::CompleteOrthogonalDecomposition<RMatrix> cod(d.a);
  cod.setThreshold(1e-10);
  const RVector xls = cod.solve(d.b);
  const RVector res = d.b - d.a * xls;
  if (res.norm() > 1e-8 * (1.0 + d.b.norm())) {
    cert = -res / res.squaredNorm();
    return false;
  }
  if (r < p) {
    RMatrix a(r, d.a.cols());
    RVector b(r);
    for (Index i = 0; i < r; ++i) {
      a.row(i) = d.a.row(kept[i]);
      b(i) = d.b(kept[i]);
    }
    d.a = a;
    d.b = b;
  }
  return true;
}

}  // namespace

ConeSolution solve_cone_program(const ConeProgram& cp, const SolverOptions& options) {
  cp.validate();
  const Index n = cp.num_vars(), m = cp.num_cone_rows(), p = cp.num_equalities();
  const Equilibration eq = equilibrate(cp);
  ScaledData data = apply_equilibration(cp, eq);

  ConeSolution sol;
  std::vector<Index> kept;
  RVector cert;
  if (!presolve_equalities(data, kept, cert)) {
    sol.status = SdpStatus::Infeasible;
    sol.x = RVector::Zero(n);
    sol.s = RVector::Zero(m);
    sol.z = RVector::Zero(m);
    sol.y = eq.f.cwiseProduct(cert) * eq.rho_d;
    return sol;
  }
  const Index p_kept = data.b.size();

  ConeSolution raw;
  if (m == 0) {
    // equality-constrained linear objective: optimal iff c in range(A')
    raw.x = Eigen::CompleteOrthogonalDecomposition<RMatrix>(data.a).solve(data.b);
    if (p_kept > 0) {
      raw.y = Eigen::CompleteOrthogonalDecomposition<RMatrix>(data.a.transpose()).solve(
          RVector(-data.c));
    } else {
      raw.y = RVector::Zero(0);
    }
    raw.s = raw.z = RVector::Zero(0);
    const Measures mm = measure(data, raw.x, raw.s, raw.y, raw.z);
    raw.status = mm.dres <= options.tol ? SdpStatus::Optimal : SdpStatus::Unbounded;
    raw.primal_objective = mm.pcost;
    raw.dual_objective = mm.dcost;
    raw.primal_residual = mm.pres;
    raw.dual_residual = mm.dres;
    raw.gap = mm.gap;
  } else {
    InteriorPoint ipm(data, cp.cones, options);
    raw = ipm.run();
  }

  // undo equilibration
  RVector y_full = RVector::Zero(p);
  for (Index i = 0; i < static_cast<Index>(kept.size()) && i < raw.y.size(); ++i) {
    y_full(kept[i]) = raw.y(i);
  }
  if (kept.empty() && p_kept == p) y_full = raw.y;
  sol = raw;
  sol.x = eq.d.cwiseProduct(raw.x) * eq.rho_p;
  sol.s = raw.s.cwiseQuotient(eq.e) * eq.rho_p;
  sol.z = eq.e.cwiseProduct(raw.z) * eq.rho_d;
  sol.y = eq.f.cwiseProduct(y_full) * eq.rho_d;
  sol.primal_objective = raw.primal_objective * eq.rho_p * eq.rho_d;
  sol.dual_objective = raw.dual_objective * eq.rho_p * eq.rho_d;
  return sol;
}

// ---------------------------------------------------------------------------
// SdpProblem level

namespace {

std::string psd_family(BlockId id) { return "psd block " + std::to_string(id); }

}  // namespace

SdpSolution solve(const SdpProblem& p, const SolverOptions& options) {
  const ConeProgram cp = to_cone_program(p, options.mode);
  const ConeSolution cs = solve_cone_program(cp, options);

  SdpSolution out;
  out.status = cs.status;
  out.iterations = cs.iterations;
  out.primal_residual = cs.primal_residual;
  out.dual_residual = cs.dual_residual;
  out.gap = cs.gap;
  out.x = cs.x;
  const double constant = p.objective().constant;
  out.objective = -cs.primal_objective + constant;
  out.dual_objective = -cs.dual_objective + constant;
  if (cs.status == SdpStatus::Optimal || cs.status == SdpStatus::NumericalLimit) {
    out.objective = (p.objective().coeffs.size() ? p.objective().coeffs.dot(cs.x) : 0.0) +
                    constant;
  }
  for (BlockId id = 0; id < p.blocks().size(); ++id) out.blocks.push_back(p.value(id, cs.x));

  // duals in problem terms
  std::map<std::string, double> fam;
  auto credit = [&](const std::string& f, double w) { fam[f.empty() ? "unnamed" : f] += w; };
  out.constraint_duals = RVector::Zero(static_cast<Index>(p.constraints().size()));
  Index eq = 0, row = 0;
  for (std::size_t i = 0; i < p.constraints().size(); ++i) {
    const auto& c = p.constraints()[i];
    double v;
    if (c.relation == Relation::Equal) {
      v = cs.y.size() ? cs.y(eq) : 0.0;
      ++eq;
    } else {
      v = cs.z.size() ? cs.z(row) : 0.0;
      ++row;
    }
    out.constraint_duals(static_cast<Index>(i)) = v;
    credit(c.family, std::abs(v));
  }
  for (const auto& s : p.socs()) {
    const Index dim = s.f.rows() + 1;
    RVector z = cs.z.size() ? RVector(cs.z.segment(row, dim)) : RVector::Zero(dim);
    credit(s.family, z.norm());
    out.soc_duals.push_back(std::move(z));
    row += dim;
  }
  for (BlockId id = 0; id < p.blocks().size(); ++id) {
    const Block& b = p.block(id);
    if (b.kind != BlockKind::HermitianPsd) continue;
    CMatrix zh;
    if (options.mode == HermitianMode::Native) {
      const Index dim = packed_size(b.rows, true);
      zh = cs.z.size() ? unpack_matrix<cplx>(cs.z.segment(row, dim), b.rows)
                       : CMatrix::Zero(b.rows, b.rows);
      row += dim;
    } else {
      const Index dim = packed_size(2 * b.rows, false);
      zh = cs.z.size() ? extract_hermitian(unpack_matrix<double>(cs.z.segment(row, dim), 2 * b.rows))
                       : CMatrix::Zero(b.rows, b.rows);
      row += dim;
    }
    credit(psd_family(id), zh.norm());
    out.psd_duals.push_back(std::move(zh));
  }
  if (cs.status == SdpStatus::Infeasible) {
    double total = 0.0;
    for (const auto& [k, v] : fam) total += v;
    for (const auto& [k, v] : fam) {
      if (v > 0.0) out.certificate_families.emplace_back(k, total > 0.0 ? v / total : 0.0);
    }
    std::sort(out.certificate_families.begin(), out.certificate_families.end(),
              [](const auto& a, const auto& b) { return a.second > b.second; });
  }
  return out;
}

KktReport kkt_report(const SdpProblem& p, const SdpSolution& s) {
  const ConeProgram cp = to_cone_program(p, HermitianMode::Native);
  const Index n = cp.num_vars(), m = cp.num_cone_rows(), pe = cp.num_equalities();
  RVector x = s.x.size() == n ? s.x : RVector::Zero(n);
  for (BlockId id = 0; id < p.blocks().size() && id < s.blocks.size(); ++id) {
    p.pack(id, s.blocks[id], x);
  }
  RVector y = RVector::Zero(pe), z = RVector::Zero(m);
  Index eq = 0, row = 0;
  for (std::size_t i = 0; i < p.constraints().size(); ++i) {
    const double v = static_cast<Index>(i) < s.constraint_duals.size()
                         ? s.constraint_duals(static_cast<Index>(i))
                         : 0.0;
    if (p.constraints()[i].relation == Relation::Equal) {
      y(eq++) = v;
    } else {
      z(row++) = v;
    }
  }
  for (std::size_t i = 0; i < p.socs().size(); ++i) {
    const Index dim = p.socs()[i].f.rows() + 1;
    if (i < s.soc_duals.size() && s.soc_duals[i].size() == dim) z.segment(row, dim) = s.soc_duals[i];
    row += dim;
  }
  std::size_t k = 0;
  for (const auto& b : p.blocks()) {
    if (b.kind != BlockKind::HermitianPsd) continue;
    if (k < s.psd_duals.size()) z.segment(row, b.params) = pack_matrix<cplx>(s.psd_duals[k]);
    ++k;
    row += b.params;
  }
  const RVector slack = cp.h - cp.g * x;

  const Equilibration eqb = equilibrate(cp);
  const ScaledData d = apply_equilibration(cp, eqb);
  const RVector xs = x.cwiseQuotient(eqb.d) / eqb.rho_p;
  const RVector ss = eqb.e.cwiseProduct(slack) / eqb.rho_p;
  const RVector ys = y.cwiseQuotient(eqb.f) / eqb.rho_d;
  const RVector zs = z.cwiseQuotient(eqb.e) / eqb.rho_d;

  double s_viol = 0.0, z_viol = 0.0;
  Index off = 0;
  for (const auto& spec : cp.cones) {
    auto cone = make_cone(spec);
    const Index dim = spec.dim();
    RVector proj(dim);
    cone->project(ss.segment(off, dim), proj);
    s_viol += (ss.segment(off, dim) - proj).squaredNorm();
    cone->project(zs.segment(off, dim), proj);
    z_viol += (zs.segment(off, dim) - proj).squaredNorm();
    off += dim;
  }
  KktReport r;
  const double pnorm = 1.0 + std::max(d.b.norm(), d.h.norm());
  const double dnorm = 1.0 + d.c.norm();
  r.primal_feasibility = std::max((d.a * xs - d.b).norm(), std::sqrt(s_viol)) / pnorm;
  r.dual_feasibility =
      std::max((d.a.transpose() * ys + d.g.transpose() * zs + d.c).norm(), std::sqrt(z_viol)) /
      dnorm;
  r.complementarity = std::abs(ss.dot(zs)) / (1.0 + std::abs(d.c.dot(xs)));
  return r;
}

}  // namespace arisac::conic
