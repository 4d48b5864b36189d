#include "arisac/txbf.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace arisac {

namespace {

// R with ||R x|| = ||F x|| and at most cols(F) rows.
RMatrix compress_rows(const RMatrix& f) {
  if (f.rows() <= f.cols()) return f;
  Eigen::HouseholderQR<RMatrix> qr(f);
  return qr.matrixQR().topRows(f.cols()).triangularView<Eigen::Upper>();
}

std::string family_summary(const conic::SdpSolution& sol) {
  std::ostringstream os;
  for (std::size_t i = 0; i < sol.certificate_families.size() && i < 3; ++i) {
    if (i) os << ", ";
    os << sol.certificate_families[i].first << " (" << sol.certificate_families[i].second << ")";
  }
  return os.str();
}

}  // namespace

SurrogateContext build_context(const BeamformerState& st, const ChannelSet& chan,
                               const Scenario& scen) {
  SurrogateContext ctx;
  ctx.w_i = st.w;
  ctx.v_i = st.v;
  ctx.eta = scen.eta;
  ctx.noise = noise_levels(scen);
  ctx.echo = echo_matrices(chan, st.v, scen.eta, ctx.noise);
  ctx.j_i = ctx.echo.j(covariance(st.w));
  const Index m = ctx.j_i.rows();
  Eigen::LLT<CMatrix> llt(0.5 * (ctx.j_i + ctx.j_i.adjoint()));
  if (llt.info() != Eigen::Success || m == 0) {
    throw ConditioningError("build_context: interference covariance J is not positive definite");
  }
  ctx.j_i_inv = hermitian_solve(ctx.j_i, CMatrix::Identity(m, m));
  ctx.j_i_inv = 0.5 * (ctx.j_i_inv + ctx.j_i_inv.adjoint()).eval();
  ctx.x_i = ctx.echo.b * st.w;
  ctx.l_i = hermitian_solve(ctx.j_i, ctx.x_i);
  ctx.t_i = ctx.l_i * ctx.l_i.adjoint();
  ctx.sinr_i = std::max(0.0, (ctx.x_i.adjoint() * ctx.l_i).trace().real());
  return ctx;
}

double surrogate_value(const SurrogateContext& ctx, const CMatrix& w) {
  if (w.rows() != ctx.w_i.rows() || w.cols() != ctx.w_i.cols()) {
    throw DimensionError("surrogate_value: W has wrong shape");
  }
  const double lin = 2.0 * (ctx.l_i.adjoint() * ctx.echo.b * w).trace().real();
  const double noise = (ctx.t_i * ctx.echo.d).trace().real();
  const double interf = (ctx.l_i.adjoint() * ctx.echo.e * w).squaredNorm();
  return lin - noise - interf;
}

double QosLinearization::lhs(const CMatrix& w) const {
  const cplx hw = h.dot(w.col(col));  // h^H w
  return (1.0 + 1.0 / xi) * (2.0 * (std::conj(g) * hw).real() - std::norm(g));
}

double QosLinearization::exact_lhs(const CMatrix& w) const {
  return (1.0 + 1.0 / xi) * std::norm(h.dot(w.col(col)));
}

double QosLinearization::rhs(const CMatrix& w) const {
  return (h.adjoint() * w).squaredNorm() + d;
}

QosLinearization qos_linearize(const BeamformerState& st, const ChannelSet& chan,
                               const Scenario& scen, int k) {
  const Index m = st.w.rows();
  if (k < 0 || k >= static_cast<int>(chan.h1.size()) || m + k >= st.w.cols()) {
    throw DimensionError("qos_linearize: user index out of range");
  }
  QosLinearization q;
  q.k = k;
  q.col = m + k;
  q.h = effective_channel(chan, st.v, k);
  q.xi = scen.xi_linear();
  q.d = user_noise(chan, st.v, noise_levels(scen), k);
  if (q.h.norm() < 1e-12) {
    throw InfeasibleError("qos_linearize: effective channel of user " + std::to_string(k) +
                          " vanishes, SINR constraint cannot hold");
  }
  q.g = q.h.dot(st.w.col(q.col));
  if (std::abs(q.g) <= 1e-14 * q.h.norm() * std::max(st.w.norm(), 1e-300)) {
    throw DegenerateError("qos_linearize: stream of user " + std::to_string(k) +
                          " carries no power at the expansion point");
  }
  return q;
}

double ris_power_headroom(const ChannelSet& chan, const CVector& v, const Scenario& scen) {
  const double s2 = noise_levels(scen).sigma2;
  const CMatrix apa = chan.a.cwiseProduct(v.conjugate() * v.transpose());
  return scen.p_ris_w - 2.0 * s2 * v.squaredNorm() - s2 * apa.squaredNorm();
}

WStepResult solve_w_subproblem(const SurrogateContext& ctx, const BeamformerState& st,
                               const ChannelSet& chan, const Scenario& scen,
                               const WStepOptions& opt) {
  const Index m = st.w.rows(), l = st.w.cols(), n = chan.g.rows();
  const int k_users = static_cast<int>(l - m);
  WStepResult res;
  res.w = ctx.w_i;
  res.surrogate_in = surrogate_value(ctx, ctx.w_i);
  res.surrogate_out = res.surrogate_in;

  double headroom = 0.0;
  if (scen.ris_power_constraint) {
    headroom = ris_power_headroom(chan, st.v, scen);
    if (!(headroom > 0.0)) {
      throw InfeasibleError("solve_w_subproblem: RIS noise alone exhausts the RIS power budget");
    }
  }
  std::vector<QosLinearization> qos;
  if (opt.qos) {
    for (int k = 0; k < k_users; ++k) qos.push_back(qos_linearize(st, chan, scen, k));
  }

  // Nothing reaches the radar receiver through W: every feasible W is optimal.
  if (!(ctx.sinr_i > 0.0)) {
    res.status = conic::SdpStatus::Optimal;
    res.accepted = true;
    return res;
  }

  const double s0 = ctx.sinr_i;
  const CMatrix le = ctx.l_i.adjoint() * ctx.echo.e;  // (M+K) x M
  const bool has_interf = max_abs(le) > 0.0;

  conic::SdpProblem p;
  const conic::BlockId wid = p.add_free_complex(m, l);
  conic::BlockId tid = 0;
  if (has_interf) tid = p.add_free_real(1);

  conic::LinearForm obj = p.trace_form(wid, 2.0 * ctx.echo.b.adjoint() * ctx.l_i);
  obj.constant = -(ctx.t_i * ctx.echo.d).trace().real();
  if (has_interf) {
    obj.coeffs(p.block(tid).offset) = -1.0;
    const RMatrix f = p.linear_map(wid, l * l, [&](const CMatrix& w) {
      return vec(CMatrix(le * w));
    });
    conic::LinearForm rhs = p.zero_form();
    rhs.coeffs(p.block(tid).offset) = 1.0;
    const double scale = std::max((le * ctx.w_i).squaredNorm(), 1e-6 * s0);
    p.add_quadratic_le(f, RVector::Zero(f.rows()), rhs, scale, "radar-interference");
  }
  obj *= 1.0 / s0;
  p.set_objective(obj);

  {
    RMatrix sel = RMatrix::Zero(2 * m * l, p.num_params());
    sel.block(0, p.block(wid).offset, 2 * m * l, 2 * m * l).setIdentity();
    conic::LinearForm bound = p.zero_form();
    bound.constant = std::sqrt(scen.p_bs_w);
    p.add_soc(std::move(sel), RVector::Zero(2 * m * l), bound, "bs-power");
  }

  if (scen.ris_power_constraint) {
    const CMatrix apag = chan.a.cwiseProduct(st.v.conjugate() * st.v.transpose()) * chan.g;
    const CMatrix pg = st.v.asDiagonal() * chan.g;
    const RMatrix f = p.linear_map(wid, 2 * n * l, [&](const CMatrix& w) {
      CVector out(2 * n * l);
      out.head(n * l) = vec(CMatrix(apag * w));
      out.tail(n * l) = vec(CMatrix(pg * w));
      return out;
    });
    const RMatrix fr = compress_rows(f);
    conic::LinearForm bound = p.zero_form();
    bound.constant = std::sqrt(headroom);
    p.add_soc(fr, RVector::Zero(fr.rows()), bound, "ris-power");
  }

  for (const auto& q : qos) {
    const RMatrix f = p.linear_map(wid, l, [&](const CMatrix& w) {
      return CVector(w.adjoint() * q.h);
    });
    CMatrix c = CMatrix::Zero(m, l);
    const double gain = 1.0 + 1.0 / q.xi;
    c.col(q.col) = 2.0 * gain * q.g * q.h;
    conic::LinearForm rhs = p.trace_form(wid, c);
    rhs.constant = -gain * std::norm(q.g) - q.d;
    const double scale = q.rhs(ctx.w_i);
    p.add_quadratic_le(f, RVector::Zero(f.rows()), rhs, scale,
                       "qos-user-" + std::to_string(q.k));
  }

  const conic::SdpSolution sol = conic::solve(p, opt.solver);
  res.status = sol.status;
  res.solver_iterations = sol.iterations;
  if (sol.status == conic::SdpStatus::Infeasible) {
    throw InfeasibleError("solve_w_subproblem: infeasible; dominant constraints: " +
                          family_summary(sol));
  }
  if (sol.status == conic::SdpStatus::Unbounded) return res;
  res.kkt = conic::kkt_report(p, sol);

  const CMatrix w_new = sol.blocks[wid];
  const double f_new = surrogate_value(ctx, w_new);
  BeamformerState cand{w_new, st.v};
  bool ok = f_new >= res.surrogate_in && std::isfinite(f_new);
  if (ok) {
    const MetricReport rep = evaluate(cand, chan, scen, 5e-7);
    ok = rep.bs_power_slack >= -5e-7 && rep.ris_power_slack >= -5e-7;
    for (std::size_t k = 0; k < qos.size() && ok; ++k) ok = rep.qos_slack[k] >= -5e-7;
  }
  if (ok) {
    res.w = w_new;
    res.surrogate_out = f_new;
    res.accepted = true;
  }
  return res;
}

WLoopResult optimize_w(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                       int max_iter, double rel_tol, const WStepOptions& opt) {
  WLoopResult out;
  out.w = st.w;
  BeamformerState cur = st;
  double sinr = radar_sinr(cur, chan, scen);
  out.radar_sinr.push_back(sinr);
  for (int it = 0; it < max_iter; ++it) {
    const SurrogateContext ctx = build_context(cur, chan, scen);
    const WStepResult step = solve_w_subproblem(ctx, cur, chan, scen, opt);
    ++out.iterations;
    out.kkt.push_back(step.kkt);
    if (!step.accepted) break;
    cur.w = step.w;
    const double next = radar_sinr(cur, chan, scen);
    out.radar_sinr.push_back(next);
    const double change = std::abs(next - sinr) / std::max(std::abs(sinr), 1e-300);
    sinr = next;
    if (change < rel_tol) break;
  }
  out.w = cur.w;
  return out;
}

}  // namespace arisac
