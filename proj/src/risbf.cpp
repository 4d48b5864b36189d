#include "arisac/risbf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arisac {

CMatrix lift(const CVector& v, cplx t) {
  if (std::abs(std::abs(t) - 1.0) > 1e-12) throw DomainError("lift: |t| must be 1");
  CVector vb(v.size() + 1);
  vb.head(v.size()) = v.conjugate();
  vb(v.size()) = t;
  return vb * vb.adjoint();
}

CVector vhat(const CMatrix& vbar) {
  const Index n = vbar.rows() - 1;
  return vec(CMatrix(vbar.topLeftCorner(n, n)));
}

namespace {

RVector lifted_diag(const CMatrix& vbar) {
  const Index n = vbar.rows() - 1;
  return vbar.diagonal().head(n).real();
}

}  // namespace

double LiftedProblem::surrogate_linear(const CMatrix& vbar) const {
  const CVector vh = vhat(vbar);
  const RVector dv = lifted_diag(vbar);
  return 2.0 * n1.dot(vh).real() - n2.dot(vh).real() -
         sigma2 * gtig.diagonal().real().dot(dv) - sigma_r2 * trace_t;
}

double LiftedProblem::surrogate(const CMatrix& vbar) const {
  return surrogate_linear(vbar) - (m1 * vhat(vbar)).squaredNorm();
}

double LiftedProblem::ris_power_linear(const CMatrix& vbar) const {
  const RVector dv = lifted_diag(vbar);
  return (grg.diagonal().real().array() + 2.0 * sigma2).matrix().dot(dv);
}

CVector LiftedProblem::power_stack(const CMatrix& vbar) const {
  const CVector vh = vhat(vbar);
  CVector out(m2.rows() + m3.rows());
  out.head(m2.rows()) = m2 * vh;
  out.tail(m3.rows()) = m3 * vh;
  return out;
}

double LiftedProblem::ris_power(const CMatrix& vbar) const {
  return power_stack(vbar).squaredNorm() + ris_power_linear(vbar);
}

double LiftedProblem::qos_margin(const CMatrix& vbar, int k) const {
  const auto kk = static_cast<std::size_t>(k);
  const double own = (r2k.at(kk) * vbar).trace().real();
  const double all = (r1k.at(kk) * vbar).trace().real();
  return (1.0 + 1.0 / xi) * own - all - sigma2 * h1_abs2[kk].dot(lifted_diag(vbar)) - sigma_z2;
}

CVector build_n1(const SurrogateContext& ctx, const ChannelSet& chan) {
  // Y = G R B_i^H J_i^-1 G^H = G W L_i^H G^H ; n1 = vec(A^T) o vec(Y)
  const CMatrix y = chan.g * ctx.w_i * ctx.l_i.adjoint() * chan.g.adjoint();
  return vec(CMatrix(chan.a.transpose())).cwiseProduct(vec(y));
}

QuadraticTerms build_quadratics(const SurrogateContext& ctx, const ChannelSet& chan,
                                const Scenario& scen) {
  const Index n = chan.g.rows();
  const double s2 = noise_levels(scen).sigma2;
  QuadraticTerms q;
  // G T_i G^H = F F^H with the exact factor F = G J_i^-1 X_i
  const CMatrix f = chan.g * ctx.l_i;
  q.gtig = f * f.adjoint();
  // ||F^H (A o V)||^2 = ||(I kron F^H) Diag(vec A) vhat||^2
  const CMatrix kf = kron(CMatrix::Identity(n, n), CMatrix(f.adjoint()));
  q.m1 = std::sqrt(s2) * kf * vec(chan.a).asDiagonal();
  const CMatrix grg = chan.g * covariance(ctx.w_i) * chan.g.adjoint();
  // eta enters J as E R E^H, hence squared
  q.n2 = scen.eta * scen.eta * vec(q.gtig).conjugate().cwiseProduct(vec(grg));
  return q;
}

PowerTerms build_power_terms(const ChannelSet& chan, const CMatrix& w, const Scenario& scen) {
  const Index n = chan.g.rows();
  const double s2 = noise_levels(scen).sigma2;
  PowerTerms p;
  const CMatrix gw = chan.g * w;
  p.grg = gw * gw.adjoint();
  // vec((A o V) G W) = ((G W)^T kron I) Diag(vec A) vhat
  const CMatrix kg = kron(CMatrix(gw.transpose()), CMatrix::Identity(n, n));
  p.m2 = kg * vec(chan.a).asDiagonal();
  p.m3 = std::sqrt(s2) * CMatrix(vec(chan.a).asDiagonal());
  return p;
}

CommLift build_comm_lift(const ChannelSet& chan, const CMatrix& w) {
  const Index n = chan.g.rows(), m = chan.g.cols();
  CommLift c;
  const CMatrix r = covariance(w);
  for (std::size_t k = 0; k < chan.h1.size(); ++k) {
    CMatrix h(n + 1, m);
    h.topRows(n) = chan.h1[k].conjugate().asDiagonal() * chan.g;
    h.row(n) = chan.h2[k].adjoint();
    const CVector hw = h * w.col(m + static_cast<Index>(k));
    c.r1k.push_back(h * r * h.adjoint());
    c.r2k.push_back(hw * hw.adjoint());
    c.h1_abs2.push_back(chan.h1[k].cwiseAbs2());
    c.h_lift.push_back(std::move(h));
  }
  return c;
}

LiftedProblem build_lifted(const SurrogateContext& ctx, const ChannelSet& chan,
                           const Scenario& scen, bool qos) {
  LiftedProblem lp;
  lp.n = chan.g.rows();
  lp.m = chan.g.cols();
  lp.l = ctx.w_i.cols();
  lp.v_i = ctx.v_i;
  const NoiseLevels noise = noise_levels(scen);
  lp.sigma2 = noise.sigma2;
  lp.sigma_r2 = noise.sigma_r2;
  lp.sigma_z2 = noise.sigma_z2;
  lp.n1 = build_n1(ctx, chan);
  QuadraticTerms q = build_quadratics(ctx, chan, scen);
  lp.m1 = std::move(q.m1);
  lp.n2 = std::move(q.n2);
  lp.gtig = std::move(q.gtig);
  PowerTerms p = build_power_terms(chan, ctx.w_i, scen);
  lp.m2 = std::move(p.m2);
  lp.m3 = std::move(p.m3);
  lp.grg = std::move(p.grg);
  lp.qos = qos;
  if (qos) {
    CommLift c = build_comm_lift(chan, ctx.w_i);
    lp.h_lift = std::move(c.h_lift);
    lp.r1k = std::move(c.r1k);
    lp.r2k = std::move(c.r2k);
    lp.h1_abs2 = std::move(c.h1_abs2);
  }
  lp.trace_t = ctx.t_i.trace().real();
  lp.xi = scen.xi_linear();
  lp.a_ris = scen.a_ris_linear();
  lp.p_ris = scen.p_ris_w;
  lp.ris_power_constraint = scen.ris_power_constraint;
  lp.sinr_i = ctx.sinr_i;
  return lp;
}

CMatrix RisSdp::value(const conic::SdpSolution& sol) const {
  const CMatrix y = sol.blocks.at(vbar);
  RVector d = RVector::Constant(y.rows(), var_scale);
  d(y.rows() - 1) = 1.0;
  const CMatrix out = d.cast<cplx>().asDiagonal() * y * d.cast<cplx>().asDiagonal();
  return 0.5 * (out + out.adjoint());
}

RisSdp assemble_ris_sdp(const LiftedProblem& lp, double var_scale) {
  if (!(var_scale > 0.0)) throw DomainError("assemble_ris_sdp: variable scale must be positive");
  const Index n = lp.n;
  if (lp.n1.size() != n * n || lp.m1.cols() != n * n || lp.m2.cols() != n * n ||
      (lp.qos && lp.r1k.size() != lp.r2k.size())) {
    throw DimensionError("assemble_ris_sdp: lifted terms have inconsistent sizes");
  }
  RisSdp out;
  out.var_scale = var_scale;
  conic::SdpProblem& p = out.problem;
  out.vbar = p.add_hermitian_psd(n + 1);
  const conic::BlockId tid = p.add_free_real(1);
  const Index t_off = p.block(tid).offset;

  RVector dsc = RVector::Constant(n + 1, var_scale);
  dsc(n) = 1.0;
  const CMatrix d = dsc.cast<cplx>().asDiagonal();

  const double s0 = lp.sinr_i > 0.0 ? lp.sinr_i : 1.0;
  const CMatrix at_i = lift(lp.v_i);
  // K acting on vhat, widened to act on vec(Y) of the scaled block
  auto widen = [&](const CMatrix& k) {
    CMatrix out = CMatrix::Zero(k.rows(), (n + 1) * (n + 1));
    for (Index j = 0; j < n; ++j) {
      out.middleCols(j * (n + 1), n) = var_scale * var_scale * k.middleCols(j * n, n);
    }
    return out;
  };

  // objective: linear part, minus the epigraph of ||M1 vhat||^2
  const double konst = -lp.sigma_r2 * lp.trace_t;
  // Re Tr(C^H Vbar) with Vbar = D Y D is Re Tr((D C D)^H Y)
  auto tform = [&](const CMatrix& c) { return p.trace_form(out.vbar, CMatrix(d * c * d)); };
  auto lifted = [&](const CMatrix& nn, const RVector& dg) {
    CMatrix c = CMatrix::Zero(n + 1, n + 1);
    c.topLeftCorner(n, n) = nn;
    c.diagonal().head(n) += dg.cast<cplx>();
    return c;
  };
  auto unvec = [&](const CVector& x) { return CMatrix(x.reshaped(n, n)); };
  conic::LinearForm obj = tform(lifted(2.0 * unvec(lp.n1) - unvec(lp.n2),
                                       -lp.sigma2 * lp.gtig.diagonal().real()));
  obj.constant = konst;
  obj.coeffs(t_off) = -1.0;
  obj *= 1.0 / s0;
  p.set_objective(obj);
  {
    const RMatrix f = p.vec_map(out.vbar, widen(lp.m1));
    conic::LinearForm rhs = p.zero_form();
    rhs.coeffs(t_off) = 1.0;
    const double scale = std::max((lp.m1 * vhat(at_i)).squaredNorm(), 1e-9 * s0);
    p.add_quadratic_le(f, RVector::Zero(f.rows()), rhs, scale, "radar-noise");
  }

  if (lp.ris_power_constraint) {
    CMatrix stack(lp.m2.rows() + lp.m3.rows(), n * n);
    stack << lp.m2, lp.m3;
    const RMatrix f = p.vec_map(out.vbar, widen(stack));
    const RVector pd = lp.grg.diagonal().real().array() + 2.0 * lp.sigma2;
    conic::LinearForm rhs = tform(lifted(CMatrix::Zero(n, n), -pd));
    rhs.constant = lp.p_ris;
    const double scale = std::max(lp.power_stack(at_i).squaredNorm(), 1e-6 * lp.p_ris);
    p.add_quadratic_le(f, RVector::Zero(f.rows()), rhs, scale, "ris-power");
  }

  if (lp.qos) {
    for (int k = 0; k < static_cast<int>(lp.r1k.size()); ++k) {
      const auto kk = static_cast<std::size_t>(k);
      CMatrix c = (1.0 + 1.0 / lp.xi) * lp.r2k[kk] - lp.r1k[kk];
      c.diagonal().head(n) -= lp.sigma2 * lp.h1_abs2[kk].cast<cplx>();
      conic::LinearForm f = tform(c);
      p.add_constraint(f, conic::Relation::GreaterEqual, lp.sigma_z2,
                       "qos-user-" + std::to_string(k));
    }
  }

  if (std::isfinite(lp.a_ris)) {
    for (Index i = 0; i < n; ++i) {
      CMatrix e = CMatrix::Zero(n + 1, n + 1);
      e(i, i) = var_scale * var_scale;
      p.add_constraint(p.trace_form(out.vbar, e), conic::Relation::LessEqual, lp.a_ris,
                       "gain-cap");
    }
  }
  {
    CMatrix e = CMatrix::Zero(n + 1, n + 1);
    e(n, n) = 1.0;
    p.add_constraint(p.trace_form(out.vbar, e), conic::Relation::Equal, 1.0, "homogenization");
  }
  return out;
}

CVector repair_ris_candidate(const CVector& v_in, const CMatrix& w, const ChannelSet& chan,
                             const Scenario& scen) {
  CVector v = v_in;
  const double a = scen.a_ris_linear();
  if (std::isfinite(a)) {
    const double cap = std::sqrt(a);
    for (Index i = 0; i < v.size(); ++i) {
      const double r = std::abs(v(i));
      if (r > cap) v(i) *= cap / r;
    }
  }
  if (!scen.ris_power_constraint) return v;
  const double s2 = noise_levels(scen).sigma2;
  const CMatrix apa = chan.a.cwiseProduct(v.conjugate() * v.transpose());
  const double a4 = (apa * chan.g * w).squaredNorm() + s2 * apa.squaredNorm();
  const double a2 = (v.asDiagonal() * chan.g * w).squaredNorm() + 2.0 * s2 * v.squaredNorm();
  const double budget = scen.p_ris_w * (1.0 - 1e-9);
  if (a4 + a2 <= budget) return v;
  // a4 y^2 + a2 y = budget, y = c^2
  double y;
  if (a4 > 0.0) {
    y = 2.0 * budget / (a2 + std::sqrt(a2 * a2 + 4.0 * a4 * budget));
  } else {
    y = budget / a2;
  }
  return std::sqrt(y) * v;
}

namespace {

struct Candidate {
  bool feasible = false;
  double sinr = 0.0;
  double violation = std::numeric_limits<double>::infinity();
};

Candidate assess(const CVector& v, const BeamformerState& st, const ChannelSet& chan,
                 const Scenario& scen, bool qos) {
  const BeamformerState s{st.w, v};
  const MetricReport rep = evaluate(s, chan, scen, 5e-7);
  double worst = std::min({rep.bs_power_slack, rep.ris_power_slack, rep.gain_slack});
  if (qos) {
    for (double q : rep.qos_slack) worst = std::min(worst, q);
  }
  Candidate c;
  c.feasible = worst >= -5e-7;
  c.violation = std::max(0.0, -worst);
  c.sinr = rep.radar_sinr;
  return c;
}

}  // namespace

RandomizationResult gaussian_randomize(const CMatrix& vbar, const BeamformerState& st,
                                       const ChannelSet& chan, const Scenario& scen,
                                       int samples, Rng& rng, bool qos,
                                       const std::optional<CVector>& previous) {
  const Index n = vbar.rows() - 1;
  if (n != chan.g.rows()) throw DimensionError("gaussian_randomize: Vbar has wrong order");
  // directions at roundoff level would only add noise to the samples
  const CMatrix f = psd_factor(CMatrix(0.5 * (vbar + vbar.adjoint())), 1e-10);

  std::vector<CVector> cands;
  auto push = [&](const CVector& xb) {
    if (std::abs(xb(n)) <= 1e-12 * xb.norm() || !xb.allFinite()) return;
    const CVector u = xb.head(n) / xb(n);
    cands.push_back(repair_ris_candidate(u.conjugate(), st.w, chan, scen));
  };
  if (f.cols() > 0) {
    push(f.col(0));  // principal direction
    for (int s = 0; s < samples; ++s) push(CVector(f * crandn(f.cols(), 1, rng)));
  }

  RandomizationResult out;
  double best_violation = std::numeric_limits<double>::infinity();
  CVector best_infeasible;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const Candidate c = assess(cands[i], st, chan, scen, qos);
    if (c.feasible) {
      ++out.feasible_candidates;
      if (out.best_candidate < 0 || c.sinr > out.radar_sinr) {
        out.best_candidate = static_cast<int>(i);
        out.radar_sinr = c.sinr;
        out.v = cands[i];
      }
    } else if (c.violation < best_violation) {
      best_violation = c.violation;
      best_infeasible = cands[i];
    }
  }
  if (previous) {
    const Candidate c = assess(*previous, st, chan, scen, qos);
    if (c.feasible && (out.best_candidate < 0 || c.sinr > out.radar_sinr)) {
      out.best_candidate = -1;
      out.radar_sinr = c.sinr;
      out.v = *previous;
    }
  }
  if (out.v.size() == 0) {
    throw RandomizationError("gaussian_randomize: no feasible candidate among " +
                                 std::to_string(cands.size()),
                             best_infeasible);
  }
  return out;
}

VStepResult solve_v_subproblem(const BeamformerState& st, const ChannelSet& chan,
                               const Scenario& scen, Rng& rng, const VStepOptions& opt) {
  VStepResult res;
  res.v = st.v;
  if (scen.a_ris_linear() == 0.0) {
    // zero gain cap: v = 0 is the only feasible point
    res.v = CVector::Zero(st.v.size());
    res.status = conic::SdpStatus::Optimal;
    res.accepted = st.v.squaredNorm() > 0.0 &&
                   radar_sinr({st.w, res.v}, chan, scen) >= radar_sinr(st, chan, scen);
    if (!res.accepted) res.v = st.v;
    return res;
  }
  const SurrogateContext ctx = build_context(st, chan, scen);
  const LiftedProblem lp = build_lifted(ctx, chan, scen, opt.qos);
  const double rms = st.v.size() ? st.v.norm() / std::sqrt(static_cast<double>(st.v.size())) : 0.0;
  const double scale = rms > 0.0 ? rms : 1.0;
  const RisSdp sdp = assemble_ris_sdp(lp, scale);
  const conic::SdpSolution sol = conic::solve(sdp.problem, opt.solver);
  res.status = sol.status;
  res.solver_iterations = sol.iterations;
  if (sol.status == conic::SdpStatus::Infeasible || sol.status == conic::SdpStatus::Unbounded) {
    return res;
  }
  res.kkt = conic::kkt_report(sdp.problem, sol);
  res.sdr_value = sol.objective * (lp.sinr_i > 0.0 ? lp.sinr_i : 1.0);
  const CMatrix vbar = sdp.value(sol);
  const double current = radar_sinr(st, chan, scen);
  try {
    RandomizationResult rr = gaussian_randomize(vbar, st, chan, scen, opt.samples, rng, opt.qos,
                                                st.v);
    if (rr.best_candidate >= 0 && rr.radar_sinr >= current) {
      res.v = rr.v;
      res.accepted = true;
    }
    res.randomization = std::move(rr);
  } catch (const RandomizationError&) {
    // previous v was not feasible either; keep it and let the caller decide
  }
  return res;
}

VLoopResult optimize_v(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                       int max_iter, Rng& rng, double rel_tol, const VStepOptions& opt) {
  VLoopResult out;
  BeamformerState cur = st;
  double sinr = radar_sinr(cur, chan, scen);
  out.radar_sinr.push_back(sinr);
  for (int it = 0; it < max_iter; ++it) {
    const VStepResult step = solve_v_subproblem(cur, chan, scen, rng, opt);
    ++out.iterations;
    out.kkt.push_back(step.kkt);
    if (!step.randomization) ++out.randomization_failures;
    if (!step.accepted) break;
    cur.v = step.v;
    const double next = radar_sinr(cur, chan, scen);
    out.radar_sinr.push_back(next);
    const double change = std::abs(next - sinr) / std::max(std::abs(sinr), 1e-300);
    sinr = next;
    if (change < rel_tol) break;
  }
  out.v = cur.v;
  return out;
}

}  // namespace arisac
