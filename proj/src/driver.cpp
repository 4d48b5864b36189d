#include "arisac/driver.hpp"

#include <chrono>
#include <cmath>

namespace arisac {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Converged:
      return "converged";
    case Termination::IterationLimit:
      return "iteration-limit";
    case Termination::InfeasibleInit:
      return "infeasible-init";
    case Termination::SolverFailure:
      return "solver-failure";
  }
  return "unknown";
}

CVector initial_ris(const Scenario& scen, const ChannelSet& chan, Rng& rng) {
  const Index n = chan.g.rows(), m = chan.g.cols();
  const double a = scen.a_ris_linear();
  if (a == 0.0) return CVector::Zero(n);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
  CVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = std::polar(1.0, phase(rng));
  const double mag = std::isfinite(a) ? std::sqrt(a) : 1e4;
  v *= mag;
  if (!scen.ris_power_constraint) return v;
  const Index l = m + static_cast<Index>(chan.h1.size());
  Scenario half = scen;
  half.p_ris_w = 0.5 * scen.p_ris_w;
  // isotropic full-power transmit covariance P_BS/M I
  const CMatrix w = CMatrix::Identity(m, l) * std::sqrt(scen.p_bs_w / double(m));
  return repair_ris_candidate(v, w, chan, half);
}

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

OuterRecord make_record(int t, const BeamformerState& st, const ChannelSet& chan,
                        const Scenario& scen) {
  OuterRecord r;
  r.t = t;
  r.radar_sinr = radar_sinr(st, chan, scen);
  for (int k = 0; k < static_cast<int>(chan.h1.size()); ++k) {
    r.user_sinr.push_back(user_sinr(st, chan, scen, k));
  }
  r.bs_power_w = st.w.squaredNorm();
  r.ris_power_w = ris_tx_power(st, chan, scen);
  return r;
}

double worst_kkt(const std::vector<conic::KktReport>& ks) {
  double w = 0.0;
  for (const auto& k : ks) w = std::max(w, k.max());
  return w;
}

}  // namespace

RunTrace run_algorithm1(const Scenario& scen, const ChannelSet& chan, Rng& rng,
                        const DriverOptions& opt) {
  RunTrace trace;
  const auto t_start = Clock::now();
  const Index m = chan.g.cols();
  const int k_users = static_cast<int>(chan.h1.size());
  const bool frozen_v = scen.a_ris_linear() == 0.0;

  // steps 1-3: random v, covariance problem, rank-one construction
  CVector v0 = initial_ris(scen, chan, rng);
  FeasibilityResult init;
  bool have_init = false;
  std::string diag;
  for (int attempt = 0; attempt < 3 && !have_init; ++attempt) {
    try {
      init = opt.use_tightened ? tightened_init(chan, scen, v0, scen.xi2_db)
                               : solve_feasibility(chan, scen, v0, scen.xi_db);
      have_init = true;
    } catch (const FeasibilityError& e) {
      diag = e.what();
      v0 *= 0.1;  // a weaker surface leaves more RIS budget for the signal
    }
  }
  if (!have_init) {
    trace.termination = Termination::InfeasibleInit;
    trace.message = diag;
    trace.state = {CMatrix::Zero(m, m + k_users), v0};
    return trace;
  }
  for (const auto& w : init.warnings) trace.message += w + "; ";
  trace.max_kkt = init.kkt.max();
  ++trace.solves;

  BeamformerState st{init.w0, v0};
  perturb_zero_columns(st.w, rng);
  OuterRecord rec0 = make_record(0, st, chan, scen);
  rec0.wall_ms = ms_since(t_start);
  trace.records.push_back(rec0);

  WStepOptions wopt;
  wopt.solver = opt.solver;
  wopt.qos = opt.qos;
  VStepOptions vopt;
  vopt.solver = opt.solver;
  vopt.qos = opt.qos;
  vopt.samples = opt.samples;

  trace.termination = Termination::IterationLimit;
  for (int t = 1; t <= opt.limits.t_max; ++t) {
    const auto t0 = Clock::now();
    OuterRecord rec;
    bool failed = false;
    for (int attempt = 0; attempt < 2; ++attempt) {
      WStepOptions wo = wopt;
      VStepOptions vo = vopt;
      if (attempt == 1) {
        wo.solver.tol *= 0.1;
        vo.solver.tol *= 0.1;
      }
      try {
        BeamformerState next = st;
        const WLoopResult wl =
            optimize_w(next, chan, scen, opt.limits.t1_max, opt.limits.inner_rel_tol, wo);
        next.w = wl.w;
        trace.max_kkt = std::max(trace.max_kkt, worst_kkt(wl.kkt));
        trace.solves += wl.iterations;
        int v_iters = 0;
        if (!frozen_v) {
          const VLoopResult vl =
              optimize_v(next, chan, scen, opt.limits.t2_max, rng, opt.limits.inner_rel_tol, vo);
          next.v = vl.v;
          v_iters = vl.iterations;
          trace.max_kkt = std::max(trace.max_kkt, worst_kkt(vl.kkt));
          trace.solves += vl.iterations;
        }
        st = next;
        rec = make_record(t, st, chan, scen);
        rec.inner_iters_w = wl.iterations;
        rec.inner_iters_v = v_iters;
        failed = false;
        break;
      } catch (const std::exception& e) {
        failed = true;
        diag = e.what();
      }
    }
    if (failed) {
      trace.termination = Termination::SolverFailure;
      trace.message += "outer iteration " + std::to_string(t) + ": " + diag;
      break;
    }
    rec.wall_ms = ms_since(t0);
    const double prev = trace.records.back().radar_sinr;
    trace.records.push_back(rec);
    if (prev > 0.0 && rec.radar_sinr > 0.0 &&
        linear_to_db(rec.radar_sinr) - linear_to_db(prev) < opt.limits.outer_tol_db) {
      trace.termination = Termination::Converged;
      break;
    }
  }
  trace.state = st;
  return trace;
}

ComplexityEstimate complexity_estimate(int m, int k, int n, const Limits& limits) {
  ComplexityEstimate c;
  const double mm = m, kk = k, nn = n;
  c.n1 = c.m1 = mm * (mm + kk);
  c.soc_constraints = k + 3;
  c.o_f = std::sqrt(2.0 * c.m1) * (c.n1 * c.n1 + c.n1 * kk * std::pow(mm * (mm + kk), 2));
  c.n2 = c.m2 = nn * nn;
  c.o_e = std::sqrt(2.0 * c.m2) * (c.n2 * c.n2 + c.n2 * kk * std::pow(nn * nn, 2));
  c.total = limits.t_max * (limits.t1_max * c.o_f + limits.t2_max * c.o_e);
  return c;
}

}  // namespace arisac
