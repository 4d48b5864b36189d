#include "doctest.h"
#include "support.hpp"

#include "arisac/driver.hpp"
#include "arisac/txbf.hpp"

using namespace arisac;
using testing::rel_err;
using testing::rel_err_mat;

namespace {

struct Instance {
  Scenario scen;
  ChannelSet chan;
  BeamformerState st;
};

// Default geometry, random channels, random v at the RIS start magnitude and
// a random full-power W.
Instance random_instance(std::uint64_t seed) {
  Instance in;
  Rng rng(seed);
  in.chan = draw_channels(in.scen, rng);
  in.st.v = initial_ris(in.scen, in.chan, rng);
  const CMatrix w = crandn(in.scen.m_antennas, in.scen.m_antennas + in.scen.k_users, rng);
  in.st.w = w * std::sqrt(in.scen.p_bs_w) / w.norm();
  return in;
}

// Gradient of W -> g(W) as a real vector over (Re, Im) of every entry.
template <typename F>
RVector fd_gradient(const F& g, const CMatrix& w, double h) {
  RVector out(2 * w.size());
  for (Index i = 0; i < w.size(); ++i) {
    for (int part = 0; part < 2; ++part) {
      CMatrix wp = w, wm = w;
      const cplx step = part == 0 ? cplx(h, 0.0) : cplx(0.0, h);
      wp(i) += step;
      wm(i) -= step;
      out(2 * i + part) = (g(wp) - g(wm)) / (2.0 * h);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("surrogate: tangency, gradient match and global lower bound") {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const Instance in = random_instance(seed);
    const SurrogateContext ctx = build_context(in.st, in.chan, in.scen);
    const double sinr = radar_sinr(in.st, in.chan, in.scen);
    CHECK(rel_err(surrogate_value(ctx, in.st.w), sinr) <= 1e-8);
    CHECK(rel_err(ctx.sinr_i, sinr) <= 1e-12);

    auto exact = [&](const CMatrix& w) { return radar_sinr({w, in.st.v}, in.chan, in.scen); };
    auto surr = [&](const CMatrix& w) { return surrogate_value(ctx, w); };
    const double h = 1e-6 * in.st.w.norm();
    const RVector ge = fd_gradient(exact, in.st.w, h);
    const RVector gs = fd_gradient(surr, in.st.w, h);
    CHECK(rel_err_mat(gs, ge) <= 1e-4);

    Rng rng(1000 + seed);
    for (int trial = 0; trial < 100; ++trial) {
      CMatrix w = crandn(in.st.w.rows(), in.st.w.cols(), rng);
      w *= std::sqrt(in.scen.p_bs_w * unit(rng)) / w.norm();
      const double f = surr(w), r = exact(w);
      CHECK(f <= r + 1e-12 * std::abs(r));
    }
  }
}

TEST_CASE("context pieces") {
  const Instance in = random_instance(4);
  const SurrogateContext a = build_context(in.st, in.chan, in.scen);
  const SurrogateContext b = build_context(in.st, in.chan, in.scen);
  CHECK(a.t_i == b.t_i);
  CHECK(a.j_i == b.j_i);
  CHECK(min_eig(a.t_i) >= -1e-12 * hermitian_norm(a.t_i));
  CHECK(rel_err_mat(CMatrix(a.l_i * a.l_i.adjoint()), a.t_i) < 1e-12);

  Scenario s = in.scen;
  s.eta = 0.0;
  BeamformerState st = in.st;
  st.v.setZero();
  const SurrogateContext z = build_context(st, in.chan, s);
  CHECK(rel_err_mat(z.j_i, CMatrix(s.sigma_r2() * CMatrix::Identity(4, 4))) < 1e-15);
  CHECK(z.t_i.norm() == 0.0);
}

TEST_CASE("user constraint linearization") {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Instance in = random_instance(seed);
    for (int k = 0; k < 2; ++k) {
      const QosLinearization q = qos_linearize(in.st, in.chan, in.scen, k);
      CHECK(rel_err(q.lhs(in.st.w), q.exact_lhs(in.st.w)) < 1e-12);
      Rng rng(seed * 7 + k);
      for (int trial = 0; trial < 100; ++trial) {
        CMatrix w = crandn(4, 6, rng);
        w *= std::sqrt(unit(rng)) / w.norm();
        CHECK(q.lhs(w) <= q.exact_lhs(w) * (1.0 + 1e-12) + 1e-300);
        if (q.lhs(w) >= q.rhs(w)) {
          CHECK(user_sinr({w, in.st.v}, in.chan, in.scen, k) >= q.xi * (1.0 - 1e-10));
        }
      }
    }
  }
  Instance in = random_instance(3);
  in.st.w.col(4).setZero();
  CHECK_THROWS_AS(qos_linearize(in.st, in.chan, in.scen, 0), DegenerateError);
}

TEST_CASE("W step: monotone surrogate, feasible output, certified solve") {
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    Instance in = random_instance(seed);
    const FeasibilityResult init = tightened_init(in.chan, in.scen, in.st.v, in.scen.xi2_db);
    BeamformerState st{init.w0, in.st.v};
    for (int it = 0; it < 4; ++it) {
      const SurrogateContext ctx = build_context(st, in.chan, in.scen);
      const double before = radar_sinr(st, in.chan, in.scen);
      const WStepResult r = solve_w_subproblem(ctx, st, in.chan, in.scen);
      CHECK(r.kkt.max() <= 1e-6);
      const double f_new = surrogate_value(ctx, r.w);
      const double after = radar_sinr({r.w, st.v}, in.chan, in.scen);
      CHECK(after >= f_new - 1e-12 * after);
      CHECK(f_new >= before - 1e-8 * before);
      const MetricReport m = evaluate({r.w, st.v}, in.chan, in.scen);
      CHECK(r.w.squaredNorm() <= in.scen.p_bs_w * (1.0 + 1e-6));
      CHECK(m.ris_power_slack >= -1e-6);
      for (double q : m.qos_slack) CHECK(q >= -1e-6);
      st.w = r.w;
    }
  }
}

TEST_CASE("W loop records a non-decreasing trace") {
  Instance in = random_instance(11);
  const FeasibilityResult init = tightened_init(in.chan, in.scen, in.st.v, in.scen.xi2_db);
  const WLoopResult r = optimize_w({init.w0, in.st.v}, in.chan, in.scen, 6);
  REQUIRE(r.radar_sinr.size() >= 2);
  for (std::size_t i = 1; i < r.radar_sinr.size(); ++i) {
    CHECK(r.radar_sinr[i] >= r.radar_sinr[i - 1] * (1.0 - 1e-8));
  }
  CHECK(r.iterations <= 6);
}

TEST_CASE("no users, no RIS, no target: zero objective") {
  Scenario s = testing::small_scenario(3, 4, 0);
  Rng rng(2);
  ChannelSet chan = draw_channels(s, rng);
  chan.a.setZero();
  BeamformerState st{CMatrix::Identity(3, 3) * 0.5, CVector::Zero(4)};
  const SurrogateContext ctx = build_context(st, chan, s);
  WStepOptions opt;
  opt.qos = false;
  const WStepResult r = solve_w_subproblem(ctx, st, chan, s, opt);
  CHECK(std::abs(r.surrogate_out) <= 1e-12);
  CHECK(r.w.squaredNorm() <= s.p_bs_w * (1.0 + 1e-6));
}

TEST_CASE("exhausted RIS budget is reported as infeasible") {
  Instance in = random_instance(6);
  Scenario s = in.scen;
  s.p_ris_w = 1e-30;  // noise amplification alone exceeds it
  const SurrogateContext ctx = build_context(in.st, in.chan, s);
  CHECK(ris_power_headroom(in.chan, in.st.v, s) < 0.0);
  CHECK_THROWS_AS(solve_w_subproblem(ctx, in.st, in.chan, s), InfeasibleError);
}
