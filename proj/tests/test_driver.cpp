#include "doctest.h"
#include "support.hpp"

#include "arisac/driver.hpp"

using namespace arisac;
using testing::rel_err;

namespace {

DriverOptions short_run(int t_max) {
  DriverOptions opt;
  opt.limits.t_max = t_max;
  opt.limits.t1_max = 3;
  opt.limits.t2_max = 3;
  opt.samples = 50;
  return opt;
}

bool same_trace(const RunTrace& a, const RunTrace& b) {
  if (a.records.size() != b.records.size()) return false;
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    const OuterRecord &x = a.records[i], &y = b.records[i];
    if (x.radar_sinr != y.radar_sinr || x.user_sinr != y.user_sinr ||
        x.bs_power_w != y.bs_power_w || x.ris_power_w != y.ris_power_w ||
        x.inner_iters_w != y.inner_iters_w || x.inner_iters_v != y.inner_iters_v) {
      return false;
    }
  }
  return a.state.w == b.state.w && a.state.v == b.state.v && a.termination == b.termination;
}

}  // namespace

TEST_CASE("operation counts") {
  const ComplexityEstimate c = complexity_estimate(4, 2, 12);
  CHECK(c.n1 == 24.0);
  CHECK(c.m1 == 24.0);
  CHECK(c.n2 == 144.0);
  CHECK(c.m2 == 144.0);
  CHECK(c.soc_constraints == 5);
  CHECK(rel_err(c.o_f, 195541.60797129595) < 1e-12);
  CHECK(rel_err(c.o_e, 101699559.26504995) < 1e-12);
  CHECK(rel_err(c.total, 20379020174.604248) < 1e-12);

  CHECK(complexity_estimate(4, 0, 12).soc_constraints == 3);

  // the RIS count is dominated by K N^7 (sqrt(2 N^2) * N^2 * K * N^4)
  const double ratio = complexity_estimate(4, 2, 24).o_e / c.o_e;
  CHECK(rel_err(ratio, 127.66782006920414) < 1e-12);
  CHECK(std::abs(std::log2(ratio) - 7.0) < 0.01);

  Limits l;
  l.t_max = 1;
  l.t1_max = 2;
  l.t2_max = 0;
  CHECK(rel_err(complexity_estimate(4, 2, 12, l).total, 2.0 * c.o_f) < 1e-15);
}

TEST_CASE("identical seeds give identical traces") {
  const Scenario scen;
  Rng ca(21), cb(21);
  const ChannelSet chan_a = draw_channels(scen, ca), chan_b = draw_channels(scen, cb);
  Rng ra(5), rb(5);
  const RunTrace a = run_algorithm1(scen, chan_a, ra, short_run(2));
  const RunTrace b = run_algorithm1(scen, chan_b, rb, short_run(2));
  REQUIRE(a.ok());
  CHECK(same_trace(a, b));
}

TEST_CASE("switched-off surface reduces to BS-only optimization") {
  Scenario scen;
  scen.a_ris_db = -std::numeric_limits<double>::infinity();
  Rng rng(3);
  const ChannelSet chan = draw_channels(scen, rng);
  const RunTrace tr = run_algorithm1(scen, chan, rng, short_run(3));
  REQUIRE(tr.ok());
  CHECK(tr.state.v.norm() == 0.0);
  for (std::size_t i = 1; i < tr.records.size(); ++i) {
    CHECK(tr.records[i].inner_iters_v == 0);
    CHECK(tr.records[i].radar_sinr >= tr.records[i - 1].radar_sinr);
    CHECK(tr.records[i].ris_power_w == 0.0);
  }
  const MetricReport m = evaluate(tr.state, chan, scen);
  CHECK(m.feasible);
}

TEST_CASE("default scenario: monotone, feasible, bounded trace") {
  const Scenario scen;
  Rng crng(2);
  const ChannelSet chan = draw_channels(scen, crng);
  Rng rng(2);
  DriverOptions opt;
  opt.limits.t_max = 6;
  const RunTrace tr = run_algorithm1(scen, chan, rng, opt);
  REQUIRE(tr.ok());
  CHECK(tr.outer_iterations() <= opt.limits.t_max);
  CHECK(tr.max_kkt <= 1e-6);
  for (std::size_t i = 1; i < tr.records.size(); ++i) {
    const double gain =
        linear_to_db(tr.records[i].radar_sinr) - linear_to_db(tr.records[i - 1].radar_sinr);
    CHECK(gain >= -1e-6);
    // early exit only below the outer threshold
    if (i + 1 < tr.records.size()) CHECK(gain >= opt.limits.outer_tol_db);
  }
  if (tr.termination == Termination::Converged) {
    const std::size_t n = tr.records.size();
    CHECK(linear_to_db(tr.records[n - 1].radar_sinr) - linear_to_db(tr.records[n - 2].radar_sinr) <
          opt.limits.outer_tol_db);
  }
  const MetricReport m = evaluate(tr.state, chan, scen);
  CHECK(m.feasible);
  CHECK(m.bs_power_slack >= -1e-6);
  CHECK(m.ris_power_slack >= -1e-6);
  CHECK(m.gain_slack >= -1e-6);
  for (double q : m.qos_slack) CHECK(q >= -1e-6);
  CHECK(rel_err(m.radar_sinr, tr.records.back().radar_sinr) < 1e-12);
}

TEST_CASE("unreachable threshold aborts with diagnostics") {
  Scenario scen;
  scen.xi_db = 120.0;
  scen.xi2_db = 120.0;
  Rng rng(4);
  const ChannelSet chan = draw_channels(scen, rng);
  const RunTrace tr = run_algorithm1(scen, chan, rng, short_run(2));
  CHECK(tr.termination == Termination::InfeasibleInit);
  CHECK_FALSE(tr.ok());
  CHECK_FALSE(tr.message.empty());
  CHECK(tr.records.empty());
}

TEST_CASE("initial surface respects the gain cap and half the RIS budget") {
  const Scenario scen;
  Rng rng(8);
  const ChannelSet chan = draw_channels(scen, rng);
  const CVector v = initial_ris(scen, chan, rng);
  CHECK(v.cwiseAbs2().maxCoeff() <= scen.a_ris_linear() * (1.0 + 1e-12));
  const Index l = scen.m_antennas + scen.k_users;
  const CMatrix w = CMatrix::Identity(scen.m_antennas, l) * std::sqrt(scen.p_bs_w / 4.0);
  CHECK(ris_tx_power({w, v}, chan, scen) <= 0.5 * scen.p_ris_w * (1.0 + 1e-9));
}
