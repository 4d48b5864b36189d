#include "doctest.h"
#include "support.hpp"

#include "arisac/sigmodel.hpp"

using namespace arisac;
using testing::rel_err;
using testing::rel_err_mat;

namespace {

struct Instance {
  Scenario scen;
  ChannelSet chan;
  BeamformerState st;
};

// Random state at full BS power with |v_n| spread around 10.
Instance make_instance(int m, int n, int k, std::uint64_t seed) {
  Instance in{testing::small_scenario(m, n, k), {}, {}};
  if (k >= 1) in.scen.ue_pos[0] = {10.0, 5.0};
  if (k >= 2) in.scen.ue_pos[1] = {10.0, 50.0};
  Rng rng(seed);
  in.chan = draw_channels(in.scen, rng);
  CMatrix w = crandn(m, m + k, rng);
  in.st.w = w * std::sqrt(in.scen.p_bs_w) / w.norm();
  in.st.v = 10.0 * crandn(n, 1, rng);
  return in;
}

}  // namespace

TEST_CASE("covariance and phi") {
  CHECK(covariance(CMatrix::Identity(3, 3)) == CMatrix::Identity(3, 3));
  CHECK(covariance(CMatrix::Zero(3, 4)).norm() == 0.0);
  const CVector v = (CVector(2) << cplx(1, 2), cplx(0, -1)).finished();
  const CMatrix p = phi_matrix(v);
  CHECK(p(0, 0) == cplx(1, 2));
  CHECK(p(1, 1) == cplx(0, -1));
  CHECK(p(0, 1) == cplx(0, 0));
}

TEST_CASE("echo matrices special cases") {
  Instance in = make_instance(3, 4, 1, 5);
  const NoiseLevels noise = noise_levels(in.scen);

  const EchoMatrices z = echo_matrices(in.chan, CVector::Zero(4), in.scen.eta, noise);
  CHECK(z.b.norm() == 0.0);
  CHECK(z.c.norm() == 0.0);
  CHECK(z.e.norm() == 0.0);
  CHECK(rel_err_mat(z.d, CMatrix(noise.sigma_r2 * CMatrix::Identity(3, 3))) < 1e-15);

  ChannelSet no_target = in.chan;
  no_target.a.setZero();
  const EchoMatrices a0 = echo_matrices(no_target, in.st.v, in.scen.eta, noise);
  CHECK(a0.b.norm() == 0.0);
  CHECK(a0.c.norm() == 0.0);

  const EchoMatrices e0 = echo_matrices(in.chan, in.st.v, 0.0, noise);
  const CMatrix r = covariance(in.st.w);
  CHECK(e0.j(r) == e0.d);
}

TEST_CASE("radar SINR trivial cases and invariances") {
  Instance in = make_instance(4, 6, 2, 8);
  BeamformerState zero = in.st;
  zero.w.setZero();
  CHECK(radar_sinr(zero, in.chan, in.scen) == 0.0);
  ChannelSet no_target = in.chan;
  no_target.a.setZero();
  CHECK(radar_sinr(in.st, no_target, in.scen) == 0.0);

  // W_r -> W_r Q for unitary Q leaves R and hence the SINR unchanged
  Rng rng(1);
  const Eigen::HouseholderQR<CMatrix> qr(crandn(4, 4, rng));
  const CMatrix q = qr.householderQ();
  BeamformerState rot = in.st;
  rot.w.leftCols(4) = in.st.w.leftCols(4) * q;
  CHECK(rel_err(radar_sinr(rot, in.chan, in.scen), radar_sinr(in.st, in.chan, in.scen)) < 1e-10);

  BeamformerState dbl = in.st;
  dbl.w *= 2.0;
  CHECK(rel_err(covariance(dbl.w).trace().real(), 4.0 * covariance(in.st.w).trace().real()) <
        1e-14);
  CHECK(rel_err(evaluate(dbl, in.chan, in.scen).bs_power, 4.0 * in.scen.p_bs_w) < 1e-12);
}

TEST_CASE("user SINR") {
  Instance in = make_instance(3, 4, 1, 9);
  BeamformerState st = in.st;
  st.w.col(3).setZero();
  CHECK(user_sinr(st, in.chan, in.scen, 0) == 0.0);

  // no RIS, no radar stream: matched filter on the direct link
  const double p = 0.3;
  st.v.setZero();
  st.w.setZero();
  st.w.col(3) = in.chan.h2[0].normalized() * std::sqrt(p);
  const double expect = in.chan.h2[0].squaredNorm() * p / in.scen.sigma_z2();
  CHECK(rel_err(user_sinr(st, in.chan, in.scen, 0), expect) < 1e-12);

  const CVector h = effective_channel(in.chan, in.st.v, 0);
  const CVector direct = in.chan.g.adjoint() * phi_matrix(in.st.v).adjoint() * in.chan.h1[0] +
                         in.chan.h2[0];
  CHECK(rel_err_mat(h, direct) < 1e-14);
}

TEST_CASE("RIS transmit power special cases") {
  Instance in = make_instance(3, 5, 1, 10);
  BeamformerState st = in.st;
  st.v.setZero();
  CHECK(ris_tx_power(st, in.chan, in.scen) == 0.0);

  ChannelSet dark = in.chan;
  dark.g.setZero();
  dark.a.setZero();
  st.v = CVector::Ones(5);
  CHECK(rel_err(ris_tx_power(st, dark, in.scen), 2.0 * in.scen.sigma_ris2() * 5.0) < 1e-14);
}

TEST_CASE("beampattern") {
  Instance in = make_instance(4, 8, 1, 12);
  const std::vector<double> grid = {-1.0, -0.5, 0.0, 0.5, 1.0};
  BeamformerState st = in.st;
  st.w.setZero();
  CHECK(beampattern(st, in.chan, in.scen, grid).norm() == 0.0);
  st = in.st;
  st.v.setZero();
  CHECK(beampattern(st, in.chan, in.scen, grid).norm() == 0.0);
  const RVector p = beampattern(in.st, in.chan, in.scen, grid);
  CHECK(p.minCoeff() >= 0.0);
  CHECK(p.maxCoeff() > 0.0);
}

TEST_CASE("peak sidelobe ratio") {
  RVector one_lobe(5);
  one_lobe << 0.1, 0.5, 1.0, 0.5, 0.1;
  CHECK(peak_sidelobe_ratio(one_lobe) == 0.0);
  RVector two(7);
  two << 0.3, 0.1, 0.5, 1.0, 0.5, 0.05, 0.2;
  CHECK(peak_sidelobe_ratio(two) == doctest::Approx(0.3));
}

TEST_CASE("evaluate reports normalized slacks") {
  Instance in = make_instance(3, 4, 1, 14);
  const MetricReport r = evaluate(in.st, in.chan, in.scen);
  CHECK(r.bs_power_slack == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(r.user_sinr.size() == 1);
  CHECK(r.qos_slack.size() == 1);
  CHECK(rel_err(r.radar_sinr, radar_sinr(in.st, in.chan, in.scen)) == 0.0);
}

TEST_CASE("closed forms agree with Monte-Carlo simulation of the signals") {
  for (std::uint64_t seed : {1, 2}) {
    Instance in = make_instance(2, 3, 1, 100 + seed);
    Rng rng(seed);
    const long samples = 1000000;
    CHECK(rel_err(mc_radar_sinr_oracle(in.st, in.chan, in.scen, samples, rng),
                  radar_sinr(in.st, in.chan, in.scen)) < 0.02);
    CHECK(rel_err(mc_user_sinr_oracle(in.st, in.chan, in.scen, 0, samples, rng),
                  user_sinr(in.st, in.chan, in.scen, 0)) < 0.02);
    CHECK(rel_err(mc_ris_power_oracle(in.st, in.chan, in.scen, samples, rng),
                  ris_tx_power(in.st, in.chan, in.scen)) < 0.02);
  }
}
