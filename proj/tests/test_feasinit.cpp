#include "doctest.h"
#include "support.hpp"

#include "arisac/driver.hpp"
#include "arisac/feasinit.hpp"

using namespace arisac;
using testing::rel_err;
using testing::rel_err_mat;

namespace {

// Default scenario with both users dropped uniformly in a 40 m x 60 m box
// next to the BS-RIS axis and a random BS power.
Scenario random_scenario(Rng& rng) {
  std::uniform_real_distribution<double> ux(5.0, 45.0), uy(0.0, 60.0), pw(0.2, 1.0);
  Scenario s;
  for (auto& p : s.ue_pos) p = {ux(rng), uy(rng)};
  s.p_bs_w = pw(rng);
  return s;
}

}  // namespace

TEST_CASE("construction satisfies the covariance-problem constraints") {
  Rng rng(77);
  int built = 0, tried = 0;
  while (built < 20 && tried < 60) {
    ++tried;
    const Scenario scen = random_scenario(rng);
    const ChannelSet chan = draw_channels(scen, rng);
    const CVector v = initial_ris(scen, chan, rng);
    FeasibilityResult r;
    try {
      r = solve_feasibility(chan, scen, v, scen.xi_db);
    } catch (const FeasibilityError&) {
      continue;
    }
    ++built;
    CHECK(r.kkt.max() <= 1e-6);
    CHECK(r.slacks.min() >= -1e-6);
    const FeasibilitySlacks again = feasibility_slacks(r.w0, chan, scen, v, scen.xi_linear());
    CHECK(again.min() >= -1e-6);

    CMatrix hat_sum = CMatrix::Zero(scen.m_antennas, scen.m_antennas);
    CMatrix tilde_sum = hat_sum;
    for (int k = 0; k < scen.k_users; ++k) {
      const CVector h = effective_channel(chan, v, k);
      const CVector wk = r.w0.col(scen.m_antennas + k);
      const double hat = std::norm(h.dot(wk));
      const double tilde = h.dot(r.r_k_tilde[k] * h).real();
      CHECK(rel_err(hat, tilde) <= 1e-10);
      hat_sum += wk * wk.adjoint();
      tilde_sum += r.r_k_tilde[k];
    }
    CHECK(min_eig(CMatrix(r.r_tilde - hat_sum)) >= -1e-8);
    // R - sum R_hat_k inherits semidefiniteness from R - sum R_tilde_k
    CHECK(min_eig(CMatrix(r.r_tilde - tilde_sum)) >= -1e-8);
    CHECK(rel_err_mat(covariance(r.w0), r.r_tilde) < 1e-6);
  }
  CHECK(built == 20);
}

TEST_CASE("rank-one user covariance gives back its generator") {
  Rng rng(4);
  const CVector u = crandn(4, 1, rng), h = crandn(4, 1, rng);
  const CVector w = construct_wc(u * u.adjoint(), h);
  const cplx phase = u.dot(w) / u.squaredNorm();
  CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
  CHECK(rel_err_mat(w, CVector(u * phase)) < 1e-12);
  CHECK(rel_err(std::norm(h.dot(w)), std::norm(h.dot(u))) < 1e-12);
  CHECK_THROWS_AS(construct_wc(CMatrix::Zero(4, 4), h), DegenerateError);
}

TEST_CASE("radar part of the construction") {
  Rng rng(6);
  const CMatrix r = testing::random_hermitian_psd(4, 4, rng);
  const CMatrix wr = construct_wr(r, {});
  CHECK(wr.cols() == 4);
  CHECK(rel_err_mat(CMatrix(wr * wr.adjoint()), r) < 1e-12);

  const CVector big = 10.0 * crandn(4, 1, rng);
  CHECK_THROWS_AS(construct_wr(r, {big}), NotPsdError);
}

TEST_CASE("tiny threshold and a loose RIS budget") {
  Scenario scen;
  scen.xi_db = -300.0;
  scen.p_ris_w = 1e6;
  Rng rng(3);
  const ChannelSet chan = draw_channels(scen, rng);
  const CVector v = initial_ris(scen, chan, rng);
  const FeasibilityResult r = solve_feasibility(chan, scen, v, scen.xi_db);
  CHECK(r.slacks.min() >= -1e-6);
  CHECK(r.w0.squaredNorm() <= scen.p_bs_w * (1.0 + 1e-6));
}

TEST_CASE("tightened start") {
  Scenario scen;
  Rng rng(5);
  const ChannelSet chan = draw_channels(scen, rng);
  const CVector v = initial_ris(scen, chan, rng);

  const FeasibilityResult t = tightened_init(chan, scen, v, scen.xi2_db);
  CHECK_FALSE(t.used_fallback);
  for (int k = 0; k < scen.k_users; ++k) {
    CHECK(user_sinr({t.w0, v}, chan, scen, k) >= scen.xi_linear() * (1.0 - 1e-6));
  }

  const FeasibilityResult same = tightened_init(chan, scen, v, scen.xi_db);
  const FeasibilityResult plain = solve_feasibility(chan, scen, v, scen.xi_db);
  CHECK(rel_err_mat(same.r_tilde, plain.r_tilde) < 1e-12);

  const FeasibilityResult fb = tightened_init(chan, scen, v, 120.0);
  CHECK(fb.used_fallback);
  CHECK_FALSE(fb.warnings.empty());
  CHECK(fb.slacks.min() >= -1e-6);
}

TEST_CASE("unreachable threshold names a constraint family") {
  Scenario scen;
  scen.xi_db = 120.0;
  Rng rng(8);
  const ChannelSet chan = draw_channels(scen, rng);
  const CVector v = initial_ris(scen, chan, rng);
  try {
    solve_feasibility(chan, scen, v, scen.xi_db);
    FAIL("expected infeasibility");
  } catch (const FeasibilityError& e) {
    CHECK_FALSE(e.families().empty());
  }
}

TEST_CASE("zero-forcing beamformer identities") {
  Rng rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const Scenario scen = random_scenario(rng);
    const ChannelSet chan = draw_channels(scen, rng);
    const Lemma2Report rep = check_lemma2(chan, scen, 2.0);
    REQUIRE(rep.rank_ok);
    const CMatrix hw = rep.h_tilde.adjoint() * rep.w_star;
    for (int k = 0; k < scen.k_users; ++k) {
      CHECK(rel_err(std::norm(hw(k, k)), scen.xi_linear() * rep.d_tilde(k)) < 1e-10);
      for (int j = 0; j < scen.k_users; ++j) {
        if (j != k) CHECK(std::abs(hw(j, k)) <= 1e-10 * std::abs(hw(k, k)));
      }
    }
  }
}

TEST_CASE("more users than antennas fails the rank condition") {
  Scenario scen = testing::small_scenario(2, 6, 3);
  scen.ue_pos = {{10.0, 5.0}, {10.0, 50.0}, {20.0, 30.0}};
  Rng rng(1);
  const ChannelSet chan = draw_channels(scen, rng);
  const Lemma2Report rep = check_lemma2(chan, scen, 1.0);
  CHECK_FALSE(rep.rank_ok);
  CHECK_FALSE(rep.feasible());
}

TEST_CASE("rho outside the gain range fails condition three") {
  Scenario scen;
  Rng rng(2);
  const ChannelSet chan = draw_channels(scen, rng);
  CHECK_FALSE(check_lemma2(chan, scen, 0.5).rho_range_ok);
  CHECK_FALSE(check_lemma2(chan, scen, 101.0).rho_range_ok);
  CHECK(check_lemma2(chan, scen, 100.0).rho_range_ok);
}

TEST_CASE("closed-form check is sound") {
  Rng rng(2025);
  std::uniform_real_distribution<double> xi(0.0, 25.0), pris(1e-4, 0.05);
  int certified = 0, counterexamples = 0;
  for (int trial = 0; trial < 50; ++trial) {
    Scenario scen = random_scenario(rng);
    scen.xi_db = xi(rng);
    scen.p_ris_w = pris(rng);
    const ChannelSet chan = draw_channels(scen, rng);
    const Lemma2Report rep = find_lemma2_rho(chan, scen);
    if (!rep.feasible()) continue;
    ++certified;
    try {
      solve_feasibility(chan, scen, CVector::Constant(scen.n_ris, cplx(rep.rho, 0.0)), scen.xi_db);
    } catch (const FeasibilityError&) {
      ++counterexamples;
    }
  }
  CHECK(counterexamples == 0);
  CHECK(certified >= 10);
}

TEST_CASE("zero columns are replaced by tiny directions") {
  Rng rng(9);
  CMatrix w = CMatrix::Identity(3, 4);
  perturb_zero_columns(w, rng);
  CHECK(w.col(3).norm() > 0.0);
  CHECK(w.col(3).norm() < 1e-8);
  CHECK(w.col(0) == CMatrix::Identity(3, 4).col(0));
}
