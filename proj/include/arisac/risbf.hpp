#pragma once

// RIS step: with W fixed, the surrogate and all constraints become linear or
// convex-quadratic in the lifted matrix Vbar = vbar vbar^H, vbar = [u; t],
// where u = conj(v) collects the conjugated reflection coefficients
// (Phi = Diag(v)). The rank constraint is relaxed and a rank-one point is
// recovered by Gaussian randomization.

#include <optional>
#include <stdexcept>
#include <vector>

#include "arisac/conic.hpp"
#include "arisac/txbf.hpp"

namespace arisac {

/// vbar = [conj(v); t] and Vbar = vbar vbar^H. Throws DomainError unless |t| = 1.
CMatrix lift(const CVector& v, cplx t = 1.0);
/// vec of the leading N x N block of Vbar.
CVector vhat(const CMatrix& vbar);

/// Coefficients of the lifted RIS problem built at one (context, W).
struct LiftedProblem {
  Index n = 0, m = 0, l = 0;
  CVector v_i;  // expansion point

  CVector n1;  // 2 Re(vhat^H n1) = 2 Re Tr(B R B_i^H J_i^-1)
  CVector n2;  // Re(n2^H vhat) = eta^2 Tr(T_i G^H Phi G R G^H Phi^H G)
  CMatrix m1;  // ||M1 vhat||^2 = sigma^2 Tr(T_i C C^H)
  CMatrix gtig;  // G T_i G^H; sigma^2 Tr(T_i G^H Vhat G) uses its diagonal
  CMatrix grg;   // G R G^H
  CMatrix m2;  // ||M2 vhat||^2 = ||Phi^H A Phi G W||^2
  CMatrix m3;  // ||M3 vhat||^2 = sigma^2 ||Phi^H A Phi||^2
  std::vector<CMatrix> h_lift;  // H_k, (N+1) x M, h_k^H = vbar^H H_k
  std::vector<CMatrix> r1k;     // H_k R H_k^H
  std::vector<CMatrix> r2k;     // H_k R_k H_k^H
  std::vector<RVector> h1_abs2;  // |h1_k|^2 elementwise

  double sigma2 = 0.0, sigma_r2 = 0.0, sigma_z2 = 0.0;
  double trace_t = 0.0;  // Tr(T_i)
  double xi = 1.0;
  double a_ris = 0.0;
  double p_ris = 0.0;
  bool ris_power_constraint = true;
  bool qos = true;
  double sinr_i = 0.0;  // radar SINR at the expansion point

  // Functionals of a Hermitian (N+1) x (N+1) Vbar.
  double surrogate(const CMatrix& vbar) const;
  double surrogate_linear(const CMatrix& vbar) const;  // all but -||M1 vhat||^2
  double ris_power(const CMatrix& vbar) const;
  double ris_power_linear(const CMatrix& vbar) const;  // Tr(G R G^H Vhat) + 2 sigma^2 Tr(Vhat)
  CVector power_stack(const CMatrix& vbar) const;      // [M2 vhat; M3 vhat]
  /// (1 + 1/xi) Tr(R2k Vbar) - Tr(R1k Vbar) - sigma^2 Tr(Vhat h1 h1^H) - sigma_z^2
  double qos_margin(const CMatrix& vbar, int k) const;
};

CVector build_n1(const SurrogateContext& ctx, const ChannelSet& chan);

struct QuadraticTerms {
  CMatrix m1;
  CVector n2;
  CMatrix gtig;
};
QuadraticTerms build_quadratics(const SurrogateContext& ctx, const ChannelSet& chan,
                                const Scenario& scen);

struct PowerTerms {
  CMatrix m2, m3, grg;
};
PowerTerms build_power_terms(const ChannelSet& chan, const CMatrix& w, const Scenario& scen);

struct CommLift {
  std::vector<CMatrix> h_lift, r1k, r2k;
  std::vector<RVector> h1_abs2;
};
CommLift build_comm_lift(const ChannelSet& chan, const CMatrix& w);

/// Everything needed for the RIS step at the expansion point in ctx.
LiftedProblem build_lifted(const SurrogateContext& ctx, const ChannelSet& chan,
                           const Scenario& scen, bool qos = true);

struct RisSdp {
  conic::SdpProblem problem;
  conic::BlockId vbar = 0;
  double var_scale = 1.0;  // Vbar = D Y D with D = diag(s,..,s,1), Y the block value
  CMatrix value(const conic::SdpSolution& sol) const;
};

/// Relaxed lifted problem. var_scale rescales the RIS rows of Vbar for
/// conditioning; the objective is divided by the expansion-point SINR.
RisSdp assemble_ris_sdp(const LiftedProblem& lp, double var_scale = 1.0);

struct RandomizationResult {
  CVector v;
  double radar_sinr = 0.0;
  int feasible_candidates = 0;
  int best_candidate = -1;  // -1: the fallback `previous` was kept
};

class RandomizationError : public std::runtime_error {
 public:
  RandomizationError(const std::string& what, CVector best_infeasible)
      : std::runtime_error(what), best_(std::move(best_infeasible)) {}
  const CVector& best_infeasible() const { return best_; }

 private:
  CVector best_;
};

/// Draws `samples` candidates from CN(0, Vbar), normalizes the last entry to
/// 1, clips |v_n| to sqrt(a_RIS), scales down to meet the RIS power budget and
/// returns the feasible candidate with the largest exact radar SINR. The
/// principal eigenvector and `previous` (if given) are candidates as well.
/// Throws RandomizationError when no candidate is feasible.
RandomizationResult gaussian_randomize(const CMatrix& vbar, const BeamformerState& st,
                                       const ChannelSet& chan, const Scenario& scen,
                                       int samples, Rng& rng, bool qos = true,
                                       const std::optional<CVector>& previous = std::nullopt);

/// Clip to the gain cap and scale to the RIS power budget (W fixed).
CVector repair_ris_candidate(const CVector& v, const CMatrix& w, const ChannelSet& chan,
                             const Scenario& scen);

struct VStepResult {
  CVector v;
  bool accepted = false;
  double sdr_value = 0.0;  // relaxed optimum (unnormalized surrogate units)
  conic::SdpStatus status = conic::SdpStatus::NumericalLimit;
  conic::KktReport kkt;
  int solver_iterations = 0;
  std::optional<RandomizationResult> randomization;
};

struct VStepOptions {
  conic::SolverOptions solver;
  int samples = 200;
  bool qos = true;
};

/// One RIS step. The returned v is only different from st.v when it does not
/// lower the exact radar SINR and keeps the full state feasible.
VStepResult solve_v_subproblem(const BeamformerState& st, const ChannelSet& chan,
                               const Scenario& scen, Rng& rng, const VStepOptions& opt = {});

struct VLoopResult {
  CVector v;
  int iterations = 0;
  std::vector<double> radar_sinr;
  std::vector<conic::KktReport> kkt;
  int randomization_failures = 0;
};

VLoopResult optimize_v(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                       int max_iter, Rng& rng, double rel_tol = 1e-5,
                       const VStepOptions& opt = {});

}  // namespace arisac
