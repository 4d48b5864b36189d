#pragma once

// BS beamforming step: minorize-maximize surrogate of the radar SINR around
// the current W, convexified user constraints, and the resulting conic
// subproblem with the RIS coefficients held fixed.

#include <string>
#include <vector>

#include "arisac/conic.hpp"
#include "arisac/sigmodel.hpp"

namespace arisac {

/// Quantities frozen at the expansion point (W_i, v_i).
struct SurrogateContext {
  CMatrix w_i;
  CVector v_i;
  CMatrix x_i;      // B W_i
  CMatrix j_i;      // J(W_i W_i^H)
  CMatrix j_i_inv;
  CMatrix t_i;      // J_i^-1 X_i X_i^H J_i^-1
  CMatrix l_i;      // J_i^-1 X_i, so T_i = L_i L_i^H
  EchoMatrices echo;
  NoiseLevels noise;
  double eta = 0.0;
  double sinr_i = 0.0;
};

/// Throws ConditioningError when J is not numerically positive definite.
SurrogateContext build_context(const BeamformerState& st, const ChannelSet& chan,
                               const Scenario& scen);

/// 2 Re Tr(X_i^H J_i^-1 B W) - Tr(T_i J(W W^H)); equals the radar SINR at W_i
/// and lies below it everywhere else.
double surrogate_value(const SurrogateContext& ctx, const CMatrix& w);

/// Convexified user constraint  lhs(W) >= rhs(W)  built at W_i.
struct QosLinearization {
  int k = 0;
  Index col = 0;  // column of W carrying user k's stream
  CVector h;      // effective channel
  cplx g;         // h^H w_{col,i}
  double d = 0.0; // noise at the user
  double xi = 0.0;

  /// (1 + 1/xi)(2 Re(conj(g) h^H w_col) - |g|^2)
  double lhs(const CMatrix& w) const;
  /// (1 + 1/xi)|h^H w_col|^2, the term lhs() underestimates
  double exact_lhs(const CMatrix& w) const;
  /// ||h^H W||^2 + d
  double rhs(const CMatrix& w) const;
};

/// Throws InfeasibleError when the effective channel vanishes and
/// DegenerateError when the expansion column gives zero received power.
QosLinearization qos_linearize(const BeamformerState& st, const ChannelSet& chan,
                               const Scenario& scen, int k);

/// P_RIS - 2 sigma^2 Tr(Phi Phi^H) - sigma^2 Tr(Phi^H A Phi Phi^H A^H Phi):
/// what is left of the RIS budget for the W-dependent terms.
double ris_power_headroom(const ChannelSet& chan, const CVector& v, const Scenario& scen);

struct WStepResult {
  CMatrix w;
  double surrogate_in = 0.0;
  double surrogate_out = 0.0;
  conic::SdpStatus status = conic::SdpStatus::NumericalLimit;
  int solver_iterations = 0;
  conic::KktReport kkt;
  bool accepted = false;  // false: solver output rejected, w == W_i
};

struct WStepOptions {
  conic::SolverOptions solver;
  bool qos = true;  // impose the user constraints
};

/// One surrogate maximization. The returned W never has a lower surrogate
/// value than W_i: a solver point that does not improve is discarded.
/// Throws InfeasibleError (RIS budget exhausted, or the solver certifies
/// infeasibility; the message names the dominant constraint family).
WStepResult solve_w_subproblem(const SurrogateContext& ctx, const BeamformerState& st,
                               const ChannelSet& chan, const Scenario& scen,
                               const WStepOptions& opt = {});

struct WLoopResult {
  CMatrix w;
  int iterations = 0;
  std::vector<double> radar_sinr;  // after each accepted step, starting with the input
  std::vector<conic::KktReport> kkt;
};

/// Repeated surrogate steps until the relative SINR change drops below rel_tol
/// or max_iter steps were taken.
WLoopResult optimize_w(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                       int max_iter, double rel_tol = 1e-5, const WStepOptions& opt = {});

}  // namespace arisac
