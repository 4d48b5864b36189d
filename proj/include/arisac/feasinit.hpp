#pragma once

// Starting point for the alternating design: a covariance-domain feasibility
// problem with the RIS fixed, its rank-one reconstruction, and a closed-form
// sufficient feasibility test based on zero-forcing with Phi = rho I.

#include <string>
#include <utility>
#include <vector>

#include "arisac/conic.hpp"
#include "arisac/sigmodel.hpp"

namespace arisac {

/// Infeasibility with the constraint families that carry the certificate.
class FeasibilityError : public InfeasibleError {
 public:
  FeasibilityError(const std::string& what, std::vector<std::pair<std::string, double>> families)
      : InfeasibleError(what), families_(std::move(families)) {}
  const std::vector<std::pair<std::string, double>>& families() const { return families_; }

 private:
  std::vector<std::pair<std::string, double>> families_;
};

struct FeasibilitySlacks {
  std::vector<double> qos;  // SINR / xi - 1
  double bs_power = 0.0;    // relative to P_BS
  double ris_power = 0.0;   // relative to P_RIS (1 when not constrained)
  double psd = 0.0;         // min eig of R - sum R_k relative to ||R||
  double min() const;
};

struct FeasibilityResult {
  CMatrix r_tilde;
  std::vector<CMatrix> r_k_tilde;
  CMatrix w0;  // [W_r  w_c1 ... w_cK]
  FeasibilitySlacks slacks;  // of the constructed W0, at xi_db
  double xi_db = 0.0;
  bool used_fallback = false;
  std::vector<std::string> warnings;
  conic::SdpStatus status = conic::SdpStatus::NumericalLimit;
  conic::KktReport kkt;
};

/// Relaxed covariance problem at threshold xi_db with Phi = Diag(v), followed
/// by the rank-one construction of W0. Throws FeasibilityError.
FeasibilityResult solve_feasibility(const ChannelSet& chan, const Scenario& scen,
                                    const CVector& v, double xi_db);

/// R_k h / sqrt(h^H R_k h); throws DegenerateError for zero received power.
CVector construct_wc(const CMatrix& r_k, const CVector& h);

/// W_r with W_r W_r^H = R - sum_k w_k w_k^H (M columns). Throws NotPsdError
/// when the difference has an eigenvalue below -1e-8 ||R||.
CMatrix construct_wr(const CMatrix& r_tilde, const std::vector<CVector>& w_c);

/// Slacks of W against the covariance-problem constraints at threshold xi.
FeasibilitySlacks feasibility_slacks(const CMatrix& w, const ChannelSet& chan,
                                     const Scenario& scen, const CVector& v, double xi);

/// solve_feasibility at xi2_db; on infeasibility falls back to scen.xi_db and
/// records a warning.
FeasibilityResult tightened_init(const ChannelSet& chan, const Scenario& scen, const CVector& v,
                                 double xi2_db);

/// Replaces (near-)zero columns of W by tiny random directions so that the
/// user-constraint linearization has a nonzero expansion point.
void perturb_zero_columns(CMatrix& w, Rng& rng, double scale = 1e-9);

struct Lemma2Report {
  double rho = 1.0;
  bool rank_ok = false;
  bool qos_power_ok = false;
  bool rho_range_ok = false;
  bool ris_power_ok = false;
  CMatrix w_star;   // M x K zero-forcing beamformer
  CMatrix h_tilde;  // M x K
  RVector d_tilde;
  double bs_margin = 0.0;   // 1 - xi Tr(D (H^H H)^-1) / P_BS
  double ris_margin = 0.0;  // 1 - RIS power / P_RIS
  bool feasible() const { return rank_ok && qos_power_ok && rho_range_ok && ris_power_ok; }
};

/// Evaluates the four sufficient conditions at the given rho.
Lemma2Report check_lemma2(const ChannelSet& chan, const Scenario& scen, double rho);

/// Searches rho in [1, sqrt(a_RIS)] for the largest worst-case margin.
Lemma2Report find_lemma2_rho(const ChannelSet& chan, const Scenario& scen);

}  // namespace arisac
