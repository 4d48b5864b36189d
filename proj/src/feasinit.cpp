#include "arisac/feasinit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "arisac/txbf.hpp"

namespace arisac {

double FeasibilitySlacks::min() const {
  double s = std::min({bs_power, ris_power, psd});
  for (double q : qos) s = std::min(s, q);
  return s;
}

CVector construct_wc(const CMatrix& r_k, const CVector& h) {
  const CVector rh = r_k * h;
  const double p = h.dot(rh).real();
  if (!(p > 0.0)) throw DegenerateError("construct_wc: user receives no power from R_k");
  return rh / std::sqrt(p);
}

CMatrix construct_wr(const CMatrix& r_tilde, const std::vector<CVector>& w_c) {
  CMatrix rest = r_tilde;
  for (const auto& w : w_c) rest -= w * w.adjoint();
  rest = 0.5 * (rest + rest.adjoint()).eval();
  const Index m = rest.rows();
  const double scale = std::max(hermitian_norm(r_tilde), 1e-300);
  const auto eig = eig_hermitian(rest);
  if (m > 0 && eig.values(0) < -1e-8 * scale) {
    std::ostringstream msg;
    msg << "construct_wr: R - sum R_k has eigenvalue " << eig.values(0) << " (||R|| = " << scale
        << ")";
    throw NotPsdError(msg.str());
  }
  // eigen-factor rather than Cholesky: the difference is often singular
  return eig.vectors * eig.values.cwiseMax(0.0).cwiseSqrt().cast<cplx>().asDiagonal();
}

FeasibilitySlacks feasibility_slacks(const CMatrix& w, const ChannelSet& chan,
                                     const Scenario& scen, const CVector& v, double xi) {
  FeasibilitySlacks s;
  const Index m = w.rows();
  const int k_users = static_cast<int>(w.cols() - m);
  const NoiseLevels noise = noise_levels(scen);
  for (int k = 0; k < k_users; ++k) {
    const CVector h = effective_channel(chan, v, k);
    const double d = user_noise(chan, v, noise, k);
    const double own = std::norm(h.dot(w.col(m + k)));
    const double rest = std::max((h.adjoint() * w).squaredNorm() - own, 0.0) + d;
    s.qos.push_back(own / (xi * rest) - 1.0);
  }
  const double bs = w.squaredNorm();
  s.bs_power = (scen.p_bs_w - bs) / scen.p_bs_w;
  s.ris_power = scen.ris_power_constraint
                    ? (scen.p_ris_w - ris_tx_power({w, v}, chan, scen)) / scen.p_ris_w
                    : 1.0;
  const CMatrix r = covariance(w);
  CMatrix rest = r;
  for (int k = 0; k < k_users; ++k) rest -= w.col(m + k) * w.col(m + k).adjoint();
  const double rn = hermitian_norm(r);
  s.psd = rn > 0.0 ? min_eig(rest) / rn : 0.0;
  return s;
}

FeasibilityResult solve_feasibility(const ChannelSet& chan, const Scenario& scen,
                                    const CVector& v, double xi_db) {
  const Index m = chan.g.cols();
  const int k_users = static_cast<int>(chan.h1.size());
  const double xi = db_to_linear(xi_db);
  const NoiseLevels noise = noise_levels(scen);

  conic::SdpProblem p;
  // R = Q + sum_k R_k with Q, R_k PSD
  std::vector<conic::BlockId> ids;
  ids.push_back(p.add_hermitian_psd(m));
  for (int k = 0; k < k_users; ++k) ids.push_back(p.add_hermitian_psd(m));
  auto total_form = [&](const CMatrix& c) {
    conic::LinearForm f = p.zero_form();
    for (auto id : ids) f += p.trace_form(id, c);
    return f;
  };
  p.set_objective(p.zero_form());

  for (int k = 0; k < k_users; ++k) {
    const CVector h = effective_channel(chan, v, k);
    if (h.norm() < 1e-12) {
      throw FeasibilityError("solve_feasibility: effective channel of user " + std::to_string(k) +
                                 " vanishes",
                             {{"qos-user-" + std::to_string(k), 1.0}});
    }
    // own / xi - everything else >= d; the own block is kept out of the
    // interference sum so that large xi does not cancel it
    const CMatrix hh = h * h.adjoint();
    conic::LinearForm f = p.zero_form();
    for (std::size_t b = 0; b < ids.size(); ++b) {
      conic::LinearForm t = p.trace_form(ids[b], hh);
      t *= b == static_cast<std::size_t>(k) + 1 ? 1.0 / xi : -1.0;
      f += t;
    }
    p.add_constraint(f, conic::Relation::GreaterEqual, user_noise(chan, v, noise, k),
                     "qos-user-" + std::to_string(k));
  }
  p.add_constraint(total_form(CMatrix::Identity(m, m)), conic::Relation::LessEqual, scen.p_bs_w,
                   "bs-power");
  if (scen.ris_power_constraint) {
    const double e = ris_power_headroom(chan, v, scen);
    if (!(e > 0.0)) {
      throw FeasibilityError("solve_feasibility: RIS noise alone exhausts the RIS power budget",
                             {{"ris-power", 1.0}});
    }
    const CMatrix apag = chan.a.cwiseProduct(v.conjugate() * v.transpose()) * chan.g;
    const CMatrix pg = v.asDiagonal() * chan.g;
    const CMatrix q = apag.adjoint() * apag + pg.adjoint() * pg;
    p.add_constraint(total_form(q), conic::Relation::LessEqual, e, "ris-power");
  }

  const conic::SdpSolution sol = conic::solve(p);
  if (sol.status == conic::SdpStatus::Infeasible) {
    std::string names;
    for (const auto& f : sol.certificate_families) names += (names.empty() ? "" : ", ") + f.first;
    throw FeasibilityError("solve_feasibility: infeasible at xi = " + std::to_string(xi_db) +
                               " dB; binding: " + names,
                           sol.certificate_families);
  }

  FeasibilityResult out;
  out.status = sol.status;
  out.kkt = conic::kkt_report(p, sol);
  out.xi_db = xi_db;
  // block values are PSD only up to the solver's primal residual
  auto psd_part = [](const CMatrix& x) {
    const CMatrix f = psd_factor(x);
    return CMatrix(f * f.adjoint());
  };
  out.r_tilde = psd_part(sol.blocks[ids[0]]);
  for (int k = 0; k < k_users; ++k) {
    const CMatrix rk = psd_part(sol.blocks[ids[static_cast<std::size_t>(k) + 1]]);
    out.r_k_tilde.push_back(rk);
    out.r_tilde += rk;
  }

  std::vector<CVector> wc;
  for (int k = 0; k < k_users; ++k) {
    const CVector h = effective_channel(chan, v, k);
    wc.push_back(construct_wc(out.r_k_tilde[static_cast<std::size_t>(k)], h));
  }
  out.w0 = CMatrix::Zero(m, m + k_users);
  out.w0.leftCols(m) = construct_wr(out.r_tilde, wc);
  for (int k = 0; k < k_users; ++k) out.w0.col(m + k) = wc[static_cast<std::size_t>(k)];

  out.slacks = feasibility_slacks(out.w0, chan, scen, v, xi);
  if (out.slacks.min() < -1e-6) {
    // no certificate: name the violated families of the constructed point
    auto families = sol.certificate_families;
    if (families.empty()) {
      for (int k = 0; k < k_users; ++k) {
        const double q = out.slacks.qos[static_cast<std::size_t>(k)];
        if (q < -1e-6) families.emplace_back("qos-user-" + std::to_string(k), -q);
      }
      if (out.slacks.bs_power < -1e-6) families.emplace_back("bs-power", -out.slacks.bs_power);
      if (out.slacks.ris_power < -1e-6) families.emplace_back("ris-power", -out.slacks.ris_power);
      std::sort(families.begin(), families.end(),
                [](const auto& a, const auto& b) { return a.second > b.second; });
    }
    std::string names;
    for (const auto& f : families) names += (names.empty() ? "" : ", ") + f.first;
    throw FeasibilityError("solve_feasibility: solver stopped (" + conic::to_string(sol.status) +
                               ") without a feasible point; violated: " + names,
                           families);
  }
  return out;
}

FeasibilityResult tightened_init(const ChannelSet& chan, const Scenario& scen, const CVector& v,
                                 double xi2_db) {
  try {
    FeasibilityResult r = solve_feasibility(chan, scen, v, xi2_db);
    // the tighter threshold implies the nominal one; report slacks at xi
    r.slacks = feasibility_slacks(r.w0, chan, scen, v, scen.xi_linear());
    return r;
  } catch (const FeasibilityError& e) {
    FeasibilityResult r = solve_feasibility(chan, scen, v, scen.xi_db);
    r.used_fallback = true;
    r.warnings.push_back(std::string("tightened threshold infeasible, fell back: ") + e.what());
    return r;
  }
}

void perturb_zero_columns(CMatrix& w, Rng& rng, double scale) {
  const double ref = std::max(w.norm(), 1.0);
  for (Index j = 0; j < w.cols(); ++j) {
    if (w.col(j).norm() <= 1e-14 * ref) {
      CVector d = crandn(w.rows(), 1, rng);
      w.col(j) = scale * ref * d / d.norm();
    }
  }
}

Lemma2Report check_lemma2(const ChannelSet& chan, const Scenario& scen, double rho) {
  Lemma2Report rep;
  rep.rho = rho;
  const Index m = chan.g.cols(), n = chan.g.rows();
  const int k_users = static_cast<int>(chan.h1.size());
  const CVector v = CVector::Constant(n, cplx(rho, 0.0));
  const NoiseLevels noise = noise_levels(scen);
  const double xi = scen.xi_linear();

  rep.h_tilde = CMatrix(m, k_users);
  rep.d_tilde = RVector(k_users);
  for (int k = 0; k < k_users; ++k) {
    rep.h_tilde.col(k) = effective_channel(chan, v, k);
    rep.d_tilde(k) = user_noise(chan, v, noise, k);
  }

  const double a = scen.a_ris_linear();
  rep.rho_range_ok = rho >= 1.0 - 1e-12 && rho * rho <= a * (1.0 + 1e-12);

  rep.rank_ok = k_users <= m;
  if (rep.rank_ok && k_users > 0) {
    Eigen::JacobiSVD<CMatrix> svd(rep.h_tilde);
    const RVector sv = svd.singularValues();
    rep.rank_ok = sv(k_users - 1) > 1e-10 * sv(0);
  }
  if (!rep.rank_ok) {
    rep.bs_margin = -std::numeric_limits<double>::infinity();
    rep.ris_margin = -std::numeric_limits<double>::infinity();
    return rep;
  }

  CMatrix gram_inv = CMatrix::Zero(0, 0);
  if (k_users > 0) {
    const CMatrix gram = rep.h_tilde.adjoint() * rep.h_tilde;
    gram_inv = gram.ldlt().solve(CMatrix::Identity(k_users, k_users));
    rep.w_star = std::sqrt(xi) * rep.h_tilde * gram_inv *
                 rep.d_tilde.cwiseSqrt().cast<cplx>().asDiagonal();
  } else {
    rep.w_star = CMatrix::Zero(m, 0);
  }
  const double needed =
      k_users > 0 ? xi * (rep.d_tilde.cast<cplx>().asDiagonal() * gram_inv).trace().real() : 0.0;
  rep.bs_margin = 1.0 - needed / scen.p_bs_w;
  rep.qos_power_ok = needed <= scen.p_bs_w;

  if (scen.ris_power_constraint) {
    CMatrix w = CMatrix::Zero(m, m + k_users);
    w.rightCols(k_users) = rep.w_star;
    const double p_ris = ris_tx_power({w, v}, chan, scen);
    rep.ris_margin = 1.0 - p_ris / scen.p_ris_w;
    rep.ris_power_ok = p_ris <= scen.p_ris_w;
  } else {
    rep.ris_margin = 1.0;
    rep.ris_power_ok = true;
  }
  return rep;
}

Lemma2Report find_lemma2_rho(const ChannelSet& chan, const Scenario& scen) {
  const double a = scen.a_ris_linear();
  const double hi = std::min(std::sqrt(a), 1e4);
  auto score = [&](double rho) {
    const Lemma2Report r = check_lemma2(chan, scen, rho);
    return std::min(r.bs_margin, r.ris_margin);
  };
  if (!(hi > 1.0)) return check_lemma2(chan, scen, 1.0);

  // coarse log-spaced scan, then golden-section refinement around the best point
  constexpr int kScan = 41;
  const double lhi = std::log(hi);
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < kScan; ++i) {
    const double s = score(std::exp(lhi * i / (kScan - 1)));
    if (s > best_score) {
      best_score = s;
      best = i;
    }
  }
  double lo_l = lhi * std::max(0, best - 1) / (kScan - 1);
  double hi_l = lhi * std::min(kScan - 1, best + 1) / (kScan - 1);
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = hi_l - gr * (hi_l - lo_l), d = lo_l + gr * (hi_l - lo_l);
  double fc = score(std::exp(c)), fd = score(std::exp(d));
  for (int it = 0; it < 60 && hi_l - lo_l > 1e-10; ++it) {
    if (fc >= fd) {
      hi_l = d;
      d = c;
      fd = fc;
      c = hi_l - gr * (hi_l - lo_l);
      fc = score(std::exp(c));
    } else {
      lo_l = c;
      c = d;
      fc = fd;
      d = lo_l + gr * (hi_l - lo_l);
      fd = score(std::exp(d));
    }
  }
  const double cand = std::exp(0.5 * (lo_l + hi_l));
  const double grid = std::exp(lhi * best / (kScan - 1));
  return check_lemma2(chan, scen, score(cand) >= best_score ? cand : grid);
}

}  // namespace arisac
