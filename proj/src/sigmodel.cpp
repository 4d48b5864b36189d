#include "arisac/sigmodel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace arisac {

NoiseLevels noise_levels(const Scenario& scen) {
  return {scen.sigma_ris2(), scen.sigma_r2(), scen.sigma_z2()};
}

CMatrix phi_matrix(const CVector& v) { return v.asDiagonal(); }

CMatrix covariance(const CMatrix& w) { return w * w.adjoint(); }

EchoMatrices echo_matrices(const ChannelSet& chan, const CVector& v, double eta,
                           const NoiseLevels& noise) {
  const Index n = chan.g.rows();
  if (v.size() != n || chan.a.rows() != n) throw DimensionError("echo_matrices: RIS size mismatch");
  EchoMatrices em;
  // Phi^H A Phi = A o (conj(v) v^T)
  const CMatrix apa = chan.a.cwiseProduct(v.conjugate() * v.transpose());
  const CMatrix gh = chan.g.adjoint();
  em.c = gh * apa;
  em.b = em.c * chan.g;
  const CMatrix pg = v.asDiagonal() * chan.g;  // Phi G
  em.d = noise.sigma2 * (em.c * em.c.adjoint() + pg.adjoint() * pg);
  em.d.diagonal().array() += noise.sigma_r2;
  em.e = eta * (gh * pg);
  return em;
}

double radar_sinr(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen) {
  const EchoMatrices em = echo_matrices(chan, st.v, scen.eta, noise_levels(scen));
  const CMatrix j = em.j(covariance(st.w));
  const CMatrix x = em.b * st.w;
  if (max_abs(x) == 0.0) return 0.0;
  const CMatrix y = hermitian_solve(j, x);
  return std::max(0.0, (x.adjoint() * y).trace().real());
}

CVector effective_channel(const ChannelSet& chan, const CVector& v, int k) {
  // h^H = h1^H Phi G + h2^H  =>  h = G^H Phi^H h1 + h2
  return chan.g.adjoint() * (v.conjugate().cwiseProduct(chan.h1.at(k))) + chan.h2.at(k);
}

double user_noise(const ChannelSet& chan, const CVector& v, const NoiseLevels& noise, int k) {
  return noise.sigma2 * v.cwiseProduct(chan.h1.at(k).conjugate()).squaredNorm() + noise.sigma_z2;
}

double user_sinr(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen, int k) {
  const Index m = st.w.rows();
  if (k < 0 || k >= static_cast<int>(chan.h1.size()) || m + k >= st.w.cols()) {
    throw DimensionError("user_sinr: user index out of range");
  }
  const CVector h = effective_channel(chan, st.v, k);
  const RVector gains = (h.adjoint() * st.w).cwiseAbs2().transpose();
  const double desired = gains(m + k);
  const double interference = gains.sum() - desired;
  return desired / (interference + user_noise(chan, st.v, noise_levels(scen), k));
}

double ris_tx_power(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen) {
  const double s2 = noise_levels(scen).sigma2;
  const CMatrix apa = chan.a.cwiseProduct(st.v.conjugate() * st.v.transpose());
  const CMatrix pgw = st.v.asDiagonal() * chan.g * st.w;
  return (apa * chan.g * st.w).squaredNorm() + s2 * apa.squaredNorm() + pgw.squaredNorm() +
         2.0 * s2 * st.v.squaredNorm();
}

RVector beampattern(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                    const std::vector<double>& theta_grid) {
  if (theta_grid.empty()) throw DimensionError("beampattern: empty angle grid");
  const CMatrix pgw = st.v.asDiagonal() * chan.g * st.w;
  RVector p(static_cast<Index>(theta_grid.size()));
  for (std::size_t i = 0; i < theta_grid.size(); ++i) {
    const CVector a3 = steering(chan.g.rows(), scen.element_spacing, theta_grid[i]);
    p(static_cast<Index>(i)) = (a3.adjoint() * pgw).squaredNorm();
  }
  return p;
}

double peak_sidelobe_ratio(const RVector& pattern) {
  const Index n = pattern.size();
  if (n == 0) return 0.0;
  Index peak;
  const double top = pattern.maxCoeff(&peak);
  if (!(top > 0.0)) return 0.0;
  Index lo = peak, hi = peak;
  while (lo > 0 && pattern(lo - 1) <= pattern(lo)) --lo;
  while (hi + 1 < n && pattern(hi + 1) <= pattern(hi)) ++hi;
  double side = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (i < lo || i > hi) side = std::max(side, pattern(i));
  }
  return side / top;
}

MetricReport evaluate(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                      double rel_tol) {
  MetricReport r;
  r.radar_sinr = radar_sinr(st, chan, scen);
  r.bs_power = st.w.squaredNorm();
  r.ris_power = ris_tx_power(st, chan, scen);
  r.bs_power_slack = (scen.p_bs_w - r.bs_power) / scen.p_bs_w;
  r.ris_power_slack = scen.ris_power_constraint ? (scen.p_ris_w - r.ris_power) / scen.p_ris_w : 1.0;
  const double a = scen.a_ris_linear();
  const double gmax = st.v.size() ? st.v.cwiseAbs2().maxCoeff() : 0.0;
  if (std::isinf(a)) {
    r.gain_slack = 1.0;
  } else if (a > 0.0) {
    r.gain_slack = (a - gmax) / a;
  } else {
    r.gain_slack = -gmax;
  }
  bool ok = r.bs_power_slack >= -rel_tol && r.ris_power_slack >= -rel_tol &&
            r.gain_slack >= -rel_tol;
  const double xi = scen.xi_linear();
  for (int k = 0; k < static_cast<int>(chan.h1.size()); ++k) {
    const double s = user_sinr(st, chan, scen, k);
    r.user_sinr.push_back(s);
    r.qos_slack.push_back((s - xi) / xi);
    ok = ok && r.qos_slack.back() >= -rel_tol;
  }
  r.feasible = ok;
  return r;
}

// ---------------------------------------------------------------------------

namespace {

constexpr long kBatch = 4096;

CMatrix noise_block(Index rows, Index cols, double power, Rng& rng) {
  if (power == 0.0) return CMatrix::Zero(rows, cols);
  return std::sqrt(power) * crandn(rows, cols, rng);
}

}  // namespace

double mc_radar_sinr_oracle(const BeamformerState& st, const ChannelSet& chan,
                            const Scenario& scen, long samples, Rng& rng) {
  const NoiseLevels noise = noise_levels(scen);
  const EchoMatrices em = echo_matrices(chan, st.v, scen.eta, noise);
  const Index m = st.w.rows(), l = st.w.cols(), n = chan.g.rows();
  const CMatrix ghph = chan.g.adjoint() * st.v.conjugate().asDiagonal();  // G^H Phi^H
  CMatrix s_acc = CMatrix::Zero(m, m), j_acc = CMatrix::Zero(m, m);
  for (long done = 0; done < samples; done += kBatch) {
    const Index t = static_cast<Index>(std::min(kBatch, samples - done));
    const CMatrix x = st.w * crandn(l, t, rng);
    const CMatrix v1 = noise_block(n, t, noise.sigma2, rng);
    const CMatrix v2 = noise_block(n, t, noise.sigma2, rng);
    const CMatrix zr = noise_block(m, t, noise.sigma_r2, rng);
    const CMatrix sig = em.b * x;
    const CMatrix interf = em.c * v1 + ghph * v2 + em.e * x + zr;
    s_acc.noalias() += sig * sig.adjoint();
    j_acc.noalias() += interf * interf.adjoint();
  }
  if (max_abs(s_acc) == 0.0) return 0.0;
  const CMatrix jh = 0.5 * (j_acc + j_acc.adjoint());
  const CMatrix sh = 0.5 * (s_acc + s_acc.adjoint());
  return (hermitian_solve(jh, sh)).trace().real();
}

double mc_user_sinr_oracle(const BeamformerState& st, const ChannelSet& chan, const Scenario& scen,
                           int k, long samples, Rng& rng) {
  const NoiseLevels noise = noise_levels(scen);
  const Index m = st.w.rows(), l = st.w.cols(), n = chan.g.rows();
  const CVector h = effective_channel(chan, st.v, k);
  const CVector h1p = st.v.cwiseProduct(chan.h1.at(k).conjugate());  // (h1^H Phi)^T
  double desired = 0.0, total = 0.0;
  for (long done = 0; done < samples; done += kBatch) {
    const Index t = static_cast<Index>(std::min(kBatch, samples - done));
    const CMatrix xh = crandn(l, t, rng);
    const CMatrix v1 = noise_block(n, t, noise.sigma2, rng);
    const CMatrix z = noise_block(1, t, noise.sigma_z2, rng);
    const CMatrix y = h.adjoint() * st.w * xh + h1p.transpose() * v1 + z;
    const cplx gain = (h.adjoint() * st.w.col(m + k))(0);
    const CMatrix d = gain * xh.row(m + k);
    desired += d.squaredNorm();
    total += y.squaredNorm();
  }
  return desired / (total - desired);
}

double mc_ris_power_oracle(const BeamformerState& st, const ChannelSet& chan,
                           const Scenario& scen, long samples, Rng& rng) {
  const NoiseLevels noise = noise_levels(scen);
  const Index l = st.w.cols(), n = chan.g.rows();
  const CMatrix phi = phi_matrix(st.v);
  const CMatrix apa = phi.adjoint() * chan.a * phi;
  double acc = 0.0;
  for (long done = 0; done < samples; done += kBatch) {
    const Index t = static_cast<Index>(std::min(kBatch, samples - done));
    const CMatrix x = st.w * crandn(l, t, rng);
    const CMatrix v1 = noise_block(n, t, noise.sigma2, rng);
    const CMatrix v2 = noise_block(n, t, noise.sigma2, rng);
    const CMatrix y1 = phi * chan.g * x + phi * v1;
    const CMatrix y2 = apa * chan.g * x + apa * v1 + phi.adjoint() * v2;
    acc += y1.squaredNorm() + y2.squaredNorm();
  }
  return acc / static_cast<double>(samples);
}

}  // namespace arisac
