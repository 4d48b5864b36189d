#pragma once

#include <cmath>

#include "arisac/channel.hpp"

namespace testing {

using namespace arisac;

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

template <typename A, typename B>
double rel_err_mat(const A& a, const B& b) {
  const double s = std::max(a.norm(), b.norm());
  return s == 0.0 ? 0.0 : (a - b).norm() / s;
}

inline CMatrix random_hermitian_psd(Index n, Index rank, Rng& rng) {
  const CMatrix f = crandn(n, rank, rng);
  return f * f.adjoint();
}

/// Small instance: M antennas, N elements, K users, deterministic geometry.
inline Scenario small_scenario(int m, int n, int k) {
  Scenario s;
  s.m_antennas = m;
  s.n_ris = n;
  s.k_users = k;
  s.ue_pos.resize(static_cast<std::size_t>(k));
  return s;
}

}  // namespace testing
