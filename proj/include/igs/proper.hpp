#pragma once

// Proper Gaussian signaling: SOCP feasibility for a rate profile and bisection over the common rate.

#include <cmath>
#include <optional>

#include "igs/channel.hpp"
#include "igs/common.hpp"
#include "igs/conic/bisect.hpp"
#include "igs/conic/socp.hpp"
#include "igs/signaling.hpp"

namespace igs {

struct ProperOptions {
  double tol = 1e-4;  // bisection tolerance in bits
  conic::SocpOptions socp;
};

struct ProperSolution {
  double r_star = 0.0;
  BeamformerSet beamformers;
  int evaluations = 0;
};

namespace detail {

/// Scale of user k's variables: t_k = scale * t_hat_k with ||t_hat_k|| <= 1.
inline double beam_scale(const PowerBudget& P, Index k) {
  return std::sqrt(P.mode() == PowerMode::SumPower ? P.total() : P.user_cap(k));
}

/// Rows (re, im) of h^T t as linear forms on the stacked real variables (re t, im t) of one user.
inline RMatrix gain_rows(const CVector& h, double scale) {
  const Index M = h.size();
  RMatrix g(2, 2 * M);
  g.block(0, 0, 1, M) = h.real().transpose();
  g.block(0, M, 1, M) = -h.imag().transpose();
  g.block(1, 0, 1, M) = h.imag().transpose();
  g.block(1, M, 1, M) = h.real().transpose();
  return scale * g;
}

/// Makes h_kk t_k real and non-negative and clips tiny power overshoot.
inline void normalize_beams(const ChannelSet& ch, const PowerBudget& P, BeamformerSet& t) {
  const Index K = ch.users();
  for (Index k = 0; k < K; ++k) {
    CVector& v = t.t[static_cast<std::size_t>(k)];
    const Complex g = ch.gain(k, k, v);
    if (std::abs(g) > 0.0) v *= std::conj(g) / std::abs(g);
  }
  if (P.mode() == PowerMode::SumPower) {
    double total = 0.0;
    for (const auto& v : t.t) total += v.squaredNorm();
    if (total > P.total()) {
      const double f = std::sqrt(P.total() / total);
      for (auto& v : t.t) v *= f;
    }
  } else {
    for (Index k = 0; k < K; ++k) {
      CVector& v = t.t[static_cast<std::size_t>(k)];
      if (v.squaredNorm() > P.user_cap(k)) v *= std::sqrt(P.user_cap(k) / v.squaredNorm());
    }
  }
}

inline BeamformerSet zero_beams(Index K, Index M) {
  BeamformerSet t;
  t.t.assign(static_cast<std::size_t>(K), CVector::Zero(M));
  return t;
}

}  // namespace detail

/// Builds the SOCP whose feasibility means every user k reaches alpha_k * r bits.
inline conic::SocpFeasibilityProblem proper_socp(const ChannelSet& ch, const RateProfile& alpha, double r,
                                                 const PowerBudget& P) {
  const Index K = ch.users();
  const Index M = ch.antennas();
  const Index n = 2 * M * K;
  const double sigma = std::sqrt(ch.noise_variance());
  conic::SocpFeasibilityProblem p;
  p.variables = n;
  p.Aeq = RMatrix::Zero(K, n);
  p.beq = RVector::Zero(K);
  for (Index k = 0; k < K; ++k) {
    const double gamma = std::exp2(alpha[k] * r) - 1.0;
    const double sg = std::sqrt(gamma);
    conic::SocConstraint c;
    c.A = RMatrix::Zero(1 + 2 * (K - 1), n);
    c.b = RVector::Zero(1 + 2 * (K - 1));
    c.b(0) = sg * sigma;
    Index row = 1;
    for (Index j = 0; j < K; ++j) {
      if (j == k) continue;
      c.A.block(row, 2 * M * j, 2, 2 * M) = sg * detail::gain_rows(ch.h(k, j), detail::beam_scale(P, j));
      row += 2;
    }
    const RMatrix own = detail::gain_rows(ch.h(k, k), detail::beam_scale(P, k));
    c.c = RVector::Zero(n);
    c.c.segment(2 * M * k, 2 * M) = own.row(0).transpose();
    c.d = 0.0;
    p.cones.push_back(std::move(c));
    p.Aeq.block(k, 2 * M * k, 1, 2 * M) = own.row(1);
  }
  if (P.mode() == PowerMode::SumPower) {
    p.cones.push_back({RMatrix::Identity(n, n), RVector::Zero(n), RVector::Zero(n), 1.0});
  } else {
    for (Index k = 0; k < K; ++k) {
      conic::SocConstraint c;
      c.A = RMatrix::Zero(2 * M, n);
      c.A.block(0, 2 * M * k, 2 * M, 2 * M).setIdentity();
      c.b = RVector::Zero(2 * M);
      c.c = RVector::Zero(n);
      c.d = 1.0;
      p.cones.push_back(std::move(c));
    }
  }
  return p;
}

/// Feasibility of the common rate r along profile alpha; returns beamformers when feasible.
inline std::optional<BeamformerSet> socp_feasible(const ChannelSet& ch, const RateProfile& alpha, double r,
                                                  const PowerBudget& P, const conic::SocpOptions& opt = {}) {
  const Index K = ch.users();
  const Index M = ch.antennas();
  if (alpha.size() != K) throw DimensionMismatch("rate profile length differs from the user count");
  P.check_users(K);
  if (!(r >= 0.0)) throw PreconditionError("socp_feasible: r must be non-negative");
  if (r == 0.0) return detail::zero_beams(K, M);

  const auto out = conic::solve_socp_feasibility(proper_socp(ch, alpha, r, P), opt);
  if (!out.x) return std::nullopt;
  BeamformerSet t = detail::zero_beams(K, M);
  for (Index k = 0; k < K; ++k) {
    const auto seg = out.x->segment(2 * M * k, 2 * M);
    const double s = detail::beam_scale(P, k);
    CVector v(M);
    for (Index m = 0; m < M; ++m) v(m) = s * Complex(seg(m), seg(M + m));
    t.t[static_cast<std::size_t>(k)] = v;
  }
  detail::normalize_beams(ch, P, t);
  return t;
}

/// Single-user upper bound on the common rate: min_k log2(1 + P_k ||h_kk||^2 / sigma^2) / alpha_k.
inline double proper_rate_bound(const ChannelSet& ch, const RateProfile& alpha, const PowerBudget& P) {
  double ub = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < ch.users(); ++k) {
    const double pk = P.mode() == PowerMode::SumPower ? P.total() : P.user_cap(k);
    ub = std::min(ub, std::log2(1.0 + pk * ch.h(k, k).squaredNorm() / ch.noise_variance()) / alpha[k]);
  }
  return ub;
}

/// Proper rates of a beamformer set (zero pseudo-covariances).
inline std::vector<double> beamformer_rates(const ChannelSet& ch, const BeamformerSet& t) {
  const auto cov = make_covariances(t);
  const auto st = received_stats(ch, cov, PseudoCovarianceSet::zeros(ch.users(), ch.antennas()));
  return proper_rates(st, ch, cov);
}

inline ProperSolution solve_rate_profile_proper(const ChannelSet& ch, const RateProfile& alpha, const PowerBudget& P,
                                                const ProperOptions& opt = {}) {
  const Index K = ch.users();
  if (alpha.size() != K) throw DimensionMismatch("rate profile length differs from the user count");
  P.check_users(K);
  ProperSolution sol;
  sol.beamformers = detail::zero_beams(K, ch.antennas());
  const double ub = proper_rate_bound(ch, alpha, P);
  if (!(ub > opt.tol)) return sol;
  const auto res = conic::bisect(
      [&](double r) {
        auto t = socp_feasible(ch, alpha, r, P, opt.socp);
        if (t) sol.beamformers = std::move(*t);
        return t.has_value();
      },
      0.0, ub, opt.tol);
  // The witness meets the SINR targets only to solver tolerance; report what it certifiably achieves.
  sol.r_star = std::min(res.lo, profile_value(beamformer_rates(ch, sol.beamformers), alpha));
  sol.evaluations = res.evaluations;
  return sol;
}

struct MaxMinProper {
  double rate = 0.0;  // common per-user rate
  ProperSolution solution;
};

inline MaxMinProper maxmin_proper(const ChannelSet& ch, const PowerBudget& P, const ProperOptions& opt = {}) {
  MaxMinProper out;
  out.solution = solve_rate_profile_proper(ch, RateProfile::uniform(ch.users()), P, opt);
  out.rate = out.solution.r_star / static_cast<double>(ch.users());
  return out;
}

}  // namespace igs
