#pragma once

// Pseudo-covariance optimization for fixed rank-1 covariances: reduction to a K-dimensional
// vector z, SDR bisection, rank-1 extraction and Gaussian randomization.

#include <cmath>
#include <random>
#include <vector>

#include "igs/channel.hpp"
#include "igs/common.hpp"
#include "igs/conic/bisect.hpp"
#include "igs/conic/sdp.hpp"
#include "igs/signaling.hpp"

namespace igs {

struct ReducedProblem {
  std::vector<CVector> m;        // m[k], length K
  std::vector<CVector> w;        // w[k], length K with w[k](k) = 0
  RVector caps;                  // ||t_k||^2
  std::vector<CVector> t_tilde;  // normalized beamformers (zero for silent users)
  RateProfile alpha = RateProfile::uniform(1);
  SecondOrderStats stats;
  double noise_variance = 1.0;

  Index users() const { return caps.size(); }
};

struct PseudoOptions {
  double tau_tol = 1e-8;      // bisection tolerance on tau (bits)
  double rank_tol = 1e-6;     // eig[1] / eig[0] threshold for the rank-1 test
  double feas_tol = 1e-9;     // slack on the f(tau) <= caps_1^2 test (scaled to 1)
  Index samples = 1000;       // randomization draws L
  std::uint64_t seed = 1;
  conic::ConeOptions cone;
};

struct SdrOutcome {
  CMatrix Z;            // witness at the last feasible tau
  double tau_sdr = 0.0; // upper end of the final bracket
  double tau_lo = 0.0;  // last feasible tau
  RVector eigvals;      // descending
  CVector z_hat;
  double tau_hat = 0.0;
  bool tight = false;
  int evaluations = 0;
  /// Smallest margin of the two reduced-constraint bounds over every witness met during bisection.
  double theorem1_slack = std::numeric_limits<double>::infinity();
};

/// Z encodes z = Z-vector; used as the user-facing PseudoVariableVector.
using PseudoVariableVector = CVector;

inline ReducedProblem reduce(const BeamformerSet& t, const ChannelSet& ch, const SecondOrderStats& stats,
                             const RateProfile& alpha) {
  const Index K = ch.users();
  if (t.users() != K || stats.users() != K || alpha.size() != K)
    throw DimensionMismatch("reduce: beamformers, statistics and profile must cover every user");
  for (Index k = 0; k < K; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double scale = std::max(1.0, stats.Cy[i]);
    if (std::abs(stats.Cy_tilde[i]) > 1e-12 * scale || std::abs(stats.Cs_tilde[i]) > 1e-12 * scale)
      throw PreconditionError("reduce: statistics must come from zero pseudo-covariances");
  }
  ReducedProblem rp{{}, {}, RVector::Zero(K), {}, alpha, stats, ch.noise_variance()};
  for (Index k = 0; k < K; ++k) {
    const CVector& v = t.t[static_cast<std::size_t>(k)];
    const double nrm = v.norm();
    rp.caps(k) = nrm * nrm;
    rp.t_tilde.push_back(nrm > 0.0 ? CVector(v / nrm) : CVector(CVector::Zero(ch.antennas())));
  }
  for (Index k = 0; k < K; ++k) {
    const auto i = static_cast<std::size_t>(k);
    CVector m(K), w(K);
    for (Index j = 0; j < K; ++j) {
      const Complex g = ch.gain(k, j, rp.t_tilde[static_cast<std::size_t>(j)]);
      const Complex g2c = std::conj(g * g);
      m(j) = g2c / stats.Cy[i];
      w(j) = (j == k) ? Complex(0.0) : g2c / stats.Cs[i];
    }
    rp.m.push_back(m);
    rp.w.push_back(w);
  }
  return rp;
}

namespace detail {

inline void check_caps(const ReducedProblem& rp, const CVector& z) {
  if (z.size() != rp.users()) throw DimensionMismatch("pseudo variable has wrong length");
  for (Index k = 0; k < z.size(); ++k)
    if (std::abs(z(k)) > rp.caps(k) + 1e-9 * std::max(1.0, rp.caps(k)))
      throw PreconditionError("pseudo variable exceeds the cap of user " + std::to_string(k));
}

}  // namespace detail

/// Per-user improper gains 1/2 log2((1 - |m_k^H z|^2) / (1 - |w_k^H z|^2)).
inline std::vector<double> user_deltas(const ReducedProblem& rp, const CVector& z) {
  detail::check_caps(rp, z);
  std::vector<double> d;
  for (Index k = 0; k < rp.users(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double num = 1.0 - std::norm(rp.m[i].dot(z));
    const double den = 1.0 - std::norm(rp.w[i].dot(z));
    if (!(num > 0.0) || !(den > 0.0))
      throw InvariantViolation("reduced objective of user " + std::to_string(k) + " has a non-positive argument");
    d.push_back(0.5 * std::log2(num / den));
  }
  return d;
}

/// min_k 1/(2 alpha_k) log2((1 - |m_k^H z|^2) / (1 - |w_k^H z|^2)).
inline double objective(const ReducedProblem& rp, const CVector& z) {
  const auto d = user_deltas(rp, z);
  double v = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < rp.users(); ++k) v = std::min(v, d[static_cast<std::size_t>(k)] / rp.alpha[k]);
  return v;
}

/// -1/2 log2(1 - ||w_k||^2 ||z||^2) per user; +inf when the argument is not positive.
inline std::vector<double> delta_upper_bound(const ReducedProblem& rp, const CVector& z) {
  std::vector<double> b;
  for (Index k = 0; k < rp.users(); ++k) {
    const double a = 1.0 - rp.w[static_cast<std::size_t>(k)].squaredNorm() * z.squaredNorm();
    b.push_back(a > 0.0 ? -0.5 * std::log2(a) : std::numeric_limits<double>::infinity());
  }
  return b;
}

/// Reduced-constraint margins: min_k of 1 - Tr(W_k Z) - sigma^4 / C_s^2 and 1 - Tr(M_k Z) - sigma^4 / C_y^2.
inline double theorem1_margin(const ReducedProblem& rp, const CMatrix& Z) {
  const double s4 = rp.noise_variance * rp.noise_variance;
  double v = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < rp.users(); ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double tw = std::real(rp.w[i].dot(Z * rp.w[i]));
    const double tm = std::real(rp.m[i].dot(Z * rp.m[i]));
    v = std::min(v, 1.0 - tw - s4 / (rp.stats.Cs[i] * rp.stats.Cs[i]));
    v = std::min(v, 1.0 - tm - s4 / (rp.stats.Cy[i] * rp.stats.Cy[i]));
  }
  return v;
}

/// Bisection bracket upper end min_k log2(C_s[k] / sigma^2) / alpha_k.
inline double tau_upper_bound(const ReducedProblem& rp) {
  double ub = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < rp.users(); ++k)
    ub = std::min(ub, std::log2(rp.stats.Cs[static_cast<std::size_t>(k)] / rp.noise_variance) / rp.alpha[k]);
  return std::max(ub, 0.0);
}

struct SdrCheck {
  bool feasible = false;
  CMatrix Z;          // full K x K witness when feasible
  double lhs = 0.0;   // f(tau) in the original scale
  bool phase1 = false; // decided by the margin problem after a numerical failure
};

namespace detail {

struct Phase1Result {
  bool feasible = false;
  CMatrix Z;
};

/// min u s.t. Tr(F_i Z) + u |F_i| >= g_i for the rate rows, Z_aa <= 1, Z >= 0, u >= 0. The variable u
/// sits on an extra diagonal entry of the lifted matrix. Always strictly feasible and bounded.
inline Phase1Result sdr_phase1(const conic::SdpProblem& p, Index n, const PseudoOptions& opt) {
  const Index N = n + 1;
  conic::SdpProblem q;
  q.F0 = CMatrix::Zero(N, N);
  q.F0(n, n) = 1.0;
  for (const auto& c : p.constraints) {
    if (c.sense != conic::Sense::GreaterEqual) continue;
    const double nrm = c.F.norm();
    if (nrm == 0.0) return {};
    CMatrix F = CMatrix::Zero(N, N);
    F.topLeftCorner(n, n) = c.F / nrm;
    F(n, n) = 1.0;
    q.constraints.push_back({F, conic::Sense::GreaterEqual, c.g / nrm});
  }
  for (Index a = 0; a < n; ++a) {
    CMatrix E = CMatrix::Zero(N, N);
    E(a, a) = 1.0;
    q.constraints.push_back({E, conic::Sense::LessEqual, 1.0});
  }
  const auto sol = conic::solve_sdp(q, opt.cone);
  if (sol.status != conic::SdpStatus::Optimal) throw NumericalFailure("sdr: margin problem did not solve");
  Phase1Result r;
  r.feasible = sol.objective <= opt.feas_tol;
  r.Z = sol.Z.topLeftCorner(n, n);
  return r;
}

}  // namespace detail

/// Solves min Z_oo s.t. 1 - Tr(M_k Z) >= 2^{2 alpha_k tau} (1 - Tr(W_k Z)), Z_kk <= caps_k^2 (k != o), Z >= 0,
/// where o is the first user with a nonzero cap. Feasible iff the optimum is at most caps_o^2.
inline SdrCheck sdr_feasible_at(const ReducedProblem& rp, double tau, const PseudoOptions& opt = {}) {
  const Index K = rp.users();
  if (!(tau >= 0.0)) throw PreconditionError("sdr_feasible_at: tau must be non-negative");
  SdrCheck out;
  if (tau == 0.0) {
    out.feasible = true;
    out.Z = CMatrix::Zero(K, K);
    return out;
  }
  // Silent users contribute nothing; work on the active coordinates scaled by their caps.
  std::vector<Index> act;
  for (Index k = 0; k < K; ++k)
    if (rp.caps(k) > 0.0) act.push_back(k);
  if (act.empty()) return out;
  const Index n = static_cast<Index>(act.size());
  RVector d(n);
  for (Index a = 0; a < n; ++a) d(a) = rp.caps(act[static_cast<std::size_t>(a)]);

  auto restrict = [&](const CVector& v) {
    CVector r(n);
    for (Index a = 0; a < n; ++a) r(a) = v(act[static_cast<std::size_t>(a)]) * d(a);
    return r;
  };
  conic::SdpProblem p;
  p.F0 = CMatrix::Zero(n, n);
  p.F0(0, 0) = 1.0;
  for (Index k = 0; k < K; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const double c = std::exp2(2.0 * rp.alpha[k] * tau);
    const CVector mk = restrict(rp.m[i]);
    const CVector wk = restrict(rp.w[i]);
    CMatrix F = c * wk * wk.adjoint() - mk * mk.adjoint();
    F = conic::hermitian_part(F);
    p.constraints.push_back({F, conic::Sense::GreaterEqual, c - 1.0});
  }
  for (Index a = 1; a < n; ++a) {
    CMatrix E = CMatrix::Zero(n, n);
    E(a, a) = 1.0;
    p.constraints.push_back({E, conic::Sense::LessEqual, 1.0});
  }
  // Box on the objective coordinate keeps the feasible set compact without moving the decision point.
  p.constraints.push_back({p.F0, conic::Sense::LessEqual, 2.0});

  auto lift = [&](const CMatrix& Zs) {
    CMatrix Z = CMatrix::Zero(K, K);
    for (Index a = 0; a < n; ++a)
      for (Index b = 0; b < n; ++b)
        Z(act[static_cast<std::size_t>(a)], act[static_cast<std::size_t>(b)]) = d(a) * Zs(a, b) * d(b);
    return Z;
  };
  try {
    const auto sol = conic::solve_sdp(p, opt.cone);
    if (sol.status != conic::SdpStatus::Optimal) return out;
    if (sol.max_violation > 1e-7)
      throw NumericalFailure("sdr: solution violates its constraints by " + std::to_string(sol.max_violation));
    out.lhs = sol.objective * d(0) * d(0);
    out.feasible = sol.objective <= 1.0 + opt.feas_tol;
    if (out.feasible) out.Z = lift(sol.Z);
    return out;
  } catch (const NumericalFailure&) {
    // Near the threshold the feasible set can shrink to a point; decide with the bounded margin problem.
  }
  const auto ph = detail::sdr_phase1(p, n, opt);
  out.phase1 = true;
  out.feasible = ph.feasible;
  if (ph.feasible) {
    out.Z = lift(ph.Z);
    out.lhs = ph.Z(0, 0).real() * d(0) * d(0);
  }
  return out;
}

/// Descending eigenvalues of a Hermitian matrix.
inline RVector descending_eigenvalues(const CMatrix& Z) {
  if (Z.size() == 0) return RVector();
  Eigen::SelfAdjointEigenSolver<CMatrix> es(conic::hermitian_part(Z), Eigen::EigenvaluesOnly);
  return es.eigenvalues().reverse();
}

inline bool rank_one(const RVector& eig, double tol) {
  if (eig.size() < 2 || eig(0) <= 0.0) return true;
  return std::max(eig(1), 0.0) / eig(0) <= tol;
}

inline SdrOutcome solve_sdr(const ReducedProblem& rp, const PseudoOptions& opt = {}) {
  const Index K = rp.users();
  SdrOutcome out;
  out.Z = CMatrix::Zero(K, K);
  const double ub = tau_upper_bound(rp);
  out.theorem1_slack = theorem1_margin(rp, out.Z);
  if (ub > opt.tau_tol) {
    const auto res = conic::bisect(
        [&](double tau) {
          auto chk = sdr_feasible_at(rp, tau, opt);
          if (chk.feasible) {
            out.theorem1_slack = std::min(out.theorem1_slack, theorem1_margin(rp, chk.Z));
            out.Z = std::move(chk.Z);
          }
          return chk.feasible;
        },
        0.0, ub, opt.tau_tol);
    out.evaluations = res.evaluations;
    out.tau_lo = res.lo;
    out.tau_sdr = res.lo > 0.0 ? res.hi : 0.0;
  }
  out.eigvals = descending_eigenvalues(out.Z);
  out.tight = rank_one(out.eigvals, opt.rank_tol);
  return out;
}

namespace detail {

inline CVector cap_coordinates(const ReducedProblem& rp, CVector z) {
  for (Index k = 0; k < z.size(); ++k) {
    const double a = std::abs(z(k));
    if (a > rp.caps(k)) z(k) *= (a > 0.0 ? rp.caps(k) / a : 0.0);
  }
  return z;
}

}  // namespace detail

struct RandomizeResult {
  CVector z_hat;
  double tau_hat = 0.0;
  Index best_index = 0;  // 0 is the z = 0 candidate
};

/// Gaussian randomization over CN(0, Z) with per-coordinate capping; candidate 0 is z = 0. A rank-1 Z
/// skips sampling and uses its capped principal component.
inline RandomizeResult randomize(const ReducedProblem& rp, const CMatrix& Z, Index L, std::mt19937_64& rng,
                                 bool tight) {
  const Index K = rp.users();
  if (L < 1) throw PreconditionError("randomize: need at least one sample");
  if (Z.rows() != K || Z.cols() != K) throw DimensionMismatch("randomize: Z has wrong size");
  RandomizeResult best{CVector::Zero(K), 0.0, 0};
  auto consider = [&](const CVector& z, Index l) {
    const double v = objective(rp, z);
    if (v > best.tau_hat) best = {z, v, l};
  };
  Eigen::SelfAdjointEigenSolver<CMatrix> es(conic::hermitian_part(Z));
  const RVector lam = es.eigenvalues().cwiseMax(0.0);
  if (lam.size() == 0 || lam.maxCoeff() <= 0.0) return best;
  if (tight) {
    consider(detail::cap_coordinates(rp, std::sqrt(lam(K - 1)) * es.eigenvectors().col(K - 1)), 1);
    return best;
  }
  const CMatrix root = es.eigenvectors() * lam.cwiseSqrt().asDiagonal();
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  CVector xi(K);
  for (Index l = 1; l <= L; ++l) {
    for (Index k = 0; k < K; ++k) xi(k) = Complex(g(rng), g(rng));
    consider(detail::cap_coordinates(rp, root * xi), l);
  }
  return best;
}

struct ImproperSolution {
  PseudoCovarianceSet pseudo;
  std::vector<double> rates;
  double R_star = 0.0;
  SdrOutcome sdr;
  ReducedProblem reduced;
};

/// Separate covariance and pseudo-covariance optimization given the proper solution (t, r_star).
inline ImproperSolution optimize_pseudo(const ChannelSet& ch, const RateProfile& alpha, const BeamformerSet& t,
                                        const PseudoOptions& opt = {}) {
  const Index K = ch.users();
  const Index M = ch.antennas();
  const auto cov = make_covariances(t);
  const auto st0 = received_stats(ch, cov, PseudoCovarianceSet::zeros(K, M));
  ImproperSolution out;
  out.reduced = reduce(t, ch, st0, alpha);
  out.sdr = solve_sdr(out.reduced, opt);
  std::mt19937_64 rng(opt.seed);
  const auto rnd = randomize(out.reduced, out.sdr.Z, opt.samples, rng, out.sdr.tight);
  out.sdr.z_hat = rnd.z_hat;
  out.sdr.tau_hat = rnd.tau_hat;

  out.pseudo = PseudoCovarianceSet::zeros(K, M);
  for (Index k = 0; k < K; ++k) {
    const auto i = static_cast<std::size_t>(k);
    const CVector& tt = out.reduced.t_tilde[i];
    out.pseudo.Ctilde[i] = rnd.z_hat(k) * tt * tt.transpose();
    if (!validate_pair(cov.C[i], out.pseudo.Ctilde[i]).valid)
      throw InvariantViolation("optimize_pseudo: emitted pseudo-covariance of user " + std::to_string(k) +
                               " is not valid");
  }
  const auto st = received_stats(ch, cov, out.pseudo);
  out.rates = user_rates(st, ch, cov);
  out.R_star = profile_value(out.rates, alpha);
  return out;
}

}  // namespace igs
