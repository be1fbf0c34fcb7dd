#pragma once

// Covariance / pseudo-covariance sets, valid-pair tests, received second-order statistics and rates.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "igs/channel.hpp"
#include "igs/common.hpp"

namespace igs {

/// Rate-profile vector: positive entries summing to one.
class RateProfile {
 public:
  explicit RateProfile(std::vector<double> alpha) : alpha_(std::move(alpha)) {
    if (alpha_.empty()) throw InvariantViolation("rate profile is empty");
    double sum = 0.0;
    for (double a : alpha_) {
      if (!(a > 0.0)) throw InvariantViolation("rate profile entries must be positive");
      sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) throw InvariantViolation("rate profile must sum to one");
  }

  static RateProfile uniform(Index users) {
    return RateProfile(std::vector<double>(static_cast<std::size_t>(users), 1.0 / static_cast<double>(users)));
  }
  /// (a, 1 - a) with the second entry computed so the pair sums to one exactly.
  static RateProfile pair(double a) { return RateProfile({a, 1.0 - a}); }

  Index size() const { return static_cast<Index>(alpha_.size()); }
  double operator[](Index k) const { return alpha_[static_cast<std::size_t>(k)]; }
  const std::vector<double>& values() const { return alpha_; }

 private:
  std::vector<double> alpha_;
};

/// Rank-1 transmit strategy: one beamforming vector per user.
struct BeamformerSet {
  std::vector<CVector> t;

  Index users() const { return static_cast<Index>(t.size()); }
  double power(Index k) const { return t[static_cast<std::size_t>(k)].squaredNorm(); }

  std::vector<CMatrix> covariances() const {
    std::vector<CMatrix> c;
    c.reserve(t.size());
    for (const auto& v : t) c.emplace_back(v * v.adjoint());
    return c;
  }
};

struct TransmitCovarianceSet {
  std::vector<CMatrix> C;
};

struct PseudoCovarianceSet {
  std::vector<CMatrix> Ctilde;

  static PseudoCovarianceSet zeros(Index users, Index antennas) {
    return {std::vector<CMatrix>(static_cast<std::size_t>(users), CMatrix::Zero(antennas, antennas))};
  }
};

/// Per-user covariance and pseudo-covariance of the received signal (y) and of interference plus noise (s).
struct SecondOrderStats {
  std::vector<double> Cy;
  std::vector<Complex> Cy_tilde;
  std::vector<double> Cs;
  std::vector<Complex> Cs_tilde;

  Index users() const { return static_cast<Index>(Cy.size()); }
};

namespace detail {

inline void check_square(const CMatrix& a, Index m, const std::string& what) {
  if (a.rows() != m || a.cols() != m)
    throw DimensionMismatch(what + " must be " + std::to_string(m) + "x" + std::to_string(m));
}

inline double relative_asymmetry(const CMatrix& a) {
  return (a - a.transpose()).norm() / (1.0 + a.norm());
}

}  // namespace detail

inline TransmitCovarianceSet make_covariances(const BeamformerSet& t) { return {t.covariances()}; }

/// C_y[k] = sum_j h_kj C_j h_kj^H + sigma^2, Cy~[k] = sum_j h_kj C~_j h_kj^T, and the same without j = k.
inline SecondOrderStats received_stats(const ChannelSet& ch, const TransmitCovarianceSet& cov,
                                       const PseudoCovarianceSet& pcov) {
  const Index K = ch.users();
  const Index M = ch.antennas();
  if (static_cast<Index>(cov.C.size()) != K || static_cast<Index>(pcov.Ctilde.size()) != K)
    throw DimensionMismatch("covariance sets must hold one matrix per user");
  for (Index j = 0; j < K; ++j) {
    detail::check_square(cov.C[static_cast<std::size_t>(j)], M, "covariance");
    detail::check_square(pcov.Ctilde[static_cast<std::size_t>(j)], M, "pseudo-covariance");
  }
  SecondOrderStats st;
  const double noise = ch.noise_variance();
  for (Index k = 0; k < K; ++k) {
    double own = 0.0;
    double total = 0.0;
    Complex own_t = 0.0;
    Complex total_t = 0.0;
    for (Index j = 0; j < K; ++j) {
      const CVector& h = ch.h(k, j);
      const double p = (h.transpose() * cov.C[static_cast<std::size_t>(j)] * h.conjugate())(0).real();
      const Complex q = (h.transpose() * pcov.Ctilde[static_cast<std::size_t>(j)] * h)(0);
      total += p;
      total_t += q;
      if (j == k) {
        own = p;
        own_t = q;
      }
    }
    st.Cy.push_back(total + noise);
    st.Cy_tilde.push_back(total_t);
    st.Cs.push_back(total - own + noise);
    st.Cs_tilde.push_back(total_t - own_t);
  }
  return st;
}

inline SecondOrderStats received_stats(const ChannelSet& ch, const BeamformerSet& t,
                                       const PseudoCovarianceSet& pcov) {
  return received_stats(ch, make_covariances(t), pcov);
}

/// log2(1 + h_kk C_k h_kk^H / C_s[k]).
inline double rate_proper(Index k, const SecondOrderStats& st, const ChannelSet& ch,
                          const TransmitCovarianceSet& cov) {
  const CVector& h = ch.h(k, k);
  const double signal = (h.transpose() * cov.C[static_cast<std::size_t>(k)] * h.conjugate())(0).real();
  const double cs = st.Cs[static_cast<std::size_t>(k)];
  const double arg = 1.0 + signal / cs;
  if (!(arg > 0.0) || !(cs > 0.0)) throw InvalidStatistics("proper-rate argument is not positive");
  return std::log2(arg);
}

/// 1/2 log2((1 - |Cy~|^2 / Cy^2) / (1 - |Cs~|^2 / Cs^2)).
inline double rate_delta(Index k, const SecondOrderStats& st) {
  const auto i = static_cast<std::size_t>(k);
  const double num = 1.0 - std::norm(st.Cy_tilde[i]) / (st.Cy[i] * st.Cy[i]);
  const double den = 1.0 - std::norm(st.Cs_tilde[i]) / (st.Cs[i] * st.Cs[i]);
  if (!(num > 0.0) || !(den > 0.0))
    throw InvalidStatistics("improper-rate term of user " + std::to_string(k) + " has a non-positive argument");
  return 0.5 * std::log2(num / den);
}

inline double rate_user(Index k, const SecondOrderStats& st, const ChannelSet& ch,
                        const TransmitCovarianceSet& cov) {
  return rate_proper(k, st, ch, cov) + rate_delta(k, st);
}

inline std::vector<double> user_rates(const SecondOrderStats& st, const ChannelSet& ch,
                                      const TransmitCovarianceSet& cov) {
  std::vector<double> r;
  for (Index k = 0; k < ch.users(); ++k) r.push_back(rate_user(k, st, ch, cov));
  return r;
}

inline std::vector<double> proper_rates(const SecondOrderStats& st, const ChannelSet& ch,
                                        const TransmitCovarianceSet& cov) {
  std::vector<double> r;
  for (Index k = 0; k < ch.users(); ++k) r.push_back(rate_proper(k, st, ch, cov));
  return r;
}

/// min_k rate_k / alpha_k: the common scale achieved along a rate-profile ray.
inline double profile_value(const std::vector<double>& rates, const RateProfile& alpha) {
  double v = std::numeric_limits<double>::infinity();
  for (Index k = 0; k < alpha.size(); ++k) v = std::min(v, rates[static_cast<std::size_t>(k)] / alpha[k]);
  return v;
}

// ---------------------------------------------------------------------------------------------
// Valid (covariance, pseudo-covariance) pairs
// ---------------------------------------------------------------------------------------------

struct PairValidity {
  bool valid = false;
  /// Smallest eigenvalue of the augmented covariance (the offending one when invalid).
  double min_eigenvalue = 0.0;
  double tolerance = 0.0;
};

inline CMatrix augmented_covariance(const CMatrix& C, const CMatrix& Ct) {
  const Index m = C.rows();
  CMatrix aug(2 * m, 2 * m);
  aug << C, Ct, Ct.conjugate(), C.conjugate();
  return aug;
}

namespace detail {

inline void check_pair_shapes(const CMatrix& C, const CMatrix& Ct) {
  if (C.rows() != C.cols() || Ct.rows() != Ct.cols() || C.rows() != Ct.rows())
    throw DimensionMismatch("valid-pair test needs square matrices of equal size");
  if (relative_asymmetry(Ct) > 1e-12) throw InvariantViolation("pseudo-covariance matrix is not symmetric");
}

inline double pair_tolerance(const CMatrix& C) { return kPsdTol * 2.0 * std::max(C.trace().real(), 0.0); }

}  // namespace detail

/// Augmented-covariance PSD test: valid iff min eig([[C, C~], [C~*, C*]]) >= -1e-9 * trace.
inline PairValidity validate_pair(const CMatrix& C, const CMatrix& Ct) {
  detail::check_pair_shapes(C, Ct);
  CMatrix aug = augmented_covariance(C, Ct);
  aug = 0.5 * (aug + aug.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(aug, Eigen::EigenvaluesOnly);
  PairValidity out;
  out.min_eigenvalue = eig.eigenvalues().minCoeff();
  out.tolerance = detail::pair_tolerance(C);
  out.valid = out.min_eigenvalue >= -out.tolerance;
  return out;
}

/// Block conditions for PSD-ness of [[A, B], [B^H, D]]: A >= 0, (I - A A^+) B = 0, D - B^H A^+ B >= 0.
/// Evaluated with A = C, B = C~, D = C*; an independent route to the same decision as validate_pair.
inline bool validate_pair_block_conditions(const CMatrix& C, const CMatrix& Ct) {
  detail::check_pair_shapes(C, Ct);
  const double tol = detail::pair_tolerance(C);
  const CMatrix A = 0.5 * (C + C.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(A);
  const RVector& lam = eig.eigenvalues();
  if (lam.size() > 0 && lam.minCoeff() < -tol) return false;

  // Pseudo-inverse and range projector with eigenvalues at or below the tolerance treated as zero.
  const Index m = A.rows();
  CMatrix pinv = CMatrix::Zero(m, m);
  CMatrix range = CMatrix::Zero(m, m);
  for (Index i = 0; i < m; ++i) {
    if (lam(i) > tol && lam(i) > 0.0) {
      const CVector u = eig.eigenvectors().col(i);
      pinv += (u * u.adjoint()) / lam(i);
      range += u * u.adjoint();
    }
  }
  const CMatrix null_part = (CMatrix::Identity(m, m) - range) * Ct;
  const double tr = std::max(2.0 * A.trace().real(), 0.0);
  if (null_part.squaredNorm() > kPsdTol * tr * tr) return false;

  CMatrix schur = C.conjugate() - Ct.adjoint() * pinv * Ct;
  schur = 0.5 * (schur + schur.adjoint()).eval();
  Eigen::SelfAdjointEigenSolver<CMatrix> seig(schur, Eigen::EigenvaluesOnly);
  return seig.eigenvalues().size() == 0 || seig.eigenvalues().minCoeff() >= -tol;
}

// ---------------------------------------------------------------------------------------------
// Broadcast form
// ---------------------------------------------------------------------------------------------

/// Rates of a broadcast channel with per-user vectors h_k, coded directly from the widely linear BC model.
inline std::vector<double> broadcast_rates(const std::vector<CVector>& h, const BeamformerSet& t,
                                           const PseudoCovarianceSet& pcov, double noise) {
  const auto K = h.size();
  std::vector<double> rates;
  for (std::size_t k = 0; k < K; ++k) {
    double interference = 0.0;
    double total = noise;
    Complex pt_total = 0.0;
    Complex pt_interf = 0.0;
    for (std::size_t j = 0; j < K; ++j) {
      const double g = std::norm(Complex(h[k].transpose() * t.t[j]));
      const Complex q = (h[k].transpose() * pcov.Ctilde[j] * h[k])(0);
      total += g;
      pt_total += q;
      if (j != k) {
        interference += g;
        pt_interf += q;
      }
    }
    const double signal = std::norm(Complex(h[k].transpose() * t.t[k]));
    const double cs = noise + interference;
    const double proper = std::log2(1.0 + signal / (noise + interference));
    const double num = 1.0 - std::norm(pt_total) / (total * total);
    const double den = 1.0 - std::norm(pt_interf) / (cs * cs);
    if (!(num > 0.0) || !(den > 0.0)) throw InvalidStatistics("broadcast improper term is not defined");
    rates.push_back(proper + 0.5 * std::log2(num / den));
  }
  return rates;
}

}  // namespace igs
