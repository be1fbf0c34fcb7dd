#pragma once

// Complex Hermitian SDPs lowered to real ones.
//
// Z = X + iY is parameterized by X symmetric and Y skew (K^2 reals), and the PSD constraint is
// placed on the real embedding [[X, -Y], [Y, X]].

#include <string>
#include <vector>

#include "igs/common.hpp"
#include "igs/conic/conelp.hpp"

namespace igs::conic {

enum class Sense { LessEqual, GreaterEqual, Equal };

struct SdpConstraint {
  CMatrix F;
  Sense sense = Sense::LessEqual;
  double g = 0.0;
};

/// minimize Tr(F0 Z) over Hermitian Z >= 0 subject to Tr(F_i Z) (<=, >=, =) g_i.
struct SdpProblem {
  CMatrix F0;
  std::vector<SdpConstraint> constraints;
  Index size() const { return F0.rows(); }
};

enum class SdpStatus { Optimal, Infeasible, Unbounded };

struct SdpOutcome {
  SdpStatus status = SdpStatus::Optimal;
  CMatrix Z;
  double objective = 0.0;
  RVector eigenvalues;  // descending
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  /// Largest constraint violation of Z from a direct complex evaluation.
  double max_violation = 0.0;
  bool inaccurate = false;
  int iterations = 0;
};

/// Real parameter count of a Hermitian K x K matrix.
inline Index hermitian_params(Index K) { return K * K; }

/// Parameter layout: X(i,i) and X(i,j) for i<j, then Y(i,j) for i<j.
inline CMatrix hermitian_from_params(const RVector& x, Index K) {
  CMatrix Z = CMatrix::Zero(K, K);
  Index p = 0;
  for (Index j = 0; j < K; ++j)
    for (Index i = 0; i <= j; ++i) {
      Z(i, j) += x(p);
      if (i != j) Z(j, i) += x(p);
      ++p;
    }
  for (Index j = 0; j < K; ++j)
    for (Index i = 0; i < j; ++i) {
      Z(i, j) += Complex(0.0, x(p));
      Z(j, i) -= Complex(0.0, x(p));
      ++p;
    }
  return Z;
}

inline RVector params_from_hermitian(const CMatrix& Z) {
  const Index K = Z.rows();
  RVector x(hermitian_params(K));
  Index p = 0;
  for (Index j = 0; j < K; ++j)
    for (Index i = 0; i <= j; ++i) x(p++) = Z(i, j).real();
  for (Index j = 0; j < K; ++j)
    for (Index i = 0; i < j; ++i) x(p++) = Z(i, j).imag();
  return x;
}

/// Coefficients a with Tr(F Z) = a^T params(Z) for Hermitian F.
inline RVector trace_coefficients(const CMatrix& F) {
  const Index K = F.rows();
  RVector a(hermitian_params(K));
  Index p = 0;
  for (Index j = 0; j < K; ++j)
    for (Index i = 0; i <= j; ++i) a(p++) = (i == j) ? F(i, i).real() : 2.0 * F(i, j).real();
  // Tr(F Z) = Tr(AX) - Tr(BY) with F = A + iB; Y(j,i) = -Y(i,j), B(j,i) = -B(i,j).
  for (Index j = 0; j < K; ++j)
    for (Index i = 0; i < j; ++i) a(p++) = 2.0 * F(i, j).imag();
  return a;
}

/// Real symmetric embedding [[Re, -Im], [Im, Re]].
inline RMatrix real_embedding(const CMatrix& Z) {
  const Index K = Z.rows();
  RMatrix E(2 * K, 2 * K);
  E << Z.real(), -Z.imag(), Z.imag(), Z.real();
  return E;
}

/// Projects a real 2K x 2K matrix back onto the embedded Hermitian matrices.
inline CMatrix hermitian_from_embedding(const RMatrix& E, Index K) {
  const RMatrix X = 0.5 * (E.topLeftCorner(K, K) + E.bottomRightCorner(K, K));
  const RMatrix Y = 0.5 * (E.bottomLeftCorner(K, K) - E.topRightCorner(K, K));
  CMatrix Z(K, K);
  for (Index i = 0; i < K; ++i)
    for (Index j = 0; j < K; ++j) Z(i, j) = Complex(0.5 * (X(i, j) + X(j, i)), 0.5 * (Y(i, j) - Y(j, i)));
  return Z;
}

inline bool is_hermitian(const CMatrix& F, double tol = 1e-12) {
  return F.rows() == F.cols() && (F - F.adjoint()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, F.cwiseAbs().maxCoeff());
}

inline CMatrix hermitian_part(const CMatrix& Z) { return 0.5 * (Z + Z.adjoint()); }

/// Direct complex evaluation of the largest violation (absolute, normalized by max(1, |g|)).
inline double sdp_violation(const SdpProblem& p, const CMatrix& Z) {
  double v = 0.0;
  for (const auto& c : p.constraints) {
    const double t = (c.F * Z).trace().real();
    const double sc = std::max(1.0, std::abs(c.g));
    switch (c.sense) {
      case Sense::LessEqual: v = std::max(v, (t - c.g) / sc); break;
      case Sense::GreaterEqual: v = std::max(v, (c.g - t) / sc); break;
      case Sense::Equal: v = std::max(v, std::abs(t - c.g) / sc); break;
    }
  }
  return v;
}

inline SdpOutcome solve_sdp(const SdpProblem& p, const ConeOptions& opt = {}) {
  const Index K = p.size();
  if (K < 1 || p.F0.cols() != K) throw DimensionMismatch("sdp: objective must be square with K >= 1");
  if (!is_hermitian(p.F0)) throw InvariantViolation("sdp: objective matrix is not Hermitian");
  for (std::size_t i = 0; i < p.constraints.size(); ++i) {
    const auto& c = p.constraints[i];
    if (c.F.rows() != K || c.F.cols() != K)
      throw DimensionMismatch("sdp: constraint " + std::to_string(i) + " has wrong size");
    if (!is_hermitian(c.F)) throw InvariantViolation("sdp: constraint " + std::to_string(i) + " is not Hermitian");
  }

  const Index n = hermitian_params(K);
  std::vector<RVector> ineq_rows;
  std::vector<double> ineq_rhs;
  std::vector<RVector> eq_rows;
  std::vector<double> eq_rhs;
  SdpOutcome infeasible;
  infeasible.status = SdpStatus::Infeasible;
  for (const auto& c : p.constraints) {
    RVector a = trace_coefficients(c.F);
    double g = c.g;
    const double nrm = a.norm();
    if (nrm == 0.0) {
      const bool ok = (c.sense == Sense::LessEqual && g >= 0.0) || (c.sense == Sense::GreaterEqual && g <= 0.0) ||
                      (c.sense == Sense::Equal && g == 0.0);
      if (!ok) return infeasible;
      continue;
    }
    a /= nrm;
    g /= nrm;
    if (c.sense == Sense::Equal) {
      eq_rows.push_back(a);
      eq_rhs.push_back(g);
    } else if (c.sense == Sense::LessEqual) {
      ineq_rows.push_back(a);
      ineq_rhs.push_back(g);
    } else {
      ineq_rows.push_back(-a);
      ineq_rhs.push_back(-g);
    }
  }

  const Index n_ineq = static_cast<Index>(ineq_rows.size());
  const Index emb = 2 * K;
  const Index nsv = emb * (emb + 1) / 2;
  ConeProgram cp;
  cp.dims.orthant = n_ineq;
  cp.dims.psd = {emb};
  cp.c = trace_coefficients(p.F0);
  cp.G = RMatrix::Zero(n_ineq + nsv, n);
  cp.h = RVector::Zero(n_ineq + nsv);
  for (Index i = 0; i < n_ineq; ++i) {
    cp.G.row(i) = ineq_rows[i].transpose();
    cp.h(i) = ineq_rhs[i];
  }
  for (Index q = 0; q < n; ++q) {
    RVector e = RVector::Zero(n);
    e(q) = 1.0;
    cp.G.block(n_ineq, q, nsv, 1) = -svec(real_embedding(hermitian_from_params(e, K)));
  }
  cp.A = RMatrix::Zero(static_cast<Index>(eq_rows.size()), n);
  cp.b = RVector::Zero(static_cast<Index>(eq_rows.size()));
  for (std::size_t i = 0; i < eq_rows.size(); ++i) {
    cp.A.row(static_cast<Index>(i)) = eq_rows[i].transpose();
    cp.b(static_cast<Index>(i)) = eq_rhs[i];
  }

  const ConeSolution sol = solve_cone_program(cp, opt);
  SdpOutcome out;
  out.iterations = sol.iterations;
  out.inaccurate = sol.inaccurate;
  out.primal_residual = sol.primal_residual;
  out.dual_residual = sol.dual_residual;
  if (sol.status == ConeStatus::PrimalInfeasible) {
    out.status = SdpStatus::Infeasible;
    return out;
  }
  if (sol.status == ConeStatus::DualInfeasible) {
    out.status = SdpStatus::Unbounded;
    return out;
  }
  // The PSD slack is interior; averaging its two embedded copies keeps it PSD.
  out.Z = hermitian_from_embedding(smat(sol.s.tail(nsv), emb), K);
  out.objective = (p.F0 * out.Z).trace().real();
  out.gap = sol.gap;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(out.Z, Eigen::EigenvaluesOnly);
  out.eigenvalues = es.eigenvalues().reverse();
  out.max_violation = sdp_violation(p, out.Z);
  return out;
}

}  // namespace igs::conic
