#pragma once

// SOCP feasibility via a bounded phase-I problem.

#include <optional>
#include <vector>

#include "igs/common.hpp"
#include "igs/conic/conelp.hpp"

namespace igs::conic {

/// ||A x + b|| <= c^T x + d
struct SocConstraint {
  RMatrix A;
  RVector b;
  RVector c;
  double d = 0.0;
};

struct SocpFeasibilityProblem {
  Index variables = 0;
  std::vector<SocConstraint> cones;
  RMatrix Aeq;  // rows are equality constraints Aeq x = beq
  RVector beq;
};

struct SocpOptions {
  /// Feasible when the optimal common slack of the normalized cones is at most this.
  double slack_tol = 1e-9;
  /// Independent re-check tolerance on normalized data.
  double check_tol = 1e-8;
  ConeOptions cone;
};

struct SocpOutcome {
  std::optional<RVector> x;  // empty when infeasible
  double slack = 0.0;        // optimal phase-I slack
  int iterations = 0;
};

namespace detail {

inline double cone_scale(const SocConstraint& k) {
  double s = std::abs(k.d);
  if (k.A.size() > 0) s = std::max(s, k.A.cwiseAbs().maxCoeff());
  if (k.b.size() > 0) s = std::max(s, k.b.cwiseAbs().maxCoeff());
  if (k.c.size() > 0) s = std::max(s, k.c.cwiseAbs().maxCoeff());
  return s > 0.0 ? s : 1.0;
}

inline void check_socp(const SocpFeasibilityProblem& p) {
  const Index n = p.variables;
  for (std::size_t i = 0; i < p.cones.size(); ++i) {
    const auto& k = p.cones[i];
    if (k.A.cols() != n || k.c.size() != n || k.A.rows() != k.b.size())
      throw DimensionMismatch("socp: cone " + std::to_string(i) + " is inconsistent with " + std::to_string(n) +
                              " variables");
  }
  if (p.Aeq.rows() != p.beq.size() || (p.Aeq.rows() > 0 && p.Aeq.cols() != n))
    throw DimensionMismatch("socp: equality block is inconsistent");
}

}  // namespace detail

/// Largest normalized violation max(||A x + b|| - c^T x - d) / scale and equality residual.
inline double socp_violation(const SocpFeasibilityProblem& p, const RVector& x) {
  double v = 0.0;
  for (const auto& k : p.cones) {
    const double sc = detail::cone_scale(k);
    v = std::max(v, ((k.A * x + k.b).norm() - k.c.dot(x) - k.d) / sc);
  }
  for (Index i = 0; i < p.Aeq.rows(); ++i) {
    const double sc = std::max({1.0, p.Aeq.row(i).cwiseAbs().maxCoeff(), std::abs(p.beq(i))});
    v = std::max(v, std::abs(p.Aeq.row(i).dot(x) - p.beq(i)) / sc);
  }
  return v;
}

/// Solves min s s.t. ||A_i x + b_i|| <= c_i^T x + d_i + s (normalized), equalities, s >= -1.
inline SocpOutcome solve_socp_feasibility(const SocpFeasibilityProblem& p, const SocpOptions& opt = {}) {
  detail::check_socp(p);
  const Index n = p.variables;
  const Index nv = n + 1;  // last variable is the slack s

  ConeDims dims;
  dims.orthant = 1;
  Index rows = 1;
  for (const auto& k : p.cones) {
    dims.soc.push_back(k.A.rows() + 1);
    rows += k.A.rows() + 1;
  }

  ConeProgram cp;
  cp.c = RVector::Zero(nv);
  cp.c(n) = 1.0;
  cp.G = RMatrix::Zero(rows, nv);
  cp.h = RVector::Zero(rows);
  cp.G(0, n) = -1.0;
  cp.h(0) = 1.0;
  Index r = 1;
  for (const auto& k : p.cones) {
    const double sc = detail::cone_scale(k);
    cp.G.block(r, 0, 1, n) = -k.c.transpose() / sc;
    cp.G(r, n) = -1.0;
    cp.h(r) = k.d / sc;
    cp.G.block(r + 1, 0, k.A.rows(), n) = -k.A / sc;
    cp.h.segment(r + 1, k.A.rows()) = k.b / sc;
    r += k.A.rows() + 1;
  }

  // Normalize equality rows and drop empty ones.
  std::vector<Index> keep;
  for (Index i = 0; i < p.Aeq.rows(); ++i) {
    const double nrm = p.Aeq.row(i).norm();
    if (nrm > 0.0) keep.push_back(i);
    else if (std::abs(p.beq(i)) > opt.check_tol) return {};
  }
  cp.A = RMatrix::Zero(static_cast<Index>(keep.size()), nv);
  cp.b = RVector::Zero(static_cast<Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) {
    const double nrm = p.Aeq.row(keep[i]).norm();
    cp.A.block(static_cast<Index>(i), 0, 1, n) = p.Aeq.row(keep[i]) / nrm;
    cp.b(static_cast<Index>(i)) = p.beq(keep[i]) / nrm;
  }
  cp.dims = dims;

  const ConeSolution sol = solve_cone_program(cp, opt.cone);
  SocpOutcome out;
  out.iterations = sol.iterations;
  if (sol.status == ConeStatus::PrimalInfeasible) {
    out.slack = std::numeric_limits<double>::infinity();
    return out;
  }
  if (sol.status == ConeStatus::DualInfeasible)
    throw NumericalFailure("socp: phase-I problem reported unbounded");
  out.slack = sol.x(n);
  if (out.slack > opt.slack_tol) return out;
  const RVector x = sol.x.head(n);
  const double viol = socp_violation(p, x);
  if (viol > opt.check_tol)
    throw NumericalFailure("socp: phase-I slack " + std::to_string(out.slack) + " but re-check violation " +
                           std::to_string(viol));
  out.x = x;
  return out;
}

}  // namespace igs::conic
