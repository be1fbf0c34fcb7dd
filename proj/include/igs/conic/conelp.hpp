#pragma once

// Dense primal-dual interior-point solver for linear cone programs
//
//     minimize    c^T x
//     subject to  G x + s = h,  A x = b,  s in K
//
// (K a product of orthant, second-order and PSD cones) with the dual
//
//     maximize    -h^T z - b^T y
//     subject to  G^T z + A^T y + c = 0,  z in K.
//
// Homogeneous self-dual embedding with Nesterov-Todd scaling and a Mehrotra predictor-corrector.
// Problems here have at most a few hundred rows, so KKT systems are factored densely.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <string>

#include "igs/common.hpp"
#include "igs/conic/cones.hpp"

namespace igs::conic {

struct ConeProgram {
  RVector c;
  RMatrix G;
  RVector h;
  RMatrix A;  // may have zero rows
  RVector b;
  ConeDims dims;
};

struct ConeOptions {
  int max_iterations = 100;
  double feastol = 1e-9;
  double abstol = 1e-9;
  double reltol = 1e-9;
  /// Accepted when the iteration limit is hit or progress stalls.
  double reduced_tol = 1e-6;
  double step_fraction = 0.99;
};

enum class ConeStatus { Optimal, PrimalInfeasible, DualInfeasible };

struct ConeSolution {
  ConeStatus status = ConeStatus::Optimal;
  RVector x, y, z, s;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  double gap = 0.0;
  int iterations = 0;
  /// Terminated at the reduced tolerance.
  bool inaccurate = false;
};

namespace detail {

/// Factored reduced KKT matrix [[0, A^T, G^T W^-1], [A, 0, 0], [W^-T G, 0, -I]].
class KktSolver {
 public:
  KktSolver(const ConeProgram& p, const Scaling& sc) : p_(p), sc_(sc) {
    n_ = p.G.cols();
    np_ = p.A.rows();
    m_ = p.G.rows();
    const Index N = n_ + np_ + m_;
    Gs_ = sc.Winv.transpose() * p.G;
    K_ = RMatrix::Zero(N, N);
    if (np_ > 0) {
      K_.block(0, n_, n_, np_) = p.A.transpose();
      K_.block(n_, 0, np_, n_) = p.A;
    }
    K_.block(0, n_ + np_, n_, m_) = Gs_.transpose();
    K_.block(n_ + np_, 0, m_, n_) = Gs_;
    K_.block(n_ + np_, n_ + np_, m_, m_) = -RMatrix::Identity(m_, m_);
    RMatrix reg = K_;
    const double delta = 1e-11 * std::max(1.0, K_.lpNorm<Eigen::Infinity>());
    for (Index i = 0; i < n_; ++i) reg(i, i) += delta;
    for (Index i = n_; i < n_ + np_; ++i) reg(i, i) -= delta;
    lu_.compute(reg);
  }

  /// Solves the unreduced system [[0, A^T, G^T], [A, 0, 0], [G, 0, -W^T W]] (dx, dy, dz) = (bx, by, bz).
  void solve(const RVector& bx, const RVector& by, const RVector& bz, RVector& dx, RVector& dy, RVector& dz) const {
    const Index N = n_ + np_ + m_;
    RVector rhs(N);
    rhs << bx, by, sc_.Winv.transpose() * bz;
    RVector sol = lu_.solve(rhs);
    for (int it = 0; it < 3; ++it) {
      const RVector r = rhs - K_ * sol;
      if (r.lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + rhs.lpNorm<Eigen::Infinity>())) break;
      sol += lu_.solve(r);
    }
    dx = sol.head(n_);
    dy = sol.segment(n_, np_);
    dz = sc_.Winv * sol.tail(m_);
  }

 private:
  const ConeProgram& p_;
  const Scaling& sc_;
  Index n_, np_, m_;
  RMatrix Gs_;
  RMatrix K_;
  Eigen::PartialPivLU<RMatrix> lu_;
};

inline void check_program(const ConeProgram& p) {
  const Index n = p.c.size();
  const Index m = p.dims.size();
  if (p.G.rows() != m || p.G.cols() != n || p.h.size() != m)
    throw DimensionMismatch("cone program: G/h do not match the cone dimensions");
  if (p.A.cols() != n && p.A.rows() > 0) throw DimensionMismatch("cone program: A has wrong column count");
  if (p.A.rows() != p.b.size()) throw DimensionMismatch("cone program: A/b row mismatch");
  for (Index d : p.dims.soc)
    if (d < 1) throw DimensionMismatch("cone program: empty second-order cone");
}

}  // namespace detail

inline ConeSolution solve_cone_program(const ConeProgram& prog, const ConeOptions& opt = {}) {
  detail::check_program(prog);
  const ConeDims& dims = prog.dims;
  const Index n = prog.c.size();
  const Index np = prog.b.size();
  const Index m = dims.size();
  const RMatrix A = np > 0 ? prog.A : RMatrix(0, n);
  const ConeProgram p{prog.c, prog.G, prog.h, A, prog.b, dims};
  const double nu = static_cast<double>(dims.degree());
  const RVector e = identity(dims);

  const double resx0 = std::max(1.0, p.c.norm());
  const double resy0 = std::max(1.0, p.b.norm());
  const double resz0 = std::max(1.0, p.h.norm());

  // Starting point: least-squares primal and minimum-norm dual, shifted into the cone interior.
  Scaling sc;
  sc.W = RMatrix::Identity(m, m);
  sc.Winv = RMatrix::Identity(m, m);
  sc.lambda = e;
  RVector x, y, z, s;
  {
    detail::KktSolver kkt(p, sc);
    RVector dz;
    kkt.solve(RVector::Zero(n), p.b, p.h, x, y, dz);
    s = -dz;
    RVector xd, yd;
    kkt.solve(-p.c, RVector::Zero(np), RVector::Zero(m), xd, y, z);
  }
  {
    const double ts = interior_shift(dims, s);
    if (ts >= -1e-8 * std::max(1.0, s.norm())) s += (1.0 + ts) * e;
    const double tz = interior_shift(dims, z);
    if (tz >= -1e-8 * std::max(1.0, z.norm())) z += (1.0 + tz) * e;
  }
  double tau = 1.0;
  double kappa = 1.0;

  ConeSolution best;
  double best_score = std::numeric_limits<double>::infinity();
  bool have_best = false;

  auto finish = [&](ConeStatus status, bool inaccurate, int iters, double pres, double dres, double gap) {
    ConeSolution out;
    out.status = status;
    out.iterations = iters;
    out.inaccurate = inaccurate;
    out.primal_residual = pres;
    out.dual_residual = dres;
    if (status == ConeStatus::Optimal) {
      out.x = x / tau;
      out.y = y / tau;
      out.z = z / tau;
      out.s = s / tau;
      out.gap = gap;
      out.primal_objective = p.c.dot(out.x);
      out.dual_objective = -(p.h.dot(out.z) + p.b.dot(out.y));
    } else if (status == ConeStatus::PrimalInfeasible) {
      const double scale = -(p.h.dot(z) + p.b.dot(y));
      out.y = y / scale;
      out.z = z / scale;
    } else {
      const double scale = -p.c.dot(x);
      out.x = x / scale;
      out.s = s / scale;
    }
    return out;
  };

  for (int iter = 0; iter <= opt.max_iterations; ++iter) {
    // Residuals of the embedding.
    const RVector hrx = -(A.transpose() * y) - p.G.transpose() * z;
    const RVector rx = p.c * tau - hrx;
    const RVector hry = A * x;
    const RVector ry = hry - p.b * tau;
    const RVector hrz = s + p.G * x;
    const RVector rz = hrz - p.h * tau;
    const double cx = p.c.dot(x);
    const double by = p.b.dot(y);
    const double hz = p.h.dot(z);
    const double rt = kappa + cx + by + hz;

    const double gap = s.dot(z) / (tau * tau);
    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;
    double relgap = std::numeric_limits<double>::infinity();
    if (pcost < 0.0) relgap = gap / -pcost;
    else if (dcost > 0.0) relgap = gap / dcost;
    const double pres = std::max(ry.norm() / tau / resy0, rz.norm() / tau / resz0);
    const double dres = rx.norm() / tau / resx0;
    const double pinfres =
        (hz + by < 0.0) ? hrx.norm() / resx0 / (-hz - by) : std::numeric_limits<double>::infinity();
    const double dinfres = (cx < 0.0) ? std::max(hry.norm() / resy0, hrz.norm() / resz0) / (-cx)
                                      : std::numeric_limits<double>::infinity();

    if (pres <= opt.feastol && dres <= opt.feastol && (gap <= opt.abstol || relgap <= opt.reltol))
      return finish(ConeStatus::Optimal, false, iter, pres, dres, gap);
    if (pinfres <= opt.feastol) return finish(ConeStatus::PrimalInfeasible, false, iter, pres, dres, gap);
    if (dinfres <= opt.feastol) return finish(ConeStatus::DualInfeasible, false, iter, pres, dres, gap);

    // Remember the best iterate for the reduced-accuracy exit.
    {
      const double score_opt = std::max({pres, dres, std::min(gap, relgap)});
      const double score = std::min({score_opt, pinfres, dinfres});
      if (score < best_score) {
        best_score = score;
        have_best = true;
        if (score == score_opt) best = finish(ConeStatus::Optimal, true, iter, pres, dres, gap);
        else if (score == pinfres) best = finish(ConeStatus::PrimalInfeasible, true, iter, pres, dres, gap);
        else best = finish(ConeStatus::DualInfeasible, true, iter, pres, dres, gap);
      }
    }
    if (iter == opt.max_iterations) break;

    if (!compute_scaling(dims, s, z, sc)) break;
    const RVector& lam = sc.lambda;
    const double mu = (s.dot(z) + tau * kappa) / (nu + 1.0);

    std::unique_ptr<detail::KktSolver> kkt;
    try {
      kkt = std::make_unique<detail::KktSolver>(p, sc);
    } catch (...) {
      break;
    }
    // Direction for the tau column: K u2 = (c, -b, -h).
    RVector x2, y2, z2;
    kkt->solve(p.c, -p.b, -p.h, x2, y2, z2);
    const double denom_base = p.c.dot(x2) + p.b.dot(y2) + p.h.dot(z2);

    struct Direction {
      RVector dx, dy, dz, ds;
      double dtau = 0.0, dkappa = 0.0;
    };
    auto newton = [&](double eta, const RVector& rc, double rk) {
      Direction d;
      const RVector lrc = inverse_product(dims, lam, rc);
      const RVector bz = -eta * rz - sc.W.transpose() * lrc;
      RVector x1, y1, z1;
      kkt->solve(-eta * rx, -eta * ry, bz, x1, y1, z1);
      const double rhs_t = -eta * rt;
      const double num = rk / tau + p.c.dot(x1) + p.b.dot(y1) + p.h.dot(z1) - rhs_t;
      const double den = kappa / tau + denom_base;
      d.dtau = num / den;
      d.dx = x1 - d.dtau * x2;
      d.dy = y1 - d.dtau * y2;
      d.dz = z1 - d.dtau * z2;
      d.ds = sc.W.transpose() * (lrc - sc.W * d.dz);
      d.dkappa = (rk - kappa * d.dtau) / tau;
      return d;
    };
    auto step_to_boundary = [&](const Direction& d) {
      double a = std::min(max_step(dims, s, d.ds), max_step(dims, z, d.dz));
      if (d.dtau < 0.0) a = std::min(a, -tau / d.dtau);
      if (d.dkappa < 0.0) a = std::min(a, -kappa / d.dkappa);
      return a;
    };

    // Predictor.
    const RVector ll = jordan_product(dims, lam, lam);
    const Direction aff = newton(1.0, -ll, -tau * kappa);
    const double a_aff = std::min(1.0, step_to_boundary(aff));
    const double sigma = std::clamp(std::pow(1.0 - a_aff, 3.0), 0.0, 1.0);

    // Corrector.
    const RVector ds_s = sc.Winv.transpose() * aff.ds;
    const RVector dz_s = sc.W * aff.dz;
    const RVector rc = -ll - jordan_product(dims, ds_s, dz_s) + sigma * mu * e;
    const double rk = -tau * kappa - aff.dtau * aff.dkappa + sigma * mu;
    const Direction d = newton(1.0 - sigma, rc, rk);
    const double amax = step_to_boundary(d);
    const double alpha = std::min(1.0, opt.step_fraction * amax);
    if (!(alpha > 1e-12) || !std::isfinite(d.dtau)) break;

    x += alpha * d.dx;
    y += alpha * d.dy;
    z += alpha * d.dz;
    s += alpha * d.ds;
    tau += alpha * d.dtau;
    kappa += alpha * d.dkappa;
    if (!(tau > 0.0) || !(kappa > 0.0)) break;
  }

  if (have_best && best_score <= opt.reduced_tol) return best;
  throw NumericalFailure("cone solver did not converge (best residual " + std::to_string(best_score) + ")");
}

}  // namespace igs::conic
