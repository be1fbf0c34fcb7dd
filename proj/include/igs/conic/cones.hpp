#pragma once

// Symmetric-cone algebra for products of nonnegative orthants, second-order cones and real PSD cones.
//
// Vectors are laid out as [orthant | soc_1 | ... | psd_1 | ...]; PSD blocks use the scaled lower-triangular
// vectorization (svec) so that plain dot products equal trace inner products.

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "igs/common.hpp"

namespace igs::conic {

enum class ConeKind { Orthant, SecondOrder, Semidefinite };

struct ConeBlock {
  ConeKind kind;
  Index offset;
  Index dim;
  Index order;  // matrix order for PSD blocks, dim otherwise
};

struct ConeDims {
  Index orthant = 0;
  std::vector<Index> soc;
  std::vector<Index> psd;

  Index size() const {
    Index n = orthant;
    for (Index d : soc) n += d;
    for (Index p : psd) n += p * (p + 1) / 2;
    return n;
  }

  /// Barrier degree: one per orthant entry and per SOC, the order of each PSD block.
  Index degree() const {
    Index d = orthant + static_cast<Index>(soc.size());
    for (Index p : psd) d += p;
    return d;
  }

  std::vector<ConeBlock> blocks() const {
    std::vector<ConeBlock> out;
    Index off = 0;
    if (orthant > 0) {
      out.push_back({ConeKind::Orthant, off, orthant, orthant});
      off += orthant;
    }
    for (Index d : soc) {
      out.push_back({ConeKind::SecondOrder, off, d, d});
      off += d;
    }
    for (Index p : psd) {
      const Index d = p * (p + 1) / 2;
      out.push_back({ConeKind::Semidefinite, off, d, p});
      off += d;
    }
    return out;
  }
};

inline constexpr double kSqrt2 = 1.41421356237309504880;

inline RVector svec(const RMatrix& x) {
  const Index n = x.rows();
  RVector v(n * (n + 1) / 2);
  Index k = 0;
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) v(k++) = (i == j) ? x(i, i) : kSqrt2 * 0.5 * (x(i, j) + x(j, i));
  return v;
}

inline RMatrix smat(const Eigen::Ref<const RVector>& v, Index n) {
  RMatrix x(n, n);
  Index k = 0;
  for (Index j = 0; j < n; ++j)
    for (Index i = j; i < n; ++i) {
      if (i == j) {
        x(i, i) = v(k++);
      } else {
        x(i, j) = x(j, i) = v(k++) / kSqrt2;
      }
    }
  return x;
}

inline RVector identity(const ConeDims& dims) {
  RVector e = RVector::Zero(dims.size());
  for (const auto& b : dims.blocks()) {
    switch (b.kind) {
      case ConeKind::Orthant:
        e.segment(b.offset, b.dim).setOnes();
        break;
      case ConeKind::SecondOrder:
        e(b.offset) = 1.0;
        break;
      case ConeKind::Semidefinite:
        e.segment(b.offset, b.dim) = svec(RMatrix::Identity(b.order, b.order));
        break;
    }
  }
  return e;
}

/// Jordan product u o v.
inline RVector jordan_product(const ConeDims& dims, const RVector& u, const RVector& v) {
  RVector out(u.size());
  for (const auto& b : dims.blocks()) {
    const auto us = u.segment(b.offset, b.dim);
    const auto vs = v.segment(b.offset, b.dim);
    switch (b.kind) {
      case ConeKind::Orthant:
        out.segment(b.offset, b.dim) = us.cwiseProduct(vs);
        break;
      case ConeKind::SecondOrder:
        out(b.offset) = us.dot(vs);
        out.segment(b.offset + 1, b.dim - 1) = us(0) * vs.tail(b.dim - 1) + vs(0) * us.tail(b.dim - 1);
        break;
      case ConeKind::Semidefinite: {
        const RMatrix U = smat(us, b.order);
        const RMatrix V = smat(vs, b.order);
        out.segment(b.offset, b.dim) = svec(0.5 * (U * V + V * U));
        break;
      }
    }
  }
  return out;
}

/// Solves lambda o u = v for u, where lambda is a scaled point (PSD blocks of lambda are diagonal).
inline RVector inverse_product(const ConeDims& dims, const RVector& lambda, const RVector& v) {
  RVector out(v.size());
  for (const auto& b : dims.blocks()) {
    const auto ls = lambda.segment(b.offset, b.dim);
    const auto vs = v.segment(b.offset, b.dim);
    switch (b.kind) {
      case ConeKind::Orthant:
        out.segment(b.offset, b.dim) = vs.cwiseQuotient(ls);
        break;
      case ConeKind::SecondOrder: {
        const double l0 = ls(0);
        const auto l1 = ls.tail(b.dim - 1);
        const double det = l0 * l0 - l1.squaredNorm();
        const double u0 = (l0 * vs(0) - l1.dot(vs.tail(b.dim - 1))) / det;
        out(b.offset) = u0;
        out.segment(b.offset + 1, b.dim - 1) = (vs.tail(b.dim - 1) - u0 * l1) / l0;
        break;
      }
      case ConeKind::Semidefinite: {
        const RMatrix L = smat(ls, b.order);
        RMatrix V = smat(vs, b.order);
        for (Index j = 0; j < b.order; ++j)
          for (Index i = 0; i < b.order; ++i) V(i, j) *= 2.0 / (L(i, i) + L(j, j));
        out.segment(b.offset, b.dim) = svec(V);
        break;
      }
    }
  }
  return out;
}

/// Largest alpha with x + alpha * dx in the cone (x interior); +inf when unbounded.
inline double max_step(const ConeDims& dims, const RVector& x, const RVector& dx) {
  double alpha = std::numeric_limits<double>::infinity();
  for (const auto& b : dims.blocks()) {
    const auto xs = x.segment(b.offset, b.dim);
    const auto ds = dx.segment(b.offset, b.dim);
    switch (b.kind) {
      case ConeKind::Orthant:
        for (Index i = 0; i < b.dim; ++i)
          if (ds(i) < 0.0) alpha = std::min(alpha, -xs(i) / ds(i));
        break;
      case ConeKind::SecondOrder: {
        // First positive root of (x0 + a d0)^2 - |x1 + a d1|^2.
        const double qa = ds(0) * ds(0) - ds.tail(b.dim - 1).squaredNorm();
        const double qb = xs(0) * ds(0) - xs.tail(b.dim - 1).dot(ds.tail(b.dim - 1));
        const double qc = std::max(xs(0) * xs(0) - xs.tail(b.dim - 1).squaredNorm(), 0.0);
        double root = std::numeric_limits<double>::infinity();
        const double disc = qb * qb - qa * qc;
        if (std::abs(qa) < 1e-300) {
          if (qb < 0.0) root = -qc / (2.0 * qb);
        } else if (disc >= 0.0) {
          const double sq = std::sqrt(disc);
          // Numerically stable pair of roots.
          const double q = -(qb + std::copysign(sq, qb));
          const double r1 = q / qa;
          const double r2 = (q != 0.0) ? qc / q : std::numeric_limits<double>::infinity();
          for (double r : {r1, r2})
            if (r > 0.0) root = std::min(root, r);
        }
        // Leaving through the apex side (x0 + a d0 < 0) always crosses a root first; guard anyway.
        if (ds(0) < 0.0) root = std::min(root, -xs(0) / ds(0));
        alpha = std::min(alpha, root);
        break;
      }
      case ConeKind::Semidefinite: {
        const RMatrix X = smat(xs, b.order);
        const RMatrix D = smat(ds, b.order);
        Eigen::SelfAdjointEigenSolver<RMatrix> ex(X);
        const RVector inv_sqrt = ex.eigenvalues().cwiseMax(1e-300).cwiseSqrt().cwiseInverse();
        const RMatrix T = inv_sqrt.asDiagonal() * ex.eigenvectors().transpose();
        const RMatrix S = T * D * T.transpose();
        Eigen::SelfAdjointEigenSolver<RMatrix> es(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
        const double lmin = es.eigenvalues().minCoeff();
        if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
        break;
      }
    }
  }
  return alpha;
}

/// Smallest t with x + t e in the closed cone, i.e. minus the most negative "eigenvalue" of x.
inline double interior_shift(const ConeDims& dims, const RVector& x) {
  double t = -std::numeric_limits<double>::infinity();
  for (const auto& b : dims.blocks()) {
    const auto xs = x.segment(b.offset, b.dim);
    switch (b.kind) {
      case ConeKind::Orthant:
        t = std::max(t, -xs.minCoeff());
        break;
      case ConeKind::SecondOrder:
        t = std::max(t, xs.tail(b.dim - 1).norm() - xs(0));
        break;
      case ConeKind::Semidefinite: {
        Eigen::SelfAdjointEigenSolver<RMatrix> e(smat(xs, b.order), Eigen::EigenvaluesOnly);
        t = std::max(t, -e.eigenvalues().minCoeff());
        break;
      }
    }
  }
  return t;
}

/// Nesterov-Todd scaling: W z = W^{-T} s = lambda. W and its inverse are stored densely (problems are tiny).
struct Scaling {
  RMatrix W;
  RMatrix Winv;
  RVector lambda;

  /// W^T W.
  RMatrix gram() const { return W.transpose() * W; }
};

/// Returns false when s or z is not in the interior of its cone.
inline bool compute_scaling(const ConeDims& dims, const RVector& s, const RVector& z, Scaling& out) {
  const Index m = dims.size();
  out.W = RMatrix::Zero(m, m);
  out.Winv = RMatrix::Zero(m, m);
  out.lambda = RVector::Zero(m);
  for (const auto& b : dims.blocks()) {
    const auto ss = s.segment(b.offset, b.dim);
    const auto zs = z.segment(b.offset, b.dim);
    auto W = out.W.block(b.offset, b.offset, b.dim, b.dim);
    auto Wi = out.Winv.block(b.offset, b.offset, b.dim, b.dim);
    switch (b.kind) {
      case ConeKind::Orthant:
        for (Index i = 0; i < b.dim; ++i) {
          if (!(ss(i) > 0.0) || !(zs(i) > 0.0)) return false;
          const double w = std::sqrt(ss(i) / zs(i));
          W(i, i) = w;
          Wi(i, i) = 1.0 / w;
          out.lambda(b.offset + i) = std::sqrt(ss(i) * zs(i));
        }
        break;
      case ConeKind::SecondOrder: {
        const Index n = b.dim;
        const double sres = ss(0) * ss(0) - ss.tail(n - 1).squaredNorm();
        const double zres = zs(0) * zs(0) - zs.tail(n - 1).squaredNorm();
        if (!(sres > 0.0) || !(zres > 0.0) || ss(0) <= 0.0 || zs(0) <= 0.0) return false;
        const RVector sb = ss / std::sqrt(sres);
        const RVector zb = zs / std::sqrt(zres);
        const double gamma = std::sqrt(0.5 * (1.0 + sb.dot(zb)));
        RVector wb(n);
        wb(0) = (sb(0) + zb(0)) / (2.0 * gamma);
        wb.tail(n - 1) = (sb.tail(n - 1) - zb.tail(n - 1)) / (2.0 * gamma);
        const double eta = std::pow(sres / zres, 0.25);
        RMatrix H(n, n);
        H(0, 0) = wb(0);
        H.block(0, 1, 1, n - 1) = wb.tail(n - 1).transpose();
        H.block(1, 0, n - 1, 1) = wb.tail(n - 1);
        H.block(1, 1, n - 1, n - 1) =
            RMatrix::Identity(n - 1, n - 1) + wb.tail(n - 1) * wb.tail(n - 1).transpose() / (1.0 + wb(0));
        W = eta * H;
        RMatrix Hinv = H;
        Hinv.block(0, 1, 1, n - 1) *= -1.0;
        Hinv.block(1, 0, n - 1, 1) *= -1.0;
        Wi = Hinv / eta;
        out.lambda.segment(b.offset, n) = W * zs;
        break;
      }
      case ConeKind::Semidefinite: {
        const Index p = b.order;
        Eigen::LLT<RMatrix> ls(smat(ss, p));
        Eigen::LLT<RMatrix> lz(smat(zs, p));
        if (ls.info() != Eigen::Success || lz.info() != Eigen::Success) return false;
        const RMatrix Ls = ls.matrixL();
        const RMatrix Lz = lz.matrixL();
        Eigen::JacobiSVD<RMatrix> svd(Lz.transpose() * Ls, Eigen::ComputeFullU | Eigen::ComputeFullV);
        const RVector sig = svd.singularValues();
        if (!(sig.minCoeff() > 0.0)) return false;
        // R^T Z R = Lambda = R^{-1} S R^{-T}.
        const RMatrix R = Ls * svd.matrixV() * sig.cwiseSqrt().cwiseInverse().asDiagonal();
        const RMatrix Rinv = sig.cwiseSqrt().cwiseInverse().asDiagonal() * svd.matrixU().transpose() * Lz.transpose();
        // svec-matrices of u -> R^T u R and of its inverse u -> R^{-T} u R^{-1}.
        for (Index c = 0; c < b.dim; ++c) {
          RVector e = RVector::Zero(b.dim);
          e(c) = 1.0;
          const RMatrix U = smat(e, p);
          W.col(c) = svec(R.transpose() * U * R);
          Wi.col(c) = svec(Rinv.transpose() * U * Rinv);
        }
        out.lambda.segment(b.offset, b.dim) = svec(sig.asDiagonal().toDenseMatrix());
        break;
      }
    }
  }
  return true;
}

}  // namespace igs::conic
