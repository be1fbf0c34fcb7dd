#pragma once

// Slow, independently coded reference evaluations used only by the tests.

#include <cmath>
#include <random>
#include <vector>

#include "igs/channel.hpp"
#include "igs/signaling.hpp"

namespace igs::oracle {

inline std::mt19937_64 rng_for(std::uint64_t seed) { return std::mt19937_64(seed); }

inline Complex cn(std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  const double re = g(rng);
  return {re, g(rng)};
}

inline CVector cn_vector(Index n, std::mt19937_64& rng) {
  CVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = cn(rng);
  return v;
}

inline CMatrix cn_matrix(Index r, Index c, std::mt19937_64& rng) {
  CMatrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = cn(rng);
  return m;
}

/// Received statistics evaluated entry by entry: sum_{a,b} h_a X_ab conj(h_b) and sum_{a,b} h_a X~_ab h_b.
struct EntryStats {
  std::vector<double> Cy, Cs;
  std::vector<Complex> Cy_t, Cs_t;
};

inline EntryStats entry_stats(const ChannelSet& ch, const std::vector<CMatrix>& C, const std::vector<CMatrix>& Ct) {
  EntryStats s;
  const Index K = ch.users(), M = ch.antennas();
  for (Index k = 0; k < K; ++k) {
    double cy = ch.noise_variance(), cs = ch.noise_variance();
    Complex cyt = 0.0, cst = 0.0;
    for (Index j = 0; j < K; ++j) {
      double p = 0.0;
      Complex q = 0.0;
      for (Index a = 0; a < M; ++a)
        for (Index b = 0; b < M; ++b) {
          p += (ch.h(k, j)(a) * C[j](a, b) * std::conj(ch.h(k, j)(b))).real();
          q += ch.h(k, j)(a) * Ct[j](a, b) * ch.h(k, j)(b);
        }
      cy += p;
      cyt += q;
      if (j != k) {
        cs += p;
        cst += q;
      }
    }
    s.Cy.push_back(cy);
    s.Cs.push_back(cs);
    s.Cy_t.push_back(cyt);
    s.Cs_t.push_back(cst);
  }
  return s;
}

/// Rate of user k from entry statistics: log2 det of the 2x2 real covariances of y and s.
/// A zero-mean complex scalar with variance c and pseudo-variance p has real covariance
/// [[c + Re p, Im p], [Im p, c - Re p]] / 2, and the rate is 1/2 log2(det_y / det_s).
inline double entry_rate(const EntryStats& s, Index k) {
  auto det = [](double c, Complex p) { return (c * c - std::norm(p)) / 4.0; };
  return 0.5 * std::log2(det(s.Cy[k], s.Cy_t[k]) / det(s.Cs[k], s.Cs_t[k]));
}

/// A random valid (C, C~) pair from a widely linear map x = F g + G conj(g), g ~ CN(0, I_r).
struct RandomPair {
  CMatrix C, Ct;
};

inline RandomPair widely_linear_pair(Index M, Index r, std::mt19937_64& rng) {
  const CMatrix F = cn_matrix(M, r, rng);
  const CMatrix G = cn_matrix(M, r, rng);
  return {F * F.adjoint() + G * G.adjoint(), F * G.transpose() + G * F.transpose()};
}

/// Max-min rate of a two-user SISO interference channel by a square grid over (p1, p2) in [0, P]^2.
inline double siso_maxmin_grid(const ChannelSet& ch, double P, Index n) {
  const double g11 = std::norm(ch.h(0, 0)(0)), g12 = std::norm(ch.h(0, 1)(0));
  const double g21 = std::norm(ch.h(1, 0)(0)), g22 = std::norm(ch.h(1, 1)(0));
  const double s = ch.noise_variance();
  double best = 0.0;
  for (Index a = 0; a <= n; ++a)
    for (Index b = 0; b <= n; ++b) {
      const double p1 = P * static_cast<double>(a) / static_cast<double>(n);
      const double p2 = P * static_cast<double>(b) / static_cast<double>(n);
      const double r1 = std::log2(1.0 + g11 * p1 / (s + g12 * p2));
      const double r2 = std::log2(1.0 + g22 * p2 / (s + g21 * p1));
      best = std::max(best, std::min(r1, r2));
    }
  return best;
}

/// Proper rate of user k from its SINR, coded directly from the beamformers.
inline double sinr_rate(const ChannelSet& ch, const BeamformerSet& t, Index k) {
  double interf = ch.noise_variance();
  for (Index j = 0; j < ch.users(); ++j)
    if (j != k) interf += std::norm(Complex(ch.h(k, j).transpose() * t.t[j]));
  return std::log2(1.0 + std::norm(Complex(ch.h(k, k).transpose() * t.t[k])) / interf);
}

/// Two-user max-min power control for fixed unit directions: the balanced point with one user at full power.
inline double balanced_rate(double a11, double a12, double a21, double a22, double P, double s) {
  // p1 = P, equalize: a22 a12 p2^2 + a22 s p2 - a11 P (s + a21 P) = 0.
  auto root = [](double a, double b, double c) { return -2.0 * c / (b + std::sqrt(b * b - 4.0 * a * c)); };
  double p1 = P, p2 = root(a22 * a12, a22 * s, -a11 * P * (s + a21 * P));
  if (!(p2 <= P)) {
    p2 = P;
    p1 = root(a11 * a21, a11 * s, -a22 * P * (s + a12 * P));
  }
  const double r1 = std::log2(1.0 + a11 * p1 / (s + a12 * p2));
  const double r2 = std::log2(1.0 + a22 * p2 / (s + a21 * p1));
  return std::min(r1, r2);
}

/// Per-user max-min proper rate of a two-user MISO interference channel (per-transmitter power P).
/// Directions sweep the MRT/ZF family normalize(l * w_mrt + (1 - l) * w_zf); the grid over (l1, l2)
/// is refined around its best point.
inline double miso_maxmin_grid(const ChannelSet& ch, double P, Index n = 201, int zooms = 6) {
  const double s = ch.noise_variance();
  CVector mrt[2], zf[2];
  for (Index k = 0; k < 2; ++k) {
    const Index j = 1 - k;
    const CVector d = ch.h(k, k).conjugate();
    const CVector g = ch.h(j, k).conjugate().normalized();
    mrt[k] = d.normalized();
    const CVector z = d - g * g.dot(d);
    zf[k] = z.norm() > 1e-14 ? CVector(z.normalized()) : mrt[k];
  }
  auto dir = [&](Index k, double l) -> CVector { return (l * mrt[k] + (1.0 - l) * zf[k]).normalized(); };
  auto value = [&](double l1, double l2) {
    const CVector w1 = dir(0, l1), w2 = dir(1, l2);
    const double a11 = std::norm(Complex(ch.h(0, 0).transpose() * w1));
    const double a12 = std::norm(Complex(ch.h(0, 1).transpose() * w2));
    const double a21 = std::norm(Complex(ch.h(1, 0).transpose() * w1));
    const double a22 = std::norm(Complex(ch.h(1, 1).transpose() * w2));
    return balanced_rate(a11, a12, a21, a22, P, s);
  };
  double lo1 = 0.0, hi1 = 1.0, lo2 = 0.0, hi2 = 1.0, best = -1.0, b1 = 0.0, b2 = 0.0;
  for (int z = 0; z <= zooms; ++z) {
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const double l1 = lo1 + (hi1 - lo1) * static_cast<double>(i) / static_cast<double>(n - 1);
        const double l2 = lo2 + (hi2 - lo2) * static_cast<double>(j) / static_cast<double>(n - 1);
        const double v = value(l1, l2);
        if (v > best) {
          best = v;
          b1 = l1;
          b2 = l2;
        }
      }
    const double w1 = 4.0 * (hi1 - lo1) / static_cast<double>(n - 1);
    const double w2 = 4.0 * (hi2 - lo2) / static_cast<double>(n - 1);
    lo1 = std::max(0.0, b1 - w1);
    hi1 = std::min(1.0, b1 + w1);
    lo2 = std::max(0.0, b2 - w2);
    hi2 = std::min(1.0, b2 + w2);
  }
  return best;
}

}  // namespace igs::oracle
