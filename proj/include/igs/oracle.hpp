#pragma once

// Brute-force and analytic checks of the pseudo-covariance stage.

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "igs/channel.hpp"
#include "igs/common.hpp"
#include "igs/pseudo.hpp"
#include "igs/signaling.hpp"

namespace igs {

struct CheckReport {
  std::string check;
  Index trials = 0;
  Index violations = 0;
  /// Smallest margin seen (negative means violated); for agreement checks, the closest call.
  double worst_slack = std::numeric_limits<double>::infinity();
  std::vector<std::string> notes;  // first few disagreements

  CheckReport() = default;
  explicit CheckReport(std::string name) : check(std::move(name)) {}

  void record(double slack, const std::string& what = {}) {
    ++trials;
    worst_slack = std::min(worst_slack, slack);
    if (slack < 0.0) fail(what);
  }
  void fail(const std::string& what) {
    ++violations;
    if (notes.size() < 5 && !what.empty()) notes.push_back(what);
  }
  void merge(const CheckReport& o) {
    trials += o.trials;
    violations += o.violations;
    worst_slack = std::min(worst_slack, o.worst_slack);
    for (const auto& n : o.notes)
      if (notes.size() < 5) notes.push_back(n);
  }
};

inline nlohmann::json to_json(const CheckReport& r) {
  nlohmann::json j;
  j["check"] = r.check;
  j["trials"] = r.trials;
  j["violations"] = r.violations;
  j["worst_slack"] = std::isfinite(r.worst_slack) ? nlohmann::json(r.worst_slack) : nlohmann::json(nullptr);
  if (!r.notes.empty()) j["notes"] = r.notes;
  return j;
}

// ---------------------------------------------------------------------------------------------
// Grid oracle for the reduced problem
// ---------------------------------------------------------------------------------------------

struct GridOracleResult {
  double tau_bf = 0.0;
  CVector z_bf;
  /// Largest objective change between the best grid point and its grid neighbours.
  double slack = 0.0;
  std::uint64_t evaluations = 0;
};

/// Exhaustive polar grid over each z_k (|z_k| in [0, caps_k], phase in [0, 2 pi)). The objective is
/// invariant under a common phase rotation, so the first active coordinate keeps phase 0.
inline GridOracleResult grid_oracle_pseudo(const ReducedProblem& rp, Index resolution) {
  const Index K = rp.users();
  if (K > 3) throw PreconditionError("grid oracle supports K <= 3");
  if (resolution < 32) throw PreconditionError("grid oracle needs resolution >= 32");

  // Per-coordinate candidate lists and their (magnitude, phase) grid indices.
  struct Axis {
    std::vector<Complex> values;
    Index mags = 1, phases = 1;
  };
  std::vector<Axis> axes(static_cast<std::size_t>(K));
  bool phase_fixed = false;
  for (Index k = 0; k < K; ++k) {
    Axis& a = axes[static_cast<std::size_t>(k)];
    if (rp.caps(k) <= 0.0) {
      a.values = {Complex(0.0)};
      continue;
    }
    a.mags = resolution;
    a.phases = phase_fixed ? resolution : 1;
    phase_fixed = true;
    for (Index p = 0; p < a.phases; ++p)
      for (Index r = 0; r < a.mags; ++r) {
        const double mag = rp.caps(k) * static_cast<double>(r) / static_cast<double>(resolution - 1);
        const double ph = 2.0 * M_PI * static_cast<double>(p) / static_cast<double>(resolution);
        a.values.push_back(std::polar(mag, ph));
      }
  }

  // Precomputed conj(m_k(j)) * value and conj(w_k(j)) * value for every coordinate j.
  std::vector<std::vector<std::vector<Complex>>> mterm(static_cast<std::size_t>(K)), wterm(static_cast<std::size_t>(K));
  for (Index j = 0; j < K; ++j) {
    const auto& vals = axes[static_cast<std::size_t>(j)].values;
    for (Index k = 0; k < K; ++k) {
      std::vector<Complex> mt, wt;
      for (const Complex& v : vals) {
        mt.push_back(std::conj(rp.m[static_cast<std::size_t>(k)](j)) * v);
        wt.push_back(std::conj(rp.w[static_cast<std::size_t>(k)](j)) * v);
      }
      mterm[static_cast<std::size_t>(j)].push_back(std::move(mt));
      wterm[static_cast<std::size_t>(j)].push_back(std::move(wt));
    }
  }

  auto eval = [&](const std::vector<Index>& idx) {
    double v = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < K; ++k) {
      Complex sm = 0.0, sw = 0.0;
      for (Index j = 0; j < K; ++j) {
        sm += mterm[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
        sw += wterm[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)][static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])];
      }
      const double num = 1.0 - std::norm(sm);
      const double den = 1.0 - std::norm(sw);
      v = std::min(v, 0.5 * std::log2(num / den) / rp.alpha[k]);
    }
    return v;
  };

  GridOracleResult out;
  out.z_bf = CVector::Zero(K);
  std::vector<Index> idx(static_cast<std::size_t>(K), 0), best = idx;
  double best_v = eval(idx);
  ++out.evaluations;
  // Odometer over all coordinates.
  while (true) {
    Index k = 0;
    while (k < K) {
      auto& i = idx[static_cast<std::size_t>(k)];
      if (++i < static_cast<Index>(axes[static_cast<std::size_t>(k)].values.size())) break;
      i = 0;
      ++k;
    }
    if (k == K) break;
    const double v = eval(idx);
    ++out.evaluations;
    if (v > best_v) {
      best_v = v;
      best = idx;
    }
  }
  out.tau_bf = best_v;
  for (Index k = 0; k < K; ++k)
    out.z_bf(k) = axes[static_cast<std::size_t>(k)].values[static_cast<std::size_t>(best[static_cast<std::size_t>(k)])];

  // Neighbourhood variation in (magnitude, phase) index space; phases wrap around.
  std::vector<std::pair<Index, Index>> dims;  // (coordinate, 0 = magnitude / 1 = phase)
  for (Index k = 0; k < K; ++k) {
    if (axes[static_cast<std::size_t>(k)].mags > 1) dims.push_back({k, 0});
    if (axes[static_cast<std::size_t>(k)].phases > 1) dims.push_back({k, 1});
  }
  const Index D = static_cast<Index>(dims.size());
  Index combos = 1;
  for (Index d = 0; d < D; ++d) combos *= 3;
  for (Index c = 0; c < combos; ++c) {
    std::vector<Index> nb = best;
    Index code = c;
    bool inside = true;
    for (Index d = 0; d < D && inside; ++d) {
      const Index step = code % 3 - 1;
      code /= 3;
      if (step == 0) continue;
      const auto [k, kind] = dims[static_cast<std::size_t>(d)];
      const Axis& a = axes[static_cast<std::size_t>(k)];
      const Index flat = nb[static_cast<std::size_t>(k)];
      Index r = flat % a.mags, p = flat / a.mags;
      if (kind == 0) {
        r += step;
        if (r < 0 || r >= a.mags) inside = false;
      } else {
        p = (p + step + a.phases) % a.phases;
      }
      nb[static_cast<std::size_t>(k)] = p * a.mags + r;
    }
    if (!inside) continue;
    out.slack = std::max(out.slack, std::abs(eval(nb) - best_v));
  }
  return out;
}

// ---------------------------------------------------------------------------------------------
// Rank-1 covariance pair characterization
// ---------------------------------------------------------------------------------------------

struct Lemma1Form {
  bool structured = false;  // C~ = Z t~ t~^T up to rounding
  Complex Z = 0.0;
};

/// Recovers Z = t~^H C~ t~^* and checks C~ against the rank-1 symmetric form.
inline Lemma1Form lemma1_form(const CVector& t, const CMatrix& Ct) {
  const double nrm = t.norm();
  Lemma1Form f;
  if (nrm == 0.0) {
    f.structured = Ct.cwiseAbs().maxCoeff() == 0.0;
    return f;
  }
  const CVector tt = t / nrm;
  f.Z = (tt.adjoint() * Ct * tt.conjugate())(0);
  const double resid = (Ct - f.Z * tt * tt.transpose()).norm();
  f.structured = resid <= 1e-9 * std::max(1.0, nrm * nrm);
  return f;
}

namespace detail {

inline CVector random_cvector(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  CVector v(n);
  for (Index i = 0; i < n; ++i) v(i) = Complex(g(rng), g(rng));
  return v;
}

inline CMatrix random_csym(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix S(n, n);
  for (Index i = 0; i < S.size(); ++i) S.data()[i] = Complex(g(rng), g(rng));
  return 0.5 * (S + S.transpose());
}

}  // namespace detail

/// Samples pseudo-covariances against C = t t^H and, for general covariances, against random
/// full-rank pairs; every trial must make the eigenvalue test, the block conditions and (for
/// rank-1 C) the |Z| <= ||t||^2 characterization agree.
inline CheckReport check_lemma1(const CVector& t, Index trials, std::uint64_t seed) {
  CheckReport rep;
  rep.check = "lemma1";
  const Index M = t.size();
  const double p = t.squaredNorm();
  if (p <= 0.0) throw PreconditionError("check_lemma1: t must be nonzero");
  const CMatrix C = t * t.adjoint();
  const CVector tt = t / t.norm();
  std::uniform_real_distribution<double> u(0.0, 1.0);

  for (Index trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    const int kind = static_cast<int>(trial % 4);
    ++rep.trials;
    if (kind <= 2) {
      CMatrix Ct;
      bool expected = false;
      if (kind == 0) {
        // Structured form; keep away from the cap boundary where rounding decides.
        double ratio = 1.2 * u(rng);
        if (std::abs(ratio - 1.0) < 1e-6) ratio = 0.5;
        Ct = std::polar(ratio * p, 2.0 * M_PI * u(rng)) * tt * tt.transpose();
        expected = ratio <= 1.0;
      } else if (kind == 1) {
        // t~ v^T + v t~^T with v not parallel to t~: symmetric but outside the range condition.
        CVector v = detail::random_cvector(M, rng);
        v -= tt * tt.adjoint() * v;
        Ct = 0.5 * p * u(rng) * (tt * v.transpose() + v * tt.transpose()) / std::max(v.norm(), 1e-300);
        expected = false;
      } else {
        Ct = (0.1 + u(rng)) * p * detail::random_csym(M, rng) / static_cast<double>(M);
        expected = false;
      }
      const bool a = validate_pair(C, Ct).valid;
      const bool b = validate_pair_block_conditions(C, Ct);
      const auto f = lemma1_form(t, Ct);
      const bool c = f.structured && std::abs(f.Z) <= p * (1.0 + 1e-12);
      if (a != expected || b != expected || c != expected)
        rep.fail("trial " + std::to_string(trial) + ": eig=" + std::to_string(a) + " blocks=" + std::to_string(b) +
                 " form=" + std::to_string(c) + " expected=" + std::to_string(expected));
      if (kind == 0) rep.worst_slack = std::min(rep.worst_slack, std::abs(std::abs(f.Z) / p - 1.0));
    } else {
      // General covariance: a valid pair from a real 2M-dimensional covariance, then a perturbation.
      std::normal_distribution<double> g;
      RMatrix L(2 * M, 2 * M);
      for (Index i = 0; i < L.size(); ++i) L.data()[i] = g(rng);
      const RMatrix R = L * L.transpose() / static_cast<double>(2 * M);
      const RMatrix Raa = R.topLeftCorner(M, M), Rbb = R.bottomRightCorner(M, M);
      const RMatrix Rab = R.topRightCorner(M, M), Rba = R.bottomLeftCorner(M, M);
      CMatrix Cg(M, M), Ctg(M, M);
      for (Index i = 0; i < M; ++i)
        for (Index j = 0; j < M; ++j) {
          Cg(i, j) = Complex(Raa(i, j) + Rbb(i, j), Rba(i, j) - Rab(i, j));
          Ctg(i, j) = Complex(Raa(i, j) - Rbb(i, j), Rba(i, j) + Rab(i, j));
        }
      Ctg = 0.5 * (Ctg + Ctg.transpose()).eval();
      const bool a0 = validate_pair(Cg, Ctg).valid;
      const bool b0 = validate_pair_block_conditions(Cg, Ctg);
      if (!a0 || !b0) rep.fail("trial " + std::to_string(trial) + ": constructed general pair rejected");
      const CMatrix Ctp = Ctg + (0.05 + 2.0 * u(rng)) * detail::random_csym(M, rng);
      const auto v = validate_pair(Cg, Ctp);
      if (std::abs(v.min_eigenvalue) > 1e-6 * Cg.trace().real()) {
        const bool b1 = validate_pair_block_conditions(Cg, Ctp);
        if (v.valid != b1) rep.fail("trial " + std::to_string(trial) + ": perturbed general pair disagreement");
      }
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Reduced-constraint bounds
// ---------------------------------------------------------------------------------------------

/// Random PSD Z with Z_kk <= caps_k^2 (rejection sampling on a scaled Gram matrix); reduced-constraint
/// bounds on every sample and the rank-1 bound chain on every sample's principal part.
inline CheckReport check_theorem1(const ReducedProblem& rp, Index trials, std::uint64_t seed) {
  CheckReport rep;
  rep.check = "theorem1";
  const Index K = rp.users();
  const double s2 = rp.noise_variance;
  std::uniform_real_distribution<double> u(0.0, 1.2);
  for (Index trial = 0; trial < trials; ++trial) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(trial)));
    CMatrix G(K, K);
    RVector scale(K);
    bool accepted = false;
    while (!accepted) {
      for (Index k = 0; k < K; ++k) {
        const CVector row = detail::random_cvector(K, rng);
        G.row(k) = row.transpose() / std::max(row.norm(), 1e-300);
        scale(k) = u(rng);
      }
      accepted = scale.maxCoeff() <= 1.0;
    }
    // Rank varies with the trial; unit rows put every diagonal entry at (caps_k * scale_k)^2.
    const Index rank = trial % K + 1;
    const CMatrix Gn = G.leftCols(rank).rowwise().normalized();
    const RVector d = rp.caps.cwiseProduct(scale);
    CMatrix Z = d.asDiagonal() * (Gn * Gn.adjoint()) * d.asDiagonal();
    Z = conic::hermitian_part(Z);
    rep.record(theorem1_margin(rp, Z) + 1e-9, "trial " + std::to_string(trial) + ": reduced-constraint bound fails");

    // Bound chain for a rank-1 z inside the caps.
    CVector z(K);
    std::uniform_real_distribution<double> ph(0.0, 2.0 * M_PI);
    for (Index k = 0; k < K; ++k) z(k) = std::polar(rp.caps(k) * scale(k), ph(rng));
    for (Index k = 0; k < K; ++k) {
      const auto i = static_cast<std::size_t>(k);
      const double cs = rp.stats.Cs[i];
      double weighted = 0.0, capped = 0.0;
      for (Index j = 0; j < K; ++j) {
        if (j == k) continue;
        const double a = std::abs(rp.w[i](j)) * cs;  // |h_kj t~_j|^2
        weighted += a * std::abs(z(j));
        capped += a * rp.caps(j);
      }
      const double lhs = std::norm(rp.w[i].dot(z));
      const double step1 = weighted * weighted / (cs * cs);
      const double step2 = capped * capped / (cs * cs);
      const double step3 = 1.0 - s2 * s2 / (cs * cs);
      const double tol = 1e-12;
      const double margin = std::min({step1 - lhs, step2 - step1, step3 - step2}) + tol;
      rep.worst_slack = std::min(rep.worst_slack, margin);
      if (margin < 0.0) rep.fail("trial " + std::to_string(trial) + ": bound chain breaks for user " + std::to_string(k));
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------------------------
// Zero forcing
// ---------------------------------------------------------------------------------------------

/// Beamformers with h_jk t_k = 0 for j != k along the projected MRT direction, at full power
/// (sum power split equally).
inline BeamformerSet zf_beamformers(const ChannelSet& ch, const PowerBudget& P) {
  const Index K = ch.users();
  const Index M = ch.antennas();
  if (M < K) throw PreconditionError("zero forcing needs at least as many antennas as users");
  P.check_users(K);
  BeamformerSet t;
  for (Index k = 0; k < K; ++k) {
    CMatrix A(K - 1, M);
    Index r = 0;
    for (Index j = 0; j < K; ++j)
      if (j != k) A.row(r++) = ch.h(j, k).transpose();
    CVector v = ch.h(k, k).conjugate();
    if (K > 1) {
      const CMatrix gram = A * A.adjoint();
      v -= A.adjoint() * gram.ldlt().solve(A * v);
    }
    const double pk = P.mode() == PowerMode::SumPower ? P.total() / static_cast<double>(K) : P.user_cap(k);
    const double nrm = v.norm();
    if (!(nrm > 0.0)) throw NumericalFailure("zero-forcing direction vanished for user " + std::to_string(k));
    t.t.push_back(v * (std::sqrt(pk) / nrm));
  }
  return t;
}

struct ZfCheck {
  CheckReport report;
  double max_w_norm = 0.0;
  double delta_R = 0.0;  // R_star - proper profile value
};

inline ZfCheck check_zf(const ChannelSet& ch, const PowerBudget& P, const PseudoOptions& opt = {}) {
  ZfCheck out;
  out.report.check = "zf";
  const Index K = ch.users();
  const auto t = zf_beamformers(ch, P);
  const RateProfile alpha = RateProfile::uniform(K);
  const auto sol = optimize_pseudo(ch, alpha, t, opt);
  for (const auto& w : sol.reduced.w) out.max_w_norm = std::max(out.max_w_norm, w.norm());
  const auto cov = make_covariances(t);
  const auto st0 = received_stats(ch, cov, PseudoCovarianceSet::zeros(K, ch.antennas()));
  const double proper = profile_value(proper_rates(st0, ch, cov), alpha);
  out.delta_R = sol.R_star - proper;
  out.report.record(1e-10 - out.max_w_norm, "w_k is not zero under zero forcing");
  out.report.worst_slack = std::min(out.report.worst_slack, 1e-9 - out.delta_R);
  if (out.delta_R > 1e-9) out.report.fail("zero forcing left an improper gain");
  return out;
}

}  // namespace igs
