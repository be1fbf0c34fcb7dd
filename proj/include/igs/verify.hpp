#pragma once

// Standard oracle suites behind the `verify` subcommand.

#include <vector>

#include <json.hpp>

#include "igs/experiments.hpp"
#include "igs/oracle.hpp"

namespace igs {

struct VerifyConfig {
  std::uint64_t seed = 7;
  Index lemma_trials = 10000;
  Index theorem_trials = 10000;
  Index zf_instances = 100;
  Index grid_k2 = 50;
  Index grid_k3 = 20;
  Index resolution_k2 = 64;
  Index resolution_k3 = 32;
  double snr_db = 10.0;
  ExperimentParams params;
};

struct VerifyResult {
  std::vector<CheckReport> reports;
  Index violations() const {
    Index v = 0;
    for (const auto& r : reports) v += r.violations;
    return v;
  }
};

inline nlohmann::json to_json(const VerifyResult& r) {
  nlohmann::json j;
  j["violations"] = r.violations();
  j["reports"] = nlohmann::json::array();
  for (const auto& c : r.reports) j["reports"].push_back(to_json(c));
  return j;
}

namespace detail {

struct SolvedInstance {
  ChannelSet ch;
  ReducedProblem rp;
  RegionPoint pt;
};

inline SolvedInstance solve_instance(Index K, Index M, std::uint64_t seed, const VerifyConfig& cfg) {
  const auto ch = generate_iid(K, M, seed);
  const auto P = PowerBudget::per_transmitter(K, snr_db_to_power(cfg.snr_db));
  const RateProfile alpha = RateProfile::uniform(K);
  const auto proper = solve_rate_profile_proper(ch, alpha, P, cfg.params.proper);
  PseudoOptions po = cfg.params.pseudo;
  po.seed = mix_seed(seed, 1);
  const auto imp = optimize_pseudo(ch, alpha, proper.beamformers, po);
  RegionPoint pt;
  pt.alpha = alpha;
  pt.r_star = proper.r_star;
  pt.R_star = imp.R_star;
  pt.tau_sdr = imp.sdr.tau_sdr;
  pt.tau_hat = imp.sdr.tau_hat;
  pt.tight = imp.sdr.tight;
  return {ch, imp.reduced, pt};
}

}  // namespace detail

/// Grid-oracle equivalence: K = 2 two-sided certificate, K = 3 one-sided with a 1e-2 allowance.
inline std::vector<CheckReport> verify_grid(const VerifyConfig& cfg, CheckReport& improvement) {
  CheckReport k2{"grid_k2"}, k2dom{"grid_dominance"}, k3{"grid_k3"};
  struct Row {
    double tau_hat, tau_sdr, tau_bf, slack, imp;
  };
  auto run = [&](Index K, Index n, Index res, std::uint64_t tag) {
    std::vector<Row> rows(static_cast<std::size_t>(n));
    parallel_for(rows.size(), cfg.params.jobs, [&](std::size_t i) {
      const auto inst = detail::solve_instance(K, 1 + static_cast<Index>(i % 2), mix_seed(mix_seed(cfg.seed, tag), i), cfg);
      const auto g = grid_oracle_pseudo(inst.rp, res);
      rows[i] = {inst.pt.tau_hat, inst.pt.tau_sdr, g.tau_bf, g.slack, inst.pt.R_star - inst.pt.r_star};
    });
    return rows;
  };
  for (const auto& r : run(2, cfg.grid_k2, cfg.resolution_k2, 2)) {
    k2.record(r.slack - std::abs(r.tau_hat - r.tau_bf), "K=2: |tau_hat - tau_bf| exceeds the grid slack");
    k2dom.record(r.tau_sdr + 1e-6 - r.tau_bf, "tau_bf exceeds tau_sdr");
    improvement.record(r.imp + 1e-9, "R_star below r_star");
  }
  for (const auto& r : run(3, cfg.grid_k3, cfg.resolution_k3, 3)) {
    k3.record(r.tau_hat - (r.tau_bf - 1e-2), "K=3: tau_hat below tau_bf - 1e-2");
    k2dom.record(r.tau_sdr + 1e-6 - r.tau_bf, "tau_bf exceeds tau_sdr");
    improvement.record(r.imp + 1e-9, "R_star below r_star");
  }
  return {k2, k2dom, k3};
}

inline CheckReport verify_lemma1(const VerifyConfig& cfg) {
  CheckReport total{"lemma1"};
  const Index blocks = 30;
  const Index per = (cfg.lemma_trials + blocks - 1) / blocks;
  std::vector<CheckReport> parts(static_cast<std::size_t>(blocks));
  parallel_for(parts.size(), cfg.params.jobs, [&](std::size_t b) {
    std::mt19937_64 rng(mix_seed(mix_seed(cfg.seed, 10), b));
    const Index M = 2 + static_cast<Index>(b % 3);
    CVector t = detail::random_cvector(M, rng) * std::sqrt(1.0 + 9.0 * std::uniform_real_distribution<double>()(rng));
    const Index n = std::min(per, cfg.lemma_trials - static_cast<Index>(b) * per);
    parts[b] = n > 0 ? check_lemma1(t, n, mix_seed(cfg.seed, 100 + b)) : CheckReport{"lemma1"};
  });
  for (const auto& p : parts) total.merge(p);
  return total;
}

inline CheckReport verify_theorem1(const VerifyConfig& cfg) {
  CheckReport total{"theorem1"};
  const Index channels = 100;
  const Index per = (cfg.theorem_trials + channels - 1) / channels;
  std::vector<CheckReport> parts(static_cast<std::size_t>(channels));
  parallel_for(parts.size(), cfg.params.jobs, [&](std::size_t c) {
    const Index K = 2 + static_cast<Index>(c % 3);
    const Index M = 1 + static_cast<Index>((c / 3) % 2);
    const auto seed = mix_seed(mix_seed(cfg.seed, 20), c);
    const auto ch = generate_iid(K, M, seed);
    // Random beamformers inside the power budget exercise more of the statistic space than optimal ones.
    std::mt19937_64 rng(mix_seed(seed, 1));
    BeamformerSet t;
    for (Index k = 0; k < K; ++k)
      t.t.push_back(detail::random_cvector(M, rng) * std::sqrt(snr_db_to_power(cfg.snr_db)));
    const auto cov = make_covariances(t);
    const auto st = received_stats(ch, cov, PseudoCovarianceSet::zeros(K, M));
    const auto rp = reduce(t, ch, st, RateProfile::uniform(K));
    const Index n = std::min(per, cfg.theorem_trials - static_cast<Index>(c) * per);
    parts[c] = n > 0 ? check_theorem1(rp, n, mix_seed(seed, 2)) : CheckReport{"theorem1"};
  });
  for (const auto& p : parts) total.merge(p);
  return total;
}

inline CheckReport verify_zf(const VerifyConfig& cfg) {
  CheckReport total{"zf"};
  std::vector<ZfCheck> parts(static_cast<std::size_t>(cfg.zf_instances));
  parallel_for(parts.size(), cfg.params.jobs, [&](std::size_t i) {
    const Index K = 2 + static_cast<Index>(i % 2);
    const Index M = K + static_cast<Index>((i / 2) % 2);
    const auto ch = generate_iid(K, M, mix_seed(mix_seed(cfg.seed, 30), i));
    parts[i] = check_zf(ch, PowerBudget::per_transmitter(K, snr_db_to_power(cfg.snr_db)), cfg.params.pseudo);
  });
  for (const auto& p : parts) total.merge(p.report);
  return total;
}

inline VerifyResult run_verification(const VerifyConfig& cfg) {
  VerifyResult out;
  CheckReport improvement{"improvement"};
  for (auto& r : verify_grid(cfg, improvement)) out.reports.push_back(std::move(r));
  out.reports.push_back(verify_lemma1(cfg));
  out.reports.push_back(verify_theorem1(cfg));
  out.reports.push_back(verify_zf(cfg));
  out.reports.push_back(std::move(improvement));
  return out;
}

}  // namespace igs
