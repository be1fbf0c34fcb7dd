#pragma once

// Experiment protocols: rate-region sweeps, max-min curves and approximation-ratio tables.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "igs/channel.hpp"
#include "igs/common.hpp"
#include "igs/proper.hpp"
#include "igs/pseudo.hpp"
#include "igs/signaling.hpp"

namespace igs {

struct ExperimentParams {
  ProperOptions proper;
  PseudoOptions pseudo;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  /// Realizations with tau_sdr below this are left out of ratio statistics.
  double ratio_floor = 1e-6;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads; the first exception (lowest index) is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn&& fn) {
  if (n == 0) return;
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(n)));
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Pairwise summation in index order.
inline double pairwise_sum(const double* x, std::size_t n) {
  if (n == 0) return 0.0;
  if (n <= 8) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i];
    return s;
  }
  const std::size_t h = n / 2;
  return pairwise_sum(x, h) + pairwise_sum(x + h, n - h);
}

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

/// Mean and population standard deviation.
inline MeanStd mean_std(const std::vector<double>& x) {
  MeanStd r;
  if (x.empty()) return {std::nan(""), std::nan("")};
  const double n = static_cast<double>(x.size());
  r.mean = pairwise_sum(x.data(), x.size()) / n;
  std::vector<double> sq;
  for (double v : x) sq.push_back((v - r.mean) * (v - r.mean));
  r.std = std::sqrt(pairwise_sum(sq.data(), sq.size()) / n);
  return r;
}

// ---------------------------------------------------------------------------------------------
// Full pipeline on one profile
// ---------------------------------------------------------------------------------------------

struct RegionPoint {
  RateProfile alpha = RateProfile::uniform(1);
  std::vector<double> proper_rates;
  std::vector<double> improper_rates;
  double r_star = 0.0;
  double R_star = 0.0;
  double tau_sdr = 0.0;
  double tau_hat = 0.0;
  bool tight = true;
};

/// Proper beamforming, then pseudo-covariance optimization; seed drives the randomization stream.
inline RegionPoint run_profile(const ChannelSet& ch, const PowerBudget& P, const RateProfile& alpha,
                               const ExperimentParams& params, std::uint64_t seed) {
  RegionPoint pt;
  pt.alpha = alpha;
  const auto proper = solve_rate_profile_proper(ch, alpha, P, params.proper);
  pt.r_star = proper.r_star;
  pt.proper_rates = beamformer_rates(ch, proper.beamformers);
  PseudoOptions po = params.pseudo;
  po.seed = seed;
  const auto imp = optimize_pseudo(ch, alpha, proper.beamformers, po);
  pt.improper_rates = imp.rates;
  pt.R_star = imp.R_star;
  pt.tau_sdr = imp.sdr.tau_sdr;
  pt.tau_hat = imp.sdr.tau_hat;
  pt.tight = imp.sdr.tight;
  return pt;
}

/// Profile grid: (a, 1 - a) with a = i / (n + 1) for K = 2; Dirichlet(1) draws for K > 2.
inline std::vector<RateProfile> profile_grid(Index K, Index n_profiles, std::uint64_t seed) {
  if (n_profiles < 1) throw PreconditionError("need at least one rate profile");
  std::vector<RateProfile> out;
  if (K == 1) {
    out.push_back(RateProfile::uniform(1));
    return out;
  }
  if (K == 2) {
    for (Index i = 1; i <= n_profiles; ++i)
      out.push_back(RateProfile::pair(static_cast<double>(i) / static_cast<double>(n_profiles + 1)));
    return out;
  }
  for (Index i = 0; i < n_profiles; ++i) {
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(i)));
    std::exponential_distribution<double> e(1.0);
    std::vector<double> a(static_cast<std::size_t>(K));
    double s = 0.0;
    for (auto& v : a) s += (v = e(rng) + 1e-12);
    for (auto& v : a) v /= s;
    double tail = 0.0;
    for (std::size_t k = 0; k + 1 < a.size(); ++k) tail += a[k];
    a.back() = 1.0 - tail;
    out.push_back(RateProfile(a));
  }
  return out;
}

inline std::vector<RegionPoint> sweep_region(const ChannelSet& ch, const PowerBudget& P, Index n_profiles,
                                             const ExperimentParams& params) {
  const auto profiles = profile_grid(ch.users(), n_profiles, params.seed);
  std::vector<RegionPoint> pts(profiles.size());
  parallel_for(profiles.size(), params.jobs, [&](std::size_t i) {
    pts[i] = run_profile(ch, P, profiles[i], params, mix_seed(params.seed, i));
  });
  return pts;
}

inline std::vector<RegionPoint> bc_region(const ChannelSet& ch, const PowerBudget& P, Index n_profiles,
                                          const ExperimentParams& params) {
  if (ch.topology() != Topology::BroadcastChannel) throw PreconditionError("bc_region needs a broadcast channel");
  if (P.mode() != PowerMode::SumPower) throw PreconditionError("bc_region needs a sum-power budget");
  return sweep_region(ch, P, n_profiles, params);
}

// ---------------------------------------------------------------------------------------------
// Max-min curves
// ---------------------------------------------------------------------------------------------

struct MaxMinRow {
  double snr_db = 0.0;
  Index realizations = 0;
  double proper_mean = 0.0;
  double improper_mean = 0.0;
  double proper_std = 0.0;
  double improper_std = 0.0;
};

/// Seed of realization r; channels are shared across SNR points.
inline std::uint64_t realization_seed(std::uint64_t seed, Index K, Index M, Index r) {
  return mix_seed(mix_seed(seed, static_cast<std::uint64_t>(K * 1000 + M)), static_cast<std::uint64_t>(r));
}

/// Per-realization max-min rates (proper, improper) at one SNR.
struct MaxMinSample {
  double proper = 0.0;
  double improper = 0.0;
  double r_star = 0.0;
  double R_star = 0.0;
};

inline std::vector<MaxMinSample> maxmin_samples(Index K, Index M, double snr_db, Index n_realizations,
                                                const ExperimentParams& params) {
  std::vector<MaxMinSample> out(static_cast<std::size_t>(n_realizations));
  const RateProfile alpha = RateProfile::uniform(K);
  const auto P = PowerBudget::per_transmitter(K, snr_db_to_power(snr_db));
  parallel_for(out.size(), params.jobs, [&](std::size_t r) {
    const auto s = realization_seed(params.seed, K, M, static_cast<Index>(r));
    const auto ch = generate_iid(K, M, s);
    const auto pt = run_profile(ch, P, alpha, params, mix_seed(s, 1));
    out[r] = {pt.r_star / static_cast<double>(K), pt.R_star / static_cast<double>(K), pt.r_star, pt.R_star};
  });
  return out;
}

inline std::vector<MaxMinRow> maxmin_curve(Index K, Index M, const std::vector<double>& snr_list_db,
                                           Index n_realizations, const ExperimentParams& params) {
  if (K < 1 || M < 1 || n_realizations < 1) throw PreconditionError("maxmin_curve: K, M and realizations must be >= 1");
  std::vector<MaxMinRow> rows;
  for (double snr : snr_list_db) {
    const auto s = maxmin_samples(K, M, snr, n_realizations, params);
    std::vector<double> p, q;
    for (const auto& v : s) {
      p.push_back(v.proper);
      q.push_back(v.improper);
    }
    const auto ps = mean_std(p), qs = mean_std(q);
    rows.push_back({snr, n_realizations, ps.mean, qs.mean, ps.std, qs.std});
  }
  return rows;
}

// ---------------------------------------------------------------------------------------------
// Approximation ratio table
// ---------------------------------------------------------------------------------------------

struct RatioSample {
  double tau_sdr = 0.0;
  double tau_hat = 0.0;
  bool tight = true;
  double r_star = 0.0;
  double R_star = 0.0;
};

struct ApproxRatioRow {
  Index K = 0, M = 0;
  double snr_db = 0.0;
  Index realizations = 0;
  Index included = 0;
  Index excluded = 0;   // tau_sdr below the floor
  Index zero_hat = 0;   // tau_sdr above the floor but randomization found no gain (ratio undefined)
  double mean = 0.0;
  double std = 0.0;
  double tight_fraction = 0.0;
  double worst_improvement = 0.0;  // min over realizations of R_star - r_star
};

inline std::vector<RatioSample> ratio_samples(Index K, Index M, double snr_db, Index n_realizations,
                                              const ExperimentParams& params) {
  std::vector<RatioSample> out(static_cast<std::size_t>(n_realizations));
  const RateProfile alpha = RateProfile::uniform(K);
  const auto P = PowerBudget::per_transmitter(K, snr_db_to_power(snr_db));
  parallel_for(out.size(), params.jobs, [&](std::size_t r) {
    const auto s = realization_seed(params.seed, K, M, static_cast<Index>(r));
    const auto ch = generate_iid(K, M, s);
    const auto pt = run_profile(ch, P, alpha, params, mix_seed(s, 1));
    out[r] = {pt.tau_sdr, pt.tau_hat, pt.tight, pt.r_star, pt.R_star};
  });
  return out;
}

inline ApproxRatioRow summarize_ratios(Index K, Index M, double snr_db, const std::vector<RatioSample>& s,
                                       double floor) {
  ApproxRatioRow row;
  row.K = K;
  row.M = M;
  row.snr_db = snr_db;
  row.realizations = static_cast<Index>(s.size());
  std::vector<double> ratios;
  Index tight = 0;
  row.worst_improvement = std::numeric_limits<double>::infinity();
  for (const auto& v : s) {
    row.worst_improvement = std::min(row.worst_improvement, v.R_star - v.r_star);
    if (v.tight) ++tight;
    if (v.tau_sdr < floor) {
      ++row.excluded;
    } else if (!(v.tau_hat > 0.0)) {
      ++row.zero_hat;
    } else {
      ratios.push_back(v.tau_sdr / v.tau_hat);
    }
  }
  row.included = static_cast<Index>(ratios.size());
  const auto ms = mean_std(ratios);
  row.mean = ms.mean;
  row.std = ms.std;
  row.tight_fraction = s.empty() ? 0.0 : static_cast<double>(tight) / static_cast<double>(s.size());
  return row;
}

inline std::vector<ApproxRatioRow> approx_ratio_table(const std::vector<std::pair<Index, Index>>& pairs, double snr_db,
                                                      Index n_realizations, const ExperimentParams& params) {
  std::vector<ApproxRatioRow> rows;
  for (const auto& [K, M] : pairs) {
    if (K < 1 || M < 1) throw PreconditionError("approx_ratio_table: K and M must be >= 1");
    rows.push_back(summarize_ratios(K, M, snr_db, ratio_samples(K, M, snr_db, n_realizations, params),
                                    params.ratio_floor));
  }
  return rows;
}

// ---------------------------------------------------------------------------------------------
// CSV output
// ---------------------------------------------------------------------------------------------

namespace detail {

inline std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write " + path);
  f << text;
}

}  // namespace detail

/// profile,alpha_1..alpha_K,r_star,R_1..R_K
inline std::string region_proper_csv(const std::vector<RegionPoint>& pts) {
  if (pts.empty()) return "profile\n";
  const Index K = pts.front().alpha.size();
  std::string s = "profile";
  for (Index k = 1; k <= K; ++k) s += ",alpha_" + std::to_string(k);
  s += ",r_star";
  for (Index k = 1; k <= K; ++k) s += ",R_" + std::to_string(k);
  s += "\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += std::to_string(i);
    for (Index k = 0; k < K; ++k) s += "," + detail::fmt(pts[i].alpha[k]);
    s += "," + detail::fmt(pts[i].r_star);
    for (double r : pts[i].proper_rates) s += "," + detail::fmt(r);
    s += "\n";
  }
  return s;
}

/// profile,alpha_1..alpha_K,R_star,R_1..R_K,tau_sdr,tau_hat,tight
inline std::string region_improper_csv(const std::vector<RegionPoint>& pts) {
  if (pts.empty()) return "profile\n";
  const Index K = pts.front().alpha.size();
  std::string s = "profile";
  for (Index k = 1; k <= K; ++k) s += ",alpha_" + std::to_string(k);
  s += ",R_star";
  for (Index k = 1; k <= K; ++k) s += ",R_" + std::to_string(k);
  s += ",tau_sdr,tau_hat,tight\n";
  for (std::size_t i = 0; i < pts.size(); ++i) {
    s += std::to_string(i);
    for (Index k = 0; k < K; ++k) s += "," + detail::fmt(pts[i].alpha[k]);
    s += "," + detail::fmt(pts[i].R_star);
    for (double r : pts[i].improper_rates) s += "," + detail::fmt(r);
    s += "," + detail::fmt(pts[i].tau_sdr) + "," + detail::fmt(pts[i].tau_hat) + "," + (pts[i].tight ? "1" : "0");
    s += "\n";
  }
  return s;
}

/// snr_db,realizations,proper_mean,improper_mean,proper_std,improper_std
inline std::string maxmin_csv(const std::vector<MaxMinRow>& rows) {
  std::string s = "snr_db,realizations,proper_mean,improper_mean,proper_std,improper_std\n";
  for (const auto& r : rows)
    s += detail::fmt(r.snr_db) + "," + std::to_string(r.realizations) + "," + detail::fmt(r.proper_mean) + "," +
         detail::fmt(r.improper_mean) + "," + detail::fmt(r.proper_std) + "," + detail::fmt(r.improper_std) + "\n";
  return s;
}

/// K,M,snr_db,realizations,included,excluded,zero_hat,mean,std,tight_fraction
inline std::string approx_ratio_csv(const std::vector<ApproxRatioRow>& rows) {
  std::string s = "K,M,snr_db,realizations,included,excluded,zero_hat,mean,std,tight_fraction\n";
  for (const auto& r : rows)
    s += std::to_string(r.K) + "," + std::to_string(r.M) + "," + detail::fmt(r.snr_db) + "," +
         std::to_string(r.realizations) + "," + std::to_string(r.included) + "," + std::to_string(r.excluded) + "," +
         std::to_string(r.zero_hat) + "," + detail::fmt(r.mean) + "," + detail::fmt(r.std) + "," +
         detail::fmt(r.tight_fraction) + "\n";
  return s;
}

}  // namespace igs
