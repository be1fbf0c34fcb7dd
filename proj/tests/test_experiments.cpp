#include <gtest/gtest.h>

#include <atomic>
#include <sstream>

#include "igs/experiments.hpp"

using namespace igs;

TEST(ProfileGrid, TwoUserGridExcludesEndpoints) {
  const auto g = profile_grid(2, 3, 1);
  ASSERT_EQ(g.size(), 3u);
  EXPECT_DOUBLE_EQ(g[0][0], 0.25);
  EXPECT_DOUBLE_EQ(g[1][0], 0.5);
  EXPECT_DOUBLE_EQ(g[2][1], 0.25);
  EXPECT_DOUBLE_EQ(profile_grid(2, 1, 1)[0][0], 0.5);
  EXPECT_THROW(profile_grid(2, 0, 1), PreconditionError);
}

TEST(ProfileGrid, ManyUserProfilesAreDeterministic) {
  const auto a = profile_grid(4, 5, 7);
  const auto b = profile_grid(4, 5, 7);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].values(), b[i].values());
    for (double v : a[i].values()) EXPECT_GT(v, 0.0);
  }
}

TEST(Aggregation, MeanStdAndPairwiseSum) {
  const std::vector<double> x{1.0, 2.0, 3.0, 4.0};
  const auto ms = mean_std(x);
  EXPECT_DOUBLE_EQ(ms.mean, 2.5);
  EXPECT_DOUBLE_EQ(ms.std, std::sqrt(1.25));
  EXPECT_TRUE(std::isnan(mean_std({}).mean));
  std::vector<double> big(1000, 0.1);
  EXPECT_NEAR(pairwise_sum(big.data(), big.size()), 100.0, 1e-12);
}

TEST(Aggregation, ParallelForCoversEveryIndexAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw NumericalFailure("boom");
                            }),
               NumericalFailure);
}

TEST(SummarizeRatios, ExclusionRules) {
  std::vector<RatioSample> s{{0.0, 0.0, true, 1.0, 1.0},
                             {1e-7, 0.0, true, 1.0, 1.0},
                             {0.5, 0.0, false, 1.0, 1.0},
                             {0.4, 0.4, true, 1.0, 1.2},
                             {0.6, 0.3, false, 1.0, 1.1}};
  const auto row = summarize_ratios(3, 1, 10.0, s, 1e-6);
  EXPECT_EQ(row.realizations, 5);
  EXPECT_EQ(row.excluded, 2);
  EXPECT_EQ(row.zero_hat, 1);
  EXPECT_EQ(row.included, 2);
  EXPECT_DOUBLE_EQ(row.mean, 1.5);
  EXPECT_DOUBLE_EQ(row.std, 0.5);
  EXPECT_DOUBLE_EQ(row.tight_fraction, 0.6);
  EXPECT_DOUBLE_EQ(row.worst_improvement, 0.0);
}

TEST(Region, SingleProfileMatchesMaxMin) {
  const auto [ch, P] = fixture("H1");
  ExperimentParams params;
  const auto pts = sweep_region(ch, P, 1, params);
  ASSERT_EQ(pts.size(), 1u);
  const auto mm = maxmin_proper(ch, P, params.proper);
  EXPECT_DOUBLE_EQ(pts[0].r_star / 2.0, mm.rate);
  EXPECT_GE(pts[0].R_star, pts[0].r_star - 1e-9);
}

TEST(Region, FixtureSweepEnclosesProperAndIsParetoConsistent) {
  const auto [ch, P] = fixture("H1");
  ExperimentParams params;
  const auto pts = sweep_region(ch, P, 9, params);
  ASSERT_EQ(pts.size(), 9u);
  for (const auto& p : pts) {
    EXPECT_GE(p.R_star, p.r_star - 1e-9);
    EXPECT_GE(profile_value(p.improper_rates, p.alpha), p.r_star - 1e-9);
    EXPECT_LE(p.tau_hat, p.tau_sdr + 1e-6);
  }
  const double tol = 2.0 * params.proper.tol;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      if (i == j) continue;
      const auto& a = pts[i].proper_rates;
      const auto& b = pts[j].proper_rates;
      EXPECT_FALSE(a[0] > b[0] + tol && a[1] > b[1] + tol) << i << " dominates " << j;
    }
}

TEST(Region, JobsDoNotChangeResults) {
  const auto [ch, P] = fixture("H1");
  ExperimentParams one, three;
  three.jobs = 3;
  const auto a = sweep_region(ch, P, 5, one);
  const auto b = sweep_region(ch, P, 5, three);
  EXPECT_EQ(region_proper_csv(a), region_proper_csv(b));
  EXPECT_EQ(region_improper_csv(a), region_improper_csv(b));
}

TEST(BcRegion, PreconditionsAndSymmetricUsers) {
  const auto [ic, Pic] = fixture("H1");
  ExperimentParams params;
  EXPECT_THROW(bc_region(ic, Pic, 3, params), PreconditionError);
  const auto [bc, Pbc] = fixture("BC-FIG6");
  EXPECT_THROW(bc_region(bc, PowerBudget::per_transmitter(2, 10.0), 3, params), PreconditionError);

  CVector h(2);
  h << Complex(0.8, 0.3), Complex(-0.2, 1.1);
  const auto sym = ChannelSet::broadcast({h, h}, 1.0);
  const auto pts = bc_region(sym, PowerBudget::sum_power(10.0), 1, params);
  EXPECT_NEAR(pts[0].proper_rates[0], pts[0].proper_rates[1], 1e-3);
  const auto mm = maxmin_proper(sym, PowerBudget::sum_power(10.0), params.proper);
  const auto& t = mm.solution.beamformers;
  EXPECT_NEAR(t.power(0), t.power(1), 1e-2 * 10.0);
  EXPECT_DOUBLE_EQ(pts[0].r_star / 2.0, mm.rate);
}

TEST(MaxMinCurve, SingleRealizationIsReproducible) {
  ExperimentParams params;
  const auto a = maxmin_curve(2, 1, {10.0}, 1, params);
  const auto b = maxmin_curve(2, 1, {10.0}, 1, params);
  EXPECT_EQ(maxmin_csv(a), maxmin_csv(b));
  ASSERT_EQ(a.size(), 1u);
  EXPECT_GE(a[0].improper_mean, a[0].proper_mean - 1e-9);
  EXPECT_EQ(a[0].proper_std, 0.0);
  EXPECT_THROW(maxmin_curve(2, 1, {10.0}, 0, params), PreconditionError);
}

TEST(MaxMinCurve, SamplesShareChannelsAcrossSnr) {
  ExperimentParams params;
  const auto lo = maxmin_samples(2, 1, 0.0, 3, params);
  const auto hi = maxmin_samples(2, 1, 20.0, 3, params);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_GE(hi[r].proper, lo[r].proper - 1e-4);
}

TEST(ApproxRatio, TwoUserRowIsTight) {
  ExperimentParams params;
  const auto rows = approx_ratio_table({{2, 1}}, 10.0, 10, params);
  ASSERT_EQ(rows.size(), 1u);
  const auto& r = rows[0];
  EXPECT_EQ(r.included + r.excluded + r.zero_hat, 10);
  EXPECT_DOUBLE_EQ(r.tight_fraction, 1.0);
  if (r.included > 0) {
    EXPECT_NEAR(r.mean, 1.0, 1e-4);
    EXPECT_LE(r.std, 1e-4);
  }
  EXPECT_GE(r.worst_improvement, -1e-9);
}

TEST(Csv, Schemas) {
  RegionPoint p;
  p.alpha = RateProfile::pair(0.5);
  p.proper_rates = {1.0, 1.0};
  p.improper_rates = {1.5, 1.5};
  p.r_star = 2.0;
  p.R_star = 3.0;
  const std::string pr = region_proper_csv({p});
  const std::string ir = region_improper_csv({p});
  EXPECT_EQ(pr.substr(0, pr.find('\n')), "profile,alpha_1,alpha_2,r_star,R_1,R_2");
  EXPECT_EQ(ir.substr(0, ir.find('\n')), "profile,alpha_1,alpha_2,R_star,R_1,R_2,tau_sdr,tau_hat,tight");
  EXPECT_EQ(maxmin_csv({}), "snr_db,realizations,proper_mean,improper_mean,proper_std,improper_std\n");
  EXPECT_EQ(approx_ratio_csv({}), "K,M,snr_db,realizations,included,excluded,zero_hat,mean,std,tight_fraction\n");
  std::istringstream in(ir);
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_EQ(row, "0,0.5,0.5,3,1.5,1.5,0,0,1");
}
