#include <gtest/gtest.h>

#include "igs/oracle.hpp"
#include "igs/proper.hpp"
#include "oracles.hpp"

using namespace igs;

namespace {

ReducedProblem reduced_for(const ChannelSet& ch, const BeamformerSet& t) {
  const auto st = received_stats(ch, t, PseudoCovarianceSet::zeros(ch.users(), ch.antennas()));
  return reduce(t, ch, st, RateProfile::uniform(ch.users()));
}

ReducedProblem proper_reduced(const ChannelSet& ch, double P) {
  const auto sol = maxmin_proper(ch, PowerBudget::per_transmitter(ch.users(), P));
  return reduced_for(ch, sol.solution.beamformers);
}

}  // namespace

TEST(GridOracle, ZeroForcingOptimumIsZero) {
  const auto ch = generate_iid(2, 2, 4);
  const auto rp = reduced_for(ch, zf_beamformers(ch, PowerBudget::per_transmitter(2, 10.0)));
  const auto g = grid_oracle_pseudo(rp, 32);
  EXPECT_EQ(g.tau_bf, 0.0);
  EXPECT_EQ(g.z_bf.norm(), 0.0);
}

TEST(GridOracle, Preconditions) {
  const auto ch = generate_iid(4, 1, 1);
  const auto rp = proper_reduced(ch, 10.0);
  EXPECT_THROW(grid_oracle_pseudo(rp, 32), PreconditionError);
  const auto rp2 = proper_reduced(generate_iid(2, 1, 1), 10.0);
  EXPECT_THROW(grid_oracle_pseudo(rp2, 16), PreconditionError);
}

TEST(GridOracle, TwoUserAgreesWithPipeline) {
  int positive = 0;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto ch = generate_iid(2, 1, 60 + s);
    const auto rp = proper_reduced(ch, 10.0);
    const auto sdr = solve_sdr(rp);
    std::mt19937_64 rng(1);
    const auto rnd = randomize(rp, sdr.Z, 1000, rng, sdr.tight);
    const auto g = grid_oracle_pseudo(rp, 48);
    EXPECT_LE(std::abs(rnd.tau_hat - g.tau_bf), g.slack + 1e-9) << s;
    EXPECT_LE(g.tau_bf, sdr.tau_sdr + 1e-6) << s;
    if (g.tau_bf > 0.0) ++positive;
  }
  EXPECT_GT(positive, 0);
}

TEST(GridOracle, FixtureTightFromBothSides) {
  const auto [ch, P] = fixture("H1");
  const auto sol = solve_rate_profile_proper(ch, RateProfile::pair(0.5), P);
  const auto st = received_stats(ch, sol.beamformers, PseudoCovarianceSet::zeros(2, 2));
  const auto rp = reduce(sol.beamformers, ch, st, RateProfile::pair(0.5));
  const auto g = grid_oracle_pseudo(rp, 64);
  const auto sdr = solve_sdr(rp);
  EXPECT_NEAR(g.tau_bf, sdr.tau_sdr, 1e-2);
  EXPECT_NEAR(objective(rp, g.z_bf), g.tau_bf, 1e-12);
}

TEST(GridOracle, ThreeUserGridIsDominatedBySdr) {
  const auto rp = proper_reduced(generate_iid(3, 1, 8), 10.0);
  const auto g = grid_oracle_pseudo(rp, 32);
  const auto sdr = solve_sdr(rp);
  EXPECT_LE(g.tau_bf, sdr.tau_sdr + 1e-6);
}

TEST(CovariancePair, CapBoundaryExamples) {
  std::mt19937_64 rng(3);
  const CVector t = oracle::cn_vector(3, rng);
  const CVector u = t.normalized();
  const CMatrix C = t * t.adjoint();
  EXPECT_TRUE(validate_pair(C, 0.999 * t.squaredNorm() * u * u.transpose()).valid);
  const auto f = lemma1_form(t, 0.999 * t.squaredNorm() * u * u.transpose());
  EXPECT_TRUE(f.structured);
  EXPECT_NEAR(std::abs(f.Z), 0.999 * t.squaredNorm(), 1e-12);

  CVector v = oracle::cn_vector(3, rng);
  v -= u * u.adjoint() * v;
  const CMatrix Ct = 0.1 * (u * v.transpose() + v * u.transpose());
  EXPECT_FALSE(validate_pair(C, Ct).valid);
  EXPECT_FALSE(lemma1_form(t, Ct).structured);
}

TEST(CovariancePair, RandomTrialsAgree) {
  for (Index M = 2; M <= 4; ++M) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(M));
    const auto rep = check_lemma1(oracle::cn_vector(M, rng), 800, 10 + static_cast<std::uint64_t>(M));
    EXPECT_EQ(rep.trials, 800);
    EXPECT_EQ(rep.violations, 0) << (rep.notes.empty() ? "" : rep.notes.front());
  }
  EXPECT_THROW(check_lemma1(CVector::Zero(2), 1, 1), PreconditionError);
}

TEST(ReducedBounds, ZeroAndCornerMatrices) {
  const auto rp = proper_reduced(generate_iid(3, 2, 2), 10.0);
  EXPECT_GT(theorem1_margin(rp, CMatrix::Zero(3, 3)), 0.0);
  const CMatrix corner = rp.caps.cwiseAbs2().cast<Complex>().asDiagonal();
  EXPECT_GE(theorem1_margin(rp, corner), -1e-9);
}

TEST(ReducedBounds, RandomFeasibleMatricesObeyBounds) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Index K = 2 + s % 3;
    const auto ch = generate_iid(K, 1 + s % 2, 30 + s);
    std::mt19937_64 rng(s);
    BeamformerSet t;
    for (Index k = 0; k < K; ++k) t.t.push_back(3.0 * oracle::cn_vector(ch.antennas(), rng));
    const auto rep = check_theorem1(reduced_for(ch, t), 300, s);
    EXPECT_EQ(rep.violations, 0) << (rep.notes.empty() ? "" : rep.notes.front());
    EXPECT_EQ(rep.trials, 300);
  }
}

TEST(ZeroForcing, InvariantHolds) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const Index K = 2 + s % 2, M = K == 2 ? 2 : 4;
    const auto ch = generate_iid(K, M, 80 + s);
    const auto z = check_zf(ch, PowerBudget::per_transmitter(K, 10.0));
    EXPECT_LE(z.max_w_norm, 1e-10);
    EXPECT_LE(z.delta_R, 1e-9);
    EXPECT_EQ(z.report.violations, 0);
  }
  EXPECT_THROW(check_zf(generate_iid(3, 2, 1), PowerBudget::per_transmitter(3, 10.0)), PreconditionError);
}

TEST(CheckReport, JsonRecord) {
  CheckReport r;
  r.check = "x";
  r.record(0.5);
  r.record(-0.1, "bad");
  const auto j = to_json(r);
  EXPECT_EQ(j["check"], "x");
  EXPECT_EQ(j["trials"], 2);
  EXPECT_EQ(j["violations"], 1);
  EXPECT_DOUBLE_EQ(j["worst_slack"].get<double>(), -0.1);
  EXPECT_EQ(j["notes"][0], "bad");
}
