#include <gtest/gtest.h>

#include "igs/oracle.hpp"
#include "igs/proper.hpp"
#include "igs/pseudo.hpp"
#include "oracles.hpp"

using namespace igs;

namespace {

struct Instance {
  ChannelSet ch;
  PowerBudget P;
  RateProfile alpha;
  ProperSolution proper;
  ReducedProblem rp;
};

ReducedProblem reduce_for(const ChannelSet& ch, const BeamformerSet& t, const RateProfile& alpha) {
  const auto st = received_stats(ch, t, PseudoCovarianceSet::zeros(ch.users(), ch.antennas()));
  return reduce(t, ch, st, alpha);
}

Instance make_instance(const ChannelSet& ch, const PowerBudget& P, const RateProfile& alpha) {
  auto proper = solve_rate_profile_proper(ch, alpha, P);
  auto rp = reduce_for(ch, proper.beamformers, alpha);
  return {ch, P, alpha, std::move(proper), std::move(rp)};
}

Instance fixture_instance(const std::string& name) {
  const auto [ch, P] = fixture(name);
  return make_instance(ch, P, RateProfile::pair(0.5));
}

Instance random_instance(Index K, Index M, std::uint64_t seed, double snr_db = 10.0) {
  const auto ch = generate_iid(K, M, seed);
  return make_instance(ch, PowerBudget::per_transmitter(K, snr_db_to_power(snr_db)), RateProfile::uniform(K));
}

CVector random_in_caps(const ReducedProblem& rp, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CVector z(rp.users());
  for (Index k = 0; k < rp.users(); ++k) z(k) = std::polar(rp.caps(k) * u(rng), 6.283185307179586 * u(rng));
  return z;
}

PseudoCovarianceSet pseudo_from(const ReducedProblem& rp, const CVector& z) {
  PseudoCovarianceSet pc;
  for (Index k = 0; k < rp.users(); ++k) pc.Ctilde.push_back(z(k) * rp.t_tilde[k] * rp.t_tilde[k].transpose());
  return pc;
}

}  // namespace

TEST(Reduce, SingleUserHasNoInterferenceVector) {
  const auto inst = random_instance(1, 3, 2);
  EXPECT_EQ(inst.rp.w[0].norm(), 0.0);
  EXPECT_GT(inst.rp.caps(0), 9.0);
  EXPECT_LE(inst.rp.caps(0), 10.0 + 1e-9);
}

TEST(Reduce, ZeroForcingBeamformersGiveZeroInterferenceVectors) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Index K = 2 + s % 2, M = K + s % 2;
    const auto ch = generate_iid(K, M, s);
    const auto P = PowerBudget::per_transmitter(K, 10.0);
    const auto rp = reduce_for(ch, zf_beamformers(ch, P), RateProfile::uniform(K));
    for (Index k = 0; k < K; ++k) EXPECT_LE(rp.w[k].norm(), 1e-10);
  }
}

TEST(Reduce, FixtureVectorsMatchEntrywiseFormula) {
  const auto inst = fixture_instance("H1");
  const auto& t = inst.proper.beamformers;
  const auto ref = oracle::entry_stats(inst.ch, t.covariances(), {CMatrix::Zero(2, 2), CMatrix::Zero(2, 2)});
  for (Index k = 0; k < 2; ++k)
    for (Index j = 0; j < 2; ++j) {
      Complex g = 0.0;
      for (Index a = 0; a < 2; ++a) g += inst.ch.h(k, j)(a) * t.t[j](a) / t.t[j].norm();
      EXPECT_NEAR(std::abs(inst.rp.m[k](j) - std::conj(g * g) / ref.Cy[k]), 0.0, 1e-12);
      const Complex w = j == k ? Complex(0.0) : std::conj(g * g) / ref.Cs[k];
      EXPECT_NEAR(std::abs(inst.rp.w[k](j) - w), 0.0, 1e-12);
    }
  EXPECT_NEAR(inst.rp.caps(0), t.power(0), 1e-15);
}

TEST(Reduce, ObjectiveTermsEqualRatesFromReceivedStatistics) {
  std::mt19937_64 rng(4);
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto inst = random_instance(2 + s % 3, 1 + s % 2, 200 + s);
    const auto& rp = inst.rp;
    const auto cov = make_covariances(inst.proper.beamformers);
    for (int i = 0; i < 5; ++i) {
      const CVector z = random_in_caps(rp, rng);
      const auto pc = pseudo_from(rp, z);
      for (Index k = 0; k < rp.users(); ++k) EXPECT_TRUE(validate_pair(cov.C[k], pc.Ctilde[k]).valid);
      const auto st = received_stats(inst.ch, cov, pc);
      const auto d = user_deltas(rp, z);
      for (Index k = 0; k < rp.users(); ++k) EXPECT_NEAR(d[k], rate_delta(k, st), 1e-10);
    }
  }
}

TEST(Reduce, RejectsImproperStatistics) {
  const auto inst = fixture_instance("H1");
  auto st = inst.rp.stats;
  st.Cy_tilde[0] = 0.1;
  EXPECT_THROW(reduce(inst.proper.beamformers, inst.ch, st, inst.alpha), PreconditionError);
}

TEST(Reduce, SilentUserHasZeroCap) {
  const auto ch = generate_iid(3, 2, 9);
  BeamformerSet t{{CVector::Ones(2), CVector::Zero(2), CVector::Constant(2, Complex(0.0, 1.0))}};
  const auto rp = reduce_for(ch, t, RateProfile::uniform(3));
  EXPECT_EQ(rp.caps(1), 0.0);
  EXPECT_EQ(rp.t_tilde[1].norm(), 0.0);
  for (Index k = 0; k < 3; ++k) EXPECT_EQ(rp.m[k](1), Complex(0.0));
  const auto sdr = solve_sdr(rp);
  EXPECT_LE(std::abs(sdr.Z(1, 1)), 1e-12);
  std::mt19937_64 rng(1);
  const auto r = randomize(rp, sdr.Z, 50, rng, sdr.tight);
  EXPECT_EQ(r.z_hat(1), Complex(0.0));
}

TEST(Objective, ZeroVectorAndZeroForcing) {
  const auto inst = fixture_instance("H1");
  EXPECT_EQ(objective(inst.rp, CVector::Zero(2)), 0.0);

  const auto ch = generate_iid(2, 3, 5);
  const auto P = PowerBudget::per_transmitter(2, 10.0);
  const auto rp = reduce_for(ch, zf_beamformers(ch, P), RateProfile::uniform(2));
  std::mt19937_64 rng(2);
  for (int i = 0; i < 100; ++i) EXPECT_LE(objective(rp, random_in_caps(rp, rng)), 1e-12);
  EXPECT_THROW(objective(rp, CVector::Constant(2, 100.0)), PreconditionError);
}

TEST(SdrFeasible, ZeroTauAndAboveBound) {
  const auto inst = fixture_instance("H1");
  const auto at0 = sdr_feasible_at(inst.rp, 0.0);
  EXPECT_TRUE(at0.feasible);
  EXPECT_EQ(at0.Z.norm(), 0.0);
  const double ub = tau_upper_bound(inst.rp);
  EXPECT_FALSE(sdr_feasible_at(inst.rp, ub * 1.01 + 1e-3).feasible);
  EXPECT_THROW(sdr_feasible_at(inst.rp, -1.0), PreconditionError);
}

TEST(SdrFeasible, FixtureBelowGridOptimum) {
  const auto inst = fixture_instance("H1");
  const auto g = grid_oracle_pseudo(inst.rp, 64);
  ASSERT_GT(g.tau_bf, 0.1);
  const auto chk = sdr_feasible_at(inst.rp, g.tau_bf - 1e-3);
  EXPECT_TRUE(chk.feasible);
  EXPECT_LE(chk.lhs, std::pow(inst.rp.caps(0), 2) * (1.0 + 1e-9));
}

TEST(SolveSdr, ZeroForcingGivesZero) {
  const auto ch = generate_iid(3, 3, 6);
  const auto P = PowerBudget::per_transmitter(3, 10.0);
  const auto rp = reduce_for(ch, zf_beamformers(ch, P), RateProfile::uniform(3));
  EXPECT_EQ(solve_sdr(rp).tau_sdr, 0.0);
}

TEST(SolveSdr, FixtureReachesGridOptimum) {
  const auto inst = fixture_instance("H1");
  const auto sdr = solve_sdr(inst.rp);
  const auto g = grid_oracle_pseudo(inst.rp, 64);
  EXPECT_GE(sdr.tau_sdr, g.tau_bf - 1e-3);
  EXPECT_LE(g.tau_bf, sdr.tau_sdr + 1e-6);
  EXPECT_LE(sdr.tau_sdr, tau_upper_bound(inst.rp));
}

TEST(SolveSdr, TwoUserRelaxationIsRankOne) {
  for (std::uint64_t s = 0; s < 30; ++s) {
    const auto inst = random_instance(2, 1 + s % 2, 300 + s);
    const auto sdr = solve_sdr(inst.rp);
    if (sdr.tau_sdr < 1e-6) continue;
    ASSERT_GE(sdr.eigvals.size(), 2);
    EXPECT_LE(std::max(sdr.eigvals(1), 0.0) / sdr.eigvals(0), 1e-6) << s;
    EXPECT_TRUE(sdr.tight);
  }
}

TEST(Randomize, ZeroMatrix) {
  const auto inst = fixture_instance("H1");
  std::mt19937_64 rng(1);
  const auto r = randomize(inst.rp, CMatrix::Zero(2, 2), 10, rng, false);
  EXPECT_EQ(r.z_hat.norm(), 0.0);
  EXPECT_EQ(r.tau_hat, 0.0);
  EXPECT_THROW(randomize(inst.rp, CMatrix::Zero(2, 2), 0, rng, false), PreconditionError);
}

TEST(Randomize, RankOneWitnessIsRecovered) {
  const auto inst = fixture_instance("H1");
  const auto sdr = solve_sdr(inst.rp);
  ASSERT_TRUE(sdr.tight);
  std::mt19937_64 rng(1);
  const auto r = randomize(inst.rp, sdr.Z, 1000, rng, true);
  // Principal component up to a common phase.
  const CMatrix zz = r.z_hat * r.z_hat.adjoint();
  EXPECT_LE((zz - sdr.Z).norm(), 1e-4 * sdr.Z.norm());
  EXPECT_NEAR(r.tau_hat, sdr.tau_sdr, 1e-5);
}

TEST(Randomize, FixedSeedIsBitExact) {
  const auto inst = fixture_instance("H1");
  PseudoOptions opt;
  const auto a = optimize_pseudo(inst.ch, inst.alpha, inst.proper.beamformers, opt);
  const auto b = optimize_pseudo(inst.ch, inst.alpha, inst.proper.beamformers, opt);
  EXPECT_EQ(a.sdr.tau_hat, b.sdr.tau_hat);
  EXPECT_EQ(a.sdr.z_hat, b.sdr.z_hat);

  // Sampling path (not the rank-1 shortcut) on a three-user instance.
  const auto k3 = random_instance(3, 1, 17);
  const auto sdr = solve_sdr(k3.rp);
  std::mt19937_64 r1(5), r2(5);
  const auto x = randomize(k3.rp, sdr.Z, 1000, r1, false);
  const auto y = randomize(k3.rp, sdr.Z, 1000, r2, false);
  EXPECT_EQ(x.tau_hat, y.tau_hat);
  EXPECT_EQ(x.z_hat, y.z_hat);
  EXPECT_EQ(x.best_index, y.best_index);
}

TEST(OptimizePseudo, OrthogonalInstanceStaysProper) {
  CVector h11(2), h12(2), h21(2), h22(2);
  h11 << 1.5, 0.0;
  h21 << 0.0, Complex(0.4, 0.8);
  h22 << 0.0, Complex(0.0, 0.7);
  h12 << Complex(1.1, -0.3), 0.0;
  const ChannelSet ch(2, 2, {{h11, h12}, {h21, h22}}, 1.0);
  const auto inst = make_instance(ch, PowerBudget::per_transmitter(2, 10.0), RateProfile::pair(0.5));
  const auto sol = optimize_pseudo(ch, inst.alpha, inst.proper.beamformers);
  for (const auto& c : sol.pseudo.Ctilde) EXPECT_LE(c.norm(), 1e-12);
  EXPECT_NEAR(sol.R_star, inst.proper.r_star, 1e-4);
}

TEST(OptimizePseudo, FixtureGains) {
  const auto h1 = fixture_instance("H1");
  const auto s1 = optimize_pseudo(h1.ch, h1.alpha, h1.proper.beamformers);
  EXPECT_GT(s1.R_star - h1.proper.r_star, 0.0);
  const auto proper = beamformer_rates(h1.ch, h1.proper.beamformers);
  for (Index k = 0; k < 2; ++k) EXPECT_GT(s1.rates[k], proper[k]);

  const auto h2 = fixture_instance("H2");
  const auto s2 = optimize_pseudo(h2.ch, h2.alpha, h2.proper.beamformers);
  EXPECT_LE(s2.R_star - h2.proper.r_star, 0.05);
  EXPECT_GE(s2.R_star, h2.proper.r_star - 1e-9);
}

TEST(DeltaBound, EnvelopesRateGain) {
  const auto h1 = fixture_instance("H1");
  const auto sol = optimize_pseudo(h1.ch, h1.alpha, h1.proper.beamformers);
  const auto bound = delta_upper_bound(h1.rp, sol.sdr.z_hat);
  const auto d = user_deltas(h1.rp, sol.sdr.z_hat);
  for (Index k = 0; k < 2; ++k) EXPECT_LE(d[k], bound[k] + 1e-12);
  for (double b : delta_upper_bound(h1.rp, CVector::Zero(2))) EXPECT_EQ(b, 0.0);

  const auto ch = generate_iid(2, 2, 3);
  const auto rp = reduce_for(ch, zf_beamformers(ch, PowerBudget::per_transmitter(2, 10.0)), RateProfile::uniform(2));
  std::mt19937_64 rng(3);
  for (double b : delta_upper_bound(rp, random_in_caps(rp, rng))) EXPECT_LE(b, 1e-12);
}

TEST(PseudoInvariants, RandomInstances) {
  for (std::uint64_t s = 0; s < 40; ++s) {
    const Index K = 2 + s % 3, M = 1 + (s / 3) % 2;
    const auto inst = random_instance(K, M, 700 + s, 5.0 + static_cast<double>(s % 3) * 5.0);
    const auto sol = optimize_pseudo(inst.ch, inst.alpha, inst.proper.beamformers);
    EXPECT_GE(sol.R_star, inst.proper.r_star - 1e-9) << s;
    EXPECT_LE(sol.sdr.tau_hat, sol.sdr.tau_sdr + 1e-6) << s;
    if (K == 2) {
      EXPECT_LE(sol.sdr.tau_sdr - sol.sdr.tau_hat, 1e-5) << s;
    }
    EXPECT_GE(sol.sdr.theorem1_slack, -1e-9) << s;
    const auto cov = make_covariances(inst.proper.beamformers);
    for (Index k = 0; k < K; ++k) {
      EXPECT_LE(std::abs(sol.sdr.z_hat(k)), inst.rp.caps(k) + 1e-9);
      EXPECT_TRUE(validate_pair(cov.C[k], sol.pseudo.Ctilde[k]).valid);
    }
  }
}

TEST(PseudoInvariants, ConjugationSymmetry) {
  for (std::uint64_t s = 0; s < 6; ++s) {
    const auto inst = random_instance(2 + s % 2, 2, 900 + s);
    BeamformerSet tc;
    for (const auto& v : inst.proper.beamformers.t) tc.t.push_back(v.conjugate());
    const auto chc = inst.ch.conjugated();
    const auto rpc = reduce_for(chc, tc, inst.alpha);
    for (Index k = 0; k < inst.rp.users(); ++k) EXPECT_LE((rpc.m[k] - inst.rp.m[k].conjugate()).norm(), 1e-12);
    const auto a = solve_sdr(inst.rp);
    const auto b = solve_sdr(rpc);
    EXPECT_NEAR(a.tau_sdr, b.tau_sdr, 1e-8) << s;
    if (a.tau_sdr > 1e-6) {
      EXPECT_LE((b.Z - a.Z.conjugate()).norm(), 1e-4 * a.Z.norm()) << s;
    }
  }
}
