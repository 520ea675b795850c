#include <gtest/gtest.h>

#include <memory>
#include <numeric>

#include "qmpc/sharing.hpp"
#include "qmpc/vss.hpp"

using namespace qmpc;

namespace {

struct Bench {
  Bench(std::size_t players, std::uint64_t p, std::vector<PlayerId> bad, Behavior b,
        std::uint64_t seed)
      : field(p), net(players, p) {
    if (!bad.empty()) {
      AdversaryStrategy s;
      s.controlled = std::move(bad);
      s.behavior = b;
      net.attach_adversary(std::make_shared<Adversary>(s, p, seed));
    }
    std::vector<PlayerId> ids(players);
    std::iota(ids.begin(), ids.end(), 0u);
    ch = std::make_unique<Channel>(net, 77, ids, 0);
  }
  PrimeField field;
  Network net;
  std::unique_ptr<Channel> ch;
};

std::vector<std::uint32_t> first_n(std::size_t n) {
  std::vector<std::uint32_t> m(n);
  std::iota(m.begin(), m.end(), 0u);
  return m;
}

// Decodes the members' shares of instance i, skipping bad members.
Fp decode(const Bench& s, const VssOutcome& out, std::size_t i, int t) {
  std::vector<Point> pts;
  for (std::size_t k = 0; k < out.shares.size(); ++k) {
    if (s.net.is_bad(static_cast<PlayerId>(k))) continue;
    pts.push_back({abscissa(s.field, k), out.shares[k][i]});
  }
  const Polynomial f = lagrange_interpolate(pts);
  EXPECT_LE(f.degree(), t);
  return f.coefficient(0);
}

VssInstance instance(const PrimeField& f, std::uint32_t dealer, std::uint64_t secret, int t,
                     Rng& rng) {
  return {dealer, Polynomial::random_with_constant(f, f.element(secret), t, rng)};
}

}  // namespace

TEST(Vss, GoodDealerAccepted) {
  for (std::size_t q : {4u, 7u, 10u}) {
    const int t = threshold_for(q);
    Bench s(q, PrimeField::kDefaultModulus, {}, Behavior::Honest, 1);
    Rng rng(q);
    std::vector<VssInstance> inst{instance(s.field, 0, 1234, t, rng), instance(s.field, 2, 99, t, rng)};
    const auto out = vss_share_many(*s.ch, s.field, first_n(q), t, inst, 5);
    for (std::size_t k = 0; k < q; ++k) {
      EXPECT_FALSE(out.disqualified[k][0]);
      EXPECT_FALSE(out.disqualified[k][1]);
      // Shares are g(alpha_k).
      EXPECT_EQ(out.shares[k][0], inst[0].g.eval(abscissa(s.field, k)));
    }
    EXPECT_EQ(decode(s, out, 0, t).value(), 1234u);
    EXPECT_EQ(decode(s, out, 1, t).value(), 99u);
  }
}

TEST(Vss, InconsistentDealerDisqualified) {
  for (std::size_t q : {4u, 7u}) {
    for (Behavior b : {Behavior::InconsistentCommit, Behavior::Garbage, Behavior::Silent,
                       Behavior::TargetedShareCorruption}) {
      const int t = threshold_for(q);
      Bench s(q, 101, {1}, b, 3);
      s.net.set_phase(Phase::Commitment);
      Rng rng(9);
      std::vector<VssInstance> inst{instance(s.field, 1, 17, t, rng), instance(s.field, 0, 5, t, rng)};
      const auto out = vss_share_many(*s.ch, s.field, first_n(q), t, inst, 6);
      for (std::size_t k = 0; k < q; ++k) {
        if (k == 1) continue;
        EXPECT_TRUE(out.disqualified[k][0]) << behavior_name(b);
        EXPECT_FALSE(out.disqualified[k][1]) << behavior_name(b);
        EXPECT_TRUE(out.shares[k][0].is_zero());
      }
      EXPECT_EQ(decode(s, out, 1, t).value(), 5u) << behavior_name(b);
    }
  }
}

TEST(Vss, LyingVerifiersCannotDisqualify) {
  const Behavior catalog[] = {Behavior::Silent, Behavior::Garbage, Behavior::Equivocate,
                              Behavior::TargetedShareCorruption, Behavior::InconsistentCommit};
  for (std::size_t q : {4u, 7u, 10u}) {
    const int t = threshold_for(q);
    std::vector<PlayerId> bad;
    for (int i = 0; i < t; ++i) bad.push_back(static_cast<PlayerId>(q - 1 - 2 * i));
    for (Behavior b : catalog) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Bench s(q, PrimeField::kDefaultModulus, bad, b, seed);
        s.net.set_phase(Phase::Commitment);
        Rng rng(seed);
        std::vector<VssInstance> inst;
        for (std::uint32_t d = 0; d < 3; ++d) inst.push_back(instance(s.field, d, 100 + d, t, rng));
        const auto out = vss_share_many(*s.ch, s.field, first_n(q), t, inst, seed);
        for (std::size_t i = 0; i < inst.size(); ++i) {
          for (std::size_t k = 0; k < q; ++k) {
            if (!s.net.is_bad(static_cast<PlayerId>(k))) {
              ASSERT_FALSE(out.disqualified[k][i]) << "q=" << q << " " << behavior_name(b);
            }
          }
          EXPECT_EQ(decode(s, out, i, t).value(), 100 + i);
        }
      }
    }
  }
}

TEST(Vss, BadDealersConsistentOrDisqualified) {
  // Whatever a bad dealer does, good members end with a common verdict and,
  // if accepted, shares on one degree-t polynomial.
  const Behavior catalog[] = {Behavior::Silent, Behavior::Garbage, Behavior::Equivocate,
                              Behavior::TargetedShareCorruption, Behavior::InconsistentCommit};
  for (Behavior b : catalog) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
      const std::size_t q = 7;
      const int t = 2;
      Bench s(q + 1, 101, {1, q}, b, seed);
      s.net.set_phase(seed % 2 ? Phase::Mask : Phase::Gate);
      Rng rng(seed + 50);
      std::vector<VssInstance> inst{instance(s.field, 1, 3, t, rng),
                                    instance(s.field, static_cast<std::uint32_t>(q), 4, t, rng),
                                    instance(s.field, 2, 6, t, rng)};
      const auto out = vss_share_many(*s.ch, s.field, first_n(q), t, inst, seed);
      for (std::size_t i = 0; i < inst.size(); ++i) {
        std::optional<bool> verdict;
        for (std::size_t k = 0; k < q; ++k) {
          if (s.net.is_bad(static_cast<PlayerId>(k))) continue;
          if (!verdict) verdict = out.disqualified[k][i];
          ASSERT_EQ(*verdict, out.disqualified[k][i]);
        }
        (void)decode(s, out, i, t);
      }
      EXPECT_EQ(decode(s, out, 2, t).value(), 6u);
    }
  }
}

TEST(Vss, DealerOutsideCommittee) {
  Bench s(6, PrimeField::kDefaultModulus, {2}, Behavior::TargetedShareCorruption, 4);
  const int t = 1;
  Rng rng(3);
  std::vector<VssInstance> inst{instance(s.field, 4, 31, t, rng), instance(s.field, 5, 32, t, rng)};
  const auto out = vss_share_many(*s.ch, s.field, first_n(4), t, inst, 8);
  for (std::size_t k = 0; k < 4; ++k) {
    if (k == 2) continue;
    EXPECT_FALSE(out.disqualified[k][0]);
    EXPECT_FALSE(out.disqualified[k][1]);
  }
  EXPECT_EQ(decode(s, out, 0, t).value(), 31u);
  EXPECT_EQ(decode(s, out, 1, t).value(), 32u);
}

TEST(Vss, ReconstructUnderGarbageAndSilence) {
  for (Behavior b : {Behavior::Honest, Behavior::Garbage, Behavior::Silent,
                     Behavior::TargetedShareCorruption}) {
    const std::size_t q = 7;
    const int t = 2;
    Bench s(q, 101, b == Behavior::Honest ? std::vector<PlayerId>{} : std::vector<PlayerId>{0, 4}, b, 2);
    Rng rng(1);
    std::vector<std::vector<Fp>> shares(q);
    std::vector<std::uint64_t> secrets{7, 0, 100};
    for (std::uint64_t sec : secrets) {
      const auto set = shamir_deal(s.field, s.field.element(sec), t, q, rng);
      for (std::size_t k = 0; k < q; ++k) shares[k].push_back(*set.shares[k]);
    }
    const auto members = first_n(q);
    const auto opened = open_shares(*s.ch, s.field, members, members, shares, t);
    for (std::size_t r = 0; r < q; ++r) {
      for (std::size_t i = 0; i < secrets.size(); ++i) {
        ASSERT_TRUE(opened[r][i].has_value()) << behavior_name(b);
        EXPECT_EQ(opened[r][i]->value(), secrets[i]);
      }
    }
  }
}

TEST(Vss, BivariateSymmetry) {
  const PrimeField f(101);
  Rng rng(4);
  const int t = 3;
  const Polynomial g = Polynomial::random_with_constant(f, f.element(9), t, rng);
  const auto c = symmetric_bivariate(f, g, t, rng);
  for (std::uint64_t a = 0; a < 6; ++a) {
    for (std::uint64_t b = 0; b < 6; ++b) {
      EXPECT_EQ(eval_coeffs(bivariate_row(c, t, f.element(a)), f.element(b)),
                eval_coeffs(bivariate_row(c, t, f.element(b)), f.element(a)));
    }
    EXPECT_EQ(eval_coeffs(bivariate_row(c, t, f.element(a)), f.zero()), g.eval(f.element(a)));
  }
}
