#include <gtest/gtest.h>

#include <map>
#include <set>
#include <vector>

#include "qmpc/sharing.hpp"

using namespace qmpc;

namespace {

// Exhaustive decoder oracle: every secret s such that some degree-<=t
// polynomial with f(0) = s agrees with all but at most t of the slots.
std::set<std::uint64_t> subset_oracle(const std::vector<std::optional<Fp>>& slots, int t,
                                      std::uint64_t p) {
  std::set<std::uint64_t> out;
  // Enumerate all polynomials of degree <= t (small p, small t only).
  std::vector<std::uint64_t> c(static_cast<std::size_t>(t) + 1, 0);
  while (true) {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < slots.size(); ++i) {
      std::uint64_t y = 0, xp = 1;
      for (std::uint64_t ci : c) {
        y = (y + ci * xp) % p;
        xp = xp * (i + 1) % p;
      }
      if (!slots[i] || slots[i]->value() != y) ++bad;
    }
    if (bad <= static_cast<std::size_t>(t)) out.insert(c[0]);
    std::size_t j = 0;
    while (j < c.size() && ++c[j] == p) c[j++] = 0;
    if (j == c.size()) break;
  }
  return out;
}

ShareSet from_poly(const Polynomial& f, int t, std::size_t n) {
  ShareSet s;
  s.modulus = f.modulus();
  s.threshold = t;
  for (std::size_t i = 0; i < n; ++i) s.shares.emplace_back(f.eval(Fp(i + 1, f.modulus())));
  return s;
}

}  // namespace

TEST(Shamir, ZeroThresholdSharesEqualSecret) {
  const PrimeField f(101);
  Rng rng(1);
  const auto s = shamir_deal(f, f.element(17), 0, 3, rng);
  for (const auto& sh : s.shares) EXPECT_EQ(sh->value(), 17u);
}

TEST(Shamir, AnyTwoSharesReconstruct) {
  const PrimeField f(101);
  Rng rng(2);
  const auto s = shamir_deal(f, f.element(5), 1, 4, rng);
  for (std::size_t a = 0; a < 4; ++a) {
    for (std::size_t b = a + 1; b < 4; ++b) {
      const Point pts[] = {{abscissa(f, a), *s.shares[a]}, {abscissa(f, b), *s.shares[b]}};
      EXPECT_EQ(lagrange_interpolate(pts).coefficient(0).value(), 5u);
    }
  }
  EXPECT_EQ(shamir_reconstruct(s).value(), 5u);
}

TEST(Shamir, TooFewRecipients) {
  const PrimeField f(101);
  Rng rng(3);
  EXPECT_THROW(shamir_deal(f, f.one(), 1, 3, rng), TooFewRecipients);
  EXPECT_THROW(shamir_deal(PrimeField(7), Fp(1, 7), 2, 7, rng), TooFewRecipients);
}

TEST(Shamir, SingleShareUniform) {
  const PrimeField f(7);
  Rng rng(4);
  std::vector<int> count(7, 0);
  const int deals = 10000;
  for (int i = 0; i < deals; ++i) ++count[shamir_deal(f, f.element(3), 1, 4, rng).shares[2]->value()];
  double chi = 0;
  for (int c : count) chi += (c - deals / 7.0) * (c - deals / 7.0) / (deals / 7.0);
  EXPECT_LT(chi, 22.458);  // 6 dof, 0.001
}

TEST(Shamir, OneCorruptedShareCorrected) {
  const PrimeField f(101);
  Rng rng(5);
  auto s = shamir_deal(f, f.element(5), 1, 4, rng);
  s.shares[1] = *s.shares[1] + f.element(33);
  EXPECT_EQ(subset_oracle(s.shares, 1, 101), std::set<std::uint64_t>{5});
  EXPECT_EQ(shamir_reconstruct(s).value(), 5u);
}

TEST(Shamir, TwoCorruptionsDocumented) {
  // With 2 of 4 slots corrupted no degree-1 polynomial fits 3 points in the
  // typical case; the decoder must then fail rather than guess.
  const PrimeField f(7);
  int failures = 0, wrong = 0, total = 0;
  for (std::uint64_t s = 0; s < 7; ++s) {
    for (std::uint64_t a = 0; a < 7; ++a) {
      const Polynomial g(7, {Fp(s, 7), Fp(a, 7)});
      for (std::uint64_t d1 = 1; d1 < 7; ++d1) {
        for (std::uint64_t d2 = 1; d2 < 7; ++d2) {
          ShareSet set = from_poly(g, 1, 4);
          set.shares[0] = *set.shares[0] + Fp(d1, 7);
          set.shares[3] = *set.shares[3] + Fp(d2, 7);
          const auto oracle = subset_oracle(set.shares, 1, 7);
          ++total;
          try {
            const Fp got = shamir_reconstruct(set);
            // Any returned value must be one the oracle accepts.
            EXPECT_TRUE(oracle.count(got.value()));
            wrong += got.value() != s ? 1 : 0;
          } catch (const DecodingFailure&) {
            EXPECT_TRUE(oracle.empty());
            ++failures;
          }
        }
      }
    }
  }
  EXPECT_GT(failures + wrong, 0);
  EXPECT_EQ(total, 7 * 7 * 36);
}

TEST(Shamir, ExhaustiveCorrectionQ4) {
  // Every secret, every dealing polynomial, every pattern of <= 1 corrupted
  // or erased slot.
  const std::uint64_t p = 7;
  for (std::uint64_t s = 0; s < p; ++s) {
    for (std::uint64_t a = 0; a < p; ++a) {
      const Polynomial g(p, {Fp(s, p), Fp(a, p)});
      EXPECT_EQ(shamir_reconstruct(from_poly(g, 1, 4)).value(), s);
      for (std::size_t pos = 0; pos < 4; ++pos) {
        for (std::uint64_t d = 1; d < p; ++d) {
          ShareSet set = from_poly(g, 1, 4);
          set.shares[pos] = *set.shares[pos] + Fp(d, p);
          ASSERT_EQ(shamir_reconstruct(set).value(), s);
          ASSERT_EQ(subset_oracle(set.shares, 1, p), std::set<std::uint64_t>{s});
        }
        ShareSet erased = from_poly(g, 1, 4);
        erased.shares[pos].reset();
        ASSERT_EQ(shamir_reconstruct(erased).value(), s);
      }
    }
  }
}

TEST(Shamir, ExhaustivePerfectHidingQ4) {
  // For each position, the distribution of the share over the random
  // coefficient is the same for every secret (uniform).
  const std::uint64_t p = 7;
  for (std::size_t pos = 0; pos < 4; ++pos) {
    std::map<std::uint64_t, int> reference;
    for (std::uint64_t s = 0; s < p; ++s) {
      std::map<std::uint64_t, int> hist;
      for (std::uint64_t a = 0; a < p; ++a) {
        ++hist[Polynomial(p, {Fp(s, p), Fp(a, p)}).eval(Fp(pos + 1, p)).value()];
      }
      if (s == 0) reference = hist;
      EXPECT_EQ(hist, reference);
    }
  }
}

TEST(Shamir, Additivity) {
  const PrimeField f(101);
  Rng rng(6);
  for (int i = 0; i < 100; ++i) {
    const Fp a = f.sample(rng), b = f.sample(rng);
    const auto sa = shamir_deal(f, a, 2, 7, rng);
    const auto sb = shamir_deal(f, b, 2, 7, rng);
    EXPECT_EQ(shamir_reconstruct(add_shares(sa, sb)), a + b);
  }
  auto s4 = shamir_deal(f, f.one(), 1, 4, rng);
  auto s7 = shamir_deal(f, f.one(), 1, 7, rng);
  EXPECT_THROW(add_shares(s4, s7), MismatchedRoleSets);
}

TEST(Shamir, TooManyErasures) {
  const PrimeField f(101);
  Rng rng(9);
  auto s = shamir_deal(f, f.element(8), 1, 4, rng);
  s.shares[0].reset();
  s.shares[1].reset();
  EXPECT_THROW(shamir_reconstruct(s), DecodingFailure);
}

TEST(BerlekampWelch, CorrectsUpToBudget) {
  const PrimeField f(PrimeField::kDefaultModulus);
  Rng rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const int t = 1 + static_cast<int>(rng.below(4));
    const std::size_t n = static_cast<std::size_t>(3 * t + 1);
    const Polynomial g = Polynomial::random_with_constant(f, f.sample(rng), t, rng);
    std::vector<Point> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({abscissa(f, i), g.eval(abscissa(f, i))});
    const std::size_t errs = rng.below(static_cast<std::uint64_t>(t) + 1);
    for (std::size_t e = 0; e < errs; ++e) pts[rng.below(n)].y += f.element(1 + rng.below(1000));
    EXPECT_EQ(berlekamp_welch(pts, t), g);
  }
}

TEST(ReedSolomon, SyndromeLocatesErrors) {
  const PrimeField f(101);
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int t = 1 + static_cast<int>(rng.below(2));
    const std::size_t n = static_cast<std::size_t>(3 * t + 1 + rng.below(3));
    std::vector<Fp> xs;
    for (std::size_t i = 0; i < n; ++i) xs.push_back(abscissa(f, i));
    const ReedSolomonCode code(xs, t);
    const Polynomial g = Polynomial::random_with_constant(f, f.sample(rng), t, rng);
    std::vector<Fp> word;
    for (const Fp& x : xs) word.push_back(g.eval(x));
    for (const Fp& s : code.syndrome(word)) EXPECT_TRUE(s.is_zero());
    std::vector<Fp> err(n, f.zero());
    const std::size_t budget = code.redundancy() / 2;
    for (std::size_t e = 0; e < budget; ++e) err[rng.below(n)] = f.element(1 + rng.below(100));
    for (std::size_t i = 0; i < n; ++i) word[i] += err[i];
    EXPECT_EQ(code.error_from_syndrome(code.syndrome(word)), err);
  }
}
