#include <gtest/gtest.h>

#include <chrono>
#include <numeric>

#include "qmpc/errors.hpp"
#include "qmpc/protocol.hpp"
#include "qmpc/sharing.hpp"

using namespace qmpc;

namespace {

std::vector<Fp> random_inputs(const PrimeField& f, std::size_t n, std::uint64_t seed) {
  Rng rng({seed, 0x1u});
  std::vector<Fp> x;
  for (std::size_t i = 0; i < n; ++i) x.push_back(f.sample(rng));
  return x;
}

AdversaryStrategy adversary(std::vector<PlayerId> bad, Behavior b) {
  AdversaryStrategy s;
  s.controlled = std::move(bad);
  s.behavior = b;
  return s;
}

// Bad players spread so that every quorum stays good with high probability.
std::vector<PlayerId> spread(std::size_t n, double fraction, std::uint64_t seed) {
  std::vector<PlayerId> all(n);
  std::iota(all.begin(), all.end(), 0u);
  Rng rng({seed, 0xbadu});
  for (std::size_t i = n; i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);
  all.resize(static_cast<std::size_t>(fraction * static_cast<double>(n)));
  std::sort(all.begin(), all.end());
  return all;
}

void expect_good_run(const ProtocolResult& r, const std::vector<Fp>& inputs, const Network* = nullptr) {
  EXPECT_TRUE(r.correct());
  EXPECT_TRUE(r.invariants_hold());
  for (std::size_t i = 0; i < r.outputs.size(); ++i) {
    if (r.outputs[i]) {
      EXPECT_EQ(*r.outputs[i], r.expected);
    }
  }
  (void)inputs;
}

}  // namespace

TEST(Protocol, SevenGateExampleNoAdversary) {
  const PrimeField f(PrimeField::kDefaultModulus);
  const Circuit c = tree_circuit(8);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto x = random_inputs(f, 8, seed);
    ProtocolConfig cfg;
    const ProtocolResult r = run_protocol(cfg, c, x, {}, seed);
    EXPECT_EQ(r.table.quorum_size, 6u);
    EXPECT_EQ(r.expected, eval_plain(c, f, x).output);
    EXPECT_EQ(r.committed_inputs, x);
    for (const auto& o : r.outputs) {
      ASSERT_TRUE(o.has_value());
      EXPECT_EQ(*o, r.expected);
    }
    for (std::uint32_t i = 1; i <= 8; ++i) EXPECT_EQ(r.quorum_output[i], r.expected);
    EXPECT_TRUE(r.invariants_hold());
  }
}

TEST(Protocol, InconsistentCommitterGetsDefault) {
  const PrimeField f(101);
  const Circuit c = parse_circuit("input 1\ninput 2\ninput 3\ninput 4\ninput 5\ninput 6\ninput 7\ninput 8\n"
                                  "input 9\ninput 10\ninput 11\ninput 12\ninput 13\ninput 14\ninput 15\ninput 16\n"
                                  "output x3\n");
  ProtocolConfig cfg;
  cfg.modulus = 101;
  cfg.formation_retries = 100000;
  std::vector<Fp> x(16, f.element(9));
  x[2] = f.element(42);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ProtocolResult r = run_protocol(cfg, c, x, adversary({2}, Behavior::InconsistentCommit), seed);
    EXPECT_TRUE(r.defaulted[2]);
    EXPECT_EQ(r.committed_inputs[2].value(), 0u);
    EXPECT_EQ(r.expected.value(), 0u);
    expect_good_run(r, x);
    EXPECT_FALSE(r.outputs[2].has_value());
    for (std::size_t i = 0; i < 16; ++i) {
      if (i != 2) {
        ASSERT_TRUE(r.outputs[i]);
      }
    }
  }
}

TEST(Protocol, ByzantineSweepSixteenPlayers) {
  const PrimeField f(PrimeField::kDefaultModulus);
  int runs = 0;
  for (Behavior b : {Behavior::Silent, Behavior::Garbage, Behavior::Equivocate,
                     Behavior::TargetedShareCorruption, Behavior::InconsistentCommit}) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      Rng rng({seed, 7});
      const Circuit c = random_circuit(16, 24, 4, rng);
      const auto x = random_inputs(f, 16, seed);
      const auto bad = spread(16, 0.25, seed);
      ProtocolConfig cfg;
      cfg.formation_retries = 100000;
      const ProtocolResult r = run_protocol(cfg, c, x, adversary(bad, b), seed);
      expect_good_run(r, x);
      for (std::size_t i = 0; i < 16; ++i) {
        if (std::find(bad.begin(), bad.end(), i) == bad.end()) {
          ASSERT_TRUE(r.outputs[i].has_value());
          EXPECT_EQ(r.committed_inputs[i], x[i]) << "good player " << i << " lost its input";
        }
      }
      for (std::uint32_t qi = 1; qi <= 16; ++qi) EXPECT_EQ(r.quorum_output[qi], r.expected);
      ++runs;
    }
  }
  EXPECT_EQ(runs, 20);
}

TEST(Protocol, Determinism) {
  const Circuit c = tree_circuit(8);
  const PrimeField f(PrimeField::kDefaultModulus);
  const auto x = random_inputs(f, 8, 3);
  ProtocolConfig cfg;
  cfg.keep_transcript = true;
  cfg.formation_retries = 100;
  const auto a = run_protocol(cfg, c, x, adversary({1}, Behavior::Garbage), 11);
  const auto b = run_protocol(cfg, c, x, adversary({1}, Behavior::Garbage), 11);
  EXPECT_EQ(a.transcript_digest, b.transcript_digest);
  EXPECT_EQ(a.transcript.size(), b.transcript.size());
  const auto d = run_protocol(cfg, c, x, adversary({1}, Behavior::Garbage), 12);
  EXPECT_NE(a.transcript_digest, d.transcript_digest);
}

TEST(Protocol, ScheduleRespected) {
  const Circuit c = tree_circuit(16);
  const PrimeField f(PrimeField::kDefaultModulus);
  ProtocolConfig cfg;
  const auto r = run_protocol(cfg, c, random_inputs(f, 16, 1), {}, 1);
  const auto& s = r.schedule;
  EXPECT_GT(s.t_qf, 0u);
  EXPECT_GT(s.t_vss, 0u);
  EXPECT_GT(s.t_r, 0u);
  EXPECT_GT(s.t_smpc, 0u);
  EXPECT_EQ(s.gate_start(1), s.t_qf + s.t_vss + s.t_r);
  EXPECT_LE(r.rounds, s.computation_end(4) + 1 + 5);
  EXPECT_GT(r.rounds, s.gate_start(4));
}

TEST(Protocol, IdentityCircuitCosts) {
  const PrimeField f(101);
  ProtocolConfig cfg;
  cfg.modulus = 101;
  const Circuit c = parse_circuit("input 1\ninput 2\ninput 3\ninput 4\noutput x2\n");
  const auto r = run_protocol(cfg, c, {f.element(1), f.element(2), f.element(3), f.element(4)}, {}, 0);
  EXPECT_EQ(r.expected.value(), 2u);
  for (const auto& o : r.outputs) EXPECT_EQ(o->value(), 2u);
  EXPECT_GT(r.metrics.max_messages(Phase::Commitment), 0u);
  EXPECT_EQ(r.metrics.max_messages(Phase::Gate), 0u);
  EXPECT_EQ(r.metrics.max_messages(Phase::Mask), 0u);
}

TEST(Protocol, InputCommitmentArithmetic) {
  // x = 4 with r = 3 at p = 7 gives s = 0; here r comes from the owner's
  // stream, so check s - r = x and the sharing of r.
  const PrimeField f(7);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Network net(5, 7);
    const std::vector<PlayerId> quorum = {0, 1, 2, 3};
    const Commitment c = input_commitment(net, f, 4, f.element(4), quorum, 1, 0, seed);
    EXPECT_FALSE(c.defaulted);
    std::vector<Point> pts;
    for (std::size_t k = 0; k < 4; ++k) pts.push_back({abscissa(f, k), c.shares[k]});
    const Polynomial g = lagrange_interpolate(pts);
    EXPECT_LE(g.degree(), 1);
    EXPECT_EQ((*c.s_view[0] - g.coefficient(0)).value(), 4u);
    for (const auto& s : c.s_view) EXPECT_EQ(s, c.s_view[0]);
  }
}

TEST(Protocol, MajorityFilter) {
  const PrimeField f(101);
  const auto v = [&](std::uint64_t x) { return std::optional<Fp>(f.element(x)); };
  std::vector<std::optional<Fp>> all = {v(5), v(5), v(5), v(5), v(5), v(5)};
  EXPECT_EQ(majority_filter(all, 6).value(), 5u);
  std::vector<std::optional<Fp>> one_liar = {v(5), v(5), v(5), v(5), v(9), v(5)};
  EXPECT_EQ(majority_filter(one_liar, 6).value(), 5u);
  // A third of a size-3 parent lying still leaves two thirds of the copies.
  std::vector<std::optional<Fp>> small = {v(5), v(5), v(8)};
  EXPECT_EQ(majority_filter(small, 3).value(), 5u);
  std::vector<std::optional<Fp>> split = {v(5), v(8), v(9)};
  EXPECT_THROW(majority_filter(split, 3), NoMajority);
  std::vector<std::optional<Fp>> too_few = {v(5), std::nullopt, std::nullopt};
  EXPECT_THROW(majority_filter(too_few, 3), NoMajority);
  std::vector<std::optional<Fp>> silent_and_liar = {v(5), v(8), std::nullopt};
  EXPECT_THROW(majority_filter(silent_and_liar, 3), NoMajority);
}

TEST(Protocol, ReconstructOutputCorrectsBadShares) {
  const PrimeField f(101);
  for (Behavior b : {Behavior::Silent, Behavior::TargetedShareCorruption, Behavior::Garbage}) {
    Network net(7, 101);
    AdversaryStrategy s = adversary({0, 3}, b);
    net.attach_adversary(std::make_shared<Adversary>(s, 101, 1));
    net.set_phase(Phase::Output);
    Rng rng({2});
    const ShareSet r = shamir_deal(f, f.element(33), 2, 7, rng);
    std::vector<Fp> sh;
    for (const auto& x : r.shares) sh.push_back(*x);
    std::vector<std::optional<Fp>> s_view(7, f.element(50));
    std::vector<PlayerId> quorum = {0, 1, 2, 3, 4, 5, 6};
    const auto o = reconstruct_output(net, f, quorum, s_view, sh, 1, 0);
    for (std::size_t k = 0; k < 7; ++k) {
      if (k != 0 && k != 3) EXPECT_EQ(o[k]->value(), 17u);
    }
  }
}

TEST(Protocol, GenMaskHonestSum) {
  const PrimeField f(101);
  Network net(6, 101);
  const std::vector<PlayerId> quorum = {0, 1, 2, 3, 4, 5};
  const auto r = gen_mask(net, f, quorum, 3, 1, 0, 1);
  ASSERT_EQ(r.size(), 3u);
  for (const auto& sh : r) {
    std::vector<Point> pts;
    for (std::size_t k = 0; k < 6; ++k) pts.push_back({abscissa(f, k), sh[k]});
    EXPECT_LE(lagrange_interpolate(pts).degree(), 1);
  }
}

TEST(Protocol, LargestCriterionRunIsFast) {
  const PrimeField f(PrimeField::kDefaultModulus);
  Rng rng({1});
  const Circuit c = random_circuit(32, 128, 6, rng);
  const auto begin = std::chrono::steady_clock::now();
  ProtocolConfig cfg;
  cfg.formation_retries = 100000;
  const auto r = run_protocol(cfg, c, random_inputs(f, 32, 1), adversary(spread(32, 0.25, 1), Behavior::Equivocate), 1);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - begin).count();
  expect_good_run(r, {});
  RecordProperty("seconds", std::to_string(secs));
  EXPECT_LT(secs, 10.0);
}

TEST(Protocol, FixedTableAndAdversaryView) {
  const PrimeField f(1009);
  const auto x = random_inputs(f, 8, 3);
  const std::vector<PlayerId> bad{2};
  Rng rng({11});
  const QuorumTable table = form_quorums_retry(8, bad, 6, rng, 0.0, 1000);
  ProtocolConfig cfg;
  cfg.modulus = 1009;
  cfg.fixed_table = table;
  std::size_t seen = 0, misdirected = 0;
  cfg.adversary_view = [&](Phase, const Message& m) {
    ++seen;
    if (m.to != 2) ++misdirected;
  };
  const ProtocolResult r = run_protocol(cfg, tree_circuit(8), x, adversary(bad, Behavior::Honest), 5);
  EXPECT_TRUE(r.correct());
  EXPECT_EQ(r.table.members, table.members);
  EXPECT_GT(seen, 0u);
  EXPECT_EQ(misdirected, 0u);

  // A table that is not good for this adversary, or of the wrong shape.
  std::vector<PlayerId> many{0, 1, 2, 3, 4};
  cfg.adversary_view = nullptr;
  EXPECT_THROW(run_protocol(cfg, tree_circuit(8), x, adversary(many, Behavior::Silent), 5), FormationFailure);
  cfg.quorum_size = 5;
  EXPECT_THROW(run_protocol(cfg, tree_circuit(8), x, {}, 5), ConfigError);
}
