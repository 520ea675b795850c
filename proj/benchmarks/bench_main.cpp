#include <benchmark/benchmark.h>

#include <numeric>

#include "qmpc/agreement.hpp"
#include "qmpc/circuit.hpp"
#include "qmpc/hw_mpc.hpp"
#include "qmpc/protocol.hpp"
#include "qmpc/sharing.hpp"
#include "qmpc/vss.hpp"

using namespace qmpc;

namespace {

std::vector<std::uint32_t> iota_u32(std::size_t n) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

std::vector<PlayerId> iota_players(std::size_t n) {
  std::vector<PlayerId> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

void BM_FieldMul(benchmark::State& state) {
  const PrimeField f;
  Rng rng(1);
  Fp a = f.sample(rng), b = f.sample(rng);
  for (auto _ : state) {
    a = a * b + b;
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_FieldMul);

void BM_FieldInverse(benchmark::State& state) {
  const PrimeField f;
  Rng rng(2);
  Fp a = f.sample(rng);
  for (auto _ : state) {
    a = a.inverse() + f.one();
    benchmark::DoNotOptimize(a);
  }
}
BENCHMARK(BM_FieldInverse);

// Reconstruction of a sharing among q members with t corrupted slots.
void BM_ShamirReconstructCorrupted(benchmark::State& state) {
  const std::size_t q = static_cast<std::size_t>(state.range(0));
  const int t = threshold_for(q);
  const PrimeField f;
  Rng rng(3);
  ShareSet set = shamir_deal(f, f.element(42), t, q, rng);
  for (int i = 0; i < t; ++i) set.shares[static_cast<std::size_t>(i)] = f.sample(rng);
  for (auto _ : state) benchmark::DoNotOptimize(shamir_reconstruct(set));
}
BENCHMARK(BM_ShamirReconstructCorrupted)->Arg(4)->Arg(10)->Arg(16)->Arg(28);

void BM_BroadcastCheck(benchmark::State& state) {
  const std::size_t q = static_cast<std::size_t>(state.range(0));
  const auto members = iota_u32(q);
  for (auto _ : state) {
    Network net(q + 1, PrimeField::kDefaultModulus);
    Channel ch(net, 1, iota_players(q + 1), 0);
    std::vector<std::optional<Payload>> sent(q, Payload{7});
    benchmark::DoNotOptimize(broadcast_check(ch, static_cast<std::uint32_t>(q), sent, members));
  }
}
BENCHMARK(BM_BroadcastCheck)->Arg(6)->Arg(10)->Arg(14);

// One VSS instance per member, in lockstep.
void BM_VssShareMany(benchmark::State& state) {
  const std::size_t q = static_cast<std::size_t>(state.range(0));
  const int t = threshold_for(q);
  const PrimeField f;
  const auto members = iota_u32(q);
  Rng rng(4);
  std::vector<VssInstance> inst;
  for (std::uint32_t d = 0; d < q; ++d) inst.push_back({d, Polynomial::random_with_constant(f, f.sample(rng), t, rng)});
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Network net(q, f.modulus());
    Channel ch(net, 2, iota_players(q), 0);
    benchmark::DoNotOptimize(vss_share_many(ch, f, members, t, inst, ++seed));
  }
}
BENCHMARK(BM_VssShareMany)->Arg(6)->Arg(10)->Arg(14);

void BM_MpcMultiply(benchmark::State& state) {
  const std::size_t q = static_cast<std::size_t>(state.range(0));
  const int t = threshold_for(q);
  const PrimeField f;
  const auto members = iota_u32(q);
  Rng rng(5);
  const ShareSet a = shamir_deal(f, f.element(6), t, q, rng), b = shamir_deal(f, f.element(7), t, q, rng);
  std::vector<Fp> av, bv;
  for (std::size_t k = 0; k < q; ++k) {
    av.push_back(*a.shares[k]);
    bv.push_back(*b.shares[k]);
  }
  std::uint64_t seed = 0;
  for (auto _ : state) {
    Network net(q, f.modulus());
    Channel ch(net, 3, iota_players(q), 0);
    benchmark::DoNotOptimize(mpc_multiply(ch, f, members, t, av, bv, ++seed));
  }
}
BENCHMARK(BM_MpcMultiply)->Arg(6)->Arg(10)->Arg(14);

// Full protocol on a random circuit with m = 2n; reports the per-player
// maximum of gate-phase messages as a counter.
void BM_Protocol(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  const std::size_t m = 2 * n;
  Rng crng({n, 9});
  const Circuit c = random_circuit(n, m, 2 + static_cast<int>((m - 2) / n), crng);
  const PrimeField f;
  std::vector<Fp> x;
  for (std::size_t i = 0; i < n; ++i) x.push_back(f.sample(crng));
  ProtocolConfig cfg;
  std::uint64_t seed = 0;
  double gate_max = 0;
  for (auto _ : state) {
    const ProtocolResult r = run_protocol(cfg, c, x, {}, ++seed);
    gate_max = static_cast<double>(r.metrics.max_messages(Phase::Gate));
    benchmark::DoNotOptimize(r.outputs);
  }
  state.counters["gate_max_messages"] = gate_max;
}
BENCHMARK(BM_Protocol)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
