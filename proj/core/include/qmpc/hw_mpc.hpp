#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qmpc/circuit.hpp"
#include "qmpc/sharing.hpp"
#include "qmpc/simnet.hpp"

namespace qmpc {

/// What one child quorum brings to a gate computation: its members, each
/// member's copy of the public masked value s_i, and each member's Shamir
/// share of the mask r_i (abscissa = position + 1, degree threshold_for(size)).
struct ChildInput {
  std::vector<PlayerId> quorum;
  std::vector<std::optional<Fp>> s_view;
  std::vector<Fp> mask_shares;
};

/// One heavyweight computation of s_g = f_g(O_1, ..., O_k) + r_g.
///
/// The computing committee is the gate's quorum. Each (player, child quorum)
/// pair is a separate input role: it reshares its share of r_i to the
/// committee by VSS and sends its copy of s_i. Inside the committee the r_i
/// are rebuilt with error correction on shared values, O_i = s_i - r_i, the
/// gate function runs on shares, and s_g is opened to the committee.
struct GateSession {
  GateKind kind = GateKind::Add;
  std::int64_t constant = 0;
  std::vector<PlayerId> compute;
  /// Committee members' shares of r_g.
  std::vector<Fp> rg_shares;
  std::vector<ChildInput> children;
};

struct SessionResult {
  /// s_g as learned by each committee member (nullopt if decoding failed).
  std::vector<std::optional<Fp>> s_out;
  std::uint32_t rounds = 0;
};

/// Runs a session on `net` starting at `start_round`. Throws
/// ThresholdViolated if the committee or a child quorum has a third or more
/// bad members, and RoundBudgetExceeded if it needs more than `budget` rounds.
SessionResult mpc_run(Network& net, const PrimeField& field, const GateSession& session,
                      std::uint64_t tag, std::uint32_t start_round, std::uint32_t budget,
                      std::uint64_t seed);

/// Worst-case rounds of mpc_run for a committee of size q, child quorums of
/// size q, and the given gate fan-in (multiplications are sequential).
std::uint32_t mpc_max_rounds(std::size_t q, GateKind kind, std::size_t fan_in);

/// Degree-t shares of a*b from degree-t shares of a and b held by `members`
/// (member k at abscissa k + 1). Each member reshares its local product with
/// a proof that it is the product of its resharings of a_k and b_k; dealers
/// caught cheating have their factors opened and their term replaced by a
/// public constant. Errorless while fewer than a third of the members are bad.
std::vector<Fp> mpc_multiply(Channel& ch, const PrimeField& field,
                             std::span<const std::uint32_t> members, int t,
                             const std::vector<Fp>& a, const std::vector<Fp>& b, std::uint64_t seed);

/// Rounds of one mpc_multiply in the worst case.
std::uint32_t multiply_max_rounds(std::size_t members, int t);

/// Local affine combination sum_i c_i * v_i + constant on share sets held by
/// the same committee. Throws MismatchedRoleSets.
ShareSet mpc_linear(std::span<const Fp> coeffs, std::span<const ShareSet> shares, Fp constant);

}  // namespace qmpc
