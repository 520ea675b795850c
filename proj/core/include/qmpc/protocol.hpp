#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmpc/circuit.hpp"
#include "qmpc/quorum.hpp"
#include "qmpc/simnet.hpp"

namespace qmpc {

/// Round counts of the phase schedule.
struct ScheduleConstants {
  std::uint32_t t_qf = 1;
  std::uint32_t t_vss = 0;
  std::uint32_t t_r = 0;
  std::uint32_t t_smpc = 0;

  /// First round of the gates at height h >= 1.
  std::uint32_t gate_start(int h) const {
    return t_qf + t_vss + t_r + static_cast<std::uint32_t>(h - 1) * t_smpc;
  }
  /// First round after the gates of the given root height.
  std::uint32_t computation_end(int root_height) const {
    return t_qf + t_vss + t_r + static_cast<std::uint32_t>(root_height) * t_smpc;
  }
};

/// Constants derived from the sub-protocol round bounds for quorums of size q.
ScheduleConstants schedule_for(std::size_t q, std::size_t max_degree);

struct ProtocolConfig {
  std::uint64_t modulus = PrimeField::kDefaultModulus;
  std::size_t quorum_size = 0;  // 0: ceil(2 log2 n)
  double epsilon = 0.0;
  int formation_retries = 1;
  bool keep_transcript = false;
  /// Use this table instead of sampling one (must match n and the quorum
  /// size; goodness is recomputed for the adversary).
  std::optional<QuorumTable> fixed_table;
  /// Called for every message delivered to a bad player.
  std::function<void(Phase, const Message&)> adversary_view;
};

/// ceil(c * log2 n), at least 4 and at most n.
std::size_t default_quorum_size(std::size_t n, double c = 2.0);

/// What the members of an input node's quorum hold after commitment.
struct Commitment {
  std::vector<std::optional<Fp>> s_view;  // per member
  std::vector<Fp> shares;                 // per member, degree t
  bool defaulted = false;                 // as decided by the good members
  std::uint32_t rounds = 0;
};

/// The owner sends s = x + r to every member of `quorum` with a broadcast
/// check and deals r by VSS. Inconsistent sending or a failed VSS makes the
/// input default to 0 with r = 0.
Commitment input_commitment(Network& net, const PrimeField& field, PlayerId owner, Fp x,
                            const std::vector<PlayerId>& quorum, std::uint64_t tag,
                            std::uint32_t start_round, std::uint64_t seed);

/// Fresh masks for several nodes served by one quorum: every member deals a
/// random value per node and r_v is the sum. Returns shares[node][member].
std::vector<std::vector<Fp>> gen_mask(Network& net, const PrimeField& field,
                                      const std::vector<PlayerId>& quorum, std::size_t nodes,
                                      std::uint64_t tag, std::uint32_t start_round, std::uint64_t seed);

/// Members of the root quorum open r and compute o = s - r. Returns o per
/// member (nullopt where it could not be decoded).
std::vector<std::optional<Fp>> reconstruct_output(Network& net, const PrimeField& field,
                                                  const std::vector<PlayerId>& quorum,
                                                  const std::vector<std::optional<Fp>>& s_view,
                                                  const std::vector<Fp>& r_shares, std::uint64_t tag,
                                                  std::uint32_t start_round);

/// Output adoption from the copies sent by a parent quorum of size
/// `parent_size`. Needs at least ceil(2 parent_size / 3) copies and a value
/// carried by at least ceil(2/3 of the copies received); throws NoMajority
/// otherwise.
Fp majority_filter(std::span<const std::optional<Fp>> received, std::size_t parent_size);

/// Omniscient record of one node of the graph.
struct NodeRecord {
  std::uint32_t quorum = 0;
  std::optional<Fp> s;  // first good member's s_j
  bool unanimous = false;
  Fp r;                 // mask interpolated from the good members' shares
  bool mask_degree_ok = false;
  Fp value;             // V_j on the committed inputs
  bool invariant = false;
};

struct ProtocolResult {
  /// Final output of every player (nullopt for bad players).
  std::vector<std::optional<Fp>> outputs;
  std::vector<Fp> committed_inputs;
  std::vector<bool> defaulted;
  Fp expected;
  /// nodes[j] for j in 1..m+n.
  std::vector<NodeRecord> nodes;
  /// Output adopted by each quorum (1-based; nullopt when its good members
  /// disagree or failed).
  std::vector<std::optional<Fp>> quorum_output;
  QuorumTable table;
  ScheduleConstants schedule;
  RunMetrics metrics;
  std::string transcript_digest;
  std::vector<TranscriptEntry> transcript;
  std::uint32_t rounds = 0;

  /// Every good player's output equals the oracle.
  bool correct() const;
  /// Every node satisfies s_j - r_j = V_j with unanimous s_j.
  bool invariants_hold() const;
};

/// Runs the whole protocol: quorum formation, input commitment, masks,
/// gates by height, output reconstruction and propagation. The adversary
/// controls `strategy.controlled`. Throws FormationFailure, ConfigError,
/// ThresholdViolated, NoMajority.
ProtocolResult run_protocol(const ProtocolConfig& config, const Circuit& circuit,
                            const std::vector<Fp>& inputs, const AdversaryStrategy& strategy,
                            std::uint64_t seed);

}  // namespace qmpc
