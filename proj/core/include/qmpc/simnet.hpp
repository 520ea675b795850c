#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmpc/field.hpp"

namespace qmpc {

using PlayerId = std::uint32_t;
using Payload = std::vector<std::uint64_t>;

enum class Phase : std::uint8_t { QuorumFormation, Commitment, Mask, Gate, Output };
inline constexpr std::size_t kPhaseCount = 5;
const char* phase_name(Phase p);

enum class MsgKind : std::uint8_t {
  Deal,           // VSS row from a dealer
  CrossCheck,     // VSS pairwise consistency value
  BroadcastSend,  // first hop of a simulated broadcast
  Echo,           // relay of a received broadcast value
  Candidate,      // graded-consensus round 1
  Grade,          // graded-consensus round 2
  King,           // king round
  ShareOpen,      // share sent for (error-corrected) reconstruction
  MaskedValue,    // a masked node value s_j
  Output,         // circuit output during propagation
  Supply,         // payload handed to members that lack a broadcast value
};
const char* kind_name(MsgKind k);

/// True for kinds whose payload is a ValueList encoding.
bool is_structured(MsgKind k);

/// A point-to-point message. `from`/`to` are physical players; `src`/`dst`
/// are endpoint (role) indices inside the protocol instance identified by
/// `tag`. Delivery happens at round + 1.
struct Message {
  PlayerId from = 0;
  PlayerId to = 0;
  std::uint32_t src = 0;
  std::uint32_t dst = 0;
  std::uint32_t round = 0;
  std::uint64_t tag = 0;
  MsgKind kind = MsgKind::Deal;
  Payload payload;
};

/// List of optional payloads, the wire format for agreement traffic:
/// per entry [present, length, words...].
using ValueList = std::vector<std::optional<Payload>>;
Payload encode_values(const ValueList& values);
/// Returns nullopt for malformed input or a count mismatch.
std::optional<ValueList> decode_values(const Payload& payload, std::size_t expected);

/// Protocol instance tags: phase, a node or quorum id, and a sub-step.
inline std::uint64_t make_tag(Phase phase, std::uint32_t id, std::uint32_t step) {
  return (static_cast<std::uint64_t>(phase) << 56) | (static_cast<std::uint64_t>(id) << 24) |
         (step & 0xFFFFFFu);
}

enum class Behavior : std::uint8_t {
  Honest,
  Silent,
  Garbage,
  Equivocate,
  TargetedShareCorruption,
  InconsistentCommit,
};
const char* behavior_name(Behavior b);
std::optional<Behavior> parse_behavior(const std::string& name);

/// Static Byzantine adversary: a fixed controlled set and a behavior per
/// phase. Controlled players compute their messages honestly; the strategy
/// then rewrites or drops them on the way out.
struct AdversaryStrategy {
  std::vector<PlayerId> controlled;
  Behavior behavior = Behavior::Honest;
  std::map<Phase, Behavior> per_phase;
};

class Adversary {
 public:
  Adversary(AdversaryStrategy strategy, std::uint64_t modulus, std::uint64_t seed);

  bool controls(PlayerId p) const { return p < mask_.size() && mask_[p]; }
  const std::vector<PlayerId>& controlled() const { return strategy_.controlled; }
  Behavior behavior(Phase phase) const;

  /// Rewrites an outgoing message of a controlled player. Returns false to
  /// drop it.
  bool tamper(Phase phase, Message& m);

  /// Rushing view: every message delivered to a controlled player.
  void observe(Phase phase, const Message& m) {
    if (on_view) on_view(phase, m);
  }
  std::function<void(Phase, const Message&)> on_view;

 private:
  std::uint64_t random_word() { return rng_.below(p_); }
  void perturb(Message& m, std::uint64_t delta);

  AdversaryStrategy strategy_;
  std::vector<bool> mask_;
  std::uint64_t p_;
  Rng rng_;
};

struct PhaseCounters {
  std::uint64_t messages = 0;
  std::uint64_t words = 0;
  std::uint64_t field_ops = 0;

  PhaseCounters& operator+=(const PhaseCounters& o) {
    messages += o.messages;
    words += o.words;
    field_ops += o.field_ops;
    return *this;
  }
};

struct PlayerCounters {
  std::array<PhaseCounters, kPhaseCount> phase{};
  PhaseCounters total() const;
};

/// Per-player cost ledger. Quorum formation is charged synthetically.
struct RunMetrics {
  std::vector<PlayerCounters> players;
  std::uint64_t synthetic_qf_messages = 0;
  std::uint32_t rounds = 0;

  std::uint64_t max_messages(std::optional<Phase> phase = std::nullopt) const;
  double median_messages(std::optional<Phase> phase = std::nullopt) const;
  std::uint64_t max_field_ops(std::optional<Phase> phase = std::nullopt) const;
  std::uint64_t total_messages() const;
};

struct TranscriptEntry {
  std::uint32_t round;  // delivery round
  PlayerId from;
  PlayerId to;
  std::uint64_t tag;
  MsgKind kind;
  std::uint64_t payload_hash;
};

/// FNV-1a over the little-endian encoding of the payload words.
std::uint64_t payload_hash(const Payload& p);

/// Deterministic synchronous network with private authenticated channels.
class Network {
 public:
  Network(std::size_t players, std::uint64_t modulus, bool keep_transcript = false);
  ~Network();
  Network(const Network&) = delete;
  Network& operator=(const Network&) = delete;

  std::size_t players() const { return counters_.size(); }
  std::uint64_t modulus() const { return p_; }

  /// Must be called before the first delivery; throws StrategyAfterStart.
  void attach_adversary(std::shared_ptr<Adversary> adversary);
  const Adversary* adversary() const { return adversary_.get(); }
  bool is_bad(PlayerId p) const { return adversary_ && adversary_->controls(p); }

  void set_phase(Phase p) { phase_ = p; }
  Phase phase() const { return phase_; }

  /// Moves one round of messages to their recipients. Messages from
  /// controlled players pass through the adversary. The result is sorted by
  /// (dst, src, kind).
  std::vector<Message> deliver_round(std::vector<Message> outbox);

  /// Adversary-originated message; throws SpoofAttempt unless `from` is a
  /// controlled player.
  void inject(Message m);

  void charge_field_ops(PlayerId p, std::uint64_t ops) { counters_[p].phase[idx()].field_ops += ops; }
  void charge_synthetic(Phase phase, PlayerId p, std::uint64_t messages);

  RunMetrics metrics_snapshot() const;
  const std::vector<TranscriptEntry>& transcript() const { return transcript_; }
  /// SHA-256 over every delivered message, hex encoded.
  std::string transcript_digest() const;
  std::uint32_t last_round() const { return last_round_; }

 private:
  std::size_t idx() const { return static_cast<std::size_t>(phase_); }
  void record(const Message& m);

  std::uint64_t p_;
  bool keep_transcript_;
  bool started_ = false;
  Phase phase_ = Phase::QuorumFormation;
  std::shared_ptr<Adversary> adversary_;
  std::vector<PlayerCounters> counters_;
  std::uint64_t synthetic_qf_ = 0;
  std::uint32_t last_round_ = 0;
  std::vector<TranscriptEntry> transcript_;
  struct Digest;
  std::unique_ptr<Digest> digest_;
  std::vector<unsigned char> scratch_;
};

/// Messages delivered to the endpoints of one instance in one round.
class Inbox {
 public:
  Inbox() = default;
  Inbox(std::vector<Message> delivered, std::size_t endpoints);

  std::span<const Message> to(std::uint32_t dst) const;
  const Payload* find(std::uint32_t dst, std::uint32_t src, MsgKind kind) const;
  std::size_t size() const { return msgs_.size(); }

 private:
  std::vector<Message> msgs_;
  std::vector<std::size_t> offsets_;
};

/// One protocol instance on the network: a tag and a list of endpoints
/// (roles), each bound to a physical player. A player may own several
/// endpoints; traffic between them is local and not counted.
class Channel {
 public:
  Channel(Network& net, std::uint64_t tag, std::vector<PlayerId> endpoints,
          std::uint32_t start_round);

  Network& network() { return net_; }
  std::uint64_t tag() const { return tag_; }
  std::size_t size() const { return endpoints_.size(); }
  PlayerId player(std::uint32_t endpoint) const { return endpoints_[endpoint]; }
  bool is_bad(std::uint32_t endpoint) const { return net_.is_bad(endpoints_[endpoint]); }
  std::uint32_t round() const { return round_; }
  std::uint32_t rounds_used() const { return round_ - start_; }

  void post(std::uint32_t src, std::uint32_t dst, MsgKind kind, Payload payload);
  /// Delivers everything posted since the last exchange.
  Inbox exchange();

 private:
  Network& net_;
  std::uint64_t tag_;
  std::vector<PlayerId> endpoints_;
  std::uint32_t start_;
  std::uint32_t round_;
  std::vector<Message> pending_;
};

/// Attributes the field operations performed in its scope to one player.
class OpMeter {
 public:
  OpMeter(Network& net, PlayerId player)
      : net_(net), player_(player), start_(field_op_counter()) {}
  ~OpMeter() { net_.charge_field_ops(player_, field_op_counter() - start_); }
  OpMeter(const OpMeter&) = delete;
  OpMeter& operator=(const OpMeter&) = delete;

 private:
  Network& net_;
  PlayerId player_;
  std::uint64_t start_;
};

}  // namespace qmpc
