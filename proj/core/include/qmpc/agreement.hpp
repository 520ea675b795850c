#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qmpc/simnet.hpp"

namespace qmpc {

/// Rounds taken by one agreement among `members` parties: three per phase,
/// t + 1 phases.
std::uint32_t agreement_rounds(std::size_t members);
/// Rounds taken by a simulated broadcast: send, echo, agreement on a digest,
/// supply, agreement on availability, supply.
std::uint32_t broadcast_rounds(std::size_t members);

/// Byzantine agreement on many independent instances at once, among the
/// channel endpoints listed in `members`. initial[k][i] is member k's input
/// for instance i; nullopt is an ordinary value (it stands for "no value").
/// Returns each member's decisions, indexed like `initial`.
///
/// Each phase runs Bracha-style thresholds (a value is a candidate once
/// n - t parties report it; t + 1 reports make it sticky) followed by a
/// rotating king, which gives deterministic termination after t + 1 phases
/// when fewer than a third of the members are faulty.
///
/// Throws RoundBudgetExceeded if the protocol needs more than `round_budget`
/// rounds.
std::vector<ValueList> agree_many(Channel& ch, std::span<const std::uint32_t> members,
                                  const std::vector<ValueList>& initial,
                                  std::optional<std::uint32_t> round_budget = std::nullopt);

/// Single-instance agreement.
std::vector<std::optional<Payload>> bracha_agree(
    Channel& ch, std::span<const std::uint32_t> members,
    const std::vector<std::optional<Payload>>& initial,
    std::optional<std::uint32_t> round_budget = std::nullopt);

/// Broadcast channel simulation. Sender s hands sent[s][k] to member k
/// (nullopt: sends nothing). Members echo a digest of what they got (the
/// payload itself up to four words, its SHA-256 beyond) and agree on one;
/// for hashed payloads, members holding the match then pass it on to those
/// that lack it. The decision for sender s is its value if it was consistent towards the good
/// members, otherwise a common value or nullopt (InconsistentSender) agreed
/// by every good member. Returns decided[k][s].
///
/// The first hop uses `send_kind`; for kinds that are not value lists the
/// payload travels raw.
std::vector<ValueList> broadcast_many(Channel& ch, std::span<const std::uint32_t> members,
                                      std::span<const std::uint32_t> senders,
                                      const std::vector<ValueList>& sent,
                                      MsgKind send_kind = MsgKind::BroadcastSend);

/// Convenience form where each sender sends one value to everybody.
std::vector<ValueList> broadcast_uniform(Channel& ch, std::span<const std::uint32_t> members,
                                         std::span<const std::uint32_t> senders,
                                         const ValueList& values);

/// One sender, per-recipient values. nullopt in the result means the
/// members agreed the sender was inconsistent.
std::vector<std::optional<Payload>> broadcast_check(Channel& ch, std::uint32_t sender,
                                                    const std::vector<std::optional<Payload>>& sent,
                                                    std::span<const std::uint32_t> members);

}  // namespace qmpc
