#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "qmpc/circuit.hpp"
#include "qmpc/field.hpp"
#include "qmpc/simnet.hpp"

namespace qmpc {

/// Quorums 1..n (stored 0-based). Each quorum is a list of distinct players;
/// a player's position in the list fixes its share abscissa.
struct QuorumTable {
  std::size_t n = 0;
  std::size_t quorum_size = 0;
  std::vector<std::vector<PlayerId>> members;
  std::vector<bool> good;
  /// Quorum ids (1-based) each player belongs to.
  std::vector<std::vector<std::uint32_t>> memberships;
  /// Per-player message charge standing in for the formation protocol.
  std::uint64_t synthetic_cost = 0;

  const std::vector<PlayerId>& quorum(std::uint32_t id) const { return members.at(id - 1); }
  /// Node j is served by quorum ((j - 1) mod n) + 1.
  std::uint32_t quorum_of_node(std::uint32_t node) const {
    return static_cast<std::uint32_t>((node - 1) % n) + 1;
  }
  std::size_t max_memberships() const;
};

/// ceil(sqrt(n) * log2(n)), the per-player formation charge.
std::uint64_t formation_charge(std::size_t n);

/// Samples n quorums of `quorum_size` distinct players each, independently.
/// Throws ConfigError if |bad| > (1/3 - epsilon) n or quorum_size > n, and
/// FormationFailure if some quorum has a third or more bad members.
QuorumTable form_quorums(std::size_t n, std::span<const PlayerId> bad, std::size_t quorum_size,
                         Rng& rng, double epsilon = 0.0);

/// As form_quorums, retrying up to `retries` more times on FormationFailure.
QuorumTable form_quorums_retry(std::size_t n, std::span<const PlayerId> bad, std::size_t quorum_size,
                               Rng& rng, double epsilon, int retries);

/// Recomputes goodness flags and memberships from the member lists.
void refresh_table(QuorumTable& t, std::span<const PlayerId> bad);

/// node -> quorum for nodes 1..m+n (index 0 unused).
std::vector<std::uint32_t> assign_nodes(const GateGraph& g, const QuorumTable& t);
/// Number of nodes each quorum serves (index 0 unused).
std::vector<std::size_t> quorum_load(const std::vector<std::uint32_t>& assignment, std::size_t n);

struct TreeLinks {
  std::uint32_t parent = 0;  // 0 for the root
  std::vector<std::uint32_t> children;
};
/// Binary propagation tree: parent floor(i/2), children {2i, 2i+1} within 1..n.
TreeLinks tree_links(std::uint32_t quorum, std::size_t n);

/// Deterministic text dump and its inverse.
std::string export_table(const QuorumTable& t);
QuorumTable import_table(const std::string& text, std::span<const PlayerId> bad);

}  // namespace qmpc
