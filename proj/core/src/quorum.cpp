#include "qmpc/quorum.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace qmpc {

std::size_t QuorumTable::max_memberships() const {
  std::size_t best = 0;
  for (const auto& m : memberships) best = std::max(best, m.size());
  return best;
}

std::uint64_t formation_charge(std::size_t n) {
  if (n < 2) return 1;
  return static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(n)) * std::log2(static_cast<double>(n))));
}

void refresh_table(QuorumTable& t, std::span<const PlayerId> bad) {
  std::vector<bool> is_bad(t.n, false);
  for (PlayerId b : bad) {
    if (b < t.n) is_bad[b] = true;
  }
  t.good.assign(t.members.size(), true);
  t.memberships.assign(t.n, {});
  for (std::size_t q = 0; q < t.members.size(); ++q) {
    std::size_t nbad = 0;
    for (PlayerId p : t.members[q]) {
      nbad += is_bad[p] ? 1 : 0;
      t.memberships[p].push_back(static_cast<std::uint32_t>(q + 1));
    }
    t.good[q] = 3 * nbad < t.members[q].size();
  }
}

QuorumTable form_quorums(std::size_t n, std::span<const PlayerId> bad, std::size_t quorum_size,
                         Rng& rng, double epsilon) {
  if (quorum_size > n || quorum_size == 0) {
    throw ConfigError("quorum size " + std::to_string(quorum_size) + " must be in 1.." + std::to_string(n));
  }
  if (static_cast<double>(bad.size()) > (1.0 / 3.0 - epsilon) * static_cast<double>(n) + 1e-9) {
    throw ConfigError("too many bad players for the configured epsilon");
  }
  QuorumTable t;
  t.n = n;
  t.quorum_size = quorum_size;
  t.synthetic_cost = formation_charge(n);
  std::vector<PlayerId> pool(n);
  for (std::size_t q = 0; q < n; ++q) {
    for (std::size_t i = 0; i < n; ++i) pool[i] = static_cast<PlayerId>(i);
    // Partial Fisher-Yates: the first quorum_size entries are a uniform
    // sample without replacement.
    for (std::size_t i = 0; i < quorum_size; ++i) std::swap(pool[i], pool[i + rng.below(n - i)]);
    t.members.emplace_back(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(quorum_size));
  }
  refresh_table(t, bad);
  for (std::size_t q = 0; q < n; ++q) {
    if (!t.good[q]) throw FormationFailure("quorum " + std::to_string(q + 1) + " has a third or more bad members");
  }
  return t;
}

QuorumTable form_quorums_retry(std::size_t n, std::span<const PlayerId> bad, std::size_t quorum_size,
                               Rng& rng, double epsilon, int retries) {
  for (int attempt = 0;; ++attempt) {
    try {
      return form_quorums(n, bad, quorum_size, rng, epsilon);
    } catch (const FormationFailure&) {
      if (attempt >= retries) throw;
    }
  }
}

std::vector<std::uint32_t> assign_nodes(const GateGraph& g, const QuorumTable& t) {
  std::vector<std::uint32_t> out(g.nodes() + 1, 0);
  for (std::uint32_t j = 1; j <= g.nodes(); ++j) out[j] = t.quorum_of_node(j);
  return out;
}

std::vector<std::size_t> quorum_load(const std::vector<std::uint32_t>& assignment, std::size_t n) {
  std::vector<std::size_t> load(n + 1, 0);
  for (std::size_t j = 1; j < assignment.size(); ++j) ++load[assignment[j]];
  return load;
}

TreeLinks tree_links(std::uint32_t quorum, std::size_t n) {
  TreeLinks l;
  l.parent = quorum / 2;
  for (std::uint32_t c : {2 * quorum, 2 * quorum + 1}) {
    if (c <= n) l.children.push_back(c);
  }
  return l;
}

std::string export_table(const QuorumTable& t) {
  std::ostringstream os;
  os << "quorums " << t.n << " " << t.quorum_size << " " << t.synthetic_cost << "\n";
  for (std::size_t q = 0; q < t.members.size(); ++q) {
    os << "q " << q + 1 << " " << (t.good[q] ? "good" : "bad");
    for (PlayerId p : t.members[q]) os << " " << p;
    os << "\n";
  }
  return os.str();
}

QuorumTable import_table(const std::string& text, std::span<const PlayerId> bad) {
  std::istringstream in(text);
  std::string word;
  QuorumTable t;
  std::size_t line = 1;
  if (!(in >> word) || word != "quorums" || !(in >> t.n >> t.quorum_size >> t.synthetic_cost)) {
    throw ParseError(line, "expected header: quorums <n> <size> <charge>");
  }
  t.members.assign(t.n, {});
  std::string rest;
  std::getline(in, rest);
  for (std::size_t q = 0; q < t.n; ++q) {
    ++line;
    std::string l;
    if (!std::getline(in, l)) throw ParseError(line, "missing quorum line");
    std::istringstream ls(l);
    std::size_t id = 0;
    std::string flag;
    if (!(ls >> word >> id >> flag) || word != "q" || id != q + 1) throw ParseError(line, "expected: q <id> <good|bad> <players>");
    PlayerId p = 0;
    while (ls >> p) {
      if (p >= t.n) throw ParseError(line, "player id out of range");
      t.members[q].push_back(p);
    }
    if (t.members[q].size() != t.quorum_size) throw ParseError(line, "wrong quorum size");
  }
  refresh_table(t, bad);
  return t;
}

}  // namespace qmpc
