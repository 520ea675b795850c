#include "qmpc/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <string>

#include "qmpc/agreement.hpp"
#include "qmpc/errors.hpp"
#include "qmpc/hw_mpc.hpp"
#include "qmpc/sharing.hpp"
#include "qmpc/vss.hpp"

namespace qmpc {

namespace {

constexpr std::uint32_t kStepCommit = 1;
constexpr std::uint32_t kStepMask = 2;
constexpr std::uint32_t kStepGate = 3;
constexpr std::uint32_t kStepOutput = 4;

std::vector<std::uint32_t> iota_members(std::size_t n) {
  std::vector<std::uint32_t> v(n);
  std::iota(v.begin(), v.end(), 0u);
  return v;
}

std::size_t first_good(const Network& net, const std::vector<PlayerId>& quorum) {
  for (std::size_t k = 0; k < quorum.size(); ++k) {
    if (!net.is_bad(quorum[k])) return k;
  }
  return 0;
}

std::optional<Fp> decode_one(const PrimeField& field, const std::optional<Payload>& p) {
  if (!p || p->size() != 1 || (*p)[0] >= field.modulus()) return std::nullopt;
  return field.element((*p)[0]);
}

void check_budget(std::uint32_t used, std::uint32_t budget, const char* what) {
  if (used > budget) {
    throw RoundBudgetExceeded(std::string(what) + " took " + std::to_string(used) + " rounds, budget " +
                              std::to_string(budget));
  }
}

}  // namespace

std::size_t default_quorum_size(std::size_t n, double c) {
  if (n <= 4) return n;
  const auto q = static_cast<std::size_t>(std::ceil(c * std::log2(static_cast<double>(n)) - 1e-9));
  return std::min(n, std::max<std::size_t>(4, q));
}

ScheduleConstants schedule_for(std::size_t q, std::size_t max_degree) {
  const int t = threshold_for(q);
  ScheduleConstants s;
  s.t_qf = 1;
  s.t_vss = broadcast_rounds(q) + vss_max_rounds(q, t, true);
  s.t_r = vss_max_rounds(q, t, false);
  s.t_smpc = std::max(mpc_max_rounds(q, GateKind::Mul, max_degree), mpc_max_rounds(q, GateKind::Add, max_degree));
  return s;
}

Commitment input_commitment(Network& net, const PrimeField& field, PlayerId owner, Fp x,
                            const std::vector<PlayerId>& quorum, std::uint64_t tag,
                            std::uint32_t start_round, std::uint64_t seed) {
  const std::size_t q = quorum.size();
  const int t = threshold_for(q);
  std::vector<PlayerId> endpoints = quorum;
  endpoints.push_back(owner);
  const auto dealer = static_cast<std::uint32_t>(q);
  Channel ch(net, tag, endpoints, start_round);
  const auto members = iota_members(q);

  Rng rng({seed, tag, owner, 0x72u});
  const Fp r = field.sample(rng);
  const Fp s = x + r;
  const Polynomial g = Polynomial::random_with_constant(field, r, t, rng);

  const std::uint32_t senders[] = {dealer};
  std::vector<ValueList> sent{ValueList(q, Payload{s.value()})};
  const auto decided = broadcast_many(ch, members, senders, sent, MsgKind::MaskedValue);
  const VssOutcome vo = vss_share_many(ch, field, members, t, {VssInstance{dealer, g}}, seed);

  Commitment out;
  out.s_view.resize(q);
  out.shares.resize(q, field.zero());
  const std::size_t ref = first_good(net, quorum);
  for (std::size_t k = 0; k < q; ++k) {
    const auto sk = decode_one(field, decided[k][0]);
    const bool dflt = !sk || vo.disqualified[k][0];
    out.s_view[k] = dflt ? field.zero() : *sk;
    out.shares[k] = dflt ? field.zero() : vo.shares[k][0];
    if (k == ref) out.defaulted = dflt;
  }
  out.rounds = ch.rounds_used();
  return out;
}

std::vector<std::vector<Fp>> gen_mask(Network& net, const PrimeField& field,
                                      const std::vector<PlayerId>& quorum, std::size_t nodes,
                                      std::uint64_t tag, std::uint32_t start_round, std::uint64_t seed) {
  const std::size_t q = quorum.size();
  const int t = threshold_for(q);
  Channel ch(net, tag, quorum, start_round);
  const auto members = iota_members(q);
  std::vector<VssInstance> inst;
  for (std::size_t k = 0; k < q; ++k) {
    OpMeter meter(net, quorum[k]);
    Rng rng({seed, tag, members[k], 0x6d61736bu});
    for (std::size_t v = 0; v < nodes; ++v) {
      inst.push_back({members[k], Polynomial::random_with_constant(field, field.sample(rng), t, rng)});
    }
  }
  const VssOutcome vo = vss_share_many(ch, field, members, t, inst, seed);
  // Disqualified dealers already contribute zero shares.
  std::vector<std::vector<Fp>> out(nodes, std::vector<Fp>(q, field.zero()));
  for (std::size_t k = 0; k < q; ++k) {
    for (std::size_t d = 0; d < q; ++d) {
      for (std::size_t v = 0; v < nodes; ++v) out[v][k] += vo.shares[k][d * nodes + v];
    }
  }
  return out;
}

std::vector<std::optional<Fp>> reconstruct_output(Network& net, const PrimeField& field,
                                                  const std::vector<PlayerId>& quorum,
                                                  const std::vector<std::optional<Fp>>& s_view,
                                                  const std::vector<Fp>& r_shares, std::uint64_t tag,
                                                  std::uint32_t start_round) {
  const std::size_t q = quorum.size();
  Channel ch(net, tag, quorum, start_round);
  const auto members = iota_members(q);
  std::vector<std::vector<Fp>> shares(q);
  for (std::size_t k = 0; k < q; ++k) shares[k].push_back(r_shares[k]);
  const auto opened = open_shares(ch, field, members, members, shares, threshold_for(q));
  std::vector<std::optional<Fp>> o(q);
  for (std::size_t k = 0; k < q; ++k) {
    if (s_view[k] && opened[k][0]) o[k] = *s_view[k] - *opened[k][0];
  }
  return o;
}

Fp majority_filter(std::span<const std::optional<Fp>> received, std::size_t parent_size) {
  std::map<std::uint64_t, std::size_t> tally;
  std::size_t got = 0;
  std::uint64_t modulus = 0;
  for (const auto& v : received) {
    if (!v) continue;
    ++got;
    ++tally[v->value()];
    modulus = v->modulus();
  }
  if (3 * got < 2 * parent_size) {
    throw NoMajority("only " + std::to_string(got) + " of " + std::to_string(parent_size) + " copies arrived");
  }
  for (const auto& [value, count] : tally) {
    if (3 * count >= 2 * got) return Fp(value, modulus);
  }
  throw NoMajority("no value carried by two thirds of " + std::to_string(got) + " copies");
}

bool ProtocolResult::correct() const {
  for (std::size_t p = 0; p < outputs.size(); ++p) {
    if (outputs[p] && *outputs[p] != expected) return false;
  }
  return true;
}

bool ProtocolResult::invariants_hold() const {
  for (std::size_t j = 1; j < nodes.size(); ++j) {
    if (!nodes[j].invariant) return false;
  }
  return true;
}

ProtocolResult run_protocol(const ProtocolConfig& config, const Circuit& circuit,
                            const std::vector<Fp>& inputs, const AdversaryStrategy& strategy,
                            std::uint64_t seed) {
  const std::size_t n = inputs.size();
  const GateGraph graph = build_graph(circuit, n);
  const std::size_t m = circuit.m();
  const std::size_t q = config.quorum_size ? config.quorum_size : default_quorum_size(n);
  if (config.modulus <= q) throw ConfigError("the field must have more elements than a quorum has members");
  const PrimeField field(config.modulus);
  for (PlayerId p : strategy.controlled) {
    if (p >= n) throw ConfigError("bad player " + std::to_string(p) + " does not exist");
  }

  Network net(n, config.modulus, config.keep_transcript);
  if (!strategy.controlled.empty()) {
    auto adv = std::make_shared<Adversary>(strategy, config.modulus, seed);
    adv->on_view = config.adversary_view;
    net.attach_adversary(std::move(adv));
  }

  ProtocolResult res;
  net.set_phase(Phase::QuorumFormation);
  Rng formation_rng({seed, 0x71667u});
  if (config.fixed_table) {
    res.table = *config.fixed_table;
    if (res.table.n != n || res.table.quorum_size != q || res.table.members.size() != n) {
      throw ConfigError("fixed quorum table does not match n and the quorum size");
    }
    refresh_table(res.table, strategy.controlled);
    for (std::size_t i = 0; i < n; ++i) {
      if (!res.table.good[i]) throw FormationFailure("fixed table: quorum " + std::to_string(i + 1) + " is not good");
    }
  } else {
    res.table = form_quorums_retry(n, strategy.controlled, q, formation_rng, config.epsilon, config.formation_retries);
  }
  const QuorumTable& table = res.table;
  for (PlayerId p = 0; p < n; ++p) net.charge_synthetic(Phase::QuorumFormation, p, table.synthetic_cost);
  res.schedule = schedule_for(q, circuit.max_degree);
  const ScheduleConstants& sc = res.schedule;

  const std::size_t nodes = graph.nodes();
  std::vector<std::vector<std::optional<Fp>>> s_view(nodes + 1);
  std::vector<std::vector<Fp>> shares(nodes + 1);
  auto host = [&](std::uint32_t node) -> const std::vector<PlayerId>& {
    return table.quorum(table.quorum_of_node(node));
  };

  // Input commitment.
  net.set_phase(Phase::Commitment);
  res.defaulted.assign(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t node = graph.input_node(i);
    const Commitment c = input_commitment(net, field, static_cast<PlayerId>(i), inputs[i], host(node),
                                          make_tag(Phase::Commitment, static_cast<std::uint32_t>(i), kStepCommit),
                                          sc.t_qf, seed);
    check_budget(c.rounds, sc.t_vss, "input commitment");
    s_view[node] = c.s_view;
    shares[node] = c.shares;
    res.defaulted[i] = c.defaulted;
  }

  // Masks for gate nodes, one batch per quorum.
  net.set_phase(Phase::Mask);
  {
    std::map<std::uint32_t, std::vector<std::uint32_t>> served;
    for (std::uint32_t g = 1; g <= m; ++g) served[table.quorum_of_node(g)].push_back(g);
    for (const auto& [quorum, gates] : served) {
      const auto r = gen_mask(net, field, table.quorum(quorum), gates.size(),
                              make_tag(Phase::Mask, quorum, kStepMask), sc.t_qf + sc.t_vss, seed);
      for (std::size_t v = 0; v < gates.size(); ++v) shares[gates[v]] = r[v];
    }
  }
  // All mask batches share one slot.
  if (net.last_round() > sc.t_qf + sc.t_vss) {
    check_budget(net.last_round() - (sc.t_qf + sc.t_vss), sc.t_r, "mask generation");
  }

  // Gates by height.
  net.set_phase(Phase::Gate);
  std::vector<std::vector<std::uint32_t>> by_height(static_cast<std::size_t>(graph.root_height()) + 1);
  for (std::uint32_t g = 1; g <= m; ++g) by_height[static_cast<std::size_t>(graph.height[g])].push_back(g);
  for (int h = 1; h <= graph.root_height(); ++h) {
    for (std::uint32_t g : by_height[static_cast<std::size_t>(h)]) {
      const Gate& gate = circuit.gates[g - 1];
      GateSession sess;
      sess.kind = gate.kind;
      sess.constant = gate.constant;
      sess.compute = host(g);
      sess.rg_shares = shares[g];
      for (const Source& src : gate.sources) {
        const std::uint32_t c = graph.node_of(src);
        sess.children.push_back({host(c), s_view[c], shares[c]});
      }
      const SessionResult sr = mpc_run(net, field, sess, make_tag(Phase::Gate, g, kStepGate), sc.gate_start(h),
                                       sc.t_smpc, seed);
      s_view[g] = sr.s_out;
    }
  }

  // Output: reconstruction in the root quorum, then down the tree.
  net.set_phase(Phase::Output);
  const std::uint32_t root_q = table.quorum_of_node(graph.root);
  std::vector<std::vector<std::optional<Fp>>> o_view(n + 1);
  std::uint32_t round = sc.computation_end(graph.root_height());
  o_view[root_q] = reconstruct_output(net, field, table.quorum(root_q), s_view[graph.root], shares[graph.root],
                                      make_tag(Phase::Output, root_q, kStepOutput), round);
  round += 1;

  // Roles of every quorum, then the players as output receivers.
  std::vector<PlayerId> endpoints;
  for (std::uint32_t i = 1; i <= n; ++i) {
    const auto& mem = table.quorum(i);
    endpoints.insert(endpoints.end(), mem.begin(), mem.end());
  }
  const std::size_t owners_at = endpoints.size();
  for (PlayerId p = 0; p < n; ++p) endpoints.push_back(p);
  Channel ch(net, make_tag(Phase::Output, 0, kStepOutput + 1), endpoints, round);
  auto role = [&](std::uint32_t quorum, std::size_t k) { return static_cast<std::uint32_t>((quorum - 1) * q + k); };

  // The root quorum's tree position is 1; other quorums keep their ids, with
  // the root's id taking position 1's place if they differ.
  auto tree_id = [&](std::uint32_t pos) { return pos == 1 ? root_q : (pos == root_q ? 1u : pos); };
  std::vector<std::uint32_t> frontier = {1};
  while (!frontier.empty()) {
    std::vector<std::uint32_t> next;
    for (std::uint32_t pos : frontier) {
      const std::uint32_t from = tree_id(pos);
      for (std::uint32_t child : tree_links(pos, n).children) {
        const std::uint32_t to = tree_id(child);
        next.push_back(child);
        for (std::size_t k = 0; k < q; ++k) {
          if (!o_view[from][k]) continue;
          for (std::size_t u = 0; u < q; ++u) {
            ch.post(role(from, k), role(to, u), MsgKind::Output, Payload{o_view[from][k]->value()});
          }
        }
      }
    }
    if (next.empty()) break;
    Inbox in = ch.exchange();
    for (std::uint32_t child : next) {
      const std::uint32_t to = tree_id(child);
      const std::uint32_t from = tree_id(tree_links(child, n).parent);
      o_view[to].assign(q, std::nullopt);
      for (std::size_t u = 0; u < q; ++u) {
        if (net.is_bad(table.quorum(to)[u])) continue;
        std::vector<std::optional<Fp>> got(q);
        for (std::size_t k = 0; k < q; ++k) {
          const Payload* p = in.find(role(to, u), role(from, k), MsgKind::Output);
          got[k] = p ? decode_one(field, *p) : std::nullopt;
        }
        o_view[to][u] = majority_filter(got, q);
      }
    }
    frontier = std::move(next);
  }

  // Each quorum hands the output to the owners of the inputs it hosts.
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t qi = table.quorum_of_node(graph.input_node(i));
    for (std::size_t k = 0; k < q; ++k) {
      if (o_view[qi][k]) {
        ch.post(role(qi, k), static_cast<std::uint32_t>(owners_at + i), MsgKind::Output, Payload{o_view[qi][k]->value()});
      }
    }
  }
  {
    Inbox in = ch.exchange();
    res.outputs.assign(n, std::nullopt);
    for (std::size_t i = 0; i < n; ++i) {
      if (net.is_bad(static_cast<PlayerId>(i))) continue;
      const std::uint32_t qi = table.quorum_of_node(graph.input_node(i));
      std::vector<std::optional<Fp>> got(q);
      for (std::size_t k = 0; k < q; ++k) {
        const Payload* p = in.find(static_cast<std::uint32_t>(owners_at + i), role(qi, k), MsgKind::Output);
        got[k] = p ? decode_one(field, *p) : std::nullopt;
      }
      res.outputs[i] = majority_filter(got, q);
    }
  }

  // Omniscient bookkeeping.
  const int t = threshold_for(q);
  res.nodes.resize(nodes + 1);
  for (std::uint32_t j = 1; j <= nodes; ++j) {
    NodeRecord& rec = res.nodes[j];
    rec.quorum = table.quorum_of_node(j);
    const auto& mem = host(j);
    std::vector<Point> pts;
    rec.unanimous = true;
    for (std::size_t k = 0; k < mem.size(); ++k) {
      if (net.is_bad(mem[k])) continue;
      if (!rec.s) rec.s = s_view[j][k];
      if (!s_view[j][k] || s_view[j][k] != rec.s) rec.unanimous = false;
      pts.push_back({abscissa(field, k), shares[j][k]});
    }
    const Polynomial poly = lagrange_interpolate(pts);
    rec.r = poly.coefficient(0);
    rec.mask_degree_ok = poly.degree() <= t;
  }
  res.committed_inputs.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const NodeRecord& rec = res.nodes[graph.input_node(i)];
    res.committed_inputs[i] = rec.s ? *rec.s - rec.r : field.zero();
  }
  const Evaluation ev = eval_plain(circuit, field, res.committed_inputs);
  res.expected = ev.output;
  for (std::uint32_t j = 1; j <= nodes; ++j) {
    NodeRecord& rec = res.nodes[j];
    rec.value = ev.values[j];
    rec.invariant = rec.unanimous && rec.mask_degree_ok && rec.s && *rec.s - rec.r == rec.value;
  }
  res.quorum_output.assign(n + 1, std::nullopt);
  for (std::uint32_t i = 1; i <= n; ++i) {
    const auto& mem = table.quorum(i);
    std::optional<Fp> agreed;
    bool same = true;
    for (std::size_t k = 0; k < q; ++k) {
      if (net.is_bad(mem[k])) continue;
      if (o_view[i].size() != q || !o_view[i][k]) {
        same = false;
        break;
      }
      if (!agreed) agreed = o_view[i][k];
      if (*agreed != *o_view[i][k]) same = false;
    }
    if (same) res.quorum_output[i] = agreed;
  }

  res.metrics = net.metrics_snapshot();
  res.transcript_digest = net.transcript_digest();
  res.transcript = net.transcript();
  res.rounds = net.last_round();
  return res;
}

}  // namespace qmpc
