#include "qmpc/hw_mpc.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "qmpc/agreement.hpp"
#include "qmpc/vss.hpp"

namespace qmpc {

namespace {

std::size_t first_good(const Channel& ch, std::span<const std::uint32_t> members) {
  for (std::size_t k = 0; k < members.size(); ++k) {
    if (!ch.is_bad(members[k])) return k;
  }
  return 0;
}

std::vector<Fp> abscissas(const PrimeField& field, std::size_t n) {
  std::vector<Fp> xs;
  for (std::size_t k = 0; k < n; ++k) xs.push_back(abscissa(field, k));
  return xs;
}

std::vector<Fp> error_or_throw(const ReedSolomonCode& code, const std::vector<std::optional<Fp>>& opened,
                               std::size_t offset, const char* what) {
  std::vector<Fp> syn;
  for (std::size_t r = 0; r < code.redundancy(); ++r) {
    if (!opened[offset + r]) throw ThresholdViolated(std::string(what) + ": syndrome could not be opened");
    syn.push_back(*opened[offset + r]);
  }
  try {
    return code.error_from_syndrome(syn);
  } catch (const DecodingFailure&) {
    throw ThresholdViolated(std::string(what) + ": too many faulty shares");
  }
}

Payload encode_ids(const std::vector<std::uint64_t>& ids) { return Payload(ids.begin(), ids.end()); }

}  // namespace

std::uint32_t multiply_max_rounds(std::size_t members, int t) {
  return vss_max_rounds(members, t, false) + 1 + 3 * broadcast_rounds(members) + 1;
}

std::uint32_t mpc_max_rounds(std::size_t q, GateKind kind, std::size_t fan_in) {
  const int t = threshold_for(q);
  std::uint32_t r = 1 + vss_max_rounds(q, t, true) + 1 + 1;
  if (kind == GateKind::Mul && fan_in > 1) r += static_cast<std::uint32_t>(fan_in - 1) * multiply_max_rounds(q, t);
  return r;
}

std::vector<Fp> mpc_multiply(Channel& ch, const PrimeField& field,
                             std::span<const std::uint32_t> members, int t,
                             const std::vector<Fp>& a, const std::vector<Fp>& b, std::uint64_t seed) {
  Network& net = ch.network();
  const std::size_t n = members.size();
  if (a.size() != n || b.size() != n) throw MismatchedRoleSets();
  const std::size_t slots = static_cast<std::size_t>(t) + 3;  // A, B, D_1..D_t, C
  const std::size_t w = static_cast<std::size_t>(t) + 1;
  const std::size_t slot_c = slots - 1;
  const std::size_t ref = first_good(ch, members);
  const std::vector<Fp> alpha = abscissas(field, n);

  // Each member reshares a_k, b_k and a degree-t sharing C of a_k * b_k,
  // with D_1..D_t such that A*B - sum_l x^l D_l = C.
  std::vector<VssInstance> inst;
  inst.reserve(n * slots);
  for (std::size_t j = 0; j < n; ++j) {
    OpMeter meter(net, ch.player(members[j]));
    Rng rng({seed, ch.tag(), members[j], 0x6d756cu});
    const Polynomial pa = Polynomial::random_with_constant(field, a[j], t, rng);
    const Polynomial pb = Polynomial::random_with_constant(field, b[j], t, rng);
    const Polynomial h = pa * pb;
    std::vector<std::vector<Fp>> d(w, std::vector<Fp>(w, field.zero()));
    for (std::size_t l = 1; l < w; ++l) {
      for (std::size_t c = 0; c + 1 < w; ++c) d[l][c] = field.sample(rng);
    }
    for (std::size_t m = w - 1; m >= 1; --m) {
      Fp top = h.coefficient(static_cast<std::size_t>(t) + m);
      for (std::size_t l = m + 1; l < w; ++l) top -= d[l][static_cast<std::size_t>(t) + m - l];
      d[m][static_cast<std::size_t>(t)] = top;
    }
    std::vector<Fp> c(2 * w - 1, field.zero());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = h.coefficient(i);
    for (std::size_t l = 1; l < w; ++l) {
      for (std::size_t k = 0; k < w; ++k) c[l + k] -= d[l][k];
    }
    c.resize(w);
    inst.push_back({members[j], pa});
    inst.push_back({members[j], pb});
    for (std::size_t l = 1; l < w; ++l) inst.push_back({members[j], Polynomial(field.modulus(), d[l])});
    inst.push_back({members[j], Polynomial(field.modulus(), c)});
  }
  const VssOutcome vo = vss_share_many(ch, field, members, t, inst, seed ^ 0x5eedu);
  auto share = [&](std::size_t k, std::size_t j, std::size_t slot) { return vo.shares[k][j * slots + slot]; };

  // Relation C = A B - sum_l x^l D_l at a point, from the t + 3 values there.
  auto relation_holds = [&](const std::vector<Fp>& v, Fp x) {
    Fp rhs = v[0] * v[1];
    Fp xp = x;
    for (std::size_t l = 1; l < w; ++l) {
      rhs -= xp * v[1 + l];
      xp *= x;
    }
    return rhs == v[slot_c];
  };

  // Local check of every dealer's relation at one's own point.
  ValueList complaints(n);
  for (std::size_t k = 0; k < n; ++k) {
    OpMeter meter(net, ch.player(members[k]));
    std::vector<std::uint64_t> bad;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == k || vo.disqualified[k][j * slots]) continue;
      std::vector<Fp> v(slots);
      for (std::size_t s = 0; s < slots; ++s) v[s] = share(k, j, s);
      if (!relation_holds(v, alpha[k])) bad.push_back(j);
    }
    complaints[k] = encode_ids(bad);
  }

  // The A and B resharings must carry the dealers' true shares: their
  // constants form codewords, and a nonzero error marks a cheater.
  const ReedSolomonCode code(alpha, t);
  const std::size_t red = code.redundancy();
  std::vector<std::vector<Fp>> syn_shares(n);
  for (std::size_t k = 0; k < n; ++k) {
    OpMeter meter(net, ch.player(members[k]));
    for (std::size_t slot : {std::size_t{0}, std::size_t{1}}) {
      for (std::size_t r = 0; r < red; ++r) {
        Fp acc = field.zero();
        for (std::size_t j = 0; j < n; ++j) acc += code.parity(r, j) * share(k, j, slot);
        syn_shares[k].push_back(acc);
      }
    }
  }
  const auto syn = open_shares(ch, field, members, members, syn_shares, t);
  const std::vector<Fp> ea = error_or_throw(code, syn[ref], 0, "mpc_multiply");
  const std::vector<Fp> eb = error_or_throw(code, syn[ref], red, "mpc_multiply");

  std::set<std::size_t> faulty;
  for (std::size_t j = 0; j < n; ++j) {
    if (vo.disqualified[ref][j * slots] || !ea[j].is_zero() || !eb[j].is_zero()) faulty.insert(j);
  }

  const auto decided = broadcast_uniform(ch, members, members, complaints);
  // complained[j]: members complaining about dealer j, from a member's view.
  auto parse_complaints = [&](const ValueList& view) {
    std::vector<std::vector<std::uint32_t>> out(n);
    for (std::size_t k = 0; k < n && k < view.size(); ++k) {
      if (!view[k]) continue;
      std::set<std::uint64_t> ids(view[k]->begin(), view[k]->end());
      for (std::uint64_t j : ids) {
        if (j < n && j != k) out[j].push_back(static_cast<std::uint32_t>(k));
      }
    }
    return out;
  };
  const auto complained = parse_complaints(decided[ref]);
  std::vector<std::uint32_t> senders;
  for (std::size_t j = 0; j < n; ++j) {
    if (!complained[j].empty()) senders.push_back(static_cast<std::uint32_t>(j));
  }

  if (!senders.empty()) {
    // Accused dealers publish the complainers' rows of all their sharings.
    ValueList reveal(senders.size());
    for (std::size_t s = 0; s < senders.size(); ++s) {
      const std::size_t j = senders[s];
      OpMeter meter(net, ch.player(members[j]));
      const auto mine = parse_complaints(decided[j]);
      Payload pl;
      for (std::uint32_t k : mine[j]) {
        for (std::size_t slot = 0; slot < slots; ++slot) {
          for (const Fp& c : bivariate_row(vo.bivariate[j * slots + slot], t, alpha[k])) pl.push_back(c.value());
        }
      }
      reveal[s] = std::move(pl);
    }
    const auto revealed = broadcast_uniform(ch, members, senders, reveal);

    // Published rows, checked publicly against the relation.
    std::map<std::pair<std::size_t, std::uint32_t>, std::vector<std::vector<Fp>>> rows;
    for (std::size_t s = 0; s < senders.size(); ++s) {
      const std::size_t j = senders[s];
      const auto& v = revealed[ref][s];
      if (!v || v->size() != complained[j].size() * slots * w ||
          std::any_of(v->begin(), v->end(), [&](std::uint64_t x) { return x >= field.modulus(); })) {
        faulty.insert(j);
        continue;
      }
      std::size_t pos = 0;
      for (std::uint32_t k : complained[j]) {
        std::vector<std::vector<Fp>> rk(slots, std::vector<Fp>(w));
        std::vector<Fp> at_zero(slots);
        for (std::size_t slot = 0; slot < slots; ++slot) {
          for (std::size_t c = 0; c < w; ++c) rk[slot][c] = field.element((*v)[pos++]);
          at_zero[slot] = rk[slot][0];
        }
        if (!relation_holds(at_zero, alpha[k])) faulty.insert(j);
        rows[{j, k}] = std::move(rk);
      }
    }

    // Everybody reports published rows that contradict its own.
    ValueList votes(n);
    for (std::size_t l = 0; l < n; ++l) {
      OpMeter meter(net, ch.player(members[l]));
      std::vector<std::uint64_t> rep;
      for (const auto& [key, rk] : rows) {
        const auto [j, k] = key;
        if (k == l) continue;
        for (std::size_t slot = 0; slot < slots; ++slot) {
          if (eval_coeffs(rk[slot], alpha[l]) != eval_coeffs(vo.rows[l][j * slots + slot], alpha[k])) {
            rep.push_back(j);
            rep.push_back(k);
            break;
          }
        }
      }
      votes[l] = encode_ids(rep);
    }
    const auto voted = broadcast_uniform(ch, members, members, votes);
    std::map<std::pair<std::size_t, std::uint32_t>, std::set<std::size_t>> reports;
    for (std::size_t l = 0; l < n; ++l) {
      const auto& v = voted[ref][l];
      if (!v || v->size() % 2 != 0) continue;
      for (std::size_t i = 0; i < v->size(); i += 2) {
        const auto key = std::make_pair(static_cast<std::size_t>((*v)[i]), static_cast<std::uint32_t>((*v)[i + 1]));
        if (rows.count(key)) reports[key].insert(l);
      }
    }
    for (const auto& [key, who] : reports) {
      if (who.size() >= static_cast<std::size_t>(t) + 1) faulty.insert(key.first);
    }
  }

  // Faulty dealers: open their (corrected) factors and use the public
  // product in place of their sharing.
  std::map<std::size_t, Fp> public_term;
  if (!faulty.empty()) {
    std::vector<std::vector<Fp>> op(n);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j : faulty) {
        op[k].push_back(share(k, j, 0));
        op[k].push_back(share(k, j, 1));
      }
    }
    const auto opened = open_shares(ch, field, members, members, op, t);
    std::size_t i = 0;
    for (std::size_t j : faulty) {
      const auto& va = opened[ref][i++];
      const auto& vb = opened[ref][i++];
      if (!va || !vb) throw ThresholdViolated("mpc_multiply: could not open a faulty dealer's factors");
      public_term.emplace(j, (*va - ea[j]) * (*vb - eb[j]));
    }
  }

  const std::vector<Fp> lambda = lagrange_coefficients(alpha, field.zero());
  std::vector<Fp> out(n, field.zero());
  for (std::size_t k = 0; k < n; ++k) {
    OpMeter meter(net, ch.player(members[k]));
    for (std::size_t j = 0; j < n; ++j) {
      auto it = public_term.find(j);
      out[k] += lambda[j] * (it != public_term.end() ? it->second : share(k, j, slot_c));
    }
  }
  return out;
}

SessionResult mpc_run(Network& net, const PrimeField& field, const GateSession& session,
                      std::uint64_t tag, std::uint32_t start_round, std::uint32_t budget,
                      std::uint64_t seed) {
  const std::size_t n = session.compute.size();
  const int t = threshold_for(n);
  auto check_quorum = [&](const std::vector<PlayerId>& q, const char* what) {
    std::size_t bad = 0;
    for (PlayerId p : q) bad += net.is_bad(p) ? 1 : 0;
    if (3 * bad >= q.size()) {
      throw ThresholdViolated(std::string(what) + " has " + std::to_string(bad) + " bad roles out of " +
                              std::to_string(q.size()));
    }
  };
  check_quorum(session.compute, "gate committee");
  for (const auto& c : session.children) check_quorum(c.quorum, "child quorum");

  std::vector<PlayerId> endpoints = session.compute;
  std::vector<std::size_t> offset;
  for (const auto& c : session.children) {
    offset.push_back(endpoints.size());
    endpoints.insert(endpoints.end(), c.quorum.begin(), c.quorum.end());
  }
  Channel ch(net, tag, endpoints, start_round);
  std::vector<std::uint32_t> members(n);
  std::iota(members.begin(), members.end(), 0u);
  const std::size_t ref = first_good(ch, members);
  const std::size_t kids = session.children.size();

  // Input roles send their copies of s_i.
  for (std::size_t i = 0; i < kids; ++i) {
    const auto& c = session.children[i];
    for (std::size_t u = 0; u < c.quorum.size(); ++u) {
      if (!c.s_view[u]) continue;
      for (std::uint32_t k : members) {
        ch.post(static_cast<std::uint32_t>(offset[i] + u), k, MsgKind::MaskedValue, Payload{c.s_view[u]->value()});
      }
    }
  }
  std::vector<std::vector<Fp>> s_val(n, std::vector<Fp>(kids, field.zero()));
  {
    Inbox in = ch.exchange();
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t i = 0; i < kids; ++i) {
        const std::size_t q = session.children[i].quorum.size();
        std::map<std::uint64_t, std::size_t> tally;
        for (std::size_t u = 0; u < q; ++u) {
          const Payload* pl = in.find(k, static_cast<std::uint32_t>(offset[i] + u), MsgKind::MaskedValue);
          if (pl && pl->size() == 1 && (*pl)[0] < field.modulus()) ++tally[(*pl)[0]];
        }
        bool found = false;
        for (const auto& [v, cnt] : tally) {
          if (2 * cnt > q) {
            s_val[k][i] = field.element(v);
            found = true;
          }
        }
        if (!found && !ch.is_bad(k)) throw ThresholdViolated("no majority among the copies of a masked input");
      }
    }
  }

  // Input roles reshare their mask shares to the committee.
  std::vector<VssInstance> inst;
  std::vector<std::size_t> first_inst;
  for (std::size_t i = 0; i < kids; ++i) {
    const auto& c = session.children[i];
    first_inst.push_back(inst.size());
    for (std::size_t u = 0; u < c.quorum.size(); ++u) {
      const auto dealer = static_cast<std::uint32_t>(offset[i] + u);
      OpMeter meter(net, c.quorum[u]);
      Rng rng({seed, tag, dealer, 0x72u});
      inst.push_back({dealer, Polynomial::random_with_constant(field, c.mask_shares[u], t, rng)});
    }
  }
  const VssOutcome vo = vss_share_many(ch, field, members, t, inst, seed);

  // Error-correct each child's codeword of reshared mask shares through its
  // syndrome, which depends only on the errors.
  std::vector<ReedSolomonCode> codes;
  for (const auto& c : session.children) {
    codes.emplace_back(abscissas(field, c.quorum.size()), threshold_for(c.quorum.size()));
  }
  std::vector<std::vector<Fp>> syn_shares(n);
  for (std::size_t k = 0; k < n; ++k) {
    OpMeter meter(net, ch.player(k));
    for (std::size_t i = 0; i < kids; ++i) {
      const auto& code = codes[i];
      for (std::size_t r = 0; r < code.redundancy(); ++r) {
        Fp acc = field.zero();
        for (std::size_t u = 0; u < code.length(); ++u) acc += code.parity(r, u) * vo.shares[k][first_inst[i] + u];
        syn_shares[k].push_back(acc);
      }
    }
  }
  std::vector<std::vector<Fp>> errors(kids);
  if (!syn_shares.front().empty()) {
    const auto syn = open_shares(ch, field, members, members, syn_shares, t);
    std::size_t off = 0;
    for (std::size_t i = 0; i < kids; ++i) {
      errors[i] = error_or_throw(codes[i], syn[ref], off, "gate input");
      off += codes[i].redundancy();
    }
  } else {
    for (std::size_t i = 0; i < kids; ++i) errors[i].assign(codes[i].length(), field.zero());
  }

  // Shares of O_i = s_i - r_i.
  std::vector<std::vector<Fp>> o(kids, std::vector<Fp>(n, field.zero()));
  for (std::size_t i = 0; i < kids; ++i) {
    const std::size_t ti = static_cast<std::size_t>(threshold_for(codes[i].length()));
    std::vector<Fp> xs(codes[i].abscissas().begin(), codes[i].abscissas().begin() + static_cast<std::ptrdiff_t>(ti + 1));
    const auto lambda = lagrange_coefficients(xs, field.zero());
    for (std::size_t k = 0; k < n; ++k) {
      OpMeter meter(net, ch.player(k));
      Fp r = field.zero();
      for (std::size_t u = 0; u <= ti; ++u) r += lambda[u] * (vo.shares[k][first_inst[i] + u] - errors[i][u]);
      o[i][k] = s_val[k][i] - r;
    }
  }

  std::vector<Fp> f(n, field.zero());
  switch (session.kind) {
    case GateKind::Add:
      for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t i = 0; i < kids; ++i) f[k] += o[i][k];
      }
      break;
    case GateKind::CMul:
      for (std::size_t k = 0; k < n; ++k) {
        OpMeter meter(net, ch.player(k));
        f[k] = field.from_signed(session.constant) * o.at(0)[k];
      }
      break;
    case GateKind::Mul:
      f = o.at(0);
      for (std::size_t i = 1; i < kids; ++i) f = mpc_multiply(ch, field, members, t, f, o[i], seed + 0x9e37u * i);
      break;
  }

  std::vector<std::vector<Fp>> sg(n);
  for (std::size_t k = 0; k < n; ++k) sg[k].push_back(f[k] + session.rg_shares[k]);
  const auto opened = open_shares(ch, field, members, members, sg, t);

  SessionResult res;
  res.rounds = ch.rounds_used();
  for (std::size_t k = 0; k < n; ++k) res.s_out.push_back(opened[k][0]);
  if (res.rounds > budget) {
    throw RoundBudgetExceeded("gate computation took " + std::to_string(res.rounds) + " rounds, budget " +
                              std::to_string(budget));
  }
  return res;
}

ShareSet mpc_linear(std::span<const Fp> coeffs, std::span<const ShareSet> shares, Fp constant) {
  if (coeffs.size() != shares.size() || shares.empty()) throw MismatchedRoleSets();
  ShareSet out = shares.front();
  out.tag = 0;
  for (std::size_t i = 0; i < shares.size(); ++i) {
    const ShareSet& s = shares[i];
    if (s.modulus != out.modulus) throw FieldMismatch();
    if (s.shares.size() != out.shares.size() || s.threshold != out.threshold) throw MismatchedRoleSets();
  }
  for (std::size_t k = 0; k < out.shares.size(); ++k) {
    std::optional<Fp> acc = constant;
    for (std::size_t i = 0; i < shares.size() && acc; ++i) {
      if (!shares[i].shares[k]) {
        acc.reset();
      } else {
        *acc += coeffs[i] * *shares[i].shares[k];
      }
    }
    out.shares[k] = acc;
  }
  return out;
}

}  // namespace qmpc
