#include "qmpc/vss.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "qmpc/agreement.hpp"
#include "qmpc/sharing.hpp"

namespace qmpc {

std::uint32_t vss_max_rounds(std::size_t members, int t, bool outside_dealers) {
  const std::uint32_t b = broadcast_rounds(members);
  const std::uint32_t relay = outside_dealers ? 1 : 0;
  return 2 + b + (relay + b) + static_cast<std::uint32_t>(t + 1) * (b + relay + b);
}

std::vector<Fp> symmetric_bivariate(const PrimeField& field, const Polynomial& g, int t, Rng& rng) {
  const std::size_t w = static_cast<std::size_t>(t) + 1;
  std::vector<Fp> c(w * w, field.zero());
  for (std::size_t b = 0; b < w; ++b) {
    c[b] = g.coefficient(b);      // x^0 y^b
    c[b * w] = g.coefficient(b);  // x^b y^0
  }
  for (std::size_t a = 1; a < w; ++a) {
    for (std::size_t b = a; b < w; ++b) {
      const Fp r = field.sample(rng);
      c[a * w + b] = r;
      c[b * w + a] = r;
    }
  }
  return c;
}

std::vector<Fp> bivariate_row(const std::vector<Fp>& coeffs, int t, Fp alpha) {
  const std::size_t w = static_cast<std::size_t>(t) + 1;
  std::vector<Fp> row(w, Fp(0, alpha.modulus()));
  Fp ap(1, alpha.modulus());
  for (std::size_t a = 0; a < w; ++a) {
    for (std::size_t b = 0; b < w; ++b) row[b] += coeffs[a * w + b] * ap;
    ap *= alpha;
  }
  return row;
}

Fp eval_coeffs(std::span<const Fp> coeffs, Fp x) {
  Fp acc(0, x.modulus());
  for (std::size_t i = coeffs.size(); i-- > 0;) acc = acc * x + coeffs[i];
  return acc;
}

namespace {

using PairKey = std::pair<std::uint32_t, std::uint32_t>;

// What one complaint or accusation broadcast says, for every dealer and
// instance. Wire format per member: [np, (instance, other)*np, na, dealer*na].
struct StepInfo {
  std::vector<std::set<PairKey>> pairs;               // per instance
  std::vector<std::set<std::uint32_t>> accusing;      // per dealer
};

Payload encode_step(const std::vector<PairKey>& pairs, const std::set<std::uint32_t>& accused) {
  Payload out;
  out.push_back(pairs.size());
  for (const auto& [i, k] : pairs) {
    out.push_back(i);
    out.push_back(k);
  }
  out.push_back(accused.size());
  for (std::uint32_t d : accused) out.push_back(d);
  return out;
}

StepInfo parse_step(const ValueList& decided, std::size_t instances, std::size_t dealers,
                    std::size_t members, bool allow_pairs) {
  StepInfo info;
  info.pairs.resize(instances);
  info.accusing.resize(dealers);
  for (std::size_t s = 0; s < decided.size() && s < members; ++s) {
    if (!decided[s]) continue;
    const Payload& w = *decided[s];
    // Validate the whole message first; malformed ones are ignored.
    if (w.empty()) continue;
    const std::uint64_t np = w[0];
    if (np > w.size() || 1 + 2 * np + 1 > w.size()) continue;
    const std::uint64_t na = w[1 + 2 * np];
    if (w.size() != 2 + 2 * np + na) continue;
    bool ok = true;
    for (std::uint64_t j = 0; j < np && ok; ++j) {
      ok = w[1 + 2 * j] < instances && w[2 + 2 * j] < members && w[2 + 2 * j] != s;
    }
    for (std::uint64_t j = 0; j < na && ok; ++j) ok = w[2 + 2 * np + j] < dealers;
    if (!ok) continue;
    if (allow_pairs) {
      for (std::uint64_t j = 0; j < np; ++j) {
        const auto i = static_cast<std::uint32_t>(w[1 + 2 * j]);
        const auto k = static_cast<std::uint32_t>(w[2 + 2 * j]);
        const auto a = static_cast<std::uint32_t>(s);
        info.pairs[i].insert({std::min(a, k), std::max(a, k)});
      }
    }
    for (std::uint64_t j = 0; j < na; ++j) {
      info.accusing[w[2 + 2 * np + j]].insert(static_cast<std::uint32_t>(s));
    }
  }
  return info;
}

}  // namespace

VssOutcome vss_share_many(Channel& ch, const PrimeField& field, std::span<const std::uint32_t> members,
                          int t, const std::vector<VssInstance>& instances, std::uint64_t seed) {
  Network& net = ch.network();
  const std::uint64_t p = field.modulus();
  const std::size_t n = members.size();
  const std::size_t ni = instances.size();
  const std::size_t w = static_cast<std::size_t>(t) + 1;

  std::vector<std::uint32_t> dealers;
  for (const auto& in : instances) dealers.push_back(in.dealer);
  std::sort(dealers.begin(), dealers.end());
  dealers.erase(std::unique(dealers.begin(), dealers.end()), dealers.end());
  const std::size_t nd = dealers.size();
  std::vector<std::size_t> dealer_of(ni);
  std::vector<std::vector<std::size_t>> owned(nd);
  for (std::size_t i = 0; i < ni; ++i) {
    dealer_of[i] = static_cast<std::size_t>(
        std::lower_bound(dealers.begin(), dealers.end(), instances[i].dealer) - dealers.begin());
    owned[dealer_of[i]].push_back(i);
  }
  std::vector<std::optional<std::size_t>> dealer_pos(nd);
  for (std::size_t d = 0; d < nd; ++d) {
    auto it = std::find(members.begin(), members.end(), dealers[d]);
    if (it != members.end()) dealer_pos[d] = static_cast<std::size_t>(it - members.begin());
  }
  std::vector<Fp> alpha;
  for (std::size_t k = 0; k < n; ++k) alpha.push_back(abscissa(field, k));

  // Round structure is common to everybody; the simulator follows the view
  // of a good member, which every good member shares through agreement.
  std::size_t ref = 0;
  while (ref < n && ch.is_bad(members[ref])) ++ref;
  if (ref == n) ref = 0;

  VssOutcome out;
  out.shares.assign(n, std::vector<Fp>(ni, field.zero()));
  out.rows.assign(n, std::vector<std::vector<Fp>>(ni, std::vector<Fp>(w, field.zero())));
  out.disqualified.assign(n, std::vector<bool>(ni, false));
  std::vector<std::vector<char>> has_row(n, std::vector<char>(ni, 0));

  // Dealing.
  std::vector<std::vector<Fp>> biv(ni);
  for (std::size_t d = 0; d < nd; ++d) {
    OpMeter meter(net, ch.player(dealers[d]));
    Rng rng({seed, ch.tag(), dealers[d]});
    for (std::size_t i : owned[d]) biv[i] = symmetric_bivariate(field, instances[i].g, t, rng);
    for (std::size_t k = 0; k < n; ++k) {
      Payload pl;
      pl.reserve(owned[d].size() * w);
      for (std::size_t i : owned[d]) {
        for (const Fp& c : bivariate_row(biv[i], t, alpha[k])) pl.push_back(c.value());
      }
      ch.post(dealers[d], members[k], MsgKind::Deal, std::move(pl));
    }
  }
  {
    Inbox in = ch.exchange();
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t d = 0; d < nd; ++d) {
        const Payload* pl = in.find(members[k], dealers[d], MsgKind::Deal);
        if (!pl || pl->size() != owned[d].size() * w) continue;
        if (std::any_of(pl->begin(), pl->end(), [p](std::uint64_t x) { return x >= p; })) continue;
        std::size_t pos = 0;
        for (std::size_t i : owned[d]) {
          for (std::size_t c = 0; c < w; ++c) out.rows[k][i][c] = field.element((*pl)[pos++]);
          has_row[k][i] = 1;
        }
      }
    }
  }

  // Pairwise cross-checks. A missing value is sent as p.
  for (std::size_t k = 0; k < n; ++k) {
    OpMeter meter(net, ch.player(members[k]));
    for (std::size_t l = 0; l < n; ++l) {
      Payload pl(ni, p);
      for (std::size_t i = 0; i < ni; ++i) {
        if (has_row[k][i]) pl[i] = eval_coeffs(out.rows[k][i], alpha[l]).value();
      }
      ch.post(members[k], members[l], MsgKind::CrossCheck, std::move(pl));
    }
  }
  ValueList complaints(n);
  {
    Inbox in = ch.exchange();
    for (std::size_t l = 0; l < n; ++l) {
      OpMeter meter(net, ch.player(members[l]));
      std::vector<PairKey> pairs;
      std::set<std::uint32_t> accused;
      for (std::size_t i = 0; i < ni; ++i) {
        if (!has_row[l][i]) accused.insert(static_cast<std::uint32_t>(dealer_of[i]));
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (k == l) continue;
        const Payload* pl = in.find(members[l], members[k], MsgKind::CrossCheck);
        const bool valid = pl && pl->size() == ni;
        for (std::size_t i = 0; i < ni; ++i) {
          if (!has_row[l][i]) continue;
          const std::uint64_t v = valid ? (*pl)[i] : p;
          if (v >= p || field.element(v) != eval_coeffs(out.rows[l][i], alpha[k])) {
            pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(k)});
          }
        }
      }
      complaints[l] = encode_step(pairs, accused);
    }
  }

  std::vector<char> dq(nd, 0);
  std::vector<std::set<std::uint32_t>> accusers(nd);
  std::vector<std::map<PairKey, Fp>> pair_val(ni);
  std::vector<std::map<std::uint32_t, std::vector<Fp>>> pub_rows(ni);
  std::vector<std::set<std::uint32_t>> next_accuse(n);

  // One publication step: dealers answer the complaints and accusations
  // decided in the preceding broadcast. Returns whether anything was
  // published.
  auto publish = [&](const std::vector<ValueList>& decided, bool first) -> bool {
    const StepInfo pub = parse_step(decided[ref], ni, nd, n, first);
    std::vector<std::vector<std::uint32_t>> pending(nd);
    std::vector<std::uint32_t> senders;
    std::vector<std::size_t> sender_dealer;
    for (std::size_t d = 0; d < nd; ++d) {
      if (dq[d]) continue;
      for (std::uint32_t a : pub.accusing[d]) {
        if (!accusers[d].count(a)) pending[d].push_back(a);
      }
      bool any = !pending[d].empty();
      if (first) {
        for (std::size_t i : owned[d]) any = any || !pub.pairs[i].empty();
      }
      if (any) {
        senders.push_back(dealers[d]);
        sender_dealer.push_back(d);
      }
    }
    if (senders.empty()) return false;

    // Dealers outside the committee learn the decision from the members.
    std::vector<std::optional<ValueList>> dealer_view(nd);
    bool need_relay = false;
    for (std::size_t d : sender_dealer) {
      if (dealer_pos[d]) {
        dealer_view[d] = decided[*dealer_pos[d]];
      } else {
        need_relay = true;
      }
    }
    if (need_relay) {
      for (std::size_t k = 0; k < n; ++k) {
        const Payload enc = encode_values(decided[k]);
        for (std::size_t d : sender_dealer) {
          if (!dealer_pos[d]) ch.post(members[k], dealers[d], MsgKind::Echo, enc);
        }
      }
      Inbox in = ch.exchange();
      for (std::size_t d : sender_dealer) {
        if (dealer_pos[d]) continue;
        std::map<Payload, int> tally;
        for (std::size_t k = 0; k < n; ++k) {
          const Payload* pl = in.find(dealers[d], members[k], MsgKind::Echo);
          if (pl) ++tally[*pl];
        }
        for (const auto& [enc, count] : tally) {
          if (count >= t + 1) {
            dealer_view[d] = decode_values(enc, n);
            break;
          }
        }
      }
    }

    ValueList answers(senders.size());
    for (std::size_t s = 0; s < senders.size(); ++s) {
      const std::size_t d = sender_dealer[s];
      OpMeter meter(net, ch.player(dealers[d]));
      Payload pl;
      if (dealer_view[d]) {
        const StepInfo mine = parse_step(*dealer_view[d], ni, nd, n, first);
        if (first) {
          for (std::size_t i : owned[d]) {
            for (const auto& [a, b] : mine.pairs[i]) {
              pl.push_back(eval_coeffs(bivariate_row(biv[i], t, alpha[a]), alpha[b]).value());
            }
          }
        }
        for (std::uint32_t a : mine.accusing[d]) {
          if (accusers[d].count(a)) continue;
          for (std::size_t i : owned[d]) {
            for (const Fp& c : bivariate_row(biv[i], t, alpha[a])) pl.push_back(c.value());
          }
        }
      }
      answers[s] = std::move(pl);
    }
    const auto decided_answers = broadcast_uniform(ch, members, senders, answers);

    const std::uint64_t ops_before = field_op_counter();
    std::vector<std::vector<std::pair<std::uint32_t, std::size_t>>> new_rows(ni);
    for (std::size_t s = 0; s < senders.size(); ++s) {
      const std::size_t d = sender_dealer[s];
      const auto& v = decided_answers[ref][s];
      std::size_t expected = pending[d].size() * owned[d].size() * w;
      if (first) {
        for (std::size_t i : owned[d]) expected += pub.pairs[i].size();
      }
      if (!v || v->size() != expected ||
          std::any_of(v->begin(), v->end(), [p](std::uint64_t x) { return x >= p; })) {
        dq[d] = 1;
        continue;
      }
      std::size_t pos = 0;
      if (first) {
        for (std::size_t i : owned[d]) {
          for (const auto& key : pub.pairs[i]) pair_val[i][key] = field.element((*v)[pos++]);
        }
      }
      for (std::uint32_t a : pending[d]) {
        for (std::size_t i : owned[d]) {
          std::vector<Fp> row(w);
          for (std::size_t c = 0; c < w; ++c) row[c] = field.element((*v)[pos++]);
          pub_rows[i][a] = std::move(row);
          new_rows[i].push_back({a, d});
        }
      }
      // Published data must be mutually consistent.
      bool consistent = true;
      for (std::size_t i : owned[d]) {
        for (std::uint32_t a : pending[d]) {
          const auto& ra = pub_rows[i][a];
          for (const auto& [key, val] : pair_val[i]) {
            if (key.first == a && eval_coeffs(ra, alpha[key.second]) != val) consistent = false;
            if (key.second == a && eval_coeffs(ra, alpha[key.first]) != val) consistent = false;
          }
          for (const auto& [b, rb] : pub_rows[i]) {
            if (b != a && eval_coeffs(ra, alpha[b]) != eval_coeffs(rb, alpha[a])) consistent = false;
          }
        }
      }
      for (std::uint32_t a : pending[d]) accusers[d].insert(a);
      if (!consistent || accusers[d].size() > static_cast<std::size_t>(t)) dq[d] = 1;
    }
    const std::uint64_t public_ops = field_op_counter() - ops_before;
    for (std::size_t k = 0; k < n; ++k) net.charge_field_ops(ch.player(members[k]), public_ops);

    // Private checks against the published values, and adoption of
    // published rows by their accusers.
    for (std::size_t k = 0; k < n; ++k) {
      OpMeter meter(net, ch.player(members[k]));
      const auto self = static_cast<std::uint32_t>(k);
      for (std::size_t i = 0; i < ni; ++i) {
        const std::size_t d = dealer_of[i];
        if (dq[d]) continue;
        if (accusers[d].count(self)) {
          auto it = pub_rows[i].find(self);
          if (it != pub_rows[i].end()) {
            out.rows[k][i] = it->second;
            has_row[k][i] = 1;
          }
          continue;
        }
        bool bad = !has_row[k][i];
        if (!bad && first) {
          for (const auto& [key, val] : pair_val[i]) {
            if (key.first == self && eval_coeffs(out.rows[k][i], alpha[key.second]) != val) bad = true;
            if (key.second == self && eval_coeffs(out.rows[k][i], alpha[key.first]) != val) bad = true;
          }
        }
        for (const auto& [a, dd] : new_rows[i]) {
          if (bad) break;
          if (eval_coeffs(out.rows[k][i], alpha[a]) != eval_coeffs(pub_rows[i][a], alpha[k])) bad = true;
        }
        if (bad) next_accuse[k].insert(static_cast<std::uint32_t>(d));
      }
    }
    return true;
  };

  auto decided = broadcast_uniform(ch, members, members, complaints);
  bool published = publish(decided, true);
  for (int iter = 0; iter <= t && published; ++iter) {
    ValueList acc(n);
    for (std::size_t k = 0; k < n; ++k) {
      acc[k] = encode_step({}, next_accuse[k]);
      next_accuse[k].clear();
    }
    decided = broadcast_uniform(ch, members, members, acc);
    published = publish(decided, false);
  }

  out.bivariate = std::move(biv);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < ni; ++i) {
      if (dq[dealer_of[i]]) {
        out.disqualified[k][i] = true;
        std::fill(out.rows[k][i].begin(), out.rows[k][i].end(), field.zero());
        continue;
      }
      if (has_row[k][i]) out.shares[k][i] = out.rows[k][i][0];
    }
  }
  return out;
}

std::vector<std::vector<std::optional<Fp>>> open_shares(
    Channel& ch, const PrimeField& field, std::span<const std::uint32_t> holders,
    std::span<const std::uint32_t> recipients, const std::vector<std::vector<Fp>>& shares, int t) {
  const std::uint64_t p = field.modulus();
  const std::size_t ni = shares.empty() ? 0 : shares.front().size();
  for (std::size_t h = 0; h < holders.size(); ++h) {
    Payload pl;
    pl.reserve(ni);
    for (const Fp& s : shares[h]) pl.push_back(s.value());
    for (std::uint32_t r : recipients) ch.post(holders[h], r, MsgKind::ShareOpen, pl);
  }
  Inbox in = ch.exchange();
  std::vector<std::vector<std::optional<Fp>>> opened(recipients.size(),
                                                     std::vector<std::optional<Fp>>(ni));
  for (std::size_t r = 0; r < recipients.size(); ++r) {
    OpMeter meter(ch.network(), ch.player(recipients[r]));
    std::vector<const Payload*> got(holders.size());
    for (std::size_t h = 0; h < holders.size(); ++h) {
      const Payload* pl = in.find(recipients[r], holders[h], MsgKind::ShareOpen);
      got[h] = pl && pl->size() == ni ? pl : nullptr;
    }
    std::vector<Point> pts;
    for (std::size_t i = 0; i < ni; ++i) {
      pts.clear();
      for (std::size_t h = 0; h < holders.size(); ++h) {
        if (got[h] && (*got[h])[i] < p) pts.push_back({abscissa(field, h), field.element((*got[h])[i])});
      }
      try {
        opened[r][i] = berlekamp_welch(pts, t).coefficient(0);
      } catch (const DecodingFailure&) {
      }
    }
  }
  return opened;
}

}  // namespace qmpc
