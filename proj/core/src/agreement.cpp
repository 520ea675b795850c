#include "qmpc/agreement.hpp"

#include <algorithm>
#include <string>

#include <openssl/evp.h>

#include "qmpc/sharing.hpp"

namespace qmpc {

namespace {

// Short payloads stand for themselves ({0, words...}); longer ones are
// replaced by their SHA-256 ({1, four words}).
Payload payload_digest(const Payload& p) {
  if (p.size() <= 4) {
    Payload out{0};
    out.insert(out.end(), p.begin(), p.end());
    return out;
  }
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::vector<unsigned char> bytes;
  bytes.reserve(8 * (p.size() + 1));
  auto put = [&](std::uint64_t w) {
    for (int b = 0; b < 8; ++b) bytes.push_back(static_cast<unsigned char>(w >> (8 * b)));
  };
  put(p.size());
  for (std::uint64_t w : p) put(w);
  EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
  Payload out(5, 0);
  out[0] = 1;
  for (std::size_t i = 0; i < 32; ++i) out[1 + i / 8] |= static_cast<std::uint64_t>(md[i]) << (8 * (i % 8));
  return out;
}

// Internal value keys: nullopt -> {0}, payload w -> {1, w...}. Keys are
// always present, so "no candidate" can be told apart from "agreed on
// nothing".
Payload to_key(const std::optional<Payload>& v) {
  if (!v) return Payload{0};
  Payload k;
  k.reserve(v->size() + 1);
  k.push_back(1);
  k.insert(k.end(), v->begin(), v->end());
  return k;
}

std::optional<Payload> from_key(const Payload& k) {
  if (k.empty() || k[0] == 0) return std::nullopt;
  return Payload(k.begin() + 1, k.end());
}

bool valid_key(const Payload& k) { return !k.empty() && (k[0] == 1 || (k[0] == 0 && k.size() == 1)); }

// Most frequent value among `votes` and its count; ties go to the smaller key.
std::pair<const Payload*, int> plurality(std::vector<const Payload*>& votes) {
  if (votes.empty()) return {nullptr, 0};
  std::sort(votes.begin(), votes.end(), [](const Payload* a, const Payload* b) { return *a < *b; });
  const Payload* best = nullptr;
  int best_count = 0;
  for (std::size_t i = 0; i < votes.size();) {
    std::size_t j = i;
    while (j < votes.size() && *votes[j] == *votes[i]) ++j;
    const int c = static_cast<int>(j - i);
    if (c > best_count) {
      best = votes[i];
      best_count = c;
    }
    i = j;
  }
  return {best, best_count};
}

}  // namespace

std::uint32_t agreement_rounds(std::size_t members) {
  return 3u * static_cast<std::uint32_t>(threshold_for(members) + 1);
}

std::uint32_t broadcast_rounds(std::size_t members) { return 4u + 2u * agreement_rounds(members); }

std::vector<ValueList> agree_many(Channel& ch, std::span<const std::uint32_t> members,
                                  const std::vector<ValueList>& initial,
                                  std::optional<std::uint32_t> round_budget) {
  const std::size_t n = members.size();
  const int t = threshold_for(n);
  if (round_budget && agreement_rounds(n) > *round_budget) {
    throw RoundBudgetExceeded("agreement needs " + std::to_string(agreement_rounds(n)) +
                              " rounds, budget is " + std::to_string(*round_budget));
  }
  const std::size_t inst = initial.empty() ? 0 : initial.front().size();
  std::vector<std::vector<Payload>> v(n, std::vector<Payload>(inst));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < inst; ++i) v[k][i] = to_key(initial[k][i]);
  }
  std::vector<std::vector<int>> grade(n, std::vector<int>(inst, 0));

  auto broadcast_keys = [&](std::uint32_t src, MsgKind kind, const ValueList& values) {
    const Payload enc = encode_values(values);
    for (std::uint32_t dst : members) ch.post(src, dst, kind, enc);
  };

  const int need_strong = static_cast<int>(n) - t;
  for (int phase = 0; phase <= t; ++phase) {
    // Candidate round.
    for (std::size_t k = 0; k < n; ++k) {
      ValueList vals(v[k].begin(), v[k].end());
      broadcast_keys(members[k], MsgKind::Candidate, vals);
    }
    Inbox in1 = ch.exchange();
    std::vector<ValueList> cand(n, ValueList(inst));
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<ValueList> got;
      got.reserve(n);
      for (std::uint32_t src : members) {
        const Payload* p = in1.find(members[k], src, MsgKind::Candidate);
        if (!p) continue;
        auto d = decode_values(*p, inst);
        if (d) got.push_back(std::move(*d));
      }
      for (std::size_t i = 0; i < inst; ++i) {
        std::vector<const Payload*> votes;
        for (const auto& g : got) {
          if (g[i] && valid_key(*g[i])) votes.push_back(&*g[i]);
        }
        auto [best, count] = plurality(votes);
        if (best && count >= need_strong) cand[k][i] = *best;
      }
    }
    // Grade round.
    for (std::size_t k = 0; k < n; ++k) broadcast_keys(members[k], MsgKind::Grade, cand[k]);
    Inbox in2 = ch.exchange();
    for (std::size_t k = 0; k < n; ++k) {
      std::vector<ValueList> got;
      for (std::uint32_t src : members) {
        const Payload* p = in2.find(members[k], src, MsgKind::Grade);
        if (!p) continue;
        auto d = decode_values(*p, inst);
        if (d) got.push_back(std::move(*d));
      }
      for (std::size_t i = 0; i < inst; ++i) {
        std::vector<const Payload*> votes;
        for (const auto& g : got) {
          if (g[i] && valid_key(*g[i])) votes.push_back(&*g[i]);
        }
        auto [best, count] = plurality(votes);
        if (best && count >= need_strong) {
          v[k][i] = *best;
          grade[k][i] = 2;
        } else if (best && count >= t + 1) {
          v[k][i] = *best;
          grade[k][i] = 1;
        } else {
          grade[k][i] = 0;
        }
      }
    }
    // King round.
    const std::uint32_t king = members[static_cast<std::size_t>(phase) % n];
    {
      const std::size_t kk = static_cast<std::size_t>(phase) % n;
      ValueList vals(v[kk].begin(), v[kk].end());
      broadcast_keys(king, MsgKind::King, vals);
    }
    Inbox in3 = ch.exchange();
    for (std::size_t k = 0; k < n; ++k) {
      const Payload* p = in3.find(members[k], king, MsgKind::King);
      if (!p) continue;
      auto d = decode_values(*p, inst);
      if (!d) continue;
      for (std::size_t i = 0; i < inst; ++i) {
        if (grade[k][i] < 2 && (*d)[i] && valid_key(*(*d)[i])) v[k][i] = *(*d)[i];
      }
    }
  }

  std::vector<ValueList> out(n, ValueList(inst));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < inst; ++i) out[k][i] = from_key(v[k][i]);
  }
  return out;
}

std::vector<std::optional<Payload>> bracha_agree(Channel& ch, std::span<const std::uint32_t> members,
                                                 const std::vector<std::optional<Payload>>& initial,
                                                 std::optional<std::uint32_t> round_budget) {
  std::vector<ValueList> init;
  init.reserve(initial.size());
  for (const auto& v : initial) init.push_back(ValueList{v});
  auto d = agree_many(ch, members, init, round_budget);
  std::vector<std::optional<Payload>> out;
  out.reserve(d.size());
  for (auto& row : d) out.push_back(std::move(row[0]));
  return out;
}

std::vector<ValueList> broadcast_many(Channel& ch, std::span<const std::uint32_t> members,
                                      std::span<const std::uint32_t> senders,
                                      const std::vector<ValueList>& sent, MsgKind send_kind) {
  const std::size_t n = members.size();
  const std::size_t ns = senders.size();
  const int t = threshold_for(n);

  // Send.
  for (std::size_t s = 0; s < ns; ++s) {
    for (std::size_t k = 0; k < n; ++k) {
      if (!sent[s][k]) continue;
      ch.post(senders[s], members[k], send_kind,
              is_structured(send_kind) ? encode_values({sent[s][k]}) : *sent[s][k]);
    }
  }
  Inbox in0 = ch.exchange();
  std::vector<ValueList> received(n, ValueList(ns));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      const Payload* p = in0.find(members[k], senders[s], send_kind);
      if (!p) continue;
      if (!is_structured(send_kind)) {
        received[k][s] = *p;
        continue;
      }
      auto d = decode_values(*p, 1);
      if (d) received[k][s] = std::move((*d)[0]);
    }
  }

  // Echo digests and agree on one digest per sender.
  std::vector<ValueList> dig(n, ValueList(ns));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      if (received[k][s]) dig[k][s] = payload_digest(*received[k][s]);
    }
    const Payload enc = encode_values(dig[k]);
    for (std::uint32_t dst : members) ch.post(members[k], dst, MsgKind::Echo, enc);
  }
  Inbox in1 = ch.exchange();
  // echoed[k][j]: member k's copy of member j's echo.
  std::vector<std::vector<std::optional<ValueList>>> echoed(n, std::vector<std::optional<ValueList>>(n));
  std::vector<ValueList> initial(n, ValueList(ns));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const Payload* p = in1.find(members[k], members[j], MsgKind::Echo);
      if (p) echoed[k][j] = decode_values(*p, ns);
    }
    for (std::size_t s = 0; s < ns; ++s) {
      std::vector<const Payload*> votes;
      for (const auto& e : echoed[k]) {
        if (e && (*e)[s]) votes.push_back(&*(*e)[s]);
      }
      auto [best, count] = plurality(votes);
      if (best && count >= static_cast<int>(n) - t) initial[k][s] = *best;
    }
  }
  const auto agreed = agree_many(ch, members, initial);

  // Holders of a payload with the agreed digest hand it to members whose
  // echo showed something else. Payloads are accepted on digest match.
  std::vector<ValueList> result(n, ValueList(ns));
  auto holds = [&](std::size_t k, std::size_t s) {
    return received[k][s] && agreed[k][s] && dig[k][s] == agreed[k][s];
  };
  auto supply = [&]() {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (k == j) continue;
        ValueList out(ns);
        bool any = false;
        for (std::size_t s = 0; s < ns; ++s) {
          if (!result[j][s] || !agreed[j][s]) continue;
          const auto& e = echoed[j][k];
          if (e && (*e)[s] == agreed[j][s]) continue;
          out[s] = result[j][s];
          any = true;
        }
        if (any) ch.post(members[j], members[k], MsgKind::Supply, encode_values(out));
      }
    }
    Inbox in = ch.exchange();
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = 0; j < n; ++j) {
        const Payload* p = in.find(members[k], members[j], MsgKind::Supply);
        if (!p) continue;
        auto d = decode_values(*p, ns);
        if (!d) continue;
        for (std::size_t s = 0; s < ns; ++s) {
          if (!result[k][s] && (*d)[s] && agreed[k][s] && payload_digest(*(*d)[s]) == *agreed[k][s]) {
            result[k][s] = std::move((*d)[s]);
          }
        }
      }
    }
  };
  std::size_t ref = 0;
  while (ref + 1 < n && ch.is_bad(members[ref])) ++ref;
  bool inline_only = true;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      const auto& a = agreed[k][s];
      if (a && !a->empty() && (*a)[0] == 0) {
        result[k][s] = Payload(a->begin() + 1, a->end());
      } else if (holds(k, s)) {
        result[k][s] = received[k][s];
      }
      if (k == ref && a && (a->empty() || (*a)[0] != 0)) inline_only = false;
    }
  }
  if (inline_only) return result;
  supply();
  // A bad king can make the members agree on a digest that no good member
  // holds; a binary agreement on availability settles that. If it decides
  // yes, some good member has the payload and the second supply reaches all.
  std::vector<ValueList> have(n, ValueList(ns));
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      if (result[k][s]) have[k][s] = Payload{1};
    }
  }
  const auto available = agree_many(ch, members, have);
  supply();
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t s = 0; s < ns; ++s) {
      if (!available[k][s]) result[k][s].reset();
    }
  }
  return result;
}

std::vector<ValueList> broadcast_uniform(Channel& ch, std::span<const std::uint32_t> members,
                                         std::span<const std::uint32_t> senders,
                                         const ValueList& values) {
  std::vector<ValueList> sent(senders.size(), ValueList(members.size()));
  for (std::size_t s = 0; s < senders.size(); ++s) {
    for (auto& slot : sent[s]) slot = values[s];
  }
  return broadcast_many(ch, members, senders, sent);
}

std::vector<std::optional<Payload>> broadcast_check(Channel& ch, std::uint32_t sender,
                                                    const std::vector<std::optional<Payload>>& sent,
                                                    std::span<const std::uint32_t> members) {
  const std::uint32_t senders[] = {sender};
  std::vector<ValueList> per_sender{ValueList(sent.begin(), sent.end())};
  auto d = broadcast_many(ch, members, senders, per_sender);
  std::vector<std::optional<Payload>> out;
  out.reserve(d.size());
  for (auto& row : d) out.push_back(std::move(row[0]));
  return out;
}

}  // namespace qmpc
