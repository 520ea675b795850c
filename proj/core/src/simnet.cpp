#include <bit>
#include "qmpc/simnet.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <tuple>

namespace qmpc {

const char* phase_name(Phase p) {
  switch (p) {
    case Phase::QuorumFormation: return "quorum_formation";
    case Phase::Commitment: return "commitment";
    case Phase::Mask: return "mask";
    case Phase::Gate: return "gate";
    case Phase::Output: return "output";
  }
  return "?";
}

const char* kind_name(MsgKind k) {
  switch (k) {
    case MsgKind::Deal: return "deal";
    case MsgKind::CrossCheck: return "cross";
    case MsgKind::BroadcastSend: return "bcast";
    case MsgKind::Echo: return "echo";
    case MsgKind::Candidate: return "cand";
    case MsgKind::Grade: return "grade";
    case MsgKind::King: return "king";
    case MsgKind::ShareOpen: return "open";
    case MsgKind::MaskedValue: return "masked";
    case MsgKind::Output: return "output";
    case MsgKind::Supply: return "supply";
  }
  return "?";
}

bool is_structured(MsgKind k) {
  switch (k) {
    case MsgKind::BroadcastSend:
    case MsgKind::Echo:
    case MsgKind::Candidate:
    case MsgKind::Grade:
    case MsgKind::King:
    case MsgKind::Supply:
      return true;
    default:
      return false;
  }
}

Payload encode_values(const ValueList& values) {
  Payload out;
  for (const auto& v : values) {
    if (!v) {
      out.push_back(0);
      continue;
    }
    out.push_back(1);
    out.push_back(v->size());
    out.insert(out.end(), v->begin(), v->end());
  }
  return out;
}

std::optional<ValueList> decode_values(const Payload& p, std::size_t expected) {
  ValueList out;
  out.reserve(expected);
  std::size_t i = 0;
  while (i < p.size() && out.size() < expected) {
    if (p[i] == 0) {
      out.emplace_back();
      ++i;
      continue;
    }
    if (p[i] != 1 || i + 1 >= p.size()) return std::nullopt;
    const std::uint64_t len = p[i + 1];
    if (len > p.size() - i - 2) return std::nullopt;
    const auto first = p.begin() + static_cast<std::ptrdiff_t>(i + 2);
    out.emplace_back(Payload(first, first + static_cast<std::ptrdiff_t>(len)));
    i += 2 + len;
  }
  if (i != p.size() || out.size() != expected) return std::nullopt;
  return out;
}

const char* behavior_name(Behavior b) {
  switch (b) {
    case Behavior::Honest: return "honest";
    case Behavior::Silent: return "silent";
    case Behavior::Garbage: return "garbage";
    case Behavior::Equivocate: return "equivocate";
    case Behavior::TargetedShareCorruption: return "targeted-share-corruption";
    case Behavior::InconsistentCommit: return "inconsistent-commit";
  }
  return "?";
}

std::optional<Behavior> parse_behavior(const std::string& name) {
  for (Behavior b : {Behavior::Honest, Behavior::Silent, Behavior::Garbage, Behavior::Equivocate,
                     Behavior::TargetedShareCorruption, Behavior::InconsistentCommit}) {
    if (name == behavior_name(b)) return b;
  }
  return std::nullopt;
}

Adversary::Adversary(AdversaryStrategy strategy, std::uint64_t modulus, std::uint64_t seed)
    : strategy_(std::move(strategy)), p_(modulus), rng_({seed, 0xADu}) {
  std::sort(strategy_.controlled.begin(), strategy_.controlled.end());
  strategy_.controlled.erase(std::unique(strategy_.controlled.begin(), strategy_.controlled.end()),
                             strategy_.controlled.end());
  for (PlayerId p : strategy_.controlled) {
    if (p >= mask_.size()) mask_.resize(p + 1, false);
    mask_[p] = true;
  }
}

Behavior Adversary::behavior(Phase phase) const {
  auto it = strategy_.per_phase.find(phase);
  return it == strategy_.per_phase.end() ? strategy_.behavior : it->second;
}

void Adversary::perturb(Message& m, std::uint64_t delta) {
  auto bump = [&](std::uint64_t& w) { w = (w % p_ + delta % p_) % p_; };
  if (!is_structured(m.kind)) {
    for (auto& w : m.payload) bump(w);
    return;
  }
  // Keep the value-list framing intact and move the contents, so recipients
  // see a well-formed but different claim. Absent entries become present.
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.payload.size();) {
    if (m.payload[i] == 0) {
      ++count;
      ++i;
    } else if (m.payload[i] == 1 && i + 1 < m.payload.size()) {
      ++count;
      i += 2 + m.payload[i + 1];
    } else {
      return;
    }
  }
  auto values = decode_values(m.payload, count);
  if (!values) return;
  for (auto& v : *values) {
    if (!v) {
      v = Payload{delta % p_};
      continue;
    }
    for (auto& w : *v) bump(w);
  }
  m.payload = encode_values(*values);
}

bool Adversary::tamper(Phase phase, Message& m) {
  switch (behavior(phase)) {
    case Behavior::Honest:
      return true;
    case Behavior::Silent:
      return false;
    case Behavior::Garbage:
      for (auto& w : m.payload) w = random_word();
      return true;
    case Behavior::Equivocate:
      if ((m.dst & 1u) == 1u) perturb(m, 1);
      return true;
    case Behavior::TargetedShareCorruption:
      if (m.kind == MsgKind::Deal || m.kind == MsgKind::CrossCheck ||
          m.kind == MsgKind::ShareOpen) {
        for (auto& w : m.payload) w = (w + 1 + rng_.below(p_ - 1)) % p_;
      }
      return true;
    case Behavior::InconsistentCommit:
      if ((phase == Phase::Commitment || phase == Phase::Mask) &&
          (m.kind == MsgKind::Deal || m.kind == MsgKind::MaskedValue) && (m.dst & 1u) == 1u) {
        perturb(m, m.dst + 1);
      }
      return true;
  }
  return true;
}

PhaseCounters PlayerCounters::total() const {
  PhaseCounters t;
  for (const auto& p : phase) t += p;
  return t;
}

namespace {

std::vector<std::uint64_t> column(const RunMetrics& m, std::optional<Phase> phase,
                                  std::uint64_t PhaseCounters::*field) {
  std::vector<std::uint64_t> v;
  v.reserve(m.players.size());
  for (const auto& p : m.players) {
    v.push_back(phase ? p.phase[static_cast<std::size_t>(*phase)].*field : p.total().*field);
  }
  return v;
}

}  // namespace

std::uint64_t RunMetrics::max_messages(std::optional<Phase> phase) const {
  auto v = column(*this, phase, &PhaseCounters::messages);
  return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
}

double RunMetrics::median_messages(std::optional<Phase> phase) const {
  auto v = column(*this, phase, &PhaseCounters::messages);
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? static_cast<double>(v[n / 2])
                    : (static_cast<double>(v[n / 2 - 1]) + static_cast<double>(v[n / 2])) / 2.0;
}

std::uint64_t RunMetrics::max_field_ops(std::optional<Phase> phase) const {
  auto v = column(*this, phase, &PhaseCounters::field_ops);
  return v.empty() ? 0 : *std::max_element(v.begin(), v.end());
}

std::uint64_t RunMetrics::total_messages() const {
  std::uint64_t s = 0;
  for (const auto& p : players) s += p.total().messages;
  return s;
}

std::uint64_t payload_hash(const Payload& p) {
  std::uint64_t h = 1469598103934665603ull;
  for (std::uint64_t w : p) {
    for (int b = 0; b < 8; ++b) {
      h ^= (w >> (8 * b)) & 0xFFu;
      h *= 1099511628211ull;
    }
  }
  return h;
}

struct Network::Digest {
  EVP_MD_CTX* ctx;
  Digest() : ctx(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr); }
  ~Digest() { EVP_MD_CTX_free(ctx); }
};

Network::Network(std::size_t players, std::uint64_t modulus, bool keep_transcript)
    : p_(modulus), keep_transcript_(keep_transcript), counters_(players),
      digest_(std::make_unique<Digest>()) {}

Network::~Network() = default;

void Network::attach_adversary(std::shared_ptr<Adversary> adversary) {
  if (started_) throw StrategyAfterStart();
  adversary_ = std::move(adversary);
}

void Network::charge_synthetic(Phase phase, PlayerId p, std::uint64_t messages) {
  counters_[p].phase[static_cast<std::size_t>(phase)].messages += messages;
  if (phase == Phase::QuorumFormation) synthetic_qf_ = std::max(synthetic_qf_, messages);
}

void Network::record(const Message& m) {
  auto put = [this](std::uint64_t v, int bytes) {
    for (int b = 0; b < bytes; ++b) scratch_.push_back(static_cast<unsigned char>(v >> (8 * b)));
  };
  put(m.round + 1, 4);
  put(m.from, 4);
  put(m.to, 4);
  put(m.tag, 8);
  scratch_.push_back(static_cast<unsigned char>(m.kind));
  put(m.payload.size(), 4);
  if constexpr (std::endian::native == std::endian::little) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(m.payload.data());
    scratch_.insert(scratch_.end(), bytes, bytes + 8 * m.payload.size());
  } else {
    for (std::uint64_t w : m.payload) put(w, 8);
  }
  if (keep_transcript_) {
    transcript_.push_back({m.round + 1, m.from, m.to, m.tag, m.kind, payload_hash(m.payload)});
  }
}

std::vector<Message> Network::deliver_round(std::vector<Message> outbox) {
  started_ = true;
  std::vector<Message> delivered;
  delivered.reserve(outbox.size());
  for (Message& m : outbox) {
    if (m.from >= counters_.size() || m.to >= counters_.size()) {
      throw std::out_of_range("deliver_round: unknown player");
    }
    if (adversary_ && adversary_->controls(m.from) && !adversary_->tamper(phase_, m)) continue;
    if (m.from != m.to) {
      auto& c = counters_[m.from].phase[idx()];
      c.messages += 1;
      c.words += m.payload.size();
    }
    last_round_ = std::max(last_round_, m.round + 1);
    delivered.push_back(std::move(m));
  }
  std::sort(delivered.begin(), delivered.end(), [](const Message& a, const Message& b) {
    return std::tie(a.dst, a.src, a.kind) < std::tie(b.dst, b.src, b.kind);
  });
  scratch_.clear();
  for (const Message& m : delivered) {
    record(m);
    if (adversary_ && adversary_->controls(m.to)) adversary_->observe(phase_, m);
  }
  if (!scratch_.empty()) EVP_DigestUpdate(digest_->ctx, scratch_.data(), scratch_.size());
  return delivered;
}

void Network::inject(Message m) {
  if (!adversary_ || !adversary_->controls(m.from)) {
    throw SpoofAttempt("inject: player " + std::to_string(m.from) +
                       " is not controlled by the adversary");
  }
  std::vector<Message> one;
  one.push_back(std::move(m));
  deliver_round(std::move(one));
}

std::string Network::transcript_digest() const {
  EVP_MD_CTX* copy = EVP_MD_CTX_new();
  EVP_MD_CTX_copy_ex(copy, digest_->ctx);
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(copy, out, &len);
  EVP_MD_CTX_free(copy);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", out[i]);
    hex += buf;
  }
  return hex;
}

RunMetrics Network::metrics_snapshot() const {
  RunMetrics m;
  m.players = counters_;
  m.synthetic_qf_messages = synthetic_qf_;
  m.rounds = last_round_;
  return m;
}

Inbox::Inbox(std::vector<Message> delivered, std::size_t endpoints)
    : msgs_(std::move(delivered)), offsets_(endpoints + 1, 0) {
  // msgs_ is sorted by dst.
  for (const Message& m : msgs_) ++offsets_[m.dst + 1];
  for (std::size_t i = 1; i < offsets_.size(); ++i) offsets_[i] += offsets_[i - 1];
}

std::span<const Message> Inbox::to(std::uint32_t dst) const {
  if (dst + 1 >= offsets_.size()) return {};
  return std::span<const Message>(msgs_.data() + offsets_[dst], offsets_[dst + 1] - offsets_[dst]);
}

const Payload* Inbox::find(std::uint32_t dst, std::uint32_t src, MsgKind kind) const {
  auto range = to(dst);
  auto it = std::lower_bound(range.begin(), range.end(), std::pair{src, kind},
                             [](const Message& m, const std::pair<std::uint32_t, MsgKind>& key) {
                               return std::tie(m.src, m.kind) < std::tie(key.first, key.second);
                             });
  if (it == range.end() || it->src != src || it->kind != kind) return nullptr;
  return &it->payload;
}

Channel::Channel(Network& net, std::uint64_t tag, std::vector<PlayerId> endpoints,
                 std::uint32_t start_round)
    : net_(net), tag_(tag), endpoints_(std::move(endpoints)), start_(start_round),
      round_(start_round) {}

void Channel::post(std::uint32_t src, std::uint32_t dst, MsgKind kind, Payload payload) {
  Message m;
  m.from = endpoints_.at(src);
  m.to = endpoints_.at(dst);
  m.src = src;
  m.dst = dst;
  m.round = round_;
  m.tag = tag_;
  m.kind = kind;
  m.payload = std::move(payload);
  pending_.push_back(std::move(m));
}

Inbox Channel::exchange() {
  std::vector<Message> out;
  out.swap(pending_);
  auto delivered = net_.deliver_round(std::move(out));
  ++round_;
  return Inbox(std::move(delivered), endpoints_.size());
}

}  // namespace qmpc
