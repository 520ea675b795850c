#include "qmpc/circuit.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>

namespace qmpc {

const char* gate_kind_name(GateKind k) {
  switch (k) {
    case GateKind::Add:
      return "add";
    case GateKind::Mul:
      return "mul";
    case GateKind::CMul:
      return "cmul";
  }
  return "?";
}

namespace {

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

// Positive 1-based index.
bool parse_index(std::string_view s, std::uint32_t& out) {
  return parse_int(s, out) && out >= 1;
}

struct RawSource {
  char kind;  // 'x' or 'g'
  std::uint32_t index;
};

bool parse_source(std::string_view s, RawSource& out) {
  if (s.size() < 2 || (s[0] != 'x' && s[0] != 'g')) return false;
  out.kind = s[0];
  return parse_index(s.substr(1), out.index);
}

}  // namespace

void finalize_circuit(Circuit& c, int line_hint) {
  const std::size_t m = c.gates.size();
  const std::size_t k = c.max_degree;
  std::vector<std::size_t> fanout_in(c.inputs, 0), fanout_g(m, 0);
  for (std::size_t g = 0; g < m; ++g) {
    const Gate& gate = c.gates[g];
    if (gate.sources.size() > k) {
      throw FanInExceeded("gate " + std::to_string(g + 1) + " has fan-in " +
                          std::to_string(gate.sources.size()) + " > " + std::to_string(k));
    }
    const std::size_t want_min = gate.kind == GateKind::CMul ? 1 : 2;
    if (gate.sources.size() < want_min || (gate.kind == GateKind::CMul && gate.sources.size() != 1)) {
      throw ParseError(static_cast<std::size_t>(line_hint),
                       "gate " + std::to_string(g + 1) + " has the wrong number of sources");
    }
    for (const Source& s : gate.sources) {
      if (s.input ? s.index >= c.inputs : s.index >= m) {
        throw ParseError(static_cast<std::size_t>(line_hint),
                         "gate " + std::to_string(g + 1) + " reads an undefined wire");
      }
      ++(s.input ? fanout_in[s.index] : fanout_g[s.index]);
    }
  }
  for (std::size_t i = 0; i < c.inputs; ++i) {
    if (fanout_in[i] > k) throw FanInExceeded("input " + std::to_string(i + 1) + " exceeds fan-out " + std::to_string(k));
  }
  for (std::size_t g = 0; g < m; ++g) {
    if (fanout_g[g] > k) throw FanInExceeded("gate " + std::to_string(g + 1) + " exceeds fan-out " + std::to_string(k));
  }
  if (m == 0) {
    if (!c.output.input || c.output.index >= c.inputs) {
      throw ParseError(static_cast<std::size_t>(line_hint), "circuit without gates must output an input");
    }
  } else if (c.output.input || c.output.index != 0) {
    throw ParseError(static_cast<std::size_t>(line_hint), "the output must be gate 1");
  }

  // Kahn's algorithm over gate-to-gate wires.
  std::vector<std::size_t> pending(m, 0);
  std::vector<std::vector<std::uint32_t>> consumers(m);
  for (std::size_t g = 0; g < m; ++g) {
    for (const Source& s : c.gates[g].sources) {
      if (!s.input) {
        ++pending[g];
        consumers[s.index].push_back(static_cast<std::uint32_t>(g));
      }
    }
  }
  c.topo.clear();
  std::vector<std::uint32_t> ready;
  for (std::size_t g = m; g-- > 0;) {
    if (pending[g] == 0) ready.push_back(static_cast<std::uint32_t>(g));
  }
  while (!ready.empty()) {
    const std::uint32_t g = ready.back();
    ready.pop_back();
    c.topo.push_back(g);
    for (std::uint32_t u : consumers[g]) {
      if (--pending[u] == 0) ready.push_back(u);
    }
  }
  if (c.topo.size() != m) {
    for (std::size_t g = 0; g < m; ++g) {
      if (pending[g] != 0) throw CycleDetected("wire loop through gate " + std::to_string(g + 1));
    }
  }
}

Circuit parse_circuit(std::string_view text, std::size_t max_degree) {
  Circuit c;
  c.max_degree = max_degree;
  std::map<std::uint32_t, std::size_t> input_lines;
  struct RawGate {
    std::size_t line;
    GateKind kind;
    std::int64_t constant;
    std::vector<RawSource> sources;
  };
  std::map<std::uint32_t, RawGate> raw;
  std::optional<std::pair<RawSource, std::size_t>> output;

  std::size_t lineno = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++lineno;
    if (auto h = line.find('#'); h != std::string_view::npos) line = line.substr(0, h);
    const auto tok = split_ws(line);
    if (tok.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (tok[0] == "input") {
      std::uint32_t i = 0;
      if (tok.size() != 2 || !parse_index(tok[1], i)) throw ParseError(lineno, "expected: input <i>");
      if (!input_lines.emplace(i, lineno).second) throw ParseError(lineno, "input declared twice");
    } else if (tok[0] == "gate") {
      std::uint32_t id = 0;
      if (tok.size() < 4 || !parse_index(tok[1], id)) {
        throw ParseError(lineno, "expected: gate <id> <add|mul|cmul c> <src>...");
      }
      RawGate g{lineno, GateKind::Add, 0, {}};
      std::size_t first_src = 3;
      if (tok[2] == "add") {
        g.kind = GateKind::Add;
      } else if (tok[2] == "mul") {
        g.kind = GateKind::Mul;
      } else if (tok[2] == "cmul") {
        g.kind = GateKind::CMul;
        if (tok.size() < 5 || !parse_int(tok[3], g.constant)) throw ParseError(lineno, "cmul needs an integer constant");
        first_src = 4;
      } else {
        throw ParseError(lineno, "unknown gate kind '" + std::string(tok[2]) + "'");
      }
      for (std::size_t j = first_src; j < tok.size(); ++j) {
        RawSource s{};
        if (!parse_source(tok[j], s)) throw ParseError(lineno, "bad source '" + std::string(tok[j]) + "'");
        g.sources.push_back(s);
      }
      if (g.kind == GateKind::CMul && g.sources.size() != 1) throw ParseError(lineno, "cmul takes one source");
      if (g.kind != GateKind::CMul && g.sources.size() < 2) throw ParseError(lineno, "add and mul take at least two sources");
      if (g.sources.size() > max_degree) {
        throw FanInExceeded("line " + std::to_string(lineno) + ": gate " + std::to_string(id) +
                            " has fan-in " + std::to_string(g.sources.size()));
      }
      if (!raw.emplace(id, std::move(g)).second) throw ParseError(lineno, "gate declared twice");
    } else if (tok[0] == "output") {
      RawSource s{};
      if (tok.size() != 2) throw ParseError(lineno, "expected: output <gate-id>");
      std::uint32_t bare = 0;
      if (parse_index(tok[1], bare)) {
        s = {'g', bare};
      } else if (!parse_source(tok[1], s)) {
        throw ParseError(lineno, "bad output '" + std::string(tok[1]) + "'");
      }
      if (output) throw ParseError(lineno, "output declared twice");
      output = std::make_pair(s, lineno);
    } else {
      throw ParseError(lineno, "unknown statement '" + std::string(tok[0]) + "'");
    }
    if (end == text.size()) break;
  }

  c.inputs = input_lines.size();
  std::uint32_t expect = 1;
  for (const auto& [i, line] : input_lines) {
    if (i != expect++) throw ParseError(line, "inputs must be numbered 1..n without gaps");
  }
  expect = 1;
  for (const auto& [id, g] : raw) {
    if (id != expect++) throw ParseError(g.line, "gates must be numbered 1..m without gaps");
  }
  c.gates.resize(raw.size());
  for (const auto& [id, g] : raw) {
    Gate& gate = c.gates[id - 1];
    gate.kind = g.kind;
    gate.constant = g.constant;
    for (const RawSource& s : g.sources) {
      const bool in = s.kind == 'x';
      if (in ? s.index > c.inputs : s.index > raw.size()) {
        throw ParseError(g.line, std::string("undefined ") + (in ? "input" : "gate") + " " + s.kind +
                                     std::to_string(s.index));
      }
      gate.sources.push_back(Source{in, s.index - 1});
    }
  }
  if (output) {
    const auto& [s, line] = *output;
    const bool in = s.kind == 'x';
    if (in ? s.index > c.inputs : s.index > raw.size()) throw ParseError(line, "output names an undefined wire");
    c.output = Source{in, s.index - 1};
    finalize_circuit(c, static_cast<int>(line));
  } else {
    throw ParseError(lineno, "missing output statement");
  }
  return c;
}

Circuit load_circuit(const std::string& path, std::size_t max_degree) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open circuit file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_circuit(ss.str(), max_degree);
  } catch (const ParseError& e) {
    throw ParseError(path, e.line(), e.detail());
  } catch (const CycleDetected& e) {
    throw CycleDetected(path + ": " + e.what());
  } catch (const FanInExceeded& e) {
    throw FanInExceeded(path + ": " + e.what());
  }
}

std::string circuit_to_text(const Circuit& c) {
  std::ostringstream os;
  for (std::size_t i = 0; i < c.inputs; ++i) os << "input " << i + 1 << "\n";
  for (std::size_t g = 0; g < c.gates.size(); ++g) {
    const Gate& gate = c.gates[g];
    os << "gate " << g + 1 << " " << gate_kind_name(gate.kind);
    if (gate.kind == GateKind::CMul) os << " " << gate.constant;
    for (const Source& s : gate.sources) os << " " << (s.input ? 'x' : 'g') << s.index + 1;
    os << "\n";
  }
  os << "output " << (c.output.input ? 'x' : 'g') << c.output.index + 1 << "\n";
  return os.str();
}

GateGraph build_graph(const Circuit& c, std::size_t n) {
  if (c.inputs != n) {
    throw ConfigError("circuit has " + std::to_string(c.inputs) + " inputs but there are " +
                      std::to_string(n) + " players");
  }
  GateGraph g;
  g.m = c.m();
  g.n = n;
  const std::size_t total = g.m + n + 1;
  g.height.assign(total, 0);
  g.children.assign(total, {});
  g.parents.assign(total, {});
  for (std::uint32_t gi : c.topo) {
    const std::uint32_t node = gi + 1;
    int h = 0;
    for (const Source& s : c.gates[gi].sources) {
      const std::uint32_t child = g.node_of(s);
      g.children[node].push_back(child);
      g.parents[child].push_back(node);
      h = std::max(h, g.height[child]);
    }
    g.height[node] = h + 1;
  }
  g.root = g.node_of(c.output);
  return g;
}

Fp apply_gate(const Gate& g, const PrimeField& field, const std::vector<Fp>& operands) {
  switch (g.kind) {
    case GateKind::Add: {
      Fp acc = field.zero();
      for (const Fp& v : operands) acc += v;
      return acc;
    }
    case GateKind::Mul: {
      Fp acc = field.one();
      for (const Fp& v : operands) acc *= v;
      return acc;
    }
    case GateKind::CMul:
      return field.from_signed(g.constant) * operands.at(0);
  }
  return field.zero();
}

Evaluation eval_plain(const Circuit& c, const PrimeField& field, const std::vector<Fp>& inputs) {
  if (inputs.size() != c.inputs) throw ConfigError("eval_plain: wrong number of inputs");
  const std::size_t m = c.m();
  Evaluation ev;
  ev.values.assign(m + c.inputs + 1, field.zero());
  for (std::size_t i = 0; i < c.inputs; ++i) ev.values[m + 1 + i] = inputs[i];
  std::vector<Fp> ops;
  for (std::uint32_t gi : c.topo) {
    ops.clear();
    for (const Source& s : c.gates[gi].sources) {
      ops.push_back(ev.values[s.input ? m + 1 + s.index : s.index + 1]);
    }
    ev.values[gi + 1] = apply_gate(c.gates[gi], field, ops);
  }
  const Source& o = c.output;
  ev.output = ev.values[o.input ? m + 1 + o.index : o.index + 1];
  return ev;
}

Circuit random_circuit(std::size_t n, std::size_t m, int depth, Rng& rng, std::size_t max_degree) {
  if (n < 2 || m == 0) throw ConfigError("random_circuit needs n >= 2 and m >= 1");
  const auto d = static_cast<std::size_t>(std::clamp<int>(depth, 1, static_cast<int>(m)));
  // Levels: the output gate alone at d, the rest spread evenly over 1..d-1.
  std::vector<std::size_t> level(m, d);
  if (d > 1) {
    std::vector<std::size_t> rest(m - 1);
    for (std::size_t i = 0; i < rest.size(); ++i) rest[i] = 1 + i % (d - 1);
    for (std::size_t i = rest.size(); i > 1; --i) std::swap(rest[i - 1], rest[rng.below(i)]);
    for (std::size_t i = 1; i < m; ++i) level[i] = rest[i - 1];
  } else {
    std::fill(level.begin(), level.end(), 1);
  }
  if (d > 1 && (m - 1 + d - 2) / (d - 1) > n) throw ConfigError("random_circuit: too many gates per level");

  struct Slot {
    Source src;
    std::size_t level;
    std::size_t used;
  };
  std::vector<Slot> slots;
  for (std::size_t i = 0; i < n; ++i) slots.push_back({{true, static_cast<std::uint32_t>(i)}, 0, 0});
  for (std::size_t g = 0; g < m; ++g) slots.push_back({{false, static_cast<std::uint32_t>(g)}, level[g], 0});

  // Pick a source slot with spare fan-out satisfying `ok`, preferring unused
  // ones so that as many gates as possible feed the output.
  auto pick = [&](auto ok) -> Slot* {
    std::vector<Slot*> fresh, any;
    for (Slot& s : slots) {
      if (s.used >= max_degree || !ok(s)) continue;
      (s.used == 0 ? fresh : any).push_back(&s);
    }
    auto& pool = fresh.empty() ? any : fresh;
    if (pool.empty()) return nullptr;
    return pool[rng.below(pool.size())];
  };

  Circuit c;
  c.inputs = n;
  c.max_degree = max_degree;
  c.gates.resize(m);
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return level[a] < level[b]; });
  // Per level: first sources for every gate, then second sources, so that
  // the level below is not used up by second sources.
  for (std::size_t lo = 0; lo < order.size();) {
    const std::size_t lv = level[order[lo]];
    std::size_t hi = lo;
    while (hi < order.size() && level[order[hi]] == lv) ++hi;
    for (std::size_t x = lo; x < hi; ++x) {
      Gate& gate = c.gates[order[x]];
      const std::uint64_t r = rng.below(20);
      gate.kind = r < 3 ? GateKind::CMul : (r < 11 ? GateKind::Add : GateKind::Mul);
      if (gate.kind == GateKind::CMul) gate.constant = 2 + static_cast<std::int64_t>(rng.below(4));
      Slot* first = pick([&](const Slot& s) { return s.level + 1 == lv; });
      if (!first) throw ConfigError("random_circuit: no source at the level below");
      ++first->used;
      gate.sources.push_back(first->src);
    }
    for (std::size_t x = lo; x < hi; ++x) {
      Gate& gate = c.gates[order[x]];
      if (gate.kind == GateKind::CMul) continue;
      const Source taken = gate.sources[0];
      Slot* second = pick([&](const Slot& s) { return s.level < lv && !(s.src == taken); });
      if (second) {
        ++second->used;
        gate.sources.push_back(second->src);
      } else {
        gate.kind = GateKind::CMul;
        gate.constant = 2;
      }
    }
    lo = hi;
  }
  c.output = {false, 0};
  // Random numbering for gates other than the output.
  std::vector<std::uint32_t> perm(m);
  std::iota(perm.begin(), perm.end(), 0u);
  for (std::size_t i = m; i > 2; --i) std::swap(perm[i - 1], perm[1 + rng.below(i - 1)]);
  std::vector<Gate> renum(m);
  for (std::size_t g = 0; g < m; ++g) {
    Gate gate = c.gates[g];
    for (Source& s : gate.sources) {
      if (!s.input) s.index = perm[s.index];
    }
    renum[perm[g]] = std::move(gate);
  }
  c.gates = std::move(renum);
  finalize_circuit(c);
  return c;
}

Circuit tree_circuit(std::size_t inputs, bool mul_at_root) {
  if (inputs < 2 || (inputs & (inputs - 1)) != 0) throw ConfigError("tree_circuit needs a power of two >= 2");
  Circuit c;
  c.inputs = inputs;
  const std::size_t m = inputs - 1;
  c.gates.resize(m);
  for (std::size_t j = 1; j <= m; ++j) {
    Gate& g = c.gates[j - 1];
    g.kind = (j == 1 && mul_at_root) || (j > 1 && j % 2 == 1) ? GateKind::Mul : GateKind::Add;
    if (2 * j <= m) {
      g.sources = {{false, static_cast<std::uint32_t>(2 * j - 1)}, {false, static_cast<std::uint32_t>(2 * j)}};
    } else {
      const auto base = static_cast<std::uint32_t>(2 * (j - (m + 1) / 2));
      g.sources = {{true, base}, {true, base + 1}};
    }
  }
  c.output = {false, 0};
  finalize_circuit(c);
  return c;
}

}  // namespace qmpc
