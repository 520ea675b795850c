#include "qmpc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "qmpc/errors.hpp"

namespace qmpc {

namespace {

using json = nlohmann::ordered_json;

constexpr Phase kPhases[] = {Phase::QuorumFormation, Phase::Commitment, Phase::Mask, Phase::Gate, Phase::Output};

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::optional<Phase> parse_phase(const std::string& s) {
  for (Phase p : kPhases) {
    if (s == phase_name(p)) return p;
  }
  return std::nullopt;
}

std::uint64_t to_u64(const std::string& v) {
  std::size_t used = 0;
  if (v.empty() || v[0] == '-') throw ConfigError("expected a non-negative integer, got '" + v + "'");
  const unsigned long long x = std::stoull(v, &used, 0);
  if (used != v.size()) throw ConfigError("expected a non-negative integer, got '" + v + "'");
  return x;
}

double to_double(const std::string& v) {
  std::size_t used = 0;
  const double x = std::stod(v, &used);
  if (used != v.size() || !std::isfinite(x)) throw ConfigError("expected a number, got '" + v + "'");
  return x;
}

Behavior to_behavior(const std::string& v) {
  auto b = parse_behavior(v);
  if (!b) throw ConfigError("unknown adversary strategy '" + v + "'");
  return *b;
}

// Shortest text that reads back to the same double.
std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  std::string s = os.str();
  for (int prec = 1; prec < 17; ++prec) {
    std::ostringstream t;
    t << std::setprecision(prec) << x;
    if (std::stod(t.str()) == x) return t.str();
  }
  return s;
}

// Checks one invariant; returns the offending key and a message.
std::optional<std::pair<std::string, std::string>> check(const RunConfig& c) {
  if (c.n < 4) return std::pair{"n", "at least 4 players are needed for quorums of size 4"};
  if (c.circuit.empty() && c.m == 0 && c.m_per_n <= 0) return std::pair{"m", "set m, m_per_n or circuit"};
  if (c.depth < 0) return std::pair{"depth", "must be non-negative"};
  if (!is_prime(c.p)) return std::pair{"p", std::to_string(c.p) + " is not prime"};
  if (c.quorum_c <= 0) return std::pair{"quorum_c", "must be positive"};
  if (c.quorum_size() < 4) return std::pair{"quorum_c", "quorum size " + std::to_string(c.quorum_size()) + " is below 4"};
  if (c.p <= c.quorum_size()) return std::pair{"p", "must exceed the quorum size " + std::to_string(c.quorum_size())};
  if (c.epsilon < 0 || c.epsilon >= 1.0 / 3) return std::pair{"epsilon", "must lie in [0, 1/3)"};
  if (c.bad_fraction < 0) return std::pair{"bad_fraction", "must be non-negative"};
  if (c.bad_fraction > 1.0 / 3 - c.epsilon + 1e-12) {
    return std::pair{"bad_fraction", fmt(c.bad_fraction) + " exceeds 1/3 - epsilon"};
  }
  if (c.repetitions == 0) return std::pair{"repetitions", "must be at least 1"};
  if (!c.inputs.empty() && c.inputs.size() != c.n) {
    return std::pair{"inputs", "needs " + std::to_string(c.n) + " values"};
  }
  if (c.formation_retries < 1) return std::pair{"formation_retries", "must be at least 1"};
  return std::nullopt;
}

json config_json(const RunConfig& c) {
  json j;
  j["n"] = c.n;
  j["circuit"] = c.circuit;
  j["m"] = c.m;
  j["m_per_n"] = c.m_per_n;
  j["depth"] = c.depth;
  j["p"] = c.p;
  j["quorum_c"] = c.quorum_c;
  j["quorum_size"] = c.quorum_size();
  j["epsilon"] = c.epsilon;
  j["bad_fraction"] = c.bad_fraction;
  j["bad_count"] = c.bad_count();
  j["adversary"] = behavior_name(c.adversary);
  json per = json::object();
  for (const auto& [ph, b] : c.adversary_phase) per[phase_name(ph)] = behavior_name(b);
  j["adversary_phase"] = per;
  j["seed"] = c.seed;
  j["repetitions"] = c.repetitions;
  j["out_dir"] = c.out_dir;
  j["inputs"] = c.inputs;
  j["formation_retries"] = c.formation_retries;
  j["transcript"] = c.full_transcript ? "full" : "digest";
  return j;
}

json phase_json(const RunMetrics& m, std::optional<Phase> ph) {
  json j;
  j["max_messages"] = m.max_messages(ph);
  j["median_messages"] = m.median_messages(ph);
  j["max_field_ops"] = m.max_field_ops(ph);
  return j;
}

json run_json(const RunOutcome& o) {
  json j;
  j["seed"] = o.seed;
  j["verdict"] = o.error.empty() ? (o.pass ? "pass" : "fail") : "error";
  if (!o.error.empty()) j["error"] = o.error;
  if (!o.result) return j;
  const ProtocolResult& r = *o.result;
  j["expected"] = r.expected.value();
  std::size_t correct = 0, good = 0;
  for (const auto& out : r.outputs) {
    if (!out) continue;
    ++good;
    if (*out == r.expected) ++correct;
  }
  j["good_players"] = good;
  j["good_players_correct"] = correct;
  j["invariants_hold"] = r.invariants_hold();
  j["defaulted_inputs"] = std::count(r.defaulted.begin(), r.defaulted.end(), true);
  j["rounds"] = r.rounds;
  j["transcript_digest"] = r.transcript_digest;
  j["synthetic_qf_messages"] = r.metrics.synthetic_qf_messages;
  j["total_messages"] = r.metrics.total_messages();
  j["all_phases"] = phase_json(r.metrics, std::nullopt);
  json phases;
  for (Phase ph : kPhases) phases[phase_name(ph)] = phase_json(r.metrics, ph);
  j["phases"] = phases;
  json players = json::array();
  for (const auto& p : r.metrics.players) {
    const PhaseCounters t = p.total();
    players.push_back({{"messages", t.messages}, {"words", t.words}, {"field_ops", t.field_ops}});
  }
  j["players"] = players;
  return j;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << text;
}

}  // namespace

std::size_t RunConfig::quorum_size() const { return default_quorum_size(n, quorum_c); }

std::size_t RunConfig::bad_count() const {
  return static_cast<std::size_t>(std::floor(bad_fraction * static_cast<double>(n) + 1e-9));
}

void RunConfig::validate() const {
  if (auto e = check(*this)) throw ConfigError(e->first + ": " + e->second);
}

RunConfig parse_config(const std::string& text, const std::string& path) {
  RunConfig c;
  std::map<std::string, std::size_t> line_of;
  std::istringstream in(text);
  std::string raw;
  std::size_t lineno = 0;
  auto fail = [&](std::size_t line, const std::string& msg) -> ConfigError {
    return ConfigError(path + ":" + std::to_string(line) + ": " + msg);
  };
  while (std::getline(in, raw)) {
    ++lineno;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw fail(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (!line_of.emplace(key, lineno).second) throw fail(lineno, "duplicate key '" + key + "'");
    try {
      if (key == "n") {
        c.n = to_u64(val);
      } else if (key == "circuit") {
        c.circuit = val;
      } else if (key == "m") {
        c.m = to_u64(val);
      } else if (key == "m_per_n") {
        c.m_per_n = to_double(val);
      } else if (key == "depth") {
        c.depth = static_cast<int>(to_u64(val));
      } else if (key == "p") {
        c.p = to_u64(val);
      } else if (key == "quorum_c") {
        c.quorum_c = to_double(val);
      } else if (key == "epsilon") {
        c.epsilon = to_double(val);
      } else if (key == "bad_fraction") {
        c.bad_fraction = to_double(val);
      } else if (key == "adversary") {
        c.adversary = to_behavior(val);
      } else if (key.rfind("adversary.", 0) == 0) {
        const auto ph = parse_phase(key.substr(10));
        if (!ph) throw ConfigError("unknown phase in '" + key + "'");
        c.adversary_phase[*ph] = to_behavior(val);
      } else if (key == "seed") {
        c.seed = to_u64(val);
      } else if (key == "repetitions") {
        c.repetitions = to_u64(val);
      } else if (key == "out_dir") {
        c.out_dir = val;
      } else if (key == "inputs") {
        c.inputs.clear();
        std::istringstream vs(val);
        for (std::string w; std::getline(vs, w, ',');) c.inputs.push_back(to_u64(trim(w)));
      } else if (key == "formation_retries") {
        c.formation_retries = static_cast<int>(to_u64(val));
      } else if (key == "transcript") {
        if (val != "full" && val != "digest") throw ConfigError("transcript must be full or digest");
        c.full_transcript = val == "full";
      } else {
        throw ConfigError("unknown key '" + key + "'");
      }
    } catch (const ConfigError& e) {
      throw fail(lineno, e.what());
    } catch (const std::logic_error&) {
      throw fail(lineno, "bad value '" + val + "' for " + key);
    }
  }
  if (!c.circuit.empty() && std::filesystem::path(c.circuit).is_relative() && path != "<config>") {
    c.circuit = (std::filesystem::path(path).parent_path() / c.circuit).lexically_normal().string();
  }
  if (!c.circuit.empty() && c.n == 0) {
    // n defaults to the netlist's input count.
    c.n = load_circuit(c.circuit).inputs;
  }
  if (auto e = check(c)) {
    auto it = line_of.find(e->first);
    throw fail(it == line_of.end() ? 0 : it->second, e->first + ": " + e->second);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

std::string config_to_text(const RunConfig& c) {
  std::ostringstream os;
  os << "n = " << c.n << "\n";
  if (!c.circuit.empty()) os << "circuit = " << c.circuit << "\n";
  if (c.m) os << "m = " << c.m << "\n";
  if (c.m_per_n > 0) os << "m_per_n = " << fmt(c.m_per_n) << "\n";
  if (c.depth) os << "depth = " << c.depth << "\n";
  os << "p = " << c.p << "\n";
  os << "quorum_c = " << fmt(c.quorum_c) << "\n";
  os << "epsilon = " << fmt(c.epsilon) << "\n";
  os << "bad_fraction = " << fmt(c.bad_fraction) << "\n";
  os << "adversary = " << behavior_name(c.adversary) << "\n";
  for (const auto& [ph, b] : c.adversary_phase) os << "adversary." << phase_name(ph) << " = " << behavior_name(b) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "repetitions = " << c.repetitions << "\n";
  os << "out_dir = " << c.out_dir << "\n";
  if (!c.inputs.empty()) {
    os << "inputs = ";
    for (std::size_t i = 0; i < c.inputs.size(); ++i) os << (i ? ", " : "") << c.inputs[i];
    os << "\n";
  }
  os << "formation_retries = " << c.formation_retries << "\n";
  os << "transcript = " << (c.full_transcript ? "full" : "digest") << "\n";
  return os.str();
}

std::uint64_t derive_seed(std::uint64_t base, std::size_t i) {
  Rng rng({base, static_cast<std::uint64_t>(i), 0x5eedu});
  return rng.next();
}

Circuit config_circuit(const RunConfig& c, std::uint64_t run_seed) {
  if (!c.circuit.empty()) {
    Circuit circ = load_circuit(c.circuit);
    if (circ.inputs != c.n) {
      throw ConfigError(c.circuit + ": netlist has " + std::to_string(circ.inputs) + " inputs but n = " +
                        std::to_string(c.n));
    }
    return circ;
  }
  const std::size_t m = c.m_per_n > 0 ? static_cast<std::size_t>(std::llround(c.m_per_n * static_cast<double>(c.n)))
                                      : c.m;
  int depth = c.depth;
  if (depth == 0) depth = m <= 1 ? 1 : 2 + static_cast<int>((m - 2) / c.n);
  Rng rng({run_seed, 0xc1u});
  return random_circuit(c.n, m, depth, rng);
}

std::vector<PlayerId> config_bad_players(const RunConfig& c, std::uint64_t run_seed) {
  std::vector<PlayerId> all(c.n);
  for (std::size_t i = 0; i < c.n; ++i) all[i] = static_cast<PlayerId>(i);
  Rng rng({run_seed, 0xbadu});
  for (std::size_t i = c.n; i > 1; --i) std::swap(all[i - 1], all[rng.below(i)]);
  all.resize(c.bad_count());
  std::sort(all.begin(), all.end());
  return all;
}

RunOutcome run_once(const RunConfig& c, std::uint64_t run_seed, bool keep_transcript) {
  RunOutcome o;
  o.seed = run_seed;
  try {
    const Circuit circ = config_circuit(c, run_seed);
    const PrimeField field(c.p);
    std::vector<Fp> inputs;
    Rng in_rng({run_seed, 0x1au});
    for (std::size_t i = 0; i < c.n; ++i) {
      inputs.push_back(c.inputs.empty() ? field.sample(in_rng) : field.element(c.inputs[i]));
    }
    AdversaryStrategy strat;
    strat.controlled = config_bad_players(c, run_seed);
    strat.behavior = c.adversary;
    strat.per_phase = c.adversary_phase;
    ProtocolConfig pc;
    pc.modulus = c.p;
    pc.quorum_size = c.quorum_size();
    pc.epsilon = c.epsilon;
    pc.formation_retries = c.formation_retries;
    pc.keep_transcript = keep_transcript;
    o.result = run_protocol(pc, circ, inputs, strat, run_seed);
    o.pass = o.result->correct();
  } catch (const Error& e) {
    o.error = e.what();
  }
  return o;
}

ExperimentReport run_experiment(const RunConfig& c) {
  c.validate();
  // Netlist problems are config errors, not failed runs.
  if (!c.circuit.empty()) config_circuit(c, 0);
  ExperimentReport rep;
  rep.config = c;
  const std::filesystem::path dir(c.out_dir);
  std::filesystem::create_directories(dir);
  std::ofstream tlog(dir / "transcript.log", std::ios::binary);
  if (!tlog) throw ConfigError("cannot write " + (dir / "transcript.log").string());

  json runs = json::array();
  for (std::size_t i = 0; i < c.repetitions; ++i) {
    RunOutcome o = run_once(c, derive_seed(c.seed, i), c.full_transcript);
    if (!o.pass) ++rep.failures;
    runs.push_back(run_json(o));
    tlog << "# run " << i << " seed " << o.seed;
    if (o.result) {
      tlog << " digest " << o.result->transcript_digest << " entries " << o.result->transcript.size() << "\n";
      for (const TranscriptEntry& e : o.result->transcript) {
        tlog << e.round << ' ' << e.from << ' ' << e.to << ' ' << std::hex << e.tag << ' ' << kind_name(e.kind) << ' '
             << e.payload_hash << std::dec << '\n';
      }
      // Keep only the summary in memory.
      o.result->transcript.clear();
      o.result->transcript.shrink_to_fit();
    } else {
      tlog << " error " << o.error << "\n";
    }
    rep.runs.push_back(std::move(o));
  }

  json doc;
  doc["config"] = config_json(c);
  doc["verdict"] = rep.pass() ? "pass" : "fail";
  doc["runs_total"] = rep.runs.size();
  doc["failures"] = rep.failures;
  doc["runs"] = runs;
  write_file(dir / "metrics.json", doc.dump(2) + "\n");
  write_file(dir / "verdict.txt", std::string(rep.pass() ? "pass" : "fail") + " " +
                                      std::to_string(rep.runs.size() - rep.failures) + "/" +
                                      std::to_string(rep.runs.size()) + "\n");
  return rep;
}

ExperimentReport run_experiment(const std::string& config_path) { return run_experiment(load_config(config_path)); }

std::optional<SweepAxis> parse_axis(const std::string& name) {
  if (name == "n") return SweepAxis::N;
  if (name == "m") return SweepAxis::M;
  if (name == "bad_fraction" || name == "bad-fraction") return SweepAxis::BadFraction;
  return std::nullopt;
}

const char* axis_name(SweepAxis a) {
  switch (a) {
    case SweepAxis::N: return "n";
    case SweepAxis::M: return "m";
    case SweepAxis::BadFraction: return "bad_fraction";
  }
  return "?";
}

std::vector<SweepRow> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values) {
  std::vector<SweepRow> rows;
  for (const std::string& v : values) {
    RunConfig c = base;
    try {
      switch (axis) {
        case SweepAxis::N: c.n = to_u64(v); break;
        case SweepAxis::M:
          c.m = to_u64(v);
          c.m_per_n = 0;
          break;
        case SweepAxis::BadFraction: c.bad_fraction = to_double(v); break;
      }
      c.validate();
    } catch (const std::exception& e) {
      SweepRow row;
      row.axis_value = v;
      row.seed = base.seed;
      row.verdict = "error";
      row.error = e.what();
      rows.push_back(row);
      continue;
    }
    for (std::size_t i = 0; i < c.repetitions; ++i) {
      const RunOutcome o = run_once(c, derive_seed(c.seed, i), false);
      SweepRow row;
      row.axis_value = v;
      row.seed = o.seed;
      if (o.result) {
        const RunMetrics& m = o.result->metrics;
        row.max_messages = m.max_messages();
        row.median_messages = m.median_messages();
        row.max_field_ops = m.max_field_ops();
        row.gate_max_messages = m.max_messages(Phase::Gate);
        row.gate_median_messages = m.median_messages(Phase::Gate);
        row.qf_synthetic = m.synthetic_qf_messages;
      }
      row.verdict = o.error.empty() ? (o.pass ? "pass" : "fail") : "error";
      row.error = o.error;
      rows.push_back(row);
    }
  }
  const std::filesystem::path dir(base.out_dir);
  std::filesystem::create_directories(dir);
  write_file(dir / "sweep.csv", sweep_csv(rows, axis));
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis) {
  auto quote = [](const std::string& s) {
    std::string out = "\"";
    for (char ch : s) {
      if (ch == '"') out += '"';
      out += ch == '\n' ? ' ' : ch;
    }
    return out + "\"";
  };
  std::ostringstream os;
  os << axis_name(axis)
     << ",seed,max_messages,median_messages,max_field_ops,gate_max_messages,gate_median_messages,"
        "qf_synthetic_messages,verdict,error\n";
  for (const SweepRow& r : rows) {
    os << r.axis_value << ',' << r.seed << ',' << r.max_messages << ',' << fmt(r.median_messages) << ','
       << r.max_field_ops << ',' << r.gate_max_messages << ',' << fmt(r.gate_median_messages) << ','
       << r.qf_synthetic << ',' << r.verdict << ',' << (r.error.empty() ? "" : quote(r.error)) << '\n';
  }
  return os.str();
}

}  // namespace qmpc
