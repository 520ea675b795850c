#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qmpc/circuit.hpp"
#include "qmpc/protocol.hpp"
#include "qmpc/simnet.hpp"

namespace qmpc {

/// Resolved experiment configuration. Parsed from a flat `key = value` file.
struct RunConfig {
  std::size_t n = 0;
  /// Netlist path; empty means a random circuit with m gates and the given depth.
  std::string circuit;
  std::size_t m = 0;
  double m_per_n = 0.0;  // when > 0, m = round(m_per_n * n)
  int depth = 0;         // 0: smallest feasible depth
  std::uint64_t p = PrimeField::kDefaultModulus;
  double quorum_c = 2.0;
  double epsilon = 0.0;
  double bad_fraction = 0.0;
  Behavior adversary = Behavior::Honest;
  std::map<Phase, Behavior> adversary_phase;
  std::uint64_t seed = 1;
  std::size_t repetitions = 1;
  std::string out_dir = "out";
  /// Fixed inputs (one per player); empty means seed-derived random inputs.
  std::vector<std::uint64_t> inputs;
  int formation_retries = 1000;
  bool full_transcript = true;

  std::size_t quorum_size() const;
  std::size_t bad_count() const;
  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
};

/// Parses the key-value text. `path` is used in error messages; relative
/// circuit paths resolve against its directory.
RunConfig parse_config(const std::string& text, const std::string& path = "<config>");
RunConfig load_config(const std::string& path);
/// Canonical key-value form; parse_config(config_to_text(c)) == c.
std::string config_to_text(const RunConfig& c);

struct RunOutcome {
  std::uint64_t seed = 0;
  bool pass = false;
  std::string error;  // non-empty when the run threw
  std::optional<ProtocolResult> result;
};

/// Seed of repetition i.
std::uint64_t derive_seed(std::uint64_t base, std::size_t i);

/// Circuit for a config and repetition seed (the netlist, or a random one).
Circuit config_circuit(const RunConfig& c, std::uint64_t run_seed);
/// Bad players of a run: a seed-derived subset of size bad_count().
std::vector<PlayerId> config_bad_players(const RunConfig& c, std::uint64_t run_seed);

/// One protocol run of a validated config; errors become failed outcomes.
RunOutcome run_once(const RunConfig& c, std::uint64_t run_seed, bool keep_transcript);

struct ExperimentReport {
  RunConfig config;
  std::vector<RunOutcome> runs;
  std::size_t failures = 0;
  bool pass() const { return failures == 0 && !runs.empty(); }
};

/// Runs every repetition and writes metrics.json, transcript.log and
/// verdict.txt under config.out_dir.
ExperimentReport run_experiment(const RunConfig& c);
ExperimentReport run_experiment(const std::string& config_path);

enum class SweepAxis { N, M, BadFraction };
std::optional<SweepAxis> parse_axis(const std::string& name);
const char* axis_name(SweepAxis a);

struct SweepRow {
  std::string axis_value;
  std::uint64_t seed = 0;
  std::uint64_t max_messages = 0;
  double median_messages = 0;
  std::uint64_t max_field_ops = 0;
  std::uint64_t gate_max_messages = 0;
  double gate_median_messages = 0;
  std::uint64_t qf_synthetic = 0;
  std::string verdict;  // pass, fail or error
  std::string error;
};

/// Runs repetitions for each axis value and writes sweep.csv under
/// base.out_dir. Invalid derived configs and failed runs yield flagged
/// rows; the sweep continues.
std::vector<SweepRow> sweep(const RunConfig& base, SweepAxis axis, const std::vector<std::string>& values);
std::string sweep_csv(const std::vector<SweepRow>& rows, SweepAxis axis);

}  // namespace qmpc
