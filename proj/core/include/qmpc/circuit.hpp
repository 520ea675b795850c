#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "qmpc/field.hpp"

namespace qmpc {

enum class GateKind : std::uint8_t { Add, Mul, CMul };
const char* gate_kind_name(GateKind k);

/// A wire source: circuit input i or gate i (both 0-based here, 1-based in
/// the netlist).
struct Source {
  bool input = false;
  std::uint32_t index = 0;
  friend bool operator==(const Source&, const Source&) = default;
};

struct Gate {
  GateKind kind = GateKind::Add;
  std::int64_t constant = 0;  // CMul only
  std::vector<Source> sources;
};

/// Arithmetic circuit. Gate 0 (netlist gate 1) is the output gate unless
/// the circuit has no gates, in which case `output` names an input.
struct Circuit {
  std::size_t inputs = 0;
  std::vector<Gate> gates;
  Source output;
  std::size_t max_degree = 2;  // K_max
  /// Gate indices with every gate after its sources.
  std::vector<std::uint32_t> topo;

  std::size_t m() const { return gates.size(); }
};

/// Parses the netlist format (see README). Throws ParseError with a line
/// number, CycleDetected, or FanInExceeded (also used for fan-out).
Circuit parse_circuit(std::string_view text, std::size_t max_degree = 2);
Circuit load_circuit(const std::string& path, std::size_t max_degree = 2);
std::string circuit_to_text(const Circuit& c);

/// Re-validates structure and fills `topo`. Used by the parser and by
/// programmatic constructors.
void finalize_circuit(Circuit& c, int line_hint = 0);

/// Communication graph: gate nodes 1..m and input nodes m+1..m+n (1-based,
/// index 0 unused). Edges go from a node to the nodes consuming it.
struct GateGraph {
  std::size_t m = 0;
  std::size_t n = 0;
  std::uint32_t root = 1;
  std::vector<int> height;
  std::vector<std::vector<std::uint32_t>> children;  // sources of a node
  std::vector<std::vector<std::uint32_t>> parents;   // consumers of a node

  std::size_t nodes() const { return m + n; }
  std::uint32_t input_node(std::size_t i) const { return static_cast<std::uint32_t>(m + 1 + i); }
  std::uint32_t node_of(const Source& s) const {
    return s.input ? input_node(s.index) : s.index + 1;
  }
  bool is_input(std::uint32_t node) const { return node > m; }
  int root_height() const { return height[root]; }
};

/// Throws ConfigError if the circuit's input count differs from n.
GateGraph build_graph(const Circuit& c, std::size_t n);

struct Evaluation {
  Fp output;
  /// values[j] = V_j for node j of the graph (1-based).
  std::vector<Fp> values;
};

/// Direct evaluation; the correctness oracle.
Evaluation eval_plain(const Circuit& c, const PrimeField& field, const std::vector<Fp>& inputs);

/// Value of one gate given its source values.
Fp apply_gate(const Gate& g, const PrimeField& field, const std::vector<Fp>& operands);

/// Random circuit with n inputs and m gates whose output gate sits at the
/// given depth (<= m). Every gate has a source one level below it; fan-in
/// and fan-out stay within max_degree.
Circuit random_circuit(std::size_t n, std::size_t m, int depth, Rng& rng, std::size_t max_degree = 2);

/// Complete binary tree of add/mul gates over 2^k inputs (m = 2^k - 1).
Circuit tree_circuit(std::size_t inputs, bool mul_at_root = true);

}  // namespace qmpc
