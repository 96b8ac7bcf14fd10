#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lf {

using NetId = int32_t;
constexpr NetId kNoNet = -1;

enum class GateKind : uint8_t { And, Nand, Or, Nor, Xor, Xnor, Inv, Buf };

const char* gate_kind_name(GateKind k);
std::optional<GateKind> gate_kind_from_name(std::string_view name);

/// True for gates that flip polarity on the single-path parity walk.
bool is_inverting(GateKind k);

struct Gate {
    GateKind kind;
    NetId out;
    std::vector<NetId> ins;
};

class CircuitError : public std::runtime_error {
public:
    explicit CircuitError(const std::string& what) : std::runtime_error(what) {}
};

/// Combinational gate-level netlist as a DAG. Immutable once built: all
/// queries are const and safe to run concurrently.
///
/// Nets are identified by dense ids; names are the identity across
/// parse/emit round trips. Nets whose name matches `keyinput<idx>`
/// (case-insensitive) are key inputs, ordered by <idx>.
class Circuit {
public:
    std::string name;

    const std::vector<NetId>& inputs() const { return inputs_; }       // PI (non-key)
    const std::vector<NetId>& key_inputs() const { return key_inputs_; }
    const std::vector<NetId>& outputs() const { return outputs_; }
    const std::vector<Gate>& gates() const { return gates_; }          // topological order

    int num_nets() const { return static_cast<int>(net_names_.size()); }
    const std::string& net_name(NetId n) const { return net_names_[n]; }
    std::optional<NetId> find_net(std::string_view name) const;
    NetId net(std::string_view name) const;  // throws if unknown

    bool is_input(NetId n) const { return role_[n] == Role::Pi; }
    bool is_key_input(NetId n) const { return role_[n] == Role::Ki; }
    bool is_output(NetId n) const { return output_mark_[n]; }

    /// Gate driving net n, or -1 for inputs.
    int driver(NetId n) const { return driver_[n]; }
    const std::vector<int>& fanout_gates(NetId n) const { return fanouts_[n]; }

    /// All PIs and KIs in the transitive fanin of n (n itself if an input).
    std::vector<NetId> startpoints(NetId n) const;
    /// All POs in the transitive fanout of n (n itself if an output).
    std::vector<NetId> endpoints(NetId n) const;
    /// Topologically sorted nets lying in the fanin cone of output o
    /// (inputs first, o last). Accepts a set of outputs too.
    std::vector<NetId> net_conn(NetId o) const;
    std::vector<NetId> net_conn(std::span<const NetId> pos) const;
    /// Topologically sorted transitive-fanout gate indices of net n.
    std::vector<int> fanout_cells(NetId n) const;
    /// The single gate fed by key input (or any net) n; throws on empty
    /// fanout, returns the first in topological order on multi-fanout.
    const Gate& gate_conn(NetId n) const;
    GateKind tech_mapping(int gate_idx) const { return gates_[gate_idx].kind; }

    /// New circuit computing the function of net n: single PO n, PIs =
    /// startpoints(n). Key inputs keep their key-input role.
    Circuit extract_cone(NetId n) const;
    Circuit extract_cone(std::span<const NetId> roots) const;

    /// Max gate depth of each net (inputs are 0).
    std::vector<int> logic_levels() const;

    /// PI followed by KI: the port order used by patterns.
    std::vector<NetId> pi_ki_order() const;
    int get_index(NetId n, std::span<const NetId> ports) const;

private:
    friend class CircuitBuilder;
    enum class Role : uint8_t { Pi, Ki, Internal };

    std::vector<std::string> net_names_;
    std::unordered_map<std::string, NetId> ids_;
    std::vector<Role> role_;
    std::vector<uint8_t> output_mark_;
    std::vector<NetId> inputs_, key_inputs_, outputs_;
    std::vector<Gate> gates_;
    std::vector<int> driver_;
    std::vector<std::vector<int>> fanouts_;
};

/// Accumulates declarations, then validates (single driver, acyclicity,
/// arity) and produces an immutable Circuit with gates in topological
/// order. Multi-driver nets and combinational loops are hard errors.
class CircuitBuilder {
public:
    explicit CircuitBuilder(std::string name = "top") : name_(std::move(name)) {}

    NetId net(std::string_view name);
    void mark_input(NetId n);
    void mark_output(NetId n);
    void add_gate(GateKind kind, NetId out, std::vector<NetId> ins);
    Circuit build();

private:
    std::string name_;
    std::vector<std::string> net_names_;
    std::unordered_map<std::string, NetId> ids_;
    std::vector<uint8_t> is_in_, is_out_;
    std::vector<NetId> out_order_;
    std::vector<Gate> gates_;
};

/// Returns the key index if the name matches keyinput<idx>, else nullopt.
std::optional<int> key_input_index(std::string_view name);

Circuit parse_bench(std::string_view text, std::string name = "top");
Circuit parse_structural_verilog(std::string_view text);
std::string emit_bench(const Circuit& c);

Circuit read_circuit_file(const std::string& path);  // .bench or .v by extension
void write_bench_file(const Circuit& c, const std::string& path);

}  // namespace lf
