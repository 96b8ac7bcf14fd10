#pragma once

#include <atomic>
#include <cstdint>
#include <string>

#include "lockforge/netlist.hpp"

namespace lf {

/// Three-valued logic bit: 0, 1, or unknown (x).
enum class Trit : uint8_t { V0 = 0, V1 = 1, X = 2 };

inline Trit trit_from_bool(bool b) { return b ? Trit::V1 : Trit::V0; }
char trit_char(Trit t);
Trit trit_from_char(char ch);

/// Fixed-width vector over {0,1,x}, aligned to a declared port order.
struct TernaryPattern {
    std::vector<Trit> bits;

    TernaryPattern() = default;
    explicit TernaryPattern(size_t width, Trit fill = Trit::X) : bits(width, fill) {}
    static TernaryPattern from_string(std::string_view s);

    size_t width() const { return bits.size(); }
    Trit& operator[](size_t i) { return bits[i]; }
    Trit operator[](size_t i) const { return bits[i]; }
    bool fully_specified() const;
    size_t num_x() const;
    std::string to_string() const;
    bool operator==(const TernaryPattern&) const = default;

    /// True when every completion of this pattern is also a completion of
    /// other (cube containment: other's fixed bits all match).
    bool contained_in(const TernaryPattern& other) const;
    /// True when the two cubes share at least one completion.
    bool overlaps(const TernaryPattern& other) const;
};

struct Fault {
    NetId net;
    bool stuck_value;
};

/// Evaluate on a full binary assignment over PI followed by KI.
/// Returns one bit per PO, in output order.
std::vector<uint8_t> eval(const Circuit& c, std::span<const uint8_t> pi_ki_values);

/// Pessimistic Kleene three-valued evaluation; the pattern is aligned to
/// pi_ki_order(). An output is 0/1 only when forced for every completion.
TernaryPattern eval_ternary(const Circuit& c, const TernaryPattern& assignment);

/// As eval_ternary, but exposes the value of every net (indexed by NetId).
std::vector<Trit> eval_ternary_nets(const Circuit& c, const TernaryPattern& assignment);

/// Single-gate ternary evaluation against a full net-value table.
Trit eval_gate_ternary(const Gate& g, std::span<const Trit> net_vals);

/// As eval, but the fault net is clamped to its stuck value.
std::vector<uint8_t> eval_faulty(const Circuit& c, Fault f, std::span<const uint8_t> pi_ki_values);

/// Three-way verdict on a (possibly partial) pattern against a fault:
/// Always means every completion detects it, Never means none can
/// (soundly proven), Unknown is the pessimistic remainder.
enum class DetectStatus : uint8_t { Always, Never, Unknown };
DetectStatus detect_status(const Circuit& c, Fault f, const TernaryPattern& assignment);

/// As above, but only evaluates gates flagged in gate_active (indexed like
/// c.gates()); callers pass the fan-in cones of the fault's endpoints so
/// repeated probes skip unrelated logic. An empty span means all gates.
DetectStatus detect_status(const Circuit& c, Fault f, const TernaryPattern& assignment,
                           std::span<const uint8_t> gate_active);

/// True iff the (possibly partial) pattern detects f for every completion.
bool pattern_detects(const Circuit& c, Fault f, const TernaryPattern& assignment);

/// Black-box query access to an activated chip: a circuit with the secret
/// key spliced in. Query counting is thread-safe.
class Oracle {
public:
    /// Oracle over an unlocked circuit (no key inputs).
    explicit Oracle(Circuit c);
    /// Oracle over a locked circuit with the correct key loaded.
    Oracle(Circuit locked, std::vector<uint8_t> key);

    /// Input covers the PIs only; the fixed key is never exposed.
    std::vector<uint8_t> query(std::span<const uint8_t> pi_values) const;
    uint64_t query_count() const { return queries_.load(); }
    size_t num_inputs() const { return circuit_.inputs().size(); }
    size_t num_outputs() const { return circuit_.outputs().size(); }

private:
    Circuit circuit_;
    std::vector<uint8_t> fixed_key_;
    mutable std::atomic<uint64_t> queries_{0};
};

}  // namespace lf
