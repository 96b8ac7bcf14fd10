#include "lockforge/simulate.hpp"

#include <stdexcept>

namespace lf {

char trit_char(Trit t) {
    switch (t) {
        case Trit::V0: return '0';
        case Trit::V1: return '1';
        case Trit::X: return 'x';
    }
    return '?';
}

Trit trit_from_char(char ch) {
    if (ch == '0') return Trit::V0;
    if (ch == '1') return Trit::V1;
    if (ch == 'x' || ch == 'X') return Trit::X;
    throw std::invalid_argument(std::string("bad pattern character '") + ch + "'");
}

TernaryPattern TernaryPattern::from_string(std::string_view s) {
    TernaryPattern p(s.size());
    for (size_t i = 0; i < s.size(); ++i) p.bits[i] = trit_from_char(s[i]);
    return p;
}

bool TernaryPattern::fully_specified() const {
    for (Trit t : bits)
        if (t == Trit::X) return false;
    return true;
}

size_t TernaryPattern::num_x() const {
    size_t n = 0;
    for (Trit t : bits)
        if (t == Trit::X) ++n;
    return n;
}

std::string TernaryPattern::to_string() const {
    std::string s;
    s.reserve(bits.size());
    for (Trit t : bits) s.push_back(trit_char(t));
    return s;
}

bool TernaryPattern::contained_in(const TernaryPattern& other) const {
    for (size_t i = 0; i < bits.size(); ++i) {
        if (other.bits[i] == Trit::X) continue;
        if (bits[i] != other.bits[i]) return false;
    }
    return true;
}

bool TernaryPattern::overlaps(const TernaryPattern& other) const {
    for (size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] == Trit::X || other.bits[i] == Trit::X) continue;
        if (bits[i] != other.bits[i]) return false;
    }
    return true;
}

namespace {

uint8_t eval_gate_binary(const Gate& g, std::span<const uint8_t> net_vals) {
    switch (g.kind) {
        case GateKind::And:
        case GateKind::Nand: {
            uint8_t v = 1;
            for (NetId in : g.ins) v &= net_vals[in];
            return g.kind == GateKind::Nand ? uint8_t(v ^ 1) : v;
        }
        case GateKind::Or:
        case GateKind::Nor: {
            uint8_t v = 0;
            for (NetId in : g.ins) v |= net_vals[in];
            return g.kind == GateKind::Nor ? uint8_t(v ^ 1) : v;
        }
        case GateKind::Xor:
        case GateKind::Xnor: {
            uint8_t v = 0;
            for (NetId in : g.ins) v ^= net_vals[in];
            return g.kind == GateKind::Xnor ? uint8_t(v ^ 1) : v;
        }
        case GateKind::Inv:
            return net_vals[g.ins[0]] ^ 1;
        case GateKind::Buf:
            return net_vals[g.ins[0]];
    }
    return 0;
}

Trit trit_not(Trit t) {
    if (t == Trit::X) return Trit::X;
    return t == Trit::V0 ? Trit::V1 : Trit::V0;
}

}  // namespace

Trit eval_gate_ternary(const Gate& g, std::span<const Trit> net_vals) {
    switch (g.kind) {
        case GateKind::And:
        case GateKind::Nand: {
            Trit v = Trit::V1;
            for (NetId in : g.ins) {
                Trit t = net_vals[in];
                if (t == Trit::V0) { v = Trit::V0; break; }
                if (t == Trit::X) v = Trit::X;
            }
            return g.kind == GateKind::Nand ? trit_not(v) : v;
        }
        case GateKind::Or:
        case GateKind::Nor: {
            Trit v = Trit::V0;
            for (NetId in : g.ins) {
                Trit t = net_vals[in];
                if (t == Trit::V1) { v = Trit::V1; break; }
                if (t == Trit::X) v = Trit::X;
            }
            return g.kind == GateKind::Nor ? trit_not(v) : v;
        }
        case GateKind::Xor:
        case GateKind::Xnor: {
            Trit v = Trit::V0;
            for (NetId in : g.ins) {
                Trit t = net_vals[in];
                if (t == Trit::X) return Trit::X;
                if (t == Trit::V1) v = trit_not(v);
            }
            return g.kind == GateKind::Xnor ? trit_not(v) : v;
        }
        case GateKind::Inv:
            return trit_not(net_vals[g.ins[0]]);
        case GateKind::Buf:
            return net_vals[g.ins[0]];
    }
    return Trit::X;
}

namespace {

void place_ports(const Circuit& c, std::span<const uint8_t> vals, std::vector<uint8_t>& nets) {
    const auto& pis = c.inputs();
    const auto& kis = c.key_inputs();
    if (vals.size() != pis.size() + kis.size())
        throw CircuitError("assignment width " + std::to_string(vals.size()) + " does not cover PI+KI (" +
                           std::to_string(pis.size() + kis.size()) + ")");
    for (size_t i = 0; i < pis.size(); ++i) nets[pis[i]] = vals[i];
    for (size_t i = 0; i < kis.size(); ++i) nets[kis[i]] = vals[pis.size() + i];
}

}  // namespace

std::vector<uint8_t> eval(const Circuit& c, std::span<const uint8_t> pi_ki_values) {
    std::vector<uint8_t> nets(c.num_nets(), 0);
    place_ports(c, pi_ki_values, nets);
    for (const Gate& g : c.gates()) nets[g.out] = eval_gate_binary(g, nets);
    std::vector<uint8_t> out;
    out.reserve(c.outputs().size());
    for (NetId o : c.outputs()) out.push_back(nets[o]);
    return out;
}

std::vector<Trit> eval_ternary_nets(const Circuit& c, const TernaryPattern& assignment) {
    const auto ports = c.pi_ki_order();
    if (assignment.width() != ports.size())
        throw CircuitError("pattern width does not match PI+KI count");
    std::vector<Trit> nets(c.num_nets(), Trit::X);
    for (size_t i = 0; i < ports.size(); ++i) nets[ports[i]] = assignment[i];
    for (const Gate& g : c.gates()) nets[g.out] = eval_gate_ternary(g, nets);
    return nets;
}

TernaryPattern eval_ternary(const Circuit& c, const TernaryPattern& assignment) {
    auto nets = eval_ternary_nets(c, assignment);
    TernaryPattern out(c.outputs().size());
    for (size_t i = 0; i < c.outputs().size(); ++i) out[i] = nets[c.outputs()[i]];
    return out;
}

std::vector<uint8_t> eval_faulty(const Circuit& c, Fault f, std::span<const uint8_t> pi_ki_values) {
    std::vector<uint8_t> nets(c.num_nets(), 0);
    place_ports(c, pi_ki_values, nets);
    nets[f.net] = f.stuck_value ? 1 : 0;
    for (const Gate& g : c.gates()) {
        if (g.out == f.net) continue;  // clamp survives evaluation
        nets[g.out] = eval_gate_binary(g, nets);
    }
    std::vector<uint8_t> out;
    out.reserve(c.outputs().size());
    for (NetId o : c.outputs()) out.push_back(nets[o]);
    return out;
}

DetectStatus detect_status(const Circuit& c, Fault f, const TernaryPattern& assignment) {
    return detect_status(c, f, assignment, {});
}

DetectStatus detect_status(const Circuit& c, Fault f, const TernaryPattern& assignment,
                           std::span<const uint8_t> gate_active) {
    // Dual ternary simulation with a good/faulty relation per net; the
    // DIFF relation survives XOR chains fed by shared unknowns, which a
    // plain five-valued calculus would lose.
    const auto ports = c.pi_ki_order();
    if (assignment.width() != ports.size())
        throw CircuitError("pattern width does not match PI+KI count");

    enum Rel : uint8_t { EQ, DIFF, UNK };
    struct Val { Trit g, f; Rel rel; };
    thread_local std::vector<Val> nets;
    nets.assign(c.num_nets(), Val{Trit::X, Trit::X, EQ});
    for (size_t i = 0; i < ports.size(); ++i) {
        Trit t = assignment[i];
        nets[ports[i]] = Val{t, t, EQ};
    }
    auto clamp = [&](NetId n) {
        Val& v = nets[n];
        v.f = f.stuck_value ? Trit::V1 : Trit::V0;
        if (v.g == Trit::X) v.rel = UNK;
        else v.rel = (v.g == v.f) ? EQ : DIFF;
    };
    if (c.driver(f.net) == -1) clamp(f.net);

    const auto& gates = c.gates();
    for (size_t gi = 0; gi < gates.size(); ++gi) {
        if (!gate_active.empty() && !gate_active[gi]) continue;
        const Gate& g = gates[gi];
        Val out;
        {
            auto eval_local = [&](bool faulty) {
                Trit acc;
                switch (g.kind) {
                    case GateKind::And:
                    case GateKind::Nand:
                        acc = Trit::V1;
                        for (NetId in : g.ins) {
                            Trit t = faulty ? nets[in].f : nets[in].g;
                            if (t == Trit::V0) { acc = Trit::V0; break; }
                            if (t == Trit::X) acc = Trit::X;
                        }
                        return g.kind == GateKind::Nand ? trit_not(acc) : acc;
                    case GateKind::Or:
                    case GateKind::Nor:
                        acc = Trit::V0;
                        for (NetId in : g.ins) {
                            Trit t = faulty ? nets[in].f : nets[in].g;
                            if (t == Trit::V1) { acc = Trit::V1; break; }
                            if (t == Trit::X) acc = Trit::X;
                        }
                        return g.kind == GateKind::Nor ? trit_not(acc) : acc;
                    case GateKind::Xor:
                    case GateKind::Xnor:
                        acc = Trit::V0;
                        for (NetId in : g.ins) {
                            Trit t = faulty ? nets[in].f : nets[in].g;
                            if (t == Trit::X) return Trit::X;
                            if (t == Trit::V1) acc = trit_not(acc);
                        }
                        return g.kind == GateKind::Xnor ? trit_not(acc) : acc;
                    case GateKind::Inv:
                        return trit_not(faulty ? nets[g.ins[0]].f : nets[g.ins[0]].g);
                    case GateKind::Buf:
                        return faulty ? nets[g.ins[0]].f : nets[g.ins[0]].g;
                }
                return Trit::X;
            };
            out.g = eval_local(false);
            out.f = eval_local(true);
        }
        if (out.g != Trit::X && out.f != Trit::X) {
            out.rel = (out.g == out.f) ? EQ : DIFF;
        } else {
            bool all_eq = true, parity_ok = true;
            int diff_parity = 0;
            for (NetId in : g.ins) {
                Rel r = nets[in].rel;
                if (r != EQ) all_eq = false;
                if (r == DIFF) ++diff_parity;
                if (r == UNK) parity_ok = false;
            }
            if (all_eq) {
                out.rel = EQ;
            } else if (parity_ok && (g.kind == GateKind::Xor || g.kind == GateKind::Xnor ||
                                     g.kind == GateKind::Inv || g.kind == GateKind::Buf)) {
                out.rel = (diff_parity % 2) ? DIFF : EQ;
            } else {
                out.rel = UNK;
            }
        }
        nets[g.out] = out;
        if (g.out == f.net) clamp(f.net);
    }
    // The fault is never excited when the good value is pinned to the
    // stuck value for every completion.
    {
        const Val& at = nets[f.net];
        Trit stuck = f.stuck_value ? Trit::V1 : Trit::V0;
        if (at.g != Trit::X && at.g == stuck) return DetectStatus::Never;
    }
    bool all_eq = true;
    for (NetId o : c.outputs()) {
        const Val& v = nets[o];
        if (v.rel == DIFF) return DetectStatus::Always;
        if (v.g != Trit::X && v.f != Trit::X && v.g != v.f) return DetectStatus::Always;
        if (v.rel != EQ) all_eq = false;
    }
    return all_eq ? DetectStatus::Never : DetectStatus::Unknown;
}

bool pattern_detects(const Circuit& c, Fault f, const TernaryPattern& assignment) {
    return detect_status(c, f, assignment) == DetectStatus::Always;
}

Oracle::Oracle(Circuit c) : circuit_(std::move(c)) {
    if (!circuit_.key_inputs().empty())
        throw CircuitError("oracle circuit has key inputs but no key was provided");
}

Oracle::Oracle(Circuit locked, std::vector<uint8_t> key)
    : circuit_(std::move(locked)), fixed_key_(std::move(key)) {
    if (fixed_key_.size() != circuit_.key_inputs().size())
        throw CircuitError("oracle key width does not match circuit key inputs");
}

std::vector<uint8_t> Oracle::query(std::span<const uint8_t> pi_values) const {
    if (pi_values.size() != circuit_.inputs().size())
        throw CircuitError("oracle query width does not match PI count");
    queries_.fetch_add(1, std::memory_order_relaxed);
    std::vector<uint8_t> full(pi_values.begin(), pi_values.end());
    full.insert(full.end(), fixed_key_.begin(), fixed_key_.end());
    return eval(circuit_, full);
}

}  // namespace lf
