#include "lockforge/resynth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <unordered_map>
#include <unordered_set>

#include "lockforge/satcore.hpp"
#include "lockforge/simulate.hpp"

namespace lf {

// ---------------------------------------------------------------------------
// remap_standard
// ---------------------------------------------------------------------------

Circuit remap_standard(const Circuit& c) {
    CircuitBuilder bld(c.name);
    std::unordered_set<std::string> used;
    for (NetId n = 0; n < c.num_nets(); ++n) used.insert(c.net_name(n));
    auto fresh = [&](const std::string& base) {
        std::string nm = base;
        int i = 0;
        while (used.count(nm)) nm = base + "_" + std::to_string(i++);
        used.insert(nm);
        return nm;
    };

    std::vector<std::string> alias(c.num_nets());
    for (NetId n : c.inputs()) {
        bld.mark_input(bld.net(c.net_name(n)));
        alias[n] = c.net_name(n);
    }
    for (NetId n : c.key_inputs()) {
        bld.mark_input(bld.net(c.net_name(n)));
        alias[n] = c.net_name(n);
    }

    auto emit = [&](GateKind k, const std::string& out, const std::vector<std::string>& args) {
        std::vector<NetId> ids;
        for (const auto& a : args) ids.push_back(bld.net(a));
        bld.add_gate(k, bld.net(out), std::move(ids));
    };

    for (const Gate& g : c.gates()) {
        const std::string& oname = c.net_name(g.out);
        if (g.kind == GateKind::Buf && !c.is_output(g.out)) {
            alias[g.out] = alias[g.ins[0]];
            continue;
        }
        std::vector<std::string> ins;
        for (NetId in : g.ins) ins.push_back(alias[in]);
        if (ins.size() <= 2) {
            emit(g.kind, oname, ins);
        } else {
            // left-deep tree; the last gate carries any output inversion
            GateKind base = g.kind;
            if (base == GateKind::Nand) base = GateKind::And;
            if (base == GateKind::Nor) base = GateKind::Or;
            if (base == GateKind::Xnor) base = GateKind::Xor;
            std::string acc = ins[0];
            for (size_t i = 1; i + 1 < ins.size(); ++i) {
                std::string t = fresh(oname + "_rm");
                emit(base, t, {acc, ins[i]});
                acc = t;
            }
            emit(g.kind, oname, {acc, ins.back()});
        }
        alias[g.out] = oname;
    }
    for (NetId o : c.outputs()) {
        const std::string& oname = c.net_name(o);
        if (alias[o] != oname) bld.add_gate(GateKind::Buf, bld.net(oname), {bld.net(alias[o])});
        bld.mark_output(bld.net(oname));
    }
    return bld.build();
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

namespace {

enum class Cls : uint8_t { In, AndC, OrC, XorC };

struct SwLit {
    int32_t node;  // -2 const0, -3 const1, else node id
    bool inv;
    bool operator==(const SwLit&) const = default;
    bool operator<(const SwLit& o) const { return node != o.node ? node < o.node : inv < o.inv; }
};
constexpr int32_t kConst0 = -2, kConst1 = -3;
inline SwLit lconst(bool v) { return SwLit{v ? kConst1 : kConst0, false}; }
inline bool is_const(SwLit l) { return l.node == kConst0 || l.node == kConst1; }
inline bool const_val(SwLit l) { return l.node == kConst1; }
inline SwLit lnot(SwLit l) {
    if (is_const(l)) return lconst(!const_val(l));
    return SwLit{l.node, !l.inv};
}

struct SwNode {
    Cls cls;
    std::vector<SwLit> ops;  // XorC operands carry no phase (folded out)
    std::string name;        // materialised name of the primary phase
    bool primary_phase = false;
    std::string input_name;  // Cls::In only
};

struct NodeKey {
    Cls cls;
    std::vector<SwLit> ops;
    bool operator==(const NodeKey&) const = default;
};
struct NodeKeyHash {
    size_t operator()(const NodeKey& k) const {
        size_t h = static_cast<size_t>(k.cls);
        for (const SwLit& l : k.ops) h = h * 1000003u + static_cast<size_t>(l.node) * 2 + l.inv;
        return h;
    }
};

}  // namespace

Circuit sweep(const Circuit& c) {
    std::vector<SwNode> nodes;
    std::unordered_map<NodeKey, int32_t, NodeKeyHash> hash;
    // name a given (node, phase) was first known by in the source netlist;
    // reused on materialisation so sweeping is a name-stable fixpoint
    std::map<std::pair<int32_t, bool>, std::string> hint;
    std::array<std::string, 2> const_hint;

    // key on sorted operands; keep first-occurrence order for emission so
    // a swept netlist re-sweeps to the exact same text
    auto get_node = [&](Cls cls, std::vector<SwLit> ops) -> std::pair<int32_t, bool> {
        std::vector<SwLit> sorted = ops;
        std::sort(sorted.begin(), sorted.end());
        NodeKey key{cls, std::move(sorted)};
        if (auto it = hash.find(key); it != hash.end()) return {it->second, false};
        nodes.push_back(SwNode{cls, std::move(ops), {}, false, {}});
        int32_t id = static_cast<int32_t>(nodes.size()) - 1;
        hash.emplace(std::move(key), id);
        return {id, true};
    };

    auto make_and_or = [&](Cls cls, std::vector<SwLit> ops) -> std::pair<SwLit, bool> {
        bool dominant = (cls == Cls::OrC);  // OR: const1 dominates; AND: const0
        std::vector<SwLit> kept;
        for (SwLit l : ops) {
            if (is_const(l)) {
                if (const_val(l) == dominant) return {lconst(dominant), false};
                continue;
            }
            if (std::find(kept.begin(), kept.end(), lnot(l)) != kept.end())
                return {lconst(dominant), false};  // a op !a
            if (std::find(kept.begin(), kept.end(), l) == kept.end()) kept.push_back(l);
        }
        if (kept.empty()) return {lconst(!dominant), false};
        if (kept.size() == 1) return {kept[0], false};
        auto [id, fresh] = get_node(cls, std::move(kept));
        return {SwLit{id, false}, fresh};
    };

    auto make_xor = [&](std::vector<SwLit> ops) -> std::pair<SwLit, bool> {
        bool phase = false;
        std::vector<SwLit> kept;
        for (SwLit l : ops) {
            if (is_const(l)) {
                phase ^= const_val(l);
                continue;
            }
            phase ^= l.inv;
            SwLit base{l.node, false};
            if (auto it = std::find(kept.begin(), kept.end(), base); it != kept.end())
                kept.erase(it);  // a ^ a cancels
            else kept.push_back(base);
        }
        if (kept.empty()) return {lconst(phase), false};
        if (kept.size() == 1) return {SwLit{kept[0].node, phase}, false};
        auto [id, fresh] = get_node(Cls::XorC, std::move(kept));
        return {SwLit{id, phase}, fresh};
    };

    std::vector<SwLit> lit_of(c.num_nets(), lconst(false));
    auto declare_input = [&](NetId n) {
        nodes.push_back(SwNode{Cls::In, {}, c.net_name(n), false, c.net_name(n)});
        int32_t id = static_cast<int32_t>(nodes.size()) - 1;
        lit_of[n] = SwLit{id, false};
        hint[{id, false}] = c.net_name(n);
    };
    for (NetId n : c.inputs()) declare_input(n);
    for (NetId n : c.key_inputs()) declare_input(n);

    for (const Gate& g : c.gates()) {
        std::vector<SwLit> ops;
        for (NetId in : g.ins) ops.push_back(lit_of[in]);
        std::pair<SwLit, bool> r;
        switch (g.kind) {
            case GateKind::And: r = make_and_or(Cls::AndC, std::move(ops)); break;
            case GateKind::Nand: r = make_and_or(Cls::AndC, std::move(ops)); r.first = lnot(r.first); break;
            case GateKind::Or: r = make_and_or(Cls::OrC, std::move(ops)); break;
            case GateKind::Nor: r = make_and_or(Cls::OrC, std::move(ops)); r.first = lnot(r.first); break;
            case GateKind::Xor: r = make_xor(std::move(ops)); break;
            case GateKind::Xnor: r = make_xor(std::move(ops)); r.first = lnot(r.first); break;
            case GateKind::Inv: r = {lnot(ops[0]), false}; break;
            case GateKind::Buf: r = {ops[0], false}; break;
        }
        SwLit l = r.first;
        lit_of[g.out] = l;
        if (is_const(l)) {
            if (const_hint[const_val(l)].empty()) const_hint[const_val(l)] = c.net_name(g.out);
        } else {
            if (r.second) {  // fresh node: this gate is its primary definition
                nodes[l.node].name = c.net_name(g.out);
                nodes[l.node].primary_phase = l.inv;
            }
            hint.try_emplace({l.node, l.inv}, c.net_name(g.out));
        }
    }

    // mark (node, phase) pairs reachable from the outputs
    std::vector<uint8_t> need(nodes.size() * 2, 0);
    std::vector<std::pair<int32_t, bool>> stack;
    auto require = [&](SwLit l) {
        if (is_const(l)) return;
        size_t idx = static_cast<size_t>(l.node) * 2 + l.inv;
        if (!need[idx]) {
            need[idx] = 1;
            stack.emplace_back(l.node, l.inv);
        }
    };
    for (NetId o : c.outputs()) require(lit_of[o]);
    while (!stack.empty()) {
        auto [id, phase] = stack.back();
        stack.pop_back();
        const SwNode& nd = nodes[id];
        if (nd.cls == Cls::In) continue;
        if (phase != nd.primary_phase) require(SwLit{id, nd.primary_phase});
        else if (nd.cls == Cls::XorC)
            // xor absorbs operand complements into the gate kind, so only
            // the phase that already has a definition is needed
            for (SwLit op : nd.ops) require(SwLit{op.node, nodes[op.node].primary_phase});
        else
            for (SwLit op : nd.ops) require(op);
    }

    CircuitBuilder bld(c.name);
    std::unordered_set<std::string> used;
    for (NetId n = 0; n < c.num_nets(); ++n) used.insert(c.net_name(n));
    auto fresh_name = [&](std::string base) {
        while (used.count(base)) base += "_";
        used.insert(base);
        return base;
    };
    std::vector<std::array<std::string, 2>> mat(nodes.size());
    auto phase_name = [&](int32_t id, bool phase) -> std::string& { return mat[id][phase ? 1 : 0]; };

    for (NetId n : c.inputs()) bld.mark_input(bld.net(c.net_name(n)));
    for (NetId n : c.key_inputs()) bld.mark_input(bld.net(c.net_name(n)));
    for (size_t id = 0; id < nodes.size(); ++id)
        if (nodes[id].cls == Cls::In) phase_name(static_cast<int32_t>(id), false) = nodes[id].input_name;

    // inverted inputs come first: gate operands may reference them
    for (size_t id = 0; id < nodes.size(); ++id) {
        const SwNode& nd = nodes[id];
        if (nd.cls != Cls::In || !need[id * 2 + 1]) continue;
        auto it = hint.find({static_cast<int32_t>(id), true});
        std::string nm = it != hint.end() ? it->second : fresh_name(nd.input_name + "_bar");
        phase_name(static_cast<int32_t>(id), true) = nm;
        bld.add_gate(GateKind::Inv, bld.net(nm), {bld.net(nd.input_name)});
    }

    auto kind_for = [](Cls cls, bool inverted) {
        switch (cls) {
            case Cls::AndC: return inverted ? GateKind::Nand : GateKind::And;
            case Cls::OrC: return inverted ? GateKind::Nor : GateKind::Or;
            case Cls::XorC: return inverted ? GateKind::Xnor : GateKind::Xor;
            default: throw ResynthError("input node cannot be materialised as a gate");
        }
    };

    for (size_t id = 0; id < nodes.size(); ++id) {
        const SwNode& nd = nodes[id];
        if (nd.cls == Cls::In) continue;
        if (!need[id * 2] && !need[id * 2 + 1]) continue;
        bool p = nd.primary_phase;
        phase_name(static_cast<int32_t>(id), p) = nd.name;
        std::vector<NetId> ins;
        bool kind_phase = p;
        for (SwLit op : nd.ops) {
            bool oph = op.inv;
            if (nd.cls == Cls::XorC) {
                // reference whichever phase is already defined; the flip
                // moves into the xor/xnor kind instead of an extra INV
                oph = nodes[op.node].primary_phase;
                kind_phase ^= oph;
            }
            const std::string& opn = phase_name(op.node, oph);
            if (opn.empty()) throw ResynthError("sweep materialisation order broken");
            ins.push_back(bld.net(opn));
        }
        bld.add_gate(kind_for(nd.cls, kind_phase), bld.net(nd.name), std::move(ins));
        if (need[id * 2 + (p ? 0 : 1)]) {
            auto it = hint.find({static_cast<int32_t>(id), !p});
            std::string nm = it != hint.end() ? it->second : fresh_name(nd.name + "_bar");
            phase_name(static_cast<int32_t>(id), !p) = nm;
            bld.add_gate(GateKind::Inv, bld.net(nm), {bld.net(nd.name)});
        }
    }

    std::array<std::string, 2> const_name;
    auto const_net = [&](bool one) -> std::string {
        std::string& slot = const_name[one ? 1 : 0];
        if (!slot.empty()) return slot;
        if (c.inputs().empty() && c.key_inputs().empty())
            throw ResynthError("cannot materialise a constant: circuit has no inputs");
        NetId anchor = c.inputs().empty() ? c.key_inputs()[0] : c.inputs()[0];
        const std::string& h = const_hint[one ? 1 : 0];
        slot = !h.empty() ? h : fresh_name(one ? "_lf_const1" : "_lf_const0");
        NetId a = bld.net(c.net_name(anchor));
        bld.add_gate(one ? GateKind::Xnor : GateKind::Xor, bld.net(slot), {a, a});
        return slot;
    };

    for (NetId o : c.outputs()) {
        const std::string& oname = c.net_name(o);
        SwLit l = lit_of[o];
        std::string src = is_const(l) ? const_net(const_val(l)) : phase_name(l.node, l.inv);
        if (src != oname) bld.add_gate(GateKind::Buf, bld.net(oname), {bld.net(src)});
        bld.mark_output(bld.net(oname));
    }
    return bld.build();
}

// ---------------------------------------------------------------------------
// flatten_cone
// ---------------------------------------------------------------------------

namespace {

/// Shannon-decompose a truth table into AND/OR/INV logic with subtree sharing.
struct Flattener {
    CircuitBuilder& bld;
    const std::vector<std::string>& var_names;  // cone inputs, bit-index aligned
    std::string prefix;
    int counter = 0;
    std::unordered_map<std::string, std::string> memo;  // table slice -> net

    struct Val {
        std::string net;
        bool is_const = false;
        bool cval = false;
    };

    std::string fresh() { return prefix + std::to_string(counter++); }

    std::string emit2(GateKind k, const std::string& a, const std::string& b) {
        std::string out = fresh();
        bld.add_gate(k, bld.net(out), {bld.net(a), bld.net(b)});
        return out;
    }
    std::string inv_of(const std::string& n) {
        std::string out = fresh();
        bld.add_gate(GateKind::Inv, bld.net(out), {bld.net(n)});
        return out;
    }

    Val build(const std::vector<uint8_t>& table, size_t lo, size_t hi, int var) {
        bool all0 = true, all1 = true;
        for (size_t i = lo; i < hi; ++i) (table[i] ? all0 : all1) = false;
        if (all0) return Val{"", true, false};
        if (all1) return Val{"", true, true};
        std::string key(table.begin() + lo, table.begin() + hi);
        if (auto it = memo.find(key); it != memo.end()) return Val{it->second};

        size_t mid = lo + (hi - lo) / 2;
        Val f0 = build(table, lo, mid, var - 1);
        Val f1 = build(table, mid, hi, var - 1);
        const std::string& x = var_names[static_cast<size_t>(var)];

        std::string out;
        if (f0.is_const && f1.is_const) {
            out = f1.cval ? x : inv_of(x);  // f = x or f = !x
        } else if (f0.is_const) {
            out = f0.cval ? emit2(GateKind::Or, inv_of(x), f1.net)
                          : emit2(GateKind::And, x, f1.net);
        } else if (f1.is_const) {
            out = f1.cval ? emit2(GateKind::Or, x, f0.net)
                          : emit2(GateKind::And, inv_of(x), f0.net);
        } else if (f0.net == f1.net) {
            out = f0.net;
        } else {
            out = emit2(GateKind::Or, emit2(GateKind::And, x, f1.net),
                        emit2(GateKind::And, inv_of(x), f0.net));
        }
        memo.emplace(std::move(key), out);
        return Val{out};
    }
};

}  // namespace

Circuit flatten_cone(const Circuit& c, NetId o, int max_inputs) {
    auto sps = c.startpoints(o);
    if (static_cast<int>(sps.size()) > max_inputs || sps.size() > 24)
        return sweep(remap_standard(c));

    Circuit cone = c.extract_cone(o);
    auto ports = cone.pi_ki_order();
    size_t n = ports.size();
    std::vector<uint8_t> table(size_t(1) << n);
    std::vector<uint8_t> bits(n);
    for (uint64_t m = 0; m < table.size(); ++m) {
        for (size_t i = 0; i < n; ++i) bits[i] = (m >> i) & 1;
        table[m] = eval(cone, bits)[0];
    }

    // copy every gate, renaming o's old driver output; the flattened logic
    // takes over o's name and the closing sweep prunes whatever went dead
    CircuitBuilder bld(c.name);
    std::unordered_set<std::string> used;
    for (NetId nn = 0; nn < c.num_nets(); ++nn) used.insert(c.net_name(nn));
    for (NetId nn : c.inputs()) bld.mark_input(bld.net(c.net_name(nn)));
    for (NetId nn : c.key_inputs()) bld.mark_input(bld.net(c.net_name(nn)));

    std::string old_name = c.net_name(o) + "_pre";
    while (used.count(old_name)) old_name += "_";
    used.insert(old_name);
    for (const Gate& g : c.gates()) {
        std::string oname = g.out == o ? old_name : c.net_name(g.out);
        std::vector<NetId> ins;
        for (NetId in : g.ins) ins.push_back(bld.net(in == o ? old_name : c.net_name(in)));
        bld.add_gate(g.kind, bld.net(oname), std::move(ins));
    }

    std::vector<std::string> var_names(n);
    for (size_t i = 0; i < n; ++i) var_names[i] = cone.net_name(ports[i]);
    std::string prefix = c.net_name(o) + "_fl";
    for (bool clash = true; clash;) {
        clash = false;
        for (const std::string& nm : used)
            if (nm.rfind(prefix, 0) == 0) {
                prefix += "_";
                clash = true;
                break;
            }
    }
    bool constant = std::all_of(table.begin(), table.end(), [&](uint8_t v) { return v == table[0]; });
    if (constant) {
        NetId a = bld.net(var_names.empty() ? c.net_name(c.inputs().at(0)) : var_names[0]);
        bld.add_gate(table[0] ? GateKind::Xnor : GateKind::Xor, bld.net(c.net_name(o)), {a, a});
    } else {
        Flattener fl{bld, var_names, prefix, 0, {}};
        auto v = fl.build(table, 0, table.size(), static_cast<int>(n) - 1);
        bld.add_gate(GateKind::Buf, bld.net(c.net_name(o)), {bld.net(v.net)});
    }
    for (NetId po : c.outputs()) bld.mark_output(bld.net(c.net_name(po)));
    return sweep(bld.build());
}

// ---------------------------------------------------------------------------
// external tool bridge and recipes
// ---------------------------------------------------------------------------

Circuit external_synth_roundtrip(const Circuit& c, const std::string& command_template) {
    std::string in_path = "/tmp/lf_ext_in_" + std::to_string(::getpid()) + ".bench";
    std::string out_path = "/tmp/lf_ext_out_" + std::to_string(::getpid()) + ".bench";
    write_bench_file(c, in_path);
    std::string cmd = command_template;
    auto replace_all = [](std::string& s, const std::string& from, const std::string& to) {
        for (size_t p = 0; (p = s.find(from, p)) != std::string::npos; p += to.size())
            s.replace(p, from.size(), to);
    };
    replace_all(cmd, "{in}", in_path);
    replace_all(cmd, "{out}", out_path);
    int rc = std::system(cmd.c_str());
    if (rc != 0)
        throw ExternalToolError("external synthesis command failed (exit " + std::to_string(rc) +
                                "): " + cmd);
    Circuit back = [&] {
        try {
            return read_circuit_file(out_path);
        } catch (const CircuitError& e) {
            throw ExternalToolError(std::string("external tool output unparsable: ") + e.what());
        }
    }();
    back.name = c.name;
    if (auto cex = check_equivalence(c, back))
        throw ExternalToolError("external tool output is not equivalent (differs at " +
                                cex->to_string() + ")");
    std::remove(in_path.c_str());
    std::remove(out_path.c_str());
    return back;
}

Circuit apply_recipe(const Circuit& c, const std::string& recipe) {
    auto flatten_small = [](Circuit r, int limit) {
        std::vector<std::string> po_names;
        for (NetId o : r.outputs()) po_names.push_back(r.net_name(o));
        for (const std::string& nm : po_names) {
            NetId o = r.net(nm);
            if (static_cast<int>(r.startpoints(o).size()) <= limit) r = flatten_cone(r, o, limit);
        }
        return r;
    };
    if (recipe == "light") return sweep(remap_standard(c));
    if (recipe == "medium") return sweep(flatten_small(sweep(remap_standard(sweep(c))), 10));
    if (recipe == "heavy")
        return sweep(remap_standard(sweep(flatten_small(sweep(remap_standard(c)), 14))));
    throw ResynthError("unknown recipe '" + recipe + "' (expected light|medium|heavy)");
}

}  // namespace lf
