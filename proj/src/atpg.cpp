#include "lockforge/atpg.hpp"

#include <algorithm>
#include <functional>

#include "lockforge/satcore.hpp"

namespace lf {

namespace {

Trit trit_flip(Trit t) { return t == Trit::V0 ? Trit::V1 : Trit::V0; }

/// Branch-and-prune enumeration of the region where a monotone ternary
/// predicate holds (monotone: refining a cube never turns V1 into X/V0).
/// Produces pairwise-disjoint cubes whose union is exactly the region;
/// each cube is x-maximised as far as disjointness allows.
class CubeEnumerator {
public:
    CubeEnumerator(size_t width, std::vector<size_t> vars,
                   std::function<Trit(const TernaryPattern&)> pred,
                   size_t max_cubes, uint64_t node_budget)
        : vars_(std::move(vars)), pred_(std::move(pred)),
          max_cubes_(max_cubes), budget_(node_budget), pat_(width) {}

    CubeList run() {
        rec(0);
        CubeList out;
        out.cubes = std::move(cubes_);
        out.complete = complete_;
        return out;
    }

private:
    void rec(size_t depth) {
        if (stop_) return;
        if (budget_ == 0) {
            complete_ = false;
            stop_ = true;
            return;
        }
        --budget_;
        Trit r = pred_(pat_);
        if (r == Trit::V0) return;
        if (r == Trit::V1) {
            TernaryPattern cube = pat_;
            leaf(cube);
            return;
        }
        if (depth == vars_.size()) return;  // pessimism left it undecided
        size_t v = vars_[depth];
        pat_[v] = Trit::V1;
        rec(depth + 1);
        pat_[v] = Trit::V0;
        rec(depth + 1);
        pat_[v] = Trit::X;
    }

    void leaf(TernaryPattern& cube) {
        if (stop_) return;
        for (const auto& b : cubes_)
            if (cube.contained_in(b)) return;
        for (const auto& b : cubes_) {
            if (!cube.overlaps(b)) continue;
            size_t split = SIZE_MAX;
            for (size_t v : vars_)
                if (cube[v] == Trit::X && b[v] != Trit::X) { split = v; break; }
            if (split == SIZE_MAX) return;  // no free disagreement: covered
            Trit bv = b[split];
            TernaryPattern esc = cube;
            esc[split] = trit_flip(bv);
            leaf(esc);
            TernaryPattern rest = cube;
            rest[split] = bv;
            leaf(rest);
            return;
        }
        if (cubes_.size() >= max_cubes_) {
            complete_ = false;
            stop_ = true;
            return;
        }
        // x-lift while the predicate still holds and disjointness survives
        for (size_t v : vars_) {
            if (cube[v] == Trit::X) continue;
            Trit save = cube[v];
            cube[v] = Trit::X;
            bool keep = pred_(cube) == Trit::V1;
            if (keep)
                for (const auto& b : cubes_)
                    if (cube.overlaps(b)) { keep = false; break; }
            if (!keep) cube[v] = save;
        }
        cubes_.push_back(cube);
    }

    std::vector<size_t> vars_;
    std::function<Trit(const TernaryPattern&)> pred_;
    size_t max_cubes_;
    uint64_t budget_;
    TernaryPattern pat_;
    std::vector<TernaryPattern> cubes_;
    bool complete_ = true;
    bool stop_ = false;
};

std::vector<size_t> detection_vars(const Circuit& c, Fault f) {
    auto pos = c.endpoints(f.net);
    if (pos.empty()) return {};
    std::vector<uint8_t> relevant(c.num_nets(), 0);
    for (NetId po : pos)
        for (NetId sp : c.startpoints(po)) relevant[sp] = 1;

    auto ports = c.pi_ki_order();
    std::vector<size_t> port_pos(c.num_nets(), SIZE_MAX);
    for (size_t i = 0; i < ports.size(); ++i) port_pos[ports[i]] = i;

    // branch order follows the propagation path: excitation-side inputs,
    // then the supports of each fanout-cone gate's side inputs in topological
    // order, then whatever relevant support is left. Keeping the deciding
    // variables early stops the enumerator from splitting on host inputs
    // that never settle the verdict.
    std::vector<size_t> vars;
    std::vector<uint8_t> taken(c.num_nets(), 0);
    auto push_support = [&](NetId n) {
        for (NetId sp : c.startpoints(n)) {
            if (taken[sp] || !relevant[sp] || port_pos[sp] == SIZE_MAX) continue;
            vars.push_back(port_pos[sp]);
            taken[sp] = 1;
        }
    };
    push_support(f.net);
    for (int gi : c.fanout_cells(f.net))
        for (NetId in : c.gates()[static_cast<size_t>(gi)].ins) push_support(in);
    for (size_t i = 0; i < ports.size(); ++i)
        if (relevant[ports[i]] && !taken[ports[i]]) vars.push_back(i);
    return vars;
}

}  // namespace

namespace {

/// Gates inside the fan-in cones of the nets in roots (indexed like c.gates()).
std::vector<uint8_t> fanin_cone_gates(const Circuit& c, std::span<const NetId> roots) {
    std::vector<uint8_t> active(c.gates().size(), 0);
    std::vector<uint8_t> seen(c.num_nets(), 0);
    std::vector<NetId> stack(roots.begin(), roots.end());
    while (!stack.empty()) {
        NetId n = stack.back();
        stack.pop_back();
        if (seen[n]) continue;
        seen[n] = 1;
        int d = c.driver(n);
        if (d < 0) continue;
        active[static_cast<size_t>(d)] = 1;
        for (NetId in : c.gates()[static_cast<size_t>(d)].ins)
            if (!seen[in]) stack.push_back(in);
    }
    return active;
}

}  // namespace

CubeList generate_all_tests(const Circuit& c, Fault f, const AtpgOptions& opts) {
    auto vars = detection_vars(c, f);
    if (vars.empty() && c.endpoints(f.net).empty()) return CubeList{{}, true};
    auto active = fanin_cone_gates(c, c.endpoints(f.net));
    auto pred = [&](const TernaryPattern& p) {
        switch (detect_status(c, f, p, active)) {
            case DetectStatus::Always: return Trit::V1;
            case DetectStatus::Never: return Trit::V0;
            default: return Trit::X;
        }
    };
    CubeEnumerator en(c.pi_ki_order().size(), std::move(vars), pred, opts.max_cubes,
                      opts.backtrack_limit);
    return en.run();
}

std::optional<TernaryPattern> generate_test(const Circuit& c, Fault f, const AtpgOptions& opts) {
    AtpgOptions one = opts;
    one.max_cubes = 1;
    CubeList r = generate_all_tests(c, f, one);
    if (!r.empty()) return r.cubes.front();
    if (r.complete) return std::nullopt;  // proven untestable
    if (opts.sat_fallback) return sat_generate_test(c, f);
    return std::nullopt;
}

uint64_t count_activations(const Circuit& c, NetId n, bool v, uint64_t limit) {
    auto ports = c.pi_ki_order();
    std::vector<size_t> vars;
    for (NetId sp : c.startpoints(n)) {
        int idx = c.get_index(sp, ports);
        if (idx >= 0) vars.push_back(static_cast<size_t>(idx));
    }
    std::sort(vars.begin(), vars.end());
    Trit want = v ? Trit::V1 : Trit::V0;

    // only the fan-in cone of n matters; keep it in topological order
    auto active = fanin_cone_gates(c, std::span<const NetId>(&n, 1));
    std::vector<size_t> cone;
    for (size_t gi = 0; gi < c.gates().size(); ++gi)
        if (active[gi]) cone.push_back(gi);

    std::vector<Trit> nets(c.num_nets(), Trit::X);
    auto pred = [&](const TernaryPattern& p) {
        for (size_t i = 0; i < ports.size(); ++i) nets[ports[i]] = p[i];
        for (size_t gi : cone) {
            const Gate& g = c.gates()[gi];
            nets[g.out] = eval_gate_ternary(g, nets);
        }
        Trit got = nets[n];
        if (got == Trit::X) return Trit::X;
        return got == want ? Trit::V1 : Trit::V0;
    };
    // each cube holds at least one minterm, so limit also caps the cubes;
    // the node budget saturates pathological regions instead of proving them
    // out, which only ever over-reports the count
    size_t cube_cap = limit < SIZE_MAX ? static_cast<size_t>(limit) : SIZE_MAX;
    uint64_t budget = std::max<uint64_t>(4000, 2'000'000 / std::max<size_t>(cone.size(), 1));
    CubeEnumerator en(ports.size(), vars, pred, cube_cap, budget);
    CubeList r = en.run();
    if (!r.complete) return limit;

    uint64_t count = 0;
    for (const auto& cube : r.cubes) {
        size_t free = 0;
        for (size_t vi : vars)
            if (cube[vi] == Trit::X) ++free;
        if (free >= 63) return limit;
        uint64_t add = uint64_t(1) << free;
        if (count > limit - add) return limit;
        count += add;
    }
    return std::min(count, limit);
}

std::optional<TernaryPattern> sat_generate_test(const Circuit& c, Fault f) {
    auto affected = c.endpoints(f.net);
    if (affected.empty()) return std::nullopt;

    Solver s;
    auto good = encode_onto(s, c, {});

    // faulty copy: fresh vars only for the fault net and its fanout cone
    std::vector<int> faulty = good;
    faulty[f.net] = s.new_var();
    s.add_clause({mk_lit(faulty[f.net], !f.stuck_value)});
    auto cone_gates = c.fanout_cells(f.net);
    for (int gi : cone_gates) {
        const Gate& g = c.gates()[gi];
        if (g.out != f.net) faulty[g.out] = s.new_var();
    }
    for (int gi : cone_gates) {
        const Gate& g = c.gates()[gi];
        if (g.out == f.net) continue;  // clamp suppresses the driver
        encode_gate_onto(s, g, faulty);
    }

    std::vector<Lit> diff;
    for (NetId po : affected) {
        if (faulty[po] == good[po]) continue;
        int d = s.new_var();
        Lit x = mk_lit(good[po]), y = mk_lit(faulty[po]), t = mk_lit(d);
        s.add_clause({lit_neg(x), lit_neg(y), lit_neg(t)});
        s.add_clause({x, y, lit_neg(t)});
        s.add_clause({lit_neg(x), y, t});
        s.add_clause({x, lit_neg(y), t});
        diff.push_back(t);
    }
    if (diff.empty()) return std::nullopt;
    if (!s.add_clause(diff)) return std::nullopt;
    if (!s.solve()) return std::nullopt;

    auto ports = c.pi_ki_order();
    TernaryPattern pat(ports.size());
    for (size_t i = 0; i < ports.size(); ++i)
        pat[i] = trit_from_bool(s.model_value(good[ports[i]]));
    return pat;
}

}  // namespace lf
