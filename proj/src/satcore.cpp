#include "lockforge/satcore.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

namespace lf {

// ---------------------------------------------------------------------------
// Solver
// ---------------------------------------------------------------------------

int Solver::new_var() {
    int v = static_cast<int>(assign_.size());
    assign_.push_back(-1);
    phase_.push_back(1);
    level_.push_back(0);
    reason_.push_back(-1);
    activity_.push_back(0.0);
    seen_.push_back(0);
    model_.push_back(0);
    heap_pos_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return v;
}

void Solver::heap_up(int i) {
    int v = heap_[i];
    while (i > 0) {
        int p = (i - 1) / 2;
        if (activity_[heap_[p]] >= activity_[v]) break;
        heap_[i] = heap_[p];
        heap_pos_[heap_[i]] = i;
        i = p;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
}

void Solver::heap_down(int i) {
    int v = heap_[i];
    int n = static_cast<int>(heap_.size());
    while (2 * i + 1 < n) {
        int c = 2 * i + 1;
        if (c + 1 < n && activity_[heap_[c + 1]] > activity_[heap_[c]]) ++c;
        if (activity_[heap_[c]] <= activity_[v]) break;
        heap_[i] = heap_[c];
        heap_pos_[heap_[i]] = i;
        i = c;
    }
    heap_[i] = v;
    heap_pos_[v] = i;
}

void Solver::heap_insert(int var) {
    if (heap_pos_[var] >= 0) return;
    heap_.push_back(var);
    heap_pos_[var] = static_cast<int>(heap_.size()) - 1;
    heap_up(heap_pos_[var]);
}

void Solver::bump(int var) {
    activity_[var] += var_inc_;
    if (activity_[var] > 1e100) {
        for (double& a : activity_) a *= 1e-100;
        var_inc_ *= 1e-100;
    }
    if (heap_pos_[var] >= 0) heap_up(heap_pos_[var]);
}

void Solver::enqueue(Lit l, int reason) {
    int v = lit_var(l);
    assign_[v] = lit_sign(l) ? 0 : 1;
    level_[v] = decision_level();
    reason_[v] = reason;
    trail_.push_back(l);
}

void Solver::cancel_until(int lvl) {
    if (decision_level() <= lvl) return;
    for (size_t i = trail_.size(); i > static_cast<size_t>(trail_lim_[lvl]);) {
        --i;
        int v = lit_var(trail_[i]);
        phase_[v] = assign_[v];
        assign_[v] = -1;
        heap_insert(v);
    }
    trail_.resize(trail_lim_[lvl]);
    trail_lim_.resize(lvl);
    qhead_ = trail_.size();
}

bool Solver::add_clause(std::vector<Lit> lits) {
    if (!ok_) return false;
    cancel_until(0);
    // level-0 simplification
    std::sort(lits.begin(), lits.end());
    std::vector<Lit> out;
    Lit prev = -1;
    for (Lit l : lits) {
        if (l == prev) continue;
        if (prev >= 0 && l == lit_neg(prev) && lit_var(l) == lit_var(prev)) return true;  // tautology
        int8_t v = value(l);
        if (v == 1) return true;  // satisfied at level 0
        if (v == 0) { prev = l; continue; }
        out.push_back(l);
        prev = l;
    }
    if (out.empty()) { ok_ = false; return false; }
    ++num_orig_clauses_;
    if (out.size() == 1) {
        enqueue(out[0], -1);
        if (propagate() != -1) { ok_ = false; return false; }
        return true;
    }
    int idx = static_cast<int>(clauses_.size());
    clauses_.push_back(Clause{std::move(out)});
    const auto& c = clauses_[idx].lits;
    watches_[c[0]].push_back(Watcher{idx, c[1]});
    watches_[c[1]].push_back(Watcher{idx, c[0]});
    return true;
}

int Solver::propagate() {
    while (qhead_ < trail_.size()) {
        Lit p = trail_[qhead_++];       // p is true
        Lit fl = lit_neg(p);            // literal that became false
        auto& ws = watches_[fl];
        size_t i = 0, j = 0;
        while (i < ws.size()) {
            Watcher w = ws[i];
            if (value(w.blocker) == 1) { ws[j++] = ws[i++]; continue; }
            Clause& c = clauses_[w.clause];
            if (c.lits[0] == fl) std::swap(c.lits[0], c.lits[1]);
            // c.lits[1] == fl
            Lit first = c.lits[0];
            if (first != w.blocker && value(first) == 1) {
                ws[j++] = Watcher{w.clause, first};
                ++i;
                continue;
            }
            bool moved = false;
            for (size_t k = 2; k < c.lits.size(); ++k) {
                if (value(c.lits[k]) != 0) {
                    std::swap(c.lits[1], c.lits[k]);
                    watches_[c.lits[1]].push_back(Watcher{w.clause, first});
                    moved = true;
                    break;
                }
            }
            if (moved) { ++i; continue; }
            // unit or conflict
            ws[j++] = ws[i++];
            if (value(first) == 0) {
                while (i < ws.size()) ws[j++] = ws[i++];
                ws.resize(j);
                qhead_ = trail_.size();
                return w.clause;
            }
            enqueue(first, w.clause);
        }
        ws.resize(j);
    }
    return -1;
}

void Solver::analyze(int confl, std::vector<Lit>& learnt, int& bt_level) {
    learnt.clear();
    learnt.push_back(0);  // placeholder for the asserting literal
    int counter = 0;
    Lit p = -1;
    int index = static_cast<int>(trail_.size()) - 1;
    int dl = decision_level();
    std::vector<int> to_clear;

    do {
        const Clause& c = clauses_[confl];
        for (size_t k = (p == -1 ? 0 : 1); k < c.lits.size(); ++k) {
            Lit q = c.lits[k];
            int v = lit_var(q);
            if (!seen_[v] && level_[v] > 0) {
                seen_[v] = 1;
                to_clear.push_back(v);
                bump(v);
                if (level_[v] >= dl)
                    ++counter;
                else
                    learnt.push_back(q);
            }
        }
        while (!seen_[lit_var(trail_[index])]) --index;
        p = trail_[index];
        seen_[lit_var(p)] = 0;
        confl = reason_[lit_var(p)];
        --index;
        --counter;
    } while (counter > 0);
    learnt[0] = lit_neg(p);

    bt_level = 0;
    if (learnt.size() > 1) {
        size_t max_i = 1;
        for (size_t k = 2; k < learnt.size(); ++k)
            if (level_[lit_var(learnt[k])] > level_[lit_var(learnt[max_i])]) max_i = k;
        std::swap(learnt[1], learnt[max_i]);
        bt_level = level_[lit_var(learnt[1])];
    }
    for (int v : to_clear) seen_[v] = 0;
    var_inc_ *= (1.0 / 0.95);
}

int Solver::pick_branch_var() {
    while (!heap_.empty()) {
        int v = heap_[0];
        int last = heap_.back();
        heap_.pop_back();
        heap_pos_[v] = -1;
        if (!heap_.empty()) {
            heap_[0] = last;
            heap_pos_[last] = 0;
            heap_down(0);
        }
        if (assign_[v] < 0) return v;
    }
    return -1;
}

bool Solver::solve(const std::vector<Lit>& assumptions) {
    if (!ok_) return false;
    cancel_until(0);
    if (propagate() != -1) { ok_ = false; return false; }

    uint64_t restart_limit = 100;
    uint64_t conflicts_since_restart = 0;
    std::vector<Lit> learnt;

    for (;;) {
        int confl = propagate();
        if (confl != -1) {
            ++conflicts_;
            ++conflicts_since_restart;
            if (decision_level() == 0) return false;
            if (decision_level() <= static_cast<int>(assumptions.size())) {
                // conflict inside the assumption prefix: UNSAT under assumptions
                cancel_until(0);
                return false;
            }
            int bt;
            analyze(confl, learnt, bt);
            cancel_until(std::max(bt, static_cast<int>(assumptions.size())));
            if (learnt.size() == 1) {
                if (decision_level() == 0) {
                    if (value(learnt[0]) == 0) return false;
                    if (value(learnt[0]) == -1) enqueue(learnt[0], -1);
                } else {
                    // cannot assert below assumption prefix; record as clause
                    cancel_until(0);
                    if (value(learnt[0]) == 0) return false;
                    if (value(learnt[0]) == -1) enqueue(learnt[0], -1);
                }
            } else {
                int idx = static_cast<int>(clauses_.size());
                clauses_.push_back(Clause{learnt, true});
                const auto& c = clauses_[idx].lits;
                watches_[c[0]].push_back(Watcher{idx, c[1]});
                watches_[c[1]].push_back(Watcher{idx, c[0]});
                if (value(c[0]) == -1) enqueue(c[0], idx);
            }
        } else {
            if (conflicts_since_restart >= restart_limit) {
                conflicts_since_restart = 0;
                restart_limit += restart_limit / 2;
                cancel_until(0);
                continue;
            }
            if (decision_level() < static_cast<int>(assumptions.size())) {
                Lit a = assumptions[decision_level()];
                int8_t v = value(a);
                if (v == 0) { cancel_until(0); return false; }
                trail_lim_.push_back(static_cast<int>(trail_.size()));
                if (v == -1) enqueue(a, -1);
                continue;
            }
            int v = pick_branch_var();
            if (v == -1) {
                for (size_t k = 0; k < assign_.size(); ++k) model_[k] = assign_[k] < 0 ? phase_[k] : assign_[k];
                cancel_until(0);
                return true;
            }
            trail_lim_.push_back(static_cast<int>(trail_.size()));
            enqueue(mk_lit(v, phase_[v] == 0), -1);
        }
    }
}

DimacsCnf Solver::export_cnf() const {
    DimacsCnf cnf;
    cnf.num_vars = num_vars();
    for (const Clause& c : clauses_)
        if (!c.learnt) cnf.clauses.push_back(c.lits);
    for (Lit l : trail_)
        if (level_[lit_var(l)] == 0) cnf.clauses.push_back({l});
    return cnf;
}

// ---------------------------------------------------------------------------
// DIMACS
// ---------------------------------------------------------------------------

std::string write_dimacs(const DimacsCnf& cnf) {
    std::ostringstream os;
    os << "p cnf " << cnf.num_vars << ' ' << cnf.clauses.size() << '\n';
    for (const auto& c : cnf.clauses) {
        for (Lit l : c) os << (lit_sign(l) ? -(lit_var(l) + 1) : lit_var(l) + 1) << ' ';
        os << "0\n";
    }
    return os.str();
}

DimacsCnf read_dimacs(std::string_view text) {
    DimacsCnf cnf;
    std::istringstream is{std::string(text)};
    std::string tok;
    bool header = false;
    std::vector<Lit> cur;
    while (is >> tok) {
        if (tok == "c") {
            std::string line;
            std::getline(is, line);
            continue;
        }
        if (tok == "p") {
            std::string fmt;
            int nc;
            if (!(is >> fmt >> cnf.num_vars >> nc) || fmt != "cnf")
                throw std::runtime_error("malformed DIMACS header");
            header = true;
            continue;
        }
        int v = std::stoi(tok);
        if (!header) throw std::runtime_error("DIMACS literal before header");
        if (v == 0) {
            cnf.clauses.push_back(cur);
            cur.clear();
        } else {
            int var = std::abs(v) - 1;
            if (var >= cnf.num_vars) throw std::runtime_error("DIMACS literal out of range");
            cur.push_back(mk_lit(var, v < 0));
        }
    }
    if (!cur.empty()) throw std::runtime_error("DIMACS clause missing terminating 0");
    return cnf;
}

// ---------------------------------------------------------------------------
// Tseitin encoding
// ---------------------------------------------------------------------------

namespace {

void encode_gate(Solver& s, const Gate& g, const std::vector<int>& var_of) {
    // NAND/NOR/XNOR share the base encoding with the output literal flipped.
    bool flip = g.kind == GateKind::Nand || g.kind == GateKind::Nor || g.kind == GateKind::Xnor ||
                g.kind == GateKind::Inv;
    Lit out = mk_lit(var_of[g.out], flip);
    switch (g.kind) {
        case GateKind::And:
        case GateKind::Nand: {
            std::vector<Lit> big{out};
            for (NetId in : g.ins) {
                Lit x = mk_lit(var_of[in]);
                s.add_clause({lit_neg(out), x});
                big.push_back(lit_neg(x));
            }
            s.add_clause(std::move(big));
            break;
        }
        case GateKind::Or:
        case GateKind::Nor: {
            std::vector<Lit> big{lit_neg(out)};
            for (NetId in : g.ins) {
                Lit x = mk_lit(var_of[in]);
                s.add_clause({out, lit_neg(x)});
                big.push_back(x);
            }
            s.add_clause(std::move(big));
            break;
        }
        case GateKind::Xor:
        case GateKind::Xnor: {
            Lit acc = mk_lit(var_of[g.ins[0]]);
            for (size_t i = 1; i < g.ins.size(); ++i) {
                Lit b = mk_lit(var_of[g.ins[i]]);
                Lit t = (i + 1 == g.ins.size()) ? out : mk_lit(s.new_var());
                s.add_clause({lit_neg(acc), lit_neg(b), lit_neg(t)});
                s.add_clause({acc, b, lit_neg(t)});
                s.add_clause({lit_neg(acc), b, t});
                s.add_clause({acc, lit_neg(b), t});
                acc = t;
            }
            if (g.ins.size() == 1) {  // degenerate single-input xor == buf
                Lit a = mk_lit(var_of[g.ins[0]]);
                s.add_clause({lit_neg(out), a});
                s.add_clause({out, lit_neg(a)});
            }
            break;
        }
        case GateKind::Inv:
        case GateKind::Buf: {
            Lit a = mk_lit(var_of[g.ins[0]]);
            s.add_clause({lit_neg(out), a});
            s.add_clause({out, lit_neg(a)});
            break;
        }
    }
}

}  // namespace

void encode_gate_onto(Solver& s, const Gate& g, const std::vector<int>& var_of) {
    encode_gate(s, g, var_of);
}

std::vector<int> encode_onto(Solver& s, const Circuit& c, std::vector<int> var_of) {
    var_of.resize(c.num_nets(), -1);
    for (NetId n = 0; n < c.num_nets(); ++n)
        if (var_of[n] < 0) var_of[n] = s.new_var();
    for (const Gate& g : c.gates()) encode_gate(s, g, var_of);
    return var_of;
}

CnfInstance encode(const Circuit& c) {
    CnfInstance inst;
    inst.net_vars = encode_onto(inst.solver, c, {});
    for (NetId n : c.inputs()) inst.port_vars[c.net_name(n)] = inst.net_vars[n];
    for (NetId n : c.key_inputs()) inst.port_vars[c.net_name(n)] = inst.net_vars[n];
    for (NetId n : c.outputs()) inst.port_vars[c.net_name(n)] = inst.net_vars[n];
    return inst;
}

std::string CnfInstance::to_dimacs() const { return write_dimacs(solver.export_cnf()); }

// ---------------------------------------------------------------------------
// Equivalence checking
// ---------------------------------------------------------------------------

namespace {

/// Literal-level structural hashing on top of a solver: gates normalise to
/// AND / binary-XOR nodes with inversions folded into literals, and identical
/// nodes share one variable. Both sides of a miter run through one encoder,
/// so common logic collapses instead of burdening the CDCL search.
class StructEncoder {
public:
    explicit StructEncoder(Solver& s) : s_(s) {}

    Lit fresh() { return mk_lit(s_.new_var()); }

    Lit const_lit(bool v) {
        if (true_lit_ < 0) {
            true_lit_ = fresh();
            s_.add_clause({true_lit_});
        }
        return v ? true_lit_ : lit_neg(true_lit_);
    }

    bool is_const(Lit l, bool v) const {
        return true_lit_ >= 0 && l == (v ? true_lit_ : lit_neg(true_lit_));
    }

    Lit mk_and(std::vector<Lit> ins) {
        std::vector<Lit> kept;
        // flatten nested positive AND nodes so different associations of the
        // same conjunction hash to one canonical n-ary node
        while (!ins.empty()) {
            Lit l = ins.back();
            ins.pop_back();
            if (is_const(l, false)) return const_lit(false);
            if (is_const(l, true)) continue;
            auto it = and_node_.find(l);
            if (it != and_node_.end() && kept.size() + ins.size() < 256) {
                ins.insert(ins.end(), it->second.begin(), it->second.end());
            } else {
                kept.push_back(l);
            }
        }
        std::sort(kept.begin(), kept.end());
        kept.erase(std::unique(kept.begin(), kept.end()), kept.end());
        for (size_t i = 0; i + 1 < kept.size(); ++i)
            if (kept[i + 1] == lit_neg(kept[i])) return const_lit(false);
        if (kept.empty()) return const_lit(true);
        if (kept.size() == 1) return kept[0];
        auto it = and_cache_.find(kept);
        if (it != and_cache_.end()) return it->second;
        Lit out = fresh();
        std::vector<Lit> big{out};
        for (Lit l : kept) {
            s_.add_clause({lit_neg(out), l});
            big.push_back(lit_neg(l));
        }
        s_.add_clause(std::move(big));
        and_node_.emplace(out, kept);
        and_cache_.emplace(std::move(kept), out);
        return out;
    }

    Lit mk_or(std::vector<Lit> ins) {
        for (Lit& l : ins) l = lit_neg(l);
        return lit_neg(mk_and(std::move(ins)));
    }

    Lit mk_xor(const std::vector<Lit>& ins) {
        bool phase = false;
        std::vector<int> vars, work;
        for (Lit l : ins) {
            if (is_const(l, true)) { phase = !phase; continue; }
            if (is_const(l, false)) continue;
            phase ^= lit_sign(l);
            work.push_back(lit_var(l));
        }
        // flatten nested XOR nodes; parity over variables is association-free
        while (!work.empty()) {
            int v = work.back();
            work.pop_back();
            auto it = xor_node_.find(v);
            if (it != xor_node_.end() && vars.size() + work.size() < 256) {
                work.push_back(it->second.first);
                work.push_back(it->second.second);
            } else {
                vars.push_back(v);
            }
        }
        std::sort(vars.begin(), vars.end());
        std::vector<int> live;
        for (size_t i = 0; i < vars.size();) {
            if (i + 1 < vars.size() && vars[i + 1] == vars[i]) i += 2;  // a^a = 0
            else live.push_back(vars[i++]);
        }
        if (live.empty()) return const_lit(phase);
        Lit acc = mk_lit(live[0]);
        for (size_t i = 1; i < live.size(); ++i) acc = mk_xor2(acc, mk_lit(live[i]));
        return phase ? lit_neg(acc) : acc;
    }

    Lit mk_xor2(Lit a, Lit b) {
        bool phase = lit_sign(a) != lit_sign(b);
        int va = lit_var(a), vb = lit_var(b);
        if (va == vb) return const_lit(phase);
        if (va > vb) std::swap(va, vb);
        Lit out;
        auto it = xor_cache_.find({va, vb});
        if (it != xor_cache_.end()) {
            out = it->second;
        } else {
            out = fresh();
            Lit x = mk_lit(va), y = mk_lit(vb);
            s_.add_clause({lit_neg(x), lit_neg(y), lit_neg(out)});
            s_.add_clause({x, y, lit_neg(out)});
            s_.add_clause({lit_neg(x), y, out});
            s_.add_clause({x, lit_neg(y), out});
            xor_node_.emplace(lit_var(out), std::make_pair(va, vb));
            xor_cache_.emplace(std::make_pair(va, vb), out);
        }
        return phase ? lit_neg(out) : out;
    }

    /// Encode c reusing pre-seeded literals (>= 0). Undriven nets get fresh
    /// variables; gate outputs get hashed nodes. Returns a literal per net.
    std::vector<Lit> encode(const Circuit& c, std::vector<Lit> lit_of) {
        lit_of.resize(c.num_nets(), -1);
        for (NetId n = 0; n < c.num_nets(); ++n)
            if (lit_of[n] < 0 && c.driver(n) < 0) lit_of[n] = fresh();
        for (const Gate& g : c.gates()) {
            std::vector<Lit> ins;
            ins.reserve(g.ins.size());
            for (NetId in : g.ins) ins.push_back(lit_of[in]);
            Lit out;
            switch (g.kind) {
                case GateKind::And: out = mk_and(std::move(ins)); break;
                case GateKind::Nand: out = lit_neg(mk_and(std::move(ins))); break;
                case GateKind::Or: out = mk_or(std::move(ins)); break;
                case GateKind::Nor: out = lit_neg(mk_or(std::move(ins))); break;
                case GateKind::Xor: out = mk_xor(ins); break;
                case GateKind::Xnor: out = lit_neg(mk_xor(ins)); break;
                case GateKind::Inv: out = lit_neg(ins[0]); break;
                case GateKind::Buf: out = ins[0]; break;
                default: out = fresh(); break;
            }
            lit_of[g.out] = out;
        }
        return lit_of;
    }

private:
    Solver& s_;
    Lit true_lit_ = -1;
    std::map<std::vector<Lit>, Lit> and_cache_;
    std::map<std::pair<int, int>, Lit> xor_cache_;
    std::map<Lit, std::vector<Lit>> and_node_;        // positive AND output -> operands
    std::map<int, std::pair<int, int>> xor_node_;     // XOR output var -> operand vars
};

}  // namespace

std::optional<TernaryPattern> check_equivalence(const Circuit& a, const Circuit& b) {
    auto names_of = [](const Circuit& c, const std::vector<NetId>& nets) {
        std::vector<std::string> v;
        for (NetId n : nets) v.push_back(c.net_name(n));
        std::sort(v.begin(), v.end());
        return v;
    };
    if (names_of(a, a.inputs()) != names_of(b, b.inputs()) ||
        names_of(a, a.key_inputs()) != names_of(b, b.key_inputs()) ||
        names_of(a, a.outputs()) != names_of(b, b.outputs()))
        throw CircuitError("equivalence check: port signatures differ");

    Solver s;
    StructEncoder enc(s);
    auto la = enc.encode(a, {});
    std::vector<Lit> seed_b(b.num_nets(), -1);
    auto port_share = [&](const std::vector<NetId>& a_nets) {
        for (NetId n : a_nets) {
            NetId nb = b.net(a.net_name(n));
            seed_b[nb] = la[n];
        }
    };
    port_share(a.inputs());
    port_share(a.key_inputs());
    auto lb = enc.encode(b, std::move(seed_b));

    std::vector<Lit> diff;
    for (NetId o : a.outputs()) {
        NetId ob = b.net(a.net_name(o));
        Lit d = enc.mk_xor({la[o], lb[ob]});
        if (enc.is_const(d, false)) continue;  // structurally shared
        diff.push_back(d);
    }
    if (diff.empty()) return std::nullopt;
    if (!s.add_clause(diff)) return std::nullopt;
    if (!s.solve()) return std::nullopt;

    auto ports = a.pi_ki_order();
    TernaryPattern cex(ports.size());
    for (size_t i = 0; i < ports.size(); ++i) {
        Lit l = la[ports[i]];
        cex[i] = trit_from_bool(s.model_value(lit_var(l)) != lit_sign(l));
    }
    return cex;
}

// ---------------------------------------------------------------------------
// Constant substitution
// ---------------------------------------------------------------------------

namespace {

/// Substitute 0/1 values for some input nets and constant-propagate.
Circuit substitute(const Circuit& c, const std::vector<NetId>& targets, const TernaryPattern& values) {
    if (values.width() != targets.size())
        throw CircuitError("substitution pattern width mismatch");

    enum class K : uint8_t { C0, C1, Live };
    struct Val {
        K kind = K::Live;
        std::string name;  // live net name in the rebuilt circuit
    };
    std::vector<Val> val(c.num_nets());
    std::vector<uint8_t> fixed(c.num_nets(), 0);
    for (size_t i = 0; i < targets.size(); ++i) {
        if (values[i] == Trit::X) continue;
        val[targets[i]].kind = values[i] == Trit::V1 ? K::C1 : K::C0;
        fixed[targets[i]] = 1;
    }

    CircuitBuilder bld(c.name);
    for (NetId n : c.inputs())
        if (!fixed[n]) {
            NetId nn = bld.net(c.net_name(n));
            bld.mark_input(nn);
            val[n].name = c.net_name(n);
        }
    for (NetId n : c.key_inputs())
        if (!fixed[n]) {
            NetId nn = bld.net(c.net_name(n));
            bld.mark_input(nn);
            val[n].name = c.net_name(n);
        }

    for (const Gate& g : c.gates()) {
        std::vector<std::string> live;
        int const_ones = 0, const_zeros = 0;
        for (NetId in : g.ins) {
            switch (val[in].kind) {
                case K::C0: ++const_zeros; break;
                case K::C1: ++const_ones; break;
                case K::Live: live.push_back(val[in].name); break;
            }
        }
        const std::string& out_name = c.net_name(g.out);
        auto set_const = [&](bool one) { val[g.out].kind = one ? K::C1 : K::C0; };
        auto emit = [&](GateKind k, const std::vector<std::string>& ins) {
            std::vector<NetId> in_ids;
            for (const auto& nm : ins) in_ids.push_back(bld.net(nm));
            bld.add_gate(k, bld.net(out_name), std::move(in_ids));
            val[g.out].kind = K::Live;
            val[g.out].name = out_name;
        };
        auto alias = [&](const std::string& nm) {
            val[g.out].kind = K::Live;
            val[g.out].name = nm;
        };

        switch (g.kind) {
            case GateKind::And:
            case GateKind::Nand: {
                bool neg = g.kind == GateKind::Nand;
                if (const_zeros > 0) set_const(neg);
                else if (live.empty()) set_const(!neg);
                else if (live.size() == 1) {
                    if (neg) emit(GateKind::Inv, live);
                    else alias(live[0]);
                } else emit(g.kind, live);
                break;
            }
            case GateKind::Or:
            case GateKind::Nor: {
                bool neg = g.kind == GateKind::Nor;
                if (const_ones > 0) set_const(!neg);
                else if (live.empty()) set_const(neg);
                else if (live.size() == 1) {
                    if (neg) emit(GateKind::Inv, live);
                    else alias(live[0]);
                } else emit(g.kind, live);
                break;
            }
            case GateKind::Xor:
            case GateKind::Xnor: {
                bool phase = (g.kind == GateKind::Xnor);
                phase ^= (const_ones % 2) != 0;
                if (live.empty()) set_const(phase);
                else if (live.size() == 1) {
                    if (phase) emit(GateKind::Inv, live);
                    else alias(live[0]);
                } else emit(phase ? GateKind::Xnor : GateKind::Xor, live);
                break;
            }
            case GateKind::Inv:
                if (live.empty()) set_const(const_zeros > 0);
                else emit(GateKind::Inv, live);
                break;
            case GateKind::Buf:
                if (live.empty()) set_const(const_ones > 0);
                else alias(live[0]);
                break;
        }
    }

    // Constant generators are only materialised if some PO needs one.
    std::string c0_name, c1_name;
    auto const_net = [&](bool one) -> std::string {
        std::string& slot = one ? c1_name : c0_name;
        if (!slot.empty()) return slot;
        NetId anchor;
        if (!c.inputs().empty() && !fixed[c.inputs()[0]]) anchor = c.inputs()[0];
        else {
            anchor = kNoNet;
            for (NetId n : c.key_inputs())
                if (!fixed[n]) { anchor = n; break; }
            if (anchor == kNoNet)
                for (NetId n : c.inputs())
                    if (!fixed[n]) { anchor = n; break; }
            if (anchor == kNoNet) throw CircuitError("cannot materialise constant: no free input left");
        }
        std::string nm = one ? "_lf_const1" : "_lf_const0";
        while (c.find_net(nm)) nm += "_";
        NetId a = bld.net(c.net_name(anchor));
        bld.add_gate(one ? GateKind::Xnor : GateKind::Xor, bld.net(nm), {a, a});
        slot = nm;
        return slot;
    };

    for (NetId o : c.outputs()) {
        const std::string& oname = c.net_name(o);
        std::string src;
        switch (val[o].kind) {
            case K::C0: src = const_net(false); break;
            case K::C1: src = const_net(true); break;
            case K::Live: src = val[o].name; break;
        }
        if (src == oname) {
            bld.mark_output(bld.net(oname));
        } else {
            // output name must survive: rename through a buffer
            bld.add_gate(GateKind::Buf, bld.net(oname), {bld.net(src)});
            bld.mark_output(bld.net(oname));
        }
    }
    return bld.build();
}

}  // namespace

Circuit substitute_key(const Circuit& c, const TernaryPattern& key) {
    return substitute(c, c.key_inputs(), key);
}

Circuit substitute_inputs(const Circuit& c, const TernaryPattern& pi_values) {
    return substitute(c, c.inputs(), pi_values);
}

// ---------------------------------------------------------------------------
// Oracle-guided SAT attack
// ---------------------------------------------------------------------------

SatAttackResult sat_attack(const Circuit& locked, const Oracle& oracle, const TernaryPattern& partial) {
    const size_t num_pi = locked.inputs().size();
    const size_t num_key = locked.key_inputs().size();
    if (num_pi != oracle.num_inputs() || locked.outputs().size() != oracle.num_outputs())
        throw CircuitError("sat attack: locked circuit and oracle port counts differ");
    bool has_partial = false;
    if (partial.width() != 0) {
        if (partial.width() != num_key) throw CircuitError("sat attack: partial key width mismatch");
        for (Trit t : partial.bits)
            if (t != Trit::X) has_partial = true;
    }

    Solver s;
    std::vector<int> pi_vars(num_pi), k1(num_key), k2(num_key);
    for (auto& v : pi_vars) v = s.new_var();
    for (auto& v : k1) v = s.new_var();
    for (auto& v : k2) v = s.new_var();
    int act = s.new_var();

    auto seed_copy = [&](const std::vector<int>& kv) {
        std::vector<int> seed(locked.num_nets(), -1);
        for (size_t i = 0; i < num_pi; ++i) seed[locked.inputs()[i]] = pi_vars[i];
        for (size_t i = 0; i < num_key; ++i) seed[locked.key_inputs()[i]] = kv[i];
        return seed;
    };
    auto v1 = encode_onto(s, locked, seed_copy(k1));
    auto v2 = encode_onto(s, locked, seed_copy(k2));

    std::vector<Lit> miter{mk_lit(act, true)};
    for (NetId o : locked.outputs()) {
        int d = s.new_var();
        Lit x = mk_lit(v1[o]), y = mk_lit(v2[o]), t = mk_lit(d);
        s.add_clause({lit_neg(x), lit_neg(y), lit_neg(t)});
        s.add_clause({x, y, lit_neg(t)});
        s.add_clause({lit_neg(x), y, t});
        s.add_clause({x, lit_neg(y), t});
        miter.push_back(t);
    }
    s.add_clause(std::move(miter));

    if (has_partial) {
        for (size_t i = 0; i < num_key; ++i) {
            if (partial[i] == Trit::X) continue;
            bool one = partial[i] == Trit::V1;
            s.add_clause({mk_lit(k1[i], !one)});
            s.add_clause({mk_lit(k2[i], !one)});
        }
    }

    DipTrace trace;
    while (s.solve({mk_lit(act)})) {
        std::vector<uint8_t> dip(num_pi);
        for (size_t i = 0; i < num_pi; ++i) dip[i] = s.model_value(pi_vars[i]) ? 1 : 0;
        std::vector<uint8_t> resp = oracle.query(dip);

        TernaryPattern pat(num_pi);
        for (size_t i = 0; i < num_pi; ++i) pat[i] = trit_from_bool(dip[i]);
        Circuit reduced = substitute_inputs(locked, pat);

        auto constrain = [&](const std::vector<int>& kv) {
            std::vector<int> seed(reduced.num_nets(), -1);
            for (NetId kn : reduced.key_inputs()) {
                auto idx = key_input_index(reduced.net_name(kn));
                if (!idx || static_cast<size_t>(*idx) >= num_key)
                    throw CircuitError("sat attack: unexpected key input after substitution");
                seed[kn] = kv[*idx];
            }
            auto vars = encode_onto(s, reduced, std::move(seed));
            for (size_t i = 0; i < reduced.outputs().size(); ++i) {
                NetId o = reduced.net(locked.net_name(locked.outputs()[i]));
                s.add_clause({mk_lit(vars[o], resp[i] == 0)});
            }
        };
        constrain(k1);
        constrain(k2);
        trace.dips.emplace_back(std::move(dip), std::move(resp));
    }

    if (!s.solve({mk_lit(act, true)})) {
        throw SatAttackError(has_partial ? "constraints unsatisfiable under partial key"
                                         : "constraints unsatisfiable");
    }
    SatAttackResult res;
    res.key.resize(num_key);
    for (size_t i = 0; i < num_key; ++i) res.key[i] = s.model_value(k1[i]) ? 1 : 0;
    res.trace = std::move(trace);
    return res;
}

}  // namespace lf
