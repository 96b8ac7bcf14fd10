#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <unordered_map>
#include <vector>

#include "lockforge/netlist.hpp"
#include "lockforge/simulate.hpp"

namespace lf {

/// Literal: 2*var + sign (sign 1 = negated).
using Lit = int32_t;
inline Lit mk_lit(int var, bool neg = false) { return 2 * var + (neg ? 1 : 0); }
inline int lit_var(Lit l) { return l >> 1; }
inline bool lit_sign(Lit l) { return l & 1; }
inline Lit lit_neg(Lit l) { return l ^ 1; }

/// Plain CNF container, used for DIMACS I/O and external cross-checks.
struct DimacsCnf {
    int num_vars = 0;
    std::vector<std::vector<Lit>> clauses;
};
std::string write_dimacs(const DimacsCnf& cnf);
DimacsCnf read_dimacs(std::string_view text);

/// Small CDCL solver: two-watched literals, 1UIP learning, activity-based
/// decisions with phase saving, incremental clause addition, assumptions.
class Solver {
public:
    int new_var();
    int num_vars() const { return static_cast<int>(assign_.size()); }
    /// Returns false if the clause is trivially unsatisfiable at level 0.
    bool add_clause(std::vector<Lit> lits);
    bool solve(const std::vector<Lit>& assumptions = {});
    /// Model value of var after a satisfiable solve().
    bool model_value(int var) const { return model_[var] == 1; }
    bool ok() const { return ok_; }
    uint64_t num_conflicts() const { return conflicts_; }
    /// Original (non-learnt) clauses, for export.
    DimacsCnf export_cnf() const;

private:
    struct Clause {
        std::vector<Lit> lits;
        bool learnt = false;
    };
    struct Watcher {
        int clause;
        Lit blocker;
    };

    int propagate();  // returns conflicting clause index or -1
    void analyze(int confl, std::vector<Lit>& learnt, int& bt_level);
    void enqueue(Lit l, int reason);
    void cancel_until(int level);
    int pick_branch_var();
    void bump(int var);
    void heap_insert(int var);
    void heap_up(int i);
    void heap_down(int i);

    std::vector<Clause> clauses_;
    std::vector<std::vector<Watcher>> watches_;  // indexed by literal
    std::vector<int8_t> assign_;                 // -1 unknown, 0 false, 1 true
    std::vector<int8_t> phase_;                  // saved phase, default true
    std::vector<int> level_, reason_;
    std::vector<Lit> trail_;
    std::vector<int> trail_lim_;
    size_t qhead_ = 0;
    std::vector<double> activity_;
    double var_inc_ = 1.0;
    std::vector<uint8_t> seen_;
    std::vector<int8_t> model_;
    bool ok_ = true;
    uint64_t conflicts_ = 0;
    size_t num_orig_clauses_ = 0;
    std::vector<int> heap_, heap_pos_;  // activity-ordered decision queue

    int8_t value(Lit l) const {
        int8_t a = assign_[lit_var(l)];
        return a < 0 ? int8_t(-1) : int8_t(a ^ (lit_sign(l) ? 1 : 0));
    }
    int decision_level() const { return static_cast<int>(trail_lim_.size()); }
};

/// CNF for one or more circuit copies sharing a solver; maps nets to vars.
struct CnfInstance {
    Solver solver;
    std::unordered_map<std::string, int> port_vars;  // by net name, first copy
    std::vector<int> net_vars;                       // by net id, first copy

    std::string to_dimacs() const;
};

/// Tseitin-encode c into a fresh instance. Every net gets one variable.
CnfInstance encode(const Circuit& c);

/// Encode a copy of c into an existing solver. var_of maps net id -> solver
/// var; nets with an entry >= 0 reuse that var, others get fresh vars.
/// Returns the final net->var map.
std::vector<int> encode_onto(Solver& s, const Circuit& c, std::vector<int> var_of);

/// Encode a single gate over an explicit net->var map.
void encode_gate_onto(Solver& s, const Gate& g, const std::vector<int>& var_of);

/// Miter-based combinational equivalence check. Inputs/outputs are matched
/// by name; both PI and KI sets must agree. Returns nullopt when
/// equivalent, else a distinguishing pattern over a's pi_ki_order.
std::optional<TernaryPattern> check_equivalence(const Circuit& a, const Circuit& b);

/// Replace 0/1 key bits by constants and propagate them; x bits remain key
/// inputs. Constant POs are re-expressed through the first available input.
Circuit substitute_key(const Circuit& c, const TernaryPattern& key);

/// Same mechanics for primary inputs (key inputs survive).
Circuit substitute_inputs(const Circuit& c, const TernaryPattern& pi_values);

struct DipTrace {
    std::vector<std::pair<std::vector<uint8_t>, std::vector<uint8_t>>> dips;  // (input, response)
    size_t iterations() const { return dips.size(); }
};

struct SatAttackResult {
    std::vector<uint8_t> key;
    DipTrace trace;
};

class SatAttackError : public std::runtime_error {
public:
    explicit SatAttackError(const std::string& what) : std::runtime_error(what) {}
};

/// Oracle-guided DIP-loop attack. partial's 0/1 bits are assumed-correct
/// constraints; an UNSAT result under them signals a wrong structural bit.
SatAttackResult sat_attack(const Circuit& locked, const Oracle& oracle, const TernaryPattern& partial);

}  // namespace lf
