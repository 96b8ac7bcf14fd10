#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lockforge/locklib.hpp"
#include "lockforge/netlist.hpp"
#include "lockforge/simulate.hpp"

namespace lf {

enum class BitSource : uint8_t { Structural, Sat, Unresolved };
const char* bit_source_name(BitSource s);

/// Outcome of one attack run. recovered_key may retain x bits when the
/// attack is incomplete (no oracle and structure alone was not enough).
struct AttackReport {
    std::string circuit;
    std::string technique = "unknown";
    std::string family;  // "hard-coded" | "non-hard-coded"

    TernaryPattern structural_key;  // pre-completion; x = undeciphered
    TernaryPattern recovered_key;   // after SAT completion (if any)
    std::vector<BitSource> per_bit_source;
    bool complete = false;

    /// True iff the key was derived without touching the oracle:
    /// dip_count == 0 and oracle_queries == 0. Queries spent on post-hoc
    /// validation are tallied separately and do not disturb the flag.
    bool oracle_less = false;
    uint64_t dip_count = 0;
    uint64_t oracle_queries = 0;
    uint64_t validation_queries = 0;

    double structural_seconds = 0.0;
    double sat_seconds = 0.0;
    double total_seconds = 0.0;

    double accuracy = -1.0;   // correct bits / key size, set by score()
    double precision = -1.0;  // correct fraction of asserted structural bits
    std::string verification = "not-checked";  // CEC verdict, set by caller
    std::string diagnostic;                    // why the attack fell short

    std::vector<TernaryPattern> recovered_patterns;  // protected cubes (hc)
    std::vector<uint8_t> recovered_mapping;          // K1 xor K2 per pair (nhc)

    size_t key_size() const { return recovered_key.width(); }
    std::string key_string() const { return recovered_key.to_string(); }
    size_t count_source(BitSource s) const;
};

/// Fill in accuracy/precision against the planted key. The planted key is
/// never copied into the report.
AttackReport score(AttackReport draft, const std::vector<uint8_t>& planted_key);

/// Substitute the key and run CEC against the original; updates
/// report.verification and returns true on equivalence.
bool verify_key(AttackReport& report, const Circuit& locked, const Circuit& original);

std::string report_json(const AttackReport& r);

struct TrialResult {
    std::string circuit;
    std::string technique;
    std::string recipe;  // "" when attacked as emitted
    uint64_t seed = 0;
    int key_size = 0;
    AttackReport report;
};

/// Per (circuit, technique, recipe) aggregation: trial count, mean/min/max
/// total runtime, oracle-less fraction, DIP min/max, CEC pass count.
std::string campaign_csv(const std::vector<TrialResult>& trials);

/// corpus/<circuit>/<technique>/<seed>/{locked.bench, manifest.json,
/// secret.key}; keep secret.key out of any published copy.
void write_corpus_entry(const std::string& corpus_root, const LockArtifact& art);

}  // namespace lf
