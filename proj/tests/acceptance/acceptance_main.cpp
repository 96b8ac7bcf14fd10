// End-to-end acceptance gate: one pass/fail line per criterion, nonzero
// exit when anything fails. Progress chatter goes to stderr so the stdout
// verdict block stays parseable.

#include <algorithm>
#include <chrono>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "common/fixtures.hpp"
#include "lockforge/attack.hpp"
#include "lockforge/atpg.hpp"
#include "lockforge/locklib.hpp"
#include "lockforge/report.hpp"
#include "lockforge/resynth.hpp"
#include "lockforge/satcore.hpp"

using namespace lf;
using Clock = std::chrono::steady_clock;

namespace {

double secs(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void note(const char* fmt, ...) {
    va_list ap;
    va_start(ap, fmt);
    std::vfprintf(stderr, fmt, ap);
    va_end(ap);
    std::fputc('\n', stderr);
    std::fflush(stderr);
}

int attack_num_pp(Technique t, const LockSpec& spec) {
    if (t == Technique::ECE) return 2;  // the OR tail spreads the region over two cubes
    if (t == Technique::SFLL_Flex) return spec.num_protected_patterns;
    return 1;
}

bool cec_ok(const AttackReport& r, const Circuit& locked, const Circuit& original) {
    AttackReport copy = r;
    return verify_key(copy, locked, original);
}

// ---------------------------------------------------------------------------
// Criteria 1, 2, 6 share one sweep: 14 techniques x 4 circuits x 20 seeds,
// key sizes {16,32,64} cycling by seed. Criterion 1 attacks with the oracle,
// criterion 2 re-attacks the emitted instance without one for the techniques
// that must resolve structurally, criterion 6 repeats the oracle attack after
// each resynthesis recipe.
// ---------------------------------------------------------------------------

struct SweepOutcome {
    int c1_trials = 0, c1_failures = 0;
    int c2_trials = 0, c2_failures = 0;
    int c6_trials = 0, c6_failures = 0;
    std::map<std::string, std::pair<int, int>> recipe_oracle_less;  // recipe -> (oless, total)
    double c1_seconds = 0.0;
};

bool oracle_less_required(Technique t) {
    switch (t) {
        case Technique::SARLock:
        case Technique::SARLockDTL:
        case Technique::ECE:
        case Technique::CAC:
        case Technique::CAC_DTL:
        case Technique::SFLL_HD0:
        case Technique::SFLL_Flex:
        case Technique::AntiSAT:
        case Technique::AntiSAT_DTL:
        case Technique::GenAntiSAT_Comp:
            return true;
        default:
            return false;  // SFLL-rem and SAS may lean on the oracle
    }
}

SweepOutcome run_sweep() {
    SweepOutcome out;
    const int key_sizes[3] = {16, 32, 64};
    const std::pair<uint32_t, int> circuits[4] = {{101, 200}, {202, 800}, {303, 2000}, {404, 3500}};
    const char* recipes[3] = {"light", "medium", "heavy"};

    auto t_start = Clock::now();
    for (auto [cseed, gates] : circuits) {
        Circuit host = testing::random_circuit(cseed, 72, gates);
        for (Technique t : all_techniques()) {
            for (uint64_t seed = 0; seed < 20; ++seed) {
                LockSpec spec;
                spec.technique = t;
                spec.key_size = key_sizes[seed % 3];
                spec.num_protected_patterns = t == Technique::SFLL_Flex ? 2 : 1;
                spec.sas_blocks = 2;
                spec.rng_seed = cseed * 1000 + static_cast<uint64_t>(t) * 37 + seed;
                LockArtifact art = lock(host, spec);
                Oracle oracle(art.locked, art.secret_key);
                int npp = attack_num_pp(t, spec);

                // criterion 1: oracle attack + CEC
                ++out.c1_trials;
                AttackReport r1 = attack(art.locked, &oracle, "auto", npp);
                if (!r1.complete || !cec_ok(r1, art.locked, host)) {
                    ++out.c1_failures;
                    note("  c1 FAIL %s/%s seed=%llu K=%d (%s)", host.name.c_str(),
                         technique_name(t), (unsigned long long)seed, spec.key_size,
                         r1.diagnostic.empty() ? "cec" : r1.diagnostic.c_str());
                }

                // criterion 2: structural-only attack on the emitted instance
                if (oracle_less_required(t)) {
                    ++out.c2_trials;
                    AttackReport r2 = attack(art.locked, nullptr, "auto", npp);
                    if (!r2.complete || !r2.oracle_less || !cec_ok(r2, art.locked, host)) {
                        ++out.c2_failures;
                        note("  c2 FAIL %s/%s seed=%llu K=%d", host.name.c_str(),
                             technique_name(t), (unsigned long long)seed, spec.key_size);
                    }
                }

                // criterion 6: oracle attack after each resynthesis recipe
                for (const char* recipe : recipes) {
                    ++out.c6_trials;
                    Circuit resyn = apply_recipe(art.locked, recipe);
                    AttackReport r6 = attack(resyn, &oracle, "auto", npp);
                    auto& frac = out.recipe_oracle_less[recipe];
                    ++frac.second;
                    if (r6.oracle_less) ++frac.first;
                    if (!r6.complete || !cec_ok(r6, resyn, host)) {
                        ++out.c6_failures;
                        note("  c6 FAIL %s/%s/%s seed=%llu K=%d (%s)", host.name.c_str(),
                             technique_name(t), recipe, (unsigned long long)seed, spec.key_size,
                             r6.diagnostic.empty() ? "cec" : r6.diagnostic.c_str());
                    }
                }
            }
            note("sweep: %s (%d gates) %-20s done [%.0fs]", host.name.c_str(), gates,
                 technique_name(t), secs(t_start));
        }
    }
    out.c1_seconds = secs(t_start);
    return out;
}

// ---------------------------------------------------------------------------
// Criterion 3: golden fixtures, bit-exact.
// ---------------------------------------------------------------------------

bool run_golden() {
    bool ok = true;
    auto expect = [&](bool cond, const char* what) {
        if (!cond) {
            ok = false;
            note("  c3 FAIL %s", what);
        }
    };

    {
        AttackReport r = attack_hard_coded(testing::locked_pf_fixture(), nullptr, 1);
        expect(r.complete && r.oracle_less && r.recovered_key.to_string() == "1001",
               "point-function fixture key 1001 oracle-less");
    }
    {
        AttackReport r = attack_hard_coded(testing::locked_pf_merged_fixture(), nullptr, 1);
        expect(r.structural_key.to_string() == "00x0",
               "merged-comparator fixture structural key 00x0");
    }
    for (auto fixture : {testing::nhc_pre_fixture, testing::nhc_post_fixture}) {
        AttackReport r = attack_non_hard_coded(fixture(), nullptr);
        expect(r.complete && r.oracle_less && r.recovered_key.to_string() == "01101011",
               "locking-unit fixture key 01101011 oracle-less");
        expect(r.recovered_mapping == std::vector<uint8_t>({1, 1, 0, 1}),
               "locking-unit fixture mapping 1101");
    }
    {
        Circuit locked = testing::nhc_shared_fixture();
        Oracle oracle(locked, testing::key_bits("11100011"));
        AttackReport r = attack_non_hard_coded(locked, &oracle);
        expect(r.complete && r.recovered_key.to_string() == "11100011",
               "shared-entry fixture key 11100011");
        expect(r.count_source(BitSource::Sat) == 2, "shared-entry fixture exactly 2 SAT bits");
    }
    {
        struct Row { int bin; EntryGate g; bool inv; uint8_t v; };
        const Row rows[8] = {
            {1, EntryGate::Xor, false, 0},  {1, EntryGate::Xor, true, 1},
            {1, EntryGate::Xnor, false, 1}, {1, EntryGate::Xnor, true, 0},
            {2, EntryGate::Xor, false, 1},  {2, EntryGate::Xor, true, 0},
            {2, EntryGate::Xnor, false, 0}, {2, EntryGate::Xnor, true, 1},
        };
        for (const Row& row : rows)
            expect(key_mapping(row.bin, row.g, row.inv) == row.v, "mapping table row");
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 4: DIP-count lower bounds and the correct-key set.
// ---------------------------------------------------------------------------

bool run_security_sanity() {
    bool ok = true;

    {
        Circuit host = testing::random_circuit(77, 8, 40, 4);
        LockSpec spec;
        spec.technique = Technique::SARLock;
        spec.key_size = 8;
        spec.rng_seed = 9;
        LockArtifact art = lock(host, spec);
        Oracle oracle(art.locked, art.secret_key);
        SatAttackResult res = sat_attack(art.locked, oracle, TernaryPattern(8));
        note("  c4 sarlock |K|=8: %zu dips", res.trace.iterations());
        if (res.trace.iterations() < 255) {
            ok = false;
            note("  c4 FAIL sarlock dip count %zu < 255", res.trace.iterations());
        }
        TernaryPattern kp(8);
        for (size_t i = 0; i < 8; ++i) kp[i] = res.key[i] ? Trit::V1 : Trit::V0;
        if (check_equivalence(substitute_key(art.locked, kp), host)) {
            ok = false;
            note("  c4 FAIL sarlock sat key not equivalent");
        }
    }
    {
        Circuit host = testing::random_circuit(78, 12, 60, 4);
        LockSpec spec;
        spec.technique = Technique::AntiSAT;
        spec.key_size = 12;
        spec.rng_seed = 9;
        LockArtifact art = lock(host, spec);
        Oracle oracle(art.locked, art.secret_key);
        SatAttackResult res = sat_attack(art.locked, oracle, TernaryPattern(12));
        note("  c4 anti-sat |K|=12: %zu dips", res.trace.iterations());
        if (res.trace.iterations() < 63) {
            ok = false;
            note("  c4 FAIL anti-sat dip count %zu < 63", res.trace.iterations());
        }
    }
    {
        Circuit host = testing::random_circuit(79, 8, 40, 4);
        LockSpec spec;
        spec.technique = Technique::AntiSAT;
        spec.key_size = 8;
        spec.rng_seed = 9;
        LockArtifact art = lock(host, spec);
        auto keys = correct_key_set(art);
        note("  c4 anti-sat |K|=8: %zu correct keys", keys.size());
        if (keys.size() != 16) {
            ok = false;
            note("  c4 FAIL correct-key count %zu != 16", keys.size());
        }
        std::vector<uint8_t> mapping;
        for (const auto& k : keys) {
            std::vector<uint8_t> m;
            for (size_t i = 0; i < 4; ++i) m.push_back(k[i] ^ k[i + 4]);
            if (mapping.empty()) mapping = m;
            else if (mapping != m) {
                ok = false;
                note("  c4 FAIL K1^K2 not constant across the correct-key set");
                break;
            }
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 5: test-generation exactness on random circuits, plus full
// stuck-at testability of every shipped locked fixture.
// ---------------------------------------------------------------------------

bool run_atpg_equivalence() {
    bool ok = true;
    AtpgOptions opts;
    for (uint32_t seed = 1; seed <= 50; ++seed) {
        int inputs = 4 + static_cast<int>(seed % 11);  // 4..14
        int gates = inputs * 3 + static_cast<int>(seed % 10);
        Circuit c = testing::random_circuit(seed, inputs, gates);
        size_t w = c.pi_ki_order().size();
        for (NetId n = 0; n < c.num_nets(); ++n) {
            if (c.endpoints(n).empty()) continue;
            for (bool sv : {false, true}) {
                Fault f{n, sv};
                CubeList cl = generate_all_tests(c, f, opts);
                if (!cl.complete) {
                    ok = false;
                    note("  c5 FAIL %s net %s sa%d: enumeration incomplete", c.name.c_str(),
                         c.net_name(n).c_str(), sv ? 1 : 0);
                    continue;
                }
                std::vector<uint64_t> minterms;
                for (const auto& cube : cl.cubes) {
                    std::vector<size_t> free;
                    uint64_t base = 0;
                    for (size_t i = 0; i < w; ++i) {
                        if (cube[i] == Trit::X) free.push_back(i);
                        else if (cube[i] == Trit::V1) base |= uint64_t(1) << i;
                    }
                    for (uint64_t m = 0; m < (uint64_t(1) << free.size()); ++m) {
                        uint64_t v = base;
                        for (size_t b = 0; b < free.size(); ++b)
                            if ((m >> b) & 1) v |= uint64_t(1) << free[b];
                        minterms.push_back(v);
                    }
                }
                std::sort(minterms.begin(), minterms.end());
                if (std::adjacent_find(minterms.begin(), minterms.end()) != minterms.end()) {
                    ok = false;
                    note("  c5 FAIL %s net %s sa%d: overlapping cubes", c.name.c_str(),
                         c.net_name(n).c_str(), sv ? 1 : 0);
                    continue;
                }
                auto brute = testing::brute_force_detecting_set(c, f);
                if (minterms != brute) {
                    ok = false;
                    note("  c5 FAIL %s net %s sa%d: %zu minterms vs %zu brute", c.name.c_str(),
                         c.net_name(n).c_str(), sv ? 1 : 0, minterms.size(), brute.size());
                }
            }
        }
        if (seed % 10 == 0) note("  c5 progress: %u/50 circuits", seed);
    }

    // every shipped locked fixture stays fully testable
    Circuit fixtures[] = {testing::locked_pf_fixture(), testing::locked_pf_merged_fixture(),
                          testing::nhc_pre_fixture(), testing::nhc_post_fixture(),
                          testing::nhc_shared_fixture()};
    for (const Circuit& c : fixtures) {
        for (NetId n = 0; n < c.num_nets(); ++n) {
            if (c.endpoints(n).empty()) continue;  // dangling
            for (bool sv : {false, true}) {
                CubeList cl = generate_all_tests(c, Fault{n, sv}, opts);
                if (cl.empty()) {
                    ok = false;
                    note("  c5 FAIL %s net %s sa%d untestable", c.name.c_str(),
                         c.net_name(n).c_str(), sv ? 1 : 0);
                }
            }
        }
    }
    return ok;
}

// ---------------------------------------------------------------------------
// Criterion 7: a ~10k-gate circuit is attacked in under two minutes.
// ---------------------------------------------------------------------------

bool run_large_scale() {
    Circuit host = testing::random_circuit(905, 72, 10000);
    LockSpec spec;
    spec.technique = Technique::SARLock;
    spec.key_size = 64;
    spec.rng_seed = 5;
    LockArtifact art = lock(host, spec);
    Oracle oracle(art.locked, art.secret_key);
    auto t0 = Clock::now();
    AttackReport r = attack(art.locked, &oracle, "auto", 1);
    double dt = secs(t0);
    bool ok = r.complete && dt < 120.0 && cec_ok(r, art.locked, host);
    note("  c7 %zu gates attacked in %.1fs (complete=%d)", host.gates().size(), dt,
         (int)r.complete);
    return ok;
}

}  // namespace

int main() {
    int failures = 0;
    auto verdict = [&](int idx, bool pass, const std::string& detail) {
        std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", idx, detail.c_str());
        std::fflush(stdout);
        if (!pass) ++failures;
    };

    SweepOutcome sweep = run_sweep();
    {
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "oracle key recovery, %d/%d trials CEC-clean in %.0fs",
                      sweep.c1_trials - sweep.c1_failures, sweep.c1_trials, sweep.c1_seconds);
        verdict(1, sweep.c1_failures == 0 && sweep.c1_trials >= 1120 && sweep.c1_seconds < 7200.0,
                buf);
    }
    {
        char buf[160];
        std::snprintf(buf, sizeof buf, "oracle-less recovery on emitted instances, %d/%d trials",
                      sweep.c2_trials - sweep.c2_failures, sweep.c2_trials);
        verdict(2, sweep.c2_failures == 0 && sweep.c2_trials > 0, buf);
    }
    verdict(3, run_golden(), "golden fixtures bit-exact");
    verdict(4, run_security_sanity(), "DIP lower bounds and correct-key set");
    verdict(5, run_atpg_equivalence(), "test generation matches brute force; fixtures testable");
    {
        std::string detail = "post-resynthesis recovery, " +
                             std::to_string(sweep.c6_trials - sweep.c6_failures) + "/" +
                             std::to_string(sweep.c6_trials) + " trials; oracle-less";
        for (const auto& [recipe, frac] : sweep.recipe_oracle_less) {
            char buf[64];
            std::snprintf(buf, sizeof buf, " %s=%.2f", recipe.c_str(),
                          frac.second ? double(frac.first) / frac.second : 0.0);
            detail += buf;
        }
        verdict(6, sweep.c6_failures == 0 && sweep.c6_trials > 0, detail);
    }
    verdict(7, run_large_scale(), "10k-gate attack under 120s");

    return failures == 0 ? 0 : 1;
}
