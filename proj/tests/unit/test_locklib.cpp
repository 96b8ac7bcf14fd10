#include <set>

#include "common/fixtures.hpp"
#include "doctest.h"
#include "lockforge/locklib.hpp"
#include "lockforge/satcore.hpp"

using namespace lf;

namespace {

Circuit host_circuit(uint32_t seed = 91, int inputs = 8, int gates = 60) {
    return testing::random_circuit(seed, inputs, gates);
}

TernaryPattern as_pattern(const std::vector<uint8_t>& key) {
    TernaryPattern p(key.size());
    for (size_t i = 0; i < key.size(); ++i) p[i] = trit_from_bool(key[i]);
    return p;
}

/// Number of full input patterns where the two circuits disagree
/// (brute force; both must share the PI name set and have no KIs).
uint64_t diff_count(const Circuit& a, const Circuit& b) {
    size_t w = a.inputs().size();
    REQUIRE(b.inputs().size() == w);
    uint64_t diffs = 0;
    for (uint64_t m = 0; m < (uint64_t(1) << w); ++m) {
        std::vector<uint8_t> bits(w);
        for (size_t i = 0; i < w; ++i) bits[i] = (m >> i) & 1;
        if (eval(a, bits) != eval(b, bits)) ++diffs;
    }
    return diffs;
}

}  // namespace

TEST_CASE("every technique round-trips through its secret key") {
    Circuit orig = host_circuit();
    for (Technique t : all_techniques()) {
        CAPTURE(technique_name(t));
        for (uint64_t seed : {1u, 2u, 3u}) {
            LockSpec spec;
            spec.technique = t;
            spec.key_size = t == Technique::SFLL_Flex ? 8 : 8;
            spec.num_protected_patterns = 2;
            spec.sas_blocks = 2;
            spec.rng_seed = seed;
            LockArtifact art = lock(orig, spec);
            REQUIRE(art.locked.key_inputs().size() == 8);
            REQUIRE(art.secret_key.size() == 8);
            Circuit unlocked = substitute_key(art.locked, as_pattern(art.secret_key));
            CHECK(!check_equivalence(unlocked, orig).has_value());
        }
    }
}

TEST_CASE("wrong keys corrupt the function") {
    Circuit orig = host_circuit(92);
    for (Technique t : {Technique::SARLock, Technique::SFLL_HD0, Technique::CAC_DTL,
                        Technique::ECE, Technique::AntiSAT, Technique::GenAntiSAT_Comp}) {
        CAPTURE(technique_name(t));
        LockSpec spec;
        spec.technique = t;
        spec.key_size = 8;
        spec.rng_seed = 5;
        LockArtifact art = lock(orig, spec);
        auto bad = art.secret_key;
        bad[3] ^= 1;
        Circuit wrong = substitute_key(art.locked, as_pattern(bad));
        CHECK(check_equivalence(wrong, orig).has_value());
    }
}

TEST_CASE("sarlock corrupts exactly one pip pattern per wrong key") {
    Circuit orig = host_circuit(93, 6, 40);
    LockSpec spec;
    spec.technique = Technique::SARLock;
    spec.key_size = 6;
    spec.rng_seed = 7;
    LockArtifact art = lock(orig, spec);
    // every PI is a PIP here, so each wrong key flips exactly one pattern
    REQUIRE(art.roles.pips.size() == 6);
    for (uint64_t m : {0ull, 5ull, 63ull}) {
        std::vector<uint8_t> key(6);
        for (int i = 0; i < 6; ++i) key[i] = (m >> i) & 1;
        Circuit sub = substitute_key(art.locked, as_pattern(key));
        uint64_t expect = key == art.secret_key ? 0 : 1;
        CHECK(diff_count(sub, orig) == expect);
    }
}

TEST_CASE("ece corrupts more than one pattern per wrong key") {
    Circuit orig = host_circuit(94, 6, 40);
    LockSpec spec;
    spec.technique = Technique::ECE;
    spec.key_size = 6;
    spec.rng_seed = 9;
    LockArtifact art = lock(orig, spec);
    std::vector<uint8_t> bad = art.secret_key;
    bad[0] ^= 1;
    Circuit sub = substitute_key(art.locked, as_pattern(bad));
    CHECK(diff_count(sub, orig) >= 2);
    CHECK(art.protected_patterns.size() == 2);
}

TEST_CASE("anti-sat has exactly 2^(k/2) correct keys with a constant mapping") {
    Circuit orig = host_circuit(95);
    LockSpec spec;
    spec.technique = Technique::AntiSAT;
    spec.key_size = 8;
    spec.rng_seed = 11;
    LockArtifact art = lock(orig, spec);
    auto keys = correct_key_set(art);
    CHECK(keys.size() == 16);
    REQUIRE(art.key_mapping.size() == 4);
    for (const auto& k : keys) {
        for (int i = 0; i < 4; ++i) CHECK((k[i] ^ k[4 + i]) == art.key_mapping[i]);
    }
    // the planted key is one of them
    CHECK(std::find(keys.begin(), keys.end(), art.secret_key) != keys.end());
}

TEST_CASE("sarlock admits exactly one correct key") {
    Circuit orig = host_circuit(96);
    LockSpec spec;
    spec.technique = Technique::SARLock;
    spec.key_size = 6;
    spec.rng_seed = 13;
    LockArtifact art = lock(orig, spec);
    auto keys = correct_key_set(art);
    REQUIRE(keys.size() == 1);
    CHECK(keys[0] == art.secret_key);
}

TEST_CASE("each key input drives exactly one xor/xnor gate") {
    Circuit orig = host_circuit(97);
    for (Technique t : all_techniques()) {
        if (t == Technique::SFLL_Rem) continue;  // resynthesis may rewrite entries
        CAPTURE(technique_name(t));
        LockSpec spec;
        spec.technique = t;
        spec.key_size = 8;
        spec.num_protected_patterns = 2;
        spec.rng_seed = 17;
        LockArtifact art = lock(orig, spec);
        for (NetId ki : art.locked.key_inputs()) {
            int xnor_fanout = 0;
            for (int gi : art.locked.fanout_gates(ki)) {
                GateKind k = art.locked.tech_mapping(gi);
                if (k == GateKind::Xor || k == GateKind::Xnor) ++xnor_fanout;
            }
            CHECK(xnor_fanout == 1);
        }
    }
}

TEST_CASE("sfll-flex uses disjoint key words over a shared pip set") {
    Circuit orig = host_circuit(98);
    LockSpec spec;
    spec.technique = Technique::SFLL_Flex;
    spec.key_size = 12;
    spec.num_protected_patterns = 3;
    spec.rng_seed = 19;
    LockArtifact art = lock(orig, spec);
    REQUIRE(art.protected_patterns.size() == 3);
    REQUIRE(art.roles.pips.size() == 4);
    // words pairwise differ in at least two positions
    for (size_t a = 0; a < 3; ++a)
        for (size_t b = a + 1; b < 3; ++b) {
            int hd = 0;
            for (int i = 0; i < 4; ++i)
                hd += art.protected_patterns[a][i] != art.protected_patterns[b][i];
            CHECK(hd >= 2);
        }
    // secret key is the concatenated patterns
    for (int word = 0; word < 3; ++word)
        for (int i = 0; i < 4; ++i)
            CHECK(trit_from_bool(art.secret_key[word * 4 + i]) ==
                  art.protected_patterns[word][i]);
}

TEST_CASE("sas locks multiple outputs") {
    Circuit orig = host_circuit(99, 10, 80);
    REQUIRE(orig.outputs().size() >= 2);
    LockSpec spec;
    spec.technique = Technique::SAS;
    spec.key_size = 8;
    spec.sas_blocks = 2;
    spec.rng_seed = 23;
    LockArtifact art = lock(orig, spec);
    CHECK(art.roles.pops.size() == 2);
    CHECK(std::set<std::string>(art.roles.pops.begin(), art.roles.pops.end()).size() == 2);
    Circuit unlocked = substitute_key(art.locked, as_pattern(art.secret_key));
    CHECK(!check_equivalence(unlocked, orig).has_value());
}

TEST_CASE("sfll-rem hides the perturb comparator") {
    Circuit orig = host_circuit(90, 8, 50);
    LockSpec spec;
    spec.technique = Technique::SFLL_Rem;
    spec.key_size = 6;
    spec.rng_seed = 29;
    LockArtifact art = lock(orig, spec);
    Circuit unlocked = substitute_key(art.locked, as_pattern(art.secret_key));
    CHECK(!check_equivalence(unlocked, orig).has_value());
    std::vector<uint8_t> bad = art.secret_key;
    bad[1] ^= 1;
    CHECK(check_equivalence(substitute_key(art.locked, as_pattern(bad)), orig).has_value());
}

TEST_CASE("lock spec validation errors") {
    Circuit orig = host_circuit();
    LockSpec spec;
    spec.key_size = 0;
    CHECK_THROWS_AS(lock(orig, spec), LockError);
    spec.key_size = 7;
    spec.technique = Technique::AntiSAT;
    CHECK_THROWS_AS(lock(orig, spec), LockError);  // odd key for two bins
    spec.key_size = 64;
    spec.technique = Technique::SARLock;
    CHECK_THROWS_AS(lock(orig, spec), LockError);  // more pips than PIs
    spec.key_size = 8;
    spec.pop_selection = {"no_such_po"};
    CHECK_THROWS_AS(lock(orig, spec), CircuitError);
}

TEST_CASE("manifest holds roles but not the key") {
    Circuit orig = host_circuit();
    LockSpec spec;
    spec.technique = Technique::SFLL_HD0;
    spec.key_size = 8;
    spec.rng_seed = 31;
    LockArtifact art = lock(orig, spec);
    std::string manifest = lock_manifest(art);
    CHECK(manifest.find("sfll-hd0") != std::string::npos);
    CHECK(manifest.find("hard-coded") != std::string::npos);
    for (const auto& pip : art.roles.pips) CHECK(manifest.find(pip) != std::string::npos);
    std::string key = secret_key_line(art);
    CHECK(key.size() == 9);  // 8 bits + newline
}
