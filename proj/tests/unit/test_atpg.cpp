#include <algorithm>
#include <set>

#include "common/fixtures.hpp"
#include "doctest.h"
#include "lockforge/atpg.hpp"

using namespace lf;

namespace {

/// Expand a cube list to its minterm set over the full port width.
std::set<uint64_t> expand(const CubeList& cl, size_t w) {
    std::set<uint64_t> out;
    for (const auto& cube : cl.cubes) {
        std::vector<size_t> free;
        for (size_t i = 0; i < w; ++i)
            if (cube[i] == Trit::X) free.push_back(i);
        REQUIRE(free.size() < 22);
        for (uint64_t f = 0; f < (uint64_t(1) << free.size()); ++f) {
            uint64_t m = 0;
            for (size_t i = 0; i < w; ++i)
                if (cube[i] == Trit::V1) m |= uint64_t(1) << i;
            for (size_t j = 0; j < free.size(); ++j)
                if ((f >> j) & 1) m |= uint64_t(1) << free[j];
            out.insert(m);
        }
    }
    return out;
}

size_t total_minterms(const CubeList& cl, size_t w) {
    size_t n = 0;
    for (const auto& cube : cl.cubes) n += size_t(1) << cube.num_x();
    (void)w;
    return n;
}

}  // namespace

TEST_CASE("single test generation on the primer circuit") {
    Circuit c = testing::primer_circuit();
    Fault f{c.net("n1"), false};
    auto tp = generate_test(c, f);
    REQUIRE(tp.has_value());
    CHECK(pattern_detects(c, f, *tp));
    CHECK(tp->to_string() == "1100x");  // unique test, e stays free
}

TEST_CASE("untestable fault on a dangling net") {
    Circuit c = testing::primer_circuit();
    Fault f{c.net("e"), false};
    CHECK(!generate_test(c, f).has_value());
    auto all = generate_all_tests(c, f);
    CHECK(all.complete);
    CHECK(all.empty());
}

TEST_CASE("redundant fault is proven untestable") {
    // y = OR(a, NOT(a)) is constant 1: s-a-1 at y undetectable
    Circuit c = parse_bench("INPUT(a)\nINPUT(b)\nOUTPUT(y)\nia = NOT(a)\nt = OR(a, ia)\ny = AND(t, b)\n");
    CHECK(!generate_test(c, Fault{c.net("t"), true}).has_value());
    CHECK(generate_test(c, Fault{c.net("t"), false}).has_value());
}

TEST_CASE("cube enumeration equals brute force on random circuits") {
    int checked = 0;
    for (uint32_t seed = 100; seed < 150; ++seed) {
        Circuit c = testing::random_circuit(seed, 4 + seed % 4, 18 + seed % 12);
        size_t w = c.pi_ki_order().size();
        if (w > 14) continue;
        std::mt19937 rng(seed);
        for (int t = 0; t < 6; ++t) {
            NetId n = static_cast<NetId>(rng() % c.num_nets());
            Fault f{n, (rng() & 1) != 0};
            CubeList cl = generate_all_tests(c, f);
            REQUIRE(cl.complete);
            auto got = expand(cl, w);
            auto want_v = testing::brute_force_detecting_set(c, f);
            std::set<uint64_t> want(want_v.begin(), want_v.end());
            CHECK(got == want);
            // disjoint: total minterms across cubes equals set size
            CHECK(total_minterms(cl, w) == got.size());
            for (const auto& cube : cl.cubes) CHECK(pattern_detects(c, f, cube));
            ++checked;
        }
    }
    CHECK(checked >= 50);
}

TEST_CASE("x-lifting keeps cubes maximal on a point function") {
    // 6-input AND: s-a-0 at the root has exactly one detecting cube, all bits set
    Circuit c = parse_bench(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\nINPUT(f)\nOUTPUT(y)\n"
        "t1 = AND(a, b, c)\nt2 = AND(d, e, f)\ny = AND(t1, t2)\nOUTPUT(z)\nz = OR(a, f)\n");
    CubeList cl = generate_all_tests(c, Fault{c.net("y"), false});
    REQUIRE(cl.size() == 1);
    CHECK(cl.cubes[0].to_string() == "111111");
    // the complementary polarity covers everything else, as few large cubes
    CubeList c2 = generate_all_tests(c, Fault{c.net("y"), true});
    CHECK(c2.complete);
    size_t total = 0;
    for (const auto& cube : c2.cubes) total += size_t(1) << cube.num_x();
    CHECK(total == 63);
    CHECK(c2.size() <= 6);
}

TEST_CASE("max_cubes stops enumeration early") {
    Circuit c = parse_bench(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nOUTPUT(y)\ny = XOR(a, b, c, d)\n");
    AtpgOptions opts;
    opts.max_cubes = 3;
    CubeList cl = generate_all_tests(c, Fault{c.net("y"), false}, opts);
    CHECK(!cl.complete);
    CHECK(cl.size() == 3);
    for (const auto& cube : cl.cubes) CHECK(pattern_detects(c, Fault{c.net("y"), false}, cube));
}

TEST_CASE("detection cubes leave unknown key inputs free through restores") {
    Circuit c = testing::locked_pf_fixture();
    CubeList cl = generate_all_tests(c, Fault{c.net("n2"), false});
    REQUIRE(cl.complete);
    REQUIRE(cl.size() == 1);
    CHECK(cl.cubes[0].to_string() == "1001xxxxx");
}

TEST_CASE("activation counting matches truth tables") {
    Circuit c = testing::primer_circuit();
    CHECK(count_activations(c, c.net("n1"), true) == 1);
    CHECK(count_activations(c, c.net("n1"), false) == 3);
    CHECK(count_activations(c, c.net("O1"), true) == 3);   // NOR(n1,n2): a'b'+... over {a,b,c,d}? see below
    CHECK(count_activations(c, c.net("O1"), false) == 13);
    // the two polarities always partition the input space of the cone
    for (uint32_t seed : {61u, 62u}) {
        Circuit r = testing::random_circuit(seed, 6, 30);
        std::mt19937 rng(seed);
        for (int t = 0; t < 10; ++t) {
            NetId n = static_cast<NetId>(rng() % r.num_nets());
            size_t sps = r.startpoints(n).size();
            uint64_t ones = count_activations(r, n, true);
            uint64_t zeros = count_activations(r, n, false);
            CHECK(ones + zeros == (uint64_t(1) << sps));
        }
    }
}

TEST_CASE("activation counting saturates at the limit") {
    Circuit c = parse_bench(
        "INPUT(a)\nINPUT(b)\nINPUT(c)\nINPUT(d)\nINPUT(e)\nOUTPUT(y)\ny = OR(a, b, c, d, e)\n");
    CHECK(count_activations(c, c.net("y"), true) == 31);
    CHECK(count_activations(c, c.net("y"), true, 5) == 5);
    CHECK(count_activations(c, c.net("y"), false, 5) == 1);
}

TEST_CASE("sat-based generation cross-checks the search") {
    for (uint32_t seed = 200; seed < 215; ++seed) {
        Circuit c = testing::random_circuit(seed, 6, 25);
        std::mt19937 rng(seed);
        for (int t = 0; t < 8; ++t) {
            NetId n = static_cast<NetId>(rng() % c.num_nets());
            Fault f{n, (rng() & 1) != 0};
            auto via_search = generate_test(c, f, AtpgOptions{.sat_fallback = false});
            auto via_sat = sat_generate_test(c, f);
            CHECK(via_search.has_value() == via_sat.has_value());
            if (via_sat) CHECK(pattern_detects(c, f, *via_sat));
        }
    }
}
