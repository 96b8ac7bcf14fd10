#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lockforge/netlist.hpp"
#include "lockforge/simulate.hpp"

namespace lf::testing {

/// Four-input/one-output testability playground: two first-level gates
/// feeding a NOR, plus one dangling input.
inline Circuit primer_circuit() {
    return parse_bench(R"(
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(d)
INPUT(e)
OUTPUT(O1)
n1 = AND(a, b)
n2 = OR(c, d)
O1 = NOR(n1, n2)
)",
                       "primer");
}

/// Point-function locked fixture with a four-bit hard-coded key 1001:
/// one perturbation net with a single activation minterm and a full-width
/// XNOR/AND restore block.
inline Circuit locked_pf_fixture() {
    return parse_bench(R"(
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(d)
INPUT(e)
INPUT(keyinput0)
INPUT(keyinput1)
INPUT(keyinput2)
INPUT(keyinput3)
OUTPUT(Y)
ib = NOT(b)
ib2 = NOT(b)
ic = NOT(c)
n1 = AND(a, ic, d)
n2 = AND(n1, ib)
w = XOR(c, d)
n0 = AND(a, ib2, w)
h = AND(b, c)
g = OR(h, n0)
ym = XOR(g, n2)
e0 = XNOR(a, keyinput0)
e1 = XNOR(b, keyinput1)
e2 = XNOR(c, keyinput2)
e3 = XNOR(d, keyinput3)
r0 = AND(e0, e1)
r1 = AND(e2, e3)
r = AND(r0, r1)
Y = XOR(ym, r)
)",
                       "locked_pf");
}

/// Unlocked reference for locked_pf_fixture (key 1001).
inline Circuit locked_pf_original() {
    return parse_bench(R"(
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(d)
INPUT(e)
OUTPUT(Y)
ib = NOT(b)
w = XOR(c, d)
n0 = AND(a, ib, w)
h = AND(b, c)
Y = OR(h, n0)
)",
                       "locked_pf_orig");
}

/// Variant with a merged/absent comparator: keyinput2 is declared but
/// drives nothing, so two keys are correct (0000 and 0010) and one key
/// bit is structurally unresolvable.
inline Circuit locked_pf_merged_fixture() {
    return parse_bench(R"(
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(d)
INPUT(e)
INPUT(keyinput0)
INPUT(keyinput1)
INPUT(keyinput2)
INPUT(keyinput3)
OUTPUT(Y)
ia = NOT(a)
ib = NOT(b)
id = NOT(d)
n1 = AND(ia, ib, id)
w2 = XOR(b, d)
n0 = AND(ia, w2)
h = AND(a, c)
w = OR(h, n0)
ym = XOR(w, n1)
e0 = XNOR(a, keyinput0)
e1 = XNOR(b, keyinput1)
e3 = XNOR(d, keyinput3)
r0 = AND(e0, e1)
r = AND(r0, e3)
Y = XOR(ym, r)
)",
                       "locked_pf_merged");
}

inline Circuit locked_pf_merged_original() {
    return parse_bench(R"(
INPUT(a)
INPUT(b)
INPUT(c)
INPUT(d)
INPUT(e)
OUTPUT(Y)
ia = NOT(a)
w2 = XOR(b, d)
n0 = AND(ia, w2)
h = AND(a, c)
Y = OR(h, n0)
)",
                       "locked_pf_merged_orig");
}

/// Pre-synthesis two-block locking unit over XOR/XNOR entry gates and
/// AND trees; eight key inputs, planted key 01101011. Host logic keeps a
/// second untouched output.
inline Circuit nhc_pre_fixture() {
    return parse_bench(R"(
INPUT(I0)
INPUT(I1)
INPUT(I2)
INPUT(I3)
INPUT(I4)
INPUT(keyinput0)
INPUT(keyinput1)
INPUT(keyinput2)
INPUT(keyinput3)
INPUT(keyinput4)
INPUT(keyinput5)
INPUT(keyinput6)
INPUT(keyinput7)
OUTPUT(O1)
OUTPUT(O2)
x10 = XOR(I0, keyinput0)
x11 = XNOR(I1, keyinput1)
x12 = XNOR(I2, keyinput2)
x13 = XOR(I3, keyinput3)
t1 = AND(x10, x11)
t2 = AND(x12, x13)
gq = AND(t1, t2)
x20 = XNOR(I0, keyinput4)
x21 = XOR(I1, keyinput5)
x22 = XNOR(I2, keyinput6)
x23 = XNOR(I3, keyinput7)
u1 = AND(x20, x21)
u2 = AND(x22, x23)
g2 = AND(u1, u2)
gb = NOT(g2)
flip = AND(gq, gb)
hh1 = AND(I0, I1)
hh2 = OR(I2, I4)
ho = XOR(hh1, hh2)
O1 = XOR(ho, flip)
O2 = NAND(I1, I3)
)",
                       "nhc_pre");
}

/// Post-synthesis re-expression of nhc_pre_fixture's locking unit with
/// NAND/NOR/OR gates; same function, same planted key.
inline Circuit nhc_post_fixture() {
    return parse_bench(R"(
INPUT(I0)
INPUT(I1)
INPUT(I2)
INPUT(I3)
INPUT(I4)
INPUT(keyinput0)
INPUT(keyinput1)
INPUT(keyinput2)
INPUT(keyinput3)
INPUT(keyinput4)
INPUT(keyinput5)
INPUT(keyinput6)
INPUT(keyinput7)
OUTPUT(O1)
OUTPUT(O2)
e0 = XOR(I0, keyinput0)
e1a = XOR(I1, keyinput1)
e1 = NOT(e1a)
e2a = XOR(I2, keyinput2)
e2 = NOT(e2a)
e3 = XOR(I3, keyinput3)
t1 = NAND(e0, e1)
t2 = NAND(e2, e3)
gq = NOR(t1, t2)
f0 = XNOR(I0, keyinput4)
f1 = XOR(I1, keyinput5)
f2 = XNOR(I2, keyinput6)
f3 = XNOR(I3, keyinput7)
u1 = NAND(f0, f1)
u2 = NAND(f2, f3)
gb = OR(u1, u2)
flip = AND(gq, gb)
hh1 = AND(I0, I1)
hh2 = OR(I2, I4)
ho = XOR(hh1, hh2)
O1 = XOR(ho, flip)
O2 = NAND(I1, I3)
)",
                       "nhc_post");
}

/// Diversified variant: two key inputs per entry gate on the first input
/// pair, so four key bits lack per-bit structural attributes. Planted key
/// 11100011; correct keys satisfy k0^k1 == k4^k5, k2 == k6, k3 == !k7.
inline Circuit nhc_shared_fixture() {
    return parse_bench(R"(
INPUT(I0)
INPUT(I1)
INPUT(I2)
INPUT(I3)
INPUT(I4)
INPUT(keyinput0)
INPUT(keyinput1)
INPUT(keyinput2)
INPUT(keyinput3)
INPUT(keyinput4)
INPUT(keyinput5)
INPUT(keyinput6)
INPUT(keyinput7)
OUTPUT(O1)
OUTPUT(O2)
p01 = XOR(I0, I1)
q01 = XOR(keyinput0, keyinput1)
gA = XNOR(p01, q01)
e2 = XOR(I2, keyinput2)
i2 = NOT(e2)
e3 = XOR(I3, keyinput3)
t2 = AND(i2, e3)
gq = AND(gA, t2)
q45 = XOR(keyinput4, keyinput5)
gB = XNOR(p01, q45)
f2 = XNOR(I2, keyinput6)
f3 = XNOR(I3, keyinput7)
u2 = AND(f2, f3)
g2 = AND(gB, u2)
gb = NOT(g2)
flip = AND(gq, gb)
hh1 = AND(I0, I1)
hh2 = OR(I2, I4)
ho = XOR(hh1, hh2)
O1 = XOR(ho, flip)
O2 = NAND(I1, I3)
)",
                       "nhc_shared");
}

/// Unlocked reference shared by the three locking-unit fixtures.
inline Circuit nhc_original() {
    return parse_bench(R"(
INPUT(I0)
INPUT(I1)
INPUT(I2)
INPUT(I3)
INPUT(I4)
OUTPUT(O1)
OUTPUT(O2)
hh1 = AND(I0, I1)
hh2 = OR(I2, I4)
O1 = XOR(hh1, hh2)
O2 = NAND(I1, I3)
)",
                       "nhc_orig");
}

inline std::vector<uint8_t> key_bits(std::string_view s) {
    std::vector<uint8_t> v;
    for (char ch : s) v.push_back(ch == '1' ? 1 : 0);
    return v;
}

/// Deterministic random combinational circuit. Every PI feeds at least
/// one gate eventually (no guarantee, but fanin picks favour recency);
/// all sink nets become POs.
inline Circuit random_circuit(uint32_t seed, int num_inputs, int num_gates, int max_outputs = 8) {
    std::mt19937 rng(seed);
    CircuitBuilder bld("rand" + std::to_string(seed));
    std::vector<NetId> pool;
    for (int i = 0; i < num_inputs; ++i) {
        NetId n = bld.net("in" + std::to_string(i));
        bld.mark_input(n);
        pool.push_back(n);
    }
    std::vector<bool> used(static_cast<size_t>(num_inputs + num_gates), false);
    auto pick = [&](size_t hi) {
        // bias towards recent nets so depth grows
        std::uniform_int_distribution<size_t> d(0, hi - 1);
        size_t a = d(rng), b = d(rng);
        return pool[std::max(a, b)];
    };
    const GateKind kinds[] = {GateKind::And, GateKind::Nand, GateKind::Or, GateKind::Nor,
                              GateKind::Xor, GateKind::Xnor, GateKind::Inv, GateKind::Buf};
    for (int g = 0; g < num_gates; ++g) {
        GateKind k = kinds[std::uniform_int_distribution<int>(0, 7)(rng)];
        NetId out = bld.net("g" + std::to_string(g));
        std::vector<NetId> ins;
        int arity = (k == GateKind::Inv || k == GateKind::Buf)
                        ? 1
                        : std::uniform_int_distribution<int>(2, 3)(rng);
        for (int i = 0; i < arity; ++i) {
            NetId in = pick(pool.size());
            ins.push_back(in);
            used[static_cast<size_t>(in)] = true;
        }
        bld.add_gate(k, out, std::move(ins));
        pool.push_back(out);
    }
    int outs = 0;
    for (size_t i = pool.size(); i-- > static_cast<size_t>(num_inputs) && outs < max_outputs;) {
        if (!used[i]) {
            bld.mark_output(pool[i]);
            ++outs;
        }
    }
    if (outs == 0) {
        bld.mark_output(pool.back());
    }
    return bld.build();
}

/// Exhaustive detecting-minterm set over PI+KI space (width <= 20).
inline std::vector<uint64_t> brute_force_detecting_set(const Circuit& c, Fault f) {
    size_t w = c.pi_ki_order().size();
    std::vector<uint64_t> out;
    for (uint64_t m = 0; m < (uint64_t(1) << w); ++m) {
        std::vector<uint8_t> bits(w);
        for (size_t i = 0; i < w; ++i) bits[i] = (m >> i) & 1;
        if (eval(c, bits) != eval_faulty(c, f, bits)) out.push_back(m);
    }
    return out;
}

}  // namespace lf::testing
