#include "lockforge/locklib.hpp"

#include <algorithm>
#include <random>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"
#include "lockforge/resynth.hpp"
#include "lockforge/satcore.hpp"

namespace lf {

const std::vector<Technique>& all_techniques() {
    static const std::vector<Technique> v = {
        Technique::SARLock,     Technique::SARLockDTL,  Technique::SFLL_HD0,
        Technique::SFLL_Flex,   Technique::SFLL_Rem,    Technique::CAC,
        Technique::CAC_DTL,     Technique::ECE,         Technique::AntiSAT,
        Technique::AntiSAT_DTL, Technique::CASLock,     Technique::SAS,
        Technique::GenAntiSAT_Comp, Technique::GenAntiSAT_NonComp,
    };
    return v;
}

const char* technique_name(Technique t) {
    switch (t) {
        case Technique::SARLock: return "sarlock";
        case Technique::SARLockDTL: return "sarlock-dtl";
        case Technique::SFLL_HD0: return "sfll-hd0";
        case Technique::SFLL_Flex: return "sfll-flex";
        case Technique::SFLL_Rem: return "sfll-rem";
        case Technique::CAC: return "cac";
        case Technique::CAC_DTL: return "cac-dtl";
        case Technique::ECE: return "ece";
        case Technique::AntiSAT: return "anti-sat";
        case Technique::AntiSAT_DTL: return "anti-sat-dtl";
        case Technique::CASLock: return "caslock";
        case Technique::SAS: return "sas";
        case Technique::GenAntiSAT_Comp: return "gen-anti-sat-comp";
        case Technique::GenAntiSAT_NonComp: return "gen-anti-sat-noncomp";
    }
    return "?";
}

std::optional<Technique> technique_from_name(std::string_view name) {
    for (Technique t : all_techniques())
        if (name == technique_name(t)) return t;
    return std::nullopt;
}

bool is_hard_coded(Technique t) {
    switch (t) {
        case Technique::SARLock:
        case Technique::SARLockDTL:
        case Technique::SFLL_HD0:
        case Technique::SFLL_Flex:
        case Technique::SFLL_Rem:
        case Technique::CAC:
        case Technique::CAC_DTL:
        case Technique::ECE: return true;
        default: return false;
    }
}

namespace {

/// Clone of the original with selected PO driver nets renamed, ready for
/// locking logic to be appended under collision-free names.
struct LockBuild {
    CircuitBuilder bld;
    std::unordered_set<std::string> used;
    std::unordered_map<std::string, std::string> enc;  // pop name -> renamed driver

    LockBuild(const Circuit& c, const std::vector<std::string>& pops) : bld(c.name) {
        for (NetId n = 0; n < c.num_nets(); ++n) used.insert(c.net_name(n));
        std::unordered_map<std::string, std::string> rename;
        for (const std::string& p : pops) {
            NetId n = c.net(p);
            if (c.driver(n) < 0 || c.startpoints(n).empty())
                throw LockError("degenerate protected output '" + p + "'");
            rename[p] = fresh(p + "_enc");
            enc[p] = rename[p];
        }
        for (NetId n : c.inputs()) bld.mark_input(bld.net(c.net_name(n)));
        if (!c.key_inputs().empty()) throw LockError("circuit is already locked");
        auto name_of = [&](NetId n) {
            auto it = rename.find(c.net_name(n));
            return it != rename.end() ? it->second : c.net_name(n);
        };
        for (const Gate& g : c.gates()) {
            std::vector<NetId> ins;
            for (NetId in : g.ins) ins.push_back(bld.net(name_of(in)));
            bld.add_gate(g.kind, bld.net(name_of(g.out)), std::move(ins));
        }
        // original PO order is preserved; renamed drivers get their gate later
        for (NetId o : c.outputs()) bld.mark_output(bld.net(c.net_name(o)));
    }

    std::string fresh(std::string base) {
        while (used.count(base)) base += "_";
        used.insert(base);
        return base;
    }

    std::string gate(GateKind k, const std::string& base, const std::vector<std::string>& ins) {
        std::string out = fresh(base);
        std::vector<NetId> ids;
        for (const auto& i : ins) ids.push_back(bld.net(i));
        bld.add_gate(k, bld.net(out), std::move(ids));
        return out;
    }

    void gate_named(GateKind k, const std::string& out, const std::vector<std::string>& ins) {
        std::vector<NetId> ids;
        for (const auto& i : ins) ids.push_back(bld.net(i));
        bld.add_gate(k, bld.net(out), std::move(ids));
    }

    std::string key_input(int idx) {
        std::string nm = "keyinput" + std::to_string(idx);
        if (used.count(nm)) throw LockError("net name '" + nm + "' already taken");
        used.insert(nm);
        bld.mark_input(bld.net(nm));
        return nm;
    }

    /// Left-deep chain over `leaves` with per-stage gate kinds
    /// (kinds.size() == leaves.size() - 1).
    std::string tree(const std::vector<std::string>& leaves, const std::vector<GateKind>& kinds,
                     const std::string& prefix) {
        std::string acc = leaves[0];
        for (size_t i = 1; i < leaves.size(); ++i)
            acc = gate(kinds[i - 1], prefix + std::to_string(i), {acc, leaves[i]});
        return acc;
    }
};

std::vector<uint8_t> random_bits(std::mt19937_64& rng, int n) {
    std::vector<uint8_t> v(n);
    for (auto& b : v) b = rng() & 1;
    return v;
}

std::vector<std::string> select_pops(const Circuit& c, const LockSpec& spec, size_t count) {
    if (!spec.pop_selection.empty()) {
        if (spec.pop_selection.size() != count)
            throw LockError("pop_selection must name exactly " + std::to_string(count) + " outputs");
        for (const auto& p : spec.pop_selection) {
            NetId n = c.net(p);
            if (!c.is_output(n)) throw LockError("'" + p + "' is not a primary output");
        }
        return spec.pop_selection;
    }
    // largest fanin cone first; skip degenerate (input-less) cones
    std::vector<std::pair<size_t, NetId>> ranked;
    for (NetId o : c.outputs())
        if (c.driver(o) >= 0 && !c.startpoints(o).empty())
            ranked.emplace_back(c.startpoints(o).size(), o);
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    if (ranked.size() < count)
        throw LockError("need " + std::to_string(count) + " non-degenerate outputs, have " +
                        std::to_string(ranked.size()));
    std::vector<std::string> pops;
    for (size_t i = 0; i < count; ++i) pops.push_back(c.net_name(ranked[i].second));
    return pops;
}

std::vector<std::string> select_pips(const Circuit& c, const LockSpec& spec, const std::string& pop,
                                     size_t count, std::mt19937_64& rng) {
    if (!spec.pip_selection.empty()) {
        if (spec.pip_selection.size() != count)
            throw LockError("pip_selection must name exactly " + std::to_string(count) + " inputs");
        std::unordered_set<std::string> seen;
        for (const auto& p : spec.pip_selection) {
            NetId n = c.net(p);
            if (!c.is_input(n)) throw LockError("'" + p + "' is not a primary input");
            if (!seen.insert(p).second) throw LockError("duplicate protected input '" + p + "'");
        }
        return spec.pip_selection;
    }
    if (c.inputs().size() < count)
        throw LockError("need " + std::to_string(count) + " primary inputs, have " +
                        std::to_string(c.inputs().size()));
    // prefer PIs already in the protected cone, pad with the rest
    std::unordered_set<NetId> cone;
    for (NetId n : c.startpoints(c.net(pop))) cone.insert(n);
    std::vector<std::string> in_cone, others;
    for (NetId n : c.inputs())
        (cone.count(n) ? in_cone : others).push_back(c.net_name(n));
    std::shuffle(in_cone.begin(), in_cone.end(), rng);
    std::shuffle(others.begin(), others.end(), rng);
    in_cone.insert(in_cone.end(), others.begin(), others.end());
    in_cone.resize(count);
    return in_cone;
}

std::vector<GateKind> tree_kinds(Technique t, int leaves, int dtl, std::mt19937_64& rng) {
    int stages = leaves - 1;
    std::vector<GateKind> kinds(stages, GateKind::And);
    switch (t) {
        case Technique::SARLockDTL:
        case Technique::CAC_DTL:
        case Technique::AntiSAT_DTL: {
            // diversified gates stay in the upper half of the chain so the
            // comparator keeps a wide undisturbed prefix
            int lo = (stages + 1) / 2;
            if (dtl > stages - lo)
                throw LockError("dtl_replacements must fit the upper half of the comparator tree");
            GateKind repl = t == Technique::AntiSAT_DTL ? GateKind::Xor : GateKind::Or;
            std::vector<int> pos;
            for (int i = lo; i < stages; ++i) pos.push_back(i);
            std::shuffle(pos.begin(), pos.end(), rng);
            for (int i = 0; i < dtl; ++i) kinds[pos[i]] = repl;
            break;
        }
        case Technique::CASLock:
        case Technique::GenAntiSAT_Comp:
            for (auto& k : kinds) k = (rng() & 1) ? GateKind::And : GateKind::Or;
            // a constant-free mix needs at least one of each when possible
            if (stages >= 2) {
                kinds[0] = GateKind::And;
                kinds[stages - 1] = GateKind::Or;
                std::shuffle(kinds.begin(), kinds.end(), rng);
            }
            break;
        default: break;
    }
    return kinds;
}

LockArtifact lock_hard_coded(const Circuit& original, const LockSpec& spec) {
    std::mt19937_64 rng(spec.rng_seed);
    Technique t = spec.technique;
    int num_pp = t == Technique::SFLL_Flex ? spec.num_protected_patterns : 1;
    if (num_pp < 1) throw LockError("num_protected_patterns must be >= 1");
    if (spec.key_size % num_pp != 0)
        throw LockError("key_size must be a multiple of num_protected_patterns");
    int w = spec.key_size / num_pp;
    if (t == Technique::ECE && w < 2) throw LockError("ece needs key_size >= 2");

    std::string pop = select_pops(original, spec, 1)[0];
    std::vector<std::string> pips = select_pips(original, spec, pop, w, rng);

    // protected patterns; flex words pairwise Hamming distance >= 2
    std::vector<std::vector<uint8_t>> pps;
    while (static_cast<int>(pps.size()) < num_pp) {
        auto cand = random_bits(rng, w);
        bool ok = true;
        for (const auto& prev : pps) {
            int hd = 0;
            for (int i = 0; i < w; ++i) hd += prev[i] != cand[i];
            if (hd < 2) ok = false;
        }
        if (ok) pps.push_back(std::move(cand));
    }

    auto kinds = tree_kinds(t, w, spec.dtl_replacements, rng);
    // SARLock-DTL diversifies the key-side comparator; the input-side match
    // tree stays a plain AND chain
    std::vector<GateKind> mkinds(w > 1 ? w - 1 : 0, GateKind::And);
    if (t == Technique::SARLockDTL) std::swap(kinds, mkinds);

    LockBuild lb(original, {pop});
    std::vector<std::string> keys;
    for (int i = 0; i < spec.key_size; ++i) keys.push_back(lb.key_input(i));

    std::string host = lb.enc.at(pop);

    // restore side: per-word comparator over XNOR key gates
    auto restore_word = [&](int word) {
        std::vector<std::string> es;
        for (int i = 0; i < w; ++i)
            es.push_back(lb.gate(GateKind::Xnor, "ll_e" + std::to_string(word * w + i),
                                 {pips[i], keys[word * w + i]}));
        if (t == Technique::ECE) {
            std::string tail = lb.gate(GateKind::Or, "ll_etail", {es[w - 2], es[w - 1]});
            std::vector<std::string> leaves(es.begin(), es.end() - 2);
            leaves.push_back(tail);
            std::vector<GateKind> ek(leaves.size() - 1, GateKind::And);
            return leaves.size() == 1 ? leaves[0]
                                      : lb.tree(leaves, ek, "ll_rt" + std::to_string(word) + "_");
        }
        return lb.tree(es, kinds, "ll_rt" + std::to_string(word) + "_");
    };
    // perturb side: same tree over PIP literals of the protected pattern
    auto perturb_word = [&](int word) {
        std::vector<std::string> ls;
        for (int i = 0; i < w; ++i)
            ls.push_back(pps[word][i] ? pips[i]
                                      : lb.gate(GateKind::Inv, "ll_l" + std::to_string(word * w + i),
                                                {pips[i]}));
        if (t == Technique::ECE) {
            std::string tail = lb.gate(GateKind::Or, "ll_ltail", {ls[w - 2], ls[w - 1]});
            std::vector<std::string> leaves(ls.begin(), ls.end() - 2);
            leaves.push_back(tail);
            std::vector<GateKind> ek(leaves.size() - 1, GateKind::And);
            return leaves.size() == 1 ? leaves[0]
                                      : lb.tree(leaves, ek, "ll_pt" + std::to_string(word) + "_");
        }
        return lb.tree(ls, kinds, "ll_pt" + std::to_string(word) + "_");
    };

    std::vector<TernaryPattern> recorded;
    auto record_full = [&](const std::vector<uint8_t>& pp) {
        TernaryPattern p(w);
        for (int i = 0; i < w; ++i) p[i] = trit_from_bool(pp[i]);
        recorded.push_back(p);
    };

    if (t == Technique::SARLock || t == Technique::SARLockDTL || t == Technique::ECE) {
        // flip = match(PIP, KI) and KI != K*; the key is the pattern itself
        std::string match = restore_word(0);
        std::vector<std::string> ms;
        for (int i = 0; i < w; ++i)
            ms.push_back(pps[0][i] ? keys[i]
                                   : lb.gate(GateKind::Inv, "ll_m" + std::to_string(i), {keys[i]}));
        std::string eqk = w == 1 ? ms[0] : lb.tree(ms, mkinds, "ll_mt_");
        std::string neq = lb.gate(GateKind::Inv, "ll_neq", {eqk});
        std::string flip = lb.gate(GateKind::And, "ll_flip", {match, neq});
        lb.gate_named(GateKind::Xor, pop, {host, flip});
        if (t == Technique::ECE) {
            TernaryPattern c1(w, Trit::X), c2(w, Trit::X);
            for (int i = 0; i < w - 1; ++i) c1[i] = trit_from_bool(pps[0][i]);
            for (int i = 0; i < w - 2; ++i) c2[i] = trit_from_bool(pps[0][i]);
            c2[w - 2] = trit_from_bool(!pps[0][w - 2]);
            c2[w - 1] = trit_from_bool(pps[0][w - 1]);
            recorded.push_back(c1);
            recorded.push_back(c2);
        } else {
            record_full(pps[0]);
        }
    } else {
        // perturb/restore family: ym = host ^ perturb, PO = ym ^ restore
        std::vector<std::string> perts, rests;
        for (int word = 0; word < num_pp; ++word) {
            perts.push_back(perturb_word(word));
            rests.push_back(restore_word(word));
            record_full(pps[word]);
        }
        std::vector<GateKind> ork(num_pp > 1 ? num_pp - 1 : 0, GateKind::Or);
        std::string pert = num_pp == 1 ? perts[0] : lb.tree(perts, ork, "ll_por_");
        std::string rest = num_pp == 1 ? rests[0] : lb.tree(rests, ork, "ll_ror_");
        std::string ym = lb.gate(GateKind::Xor, "ll_ym", {host, pert});
        lb.gate_named(GateKind::Xor, pop, {ym, rest});
    }
    Circuit locked = lb.bld.build();

    if (t == Technique::SFLL_Rem) {
        // erase the syntactic perturb comparator: resynthesize C_mod
        // (host ^ perturb) alone, then reattach the restore unit
        LockBuild mb(original, {pop});
        std::string mhost = mb.enc.at(pop);
        std::vector<std::string> ls;
        for (int i = 0; i < w; ++i)
            ls.push_back(pps[0][i] ? pips[i]
                                   : mb.gate(GateKind::Inv, "ll_l" + std::to_string(i), {pips[i]}));
        std::string pert = mb.tree(ls, kinds, "ll_pt0_");
        mb.gate_named(GateKind::Xor, pop, {mhost, pert});

        Circuit cmod = mb.bld.build();
        cmod = flatten_cone(cmod, cmod.net(pop), 18);
        cmod = sweep(remap_standard(cmod));
        // reattach the restore XOR chain on top of the resynthesized C_mod
        LockBuild rb(cmod, {pop});
        std::vector<std::string> rkeys;
        for (int i = 0; i < spec.key_size; ++i) rkeys.push_back(rb.key_input(i));
        std::vector<std::string> es;
        for (int i = 0; i < w; ++i)
            es.push_back(rb.gate(GateKind::Xnor, "ll_e" + std::to_string(i), {pips[i], rkeys[i]}));
        std::string rest = rb.tree(es, kinds, "ll_rt0_");
        rb.gate_named(GateKind::Xor, pop, {rb.enc.at(pop), rest});

        locked = rb.bld.build();
    }

    LockArtifact art;
    art.locked = std::move(locked);
    for (int word = 0; word < num_pp; ++word)
        for (int i = 0; i < w; ++i) art.secret_key.push_back(pps[word][i]);
    art.roles.pips = pips;
    art.roles.pops = {pop};
    art.protected_patterns = std::move(recorded);
    art.spec = spec;
    return art;
}

LockArtifact lock_non_hard_coded(const Circuit& original, const LockSpec& spec) {
    std::mt19937_64 rng(spec.rng_seed);
    Technique t = spec.technique;
    if (spec.key_size % 2 != 0) throw LockError("key_size must be even for this technique");
    int blocks = t == Technique::SAS ? spec.sas_blocks : 1;
    if (blocks < 1) throw LockError("sas_blocks must be >= 1");
    if (spec.key_size % (2 * blocks) != 0)
        throw LockError("key_size must divide evenly across blocks");
    int n = spec.key_size / (2 * blocks);  // key bits per bin per block
    if (n < 2) throw LockError("each bin needs at least 2 key bits");

    std::vector<std::string> pops = select_pops(original, spec, blocks);
    LockBuild lb(original, pops);
    std::vector<std::string> keys;
    for (int i = 0; i < spec.key_size; ++i) keys.push_back(lb.key_input(i));

    LockArtifact art;
    art.roles.pops = pops;
    art.spec = spec;

    for (int b = 0; b < blocks; ++b) {
        auto pips = select_pips(original, spec, pops[b], n, rng);
        for (const auto& p : pips) art.roles.pips.push_back(p);
        auto s1 = random_bits(rng, n), s2 = random_bits(rng, n);
        auto k1 = random_bits(rng, n);
        std::vector<uint8_t> k2(n);
        for (int i = 0; i < n; ++i) k2[i] = k1[i] ^ s1[i] ^ s2[i];
        int base = b * 2 * n;
        std::string bs = std::to_string(b);

        std::vector<std::string> vs, ws;
        for (int i = 0; i < n; ++i) {
            vs.push_back(lb.gate(s1[i] ? GateKind::Xnor : GateKind::Xor,
                                 "ll_v" + bs + "_" + std::to_string(i), {pips[i], keys[base + i]}));
            ws.push_back(lb.gate(s2[i] ? GateKind::Xnor : GateKind::Xor,
                                 "ll_w" + bs + "_" + std::to_string(i),
                                 {pips[i], keys[base + n + i]}));
        }
        auto kinds = tree_kinds(t, n, spec.dtl_replacements, rng);
        std::string gq = lb.tree(vs, kinds, "ll_g" + bs + "_");
        std::string flip;
        if (t == Technique::GenAntiSAT_NonComp) {
            // f independent of g: f = NOR-style zero-detector on the w bin
            std::vector<GateKind> ok(n - 1, GateKind::Or);
            std::string g2 = lb.tree(ws, ok, "ll_h" + bs + "_");
            std::string fb = lb.gate(GateKind::Inv, "ll_fb" + bs, {g2});
            flip = lb.gate(GateKind::And, "ll_flip" + bs, {gq, fb});
        } else {
            std::string g2 = lb.tree(ws, kinds, "ll_h" + bs + "_");
            std::string gb = lb.gate(GateKind::Inv, "ll_gb" + bs, {g2});
            flip = lb.gate(GateKind::And, "ll_flip" + bs, {gq, gb});
        }
        lb.gate_named(GateKind::Xor, pops[b], {lb.enc.at(pops[b]), flip});


        for (int i = 0; i < n; ++i) art.secret_key.push_back(k1[i]);
        for (int i = 0; i < n; ++i) art.secret_key.push_back(k2[i]);
        for (int i = 0; i < n; ++i) art.key_mapping.push_back(s1[i] ^ s2[i]);
    }
    art.locked = lb.bld.build();
    return art;
}

}  // namespace

LockArtifact lock(const Circuit& original, const LockSpec& spec) {
    if (spec.key_size <= 0) throw LockError("key_size must be positive");
    return is_hard_coded(spec.technique) ? lock_hard_coded(original, spec)
                                         : lock_non_hard_coded(original, spec);
}

std::vector<std::vector<uint8_t>> correct_key_set(const LockArtifact& artifact, int max_key_size) {
    int k = static_cast<int>(artifact.secret_key.size());
    if (k > max_key_size) throw LockError("key too large for brute-force enumeration");
    TernaryPattern secret(k);
    for (int i = 0; i < k; ++i) secret[i] = trit_from_bool(artifact.secret_key[i]);
    Circuit reference = substitute_key(artifact.locked, secret);
    std::vector<std::vector<uint8_t>> out;
    for (uint64_t m = 0; m < (uint64_t(1) << k); ++m) {
        TernaryPattern key(k);
        std::vector<uint8_t> bits(k);
        for (int i = 0; i < k; ++i) {
            bits[i] = (m >> i) & 1;
            key[i] = trit_from_bool(bits[i]);
        }
        Circuit cand = substitute_key(artifact.locked, key);
        if (!check_equivalence(reference, cand).has_value()) out.push_back(std::move(bits));
    }
    return out;
}

std::string lock_manifest(const LockArtifact& artifact) {
    nlohmann::json j;
    j["circuit"] = artifact.locked.name;
    j["technique"] = technique_name(artifact.spec.technique);
    j["family"] = is_hard_coded(artifact.spec.technique) ? "hard-coded" : "non-hard-coded";
    j["key_size"] = artifact.spec.key_size;
    j["rng_seed"] = artifact.spec.rng_seed;
    j["num_protected_patterns"] = artifact.spec.num_protected_patterns;
    j["dtl_replacements"] = artifact.spec.dtl_replacements;
    j["sas_blocks"] = artifact.spec.sas_blocks;
    j["pips"] = artifact.roles.pips;
    j["pops"] = artifact.roles.pops;
    std::vector<std::string> pats;
    for (const auto& p : artifact.protected_patterns) pats.push_back(p.to_string());
    j["protected_patterns"] = pats;
    return j.dump(2) + "\n";
}

std::string secret_key_line(const LockArtifact& artifact) {
    std::string s;
    for (uint8_t b : artifact.secret_key) s += b ? '1' : '0';
    s += '\n';
    return s;
}

}  // namespace lf
