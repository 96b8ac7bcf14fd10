#pragma once

#include <cstdint>
#include <optional>

#include "lockforge/netlist.hpp"
#include "lockforge/simulate.hpp"

namespace lf {

struct AtpgOptions {
    uint64_t backtrack_limit = 1'000'000;  // search nodes before SAT fallback / bail
    size_t max_cubes = SIZE_MAX;           // stop enumeration early once exceeded
    bool sat_fallback = true;
};

/// Detecting patterns for a stuck-at fault, as pairwise-disjoint maximal
/// cubes over pi_ki_order. complete is false when enumeration stopped at
/// max_cubes or the node budget; the cubes returned are still all valid.
struct CubeList {
    std::vector<TernaryPattern> cubes;
    bool complete = true;

    bool empty() const { return cubes.empty(); }
    size_t size() const { return cubes.size(); }
};

/// One detecting pattern (x-maximised), or nullopt if untestable.
std::optional<TernaryPattern> generate_test(const Circuit& c, Fault f, const AtpgOptions& opts = {});

/// Exhaustive disjoint-cube enumeration of the detecting set.
CubeList generate_all_tests(const Circuit& c, Fault f, const AtpgOptions& opts = {});

/// Number of minterms over startpoints(n) that force net n to value v,
/// saturating at limit.
uint64_t count_activations(const Circuit& c, NetId n, bool v, uint64_t limit = UINT64_MAX);

/// SAT-based test generation: fully-specified pattern or nullopt when the
/// fault is provably untestable. Used as oracle cross-check and fallback.
std::optional<TernaryPattern> sat_generate_test(const Circuit& c, Fault f);

}  // namespace lf
