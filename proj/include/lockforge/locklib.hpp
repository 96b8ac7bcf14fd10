#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lockforge/netlist.hpp"
#include "lockforge/simulate.hpp"

namespace lf {

class LockError : public std::runtime_error {
public:
    explicit LockError(const std::string& what) : std::runtime_error(what) {}
};

enum class Technique : uint8_t {
    SARLock,
    SARLockDTL,
    SFLL_HD0,
    SFLL_Flex,
    SFLL_Rem,
    CAC,
    CAC_DTL,
    ECE,
    AntiSAT,
    AntiSAT_DTL,
    CASLock,
    SAS,
    GenAntiSAT_Comp,
    GenAntiSAT_NonComp,
};

constexpr int kNumTechniques = 14;
const std::vector<Technique>& all_techniques();

const char* technique_name(Technique t);
std::optional<Technique> technique_from_name(std::string_view name);

/// Hard-coded techniques plant the secret key as comparator constants;
/// non-hard-coded ones admit 2^{|K|/2} interchangeable keys.
bool is_hard_coded(Technique t);

struct LockSpec {
    Technique technique = Technique::SARLock;
    int key_size = 16;
    int num_protected_patterns = 1;  // SFLL-flex words (and ECE's cube count)
    int dtl_replacements = 1;        // diversified-tree gate swaps
    int sas_blocks = 2;
    uint64_t rng_seed = 1;
    std::vector<std::string> pip_selection;  // explicit PI names, else seeded-random
    std::vector<std::string> pop_selection;  // explicit PO names, else largest cone
};

struct PortRoles {
    std::vector<std::string> pips;
    std::vector<std::string> pops;
};

struct LockArtifact {
    Circuit locked;
    std::vector<uint8_t> secret_key;  // indexed by key input index
    PortRoles roles;
    /// Hard-coded family: the protected cube(s) over the PIP ports (in
    /// roles.pips order; x entries possible for multi-cube regions).
    std::vector<TernaryPattern> protected_patterns;
    /// Non-hard-coded family: the constant K1 xor K2 over one bin.
    std::vector<uint8_t> key_mapping;
    LockSpec spec;
};

/// Lock `original` per `spec`. The locked circuit gains key inputs
/// keyinput0..keyinput<key_size-1> and loading secret_key reproduces the
/// original function exactly.
LockArtifact lock(const Circuit& original, const LockSpec& spec);

/// Brute-force enumeration of all keys whose substitution is equivalent
/// to substituting the secret key. Key sizes above `max_key_size` throw.
std::vector<std::vector<uint8_t>> correct_key_set(const LockArtifact& artifact,
                                                  int max_key_size = 16);

/// JSON manifest describing the lock without revealing the secret key.
std::string lock_manifest(const LockArtifact& artifact);
/// The secret key alone, one line, for the separate secrets file.
std::string secret_key_line(const LockArtifact& artifact);

}  // namespace lf
