#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "lockforge/netlist.hpp"
#include "lockforge/report.hpp"
#include "lockforge/simulate.hpp"

namespace lf {

class AttackError : public std::runtime_error {
public:
    explicit AttackError(const std::string& what) : std::runtime_error(what) {}
};

// ---- hard-coded family ----------------------------------------------------

/// KI -> PIP pairs harvested from two-startpoint comparator nets.
struct KeyInputMap {
    std::vector<NetId> pip_of;      // by key index; kNoNet when unmapped
    std::vector<NetId> map_net_of;  // the comparator net that paired them
    std::unordered_map<NetId, std::vector<int>> keys_on_pip;  // key indices, ascending

    bool mapped(int key_index) const { return pip_of[key_index] != kNoNet; }
};

struct CandidateNet {
    NetId net = kNoNet;
    int pip_coverage = 0;           // distinct PIPs (KIs when direct) among startpoints
    uint64_t activation_count = 0;  // rarer activation side, saturated
    bool direct = false;            // startpoints are key inputs only
    int level = 0;
};

/// All nets lying in the fanin cones of the key inputs' protected outputs,
/// topologically sorted.
std::vector<NetId> extract_nets(const Circuit& c);

KeyInputMap key_input_mapping(const Circuit& c, const std::vector<NetId>& nets);

/// Candidate key-revealing nets: primary-input startpoints confined to the
/// mapped PIPs, endpoints confined to the protected outputs, coverage above
/// half the protected-pattern width, and an activation count within num_pp.
/// Ordered by descending coverage, then descending logic level.
std::vector<CandidateNet> candidate_nets(const Circuit& c, const std::vector<NetId>& nets,
                                         const KeyInputMap& map, int num_pp);

/// Read key bits out of accepted detecting cubes (aligned to pi_ki_order).
/// direct mode indexes the key inputs themselves; otherwise bits are read
/// at the mapped PIP position. Comparator bits consumed by a diversified
/// OR/NOR invert the relation; unreadable bits stay x.
TernaryPattern key_extraction(const Circuit& c, const std::vector<TernaryPattern>& cubes,
                              const KeyInputMap& map, bool direct, int num_pp);

AttackReport attack_hard_coded(const Circuit& locked, const Oracle* oracle, int num_pp = 1);

// ---- non-hard-coded family ------------------------------------------------

enum class EntryGate : uint8_t { Xor, Xnor, Unknown };

struct KeyAttribute {
    int key_index = -1;
    int bin = 0;                 // 1 or 2; 0 = unknown
    EntryGate gate = EntryGate::Unknown;
    int inversion_parity = -1;   // 0 even, 1 odd, -1 unknown/ambiguous
    std::string entry_name;      // entry-gate output net in the swept unit
    std::string side_name;       // the entry gate's non-key input net

    bool known() const { return bin != 0 && gate != EntryGate::Unknown && inversion_parity >= 0; }
};

struct LockingUnit {
    Circuit cone;                  // extracted at cn; key inputs keep their role
    NetId cn = kNoNet;             // critical wire in the locked circuit
    std::vector<int> key_indices;  // global key indices reaching this unit
};

/// The critical-wire cone: the net whose startpoints contain every key
/// input, with endpoints confined to the protected outputs, at minimal
/// gate depth from the key inputs. Throws AttackError when none qualifies.
LockingUnit extract_locking_unit(const Circuit& locked);

/// Per-block variant: key inputs are grouped by the outputs they reach and
/// one unit is extracted per group (multi-output locking).
std::vector<LockingUnit> extract_locking_units(const Circuit& locked);

std::vector<KeyAttribute> get_attributes(const LockingUnit& unit);

/// The eight-row bin/gate/inversion table.
uint8_t key_mapping(int bin, EntryGate gate, bool inverted);

AttackReport attack_non_hard_coded(const Circuit& locked, const Oracle* oracle);

/// Family dispatcher: "hc", "nhc", or "auto" (probe the hard-coded path
/// first; fall back to the locking-unit path when no candidate accepts).
AttackReport attack(const Circuit& locked, const Oracle* oracle,
                    const std::string& family = "auto", int num_pp = 1);

}  // namespace lf
