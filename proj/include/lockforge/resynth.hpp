#pragma once

#include <string>

#include "lockforge/netlist.hpp"

namespace lf {

class ResynthError : public std::runtime_error {
public:
    explicit ResynthError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when the configured external synthesis command is unavailable or
/// produced output that fails the equivalence check.
class ExternalToolError : public ResynthError {
public:
    explicit ExternalToolError(const std::string& what) : ResynthError(what) {}
};

/// Decompose wide gates into 2-input trees and drop internal buffers.
/// Functionally equivalent, standard gates + INV only.
Circuit remap_standard(const Circuit& c);

/// Constant propagation, inverter-pair collapsing, duplicate-logic merging
/// via structural hashing, and dead-logic removal. Idempotent: sweeping a
/// swept circuit reproduces it gate for gate.
Circuit sweep(const Circuit& c);

/// Collapse the fanin cone of output net o to its truth table and rebuild
/// it (Shannon decomposition with sharing) when the cone has at most
/// max_inputs startpoints; larger cones get sweep + remap only.
Circuit flatten_cone(const Circuit& c, NetId o, int max_inputs = 24);

/// Write BENCH, run `command_template` with {in}/{out} substituted, parse
/// the result and verify equivalence. Throws ExternalToolError on a
/// missing tool, unparsable output, or non-equivalence.
Circuit external_synth_roundtrip(const Circuit& c, const std::string& command_template);

/// Named internal pass sequences: "light", "medium", "heavy".
Circuit apply_recipe(const Circuit& c, const std::string& recipe);

}  // namespace lf
