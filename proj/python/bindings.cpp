#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <optional>

#include "lockforge/attack.hpp"
#include "lockforge/locklib.hpp"
#include "lockforge/netlist.hpp"
#include "lockforge/report.hpp"
#include "lockforge/resynth.hpp"
#include "lockforge/satcore.hpp"

namespace py = pybind11;
using namespace lf;

namespace {

std::vector<std::string> net_names(const Circuit& c, const std::vector<NetId>& nets) {
    std::vector<std::string> out;
    out.reserve(nets.size());
    for (NetId n : nets) out.push_back(c.net_name(n));
    return out;
}

Technique technique_arg(const std::string& name) {
    auto t = technique_from_name(name);
    if (!t) throw py::value_error("unknown technique '" + name + "'");
    return *t;
}

}  // namespace

PYBIND11_MODULE(_lockforge, m) {
    m.doc() = "gate-level logic-locking workbench: lockers, structural attacks, CEC";

    py::register_exception<CircuitError>(m, "CircuitError");
    py::register_exception<LockError>(m, "LockError");
    py::register_exception<AttackError>(m, "AttackError");

    py::class_<Circuit>(m, "Circuit")
        .def_readonly("name", &Circuit::name)
        .def_property_readonly("num_gates", [](const Circuit& c) { return c.gates().size(); })
        .def_property_readonly("inputs", [](const Circuit& c) { return net_names(c, c.inputs()); })
        .def_property_readonly("key_inputs",
                               [](const Circuit& c) { return net_names(c, c.key_inputs()); })
        .def_property_readonly("outputs", [](const Circuit& c) { return net_names(c, c.outputs()); })
        .def("to_bench", [](const Circuit& c) { return emit_bench(c); })
        .def("__repr__", [](const Circuit& c) {
            return "<Circuit '" + c.name + "' " + std::to_string(c.gates().size()) + " gates, " +
                   std::to_string(c.inputs().size()) + " inputs, " +
                   std::to_string(c.key_inputs().size()) + " key inputs>";
        });

    m.def("parse_bench", &parse_bench, py::arg("text"), py::arg("name") = "top");
    m.def("read_circuit_file", &read_circuit_file, py::arg("path"));

    py::class_<LockArtifact>(m, "LockArtifact")
        .def_readonly("locked", &LockArtifact::locked)
        .def_readonly("secret_key", &LockArtifact::secret_key)
        .def_property_readonly("manifest", [](const LockArtifact& a) { return lock_manifest(a); })
        .def_property_readonly("secret_key_line",
                               [](const LockArtifact& a) { return secret_key_line(a); });

    m.def(
        "lock",
        [](const Circuit& original, const std::string& technique, int key_size, int num_pp,
           int dtl_replacements, int sas_blocks, uint64_t seed) {
            LockSpec spec;
            spec.technique = technique_arg(technique);
            spec.key_size = key_size;
            spec.num_protected_patterns = num_pp;
            spec.dtl_replacements = dtl_replacements;
            spec.sas_blocks = sas_blocks;
            spec.rng_seed = seed;
            return lock(original, spec);
        },
        py::arg("original"), py::arg("technique"), py::arg("key_size") = 16,
        py::arg("num_pp") = 1, py::arg("dtl_replacements") = 1, py::arg("sas_blocks") = 2,
        py::arg("seed") = 1);

    m.def("techniques", [] {
        std::vector<std::string> v;
        for (Technique t : all_techniques()) v.push_back(technique_name(t));
        return v;
    });

    py::class_<Oracle>(m, "Oracle")
        .def(py::init<Circuit>(), py::arg("original"))
        .def(py::init<Circuit, std::vector<uint8_t>>(), py::arg("locked"), py::arg("key"))
        .def("query",
             [](const Oracle& o, const std::vector<uint8_t>& pi) { return o.query(pi); })
        .def_property_readonly("query_count", &Oracle::query_count);

    py::class_<AttackReport>(m, "AttackReport")
        .def_readonly("technique", &AttackReport::technique)
        .def_readonly("family", &AttackReport::family)
        .def_readonly("complete", &AttackReport::complete)
        .def_readonly("oracle_less", &AttackReport::oracle_less)
        .def_readonly("dip_count", &AttackReport::dip_count)
        .def_readonly("oracle_queries", &AttackReport::oracle_queries)
        .def_readonly("diagnostic", &AttackReport::diagnostic)
        .def_property_readonly("key", &AttackReport::key_string)
        .def_property_readonly(
            "structural_key",
            [](const AttackReport& r) { return r.structural_key.to_string(); })
        .def("json", [](const AttackReport& r) { return report_json(r); })
        .def("__repr__", [](const AttackReport& r) {
            return "<AttackReport " + r.family + " key=" + r.key_string() +
                   (r.complete ? " complete" : " incomplete") + ">";
        });

    m.def(
        "attack",
        [](const Circuit& locked, const Oracle* oracle, const std::string& family, int num_pp) {
            return attack(locked, oracle, family, num_pp);
        },
        py::arg("locked"), py::arg("oracle") = nullptr, py::arg("family") = "auto",
        py::arg("num_pp") = 1, py::keep_alive<0, 2>());

    m.def(
        "substitute_key",
        [](const Circuit& c, const std::string& key) {
            return substitute_key(c, TernaryPattern::from_string(key));
        },
        py::arg("circuit"), py::arg("key"));

    m.def(
        "check_equivalence",
        [](const Circuit& a, const Circuit& b) -> std::optional<std::string> {
            auto cex = check_equivalence(a, b);
            if (!cex) return std::nullopt;
            return cex->to_string();
        },
        py::arg("a"), py::arg("b"),
        "None when equivalent, else a distinguishing input pattern");

    m.def("apply_recipe", &apply_recipe, py::arg("circuit"), py::arg("recipe"));
}
