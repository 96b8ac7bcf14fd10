#include "lockforge/report.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "json.hpp"
#include "lockforge/satcore.hpp"

namespace lf {

const char* bit_source_name(BitSource s) {
    switch (s) {
        case BitSource::Structural: return "structural";
        case BitSource::Sat: return "sat";
        case BitSource::Unresolved: return "unresolved";
    }
    return "unresolved";
}

size_t AttackReport::count_source(BitSource s) const {
    return std::count(per_bit_source.begin(), per_bit_source.end(), s);
}

AttackReport score(AttackReport draft, const std::vector<uint8_t>& planted_key) {
    size_t K = draft.recovered_key.width();
    if (planted_key.size() != K) return draft;
    size_t correct = 0;
    size_t asserted = 0, asserted_correct = 0;
    for (size_t i = 0; i < K; ++i) {
        Trit want = trit_from_bool(planted_key[i]);
        if (draft.recovered_key[i] == want) ++correct;
        if (draft.structural_key[i] != Trit::X) {
            ++asserted;
            if (draft.structural_key[i] == want) ++asserted_correct;
        }
    }
    draft.accuracy = K ? static_cast<double>(correct) / static_cast<double>(K) : 0.0;
    draft.precision =
        asserted ? static_cast<double>(asserted_correct) / static_cast<double>(asserted) : 0.0;
    return draft;
}

bool verify_key(AttackReport& report, const Circuit& locked, const Circuit& original) {
    if (!report.recovered_key.fully_specified() ||
        report.recovered_key.width() != locked.key_inputs().size()) {
        report.verification = "not-applicable";
        return false;
    }
    Circuit sub = substitute_key(locked, report.recovered_key);
    bool eq = !check_equivalence(sub, original).has_value();
    report.verification = eq ? "equivalent" : "different";
    return eq;
}

std::string report_json(const AttackReport& r) {
    nlohmann::json j;
    j["schema"] = "lockforge-attack-report-v1";
    j["circuit"] = r.circuit;
    j["technique"] = r.technique;
    j["family"] = r.family;
    j["key_size"] = r.key_size();
    j["structural_key"] = r.structural_key.to_string();
    j["recovered_key"] = r.key_string();
    std::vector<std::string> src;
    for (BitSource s : r.per_bit_source) src.push_back(bit_source_name(s));
    j["per_bit_source"] = src;
    j["complete"] = r.complete;
    j["oracle_less"] = r.oracle_less;
    j["dip_count"] = r.dip_count;
    j["oracle_queries"] = r.oracle_queries;
    j["validation_queries"] = r.validation_queries;
    j["structural_seconds"] = r.structural_seconds;
    j["sat_seconds"] = r.sat_seconds;
    j["total_seconds"] = r.total_seconds;
    if (r.accuracy >= 0) j["accuracy"] = r.accuracy;
    if (r.precision >= 0) j["precision"] = r.precision;
    j["verification"] = r.verification;
    if (!r.diagnostic.empty()) j["diagnostic"] = r.diagnostic;
    std::vector<std::string> pats;
    for (const auto& p : r.recovered_patterns) pats.push_back(p.to_string());
    j["recovered_patterns"] = pats;
    j["recovered_mapping"] = r.recovered_mapping;
    return j.dump(2) + "\n";
}

std::string campaign_csv(const std::vector<TrialResult>& trials) {
    struct Agg {
        std::vector<const TrialResult*> rows;
    };
    std::map<std::tuple<std::string, std::string, std::string>, Agg> groups;
    for (const TrialResult& t : trials)
        groups[{t.circuit, t.technique, t.recipe}].rows.push_back(&t);

    std::ostringstream os;
    os << "circuit,technique,recipe,trials,key_sizes,mean_seconds,min_seconds,max_seconds,"
          "oracle_less_fraction,dip_min,dip_max,cec_pass,complete\n";
    for (const auto& [key, agg] : groups) {
        const auto& [circuit, technique, recipe] = key;
        size_t n = agg.rows.size();
        double sum = 0, mn = 1e300, mx = 0;
        uint64_t dmin = UINT64_MAX, dmax = 0;
        size_t oless = 0, cec = 0, complete = 0;
        std::set<int> ks;
        for (const TrialResult* t : agg.rows) {
            double s = t->report.total_seconds;
            sum += s;
            mn = std::min(mn, s);
            mx = std::max(mx, s);
            dmin = std::min(dmin, t->report.dip_count);
            dmax = std::max(dmax, t->report.dip_count);
            if (t->report.oracle_less) ++oless;
            if (t->report.verification == "equivalent") ++cec;
            if (t->report.complete) ++complete;
            ks.insert(t->key_size);
        }
        std::string ksizes;
        for (int k : ks) ksizes += (ksizes.empty() ? "" : "|") + std::to_string(k);
        os << circuit << ',' << technique << ',' << recipe << ',' << n << ',' << ksizes << ','
           << sum / static_cast<double>(n) << ',' << mn << ',' << mx << ','
           << static_cast<double>(oless) / static_cast<double>(n) << ',' << dmin << ',' << dmax
           << ',' << cec << ',' << complete << '\n';
    }
    return os.str();
}

void write_corpus_entry(const std::string& corpus_root, const LockArtifact& art) {
    namespace fs = std::filesystem;
    fs::path dir = fs::path(corpus_root) / art.locked.name /
                   technique_name(art.spec.technique) / std::to_string(art.spec.rng_seed);
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "locked.bench");
        f << emit_bench(art.locked);
    }
    {
        std::ofstream f(dir / "manifest.json");
        f << lock_manifest(art);
    }
    {
        // published copies of the corpus must drop this file
        std::ofstream f(dir / "secret.key");
        f << secret_key_line(art);
    }
}

}  // namespace lf
