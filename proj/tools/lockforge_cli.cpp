#include <atomic>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "lockforge/atpg.hpp"
#include "lockforge/attack.hpp"
#include "lockforge/locklib.hpp"
#include "lockforge/report.hpp"
#include "lockforge/resynth.hpp"
#include "lockforge/satcore.hpp"

using namespace lf;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitIncomplete = 3;
constexpr int kExitVerifyFail = 4;
constexpr int kExitExternal = 5;

std::string read_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw CircuitError("cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path);
    f << text;
}

/// Key bits from a literal 0/1 string or from a file holding one.
std::vector<uint8_t> parse_key_bits(const std::string& arg) {
    std::string s = arg;
    if (s.find_first_not_of("01") != std::string::npos) {
        std::istringstream is(read_file(arg));
        is >> s;
    }
    std::vector<uint8_t> bits;
    for (char ch : s) {
        if (ch != '0' && ch != '1') throw CircuitError("key must be a 0/1 string");
        bits.push_back(ch == '1');
    }
    return bits;
}

TernaryPattern as_pattern(const std::vector<uint8_t>& bits) {
    TernaryPattern p(bits.size());
    for (size_t i = 0; i < bits.size(); ++i) p[i] = trit_from_bool(bits[i]);
    return p;
}

int run_lock(const std::string& in, const std::string& tech, int key_size, int num_pp, int dtl,
             int sas, uint64_t seed, const std::string& out_dir) {
    auto t = technique_from_name(tech);
    if (!t) {
        std::cerr << "unknown technique '" << tech << "'\n";
        return kExitUsage;
    }
    Circuit orig = read_circuit_file(in);
    LockSpec spec;
    spec.technique = *t;
    spec.key_size = key_size;
    spec.num_protected_patterns = num_pp;
    spec.dtl_replacements = dtl;
    spec.sas_blocks = sas;
    spec.rng_seed = seed;
    LockArtifact art = lock(orig, spec);
    std::string base = out_dir.empty() ? "." : out_dir;
    write_bench_file(art.locked, base + "/locked.bench");
    write_file(base + "/manifest.json", lock_manifest(art));
    write_file(base + "/secret.key", secret_key_line(art));
    std::cout << "locked " << orig.name << " with " << technique_name(*t) << " (|K|="
              << key_size << ") -> " << base << "/locked.bench\n";
    return kExitOk;
}

int run_attack(const std::string& in, const std::string& oracle_arg, const std::string& oracle_key,
               const std::string& family, int num_pp, const std::string& out) {
    Circuit locked = read_circuit_file(in);
    std::optional<Oracle> oracle;
    std::optional<Circuit> original;
    if (!oracle_arg.empty() && oracle_arg != "none") {
        original = read_circuit_file(oracle_arg);
        if (original->key_inputs().empty()) {
            oracle.emplace(*original);
        } else {
            if (oracle_key.empty()) {
                std::cerr << "--oracle-key required when the oracle netlist has key inputs\n";
                return kExitUsage;
            }
            oracle.emplace(*original, parse_key_bits(oracle_key));
        }
    }
    AttackReport r = attack(locked, oracle ? &*oracle : nullptr, family, num_pp);
    r.circuit = locked.name;
    if (original && original->key_inputs().empty() && r.recovered_key.fully_specified())
        verify_key(r, locked, *original);
    std::string j = report_json(r);
    if (!out.empty()) write_file(out, j);
    std::cout << j;
    if (!r.complete) {
        std::cerr << "attack incomplete: " << r.diagnostic << "\n";
        return kExitIncomplete;
    }
    if (r.verification == "different") return kExitVerifyFail;
    return kExitOk;
}

int run_verify(const std::string& locked_path, const std::string& orig_path,
               const std::string& key) {
    Circuit locked = read_circuit_file(locked_path);
    Circuit orig = read_circuit_file(orig_path);
    auto bits = parse_key_bits(key);
    if (bits.size() != locked.key_inputs().size()) {
        std::cerr << "key width " << bits.size() << " != " << locked.key_inputs().size() << "\n";
        return kExitUsage;
    }
    Circuit sub = substitute_key(locked, as_pattern(bits));
    auto cex = check_equivalence(sub, orig);
    if (!cex) {
        std::cout << "equivalent\n";
        return kExitOk;
    }
    std::cout << "different (distinguishing pattern " << cex->to_string() << ")\n";
    return kExitVerifyFail;
}

int run_atpg(const std::string& in, const std::string& net, int fault, size_t max_patterns) {
    Circuit c = read_circuit_file(in);
    AtpgOptions opts;
    opts.max_cubes = max_patterns;
    CubeList cl = generate_all_tests(c, Fault{c.net(net), fault != 0}, opts);
    for (const auto& cube : cl.cubes) std::cout << cube.to_string() << "\n";
    std::cout << (cl.complete ? "complete" : "incomplete") << " (" << cl.size() << " cube(s))\n";
    return kExitOk;
}

int run_sim(const std::string& in, const std::string& pattern) {
    Circuit c = read_circuit_file(in);
    TernaryPattern p = TernaryPattern::from_string(pattern);
    if (p.width() != c.pi_ki_order().size()) {
        std::cerr << "pattern width " << p.width() << " != " << c.pi_ki_order().size() << "\n";
        return kExitUsage;
    }
    std::cout << eval_ternary(c, p).to_string() << "\n";
    return kExitOk;
}

int run_resynth(const std::string& in, const std::string& recipe, const std::string& external,
                const std::string& out) {
    Circuit c = read_circuit_file(in);
    Circuit r = external.empty() ? apply_recipe(c, recipe) : external_synth_roundtrip(c, external);
    std::string path = out.empty() ? "out.bench" : out;
    write_bench_file(r, path);
    std::cout << "wrote " << path << " (" << r.gates().size() << " gates)\n";
    return kExitOk;
}

struct CampaignConfig {
    std::vector<std::string> circuits;
    std::vector<std::string> techniques;
    std::vector<uint64_t> seeds;
    std::vector<int> key_sizes{16};
    int num_pp = 2;
    int sas_blocks = 2;
    std::vector<std::string> recipes{""};
    bool use_oracle = true;
    int workers = 4;
    std::string corpus_dir;
    std::string csv_out;
};

CampaignConfig load_campaign(const std::string& path) {
    auto j = nlohmann::json::parse(read_file(path));
    CampaignConfig cfg;
    cfg.circuits = j.at("circuits").get<std::vector<std::string>>();
    if (j.contains("techniques")) cfg.techniques = j["techniques"].get<std::vector<std::string>>();
    else
        for (Technique t : all_techniques()) cfg.techniques.push_back(technique_name(t));
    if (j.contains("seeds")) cfg.seeds = j["seeds"].get<std::vector<uint64_t>>();
    else
        for (uint64_t s = 1, n = j.value("num_seeds", 3); s <= n; ++s) cfg.seeds.push_back(s);
    if (j.contains("key_sizes")) cfg.key_sizes = j["key_sizes"].get<std::vector<int>>();
    cfg.num_pp = j.value("num_protected_patterns", 2);
    cfg.sas_blocks = j.value("sas_blocks", 2);
    if (j.contains("recipes")) cfg.recipes = j["recipes"].get<std::vector<std::string>>();
    cfg.use_oracle = j.value("oracle", true);
    cfg.workers = j.value("workers", 4);
    cfg.corpus_dir = j.value("corpus_dir", "");
    cfg.csv_out = j.value("csv", "");
    return cfg;
}

int attack_num_pp(Technique t, int cfg_num_pp) {
    if (t == Technique::ECE) return 2;
    if (t == Technique::SFLL_Flex) return cfg_num_pp;
    return 1;
}

int run_campaign(const std::string& config_path) {
    CampaignConfig cfg = load_campaign(config_path);
    std::vector<Circuit> circuits;
    for (const auto& p : cfg.circuits) circuits.push_back(read_circuit_file(p));

    struct Job {
        size_t circuit;
        Technique technique;
        uint64_t seed;
        int key_size;
        std::string recipe;
    };
    std::vector<Job> jobs;
    for (size_t ci = 0; ci < circuits.size(); ++ci)
        for (const auto& tn : cfg.techniques) {
            auto t = technique_from_name(tn);
            if (!t) throw CircuitError("unknown technique '" + tn + "'");
            for (size_t si = 0; si < cfg.seeds.size(); ++si)
                for (const auto& recipe : cfg.recipes)
                    jobs.push_back({ci, *t, cfg.seeds[si],
                                    cfg.key_sizes[si % cfg.key_sizes.size()], recipe});
        }

    std::vector<TrialResult> results(jobs.size());
    std::atomic<size_t> next{0};
    std::atomic<int> failures{0};
    auto worker = [&] {
        for (size_t i = next.fetch_add(1); i < jobs.size(); i = next.fetch_add(1)) {
            const Job& job = jobs[i];
            TrialResult& tr = results[i];
            tr.circuit = circuits[job.circuit].name;
            tr.technique = technique_name(job.technique);
            tr.recipe = job.recipe;
            tr.seed = job.seed;
            tr.key_size = job.key_size;
            try {
                LockSpec spec;
                spec.technique = job.technique;
                spec.key_size = job.key_size;
                spec.num_protected_patterns = cfg.num_pp;
                spec.sas_blocks = cfg.sas_blocks;
                spec.rng_seed = job.seed;
                LockArtifact art = lock(circuits[job.circuit], spec);
                if (!cfg.corpus_dir.empty() && job.recipe.empty())
                    write_corpus_entry(cfg.corpus_dir, art);
                Circuit target =
                    job.recipe.empty() ? art.locked : apply_recipe(art.locked, job.recipe);
                std::optional<Oracle> oracle;
                if (cfg.use_oracle) oracle.emplace(art.locked, art.secret_key);
                AttackReport r = attack(target, oracle ? &*oracle : nullptr, "auto",
                                        attack_num_pp(job.technique, cfg.num_pp));
                r.technique = tr.technique;
                r = score(r, art.secret_key);
                if (r.recovered_key.fully_specified())
                    verify_key(r, target, circuits[job.circuit]);
                tr.report = std::move(r);
                if (!tr.report.complete || tr.report.verification == "different") ++failures;
            } catch (const std::exception& e) {
                tr.report.diagnostic = e.what();
                ++failures;
            }
        }
    };
    int nw = std::max(1, std::min<int>(cfg.workers, static_cast<int>(jobs.size())));
    std::vector<std::thread> pool;
    for (int i = 0; i < nw; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();

    std::string csv = campaign_csv(results);
    if (!cfg.csv_out.empty()) write_file(cfg.csv_out, csv);
    std::cout << csv;
    std::cerr << jobs.size() << " trial(s), " << failures.load() << " failure(s)\n";
    return failures.load() == 0 ? kExitOk : kExitIncomplete;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"lockforge: logic-locking workbench"};
    app.require_subcommand(1);

    std::string in, out, out_dir, tech = "sarlock", oracle_arg, oracle_key, family = "auto";
    std::string key, net, pattern, recipe = "light", external, orig_path, config_path;
    int key_size = 16, num_pp = 1, dtl = 1, sas = 2, fault = 0;
    uint64_t seed = 1;
    size_t max_patterns = 64;

    auto* lock_cmd = app.add_subcommand("lock", "lock a netlist");
    lock_cmd->add_option("input", in, "original .bench")->required();
    lock_cmd->add_option("--technique", tech, "locking technique")->required();
    lock_cmd->add_option("--key-size", key_size, "number of key bits");
    lock_cmd->add_option("--num-pp", num_pp, "protected patterns (sfll-flex words)");
    lock_cmd->add_option("--dtl", dtl, "diversified-tree replacements");
    lock_cmd->add_option("--sas", sas, "sas blocks");
    lock_cmd->add_option("--seed", seed, "rng seed");
    lock_cmd->add_option("--out-dir", out_dir, "output directory (default .)");

    auto* attack_cmd = app.add_subcommand("attack", "recover the key of a locked netlist");
    attack_cmd->add_option("input", in, "locked .bench")->required();
    attack_cmd->add_option("--oracle", oracle_arg, "original .bench, or 'none'");
    attack_cmd->add_option("--oracle-key", oracle_key, "key bits/file when the oracle is locked");
    attack_cmd->add_option("--family", family, "auto|hc|nhc");
    attack_cmd->add_option("--num-pp", num_pp, "protected patterns to assume");
    attack_cmd->add_option("--out", out, "write report.json here");

    auto* verify_cmd = app.add_subcommand("verify", "check a key by equivalence");
    verify_cmd->add_option("locked", in, "locked .bench")->required();
    verify_cmd->add_option("original", orig_path, "original .bench")->required();
    verify_cmd->add_option("--key", key, "key bits or key file")->required();

    auto* atpg_cmd = app.add_subcommand("atpg", "enumerate detecting cubes for a fault");
    atpg_cmd->add_option("input", in, ".bench file")->required();
    atpg_cmd->add_option("--net", net, "fault net name")->required();
    atpg_cmd->add_option("--fault", fault, "stuck-at value 0|1");
    atpg_cmd->add_option("--max-patterns", max_patterns, "cube budget");

    auto* sim_cmd = app.add_subcommand("sim", "simulate one (possibly ternary) pattern");
    sim_cmd->add_option("input", in, ".bench file")->required();
    sim_cmd->add_option("--pattern", pattern, "bits over PI then KI (0/1/x)")->required();

    auto* resynth_cmd = app.add_subcommand("resynth", "restructure a netlist");
    resynth_cmd->add_option("input", in, ".bench file")->required();
    resynth_cmd->add_option("--recipe", recipe, "light|medium|heavy");
    resynth_cmd->add_option("--external", external, "command with {in}/{out} placeholders");
    resynth_cmd->add_option("--out", out, "output .bench (default out.bench)");

    auto* campaign_cmd = app.add_subcommand("campaign", "run a lock/attack sweep");
    campaign_cmd->add_option("config", config_path, "config.json")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (lock_cmd->parsed())
            return run_lock(in, tech, key_size, num_pp, dtl, sas, seed, out_dir);
        if (attack_cmd->parsed())
            return run_attack(in, oracle_arg, oracle_key, family, num_pp, out);
        if (verify_cmd->parsed()) return run_verify(in, orig_path, key);
        if (atpg_cmd->parsed()) return run_atpg(in, net, fault, max_patterns);
        if (sim_cmd->parsed()) return run_sim(in, pattern);
        if (resynth_cmd->parsed()) return run_resynth(in, recipe, external, out);
        if (campaign_cmd->parsed()) return run_campaign(config_path);
    } catch (const ExternalToolError& e) {
        std::cerr << "external tool: " << e.what() << "\n";
        return kExitExternal;
    } catch (const CircuitError& e) {
        std::cerr << "parse: " << e.what() << "\n";
        return kExitParse;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "parse: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
