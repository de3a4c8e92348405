#include "krivine/certificate.hpp"
#include "krivine/problem.hpp"
#include "krivine/prover.hpp"
#include "krivine/stableset.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace krivine;

namespace {

// Exit codes: 0 proved/verified, 1 unknown/rejected, 2 usage or malformed input.
constexpr int kExitProved = 0;
constexpr int kExitUnknown = 1;
constexpr int kExitUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << text;
}

std::string fixed(double v, int digits) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(digits);
    out << v;
    return out.str();
}

// Settings file: one JSON object whose keys are exactly the RunConfig field
// names. Integer fields take JSON integers, not floats.
RunConfig config_from_text(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& ex) {
        throw std::runtime_error(std::string("config file is not valid JSON: ") + ex.what());
    }
    if (!doc.is_object()) throw std::runtime_error("config file must hold a JSON object");

    RunConfig cfg;
    auto want_int = [](const json& v, const std::string& key) {
        if (!v.is_number_integer())
            throw std::runtime_error("config key '" + key + "' must be an integer");
    };
    auto want_num = [](const json& v, const std::string& key) {
        if (!v.is_number())
            throw std::runtime_error("config key '" + key + "' must be a number");
    };
    for (const auto& [key, v] : doc.items()) {
        if (key == "seed") { want_int(v, key); cfg.seed = v.get<std::uint64_t>(); }
        else if (key == "episodes") { want_int(v, key); cfg.episodes = v.get<int>(); }
        else if (key == "maxstep") { want_int(v, key); cfg.maxstep = v.get<int>(); }
        else if (key == "hidden_width") { want_int(v, key); cfg.hidden_width = v.get<int>(); }
        else if (key == "hidden_layers") { want_int(v, key); cfg.hidden_layers = v.get<int>(); }
        else if (key == "discount") { want_num(v, key); cfg.discount = v.get<double>(); }
        else if (key == "lr") { want_num(v, key); cfg.lr = v.get<double>(); }
        else if (key == "weight_decay") { want_num(v, key); cfg.weight_decay = v.get<double>(); }
        else if (key == "batch_size") { want_int(v, key); cfg.batch_size = v.get<int>(); }
        else if (key == "replay_capacity") { want_int(v, key); cfg.replay_capacity = v.get<std::size_t>(); }
        else if (key == "target_sync") { want_int(v, key); cfg.target_sync = v.get<int>(); }
        else if (key == "eps_start") { want_num(v, key); cfg.eps_start = v.get<double>(); }
        else if (key == "eps_end") { want_num(v, key); cfg.eps_end = v.get<double>(); }
        else if (key == "eps_decay_fraction") { want_num(v, key); cfg.eps_decay_fraction = v.get<double>(); }
        else if (key == "eps_penalty") { want_num(v, key); cfg.eps_penalty = v.get<double>(); }
        else if (key == "reward_tol") { want_num(v, key); cfg.reward_tol = v.get<double>(); }
        else if (key == "success_tol") { want_num(v, key); cfg.success_tol = v.get<double>(); }
        else if (key == "init_memory_degree") { want_int(v, key); cfg.init_memory_degree = v.get<int>(); }
        else if (key == "lemma_degree_cap") { want_int(v, key); cfg.lemma_degree_cap = v.get<int>(); }
        else if (key == "persist_memory") {
            if (!v.is_boolean()) throw std::runtime_error("config key 'persist_memory' must be a boolean");
            cfg.persist_memory = v.get<bool>();
        } else if (key == "stop_after_proof") {
            if (!v.is_boolean()) throw std::runtime_error("config key 'stop_after_proof' must be a boolean");
            cfg.stop_after_proof = v.get<bool>();
        } else if (key == "solver") {
            if (!v.is_string()) throw std::runtime_error("config key 'solver' must be a string");
            cfg.solver = v.get<std::string>();
        } else {
            throw std::runtime_error("config file: unknown key '" + key + "'");
        }
    }
    return cfg;
}

// Run settings shared by every command that trains. CLI flags land in
// `parsed`; resolve_config() folds them onto the config-file/default base so
// the precedence is: explicit flag > problem-file option > config file >
// built-in default (problem options are applied later by the prover and skip
// keys pinned here).
struct RunFlags {
    RunConfig parsed;
    std::string config_path;
    CLI::App* cmd = nullptr;
};

void add_run_flags(CLI::App* cmd, RunFlags& fl) {
    fl.cmd = cmd;
    cmd->add_option("--config", fl.config_path, "JSON settings file (keys mirror the run config)")
        ->check(CLI::ExistingFile);
    cmd->add_option("--seed", fl.parsed.seed, "RNG seed (default 0)");
    cmd->add_option("--max-steps", fl.parsed.maxstep, "step budget per episode")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--episodes", fl.parsed.episodes, "training episodes before the greedy rollout")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--hidden", fl.parsed.hidden_width, "hidden layer width")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--layers", fl.parsed.hidden_layers, "hidden layer count")
        ->check(CLI::NonNegativeNumber);
    cmd->add_option("--discount", fl.parsed.discount, "TD discount factor")
        ->check(CLI::Range(0.0, 1.0));
    cmd->add_option("--lr", fl.parsed.lr, "learning rate")->check(CLI::PositiveNumber);
    cmd->add_option("--batch", fl.parsed.batch_size, "replay minibatch size")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--capacity", fl.parsed.replay_capacity, "replay buffer capacity")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--target-sync", fl.parsed.target_sync, "learn steps between target-net refreshes")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--eps-penalty", fl.parsed.eps_penalty, "reward for steps that leave the bound unchanged");
    cmd->add_option("--lemma-degree-cap", fl.parsed.lemma_degree_cap,
                    "max total degree of admitted elements, -1 = unlimited")
        ->check(CLI::Range(-1, 1 << 20));
    cmd->add_option("--init-memory-degree", fl.parsed.init_memory_degree,
                    "degree of the initial memory, -1 = deg(f)")
        ->check(CLI::Range(-1, 1 << 20));
    cmd->add_flag("--stop-after-proof", fl.parsed.stop_after_proof,
                  "end training at the first verified certificate");
}

RunConfig resolve_config(const RunFlags& fl, std::set<std::string>& pinned) {
    RunConfig out;
    if (!fl.config_path.empty()) out = config_from_text(read_file(fl.config_path));

    struct FlagCopy {
        const char* flag;
        const char* option_key; // problem-file option shadowed by this flag
        void (*copy)(RunConfig&, const RunConfig&);
    };
    static const FlagCopy table[] = {
        {"--seed", nullptr, [](RunConfig& a, const RunConfig& b) { a.seed = b.seed; }},
        {"--max-steps", "maxstep", [](RunConfig& a, const RunConfig& b) { a.maxstep = b.maxstep; }},
        {"--episodes", "episodes", [](RunConfig& a, const RunConfig& b) { a.episodes = b.episodes; }},
        {"--hidden", "nn_width", [](RunConfig& a, const RunConfig& b) { a.hidden_width = b.hidden_width; }},
        {"--layers", "nn_layers", [](RunConfig& a, const RunConfig& b) { a.hidden_layers = b.hidden_layers; }},
        {"--discount", nullptr, [](RunConfig& a, const RunConfig& b) { a.discount = b.discount; }},
        {"--lr", nullptr, [](RunConfig& a, const RunConfig& b) { a.lr = b.lr; }},
        {"--batch", nullptr, [](RunConfig& a, const RunConfig& b) { a.batch_size = b.batch_size; }},
        {"--capacity", nullptr, [](RunConfig& a, const RunConfig& b) { a.replay_capacity = b.replay_capacity; }},
        {"--target-sync", nullptr, [](RunConfig& a, const RunConfig& b) { a.target_sync = b.target_sync; }},
        {"--eps-penalty", "eps_penalty", [](RunConfig& a, const RunConfig& b) { a.eps_penalty = b.eps_penalty; }},
        {"--lemma-degree-cap", "lemma_degree_cap",
         [](RunConfig& a, const RunConfig& b) { a.lemma_degree_cap = b.lemma_degree_cap; }},
        {"--init-memory-degree", "init_memory_degree",
         [](RunConfig& a, const RunConfig& b) { a.init_memory_degree = b.init_memory_degree; }},
        {"--stop-after-proof", nullptr,
         [](RunConfig& a, const RunConfig& b) { a.stop_after_proof = b.stop_after_proof; }},
    };
    for (const FlagCopy& t : table) {
        if (fl.cmd->count(t.flag) == 0) continue;
        t.copy(out, fl.parsed);
        if (t.option_key) pinned.insert(t.option_key);
    }
    return out;
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        if (width.size() < row.size()) width.resize(row.size(), 0);
        for (std::size_t j = 0; j < row.size(); ++j) width[j] = std::max(width[j], row[j].size());
    }
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (j) out += "  ";
            out += row[j];
            if (j + 1 < row.size()) out.append(width[j] - row[j].size(), ' ');
        }
        out += '\n';
    }
    return out;
}

std::string episode_label(const EpisodeStats& e) {
    return e.episode == 0 ? "rollout" : std::to_string(e.episode);
}

std::string render_episode_table(const ProveResult& res) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"episode", "epsilon", "steps", "final_gamma", "success", "verified"});
    auto push = [&](const EpisodeStats& e) {
        rows.push_back({episode_label(e), fixed(e.epsilon, 3), std::to_string(e.steps),
                        e.failed ? "lp-failed" : fixed(e.final_gamma, 6), e.success ? "yes" : "no",
                        e.verified ? "yes" : "no"});
    };
    for (const EpisodeStats& e : res.episodes) push(e);
    if (res.rollout_ran) push(res.rollout);
    return render_table(rows);
}

json episode_json(const EpisodeStats& e) {
    return json{{"episode", e.episode},   {"epsilon", e.epsilon},
                {"steps", e.steps},       {"gamma0", e.gamma0},
                {"final_gamma", e.final_gamma}, {"success", e.success},
                {"verified", e.verified}, {"lp_failed", e.failed}};
}

std::string prove_result_to_json_text(const ProveResult& res) {
    json episodes = json::array();
    for (const EpisodeStats& e : res.episodes) episodes.push_back(episode_json(e));
    json doc{{"status", res.status},
             {"proved", res.proved},
             {"proof_steps", res.proof_steps},
             {"proof_from_rollout", res.proof_from_rollout},
             {"initial_memory", res.initial_memory},
             {"initial_actions", res.initial_actions},
             {"training_frames", res.training_frames},
             {"learn_steps", res.learn_steps},
             {"target_syncs", res.target_syncs},
             {"wall_seconds", res.wall_seconds},
             {"episodes", episodes}};
    if (res.rollout_ran) doc["rollout"] = episode_json(res.rollout);
    if (res.any_bound) doc["best_gamma"] = res.best_gamma;
    if (res.proved) {
        doc["gamma"] = rational_to_string(res.certificate.gamma);
        doc["certificate_terms"] = res.certificate.terms.size();
    }
    return doc.dump(2) + "\n";
}

// Prints the run report and writes the requested artifacts; the return value
// is the process exit code.
int report_prove(const Problem& problem, const ProveResult& res, const std::string& cert_out,
                 const std::string& model_out, const std::string& json_out) {
    const Polynomial g = problem.regularized();
    std::cout << "problem: " << problem.name << " (" << problem.nvars
              << (problem.nvars == 1 ? " variable" : " variables") << ", regularized degree "
              << g.degree() << ")\n";
    std::cout << "initial memory: " << res.initial_memory << " elements, " << res.initial_actions
              << " candidate actions\n";
    const double gamma0 =
        res.episodes.empty() ? res.rollout.gamma0 : res.episodes.front().gamma0;
    std::cout << "initial bound: gamma0 = " << fixed(gamma0, 6) << "\n\n";
    std::cout << render_episode_table(res) << "\n";

    if (res.proved) {
        std::cout << "status: proved (gamma = " << rational_to_string(res.certificate.gamma)
                  << ", " << res.proof_steps << " steps, "
                  << (res.proof_from_rollout ? "greedy rollout" : "training episode") << ")\n";
        std::cout << "proof:\n" << res.proof_text;
    } else if (res.any_bound) {
        std::cout << "status: unknown (best bound gamma = " << fixed(res.best_gamma, 6)
                  << ", not certified)\n";
    } else {
        std::cout << "status: unknown (no feasible bound reached)\n";
    }

    if (!cert_out.empty() && res.proved) {
        write_file(cert_out, certificate_to_json_text(res.certificate));
        std::cout << "certificate written to " << cert_out << "\n";
    }
    if (!model_out.empty()) {
        const fs::path parent = fs::path(model_out).parent_path();
        if (!parent.empty()) fs::create_directories(parent);
        save_model(res.model, model_out);
        std::cout << "model written to " << model_out << "\n";
    }
    if (!json_out.empty()) write_file(json_out, prove_result_to_json_text(res));
    return res.proved ? kExitProved : kExitUnknown;
}

int cmd_prove(const std::string& problem_file, const RunFlags& fl, const std::string& cert_out,
              const std::string& model_out, const std::string& json_out) {
    const Problem problem = load_problem(problem_file);
    std::set<std::string> pinned;
    RunConfig cfg = resolve_config(fl, pinned);
    cfg = apply_problem_options(cfg, problem, pinned);
    const ProveResult res = prove(problem, cfg);
    return report_prove(problem, res, cert_out, model_out, json_out);
}

int cmd_verify(const std::string& cert_file, const std::string& problem_file) {
    const Certificate cert = load_certificate(cert_file);
    const Problem problem = load_problem(problem_file);
    const VerifyReport report = verify_certificate(problem, cert);
    if (report.ok) {
        std::cout << "certificate verifies: f >= " << rational_to_string(cert.gamma)
                  << " on the box (" << cert.terms.size() << " terms)\n";
        return kExitProved;
    }
    std::cout << "certificate rejected: " << report.summary() << "\n";
    return kExitUnknown;
}

int cmd_random_search(const std::string& problem_file, int trials, const RunFlags& fl,
                      const std::string& log_out, const std::string& json_out) {
    const Problem problem = load_problem(problem_file);
    std::set<std::string> pinned;
    RunConfig cfg = resolve_config(fl, pinned);
    cfg = apply_problem_options(cfg, problem, pinned);
    const RandomSearchReport report = random_search(problem, trials, cfg);
    std::cout << render_search_report(report);
    if (!log_out.empty()) write_file(log_out, trial_logs_to_text(report.logs));
    if (!json_out.empty()) write_file(json_out, search_report_to_json_text(report));
    return report.stats.successes > 0 ? kExitProved : kExitUnknown;
}

// Directories expand to their *.json files in name order; plain paths pass
// through (a missing file becomes an error row, the run continues).
std::vector<std::string> expand_problem_paths(const std::vector<std::string>& args) {
    std::vector<std::string> files;
    for (const std::string& arg : args) {
        if (fs::is_directory(arg)) {
            std::vector<std::string> found;
            for (const auto& entry : fs::directory_iterator(arg))
                if (entry.is_regular_file() && entry.path().extension() == ".json")
                    found.push_back(entry.path().string());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
        } else {
            files.push_back(arg);
        }
    }
    return files;
}

int cmd_bench(const std::vector<std::string>& paths, const RunFlags& fl,
              const std::string& cert_dir, const std::string& report_out,
              const std::string& json_out) {
    std::set<std::string> pinned;
    const RunConfig cfg = resolve_config(fl, pinned);
    if (!cert_dir.empty()) fs::create_directories(cert_dir);
    const BenchReport report = bench(expand_problem_paths(paths), cfg, pinned, cert_dir);
    const std::string table = render_bench_report(report);
    std::cout << table;
    if (!report_out.empty()) write_file(report_out, table);
    if (!json_out.empty()) write_file(json_out, bench_report_to_json_text(report));
    for (const BenchRow& row : report.rows)
        if (!row.error.empty() || !row.proved) return kExitUnknown;
    return kExitProved;
}

int cmd_stableset(const std::string& graph_file, int bound, const RunFlags& fl,
                  const std::string& cert_out, const std::string& model_out,
                  const std::string& problem_out, const std::string& json_out) {
    const Graph g = load_graph(graph_file);
    // --lemma-degree-cap picks the encoding cap; the encoded problem options
    // then carry it into the run config.
    const int cap =
        fl.cmd->count("--lemma-degree-cap") > 0 ? fl.parsed.lemma_degree_cap : 2;
    const StableSetProblem sp = encode(g, bound, cap);
    std::cout << "graph: " << g.n << " vertices, " << sp.problem.equality_axioms.size() - g.n
              << " edges\n";
    std::cout << "claim: every stable set has at most " << bound
              << (bound == 1 ? " vertex" : " vertices") << " (lemma degree cap " << cap << ")\n";
    if (!problem_out.empty()) {
        write_file(problem_out, problem_to_json_text(sp.problem));
        std::cout << "encoded problem written to " << problem_out << "\n";
    }

    std::set<std::string> pinned;
    RunConfig cfg = resolve_config(fl, pinned);
    const ProveResult res = prove_stable_bound(sp, cfg, pinned);
    const int code = report_prove(sp.problem, res, cert_out, model_out, json_out);
    if (res.proved)
        std::cout << "the stability number of the graph is at most " << bound << "\n";
    return code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certifies polynomial inequalities f >= 0 on boxes by learning a"
                 " non-negative combination of Krivine basis elements"};
    app.require_subcommand(1);

    // prove
    std::string prove_file, prove_cert, prove_model, prove_json;
    RunFlags prove_fl;
    CLI::App* prove_cmd = app.add_subcommand("prove", "train a prover on one problem file");
    prove_cmd->add_option("problem", prove_file, "problem JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    add_run_flags(prove_cmd, prove_fl);
    prove_cmd->add_option("--cert-out", prove_cert, "write the verified certificate here");
    prove_cmd->add_option("--model-out", prove_model, "write the trained network here");
    prove_cmd->add_option("--json-out", prove_json, "write the run report as JSON here");

    // verify
    std::string verify_cert, verify_problem;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "check a certificate against its problem file");
    verify_cmd->add_option("certificate", verify_cert, "certificate JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    verify_cmd->add_option("problem", verify_problem, "problem JSON file")
        ->required()
        ->check(CLI::ExistingFile);

    // random-search
    std::string search_file, search_log, search_json;
    int search_trials = 50;
    RunFlags search_fl;
    CLI::App* search_cmd =
        app.add_subcommand("random-search", "uniform-random admission baseline over many trials");
    search_cmd->add_option("problem", search_file, "problem JSON file")
        ->required()
        ->check(CLI::ExistingFile);
    search_cmd->add_option("--trials", search_trials, "number of independent trials (default 50)")
        ->check(CLI::PositiveNumber);
    add_run_flags(search_cmd, search_fl);
    search_cmd->add_option("--log-out", search_log, "write the per-trial log here");
    search_cmd->add_option("--json-out", search_json, "write the report as JSON here");

    // bench
    std::vector<std::string> bench_paths;
    std::string bench_cert_dir, bench_report, bench_json;
    RunFlags bench_fl;
    CLI::App* bench_cmd =
        app.add_subcommand("bench", "prove every problem in the given files or directories");
    bench_cmd->add_option("paths", bench_paths, "problem files or directories of *.json")
        ->required();
    add_run_flags(bench_cmd, bench_fl);
    bench_cmd->add_option("--cert-dir", bench_cert_dir, "directory for verified certificates");
    bench_cmd->add_option("--report-out", bench_report, "write the text table here");
    bench_cmd->add_option("--json-out", bench_json, "write the report as JSON here");

    // stableset
    std::string ss_graph, ss_cert, ss_model, ss_problem, ss_json;
    int ss_bound = 0;
    RunFlags ss_fl;
    CLI::App* ss_cmd = app.add_subcommand(
        "stableset", "prove an upper bound on the stability number of a graph");
    ss_cmd->add_option("graph", ss_graph, "edge-list or DIMACS graph file")
        ->required()
        ->check(CLI::ExistingFile);
    ss_cmd->add_option("--bound", ss_bound, "claimed maximum stable-set size")
        ->required()
        ->check(CLI::NonNegativeNumber);
    add_run_flags(ss_cmd, ss_fl);
    ss_cmd->add_option("--cert-out", ss_cert, "write the verified certificate here");
    ss_cmd->add_option("--model-out", ss_model, "write the trained network here");
    ss_cmd->add_option("--problem-out", ss_problem, "write the encoded problem file here");
    ss_cmd->add_option("--json-out", ss_json, "write the run report as JSON here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (app.got_subcommand(prove_cmd))
            return cmd_prove(prove_file, prove_fl, prove_cert, prove_model, prove_json);
        if (app.got_subcommand(verify_cmd)) return cmd_verify(verify_cert, verify_problem);
        if (app.got_subcommand(search_cmd))
            return cmd_random_search(search_file, search_trials, search_fl, search_log, search_json);
        if (app.got_subcommand(bench_cmd))
            return cmd_bench(bench_paths, bench_fl, bench_cert_dir, bench_report, bench_json);
        if (app.got_subcommand(ss_cmd))
            return cmd_stableset(ss_graph, ss_bound, ss_fl, ss_cert, ss_model, ss_problem, ss_json);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
