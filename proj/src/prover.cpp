#include "krivine/prover.hpp"

#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace krivine {

namespace {

using json = nlohmann::json;

// SplitMix64 finalizer; decorrelates derived seeds from consecutive inputs.
std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void validate(const RunConfig& cfg) {
    if (cfg.episodes < 0) throw std::invalid_argument("episodes must be non-negative");
    if (cfg.maxstep < 1) throw std::invalid_argument("maxstep must be positive");
    if (cfg.hidden_layers < 0) throw std::invalid_argument("negative layer count");
    if (cfg.hidden_layers > 0 && cfg.hidden_width < 1)
        throw std::invalid_argument("hidden width must be positive");
    if (!(cfg.discount >= 0.0 && cfg.discount <= 1.0))
        throw std::invalid_argument("discount outside [0, 1]");
    if (!(cfg.lr > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (cfg.batch_size < 1) throw std::invalid_argument("batch size must be positive");
    if (cfg.replay_capacity < static_cast<std::size_t>(cfg.batch_size))
        throw std::invalid_argument("replay capacity smaller than batch size");
    if (cfg.target_sync < 1) throw std::invalid_argument("target sync period must be positive");
    if (!(cfg.eps_decay_fraction > 0.0))
        throw std::invalid_argument("epsilon decay fraction must be positive");
    if (cfg.solver != "simplex") throw std::invalid_argument("unknown solver: " + cfg.solver);
}

EnvConfig env_config(const RunConfig& cfg) {
    EnvConfig ec;
    ec.maxstep = cfg.maxstep;
    ec.reward_tol = cfg.reward_tol;
    ec.success_tol = cfg.success_tol;
    ec.eps_penalty = cfg.eps_penalty;
    ec.init_memory_degree = cfg.init_memory_degree;
    ec.lemma_degree_cap = cfg.lemma_degree_cap;
    ec.persist_memory = cfg.persist_memory;
    return ec;
}

// [state || action] columns for the listed action indices.
Eigen::MatrixXd stack_inputs(const Environment& env, const FeatureVec& state,
                             const std::vector<int>& actions, int input_dim) {
    Eigen::MatrixXd inputs(input_dim, static_cast<Eigen::Index>(actions.size()));
    for (std::size_t j = 0; j < actions.size(); ++j) {
        const FeatureVec af = env.features_of_action(actions[j]);
        for (std::size_t k = 0; k < state.size(); ++k)
            inputs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) = state[k];
        for (std::size_t k = 0; k < af.size(); ++k)
            inputs(static_cast<Eigen::Index>(state.size() + k), static_cast<Eigen::Index>(j)) =
                af[k];
    }
    return inputs;
}

std::vector<int> fresh_actions(const Environment& env) {
    std::vector<int> fresh;
    for (int a = 0; a < env.action_count(); ++a)
        if (!env.action_admitted(a)) fresh.push_back(a);
    return fresh;
}

std::string format_double(double v) {
    std::ostringstream out;
    out << std::setprecision(17) << v;
    return out.str();
}

} // namespace

RunConfig apply_problem_options(RunConfig cfg, const Problem& problem,
                                const std::set<std::string>& pinned) {
    auto int_option = [&](const char* key, int min_value, int& field) {
        if (pinned.count(key)) return;
        const auto it = problem.options.find(key);
        if (it == problem.options.end()) return;
        const double v = it->second;
        const double r = std::round(v);
        if (std::abs(v - r) > 1e-9 || r < min_value || r > 1e9)
            throw std::invalid_argument(std::string("problem option ") + key +
                                        " must be an integer >= " + std::to_string(min_value));
        field = static_cast<int>(r);
    };
    int_option("nn_width", 1, cfg.hidden_width);
    int_option("nn_layers", 0, cfg.hidden_layers);
    int_option("maxstep", 1, cfg.maxstep);
    int_option("episodes", 0, cfg.episodes);
    int_option("lemma_degree_cap", -1, cfg.lemma_degree_cap);
    int_option("init_memory_degree", -1, cfg.init_memory_degree);
    if (!pinned.count("eps_penalty")) {
        const auto it = problem.options.find("eps_penalty");
        if (it != problem.options.end()) cfg.eps_penalty = it->second;
    }
    return cfg;
}

ProveResult prove(const Problem& problem, const RunConfig& cfg) {
    validate(cfg);
    const auto t0 = std::chrono::steady_clock::now();

    const Polynomial f = problem.regularized();
    Environment env(f, problem.regularized_axioms(), env_config(cfg));
    const std::string digest = problem_digest(problem);

    const int input_dim = 2 + 2 * f.nvars();
    QNetwork online(input_dim, cfg.hidden_width, cfg.hidden_layers, cfg.seed);
    QNetwork target = online;
    AdamWOptions adam;
    adam.lr = cfg.lr;
    adam.weight_decay = cfg.weight_decay;
    AdamW opt(online, adam);
    ReplayBuffer replay(cfg.replay_capacity);
    EpisodeTraces traces;
    std::mt19937_64 rng(mix_seed(cfg.seed));
    const long decay_frames = std::max<long>(
        1, std::lround(cfg.eps_decay_fraction * static_cast<double>(cfg.episodes) * cfg.maxstep));
    EpsilonSchedule schedule(cfg.eps_start, cfg.eps_end, decay_frames);

    ProveResult res;

    auto note_bound = [&](const EpisodeStats& st) {
        if (st.failed || st.final_gamma <= Environment::kInfeasibleGamma / 2) return;
        if (!res.any_bound || st.final_gamma > res.best_gamma) {
            res.best_gamma = st.final_gamma;
            res.any_bound = true;
        }
    };

    // Extraction and independent verification at every successful episode
    // end; only this path can set `proved`. The shortest certifying episode
    // wins so the kept proof matches the reported step count.
    auto try_certify = [&](EpisodeStats& st) {
        if (!env.state().done || env.state().failed) return;
        if (env.state().gamma < -cfg.success_tol) return;
        st.success = true;
        ExtractionResult ex = extract_certificate(f, env.memory(), env.last_solution());
        if (!ex.ok) return;
        ex.certificate.problem_digest = digest;
        if (!verify_certificate(problem, ex.certificate).ok) return;
        st.verified = true;
        if (!res.proved || st.steps < res.proof_steps) {
            res.proved = true;
            res.certificate = ex.certificate;
            res.proof_steps = st.steps;
            res.proof_text = render_proof(ex.certificate, env.trace(), env.memory());
            res.proof_from_rollout = st.episode == 0;
        }
    };

    for (int ep = 1; ep <= cfg.episodes; ++ep) {
        env.reset();
        if (ep == 1) {
            res.initial_memory = env.memory_size();
            res.initial_actions = env.action_count();
        }
        const long eid = traces.begin_episode();
        for (int a = 0; a < env.action_count(); ++a)
            traces.record(eid, env.features_of_action(a));

        EpisodeStats st;
        st.episode = ep;
        st.epsilon = schedule.at(res.training_frames);
        st.gamma0 = env.state().gamma0;

        while (!env.state().done) {
            if (env.action_count() == 0) break; // degree cap can empty the pool
            const FeatureVec state_feat = env.state_features();
            std::vector<FeatureVec> acts;
            acts.reserve(static_cast<std::size_t>(env.action_count()));
            for (int a = 0; a < env.action_count(); ++a) acts.push_back(env.features_of_action(a));

            const double eps = schedule.at(res.training_frames);
            const int pick = select_action(online, state_feat, acts, eps, rng);
            const StepResult sr = env.step(pick);
            for (int a = static_cast<int>(acts.size()); a < env.action_count(); ++a)
                traces.record(eid, env.features_of_action(a));

            Transition t;
            t.state = state_feat;
            t.action = acts[static_cast<std::size_t>(pick)];
            t.reward = sr.reward;
            t.next_state = env.state_features();
            t.next_action_count = env.action_count();
            t.done = sr.done;
            t.episode_id = eid;
            replay.push(std::move(t));
            ++res.training_frames;

            if (replay.size() >= static_cast<std::size_t>(cfg.batch_size)) {
                const auto batch = replay.sample(static_cast<std::size_t>(cfg.batch_size), rng);
                train_step(online, target, batch, traces, cfg.discount, opt);
                ++res.learn_steps;
                if (res.learn_steps % cfg.target_sync == 0) {
                    sync_target(online, target);
                    ++res.target_syncs;
                }
            }
        }

        st.steps = env.steps_taken();
        st.final_gamma = env.state().gamma;
        st.failed = env.state().failed;
        note_bound(st);
        try_certify(st);
        res.episodes.push_back(st);
        if (cfg.stop_after_proof && res.proved) break;
    }

    // Greedy rollout with the trained network, restricted to actions not
    // yet admitted (re-admission never changes the bound, so the unmasked
    // argmax could stall on one action until the budget ran out). Skipped
    // when training already stopped at a verified witness: the rollout's
    // job is to exploit the trained policy, not to improve a done proof.
    const bool skip_rollout = cfg.stop_after_proof && res.proved;
    if (!skip_rollout) {
        env.reset();
        if (cfg.episodes == 0) {
            res.initial_memory = env.memory_size();
            res.initial_actions = env.action_count();
        }
        EpisodeStats st;
        st.episode = 0;
        st.gamma0 = env.state().gamma0;
        while (!env.state().done) {
            const std::vector<int> fresh = fresh_actions(env);
            if (fresh.empty()) break;
            const Eigen::VectorXd q =
                batch_values(online, stack_inputs(env, env.state_features(), fresh, input_dim));
            Eigen::Index best = 0;
            for (Eigen::Index j = 1; j < q.size(); ++j)
                if (q(j) > q(best)) best = j;
            env.step(fresh[static_cast<std::size_t>(best)]);
        }
        st.steps = env.steps_taken();
        st.final_gamma = env.state().gamma;
        st.failed = env.state().failed;
        note_bound(st);
        try_certify(st);
        res.rollout = st;
        res.rollout_ran = true;
    }

    res.status = res.proved ? "proved" : "unknown";
    res.model = std::move(online);
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

RandomSearchReport random_search(const Problem& problem, int trials, const RunConfig& cfg) {
    if (trials < 1) throw std::invalid_argument("trials must be >= 1");
    validate(cfg);

    const Polynomial f = problem.regularized();
    const std::vector<Polynomial> axioms = problem.regularized_axioms();
    const std::string digest = problem_digest(problem);

    RandomSearchReport rep;
    rep.trials = trials;
    for (int trial = 1; trial <= trials; ++trial) {
        TrialLog log;
        log.trial = trial;
        log.seed = mix_seed(cfg.seed + static_cast<std::uint64_t>(trial));
        std::mt19937_64 rng(log.seed);

        Environment env(f, axioms, env_config(cfg));
        env.reset();
        while (!env.state().done) {
            const std::vector<int> fresh = fresh_actions(env);
            if (fresh.empty()) break;
            std::uniform_int_distribution<std::size_t> pick(0, fresh.size() - 1);
            env.step(fresh[pick(rng)]);
        }

        log.steps = env.steps_taken();
        log.final_gamma = env.state().gamma;
        if (env.state().done && !env.state().failed && env.state().gamma >= -cfg.success_tol) {
            ExtractionResult ex = extract_certificate(f, env.memory(), env.last_solution());
            if (ex.ok) {
                ex.certificate.problem_digest = digest;
                log.success = verify_certificate(problem, ex.certificate).ok;
            }
        }
        rep.logs.push_back(log);
    }
    rep.stats = stats_from_logs(rep.logs);
    return rep;
}

SearchStats stats_from_logs(const std::vector<TrialLog>& logs) {
    SearchStats s;
    long sum = 0;
    for (const TrialLog& log : logs) {
        if (!log.success) continue;
        if (s.successes == 0 || log.steps < s.s_min) s.s_min = log.steps;
        if (s.successes == 0 || log.steps > s.s_max) s.s_max = log.steps;
        sum += log.steps;
        ++s.successes;
    }
    if (s.successes > 0) s.s_avg = static_cast<double>(sum) / s.successes;
    return s;
}

std::string trial_logs_to_text(const std::vector<TrialLog>& logs) {
    std::ostringstream out;
    for (const TrialLog& log : logs)
        out << "trial=" << log.trial << " seed=" << log.seed
            << " success=" << (log.success ? 1 : 0) << " steps=" << log.steps
            << " final_gamma=" << format_double(log.final_gamma) << "\n";
    return out.str();
}

std::vector<TrialLog> trial_logs_from_text(const std::string& text) {
    std::vector<TrialLog> logs;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        TrialLog log;
        bool trial = false, seed = false, success = false, steps = false, gamma = false;
        std::istringstream fields(line);
        std::string field;
        try {
            while (fields >> field) {
                const auto at = field.find('=');
                if (at == std::string::npos)
                    throw std::runtime_error("field without '='");
                const std::string key = field.substr(0, at);
                const std::string value = field.substr(at + 1);
                if (key == "trial") {
                    log.trial = std::stoi(value);
                    trial = true;
                } else if (key == "seed") {
                    log.seed = std::stoull(value);
                    seed = true;
                } else if (key == "success") {
                    if (value != "0" && value != "1")
                        throw std::runtime_error("success must be 0 or 1");
                    log.success = value == "1";
                    success = true;
                } else if (key == "steps") {
                    log.steps = std::stoi(value);
                    steps = true;
                } else if (key == "final_gamma") {
                    log.final_gamma = std::stod(value);
                    gamma = true;
                } else {
                    throw std::runtime_error("unknown field '" + key + "'");
                }
            }
        } catch (const std::exception& e) {
            throw std::runtime_error("malformed trial log line '" + line + "': " + e.what());
        }
        if (!(trial && seed && success && steps && gamma))
            throw std::runtime_error("malformed trial log line '" + line + "': missing fields");
        logs.push_back(log);
    }
    return logs;
}

BenchReport bench(const std::vector<std::string>& problem_files, const RunConfig& cfg,
                  const std::set<std::string>& pinned, const std::string& cert_dir) {
    BenchReport rep;
    for (const std::string& path : problem_files) {
        BenchRow row;
        row.name = std::filesystem::path(path).stem().string();
        try {
            const Problem problem = load_problem(path);
            if (!problem.name.empty()) row.name = problem.name;
            row.nvars = problem.nvars;
            row.degree = problem.regularized().degree();

            const RunConfig pc = apply_problem_options(cfg, problem, pinned);
            const ProveResult pr = prove(problem, pc);
            row.initial_memory = pr.initial_memory;
            row.proved = pr.proved;
            row.proof_steps = pr.proof_steps;
            row.training_frames = pr.training_frames;
            row.best_gamma = pr.best_gamma;
            row.any_bound = pr.any_bound;
            row.wall_seconds = pr.wall_seconds;
            if (pr.proved && !cert_dir.empty()) {
                std::filesystem::create_directories(cert_dir);
                const auto out = std::filesystem::path(cert_dir) / (row.name + ".cert.json");
                save_certificate(pr.certificate, out.string());
                row.certificate_path = out.string();
            }
        } catch (const std::exception& e) {
            row.error = e.what();
        }
        rep.rows.push_back(std::move(row));
    }
    return rep;
}

namespace {

std::string fixed(double v, int places) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(places) << v;
    return out.str();
}

std::string render_table(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> width;
    for (const auto& row : rows) {
        if (width.size() < row.size()) width.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) out += "  ";
            out += row[c];
            if (c + 1 < row.size()) out.append(width[c] - row[c].size(), ' ');
        }
        out += "\n";
    }
    return out;
}

} // namespace

std::string render_bench_report(const BenchReport& report) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"problem", "n", "deg", "|M0|", "status", "steps", "frames", "best_gamma",
                    "seconds", "certificate"});
    for (const BenchRow& r : report.rows) {
        if (!r.error.empty()) {
            rows.push_back({r.name, r.nvars ? std::to_string(r.nvars) : "-", "-", "-", "error",
                            "-", "-", "-", "-", r.error});
            continue;
        }
        rows.push_back({r.name, std::to_string(r.nvars), std::to_string(r.degree),
                        std::to_string(r.initial_memory), r.proved ? "proved" : "unknown",
                        r.proved ? std::to_string(r.proof_steps) : "-",
                        std::to_string(r.training_frames),
                        r.any_bound ? fixed(r.best_gamma, 6) : "-", fixed(r.wall_seconds, 2),
                        r.certificate_path.empty() ? "-" : r.certificate_path});
    }
    return render_table(rows);
}

std::string bench_report_to_json_text(const BenchReport& report) {
    json rows = json::array();
    for (const BenchRow& r : report.rows) {
        json row{{"name", r.name},
                 {"nvars", r.nvars},
                 {"degree", r.degree},
                 {"initial_memory", r.initial_memory},
                 {"proved", r.proved},
                 {"proof_steps", r.proof_steps},
                 {"training_frames", r.training_frames},
                 {"wall_seconds", r.wall_seconds}};
        if (r.any_bound) row["best_gamma"] = r.best_gamma;
        if (!r.certificate_path.empty()) row["certificate"] = r.certificate_path;
        if (!r.error.empty()) row["error"] = r.error;
        rows.push_back(std::move(row));
    }
    return json{{"rows", rows}}.dump(2) + "\n";
}

std::string render_search_report(const RandomSearchReport& report) {
    std::ostringstream out;
    out << "trials=" << report.trials << " successes=" << report.stats.successes;
    if (report.stats.successes > 0)
        out << " S_min=" << report.stats.s_min << " S_avg=" << fixed(report.stats.s_avg, 2)
            << " S_max=" << report.stats.s_max;
    out << "\n" << trial_logs_to_text(report.logs);
    return out.str();
}

std::string search_report_to_json_text(const RandomSearchReport& report) {
    json trials = json::array();
    for (const TrialLog& log : report.logs)
        trials.push_back({{"trial", log.trial},
                          {"seed", log.seed},
                          {"success", log.success},
                          {"steps", log.steps},
                          {"final_gamma", log.final_gamma}});
    json doc{{"trials", report.trials},
             {"successes", report.stats.successes},
             {"s_min", report.stats.s_min},
             {"s_avg", report.stats.s_avg},
             {"s_max", report.stats.s_max},
             {"log", trials}};
    return doc.dump(2) + "\n";
}

} // namespace krivine
