#pragma once

#include "krivine/agent.hpp"
#include "krivine/certificate.hpp"
#include "krivine/environment.hpp"
#include "krivine/problem.hpp"

#include <cstdint>
#include <set>
#include <string>
#include <vector>

namespace krivine {

// Every knob of a proving run, all defaulted. Problem files may override the
// marked fields through their options block (see apply_problem_options).
struct RunConfig {
    std::uint64_t seed = 0;
    int episodes = 50;            // training episodes            (option "episodes")
    int maxstep = 400;            // step budget per episode      (option "maxstep")
    int hidden_width = 64;        //                              (option "nn_width")
    int hidden_layers = 4;        //                              (option "nn_layers")
    double discount = 0.99;
    double lr = 1e-3;
    double weight_decay = 1e-4;
    int batch_size = 64;
    std::size_t replay_capacity = 20000;
    int target_sync = 50;         // learn steps between target refreshes
    double eps_start = 1.0;
    double eps_end = 0.05;
    double eps_decay_fraction = 0.8; // of episodes * maxstep frames
    double eps_penalty = -0.05;   //                              (option "eps_penalty")
    double reward_tol = 1e-9;
    double success_tol = 1e-8;
    int init_memory_degree = -1;  // < 0: deg(f)                  (option "init_memory_degree")
    int lemma_degree_cap = -1;    // < 0: unlimited               (option "lemma_degree_cap")
    bool persist_memory = false;
    bool stop_after_proof = false; // end training at the first verified witness
    std::string solver = "simplex";
};

// Copies recognized problem-file options onto cfg. Keys listed in `pinned`
// (set by explicit command-line flags) keep their cfg value.
RunConfig apply_problem_options(RunConfig cfg, const Problem& problem,
                                const std::set<std::string>& pinned = {});

struct EpisodeStats {
    int episode = 0; // 1-based; 0 marks the greedy rollout
    int steps = 0;
    double epsilon = 0.0; // exploration rate entering the episode
    double gamma0 = 0.0;
    double final_gamma = 0.0;
    bool success = false;  // bound reached -success_tol within budget
    bool verified = false; // exact certificate extracted and verified
    bool failed = false;   // LP numeric failure aborted the episode
};

struct ProveResult {
    bool proved = false;          // some episode produced a verified certificate
    std::string status = "unknown";
    Certificate certificate;      // digest-bound; meaningful only when proved
    std::string proof_text;       // rendered from the certifying episode
    int proof_steps = -1;         // environment steps of the certifying episode
    bool proof_from_rollout = false;

    double best_gamma = 0.0;      // best float bound over all episodes
    bool any_bound = false;       // best_gamma is meaningful
    std::vector<EpisodeStats> episodes;
    EpisodeStats rollout;
    bool rollout_ran = false;     // false when stop_after_proof ended the run first
    int initial_memory = 0;
    int initial_actions = 0;

    long training_frames = 0;     // environment steps taken while training
    long learn_steps = 0;
    long target_syncs = 0;
    double wall_seconds = 0.0;
    QNetwork model;               // trained online network
};

// Trains a Q-network on the problem's bound environment for cfg.episodes
// episodes (one gradient step per environment step once the replay buffer
// holds a batch, target refresh every cfg.target_sync learn steps), then
// runs one greedy rollout with the trained network. Whenever an episode
// ends at a non-negative bound, certificate extraction and independent
// exact verification are attempted; `proved` is set only by a verified
// certificate, and the certificate kept is the one from the shortest
// certifying episode. Deterministic given (problem, cfg).
ProveResult prove(const Problem& problem, const RunConfig& cfg);

struct TrialLog {
    int trial = 0; // 1-based
    std::uint64_t seed = 0;
    bool success = false; // exact certificate verified
    int steps = 0;
    double final_gamma = 0.0;
};

struct SearchStats {
    int successes = 0;
    long s_min = 0;  // over successful trials; zero when none
    long s_max = 0;
    double s_avg = 0.0;
};

struct RandomSearchReport {
    int trials = 0;
    SearchStats stats;
    std::vector<TrialLog> logs; // one per trial, ascending trial id
};

// Uniform-random baseline: fresh environment per trial, each step admits a
// uniformly random not-yet-admitted action. A trial succeeds when the
// episode ends at a non-negative bound and the extracted certificate
// verifies exactly. Per-trial seeds derive from cfg.seed, so trials are
// independent and the report is reproducible.
RandomSearchReport random_search(const Problem& problem, int trials, const RunConfig& cfg);

// The aggregate statistics are a pure function of the logs; recomputing
// them from a persisted log must reproduce the report.
SearchStats stats_from_logs(const std::vector<TrialLog>& logs);
std::string trial_logs_to_text(const std::vector<TrialLog>& logs);
std::vector<TrialLog> trial_logs_from_text(const std::string& text);

struct BenchRow {
    std::string name;
    int nvars = 0;
    unsigned degree = 0;   // of the regularized polynomial
    int initial_memory = 0;
    bool proved = false;
    int proof_steps = -1;
    long training_frames = 0;
    double best_gamma = 0.0;
    bool any_bound = false;
    double wall_seconds = 0.0;
    std::string certificate_path; // empty unless proved and cert_dir given
    std::string error;            // per-problem failure; the run continues
};

struct BenchReport {
    std::vector<BenchRow> rows;
};

// Runs prove() on every file, applying problem-file options on top of cfg
// (minus pinned keys). Verified certificates are written into cert_dir when
// it is non-empty. Failures are recorded per row; the harness continues.
BenchReport bench(const std::vector<std::string>& problem_files, const RunConfig& cfg,
                  const std::set<std::string>& pinned = {},
                  const std::string& cert_dir = "");

std::string render_bench_report(const BenchReport& report);
std::string bench_report_to_json_text(const BenchReport& report);

std::string render_search_report(const RandomSearchReport& report);
std::string search_report_to_json_text(const RandomSearchReport& report);

} // namespace krivine
