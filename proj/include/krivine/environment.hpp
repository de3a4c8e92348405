#pragma once

#include "krivine/lp.hpp"
#include "krivine/poly.hpp"

#include <memory>
#include <string>
#include <unordered_set>
#include <vector>

namespace krivine {

// Generator id: 2i is x_{i+1}, 2i+1 is (1 - x_{i+1}), i in [0, n).
Polynomial generator_polynomial(int id, int nvars);
std::string generator_name(int id);

// One element of the proof memory or of the action pool. Products of the
// cube generators stay in (alpha, beta) form; equality-axiom roots carry the
// signed axiom index plus the chain of generator ids applied to it. The
// exact expansion is cached; to_string(expansion) doubles as the dedup key.
struct BasisElement {
    KrivineTerm term;             // meaningful when axiom_index < 0
    int axiom_index = -1;         // >= 0: rooted at equality axiom g[axiom_index]
    bool axiom_negated = false;
    std::vector<int> multipliers; // generator ids applied to the root, in order
    Polynomial expansion;

    // provenance (action-pool entries): which memory element spawned it
    int parent = -1;
    int multiplier_id = -1;

    BasisElement() : expansion(1) {}
    bool is_krivine() const { return axiom_index < 0; }
    // (x-multiplier counts, (1-x)-multiplier counts): equals (alpha, beta)
    // for pure Krivine products.
    KrivineTerm structure(int nvars) const;
    std::string describe() const;
};

// All (alpha, beta) with 1 <= |alpha| + |beta| <= k, ascending graded-lex on
// the concatenated vector (alpha || beta). The constant pair is excluded:
// gamma already occupies the constant LP row. Size = C(2n+k, 2n) - 1.
std::vector<KrivineTerm> init_memory_terms(int nvars, int k);

// Length-2n featurization [alpha/cap || beta/cap] of a term.
std::vector<double> action_features(const KrivineTerm& term, int nvars, int degree_cap);

struct EnvConfig {
    int maxstep = 400;
    double reward_tol = 1e-9;   // gamma considered unchanged below this
    double success_tol = 1e-8;  // gamma >= -success_tol ends the episode
    double eps_penalty = -0.05; // reward for a no-improvement step
    int init_memory_degree = -1; // < 0: deg(f)
    int lemma_degree_cap = -1;   // < 0: unlimited; else max expansion degree
    // Keep memory and action pool across reset(); default rebuilds both.
    bool persist_memory = false;
};

struct EnvState {
    double gamma = 0.0;
    int kappa = 0;       // consecutive no-reward steps
    double gamma0 = 0.0; // bound after initialization, fixes the normalizer
    bool done = false;
    bool failed = false; // LP numeric failure aborted the episode
};

struct StepResult {
    EnvState state;
    double reward = 0.0;
    bool done = false;
};

struct StepRecord {
    int step = 0; // 0 is the initialization record
    std::string element;
    double gamma = 0.0;
    double reward = 0.0;
    int memory_size = 0;
    int action_count = 0;
};

// One "key=value ..." line per record, doubles at full precision.
std::string trace_to_text(const std::vector<StepRecord>& trace);

// Episode MDP: memory M_t of certified non-negative bases (plus signed
// equality-axiom pairs), action pool A_t of generator products, state
// (gamma_t, kappa). step() admits one action, re-solves the LP over the
// grown memory and pays the normalized bound improvement as reward.
// Action indices are prefix-stable across steps. Re-admitting an already
// admitted action is legal and wastes the step (no-improvement penalty).
class Environment {
public:
    // f must already live on the unit cube; axioms likewise (both signs of
    // each enter the memory). The backend pointer may be null (owned default
    // simplex) and is not owned when provided.
    Environment(Polynomial f, std::vector<Polynomial> axioms, EnvConfig cfg,
                LpBackend* backend = nullptr);

    EnvState reset();
    StepResult step(int action_index);

    int nvars() const { return f_.nvars(); }
    const EnvState& state() const { return state_; }
    int steps_taken() const { return steps_; }
    int memory_size() const { return static_cast<int>(memory_.size()); }
    int action_count() const { return static_cast<int>(actions_.size()); }
    const BasisElement& action(int i) const { return actions_.at(i); }
    const std::vector<BasisElement>& memory() const { return memory_; }
    bool action_admitted(int i) const { return admitted_.at(i); }

    // -1 when no action matches the (alpha, beta) pair.
    int find_action(const KrivineTerm& term) const;

    // [gamma / normalizer, kappa / maxstep]
    std::vector<double> state_features() const;
    std::vector<double> features_of_action(int i) const;
    int feature_degree_cap() const { return feature_cap_; }
    double normalizer() const { return normalizer_; }

    std::vector<Polynomial> support_snapshot() const;
    const std::vector<StepRecord>& trace() const { return trace_; }
    const EnvConfig& config() const { return cfg_; }
    // Raw outcome of the most recent LP solve; feeds certificate extraction.
    const LpSolution& last_solution() const { return last_solution_; }

    // Infeasible-LP bound sentinel; box-mode initial memories are always
    // feasible, axiom memories can momentarily not be.
    static constexpr double kInfeasibleGamma = -1e9;

private:
    double solve_current();
    void push_candidate(BasisElement elem);
    void extend_actions_from(const BasisElement& admitted, int parent_index);

    Polynomial f_;
    std::vector<Polynomial> axioms_;
    EnvConfig cfg_;
    LpBackend* backend_;
    std::unique_ptr<LpBackend> owned_backend_;

    std::vector<BasisElement> memory_;
    std::vector<BasisElement> actions_;
    std::vector<bool> admitted_;
    std::unordered_set<std::string> seen_; // dedup keys across memory + actions

    LpSolution last_solution_;
    EnvState state_;
    double normalizer_ = 1.0;
    int steps_ = 0;
    int feature_cap_ = 1;
    std::vector<StepRecord> trace_;
};

} // namespace krivine
