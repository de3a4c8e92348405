#include "krivine/environment.hpp"

#include "krivine/kronfft.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace krivine {

std::string trace_to_text(const std::vector<StepRecord>& trace) {
    std::ostringstream out;
    out << std::setprecision(17);
    for (const StepRecord& r : trace)
        out << "step=" << r.step << " element=" << r.element << " gamma=" << r.gamma
            << " reward=" << r.reward << " memory=" << r.memory_size
            << " actions=" << r.action_count << "\n";
    return out.str();
}

Polynomial generator_polynomial(int id, int nvars) {
    const int var = id / 2;
    if (var < 0 || var >= nvars) throw std::out_of_range("generator id out of range");
    Polynomial g(nvars);
    ExponentVec e(nvars, 0);
    e[var] = 1;
    if (id % 2 == 0) {
        g.set_coeff(e, Rational(1));
    } else {
        g.set_coeff(ExponentVec(nvars, 0), Rational(1));
        g.set_coeff(e, Rational(-1));
    }
    return g;
}

std::string generator_name(int id) {
    const int var = id / 2 + 1;
    if (id % 2 == 0) return "x" + std::to_string(var);
    return "(1-x" + std::to_string(var) + ")";
}

KrivineTerm BasisElement::structure(int nvars) const {
    if (is_krivine()) return term;
    KrivineTerm t;
    t.alpha.assign(nvars, 0);
    t.beta.assign(nvars, 0);
    for (int id : multipliers) {
        if (id % 2 == 0)
            ++t.alpha[id / 2];
        else
            ++t.beta[id / 2];
    }
    return t;
}

std::string BasisElement::describe() const {
    if (is_krivine()) return krivine_term_to_string(term);
    std::string s = axiom_negated ? "-g" : "+g";
    s += std::to_string(axiom_index + 1);
    for (int id : multipliers) s += "*" + generator_name(id);
    return s;
}

std::vector<KrivineTerm> init_memory_terms(int nvars, int k) {
    std::vector<KrivineTerm> out;
    if (k < 1) return out;
    for (const auto& v : monomial_basis(2 * nvars, k)) {
        if (total_degree(v) == 0) continue;
        KrivineTerm t;
        t.alpha.assign(v.begin(), v.begin() + nvars);
        t.beta.assign(v.begin() + nvars, v.end());
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<double> action_features(const KrivineTerm& term, int nvars, int degree_cap) {
    const double cap = degree_cap < 1 ? 1.0 : static_cast<double>(degree_cap);
    std::vector<double> f;
    f.reserve(2 * nvars);
    for (int i = 0; i < nvars; ++i) f.push_back(term.alpha[i] / cap);
    for (int i = 0; i < nvars; ++i) f.push_back(term.beta[i] / cap);
    return f;
}

Environment::Environment(Polynomial f, std::vector<Polynomial> axioms, EnvConfig cfg,
                         LpBackend* backend)
    : f_(std::move(f)), axioms_(std::move(axioms)), cfg_(cfg), backend_(backend) {
    for (const auto& g : axioms_)
        if (g.nvars() != f_.nvars())
            throw std::invalid_argument("axiom nvars differs from objective");
    if (!backend_) {
        owned_backend_ = std::make_unique<SimplexBackend>();
        backend_ = owned_backend_.get();
    }
}

EnvState Environment::reset() {
    const bool keep = cfg_.persist_memory && !memory_.empty();
    if (!keep) {
        memory_.clear();
        actions_.clear();
        admitted_.clear();
        seen_.clear();
    }
    trace_.clear();
    steps_ = 0;
    state_ = EnvState{};

    const int n = f_.nvars();
    int k = cfg_.init_memory_degree < 0 ? std::max(1u, f_.degree())
                                        : cfg_.init_memory_degree;
    if (cfg_.lemma_degree_cap >= 0) k = std::min(k, cfg_.lemma_degree_cap);
    feature_cap_ = cfg_.lemma_degree_cap >= 0
                       ? std::max(1, cfg_.lemma_degree_cap)
                       : std::max<int>(f_.degree(), k) + cfg_.maxstep;

    if (keep) {
        // Carried-over memory: only the bound, counters and trace restart.
        const double g0 = solve_current();
        state_.gamma = g0;
        state_.gamma0 = g0;
        normalizer_ = (state_.failed || g0 <= kInfeasibleGamma || std::abs(g0) < 1e-12)
                          ? 1.0
                          : std::abs(g0);
        state_.done = state_.failed || g0 >= -cfg_.success_tol || cfg_.maxstep <= 0;
        trace_.push_back({0, "init", g0, 0.0, memory_size(), action_count()});
        return state_;
    }

    for (auto& t : init_memory_terms(n, k)) {
        BasisElement e;
        e.term = std::move(t);
        e.expansion = expand_krivine(e.term, n);
        if (!seen_.insert(to_string(e.expansion)).second) continue;
        memory_.push_back(std::move(e));
    }
    for (int a = 0; a < static_cast<int>(axioms_.size()); ++a) {
        if (axioms_[a].terms().empty()) continue;
        for (bool neg : {false, true}) {
            BasisElement e;
            e.axiom_index = a;
            e.axiom_negated = neg;
            e.expansion = neg ? poly_neg(axioms_[a]) : axioms_[a];
            if (!seen_.insert(to_string(e.expansion)).second) continue;
            memory_.push_back(std::move(e));
        }
    }
    for (int m = 0; m < static_cast<int>(memory_.size()); ++m)
        extend_actions_from(memory_[m], m);

    const double g = solve_current();
    state_.gamma = g;
    state_.gamma0 = g;
    normalizer_ = (state_.failed || g <= kInfeasibleGamma || std::abs(g) < 1e-12)
                      ? 1.0
                      : std::abs(g);
    state_.done = state_.failed || g >= -cfg_.success_tol || cfg_.maxstep <= 0;
    trace_.push_back({0, "init", g, 0.0, memory_size(), action_count()});
    return state_;
}

StepResult Environment::step(int action_index) {
    if (state_.done) throw std::logic_error("episode is already done");
    if (action_index < 0 || action_index >= action_count())
        throw std::out_of_range("action index out of range");

    const bool novel = !admitted_[action_index];
    const double old_gamma = state_.gamma;
    double g = old_gamma;
    if (novel) {
        admitted_[action_index] = true;
        memory_.push_back(actions_[action_index]);
        extend_actions_from(memory_.back(), memory_size() - 1);
        g = solve_current();
    }
    ++steps_;

    if (state_.failed) {
        state_.done = true;
        trace_.push_back({steps_, actions_[action_index].describe(), old_gamma, 0.0,
                          memory_size(), action_count()});
        return {state_, 0.0, true};
    }

    const double delta = g - old_gamma;
    double reward;
    if (std::abs(delta) > cfg_.reward_tol) {
        reward = delta / normalizer_;
        state_.kappa = 0;
    } else {
        reward = cfg_.eps_penalty;
        ++state_.kappa;
    }
    state_.gamma = g;
    state_.done = g >= -cfg_.success_tol || steps_ >= cfg_.maxstep;
    trace_.push_back({steps_, actions_[action_index].describe(), g, reward,
                      memory_size(), action_count()});
    return {state_, reward, state_.done};
}

double Environment::solve_current() {
    LpInstance lp = build_lp(f_, support_snapshot());
    LpSolution sol = backend_->solve(lp);
    last_solution_ = sol;
    switch (sol.status) {
        case LpStatus::Optimal:
            return sol.gamma;
        case LpStatus::Infeasible:
            return kInfeasibleGamma;
        case LpStatus::NumericFailure:
        default:
            state_.failed = true;
            return state_.gamma;
    }
}

void Environment::push_candidate(BasisElement elem) {
    if (cfg_.lemma_degree_cap >= 0 &&
        static_cast<int>(elem.expansion.degree()) > cfg_.lemma_degree_cap)
        return;
    if (!seen_.insert(to_string(elem.expansion)).second) return;
    actions_.push_back(std::move(elem));
    admitted_.push_back(false);
}

void Environment::extend_actions_from(const BasisElement& admitted, int parent_index) {
    const int n = f_.nvars();
    for (int var = 0; var < n; ++var) {
        for (int id : {2 * var, 2 * var + 1}) {
            BasisElement e;
            e.axiom_index = admitted.axiom_index;
            e.axiom_negated = admitted.axiom_negated;
            if (admitted.is_krivine()) {
                e.term = admitted.term;
                if (id % 2 == 0)
                    ++e.term.alpha[var];
                else
                    ++e.term.beta[var];
            } else {
                e.multipliers = admitted.multipliers;
                e.multipliers.push_back(id);
            }
            e.expansion = fast_mul(admitted.expansion, generator_polynomial(id, n));
            e.parent = parent_index;
            e.multiplier_id = id;
            push_candidate(std::move(e));
        }
    }
}

int Environment::find_action(const KrivineTerm& term) const {
    for (int i = 0; i < action_count(); ++i)
        if (actions_[i].is_krivine() && actions_[i].term == term) return i;
    return -1;
}

std::vector<double> Environment::state_features() const {
    const double ms = cfg_.maxstep > 0 ? cfg_.maxstep : 1;
    return {state_.gamma / normalizer_, state_.kappa / ms};
}

std::vector<double> Environment::features_of_action(int i) const {
    return action_features(actions_.at(i).structure(f_.nvars()), f_.nvars(),
                           feature_cap_);
}

std::vector<Polynomial> Environment::support_snapshot() const {
    std::vector<Polynomial> cols;
    cols.reserve(memory_.size());
    for (const auto& e : memory_) cols.push_back(e.expansion);
    return cols;
}

} // namespace krivine
