#include "doctest.h"

#include "krivine/environment.hpp"
#include "krivine/problem.hpp"
#include "test_util.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

using namespace krivine;

namespace {

const std::string kDataDir = KRIVINE_DATA_DIR;

// Backend stub: replays a fixed list of LP outcomes, ignoring the instance.
struct ScriptedBackend : LpBackend {
    std::vector<LpSolution> script;
    size_t next = 0;
    LpSolution solve(const LpInstance&) override {
        REQUIRE(next < script.size());
        return script[next++];
    }
};

LpSolution optimal(double g) {
    LpSolution s;
    s.status = LpStatus::Optimal;
    s.gamma = g;
    return s;
}

LpSolution with_status(LpStatus st) {
    LpSolution s;
    s.status = st;
    return s;
}

long count_weight_vectors(int len, int lo, int hi) {
    // Exhaustive odometer over N^len with lo <= sum <= hi.
    std::vector<unsigned> v(len, 0);
    long count = 0;
    while (true) {
        const long s = static_cast<long>(total_degree(v));
        if (s >= lo && s <= hi) ++count;
        int i = 0;
        while (i < len) {
            if (static_cast<long>(total_degree(v)) < hi) {
                ++v[i];
                break;
            }
            v[i] = 0;
            ++i;
        }
        if (i == len) break;
        bool overflow = static_cast<long>(total_degree(v)) > hi;
        while (overflow && i < len) {
            for (int j = 0; j <= i; ++j) v[j] = 0;
            ++i;
            if (i == len) return count;
            ++v[i];
            overflow = static_cast<long>(total_degree(v)) > hi;
        }
    }
    return count;
}

KrivineTerm make_term(std::vector<unsigned> alpha, std::vector<unsigned> beta) {
    KrivineTerm t;
    t.alpha = std::move(alpha);
    t.beta = std::move(beta);
    return t;
}

} // namespace

TEST_CASE("initial memory sizes reproduce the published table") {
    const std::vector<std::tuple<int, int, long>> rows = {
        {2, 2, 14},  {3, 2, 27},  {3, 3, 83},  {4, 3, 164},
        {4, 4, 494}, {5, 2, 65},  {5, 4, 1000}, {6, 2, 90},
    };
    for (const auto& [n, k, size] : rows) {
        auto terms = init_memory_terms(n, k);
        CHECK_MESSAGE(static_cast<long>(terms.size()) == size, "n=", n, " k=", k);
        CHECK(count_weight_vectors(2 * n, 1, k) == size);
        std::set<std::pair<ExponentVec, ExponentVec>> uniq;
        std::vector<ExponentVec> concat;
        for (const auto& t : terms) {
            REQUIRE(static_cast<int>(t.alpha.size()) == n);
            REQUIRE(static_cast<int>(t.beta.size()) == n);
            const unsigned d = t.degree();
            CHECK(d >= 1);
            CHECK(d <= static_cast<unsigned>(k));
            uniq.insert({t.alpha, t.beta});
            ExponentVec c = t.alpha;
            c.insert(c.end(), t.beta.begin(), t.beta.end());
            concat.push_back(std::move(c));
        }
        CHECK(uniq.size() == terms.size());
        CHECK(std::is_sorted(concat.begin(), concat.end(), GradedLexLess{}));
    }
    CHECK(init_memory_terms(1, 0).empty());
}

TEST_CASE("generators expand to the cube factors") {
    CHECK(generator_polynomial(0, 2) == parse_polynomial("x1", 2));
    CHECK(generator_polynomial(1, 2) == parse_polynomial("1-x1", 2));
    CHECK(generator_polynomial(2, 2) == parse_polynomial("x2", 2));
    CHECK(generator_polynomial(3, 2) == parse_polynomial("1-x2", 2));
    CHECK(generator_name(0) == "x1");
    CHECK(generator_name(3) == "(1-x2)");
    CHECK_THROWS_AS(generator_polynomial(4, 2), std::out_of_range);
}

TEST_CASE("one-variable action pool lists generator products in order") {
    Environment env(parse_polynomial("1 - 2*x1", 1), {}, EnvConfig{});
    env.reset();
    REQUIRE(env.memory_size() == 2); // x1, 1-x1
    CHECK(env.memory()[0].describe() == "x1");
    CHECK(env.memory()[1].describe() == "(1-x1)");
    // x1*x1, x1*(1-x1) from the first element; (1-x1)*x1 is a duplicate,
    // (1-x1)*(1-x1) is new.
    REQUIRE(env.action_count() == 3);
    CHECK(env.action(0).describe() == "x1^2");
    CHECK(env.action(1).describe() == "x1*(1-x1)");
    CHECK(env.action(2).describe() == "(1-x1)^2");
    CHECK(env.action(1).parent == 0);
    CHECK(env.action(2).multiplier_id == 1);
}

TEST_CASE("action pool equals the brute-force product set") {
    Problem p = load_problem(kDataDir + "/problems/C1.json");
    Environment env(p.regularized(), {}, EnvConfig{});
    env.reset();
    REQUIRE(env.memory_size() == 14);

    std::set<std::string> memory_keys, expected;
    for (const auto& m : env.memory()) memory_keys.insert(to_string(m.expansion));
    for (const auto& m : env.memory())
        for (int id = 0; id < 4; ++id) {
            Polynomial prod = poly_mul_naive(m.expansion, generator_polynomial(id, 2));
            const std::string key = to_string(prod);
            if (memory_keys.count(key) == 0) expected.insert(key);
        }
    std::set<std::string> got;
    for (int i = 0; i < env.action_count(); ++i)
        got.insert(to_string(env.action(i).expansion));
    CHECK(got == expected);
    CHECK(env.action_count() <= 2 * 2 * env.memory_size());
}

TEST_CASE("reward follows the normalized improvement rule") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->script = {optimal(-2.0), optimal(-1.0), with_status(LpStatus::Infeasible),
                       optimal(-0.5), optimal(1e-10)};
    Environment env(parse_polynomial("1 - 2*x1", 1), {}, EnvConfig{}, backend.get());
    EnvState s0 = env.reset();
    CHECK(s0.gamma == -2.0);
    CHECK(s0.gamma0 == -2.0);
    CHECK_FALSE(s0.done);
    CHECK(env.normalizer() == 2.0);

    StepResult r1 = env.step(0);
    CHECK(r1.reward == doctest::Approx(0.5)); // (-1 - -2)/|-2|
    CHECK(r1.state.kappa == 0);
    CHECK_FALSE(r1.done);

    // Re-admitting the same action changes nothing: penalty, kappa grows.
    StepResult r2 = env.step(0);
    CHECK(r2.reward == doctest::Approx(-0.05));
    CHECK(r2.state.kappa == 1);
    CHECK(r2.state.gamma == -1.0);

    // Infeasible LP maps to the sentinel bound.
    StepResult r3 = env.step(1);
    CHECK(r3.state.gamma == Environment::kInfeasibleGamma);
    CHECK(r3.reward == doctest::Approx((Environment::kInfeasibleGamma + 1.0) / 2.0));
    CHECK(r3.state.kappa == 0);
    CHECK_FALSE(r3.done);

    StepResult r4 = env.step(2);
    CHECK(r4.state.gamma == -0.5);
    CHECK_FALSE(r4.done);

    StepResult r5 = env.step(3);
    CHECK(r5.done);
    CHECK(r5.state.gamma >= -1e-8);
    CHECK(r5.reward == doctest::Approx(0.25).epsilon(1e-6));
    CHECK_THROWS_AS(env.step(4), std::logic_error);
}

TEST_CASE("numeric failure aborts the episode") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->script = {optimal(-2.0), with_status(LpStatus::NumericFailure)};
    Environment env(parse_polynomial("1 - 2*x1", 1), {}, EnvConfig{}, backend.get());
    env.reset();
    StepResult r = env.step(0);
    CHECK(r.done);
    CHECK(r.reward == 0.0);
    CHECK(r.state.failed);
    CHECK_THROWS_AS(env.step(1), std::logic_error);
}

TEST_CASE("episode ends when the step budget is exhausted") {
    auto backend = std::make_unique<ScriptedBackend>();
    backend->script = {optimal(-5.0), optimal(-5.0), optimal(-5.0), optimal(-5.0)};
    EnvConfig cfg;
    cfg.maxstep = 3;
    Environment env(parse_polynomial("1 - 2*x1", 1), {}, cfg, backend.get());
    env.reset();
    StepResult r1 = env.step(0);
    StepResult r2 = env.step(1);
    CHECK_FALSE(r2.done);
    StepResult r3 = env.step(2);
    CHECK(r3.done);
    CHECK(r3.state.gamma == -5.0);
    CHECK(r3.state.kappa == 3); // three no-improvement steps in a row
    CHECK(env.steps_taken() == 3);
}

TEST_CASE("non-negative objective succeeds immediately") {
    Environment env(parse_polynomial("1 + x1", 1), {}, EnvConfig{});
    EnvState s = env.reset();
    CHECK(s.done);
    CHECK(s.gamma >= -1e-8);
    CHECK_THROWS_AS(env.step(0), std::logic_error);

    Environment constant(parse_polynomial("1", 1), {}, EnvConfig{});
    EnvState sc = constant.reset();
    CHECK(sc.done);
    CHECK(sc.gamma == doctest::Approx(1.0));
}

TEST_CASE("bound is monotone and rewards add up along a random episode") {
    Problem p = load_problem(kDataDir + "/problems/C1.json");
    Environment env(p.regularized(), {}, EnvConfig{});
    EnvState s = env.reset();
    REQUIRE_FALSE(s.done);
    const double gamma0 = s.gamma0;
    REQUIRE(gamma0 < 0);

    testutil::Rng rng(0xc1ea11ed);
    double prev = s.gamma, positive_sum = 0.0;
    int memory_before = env.memory_size();
    while (!env.state().done && env.steps_taken() < 40) {
        std::vector<int> fresh;
        for (int i = 0; i < env.action_count(); ++i)
            if (!env.action_admitted(i)) fresh.push_back(i);
        REQUIRE_FALSE(fresh.empty());
        StepResult r = env.step(fresh[rng() % fresh.size()]);
        CHECK(r.state.gamma >= prev - 1e-8);
        CHECK(env.memory_size() == memory_before + 1);
        ++memory_before;
        if (r.reward > 0) positive_sum += r.reward;
        prev = r.state.gamma;
    }
    const double expected = (prev - gamma0) / std::abs(gamma0);
    CHECK(positive_sum == doctest::Approx(expected).epsilon(1e-5));
    CHECK(env.trace().size() == static_cast<size_t>(env.steps_taken()) + 1);
}

TEST_CASE("published seven-step episode proves the first benchmark") {
    Problem p = load_problem(kDataDir + "/problems/C1.json");
    Environment env(p.regularized(), {}, EnvConfig{});
    EnvState s = env.reset();
    REQUIRE_FALSE(s.done);

    const std::vector<KrivineTerm> script = {
        make_term({0, 0}, {0, 3}), // (1-x2)^3
        make_term({0, 0}, {0, 3}), // repeated in the published list
        make_term({1, 2}, {0, 0}), // x1*x2^2
        make_term({1, 1}, {1, 0}), // x1*x2*(1-x1)
        make_term({1, 0}, {2, 0}), // x1*(1-x1)^2
        make_term({1, 0}, {1, 1}), // x1*(1-x1)*(1-x2)
        make_term({0, 3}, {0, 0}), // x2^3
    };
    int steps_done = 0;
    for (size_t i = 0; i < script.size() && !env.state().done; ++i) {
        int idx = env.find_action(script[i]);
        REQUIRE(idx >= 0);
        StepResult r = env.step(idx);
        ++steps_done;
        if (i == 1) {
            // The duplicate admission is a wasted move.
            CHECK(r.reward == doctest::Approx(-0.05));
            CHECK(r.state.kappa >= 1);
        }
    }
    CHECK(env.state().done);
    CHECK(env.state().gamma >= -1e-8);
    CHECK(steps_done <= 7);
}

TEST_CASE("action features normalize the exponent pair") {
    CHECK(action_features(make_term({0, 0}, {0, 0}), 2, 4) ==
          std::vector<double>{0, 0, 0, 0});
    CHECK(action_features(make_term({2, 0}, {0, 1}), 2, 4) ==
          std::vector<double>{0.5, 0, 0, 0.25});
    // Injective over every term with degree <= cap.
    std::set<std::vector<double>> seen;
    auto all = init_memory_terms(2, 4);
    for (const auto& t : all) seen.insert(action_features(t, 2, 4));
    CHECK(seen.size() == all.size());
}

TEST_CASE("equality axioms enter the memory as signed pairs") {
    Polynomial f = parse_polynomial("1 - x1 - x2", 2);
    std::vector<Polynomial> axioms = {parse_polynomial("x1*x2", 2)};
    EnvConfig cfg;
    cfg.lemma_degree_cap = 2;
    Environment env(f, axioms, cfg);
    env.reset();

    int pos = -1, neg = -1;
    for (int i = 0; i < env.memory_size(); ++i) {
        const auto& e = env.memory()[i];
        if (e.is_krivine()) continue;
        if (e.axiom_negated)
            neg = i;
        else
            pos = i;
    }
    REQUIRE(pos >= 0);
    REQUIRE(neg >= 0);
    CHECK(env.memory()[pos].describe() == "+g1");
    CHECK(env.memory()[neg].describe() == "-g1");
    CHECK(env.memory()[pos].expansion == axioms[0]);
    CHECK(env.memory()[neg].expansion == poly_neg(axioms[0]));

    // The degree cap keeps axiom products out (deg(x1*x2*gen) = 3 > 2).
    for (int i = 0; i < env.action_count(); ++i)
        CHECK(env.action(i).expansion.degree() <= 2);

    EnvConfig open = cfg;
    open.lemma_degree_cap = 3;
    Environment env2(f, axioms, open);
    env2.reset();
    bool found_axiom_product = false;
    for (int i = 0; i < env2.action_count(); ++i) {
        const auto& a = env2.action(i);
        if (a.is_krivine() || a.multipliers.empty()) continue;
        found_axiom_product = true;
        CHECK(a.describe().find("g1*") != std::string::npos);
        KrivineTerm st = a.structure(2);
        CHECK(st.degree() == a.multipliers.size());
    }
    CHECK(found_axiom_product);
}

TEST_CASE("action indices are prefix-stable while the pool grows") {
    Problem p = load_problem(kDataDir + "/problems/C1.json");
    Environment env(p.regularized(), {}, EnvConfig{});
    env.reset();
    std::vector<std::string> before;
    for (int i = 0; i < env.action_count(); ++i) before.push_back(env.action(i).describe());
    const int n0 = env.action_count();

    env.step(0);
    env.step(5);
    CHECK(env.action_count() > n0);
    for (int i = 0; i < n0; ++i) CHECK(env.action(i).describe() == before[i]);
}

TEST_CASE("environment runs are deterministic") {
    Problem p = load_problem(kDataDir + "/problems/C2.json");
    Environment a(p.regularized(), {}, EnvConfig{});
    Environment b(p.regularized(), {}, EnvConfig{});
    a.reset();
    b.reset();
    REQUIRE(a.action_count() == b.action_count());
    for (int i = 0; i < a.action_count(); ++i)
        CHECK(a.action(i).describe() == b.action(i).describe());
    for (int s = 0; s < 5; ++s) {
        StepResult ra = a.step(s);
        StepResult rb = b.step(s);
        CHECK(ra.state.gamma == rb.state.gamma);
        CHECK(ra.reward == rb.reward);
    }
    REQUIRE(a.trace().size() == b.trace().size());
    for (size_t i = 0; i < a.trace().size(); ++i) {
        CHECK(a.trace()[i].element == b.trace()[i].element);
        CHECK(a.trace()[i].gamma == b.trace()[i].gamma);
    }
}

TEST_CASE("persistent memory survives reset while the episode state restarts") {
    Problem p = load_problem(kDataDir + "/problems/C1.json");
    EnvConfig cfg;
    cfg.persist_memory = true;
    Environment env(p.regularized(), {}, cfg);
    env.reset();
    const int m0 = env.memory_size();

    testutil::Rng rng(0x5eed);
    for (int s = 0; s < 3 && !env.state().done; ++s) {
        std::vector<int> fresh;
        for (int i = 0; i < env.action_count(); ++i)
            if (!env.action_admitted(i)) fresh.push_back(i);
        env.step(fresh[rng() % fresh.size()]);
    }
    const int grown_memory = env.memory_size();
    const int grown_actions = env.action_count();
    const double grown_gamma = env.state().gamma;
    REQUIRE(grown_memory > m0);

    EnvState s = env.reset();
    CHECK(env.memory_size() == grown_memory);
    CHECK(env.action_count() == grown_actions);
    CHECK(env.steps_taken() == 0);
    CHECK(env.trace().size() == 1);
    CHECK(s.kappa == 0);
    // the LP over the kept memory reproduces the bound and rebases gamma0
    CHECK(s.gamma == doctest::Approx(grown_gamma).epsilon(1e-9));
    CHECK(s.gamma0 == s.gamma);

    // the default configuration rebuilds the initial memory instead
    Environment fresh_env(p.regularized(), {}, EnvConfig{});
    fresh_env.reset();
    std::vector<int> fresh;
    for (int i = 0; i < fresh_env.action_count(); ++i)
        if (!fresh_env.action_admitted(i)) fresh.push_back(i);
    fresh_env.step(fresh[0]);
    fresh_env.reset();
    CHECK(fresh_env.memory_size() == m0);
}

TEST_CASE("a proved memory stays successful across persistent resets") {
    Problem p = load_problem(kDataDir + "/problems/C1.json");
    EnvConfig cfg;
    cfg.persist_memory = true;
    Environment env(p.regularized(), {}, cfg);
    env.reset();
    testutil::Rng rng(0xf00d);
    while (!env.state().done) {
        std::vector<int> fresh;
        for (int i = 0; i < env.action_count(); ++i)
            if (!env.action_admitted(i)) fresh.push_back(i);
        REQUIRE_FALSE(fresh.empty());
        env.step(fresh[rng() % fresh.size()]);
    }
    REQUIRE(env.state().gamma >= -1e-8);

    EnvState s = env.reset();
    CHECK(s.done); // the kept memory already certifies the bound
    CHECK(s.gamma >= -1e-8);
    CHECK(env.steps_taken() == 0);
}

TEST_CASE("trace serialization lists one line per record") {
    Problem p = load_problem(kDataDir + "/problems/C1.json");
    Environment env(p.regularized(), {}, EnvConfig{});
    env.reset();
    env.step(0);
    env.step(1);

    const std::string text = trace_to_text(env.trace());
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    REQUIRE(lines.size() == env.trace().size());
    CHECK(lines[0].rfind("step=0 element=init gamma=", 0) == 0);
    CHECK(lines[0].find(" memory=14 actions=20") != std::string::npos);
    CHECK(lines[1].rfind("step=1 element=" + env.trace()[1].element, 0) == 0);
    for (const std::string& l : lines) {
        CHECK(l.find(" gamma=") != std::string::npos);
        CHECK(l.find(" reward=") != std::string::npos);
        CHECK(l.find(" memory=") != std::string::npos);
        CHECK(l.find(" actions=") != std::string::npos);
    }
}
