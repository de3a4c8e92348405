#include "doctest.h"

#include "krivine/agent.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <set>

using namespace krivine;

namespace {

FeatureVec random_features(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    FeatureVec v(n);
    for (auto& x : v) x = d(rng);
    return v;
}

// Plain-loop forward pass over raw weight arrays; shares nothing with the
// Eigen implementation.
double straight_line_value(const QNetwork& net, const FeatureVec& x) {
    std::vector<double> cur(x);
    const std::size_t nlayers = net.weights().size();
    for (std::size_t l = 0; l < nlayers; ++l) {
        const auto& W = net.weights()[l];
        const auto& b = net.biases()[l];
        std::vector<double> next(static_cast<std::size_t>(W.rows()));
        for (Eigen::Index i = 0; i < W.rows(); ++i) {
            double acc = b(i);
            for (Eigen::Index j = 0; j < W.cols(); ++j) acc += W(i, j) * cur[static_cast<std::size_t>(j)];
            if (l + 1 < nlayers && acc < 0.0) acc = 0.0;
            next[static_cast<std::size_t>(i)] = acc;
        }
        cur = std::move(next);
    }
    return cur[0];
}

void fill_constant(QNetwork& net, double value) {
    for (auto& w : net.weights()) w.setConstant(value);
    for (auto& b : net.biases()) b.setConstant(value);
}

// Batch of terminal transitions (fixed targets) for optimization tests.
std::vector<Transition> fixed_batch(std::size_t n, std::size_t state_dim,
                                    std::size_t action_dim, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    std::vector<Transition> batch(n);
    for (auto& t : batch) {
        t.state = random_features(state_dim, rng);
        t.action = random_features(action_dim, rng);
        t.reward = d(rng);
        t.done = true;
    }
    return batch;
}

std::vector<const Transition*> pointers(const std::vector<Transition>& v) {
    std::vector<const Transition*> p;
    for (const auto& t : v) p.push_back(&t);
    return p;
}

} // namespace

TEST_CASE("initial weights are bounded and biases zero") {
    QNetwork net(6, 8, 3, 42);
    REQUIRE(net.weights().size() == 4);
    CHECK(net.parameter_count() == (6 + 1) * 8 + 2 * (8 + 1) * 8 + (8 + 1) * 1);
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        const auto& w = net.weights()[l];
        const double bound = std::sqrt(6.0 / (w.cols() + w.rows()));
        CHECK(w.cwiseAbs().maxCoeff() <= bound);
        CHECK(w.cwiseAbs().maxCoeff() > 0.0);
        CHECK(net.biases()[l].cwiseAbs().maxCoeff() == 0.0);
    }
    QNetwork same(6, 8, 3, 42), other(6, 8, 3, 43);
    CHECK(net.weights()[0] == same.weights()[0]);
    CHECK(net.weights()[0] != other.weights()[0]);
}

TEST_CASE("q_forward computes the rectified linear composition") {
    QNetwork zero(4, 3, 2, 1);
    fill_constant(zero, 0.0);
    CHECK(q_forward(zero, {1.0, -2.0}, {3.0, 4.0}) == 0.0);

    // Single linear layer with unit weights sums its inputs.
    QNetwork linear(4, 0, 0, 1);
    REQUIRE(linear.weights().size() == 1);
    linear.weights()[0].setOnes();
    CHECK(q_forward(linear, {1.0, 2.0}, {3.0, -4.0}) == doctest::Approx(2.0).epsilon(1e-15));

    std::mt19937_64 rng(7);
    QNetwork net(5, 7, 3, 99);
    for (int trial = 0; trial < 50; ++trial) {
        const FeatureVec x = random_features(5, rng);
        CHECK(net.value(x) == doctest::Approx(straight_line_value(net, x)).epsilon(1e-12));
    }

    CHECK_THROWS_AS(net.value({1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(QNetwork().value({1.0}), std::logic_error);
}

TEST_CASE("epsilon-greedy selection follows the policy distribution") {
    std::mt19937_64 rng(11);
    QNetwork net(3, 4, 1, 5);
    const FeatureVec state = {0.5};
    const std::vector<FeatureVec> actions = {{0.0, 0.1}, {0.6, 0.2}, {0.3, 0.9}, {0.8, 0.8}};

    int argmax = 0;
    double best = q_forward(net, state, actions[0]);
    for (std::size_t i = 1; i < actions.size(); ++i)
        if (q_forward(net, state, actions[i]) > best) {
            best = q_forward(net, state, actions[i]);
            argmax = static_cast<int>(i);
        }
    for (int k = 0; k < 20; ++k) CHECK(select_action(net, state, actions, 0.0, rng) == argmax);

    // All-equal values tie-break to the lowest index.
    QNetwork flat(3, 4, 1, 5);
    fill_constant(flat, 0.0);
    CHECK(select_action(flat, state, actions, 0.0, rng) == 0);

    // Pure exploration is uniform: chi-squared over 10^4 draws, 4 bins.
    std::vector<int> counts(actions.size(), 0);
    const int draws = 10000;
    for (int k = 0; k < draws; ++k) ++counts[static_cast<std::size_t>(
        select_action(net, state, actions, 1.0, rng))];
    double chi2 = 0.0;
    const double expected = draws / 4.0;
    for (int c : counts) chi2 += (c - expected) * (c - expected) / expected;
    CHECK(chi2 < 16.27); // 99.9th percentile of chi-squared with 3 dof

    // Greedy-arm frequency at eps = 0.5 over |A| = 4 is 1 - eps + eps/|A|.
    int hits = 0;
    const int big = 100000;
    for (int k = 0; k < big; ++k)
        if (select_action(net, state, actions, 0.5, rng) == argmax) ++hits;
    const double p = 1.0 - 0.5 + 0.5 / 4.0;
    const double sigma = std::sqrt(p * (1.0 - p) / big);
    CHECK(std::abs(hits / static_cast<double>(big) - p) < 3.0 * sigma);

    CHECK_THROWS_AS(select_action(net, state, {}, 0.5, rng), std::invalid_argument);
}

TEST_CASE("td targets bootstrap over the stored action prefix") {
    QNetwork target(4, 5, 2, 3);
    EpisodeTraces traces;
    const long ep = traces.begin_episode();
    std::mt19937_64 rng(17);
    for (int i = 0; i < 6; ++i) traces.record(ep, random_features(2, rng));

    Transition terminal;
    terminal.state = {0.1, 0.2};
    terminal.action = {0.3, 0.4};
    terminal.reward = 1.0;
    terminal.done = true;
    terminal.episode_id = ep;
    CHECK(td_targets({&terminal}, target, 0.99, traces) == std::vector<double>{1.0});

    Transition mid;
    mid.state = {0.1, 0.2};
    mid.action = {0.3, 0.4};
    mid.reward = 0.25;
    mid.next_state = {0.5, -0.5};
    mid.next_action_count = 4;
    mid.episode_id = ep;

    CHECK(td_targets({&mid}, target, 0.0, traces) == std::vector<double>{0.25});

    // Brute-force maximum over exactly the first next_action_count entries.
    double best = -1e300;
    for (int i = 0; i < mid.next_action_count; ++i)
        best = std::max(best, q_forward(target, mid.next_state,
                                        traces.trace(ep)[static_cast<std::size_t>(i)]));
    const double y = td_targets({&mid}, target, 0.9, traces)[0];
    CHECK(y == doctest::Approx(0.25 + 0.9 * best).epsilon(1e-14));

    // Prefix bounds and episode ids are enforced.
    Transition dangling = mid;
    dangling.episode_id = 999;
    CHECK_THROWS_AS(td_targets({&dangling}, target, 0.9, traces), std::out_of_range);
    Transition overlong = mid;
    overlong.next_action_count = 7;
    CHECK_THROWS_AS(td_targets({&overlong}, target, 0.9, traces), std::out_of_range);
    Transition empty = mid;
    empty.next_action_count = 0;
    CHECK_THROWS_AS(td_targets({&empty}, target, 0.9, traces), std::out_of_range);
}

TEST_CASE("backpropagation matches central finite differences") {
    std::mt19937_64 rng(23);
    QNetwork net(4, 6, 2, 77);
    std::vector<FeatureVec> inputs;
    std::vector<double> targets;
    std::uniform_real_distribution<double> d(-1.0, 1.0);
    for (int i = 0; i < 5; ++i) {
        inputs.push_back(random_features(4, rng));
        targets.push_back(d(rng));
    }

    Gradients g = Gradients::zeros_like(net);
    batch_gradient(net, inputs, targets, g);

    const double h = 1e-6;
    auto check_param = [&](double& p, double analytic) {
        const double saved = p;
        p = saved + h;
        const double up = batch_loss(net, inputs, targets);
        p = saved - h;
        const double down = batch_loss(net, inputs, targets);
        p = saved;
        const double numeric = (up - down) / (2.0 * h);
        const double scale = std::max(1e-6, std::abs(analytic) + std::abs(numeric));
        CHECK(std::abs(analytic - numeric) / scale < 1e-4);
    };
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        auto& W = net.weights()[l];
        for (Eigen::Index i = 0; i < W.size(); ++i) check_param(W.data()[i], g.W[l].data()[i]);
        auto& b = net.biases()[l];
        for (Eigen::Index i = 0; i < b.size(); ++i) check_param(b.data()[i], g.b[l].data()[i]);
    }
}

TEST_CASE("adamw reproduces the closed-form single step") {
    // One linear unit q = w*x + b, one sample (x = 2, y = 0.1).
    QNetwork net(1, 0, 0, 1);
    net.weights()[0](0, 0) = 0.7;
    net.biases()[0](0) = 0.3;

    Gradients g = Gradients::zeros_like(net);
    const double loss = batch_gradient(net, {{2.0}}, {0.1}, g);
    const double q = 0.7 * 2.0 + 0.3;
    const double diff = q - 0.1;
    CHECK(loss == doctest::Approx(diff * diff).epsilon(1e-15));
    const double gw = 2.0 * diff * 2.0;
    const double gb = 2.0 * diff;
    CHECK(g.W[0](0, 0) == doctest::Approx(gw).epsilon(1e-15));
    CHECK(g.b[0](0) == doctest::Approx(gb).epsilon(1e-15));

    AdamWOptions o;
    AdamW opt(net, o);
    opt.step(net, g);
    CHECK(opt.steps() == 1);

    // First step: mhat = g, vhat = g^2 exactly.
    auto expected = [&](double p, double grad) {
        const double mhat = grad;
        const double vhat = grad * grad;
        return p * (1.0 - o.lr * o.weight_decay) - o.lr * mhat / (std::sqrt(vhat) + o.eps);
    };
    CHECK(net.weights()[0](0, 0) == doctest::Approx(expected(0.7, gw)).epsilon(1e-12));
    CHECK(net.biases()[0](0) == doctest::Approx(expected(0.3, gb)).epsilon(1e-12));
}

TEST_CASE("adamw with zero gradient decays parameters exactly") {
    QNetwork net(3, 4, 2, 9);
    const auto before = net.weights();
    AdamWOptions o;
    AdamW opt(net, o);
    Gradients zero = Gradients::zeros_like(net);
    opt.step(net, zero);
    for (std::size_t l = 0; l < before.size(); ++l) {
        const Eigen::MatrixXd expected = before[l] * (1.0 - o.lr * o.weight_decay);
        CHECK((net.weights()[l] - expected).cwiseAbs().maxCoeff() == 0.0);
        CHECK(net.biases()[l].cwiseAbs().maxCoeff() == 0.0); // 0 stays 0
    }
}

TEST_CASE("training on targets equal to predictions leaves a zero gradient") {
    std::mt19937_64 rng(31);
    QNetwork net(4, 5, 2, 13);
    std::vector<Transition> batch = fixed_batch(6, 2, 2, rng);
    EpisodeTraces traces;
    for (auto& t : batch) {
        FeatureVec x = t.state;
        x.insert(x.end(), t.action.begin(), t.action.end());
        t.reward = net.value(x); // terminal target == current prediction
    }
    QNetwork target = net;
    AdamW opt(net);
    const auto before = net.weights();
    const double loss = train_step(net, target, pointers(batch), traces, 0.99, opt);
    CHECK(loss == doctest::Approx(0.0).epsilon(1e-20));
    // Zero gradient: the update reduces to the pure decay rescaling.
    for (std::size_t l = 0; l < before.size(); ++l) {
        const Eigen::MatrixXd expected = before[l] * (1.0 - opt.options().lr * opt.options().weight_decay);
        CHECK((net.weights()[l] - expected).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("two hundred steps overfit a fixed batch") {
    std::mt19937_64 rng(37);
    QNetwork net(4, 8, 2, 21);
    QNetwork target = net;
    std::vector<Transition> batch = fixed_batch(8, 2, 2, rng);
    EpisodeTraces traces;
    AdamWOptions o;
    o.lr = 1e-2;          // fixture rate: 200 steps must be able to cross the gap
    o.weight_decay = 0.0; // pure fit; decay floors the achievable loss
    AdamW opt(net, o);

    const double initial = train_step(net, target, pointers(batch), traces, 0.99, opt);
    REQUIRE(initial > 0.0);
    double final_loss = initial;
    for (int i = 0; i < 199; ++i)
        final_loss = train_step(net, target, pointers(batch), traces, 0.99, opt);
    CHECK(final_loss < 1e-3 * initial);
}

TEST_CASE("non-finite losses abort training") {
    std::mt19937_64 rng(41);
    QNetwork net(4, 4, 1, 2);
    net.weights()[0](0, 0) = std::numeric_limits<double>::quiet_NaN();
    QNetwork target(4, 4, 1, 2);
    std::vector<Transition> batch = fixed_batch(2, 2, 2, rng);
    EpisodeTraces traces;
    AdamW opt(net);
    CHECK_THROWS_AS(train_step(net, target, pointers(batch), traces, 0.99, opt),
                    std::runtime_error);
}

TEST_CASE("target sync copies parameters bitwise") {
    QNetwork net(5, 6, 2, 3);
    QNetwork target(5, 6, 2, 4);
    REQUIRE(net.weights()[0] != target.weights()[0]);
    sync_target(net, target);
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        CHECK(net.weights()[l] == target.weights()[l]);
        CHECK(net.biases()[l] == target.biases()[l]);
    }
    std::mt19937_64 rng(5);
    const FeatureVec x = random_features(5, rng);
    CHECK(net.value(x) == target.value(x)); // exact, not approximate

    QNetwork small(5, 4, 2, 3);
    CHECK_THROWS_AS(sync_target(net, small), std::invalid_argument);
}

TEST_CASE("replay buffer is a ring with distinct-index sampling") {
    ReplayBuffer buf(5);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 8; ++i) {
        Transition t;
        t.reward = i;
        buf.push(t);
    }
    CHECK(buf.size() == 5);
    CHECK(buf.total_pushed() == 8);
    // Entries 0..2 were overwritten; rewards 3..7 remain.
    std::set<int> rewards;
    for (std::size_t i = 0; i < buf.size(); ++i)
        rewards.insert(static_cast<int>(buf.at(i).reward));
    CHECK(rewards == std::set<int>{3, 4, 5, 6, 7});

    for (int trial = 0; trial < 50; ++trial) {
        auto batch = buf.sample(4, rng);
        std::set<const Transition*> uniq(batch.begin(), batch.end());
        CHECK(uniq.size() == 4);
    }
    auto all = buf.sample(5, rng);
    CHECK(std::set<const Transition*>(all.begin(), all.end()).size() == 5);
    CHECK_THROWS_AS(buf.sample(6, rng), std::invalid_argument);
    CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
}

TEST_CASE("epsilon schedule decays linearly then stays flat") {
    EpsilonSchedule sched(1.0, 0.05, 1000);
    CHECK(sched.at(0) == 1.0);
    CHECK(sched.at(500) == doctest::Approx(0.525));
    CHECK(sched.at(1000) == 0.05);
    CHECK(sched.at(5000) == 0.05);
    CHECK_THROWS_AS(EpsilonSchedule(1.0, 0.05, 0), std::invalid_argument);
}

TEST_CASE("model files round trip bitwise") {
    QNetwork net(6, 8, 3, 1234);
    // Perturb away from the fresh init so the round trip is non-trivial.
    net.weights()[1](2, 3) = 0.123456789012345;
    net.biases()[0](1) = -7.5;

    const std::string path = "model_roundtrip.bin";
    save_model(net, path);
    QNetwork back = load_model(path);
    CHECK(back.same_architecture(net));
    CHECK(back.seed() == net.seed());
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        CHECK(net.weights()[l] == back.weights()[l]);
        CHECK(net.biases()[l] == back.biases()[l]);
    }

    CHECK_THROWS_AS(load_model(path, 7), std::runtime_error); // wrong input width
    CHECK(load_model(path, 6).input_dim() == 6);

    // Corruptions: bad magic, bad version, truncation, trailing bytes.
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();

    auto write_bytes = [](const std::string& p, const std::string& data) {
        std::ofstream out(p, std::ios::binary);
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
    };
    std::string bad = bytes;
    bad[0] = 'X';
    write_bytes("model_badmagic.bin", bad);
    CHECK_THROWS_AS(load_model("model_badmagic.bin"), std::runtime_error);

    bad = bytes;
    bad[4] = 9;
    write_bytes("model_badversion.bin", bad);
    CHECK_THROWS_AS(load_model("model_badversion.bin"), std::runtime_error);

    write_bytes("model_truncated.bin", bytes.substr(0, bytes.size() / 2));
    CHECK_THROWS_AS(load_model("model_truncated.bin"), std::runtime_error);

    write_bytes("model_trailing.bin", bytes + "junk");
    CHECK_THROWS_AS(load_model("model_trailing.bin"), std::runtime_error);

    CHECK_THROWS_AS(load_model("model_missing.bin"), std::runtime_error);
    for (const char* p : {"model_roundtrip.bin", "model_badmagic.bin", "model_badversion.bin",
                          "model_truncated.bin", "model_trailing.bin"})
        std::remove(p);
}
