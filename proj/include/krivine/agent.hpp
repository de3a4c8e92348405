#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

namespace krivine {

using FeatureVec = std::vector<double>;

// Fully connected scalar-valued network: input -> (width x layers, rectified
// linear) -> 1, identity on the output. Weights start uniform in
// +-sqrt(6/(fan_in+fan_out)) from the given seed, biases at zero. The
// architecture is fixed at construction.
class QNetwork {
public:
    QNetwork() = default;
    QNetwork(int input_dim, int hidden_width, int hidden_layers, std::uint64_t seed);

    double value(const FeatureVec& x) const; // throws on dimension mismatch

    int input_dim() const { return input_dim_; }
    int hidden_width() const { return width_; }
    int hidden_layers() const { return layers_; }
    std::uint64_t seed() const { return seed_; }
    bool same_architecture(const QNetwork& o) const;
    std::size_t parameter_count() const; // sum of (fan_in + 1) * fan_out

    std::vector<Eigen::MatrixXd>& weights() { return W_; }
    std::vector<Eigen::VectorXd>& biases() { return b_; }
    const std::vector<Eigen::MatrixXd>& weights() const { return W_; }
    const std::vector<Eigen::VectorXd>& biases() const { return b_; }

private:
    int input_dim_ = 0, width_ = 0, layers_ = 0;
    std::uint64_t seed_ = 0;
    std::vector<Eigen::MatrixXd> W_; // W[l]: rows = fan_out, cols = fan_in
    std::vector<Eigen::VectorXd> b_;
};

// Q(s, a) = network([state_feat || action_feat]).
double q_forward(const QNetwork& net, const FeatureVec& state_feat,
                 const FeatureVec& action_feat);

// Forward pass over column-stacked inputs; entry j is net(inputs.col(j)).
Eigen::VectorXd batch_values(const QNetwork& net, const Eigen::MatrixXd& inputs);

// Per-layer gradient storage, same shapes as the network parameters.
struct Gradients {
    std::vector<Eigen::MatrixXd> W;
    std::vector<Eigen::VectorXd> b;

    static Gradients zeros_like(const QNetwork& net);
    void set_zero();
    double max_abs() const;
};

// Mean-squared loss (1/N) sum_i (net(x_i) - y_i)^2 and, for the gradient
// variant, its backpropagated derivative with respect to every parameter.
double batch_loss(const QNetwork& net, const std::vector<FeatureVec>& inputs,
                  const std::vector<double>& targets);
double batch_gradient(const QNetwork& net, const std::vector<FeatureVec>& inputs,
                      const std::vector<double>& targets, Gradients& out);

struct AdamWOptions {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 1e-4; // decoupled: applied to the parameter, not the gradient
};

// AdamW with bias-corrected moments; the decay term is added outside the
// moment update, so a zero-gradient step rescales p to p*(1 - lr*wd).
class AdamW {
public:
    explicit AdamW(const QNetwork& net, AdamWOptions opts = {});
    void step(QNetwork& net, const Gradients& g); // throws on shape mismatch
    long steps() const { return t_; }
    const AdamWOptions& options() const { return opts_; }

private:
    AdamWOptions opts_;
    long t_ = 0;
    Gradients m_, v_;
};

// One environment step as seen by the learner. Action features of the next
// state are not copied: next_action_count is a prefix length into the
// episode's append-only action-feature trace, resolved through episode_id.
struct Transition {
    FeatureVec state;
    FeatureVec action;
    double reward = 0.0;
    FeatureVec next_state;
    int next_action_count = 0;
    bool done = false;
    long episode_id = 0;
};

// Append-only action-feature lists, one per episode, shared by every
// transition recorded during that episode.
class EpisodeTraces {
public:
    long begin_episode(); // returns a fresh id
    void record(long episode_id, FeatureVec action_features);
    const std::vector<FeatureVec>& trace(long episode_id) const; // throws on dangling id
    std::size_t episodes() const { return traces_.size(); }

private:
    long next_id_ = 0;
    std::unordered_map<long, std::vector<FeatureVec>> traces_;
};

// Fixed-capacity ring; push overwrites the oldest entry once full.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);
    void push(Transition t);
    std::size_t size() const { return data_.size(); }
    std::size_t capacity() const { return capacity_; }
    long total_pushed() const { return pushed_; }
    const Transition& at(std::size_t i) const { return data_.at(i); }

    // n distinct entries, uniform without replacement; throws if n > size().
    std::vector<const Transition*> sample(std::size_t n, std::mt19937_64& rng) const;

private:
    std::size_t capacity_;
    std::size_t write_ = 0;
    long pushed_ = 0;
    std::vector<Transition> data_;
};

// Epsilon-greedy over the current action list: probability eps of a uniform
// pick, otherwise the argmax of Q(s, a) with ties resolved to the lowest
// index. Throws on an empty action list.
int select_action(const QNetwork& net, const FeatureVec& state,
                  const std::vector<FeatureVec>& actions, double epsilon,
                  std::mt19937_64& rng);

// y_i = r_i for terminal transitions, else r_i + delta * max over the first
// next_action_count entries of the episode trace of Q_target(s', a').
std::vector<double> td_targets(const std::vector<const Transition*>& batch,
                               const QNetwork& target_net, double delta,
                               const EpisodeTraces& traces);

// One minimization step of the mean-squared temporal-difference loss over
// the batch; returns the pre-step loss. Throws on a non-finite loss.
double train_step(QNetwork& net, const QNetwork& target_net,
                  const std::vector<const Transition*>& batch,
                  const EpisodeTraces& traces, double delta, AdamW& opt);

// Copies every parameter of net into target; architectures must match.
void sync_target(const QNetwork& net, QNetwork& target);

// Linear start -> end over the first decay_frames frames, flat afterwards.
class EpsilonSchedule {
public:
    EpsilonSchedule(double start, double end, long decay_frames);
    double at(long frame) const;

private:
    double start_, end_;
    long decay_;
};

// Versioned binary model files: architecture header, seed metadata, raw
// parameter blob. Round trips are bitwise exact. load_model rejects version
// or size mismatches; a non-negative expected_input_dim adds a width check.
void save_model(const QNetwork& net, const std::string& path);
QNetwork load_model(const std::string& path, int expected_input_dim = -1);

} // namespace krivine
