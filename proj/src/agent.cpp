#include "krivine/agent.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace krivine {

namespace {

Eigen::VectorXd to_vector(const FeatureVec& x) {
    return Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
}

// Forward pass keeping the post-activation output of every layer; entry 0 is
// the input itself.
std::vector<Eigen::VectorXd> forward_trace(const QNetwork& net, const Eigen::VectorXd& x) {
    std::vector<Eigen::VectorXd> acts;
    acts.reserve(net.weights().size() + 1);
    acts.push_back(x);
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        Eigen::VectorXd z = net.weights()[l] * acts.back() + net.biases()[l];
        if (l + 1 < net.weights().size()) z = z.cwiseMax(0.0); // hidden: rectify
        acts.push_back(std::move(z));
    }
    return acts;
}

} // namespace

QNetwork::QNetwork(int input_dim, int hidden_width, int hidden_layers, std::uint64_t seed)
    : input_dim_(input_dim), width_(hidden_width), layers_(hidden_layers), seed_(seed) {
    if (input_dim < 1) throw std::invalid_argument("input dimension must be positive");
    if (hidden_layers < 0) throw std::invalid_argument("negative layer count");
    if (hidden_layers > 0 && hidden_width < 1)
        throw std::invalid_argument("hidden width must be positive");

    std::vector<int> dims;
    dims.push_back(input_dim);
    for (int l = 0; l < hidden_layers; ++l) dims.push_back(hidden_width);
    dims.push_back(1);

    std::mt19937_64 rng(seed);
    for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l], fan_out = dims[l + 1];
        const double r = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-r, r);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int i = 0; i < fan_out; ++i)
            for (int j = 0; j < fan_in; ++j) w(i, j) = dist(rng);
        W_.push_back(std::move(w));
        b_.push_back(Eigen::VectorXd::Zero(fan_out));
    }
}

double QNetwork::value(const FeatureVec& x) const {
    if (W_.empty()) throw std::logic_error("uninitialized network");
    if (static_cast<int>(x.size()) != input_dim_)
        throw std::invalid_argument("input has dimension " + std::to_string(x.size()) +
                                    ", network expects " + std::to_string(input_dim_));
    return forward_trace(*this, to_vector(x)).back()(0);
}

bool QNetwork::same_architecture(const QNetwork& o) const {
    return input_dim_ == o.input_dim_ && width_ == o.width_ && layers_ == o.layers_;
}

std::size_t QNetwork::parameter_count() const {
    std::size_t n = 0;
    for (std::size_t l = 0; l < W_.size(); ++l)
        n += static_cast<std::size_t>(W_[l].size()) + static_cast<std::size_t>(b_[l].size());
    return n;
}

double q_forward(const QNetwork& net, const FeatureVec& state_feat,
                 const FeatureVec& action_feat) {
    FeatureVec x;
    x.reserve(state_feat.size() + action_feat.size());
    x.insert(x.end(), state_feat.begin(), state_feat.end());
    x.insert(x.end(), action_feat.begin(), action_feat.end());
    return net.value(x);
}

Eigen::VectorXd batch_values(const QNetwork& net, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() != net.input_dim())
        throw std::invalid_argument("inputs have " + std::to_string(inputs.rows()) +
                                    " rows, network expects " + std::to_string(net.input_dim()));
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        Eigen::MatrixXd z = (net.weights()[l] * a).colwise() + net.biases()[l];
        if (l + 1 < net.weights().size()) z = z.cwiseMax(0.0); // hidden: rectify
        a = std::move(z);
    }
    return a.row(0).transpose();
}

Gradients Gradients::zeros_like(const QNetwork& net) {
    Gradients g;
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        g.W.push_back(Eigen::MatrixXd::Zero(net.weights()[l].rows(), net.weights()[l].cols()));
        g.b.push_back(Eigen::VectorXd::Zero(net.biases()[l].size()));
    }
    return g;
}

void Gradients::set_zero() {
    for (auto& w : W) w.setZero();
    for (auto& v : b) v.setZero();
}

double Gradients::max_abs() const {
    double m = 0.0;
    for (const auto& w : W) m = std::max(m, w.cwiseAbs().maxCoeff());
    for (const auto& v : b)
        if (v.size() > 0) m = std::max(m, v.cwiseAbs().maxCoeff());
    return m;
}

double batch_loss(const QNetwork& net, const std::vector<FeatureVec>& inputs,
                  const std::vector<double>& targets) {
    if (inputs.size() != targets.size() || inputs.empty())
        throw std::invalid_argument("batch inputs and targets must match and be non-empty");
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const double d = net.value(inputs[i]) - targets[i];
        loss += d * d;
    }
    return loss / static_cast<double>(inputs.size());
}

double batch_gradient(const QNetwork& net, const std::vector<FeatureVec>& inputs,
                      const std::vector<double>& targets, Gradients& out) {
    if (inputs.size() != targets.size() || inputs.empty())
        throw std::invalid_argument("batch inputs and targets must match and be non-empty");
    if (out.W.size() != net.weights().size()) out = Gradients::zeros_like(net);
    out.set_zero();

    const double n = static_cast<double>(inputs.size());
    double loss = 0.0;
    for (std::size_t i = 0; i < inputs.size(); ++i) {
        const auto acts = forward_trace(net, to_vector(inputs[i]));
        const double q = acts.back()(0);
        const double d = q - targets[i];
        loss += d * d;

        // dL/dq for the mean of squared errors.
        Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, 2.0 * d / n);
        for (int l = static_cast<int>(net.weights().size()) - 1; l >= 0; --l) {
            out.W[static_cast<std::size_t>(l)].noalias() +=
                delta * acts[static_cast<std::size_t>(l)].transpose();
            out.b[static_cast<std::size_t>(l)] += delta;
            if (l == 0) break;
            Eigen::VectorXd up = net.weights()[static_cast<std::size_t>(l)].transpose() * delta;
            // Rectifier gate of the producing layer.
            const Eigen::VectorXd& a = acts[static_cast<std::size_t>(l)];
            for (Eigen::Index k = 0; k < up.size(); ++k)
                if (a(k) <= 0.0) up(k) = 0.0;
            delta = std::move(up);
        }
    }
    return loss / n;
}

AdamW::AdamW(const QNetwork& net, AdamWOptions opts)
    : opts_(opts), m_(Gradients::zeros_like(net)), v_(Gradients::zeros_like(net)) {}

void AdamW::step(QNetwork& net, const Gradients& g) {
    if (g.W.size() != m_.W.size()) throw std::invalid_argument("gradient shape mismatch");
    ++t_;
    const double bc1 = 1.0 - std::pow(opts_.beta1, t_);
    const double bc2 = 1.0 - std::pow(opts_.beta2, t_);
    auto update = [&](auto& p, const auto& grad, auto& m, auto& v) {
        if (p.rows() != grad.rows() || p.cols() != grad.cols())
            throw std::invalid_argument("gradient shape mismatch");
        m = opts_.beta1 * m + (1.0 - opts_.beta1) * grad;
        v = opts_.beta2 * v + (1.0 - opts_.beta2) * grad.cwiseProduct(grad);
        const auto mhat = (m / bc1).eval();
        const auto vhat = (v / bc2).eval();
        p *= (1.0 - opts_.lr * opts_.weight_decay); // decay the pre-step parameter
        p -= opts_.lr * (mhat.array() / (vhat.array().sqrt() + opts_.eps)).matrix();
    };
    for (std::size_t l = 0; l < g.W.size(); ++l) {
        update(net.weights()[l], g.W[l], m_.W[l], v_.W[l]);
        update(net.biases()[l], g.b[l], m_.b[l], v_.b[l]);
    }
}

long EpisodeTraces::begin_episode() {
    const long id = next_id_++;
    traces_.emplace(id, std::vector<FeatureVec>{});
    return id;
}

void EpisodeTraces::record(long episode_id, FeatureVec action_features) {
    auto it = traces_.find(episode_id);
    if (it == traces_.end()) throw std::out_of_range("unknown episode id");
    it->second.push_back(std::move(action_features));
}

const std::vector<FeatureVec>& EpisodeTraces::trace(long episode_id) const {
    auto it = traces_.find(episode_id);
    if (it == traces_.end()) throw std::out_of_range("unknown episode id");
    return it->second;
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay capacity must be positive");
}

void ReplayBuffer::push(Transition t) {
    if (data_.size() < capacity_) {
        data_.push_back(std::move(t));
    } else {
        data_[write_] = std::move(t);
    }
    write_ = (write_ + 1) % capacity_;
    ++pushed_;
}

std::vector<const Transition*> ReplayBuffer::sample(std::size_t n, std::mt19937_64& rng) const {
    if (n > data_.size()) throw std::invalid_argument("sample larger than buffer");
    // Partial Fisher-Yates over an index array: distinct by construction.
    std::vector<std::size_t> idx(data_.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::vector<const Transition*> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, idx.size() - 1);
        std::swap(idx[i], idx[pick(rng)]);
        out.push_back(&data_[idx[i]]);
    }
    return out;
}

int select_action(const QNetwork& net, const FeatureVec& state,
                  const std::vector<FeatureVec>& actions, double epsilon,
                  std::mt19937_64& rng) {
    if (actions.empty()) throw std::invalid_argument("empty action list");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) {
        std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
        return static_cast<int>(pick(rng));
    }
    Eigen::MatrixXd inputs(net.input_dim(), static_cast<Eigen::Index>(actions.size()));
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (state.size() + actions[i].size() != static_cast<std::size_t>(net.input_dim()))
            throw std::invalid_argument("state and action features do not fill the network input");
        for (std::size_t k = 0; k < state.size(); ++k)
            inputs(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(i)) = state[k];
        for (std::size_t k = 0; k < actions[i].size(); ++k)
            inputs(static_cast<Eigen::Index>(state.size() + k), static_cast<Eigen::Index>(i)) =
                actions[i][k];
    }
    const Eigen::VectorXd q = batch_values(net, inputs);
    int best = 0;
    for (Eigen::Index i = 1; i < q.size(); ++i)
        if (q(i) > q(best)) best = static_cast<int>(i);
    return best;
}

std::vector<double> td_targets(const std::vector<const Transition*>& batch,
                               const QNetwork& target_net, double delta,
                               const EpisodeTraces& traces) {
    std::vector<double> y;
    y.reserve(batch.size());
    for (const Transition* t : batch) {
        if (t->done) {
            y.push_back(t->reward);
            continue;
        }
        const auto& feats = traces.trace(t->episode_id);
        if (t->next_action_count < 1 ||
            t->next_action_count > static_cast<int>(feats.size()))
            throw std::out_of_range("next_action_count outside the episode trace");
        Eigen::MatrixXd inputs(target_net.input_dim(), t->next_action_count);
        for (int i = 0; i < t->next_action_count; ++i) {
            const FeatureVec& af = feats[static_cast<std::size_t>(i)];
            if (t->next_state.size() + af.size() !=
                static_cast<std::size_t>(target_net.input_dim()))
                throw std::invalid_argument("state and action features do not fill the network input");
            for (std::size_t k = 0; k < t->next_state.size(); ++k)
                inputs(static_cast<Eigen::Index>(k), i) = t->next_state[k];
            for (std::size_t k = 0; k < af.size(); ++k)
                inputs(static_cast<Eigen::Index>(t->next_state.size() + k), i) = af[k];
        }
        y.push_back(t->reward + delta * batch_values(target_net, inputs).maxCoeff());
    }
    return y;
}

double train_step(QNetwork& net, const QNetwork& target_net,
                  const std::vector<const Transition*>& batch,
                  const EpisodeTraces& traces, double delta, AdamW& opt) {
    if (batch.empty()) throw std::invalid_argument("empty batch");
    const std::vector<double> y = td_targets(batch, target_net, delta, traces);
    std::vector<FeatureVec> inputs;
    inputs.reserve(batch.size());
    for (const Transition* t : batch) {
        FeatureVec x = t->state;
        x.insert(x.end(), t->action.begin(), t->action.end());
        inputs.push_back(std::move(x));
    }
    Gradients g = Gradients::zeros_like(net);
    const double loss = batch_gradient(net, inputs, y, g);
    if (!std::isfinite(loss))
        throw std::runtime_error("non-finite training loss; aborting training");
    opt.step(net, g);
    return loss;
}

void sync_target(const QNetwork& net, QNetwork& target) {
    if (!net.same_architecture(target))
        throw std::invalid_argument("cannot sync networks with different architectures");
    target.weights() = net.weights();
    target.biases() = net.biases();
}

EpsilonSchedule::EpsilonSchedule(double start, double end, long decay_frames)
    : start_(start), end_(end), decay_(decay_frames) {
    if (decay_frames < 1) throw std::invalid_argument("decay horizon must be positive");
}

double EpsilonSchedule::at(long frame) const {
    if (frame <= 0) return start_;
    if (frame >= decay_) return end_;
    const double f = static_cast<double>(frame) / static_cast<double>(decay_);
    return start_ + f * (end_ - start_);
}

namespace {

constexpr char kModelMagic[4] = {'Q', 'N', 'E', 'T'};
constexpr std::uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("model file truncated");
    return v;
}

} // namespace

void save_model(const QNetwork& net, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write model file: " + path);
    out.write(kModelMagic, sizeof(kModelMagic));
    write_pod(out, kModelVersion);
    write_pod(out, static_cast<std::int32_t>(net.input_dim()));
    write_pod(out, static_cast<std::int32_t>(net.hidden_width()));
    write_pod(out, static_cast<std::int32_t>(net.hidden_layers()));
    write_pod(out, static_cast<std::uint64_t>(net.seed()));
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        const auto& w = net.weights()[l];
        out.write(reinterpret_cast<const char*>(w.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(w.size())));
        const auto& b = net.biases()[l];
        out.write(reinterpret_cast<const char*>(b.data()),
                  static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(b.size())));
    }
    if (!out) throw std::runtime_error("error while writing model file: " + path);
}

QNetwork load_model(const std::string& path, int expected_input_dim) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open model file: " + path);
    char magic[4];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a model file: " + path);
    const auto version = read_pod<std::uint32_t>(in);
    if (version != kModelVersion)
        throw std::runtime_error("unsupported model file version " + std::to_string(version));
    const auto input_dim = read_pod<std::int32_t>(in);
    const auto width = read_pod<std::int32_t>(in);
    const auto layers = read_pod<std::int32_t>(in);
    const auto seed = read_pod<std::uint64_t>(in);
    if (input_dim < 1 || width < 0 || layers < 0)
        throw std::runtime_error("corrupt model header: " + path);
    if (expected_input_dim >= 0 && input_dim != expected_input_dim)
        throw std::runtime_error("model expects input width " + std::to_string(input_dim) +
                                 ", required " + std::to_string(expected_input_dim));

    QNetwork net(input_dim, width, layers, seed);
    for (std::size_t l = 0; l < net.weights().size(); ++l) {
        auto& w = net.weights()[l];
        in.read(reinterpret_cast<char*>(w.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(w.size())));
        auto& b = net.biases()[l];
        in.read(reinterpret_cast<char*>(b.data()),
                static_cast<std::streamsize>(sizeof(double) * static_cast<std::size_t>(b.size())));
        if (!in) throw std::runtime_error("model file truncated: " + path);
    }
    in.peek();
    if (!in.eof()) throw std::runtime_error("trailing bytes in model file: " + path);
    return net;
}

} // namespace krivine
