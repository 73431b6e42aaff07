#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "deeptrust/matrix.hpp"
#include "deeptrust/rng.hpp"
#include "deeptrust/standardize.hpp"

namespace deeptrust::nn {

/// Fully connected layer computing A^T x + b; `weights` is input_dim x output_dim.
struct DenseLayer {
    Matrix weights;
    std::vector<double> bias;

    std::size_t input_dim() const { return weights.rows(); }
    std::size_t output_dim() const { return weights.cols(); }
    bool operator==(const DenseLayer&) const = default;
};

struct ReluLayer {
    bool operator==(const ReluLayer&) const = default;
};

struct SigmoidLayer {
    bool operator==(const SigmoidLayer&) const = default;
};

/// Inverted dropout; active only in Mode::train.
struct DropoutLayer {
    double p = 0.5;
    bool operator==(const DropoutLayer&) const = default;
};

using Layer = std::variant<DenseLayer, ReluLayer, DropoutLayer, SigmoidLayer>;

enum class Mode { train, eval };

/// He-uniform weights in [-sqrt(6/in), sqrt(6/in)], zero bias.
DenseLayer make_dense(std::size_t input_dim, std::size_t output_dim, Rng& rng);

// Single-vector primitives.
std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> input);
std::vector<double> relu(std::span<const double> v);
double sigmoid(double x);
std::vector<double> sigmoid(std::span<const double> v);
/// Train mode zeroes each entry with probability p and scales survivors by
/// 1/(1-p); the mask (0 or 1/(1-p) per entry) is written to `mask` if given.
std::vector<double> dropout_forward(const DropoutLayer& layer, std::span<const double> v, Mode mode, Rng& rng,
                                    std::vector<double>* mask = nullptr);

inline constexpr double kProbabilityEpsilon = 1e-12;

/// -y ln q - (1-y) ln(1-q) with q clamped to [eps, 1-eps].
double binary_cross_entropy(double q, double y);
/// Same loss computed from the logit z (q = sigmoid(z)) without clamping.
double binary_cross_entropy_with_logit(double z, double y);
/// -x[target] + log(sum_i exp(x[i])), computed with a max shift.
double softmax_cross_entropy(std::span<const double> logits, std::size_t target);

/// Activations saved by a training forward pass for use by backward().
struct ForwardCache {
    std::vector<Matrix> layer_inputs;  // input seen by each layer
    std::vector<Matrix> masks;         // per layer; empty unless dropout
    Matrix logits;                     // input to the final sigmoid
    Matrix output;
    bool valid = false;
};

/// Gradients for every dense layer, in layer order.
struct Gradients {
    std::vector<Matrix> weights;
    std::vector<std::vector<double>> bias;

    double squared_norm() const;
};

class Network {
public:
    Network() = default;
    Network(std::vector<Layer> layers, std::uint64_t seed = 0);

    const std::vector<Layer>& layers() const { return layers_; }
    std::vector<Layer>& layers() { return layers_; }
    std::uint64_t seed() const { return seed_; }

    std::size_t input_dim() const;
    std::size_t output_dim() const;
    std::size_t parameter_count() const;
    std::size_t dense_count() const;

    /// Batch forward pass (rows are examples). With a cache, intermediate
    /// values are recorded for backward(). Dropout draws from `rng` in train mode.
    Matrix forward(const Matrix& x, Mode mode, Rng* rng = nullptr, ForwardCache* cache = nullptr) const;

    /// Eval-mode output column for each row of x.
    std::vector<double> predict(const Matrix& x) const;

    bool operator==(const Network&) const = default;

private:
    void validate() const;

    std::vector<Layer> layers_;
    std::uint64_t seed_ = 0;
};

/// Mean BCE over the batch (from the cached logits) plus (l2/2) * sum ||A||^2.
double batch_loss(const Network& net, const ForwardCache& cache, std::span<const double> targets, double l2_lambda);
/// Mean BCE only, from a cache.
double data_loss(const ForwardCache& cache, std::span<const double> targets);

/// Exact gradients of batch_loss with respect to every weight and bias.
/// The network must end with a sigmoid; biases are not regularized.
Gradients backward(const Network& net, const ForwardCache& cache, std::span<const double> targets, double l2_lambda);

struct TrainConfig {
    double learning_rate = 0.001;
    std::size_t batch_size = 64;
    double l2_lambda = 1e-4;
    std::size_t epochs = 100;
    std::size_t patience = 10;  // 0 disables early stopping
    std::uint64_t seed = 0;
    double decay_rate = 1.0;      // step decay factor
    std::size_t decay_every = 0;  // epochs per decay step, 0 disables

    /// Step size for a 1-based epoch: learning_rate * decay_rate^floor((epoch-1)/decay_every).
    double learning_rate_at(std::size_t epoch) const;
    void validate() const;
};

/// theta <- theta - lr * g for every weight and bias.
void sgd_step(Network& net, const Gradients& grads, const TrainConfig& cfg);

inline constexpr const char* kModelSchemaVersion = "deeptrust-model/1";

nlohmann::ordered_json network_to_json(const Network& net);
Network network_from_json(const nlohmann::json& j);

struct ModelMetadata {
    std::string feature_schema_version;
    Standardizer standardization;
};

/// model.json: schema_version, feature_schema_version, standardization, layers.
void save_model(const Network& net, const ModelMetadata& meta, const std::filesystem::path& path);
std::pair<Network, ModelMetadata> load_model(const std::filesystem::path& path);

nlohmann::ordered_json standardizer_to_json(const Standardizer& s);
Standardizer standardizer_from_json(const nlohmann::json& j);

}  // namespace deeptrust::nn
