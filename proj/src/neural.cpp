#include "deeptrust/neural.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "deeptrust/error.hpp"
#include "deeptrust/kernels.hpp"

namespace deeptrust::nn {

using nlohmann::json;
using nlohmann::ordered_json;

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

DenseLayer make_dense(std::size_t input_dim, std::size_t output_dim, Rng& rng) {
    if (input_dim == 0 || output_dim == 0) throw ValidationError("dense layer dimensions must be >= 1");
    DenseLayer layer{Matrix(input_dim, output_dim), std::vector<double>(output_dim, 0.0)};
    const double limit = std::sqrt(6.0 / static_cast<double>(input_dim));
    for (double& w : layer.weights.values()) w = rng.uniform(-limit, limit);
    return layer;
}

std::vector<double> dense_forward(const DenseLayer& layer, std::span<const double> input) {
    if (input.size() != layer.input_dim())
        throw ValidationError("dense_forward: expected input of size " + std::to_string(layer.input_dim()) +
                              ", got " + std::to_string(input.size()));
    Matrix x(1, input.size());
    std::copy(input.begin(), input.end(), x.row(0).begin());
    Matrix y;
    kernels::affine_forward(x, layer.weights, layer.bias, y);
    return {y.values().begin(), y.values().end()};
}

std::vector<double> relu(std::span<const double> v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
    return out;
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

std::vector<double> sigmoid(std::span<const double> v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid(v[i]);
    return out;
}

namespace {

void check_dropout(const DropoutLayer& layer) {
    if (!(layer.p >= 0.0 && layer.p < 1.0)) throw ValidationError("dropout probability must lie in [0, 1)");
}

// Bernoulli keep-mask holding 0 or 1/(1-p).
void fill_mask(std::span<double> mask, double p, Rng& rng) {
    const double scale = 1.0 / (1.0 - p);
    for (double& m : mask) m = rng.bernoulli(p) ? 0.0 : scale;
}

}  // namespace

std::vector<double> dropout_forward(const DropoutLayer& layer, std::span<const double> v, Mode mode, Rng& rng,
                                    std::vector<double>* mask) {
    check_dropout(layer);
    std::vector<double> m(v.size(), 1.0);
    if (mode == Mode::train && layer.p > 0.0) fill_mask(m, layer.p, rng);
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * m[i];
    if (mask) *mask = std::move(m);
    return out;
}

double binary_cross_entropy(double q, double y) {
    q = std::clamp(q, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    return -y * std::log(q) - (1.0 - y) * std::log(1.0 - q);
}

double binary_cross_entropy_with_logit(double z, double y) {
    // max(z,0) - z*y + log(1 + exp(-|z|))
    return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

double softmax_cross_entropy(std::span<const double> logits, std::size_t target) {
    if (target >= logits.size()) throw ValidationError("softmax_cross_entropy: target index out of range");
    const double shift = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double x : logits) sum += std::exp(x - shift);
    return -logits[target] + shift + std::log(sum);
}

double Gradients::squared_norm() const {
    double s = 0.0;
    for (const auto& w : weights)
        for (double g : w.values()) s += g * g;
    for (const auto& b : bias)
        for (double g : b) s += g * g;
    return s;
}

Network::Network(std::vector<Layer> layers, std::uint64_t seed) : layers_(std::move(layers)), seed_(seed) {
    validate();
}

void Network::validate() const {
    std::optional<std::size_t> width;
    bool has_dense = false;
    for (const auto& layer : layers_) {
        if (const auto* d = std::get_if<DenseLayer>(&layer)) {
            if (d->bias.size() != d->output_dim() || d->input_dim() == 0 || d->output_dim() == 0)
                throw ValidationError("dense layer has inconsistent dimensions");
            if (width && *width != d->input_dim())
                throw ValidationError("layer dimensions do not chain: " + std::to_string(*width) + " -> " +
                                      std::to_string(d->input_dim()));
            for (double w : d->weights.values())
                if (!std::isfinite(w)) throw ValidationError("non-finite weight");
            for (double b : d->bias)
                if (!std::isfinite(b)) throw ValidationError("non-finite bias");
            width = d->output_dim();
            has_dense = true;
        } else if (const auto* p = std::get_if<DropoutLayer>(&layer)) {
            check_dropout(*p);
        }
    }
    if (!layers_.empty() && !has_dense) throw ValidationError("network has no dense layer");
}

std::size_t Network::input_dim() const {
    for (const auto& layer : layers_)
        if (const auto* d = std::get_if<DenseLayer>(&layer)) return d->input_dim();
    return 0;
}

std::size_t Network::output_dim() const {
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it)
        if (const auto* d = std::get_if<DenseLayer>(&*it)) return d->output_dim();
    return 0;
}

std::size_t Network::parameter_count() const {
    std::size_t n = 0;
    for (const auto& layer : layers_)
        if (const auto* d = std::get_if<DenseLayer>(&layer)) n += d->weights.values().size() + d->bias.size();
    return n;
}

std::size_t Network::dense_count() const {
    return static_cast<std::size_t>(std::count_if(layers_.begin(), layers_.end(),
                                                  [](const Layer& l) { return std::holds_alternative<DenseLayer>(l); }));
}

Matrix Network::forward(const Matrix& x, Mode mode, Rng* rng, ForwardCache* cache) const {
    if (x.cols() != input_dim())
        throw ValidationError("network expects " + std::to_string(input_dim()) + " inputs, got " +
                              std::to_string(x.cols()));
    if (cache) {
        cache->layer_inputs.assign(layers_.size(), Matrix());
        cache->masks.assign(layers_.size(), Matrix());
        cache->logits = Matrix();
        cache->valid = false;
    }
    Matrix current = x;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        Matrix next;
        std::visit(overloaded{
                       [&](const DenseLayer& d) { kernels::affine_forward(current, d.weights, d.bias, next); },
                       [&](const ReluLayer&) {
                           next = current;
                           for (double& v : next.values()) v = v > 0.0 ? v : 0.0;
                       },
                       [&](const DropoutLayer& d) {
                           next = current;
                           if (mode != Mode::train || d.p == 0.0) {
                               if (cache) cache->masks[l] = Matrix(current.rows(), current.cols(), 1.0);
                               return;
                           }
                           if (!rng) throw ValidationError("training-mode dropout needs a random generator");
                           Matrix mask(current.rows(), current.cols());
                           fill_mask(mask.values(), d.p, *rng);
                           auto out = next.values();
                           const auto m = mask.values();
                           for (std::size_t i = 0; i < out.size(); ++i) out[i] *= m[i];
                           if (cache) cache->masks[l] = std::move(mask);
                       },
                       [&](const SigmoidLayer&) {
                           next = current;
                           for (double& v : next.values()) v = sigmoid(v);
                           if (cache && l + 1 == layers_.size()) cache->logits = current;
                       },
                   },
                   layers_[l]);
        if (cache) cache->layer_inputs[l] = std::move(current);
        current = std::move(next);
    }
    if (cache) {
        cache->output = current;
        cache->valid = true;
    }
    return current;
}

std::vector<double> Network::predict(const Matrix& x) const {
    const Matrix out = forward(x, Mode::eval);
    if (out.cols() != 1) throw ValidationError("predict needs a single-output network");
    return {out.values().begin(), out.values().end()};
}

namespace {

void check_cache(const Network& net, const ForwardCache& cache, std::span<const double> targets) {
    if (!cache.valid || cache.layer_inputs.size() != net.layers().size())
        throw ValidationError("backward called without a cached forward pass");
    if (net.layers().empty() || !std::holds_alternative<SigmoidLayer>(net.layers().back()))
        throw ValidationError("loss gradients need a network ending in a sigmoid");
    if (cache.logits.cols() != 1 || cache.logits.rows() != targets.size())
        throw ValidationError("expected one target per example (" + std::to_string(cache.logits.rows()) +
                              "), got " + std::to_string(targets.size()));
}

}  // namespace

double data_loss(const ForwardCache& cache, std::span<const double> targets) {
    if (!cache.valid || cache.logits.rows() != targets.size() || cache.logits.cols() != 1)
        throw ValidationError("data_loss needs a cached forward pass with one target per example");
    double sum = 0.0;
    for (std::size_t r = 0; r < targets.size(); ++r) sum += binary_cross_entropy_with_logit(cache.logits(r, 0), targets[r]);
    return sum / static_cast<double>(targets.size());
}

double batch_loss(const Network& net, const ForwardCache& cache, std::span<const double> targets, double l2_lambda) {
    check_cache(net, cache, targets);
    double penalty = 0.0;
    for (const auto& layer : net.layers())
        if (const auto* d = std::get_if<DenseLayer>(&layer))
            for (double w : d->weights.values()) penalty += w * w;
    return data_loss(cache, targets) + 0.5 * l2_lambda * penalty;
}

Gradients backward(const Network& net, const ForwardCache& cache, std::span<const double> targets, double l2_lambda) {
    check_cache(net, cache, targets);
    const auto& layers = net.layers();
    const std::size_t batch = targets.size();

    Gradients grads;
    grads.weights.resize(net.dense_count());
    grads.bias.resize(net.dense_count());
    std::size_t dense_index = net.dense_count();

    // d(mean BCE)/d(logit) = (sigmoid(z) - y) / batch
    Matrix g(batch, 1);
    for (std::size_t r = 0; r < batch; ++r)
        g(r, 0) = (cache.output(r, 0) - targets[r]) / static_cast<double>(batch);

    for (std::size_t l = layers.size() - 1; l-- > 0;) {
        const Matrix& input = cache.layer_inputs[l];
        std::visit(overloaded{
                       [&](const DenseLayer& d) {
                           --dense_index;
                           Matrix dw(d.input_dim(), d.output_dim());
                           std::vector<double> db(d.output_dim());
                           kernels::affine_backward_params(input, g, dw, db);
                           auto dwv = dw.values();
                           const auto wv = d.weights.values();
                           for (std::size_t i = 0; i < dwv.size(); ++i) dwv[i] += l2_lambda * wv[i];
                           grads.weights[dense_index] = std::move(dw);
                           grads.bias[dense_index] = std::move(db);
                           if (l > 0) {
                               Matrix dx;
                               kernels::affine_backward_input(g, d.weights, dx);
                               g = std::move(dx);
                           }
                       },
                       [&](const ReluLayer&) {
                           auto gv = g.values();
                           const auto iv = input.values();
                           for (std::size_t i = 0; i < gv.size(); ++i)
                               if (!(iv[i] > 0.0)) gv[i] = 0.0;
                       },
                       [&](const DropoutLayer&) {
                           auto gv = g.values();
                           const auto mv = cache.masks[l].values();
                           if (mv.size() != gv.size()) throw ValidationError("dropout mask missing from cache");
                           for (std::size_t i = 0; i < gv.size(); ++i) gv[i] *= mv[i];
                       },
                       [&](const SigmoidLayer&) {
                           auto gv = g.values();
                           const auto iv = input.values();
                           for (std::size_t i = 0; i < gv.size(); ++i) {
                               const double s = sigmoid(iv[i]);
                               gv[i] *= s * (1.0 - s);
                           }
                       },
                   },
                   layers[l]);
    }
    return grads;
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ValidationError("learning_rate must be a finite non-negative number");
    if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
    if (!(l2_lambda >= 0.0)) throw ValidationError("l2_lambda must be >= 0");
    if (epochs < 1) throw ValidationError("epochs must be >= 1");
    if (!(decay_rate > 0.0 && decay_rate <= 1.0)) throw ValidationError("decay_rate must lie in (0, 1]");
}

double TrainConfig::learning_rate_at(std::size_t epoch) const {
    if (decay_every == 0 || epoch <= 1) return learning_rate;
    return learning_rate * std::pow(decay_rate, static_cast<double>((epoch - 1) / decay_every));
}

void sgd_step(Network& net, const Gradients& grads, const TrainConfig& cfg) {
    if (grads.weights.size() != net.dense_count() || grads.bias.size() != net.dense_count())
        throw ValidationError("gradient count does not match the network");
    std::size_t i = 0;
    for (auto& layer : net.layers()) {
        auto* d = std::get_if<DenseLayer>(&layer);
        if (!d) continue;
        if (grads.weights[i].rows() != d->weights.rows() || grads.weights[i].cols() != d->weights.cols())
            throw ValidationError("gradient shape mismatch in dense layer " + std::to_string(i));
        kernels::sgd_update(d->weights.values(), grads.weights[i].values(), cfg.learning_rate);
        kernels::sgd_update(d->bias, grads.bias[i], cfg.learning_rate);
        ++i;
    }
}

ordered_json network_to_json(const Network& net) {
    ordered_json layers = ordered_json::array();
    for (const auto& layer : net.layers()) {
        std::visit(overloaded{
                       [&](const DenseLayer& d) {
                           ordered_json j;
                           j["type"] = "dense";
                           j["input_dim"] = d.input_dim();
                           j["output_dim"] = d.output_dim();
                           j["weights"] = std::vector<double>(d.weights.values().begin(), d.weights.values().end());
                           j["bias"] = d.bias;
                           layers.push_back(std::move(j));
                       },
                       [&](const ReluLayer&) { layers.push_back({{"type", "relu"}}); },
                       [&](const DropoutLayer& d) {
                           ordered_json j;
                           j["type"] = "dropout";
                           j["p"] = d.p;
                           layers.push_back(std::move(j));
                       },
                       [&](const SigmoidLayer&) { layers.push_back({{"type", "sigmoid"}}); },
                   },
                   layer);
    }
    ordered_json out;
    out["seed"] = net.seed();
    out["layers"] = std::move(layers);
    return out;
}

Network network_from_json(const json& j) {
    try {
        std::vector<Layer> layers;
        for (const auto& l : j.at("layers")) {
            const auto type = l.at("type").get<std::string>();
            if (type == "dense") {
                const auto in = l.at("input_dim").get<std::size_t>();
                const auto out = l.at("output_dim").get<std::size_t>();
                const auto weights = l.at("weights").get<std::vector<double>>();
                auto bias = l.at("bias").get<std::vector<double>>();
                if (weights.size() != in * out || bias.size() != out)
                    throw FormatError("dense layer arrays do not match its dimensions");
                DenseLayer d{Matrix(in, out), std::move(bias)};
                std::copy(weights.begin(), weights.end(), d.weights.values().begin());
                layers.emplace_back(std::move(d));
            } else if (type == "relu") {
                layers.emplace_back(ReluLayer{});
            } else if (type == "dropout") {
                layers.emplace_back(DropoutLayer{l.at("p").get<double>()});
            } else if (type == "sigmoid") {
                layers.emplace_back(SigmoidLayer{});
            } else {
                throw FormatError("unknown layer type '" + type + "'");
            }
        }
        return Network(std::move(layers), j.value("seed", std::uint64_t{0}));
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed network description: ") + e.what());
    }
}

ordered_json standardizer_to_json(const Standardizer& s) {
    ordered_json j;
    j["means"] = s.means;
    j["stddevs"] = s.stddevs;
    return j;
}

Standardizer standardizer_from_json(const json& j) {
    try {
        Standardizer s{j.at("means").get<std::vector<double>>(), j.at("stddevs").get<std::vector<double>>()};
        if (s.means.size() != s.stddevs.size()) throw FormatError("standardization arrays differ in length");
        return s;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed standardization block: ") + e.what());
    }
}

void save_model(const Network& net, const ModelMetadata& meta, const std::filesystem::path& path) {
    ordered_json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = "neural_network";
    j["feature_schema_version"] = meta.feature_schema_version;
    j["standardization"] = standardizer_to_json(meta.standardization);
    const auto network = network_to_json(net);
    for (auto& [key, value] : network.items()) j[key] = value;
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(1) << '\n';
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

std::pair<Network, ModelMetadata> load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::stringstream buffer;
    buffer << in.rdbuf();
    const std::string content = buffer.str();
    if (content.find_first_not_of(" \t\r\n") == std::string::npos)
        throw FormatError("corrupt model file '" + path.string() + "': empty");
    json j;
    try {
        j = json::parse(content);
    } catch (const json::parse_error& e) {
        throw FormatError("corrupt model file '" + path.string() + "': " + e.what());
    }
    if (!j.is_object()) throw FormatError("corrupt model file '" + path.string() + "': not an object");
    const auto version = j.value("schema_version", std::string());
    if (version != kModelSchemaVersion)
        throw FormatError("model file '" + path.string() + "' has schema_version '" + version + "', expected '" +
                          kModelSchemaVersion + "'");
    ModelMetadata meta;
    meta.feature_schema_version = j.value("feature_schema_version", std::string());
    if (j.contains("standardization")) meta.standardization = standardizer_from_json(j.at("standardization"));
    return {network_from_json(j), std::move(meta)};
}

}  // namespace deeptrust::nn
