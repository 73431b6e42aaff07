#include "deeptrust/deeptrust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "deeptrust/csv.hpp"
#include "deeptrust/error.hpp"

namespace deeptrust {

DeepTrustModel build_model(std::size_t input_dim, std::size_t hidden, double dropout, std::uint64_t seed,
                           std::string feature_schema_version) {
    if (input_dim < 1 || hidden < 1) throw ValidationError("input and hidden dimensions must be >= 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ValidationError("dropout probability must lie in [0, 1)");
    Rng rng(seed);
    std::vector<nn::Layer> layers;
    layers.emplace_back(nn::make_dense(input_dim, hidden, rng));
    layers.emplace_back(nn::ReluLayer{});
    layers.emplace_back(nn::DropoutLayer{dropout});
    layers.emplace_back(nn::make_dense(hidden, hidden, rng));
    layers.emplace_back(nn::ReluLayer{});
    layers.emplace_back(nn::DropoutLayer{dropout});
    layers.emplace_back(nn::make_dense(hidden, 1, rng));
    layers.emplace_back(nn::SigmoidLayer{});

    DeepTrustModel model;
    model.network = nn::Network(std::move(layers), seed);
    model.standardization.means.assign(input_dim, 0.0);
    model.standardization.stddevs.assign(input_dim, 1.0);
    model.feature_schema_version = std::move(feature_schema_version);
    return model;
}

namespace {

struct EvalStats {
    double loss = 0.0;
    double accuracy = 0.0;
};

EvalStats evaluate(const nn::Network& net, const Matrix& x, std::span<const int> y) {
    if (y.empty()) return {};
    nn::ForwardCache cache;
    net.forward(x, nn::Mode::eval, nullptr, &cache);
    const auto targets = targets_as_double(y);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < y.size(); ++r)
        if ((cache.output(r, 0) >= 0.5 ? 1 : 0) == y[r]) ++correct;
    return {nn::data_loss(cache, targets), static_cast<double>(correct) / static_cast<double>(y.size())};
}

}  // namespace

TrainResult train(DeepTrustModel model, const Dataset& train, const Dataset& validation, const nn::TrainConfig& cfg) {
    cfg.validate();
    if (train.size() == 0) throw ValidationError("empty training set");
    if (train.dims() != model.input_dim() || (validation.size() && validation.dims() != model.input_dim()))
        throw ValidationError("dataset has " + std::to_string(train.dims()) + " features, model expects " +
                              std::to_string(model.input_dim()));

    model.standardization = Standardizer::fit(train.x);
    const Matrix train_x = model.standardization.transform(train.x);
    const Matrix val_x = validation.size() ? model.standardization.transform(validation.x) : Matrix();
    const auto train_targets = targets_as_double(train.y);

    Rng shuffle_rng(derive_seed(cfg.seed, 1));
    Rng dropout_rng(derive_seed(cfg.seed, 2));

    TrainResult result;
    nn::Network best = model.network;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t stale = 0;
    std::vector<std::size_t> order(train.size());
    std::iota(order.begin(), order.end(), std::size_t{0});

    nn::TrainConfig step = cfg;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        step.learning_rate = cfg.learning_rate_at(epoch);
        shuffle_rng.shuffle(std::span<std::size_t>(order));
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            const std::span<const std::size_t> idx(order.data() + start, end - start);
            const Matrix bx = train_x.select_rows(idx);
            std::vector<double> by(idx.size());
            for (std::size_t i = 0; i < idx.size(); ++i) by[i] = train_targets[idx[i]];

            nn::ForwardCache cache;
            model.network.forward(bx, nn::Mode::train, &dropout_rng, &cache);
            const double loss = nn::batch_loss(model.network, cache, by, cfg.l2_lambda);
            if (!std::isfinite(loss))
                throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                    std::to_string(batch_index + 1));
            const auto grads = nn::backward(model.network, cache, by, cfg.l2_lambda);
            nn::sgd_step(model.network, grads, step);
        }

        const auto tr = evaluate(model.network, train_x, train.y);
        const auto va = evaluate(model.network, val_x, validation.y);
        if (!std::isfinite(tr.loss) || !std::isfinite(va.loss))
            throw TrainingError("non-finite loss after epoch " + std::to_string(epoch));
        result.history.epochs.push_back({epoch, tr.loss, tr.accuracy, va.loss, va.accuracy});

        const double monitored = validation.size() ? va.loss : tr.loss;
        if (monitored < best_loss) {
            best_loss = monitored;
            best = model.network;
            result.history.best_epoch = epoch;
            stale = 0;
        } else if (cfg.patience && ++stale >= cfg.patience) {
            break;
        }
    }
    model.network = std::move(best);
    result.model = std::move(model);
    return result;
}

namespace {

/// Keeps T(U) strictly inside (0, 1) where the sigmoid rounds to an endpoint.
double open_unit(double p) { return std::clamp(p, nn::kProbabilityEpsilon, 1.0 - nn::kProbabilityEpsilon); }

}  // namespace

std::vector<double> predict_probabilities(const DeepTrustModel& model, const Matrix& raw_features) {
    auto p = model.network.predict(model.standardization.transform(raw_features));
    for (double& v : p) v = open_unit(v);
    return p;
}

TrustPrediction predict(const DeepTrustModel& model, std::span<const double> features,
                        const std::string& feature_schema_version) {
    if (!model.feature_schema_version.empty() && feature_schema_version != model.feature_schema_version)
        throw ValidationError("feature schema '" + feature_schema_version + "' does not match model schema '" +
                              model.feature_schema_version + "'");
    const auto z = model.standardization.transform(features);
    Matrix x(1, z.size());
    std::copy(z.begin(), z.end(), x.row(0).begin());
    const double p = open_unit(model.network.predict(x)[0]);
    return {p, p >= model.decision_threshold ? Label::trusted : Label::not_trusted};
}

void write_history_csv(std::ostream& out, const TrainingHistory& history) {
    csv::write_row(out, {"epoch", "train_loss", "train_acc", "val_loss", "val_acc"});
    for (const auto& e : history.epochs)
        csv::write_row(out, {std::to_string(e.epoch), csv::format_number(e.train_loss),
                             csv::format_number(e.train_accuracy), csv::format_number(e.validation_loss),
                             csv::format_number(e.validation_accuracy)});
}

}  // namespace deeptrust
