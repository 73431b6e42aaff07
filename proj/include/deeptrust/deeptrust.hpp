#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "deeptrust/data.hpp"
#include "deeptrust/dataset.hpp"
#include "deeptrust/neural.hpp"
#include "deeptrust/standardize.hpp"

namespace deeptrust {

/// input(k) -> dense(k,h)+ReLU -> dropout(p) -> dense(h,h)+ReLU -> dropout(p) -> dense(h,1) -> sigmoid
struct DeepTrustModel {
    nn::Network network;
    Standardizer standardization;  // fitted on raw training features
    std::string feature_schema_version;
    double decision_threshold = 0.5;

    std::size_t input_dim() const { return network.input_dim(); }
};

inline constexpr std::size_t kDefaultHiddenUnits = 250;
inline constexpr double kDefaultDropout = 0.5;

/// Identity standardization until train() fits one.
DeepTrustModel build_model(std::size_t input_dim, std::size_t hidden = kDefaultHiddenUnits,
                           double dropout = kDefaultDropout, std::uint64_t seed = 0,
                           std::string feature_schema_version = {});

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double validation_loss = 0.0;
    double validation_accuracy = 0.0;
};

struct TrainingHistory {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;  // 1-based; selected by lowest validation loss
};

struct TrainResult {
    DeepTrustModel model;
    TrainingHistory history;
};

/// Fits the standardization on `train`, then runs seeded minibatch SGD with
/// dropout. Losses in the history are mean BCE in eval mode. Returns the
/// parameters of the epoch with the lowest validation loss (training loss
/// when the validation set is empty). Stops after cfg.patience epochs without
/// improvement.
TrainResult train(DeepTrustModel model, const Dataset& train, const Dataset& validation,
                  const nn::TrainConfig& cfg);

struct TrustPrediction {
    double probability = 0.5;  // T(U)
    Label label = Label::trusted;
};

/// `features` are raw (unstandardized) values in schema order.
TrustPrediction predict(const DeepTrustModel& model, std::span<const double> features,
                        const std::string& feature_schema_version);
std::vector<double> predict_probabilities(const DeepTrustModel& model, const Matrix& raw_features);

void write_history_csv(std::ostream& out, const TrainingHistory& history);

}  // namespace deeptrust
