#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "deeptrust/baselines.hpp"
#include "deeptrust/dataset.hpp"
#include "deeptrust/deeptrust.hpp"

namespace deeptrust {

/// Common surface for DeepTrust and the four baselines. Inputs are raw
/// feature rows; any standardization is fitted inside fit() on the training
/// rows only. Probabilities are P(trusted).
class Classifier {
public:
    virtual ~Classifier() = default;

    virtual std::string_view kind() const = 0;
    virtual void fit(const Dataset& train) = 0;
    virtual std::vector<double> predict_proba(const Matrix& x) const = 0;
    std::vector<int> predict(const Matrix& x, double threshold = 0.5) const;

    /// Adds the kind-specific parameter block to a model.json object.
    virtual void write_parameters(nlohmann::ordered_json& out) const = 0;
    virtual const TrainingHistory* history() const { return nullptr; }
};

inline constexpr std::string_view kClassifierKinds[] = {"deeptrust", "decision_tree", "random_forest",
                                                        "naive_bayes", "logistic"};

struct ClassifierConfig {
    nn::TrainConfig train;  // deeptrust
    std::size_t hidden = kDefaultHiddenUnits;
    double dropout = kDefaultDropout;
    double validation_fraction = 0.1;  // inner early-stopping split for deeptrust
    TreeParams tree;
    ForestParams forest;
    LogisticParams logistic;
    std::uint64_t seed = 0;
    std::string feature_schema_version;
};

/// Throws ValidationError for an unknown kind.
std::unique_ptr<Classifier> make_classifier(std::string_view kind, const ClassifierConfig& cfg);

class DeepTrustClassifier final : public Classifier {
public:
    explicit DeepTrustClassifier(ClassifierConfig cfg) : cfg_(std::move(cfg)) {}
    DeepTrustClassifier(ClassifierConfig cfg, DeepTrustModel model);

    std::string_view kind() const override { return "deeptrust"; }
    /// Holds out cfg.validation_fraction of `train` (stratified) for model selection.
    void fit(const Dataset& train) override;
    void fit(const Dataset& train, const Dataset& validation);
    std::vector<double> predict_proba(const Matrix& x) const override;
    void write_parameters(nlohmann::ordered_json& out) const override;
    const TrainingHistory* history() const override { return &history_; }

    const DeepTrustModel& model() const { return model_; }

private:
    ClassifierConfig cfg_;
    DeepTrustModel model_;
    TrainingHistory history_;
    bool fitted_ = false;
};

class DecisionTreeClassifier final : public Classifier {
public:
    explicit DecisionTreeClassifier(ClassifierConfig cfg) : cfg_(std::move(cfg)) {}
    explicit DecisionTreeClassifier(DecisionTree tree) : tree_(std::move(tree)), fitted_(true) {}

    std::string_view kind() const override { return "decision_tree"; }
    void fit(const Dataset& train) override;
    std::vector<double> predict_proba(const Matrix& x) const override;
    void write_parameters(nlohmann::ordered_json& out) const override;

    const DecisionTree& tree() const { return tree_; }

private:
    ClassifierConfig cfg_;
    DecisionTree tree_;
    bool fitted_ = false;
};

class RandomForestClassifier final : public Classifier {
public:
    explicit RandomForestClassifier(ClassifierConfig cfg) : cfg_(std::move(cfg)) {}
    explicit RandomForestClassifier(RandomForest forest) : forest_(std::move(forest)), fitted_(true) {}

    std::string_view kind() const override { return "random_forest"; }
    void fit(const Dataset& train) override;
    std::vector<double> predict_proba(const Matrix& x) const override;
    void write_parameters(nlohmann::ordered_json& out) const override;

    const RandomForest& forest() const { return forest_; }

private:
    ClassifierConfig cfg_;
    RandomForest forest_;
    bool fitted_ = false;
};

class NaiveBayesClassifier final : public Classifier {
public:
    explicit NaiveBayesClassifier(ClassifierConfig cfg) : cfg_(std::move(cfg)) {}
    explicit NaiveBayesClassifier(NaiveBayesModel model) : model_(std::move(model)), fitted_(true) {}

    std::string_view kind() const override { return "naive_bayes"; }
    void fit(const Dataset& train) override;
    std::vector<double> predict_proba(const Matrix& x) const override;
    void write_parameters(nlohmann::ordered_json& out) const override;

private:
    ClassifierConfig cfg_;
    NaiveBayesModel model_;
    bool fitted_ = false;
};

class LogisticClassifier final : public Classifier {
public:
    explicit LogisticClassifier(ClassifierConfig cfg) : cfg_(std::move(cfg)) {}
    explicit LogisticClassifier(LogisticModel model) : model_(std::move(model)), fitted_(true) {}

    std::string_view kind() const override { return "logistic"; }
    void fit(const Dataset& train) override;
    std::vector<double> predict_proba(const Matrix& x) const override;
    void write_parameters(nlohmann::ordered_json& out) const override;

private:
    ClassifierConfig cfg_;
    LogisticModel model_;
    bool fitted_ = false;
};

struct LoadedModel {
    std::unique_ptr<Classifier> classifier;
    std::string feature_schema_version;
    nlohmann::json config;
};

/// model.json with schema_version, kind, feature_schema_version, the echoed
/// run config, and the kind's parameter block. Neural kinds carry
/// `standardization` and `layers` at top level.
void save_classifier(const Classifier& classifier, const std::string& feature_schema_version,
                     const nlohmann::ordered_json& config, const std::filesystem::path& path);
LoadedModel load_classifier(const std::filesystem::path& path);

}  // namespace deeptrust
