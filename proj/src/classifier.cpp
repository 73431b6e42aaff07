#include "deeptrust/classifier.hpp"

#include <fstream>
#include <sstream>

#include "deeptrust/error.hpp"

namespace deeptrust {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<int> Classifier::predict(const Matrix& x, double threshold) const {
    const auto p = predict_proba(x);
    std::vector<int> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] >= threshold ? 1 : 0;
    return out;
}

namespace {

void require_fitted(bool fitted, std::string_view kind) {
    if (!fitted) throw ValidationError(std::string(kind) + " classifier is not fitted");
}

template <typename F>
std::vector<double> per_row(const Matrix& x, F&& f) {
    std::vector<double> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) out[r] = f(x.row(r));
    return out;
}

}  // namespace

DeepTrustClassifier::DeepTrustClassifier(ClassifierConfig cfg, DeepTrustModel model)
    : cfg_(std::move(cfg)), model_(std::move(model)), fitted_(true) {}

void DeepTrustClassifier::fit(const Dataset& train) {
    const auto n = train.size();
    const auto held_out = static_cast<std::size_t>(static_cast<double>(n) * cfg_.validation_fraction);
    if (n < 3 || held_out < 1 || n - held_out < 2) {
        fit(train, Dataset{});
        return;
    }
    SplitSpec spec{1.0 - cfg_.validation_fraction, cfg_.validation_fraction, 0.0, derive_seed(cfg_.seed, 17), true};
    const auto parts = split_indices(n, spec, train.y);
    fit(train.subset(parts.train), train.subset(parts.validation));
}

void DeepTrustClassifier::fit(const Dataset& train, const Dataset& validation) {
    auto initial = build_model(train.dims(), cfg_.hidden, cfg_.dropout, cfg_.seed, cfg_.feature_schema_version);
    nn::TrainConfig tc = cfg_.train;
    tc.seed = derive_seed(cfg_.seed, 3);
    auto result = deeptrust::train(std::move(initial), train, validation, tc);
    model_ = std::move(result.model);
    history_ = std::move(result.history);
    fitted_ = true;
}

std::vector<double> DeepTrustClassifier::predict_proba(const Matrix& x) const {
    require_fitted(fitted_, kind());
    return predict_probabilities(model_, x);
}

void DeepTrustClassifier::write_parameters(ordered_json& out) const {
    require_fitted(fitted_, kind());
    out["decision_threshold"] = model_.decision_threshold;
    out["standardization"] = nn::standardizer_to_json(model_.standardization);
    const auto network = nn::network_to_json(model_.network);
    for (auto& [key, value] : network.items()) out[key] = value;
    out["best_epoch"] = history_.best_epoch;
}

void DecisionTreeClassifier::fit(const Dataset& train) {
    tree_ = fit_tree(train, cfg_.tree, cfg_.seed);
    fitted_ = true;
}

std::vector<double> DecisionTreeClassifier::predict_proba(const Matrix& x) const {
    require_fitted(fitted_, kind());
    return per_row(x, [&](std::span<const double> r) { return tree_.predict_proba(r); });
}

void DecisionTreeClassifier::write_parameters(ordered_json& out) const {
    require_fitted(fitted_, kind());
    out["tree"] = tree_.to_json();
}

void RandomForestClassifier::fit(const Dataset& train) {
    forest_ = fit_forest(train, cfg_.forest, cfg_.seed);
    fitted_ = true;
}

std::vector<double> RandomForestClassifier::predict_proba(const Matrix& x) const {
    require_fitted(fitted_, kind());
    return per_row(x, [&](std::span<const double> r) { return forest_.predict_proba(r); });
}

void RandomForestClassifier::write_parameters(ordered_json& out) const {
    require_fitted(fitted_, kind());
    out["forest"] = forest_.to_json();
}

void NaiveBayesClassifier::fit(const Dataset& train) {
    model_ = fit_naive_bayes(train);
    fitted_ = true;
}

std::vector<double> NaiveBayesClassifier::predict_proba(const Matrix& x) const {
    require_fitted(fitted_, kind());
    return per_row(x, [&](std::span<const double> r) { return model_.posterior(r)[1]; });
}

void NaiveBayesClassifier::write_parameters(ordered_json& out) const {
    require_fitted(fitted_, kind());
    out["naive_bayes"] = model_.to_json();
}

void LogisticClassifier::fit(const Dataset& train) {
    model_ = fit_logistic(train, cfg_.logistic, cfg_.seed);
    fitted_ = true;
}

std::vector<double> LogisticClassifier::predict_proba(const Matrix& x) const {
    require_fitted(fitted_, kind());
    return model_.predict_proba(x);
}

void LogisticClassifier::write_parameters(ordered_json& out) const {
    require_fitted(fitted_, kind());
    out["l2_lambda"] = model_.l2_lambda;
    out["standardization"] = nn::standardizer_to_json(model_.standardization);
    const auto network = nn::network_to_json(model_.network);
    for (auto& [key, value] : network.items()) out[key] = value;
}

std::unique_ptr<Classifier> make_classifier(std::string_view kind, const ClassifierConfig& cfg) {
    if (kind == "deeptrust") return std::make_unique<DeepTrustClassifier>(cfg);
    if (kind == "decision_tree") return std::make_unique<DecisionTreeClassifier>(cfg);
    if (kind == "random_forest") return std::make_unique<RandomForestClassifier>(cfg);
    if (kind == "naive_bayes") return std::make_unique<NaiveBayesClassifier>(cfg);
    if (kind == "logistic") return std::make_unique<LogisticClassifier>(cfg);
    std::string valid;
    for (auto k : kClassifierKinds) valid += (valid.empty() ? "" : ", ") + std::string(k);
    throw ValidationError("unknown model '" + std::string(kind) + "'; expected one of: " + valid);
}

void save_classifier(const Classifier& classifier, const std::string& feature_schema_version,
                     const ordered_json& config, const std::filesystem::path& path) {
    ordered_json j;
    j["schema_version"] = nn::kModelSchemaVersion;
    j["kind"] = classifier.kind();
    j["feature_schema_version"] = feature_schema_version;
    j["config"] = config;
    classifier.write_parameters(j);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << j.dump(1) << '\n';
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

LoadedModel load_classifier(const std::filesystem::path& path) {
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
    if (version != nn::kModelSchemaVersion)
        throw FormatError("model file '" + path.string() + "' has schema_version '" + version + "', expected '" +
                          nn::kModelSchemaVersion + "'");

    LoadedModel out;
    out.feature_schema_version = j.value("feature_schema_version", std::string());
    out.config = j.value("config", json::object());
    const auto kind = j.value("kind", std::string());
    try {
        if (kind == "deeptrust" || kind == "neural_network") {
            DeepTrustModel m;
            m.network = nn::network_from_json(j);
            m.standardization = nn::standardizer_from_json(j.at("standardization"));
            m.feature_schema_version = out.feature_schema_version;
            m.decision_threshold = j.value("decision_threshold", 0.5);
            if (m.standardization.dims() != m.network.input_dim())
                throw FormatError("standardization does not match the network input");
            out.classifier = std::make_unique<DeepTrustClassifier>(ClassifierConfig{}, std::move(m));
        } else if (kind == "decision_tree") {
            out.classifier = std::make_unique<DecisionTreeClassifier>(DecisionTree::from_json(j.at("tree")));
        } else if (kind == "random_forest") {
            out.classifier = std::make_unique<RandomForestClassifier>(RandomForest::from_json(j.at("forest")));
        } else if (kind == "naive_bayes") {
            out.classifier = std::make_unique<NaiveBayesClassifier>(NaiveBayesModel::from_json(j.at("naive_bayes")));
        } else if (kind == "logistic") {
            LogisticModel m;
            m.network = nn::network_from_json(j);
            m.standardization = nn::standardizer_from_json(j.at("standardization"));
            m.l2_lambda = j.value("l2_lambda", 0.0);
            out.classifier = std::make_unique<LogisticClassifier>(std::move(m));
        } else {
            throw FormatError("model file '" + path.string() + "' has unknown kind '" + kind + "'");
        }
    } catch (const json::exception& e) {
        throw FormatError("corrupt model file '" + path.string() + "': " + e.what());
    }
    return out;
}

}  // namespace deeptrust
