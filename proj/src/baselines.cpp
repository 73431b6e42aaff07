#include "deeptrust/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "deeptrust/error.hpp"
#include "deeptrust/rng.hpp"

namespace deeptrust {

using nlohmann::json;
using nlohmann::ordered_json;

double gini(std::size_t class0, std::size_t class1) {
    const double n = static_cast<double>(class0 + class1);
    if (n == 0.0) return 0.0;
    const double p0 = static_cast<double>(class0) / n;
    const double p1 = static_cast<double>(class1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count)
    : nodes_(std::move(nodes)), feature_count_(feature_count) {
    if (nodes_.empty()) throw ValidationError("decision tree has no nodes");
    for (const auto& node : nodes_) {
        if (node.feature < 0) continue;
        const auto n = static_cast<int>(nodes_.size());
        if (static_cast<std::size_t>(node.feature) >= feature_count_ || node.left <= 0 || node.right <= 0 ||
            node.left >= n || node.right >= n || !std::isfinite(node.threshold))
            throw ValidationError("decision tree node is malformed");
    }
}

double DecisionTree::predict_proba(std::span<const double> x) const {
    if (x.size() != feature_count_)
        throw ValidationError("tree expects " + std::to_string(feature_count_) + " features, got " +
                              std::to_string(x.size()));
    std::size_t i = 0;
    while (nodes_[i].feature >= 0) {
        const auto& node = nodes_[i];
        i = static_cast<std::size_t>(x[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                 : node.right);
    }
    return nodes_[i].probability;
}

std::size_t DecisionTree::depth() const {
    std::vector<std::size_t> level(nodes_.size(), 0);
    std::size_t deepest = 0;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        // Children are always stored after their parent.
        deepest = std::max(deepest, level[i]);
        if (nodes_[i].feature >= 0) {
            level[static_cast<std::size_t>(nodes_[i].left)] = level[i] + 1;
            level[static_cast<std::size_t>(nodes_[i].right)] = level[i] + 1;
        }
    }
    return deepest;
}

std::vector<double> DecisionTree::impurity_decrease() const {
    std::vector<double> out(feature_count_, 0.0);
    for (const auto& node : nodes_)
        if (node.feature >= 0) out[static_cast<std::size_t>(node.feature)] += node.weighted_decrease;
    return out;
}

ordered_json DecisionTree::to_json() const {
    ordered_json nodes = ordered_json::array();
    for (const auto& n : nodes_) {
        ordered_json j;
        j["feature"] = n.feature;
        j["threshold"] = n.threshold;
        j["left"] = n.left;
        j["right"] = n.right;
        j["probability"] = n.probability;
        j["samples"] = n.samples;
        j["weighted_decrease"] = n.weighted_decrease;
        nodes.push_back(std::move(j));
    }
    ordered_json out;
    out["feature_count"] = feature_count_;
    out["nodes"] = std::move(nodes);
    return out;
}

DecisionTree DecisionTree::from_json(const json& j) {
    try {
        std::vector<TreeNode> nodes;
        for (const auto& n : j.at("nodes"))
            nodes.push_back({n.at("feature").get<int>(), n.at("threshold").get<double>(), n.at("left").get<int>(),
                             n.at("right").get<int>(), n.at("probability").get<double>(),
                             n.at("samples").get<std::size_t>(), n.at("weighted_decrease").get<double>()});
        return DecisionTree(std::move(nodes), j.at("feature_count").get<std::size_t>());
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed decision tree: ") + e.what());
    } catch (const ValidationError& e) {
        throw FormatError(e.what());
    }
}

namespace {

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = -1.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Dataset& data, const TreeParams& params, std::uint64_t seed)
        : data_(data), params_(params), rng_(seed) {
        const auto k = data.dims();
        features_per_split_ = params.features_per_split == 0 ? k : std::min(params.features_per_split, k);
        all_features_.resize(k);
        std::iota(all_features_.begin(), all_features_.end(), std::size_t{0});
    }

    std::vector<TreeNode> build(std::vector<std::size_t> rows) {
        grow(std::move(rows), 0);
        return std::move(nodes_);
    }

private:
    int grow(std::vector<std::size_t> rows, std::size_t depth) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.emplace_back();
        std::size_t n1 = 0;
        for (auto r : rows) n1 += static_cast<std::size_t>(data_.y[r] == 1);
        const std::size_t n = rows.size();
        const std::size_t n0 = n - n1;
        {
            auto& node = nodes_[static_cast<std::size_t>(id)];
            node.samples = n;
            node.probability = params_.laplace ? (static_cast<double>(n1) + 1.0) / (static_cast<double>(n) + 2.0)
                                               : static_cast<double>(n1) / static_cast<double>(n);
        }
        const bool pure = n0 == 0 || n1 == 0;
        const bool depth_reached = params_.max_depth != 0 && depth >= params_.max_depth;
        if (pure || depth_reached || n < std::max<std::size_t>(2, params_.min_samples_split)) return id;

        const Split split = best_split(rows, n0, n1);
        if (split.feature < 0) return id;

        std::vector<std::size_t> left, right;
        for (auto r : rows) {
            if (data_.x(r, static_cast<std::size_t>(split.feature)) <= split.threshold)
                left.push_back(r);
            else
                right.push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();
        {
            auto& node = nodes_[static_cast<std::size_t>(id)];
            node.feature = split.feature;
            node.threshold = split.threshold;
            node.weighted_decrease = static_cast<double>(n) * split.gain;
        }
        const int l = grow(std::move(left), depth + 1);
        const int r = grow(std::move(right), depth + 1);
        nodes_[static_cast<std::size_t>(id)].left = l;
        nodes_[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    std::vector<std::size_t> candidate_features() {
        if (features_per_split_ == all_features_.size()) return all_features_;
        auto pool = all_features_;
        for (std::size_t i = 0; i < features_per_split_; ++i) {
            const auto j = i + static_cast<std::size_t>(rng_.below(pool.size() - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(features_per_split_);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

    Split best_split(const std::vector<std::size_t>& rows, std::size_t n0, std::size_t n1) {
        const double n = static_cast<double>(rows.size());
        const double parent = gini(n0, n1);
        Split best;
        std::vector<std::pair<double, int>> column(rows.size());
        for (auto f : candidate_features()) {
            for (std::size_t i = 0; i < rows.size(); ++i) column[i] = {data_.x(rows[i], f), data_.y[rows[i]]};
            std::sort(column.begin(), column.end());
            std::size_t left0 = 0, left1 = 0;
            for (std::size_t i = 0; i + 1 < column.size(); ++i) {
                (column[i].second == 1 ? left1 : left0) += 1;
                const double a = column[i].first;
                const double b = column[i + 1].first;
                if (!(a < b)) continue;
                double threshold = a + (b - a) / 2.0;
                if (!(threshold < b)) threshold = a;
                const double nl = static_cast<double>(i + 1);
                const double nr = n - nl;
                const double child = (nl / n) * gini(left0, left1) + (nr / n) * gini(n0 - left0, n1 - left1);
                const double gain = parent - child;
                if (gain > best.gain + 1e-12) best = {static_cast<int>(f), threshold, std::max(gain, 0.0)};
            }
        }
        return best;
    }

    const Dataset& data_;
    TreeParams params_;
    Rng rng_;
    std::size_t features_per_split_ = 0;
    std::vector<std::size_t> all_features_;
    std::vector<TreeNode> nodes_;
};

void check_training_set(const Dataset& train) {
    if (train.size() == 0) throw ValidationError("empty training set");
    if (train.x.rows() != train.y.size()) throw ValidationError("feature rows and targets differ in count");
    for (int y : train.y)
        if (y != 0 && y != 1) throw ValidationError("targets must be 0 or 1");
}

}  // namespace

DecisionTree fit_tree(const Dataset& train, std::span<const std::size_t> rows, const TreeParams& params,
                      std::uint64_t seed) {
    check_training_set(train);
    if (rows.empty()) throw ValidationError("empty training set");
    TreeBuilder builder(train, params, seed);
    return DecisionTree(builder.build({rows.begin(), rows.end()}), train.dims());
}

DecisionTree fit_tree(const Dataset& train, const TreeParams& params, std::uint64_t seed) {
    std::vector<std::size_t> rows(train.size());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return fit_tree(train, rows, params, seed);
}

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::size_t feature_count)
    : trees_(std::move(trees)), feature_count_(feature_count) {
    if (trees_.empty()) throw ValidationError("random forest needs at least one tree");
}

double RandomForest::predict_proba(std::span<const double> x) const {
    if (trees_.empty()) throw ValidationError("random forest is not fitted");
    std::size_t votes = 0;
    for (const auto& t : trees_) votes += static_cast<std::size_t>(t.predict(x));
    return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

ordered_json RandomForest::to_json() const {
    ordered_json trees = ordered_json::array();
    for (const auto& t : trees_) trees.push_back(t.to_json());
    ordered_json out;
    out["feature_count"] = feature_count_;
    out["trees"] = std::move(trees);
    return out;
}

RandomForest RandomForest::from_json(const json& j) {
    try {
        std::vector<DecisionTree> trees;
        for (const auto& t : j.at("trees")) trees.push_back(DecisionTree::from_json(t));
        return RandomForest(std::move(trees), j.at("feature_count").get<std::size_t>());
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed random forest: ") + e.what());
    }
}

RandomForest fit_forest(const Dataset& train, const ForestParams& params, std::uint64_t seed) {
    check_training_set(train);
    if (params.trees < 1) throw ValidationError("forest needs trees >= 1");
    const auto k = train.dims();
    TreeParams tree_params;
    tree_params.max_depth = params.max_depth;
    tree_params.min_samples_split = params.min_samples_split;
    tree_params.features_per_split =
        params.features_per_split ? params.features_per_split
                                  : std::max<std::size_t>(1, static_cast<std::size_t>(std::sqrt(static_cast<double>(k))));
    if (tree_params.features_per_split > k) throw ValidationError("features_per_split exceeds feature count");

    std::vector<DecisionTree> trees(params.trees);
    const auto count = static_cast<std::ptrdiff_t>(params.trees);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t t = 0; t < count; ++t) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(t)));
        std::vector<std::size_t> rows(train.size());
        if (params.bootstrap) {
            for (auto& r : rows) r = static_cast<std::size_t>(rng.below(train.size()));
        } else {
            std::iota(rows.begin(), rows.end(), std::size_t{0});
        }
        trees[static_cast<std::size_t>(t)] = fit_tree(train, rows, tree_params, rng.next());
    }
    return RandomForest(std::move(trees), k);
}

std::vector<FeatureImportance> feature_importance(const RandomForest& forest) {
    if (forest.trees().empty()) throw ValidationError("random forest is not fitted");
    std::vector<double> total(forest.feature_count(), 0.0);
    for (const auto& tree : forest.trees()) {
        const auto d = tree.impurity_decrease();
        for (std::size_t f = 0; f < total.size(); ++f) total[f] += d[f];
    }
    const double sum = std::accumulate(total.begin(), total.end(), 0.0);
    std::vector<FeatureImportance> out(total.size());
    for (std::size_t f = 0; f < total.size(); ++f) out[f] = {f, sum > 0.0 ? total[f] / sum : 0.0};
    std::stable_sort(out.begin(), out.end(), [](const FeatureImportance& a, const FeatureImportance& b) {
        return a.importance > b.importance;
    });
    return out;
}

std::array<double, 2> NaiveBayesModel::posterior(std::span<const double> x) const {
    if (x.size() != means[0].size())
        throw ValidationError("naive Bayes expects " + std::to_string(means[0].size()) + " features, got " +
                              std::to_string(x.size()));
    std::array<double, 2> log_joint{};
    for (int c = 0; c < 2; ++c) {
        double lj = std::log(priors[static_cast<std::size_t>(c)]);
        for (std::size_t f = 0; f < x.size(); ++f) {
            const double var = variances[static_cast<std::size_t>(c)][f];
            const double d = x[f] - means[static_cast<std::size_t>(c)][f];
            lj += -0.5 * std::log(2.0 * M_PI * var) - d * d / (2.0 * var);
        }
        log_joint[static_cast<std::size_t>(c)] = lj;
    }
    const double m = std::max(log_joint[0], log_joint[1]);
    const double log_norm = m + std::log(std::exp(log_joint[0] - m) + std::exp(log_joint[1] - m));
    const double p0 = std::exp(log_joint[0] - log_norm);
    return {p0, 1.0 - p0};
}

ordered_json NaiveBayesModel::to_json() const {
    ordered_json j;
    j["priors"] = priors;
    j["means"] = means;
    j["variances"] = variances;
    return j;
}

NaiveBayesModel NaiveBayesModel::from_json(const json& j) {
    try {
        NaiveBayesModel m;
        m.priors = j.at("priors").get<std::array<double, 2>>();
        m.means = j.at("means").get<std::array<std::vector<double>, 2>>();
        m.variances = j.at("variances").get<std::array<std::vector<double>, 2>>();
        if (m.means[0].size() != m.means[1].size() || m.variances[0].size() != m.means[0].size() ||
            m.variances[1].size() != m.means[0].size())
            throw FormatError("naive Bayes arrays differ in length");
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("malformed naive Bayes model: ") + e.what());
    }
}

NaiveBayesModel fit_naive_bayes(const Dataset& train, double variance_floor) {
    check_training_set(train);
    const auto k = train.dims();
    std::array<std::size_t, 2> counts{};
    for (int y : train.y) ++counts[static_cast<std::size_t>(y)];
    if (counts[0] == 0 || counts[1] == 0) throw ValidationError("naive Bayes needs both classes in the training set");

    NaiveBayesModel m;
    for (std::size_t c = 0; c < 2; ++c) {
        m.priors[c] = static_cast<double>(counts[c]) / static_cast<double>(train.size());
        m.means[c].assign(k, 0.0);
        m.variances[c].assign(k, 0.0);
    }
    for (std::size_t r = 0; r < train.size(); ++r)
        for (std::size_t f = 0; f < k; ++f) m.means[static_cast<std::size_t>(train.y[r])][f] += train.x(r, f);
    for (std::size_t c = 0; c < 2; ++c)
        for (auto& v : m.means[c]) v /= static_cast<double>(counts[c]);
    for (std::size_t r = 0; r < train.size(); ++r) {
        const auto c = static_cast<std::size_t>(train.y[r]);
        for (std::size_t f = 0; f < k; ++f) {
            const double d = train.x(r, f) - m.means[c][f];
            m.variances[c][f] += d * d;
        }
    }
    for (std::size_t c = 0; c < 2; ++c)
        for (auto& v : m.variances[c]) v = std::max(v / static_cast<double>(counts[c]), variance_floor);
    return m;
}

std::vector<double> LogisticModel::weights() const {
    const auto& d = std::get<nn::DenseLayer>(network.layers().front());
    return {d.weights.values().begin(), d.weights.values().end()};
}

double LogisticModel::intercept() const { return std::get<nn::DenseLayer>(network.layers().front()).bias[0]; }

std::vector<double> LogisticModel::predict_proba(const Matrix& x) const {
    return network.predict(standardization.transform(x));
}

double LogisticModel::predict_proba(std::span<const double> x) const {
    Matrix m(1, x.size());
    std::copy(x.begin(), x.end(), m.row(0).begin());
    return predict_proba(m)[0];
}

LogisticModel fit_logistic(const Dataset& train, const LogisticParams& params, std::uint64_t seed) {
    check_training_set(train);
    if (train.size() < 2) throw ValidationError("logistic regression needs at least 2 samples");
    const auto ones = static_cast<std::size_t>(std::count(train.y.begin(), train.y.end(), 1));
    if (ones == 0 || ones == train.size()) throw ValidationError("logistic regression needs both classes");

    LogisticModel model;
    model.l2_lambda = params.l2_lambda;
    if (params.standardize) {
        model.standardization = Standardizer::fit(train.x);
    } else {
        model.standardization.means.assign(train.dims(), 0.0);
        model.standardization.stddevs.assign(train.dims(), 1.0);
    }
    Rng rng(seed);
    std::vector<nn::Layer> layers;
    layers.emplace_back(nn::make_dense(train.dims(), 1, rng));
    layers.emplace_back(nn::SigmoidLayer{});
    model.network = nn::Network(std::move(layers), seed);

    const Matrix x = model.standardization.transform(train.x);
    const auto targets = targets_as_double(train.y);
    nn::TrainConfig cfg;
    cfg.learning_rate = params.learning_rate;
    cfg.l2_lambda = params.l2_lambda;
    for (std::size_t epoch = 0; epoch < params.epochs; ++epoch) {
        nn::ForwardCache cache;
        model.network.forward(x, nn::Mode::train, nullptr, &cache);
        const auto grads = nn::backward(model.network, cache, targets, params.l2_lambda);
        nn::sgd_step(model.network, grads, cfg);
    }
    return model;
}

}  // namespace deeptrust
