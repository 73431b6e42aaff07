#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <omp.h>

#include "deeptrust/baselines.hpp"
#include "deeptrust/classifier.hpp"
#include "deeptrust/error.hpp"
#include "deeptrust/features.hpp"
#include "fixtures.hpp"
#include "test_support.hpp"

using namespace deeptrust;

namespace {

Dataset xor_data() { return {Matrix{{0, 0}, {0, 1}, {1, 0}, {1, 1}}, {0, 1, 1, 0}}; }

double training_accuracy(const DecisionTree& t, const Dataset& d) {
    std::size_t ok = 0;
    for (std::size_t i = 0; i < d.size(); ++i) ok += t.predict(d.x.row(i)) == d.y[i];
    return static_cast<double>(ok) / static_cast<double>(d.size());
}

/// Gaussian density evaluated directly.
long double normal_pdf(long double x, long double mean, long double var) {
    const long double pi = 3.141592653589793238462643383279502884L;
    return std::exp(-(x - mean) * (x - mean) / (2 * var)) / std::sqrt(2 * pi * var);
}

}  // namespace

TEST_CASE("gini impurity") {
    CHECK(gini(5, 5) == 0.5);
    CHECK(gini(10, 0) == 0.0);
    CHECK(gini(0, 3) == 0.0);
    CHECK(gini(1, 3) == doctest::Approx(0.375));
}

TEST_CASE("pure node becomes a depth-0 leaf") {
    const Dataset d{Matrix{{1, 2}, {3, 4}, {5, 6}}, {1, 1, 1}};
    const auto t = fit_tree(d, {}, 0);
    CHECK(t.nodes().size() == 1);
    CHECK(t.depth() == 0);
    CHECK(t.nodes()[0].probability == 1.0);
}

TEST_CASE("XOR needs depth two") {
    const auto d = xor_data();
    TreeParams shallow;
    shallow.max_depth = 1;
    const auto t1 = fit_tree(d, shallow, 0);
    CHECK(training_accuracy(t1, d) == 0.5);
    CHECK(t1.nodes()[0].feature == 0);
    CHECK(t1.nodes()[0].threshold == 0.5);
    TreeParams deep;
    deep.max_depth = 2;
    const auto t2 = fit_tree(d, deep, 0);
    CHECK(training_accuracy(t2, d) == 1.0);
    CHECK(t2.depth() == 2);
}

TEST_CASE("ties go to the lowest feature, then the lowest threshold") {
    const Dataset d{Matrix{{0, 0}, {1, 1}, {2, 2}, {3, 3}}, {0, 0, 1, 1}};
    const auto t = fit_tree(d, {}, 0);
    CHECK(t.nodes()[0].feature == 0);
    CHECK(t.nodes()[0].threshold == 1.5);
    const Dataset e{Matrix{{0}, {1}, {2}, {3}}, {0, 1, 0, 1}};
    TreeParams stump;
    stump.max_depth = 1;
    CHECK(fit_tree(e, stump, 0).nodes()[0].threshold == 0.5);
}

TEST_CASE("min_samples_split and validation") {
    TreeParams p;
    p.min_samples_split = 5;
    CHECK(fit_tree(xor_data(), p, 0).nodes().size() == 1);
    CHECK_THROWS_AS(fit_tree(Dataset{Matrix(0, 2), {}}, {}, 0), ValidationError);
    CHECK_THROWS_AS(feature_importance(RandomForest{}), ValidationError);
}

TEST_CASE("tree predictions survive strictly monotone feature transforms") {
    const auto d = testing::synthetic_dataset(120, 0.3, 5);
    Dataset t = d;
    for (auto& v : t.x.values()) v = std::cbrt(v) * 3.0 + 7.0;
    TreeParams p;
    p.max_depth = 6;
    const auto a = fit_tree(d, p, 1);
    const auto b = fit_tree(t, p, 1);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(a.predict_proba(d.x.row(i)) == b.predict_proba(t.x.row(i)));
}

TEST_CASE("tree structure invariants") {
    const auto d = testing::synthetic_dataset(150, 0.3, 6);
    const auto t = fit_tree(d, {}, 0);
    std::vector<int> reached(t.nodes().size(), 0);
    reached[0] = 1;
    for (std::size_t i = 0; i < t.nodes().size(); ++i) {
        const auto& n = t.nodes()[i];
        CHECK(n.probability >= 0.0);
        CHECK(n.probability <= 1.0);
        if (n.feature >= 0) {
            CHECK(std::isfinite(n.threshold));
            reached[static_cast<std::size_t>(n.left)]++;
            reached[static_cast<std::size_t>(n.right)]++;
        }
    }
    for (int r : reached) CHECK(r == 1);
    CHECK(training_accuracy(t, d) == 1.0);
}

TEST_CASE("a one-tree forest without bagging is the tree") {
    const auto d = testing::synthetic_dataset(100, 0.3, 3);
    ForestParams fp;
    fp.trees = 1;
    fp.bootstrap = false;
    fp.features_per_split = d.dims();
    const auto forest = fit_forest(d, fp, 9);
    const auto tree = fit_tree(d, {}, 9);
    CHECK(forest.trees()[0] == tree);
    for (std::size_t i = 0; i < d.size(); ++i) CHECK(forest.predict(d.x.row(i)) == tree.predict(d.x.row(i)));
}

TEST_CASE("forest determinism is independent of the thread count") {
    const auto d = testing::synthetic_dataset(80, 0.3, 2);
    ForestParams fp;
    fp.trees = 12;
    const int saved = omp_get_max_threads();
    omp_set_num_threads(1);
    const auto a = fit_forest(d, fp, 4);
    omp_set_num_threads(4);
    const auto b = fit_forest(d, fp, 4);
    omp_set_num_threads(saved);
    CHECK(a == b);
    CHECK_FALSE(a == fit_forest(d, fp, 5));
    fp.features_per_split = d.dims() + 1;
    CHECK_THROWS_AS(fit_forest(d, fp, 4), ValidationError);
}

TEST_CASE("feature importance") {
    auto d = testing::synthetic_dataset(200, 0.0, 7);
    for (std::size_t r = 0; r < d.size(); ++r) d.x(r, 0) = 42.0;
    ForestParams fp;
    fp.trees = 30;
    const auto imp = feature_importance(fit_forest(d, fp, 1));
    REQUIRE(imp.size() == d.dims());
    double sum = 0.0;
    for (const auto& f : imp) sum += f.importance;
    CHECK(std::abs(sum - 1.0) < 1e-9);
    for (std::size_t i = 1; i < imp.size(); ++i) {
        CHECK(imp[i - 1].importance >= imp[i].importance);
        if (imp[i - 1].importance == imp[i].importance) CHECK(imp[i - 1].feature < imp[i].feature);
    }
    for (const auto& f : imp)
        if (f.feature == 0) CHECK(f.importance == 0.0);

    SynthConfig cfg;
    cfg.users = 200;
    cfg.seed = 7;
    const auto signal = generate_synthetic(cfg).signal_features;
    const auto top = FeatureSchema::standard().features()[imp[0].feature].name;
    CHECK(std::find(signal.begin(), signal.end(), top) != signal.end());
}

TEST_CASE("naive Bayes posterior") {
    const Dataset sym{Matrix{{-2}, {-1}, {1}, {2}}, {0, 0, 1, 1}};
    const auto m = fit_naive_bayes(sym);
    const std::vector<double> mid{0.0};
    CHECK(m.posterior(mid)[0] == doctest::Approx(0.5).epsilon(1e-12));

    Dataset priors{Matrix(100, 1), std::vector<int>(100, 1)};
    for (std::size_t i = 0; i < 30; ++i) priors.y[i] = 0;
    for (std::size_t i = 0; i < 100; ++i) priors.x(i, 0) = static_cast<double>(i % 7);
    const auto pm = fit_naive_bayes(priors);
    CHECK(pm.priors[0] == doctest::Approx(0.3));
    CHECK(pm.priors[1] == doctest::Approx(0.7));

    const Dataset oneD{Matrix{{0}, {1}, {2}, {10}, {12}, {14}}, {0, 0, 0, 1, 1, 1}};
    const auto om = fit_naive_bayes(oneD);
    for (double q : {-5.0, 1.0, 6.0, 7.0, 13.0, 40.0}) {
        const long double l0 = 0.5L * normal_pdf(q, 1.0L, 2.0L / 3.0L);
        const long double l1 = 0.5L * normal_pdf(q, 12.0L, 8.0L / 3.0L);
        const auto post = om.posterior(std::vector<double>{q});
        if (l0 + l1 > 0) CHECK(std::abs(post[0] - static_cast<double>(l0 / (l0 + l1))) < 1e-12);
        CHECK(std::abs(post[0] + post[1] - 1.0) < 1e-12);
    }
    CHECK(m.posterior(std::vector<double>{-50.0})[0] > 1.0 - 1e-12);

    const Dataset one_class{Matrix{{1}, {2}}, {1, 1}};
    CHECK_THROWS_AS(fit_naive_bayes(one_class), ValidationError);
    const Dataset constant{Matrix{{3}, {3}, {4}, {4}}, {0, 0, 1, 1}};
    const auto cm = fit_naive_bayes(constant);
    CHECK(cm.variances[0][0] == kVarianceFloor);
}

TEST_CASE("logistic regression") {
    const Dataset sep{Matrix{{0, 0}, {1, 0}, {0, 1}, {3, 3}, {4, 3}, {3, 4}}, {0, 0, 0, 1, 1, 1}};
    LogisticParams lp;
    lp.l2_lambda = 1e-4;
    lp.learning_rate = 0.5;
    lp.epochs = 2000;
    const auto m = fit_logistic(sep, lp, 0);
    for (std::size_t i = 0; i < sep.size(); ++i) CHECK((m.predict_proba(sep.x.row(i)) >= 0.5 ? 1 : 0) == sep.y[i]);

    lp.l2_lambda = 1e6;
    lp.learning_rate = 1e-7;
    lp.epochs = 5000;
    const auto shrunk = fit_logistic(sep, lp, 0);
    for (double w : shrunk.weights()) CHECK(std::abs(w) < 1e-3);
    for (std::size_t i = 0; i < sep.size(); ++i) CHECK(std::abs(shrunk.predict_proba(sep.x.row(i)) - 0.5) < 1e-3);

    lp = {};
    lp.learning_rate = 0.0;
    const auto frozen = fit_logistic(sep, lp, 3);
    Rng rng(3);
    CHECK(std::get<nn::DenseLayer>(frozen.network.layers()[0]) == nn::make_dense(2, 1, rng));

    const auto again = fit_logistic(sep, {}, 3);
    CHECK(again.network == fit_logistic(sep, {}, 3).network);
    const Dataset one_class{Matrix{{1}, {2}}, {0, 0}};
    CHECK_THROWS_AS(fit_logistic(one_class, {}, 0), ValidationError);
}

TEST_CASE("every classifier kind saves and reloads with identical predictions") {
    const auto d = testing::synthetic_dataset(60, 0.2, 4);
    testing::TempDir dir("clf");
    ClassifierConfig cfg;
    cfg.train.epochs = 3;
    cfg.hidden = 8;
    cfg.forest.trees = 5;
    cfg.logistic.epochs = 50;
    cfg.feature_schema_version = FeatureSchema::standard().version();
    for (auto kind : kClassifierKinds) {
        CAPTURE(kind);
        auto c = make_classifier(kind, cfg);
        CHECK(c->kind() == kind);
        c->fit(d);
        const auto p = c->predict_proba(d.x);
        for (double v : p) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        const auto path = dir / (std::string(kind) + ".json");
        save_classifier(*c, cfg.feature_schema_version, nlohmann::ordered_json::object(), path);
        const auto loaded = load_classifier(path);
        CHECK(loaded.classifier->kind() == kind);
        CHECK(loaded.feature_schema_version == cfg.feature_schema_version);
        CHECK(loaded.classifier->predict_proba(d.x) == p);
        CHECK(loaded.classifier->predict(d.x) == c->predict(d.x));
    }
    CHECK_THROWS_AS(make_classifier("svm", cfg), ValidationError);
    auto unfitted = make_classifier("naive_bayes", cfg);
    CHECK_THROWS(unfitted->predict_proba(d.x));
}
