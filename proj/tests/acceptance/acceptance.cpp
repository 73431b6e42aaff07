#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deeptrust/classifier.hpp"
#include "deeptrust/cli.hpp"
#include "deeptrust/data.hpp"
#include "deeptrust/deeptrust.hpp"
#include "deeptrust/evaluation.hpp"
#include "deeptrust/features.hpp"
#include "deeptrust/neural.hpp"
#include "deeptrust/reputation.hpp"
#include "deeptrust/synthetic.hpp"
#include "fixtures.hpp"
#include "gradient_oracle.hpp"
#include "test_support.hpp"

using namespace deeptrust;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, double a, double b = 0, double c = 0, double d = 0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
    return buf;
}

int cli(std::vector<std::string> args, std::string* err_text = nullptr) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    if (err_text) *err_text = err.str();
    return code;
}

nlohmann::json read_json(const std::filesystem::path& p) { return nlohmann::json::parse(testing::slurp(p)); }

Outcome gradient_oracle() {
    const auto start = Clock::now();
    double worst = 0.0;
    std::size_t entries = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        auto model = build_model(8, 16, seed % 2 ? 0.5 : 0.0, seed);
        Rng rng(derive_seed(seed, 7));
        for (auto& layer : model.network.layers())
            if (auto* d = std::get_if<nn::DenseLayer>(&layer))
                for (auto& b : d->bias) b = rng.uniform(-0.1, 0.1);
        Matrix x(12, 8);
        for (auto& v : x.values()) v = rng.uniform(-2.0, 2.0);
        std::vector<double> y(12);
        for (auto& t : y) t = static_cast<double>(rng.below(2));
        nn::ForwardCache cache;
        model.network.forward(x, nn::Mode::train, &rng, &cache);
        const auto check = testing::check_gradients(model.network, x, y, cache, 1e-3, 1e-5L);
        worst = std::max(worst, check.max_relative_error);
        entries += check.entries;
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-5 && elapsed < 10.0,
            fmt("max relative error %.3g over %.0f entries of 20 networks (tol 1e-5), %.2f s (limit 10 s)", worst,
                static_cast<double>(entries), elapsed)};
}

Outcome loss_equivalence() {
    // The training loss path: a 1-1 dense layer with unit weight feeding the sigmoid.
    std::vector<nn::Layer> layers;
    layers.emplace_back(nn::DenseLayer{Matrix{{1.0}}, {0.0}});
    layers.emplace_back(nn::SigmoidLayer{});
    const nn::Network net(std::move(layers));
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double z = -30.0 + 60.0 * i / 999.0;
        for (double y : {0.0, 1.0}) {
            const Matrix x{{z}};
            nn::ForwardCache cache;
            net.forward(x, nn::Mode::train, nullptr, &cache);
            const std::vector<double> target{y};
            const std::vector<double> logits{z, 0.0};
            const double ce = nn::softmax_cross_entropy(logits, y == 1.0 ? 0 : 1);
            worst = std::max(worst, std::abs(nn::batch_loss(net, cache, target, 0.0) - ce));
            worst = std::max(worst, std::abs(nn::binary_cross_entropy_with_logit(z, y) - ce));
        }
    }
    return {worst <= 1e-12, fmt("max |BCE - softmax CE| %.3g over 1000 z in [-30, 30], both labels (tol 1e-12)", worst)};
}

Outcome dropout() {
    Rng rng(3);
    const std::vector<double> ones(1000, 1.0);
    const nn::DropoutLayer half{0.5};
    const bool identity = nn::dropout_forward(half, ones, nn::Mode::eval, rng) == ones;
    std::vector<double> sum(ones.size(), 0.0);
    bool exact_scaling = true;
    for (int t = 0; t < 10000; ++t) {
        const auto out = nn::dropout_forward(half, ones, nn::Mode::train, rng);
        for (std::size_t i = 0; i < out.size(); ++i) {
            exact_scaling = exact_scaling && (out[i] == 0.0 || out[i] == 2.0);
            sum[i] += out[i];
        }
    }
    double worst = 0.0;
    for (double s : sum) worst = std::max(worst, std::abs(s / 10000.0 - 1.0));
    return {identity && exact_scaling && worst <= 0.05,
            std::string(identity ? "eval mode is the identity" : "eval mode alters input") +
                (exact_scaling ? ", survivors scaled to exactly 2.0" : ", survivor scaling inexact") +
                fmt(", max |mean - 1| %.4f over 10^4 trials (tol 0.05)", worst)};
}

UserRecord counts(const std::string& id, std::uint64_t fwr, std::uint64_t rpl, std::uint64_t men, std::uint64_t rtw) {
    UserRecord u;
    u.user_id = id;
    u.follower_count = fwr;
    u.replied_by_others = rpl;
    u.mentioned_by_others = men;
    u.retweeted_by_others = rtw;
    return u;
}

Outcome reputation() {
    const std::vector<UserRecord> users{counts("A", 10, 2, 1, 2), counts("B", 20, 4, 2, 4)};
    const std::vector<double> scr{acquaintance_score(users[0], 2), acquaintance_score(users[1], 2)};
    const auto aff = acquaintance_affinity(users, scr);
    const bool fixture = scr[0] == 7.5 && scr[1] == 15.0 && aff[0] == 45.0 && aff[1] == 90.0;

    Rng rng(10);
    bool order_kept = true;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<UserRecord> base, scaled;
        for (int i = 0; i < 15; ++i) {
            const auto f = 1 + rng.below(300), a = rng.below(8), b = rng.below(8), c = rng.below(8);
            base.push_back(counts("u" + std::to_string(i), f, a, b, c));
            scaled.push_back(counts("u" + std::to_string(i), 10 * f, 10 * a, 10 * b, 10 * c));
        }
        auto rank = [](const std::vector<UserRecord>& us) {
            std::vector<std::string> ids;
            std::vector<double> s;
            for (const auto& u : us) {
                ids.push_back(u.user_id);
                s.push_back(acquaintance_score(u, us.size()));
            }
            std::vector<std::string> order;
            for (const auto& r : rank_and_threshold(ids, s, acquaintance_affinity(us, s), {})) order.push_back(r.user_id);
            return order;
        };
        order_kept = order_kept && rank(base) == rank(scaled);
    }
    return {fixture && order_kept,
            fmt("acq_scr %.17g/%.17g, acq_aff %.17g/%.17g (exact 7.5/15, 45/90)", scr[0], scr[1], aff[0], aff[1]) +
                (order_kept ? "; rank order unchanged by x10 scaling on 50 fixtures" : "; rank order changed by x10")};
}

Outcome metrics() {
    const Confusion c{45, 10, 40, 5};
    const double acc = accuracy(c), kap = kappa(c);
    const auto r = compute_metrics(std::vector<double>{0.8, 0.3}, std::vector<int>{1, 0}, 0.5);
    const bool confusion_ok = std::abs(acc - 0.85) <= 1e-12 && std::abs(kap - 0.70) <= 1e-12;
    const double rmse_ref = std::sqrt(0.065), rrse_ref = std::sqrt(0.26);
    const bool fixture_ok = std::abs(r.mae - 0.25) <= 1e-9 && std::abs(r.rmse - rmse_ref) <= 1e-9 &&
                            r.rae && std::abs(*r.rae - 0.5) <= 1e-9 && r.rrse && std::abs(*r.rrse - rrse_ref) <= 1e-9;
    Rng rng(77);
    std::size_t violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t n = 1 + rng.below(40);
        std::vector<double> q(n);
        std::vector<int> t(n);
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = rng.uniform();
            t[i] = static_cast<int>(rng.below(2));
        }
        const auto m = compute_metrics(q, t, rng.uniform());
        if (m.mae > m.rmse) ++violations;
    }
    return {confusion_ok && fixture_ok && violations == 0,
            fmt("accuracy %.15g kappa %.15g (tol 1e-12); ", acc, kap) +
                fmt("MAE %.12g RMSE %.12g RAE %.12g RRSE %.12g (tol 1e-9); ", r.mae, r.rmse, r.rae.value_or(NAN),
                    r.rrse.value_or(NAN)) +
                fmt("MAE > RMSE in %.0f of 100 random sets", static_cast<double>(violations))};
}

class RecordingClassifier final : public Classifier {
public:
    explicit RecordingClassifier(std::vector<std::set<double>>* seen) : seen_(seen) {}
    std::string_view kind() const override { return "recording"; }
    void fit(const Dataset& d) override {
        seen_->emplace_back();
        for (std::size_t r = 0; r < d.size(); ++r) seen_->back().insert(d.x(r, 0));
    }
    std::vector<double> predict_proba(const Matrix& x) const override { return std::vector<double>(x.rows(), 0.5); }
    void write_parameters(nlohmann::ordered_json&) const override {}

private:
    std::vector<std::set<double>>* seen_;
};

Outcome cv_protocol() {
    bool ok = true;
    std::string detail;
    for (std::size_t n : {10u, 11u, 105u}) {
        const auto plan = make_folds(n, 10, 42);
        std::vector<int> hits(n, 0);
        std::size_t lo = n, hi = 0;
        for (const auto& f : plan.folds) {
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            for (auto i : f) hits[i]++;
        }
        const bool partition = std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }) && hi - lo <= 1;

        Dataset d{Matrix(n, 1), std::vector<int>(n)};
        for (std::size_t i = 0; i < n; ++i) {
            d.x(i, 0) = static_cast<double>(i);
            d.y[i] = static_cast<int>(i % 2);
        }
        std::vector<std::set<double>> seen;
        cross_validate([&](std::size_t) { return std::make_unique<RecordingClassifier>(&seen); }, d, plan);
        bool leak = false;
        for (std::size_t f = 0; f < plan.folds.size(); ++f) {
            for (auto i : plan.folds[f]) leak = leak || seen[f].count(static_cast<double>(i)) > 0;
            leak = leak || seen[f].size() + plan.folds[f].size() != n;
        }
        ok = ok && partition && !leak;
        detail += fmt("n=%.0f sizes %.0f..%.0f ", static_cast<double>(n), static_cast<double>(lo),
                      static_cast<double>(hi)) +
                  (partition ? "partition ok" : "partition BROKEN") + (leak ? ", train/test overlap; " : ", no overlap; ");
    }
    detail.resize(detail.size() - 2);
    return {ok, detail};
}

Outcome end_to_end(const testing::TempDir& work) {
    const auto start = Clock::now();
    const auto data = work / "e2e";
    std::string err;
    if (cli({"synth", "--users", "2000", "--noise", "0", "--seed", "7", "--out", data}, &err) != 0)
        return {false, "synth failed: " + err};
    const int code = cli({"train", "deeptrust", "--users", data + "/users.jsonl", "--messages",
                          data + "/messages.jsonl", "--labels", data + "/labels.csv", "--learning-rate", "0.001",
                          "--batch-size", "64", "--hidden", "250", "--l2-lambda", "1e-4", "--seed", "7", "--out",
                          work / "e2e_model"},
                         &err);
    if (code != 0) return {false, "train failed: " + err};
    const double elapsed = seconds_since(start);
    const auto report = read_json(std::filesystem::path(work / "e2e_model") / "train_report.json");
    const double acc = report["metrics"]["accuracy"].get<double>();
    const double loss = report["final_train_loss"].get<double>();
    return {acc >= 0.95 && loss < std::log(2.0) && elapsed < 300.0,
            fmt("test accuracy %.4f (>= 0.95), final train loss %.4g (< ln 2), %.0f epochs, %.1f s (limit 300 s)",
                acc, loss, report["epochs_run"].get<double>(), elapsed)};
}

Outcome baseline_ordering(const testing::TempDir& work) {
    const auto data = work / "noisy";
    std::string err;
    if (cli({"synth", "--users", "2000", "--noise", "0.3", "--seed", "7", "--out", data}, &err) != 0)
        return {false, "synth failed: " + err};
    if (cli({"evaluate", "decision_tree", "--cv", "10", "--compare", "random_forest", "--seed", "7", "--users",
             data + "/users.jsonl", "--messages", data + "/messages.jsonl", "--labels", data + "/labels.csv", "--out",
             work / "noisy_eval"},
            &err) != 0)
        return {false, "evaluate failed: " + err};
    const auto report = read_json(std::filesystem::path(work / "noisy_eval") / "report.json");
    const double tree = report["metrics"]["accuracy"].get<double>();
    const double forest = report["comparison"]["accuracy"].get<double>();
    const double p = report["comparison"]["permutation_test"]["p_value"].get<double>();
    return {forest >= tree,
            fmt("10-fold accuracy random forest %.4f >= decision tree %.4f (paired permutation p = %.4g)", forest,
                tree, p)};
}

Outcome determinism(const testing::TempDir& work) {
    const std::filesystem::path root = work.path() / "det";
    std::string err;
    std::vector<std::string> failures;
    auto twice = [&](const std::string& stage, const std::function<std::vector<std::string>(const std::string&)>& args) {
        std::map<std::string, std::string> snaps[2];
        for (int i = 0; i < 2; ++i) {
            const auto out = (root / (stage + std::to_string(i))).string();
            if (cli(args(out), &err) != 0) {
                failures.push_back(stage + " failed: " + err);
                return;
            }
            snaps[i] = testing::snapshot(out);
        }
        if (snaps[0].empty() || snaps[0] != snaps[1]) failures.push_back(stage);
    };
    const auto corpus = (root / "synth0").string();
    const std::vector<std::string> inputs{"--users", corpus + "/users.jsonl", "--messages", corpus + "/messages.jsonl",
                                          "--labels", corpus + "/labels.csv"};
    auto with = [&](std::vector<std::string> head, const std::string& out) {
        head.insert(head.end(), inputs.begin(), inputs.end());
        head.push_back("--out");
        head.push_back(out);
        return head;
    };
    twice("synth", [](const std::string& out) {
        return std::vector<std::string>{"synth", "--users", "150", "--noise", "0.2", "--seed", "11", "--out", out};
    });
    if (!failures.empty()) return {false, "synth: " + failures.front()};
    twice("ingest", [&](const std::string& out) { return with({"ingest"}, out); });
    twice("features", [&](const std::string& out) {
        return with({"features", "--cdf", "mean_char_count", "--scatter", "verified,follower_count"}, out);
    });
    twice("reputation", [&](const std::string& out) { return with({"reputation"}, out); });
    twice("train", [&](const std::string& out) {
        return with({"train", "deeptrust", "--epochs", "4", "--hidden", "16", "--seed", "5", "--reputation", "feature"},
                    out);
    });
    twice("train_forest",
          [&](const std::string& out) { return with({"train", "random_forest", "--trees", "15", "--seed", "5"}, out); });
    twice("evaluate", [&](const std::string& out) {
        return with({"evaluate", "logistic", "--cv", "5", "--compare", "naive_bayes", "--seed", "3"}, out);
    });
    twice("predict", [&](const std::string& out) {
        return with({"predict", "--model", (root / "train0" / "model.json").string(), "--reputation-gate"}, out);
    });
    twice("rank-features",
          [&](const std::string& out) { return with({"rank-features", "--trees", "15", "--seed", "2"}, out); });
    if (!failures.empty()) {
        std::string list;
        for (const auto& f : failures) list += (list.empty() ? "" : ", ") + f;
        return {false, "differing or failing stages: " + list};
    }
    return {true, "synth, ingest, features, reputation, train (deeptrust, random_forest), evaluate, predict and "
                  "rank-features each byte-identical across two runs"};
}

Outcome round_trips(const testing::TempDir& work) {
    SynthConfig cfg;
    cfg.users = 120;
    cfg.seed = 5;
    cfg.noise = 0.2;
    const auto corpus = generate_synthetic(cfg).corpus;
    const auto dir = work.path() / "rt";
    std::filesystem::create_directories(dir);
    save_corpus(corpus, dir / "u1.jsonl", dir / "m1.jsonl");
    const auto back = load_corpus(dir / "u1.jsonl", dir / "m1.jsonl", {false, false, corpus.topic()}).corpus;
    save_corpus(back, dir / "u2.jsonl", dir / "m2.jsonl");
    const bool corpus_ok = back == corpus &&
                           testing::slurp(dir / "u1.jsonl") == testing::slurp(dir / "u2.jsonl") &&
                           testing::slurp(dir / "m1.jsonl") == testing::slurp(dir / "m2.jsonl") &&
                           extract_corpus_features(back, synthetic_lexicon()) ==
                               extract_corpus_features(corpus, synthetic_lexicon());

    const auto data = testing::synthetic_dataset(150, 0.2, 9);
    ClassifierConfig cc;
    cc.train.epochs = 5;
    cc.hidden = 32;
    cc.forest.trees = 20;
    cc.logistic.epochs = 200;
    cc.feature_schema_version = FeatureSchema::standard().version();
    std::string failed;
    for (auto kind : kClassifierKinds) {
        auto c = make_classifier(kind, cc);
        c->fit(data);
        const auto path = dir / (std::string(kind) + ".json");
        save_classifier(*c, cc.feature_schema_version, nlohmann::ordered_json::object(), path);
        const auto loaded = load_classifier(path);
        if (loaded.classifier->predict_proba(data.x) != c->predict_proba(data.x)) failed += std::string(kind) + " ";
    }
    return {corpus_ok && failed.empty(),
            std::string(corpus_ok ? "corpus save/load/save byte-identical with identical features; "
                                  : "corpus round trip differs; ") +
                (failed.empty() ? "deeptrust, decision_tree, random_forest, naive_bayes, logistic reload with "
                                  "bit-identical predictions"
                                : "prediction mismatch after reload: " + failed)};
}

}  // namespace

int main() {
    testing::TempDir work("acceptance");
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient oracle", gradient_oracle},
        {"loss equivalence", loss_equivalence},
        {"dropout", dropout},
        {"reputation oracle", reputation},
        {"metric oracle", metrics},
        {"cross-validation protocol", cv_protocol},
        {"end-to-end synthetic training", [&] { return end_to_end(work); }},
        {"baseline ordering", [&] { return baseline_ordering(work); }},
        {"determinism", [&] { return determinism(work); }},
        {"round trips", [&] { return round_trips(work); }},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << i + 1 << " (" << criteria[i].first
                  << "): " << o.detail << std::endl;
    }
    std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed" << std::endl;
    return failed ? 1 : 0;
}
