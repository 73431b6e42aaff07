#include "deeptrust/cli.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "deeptrust/classifier.hpp"
#include "deeptrust/csv.hpp"
#include "deeptrust/error.hpp"
#include "deeptrust/evaluation.hpp"
#include "deeptrust/features.hpp"
#include "deeptrust/reputation.hpp"
#include "deeptrust/rng.hpp"
#include "deeptrust/synthetic.hpp"

namespace deeptrust::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string default_out_dir() {
    const char* env = std::getenv(kOutDirEnv);
    return env && *env ? env : ".";
}

fs::path prepare_out_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw IoError("cannot create output directory '" + dir + "'");
    return dir;
}

std::ofstream open_output(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void write_file(const fs::path& path, const std::string& content) {
    auto out = open_output(path);
    out << content;
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

void require_file(const std::string& path, const char* what) {
    if (!fs::exists(path)) throw IoError(std::string(what) + " file '" + path + "' does not exist");
}

struct CorpusArgs {
    std::string users;
    std::string messages;
    std::string labels;
    std::string lexicon;
    std::string topic;
    bool strict = false;
    bool compute_aggregates = false;
    bool no_filter = false;
    std::size_t cap = kDefaultPerUserCap;
    std::string reputation = "off";
    double theta = ThresholdConfig{}.theta;
};

void add_corpus_options(CLI::App* sub, CorpusArgs& a, bool labels_required, bool reputation_mode) {
    sub->add_option("--users", a.users, "users.jsonl")->required();
    sub->add_option("--messages", a.messages, "messages.jsonl")->required();
    auto* labels = sub->add_option("--labels", a.labels, "labels.csv (user_id,label)");
    if (labels_required) labels->required();
    sub->add_option("--lexicon", a.lexicon, "sentiment lexicon, term<TAB>+|- per line (default: built-in vocabulary)");
    sub->add_option("--topic", a.topic, "topic name recorded on the corpus");
    sub->add_flag("--strict", a.strict, "fail on malformed lines and orphan messages");
    sub->add_flag("--compute-aggregates", a.compute_aggregates, "derive replied/mentioned/retweeted-by-others from messages");
    sub->add_flag("--no-filter", a.no_filter, "skip zero-follower, duplicate and cap filtering");
    sub->add_option("--cap", a.cap, "most recent messages kept per user")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--theta", a.theta, "reputation threshold on the normalized rank")->capture_default_str();
    if (reputation_mode)
        sub->add_option("--reputation", a.reputation, "reputation rank as an extra feature")
            ->capture_default_str()
            ->check(CLI::IsMember({"off", "feature"}));
}

ordered_json echo(const CorpusArgs& a) {
    ordered_json j;
    j["users"] = a.users;
    j["messages"] = a.messages;
    j["labels"] = a.labels;
    j["lexicon"] = a.lexicon;
    j["topic"] = a.topic;
    j["strict"] = a.strict;
    j["compute_aggregates"] = a.compute_aggregates;
    j["filter"] = !a.no_filter;
    j["cap"] = a.cap;
    j["reputation"] = a.reputation;
    j["theta"] = a.theta;
    return j;
}

Corpus load_inputs(const CorpusArgs& a, std::ostream& err, LoadStats* stats_out = nullptr,
                   FilterStats* filter_out = nullptr) {
    require_file(a.users, "users");
    require_file(a.messages, "messages");
    auto loaded = load_corpus(a.users, a.messages, {a.strict, a.compute_aggregates, a.topic});
    const auto& s = loaded.stats;
    if (s.orphan_messages) err << "warning: dropped " << s.orphan_messages << " orphan messages\n";
    if (s.malformed_lines) err << "warning: skipped " << s.malformed_lines << " malformed lines\n";
    if (stats_out) *stats_out = s;
    if (a.no_filter) return std::move(loaded.corpus);
    FilterStats fstats;
    auto filtered = filter_corpus(loaded.corpus, a.cap, &fstats);
    if (filter_out) *filter_out = fstats;
    return filtered;
}

Lexicon load_lexicon_arg(const CorpusArgs& a) {
    if (a.lexicon.empty()) return synthetic_lexicon();
    require_file(a.lexicon, "lexicon");
    return load_lexicon(a.lexicon);
}

struct Prepared {
    Corpus corpus;
    const FeatureSchema* schema = nullptr;
    Matrix features;  // one row per corpus user
    std::vector<ReputationScore> reputation;  // corpus order, empty when not computed
};

std::vector<ReputationScore> reputation_by_user(const Corpus& corpus, double theta) {
    ThresholdConfig cfg{theta};
    cfg.validate();
    std::map<std::string, ReputationScore> by_id;
    for (auto& r : compute_reputation(corpus, cfg)) by_id.emplace(r.user_id, r);
    std::vector<ReputationScore> out;
    out.reserve(corpus.n());
    for (const auto& u : corpus.users()) out.push_back(by_id.at(u.user_id));
    return out;
}

Prepared prepare(const CorpusArgs& a, bool reputation_column, bool need_reputation, std::ostream& err) {
    Prepared p;
    p.corpus = load_inputs(a, err);
    const Lexicon lexicon = load_lexicon_arg(a);
    const Matrix base = extract_corpus_features(p.corpus, lexicon);
    for (std::size_t u = 0; u < p.corpus.n(); ++u)
        if (p.corpus.messages_of(u).empty()) err << "warning: user '" << p.corpus.users()[u].user_id
                                                 << "' has no messages; message features are zero\n";
    if (reputation_column || need_reputation) p.reputation = reputation_by_user(p.corpus, a.theta);
    if (!reputation_column) {
        p.schema = &FeatureSchema::standard();
        p.features = base;
        return p;
    }
    p.schema = &FeatureSchema::with_reputation();
    p.features = Matrix(base.rows(), base.cols() + 1);
    for (std::size_t r = 0; r < base.rows(); ++r) {
        std::copy(base.row(r).begin(), base.row(r).end(), p.features.row(r).begin());
        p.features(r, base.cols()) = p.reputation[r].normalized_rank;
    }
    return p;
}

struct Labeled {
    Dataset data;
    std::vector<std::string> ids;
    std::vector<Label> labels;
};

Labeled join(const Prepared& p, const std::string& labels_path, std::ostream& err) {
    require_file(labels_path, "labels");
    const auto joined = join_labels(p.corpus, load_labels(labels_path));
    if (joined.unlabeled) err << "note: " << joined.unlabeled << " users have no label\n";
    if (joined.dangling) err << "note: " << joined.dangling << " labels name no retained user\n";
    Labeled out;
    std::vector<std::size_t> rows;
    for (const auto& pair : joined.pairs) {
        rows.push_back(pair.user_index);
        out.ids.push_back(p.corpus.users()[pair.user_index].user_id);
        out.labels.push_back(pair.label);
        out.data.y.push_back(label_target(pair.label));
    }
    out.data.x = p.features.select_rows(rows);
    return out;
}

struct ModelArgs {
    std::string kind = "deeptrust";
    std::uint64_t seed = 0;
    nn::TrainConfig train;
    std::size_t hidden = kDefaultHiddenUnits;
    double dropout = kDefaultDropout;
    double validation_fraction = 0.1;
    std::size_t max_depth = 0;
    std::size_t min_samples_split = 2;
    std::size_t trees = ForestParams{}.trees;
    std::size_t features_per_split = 0;
    double logistic_lambda = LogisticParams{}.l2_lambda;
    double logistic_learning_rate = LogisticParams{}.learning_rate;
    std::size_t logistic_epochs = LogisticParams{}.epochs;
};

void add_model_options(CLI::App* sub, ModelArgs& m) {
    sub->add_option("model", m.kind, "deeptrust, decision_tree, random_forest, naive_bayes or logistic")
        ->capture_default_str();
    sub->add_option("--seed", m.seed, "master seed")->capture_default_str();
    sub->add_option("--learning-rate", m.train.learning_rate, "SGD step size")->capture_default_str();
    sub->add_option("--batch-size", m.train.batch_size, "minibatch size")->capture_default_str();
    sub->add_option("--l2-lambda", m.train.l2_lambda, "L2 penalty on weights")->capture_default_str();
    sub->add_option("--epochs", m.train.epochs, "maximum epochs")->capture_default_str();
    sub->add_option("--patience", m.train.patience, "early-stopping patience, 0 disables")->capture_default_str();
    sub->add_option("--lr-decay", m.train.decay_rate, "step decay factor for the learning rate")->capture_default_str();
    sub->add_option("--lr-decay-every", m.train.decay_every, "epochs per decay step, 0 disables")
        ->capture_default_str();
    sub->add_option("--hidden", m.hidden, "hidden units per dense layer")->capture_default_str();
    sub->add_option("--dropout", m.dropout, "dropout probability")->capture_default_str();
    sub->add_option("--validation-fraction", m.validation_fraction,
                    "inner early-stopping split when no validation set is given")
        ->capture_default_str();
    sub->add_option("--max-depth", m.max_depth, "tree depth limit, 0 = unlimited")->capture_default_str();
    sub->add_option("--min-samples-split", m.min_samples_split, "smallest node that may split")->capture_default_str();
    sub->add_option("--trees", m.trees, "forest size")->capture_default_str();
    sub->add_option("--features-per-split", m.features_per_split, "forest feature sample, 0 = floor(sqrt(k))")
        ->capture_default_str();
    sub->add_option("--logistic-lambda", m.logistic_lambda, "logistic L2 penalty")->capture_default_str();
    sub->add_option("--logistic-learning-rate", m.logistic_learning_rate, "logistic step size")->capture_default_str();
    sub->add_option("--logistic-epochs", m.logistic_epochs, "logistic full-batch epochs")->capture_default_str();
}

ordered_json echo(const ModelArgs& m) {
    ordered_json j;
    j["model"] = m.kind;
    j["seed"] = m.seed;
    j["learning_rate"] = m.train.learning_rate;
    j["batch_size"] = m.train.batch_size;
    j["l2_lambda"] = m.train.l2_lambda;
    j["epochs"] = m.train.epochs;
    j["patience"] = m.train.patience;
    j["lr_decay"] = m.train.decay_rate;
    j["lr_decay_every"] = m.train.decay_every;
    j["hidden"] = m.hidden;
    j["dropout"] = m.dropout;
    j["validation_fraction"] = m.validation_fraction;
    j["max_depth"] = m.max_depth;
    j["min_samples_split"] = m.min_samples_split;
    j["trees"] = m.trees;
    j["features_per_split"] = m.features_per_split;
    j["logistic_lambda"] = m.logistic_lambda;
    j["logistic_learning_rate"] = m.logistic_learning_rate;
    j["logistic_epochs"] = m.logistic_epochs;
    return j;
}

ClassifierConfig classifier_config(const ModelArgs& m, const std::string& schema_version, std::uint64_t seed) {
    ClassifierConfig c;
    c.train = m.train;
    c.train.validate();
    c.hidden = m.hidden;
    c.dropout = m.dropout;
    c.validation_fraction = m.validation_fraction;
    c.tree.max_depth = m.max_depth;
    c.tree.min_samples_split = m.min_samples_split;
    c.forest.trees = m.trees;
    c.forest.features_per_split = m.features_per_split;
    c.forest.max_depth = m.max_depth;
    c.forest.min_samples_split = m.min_samples_split;
    c.logistic.l2_lambda = m.logistic_lambda;
    c.logistic.learning_rate = m.logistic_learning_rate;
    c.logistic.epochs = m.logistic_epochs;
    c.seed = seed;
    c.feature_schema_version = schema_version;
    if (!(m.dropout >= 0.0 && m.dropout < 1.0)) throw ValidationError("dropout must be in [0, 1)");
    if (m.hidden == 0) throw ValidationError("hidden must be >= 1");
    if (m.trees == 0) throw ValidationError("trees must be >= 1");
    return c;
}

struct SplitArgs {
    SplitSpec spec;
    bool split_seed_given = false;
};

void add_split_options(CLI::App* sub, SplitArgs& s) {
    sub->add_option("--train-fraction", s.spec.train_fraction)->capture_default_str();
    sub->add_option("--validation-split", s.spec.validation_fraction, "validation share of the labeled users")
        ->capture_default_str();
    sub->add_option("--test-fraction", s.spec.test_fraction)->capture_default_str();
    sub->add_flag("--stratify", s.spec.stratify, "split each class separately");
    sub->add_option("--split-seed", s.spec.seed, "default: --seed")->each([&s](const std::string&) {
        s.split_seed_given = true;
    });
}

ordered_json echo(const SplitSpec& s) {
    ordered_json j;
    j["train_fraction"] = s.train_fraction;
    j["validation_fraction"] = s.validation_fraction;
    j["test_fraction"] = s.test_fraction;
    j["seed"] = s.seed;
    j["stratify"] = s.stratify;
    return j;
}

Splits<std::size_t> split_labeled(const Labeled& l, SplitArgs& s, std::uint64_t seed) {
    if (!s.split_seed_given) s.spec.seed = seed;
    s.spec.validate();
    return split_indices(l.data.size(), s.spec, l.data.y);
}

template <typename T>
std::vector<T> concat(const std::vector<T>& a, const std::vector<T>& b) {
    std::vector<T> out(a);
    out.insert(out.end(), b.begin(), b.end());
    return out;
}

// synth

struct SynthArgs {
    SynthConfig config;
    std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& err) {
    const auto dir = prepare_out_dir(a.out);
    const auto result = generate_synthetic(a.config);
    save_corpus(result.corpus, dir / "users.jsonl", dir / "messages.jsonl");
    save_labels(result.labels, dir / "labels.csv");
    save_lexicon(synthetic_lexicon(), dir / "lexicon.tsv");

    ordered_json j;
    j["tool"] = "deeptrust";
    j["tool_version"] = kToolVersion;
    ordered_json config;
    config["subcommand"] = "synth";
    config["users"] = a.config.users;
    config["trusted_fraction"] = a.config.trusted_fraction;
    config["seed"] = a.config.seed;
    config["noise"] = a.config.noise;
    config["min_messages"] = a.config.min_messages;
    config["max_messages"] = a.config.max_messages;
    config["zero_follower_fraction"] = a.config.zero_follower_fraction;
    config["topic"] = a.config.topic;
    j["config"] = std::move(config);
    j["messages"] = result.corpus.messages().size();
    j["trusted"] = std::count_if(result.labels.begin(), result.labels.end(),
                                 [](const auto& kv) { return kv.second == Label::trusted; });
    j["signal_features"] = result.signal_features;
    write_file(dir / "synth.json", j.dump(2) + "\n");
    err << "wrote " << a.config.users << " users and " << result.corpus.messages().size() << " messages to "
        << dir.string() << "\n";
    return 0;
}

// ingest

int cmd_ingest(const CorpusArgs& a, const std::string& out_dir, std::ostream& out, std::ostream& err) {
    const auto dir = prepare_out_dir(out_dir);
    LoadStats stats;
    FilterStats fstats;
    const Corpus corpus = load_inputs(a, err, &stats, &fstats);
    save_corpus(corpus, dir / "filtered_users.jsonl", dir / "filtered_messages.jsonl");

    ordered_json j;
    j["tool"] = "deeptrust";
    j["tool_version"] = kToolVersion;
    auto config = echo(a);
    config.erase("labels");
    config.erase("lexicon");
    config.erase("reputation");
    config.erase("theta");
    j["config"] = std::move(config);
    ordered_json load;
    load["users_read"] = stats.users_read;
    load["messages_read"] = stats.messages_read;
    load["orphan_messages"] = stats.orphan_messages;
    load["malformed_lines"] = stats.malformed_lines;
    load["duplicate_records"] = stats.duplicate_records;
    j["load"] = std::move(load);
    ordered_json filter;
    filter["zero_follower_users"] = fstats.zero_follower_users;
    filter["messages_of_removed_users"] = fstats.messages_of_removed_users;
    filter["duplicate_messages"] = fstats.duplicate_messages;
    filter["truncated_messages"] = fstats.truncated_messages;
    j["filter"] = std::move(filter);
    ordered_json retained;
    retained["users"] = corpus.n();
    retained["messages"] = corpus.messages().size();
    j["retained"] = std::move(retained);
    const auto text = j.dump(2) + "\n";
    write_file(dir / "ingest.json", text);
    out << text;
    return 0;
}

// features

struct FeatureArgs {
    CorpusArgs corpus;
    std::vector<std::string> cdf;
    std::vector<std::string> scatter;
    std::string out;
};

int cmd_features(const FeatureArgs& a, std::ostream& err) {
    const auto dir = prepare_out_dir(a.out);
    const auto prepared = prepare(a.corpus, a.corpus.reputation == "feature", false, err);
    const auto labeled = join(prepared, a.corpus.labels, err);
    auto out = open_output(dir / "features.csv");
    write_features_csv(out, *prepared.schema, labeled.data.x, labeled.labels);
    for (const auto& name : a.cdf)
        write_file(dir / ("cdf_" + name + ".csv"), export_cdf(*prepared.schema, labeled.data.x, labeled.labels, name));
    if (!a.scatter.empty())
        write_file(dir / "scatter.csv",
                   export_scatter_matrix(*prepared.schema, labeled.data.x, labeled.labels, a.scatter));
    return 0;
}

// reputation

int cmd_reputation(const CorpusArgs& a, const std::string& out_dir, std::ostream& err) {
    const auto dir = prepare_out_dir(out_dir);
    ThresholdConfig cfg{a.theta};
    cfg.validate();
    const auto corpus = load_inputs(a, err);
    const auto ranked = compute_reputation(corpus, cfg);
    auto out = open_output(dir / "reputation.csv");
    write_reputation_csv(out, ranked);
    return 0;
}

// train

struct TrainArgs {
    CorpusArgs corpus;
    ModelArgs model;
    SplitArgs split;
    std::string out;
};

ordered_json run_config(const char* subcommand, const CorpusArgs& c, const ModelArgs& m) {
    ordered_json j;
    j["subcommand"] = subcommand;
    const auto corpus = echo(c);
    const auto model = echo(m);
    for (auto& [k, v] : corpus.items()) j[k] = v;
    for (auto& [k, v] : model.items()) j[k] = v;
    return j;
}

int cmd_train(TrainArgs& a, std::ostream& err) {
    const auto dir = prepare_out_dir(a.out);
    auto config = run_config("train", a.corpus, a.model);
    const auto cfg_probe = classifier_config(a.model, "", a.model.seed);
    (void)make_classifier(a.model.kind, cfg_probe);

    const auto prepared = prepare(a.corpus, a.corpus.reputation == "feature", false, err);
    const auto labeled = join(prepared, a.corpus.labels, err);
    const auto parts = split_labeled(labeled, a.split, a.model.seed);
    config["split"] = echo(a.split.spec);

    const auto cfg = classifier_config(a.model, prepared.schema->version(), a.model.seed);
    const Dataset train = labeled.data.subset(parts.train);
    const Dataset validation = labeled.data.subset(parts.validation);
    const Dataset test = labeled.data.subset(parts.test);

    std::unique_ptr<Classifier> classifier;
    if (a.model.kind == "deeptrust") {
        auto dt = std::make_unique<DeepTrustClassifier>(cfg);
        dt->fit(train, validation);
        classifier = std::move(dt);
    } else {
        classifier = make_classifier(a.model.kind, cfg);
        classifier->fit(labeled.data.subset(concat(parts.train, parts.validation)));
    }
    save_classifier(*classifier, prepared.schema->version(), config, dir / "model.json");

    ordered_json extra;
    extra["split_sizes"] = {{"train", parts.train.size()},
                            {"validation", parts.validation.size()},
                            {"test", parts.test.size()}};
    if (const auto* history = classifier->history()) {
        auto out = open_output(dir / "history.csv");
        write_history_csv(out, *history);
        if (!history->epochs.empty()) {
            extra["epochs_run"] = history->epochs.size();
            extra["best_epoch"] = history->best_epoch;
            extra["final_train_loss"] = history->epochs.back().train_loss;
            extra["best_train_loss"] = history->epochs.at(history->best_epoch - 1).train_loss;
        }
    }
    if (test.size() > 0) {
        const auto train_mean = static_cast<double>(std::count(train.y.begin(), train.y.end(), 1)) /
                                static_cast<double>(std::max<std::size_t>(train.size(), 1));
        const auto report = compute_metrics(classifier->predict_proba(test.x), test.y, train_mean);
        emit_report(report, {a.model.kind, prepared.schema->version(), config, extra}, dir / "train_report.json");
        err << a.model.kind << ": test accuracy " << report.accuracy << " on " << test.size() << " users\n";
    } else {
        ordered_json j;
        j["tool"] = "deeptrust";
        j["tool_version"] = kToolVersion;
        j["model"] = a.model.kind;
        j["config"] = config;
        for (auto& [k, v] : extra.items()) j[k] = v;
        write_file(dir / "train_report.json", j.dump(2) + "\n");
    }
    return 0;
}

// evaluate

struct EvaluateArgs {
    CorpusArgs corpus;
    ModelArgs model;
    SplitArgs split;
    std::size_t cv = 0;
    std::uint64_t fold_seed = 0;
    bool fold_seed_given = false;
    std::string compare;
    std::size_t permutation_samples = 10000;
    std::string out;
};

int cmd_evaluate(EvaluateArgs& a, std::ostream& out, std::ostream& err) {
    const auto dir = prepare_out_dir(a.out);
    auto config = run_config("evaluate", a.corpus, a.model);
    (void)make_classifier(a.model.kind, classifier_config(a.model, "", a.model.seed));
    if (!a.compare.empty()) {
        if (a.cv == 0) throw ValidationError("--compare requires --cv");
        (void)make_classifier(a.compare, classifier_config(a.model, "", a.model.seed));
    }
    if (a.cv == 1) throw ValidationError("--cv must be >= 2 (or 0 for a holdout split)");

    const auto prepared = prepare(a.corpus, a.corpus.reputation == "feature", false, err);
    const auto labeled = join(prepared, a.corpus.labels, err);
    const auto& version = prepared.schema->version();

    EvalReport report;
    ordered_json extra = ordered_json::object();
    if (a.cv >= 2) {
        if (!a.fold_seed_given) a.fold_seed = a.model.seed;
        config["cv"] = a.cv;
        config["fold_seed"] = a.fold_seed;
        const auto plan = make_folds(labeled.data.size(), a.cv, a.fold_seed);
        auto factory_for = [&](const std::string& kind) -> ClassifierFactory {
            return [&, kind](std::size_t fold) {
                return make_classifier(kind, classifier_config(a.model, version, derive_seed(a.model.seed, fold + 1)));
            };
        };
        report = cross_validate(factory_for(a.model.kind), labeled.data, plan);
        if (!a.compare.empty()) {
            config["compare"] = a.compare;
            config["permutation_samples"] = a.permutation_samples;
            const auto other = cross_validate(factory_for(a.compare), labeled.data, plan);
            std::vector<double> acc_a, acc_b;
            for (const auto& f : report.folds) acc_a.push_back(1.0 - f.error);
            for (const auto& f : other.folds) acc_b.push_back(1.0 - f.error);
            const auto test = paired_permutation_test(acc_a, acc_b, derive_seed(a.fold_seed, 99), a.permutation_samples);
            ordered_json cmp;
            cmp["model"] = a.compare;
            cmp["accuracy"] = other.accuracy;
            cmp["mean_error"] = *other.mean_error;
            ordered_json folds = ordered_json::array();
            for (const auto& f : other.folds) folds.push_back(f.error);
            cmp["fold_errors"] = std::move(folds);
            ordered_json perm;
            perm["statistic"] = "per-fold accuracy";
            perm["mean_difference"] = test.mean_difference;
            perm["p_value"] = test.p_value;
            perm["permutations"] = test.permutations;
            perm["exact"] = test.exact;
            cmp["permutation_test"] = std::move(perm);
            extra["comparison"] = std::move(cmp);
        }
    } else {
        const auto parts = split_labeled(labeled, a.split, a.model.seed);
        config["split"] = echo(a.split.spec);
        if (parts.test.empty()) throw ValidationError("holdout split has an empty test partition");
        auto classifier = make_classifier(a.model.kind, classifier_config(a.model, version, a.model.seed));
        report = holdout(*classifier, labeled.data.subset(concat(parts.train, parts.validation)),
                         labeled.data.subset(parts.test));
    }

    emit_report(report, {a.model.kind, version, config, extra}, dir / "report.json");
    std::ostringstream metrics;
    write_metrics_csv(metrics, report, a.model.kind);
    write_file(dir / "metrics.csv", metrics.str());
    out << metrics.str();
    return 0;
}

// predict

struct PredictArgs {
    CorpusArgs corpus;
    std::string model;
    bool gate = false;
    std::string out;
};

int cmd_predict(const PredictArgs& a, std::ostream& err) {
    const auto dir = prepare_out_dir(a.out);
    require_file(a.model, "model");
    const auto loaded = load_classifier(a.model);
    const auto& schema = FeatureSchema::by_version(loaded.feature_schema_version);
    const bool column = schema.version() == FeatureSchema::with_reputation().version();
    const auto prepared = prepare(a.corpus, column, a.gate, err);

    const auto probabilities = loaded.classifier->predict_proba(prepared.features);
    auto out = open_output(dir / "predictions.csv");
    std::vector<std::string> header{"user_id", "probability", "label"};
    if (a.gate) {
        header.emplace_back("reputation_rank");
        header.emplace_back("reputation_trusted");
    }
    csv::write_row(out, header);
    for (std::size_t u = 0; u < prepared.corpus.n(); ++u) {
        Label label = probabilities[u] >= 0.5 ? Label::trusted : Label::not_trusted;
        std::vector<std::string> row{prepared.corpus.users()[u].user_id, csv::format_number(probabilities[u])};
        if (a.gate && !prepared.reputation[u].trusted_by_threshold) label = Label::not_trusted;
        row.emplace_back(label_name(label));
        if (a.gate) {
            row.push_back(csv::format_number(prepared.reputation[u].normalized_rank));
            row.emplace_back(prepared.reputation[u].trusted_by_threshold ? "1" : "0");
        }
        csv::write_row(out, row);
    }
    if (!out) throw IoError("error while writing predictions");
    return 0;
}

// rank-features

struct RankArgs {
    CorpusArgs corpus;
    ModelArgs model;
    std::string out;
};

int cmd_rank_features(const RankArgs& a, std::ostream& err) {
    const auto dir = prepare_out_dir(a.out);
    const auto prepared = prepare(a.corpus, a.corpus.reputation == "feature", false, err);
    const auto labeled = join(prepared, a.corpus.labels, err);
    const auto cfg = classifier_config(a.model, prepared.schema->version(), a.model.seed);
    const auto forest = fit_forest(labeled.data, cfg.forest, cfg.seed);
    const auto ranking = feature_importance(forest);
    auto out = open_output(dir / "importance.csv");
    csv::write_row(out, {"rank", "feature", "importance"});
    for (std::size_t i = 0; i < ranking.size(); ++i)
        csv::write_row(out, {std::to_string(i + 1), prepared.schema->features()[ranking[i].feature].name,
                             csv::format_number(ranking[i].importance)});
    if (!out) throw IoError("error while writing importance.csv");
    return 0;
}

void add_out_option(CLI::App* sub, std::string& out) {
    out = default_out_dir();
    sub->add_option("--out", out, std::string("output directory (default: $") + kOutDirEnv + " or .)");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Trustworthiness classification of social-media users", "deeptrust"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SynthArgs synth;
    auto* s = app.add_subcommand("synth", "generate a labeled synthetic corpus");
    s->add_option("--users", synth.config.users, "number of users")->capture_default_str();
    s->add_option("--trusted-fraction", synth.config.trusted_fraction)->capture_default_str();
    s->add_option("--seed", synth.config.seed)->capture_default_str();
    s->add_option("--noise", synth.config.noise, "probability that a signal block ignores the label")
        ->capture_default_str();
    s->add_option("--min-messages", synth.config.min_messages)->capture_default_str();
    s->add_option("--max-messages", synth.config.max_messages)->capture_default_str();
    s->add_option("--zero-follower-fraction", synth.config.zero_follower_fraction)->capture_default_str();
    s->add_option("--topic", synth.config.topic)->capture_default_str();
    add_out_option(s, synth.out);

    CorpusArgs ingest;
    std::string ingest_out;
    auto* ing = app.add_subcommand("ingest", "load, filter and count a corpus");
    add_corpus_options(ing, ingest, false, false);
    add_out_option(ing, ingest_out);

    FeatureArgs features;
    auto* f = app.add_subcommand("features", "extract features; export CSV, CDF and scatter tables");
    add_corpus_options(f, features.corpus, true, true);
    f->add_option("--cdf", features.cdf, "feature to export as per-class CDF (repeatable)");
    f->add_option("--scatter", features.scatter, "features for the scatter matrix")->delimiter(',');
    add_out_option(f, features.out);

    CorpusArgs reputation;
    std::string reputation_out;
    auto* r = app.add_subcommand("reputation", "acquaintance scores, affinity and ranking");
    add_corpus_options(r, reputation, false, false);
    add_out_option(r, reputation_out);

    TrainArgs train;
    auto* t = app.add_subcommand("train", "train DeepTrust or a baseline; writes model.json");
    add_model_options(t, train.model);
    add_corpus_options(t, train.corpus, true, true);
    add_split_options(t, train.split);
    add_out_option(t, train.out);

    EvaluateArgs evaluate;
    auto* e = app.add_subcommand("evaluate", "holdout or K-fold evaluation; writes report.json");
    add_model_options(e, evaluate.model);
    add_corpus_options(e, evaluate.corpus, true, true);
    add_split_options(e, evaluate.split);
    e->add_option("--cv", evaluate.cv, "number of folds, 0 = holdout split")->capture_default_str();
    e->add_option("--fold-seed", evaluate.fold_seed, "default: --seed")->each([&evaluate](const std::string&) {
        evaluate.fold_seed_given = true;
    });
    e->add_option("--compare", evaluate.compare, "second model for a paired permutation test");
    e->add_option("--permutation-samples", evaluate.permutation_samples)->capture_default_str();
    add_out_option(e, evaluate.out);

    PredictArgs predict;
    auto* p = app.add_subcommand("predict", "per-user trust probability from a saved model");
    p->add_option("--model", predict.model, "model.json")->required();
    add_corpus_options(p, predict.corpus, false, false);
    p->add_flag("--reputation-gate", predict.gate, "label users below theta not_trusted");
    add_out_option(p, predict.out);

    RankArgs rank;
    auto* rf = app.add_subcommand("rank-features", "random-forest feature importance");
    rank.model.kind = "random_forest";
    rf->add_option("--seed", rank.model.seed)->capture_default_str();
    rf->add_option("--trees", rank.model.trees)->capture_default_str();
    rf->add_option("--max-depth", rank.model.max_depth)->capture_default_str();
    rf->add_option("--min-samples-split", rank.model.min_samples_split)->capture_default_str();
    rf->add_option("--features-per-split", rank.model.features_per_split)->capture_default_str();
    add_corpus_options(rf, rank.corpus, true, true);
    add_out_option(rf, rank.out);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        const auto subs = app.get_subcommands();
        out << (subs.empty() ? app.help() : subs.front()->help());
        return 0;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return 0;
    } catch (const CLI::ParseError& ex) {
        const auto subs = app.get_subcommands();
        err << "error: " << ex.what() << "\n\n" << (subs.empty() ? app.help() : subs.front()->help());
        return 1;
    }

    try {
        if (s->parsed()) return cmd_synth(synth, err);
        if (ing->parsed()) return cmd_ingest(ingest, ingest_out, out, err);
        if (f->parsed()) return cmd_features(features, err);
        if (r->parsed()) return cmd_reputation(reputation, reputation_out, err);
        if (t->parsed()) return cmd_train(train, err);
        if (e->parsed()) return cmd_evaluate(evaluate, out, err);
        if (p->parsed()) return cmd_predict(predict, err);
        if (rf->parsed()) return cmd_rank_features(rank, err);
    } catch (const IoError& ex) {
        err << "error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return 1;
    }
    return 1;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace deeptrust::cli
