#include "deeptrust/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

#include "deeptrust/csv.hpp"
#include "deeptrust/error.hpp"
#include "deeptrust/rng.hpp"

namespace deeptrust {

using nlohmann::ordered_json;

FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed) {
    if (k < 2) throw ValidationError("cross-validation needs K >= 2");
    if (n < k)
        throw ValidationError("n < K: cannot split " + std::to_string(n) + " samples into " + std::to_string(k) +
                              " folds");
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
    FoldPlan plan{n, k, seed, std::vector<std::vector<std::size_t>>(k)};
    for (std::size_t p = 0; p < n; ++p) plan.folds[p % k].push_back(order[p]);
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

double accuracy(const Confusion& c) {
    if (c.total() == 0) return 0.0;
    return static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
}

double kappa(const Confusion& c) {
    const double n = static_cast<double>(c.total());
    if (n == 0.0) return 0.0;
    const double p0 = static_cast<double>(c.tp + c.tn) / n;
    const double actual_pos = static_cast<double>(c.tp + c.fn);
    const double pred_pos = static_cast<double>(c.tp + c.fp);
    const double actual_neg = static_cast<double>(c.fp + c.tn);
    const double pred_neg = static_cast<double>(c.fn + c.tn);
    const double pe = (actual_pos * pred_pos + actual_neg * pred_neg) / (n * n);
    if (pe >= 1.0) return 1.0;
    return (p0 - pe) / (1.0 - pe);
}

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> targets) {
    if (scores.size() != targets.size()) throw ValidationError("roc_auc: scores and targets differ in length");
    const auto positives = static_cast<double>(std::count(targets.begin(), targets.end(), 1));
    const auto negatives = static_cast<double>(targets.size()) - positives;
    if (positives == 0.0 || negatives == 0.0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    double tp = 0.0, fp = 0.0, area = 0.0;
    for (std::size_t i = 0; i < order.size();) {
        const double threshold = scores[order[i]];
        double dtp = 0.0, dfp = 0.0;
        for (; i < order.size() && scores[order[i]] == threshold; ++i) (targets[order[i]] == 1 ? dtp : dfp) += 1.0;
        area += dfp * (tp + tp + dtp) / 2.0;
        tp += dtp;
        fp += dfp;
    }
    return area / (positives * negatives);
}

void MetricAccumulator::add(double probability, int target, double reference_mean) {
    if (!(probability >= 0.0 && probability <= 1.0)) throw ValidationError("probabilities must lie in [0, 1]");
    if (target != 0 && target != 1) throw ValidationError("targets must be 0 or 1");
    probabilities_.push_back(probability);
    targets_.push_back(target);
    reference_means_.push_back(reference_mean);
}

EvalReport MetricAccumulator::finish(double threshold) const {
    if (probabilities_.empty()) throw ValidationError("no predictions to evaluate");
    EvalReport r;
    double abs_err = 0.0, sq_err = 0.0, abs_ref = 0.0, sq_ref = 0.0;
    for (std::size_t i = 0; i < probabilities_.size(); ++i) {
        const double q = probabilities_[i];
        const double t = targets_[i];
        const int predicted = q >= threshold ? 1 : 0;
        // Positive class is not_trusted (0).
        if (predicted == 0 && targets_[i] == 0) ++r.confusion.tp;
        if (predicted == 0 && targets_[i] == 1) ++r.confusion.fp;
        if (predicted == 1 && targets_[i] == 1) ++r.confusion.tn;
        if (predicted == 1 && targets_[i] == 0) ++r.confusion.fn;
        abs_err += std::abs(q - t);
        sq_err += (q - t) * (q - t);
        abs_ref += std::abs(reference_means_[i] - t);
        sq_ref += (reference_means_[i] - t) * (reference_means_[i] - t);
    }
    const double n = static_cast<double>(probabilities_.size());
    r.accuracy = deeptrust::accuracy(r.confusion);
    r.kappa = deeptrust::kappa(r.confusion);
    r.mae = abs_err / n;
    r.rmse = std::sqrt(sq_err / n);
    if (abs_ref > 0.0) r.rae = abs_err / abs_ref;
    if (sq_ref > 0.0) r.rrse = std::sqrt(sq_err / sq_ref);
    const auto& c = r.confusion;
    r.precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
    r.recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
    r.f1 = r.precision + r.recall > 0.0 ? 2.0 * r.precision * r.recall / (r.precision + r.recall) : 0.0;
    r.roc_auc = roc_auc(probabilities_, targets_);
    return r;
}

EvalReport compute_metrics(std::span<const double> probabilities, std::span<const int> targets,
                           double train_target_mean) {
    if (probabilities.size() != targets.size() || probabilities.empty())
        throw ValidationError("compute_metrics needs equally many (>= 1) probabilities and targets");
    MetricAccumulator acc;
    for (std::size_t i = 0; i < probabilities.size(); ++i) acc.add(probabilities[i], targets[i], train_target_mean);
    return acc.finish();
}

namespace {

double mean_target(const Dataset& d) {
    if (d.size() == 0) return 0.0;
    return static_cast<double>(std::accumulate(d.y.begin(), d.y.end(), 0)) / static_cast<double>(d.size());
}

}  // namespace

EvalReport cross_validate(const ClassifierFactory& factory, const Dataset& data, const FoldPlan& plan) {
    if (plan.n != data.size() || plan.folds.size() != plan.k)
        throw ValidationError("fold plan covers " + std::to_string(plan.n) + " samples, dataset has " +
                              std::to_string(data.size()));
    MetricAccumulator pooled;
    std::vector<FoldResult> folds;
    std::vector<char> in_test(data.size());
    for (std::size_t i = 0; i < plan.k; ++i) {
        std::fill(in_test.begin(), in_test.end(), 0);
        for (auto idx : plan.folds[i]) in_test[idx] = 1;
        std::vector<std::size_t> train_rows;
        for (std::size_t r = 0; r < data.size(); ++r)
            if (!in_test[r]) train_rows.push_back(r);
        const Dataset train = data.subset(train_rows);
        const Dataset test = data.subset(plan.folds[i]);

        std::vector<double> probabilities;
        try {
            auto classifier = factory(i);
            classifier->fit(train);
            probabilities = classifier->predict_proba(test.x);
        } catch (const std::exception& e) {
            throw TrainingError("fold " + std::to_string(i + 1) + " of " + std::to_string(plan.k) + ": " + e.what());
        }
        const double tbar = mean_target(train);
        std::size_t wrong = 0;
        for (std::size_t r = 0; r < test.size(); ++r) {
            pooled.add(probabilities[r], test.y[r], tbar);
            if ((probabilities[r] >= 0.5 ? 1 : 0) != test.y[r]) ++wrong;
        }
        folds.push_back({i + 1, test.size(), static_cast<double>(wrong) / static_cast<double>(test.size())});
    }
    EvalReport report = pooled.finish();
    double sum = 0.0;
    for (const auto& f : folds) sum += f.error;
    report.mean_error = sum / static_cast<double>(folds.size());
    report.folds = std::move(folds);
    report.k = plan.k;
    report.fold_seed = plan.seed;
    return report;
}

EvalReport holdout(Classifier& classifier, const Dataset& train, const Dataset& test) {
    classifier.fit(train);
    return compute_metrics(classifier.predict_proba(test.x), test.y, mean_target(train));
}

PermutationTest paired_permutation_test(std::span<const double> a, std::span<const double> b, std::uint64_t seed,
                                        std::size_t samples) {
    if (a.size() != b.size() || a.empty()) throw ValidationError("permutation test needs paired, non-empty scores");
    std::vector<double> d(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
    const double n = static_cast<double>(d.size());
    const double observed = std::accumulate(d.begin(), d.end(), 0.0) / n;
    const double tolerance = 1e-12;

    auto at_least_as_extreme = [&](auto sign_of) {
        double s = 0.0;
        for (std::size_t i = 0; i < d.size(); ++i) s += sign_of(i) ? -d[i] : d[i];
        return std::abs(s / n) >= std::abs(observed) - tolerance;
    };

    PermutationTest result;
    result.mean_difference = observed;
    std::size_t extreme = 0;
    if (d.size() <= 16) {
        const std::uint64_t patterns = std::uint64_t{1} << d.size();
        for (std::uint64_t mask = 0; mask < patterns; ++mask)
            extreme += at_least_as_extreme([&](std::size_t i) { return (mask >> i) & 1U; });
        result.permutations = patterns;
        result.exact = true;
        result.p_value = static_cast<double>(extreme) / static_cast<double>(patterns);
    } else {
        Rng rng(seed);
        std::vector<char> flips(d.size());
        for (std::size_t s = 0; s < samples; ++s) {
            for (auto& f : flips) f = static_cast<char>(rng.bernoulli(0.5));
            extreme += at_least_as_extreme([&](std::size_t i) { return flips[i] != 0; });
        }
        result.permutations = samples;
        result.p_value = (static_cast<double>(extreme) + 1.0) / (static_cast<double>(samples) + 1.0);
    }
    return result;
}

ModelSelection select_model(std::span<const ClassifierFactory> candidates, const Dataset& data, const FoldPlan& plan) {
    if (candidates.empty()) throw ValidationError("model selection needs at least one candidate");
    ModelSelection out;
    for (const auto& factory : candidates) {
        out.reports.push_back(cross_validate(factory, data, plan));
        out.mean_errors.push_back(*out.reports.back().mean_error);
    }
    out.best = static_cast<std::size_t>(std::min_element(out.mean_errors.begin(), out.mean_errors.end()) -
                                        out.mean_errors.begin());
    return out;
}

namespace {

ordered_json optional_number(const std::optional<double>& v) { return v ? ordered_json(*v) : ordered_json(nullptr); }

}  // namespace

ordered_json report_to_json(const EvalReport& r, const ReportContext& context) {
    ordered_json j;
    j["schema_version"] = kReportSchemaVersion;
    j["tool"] = "deeptrust";
    j["tool_version"] = kToolVersion;
    j["model"] = context.model;
    j["feature_schema_version"] = context.feature_schema_version;
    j["model_schema_version"] = nn::kModelSchemaVersion;
    j["config"] = context.config;
    j["evaluated"] = r.confusion.total();
    j["positive_class"] = "not_trusted";
    ordered_json confusion;
    confusion["tp"] = r.confusion.tp;
    confusion["fp"] = r.confusion.fp;
    confusion["tn"] = r.confusion.tn;
    confusion["fn"] = r.confusion.fn;
    j["confusion"] = std::move(confusion);
    ordered_json m;
    m["accuracy"] = r.accuracy;
    m["incorrectly_classified"] = 1.0 - r.accuracy;
    m["kappa"] = r.kappa;
    m["mean_absolute_error"] = r.mae;
    m["root_mean_squared_error"] = r.rmse;
    m["relative_absolute_error"] = optional_number(r.rae);
    m["root_relative_squared_error"] = optional_number(r.rrse);
    m["precision"] = r.precision;
    m["recall"] = r.recall;
    m["f1"] = r.f1;
    m["roc_auc"] = optional_number(r.roc_auc);
    j["metrics"] = std::move(m);
    if (!r.folds.empty()) {
        ordered_json cv;
        cv["k"] = r.k;
        cv["seed"] = r.fold_seed;
        cv["mean_error"] = optional_number(r.mean_error);
        ordered_json folds = ordered_json::array();
        for (const auto& f : r.folds) {
            ordered_json fj;
            fj["fold"] = f.fold;
            fj["size"] = f.size;
            fj["error"] = f.error;
            folds.push_back(std::move(fj));
        }
        cv["folds"] = std::move(folds);
        j["cross_validation"] = std::move(cv);
    }
    for (auto& [key, value] : context.extra.items()) j[key] = value;
    return j;
}

void emit_report(const EvalReport& report, const ReportContext& context, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << report_to_json(report, context).dump(2) << '\n';
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

void write_metrics_csv(std::ostream& out, const EvalReport& r, const std::string& model) {
    auto opt = [](const std::optional<double>& v) { return v ? csv::format_number(*v) : std::string(); };
    csv::write_row(out, {"model", "evaluated", "accuracy", "kappa", "mae", "rmse", "rae", "rrse", "precision",
                         "recall", "f1", "roc_auc", "mean_error"});
    csv::write_row(out, {model, std::to_string(r.confusion.total()), csv::format_number(r.accuracy),
                         csv::format_number(r.kappa), csv::format_number(r.mae), csv::format_number(r.rmse),
                         opt(r.rae), opt(r.rrse), csv::format_number(r.precision), csv::format_number(r.recall),
                         csv::format_number(r.f1), opt(r.roc_auc), opt(r.mean_error)});
}

}  // namespace deeptrust
