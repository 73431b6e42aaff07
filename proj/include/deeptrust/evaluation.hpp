#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "deeptrust/classifier.hpp"
#include "deeptrust/dataset.hpp"

namespace deeptrust {

inline constexpr std::size_t kDefaultFolds = 10;

struct FoldPlan {
    std::size_t n = 0;
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<std::size_t>> folds;  // each sorted ascending
};

/// Seeded shuffle, then round-robin assignment. Requires 2 <= k <= n.
FoldPlan make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

/// Positive class is not_trusted (target 0).
struct Confusion {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    bool operator==(const Confusion&) const = default;
};

double accuracy(const Confusion& c);
/// Cohen's kappa (p0 - pe) / (1 - pe). When pe = 1 the matrix is diagonal and 1 is returned.
double kappa(const Confusion& c);

struct FoldResult {
    std::size_t fold = 0;
    std::size_t size = 0;
    double error = 0.0;  // misclassification rate
};

struct EvalReport {
    Confusion confusion;
    double accuracy = 0.0;
    double kappa = 0.0;
    double mae = 0.0;
    double rmse = 0.0;
    std::optional<double> rae;   // undefined when every target equals the reference mean
    std::optional<double> rrse;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::optional<double> roc_auc;  // undefined when only one class is present
    std::vector<FoldResult> folds;  // empty for a plain holdout
    std::optional<double> mean_error;
    std::size_t k = 0;
    std::uint64_t fold_seed = 0;
};

/// Collects (probability of trusted, target, training-target mean) triples,
/// possibly from several folds, and reduces them to the metric set.
class MetricAccumulator {
public:
    void add(double probability, int target, double reference_mean);
    EvalReport finish(double threshold = 0.5) const;
    std::size_t size() const { return probabilities_.size(); }

private:
    std::vector<double> probabilities_;
    std::vector<int> targets_;
    std::vector<double> reference_means_;
};

/// Metrics for one prediction set against a single training-target mean.
EvalReport compute_metrics(std::span<const double> probabilities, std::span<const int> targets,
                           double train_target_mean);

/// Area under the ROC curve of `scores` for detecting class 1, by the
/// trapezoidal rule over every distinct threshold.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> targets);

/// Builds a fresh, unfitted classifier for the given fold.
using ClassifierFactory = std::function<std::unique_ptr<Classifier>(std::size_t fold)>;

/// Fold i is the test set of cycle i and everything else its training set.
/// Confusion and headline metrics are pooled over all folds.
EvalReport cross_validate(const ClassifierFactory& factory, const Dataset& data, const FoldPlan& plan);

/// Fits on `train`, evaluates on `test`.
EvalReport holdout(Classifier& classifier, const Dataset& train, const Dataset& test);

struct PermutationTest {
    double mean_difference = 0.0;  // mean of (a - b)
    double p_value = 1.0;          // two-sided
    std::size_t permutations = 0;
    bool exact = false;
};

/// Paired sign-flip permutation test on per-fold scores. Enumerates all 2^K
/// sign patterns when K <= 16, otherwise draws `samples` random patterns.
PermutationTest paired_permutation_test(std::span<const double> a, std::span<const double> b, std::uint64_t seed,
                                        std::size_t samples = 10000);

struct ModelSelection {
    std::size_t best = 0;
    std::vector<double> mean_errors;
    std::vector<EvalReport> reports;
};

/// Cross-validates every candidate on the same plan; picks the lowest mean error
/// (first candidate on ties).
ModelSelection select_model(std::span<const ClassifierFactory> candidates, const Dataset& data, const FoldPlan& plan);

inline constexpr const char* kReportSchemaVersion = "deeptrust-report/1";
inline constexpr const char* kToolVersion = "1.0.0";

struct ReportContext {
    std::string model;
    std::string feature_schema_version;
    nlohmann::ordered_json config = nlohmann::ordered_json::object();
    nlohmann::ordered_json extra = nlohmann::ordered_json::object();  // merged last
};

nlohmann::ordered_json report_to_json(const EvalReport& report, const ReportContext& context);
void emit_report(const EvalReport& report, const ReportContext& context, const std::filesystem::path& path);
void write_metrics_csv(std::ostream& out, const EvalReport& report, const std::string& model);

}  // namespace deeptrust
