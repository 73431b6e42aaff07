#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "deeptrust/data.hpp"
#include "deeptrust/matrix.hpp"
#include "deeptrust/sentiment.hpp"

namespace deeptrust {

enum class Tier { message, account, combined };

struct FeatureSpec {
    std::string name;
    Tier tier;
    std::string description;
};

/// Ordered, versioned list of feature names. Order never changes within a version.
class FeatureSchema {
public:
    FeatureSchema(std::string version, std::vector<FeatureSpec> features);

    /// Message, account, and combined tiers (27 features).
    static const FeatureSchema& standard();
    /// `standard()` plus a trailing reputation_rank column.
    static const FeatureSchema& with_reputation();
    /// Looks up a schema by version string; throws ValidationError if unknown.
    static const FeatureSchema& by_version(std::string_view version);

    const std::string& version() const { return version_; }
    std::size_t size() const { return features_.size(); }
    const std::vector<FeatureSpec>& features() const { return features_; }
    std::vector<std::string> names() const;
    std::optional<std::size_t> index_of(std::string_view name) const;
    /// Like index_of, but throws ValidationError listing the valid names.
    std::size_t require(std::string_view name) const;

private:
    std::string version_;
    std::vector<FeatureSpec> features_;
};

struct FeatureVector {
    std::vector<double> values;
    std::string schema_version;
    bool empty_history = false;  // message and combined tiers are all zero
};

struct FeatureContext {
    std::int64_t reference_time = 0;    // "now" for account age
    std::size_t prior_duplicates = 0;   // duplicate posts removed before extraction
};

/// Latest message timestamp in the corpus, or latest account creation time if
/// there are no messages.
std::int64_t reference_time(const Corpus& corpus);

FeatureVector extract_features(const UserRecord& user, std::span<const MessageRecord> messages,
                               const Lexicon& lexicon, const FeatureContext& context);

/// Standard-schema features for the given users (all users when empty), one row each.
/// Rows are extracted in parallel; output is independent of thread count.
Matrix extract_corpus_features(const Corpus& corpus, const Lexicon& lexicon,
                               std::span<const std::size_t> user_indices = {});

/// Header = schema names + `label`; RFC-4180 quoting.
void write_features_csv(std::ostream& out, const FeatureSchema& schema, const Matrix& vectors,
                        std::span<const Label> labels);

struct CdfPoint {
    double value;
    double cumulative_fraction;
};

/// Empirical CDF over distinct values; the last fraction is exactly 1.
std::vector<CdfPoint> empirical_cdf(std::span<const double> values);

/// `class,value,cumulative_fraction` rows, trusted class first.
std::string export_cdf(const FeatureSchema& schema, const Matrix& vectors, std::span<const Label> labels,
                       std::string_view feature);

/// One row per user: requested features in request order, then label and a plot color.
std::string export_scatter_matrix(const FeatureSchema& schema, const Matrix& vectors,
                                  std::span<const Label> labels, std::span<const std::string> feature_names);

}  // namespace deeptrust
