#include "deeptrust/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "deeptrust/csv.hpp"
#include "deeptrust/error.hpp"
#include "deeptrust/text.hpp"

namespace deeptrust {

FeatureSchema::FeatureSchema(std::string version, std::vector<FeatureSpec> features)
    : version_(std::move(version)), features_(std::move(features)) {
    std::set<std::string_view> seen;
    for (const auto& f : features_)
        if (!seen.insert(f.name).second) throw ValidationError("duplicate feature name '" + f.name + "'");
}

namespace {

std::vector<FeatureSpec> standard_specs() {
    using enum Tier;
    return {
        {"mean_char_count", message, "mean characters (code points) per message"},
        {"mean_word_count", message, "mean whitespace-delimited words per message"},
        {"mean_hashtag_count", message, "mean hashtags per message"},
        {"mean_mention_count", message, "mean mentions per message"},
        {"mean_url_count", message, "mean URLs per message"},
        {"mean_emoji_count", message, "mean emoji per message"},
        {"mean_retweet_count", message, "mean times each message was retweeted"},
        {"mean_reply_count", message, "mean replies per message"},
        {"retweet_fraction", message, "fraction of messages that are retweets"},
        {"mean_positive_terms", message, "mean positive lexicon terms per message"},
        {"mean_negative_terms", message, "mean negative lexicon terms per message"},
        {"mean_polarity", message, "mean message polarity"},
        {"follower_count", account, "followers"},
        {"friend_count", account, "accounts followed"},
        {"listed_count", account, "lists containing the account"},
        {"statuses_count", account, "lifetime status count"},
        {"account_age_days", account, "days between account creation and the reference time"},
        {"verified", account, "1 if verified"},
        {"has_profile_image", account, "1 if a profile image is set"},
        {"follower_friend_ratio", account, "followers / friends, 0 when friends is 0"},
        {"hashtag_message_fraction", combined, "fraction of messages with at least one hashtag"},
        {"url_message_fraction", combined, "fraction of messages with at least one URL"},
        {"mention_message_fraction", combined, "fraction of messages with at least one mention"},
        {"profile_sentiment", combined, "(positive - negative messages) / messages"},
        {"duplicate_fraction", combined, "fraction of posts repeating an earlier text, before dedup"},
        {"negative_message_fraction", combined, "fraction of messages with negative polarity"},
        {"messages_per_day", combined, "messages per day over the observed span (at least one day)"},
    };
}

}  // namespace

const FeatureSchema& FeatureSchema::standard() {
    static const FeatureSchema schema("deeptrust-features/1", standard_specs());
    return schema;
}

const FeatureSchema& FeatureSchema::with_reputation() {
    static const FeatureSchema schema = [] {
        auto specs = standard_specs();
        specs.push_back({"reputation_rank", Tier::combined, "min-max normalized acquaintance affinity"});
        return FeatureSchema("deeptrust-features/1+reputation", std::move(specs));
    }();
    return schema;
}

const FeatureSchema& FeatureSchema::by_version(std::string_view version) {
    if (version == standard().version()) return standard();
    if (version == with_reputation().version()) return with_reputation();
    throw ValidationError("unknown feature schema version '" + std::string(version) + "'");
}

std::vector<std::string> FeatureSchema::names() const {
    std::vector<std::string> out;
    out.reserve(features_.size());
    for (const auto& f : features_) out.push_back(f.name);
    return out;
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
    for (std::size_t i = 0; i < features_.size(); ++i)
        if (features_[i].name == name) return i;
    return std::nullopt;
}

std::size_t FeatureSchema::require(std::string_view name) const {
    if (auto i = index_of(name)) return *i;
    std::string valid;
    for (const auto& f : features_) valid += (valid.empty() ? "" : ", ") + f.name;
    throw ValidationError("unknown feature '" + std::string(name) + "'; valid names: " + valid);
}

std::int64_t reference_time(const Corpus& corpus) {
    if (!corpus.messages().empty()) {
        std::int64_t latest = corpus.messages().front().timestamp;
        for (const auto& m : corpus.messages()) latest = std::max(latest, m.timestamp);
        return latest;
    }
    std::int64_t latest = 0;
    for (const auto& u : corpus.users()) latest = std::max(latest, u.account_created);
    return latest;
}

FeatureVector extract_features(const UserRecord& user, std::span<const MessageRecord> messages,
                               const Lexicon& lexicon, const FeatureContext& context) {
    const auto& schema = FeatureSchema::standard();
    FeatureVector fv;
    fv.schema_version = schema.version();
    fv.values.assign(schema.size(), 0.0);
    auto& v = fv.values;

    v[12] = static_cast<double>(user.follower_count);
    v[13] = static_cast<double>(user.friend_count);
    v[14] = static_cast<double>(user.listed_count);
    v[15] = static_cast<double>(user.statuses_count);
    v[16] = std::max(0.0, static_cast<double>(context.reference_time - user.account_created) / 86400.0);
    v[17] = user.verified ? 1.0 : 0.0;
    v[18] = user.has_profile_image ? 1.0 : 0.0;
    v[19] = user.friend_count == 0 ? 0.0
                                   : static_cast<double>(user.follower_count) / static_cast<double>(user.friend_count);

    if (messages.empty()) {
        fv.empty_history = true;
        return fv;
    }

    const auto n = static_cast<double>(messages.size());
    double chars = 0, words = 0, hashtags = 0, mentions = 0, urls = 0, emoji = 0;
    double retweets = 0, replies = 0, is_retweet = 0, positive_terms = 0, negative_terms = 0, polarity = 0;
    double with_hashtag = 0, with_url = 0, with_mention = 0;
    long positive_messages = 0, negative_messages = 0;
    std::size_t duplicates = 0;
    std::unordered_set<std::string> seen;
    std::int64_t first = messages.front().timestamp;
    std::int64_t last = first;

    for (const auto& m : messages) {
        chars += static_cast<double>(text::code_point_count(text::nfc(m.text)));
        words += static_cast<double>(text::split_whitespace(m.text).size());
        hashtags += static_cast<double>(m.hashtags.size());
        mentions += static_cast<double>(m.mentions.size());
        urls += static_cast<double>(m.urls.size());
        emoji += static_cast<double>(text::emoji_count(m.text));
        retweets += static_cast<double>(m.retweet_count);
        replies += static_cast<double>(m.reply_count);
        is_retweet += m.is_retweet ? 1.0 : 0.0;
        const auto s = score_text(lexicon, m.text);
        positive_terms += static_cast<double>(s.positive_count);
        negative_terms += static_cast<double>(s.negative_count);
        polarity += s.polarity;
        if (s.polarity > 0.0) ++positive_messages;
        if (s.polarity < 0.0) ++negative_messages;
        with_hashtag += m.hashtags.empty() ? 0.0 : 1.0;
        with_url += m.urls.empty() ? 0.0 : 1.0;
        with_mention += m.mentions.empty() ? 0.0 : 1.0;
        if (!seen.insert(text::normalize_for_dedup(m.text)).second) ++duplicates;
        first = std::min(first, m.timestamp);
        last = std::max(last, m.timestamp);
    }

    v[0] = chars / n;
    v[1] = words / n;
    v[2] = hashtags / n;
    v[3] = mentions / n;
    v[4] = urls / n;
    v[5] = emoji / n;
    v[6] = retweets / n;
    v[7] = replies / n;
    v[8] = is_retweet / n;
    v[9] = positive_terms / n;
    v[10] = negative_terms / n;
    v[11] = polarity / n;
    v[20] = with_hashtag / n;
    v[21] = with_url / n;
    v[22] = with_mention / n;
    v[23] = static_cast<double>(positive_messages - negative_messages) / n;
    const auto prior = static_cast<double>(context.prior_duplicates);
    v[24] = (static_cast<double>(duplicates) + prior) / (n + prior);
    v[25] = static_cast<double>(negative_messages) / n;
    const double span_days = std::max(1.0, static_cast<double>(last - first) / 86400.0);
    v[26] = n / span_days;
    return fv;
}

Matrix extract_corpus_features(const Corpus& corpus, const Lexicon& lexicon,
                               std::span<const std::size_t> user_indices) {
    std::vector<std::size_t> all;
    if (user_indices.empty()) {
        all.resize(corpus.n());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        user_indices = all;
    }
    const auto k = FeatureSchema::standard().size();
    const std::int64_t now = reference_time(corpus);
    Matrix out(user_indices.size(), k);
    const auto rows = static_cast<std::ptrdiff_t>(user_indices.size());
#pragma omp parallel for schedule(dynamic, 16)
    for (std::ptrdiff_t r = 0; r < rows; ++r) {
        const auto u = user_indices[static_cast<std::size_t>(r)];
        const auto fv = extract_features(corpus.users()[u], corpus.messages_of(u), lexicon,
                                         {now, corpus.duplicates_removed(u)});
        std::copy(fv.values.begin(), fv.values.end(), out.row(static_cast<std::size_t>(r)).begin());
    }
    return out;
}

void write_features_csv(std::ostream& out, const FeatureSchema& schema, const Matrix& vectors,
                        std::span<const Label> labels) {
    if (vectors.cols() != schema.size()) throw ValidationError("feature matrix does not match schema");
    if (labels.size() != vectors.rows()) throw ValidationError("one label per feature row required");
    auto header = schema.names();
    header.push_back("label");
    csv::write_row(out, header);
    for (std::size_t r = 0; r < vectors.rows(); ++r) {
        std::vector<std::string> fields;
        fields.reserve(vectors.cols() + 1);
        for (double x : vectors.row(r)) fields.push_back(csv::format_number(x));
        fields.emplace_back(label_name(labels[r]));
        csv::write_row(out, fields);
    }
}

std::vector<CdfPoint> empirical_cdf(std::span<const double> values) {
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    std::vector<CdfPoint> out;
    const auto n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i + 1 < sorted.size() && sorted[i + 1] == sorted[i]) continue;
        out.push_back({sorted[i], static_cast<double>(i + 1) / n});
    }
    return out;
}

std::string export_cdf(const FeatureSchema& schema, const Matrix& vectors, std::span<const Label> labels,
                       std::string_view feature) {
    const auto column = schema.require(feature);
    if (labels.size() != vectors.rows()) throw ValidationError("one label per feature row required");
    std::ostringstream out;
    csv::write_row(out, {"class", "value", "cumulative_fraction"});
    for (Label cls : {Label::trusted, Label::not_trusted}) {
        std::vector<double> values;
        for (std::size_t r = 0; r < vectors.rows(); ++r)
            if (labels[r] == cls) values.push_back(vectors(r, column));
        for (const auto& p : empirical_cdf(values))
            csv::write_row(out, {std::string(label_name(cls)), csv::format_number(p.value),
                                 csv::format_number(p.cumulative_fraction)});
    }
    return out.str();
}

std::string export_scatter_matrix(const FeatureSchema& schema, const Matrix& vectors,
                                  std::span<const Label> labels, std::span<const std::string> feature_names) {
    if (feature_names.size() < 2) throw ValidationError("scatter matrix needs at least 2 features");
    if (labels.size() != vectors.rows()) throw ValidationError("one label per feature row required");
    std::vector<std::size_t> columns;
    std::set<std::string_view> seen;
    for (const auto& name : feature_names) {
        if (!seen.insert(name).second) throw ValidationError("feature '" + name + "' requested twice");
        columns.push_back(schema.require(name));
    }
    std::ostringstream out;
    std::vector<std::string> header(feature_names.begin(), feature_names.end());
    header.push_back("label");
    header.push_back("color");
    csv::write_row(out, header);
    for (std::size_t r = 0; r < vectors.rows(); ++r) {
        std::vector<std::string> fields;
        for (auto c : columns) fields.push_back(csv::format_number(vectors(r, c)));
        fields.emplace_back(label_name(labels[r]));
        fields.emplace_back(labels[r] == Label::trusted ? "#1f77b4" : "#d62728");
        csv::write_row(out, fields);
    }
    return out.str();
}

}  // namespace deeptrust
