#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace deeptrust {

struct MessageRecord {
    std::string message_id;
    std::string author_id;
    std::string text;
    std::int64_t timestamp = 0;
    std::uint64_t retweet_count = 0;
    std::uint64_t reply_count = 0;
    bool is_retweet = false;
    std::vector<std::string> hashtags;
    std::vector<std::string> mentions;
    std::vector<std::string> urls;

    bool operator==(const MessageRecord&) const = default;
};

struct UserRecord {
    std::string user_id;
    std::uint64_t follower_count = 0;
    std::uint64_t friend_count = 0;
    std::uint64_t listed_count = 0;
    std::uint64_t statuses_count = 0;
    std::int64_t account_created = 0;
    bool verified = false;
    bool has_profile_image = false;
    std::uint64_t replied_by_others = 0;
    std::uint64_t mentioned_by_others = 0;
    std::uint64_t retweeted_by_others = 0;

    bool operator==(const UserRecord&) const = default;
};

/// Users plus their messages, grouped contiguously by author in user order.
/// Immutable once built; every message's author is a known user.
class Corpus {
public:
    Corpus() = default;
    /// Throws ValidationError on duplicate user/message ids or unknown authors.
    Corpus(std::vector<UserRecord> users, std::vector<MessageRecord> messages, std::string topic = {});
    /// `duplicates_removed[i]` carries the number of duplicate posts already
    /// dropped from user i by an earlier filtering pass.
    Corpus(std::vector<UserRecord> users, std::vector<MessageRecord> messages, std::string topic,
           std::vector<std::size_t> duplicates_removed);

    const std::vector<UserRecord>& users() const { return users_; }
    const std::vector<MessageRecord>& messages() const { return messages_; }
    std::span<const MessageRecord> messages_of(std::size_t user_index) const;
    std::size_t duplicates_removed(std::size_t user_index) const { return duplicates_removed_.at(user_index); }
    std::optional<std::size_t> find_user(std::string_view user_id) const;

    /// Number of users; the population denominator of the acquaintance score.
    std::size_t n() const { return users_.size(); }
    const std::string& topic() const { return topic_; }

    bool operator==(const Corpus& other) const {
        return users_ == other.users_ && messages_ == other.messages_ && topic_ == other.topic_ &&
               duplicates_removed_ == other.duplicates_removed_;
    }

private:
    std::vector<UserRecord> users_;
    std::vector<MessageRecord> messages_;
    std::vector<std::size_t> offsets_{0};
    std::vector<std::size_t> duplicates_removed_;
    std::unordered_map<std::string, std::size_t> index_;
    std::string topic_;
};

struct LoadOptions {
    bool strict = false;              // malformed lines and orphans become errors
    bool compute_aggregates = false;  // derive RPLoth/MENoth/RTWcnt from the message set
    std::string topic;
};

struct LoadStats {
    std::size_t users_read = 0;
    std::size_t messages_read = 0;
    std::size_t orphan_messages = 0;
    std::size_t malformed_lines = 0;
    std::size_t duplicate_records = 0;
};

struct LoadResult {
    Corpus corpus;
    LoadStats stats;
};

LoadResult load_corpus(const std::filesystem::path& users_path, const std::filesystem::path& messages_path,
                       const LoadOptions& options = {});
void save_corpus(const Corpus& corpus, const std::filesystem::path& users_path,
                 const std::filesystem::path& messages_path);

/// Parse a single JSONL record. Throws FormatError describing the problem.
UserRecord parse_user(std::string_view json_line);
MessageRecord parse_message(std::string_view json_line);
std::string serialize_user(const UserRecord& user);
std::string serialize_message(const MessageRecord& message);

/// Replaces replied/mentioned/retweeted-by-others with totals computed from
/// the messages: reply counts, mentions by other authors, retweet counts.
Corpus with_computed_aggregates(const Corpus& corpus);

struct FilterStats {
    std::size_t zero_follower_users = 0;
    std::size_t messages_of_removed_users = 0;
    std::size_t duplicate_messages = 0;
    std::size_t truncated_messages = 0;
};

/// Drops zero-follower users, per-author duplicate texts (earliest kept), and
/// all but the `per_user_cap` most recent messages per author. Messages come
/// out newest first. Idempotent.
Corpus filter_corpus(const Corpus& corpus, std::size_t per_user_cap, FilterStats* stats = nullptr);

inline constexpr std::size_t kDefaultPerUserCap = 3200;

enum class Label { not_trusted = 0, trusted = 1 };

std::string_view label_name(Label label);
Label parse_label(std::string_view name);
inline int label_target(Label label) { return label == Label::trusted ? 1 : 0; }

using LabelSet = std::map<std::string, Label>;

LabelSet load_labels(const std::filesystem::path& path);
void save_labels(const LabelSet& labels, const std::filesystem::path& path);

struct LabeledUser {
    std::size_t user_index = 0;
    Label label = Label::not_trusted;

    bool operator==(const LabeledUser&) const = default;
};

struct JoinResult {
    std::vector<LabeledUser> pairs;  // corpus order
    std::size_t unlabeled = 0;
    std::size_t dangling = 0;
};

JoinResult join_labels(const Corpus& corpus, const LabelSet& labels);

struct SplitSpec {
    double train_fraction = 0.8;
    double validation_fraction = 0.1;
    double test_fraction = 0.1;
    std::uint64_t seed = 0;
    bool stratify = false;

    void validate() const;
};

template <typename T>
struct Splits {
    std::vector<T> train;
    std::vector<T> validation;
    std::vector<T> test;
};

/// Index partitions over [0, n). `strata` (optional, size n) splits each
/// stratum separately when spec.stratify is set.
Splits<std::size_t> split_indices(std::size_t n, const SplitSpec& spec, std::span<const int> strata = {});

Splits<LabeledUser> split_dataset(std::span<const LabeledUser> pairs, const SplitSpec& spec);

}  // namespace deeptrust
