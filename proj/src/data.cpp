#include "deeptrust/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "deeptrust/csv.hpp"
#include "deeptrust/error.hpp"
#include "deeptrust/rng.hpp"
#include "deeptrust/text.hpp"

namespace deeptrust {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

Corpus::Corpus(std::vector<UserRecord> users, std::vector<MessageRecord> messages, std::string topic)
    : Corpus(std::move(users), std::move(messages), std::move(topic), {}) {}

Corpus::Corpus(std::vector<UserRecord> users, std::vector<MessageRecord> messages, std::string topic,
               std::vector<std::size_t> duplicates_removed)
    : users_(std::move(users)), topic_(std::move(topic)) {
    index_.reserve(users_.size());
    for (std::size_t i = 0; i < users_.size(); ++i) {
        if (!index_.emplace(users_[i].user_id, i).second)
            throw ValidationError("duplicate user_id '" + users_[i].user_id + "'");
    }
    if (duplicates_removed.empty()) duplicates_removed.assign(users_.size(), 0);
    if (duplicates_removed.size() != users_.size())
        throw ValidationError("duplicate counts do not match user count");
    duplicates_removed_ = std::move(duplicates_removed);

    std::vector<std::size_t> author(messages.size());
    std::vector<std::size_t> counts(users_.size(), 0);
    std::unordered_set<std::string_view> ids;
    for (std::size_t m = 0; m < messages.size(); ++m) {
        auto it = index_.find(messages[m].author_id);
        if (it == index_.end())
            throw ValidationError("message '" + messages[m].message_id + "' has unknown author '" +
                                  messages[m].author_id + "'");
        if (!ids.insert(messages[m].message_id).second)
            throw ValidationError("duplicate message_id '" + messages[m].message_id + "'");
        author[m] = it->second;
        ++counts[it->second];
    }
    offsets_.assign(users_.size() + 1, 0);
    for (std::size_t i = 0; i < users_.size(); ++i) offsets_[i + 1] = offsets_[i] + counts[i];
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    messages_.resize(messages.size());
    for (std::size_t m = 0; m < messages.size(); ++m) messages_[cursor[author[m]]++] = std::move(messages[m]);
}

std::span<const MessageRecord> Corpus::messages_of(std::size_t user_index) const {
    if (user_index >= users_.size()) throw ValidationError("user index out of range");
    return std::span<const MessageRecord>(messages_).subspan(offsets_[user_index],
                                                            offsets_[user_index + 1] - offsets_[user_index]);
}

std::optional<std::size_t> Corpus::find_user(std::string_view user_id) const {
    auto it = index_.find(std::string(user_id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

namespace {

template <typename T>
T get_or(const json& obj, const char* key, T fallback) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return fallback;
    return it->get<T>();
}

std::uint64_t get_count(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || it->is_null()) return 0;
    if (!it->is_number_integer()) throw FormatError(std::string("'") + key + "' must be an integer");
    if (it->is_number_unsigned()) return it->get<std::uint64_t>();
    const auto v = it->get<std::int64_t>();
    if (v < 0) throw FormatError(std::string("'") + key + "' must be non-negative");
    return static_cast<std::uint64_t>(v);
}

std::string get_required_string(const json& obj, const char* key) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) throw FormatError(std::string("missing string field '") + key + "'");
    auto s = it->get<std::string>();
    if (s.empty()) throw FormatError(std::string("field '") + key + "' is empty");
    return s;
}

json parse_object(std::string_view line) {
    json obj;
    try {
        obj = json::parse(line);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) throw FormatError("record is not a JSON object");
    return obj;
}

template <typename F>
void for_each_line(const std::filesystem::path& path, F&& f) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        f(line, number);
    }
    if (in.bad()) throw IoError("error while reading '" + path.string() + "'");
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    return out;
}

void check_written(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

}  // namespace

UserRecord parse_user(std::string_view line) {
    const json obj = parse_object(line);
    try {
        UserRecord u;
        u.user_id = get_required_string(obj, "user_id");
        u.follower_count = get_count(obj, "follower_count");
        u.friend_count = get_count(obj, "friend_count");
        u.listed_count = get_count(obj, "listed_count");
        u.statuses_count = get_count(obj, "statuses_count");
        u.account_created = get_or<std::int64_t>(obj, "account_created", 0);
        u.verified = get_or<bool>(obj, "verified", false);
        u.has_profile_image = get_or<bool>(obj, "has_profile_image", false);
        u.replied_by_others = get_count(obj, "replied_by_others");
        u.mentioned_by_others = get_count(obj, "mentioned_by_others");
        u.retweeted_by_others = get_count(obj, "retweeted_by_others");
        return u;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad field type: ") + e.what());
    }
}

MessageRecord parse_message(std::string_view line) {
    const json obj = parse_object(line);
    try {
        MessageRecord m;
        m.message_id = get_required_string(obj, "message_id");
        m.author_id = get_required_string(obj, "author_id");
        auto text = obj.find("text");
        if (text == obj.end() || !text->is_string()) throw FormatError("missing string field 'text'");
        m.text = text->get<std::string>();
        m.timestamp = get_or<std::int64_t>(obj, "timestamp", 0);
        m.retweet_count = get_count(obj, "retweet_count");
        m.reply_count = get_count(obj, "reply_count");
        m.is_retweet = get_or<bool>(obj, "is_retweet", false);
        auto list_or_extract = [&](const char* key, auto extract) {
            auto it = obj.find(key);
            if (it == obj.end() || it->is_null()) return extract(m.text);
            return it->get<std::vector<std::string>>();
        };
        m.hashtags = list_or_extract("hashtags", text::extract_hashtags);
        m.mentions = list_or_extract("mentions", text::extract_mentions);
        m.urls = list_or_extract("urls", text::extract_urls);
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad field type: ") + e.what());
    }
}

std::string serialize_user(const UserRecord& u) {
    ordered_json j;
    j["user_id"] = u.user_id;
    j["follower_count"] = u.follower_count;
    j["friend_count"] = u.friend_count;
    j["listed_count"] = u.listed_count;
    j["statuses_count"] = u.statuses_count;
    j["account_created"] = u.account_created;
    j["verified"] = u.verified;
    j["has_profile_image"] = u.has_profile_image;
    j["replied_by_others"] = u.replied_by_others;
    j["mentioned_by_others"] = u.mentioned_by_others;
    j["retweeted_by_others"] = u.retweeted_by_others;
    return j.dump();
}

std::string serialize_message(const MessageRecord& m) {
    ordered_json j;
    j["message_id"] = m.message_id;
    j["author_id"] = m.author_id;
    j["text"] = m.text;
    j["timestamp"] = m.timestamp;
    j["retweet_count"] = m.retweet_count;
    j["reply_count"] = m.reply_count;
    j["is_retweet"] = m.is_retweet;
    j["hashtags"] = m.hashtags;
    j["mentions"] = m.mentions;
    j["urls"] = m.urls;
    return j.dump();
}

LoadResult load_corpus(const std::filesystem::path& users_path, const std::filesystem::path& messages_path,
                       const LoadOptions& options) {
    LoadStats stats;
    std::vector<UserRecord> users;
    std::unordered_set<std::string> user_ids;

    auto malformed = [&](const std::filesystem::path& path, std::size_t line, const std::string& what) {
        if (options.strict)
            throw FormatError(path.string() + ":" + std::to_string(line) + ": " + what);
        ++stats.malformed_lines;
    };

    for_each_line(users_path, [&](const std::string& line, std::size_t number) {
        UserRecord u;
        try {
            u = parse_user(line);
        } catch (const FormatError& e) {
            malformed(users_path, number, e.what());
            return;
        }
        if (!user_ids.insert(u.user_id).second) {
            if (options.strict)
                throw FormatError(users_path.string() + ":" + std::to_string(number) + ": duplicate user_id '" +
                                  u.user_id + "'");
            ++stats.duplicate_records;
            return;
        }
        users.push_back(std::move(u));
        ++stats.users_read;
    });

    std::vector<MessageRecord> messages;
    std::unordered_set<std::string> message_ids;
    for_each_line(messages_path, [&](const std::string& line, std::size_t number) {
        MessageRecord m;
        try {
            m = parse_message(line);
        } catch (const FormatError& e) {
            malformed(messages_path, number, e.what());
            return;
        }
        if (!user_ids.contains(m.author_id)) {
            if (options.strict)
                throw ValidationError(messages_path.string() + ":" + std::to_string(number) +
                                      ": unknown author '" + m.author_id + "'");
            ++stats.orphan_messages;
            return;
        }
        if (!message_ids.insert(m.message_id).second) {
            if (options.strict)
                throw FormatError(messages_path.string() + ":" + std::to_string(number) +
                                  ": duplicate message_id '" + m.message_id + "'");
            ++stats.duplicate_records;
            return;
        }
        ++stats.messages_read;
        messages.push_back(std::move(m));
    });

    Corpus corpus(std::move(users), std::move(messages), options.topic);
    if (options.compute_aggregates) corpus = with_computed_aggregates(corpus);
    return {std::move(corpus), stats};
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& users_path,
                 const std::filesystem::path& messages_path) {
    auto users_out = open_for_write(users_path);
    for (const auto& u : corpus.users()) users_out << serialize_user(u) << '\n';
    check_written(users_out, users_path);
    auto messages_out = open_for_write(messages_path);
    for (const auto& m : corpus.messages()) messages_out << serialize_message(m) << '\n';
    check_written(messages_out, messages_path);
}

Corpus with_computed_aggregates(const Corpus& corpus) {
    std::vector<UserRecord> users = corpus.users();
    std::vector<std::size_t> dups(users.size());
    for (auto& u : users) u.replied_by_others = u.mentioned_by_others = u.retweeted_by_others = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
        dups[i] = corpus.duplicates_removed(i);
        for (const auto& m : corpus.messages_of(i)) {
            users[i].replied_by_others += m.reply_count;
            users[i].retweeted_by_others += m.retweet_count;
            std::set<std::string_view> mentioned(m.mentions.begin(), m.mentions.end());
            for (auto name : mentioned) {
                auto target = corpus.find_user(name);
                if (target && *target != i) ++users[*target].mentioned_by_others;
            }
        }
    }
    return Corpus(std::move(users), corpus.messages(), corpus.topic(), std::move(dups));
}

Corpus filter_corpus(const Corpus& corpus, std::size_t per_user_cap, FilterStats* stats) {
    if (per_user_cap < 1) throw ValidationError("per_user_cap must be >= 1");
    FilterStats local;
    std::vector<UserRecord> users;
    std::vector<MessageRecord> messages;
    std::vector<std::size_t> dups;

    for (std::size_t i = 0; i < corpus.n(); ++i) {
        const auto& user = corpus.users()[i];
        const auto history = corpus.messages_of(i);
        if (user.follower_count == 0) {
            ++local.zero_follower_users;
            local.messages_of_removed_users += history.size();
            continue;
        }
        std::vector<const MessageRecord*> ordered;
        ordered.reserve(history.size());
        for (const auto& m : history) ordered.push_back(&m);
        std::sort(ordered.begin(), ordered.end(), [](const MessageRecord* a, const MessageRecord* b) {
            if (a->timestamp != b->timestamp) return a->timestamp < b->timestamp;
            return a->message_id < b->message_id;
        });
        std::unordered_set<std::string> seen;
        std::vector<const MessageRecord*> kept;
        std::size_t removed = 0;
        for (const auto* m : ordered) {
            if (seen.insert(text::normalize_for_dedup(m->text)).second)
                kept.push_back(m);
            else
                ++removed;
        }
        local.duplicate_messages += removed;
        std::reverse(kept.begin(), kept.end());
        if (kept.size() > per_user_cap) {
            local.truncated_messages += kept.size() - per_user_cap;
            kept.resize(per_user_cap);
        }
        for (const auto* m : kept) messages.push_back(*m);
        users.push_back(user);
        dups.push_back(corpus.duplicates_removed(i) + removed);
    }
    if (stats) *stats = local;
    return Corpus(std::move(users), std::move(messages), corpus.topic(), std::move(dups));
}

std::string_view label_name(Label label) { return label == Label::trusted ? "trusted" : "not_trusted"; }

Label parse_label(std::string_view name) {
    if (name == "trusted") return Label::trusted;
    if (name == "not_trusted") return Label::not_trusted;
    throw ValidationError("invalid label '" + std::string(name) + "' (expected trusted or not_trusted)");
}

LabelSet load_labels(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::string line;
    if (!std::getline(in, line)) throw FormatError(path.string() + ": missing header");
    if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
    const auto header = csv::parse_line(line);
    if (header != std::vector<std::string>{"user_id", "label"})
        throw FormatError(path.string() + ": header must be 'user_id,label'");
    LabelSet labels;
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty() || line == "\r") continue;
        const auto where = path.string() + ":" + std::to_string(number) + ": ";
        std::vector<std::string> fields;
        try {
            fields = csv::parse_line(line);
        } catch (const FormatError& e) {
            throw FormatError(where + e.what());
        }
        if (fields.size() != 2 || fields[0].empty()) throw FormatError(where + "expected user_id,label");
        Label label;
        try {
            label = parse_label(fields[1]);
        } catch (const ValidationError& e) {
            throw FormatError(where + e.what());
        }
        auto [it, inserted] = labels.emplace(fields[0], label);
        if (!inserted && it->second != label) throw FormatError(where + "conflicting labels for '" + fields[0] + "'");
    }
    return labels;
}

void save_labels(const LabelSet& labels, const std::filesystem::path& path) {
    auto out = open_for_write(path);
    csv::write_row(out, {"user_id", "label"});
    for (const auto& [id, label] : labels) csv::write_row(out, {id, std::string(label_name(label))});
    check_written(out, path);
}

JoinResult join_labels(const Corpus& corpus, const LabelSet& labels) {
    JoinResult result;
    for (std::size_t i = 0; i < corpus.n(); ++i) {
        auto it = labels.find(corpus.users()[i].user_id);
        if (it == labels.end())
            ++result.unlabeled;
        else
            result.pairs.push_back({i, it->second});
    }
    result.dangling = labels.size() - result.pairs.size();
    if (result.pairs.empty()) throw ValidationError("no labeled users");
    return result;
}

void SplitSpec::validate() const {
    for (double f : {train_fraction, validation_fraction, test_fraction}) {
        if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("split fractions must lie in [0, 1]");
    }
    if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9)
        throw ValidationError("split fractions must sum to 1");
}

namespace {

std::size_t floor_share(std::size_t n, double fraction) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

}  // namespace

Splits<std::size_t> split_indices(std::size_t n, const SplitSpec& spec, std::span<const int> strata) {
    spec.validate();
    if (n < 3) throw ValidationError("need at least 3 items to split, got " + std::to_string(n));
    if (spec.stratify && strata.size() != n) throw ValidationError("stratified split needs one stratum per item");

    std::vector<std::vector<std::size_t>> groups;
    if (spec.stratify) {
        std::map<int, std::vector<std::size_t>> by_key;
        for (std::size_t i = 0; i < n; ++i) by_key[strata[i]].push_back(i);
        for (auto& [key, members] : by_key) groups.push_back(std::move(members));
    } else {
        groups.emplace_back(n);
        std::iota(groups[0].begin(), groups[0].end(), std::size_t{0});
    }

    Rng rng(spec.seed);
    Splits<std::size_t> out;
    for (auto& group : groups) {
        rng.shuffle(std::span<std::size_t>(group));
        const std::size_t n_val = floor_share(group.size(), spec.validation_fraction);
        const std::size_t n_test = floor_share(group.size(), spec.test_fraction);
        const std::size_t n_train = group.size() - n_val - n_test;
        out.train.insert(out.train.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_train));
        out.validation.insert(out.validation.end(), group.begin() + static_cast<std::ptrdiff_t>(n_train),
                              group.begin() + static_cast<std::ptrdiff_t>(n_train + n_val));
        out.test.insert(out.test.end(), group.begin() + static_cast<std::ptrdiff_t>(n_train + n_val), group.end());
    }
    auto require = [&](double fraction, std::size_t size, const char* name) {
        if (fraction > 0.0 && size == 0)
            throw ValidationError(std::string("too few items (") + std::to_string(n) + ") for a non-empty " + name +
                                  " partition");
    };
    require(spec.train_fraction, out.train.size(), "train");
    require(spec.validation_fraction, out.validation.size(), "validation");
    require(spec.test_fraction, out.test.size(), "test");
    return out;
}

Splits<LabeledUser> split_dataset(std::span<const LabeledUser> pairs, const SplitSpec& spec) {
    std::vector<int> strata(pairs.size());
    for (std::size_t i = 0; i < pairs.size(); ++i) strata[i] = label_target(pairs[i].label);
    const auto idx = split_indices(pairs.size(), spec, strata);
    Splits<LabeledUser> out;
    for (auto i : idx.train) out.train.push_back(pairs[i]);
    for (auto i : idx.validation) out.validation.push_back(pairs[i]);
    for (auto i : idx.test) out.test.push_back(pairs[i]);
    return out;
}

}  // namespace deeptrust
