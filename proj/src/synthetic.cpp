#include "deeptrust/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <numeric>
#include <string_view>

#include "deeptrust/error.hpp"
#include "deeptrust/rng.hpp"
#include "deeptrust/text.hpp"

namespace deeptrust {

namespace {

constexpr std::array<std::string_view, 24> kPositive{
    "good",  "great",   "accurate", "reliable", "helpful", "clear",  "honest",   "excellent",
    "solid", "useful",  "verified", "careful",  "thanks",  "happy",  "correct",  "trusted",
    "fair",  "strong",  "insightful", "calm",   "confirmed", "proud", "glad",    "thorough"};

constexpr std::array<std::string_view, 24> kNegative{
    "bad",    "fake",   "wrong",   "hoax",  "terrible", "awful",   "lies",    "scam",
    "angry",  "stupid", "worst",   "fraud", "hate",     "shame",   "corrupt", "disaster",
    "rigged", "sick",   "useless", "evil",  "panic",    "liar",    "crooked", "broken"};

constexpr std::array<std::string_view, 40> kNeutral{
    "the",    "a",      "report", "today",  "city",    "update", "about",  "people", "new",     "meeting",
    "from",   "and",    "with",   "vote",   "council", "week",   "on",     "data",   "story",   "plan",
    "market", "school", "road",   "we",     "they",    "see",    "read",   "here",   "morning", "team",
    "local",  "event",  "post",   "source", "latest",  "after",  "before", "said",   "during",  "result"};

constexpr std::array<std::string_view, 4> kEmoji{"\U0001F600", "\U0001F44D", "\U0001F525", "\U0001F622"};

constexpr std::int64_t kBaseEpoch = 1'600'000'000;
constexpr std::int64_t kDay = 86'400;

std::string user_id(std::size_t index, std::size_t total) {
    const int width = static_cast<int>(std::to_string(total).size());
    char buf[32];
    std::snprintf(buf, sizeof buf, "u%0*zu", width, index + 1);
    return buf;
}

/// mantissa * 10^exponent with an integer power.
std::uint64_t magnitude(Rng& rng, std::int64_t lo_exp, std::int64_t hi_exp) {
    std::uint64_t scale = 1;
    for (auto e = rng.between(lo_exp, hi_exp); e > 0; --e) scale *= 10;
    return static_cast<std::uint64_t>(rng.between(1, 9)) * scale + rng.below(scale);
}

template <std::size_t N>
std::string_view pick(Rng& rng, const std::array<std::string_view, N>& words) {
    return words[rng.below(N)];
}

struct TextProfile {
    std::int64_t min_words, max_words;
    std::int64_t min_positive, max_positive;
    std::int64_t min_negative, max_negative;
    double duplicate_rate;
};

constexpr TextProfile kTrustedText{14, 24, 2, 4, 0, 1, 0.02};
constexpr TextProfile kUntrustedText{4, 9, 0, 1, 1, 3, 0.3};

std::string compose(Rng& rng, const TextProfile& p, const std::vector<std::string>& handles, std::size_t self) {
    const auto words = static_cast<std::size_t>(rng.between(p.min_words, p.max_words));
    auto positive = static_cast<std::size_t>(rng.between(p.min_positive, p.max_positive));
    auto negative = static_cast<std::size_t>(rng.between(p.min_negative, p.max_negative));
    positive = std::min(positive, words);
    negative = std::min(negative, words - positive);

    std::vector<std::string> tokens;
    tokens.reserve(words + 3);
    for (std::size_t i = 0; i < positive; ++i) tokens.emplace_back(pick(rng, kPositive));
    for (std::size_t i = 0; i < negative; ++i) tokens.emplace_back(pick(rng, kNegative));
    while (tokens.size() < words) tokens.emplace_back(pick(rng, kNeutral));
    rng.shuffle(std::span<std::string>(tokens));

    if (rng.bernoulli(0.3)) tokens.push_back("#" + std::string(pick(rng, kNeutral)));
    if (rng.bernoulli(0.2) && handles.size() > 1) {
        auto other = static_cast<std::size_t>(rng.below(handles.size() - 1));
        if (other >= self) ++other;
        tokens.push_back("@" + handles[other]);
    }
    if (rng.bernoulli(0.2)) tokens.push_back("https://example.org/n/" + std::to_string(rng.below(100000)));
    if (rng.bernoulli(0.15)) tokens.emplace_back(pick(rng, kEmoji));

    std::string out;
    for (const auto& t : tokens) {
        if (!out.empty()) out += ' ';
        out += t;
    }
    return out;
}

UserRecord make_account(Rng& rng, bool trusted, std::string id) {
    UserRecord u;
    u.user_id = std::move(id);
    u.follower_count = trusted ? magnitude(rng, 3, 5) : magnitude(rng, 1, 3);
    u.friend_count = magnitude(rng, 1, 3);
    u.listed_count = trusted ? magnitude(rng, 1, 3) : rng.below(10);
    u.statuses_count = magnitude(rng, 2, 4);
    const auto age_days = trusted ? rng.between(700, 4000) : rng.between(30, 1500);
    u.account_created = kBaseEpoch - age_days * kDay;
    u.verified = rng.bernoulli(trusted ? 0.4 : 0.02);
    u.has_profile_image = rng.bernoulli(trusted ? 0.97 : 0.8);
    return u;
}

}  // namespace

void SynthConfig::validate() const {
    std::vector<std::string> bad;
    if (users < 2) bad.emplace_back("users (must be >= 2)");
    if (!(trusted_fraction > 0.0 && trusted_fraction < 1.0)) bad.emplace_back("trusted_fraction (must be in (0, 1))");
    if (!(noise >= 0.0 && noise <= 1.0)) bad.emplace_back("noise (must be in [0, 1])");
    if (min_messages < 1 || min_messages > max_messages)
        bad.emplace_back("min_messages/max_messages (need 1 <= min <= max)");
    if (!(zero_follower_fraction >= 0.0 && zero_follower_fraction <= 1.0))
        bad.emplace_back("zero_follower_fraction (must be in [0, 1])");
    if (bad.empty()) return;
    std::string msg = "invalid synthetic config:";
    for (const auto& b : bad) msg += " " + b + ";";
    msg.pop_back();
    throw ValidationError(msg);
}

const Lexicon& synthetic_lexicon() {
    static const Lexicon lexicon(std::vector<std::string>(kPositive.begin(), kPositive.end()),
                                 std::vector<std::string>(kNegative.begin(), kNegative.end()));
    return lexicon;
}

SynthResult generate_synthetic(const SynthConfig& config) {
    config.validate();
    const std::size_t n = config.users;
    const auto trusted_count = static_cast<std::size_t>(
        std::clamp<long long>(std::llround(static_cast<double>(n) * config.trusted_fraction), 0,
                              static_cast<long long>(n)));

    Rng label_rng(derive_seed(config.seed, 0));
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    label_rng.shuffle(std::span<std::size_t>(order));
    std::vector<bool> trusted(n, false);
    for (std::size_t i = 0; i < trusted_count; ++i) trusted[order[i]] = true;

    std::vector<std::string> handles(n);
    for (std::size_t i = 0; i < n; ++i) handles[i] = user_id(i, n);

    std::vector<UserRecord> users;
    std::vector<MessageRecord> messages;
    users.reserve(n);
    SynthResult result;

    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(config.seed, i + 1));
        const bool account_trusted = rng.bernoulli(config.noise) ? rng.bernoulli(0.5) : trusted[i];
        const bool text_trusted = rng.bernoulli(config.noise) ? rng.bernoulli(0.5) : trusted[i];

        UserRecord user = make_account(rng, account_trusted, handles[i]);
        if (rng.bernoulli(config.zero_follower_fraction)) user.follower_count = 0;

        const TextProfile& profile = text_trusted ? kTrustedText : kUntrustedText;
        const auto count = static_cast<std::size_t>(
            rng.between(static_cast<std::int64_t>(config.min_messages), static_cast<std::int64_t>(config.max_messages)));
        std::int64_t t = kBaseEpoch - rng.between(60, 90) * kDay;
        std::vector<std::string> written;
        for (std::size_t m = 0; m < count; ++m) {
            MessageRecord msg;
            msg.message_id = handles[i] + "-m" + std::to_string(m + 1);
            msg.author_id = handles[i];
            if (!written.empty() && rng.bernoulli(profile.duplicate_rate))
                msg.text = written[rng.below(written.size())];
            else
                msg.text = compose(rng, profile, handles, i);
            written.push_back(msg.text);
            t += rng.between(600, 3 * kDay);
            msg.timestamp = t;
            msg.retweet_count = account_trusted ? magnitude(rng, 0, 2) : rng.below(5);
            msg.reply_count = rng.below(account_trusted ? 20 : 5);
            msg.is_retweet = rng.bernoulli(0.1);
            msg.hashtags = text::extract_hashtags(msg.text);
            msg.mentions = text::extract_mentions(msg.text);
            msg.urls = text::extract_urls(msg.text);
            messages.push_back(std::move(msg));
        }
        users.push_back(std::move(user));
        result.labels.emplace(handles[i], trusted[i] ? Label::trusted : Label::not_trusted);
    }

    result.corpus = with_computed_aggregates(Corpus(std::move(users), std::move(messages), config.topic));
    result.signal_features = {"mean_char_count",   "mean_word_count",   "mean_positive_terms", "mean_negative_terms",
                              "mean_polarity",     "profile_sentiment", "negative_message_fraction",
                              "duplicate_fraction", "follower_count",   "listed_count",        "verified",
                              "account_age_days",  "mean_retweet_count", "mean_reply_count"};
    return result;
}

}  // namespace deeptrust
