#include "deeptrust/reputation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include "deeptrust/csv.hpp"
#include "deeptrust/error.hpp"

namespace deeptrust {

void ThresholdConfig::validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ValidationError("theta must lie in [0, 1]");
}

double acquaintance_score(const UserRecord& user, std::size_t population) {
    if (population == 0) throw ValidationError("acquaintance score needs N >= 1");
    const double total = static_cast<double>(user.follower_count) + static_cast<double>(user.replied_by_others) +
                         static_cast<double>(user.mentioned_by_others) +
                         static_cast<double>(user.retweeted_by_others);
    return total / static_cast<double>(population);
}

namespace {

// Neumaier summation over the terms sorted ascending: order-free and accurate.
double canonical_sum(std::vector<double> terms) {
    std::sort(terms.begin(), terms.end());
    double sum = 0.0;
    double compensation = 0.0;
    for (double t : terms) {
        const double next = sum + t;
        if (std::abs(sum) >= std::abs(t))
            compensation += (sum - next) + t;
        else
            compensation += (t - next) + sum;
        sum = next;
    }
    return sum + compensation;
}

}  // namespace

std::vector<double> acquaintance_affinity(std::span<const UserRecord> users, std::span<const double> scores) {
    if (users.empty()) throw ValidationError("affinity needs a non-empty corpus");
    if (scores.size() != users.size()) throw ValidationError("one acquaintance score per user required");

    std::vector<double> by_reply, by_mention, by_retweet;
    for (std::size_t i = 0; i < users.size(); ++i) {
        if (users[i].replied_by_others) by_reply.push_back(scores[i] / static_cast<double>(users[i].replied_by_others));
        if (users[i].mentioned_by_others)
            by_mention.push_back(scores[i] / static_cast<double>(users[i].mentioned_by_others));
        if (users[i].retweeted_by_others)
            by_retweet.push_back(scores[i] / static_cast<double>(users[i].retweeted_by_others));
    }
    const double reply_sum = canonical_sum(std::move(by_reply));
    const double mention_sum = canonical_sum(std::move(by_mention));
    const double retweet_sum = canonical_sum(std::move(by_retweet));

    std::vector<double> out(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        out[i] = static_cast<double>(users[i].replied_by_others) * reply_sum +
                 static_cast<double>(users[i].mentioned_by_others) * mention_sum +
                 static_cast<double>(users[i].retweeted_by_others) * retweet_sum;
    }
    return out;
}

std::vector<ReputationScore> rank_and_threshold(std::span<const std::string> user_ids,
                                                std::span<const double> scores,
                                                std::span<const double> affinities, const ThresholdConfig& cfg) {
    cfg.validate();
    if (user_ids.size() != scores.size() || user_ids.size() != affinities.size())
        throw ValidationError("ranking inputs differ in length");
    std::vector<ReputationScore> out(user_ids.size());
    if (out.empty()) return out;
    const auto [lo, hi] = std::minmax_element(affinities.begin(), affinities.end());
    const double min = *lo;
    const double range = *hi - *lo;
    for (std::size_t i = 0; i < out.size(); ++i) {
        auto& r = out[i];
        r.user_id = user_ids[i];
        r.acq_scr = scores[i];
        r.acq_aff = affinities[i];
        r.normalized_rank = range > 0.0 ? (affinities[i] - min) / range : 0.5;
        r.trusted_by_threshold = r.normalized_rank >= cfg.theta;
    }
    std::sort(out.begin(), out.end(), [](const ReputationScore& a, const ReputationScore& b) {
        if (a.acq_aff != b.acq_aff) return a.acq_aff > b.acq_aff;
        return a.user_id < b.user_id;
    });
    return out;
}

std::vector<ReputationScore> compute_reputation(const Corpus& corpus, const ThresholdConfig& cfg) {
    const auto& users = corpus.users();
    std::vector<double> scores(users.size());
    std::vector<std::string> ids(users.size());
    for (std::size_t i = 0; i < users.size(); ++i) {
        scores[i] = acquaintance_score(users[i], corpus.n());
        ids[i] = users[i].user_id;
    }
    const auto aff = acquaintance_affinity(users, scores);
    return rank_and_threshold(ids, scores, aff, cfg);
}

void write_reputation_csv(std::ostream& out, std::span<const ReputationScore> ranked) {
    csv::write_row(out, {"user_id", "acq_scr", "acq_aff", "normalized_rank", "trusted"});
    for (const auto& r : ranked)
        csv::write_row(out, {r.user_id, csv::format_number(r.acq_scr), csv::format_number(r.acq_aff),
                             csv::format_number(r.normalized_rank), r.trusted_by_threshold ? "true" : "false"});
}

}  // namespace deeptrust
