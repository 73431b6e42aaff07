#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "deeptrust/data.hpp"

namespace deeptrust {

struct ReputationScore {
    std::string user_id;
    double acq_scr = 0.0;
    double acq_aff = 0.0;
    double normalized_rank = 0.0;
    bool trusted_by_threshold = false;

    bool operator==(const ReputationScore&) const = default;
};

struct ThresholdConfig {
    double theta = 0.1;

    void validate() const;
};

/// (followers + replied-by-others + mentioned-by-others + retweeted-by-others) / N.
double acquaintance_score(const UserRecord& user, std::size_t population);

/// Engagement-weighted affinity per user, aligned with `users`:
///   aff(u) = RPL(u) * sum_i scr(i)/RPL(i) + MEN(u) * sum_i scr(i)/MEN(i) + RTW(u) * sum_i scr(i)/RTW(i)
/// Terms with a zero denominator contribute 0. The sums are evaluated in a
/// canonical order, so results do not depend on the order of `users`.
std::vector<double> acquaintance_affinity(std::span<const UserRecord> users, std::span<const double> scores);

/// Sorted by affinity descending, ties by user_id ascending. Affinity is
/// min-max scaled to [0,1] (0.5 for everyone when all are equal) and
/// compared against theta.
std::vector<ReputationScore> rank_and_threshold(std::span<const std::string> user_ids,
                                                std::span<const double> scores,
                                                std::span<const double> affinities, const ThresholdConfig& cfg);

/// All three steps over a corpus.
std::vector<ReputationScore> compute_reputation(const Corpus& corpus, const ThresholdConfig& cfg);

/// `user_id,acq_scr,acq_aff,normalized_rank,trusted`, one row per ranked user.
void write_reputation_csv(std::ostream& out, std::span<const ReputationScore> ranked);

}  // namespace deeptrust
