#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "deeptrust/data.hpp"

namespace deeptrust {

/// Disjoint, non-empty sets of lowercase NFC terms.
class Lexicon {
public:
    /// Normalizes every term. Throws ValidationError if a term has both
    /// polarities or if both sets are empty.
    Lexicon(std::vector<std::string> positive, std::vector<std::string> negative);

    bool is_positive(std::string_view token) const { return positive_.contains(std::string(token)); }
    bool is_negative(std::string_view token) const { return negative_.contains(std::string(token)); }

    const std::unordered_set<std::string>& positive_terms() const { return positive_; }
    const std::unordered_set<std::string>& negative_terms() const { return negative_; }

    /// Positive and negative sets exchanged.
    Lexicon swapped() const;

private:
    Lexicon() = default;
    std::unordered_set<std::string> positive_;
    std::unordered_set<std::string> negative_;
};

/// `term<TAB>+|-` per line; `#` comments and blank lines skipped.
Lexicon load_lexicon(const std::filesystem::path& path);
void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path);

struct SentimentResult {
    std::size_t positive_count = 0;
    std::size_t negative_count = 0;
    double polarity = 0.0;  // (pos - neg) / (pos + neg), 0 if no hits
};

SentimentResult score_text(const Lexicon& lexicon, std::string_view text);

/// (#positive messages - #negative messages) / #messages; 0 for no messages.
double profile_sentiment(const Lexicon& lexicon, std::span<const MessageRecord> messages);
double profile_sentiment(const Lexicon& lexicon, std::span<const std::string> texts);

}  // namespace deeptrust
