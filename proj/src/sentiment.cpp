#include "deeptrust/sentiment.hpp"

#include <algorithm>
#include <fstream>

#include "deeptrust/error.hpp"
#include "deeptrust/text.hpp"

namespace deeptrust {
namespace {

std::string normalize_term(std::string_view term) { return text::nfc(text::to_lower(text::nfc(term))); }

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Lexicon::Lexicon(std::vector<std::string> positive, std::vector<std::string> negative) {
    for (const auto& t : positive) {
        auto n = normalize_term(t);
        if (!n.empty()) positive_.insert(std::move(n));
    }
    for (const auto& t : negative) {
        auto n = normalize_term(t);
        if (n.empty()) continue;
        if (positive_.contains(n)) throw ValidationError("lexicon term '" + n + "' is listed as both + and -");
        negative_.insert(std::move(n));
    }
    if (positive_.empty() && negative_.empty()) throw ValidationError("lexicon is empty");
}

Lexicon Lexicon::swapped() const {
    Lexicon out;
    out.positive_ = negative_;
    out.negative_ = positive_;
    return out;
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::vector<std::string> positive;
    std::vector<std::string> negative;
    std::string line;
    std::size_t number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (number == 1 && line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);
        const auto trimmed = trim(line);
        if (trimmed.empty() || trimmed.front() == '#') continue;
        const auto tab = trimmed.rfind('\t');
        if (tab == std::string::npos)
            throw FormatError(path.string() + ":" + std::to_string(number) + ": expected term<TAB>polarity");
        const auto term = trim(std::string_view(trimmed).substr(0, tab));
        const auto polarity = trim(std::string_view(trimmed).substr(tab + 1));
        if (term.empty()) throw FormatError(path.string() + ":" + std::to_string(number) + ": empty term");
        if (polarity == "+")
            positive.push_back(term);
        else if (polarity == "-")
            negative.push_back(term);
        else
            throw FormatError(path.string() + ":" + std::to_string(number) + ": polarity must be + or -");
    }
    // Conflicts are detected in the constructor, which names the term.
    return Lexicon(std::move(positive), std::move(negative));
}

void save_lexicon(const Lexicon& lexicon, const std::filesystem::path& path) {
    std::vector<std::string> pos(lexicon.positive_terms().begin(), lexicon.positive_terms().end());
    std::vector<std::string> neg(lexicon.negative_terms().begin(), lexicon.negative_terms().end());
    std::sort(pos.begin(), pos.end());
    std::sort(neg.begin(), neg.end());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out << "# term\tpolarity\n";
    for (const auto& t : pos) out << t << "\t+\n";
    for (const auto& t : neg) out << t << "\t-\n";
    if (!out) throw IoError("error while writing '" + path.string() + "'");
}

SentimentResult score_text(const Lexicon& lexicon, std::string_view text) {
    SentimentResult r;
    for (const auto& token : text::tokenize(text)) {
        if (lexicon.is_positive(token))
            ++r.positive_count;
        else if (lexicon.is_negative(token))
            ++r.negative_count;
    }
    const auto hits = r.positive_count + r.negative_count;
    if (hits > 0)
        r.polarity = (static_cast<double>(r.positive_count) - static_cast<double>(r.negative_count)) /
                     static_cast<double>(hits);
    return r;
}

namespace {

template <typename Range, typename TextOf>
double profile_score(const Lexicon& lexicon, const Range& items, TextOf text_of) {
    if (items.empty()) return 0.0;
    long positive = 0;
    long negative = 0;
    for (const auto& item : items) {
        const double p = score_text(lexicon, text_of(item)).polarity;
        if (p > 0.0)
            ++positive;
        else if (p < 0.0)
            ++negative;
    }
    return static_cast<double>(positive - negative) / static_cast<double>(items.size());
}

}  // namespace

double profile_sentiment(const Lexicon& lexicon, std::span<const MessageRecord> messages) {
    return profile_score(lexicon, messages, [](const MessageRecord& m) -> std::string_view { return m.text; });
}

double profile_sentiment(const Lexicon& lexicon, std::span<const std::string> texts) {
    return profile_score(lexicon, texts, [](const std::string& t) -> std::string_view { return t; });
}

}  // namespace deeptrust
