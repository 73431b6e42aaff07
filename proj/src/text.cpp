#include "deeptrust/text.hpp"

#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/utf8.h>

#include "deeptrust/error.hpp"

namespace deeptrust::text {
namespace {

icu::UnicodeString from_utf8(std::string_view s) {
    return icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
}

std::string to_utf8(const icu::UnicodeString& s) {
    std::string out;
    s.toUTF8String(out);
    return out;
}

const icu::Normalizer2& nfc_instance() {
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status) || n == nullptr) throw std::runtime_error("ICU NFC normalizer unavailable");
    return *n;
}

icu::UnicodeString nfc_unicode(std::string_view s) {
    UErrorCode status = U_ZERO_ERROR;
    auto out = nfc_instance().normalize(from_utf8(s), status);
    if (U_FAILURE(status)) throw ValidationError("text normalization failed");
    return out;
}

// Visits code points of a UTF-8 string; ill-formed bytes yield U+FFFD.
template <typename F>
void for_each_code_point(std::string_view s, F&& f) {
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    const auto len = static_cast<int32_t>(s.size());
    int32_t i = 0;
    while (i < len) {
        const int32_t start = i;
        UChar32 c;
        U8_NEXT(bytes, i, len, c);
        if (c < 0) c = 0xFFFD;
        f(c, static_cast<std::size_t>(start), static_cast<std::size_t>(i));
    }
}

bool is_space(UChar32 c) { return u_isUWhiteSpace(c) != 0; }
bool is_punct(UChar32 c) { return u_ispunct(c) != 0; }
bool is_word_char(UChar32 c) { return c == '_' || u_isalnum(c) != 0; }

// Leading run of word characters after the first code point.
std::string word_after_sigil(std::string_view token) {
    std::string out;
    bool first = true;
    bool done = false;
    for_each_code_point(token, [&](UChar32 c, std::size_t b, std::size_t e) {
        if (done) return;
        if (first) {
            first = false;
            return;
        }
        if (!is_word_char(c)) {
            done = true;
            return;
        }
        out.append(token.substr(b, e - b));
    });
    return out;
}

std::string strip_punct(std::string_view token) {
    std::size_t begin = token.size();
    std::size_t end = 0;
    for_each_code_point(token, [&](UChar32 c, std::size_t b, std::size_t e) {
        if (is_punct(c)) return;
        if (begin == token.size()) begin = b;
        end = e;
    });
    if (begin >= end) return {};
    return std::string(token.substr(begin, end - begin));
}

}  // namespace

std::string nfc(std::string_view utf8) { return to_utf8(nfc_unicode(utf8)); }

std::string to_lower(std::string_view utf8) {
    auto u = from_utf8(utf8);
    u.toLower(icu::Locale::getRoot());
    return to_utf8(u);
}

std::string normalize_for_dedup(std::string_view utf8) {
    const std::string n = nfc(utf8);
    std::size_t begin = n.size();
    std::size_t end = 0;
    for_each_code_point(n, [&](UChar32 c, std::size_t b, std::size_t e) {
        if (is_space(c)) return;
        if (begin == n.size()) begin = b;
        end = e;
    });
    if (begin >= end) return {};
    return n.substr(begin, end - begin);
}

std::vector<std::string> split_whitespace(std::string_view utf8) {
    std::vector<std::string> out;
    std::string current;
    for_each_code_point(utf8, [&](UChar32 c, std::size_t b, std::size_t e) {
        if (is_space(c)) {
            if (!current.empty()) out.push_back(std::move(current));
            current.clear();
        } else {
            current.append(utf8.substr(b, e - b));
        }
    });
    if (!current.empty()) out.push_back(std::move(current));
    return out;
}

std::vector<std::string> tokenize(std::string_view utf8) {
    std::vector<std::string> out;
    for (const auto& raw : split_whitespace(utf8)) {
        auto stripped = strip_punct(raw);
        if (stripped.empty()) continue;
        out.push_back(nfc(to_lower(nfc(stripped))));
    }
    return out;
}

std::size_t code_point_count(std::string_view utf8) {
    std::size_t n = 0;
    for_each_code_point(utf8, [&](UChar32, std::size_t, std::size_t) { ++n; });
    return n;
}

std::size_t emoji_count(std::string_view utf8) {
    std::size_t n = 0;
    for_each_code_point(utf8, [&](UChar32 c, std::size_t, std::size_t) {
        if (c > 0x7F && u_hasBinaryProperty(c, UCHAR_EXTENDED_PICTOGRAPHIC)) ++n;
    });
    return n;
}

std::vector<std::string> extract_hashtags(std::string_view utf8) {
    std::vector<std::string> out;
    for (const auto& token : split_whitespace(utf8)) {
        if (token.size() < 2 || token.front() != '#') continue;
        auto tag = word_after_sigil(token);
        if (!tag.empty()) out.push_back(std::move(tag));
    }
    return out;
}

std::vector<std::string> extract_mentions(std::string_view utf8) {
    std::vector<std::string> out;
    for (const auto& token : split_whitespace(utf8)) {
        if (token.size() < 2 || token.front() != '@') continue;
        auto name = word_after_sigil(token);
        if (!name.empty()) out.push_back(std::move(name));
    }
    return out;
}

std::vector<std::string> extract_urls(std::string_view utf8) {
    std::vector<std::string> out;
    for (auto token : split_whitespace(utf8)) {
        const bool is_url = token.starts_with("http://") || token.starts_with("https://") ||
                            token.starts_with("www.");
        if (!is_url) continue;
        while (!token.empty() && std::string_view(",.;:!?)]}\"'").find(token.back()) != std::string_view::npos)
            token.pop_back();
        const auto body = token.find("://") != std::string::npos ? token.find("://") + 3 : 4;
        if (token.size() > body) out.push_back(std::move(token));
    }
    return out;
}

}  // namespace deeptrust::text
