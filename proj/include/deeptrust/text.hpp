#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

// UTF-8 text helpers shared by ingestion, sentiment scoring, and feature
// extraction. Invalid UTF-8 sequences are replaced with U+FFFD.
namespace deeptrust::text {

std::string nfc(std::string_view utf8);
std::string to_lower(std::string_view utf8);

/// NFC, then trim Unicode whitespace at both ends. Key for duplicate detection.
std::string normalize_for_dedup(std::string_view utf8);

/// Split on Unicode whitespace; no other processing.
std::vector<std::string> split_whitespace(std::string_view utf8);

/// Whitespace split, strip leading/trailing punctuation, lowercase, NFC.
/// Empty tokens are dropped.
std::vector<std::string> tokenize(std::string_view utf8);

std::size_t code_point_count(std::string_view utf8);
std::size_t emoji_count(std::string_view utf8);

std::vector<std::string> extract_hashtags(std::string_view utf8);
std::vector<std::string> extract_mentions(std::string_view utf8);
std::vector<std::string> extract_urls(std::string_view utf8);

}  // namespace deeptrust::text
