#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "deeptrust/data.hpp"
#include "deeptrust/sentiment.hpp"

namespace deeptrust {

struct SynthConfig {
    std::size_t users = 1000;
    double trusted_fraction = 0.5;
    std::uint64_t seed = 0;
    double noise = 0.0;
    std::size_t min_messages = 8;
    std::size_t max_messages = 24;
    double zero_follower_fraction = 0.01;
    std::string topic = "synthetic";

    /// Throws ValidationError naming every invalid field.
    void validate() const;
};

struct SynthResult {
    Corpus corpus;
    LabelSet labels;
    /// Features whose class-conditional distributions differ by construction.
    std::vector<std::string> signal_features;
};

/// Trusted users get longer, more positive messages, more followers, more
/// verification and fewer repeated posts. With probability `noise` the account
/// block and the text block of a user each independently take the behavior
/// of a uniformly drawn class.
SynthResult generate_synthetic(const SynthConfig& config);

/// Lexicon matching the generator's vocabulary.
const Lexicon& synthetic_lexicon();

}  // namespace deeptrust
