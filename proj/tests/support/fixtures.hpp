#pragma once

#include <cstdint>

#include "deeptrust/dataset.hpp"
#include "deeptrust/features.hpp"
#include "deeptrust/synthetic.hpp"

namespace testing {

/// Labeled feature rows of a synthetic corpus in corpus order.
inline deeptrust::Dataset synthetic_dataset(std::size_t users, double noise, std::uint64_t seed) {
    deeptrust::SynthConfig cfg;
    cfg.users = users;
    cfg.noise = noise;
    cfg.seed = seed;
    cfg.zero_follower_fraction = 0.0;
    const auto r = deeptrust::generate_synthetic(cfg);
    deeptrust::Dataset d{deeptrust::extract_corpus_features(r.corpus, deeptrust::synthetic_lexicon()), {}};
    for (const auto& u : r.corpus.users()) d.y.push_back(deeptrust::label_target(r.labels.at(u.user_id)));
    return d;
}

}  // namespace testing
