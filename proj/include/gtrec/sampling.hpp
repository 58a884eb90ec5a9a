#pragma once

#include <random>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gtrec/corpus.hpp"
#include "gtrec/embedding.hpp"

namespace gtrec {

struct NegativeSample {
    std::vector<std::string> items;
    bool with_replacement = false;  // set when the pool was smaller than n_neg
};

// Time-ordered view of a log used by the temporal-window sampler.
class InteractionIndex {
public:
    explicit InteractionIndex(const std::vector<Interaction>& log);

    // Items consumed by other users within [t - window_days, t), minus every
    // item in the target user's history.
    NegativeSample sample_window_negatives(const std::string& user, int64_t t_interaction,
                                           int window_days, size_t n_neg,
                                           std::mt19937_64& rng) const;

    const std::unordered_set<std::string>& user_items(const std::string& user) const;

private:
    std::vector<std::pair<int64_t, size_t>> by_time_;  // (ts, log row)
    std::vector<Interaction> log_;
    std::unordered_map<std::string, std::unordered_set<std::string>> items_of_user_;
};

// Items drawn uniformly from the least-similar pool_fraction of the catalog
// relative to t (similarity against metadata embeddings), minus exclusions.
// A uniform draw from the pool, not the single most-dissimilar item.
NegativeSample sample_semantic_negatives(std::span<const float> t, const EmbeddingMatrix& items,
                                         double pool_fraction, size_t n_neg,
                                         std::mt19937_64& rng,
                                         const std::unordered_set<std::string>& exclude);

// Uniform over the catalog minus exclusions (ranking-loss negatives).
NegativeSample sample_uniform_negatives(const std::vector<std::string>& catalog,
                                        const std::unordered_set<std::string>& exclude,
                                        size_t n_neg, std::mt19937_64& rng);

}  // namespace gtrec
