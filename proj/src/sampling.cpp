#include "gtrec/sampling.hpp"

#include <algorithm>

#include "gtrec/errors.hpp"

namespace gtrec {

namespace {

// n_neg uniform draws from a sorted pool; without replacement when possible
NegativeSample draw(std::vector<std::string> pool, size_t n_neg, std::mt19937_64& rng) {
    if (pool.empty()) throw EmptyPool("no candidate survives filtering");
    NegativeSample out;
    if (pool.size() < n_neg) {
        out.with_replacement = true;
        std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
        for (size_t i = 0; i < n_neg; ++i) out.items.push_back(pool[pick(rng)]);
        return out;
    }
    // partial Fisher-Yates
    for (size_t i = 0; i < n_neg; ++i) {
        std::uniform_int_distribution<size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
        out.items.push_back(pool[i]);
    }
    return out;
}

}  // namespace

InteractionIndex::InteractionIndex(const std::vector<Interaction>& log) : log_(log) {
    by_time_.reserve(log_.size());
    for (size_t i = 0; i < log_.size(); ++i) {
        by_time_.emplace_back(log_[i].ts_utc, i);
        items_of_user_[log_[i].user_id].insert(log_[i].item_id);
    }
    std::sort(by_time_.begin(), by_time_.end());
}

const std::unordered_set<std::string>& InteractionIndex::user_items(
    const std::string& user) const {
    static const std::unordered_set<std::string> empty;
    auto it = items_of_user_.find(user);
    return it == items_of_user_.end() ? empty : it->second;
}

NegativeSample InteractionIndex::sample_window_negatives(const std::string& user,
                                                         int64_t t_interaction, int window_days,
                                                         size_t n_neg,
                                                         std::mt19937_64& rng) const {
    if (window_days <= 0) throw ConfigError("window_days must be > 0");
    if (n_neg < 1) throw ConfigError("n_neg must be >= 1");
    const int64_t lo = t_interaction - int64_t{window_days} * 86400;

    auto begin = std::lower_bound(by_time_.begin(), by_time_.end(),
                                  std::make_pair(lo, size_t{0}));
    const auto& own = user_items(user);
    std::vector<std::string> pool;
    for (auto it = begin; it != by_time_.end() && it->first < t_interaction; ++it) {
        const Interaction& row = log_[it->second];
        if (row.user_id == user) continue;
        if (own.count(row.item_id)) continue;  // never a false negative
        pool.push_back(row.item_id);
    }
    std::sort(pool.begin(), pool.end());
    pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
    return draw(std::move(pool), n_neg, rng);
}

NegativeSample sample_semantic_negatives(std::span<const float> t, const EmbeddingMatrix& items,
                                         double pool_fraction, size_t n_neg,
                                         std::mt19937_64& rng,
                                         const std::unordered_set<std::string>& exclude) {
    if (pool_fraction <= 0 || pool_fraction > 1)
        throw ConfigError("pool_fraction must be in (0, 1]");
    if (n_neg < 1) throw ConfigError("n_neg must be >= 1");

    // ascending similarity; ties broken by key for determinism
    std::vector<std::pair<double, size_t>> ranked(items.size());
    for (size_t i = 0; i < items.size(); ++i)
        ranked[i] = {cosine_sim(t, items.row(i)), i};
    std::sort(ranked.begin(), ranked.end(), [&](const auto& a, const auto& b) {
        if (a.first != b.first) return a.first < b.first;
        return items.keys()[a.second] < items.keys()[b.second];
    });

    const size_t pool_size =
        std::max<size_t>(1, static_cast<size_t>(static_cast<double>(items.size()) *
                                                pool_fraction + 1e-9));
    std::vector<std::string> pool;
    for (size_t i = 0; i < pool_size && i < ranked.size(); ++i) {
        const std::string& key = items.keys()[ranked[i].second];
        if (!exclude.count(key)) pool.push_back(key);
    }
    std::sort(pool.begin(), pool.end());
    return draw(std::move(pool), n_neg, rng);
}

NegativeSample sample_uniform_negatives(const std::vector<std::string>& catalog,
                                        const std::unordered_set<std::string>& exclude,
                                        size_t n_neg, std::mt19937_64& rng) {
    if (n_neg < 1) throw ConfigError("n_neg must be >= 1");
    std::vector<std::string> pool;
    pool.reserve(catalog.size());
    for (const auto& key : catalog)
        if (!exclude.count(key)) pool.push_back(key);
    return draw(std::move(pool), n_neg, rng);
}

}  // namespace gtrec
