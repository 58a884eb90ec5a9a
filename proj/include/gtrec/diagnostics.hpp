#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gtrec/embedding.hpp"

namespace gtrec {

// One test user for the informativeness diagnostic: the context rows of the
// items previously interacted with, and the held-out target item.
struct DiagUser {
    std::string user_id;
    std::vector<size_t> history_ctx_rows;  // rows into the context matrix
    std::string target_item;
};

struct DiagnosticInput {
    std::vector<DiagUser> users;
    const EmbeddingMatrix* items = nullptr;     // metadata embeddings m_j
    const EmbeddingMatrix* contexts = nullptr;  // geo-temporal embeddings t_i
};

struct DiagnosticKRecord {
    size_t k = 0;
    double hr_geotemporal = 0;
    double hr_random = 0;            // analytic k/N, used in improvement_pct
    double hr_random_empirical = 0;  // uniform-shuffle estimate
    double improvement_pct = 0;
    double ci_low = 0;   // 95% bootstrap over users
    double ci_high = 0;
};

struct DiagnosticReport {
    std::vector<DiagnosticKRecord> per_k;
    size_t n_users = 0;
    size_t catalog_size = 0;
    uint64_t seed = 0;

    std::string to_json() const;
};

struct DiagnosticsOptions {
    size_t n_random_trials = 100;
    size_t bootstrap_resamples = 1000;
    // one sampled history item per user by default; more reduces variance
    size_t gt_samples_per_user = 1;
};

// The t vector of one uniformly sampled history item, used as the user
// geo-temporal embedding.
std::span<const float> sample_user_gt(const DiagUser& user, const EmbeddingMatrix& contexts,
                                      std::mt19937_64& rng);

// Catalog indices sorted by t . m_j descending; exact ties broken by
// ascending item key.
std::vector<size_t> rank_by_dot(std::span<const float> t, const EmbeddingMatrix& items);

DiagnosticReport run_informativeness(const DiagnosticInput& input,
                                     const std::vector<size_t>& ks, uint64_t seed,
                                     const DiagnosticsOptions& opts = {});

}  // namespace gtrec
