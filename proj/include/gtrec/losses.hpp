#pragma once

#include <span>
#include <vector>

#include "gtrec/autograd.hpp"
#include "gtrec/embedding.hpp"

namespace gtrec {

// L = -log sig(s+) - mean_j log sig(-s_j), in log-sum-exp form.
double ranking_loss(double s_pos, std::span<const double> s_negs);

// Graph twin of ranking_loss, used by the trainer.
template <typename T>
ad::Tensor<T> ranking_loss_node(const ad::Tensor<T>& s_pos,
                                const std::vector<ad::Tensor<T>>& s_negs) {
    if (s_negs.empty()) throw ConfigError("ranking loss needs at least one negative");
    ad::Tensor<T> loss = ad::scale(ad::log_sigmoid(s_pos), T{-1});
    ad::Tensor<T> neg_sum;
    for (const auto& s : s_negs) {
        auto term = ad::log_sigmoid(ad::scale(s, T{-1}));
        neg_sum = neg_sum.defined() ? ad::add(neg_sum, term) : term;
    }
    return ad::add(loss, ad::scale(neg_sum, T{-1} / static_cast<T>(s_negs.size())));
}

enum class AuxKind { none, bce, cosine, pairwise };
enum class AuxProvenance { temporal_window, semantic_pool, uniform };

AuxKind aux_kind_from_string(const std::string& s);
std::string aux_kind_to_string(AuxKind k);

// Embedding-level alignment batch: anchors are geo-temporal vectors, the
// positive is the same item's metadata vector, negatives are other items'
// metadata vectors. All sides are frozen features.
struct AuxBatch {
    std::vector<std::vector<float>> anchors;
    std::vector<std::vector<float>> positives;
    std::vector<std::vector<std::vector<float>>> negatives;  // n_neg per anchor
    AuxProvenance provenance = AuxProvenance::uniform;

    void validate() const;  // shape/n_neg invariants
};

struct AuxLossOptions {
    double margin = 0.5;       // pairwise
    double temperature = 5.0;  // bce: labels on sig(temperature * sim)
};

// bce: cross-entropy on sig(tau*sim) with labels 1 (positive) / 0 (negatives);
// cosine: mean (1 - sim(t, m+)), positives only;
// pairwise: mean max(0, margin - sim(t, m+) + sim(t, m-)).
double aux_loss(const AuxBatch& batch, AuxKind kind, const AuxLossOptions& opts = {});

double total_loss(double rank, double aux, double lambda_aux);

}  // namespace gtrec
