#include "gtrec/losses.hpp"

#include <cmath>

#include "gtrec/errors.hpp"

namespace gtrec {

namespace {

// -log sigmoid(x) = log(1 + exp(-x)), safe on both tails
double neg_log_sigmoid(double x) {
    if (!std::isfinite(x)) throw NonFiniteValue("score is NaN/Inf");
    return x >= 0 ? std::log1p(std::exp(-x)) : -x + std::log1p(std::exp(x));
}

}  // namespace

double ranking_loss(double s_pos, std::span<const double> s_negs) {
    if (s_negs.empty()) throw ConfigError("ranking loss needs at least one negative");
    double loss = neg_log_sigmoid(s_pos);
    double neg = 0;
    for (double s : s_negs) neg += neg_log_sigmoid(-s);
    return loss + neg / static_cast<double>(s_negs.size());
}

AuxKind aux_kind_from_string(const std::string& s) {
    if (s == "none") return AuxKind::none;
    if (s == "bce") return AuxKind::bce;
    if (s == "cosine" || s == "cos") return AuxKind::cosine;
    if (s == "pairwise") return AuxKind::pairwise;
    throw ConfigError("unknown aux loss kind '" + s + "'");
}

std::string aux_kind_to_string(AuxKind k) {
    switch (k) {
        case AuxKind::none: return "none";
        case AuxKind::bce: return "bce";
        case AuxKind::cosine: return "cosine";
        case AuxKind::pairwise: return "pairwise";
    }
    return "?";
}

void AuxBatch::validate() const {
    if (anchors.empty()) throw ConfigError("empty aux batch");
    if (positives.size() != anchors.size() || negatives.size() != anchors.size())
        throw ShapeMismatch("aux batch: anchors/positives/negatives sizes differ");
    const size_t n_neg = negatives[0].size();
    if (n_neg < 1) throw ShapeMismatch("aux batch: n_neg must be >= 1");
    for (const auto& negs : negatives)
        if (negs.size() != n_neg) throw ShapeMismatch("aux batch: ragged negative sets");
}

double aux_loss(const AuxBatch& batch, AuxKind kind, const AuxLossOptions& opts) {
    batch.validate();
    if (kind == AuxKind::none) return 0.0;
    if (kind == AuxKind::pairwise && opts.margin <= 0)
        throw ConfigError("pairwise margin must be > 0");

    double total = 0;
    for (size_t i = 0; i < batch.anchors.size(); ++i) {
        const auto& t = batch.anchors[i];
        const double sim_pos = cosine_sim(t, batch.positives[i]);
        switch (kind) {
            case AuxKind::cosine:
                total += 1.0 - sim_pos;  // positives only
                break;
            case AuxKind::bce: {
                double item = neg_log_sigmoid(opts.temperature * sim_pos);
                double neg = 0;
                for (const auto& m : batch.negatives[i])
                    neg += neg_log_sigmoid(-opts.temperature * cosine_sim(t, m));
                total += item + neg / static_cast<double>(batch.negatives[i].size());
                break;
            }
            case AuxKind::pairwise: {
                double pair = 0;
                for (const auto& m : batch.negatives[i])
                    pair += std::max(0.0, opts.margin - sim_pos + cosine_sim(t, m));
                total += pair / static_cast<double>(batch.negatives[i].size());
                break;
            }
            case AuxKind::none:
                break;
        }
    }
    const double loss = total / static_cast<double>(batch.anchors.size());
    if (!std::isfinite(loss)) throw NonFiniteValue("aux loss is NaN/Inf");
    return loss;
}

double total_loss(double rank, double aux, double lambda_aux) {
    return rank + lambda_aux * aux;
}

}  // namespace gtrec
