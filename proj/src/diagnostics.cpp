#include "gtrec/diagnostics.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "gtrec/errors.hpp"

namespace gtrec {

std::span<const float> sample_user_gt(const DiagUser& user, const EmbeddingMatrix& contexts,
                                      std::mt19937_64& rng) {
    if (user.history_ctx_rows.empty()) throw EmptyHistory(user.user_id);
    std::uniform_int_distribution<size_t> pick(0, user.history_ctx_rows.size() - 1);
    return contexts.row(user.history_ctx_rows[pick(rng)]);
}

std::vector<size_t> rank_by_dot(std::span<const float> t, const EmbeddingMatrix& items) {
    if (t.size() != items.dim())
        throw DimMismatch("query dim " + std::to_string(t.size()) + " vs item dim " +
                          std::to_string(items.dim()));
    std::vector<double> scores(items.size());
    for (size_t j = 0; j < items.size(); ++j) {
        const auto m = items.row(j);
        double s = 0;
        for (size_t d = 0; d < t.size(); ++d) s += double{t[d]} * m[d];
        scores[j] = s;
    }
    std::vector<size_t> order(items.size());
    for (size_t j = 0; j < order.size(); ++j) order[j] = j;
    std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return items.keys()[a] < items.keys()[b];
    });
    return order;
}

namespace {

double percentile(std::vector<double> sorted, double q) {
    if (sorted.empty()) return 0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] * (1 - frac) + sorted[hi] * frac;
}

}  // namespace

DiagnosticReport run_informativeness(const DiagnosticInput& input, const std::vector<size_t>& ks,
                                     uint64_t seed, const DiagnosticsOptions& opts) {
    if (!input.items || !input.contexts) throw ConfigError("diagnostic input needs both matrices");
    if (input.users.empty()) throw EmptyHistory("diagnostic input has no users");
    const size_t n = input.users.size();
    const size_t catalog = input.items->size();

    std::mt19937_64 rng(seed);
    // per-user, per-k hit fraction (averaged over gt samples)
    std::vector<std::vector<double>> hit(n, std::vector<double>(ks.size(), 0.0));
    for (size_t u = 0; u < n; ++u) {
        const size_t target_idx = input.items->index_of(input.users[u].target_item);
        for (size_t rep = 0; rep < opts.gt_samples_per_user; ++rep) {
            const auto t = sample_user_gt(input.users[u], *input.contexts, rng);
            const auto order = rank_by_dot(t, *input.items);
            const size_t rank = static_cast<size_t>(
                std::find(order.begin(), order.end(), target_idx) - order.begin()) + 1;
            for (size_t ki = 0; ki < ks.size(); ++ki)
                if (rank <= ks[ki]) hit[u][ki] += 1.0;
        }
        for (size_t ki = 0; ki < ks.size(); ++ki)
            hit[u][ki] /= static_cast<double>(opts.gt_samples_per_user);
    }

    DiagnosticReport report;
    report.n_users = n;
    report.catalog_size = catalog;
    report.seed = seed;

    // empirical random baseline: the target's rank under a uniform shuffle
    // is uniform on [1, N]
    std::vector<double> empirical(ks.size(), 0.0);
    std::uniform_int_distribution<size_t> uniform_rank(1, catalog);
    for (size_t trial = 0; trial < opts.n_random_trials; ++trial) {
        for (size_t u = 0; u < n; ++u) {
            const size_t rank = uniform_rank(rng);
            for (size_t ki = 0; ki < ks.size(); ++ki)
                if (rank <= ks[ki]) empirical[ki] += 1.0;
        }
    }
    for (auto& e : empirical)
        e /= static_cast<double>(opts.n_random_trials) * static_cast<double>(n);

    for (size_t ki = 0; ki < ks.size(); ++ki) {
        DiagnosticKRecord rec;
        rec.k = ks[ki];
        const double hr_random = static_cast<double>(rec.k) / static_cast<double>(catalog);
        double hr = 0;
        for (size_t u = 0; u < n; ++u) hr += hit[u][ki];
        hr /= static_cast<double>(n);
        rec.hr_geotemporal = hr;
        rec.hr_random = hr_random;
        rec.hr_random_empirical = empirical[ki];
        rec.improvement_pct = hr_random > 0 ? (hr - hr_random) / hr_random * 100.0 : 0.0;

        // 95% bootstrap over users
        std::vector<double> samples;
        samples.reserve(opts.bootstrap_resamples);
        std::uniform_int_distribution<size_t> pick_user(0, n - 1);
        for (size_t b = 0; b < opts.bootstrap_resamples; ++b) {
            double s = 0;
            for (size_t u = 0; u < n; ++u) s += hit[pick_user(rng)][ki];
            s /= static_cast<double>(n);
            samples.push_back(hr_random > 0 ? (s - hr_random) / hr_random * 100.0 : 0.0);
        }
        std::sort(samples.begin(), samples.end());
        rec.ci_low = std::min(percentile(samples, 0.025), rec.improvement_pct);
        rec.ci_high = std::max(percentile(samples, 0.975), rec.improvement_pct);
        report.per_k.push_back(rec);
    }
    return report;
}

std::string DiagnosticReport::to_json() const {
    nlohmann::json j;
    j["n_users"] = n_users;
    j["catalog_size"] = catalog_size;
    j["seed"] = seed;
    j["per_k"] = nlohmann::json::array();
    for (const auto& rec : per_k) {
        nlohmann::json r;
        r["k"] = rec.k;
        r["hr_geotemporal"] = rec.hr_geotemporal;
        r["hr_random"] = rec.hr_random;
        r["hr_random_empirical"] = rec.hr_random_empirical;
        r["improvement_pct"] = rec.improvement_pct;
        r["ci_low"] = rec.ci_low;
        r["ci_high"] = rec.ci_high;
        j["per_k"].push_back(r);
    }
    return j.dump(2) + "\n";
}

}  // namespace gtrec
