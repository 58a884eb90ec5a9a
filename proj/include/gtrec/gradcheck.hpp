#pragma once

// Central finite differences against analytic reverse-mode gradients.
// The computation under test must be deterministic (no dropout).

#include <algorithm>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "gtrec/autograd.hpp"

namespace gtrec::ad {

template <typename T>
struct GradCheckEntry {
    std::string name;
    T max_rel_err{0};
    T max_abs_err{0};
    size_t checked_coords = 0;
};

template <typename T>
struct GradCheckReport {
    std::vector<GradCheckEntry<T>> entries;
    T tolerance{0};
    bool pass = false;

    std::string summary() const {
        std::string s;
        for (const auto& e : entries) {
            s += e.name + ": rel " + std::to_string(static_cast<double>(e.max_rel_err)) +
                 " abs " + std::to_string(static_cast<double>(e.max_abs_err)) +
                 (e.max_rel_err <= tolerance ? "" : "  <-- FAIL") + "\n";
        }
        return s;
    }
};

struct GradCheckOptions {
    double eps = 1e-4;
    double tol = 1e-3;
    size_t max_coords_per_param = 24;  // sampled when a parameter is larger
    uint64_t seed = 0;
};

// f rebuilds the forward computation from the current parameter values and
// returns the scalar loss tensor.
template <typename T>
GradCheckReport<T> grad_check(const std::function<Tensor<T>()>& f,
                              std::vector<std::pair<std::string, Tensor<T>>> params,
                              const GradCheckOptions& opts = {}) {
    GradCheckReport<T> report;
    report.tolerance = static_cast<T>(opts.tol);

    for (auto& [name, p] : params) p.zero_grad();
    Tensor<T> loss = f();
    backward(loss);

    std::mt19937_64 rng(opts.seed);
    const T eps = static_cast<T>(opts.eps);
    report.pass = true;
    for (auto& [name, p] : params) {
        GradCheckEntry<T> entry;
        entry.name = name;
        const std::vector<T> analytic = p.grad();

        std::vector<size_t> coords(p.numel());
        for (size_t i = 0; i < coords.size(); ++i) coords[i] = i;
        if (coords.size() > opts.max_coords_per_param) {
            std::shuffle(coords.begin(), coords.end(), rng);
            coords.resize(opts.max_coords_per_param);
        }

        for (size_t c : coords) {
            const T saved = p.values_mut()[c];
            p.values_mut()[c] = saved + eps;
            const T up = f().item();
            p.values_mut()[c] = saved - eps;
            const T down = f().item();
            p.values_mut()[c] = saved;

            const T numeric = (up - down) / (T{2} * eps);
            const T a = analytic[c];
            const T abs_err = std::abs(a - numeric);
            const T denom = std::max({std::abs(a), std::abs(numeric), T{1e-8}});
            entry.max_abs_err = std::max(entry.max_abs_err, abs_err);
            entry.max_rel_err = std::max(entry.max_rel_err, abs_err / denom);
            ++entry.checked_coords;
        }
        if (entry.max_rel_err > report.tolerance) report.pass = false;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace gtrec::ad
