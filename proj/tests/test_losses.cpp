#include "gtrec/losses.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

#include "gtrec/errors.hpp"

using namespace gtrec;

namespace {

std::vector<float> unit2(float x, float y) {
    const float n = std::sqrt(x * x + y * y);
    return {x / n, y / n};
}

}  // namespace

TEST_CASE("ranking_loss frozen values") {
    // high-precision scalar oracle: -ln sig(0) - ln sig(0) = 2 ln 2
    std::vector<double> negs = {0.0};
    CHECK(std::abs(ranking_loss(0.0, negs) - 1.3862943611198906) < 1e-9);

    // -ln sig(2) - ln sig(1)
    negs = {-1.0};
    CHECK(std::abs(ranking_loss(2.0, negs) - 0.4401896985611953) < 1e-6);

    // saturation: -ln sig(30) - ln sig(30) < 1e-9
    negs = {-30.0};
    CHECK(ranking_loss(30.0, negs) < 1e-9);
    CHECK(ranking_loss(30.0, negs) > 0.0);

    // large magnitudes stay finite in log-sum-exp form
    negs = {800.0};
    CHECK(std::isfinite(ranking_loss(-800.0, negs)));
}

TEST_CASE("ranking_loss graph twin agrees with the scalar path") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> dist(0.0, 3.0);
    for (int trial = 0; trial < 50; ++trial) {
        const double sp = dist(rng);
        std::vector<double> sn(1 + trial % 4);
        for (auto& s : sn) s = dist(rng);

        std::vector<ad::Tensor<double>> neg_nodes;
        for (double s : sn) neg_nodes.push_back(ad::Tensor<double>::scalar(s));
        const double via_graph =
            ranking_loss_node(ad::Tensor<double>::scalar(sp), neg_nodes).item();
        CHECK(via_graph == doctest::Approx(ranking_loss(sp, sn)).epsilon(1e-12));
    }
}

TEST_CASE("ranking_loss is monotone in both arguments") {
    // decreases as s_pos grows, decreases as any s_neg falls
    for (double base : {-2.0, 0.0, 1.5}) {
        std::vector<double> negs = {base};
        double prev = ranking_loss(-3.0, negs);
        for (double sp = -2.5; sp <= 3.0; sp += 0.5) {
            const double cur = ranking_loss(sp, negs);
            CHECK(cur < prev);
            prev = cur;
        }
        prev = ranking_loss(base, std::vector<double>{3.0});
        for (double sn = 2.5; sn >= -3.0; sn -= 0.5) {
            const double cur = ranking_loss(base, std::vector<double>{sn});
            CHECK(cur < prev);
            prev = cur;
        }
    }
    std::vector<double> negs = {0.0};
    CHECK(ranking_loss(-5.0, negs) >= 0.0);
}

TEST_CASE("ranking_loss rejects non-finite scores") {
    std::vector<double> negs = {std::nan("")};
    CHECK_THROWS_AS(ranking_loss(0.0, negs), NonFiniteValue);
}

TEST_CASE("cosine aux loss is zero when t equals m+") {
    AuxBatch batch;
    for (int i = 0; i < 4; ++i) {
        auto v = unit2(static_cast<float>(i + 1), static_cast<float>(2 * i - 3));
        batch.anchors.push_back(v);
        batch.positives.push_back(v);
        batch.negatives.push_back({unit2(1, 0)});
    }
    CHECK(aux_loss(batch, AuxKind::cosine) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("cosine aux loss toy value and permutation invariance") {
    AuxBatch batch;
    batch.anchors = {unit2(1, 0), unit2(1, 0)};
    batch.positives = {unit2(1, 0), unit2(1, 1)};  // sims 1 and cos(45deg)
    batch.negatives = {{unit2(0, 1)}, {unit2(0, 1)}};
    const double expected = (0.0 + (1.0 - 1.0 / std::sqrt(2.0))) / 2.0;
    const double loss = aux_loss(batch, AuxKind::cosine);
    CHECK(loss == doctest::Approx(expected).epsilon(1e-7));

    std::swap(batch.anchors[0], batch.anchors[1]);
    std::swap(batch.positives[0], batch.positives[1]);
    std::swap(batch.negatives[0], batch.negatives[1]);
    CHECK(aux_loss(batch, AuxKind::cosine) == doctest::Approx(loss).epsilon(1e-12));
}

TEST_CASE("pairwise aux loss: satisfied margin gives zero") {
    AuxBatch batch;
    batch.anchors = {unit2(1, 0)};
    batch.positives = {unit2(1, 0)};   // sim+ = 1
    batch.negatives = {{unit2(-1, 0)}};  // sim- = -1
    AuxLossOptions opts;
    opts.margin = 0.5;
    CHECK(aux_loss(batch, AuxKind::pairwise, opts) == doctest::Approx(0.0));
}

TEST_CASE("pairwise aux loss frozen toy value") {
    // pairs (sim+, sim-): (0.3, 0.1) -> 0.3; (0.9, -0.2) -> 0; mean 0.15
    // anchors/vectors chosen so the cosines hit those values exactly
    AuxBatch batch;
    const float s2 = std::sqrt(1.f - 0.3f * 0.3f);
    const float s3 = std::sqrt(1.f - 0.1f * 0.1f);
    const float s4 = std::sqrt(1.f - 0.9f * 0.9f);
    const float s5 = std::sqrt(1.f - 0.2f * 0.2f);
    batch.anchors = {{1, 0}, {1, 0}};
    batch.positives = {{0.3f, s2}, {0.9f, s4}};
    batch.negatives = {{{0.1f, s3}}, {{-0.2f, s5}}};
    AuxLossOptions opts;
    opts.margin = 0.5;
    CHECK(aux_loss(batch, AuxKind::pairwise, opts) == doctest::Approx(0.15).epsilon(1e-6));

    opts.margin = 0.0;
    CHECK_THROWS_AS(aux_loss(batch, AuxKind::pairwise, opts), ConfigError);
}

TEST_CASE("pairwise aux loss is bounded by margin + 2 on unit vectors") {
    std::mt19937_64 rng(3);
    std::normal_distribution<float> dist(0.f, 1.f);
    AuxLossOptions opts;
    opts.margin = 0.7;
    for (int trial = 0; trial < 50; ++trial) {
        AuxBatch batch;
        const size_t n = 1 + trial % 5;
        for (size_t i = 0; i < n; ++i) {
            batch.anchors.push_back(unit2(dist(rng), dist(rng)));
            batch.positives.push_back(unit2(dist(rng), dist(rng)));
            batch.negatives.push_back(
                {unit2(dist(rng), dist(rng)), unit2(dist(rng), dist(rng))});
        }
        CHECK(aux_loss(batch, AuxKind::pairwise, opts) <= opts.margin + 2.0 + 1e-9);
    }
}

TEST_CASE("bce aux loss matches the hand-computed cross entropy") {
    // anchor 1: sim+ = 1, neg sim = 0; anchor 2: sim+ = sqrt(1/2), neg sim = -0.25
    // tau = 5; frozen via high-precision evaluation:
    //   0.5 * [ (-ln sig(5) - ln sig(0)) + (-ln sig(5/sqrt 2) - ln sig(1.25)) ]
    const double expected = 0.4902591075536729;
    AuxBatch batch;
    const float q = std::sqrt(0.5f);
    const float s = std::sqrt(1.f - 0.25f * 0.25f);
    batch.anchors = {{1, 0}, {1, 0}};
    batch.positives = {{1, 0}, {q, q}};
    batch.negatives = {{{0, 1}}, {{-0.25f, s}}};
    CHECK(aux_loss(batch, AuxKind::bce) == doctest::Approx(expected).epsilon(1e-6));
}

TEST_CASE("aux batch validation") {
    AuxBatch batch;
    CHECK_THROWS_AS(aux_loss(batch, AuxKind::cosine), ConfigError);
    batch.anchors = {unit2(1, 0), unit2(0, 1)};
    batch.positives = {unit2(1, 0), unit2(0, 1)};
    batch.negatives = {{unit2(1, 1)}, {unit2(1, 1), unit2(1, -1)}};  // ragged
    CHECK_THROWS_AS(aux_loss(batch, AuxKind::bce), ShapeMismatch);
}

TEST_CASE("total_loss arithmetic") {
    CHECK(total_loss(1.7, 42.0, 0.0) == doctest::Approx(1.7));
    CHECK(total_loss(1.7, 0.0, 1.0) == doctest::Approx(1.7));
    CHECK(total_loss(1.0, 0.5, 0.1) == doctest::Approx(1.05));
}
