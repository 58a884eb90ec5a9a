#include "gtrec/embedding.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "gtrec/errors.hpp"

using namespace gtrec;

namespace {
std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("embedding matrix construction guards") {
    CHECK_NOTHROW(EmbeddingMatrix({"a", "b"}, 4, std::vector<float>(8, 0.5f), false));
    CHECK_THROWS_AS(EmbeddingMatrix({"a", "b"}, 4, std::vector<float>(7, 0.5f), false),
                    ShapeMismatch);
    CHECK_THROWS_AS(EmbeddingMatrix({"a", "a"}, 2, std::vector<float>(4, 0.5f), false),
                    DuplicateKey);
    std::vector<float> bad = {0.f, 1.f, std::nanf(""), 0.f};
    CHECK_THROWS_AS(EmbeddingMatrix({"a", "b"}, 2, bad, false), NonFiniteValue);
}

TEST_CASE("write/load round-trip is bit exact") {
    const auto path = temp_path("gtrec_emb_rt.bin");
    std::mt19937 rng(5);
    std::uniform_real_distribution<float> dist(-1.f, 1.f);
    std::vector<float> rows(6 * 16);
    for (auto& v : rows) v = dist(rng);
    EmbeddingMatrix m({"a", "b", "c", "d", "e", "f"}, 16, rows, false);
    m.l2_normalize_rows();
    write_embeddings(path, m);
    auto loaded = load_embeddings(path);
    CHECK(loaded.keys() == m.keys());
    CHECK(loaded.dim() == 16);
    CHECK(loaded.normalized());
    REQUIRE(loaded.data().size() == m.data().size());
    for (size_t i = 0; i < m.data().size(); ++i) {
        CHECK(std::memcmp(&loaded.data()[i], &m.data()[i], sizeof(float)) == 0);
    }
}

TEST_CASE("unnormalized files are normalized on load by default") {
    const auto path = temp_path("gtrec_emb_norm.bin");
    EmbeddingMatrix m({"x", "y"}, 4, {3, 0, 0, 0, 0, 0, 4, 0}, false);
    write_embeddings(path, m);

    auto normalized = load_embeddings(path);
    CHECK(normalized.normalized());
    CHECK(normalized.row(0)[0] == doctest::Approx(1.0));

    auto raw = load_embeddings(path, LoadOptions{.normalize = false});
    CHECK(!raw.normalized());
    CHECK(raw.row(0)[0] == doctest::Approx(3.0));
}

TEST_CASE("truncated body raises ShapeMismatch") {
    const auto path = temp_path("gtrec_emb_trunc.bin");
    EmbeddingMatrix m({"a", "b"}, 4, std::vector<float>(8, 0.25f), true);
    write_embeddings(path, m);
    auto content = read_text_file(path);
    content.resize(content.size() - 5);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.close();
    CHECK_THROWS_AS(load_embeddings(path), ShapeMismatch);
}

TEST_CASE("mock_encode is deterministic and unit norm") {
    auto a = mock_encode("some context text", 64, 7);
    auto b = mock_encode("some context text", 64, 7);
    CHECK(a == b);
    double norm = 0;
    for (float v : a) norm += double{v} * v;
    CHECK(std::abs(std::sqrt(norm) - 1.0) < 1e-6);

    auto c = mock_encode("some context text", 64, 8);
    CHECK(a != c);
}

TEST_CASE("mock_encode: 1000 distinct texts have low mean |cosine|") {
    const size_t n = 1000, dim = 64;
    std::vector<std::vector<float>> vs;
    vs.reserve(n);
    for (size_t i = 0; i < n; ++i)
        vs.push_back(mock_encode("text number " + std::to_string(i), dim, 7));
    // mean |cos| over a deterministic subsample of pairs
    double total = 0;
    size_t count = 0;
    for (size_t i = 0; i < n; i += 7)
        for (size_t j = i + 1; j < n; j += 13) {
            total += std::abs(cosine_sim(vs[i], vs[j]));
            ++count;
        }
    CHECK(count > 500);
    CHECK(total / static_cast<double>(count) < 0.5);
}

TEST_CASE("cosine_sim basics") {
    std::vector<float> v = {0.6f, 0.8f};
    CHECK(cosine_sim(v, v) == doctest::Approx(1.0));
    std::vector<float> x = {1, 0}, y = {0, 1}, nx = {-1, 0};
    CHECK(cosine_sim(x, y) == doctest::Approx(0.0));
    CHECK(cosine_sim(x, nx) == doctest::Approx(-1.0));
    CHECK(cosine_sim(x, y) == cosine_sim(y, x));
    std::vector<float> zero = {0, 0};
    CHECK_THROWS_AS(cosine_sim(x, zero), ZeroVector);
    std::vector<float> wide = {1, 2, 3};
    CHECK_THROWS_AS(cosine_sim(x, wide), DimMismatch);
}

TEST_CASE("cosine_sim stays within [-1, 1] on random inputs") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<float> dist(-3.f, 3.f);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<float> a(8), b(8);
        for (auto& v : a) v = dist(rng);
        for (auto& v : b) v = dist(rng);
        if (std::all_of(a.begin(), a.end(), [](float v) { return v == 0; })) continue;
        if (std::all_of(b.begin(), b.end(), [](float v) { return v == 0; })) continue;
        const float s = cosine_sim(a, b);
        CHECK(std::abs(s) <= 1.0f + 1e-9f);
        CHECK(s == cosine_sim(b, a));
    }
}

TEST_CASE("attach_gt resolves every interaction or reports all misses") {
    std::vector<Interaction> log;
    for (int i = 0; i < 10; ++i)
        log.push_back({"u" + std::to_string(i % 3), "it" + std::to_string(i),
                       962798400 + (i % 2) * 86400, "X"});
    EmbeddingMatrix ctx({"2000-07-05|X", "2000-07-06|X"}, 4,
                        {1, 0, 0, 0, 0, 1, 0, 0}, true);
    auto attached = attach_gt(log, Bucket::day, ctx);
    REQUIRE(attached.row_of_interaction.size() == 10);
    for (size_t i = 0; i < log.size(); ++i) {
        const size_t expect = (i % 2 == 0) ? 0 : 1;
        CHECK(attached.row_of_interaction[i] == expect);
    }
    // same user, same day, same place -> identical vectors
    CHECK(attached.t(0).data() == attached.t(2).data());

    EmbeddingMatrix missing_one({"2000-07-05|X"}, 4, {1, 0, 0, 0}, true);
    try {
        attach_gt(log, Bucket::day, missing_one);
        FAIL("expected MissingContext");
    } catch (const MissingContext& e) {
        CHECK(std::string(e.what()).find("2000-07-06|X") != std::string::npos);
    }
}
