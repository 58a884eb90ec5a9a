#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "gtrec/context.hpp"
#include "gtrec/corpus.hpp"

namespace gtrec {

// Frozen dense matrix of row vectors keyed by item id or context key.
// Immutable after load; shareable across threads.
class EmbeddingMatrix {
public:
    EmbeddingMatrix() = default;
    EmbeddingMatrix(std::vector<std::string> keys, size_t dim, std::vector<float> rows,
                    bool normalized);

    size_t size() const { return keys_.size(); }
    size_t dim() const { return dim_; }
    bool normalized() const { return normalized_; }
    const std::vector<std::string>& keys() const { return keys_; }
    const std::vector<float>& data() const { return rows_; }

    std::span<const float> row(size_t i) const { return {rows_.data() + i * dim_, dim_}; }
    bool contains(const std::string& key) const { return index_.count(key) > 0; }
    size_t index_of(const std::string& key) const;  // throws MissingEmbedding
    std::span<const float> row_of(const std::string& key) const { return row(index_of(key)); }

    void l2_normalize_rows();

private:
    std::vector<std::string> keys_;
    size_t dim_ = 0;
    std::vector<float> rows_;  // size * dim, row-major
    bool normalized_ = false;
    std::unordered_map<std::string, size_t> index_;
};

struct LoadOptions {
    // Rows from files not marked normalized are normalized on load unless
    // disabled. Files already marked normalized are trusted as-is so that
    // write/load round-trips are bit-exact.
    bool normalize = true;
};

EmbeddingMatrix load_embeddings(const std::string& path, const LoadOptions& opts = {});
void write_embeddings(const std::string& path, const EmbeddingMatrix& m);

// Deterministic stand-in for a frozen text encoder: a seeded hash expansion
// of the text, L2-normalized. Carries no semantic contract.
std::vector<float> mock_encode(const std::string& text, size_t dim, uint64_t seed);

float cosine_sim(std::span<const float> a, std::span<const float> b);

// Per-interaction geo-temporal vector assignment: interaction i resolves to
// context_embeddings row of its (bucket, location) key.
struct AttachedGt {
    const EmbeddingMatrix* contexts = nullptr;
    std::vector<size_t> row_of_interaction;  // parallel to the log

    std::span<const float> t(size_t interaction_index) const {
        return contexts->row(row_of_interaction[interaction_index]);
    }
};

AttachedGt attach_gt(const std::vector<Interaction>& log, Bucket bucket,
                     const EmbeddingMatrix& context_embeddings);

}  // namespace gtrec
