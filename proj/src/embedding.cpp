#include "gtrec/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "gtrec/errors.hpp"
#include "gtrec/util.hpp"

namespace gtrec {

EmbeddingMatrix::EmbeddingMatrix(std::vector<std::string> keys, size_t dim,
                                 std::vector<float> rows, bool normalized)
    : keys_(std::move(keys)), dim_(dim), rows_(std::move(rows)), normalized_(normalized) {
    if (rows_.size() != keys_.size() * dim_)
        throw ShapeMismatch("rows size " + std::to_string(rows_.size()) + " != " +
                            std::to_string(keys_.size()) + "x" + std::to_string(dim_));
    for (float v : rows_)
        if (!std::isfinite(v)) throw NonFiniteValue("embedding matrix contains NaN/Inf");
    for (size_t i = 0; i < keys_.size(); ++i)
        if (!index_.emplace(keys_[i], i).second) throw DuplicateKey(keys_[i]);
}

size_t EmbeddingMatrix::index_of(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw MissingEmbedding(key);
    return it->second;
}

void EmbeddingMatrix::l2_normalize_rows() {
    for (size_t i = 0; i < keys_.size(); ++i) {
        float* r = rows_.data() + i * dim_;
        double norm = 0;
        for (size_t j = 0; j < dim_; ++j) norm += double{r[j]} * r[j];
        norm = std::sqrt(norm);
        if (norm == 0) throw ZeroVector("row " + keys_[i] + " has zero norm");
        for (size_t j = 0; j < dim_; ++j) r[j] = static_cast<float>(r[j] / norm);
    }
    normalized_ = true;
}

// File layout (little endian):
//   magic "GTEMB001" | u32 count | u32 dim | u8 normalized
//   count x (u32 key_len, key bytes)
//   count*dim f32 rows
namespace {
constexpr char kMagic[8] = {'G', 'T', 'E', 'M', 'B', '0', '0', '1'};

template <typename T>
void write_raw(std::ostream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::istream& in, const std::string& what) {
    T v{};
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
        throw ShapeMismatch("truncated file while reading " + what);
    return v;
}
}  // namespace

EmbeddingMatrix load_embeddings(const std::string& path, const LoadOptions& opts) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);

    char magic[8];
    if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0)
        throw ParseError(path + ": not an embedding file");
    const uint32_t count = read_raw<uint32_t>(in, "count");
    const uint32_t dim = read_raw<uint32_t>(in, "dim");
    const uint8_t normalized = read_raw<uint8_t>(in, "flag");

    std::vector<std::string> keys;
    keys.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        const uint32_t len = read_raw<uint32_t>(in, "key length");
        std::string key(len, '\0');
        if (!in.read(key.data(), len)) throw ShapeMismatch(path + ": truncated key table");
        keys.push_back(std::move(key));
    }

    std::vector<float> rows(size_t{count} * dim);
    if (!in.read(reinterpret_cast<char*>(rows.data()),
                 static_cast<std::streamsize>(rows.size() * sizeof(float))))
        throw ShapeMismatch(path + ": body shorter than count*dim floats");
    char extra;
    if (in.read(&extra, 1)) throw ShapeMismatch(path + ": trailing bytes after matrix body");

    EmbeddingMatrix m(std::move(keys), dim, std::move(rows), normalized != 0);
    if (opts.normalize && !m.normalized()) m.l2_normalize_rows();
    return m;
}

void write_embeddings(const std::string& path, const EmbeddingMatrix& m) {
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, 8);
    write_raw(out, static_cast<uint32_t>(m.size()));
    write_raw(out, static_cast<uint32_t>(m.dim()));
    write_raw(out, static_cast<uint8_t>(m.normalized() ? 1 : 0));
    for (const std::string& key : m.keys()) {
        write_raw(out, static_cast<uint32_t>(key.size()));
        out.write(key.data(), static_cast<std::streamsize>(key.size()));
    }
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.data().size() * sizeof(float)));
    atomic_write_file(path, out.str());
}

std::vector<float> mock_encode(const std::string& text, size_t dim, uint64_t seed) {
    if (dim < 2) throw ConfigError("mock_encode needs dim >= 2");
    std::mt19937_64 rng(fnv1a64(text) ^ (seed * 0x9e3779b97f4a7c15ull));
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<float> v(dim);
    double norm = 0;
    do {
        norm = 0;
        for (size_t i = 0; i < dim; ++i) {
            v[i] = static_cast<float>(normal(rng));
            norm += double{v[i]} * v[i];
        }
    } while (norm == 0);
    norm = std::sqrt(norm);
    for (float& x : v) x = static_cast<float>(x / norm);
    return v;
}

float cosine_sim(std::span<const float> a, std::span<const float> b) {
    if (a.size() != b.size())
        throw DimMismatch(std::to_string(a.size()) + " vs " + std::to_string(b.size()));
    double dot = 0, na = 0, nb = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += double{a[i]} * b[i];
        na += double{a[i]} * a[i];
        nb += double{b[i]} * b[i];
    }
    if (na == 0 || nb == 0) throw ZeroVector("cosine_sim of zero vector");
    return static_cast<float>(dot / (std::sqrt(na) * std::sqrt(nb)));
}

AttachedGt attach_gt(const std::vector<Interaction>& log, Bucket bucket,
                     const EmbeddingMatrix& context_embeddings) {
    std::set<std::string> missing;
    std::vector<size_t> rows(log.size());
    for (size_t i = 0; i < log.size(); ++i) {
        const std::string key = context_key(bucket_label(log[i].ts_utc, bucket), log[i].location);
        if (!context_embeddings.contains(key)) {
            missing.insert(key);
            continue;
        }
        rows[i] = context_embeddings.index_of(key);
    }
    if (!missing.empty()) {
        std::string msg = "unresolved context keys:";
        for (const auto& k : missing) msg += " " + k;
        throw MissingContext(msg);
    }
    return AttachedGt{&context_embeddings, std::move(rows)};
}

}  // namespace gtrec
