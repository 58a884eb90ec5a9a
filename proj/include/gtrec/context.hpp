#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gtrec/corpus.hpp"
#include "gtrec/util.hpp"

namespace gtrec {

struct PromptRequest {
    int64_t ts_utc = 0;
    std::string location;
    std::string template_version = "v1";
};

// Validated LLM output for one (date-bucket, location) key.
struct GeoTemporalContext {
    std::vector<std::string> events;
    std::string summary;
    std::string bucket;    // e.g. "2000-07-05" or "2000-W27"
    std::string location;
    std::string provider_id;

    std::string key() const { return context_key(bucket, location); }
    // text handed to the encoder: events joined with the summary
    std::string encoder_text() const;
};

std::string build_prompt(const PromptRequest& req);

// Strips markdown fences, parses JSON, coerces `events` to a string list.
// Throws MalformedResponse / SchemaError.
GeoTemporalContext parse_context_response(const std::string& raw);

// One text-in/text-out call. Implementations: mock (seeded), http
// (endpoint/key from environment), replay (cache only, never callable).
class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string complete(const std::string& prompt) = 0;
    virtual std::string id() const = 0;
};

// Deterministic synthetic provider: same (prompt, seed) -> same JSON reply.
std::unique_ptr<CompletionProvider> make_mock_provider(uint64_t seed);

struct HttpProviderConfig {
    std::string url;      // e.g. http://host:port/v1/complete
    std::string api_key;  // optional bearer token
};
// Reads GTREC_PROVIDER_URL / GTREC_PROVIDER_KEY when fields are empty.
std::unique_ptr<CompletionProvider> make_http_provider(HttpProviderConfig cfg = {});

// Always throws: forces enrich() to be fully served from the cache.
std::unique_ptr<CompletionProvider> make_replay_provider();

// JSONL-backed cache keyed by (bucket, location, template_version).
class ContextCache {
public:
    ContextCache() = default;
    explicit ContextCache(std::string path);  // loads if the file exists

    const GeoTemporalContext* find(const std::string& bucket, const std::string& location,
                                   const std::string& template_version) const;
    void insert(const GeoTemporalContext& ctx, const std::string& template_version);
    void save() const;  // rewrites the backing file in insertion order
    size_t size() const { return order_.size(); }
    const std::string& path() const { return path_; }
    std::vector<GeoTemporalContext> entries() const;

private:
    std::string path_;
    std::map<std::string, GeoTemporalContext> entries_;  // key includes template_version
    std::vector<std::string> order_;
};

struct EnrichOptions {
    Bucket bucket = Bucket::day;
    std::string template_version = "v1";
    int max_attempts = 3;
    int backoff_ms = 100;        // doubled per retry
    bool allow_partial = false;  // record misses instead of throwing
    int parallelism = 1;         // bounded provider-call parallelism
};

struct EnrichResult {
    // context_key(bucket, location) -> context
    std::map<std::string, GeoTemporalContext> contexts;
    std::vector<std::string> misses;  // keys the provider could not serve
    size_t provider_calls = 0;        // attempts actually issued
};

// One context per distinct (bucket, location) key in the log; the cache is
// consulted before the provider and updated with fresh replies.
EnrichResult enrich(const std::vector<Interaction>& log, CompletionProvider& provider,
                    ContextCache& cache, const EnrichOptions& opts = {});

}  // namespace gtrec
