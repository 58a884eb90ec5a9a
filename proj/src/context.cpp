#include "gtrec/context.hpp"

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gtrec/errors.hpp"

namespace gtrec {

using nlohmann::json;

std::string GeoTemporalContext::encoder_text() const {
    std::string text;
    for (const auto& e : events) {
        if (!text.empty()) text += ". ";
        text += e;
    }
    if (!summary.empty()) {
        if (!text.empty()) text += ". ";
        text += summary;
    }
    return text;
}

namespace {

const std::map<std::string, std::string>& templates() {
    static const std::map<std::string, std::string> t = {
        {"v1",
         "You are a time-context assistant for a recommendation system.\n"
         "A user interacted with content at the following time and place:\n"
         "- UTC time: {timestamp}\n"
         "- Location: {location}\n"
         "Return:\n"
         "1. \"events\": a list of relevant real-world events shortly before this time in this "
         "region (holidays, cultural celebrations, sports, entertainment releases, notable "
         "public events).\n"
         "2. \"summary\": a 2-3 sentence description of the broader context and how it might "
         "influence user interests.\n"
         "Format your answer as valid JSON with exactly the fields \"events\" and \"summary\"."}};
    return t;
}

std::string replace_all(std::string text, const std::string& from, const std::string& to) {
    size_t pos = 0;
    while ((pos = text.find(from, pos)) != std::string::npos) {
        text.replace(pos, from.size(), to);
        pos += to.size();
    }
    return text;
}

}  // namespace

std::string build_prompt(const PromptRequest& req) {
    if (trim(req.location).empty()) throw ConfigError("PromptRequest.location is empty");
    auto it = templates().find(req.template_version);
    if (it == templates().end()) throw UnknownTemplate(req.template_version);
    std::string out = replace_all(it->second, "{timestamp}", iso8601_utc(req.ts_utc));
    return replace_all(out, "{location}", req.location);
}

namespace {

std::string strip_fences(const std::string& raw) {
    std::string s = trim(raw);
    if (s.rfind("```", 0) != 0) return s;
    size_t first_nl = s.find('\n');
    if (first_nl == std::string::npos) return s;
    size_t last_fence = s.rfind("```");
    if (last_fence <= first_nl) return s;
    return trim(s.substr(first_nl + 1, last_fence - first_nl - 1));
}

}  // namespace

GeoTemporalContext parse_context_response(const std::string& raw) {
    const std::string body = strip_fences(raw);
    json j;
    try {
        j = json::parse(body);
    } catch (const json::exception& e) {
        throw MalformedResponse(e.what());
    }
    if (!j.is_object() || !j.contains("events") || !j.contains("summary"))
        throw SchemaError("response must be an object with 'events' and 'summary'");

    GeoTemporalContext ctx;
    const json& ev = j["events"];
    if (ev.is_array()) {
        for (const json& e : ev) {
            std::string s = e.is_string() ? e.get<std::string>() : e.dump();
            s = trim(s);
            if (!s.empty()) ctx.events.push_back(std::move(s));
        }
    } else if (ev.is_string()) {
        std::string s = trim(ev.get<std::string>());
        if (!s.empty()) ctx.events.push_back(std::move(s));
    } else {
        throw SchemaError("'events' must be a list of strings");
    }

    if (!j["summary"].is_string()) throw SchemaError("'summary' must be a string");
    ctx.summary = trim(j["summary"].get<std::string>());
    if (ctx.summary.size() > 2000) ctx.summary.resize(2000);
    if (ctx.events.empty() && ctx.summary.empty())
        throw SchemaError("both 'events' and 'summary' are empty");
    return ctx;
}

// ---------------------------------------------------------------------------
// providers

namespace {

class MockProvider final : public CompletionProvider {
public:
    explicit MockProvider(uint64_t seed) : seed_(seed) {}

    std::string complete(const std::string& prompt) override {
        const uint64_t h = fnv1a64(prompt) ^ (seed_ * 0x9e3779b97f4a7c15ull);
        static const char* kEventKinds[] = {"festival",   "holiday",  "concert", "match",
                                            "premiere",   "election", "parade",  "exhibition",
                                            "tournament", "market"};
        static const char* kMoods[] = {"festive", "quiet", "busy", "seasonal", "celebratory"};
        const size_t n_events = 1 + (h >> 8) % 3;
        json events = json::array();
        for (size_t i = 0; i < n_events; ++i) {
            const uint64_t e = fnv1a64(std::to_string(i), h);
            events.push_back(std::string("local ") + kEventKinds[e % 10] + " " +
                             std::to_string(e % 9000 + 1000));
        }
        json j;
        j["events"] = events;
        j["summary"] = std::string("A ") + kMoods[(h >> 16) % 5] +
                       " period in the region; interest code " + std::to_string(h % 100000) + ".";
        return j.dump();
    }

    std::string id() const override { return "mock:" + std::to_string(seed_); }

private:
    uint64_t seed_;
};

class HttpProvider final : public CompletionProvider {
public:
    explicit HttpProvider(HttpProviderConfig cfg) : cfg_(std::move(cfg)) {
        if (cfg_.url.empty()) {
            const char* url = std::getenv("GTREC_PROVIDER_URL");
            if (!url) throw ConfigError("http provider needs GTREC_PROVIDER_URL or --provider-url");
            cfg_.url = url;
        }
        if (cfg_.api_key.empty()) {
            if (const char* key = std::getenv("GTREC_PROVIDER_KEY")) cfg_.api_key = key;
        }
        // split scheme://host:port from path
        const auto scheme_end = cfg_.url.find("://");
        const size_t host_start = scheme_end == std::string::npos ? 0 : scheme_end + 3;
        const size_t path_start = cfg_.url.find('/', host_start);
        base_ = path_start == std::string::npos ? cfg_.url : cfg_.url.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : cfg_.url.substr(path_start);
    }

    std::string complete(const std::string& prompt) override {
        httplib::Client client(base_);
        client.set_read_timeout(60, 0);
        httplib::Headers headers;
        if (!cfg_.api_key.empty()) headers.emplace("Authorization", "Bearer " + cfg_.api_key);
        json body;
        body["prompt"] = prompt;
        auto res = client.Post(path_, headers, body.dump(), "application/json");
        if (!res) throw ProviderError("no response from " + cfg_.url);
        if (res->status != 200)
            throw ProviderError("HTTP " + std::to_string(res->status) + " from " + cfg_.url);
        // accept either a raw completion or {"text": ...}
        try {
            json j = json::parse(res->body);
            if (j.is_object() && j.contains("text") && j["text"].is_string())
                return j["text"].get<std::string>();
        } catch (const json::exception&) {
        }
        return res->body;
    }

    std::string id() const override { return "http:" + cfg_.url; }

private:
    HttpProviderConfig cfg_;
    std::string base_;
    std::string path_;
};

class ReplayProvider final : public CompletionProvider {
public:
    std::string complete(const std::string&) override {
        throw ProviderError("replay provider cannot issue calls; key missing from cache");
    }
    std::string id() const override { return "replay"; }
};

}  // namespace

std::unique_ptr<CompletionProvider> make_mock_provider(uint64_t seed) {
    return std::make_unique<MockProvider>(seed);
}

std::unique_ptr<CompletionProvider> make_http_provider(HttpProviderConfig cfg) {
    return std::make_unique<HttpProvider>(std::move(cfg));
}

std::unique_ptr<CompletionProvider> make_replay_provider() {
    return std::make_unique<ReplayProvider>();
}

// ---------------------------------------------------------------------------
// cache

ContextCache::ContextCache(std::string path) : path_(std::move(path)) {
    std::ifstream in(path_);
    if (!in) return;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            GeoTemporalContext ctx;
            ctx.bucket = j.at("bucket").get<std::string>();
            ctx.location = j.at("location").get<std::string>();
            ctx.events = j.at("events").get<std::vector<std::string>>();
            ctx.summary = j.at("summary").get<std::string>();
            ctx.provider_id = j.value("provider_id", "");
            insert(ctx, j.at("template_version").get<std::string>());
        } catch (const json::exception& e) {
            throw ParseError(path_ + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

namespace {
std::string cache_key(const std::string& bucket, const std::string& location,
                      const std::string& tv) {
    return bucket + "|" + location + "|" + tv;
}
}  // namespace

const GeoTemporalContext* ContextCache::find(const std::string& bucket,
                                             const std::string& location,
                                             const std::string& template_version) const {
    auto it = entries_.find(cache_key(bucket, location, template_version));
    return it == entries_.end() ? nullptr : &it->second;
}

void ContextCache::insert(const GeoTemporalContext& ctx, const std::string& template_version) {
    const std::string key = cache_key(ctx.bucket, ctx.location, template_version);
    if (entries_.emplace(key, ctx).second) order_.push_back(key);
}

void ContextCache::save() const {
    if (path_.empty()) throw IoError("cache has no backing file");
    std::ostringstream out;
    for (const std::string& key : order_) {
        const GeoTemporalContext& ctx = entries_.at(key);
        const auto tv_pos = key.rfind('|');
        json j;
        j["bucket"] = ctx.bucket;
        j["location"] = ctx.location;
        j["template_version"] = key.substr(tv_pos + 1);
        j["events"] = ctx.events;
        j["summary"] = ctx.summary;
        j["provider_id"] = ctx.provider_id;
        out << j.dump() << "\n";
    }
    atomic_write_file(path_, out.str());
}

std::vector<GeoTemporalContext> ContextCache::entries() const {
    std::vector<GeoTemporalContext> out;
    out.reserve(order_.size());
    for (const std::string& key : order_) out.push_back(entries_.at(key));
    return out;
}

// ---------------------------------------------------------------------------
// enrich

namespace {

struct KeyWork {
    std::string bucket;
    std::string location;
    int64_t ts = 0;  // representative timestamp (earliest in bucket)
};

GeoTemporalContext fetch_one(const KeyWork& work, CompletionProvider& provider,
                             const EnrichOptions& opts, size_t& calls) {
    PromptRequest req{work.ts, work.location, opts.template_version};
    const std::string prompt = build_prompt(req);
    std::string last_error;
    int delay = opts.backoff_ms;
    for (int attempt = 0; attempt < opts.max_attempts; ++attempt) {
        if (attempt > 0 && delay > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(delay));
            delay *= 2;
        }
        ++calls;
        try {
            GeoTemporalContext ctx = parse_context_response(provider.complete(prompt));
            ctx.bucket = work.bucket;
            ctx.location = work.location;
            ctx.provider_id = provider.id();
            return ctx;
        } catch (const Error& e) {
            last_error = e.what();
        }
    }
    throw ProviderExhausted(context_key(work.bucket, work.location) + " after " +
                            std::to_string(opts.max_attempts) + " attempts: " + last_error);
}

}  // namespace

EnrichResult enrich(const std::vector<Interaction>& log, CompletionProvider& provider,
                    ContextCache& cache, const EnrichOptions& opts) {
    // distinct (bucket, location) keys, each with its earliest timestamp
    std::map<std::string, KeyWork> keys;
    for (const Interaction& it : log) {
        const std::string bucket = bucket_label(it.ts_utc, opts.bucket);
        const std::string key = context_key(bucket, it.location);
        auto [pos, inserted] = keys.emplace(key, KeyWork{bucket, it.location, it.ts_utc});
        if (!inserted && it.ts_utc < pos->second.ts) pos->second.ts = it.ts_utc;
    }

    EnrichResult result;
    std::vector<const KeyWork*> pending;
    for (const auto& [key, work] : keys) {
        if (const GeoTemporalContext* hit =
                cache.find(work.bucket, work.location, opts.template_version)) {
            result.contexts[key] = *hit;
        } else {
            pending.push_back(&work);
        }
    }

    std::mutex mu;  // guards result, cache and the call counter
    auto run_range = [&](size_t begin, size_t end) {
        for (size_t i = begin; i < end; ++i) {
            const KeyWork& work = *pending[i];
            size_t calls = 0;
            try {
                GeoTemporalContext ctx = fetch_one(work, provider, opts, calls);
                std::lock_guard<std::mutex> lock(mu);
                result.provider_calls += calls;
                cache.insert(ctx, opts.template_version);
                result.contexts[ctx.key()] = std::move(ctx);
            } catch (const ProviderExhausted&) {
                std::lock_guard<std::mutex> lock(mu);
                result.provider_calls += calls;
                result.misses.push_back(context_key(work.bucket, work.location));
                if (!opts.allow_partial) throw;
            }
        }
    };

    const int workers = std::max(1, opts.parallelism);
    if (workers == 1 || pending.size() <= 1) {
        run_range(0, pending.size());
    } else {
        std::vector<std::thread> threads;
        std::exception_ptr first_error;
        const size_t chunk = (pending.size() + workers - 1) / workers;
        for (int w = 0; w < workers; ++w) {
            const size_t begin = std::min(pending.size(), w * chunk);
            const size_t end = std::min(pending.size(), begin + chunk);
            if (begin == end) continue;
            threads.emplace_back([&, begin, end] {
                try {
                    run_range(begin, end);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!first_error) first_error = std::current_exception();
                }
            });
        }
        for (auto& t : threads) t.join();
        if (first_error) std::rethrow_exception(first_error);
    }

    std::sort(result.misses.begin(), result.misses.end());
    return result;
}

}  // namespace gtrec
