#include "gtrec/context.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

#include <httplib.h>
#include <json.hpp>

#include "gtrec/errors.hpp"
#include "gtrec/util.hpp"

using namespace gtrec;

namespace {

std::vector<Interaction> small_log() {
    return {
        {"u1", "a", 962798400, "New Hampshire, USA"},  // 2000-07-05
        {"u1", "b", 962802000, "New Hampshire, USA"},  // same day, same place
        {"u2", "c", 962884800, "Seattle, USA"},        // 2000-07-06
    };
}

// scripted provider for retry tests
class ScriptedProvider final : public CompletionProvider {
public:
    explicit ScriptedProvider(std::vector<std::string> replies) : replies_(std::move(replies)) {}
    std::string complete(const std::string&) override {
        if (calls_ >= replies_.size()) throw ProviderError("script exhausted");
        return replies_[calls_++];
    }
    std::string id() const override { return "scripted"; }
    size_t calls() const { return calls_; }

private:
    std::vector<std::string> replies_;
    size_t calls_ = 0;
};

}  // namespace

TEST_CASE("build_prompt substitutes timestamp and location") {
    PromptRequest req{962798400, "New Hampshire, USA", "v1"};
    const std::string p1 = build_prompt(req);
    CHECK(p1.find("2000-07-05T12:00:00Z") != std::string::npos);
    CHECK(p1.find("New Hampshire, USA") != std::string::npos);
    CHECK(p1.find("events") != std::string::npos);
    CHECK(p1.find("summary") != std::string::npos);
    CHECK(p1 == build_prompt(req));  // byte-identical on repeat

    req.location = "  ";
    CHECK_THROWS_AS(build_prompt(req), ConfigError);
    req.location = "X";
    req.template_version = "nope";
    CHECK_THROWS_AS(build_prompt(req), UnknownTemplate);
}

TEST_CASE("parse_context_response accepts plain and fenced JSON") {
    const std::string body =
        R"({"events":["Independence Day"],"summary":"Post-holiday summer weekend."})";
    auto ctx = parse_context_response(body);
    CHECK(ctx.events == std::vector<std::string>{"Independence Day"});
    CHECK(ctx.summary == "Post-holiday summer weekend.");

    auto fenced = parse_context_response("```json\n" + body + "\n```");
    CHECK(fenced.events == ctx.events);
    CHECK(fenced.summary == ctx.summary);

    CHECK_THROWS_AS(parse_context_response("not json at all"), MalformedResponse);
    CHECK_THROWS_AS(parse_context_response(R"({"events":["x"]})"), SchemaError);
    CHECK_THROWS_AS(parse_context_response(R"({"summary":2,"events":[]})"), SchemaError);
    // extraneous keys ignored
    auto extra = parse_context_response(R"({"events":[],"summary":"s","mood":"?"})");
    CHECK(extra.summary == "s");
}

TEST_CASE("serialize/parse round-trip through the cache file") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "gtrec_cache_rt.jsonl").string();
    fs::remove(path);
    {
        ContextCache cache(path);
        GeoTemporalContext ctx;
        ctx.events = {"event one", "event two"};
        ctx.summary = "a summary";
        ctx.bucket = "2000-07-05";
        ctx.location = "NH, USA";
        ctx.provider_id = "mock:7";
        cache.insert(ctx, "v1");
        cache.save();
    }
    const std::string first = read_text_file(path);
    ContextCache reloaded(path);
    REQUIRE(reloaded.size() == 1);
    const auto* hit = reloaded.find("2000-07-05", "NH, USA", "v1");
    REQUIRE(hit != nullptr);
    CHECK(hit->events == std::vector<std::string>{"event one", "event two"});
    reloaded.save();
    CHECK(read_text_file(path) == first);  // byte-identical persistence
}

TEST_CASE("mock provider is deterministic and location-sensitive") {
    auto provider = make_mock_provider(7);
    PromptRequest req{962798400, "New Hampshire, USA", "v1"};
    const std::string a = provider->complete(build_prompt(req));
    const std::string b = provider->complete(build_prompt(req));
    CHECK(a == b);
    auto ctx = parse_context_response(a);
    CHECK(!ctx.summary.empty());

    // different locations -> different events (no collisions over a test set)
    std::set<std::string> replies;
    for (int i = 0; i < 50; ++i) {
        req.location = "Location " + std::to_string(i);
        replies.insert(provider->complete(build_prompt(req)));
    }
    CHECK(replies.size() == 50);

    auto other_seed = make_mock_provider(8);
    req.location = "New Hampshire, USA";
    CHECK(other_seed->complete(build_prompt(req)) != a);
}

TEST_CASE("enrich calls the provider once per distinct key and honors the cache") {
    auto provider = make_mock_provider(7);
    ContextCache cache;
    EnrichOptions opts;
    opts.backoff_ms = 0;

    auto result = enrich(small_log(), *provider, cache, opts);
    CHECK(result.contexts.size() == 2);  // two distinct (day, location) keys
    CHECK(result.provider_calls == 2);
    CHECK(result.contexts.count("2000-07-05|New Hampshire, USA") == 1);
    CHECK(result.contexts.count("2000-07-06|Seattle, USA") == 1);

    auto warm = enrich(small_log(), *provider, cache, opts);
    CHECK(warm.provider_calls == 0);
    CHECK(warm.contexts.size() == 2);
}

TEST_CASE("enrich key count bound: 1000 interactions, 30 keys, <= 30 calls") {
    std::vector<Interaction> log;
    for (int i = 0; i < 1000; ++i) {
        const int key = i % 30;
        log.push_back({"u" + std::to_string(i % 100), "it" + std::to_string(i),
                       962798400 + (key / 3) * 86400, "Region " + std::to_string(key % 3)});
    }
    auto provider = make_mock_provider(3);
    ContextCache cache;
    EnrichOptions opts;
    opts.backoff_ms = 0;
    auto result = enrich(log, *provider, cache, opts);
    CHECK(result.contexts.size() == 30);
    CHECK(result.provider_calls <= 30);
}

TEST_CASE("enrich retries malformed replies then succeeds") {
    ScriptedProvider provider({"garbage", "{\"oops\": true}",
                               R"({"events":["ok"],"summary":"fine"})"});
    ContextCache cache;
    EnrichOptions opts;
    opts.backoff_ms = 0;
    std::vector<Interaction> log = {{"u", "i", 962798400, "X"}};
    auto result = enrich(log, provider, cache, opts);
    CHECK(result.contexts.size() == 1);
    CHECK(result.provider_calls == 3);
    CHECK(provider.calls() == 3);
}

TEST_CASE("enrich raises ProviderExhausted, or records the miss when partial") {
    std::vector<Interaction> log = {{"u", "i", 962798400, "X"}};
    EnrichOptions opts;
    opts.backoff_ms = 0;
    {
        ScriptedProvider provider({"bad", "bad", "bad"});
        ContextCache cache;
        CHECK_THROWS_AS(enrich(log, provider, cache, opts), ProviderExhausted);
    }
    {
        ScriptedProvider provider({"bad", "bad", "bad"});
        ContextCache cache;
        opts.allow_partial = true;
        auto result = enrich(log, provider, cache, opts);
        CHECK(result.contexts.empty());
        REQUIRE(result.misses.size() == 1);
        CHECK(result.misses[0] == "2000-07-05|X");
    }
}

TEST_CASE("replay provider serves only from cache") {
    auto mock = make_mock_provider(7);
    ContextCache cache;
    EnrichOptions opts;
    opts.backoff_ms = 0;
    enrich(small_log(), *mock, cache, opts);

    auto replay = make_replay_provider();
    auto warm = enrich(small_log(), *replay, cache, opts);
    CHECK(warm.provider_calls == 0);

    ContextCache empty_cache;
    CHECK_THROWS_AS(enrich(small_log(), *replay, empty_cache, opts), ProviderExhausted);
}

TEST_CASE("cache round-trip yields identical context maps and zero calls") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "gtrec_cache_warm.jsonl").string();
    fs::remove(path);

    auto provider = make_mock_provider(7);
    EnrichOptions opts;
    opts.backoff_ms = 0;
    std::map<std::string, GeoTemporalContext> before;
    {
        ContextCache cache(path);
        before = enrich(small_log(), *provider, cache, opts).contexts;
        cache.save();
    }
    ContextCache reloaded(path);
    auto replay = make_replay_provider();
    auto after = enrich(small_log(), *replay, reloaded, opts);
    CHECK(after.provider_calls == 0);
    REQUIRE(after.contexts.size() == before.size());
    for (const auto& [key, ctx] : before) {
        CHECK(after.contexts.at(key).events == ctx.events);
        CHECK(after.contexts.at(key).summary == ctx.summary);
    }
}

TEST_CASE("http provider talks to a local endpoint") {
    httplib::Server server;
    server.Post("/v1/complete", [](const httplib::Request& req, httplib::Response& res) {
        auto j = nlohmann::json::parse(req.body);
        nlohmann::json out;
        out["text"] = R"({"events":["served over http"],"summary":"echo for )" +
                      std::to_string(j.at("prompt").get<std::string>().size()) + " bytes\"}";
        res.set_content(out.dump(), "application/json");
    });
    const int port = server.bind_to_any_port("127.0.0.1");
    REQUIRE(port > 0);
    std::thread t([&] { server.listen_after_bind(); });
    server.wait_until_ready();

    HttpProviderConfig cfg;
    cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/v1/complete";
    auto provider = make_http_provider(cfg);
    auto ctx = parse_context_response(provider->complete("hello"));
    CHECK(ctx.events == std::vector<std::string>{"served over http"});

    server.stop();
    t.join();
}

TEST_CASE("bucket labels") {
    CHECK(bucket_label(962798400, Bucket::day) == "2000-07-05");
    CHECK(bucket_label(962798400, Bucket::week) == "2000-W27");
    CHECK(iso8601_utc(0) == "1970-01-01T00:00:00Z");
    CHECK(utc_date(946684800) == "2000-01-01");
}
