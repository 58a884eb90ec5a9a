#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gtrec {

// FNV-1a, used for mock providers/encoders and artifact content hashes.
// Stable across platforms, unlike std::hash.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ull) {
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

uint64_t hash_file(const std::string& path);
std::string hex64(uint64_t v);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::string lower(std::string_view s);

// Seconds since epoch -> "2000-07-05T12:00:00Z" (UTC, proleptic Gregorian).
std::string iso8601_utc(int64_t ts_utc);

// Civil date of a UTC timestamp as "YYYY-MM-DD".
std::string utc_date(int64_t ts_utc);

// Bucket labels used to key geo-temporal contexts.
enum class Bucket { day, week };
Bucket bucket_from_string(const std::string& s);
std::string bucket_to_string(Bucket b);

// day -> "YYYY-MM-DD"; week -> "YYYY-Www" (ISO week).
std::string bucket_label(int64_t ts_utc, Bucket b);

// Canonical key for a (bucket, location) pair, used for cache and
// embedding lookups alike.
std::string context_key(const std::string& bucket_label, const std::string& location);

std::string read_text_file(const std::string& path);
// write-temp + rename so readers never observe partial files
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace gtrec
