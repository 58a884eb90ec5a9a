#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace gtrec {

// One user-item event. Timestamps are UTC seconds; location is a coarse
// free-text region (city/state/country).
struct Interaction {
    std::string user_id;
    std::string item_id;
    int64_t ts_utc = 0;
    std::string location;

    bool operator==(const Interaction&) const = default;
};

struct UserHistory {
    std::string user_id;
    std::vector<std::string> items;       // chronological
    std::vector<int64_t> timestamps;      // parallel to items, nondecreasing
    std::vector<std::string> locations;   // parallel to items
};

enum class SplitMode { general, explorer };

struct SplitSpec {
    SplitMode mode = SplitMode::general;
    int explorer_window_days = 182;  // "six months"
    int min_history = 3;
};

struct TestTarget {
    std::string user_id;
    std::string item_id;
    int64_t ts_utc = 0;
    std::string location;
};

struct SplitResult {
    // user -> training sequence (test target removed; explorer mode also
    // drops repeated-item events)
    std::map<std::string, UserHistory> train;
    std::vector<TestTarget> test;  // sorted by user_id
};

enum class LogFormat { jsonl, movielens_dat };

struct MovielensOptions {
    // ratings.dat has no location column; it comes from a JSONL sidecar
    // ({"user_id":..., "location":...}) or this dataset-level default.
    std::string default_location = "United States";
    std::optional<std::string> location_sidecar;
};

// Parses, sorts by (user_id, ts_utc, item_id) and drops exact duplicate rows.
std::vector<Interaction> load_interactions(const std::string& path, LogFormat format,
                                           const MovielensOptions& ml = {});

// Per-user chronological histories, truncated to the most recent max_len
// events. Permutation-invariant in the input row order.
std::map<std::string, UserHistory> build_histories(const std::vector<Interaction>& log,
                                                   size_t max_len);

// Leave-last-out. Users shorter than min_history keep their full history in
// train and contribute no test target.
SplitResult split_general(const std::map<std::string, UserHistory>& histories, int min_history);

// Explorer users: the target must not have been interacted with by the same
// user within the preceding window. Training sequences are de-duplicated
// (first occurrence kept).
SplitResult split_explorer(const std::map<std::string, UserHistory>& histories,
                           const SplitSpec& spec);

SplitResult make_split(const std::map<std::string, UserHistory>& histories, const SplitSpec& spec);

}  // namespace gtrec
