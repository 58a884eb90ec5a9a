#include "gtrec/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "gtrec/errors.hpp"
#include "gtrec/util.hpp"

namespace gtrec {

namespace {

using nlohmann::json;

void validate(Interaction& it, const std::string& path, size_t line_no) {
    it.location = trim(it.location);
    if (it.ts_utc <= 0)
        throw ParseError(path + ":" + std::to_string(line_no) + ": ts_utc must be > 0");
    if (it.location.empty())
        throw ParseError(path + ":" + std::to_string(line_no) + ": empty location");
    if (it.user_id.empty() || it.item_id.empty())
        throw ParseError(path + ":" + std::to_string(line_no) + ": empty user_id or item_id");
}

std::string as_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<int64_t>());
    throw json::type_error::create(302, "expected string or integer", &v);
}

std::vector<Interaction> load_jsonl(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::vector<Interaction> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        Interaction it;
        try {
            json j = json::parse(line);
            it.user_id = as_string(j.at("user_id"));
            it.item_id = as_string(j.at("item_id"));
            it.ts_utc = j.at("ts_utc").get<int64_t>();
            it.location = j.at("location").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
        validate(it, path, line_no);
        out.push_back(std::move(it));
    }
    return out;
}

std::unordered_map<std::string, std::string> load_location_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::unordered_map<std::string, std::string> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        try {
            json j = json::parse(line);
            out[as_string(j.at("user_id"))] = j.at("location").get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

// ratings.dat: UserID::MovieID::Rating::Timestamp
std::vector<Interaction> load_movielens(const std::string& path, const MovielensOptions& ml) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);

    std::unordered_map<std::string, std::string> locations;
    if (ml.location_sidecar) locations = load_location_sidecar(*ml.location_sidecar);

    std::vector<Interaction> out;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto fields = split(line, ':');
        // "a::b::c::d" splits to {a, "", b, "", c, "", d}
        if (fields.size() != 7 || !fields[1].empty() || !fields[3].empty() || !fields[5].empty())
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected UserID::MovieID::Rating::Timestamp");
        Interaction it;
        it.user_id = fields[0];
        it.item_id = fields[2];
        try {
            it.ts_utc = std::stoll(fields[6]);
        } catch (const std::exception&) {
            throw ParseError(path + ":" + std::to_string(line_no) + ": bad timestamp");
        }
        auto loc = locations.find(it.user_id);
        it.location = loc != locations.end() ? loc->second : ml.default_location;
        validate(it, path, line_no);
        out.push_back(std::move(it));
    }
    return out;
}

void sort_and_dedup(std::vector<Interaction>& log) {
    std::stable_sort(log.begin(), log.end(), [](const Interaction& a, const Interaction& b) {
        if (a.user_id != b.user_id) return a.user_id < b.user_id;
        if (a.ts_utc != b.ts_utc) return a.ts_utc < b.ts_utc;
        return a.item_id < b.item_id;
    });
    log.erase(std::unique(log.begin(), log.end()), log.end());
}

}  // namespace

std::vector<Interaction> load_interactions(const std::string& path, LogFormat format,
                                           const MovielensOptions& ml) {
    std::vector<Interaction> log =
        format == LogFormat::jsonl ? load_jsonl(path) : load_movielens(path, ml);
    sort_and_dedup(log);
    if (log.empty()) throw EmptyDataset(path + " contains no interactions");
    return log;
}

std::map<std::string, UserHistory> build_histories(const std::vector<Interaction>& log,
                                                   size_t max_len) {
    if (max_len < 2) throw ConfigError("max_len must be >= 2");
    std::vector<Interaction> sorted = log;
    sort_and_dedup(sorted);

    std::map<std::string, UserHistory> out;
    for (const Interaction& it : sorted) {
        UserHistory& h = out[it.user_id];
        h.user_id = it.user_id;
        h.items.push_back(it.item_id);
        h.timestamps.push_back(it.ts_utc);
        h.locations.push_back(it.location);
    }
    for (auto& [user, h] : out) {
        if (h.items.size() > max_len) {
            const size_t drop = h.items.size() - max_len;
            h.items.erase(h.items.begin(), h.items.begin() + static_cast<ptrdiff_t>(drop));
            h.timestamps.erase(h.timestamps.begin(),
                               h.timestamps.begin() + static_cast<ptrdiff_t>(drop));
            h.locations.erase(h.locations.begin(),
                              h.locations.begin() + static_cast<ptrdiff_t>(drop));
        }
    }
    return out;
}

namespace {

UserHistory drop_last(const UserHistory& h) {
    UserHistory t = h;
    t.items.pop_back();
    t.timestamps.pop_back();
    t.locations.pop_back();
    return t;
}

UserHistory dedup_keep_first(const UserHistory& h, const std::string* drop_item = nullptr) {
    UserHistory out;
    out.user_id = h.user_id;
    std::unordered_set<std::string> seen;
    for (size_t i = 0; i < h.items.size(); ++i) {
        if (drop_item && h.items[i] == *drop_item) continue;
        if (seen.insert(h.items[i]).second) {
            out.items.push_back(h.items[i]);
            out.timestamps.push_back(h.timestamps[i]);
            out.locations.push_back(h.locations[i]);
        }
    }
    return out;
}

TestTarget target_of(const UserHistory& h) {
    return TestTarget{h.user_id, h.items.back(), h.timestamps.back(), h.locations.back()};
}

}  // namespace

SplitResult split_general(const std::map<std::string, UserHistory>& histories, int min_history) {
    if (min_history < 2) throw ConfigError("min_history must be >= 2");
    SplitResult out;
    for (const auto& [user, h] : histories) {
        if (h.items.size() < static_cast<size_t>(min_history)) {
            out.train[user] = h;  // too short to test; keep everything for training
            continue;
        }
        out.test.push_back(target_of(h));
        out.train[user] = drop_last(h);
    }
    if (out.test.empty()) throw EmptySplit("no user meets min_history");
    return out;
}

SplitResult split_explorer(const std::map<std::string, UserHistory>& histories,
                           const SplitSpec& spec) {
    if (spec.mode != SplitMode::explorer) throw ConfigError("split_explorer needs explorer mode");
    if (spec.explorer_window_days <= 0) throw ConfigError("explorer_window_days must be > 0");
    if (spec.min_history < 2) throw ConfigError("min_history must be >= 2");

    const int64_t window = int64_t{spec.explorer_window_days} * 86400;
    SplitResult out;
    for (const auto& [user, h] : histories) {
        bool qualifies = h.items.size() >= static_cast<size_t>(spec.min_history);
        if (qualifies) {
            const std::string& target = h.items.back();
            const int64_t t = h.timestamps.back();
            for (size_t i = 0; i + 1 < h.items.size(); ++i) {
                if (h.items[i] == target && h.timestamps[i] >= t - window && h.timestamps[i] < t) {
                    qualifies = false;  // seen within the window: not an explorer event
                    break;
                }
            }
        }
        if (qualifies) {
            // any out-of-window occurrence of the target is dropped too, so
            // the held-out item never leaks into (or gets filtered out of)
            // the explorer ranking
            out.test.push_back(target_of(h));
            out.train[user] = dedup_keep_first(drop_last(h), &h.items.back());
        } else {
            out.train[user] = dedup_keep_first(h);
        }
    }
    if (out.test.empty()) throw EmptySplit("no explorer user qualifies");
    return out;
}

SplitResult make_split(const std::map<std::string, UserHistory>& histories,
                       const SplitSpec& spec) {
    return spec.mode == SplitMode::general ? split_general(histories, spec.min_history)
                                           : split_explorer(histories, spec);
}

}  // namespace gtrec
