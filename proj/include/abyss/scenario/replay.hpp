#pragma once

// Offline check of a persisted event log: canonical lines, contiguous seq,
// non-decreasing time, and optional hash / report comparison.

#include <istream>
#include <optional>
#include <set>
#include <sstream>

#include "abyss/scenario/runner.hpp"

namespace abyss::scenario {

struct ReplayResult {
    bool pass = true;
    std::string reason;
    std::vector<SimEvent> log;
    std::string hash;
};

namespace detail {
inline ReplayResult replay_fail(std::string why) { return {false, std::move(why), {}, {}}; }
}  // namespace detail

inline ReplayResult verify_log(std::istream& in, const std::optional<std::string>& expected_hash = {},
                               const std::optional<Json>& stored_report = {}) {
    using detail::replay_fail;
    std::vector<std::string> lines;
    std::set<std::uint64_t> seqs;
    for (std::string l; std::getline(in, l);) {
        lines.push_back(l);
        try {
            seqs.insert(parse_event(l).seq);
        } catch (const std::exception&) {
        }
    }
    ReplayResult out;
    auto& log = out.log;
    std::size_t lineno = 0;
    for (const auto& line : lines) {
        const std::string where = "line " + std::to_string(++lineno) + ": ";
        SimEvent e;
        try {
            e = parse_event(line);
        } catch (const std::exception& ex) {
            return replay_fail(where + "corrupted record: " + ex.what());
        }
        if (serialize_event(e) != line) return replay_fail(where + "not in canonical form");
        if (!log.empty()) {
            const auto& prev = log.back();
            if (e.seq <= prev.seq) {
                return replay_fail(where + "seq " + std::to_string(e.seq) + " out of order after " +
                                   std::to_string(prev.seq) + " (monotonicity)");
            }
            if (e.seq != prev.seq + 1) {
                // a missing seq that turns up later means reordering, not a gap
                if (seqs.count(prev.seq + 1)) {
                    return replay_fail(where + "seq " + std::to_string(e.seq) + " appears before " +
                                       std::to_string(prev.seq + 1) + " (monotonicity)");
                }
                return replay_fail(where + "seq gap, " + std::to_string(prev.seq) + " -> " + std::to_string(e.seq));
            }
            if (e.time < prev.time) return replay_fail(where + "time goes backwards (monotonicity)");
        } else if (e.seq != 0) {
            return replay_fail("line 1: log does not start at seq 0");
        }
        log.push_back(std::move(e));
    }
    if (log.empty()) return replay_fail("log is empty");
    out.hash = log_hash(log);
    if (expected_hash && *expected_hash != out.hash) return replay_fail("hash mismatch");
    if (stored_report && *stored_report != report_from_log(log)) {
        return replay_fail("report.json differs from the report recomputed from the log");
    }
    return out;
}

inline ReplayResult verify_log(const std::vector<SimEvent>& log, const std::optional<std::string>& expected_hash = {},
                               const std::optional<Json>& stored_report = {}) {
    std::istringstream in(canonical_log(log));
    return verify_log(in, expected_hash, stored_report);
}

}  // namespace abyss::scenario
