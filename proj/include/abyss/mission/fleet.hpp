#pragma once

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/core/geometry.hpp"
#include "abyss/mission/planner.hpp"

namespace abyss::mission {

enum class AuvStatus { SURVEYING, RETURNING, CHARGING, LOST };

inline std::string to_string(AuvStatus s) {
    switch (s) {
        case AuvStatus::SURVEYING: return "SURVEYING";
        case AuvStatus::RETURNING: return "RETURNING";
        case AuvStatus::CHARGING: return "CHARGING";
        case AuvStatus::LOST: return "LOST";
    }
    return "UNKNOWN";
}

/// Defaults give 144 kJ / 10 W = 4 h of unassisted endurance.
struct AuvParams {
    double speed = 1.0;          // m/s
    double capacity = 144000.0;  // J
    double motion_power = 8.0;   // W
    double hotel_power = 2.0;    // W
    double camera_range = 5.0;   // m

    double endurance() const noexcept { return capacity / (motion_power + hotel_power); }

    void validate() const {
        if (!(speed > 0.0)) throw ConfigurationError("AUV speed must be > 0");
        if (!(capacity > 0.0)) throw ConfigurationError("AUV capacity must be > 0");
        if (motion_power < 0.0 || hotel_power < 0.0) throw ConfigurationError("AUV power draw must be >= 0");
        if (!(camera_range >= 0.0)) throw ConfigurationError("camera range must be >= 0");
    }
};

struct Leg {
    Vec3 target;
    bool survey = false;
};

struct AuvState {
    std::string id;
    Vec3 position;
    Vec3 reported_position;  // position plus localization noise
    AuvParams params;
    double battery = 0.0;
    AuvStatus status = AuvStatus::CHARGING;
    std::vector<std::size_t> assignment;  // strip indices, in execution order

    // Execution progress.
    std::deque<std::size_t> pending_strips;
    std::optional<std::size_t> current_strip;
    std::deque<Leg> legs;
    std::size_t strips_started = 0;
    std::optional<std::size_t> return_station;

    // Energy accounting.
    double energy_used = 0.0;
    double energy_charged = 0.0;
    double min_battery = std::numeric_limits<double>::infinity();

    double battery_fraction() const noexcept { return params.capacity > 0 ? battery / params.capacity : 0.0; }
    bool has_work() const noexcept { return current_strip.has_value() || !pending_strips.empty(); }
};

struct ChargingStation {
    std::string id;
    Vec3 position;  // surface buoy, z = 0
    double charge_rate = 50.0;  // W

    void validate() const {
        if (!(charge_rate > 0.0)) throw ConfigurationError("station charge_rate must be > 0");
        if (position.z != 0.0) throw ConfigurationError("station " + id + " must sit at the surface (z = 0)");
    }
};

/// Energy to reach `station` in a straight line must stay strictly below the
/// battery minus the safety margin; the boundary counts as "return now".
inline bool return_trip_feasible(const Vec3& position, double battery, const AuvParams& p,
                                 const ChargingStation& station, double safety_margin) {
    if (!(p.speed > 0.0)) throw ArgumentError("return_trip_feasible: speed must be > 0");
    const double required = distance(position, station.position) / p.speed * (p.motion_power + p.hotel_power);
    return required < battery * (1.0 - safety_margin);
}

inline bool return_trip_feasible(const AuvState& auv, const ChargingStation& station, double safety_margin) {
    return return_trip_feasible(auv.position, auv.battery, auv.params, station, safety_margin);
}

inline std::size_t nearest_station(const std::vector<ChargingStation>& stations, const Vec3& p) {
    if (stations.empty()) throw ConfigurationError("no charging stations configured");
    std::size_t best = 0;
    for (std::size_t i = 1; i < stations.size(); ++i) {
        if (distance(p, stations[i].position) < distance(p, stations[best].position)) best = i;
    }
    return best;
}

/// AUV id -> strip indices. AUVs left without strips are absent.
using Assignment = std::map<std::string, std::vector<std::size_t>>;

/// Orientation an AUV flies its j-th strip in: even steps forward, odd reversed.
inline Strip oriented_strip(const Strip& s, std::size_t step) { return step % 2 == 0 ? s : s.reversed(); }

/// Largest separation between two AUVs flying strips `a` and `b` in lockstep
/// (same arc-length fraction), sampled at 101 points.
inline double lockstep_separation(const Strip& a, const Strip& b) {
    double worst = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double f = i / 100.0;
        worst = std::max(worst, distance(a.point_at(f), b.point_at(f)));
    }
    return worst;
}

/// Normalises plan strips to a common direction so lockstep execution keeps
/// neighbours abreast; the serpentine turn is then applied per AUV step.
inline Strip canonical_direction(const Strip& s, bool along_x) {
    if (s.segments.empty()) return s;
    const Vec3 a = s.segments.front().start;
    const Vec3 b = s.segments.back().end;
    const double du = along_x ? b.x - a.x : b.y - a.y;
    return du >= 0.0 ? s : s.reversed();
}

/// Contiguous blocks of strips in plan order, larger blocks first. Rejected
/// when two AUVs adjacent in fleet order would drift beyond `comms_range`
/// while flying their j-th strips in lockstep.
inline Assignment assign_transects(const std::vector<std::string>& fleet, const std::vector<Strip>& strips,
                                   bool along_x, double comms_range) {
    if (fleet.empty()) throw ArgumentError("assign_transects: fleet is empty");
    Assignment out;
    if (strips.empty()) return out;
    const std::size_t active = std::min(fleet.size(), strips.size());
    const std::size_t base = strips.size() / active;
    const std::size_t extra = strips.size() % active;
    std::vector<std::vector<std::size_t>> blocks(active);
    std::size_t next = 0;
    for (std::size_t i = 0; i < active; ++i) {
        const std::size_t n = base + (i < extra ? 1 : 0);
        for (std::size_t k = 0; k < n; ++k) blocks[i].push_back(next++);
    }
    for (std::size_t i = 0; i + 1 < active; ++i) {
        const std::size_t steps = std::min(blocks[i].size(), blocks[i + 1].size());
        for (std::size_t j = 0; j < steps; ++j) {
            const Strip a = oriented_strip(canonical_direction(strips[blocks[i][j]], along_x), j);
            const Strip b = oriented_strip(canonical_direction(strips[blocks[i + 1][j]], along_x), j);
            const double sep = lockstep_separation(a, b);
            if (sep > comms_range + 1e-9) throw AssignmentError(fleet[i], fleet[i + 1], sep, comms_range);
        }
    }
    for (std::size_t i = 0; i < active; ++i) out[fleet[i]] = blocks[i];
    return out;
}

inline Assignment assign_transects(const std::vector<std::string>& fleet, const TransectPlan& plan,
                                   double comms_range) {
    return assign_transects(fleet, plan.strips, plan.along_x, comms_range);
}

}  // namespace abyss::mission
