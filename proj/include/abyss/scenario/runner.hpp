// Drives one scenario through the engine in dt slices. CLI and service both
// go through here, so the same inputs give the same log from either.
#pragma once

#include <cstdio>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "abyss/mission/mission.hpp"
#include "abyss/offload/offload.hpp"
#include "abyss/scenario/scenario.hpp"
#include "abyss/sensing/bench.hpp"
#include "abyss/sim/engine.hpp"

namespace abyss::scenario {

inline constexpr const char* kMissionStart = "MISSION_START";
inline constexpr const char* kMissionEnd = "MISSION_END";

/// Explicit items plus the seeded random batch, ids continuing after the explicit ones.
inline std::vector<PollutantItem> materialize_items(const Scenario& sc, std::uint64_t seed) {
    std::vector<PollutantItem> items = sc.items;
    if (!sc.random_items) return items;
    const auto& r = *sc.random_items;
    std::uint32_t next = 1;
    for (const auto& it : items) next = std::max(next, it.id + 1);
    RngStream rng = derive_stream(seed, "world-items");
    for (std::size_t i = 0; i < r.count; ++i) {
        PollutantItem it;
        it.id = next++;
        it.position = {rng.uniform(r.min.x, r.max.x), rng.uniform(r.min.y, r.max.y), rng.uniform(r.min.z, r.max.z)};
        it.material = r.materials[rng.index(r.materials.size())];
        it.size = r.size;
        items.push_back(it);
    }
    return items;
}

inline double comms_range_for(const Scenario& sc) {
    if (sc.plan.comms_range) return *sc.plan.comms_range;
    return sc.links.at(sc.plan.comms_link).curve.reach();
}

class Simulation {
public:
    /// `until` caps the scenario duration. Planning and assignment errors
    /// surface here, before anything is logged.
    explicit Simulation(Scenario sc, std::optional<std::uint64_t> seed = {}, std::optional<double> until = {})
        : sc_(std::move(sc)), seed_(seed.value_or(sc_.seed)), engine_(seed_) {
        end_time_ = until ? std::min(*until, sc_.duration) : sc_.duration;
        if (!(end_time_ > 0.0)) throw ValidationError("run length must be > 0");
        try {
            world_ = std::make_unique<World>(sc_.world, materialize_items(sc_, seed_), sc_.plume);
        } catch (const ConfigurationError& e) {
            throw ValidationError(std::string("$.world: ") + e.what());
        }
        if (sc_.has_mission()) {
            mission::MissionConfig cfg;
            cfg.areas = sc_.areas;
            cfg.constraints = sc_.constraints;
            cfg.plan = sc_.plan.params;
            cfg.dt = sc_.dt;
            cfg.return_policy = sc_.plan.return_policy;
            cfg.safety_margin = sc_.plan.safety_margin;
            cfg.cell_size = sc_.plan.cell_size;
            cfg.position_noise = sc_.plan.position_noise;
            cfg.comms_range = comms_range_for(sc_);
            cfg.confusion = sc_.sensing.confusion;
            mission_ = std::make_unique<mission::MissionSim>(*world_, sc_.fleet, sc_.stations, std::move(cfg));
        }
    }

    Simulation(const Simulation&) = delete;
    Simulation& operator=(const Simulation&) = delete;

    void start() {
        if (started_) return;
        started_ = true;
        Json diag = Json::object();
        for (auto c : kAllConditions) {
            double d = 0.0;
            for (auto m : kAllMaterials) d += sc_.sensing.confusion.diagonal(c, m);
            diag[to_string(c)] = d / static_cast<double>(kMaterialCount);
        }
        engine_.record(kMissionStart, Json{{"name", sc_.name},
                                           {"seed", seed_},
                                           {"duration", end_time_},
                                           {"dt", sc_.dt},
                                           {"condition", to_string(sc_.world.condition)},
                                           {"items", world_->items().size()},
                                           {"fleet", sc_.fleet.size()},
                                           {"offload", sc_.offload.has_value()},
                                           {"confusion_diagonal", diag}});
        if (mission_) mission_->attach(engine_);
        if (sc_.offload) {
            const auto& off = *sc_.offload;
            MicroCloudGroup group;
            if (off.master) {
                group.members = off.devices;
                group.master = *off.master;
                for (const auto& d : off.devices) {
                    if (d != group.master) group.workers.push_back(d);
                }
            } else {
                group = elect_master(off.devices, engine_.stream("offload-election"));
            }
            OffloadConfig cfg = off.config;
            // Distances are measured from the master.
            cfg.distances.erase(group.master);
            offload_ = std::make_unique<OffloadSession>(group, make_frames(off.frames, off.frame_bits), cfg);
            offload_->attach(engine_);
        }
        if (sc_.has_bench()) record_bench();
    }

    /// Runs one dt slice. Returns false once the run has ended.
    bool advance() {
        if (!started_) start();
        if (finished_) return false;
        try {
            engine_.run_until(std::min(engine_.now() + sc_.dt, end_time_));
        } catch (const SimulationError&) {
            finish("error");
            throw;
        }
        if (engine_.pending() == 0) {
            finish(mission_ && mission_->aborted() ? "aborted" : "complete");
        } else if (engine_.now() >= end_time_) {
            finish("duration");
        }
        return !finished_;
    }

    void run() {
        while (advance()) {
        }
    }

    /// Mission commands are applied at the next tick; PAUSE and RESUME are
    /// driver-level and only get logged.
    void submit(const mission::MissionCommand& c) {
        if (finished_) throw SchedulingError("run has already ended");
        if (c.kind == mission::CommandKind::PAUSE || c.kind == mission::CommandKind::RESUME) {
            engine_.record("COMMAND_APPLIED", Json{{"command_id", c.id}, {"kind", mission::to_string(c.kind)}});
            return;
        }
        if (!mission_) throw ConfigurationError("scenario has no fleet to command");
        mission_->enqueue(c);
    }

    void finish(const std::string& reason) {
        if (finished_) return;
        finished_ = true;
        end_reason_ = reason;
        Json end{{"reason", reason}};
        if (mission_) {
            end["coverage_fraction"] = mission_->coverage();
            end["energy"] = mission_->energy_summary();
        }
        engine_.record(kMissionEnd, std::move(end));
    }

    bool finished() const noexcept { return finished_; }
    const std::string& end_reason() const noexcept { return end_reason_; }
    double now() const noexcept { return engine_.now(); }
    double end_time() const noexcept { return end_time_; }
    std::uint64_t seed() const noexcept { return seed_; }
    Engine& engine() noexcept { return engine_; }
    const Engine& engine() const noexcept { return engine_; }
    const Scenario& scenario() const noexcept { return sc_; }
    const World& world() const noexcept { return *world_; }
    mission::MissionSim* mission() noexcept { return mission_.get(); }
    const mission::MissionSim* mission() const noexcept { return mission_.get(); }

    Json telemetry() const {
        Json t = mission_ ? mission_->telemetry()
                          : Json{{"auvs", Json::array()}, {"coverage_fraction", 0.0}, {"detections", Json::object()}};
        t["sim_time"] = engine_.now();
        return t;
    }

private:
    void record_bench() {
        auto cfg = sc_.sensing.bench;
        if (!sc_.sensing.bench_seed_set) cfg.seed = seed_;
        const auto table = sensing::bench_sensing(sc_.sensing.generator, cfg);
        const Json j = sensing::to_json(table);
        for (const auto& row : j["rows"]) engine_.record("BENCH_ROW", row);
        for (const auto& row : j["separability"]) engine_.record("SEPARABILITY", row);
    }

    Scenario sc_;
    std::uint64_t seed_;
    Engine engine_;
    double end_time_ = 0.0;
    std::unique_ptr<World> world_;
    std::unique_ptr<mission::MissionSim> mission_;
    std::unique_ptr<OffloadSession> offload_;
    bool started_ = false;
    bool finished_ = false;
    std::string end_reason_;
};

/// Everything in the report is recomputed from the log alone.
inline Json report_from_log(const std::vector<SimEvent>& raw) {
    // work from the persisted form so a report rebuilt from events.ndjson is identical
    std::vector<SimEvent> log;
    log.reserve(raw.size());
    for (const auto& e : raw) log.push_back(parse_event(serialize_event(e)));
    Json r;
    std::array<std::uint64_t, kMaterialCount> detections{};
    std::array<std::uint64_t, kMaterialCount> predicted{};
    std::map<std::string, std::array<std::array<std::uint64_t, kMaterialCount>, kMaterialCount>> matrices;
    std::uint64_t lost = 0;
    std::uint64_t commands = 0;
    bool any_frames = false;
    Json bench_rows = Json::array();
    Json separability = Json::array();
    const SimEvent* start = nullptr;
    const SimEvent* end = nullptr;
    for (const auto& e : log) {
        if (e.kind == "DETECTION") {
            ++detections[index_of(*parse_material(e.payload.at("material").get<std::string>()))];
        } else if (e.kind == "CLASSIFIED") {
            const auto t = index_of(*parse_material(e.payload.at("true").get<std::string>()));
            const auto p = index_of(*parse_material(e.payload.at("predicted").get<std::string>()));
            ++predicted[p];
            ++matrices[e.payload.at("condition").get<std::string>()][t][p];
        } else if (e.kind == "LOST") {
            ++lost;
        } else if (e.kind == "COMMAND_APPLIED") {
            ++commands;
        } else if (e.kind == "SEND" && e.payload.value("msg_kind", "") == kFrameMsg) {
            any_frames = true;
        } else if (e.kind == "BENCH_ROW") {
            bench_rows.push_back(e.payload);
        } else if (e.kind == "SEPARABILITY") {
            separability.push_back(e.payload);
        } else if (e.kind == kMissionStart) {
            start = &e;
        } else if (e.kind == kMissionEnd) {
            end = &e;
        }
    }
    Json det = Json::object();
    Json cls = Json::object();
    for (auto m : kAllMaterials) {
        det[std::string(to_string(m))] = detections[index_of(m)];
        cls[std::string(to_string(m))] = predicted[index_of(m)];
    }
    Json confusion = Json::object();
    for (const auto& [cond, mat] : matrices) {
        std::uint64_t total = 0;
        std::uint64_t correct = 0;
        Json rows = Json::object();
        for (auto t : kAllMaterials) {
            Json row = Json::object();
            for (auto p : kAllMaterials) {
                const auto n = mat[index_of(t)][index_of(p)];
                row[std::string(to_string(p))] = n;
                total += n;
                if (t == p) correct += n;
            }
            rows[std::string(to_string(t))] = row;
        }
        Json c{{"total", total},
               {"correct", correct},
               {"correct_fraction", total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0},
               {"matrix", rows}};
        if (start && start->payload.contains("confusion_diagonal")) {
            c["configured_diagonal"] = start->payload["confusion_diagonal"].value(cond, 0.0);
        }
        confusion[cond] = c;
    }
    r["name"] = start ? start->payload.value("name", "") : "";
    r["seed"] = start ? start->payload.value("seed", std::uint64_t{0}) : 0;
    r["end_reason"] = end ? end->payload.value("reason", "") : "incomplete";
    r["end_time"] = log.empty() ? 0.0 : log.back().time;
    r["event_count"] = log.size();
    r["coverage_fraction"] = end && end->payload.contains("coverage_fraction") ? end->payload["coverage_fraction"] : Json();
    r["energy"] = end && end->payload.contains("energy") ? end->payload["energy"] : Json();
    r["detections"] = det;
    r["classifications"] = cls;
    r["confusion"] = confusion;
    r["lost_count"] = lost;
    r["commands_applied"] = commands;
    r["offload"] = any_frames ? to_json(compute_stats(log)) : Json();
    r["sensing_bench"] = bench_rows.empty() ? Json() : Json{{"rows", bench_rows}, {"separability", separability}};
    r["log_hash"] = log_hash(log);
    return r;
}

namespace detail {

inline void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "." + std::to_string(i), out);
    } else if (j.is_string()) {
        out.emplace_back(prefix, j.get<std::string>());
    } else if (j.is_number_float()) {
        out.emplace_back(prefix, format_fixed6(j.get<double>()));
    } else if (j.is_null()) {
        out.emplace_back(prefix, "");
    } else {
        out.emplace_back(prefix, j.dump());
    }
}

}  // namespace detail

/// Two-column `metric,value` rendering of a report.
inline std::string report_csv(const Json& report) {
    std::vector<std::pair<std::string, std::string>> rows;
    detail::flatten(report, "", rows);
    std::ostringstream os;
    os << "metric,value\n";
    for (const auto& [k, v] : rows) {
        const bool quote = v.find_first_of(",\"\n") != std::string::npos;
        if (!quote) {
            os << k << ',' << v << '\n';
            continue;
        }
        os << k << ",\"";
        for (char c : v) os << (c == '"' ? std::string("\"\"") : std::string(1, c));
        os << "\"\n";
    }
    return os.str();
}

}  // namespace abyss::scenario
