// Fleet execution inside the engine.
// A silent TICK fires every dt: queued commands first, then each AUV in id order.
#pragma once

#include <algorithm>
#include <array>
#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "abyss/core/world.hpp"
#include "abyss/mission/area.hpp"
#include "abyss/mission/coverage.hpp"
#include "abyss/mission/fleet.hpp"
#include "abyss/mission/planner.hpp"
#include "abyss/sensing/confusion.hpp"
#include "abyss/sim/engine.hpp"

namespace abyss::mission {

struct PlanParams {
    Dimensionality dimensionality = Dimensionality::BELT_2D;
    double strip_spacing = 20.0;
    double swath_width = 0.0;  // 0 means 2 x camera range
    double layer_spacing = 20.0;
};

struct MissionConfig {
    std::vector<AreaSpec> areas;
    std::vector<Constraint> constraints;
    PlanParams plan;
    double dt = 1.0;
    bool return_policy = true;
    double safety_margin = 0.2;
    double cell_size = 1.0;
    double position_noise = 0.0;  // sigma of reported-position noise, meters
    double comms_range = 10.0;
    sensing::ConfusionModel confusion = sensing::presets::table2_confusion();
};

enum class CommandKind { RETASK, ADD_CONSTRAINT, ABORT, PAUSE, RESUME };

inline std::string to_string(CommandKind k) {
    switch (k) {
        case CommandKind::RETASK: return "RETASK";
        case CommandKind::ADD_CONSTRAINT: return "ADD_CONSTRAINT";
        case CommandKind::ABORT: return "ABORT";
        case CommandKind::PAUSE: return "PAUSE";
        case CommandKind::RESUME: return "RESUME";
    }
    return "UNKNOWN";
}

inline std::optional<CommandKind> parse_command_kind(std::string_view s) {
    for (auto k : {CommandKind::RETASK, CommandKind::ADD_CONSTRAINT, CommandKind::ABORT, CommandKind::PAUSE,
                   CommandKind::RESUME}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

struct MissionCommand {
    std::uint64_t id = 0;
    CommandKind kind = CommandKind::ABORT;
    std::optional<AreaSpec> area;
    std::optional<PlanParams> plan;
    std::optional<Constraint> constraint;
    double issued_at = 0.0;  // wall-clock seconds since epoch
};

inline Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

/// Plans every area in order and concatenates the strips.
inline TransectPlan plan_areas(const std::vector<AreaSpec>& areas, const std::vector<Constraint>& constraints,
                               const PlanParams& p, double swath) {
    if (areas.empty()) throw PlanningError("no survey area defined");
    TransectPlan all;
    for (std::size_t i = 0; i < areas.size(); ++i) {
        TransectPlan one = p.dimensionality == Dimensionality::BELT_2D
                               ? plan_belt_transects(areas[i], p.strip_spacing, swath, constraints)
                               : plan_3d_grid(areas[i], p.strip_spacing, p.layer_spacing, constraints, swath);
        if (i == 0) {
            all = one;
        } else {
            for (auto& s : one.strips) all.strips.push_back(std::move(s));
        }
    }
    return all;
}

class MissionSim {
public:
    static constexpr const char* kTickEvent = "TICK";

    MissionSim(World& world, std::vector<AuvState> fleet, std::vector<ChargingStation> stations, MissionConfig cfg)
        : world_(&world), fleet_(std::move(fleet)), stations_(std::move(stations)), cfg_(std::move(cfg)) {
        if (fleet_.empty()) throw ConfigurationError("mission needs at least one AUV");
        if (stations_.empty()) throw ConfigurationError("mission needs at least one charging station");
        if (!(cfg_.dt > 0.0)) throw ConfigurationError("tick dt must be > 0");
        if (!(cfg_.safety_margin >= 0.0 && cfg_.safety_margin < 1.0)) {
            throw ConfigurationError("safety margin must be in [0, 1)");
        }
        for (const auto& s : stations_) s.validate();
        for (const auto& c : cfg_.constraints) c.validate();
        std::sort(fleet_.begin(), fleet_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        for (std::size_t i = 1; i < fleet_.size(); ++i) {
            if (fleet_[i].id == fleet_[i - 1].id) throw ConfigurationError("duplicate AUV id " + fleet_[i].id);
        }
        for (auto& a : fleet_) {
            a.params.validate();
            if (!(a.battery >= 0.0 && a.battery <= a.params.capacity)) {
                throw ConfigurationError("AUV " + a.id + " battery outside [0, capacity]");
            }
            a.reported_position = a.position;
            a.min_battery = a.battery;
        }
        for (const auto& area : cfg_.areas) {
            area.validate(world_->spec().max_depth);
            grids_.emplace_back(area, cfg_.cell_size);
        }
        swath_ = cfg_.plan.swath_width > 0.0 ? cfg_.plan.swath_width : 2.0 * fleet_.front().params.camera_range;
        plan_ = plan_areas(cfg_.areas, cfg_.constraints, cfg_.plan, swath_);
        for (const auto& s : plan_.strips) strips_.push_back(canonical_direction(s, plan_.along_x));
        std::vector<std::size_t> all(strips_.size());
        for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
        install_assignment(assign(all));
    }

    MissionSim(const MissionSim&) = delete;
    MissionSim& operator=(const MissionSim&) = delete;

    void attach(Engine& engine) {
        engine_ = &engine;
        Json assignment = Json::object();
        for (const auto& a : fleet_) assignment[a.id] = a.assignment;
        engine.record("PLAN", Json{{"strips", strips_.size()},
                                   {"layers", plan_.layer_count()},
                                   {"spacing", plan_.spacing},
                                   {"swath_width", swath_},
                                   {"dimensionality", to_string(plan_.dimensionality)},
                                   {"comms_range", cfg_.comms_range},
                                   {"assignment", assignment}});
        for (auto& a : fleet_) {
            if (a.has_work()) {
                a.status = AuvStatus::SURVEYING;
            } else {
                begin_return(a, "unassigned");
            }
        }
        engine.on(kTickEvent, [this](const SimEvent&) { tick(); });
        engine.schedule_in(cfg_.dt, kTickEvent, Json::object(), false);
    }

    /// Queued until the next tick boundary.
    void enqueue(MissionCommand c) { commands_.push_back(std::move(c)); }

    bool complete() const noexcept { return complete_; }
    bool aborted() const noexcept { return aborted_; }
    const std::vector<AuvState>& fleet() const noexcept { return fleet_; }
    const std::vector<ChargingStation>& stations() const noexcept { return stations_; }
    const std::vector<Strip>& strips() const noexcept { return strips_; }
    const TransectPlan& plan() const noexcept { return plan_; }
    const MissionConfig& config() const noexcept { return cfg_; }
    double swath_width() const noexcept { return swath_; }
    double coverage() const noexcept { return coverage_fraction(grids_); }
    const std::array<std::uint64_t, kMaterialCount>& detections() const noexcept { return detections_; }

    /// Plans and assigns a RETASK without touching state; throws on failure.
    void dry_run_retask(const AreaSpec& area, const std::optional<PlanParams>& params) const {
        area.validate(world_->spec().max_depth);
        const PlanParams p = params.value_or(cfg_.plan);
        const auto plan = plan_areas({area}, cfg_.constraints, p, swath_);
        assign_transects(active_ids(), plan.strips, plan.along_x, cfg_.comms_range);
    }

    Json plan_summary() const {
        Json assignment = Json::object();
        for (const auto& a : fleet_) assignment[a.id] = a.assignment;
        return {{"strips", strips_.size()},
                {"layers", plan_.layer_count()},
                {"spacing", plan_.spacing},
                {"swath_width", swath_},
                {"dimensionality", to_string(plan_.dimensionality)},
                {"assignment", assignment}};
    }

    Json energy_summary() const {
        Json per = Json::object();
        double used = 0.0;
        double charged = 0.0;
        for (const auto& a : fleet_) {
            per[a.id] = {{"energy_used", a.energy_used},
                         {"energy_charged", a.energy_charged},
                         {"final_battery_fraction", a.battery_fraction()},
                         {"min_battery_fraction", a.min_battery / a.params.capacity},
                         {"status", to_string(a.status)}};
            used += a.energy_used;
            charged += a.energy_charged;
        }
        return {{"total_energy_used", used}, {"total_energy_charged", charged}, {"per_auv", per}};
    }

    /// Current state as a telemetry frame body.
    Json telemetry() const {
        Json auvs = Json::array();
        for (const auto& a : fleet_) {
            auvs.push_back({{"id", a.id},
                            {"position", vec_json(a.reported_position)},
                            {"battery_fraction", a.battery_fraction()},
                            {"status", to_string(a.status)}});
        }
        Json det = Json::object();
        for (auto m : kAllMaterials) det[std::string(to_string(m))] = detections_[index_of(m)];
        return {{"auvs", auvs}, {"coverage_fraction", coverage()}, {"detections", det}};
    }

private:
    std::vector<std::string> active_ids() const {
        std::vector<std::string> ids;
        for (const auto& a : fleet_) {
            if (a.status != AuvStatus::LOST) ids.push_back(a.id);
        }
        return ids;
    }

    Assignment assign(const std::vector<std::size_t>& strip_ids) const {
        std::vector<Strip> subset;
        for (auto i : strip_ids) subset.push_back(strips_[i]);
        const Assignment local = assign_transects(active_ids(), subset, plan_.along_x, cfg_.comms_range);
        Assignment out;
        for (const auto& [id, idx] : local) {
            for (auto k : idx) out[id].push_back(strip_ids[k]);
        }
        return out;
    }

    void install_assignment(const Assignment& asg) {
        for (auto& a : fleet_) {
            auto it = asg.find(a.id);
            if (it == asg.end()) continue;
            for (auto s : it->second) {
                a.assignment.push_back(s);
                a.pending_strips.push_back(s);
            }
            if (a.status == AuvStatus::CHARGING && !aborted_) a.status = AuvStatus::SURVEYING;
        }
    }

    AuvState* find(const std::string& id) {
        for (auto& a : fleet_) {
            if (a.id == id) return &a;
        }
        return nullptr;
    }

    void log_status(const AuvState& a, const std::string& reason) {
        engine_->record("STATUS", Json{{"auv", a.id},
                                       {"status", to_string(a.status)},
                                       {"reason", reason},
                                       {"battery_fraction", a.battery_fraction()},
                                       {"position", vec_json(a.reported_position)}});
    }

    void tick() {
        apply_commands();
        step_fleet(cfg_.dt);
        complete_ = std::all_of(fleet_.begin(), fleet_.end(), [](const AuvState& a) {
            return a.status == AuvStatus::LOST || (a.status == AuvStatus::CHARGING && !a.has_work());
        });
        if (!complete_) engine_->schedule_in(cfg_.dt, kTickEvent, Json::object(), false);
    }

    void apply_commands() {
        while (!commands_.empty()) {
            MissionCommand c = std::move(commands_.front());
            commands_.pop_front();
            apply(c);
        }
    }

    void apply(const MissionCommand& c) {
        Json detail{{"command_id", c.id}, {"kind", to_string(c.kind)}};
        switch (c.kind) {
            case CommandKind::ABORT: {
                aborted_ = true;
                for (auto& a : fleet_) {
                    if (a.status == AuvStatus::LOST) continue;
                    a.pending_strips.clear();
                    a.legs.clear();
                    a.current_strip.reset();
                    begin_return(a, "abort");
                }
                break;
            }
            case CommandKind::ADD_CONSTRAINT: {
                cfg_.constraints.push_back(*c.constraint);
                Json removed = Json::array();
                Json clipped = Json::array();
                for (auto& a : fleet_) {
                    std::deque<std::size_t> keep;
                    for (auto s : a.pending_strips) {
                        Strip cl = clip_strip(strips_[s], cfg_.constraints);
                        if (cl.segments.empty()) {
                            removed.push_back(s);
                            engine_->record("STRIP_REMOVED", Json{{"auv", a.id}, {"strip", s}, {"command_id", c.id}});
                            continue;
                        }
                        if (cl.segments.size() != strips_[s].segments.size() ||
                            std::abs(cl.survey_length() - strips_[s].survey_length()) > 1e-9) {
                            clipped.push_back(s);
                        }
                        strips_[s] = std::move(cl);
                        keep.push_back(s);
                    }
                    a.pending_strips = std::move(keep);
                }
                detail["strips_removed"] = removed;
                detail["strips_clipped"] = clipped;
                break;
            }
            case CommandKind::RETASK: {
                const PlanParams p = c.plan.value_or(cfg_.plan);
                std::vector<std::size_t> fresh;
                try {
                    c.area->validate(world_->spec().max_depth);
                    const auto plan = plan_areas({*c.area}, cfg_.constraints, p, swath_);
                    const std::size_t first = strips_.size();
                    for (const auto& s : plan.strips) strips_.push_back(canonical_direction(s, plan.along_x));
                    for (std::size_t i = first; i < strips_.size(); ++i) fresh.push_back(i);
                    plan_.along_x = plan.along_x;
                    const Assignment asg = assign(fresh);
                    Json cancelled = Json::array();
                    for (auto& a : fleet_) {
                        for (auto s : a.pending_strips) cancelled.push_back(s);
                        a.pending_strips.clear();
                    }
                    aborted_ = false;
                    install_assignment(asg);
                    cfg_.areas.push_back(*c.area);
                    cfg_.plan = p;
                    grids_.emplace_back(*c.area, cfg_.cell_size);
                    detail["strips_cancelled"] = cancelled;
                    detail["strips_added"] = fresh;
                } catch (const std::exception& ex) {
                    strips_.resize(strips_.size() - fresh.size());
                    engine_->record("COMMAND_REJECTED", Json{{"command_id", c.id}, {"kind", "RETASK"}, {"reason", ex.what()}});
                    return;
                }
                break;
            }
            case CommandKind::PAUSE:
            case CommandKind::RESUME:
                break;
        }
        engine_->record("COMMAND_APPLIED", std::move(detail));
    }

    void begin_return(AuvState& a, const std::string& reason) {
        const std::size_t st = nearest_station(stations_, a.position);
        a.return_station = st;
        const bool docked = distance(a.position, stations_[st].position) <= 1e-9;
        a.status = docked ? AuvStatus::CHARGING : AuvStatus::RETURNING;
        log_status(a, reason);
    }

    void start_next_strip(AuvState& a) {
        const std::size_t s = a.pending_strips.front();
        a.pending_strips.pop_front();
        const Strip oriented = oriented_strip(strips_[s], a.strips_started);
        ++a.strips_started;
        a.current_strip = s;
        a.legs.clear();
        for (const auto& seg : oriented.segments) {
            a.legs.push_back({seg.start, false});
            a.legs.push_back({seg.end, true});
        }
        engine_->record("STRIP_START", Json{{"auv", a.id}, {"strip", s}, {"step", a.strips_started - 1}});
    }

    struct Move {
        Vec3 position;
        double moving_time = 0.0;
        bool arrived = false;
    };

    Move plan_move(const AuvState& a, const Vec3& target, double dt) const {
        const Vec3 next = advance_toward(a.position, target, a.params.speed * dt);
        return {next, distance(a.position, next) / a.params.speed, distance(next, target) <= 1e-9};
    }

    double energy_for(const AuvState& a, const Move& m, double dt) const {
        return a.params.motion_power * m.moving_time + a.params.hotel_power * dt;
    }

    void spend(AuvState& a, double energy) {
        a.battery -= energy;
        a.energy_used += energy;
    }

    void step_fleet(double dt) {
        for (auto& a : fleet_) {
            if (a.status == AuvStatus::LOST) continue;
            step_auv(a, dt);
            if (a.status != AuvStatus::LOST) detect(a);
            a.min_battery = std::min(a.min_battery, a.battery);
        }
    }

    void step_auv(AuvState& a, double dt) {
        if (cfg_.position_noise > 0.0) {
            auto& rng = engine_->stream("localization");
            a.reported_position = a.position + Vec3{rng.normal(0.0, cfg_.position_noise),
                                                    rng.normal(0.0, cfg_.position_noise),
                                                    rng.normal(0.0, cfg_.position_noise)};
        } else {
            a.reported_position = a.position;
        }

        if (a.status == AuvStatus::CHARGING) {
            const auto& st = stations_[a.return_station.value_or(nearest_station(stations_, a.position))];
            const double gain = std::min((st.charge_rate - a.params.hotel_power) * dt, a.params.capacity - a.battery);
            if (gain > 0.0) {
                a.battery += gain;
                a.energy_charged += gain;
            } else if (gain < 0.0) {
                spend(a, -gain);
            }
            if (a.has_work() && !aborted_ && a.battery >= a.params.capacity - 1e-9) {
                a.status = AuvStatus::SURVEYING;
                log_status(a, "charged");
            }
            return;
        }

        if (a.status == AuvStatus::SURVEYING) {
            if (a.legs.empty()) {
                if (a.pending_strips.empty()) {
                    begin_return(a, "complete");
                } else {
                    start_next_strip(a);
                }
            }
        }

        if (a.status == AuvStatus::SURVEYING) {
            const Leg leg = a.legs.front();
            const Move m = plan_move(a, leg.target, dt);
            const double energy = energy_for(a, m, dt);
            bool go = true;
            if (cfg_.return_policy) {
                const auto& st = stations_[nearest_station(stations_, m.position)];
                go = return_trip_feasible(m.position, a.battery - energy, a.params, st, cfg_.safety_margin);
            }
            if (go) {
                if (leg.survey) {
                    for (auto& g : grids_) g.mark_segment(planar(a.position), planar(m.position), 0.5 * swath_);
                }
                a.position = m.position;
                spend(a, energy);
                if (m.arrived) {
                    a.legs.pop_front();
                    if (a.legs.empty()) {
                        engine_->record("STRIP_END", Json{{"auv", a.id}, {"strip", *a.current_strip}});
                        a.current_strip.reset();
                        if (a.pending_strips.empty()) begin_return(a, "complete");
                    }
                }
                check_lost(a);
                return;
            }
            // Not enough energy to continue. Head home; after charging, transit
            // back to this point and pick the strip up where it was left.
            if (!a.legs.empty()) a.legs.push_front({a.position, false});
            begin_return(a, "energy");
            if (a.status != AuvStatus::RETURNING) return;
        }

        if (a.status == AuvStatus::RETURNING) {
            const auto& st = stations_[*a.return_station];
            const Move m = plan_move(a, st.position, dt);
            a.position = m.position;
            spend(a, energy_for(a, m, dt));
            if (m.arrived && a.battery > 0.0) {
                a.status = AuvStatus::CHARGING;
                log_status(a, "docked");
                return;
            }
            check_lost(a);
        }
    }

    void check_lost(AuvState& a) {
        if (a.battery > 0.0) return;
        a.battery = 0.0;
        a.status = AuvStatus::LOST;
        a.pending_strips.clear();
        a.legs.clear();
        a.current_strip.reset();
        engine_->record("LOST", Json{{"auv", a.id}, {"position", vec_json(a.position)}});
    }

    void detect(const AuvState& a) {
        for (const auto& item : world_->items_within(a.position, a.params.camera_range)) {
            if (!detected_.insert(item.id).second) continue;
            ++detections_[index_of(item.material)];
            const Condition cond = world_->spec().condition;
            engine_->record("DETECTION", Json{{"auv", a.id},
                                              {"item", item.id},
                                              {"material", std::string(to_string(item.material))},
                                              {"position", vec_json(item.position)}});
            const MaterialClass predicted =
                sensing::sample_confusion(cfg_.confusion, item.material, cond, engine_->stream("sensing"));
            engine_->record("CLASSIFIED", Json{{"auv", a.id},
                                               {"item", item.id},
                                               {"true", std::string(to_string(item.material))},
                                               {"predicted", std::string(to_string(predicted))},
                                               {"condition", to_string(cond)}});
        }
    }

    World* world_;
    Engine* engine_ = nullptr;
    std::vector<AuvState> fleet_;
    std::vector<ChargingStation> stations_;
    MissionConfig cfg_;
    TransectPlan plan_;
    std::vector<Strip> strips_;
    std::vector<CoverageGrid> grids_;
    double swath_ = 0.0;
    std::deque<MissionCommand> commands_;
    std::set<std::uint32_t> detected_;
    std::array<std::uint64_t, kMaterialCount> detections_{};
    bool complete_ = false;
    bool aborted_ = false;
};

}  // namespace abyss::mission
