// Scenario files. JSON, strictly checked; any problem raises ValidationError
// carrying a JSON path.
#pragma once

#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "abyss/comms/link.hpp"
#include "abyss/core/error.hpp"
#include "abyss/core/world.hpp"
#include "abyss/mission/mission.hpp"
#include "abyss/offload/offload.hpp"
#include "abyss/sensing/bench.hpp"
#include "abyss/sensing/confusion.hpp"
#include "abyss/sensing/trace.hpp"

namespace abyss::scenario {

using mission::AreaSpec;
using mission::AuvParams;
using mission::AuvState;
using mission::ChargingStation;
using mission::Constraint;
using mission::PlanParams;

struct RandomPollutants {
    std::size_t count = 0;
    Vec3 min;
    Vec3 max;
    std::vector<MaterialClass> materials{kAllMaterials.begin(), kAllMaterials.end()};
    double size = 0.2;
};

struct PlanSection {
    PlanParams params;
    std::string comms_link = "optical";
    std::optional<double> comms_range;
    bool return_policy = true;
    double safety_margin = 0.2;
    double cell_size = 1.0;
    double position_noise = 0.0;
};

struct OffloadSection {
    std::vector<std::string> devices;
    std::optional<std::string> master;  // elected at random when absent
    std::size_t frames = 50;
    double frame_bits = 160000.0;
    std::string frame_link = "paper-wifi";
    std::string result_link = "paper-wifi";
    double default_distance = 0.05;
    OffloadConfig config;  // links and distances resolved on load
};

struct SensingSection {
    sensing::GeneratorSpec generator = sensing::presets::paper_like();
    std::string generator_name = "paper-like";
    sensing::ConfusionModel confusion = sensing::presets::table2_confusion();
    sensing::BenchConfig bench;
    bool run_bench = false;
    bool bench_seed_set = false;  // otherwise the bench follows the run seed
};

struct Scenario {
    std::string name = "unnamed";
    std::uint64_t seed = 1;
    double duration = 3600.0;
    double dt = 1.0;
    WorldSpec world;
    std::vector<PollutantItem> items;
    std::optional<RandomPollutants> random_items;
    PlumeField plume;
    std::map<std::string, LinkSpec> links = links::builtin();
    std::vector<AuvState> fleet;
    std::vector<ChargingStation> stations;
    std::vector<AreaSpec> areas;
    std::vector<Constraint> constraints;
    PlanSection plan;
    std::optional<OffloadSection> offload;
    SensingSection sensing;

    bool has_mission() const noexcept { return !fleet.empty() && !areas.empty(); }
    bool has_bench() const noexcept { return sensing.run_bench; }
};

namespace detail {

/// Object view that tracks which keys were read and rejects the rest.
class Obj {
public:
    Obj(const Json& j, std::string path) : j_(&j), path_(std::move(path)) {
        if (!j.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& what) const { throw ValidationError(path_ + ": " + what); }

    bool has(const std::string& k) const { return j_->contains(k); }

    const Json* get(const std::string& k) {
        seen_.insert(k);
        auto it = j_->find(k);
        return it == j_->end() ? nullptr : &*it;
    }

    const Json& need(const std::string& k) {
        const Json* v = get(k);
        if (!v) fail("missing required key '" + k + "'");
        return *v;
    }

    std::string sub(const std::string& k) const { return path_ + "." + k; }

    double number(const std::string& k, double fallback) {
        const Json* v = get(k);
        if (!v) return fallback;
        return as_number(*v, sub(k));
    }

    double number(const std::string& k) { return as_number(need(k), sub(k)); }

    std::uint64_t count(const std::string& k, std::uint64_t fallback) {
        const Json* v = get(k);
        if (!v) return fallback;
        if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0)) {
            throw ValidationError(sub(k) + ": expected a non-negative integer");
        }
        return v->get<std::uint64_t>();
    }

    bool boolean(const std::string& k, bool fallback) {
        const Json* v = get(k);
        if (!v) return fallback;
        if (!v->is_boolean()) throw ValidationError(sub(k) + ": expected true or false");
        return v->get<bool>();
    }

    std::string text(const std::string& k, const std::string& fallback) {
        const Json* v = get(k);
        if (!v) return fallback;
        if (!v->is_string()) throw ValidationError(sub(k) + ": expected a string");
        return v->get<std::string>();
    }

    /// Call once every key has been consumed.
    void done() const {
        for (const auto& [k, _] : j_->items()) {
            if (!seen_.contains(k)) throw ValidationError(path_ + ": unknown key '" + k + "'");
        }
    }

    static double as_number(const Json& v, const std::string& path) {
        if (!v.is_number()) throw ValidationError(path + ": expected a number");
        const double d = v.get<double>();
        if (!std::isfinite(d)) throw ValidationError(path + ": not finite");
        return d;
    }

private:
    const Json* j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline std::vector<double> numbers(const Json& v, const std::string& path, std::size_t n) {
    if (!v.is_array() || v.size() != n) {
        throw ValidationError(path + ": expected an array of " + std::to_string(n) + " numbers");
    }
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(Obj::as_number(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline Vec3 vec3(const Json& v, const std::string& path) {
    const auto n = numbers(v, path, 3);
    return {n[0], n[1], n[2]};
}

inline Vec2 vec2(const Json& v, const std::string& path) {
    const auto n = numbers(v, path, 2);
    return {n[0], n[1]};
}

inline std::vector<Vec2> polygon(const Json& v, const std::string& path) {
    if (!v.is_array()) throw ValidationError(path + ": expected an array of [x, y] points");
    std::vector<Vec2> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(vec2(v[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

inline MaterialClass material(const Json& v, const std::string& path) {
    if (!v.is_string()) throw ValidationError(path + ": expected a material name");
    auto m = parse_material(v.get<std::string>());
    if (!m) throw ValidationError(path + ": unknown material '" + v.get<std::string>() + "'");
    return *m;
}

inline Condition condition(const Json& v, const std::string& path) {
    if (!v.is_string()) throw ValidationError(path + ": expected a condition such as \"water/ambient\"");
    auto c = parse_condition(v.get<std::string>());
    if (!c) throw ValidationError(path + ": unknown condition '" + v.get<std::string>() + "'");
    return *c;
}

template <class F>
void each(const Json& v, const std::string& path, F&& f) {
    if (!v.is_array()) throw ValidationError(path + ": expected an array");
    for (std::size_t i = 0; i < v.size(); ++i) f(v[i], path + "[" + std::to_string(i) + "]");
}

}  // namespace detail

inline AreaSpec parse_area(const Json& j, const std::string& path) {
    detail::Obj o(j, path);
    AreaSpec a;
    a.polygon = detail::polygon(o.need("polygon"), o.sub("polygon"));
    if (const Json* d = o.get("depth_range")) {
        const auto r = detail::numbers(*d, o.sub("depth_range"), 2);
        a.depth_top = std::max(r[0], r[1]);
        a.depth_bottom = std::min(r[0], r[1]);
    }
    o.done();
    if (a.polygon.size() < 3) throw ValidationError(path + ": polygon needs at least 3 vertices");
    if (!is_simple_polygon(a.polygon)) throw ValidationError(path + ": polygon is self-intersecting or degenerate");
    return a;
}

inline Constraint parse_constraint(const Json& j, const std::string& path) {
    detail::Obj o(j, path);
    Constraint c;
    const std::string kind = o.text("kind", "MIN_STANDOFF");
    if (kind != "MIN_STANDOFF") throw ValidationError(o.sub("kind") + ": only MIN_STANDOFF is supported");
    if (const Json* p = o.get("point")) c.point = detail::vec2(*p, o.sub("point"));
    if (const Json* r = o.get("region")) c.region = detail::polygon(*r, o.sub("region"));
    c.distance = o.number("distance");
    c.label = o.text("label", "");
    o.done();
    try {
        c.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return c;
}

inline PlanParams parse_plan_params(detail::Obj& o, PlanParams p) {
    const std::string type = o.text("type", mission::to_string(p.dimensionality));
    if (type == "belt") {
        p.dimensionality = mission::Dimensionality::BELT_2D;
    } else if (type == "grid3d") {
        p.dimensionality = mission::Dimensionality::GRID_3D;
    } else {
        o.fail("type must be \"belt\" or \"grid3d\"");
    }
    p.strip_spacing = o.number("strip_spacing", p.strip_spacing);
    p.swath_width = o.number("swath_width", p.swath_width);
    p.layer_spacing = o.number("layer_spacing", p.layer_spacing);
    if (!(p.strip_spacing > 0.0)) o.fail("strip_spacing must be > 0");
    if (!(p.layer_spacing > 0.0)) o.fail("layer_spacing must be > 0");
    if (p.swath_width < 0.0) o.fail("swath_width must be >= 0");
    return p;
}

inline LinkSpec parse_link(const Json& j, const std::string& name, const std::map<std::string, LinkSpec>& known,
                           const std::string& path) {
    detail::Obj o(j, path);
    LinkSpec l;
    if (const Json* b = o.get("base")) {
        if (!b->is_string() || !known.contains(b->get<std::string>())) {
            throw ValidationError(o.sub("base") + ": unknown link profile");
        }
        l = known.at(b->get<std::string>());
    }
    l.name = name;
    l.bandwidth = o.number("bandwidth", l.bandwidth);
    l.propagation_speed = o.number("propagation_speed", l.propagation_speed);
    l.fixed_latency = o.number("fixed_latency", l.fixed_latency);
    if (const Json* c = o.get("curve")) {
        std::vector<Breakpoint> bps;
        detail::each(*c, o.sub("curve"), [&](const Json& bp, const std::string& p) {
            const auto n = detail::numbers(bp, p, 2);
            bps.push_back({n[0], n[1]});
        });
        try {
            l.curve = DeliveryCurve(std::move(bps));
        } catch (const ConfigurationError& e) {
            throw ValidationError(o.sub("curve") + ": " + e.what());
        }
    }
    o.done();
    try {
        l.validate();
    } catch (const std::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return l;
}

inline AuvParams parse_auv_params(detail::Obj& o, AuvParams p) {
    p.speed = o.number("speed", p.speed);
    p.capacity = o.number("capacity", p.capacity);
    p.motion_power = o.number("motion_power", p.motion_power);
    p.hotel_power = o.number("hotel_power", p.hotel_power);
    p.camera_range = o.number("camera_range", p.camera_range);
    try {
        p.validate();
    } catch (const ConfigurationError& e) {
        o.fail(e.what());
    }
    return p;
}

inline sensing::GeneratorSpec parse_generator(const Json& j, std::string& name, const std::string& path) {
    auto preset = [&](const std::string& n, const std::string& p) {
        if (n == "paper-like") return sensing::presets::paper_like();
        if (n == "chance") return sensing::presets::chance();
        throw ValidationError(p + ": unknown generator preset '" + n + "'");
    };
    if (j.is_string()) {
        name = j.get<std::string>();
        return preset(name, path);
    }
    detail::Obj o(j, path);
    name = o.text("preset", "paper-like");
    sensing::GeneratorSpec g = preset(name, o.sub("preset"));
    g.ambient_floor = o.number("ambient_floor", g.ambient_floor);
    g.drift_period = o.number("drift_period", g.drift_period);
    if (const Json* ch = o.get("channels")) {
        name = "custom";
        detail::each(*ch, o.sub("channels"), [&](const Json& c, const std::string& p) {
            detail::Obj co(c, p);
            const MaterialClass m = detail::material(co.need("material"), co.sub("material"));
            const Condition cond = detail::condition(co.need("condition"), co.sub("condition"));
            sensing::ChannelParams cp{co.number("mean"), co.number("stddev"), co.number("drift_amplitude", 0.0)};
            co.done();
            try {
                g.set(m, cond, cp);
            } catch (const ConfigurationError& e) {
                throw ValidationError(p + ": " + e.what());
            }
        });
    }
    o.done();
    if (!(g.drift_period > 0.0)) throw ValidationError(path + ": drift_period must be > 0");
    return g;
}

inline sensing::ConfusionModel parse_confusion(const Json& j, const std::string& path) {
    if (j.is_string()) {
        const auto n = j.get<std::string>();
        if (n == "table2") return sensing::presets::table2_confusion();
        if (n == "identity") return sensing::ConfusionModel{};
        if (n == "uniform") {
            sensing::ConfusionModel m;
            for (auto c : kAllConditions) m.set(c, sensing::ConfusionModel::uniform_matrix());
            return m;
        }
        throw ValidationError(path + ": unknown confusion preset '" + n + "'");
    }
    if (!j.is_object()) throw ValidationError(path + ": expected a preset name or an object keyed by condition");
    sensing::ConfusionModel m = sensing::presets::table2_confusion();
    for (const auto& [key, v] : j.items()) {
        const std::string p = path + "." + key;
        auto cond = parse_condition(key);
        if (!cond) throw ValidationError(p + ": unknown condition");
        try {
            if (v.is_number()) {
                m.set(*cond, sensing::ConfusionModel::diagonal_matrix(v.get<double>()));
            } else {
                if (!v.is_array() || v.size() != kMaterialCount) throw ValidationError(p + ": expected a 6x6 matrix");
                sensing::ConfusionMatrix mat{};
                for (std::size_t r = 0; r < kMaterialCount; ++r) {
                    const auto row = detail::numbers(v[r], p + "[" + std::to_string(r) + "]", kMaterialCount);
                    for (std::size_t c = 0; c < kMaterialCount; ++c) mat[r][c] = row[c];
                }
                m.set(*cond, mat);
            }
        } catch (const ConfigurationError& e) {
            throw ValidationError(p + ": " + e.what());
        }
    }
    return m;
}

inline sensing::BenchConfig parse_bench(const Json& j, const std::string& path) {
    detail::Obj o(j, path);
    sensing::BenchConfig b;
    b.repetitions = o.count("repetitions", b.repetitions);
    b.window_seconds = o.number("window_seconds", b.window_seconds);
    b.stats_window_seconds = o.number("stats_window_seconds", b.stats_window_seconds);
    b.folds = o.count("folds", b.folds);
    b.knn.k = static_cast<int>(o.count("knn_k", b.knn.k));
    b.forest.trees = static_cast<int>(o.count("forest_trees", b.forest.trees));
    b.forest.max_depth = static_cast<int>(o.count("forest_max_depth", b.forest.max_depth));
    b.forest.feature_subsample = static_cast<int>(o.count("forest_features", b.forest.feature_subsample));
    b.seed = o.count("seed", b.seed);
    o.done();
    if (b.repetitions == 0) throw ValidationError(path + ": repetitions must be >= 1");
    if (b.knn.k % 2 == 0) throw ValidationError(path + ".knn_k: k must be odd");
    if (!(b.window_seconds > 0.0) || !(b.stats_window_seconds > 0.0)) {
        throw ValidationError(path + ": window lengths must be > 0");
    }
    return b;
}

inline SensingSection parse_sensing(const Json& j, const std::string& path) {
    detail::Obj o(j, path);
    SensingSection s;
    if (const Json* g = o.get("generator")) s.generator = parse_generator(*g, s.generator_name, o.sub("generator"));
    if (const Json* c = o.get("confusion")) s.confusion = parse_confusion(*c, o.sub("confusion"));
    if (const Json* b = o.get("bench")) {
        s.bench = parse_bench(*b, o.sub("bench"));
        s.run_bench = true;
        s.bench_seed_set = b->contains("seed");
    }
    o.done();
    return s;
}

inline void parse_world(const Json& j, Scenario& sc, const std::string& path) {
    detail::Obj o(j, path);
    detail::Obj b(o.need("bounds"), o.sub("bounds"));
    sc.world.bounds_min = detail::vec3(b.need("min"), b.sub("min"));
    sc.world.bounds_max = detail::vec3(b.need("max"), b.sub("max"));
    b.done();
    sc.world.max_depth = o.number("max_depth", sc.world.max_depth);
    if (const Json* c = o.get("condition")) sc.world.condition = detail::condition(*c, o.sub("condition"));
    if (const Json* p = o.get("pollutants")) {
        detail::Obj po(*p, o.sub("pollutants"));
        if (const Json* items = po.get("items")) {
            detail::each(*items, po.sub("items"), [&](const Json& it, const std::string& ip) {
                detail::Obj io(it, ip);
                PollutantItem item;
                item.id = static_cast<std::uint32_t>(io.count("id", sc.items.size() + 1));
                item.position = detail::vec3(io.need("position"), io.sub("position"));
                item.material = detail::material(io.need("material"), io.sub("material"));
                item.size = io.number("size", item.size);
                io.done();
                sc.items.push_back(item);
            });
        }
        if (const Json* r = po.get("random")) {
            detail::Obj ro(*r, po.sub("random"));
            RandomPollutants rp;
            rp.count = ro.count("count", 0);
            rp.min = ro.has("min") ? detail::vec3(ro.need("min"), ro.sub("min")) : sc.world.bounds_min;
            rp.max = ro.has("max") ? detail::vec3(ro.need("max"), ro.sub("max")) : sc.world.bounds_max;
            if (const Json* ms = ro.get("materials")) {
                rp.materials.clear();
                detail::each(*ms, ro.sub("materials"),
                             [&](const Json& m, const std::string& mp) { rp.materials.push_back(detail::material(m, mp)); });
                if (rp.materials.empty()) throw ValidationError(ro.sub("materials") + ": must not be empty");
            }
            rp.size = ro.number("size", rp.size);
            ro.done();
            sc.random_items = rp;
        }
        po.done();
    }
    if (const Json* pl = o.get("plumes")) {
        detail::each(*pl, o.sub("plumes"), [&](const Json& s, const std::string& sp) {
            detail::Obj so(s, sp);
            PlumeSource src;
            src.position = detail::vec3(so.need("position"), so.sub("position"));
            src.strength = so.number("strength");
            src.decay_length = so.number("decay_length");
            so.done();
            sc.plume.sources.push_back(src);
        });
    }
    o.done();
}

inline void parse_fleet(const Json& j, Scenario& sc, const std::string& path) {
    detail::Obj o(j, path);
    AuvParams defaults;
    std::optional<double> default_battery;
    std::optional<Vec3> start;
    if (const Json* d = o.get("defaults")) {
        detail::Obj d_o(*d, o.sub("defaults"));
        defaults = parse_auv_params(d_o, defaults);
        if (d_o.has("battery")) default_battery = d_o.number("battery");
        d_o.done();
    }
    if (const Json* s = o.get("start")) start = detail::vec3(*s, o.sub("start"));
    const std::size_t count = o.count("count", 0);
    std::vector<bool> placed;
    if (const Json* vs = o.get("vehicles")) {
        detail::each(*vs, o.sub("vehicles"), [&](const Json& v, const std::string& vp) {
            detail::Obj vo(v, vp);
            AuvState a;
            a.id = vo.text("id", "auv-" + std::to_string(sc.fleet.size() + 1));
            a.params = parse_auv_params(vo, defaults);
            a.battery = vo.number("battery", default_battery.value_or(a.params.capacity));
            const Json* p = vo.get("position");
            if (p) a.position = detail::vec3(*p, vo.sub("position"));
            else if (start) a.position = *start;
            vo.done();
            placed.push_back(p != nullptr || start.has_value());
            sc.fleet.push_back(std::move(a));
        });
    }
    for (std::size_t i = sc.fleet.size(); i < count; ++i) {
        AuvState a;
        a.id = "auv-" + std::to_string(i + 1);
        a.params = defaults;
        a.battery = default_battery.value_or(defaults.capacity);
        if (start) a.position = *start;
        placed.push_back(start.has_value());
        sc.fleet.push_back(std::move(a));
    }
    o.done();
    // Vehicles without a start position wait at the first station.
    for (std::size_t i = 0; i < sc.fleet.size(); ++i) {
        if (!placed[i] && !sc.stations.empty()) sc.fleet[i].position = sc.stations.front().position;
    }
}

inline OffloadSection parse_offload(const Json& j, const Scenario& sc, const std::string& path) {
    detail::Obj o(j, path);
    OffloadSection s;
    const Json& dev = o.need("devices");
    if (dev.is_number_unsigned() || dev.is_number_integer()) {
        const auto n = dev.get<std::int64_t>();
        if (n < 2) throw ValidationError(o.sub("devices") + ": a micro-cloud needs at least 2 devices");
        for (std::int64_t i = 1; i <= n; ++i) s.devices.push_back("dev-" + std::to_string(i));
    } else {
        detail::each(dev, o.sub("devices"), [&](const Json& d, const std::string& p) {
            if (!d.is_string()) throw ValidationError(p + ": expected a device name");
            s.devices.push_back(d.get<std::string>());
        });
        if (s.devices.size() < 2) throw ValidationError(o.sub("devices") + ": a micro-cloud needs at least 2 devices");
        const std::set<std::string> uniq(s.devices.begin(), s.devices.end());
        if (uniq.size() != s.devices.size()) throw ValidationError(o.sub("devices") + ": duplicate device name");
    }
    if (const Json* m = o.get("master")) {
        if (!m->is_string() || std::find(s.devices.begin(), s.devices.end(), m->get<std::string>()) == s.devices.end()) {
            throw ValidationError(o.sub("master") + ": must name one of the devices");
        }
        s.master = m->get<std::string>();
    }
    s.frames = o.count("frames", s.frames);
    if (s.frames == 0) throw ValidationError(o.sub("frames") + ": must be >= 1");
    s.frame_bits = o.number("frame_bits", s.frame_bits);
    s.config.result_bits = o.number("result_bits", s.config.result_bits);
    if (!(s.frame_bits > 0.0) || !(s.config.result_bits > 0.0)) o.fail("message sizes must be > 0");
    s.frame_link = o.text("frame_link", s.frame_link);
    s.result_link = o.text("result_link", s.result_link);
    for (const auto& [key, name] : {std::pair{"frame_link", s.frame_link}, std::pair{"result_link", s.result_link}}) {
        if (!sc.links.contains(name)) throw ValidationError(o.sub(key) + ": unknown link profile '" + name + "'");
    }
    s.config.frame_link = sc.links.at(s.frame_link);
    s.config.result_link = sc.links.at(s.result_link);
    s.default_distance = o.number("default_distance", s.default_distance);
    for (const auto& d : s.devices) s.config.distances[d] = s.default_distance;
    // Distances are from the master; the master's own entry is ignored.
    if (const Json* ds = o.get("distances")) {
        if (!ds->is_object()) throw ValidationError(o.sub("distances") + ": expected an object of device -> meters");
        for (const auto& [dev_id, v] : ds->items()) {
            if (!s.config.distances.contains(dev_id)) {
                throw ValidationError(o.sub("distances") + ": unknown device '" + dev_id + "'");
            }
            s.config.distances[dev_id] = detail::Obj::as_number(v, o.sub("distances") + "." + dev_id);
        }
    }
    s.config.encased = o.boolean("encased", s.config.encased);
    s.config.submerged = o.boolean("submerged", s.config.submerged);
    if (s.config.submerged && !s.config.encased) o.fail("a submerged device must be encased");
    if (const Json* p = o.get("processing")) {
        detail::Obj po(*p, o.sub("processing"));
        s.config.model.base_time = po.number("base_time", s.config.model.base_time);
        s.config.model.encasing_overhead = po.number("encasing_overhead", s.config.model.encasing_overhead);
        s.config.model.submersion_overhead = po.number("submersion_overhead", s.config.model.submersion_overhead);
        po.done();
    }
    const std::string mode = o.text("mode", "pipelined");
    if (mode == "pipelined") {
        s.config.mode = DispatchMode::PIPELINED;
    } else if (mode == "stop_and_wait") {
        s.config.mode = DispatchMode::STOP_AND_WAIT;
    } else {
        o.fail("mode must be \"pipelined\" or \"stop_and_wait\"");
    }
    s.config.result_timeout = o.number("timeout", s.config.result_timeout);
    s.config.frame_interval = o.number("frame_interval", s.config.frame_interval);
    s.config.start_time = o.number("start_time", s.config.start_time);
    if (!(s.config.result_timeout > 0.0) || s.config.frame_interval < 0.0 || s.config.start_time < 0.0) {
        o.fail("timeout must be > 0; frame_interval and start_time must be >= 0");
    }
    o.done();
    return s;
}

/// Parses and cross-checks a scenario document.
inline Scenario parse_scenario(const Json& j) {
    detail::Obj o(j, "$");
    Scenario sc;
    sc.name = o.text("name", sc.name);
    o.text("description", "");
    sc.seed = o.count("seed", sc.seed);
    sc.duration = o.number("duration", sc.duration);
    sc.dt = o.number("dt", sc.dt);
    if (!(sc.duration > 0.0)) throw ValidationError("$.duration: must be > 0");
    if (!(sc.dt > 0.0)) throw ValidationError("$.dt: must be > 0");

    if (const Json* w = o.get("world")) {
        parse_world(*w, sc, "$.world");
    } else {
        sc.world.bounds_min = {-1000.0, -1000.0, -sc.world.max_depth};
        sc.world.bounds_max = {1000.0, 1000.0, 0.0};
    }
    try {
        sc.world.validate();
        sc.plume.validate();
    } catch (const ConfigurationError& e) {
        throw ValidationError(std::string("$.world: ") + e.what());
    }

    if (const Json* ls = o.get("links")) {
        if (!ls->is_object()) throw ValidationError("$.links: expected an object of name -> profile");
        for (const auto& [name, spec] : ls->items()) {
            sc.links[name] = parse_link(spec, name, sc.links, "$.links." + name);
        }
    }

    if (const Json* st = o.get("stations")) {
        detail::each(*st, "$.stations", [&](const Json& s, const std::string& p) {
            detail::Obj so(s, p);
            ChargingStation cs;
            cs.id = so.text("id", "station-" + std::to_string(sc.stations.size() + 1));
            cs.position = detail::vec3(so.need("position"), so.sub("position"));
            cs.charge_rate = so.number("charge_rate", cs.charge_rate);
            so.done();
            try {
                cs.validate();
            } catch (const ConfigurationError& e) {
                throw ValidationError(p + ": " + e.what());
            }
            sc.stations.push_back(cs);
        });
    }

    if (const Json* f = o.get("fleet")) parse_fleet(*f, sc, "$.fleet");

    if (const Json* as = o.get("areas")) {
        detail::each(*as, "$.areas", [&](const Json& a, const std::string& p) { sc.areas.push_back(parse_area(a, p)); });
    }
    for (std::size_t i = 0; i < sc.areas.size(); ++i) {
        try {
            sc.areas[i].validate(sc.world.max_depth);
        } catch (const ValidationError& e) {
            throw ValidationError("$.areas[" + std::to_string(i) + "]: " + e.what());
        }
    }
    if (const Json* cs = o.get("constraints")) {
        detail::each(*cs, "$.constraints",
                     [&](const Json& c, const std::string& p) { sc.constraints.push_back(parse_constraint(c, p)); });
    }

    if (const Json* p = o.get("plan")) {
        detail::Obj po(*p, "$.plan");
        sc.plan.params = parse_plan_params(po, sc.plan.params);
        sc.plan.comms_link = po.text("comms_link", sc.plan.comms_link);
        if (po.has("comms_range")) sc.plan.comms_range = po.number("comms_range");
        sc.plan.return_policy = po.boolean("return_policy", sc.plan.return_policy);
        sc.plan.safety_margin = po.number("safety_margin", sc.plan.safety_margin);
        sc.plan.cell_size = po.number("cell_size", sc.plan.cell_size);
        sc.plan.position_noise = po.number("position_noise", sc.plan.position_noise);
        po.done();
        if (!(sc.plan.safety_margin >= 0.0 && sc.plan.safety_margin < 1.0)) {
            throw ValidationError("$.plan.safety_margin: must be in [0, 1)");
        }
        if (!(sc.plan.cell_size > 0.0)) throw ValidationError("$.plan.cell_size: must be > 0");
        if (sc.plan.position_noise < 0.0) throw ValidationError("$.plan.position_noise: must be >= 0");
        if (sc.plan.comms_range && !(*sc.plan.comms_range > 0.0)) {
            throw ValidationError("$.plan.comms_range: must be > 0");
        }
    }
    if (!sc.links.contains(sc.plan.comms_link)) {
        throw ValidationError("$.plan.comms_link: unknown link profile '" + sc.plan.comms_link + "'");
    }

    if (const Json* off = o.get("offload")) sc.offload = parse_offload(*off, sc, "$.offload");
    if (const Json* s = o.get("sensing")) sc.sensing = parse_sensing(*s, "$.sensing");
    o.done();

    if (!sc.fleet.empty() && sc.areas.empty()) throw ValidationError("$.areas: a fleet needs at least one area");
    if (!sc.areas.empty() && sc.fleet.empty()) throw ValidationError("$.fleet: areas need at least one AUV");
    if (sc.has_mission() && sc.stations.empty()) {
        throw ValidationError("$.stations: a fleet needs at least one charging station");
    }
    std::set<std::string> ids;
    for (const auto& a : sc.fleet) {
        if (!ids.insert(a.id).second) throw ValidationError("$.fleet: duplicate AUV id '" + a.id + "'");
        if (!(a.battery >= 0.0 && a.battery <= a.params.capacity)) {
            throw ValidationError("$.fleet: battery of " + a.id + " must be within [0, capacity]");
        }
    }
    if (!sc.has_mission() && !sc.offload && !sc.has_bench()) {
        throw ValidationError("$: nothing to simulate (no fleet, offload or sensing bench)");
    }
    return sc;
}

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

inline Scenario load_scenario(const std::string& path) { return parse_scenario(read_json_file(path)); }

}  // namespace abyss::scenario
