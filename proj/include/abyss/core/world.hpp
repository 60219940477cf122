// Survey volume and the pollutant inventory the fleet is looking for.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/core/geometry.hpp"

namespace abyss {

enum class MaterialClass : std::uint8_t { PAPERBOARD = 0, HDPE, PET, ALUMINIUM, CERAMIC, WOOD };

inline constexpr std::size_t kMaterialCount = 6;

inline constexpr std::array<MaterialClass, kMaterialCount> kAllMaterials = {
    MaterialClass::PAPERBOARD, MaterialClass::HDPE,    MaterialClass::PET,
    MaterialClass::ALUMINIUM,  MaterialClass::CERAMIC, MaterialClass::WOOD};

inline constexpr std::size_t index_of(MaterialClass m) noexcept { return static_cast<std::size_t>(m); }

inline constexpr std::string_view to_string(MaterialClass m) noexcept {
    constexpr std::array<std::string_view, kMaterialCount> names = {
        "PAPERBOARD", "HDPE", "PET", "ALUMINIUM", "CERAMIC", "WOOD"};
    return names[index_of(m)];
}

inline std::optional<MaterialClass> parse_material(std::string_view s) noexcept {
    for (auto m : kAllMaterials) {
        if (to_string(m) == s) return m;
    }
    return std::nullopt;
}

enum class Medium : std::uint8_t { AIR = 0, WATER };
enum class Luminosity : std::uint8_t { AMBIENT = 0, DARKNESS };

/// One cell of the 2x2 sensing design.
struct Condition {
    Medium medium = Medium::WATER;
    Luminosity luminosity = Luminosity::AMBIENT;

    constexpr bool operator==(const Condition&) const noexcept = default;
    constexpr std::size_t index() const noexcept {
        return static_cast<std::size_t>(medium) * 2 + static_cast<std::size_t>(luminosity);
    }
};

inline constexpr std::array<Condition, 4> kAllConditions = {
    Condition{Medium::AIR, Luminosity::AMBIENT}, Condition{Medium::AIR, Luminosity::DARKNESS},
    Condition{Medium::WATER, Luminosity::AMBIENT}, Condition{Medium::WATER, Luminosity::DARKNESS}};

inline constexpr std::string_view to_string(Medium m) noexcept { return m == Medium::AIR ? "air" : "water"; }
inline constexpr std::string_view to_string(Luminosity l) noexcept {
    return l == Luminosity::AMBIENT ? "ambient" : "darkness";
}

/// "water/ambient" style label used in reports and scenario files.
inline std::string to_string(const Condition& c) {
    return std::string(to_string(c.medium)) + "/" + std::string(to_string(c.luminosity));
}

inline std::optional<Medium> parse_medium(std::string_view s) noexcept {
    if (s == "air") return Medium::AIR;
    if (s == "water") return Medium::WATER;
    return std::nullopt;
}

inline std::optional<Luminosity> parse_luminosity(std::string_view s) noexcept {
    if (s == "ambient") return Luminosity::AMBIENT;
    if (s == "darkness") return Luminosity::DARKNESS;
    return std::nullopt;
}

inline std::optional<Condition> parse_condition(std::string_view s) noexcept {
    const auto slash = s.find('/');
    if (slash == std::string_view::npos) return std::nullopt;
    auto m = parse_medium(s.substr(0, slash));
    auto l = parse_luminosity(s.substr(slash + 1));
    if (!m || !l) return std::nullopt;
    return Condition{*m, *l};
}

inline constexpr double kSunlightZoneDepth = 200.0;

struct WorldSpec {
    Vec3 bounds_min;
    Vec3 bounds_max;
    double max_depth = kSunlightZoneDepth;
    Condition condition;

    void validate() const {
        if (!bounds_min.finite() || !bounds_max.finite()) throw ConfigurationError("world bounds must be finite");
        if (!(bounds_max.x > bounds_min.x) || !(bounds_max.y > bounds_min.y)) {
            throw ConfigurationError("world bounds need positive extent on x and y");
        }
        if (bounds_max.z < bounds_min.z) throw ConfigurationError("world bounds z range inverted");
        if (!(max_depth > 0.0) || max_depth > kSunlightZoneDepth) {
            throw ConfigurationError("max_depth must be in (0, 200] m");
        }
    }

    bool inside(const Vec3& p) const noexcept {
        return p.x >= bounds_min.x && p.x <= bounds_max.x && p.y >= bounds_min.y && p.y <= bounds_max.y &&
               p.z >= bounds_min.z && p.z <= bounds_max.z;
    }

    double diagonal() const noexcept { return distance(bounds_min, bounds_max); }
};

struct PollutantItem {
    std::uint32_t id = 0;
    Vec3 position;
    MaterialClass material = MaterialClass::PAPERBOARD;
    double size = 0.1;
};

struct PlumeSource {
    Vec3 position;
    double strength = 0.0;
    double decay_length = 1.0;
};

struct PlumeField {
    std::vector<PlumeSource> sources;

    void validate() const {
        for (const auto& s : sources) {
            if (!(s.strength >= 0.0)) throw ConfigurationError("plume strength must be >= 0");
            if (!(s.decay_length > 0.0)) throw ConfigurationError("plume decay_length must be > 0");
        }
    }
};

inline double plume_concentration(const PlumeField& field, const Vec3& p) noexcept {
    double c = 0.0;
    for (const auto& s : field.sources) c += s.strength * std::exp(-distance(p, s.position) / s.decay_length);
    return c;
}

/// World spec plus mutable pollutant inventory. Items stay sorted by id.
class World {
public:
    World() = default;

    World(WorldSpec spec, std::vector<PollutantItem> items, PlumeField plume = {})
        : spec_(spec), items_(std::move(items)), plume_(std::move(plume)) {
        spec_.validate();
        plume_.validate();
        std::sort(items_.begin(), items_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
        for (std::size_t i = 0; i < items_.size(); ++i) {
            const auto& it = items_[i];
            if (i > 0 && items_[i - 1].id == it.id) {
                throw ConfigurationError("duplicate pollutant id " + std::to_string(it.id));
            }
            if (!(it.size > 0.0)) throw ConfigurationError("pollutant size must be > 0");
            if (!spec_.inside(it.position)) {
                throw ConfigurationError("pollutant " + std::to_string(it.id) + " outside world bounds");
            }
        }
    }

    const WorldSpec& spec() const noexcept { return spec_; }
    const std::vector<PollutantItem>& items() const noexcept { return items_; }
    const PlumeField& plume() const noexcept { return plume_; }

    /// Items whose distance to `center` is at most `radius`, in id order.
    std::vector<PollutantItem> items_within(const Vec3& center, double radius) const {
        if (!(radius >= 0.0)) throw ArgumentError("items_within: radius must be >= 0");
        std::vector<PollutantItem> out;
        for (const auto& it : items_) {
            if (distance(center, it.position) <= radius) out.push_back(it);
        }
        return out;
    }

    bool remove_item(std::uint32_t id) {
        auto pos = std::lower_bound(items_.begin(), items_.end(), id,
                                    [](const PollutantItem& it, std::uint32_t v) { return it.id < v; });
        if (pos == items_.end() || pos->id != id) return false;
        items_.erase(pos);
        return true;
    }

private:
    WorldSpec spec_;
    std::vector<PollutantItem> items_;
    PlumeField plume_;
};

}  // namespace abyss
