// Underwater link models. Latency is bits/bandwidth + d/speed + fixed; loss is
// one Bernoulli draw per message from the "comms" stream, no retries.
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/sim/engine.hpp"

namespace abyss {

struct Breakpoint {
    double max_distance = 0.0;
    double delivery_probability = 0.0;
};

class DeliveryCurve {
public:
    DeliveryCurve() = default;

    explicit DeliveryCurve(std::vector<Breakpoint> breakpoints) : breakpoints_(std::move(breakpoints)) {
        for (std::size_t i = 0; i < breakpoints_.size(); ++i) {
            const auto& b = breakpoints_[i];
            if (!(b.delivery_probability >= 0.0 && b.delivery_probability <= 1.0)) {
                throw ConfigurationError("delivery probability must be in [0, 1]");
            }
            if (!(b.max_distance >= 0.0)) throw ConfigurationError("breakpoint distance must be >= 0");
            if (i > 0 && !(b.max_distance > breakpoints_[i - 1].max_distance)) {
                throw ConfigurationError("breakpoint distances must be strictly increasing");
            }
        }
    }

    /// Probability of the first breakpoint whose max_distance >= d, else 0.
    double probability(double d) const noexcept {
        for (const auto& b : breakpoints_) {
            if (d <= b.max_distance) return b.delivery_probability;
        }
        return 0.0;
    }

    bool non_increasing() const noexcept {
        for (std::size_t i = 1; i < breakpoints_.size(); ++i) {
            if (breakpoints_[i].delivery_probability > breakpoints_[i - 1].delivery_probability) return false;
        }
        return true;
    }

    /// Largest distance that still has a non-zero delivery probability.
    double reach() const noexcept {
        double r = 0.0;
        for (const auto& b : breakpoints_) {
            if (b.delivery_probability > 0.0) r = b.max_distance;
        }
        return r;
    }

    const std::vector<Breakpoint>& breakpoints() const noexcept { return breakpoints_; }

private:
    std::vector<Breakpoint> breakpoints_;
};

struct LinkSpec {
    std::string name;
    double bandwidth = 1.0;          // bits/s
    double propagation_speed = 1.0;  // m/s
    double fixed_latency = 0.0;      // s
    DeliveryCurve curve;

    void validate() const {
        if (name.empty()) throw ConfigurationError("link name must be non-empty");
        if (!(bandwidth > 0.0)) throw ConfigurationError("link " + name + ": bandwidth must be > 0");
        if (!(propagation_speed > 0.0)) throw ConfigurationError("link " + name + ": propagation_speed must be > 0");
        if (!(fixed_latency >= 0.0)) throw ConfigurationError("link " + name + ": fixed_latency must be >= 0");
    }
};

namespace links {

/// Short-range WiFi between encased phones; breakpoints are the measured
/// 7 cm / 10 cm steps.
inline LinkSpec paper_wifi() {
    return {"paper-wifi", 2.0e7, 2.25e8, 0.002, DeliveryCurve({{0.07, 1.0}, {0.10, 0.70}})};
}

/// Placeholder long-range acoustic modem: 10 kb/s, sound speed, 1 km reach.
inline LinkSpec acoustic() { return {"acoustic", 1.0e4, 1500.0, 0.0, DeliveryCurve({{1000.0, 1.0}})}; }

/// Meter-scale optical profile for fleet scenarios.
inline LinkSpec optical() { return {"optical", 1.0e6, 2.25e8, 0.001, DeliveryCurve({{5.0, 1.0}, {10.0, 0.70}})}; }

/// Built-in profiles by name; each is checked to be non-increasing on load.
inline std::map<std::string, LinkSpec> builtin() {
    std::map<std::string, LinkSpec> out;
    for (auto spec : {paper_wifi(), acoustic(), optical()}) {
        spec.validate();
        if (!spec.curve.non_increasing()) {
            throw ConfigurationError("built-in profile " + spec.name + " is not non-increasing");
        }
        out.emplace(spec.name, std::move(spec));
    }
    return out;
}

}  // namespace links

inline double delivery_probability(const LinkSpec& link, double d) {
    if (!(d >= 0.0)) throw ArgumentError("delivery_probability: distance must be >= 0");
    return link.curve.probability(d);
}

/// fixed_latency + size / bandwidth + d / propagation_speed.
inline double latency(const LinkSpec& link, double size_bits, double d) {
    if (!(size_bits > 0.0)) throw ArgumentError("latency: size must be > 0");
    if (!(d >= 0.0)) throw ArgumentError("latency: distance must be >= 0");
    return link.fixed_latency + size_bits / link.bandwidth + d / link.propagation_speed;
}

/// Time the sender's radio is occupied serializing the message.
inline double serialization_time(const LinkSpec& link, double size_bits) { return size_bits / link.bandwidth; }

struct Message {
    std::uint64_t id = 0;
    std::string src;
    std::string dst;
    double size = 1.0;  // bits
    std::string kind;
    Json payload = Json::object();
};

struct DeliveryOutcome {
    bool delivered = false;
    double arrival_time = 0.0;
};

/// Per (link, src, dst) latest scheduled arrival; keeps delivery FIFO per pair.
class FifoLedger {
public:
    double arrival_after(const std::string& link, const std::string& src, const std::string& dst,
                         double earliest) {
        auto& last = last_[{link, src, dst}];
        last = std::max(last, earliest);
        return last;
    }

private:
    std::map<std::tuple<std::string, std::string, std::string>, double> last_;
};

inline constexpr const char* kReceiveEvent = "RECEIVE";

/// Logs SEND, then exactly one outcome: an immediate DROP record, or a
/// RECEIVE event scheduled at the arrival time.
inline DeliveryOutcome transmit(Engine& engine, FifoLedger& fifo, const LinkSpec& link, const Message& msg,
                                double d, RngStream& rng) {
    if (msg.src == msg.dst) throw ArgumentError("transmit: src and dst must differ");
    if (!(msg.size > 0.0)) throw ArgumentError("transmit: message size must be > 0");
    const double p = delivery_probability(link, d);
    const double draw = rng.uniform();
    Json head{{"msg", msg.id}, {"src", msg.src}, {"dst", msg.dst}, {"msg_kind", msg.kind}, {"link", link.name}};
    Json send = head;
    send["bits"] = msg.size;
    send["distance"] = d;
    engine.record("SEND", std::move(send));
    if (draw < p) {
        const double arrival = fifo.arrival_after(link.name, msg.src, msg.dst, engine.now() + latency(link, msg.size, d));
        head["payload"] = msg.payload;
        engine.schedule(arrival, kReceiveEvent, std::move(head));
        return {true, arrival};
    }
    engine.record("DROP", std::move(head));
    return {false, engine.now()};
}

inline DeliveryOutcome transmit(Engine& engine, FifoLedger& fifo, const LinkSpec& link, const Message& msg,
                                double d) {
    return transmit(engine, fifo, link, msg, d, engine.stream("comms"));
}

}  // namespace abyss
