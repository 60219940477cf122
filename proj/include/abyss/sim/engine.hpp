// Single-threaded discrete-event engine.
// Pending events are ordered by (time, insertion sequence). Every dispatched
// event that was scheduled as logged, and every explicit record(), appends one
// SimEvent to the canonical log. Handlers may schedule further events but
// never execute them directly.
#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <string>
#include <unordered_set>
#include <vector>

#include "abyss/core/error.hpp"
#include "abyss/sim/canonical.hpp"
#include "abyss/sim/rng.hpp"

namespace abyss {

struct EventHandle {
    std::uint64_t id = 0;
};

/// Min-queue over (time, insertion order). Cancelled entries are skipped lazily.
class EventQueue {
public:
    struct Entry {
        double time = 0.0;
        std::uint64_t insertion = 0;
        std::string kind;
        Json payload;
        bool logged = true;
    };

    EventHandle push(double time, std::string kind, Json payload, bool logged) {
        const std::uint64_t id = next_insertion_++;
        heap_.push(Entry{time, id, std::move(kind), std::move(payload), logged});
        ++live_;
        return {id};
    }

    bool cancel(EventHandle h) {
        if (h.id >= next_insertion_ || popped_.contains(h.id)) return false;
        if (!cancelled_.insert(h.id).second) return false;
        --live_;
        return true;
    }

    bool empty() {
        drop_cancelled();
        return heap_.empty();
    }

    std::size_t size() const noexcept { return live_; }

    const Entry& top() {
        drop_cancelled();
        return heap_.top();
    }

    Entry pop() {
        drop_cancelled();
        Entry e = heap_.top();
        heap_.pop();
        popped_.insert(e.insertion);
        --live_;
        return e;
    }

private:
    struct Later {
        bool operator()(const Entry& a, const Entry& b) const noexcept {
            if (a.time != b.time) return a.time > b.time;
            return a.insertion > b.insertion;
        }
    };

    void drop_cancelled() {
        while (!heap_.empty() && cancelled_.contains(heap_.top().insertion)) {
            cancelled_.erase(heap_.top().insertion);
            heap_.pop();
        }
    }

    std::priority_queue<Entry, std::vector<Entry>, Later> heap_;
    std::unordered_set<std::uint64_t> cancelled_;
    std::unordered_set<std::uint64_t> popped_;
    std::uint64_t next_insertion_ = 0;
    std::size_t live_ = 0;
};

class Engine {
public:
    using Handler = std::function<void(const SimEvent&)>;
    using Sink = std::function<void(const SimEvent&)>;

    explicit Engine(std::uint64_t master_seed = 0) : master_seed_(master_seed) {}

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;
    Engine(Engine&&) = default;
    Engine& operator=(Engine&&) = default;

    double now() const noexcept { return clock_; }
    std::uint64_t master_seed() const noexcept { return master_seed_; }

    EventHandle schedule(double time, std::string kind, Json payload = Json::object(), bool logged = true) {
        if (!std::isfinite(time)) throw SchedulingError("schedule: time must be finite");
        if (time < clock_) {
            throw SchedulingError("schedule: time " + std::to_string(time) + " is before clock " +
                                  std::to_string(clock_));
        }
        return queue_.push(time, std::move(kind), std::move(payload), logged);
    }

    EventHandle schedule_in(double delay, std::string kind, Json payload = Json::object(), bool logged = true) {
        return schedule(clock_ + delay, std::move(kind), std::move(payload), logged);
    }

    bool cancel(EventHandle h) { return queue_.cancel(h); }

    std::size_t pending() const noexcept { return queue_.size(); }

    /// Registers a handler; several handlers per kind run in registration order.
    void on(const std::string& kind, Handler h) { handlers_[kind].push_back(std::move(h)); }

    /// Appends a record at the current clock.
    const SimEvent& record(std::string kind, Json payload = Json::object()) {
        log_.push_back(SimEvent{log_.size(), clock_, std::move(kind), std::move(payload)});
        if (sink_) sink_(log_.back());
        return log_.back();
    }

    /// Observer called for every appended record (telemetry fan-out).
    void set_sink(Sink s) { sink_ = std::move(s); }

    /// Makes the current run_until return after the event being dispatched.
    void stop() noexcept { stop_requested_ = true; }

    /// Dispatches every event with time <= t_end. The clock ends at t_end
    /// unless a handler called stop(), in which case it stays at that event.
    void run_until(double t_end) {
        if (t_end < clock_) throw SchedulingError("run_until: t_end is before the clock");
        stop_requested_ = false;
        while (!queue_.empty() && queue_.top().time <= t_end) {
            dispatch(queue_.pop());
            if (stop_requested_) return;
        }
        if (std::isfinite(t_end)) clock_ = t_end;
    }

    /// Dispatches until the queue drains; the clock stays at the last event.
    void run_until_idle() { run_until(std::numeric_limits<double>::infinity()); }

    RngStream& stream(const std::string& label) {
        auto it = streams_.find(label);
        if (it == streams_.end()) it = streams_.emplace(label, derive_stream(master_seed_, label)).first;
        return it->second;
    }

    const std::vector<SimEvent>& log() const noexcept { return log_; }

private:
    void dispatch(EventQueue::Entry e) {
        clock_ = e.time;
        SimEvent ev{e.logged ? log_.size() : 0, e.time, std::move(e.kind), std::move(e.payload)};
        if (e.logged) {
            log_.push_back(ev);
            if (sink_) sink_(log_.back());
        }
        auto it = handlers_.find(ev.kind);
        if (it == handlers_.end()) return;
        try {
            for (auto& h : it->second) h(ev);
        } catch (const std::exception& ex) {
            record("ERROR", Json{{"kind", ev.kind}, {"message", ex.what()}});
            throw SimulationError("handler for " + ev.kind + " failed at t=" + format_fixed6(ev.time) + ": " +
                                  ex.what());
        }
    }

    std::uint64_t master_seed_ = 0;
    double clock_ = 0.0;
    bool stop_requested_ = false;
    EventQueue queue_;
    std::map<std::string, std::vector<Handler>> handlers_;
    std::map<std::string, RngStream> streams_;
    std::vector<SimEvent> log_;
    Sink sink_;
};

/// Log as canonical NDJSON text (each line newline-terminated).
inline std::string canonical_log(const std::vector<SimEvent>& log) {
    std::string out;
    for (const auto& e : log) {
        out += serialize_event(e);
        out.push_back('\n');
    }
    return out;
}

inline std::string log_hash(const std::vector<SimEvent>& log) {
    Sha256 h;
    for (const auto& e : log) {
        h.update(serialize_event(e));
        h.update("\n");
    }
    return h.hex_digest();
}

/// Feeds a recorded log through a fresh engine whose handlers do nothing and
/// returns the log it produces. Same (seq, time, kind) sequence is expected.
inline std::vector<SimEvent> replay_through_engine(const std::vector<SimEvent>& recorded) {
    Engine engine;
    for (const auto& e : recorded) engine.schedule(e.time, e.kind, e.payload);
    engine.run_until_idle();
    return engine.log();
}

}  // namespace abyss
