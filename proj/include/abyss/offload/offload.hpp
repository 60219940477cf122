// Micro-cloud offloading: a randomly elected master streams frames one by one
// to workers picked round robin; each worker processes frames in arrival
// order and sends a result back. Completion and success rates are tallied
// from the event log, never from protocol state.
#pragma once

#include <algorithm>
#include <deque>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "abyss/comms/link.hpp"
#include "abyss/core/error.hpp"
#include "abyss/sim/engine.hpp"

namespace abyss {

struct MicroCloudGroup {
    std::vector<std::string> members;
    std::string master;
    std::vector<std::string> workers;
};

/// Master drawn uniformly from `members`; workers keep input order.
template <class Rng>
MicroCloudGroup elect_master(const std::vector<std::string>& members, Rng& rng) {
    if (members.size() < 2) throw ConfigurationError("micro-cloud needs at least 2 members");
    MicroCloudGroup g;
    g.members = members;
    const std::size_t pick = rng.index(members.size());
    g.master = members[pick];
    for (std::size_t i = 0; i < members.size(); ++i) {
        if (i != pick) g.workers.push_back(members[i]);
    }
    return g;
}

/// workers[counter mod |workers|], then advances the counter.
inline const std::string& dispatch_next(const MicroCloudGroup& group, std::uint64_t& counter) {
    if (group.workers.empty()) throw ConfigurationError("dispatch_next: no workers");
    const auto& w = group.workers[counter % group.workers.size()];
    ++counter;
    return w;
}

struct FrameJob {
    std::uint64_t frame_id = 0;
    double size = 160000.0;  // bits; a 224x224 JPEG is roughly 20 kB
    int width = 224;
    int height = 224;
};

inline std::vector<FrameJob> make_frames(std::size_t count, double size_bits = 160000.0) {
    std::vector<FrameJob> frames(count);
    for (std::size_t i = 0; i < count; ++i) frames[i] = FrameJob{i, size_bits, 224, 224};
    return frames;
}

struct ProcessingModel {
    double base_time = 0.028;
    double encasing_overhead = 0.005;
    double submersion_overhead = 0.020;

    void validate() const {
        if (base_time < 0 || encasing_overhead < 0 || submersion_overhead < 0) {
            throw ConfigurationError("processing times must be >= 0");
        }
    }
};

inline double frame_duration(const ProcessingModel& model, bool encased, bool submerged) {
    if (submerged && !encased) throw ArgumentError("frame_duration: a bare device cannot be submerged");
    return model.base_time + (encased ? model.encasing_overhead : 0.0) +
           (submerged ? model.submersion_overhead : 0.0);
}

struct WorkerTally {
    std::uint64_t dispatched = 0;
    std::uint64_t processed = 0;
    std::uint64_t received = 0;
};

struct OffloadStats {
    std::uint64_t frames_sent = 0;
    std::uint64_t frames_processed = 0;
    std::uint64_t results_received = 0;
    double completion_rate = 0.0;
    double success_rate = 0.0;
    /// Processed frames per simulated second, first processing start to last finish.
    double throughput_fps = 0.0;
    std::map<std::string, WorkerTally> per_worker;
};

inline Json to_json(const OffloadStats& s) {
    Json workers = Json::object();
    for (const auto& [id, t] : s.per_worker) {
        workers[id] = {{"dispatched", t.dispatched}, {"processed", t.processed}, {"received", t.received}};
    }
    return {{"frames_sent", s.frames_sent},         {"frames_processed", s.frames_processed},
            {"results_received", s.results_received}, {"completion_rate", s.completion_rate},
            {"success_rate", s.success_rate},         {"throughput_fps", s.throughput_fps},
            {"per_worker", workers}};
}

inline constexpr const char* kFrameMsg = "FRAME";
inline constexpr const char* kResultMsg = "RESULT";
inline constexpr const char* kProcessEvent = "PROCESS";

/// Tallies SEND(FRAME), PROCESS and RECEIVE(RESULT) records.
inline OffloadStats compute_stats(const std::vector<SimEvent>& log) {
    OffloadStats s;
    double first_start = std::numeric_limits<double>::infinity();
    double last_finish = -std::numeric_limits<double>::infinity();
    for (const auto& e : log) {
        if (e.kind == "SEND" && e.payload.value("msg_kind", "") == kFrameMsg) {
            ++s.frames_sent;
            ++s.per_worker[e.payload.at("dst").get<std::string>()].dispatched;
        } else if (e.kind == kProcessEvent) {
            ++s.frames_processed;
            ++s.per_worker[e.payload.at("worker").get<std::string>()].processed;
            first_start = std::min(first_start, e.payload.at("started").get<double>());
            last_finish = std::max(last_finish, e.time);
        } else if (e.kind == kReceiveEvent && e.payload.value("msg_kind", "") == kResultMsg) {
            ++s.results_received;
            ++s.per_worker[e.payload.at("src").get<std::string>()].received;
        }
    }
    if (s.frames_sent == 0) throw UndefinedRateError("compute_stats: no frames were sent");
    s.completion_rate = static_cast<double>(s.frames_processed) / static_cast<double>(s.frames_sent);
    s.success_rate = static_cast<double>(s.results_received) / static_cast<double>(s.frames_sent);
    if (s.frames_processed > 0 && last_finish > first_start) {
        s.throughput_fps = static_cast<double>(s.frames_processed) / (last_finish - first_start);
    }
    return s;
}

enum class DispatchMode { PIPELINED, STOP_AND_WAIT };

struct OffloadConfig {
    LinkSpec frame_link = links::paper_wifi();
    LinkSpec result_link = links::paper_wifi();
    std::map<std::string, double> distances;  // worker id -> meters from master
    ProcessingModel model;
    bool encased = true;
    bool submerged = false;
    DispatchMode mode = DispatchMode::PIPELINED;
    double result_bits = 8000.0;
    /// Minimum spacing between consecutive frame sends (camera frame period).
    double frame_interval = 0.0;
    /// Stop-and-wait only: how long the master waits for a result.
    double result_timeout = 1.0;
    double start_time = 0.0;
};

/// Event-driven protocol state machine. Attach to an engine, then run it.
class OffloadSession {
public:
    OffloadSession(MicroCloudGroup group, std::vector<FrameJob> frames, OffloadConfig config)
        : group_(std::move(group)), frames_(std::move(frames)), cfg_(std::move(config)) {
        if (frames_.empty()) throw ArgumentError("offload session needs at least one frame");
        if (group_.workers.empty()) throw ConfigurationError("offload session needs at least one worker");
        cfg_.model.validate();
        cfg_.frame_link.validate();
        cfg_.result_link.validate();
        for (const auto& w : group_.workers) {
            if (!cfg_.distances.contains(w)) throw ConfigurationError("no distance configured for worker " + w);
            if (!(cfg_.distances.at(w) >= 0.0)) throw ConfigurationError("worker distance must be >= 0");
        }
        duration_ = frame_duration(cfg_.model, cfg_.encased, cfg_.submerged);
    }

    OffloadSession(const OffloadSession&) = delete;
    OffloadSession& operator=(const OffloadSession&) = delete;

    void attach(Engine& engine) {
        engine_ = &engine;
        engine.on(kDispatchEvent, [this](const SimEvent&) { dispatch(); });
        engine.on(kProcessEvent, [this](const SimEvent& e) { finish_processing(e); });
        engine.on(kReceiveEvent, [this](const SimEvent& e) { receive(e); });
        engine.on(kTimeoutEvent, [this](const SimEvent&) { schedule_dispatch(engine_->now()); });
        engine.schedule(std::max(cfg_.start_time, engine.now()), kStartEvent,
                        Json{{"master", group_.master},
                             {"workers", group_.workers},
                             {"frames", frames_.size()},
                             {"frame_duration", duration_},
                             {"mode", cfg_.mode == DispatchMode::PIPELINED ? "pipelined" : "stop_and_wait"}});
        engine.on(kStartEvent, [this](const SimEvent&) { schedule_dispatch(engine_->now()); });
    }

    bool finished() const noexcept { return next_frame_ >= frames_.size(); }
    const MicroCloudGroup& group() const noexcept { return group_; }
    double frame_time() const noexcept { return duration_; }

private:
    static constexpr const char* kStartEvent = "OFFLOAD_START";
    static constexpr const char* kDispatchEvent = "OFFLOAD_DISPATCH";
    static constexpr const char* kTimeoutEvent = "RESULT_TIMEOUT";

    struct WorkerState {
        std::deque<std::uint64_t> queue;
        bool busy = false;
    };

    void schedule_dispatch(double at) {
        if (finished()) return;
        engine_->schedule(at, kDispatchEvent, Json::object(), false);
    }

    void dispatch() {
        if (finished()) return;
        const FrameJob& frame = frames_[next_frame_++];
        const std::string& worker = dispatch_next(group_, dispatch_counter_);
        Message msg{next_msg_++, group_.master, worker, frame.size, kFrameMsg, Json{{"frame", frame.frame_id}}};
        const double sent_at = engine_->now();
        transmit(*engine_, fifo_, cfg_.frame_link, msg, cfg_.distances.at(worker));
        if (cfg_.mode == DispatchMode::PIPELINED) {
            const double busy = serialization_time(cfg_.frame_link, frame.size);
            schedule_dispatch(sent_at + std::max(busy, cfg_.frame_interval));
        } else {
            awaiting_ = frame.frame_id;
            timeout_ = engine_->schedule(sent_at + cfg_.result_timeout, kTimeoutEvent, Json{{"frame", frame.frame_id}});
        }
    }

    void receive(const SimEvent& e) {
        const auto kind = e.payload.value("msg_kind", "");
        const auto frame = e.payload.at("payload").at("frame").get<std::uint64_t>();
        if (kind == kFrameMsg) {
            const auto worker = e.payload.at("dst").get<std::string>();
            auto& ws = workers_[worker];
            ws.queue.push_back(frame);
            if (!ws.busy) start_next(worker);
        } else if (kind == kResultMsg) {
            if (cfg_.mode == DispatchMode::STOP_AND_WAIT && awaiting_ && *awaiting_ == frame) {
                awaiting_.reset();
                engine_->cancel(timeout_);
                schedule_dispatch(engine_->now());
            }
        }
    }

    void start_next(const std::string& worker) {
        auto& ws = workers_[worker];
        if (ws.queue.empty()) {
            ws.busy = false;
            return;
        }
        ws.busy = true;
        const auto frame = ws.queue.front();
        ws.queue.pop_front();
        const double started = engine_->now();
        engine_->schedule(started + duration_, kProcessEvent,
                          Json{{"frame", frame}, {"worker", worker}, {"started", started}, {"duration", duration_}});
    }

    void finish_processing(const SimEvent& e) {
        const auto worker = e.payload.at("worker").get<std::string>();
        const auto frame = e.payload.at("frame").get<std::uint64_t>();
        Message msg{next_msg_++, worker, group_.master, cfg_.result_bits, kResultMsg, Json{{"frame", frame}}};
        transmit(*engine_, fifo_, cfg_.result_link, msg, cfg_.distances.at(worker));
        start_next(worker);
    }

    MicroCloudGroup group_;
    std::vector<FrameJob> frames_;
    OffloadConfig cfg_;
    double duration_ = 0.0;
    Engine* engine_ = nullptr;
    FifoLedger fifo_;
    std::map<std::string, WorkerState> workers_;
    std::size_t next_frame_ = 0;
    std::uint64_t dispatch_counter_ = 0;
    std::uint64_t next_msg_ = 0;
    std::optional<std::uint64_t> awaiting_;
    EventHandle timeout_;
};

/// Runs one session to completion on `engine` and tallies it from the log.
inline OffloadStats run_offload_session(Engine& engine, const MicroCloudGroup& group,
                                        const std::vector<FrameJob>& frames, const OffloadConfig& config) {
    if (frames.empty()) throw ArgumentError("run_offload_session: no frames");
    OffloadSession session(group, frames, config);
    session.attach(engine);
    engine.run_until_idle();
    return compute_stats(engine.log());
}

}  // namespace abyss
