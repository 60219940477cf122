// Mission-control service: HTTP/JSON plus a WebSocket telemetry stream.
// Synchronous Beast, one thread per connection and one per mission. Handlers
// only touch a running sim through its command queue or snapshots.
#pragma once

#include <sys/socket.h>

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "abyss/scenario/runner.hpp"

namespace abyss::service {

namespace beast = boost::beast;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;
namespace net = boost::asio;
using tcp = boost::asio::ip::tcp;

enum class RunState { RUNNING, PAUSED, COMPLETED, ABORTED, FAILED };

inline std::string to_string(RunState s) {
    switch (s) {
        case RunState::RUNNING: return "RUNNING";
        case RunState::PAUSED: return "PAUSED";
        case RunState::COMPLETED: return "COMPLETED";
        case RunState::ABORTED: return "ABORTED";
        case RunState::FAILED: return "FAILED";
    }
    return "UNKNOWN";
}

inline bool terminated(RunState s) { return s != RunState::RUNNING && s != RunState::PAUSED; }

/// Thrown by request handlers; carries the HTTP status to answer with.
struct HttpError : std::runtime_error {
    HttpError(int status, const std::string& msg, Json extra = Json::object())
        : std::runtime_error(msg), status(status), extra(std::move(extra)) {}
    int status;
    Json extra;
};

/// Maps simulator exceptions onto HTTP statuses: bad input is 400, a
/// well-formed request the planner cannot satisfy is 422.
template <class F>
auto translate_errors(F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const HttpError&) {
        throw;
    } catch (const AssignmentError& e) {
        throw HttpError(422, e.what(), Json{{"pair", Json::array({e.first(), e.second()})}});
    } catch (const PlanningError& e) {
        throw HttpError(422, e.what());
    } catch (const ValidationError& e) {
        throw HttpError(400, e.what());
    } catch (const ConfigurationError& e) {
        throw HttpError(400, e.what());
    } catch (const ArgumentError& e) {
        throw HttpError(400, e.what());
    } catch (const Json::exception& e) {
        throw HttpError(400, e.what());
    }
}

/// Bounded frame queue for one stream subscriber. Overflow drops the subscriber.
class Subscriber {
public:
    explicit Subscriber(std::size_t capacity) : capacity_(capacity) {}

    void push(const std::string& frame) {
        {
            std::lock_guard lk(m_);
            if (closed_) return;
            if (q_.size() >= capacity_) {
                dropped_ = true;
                closed_ = true;
                q_.clear();
            } else {
                q_.push_back(frame);
            }
        }
        cv_.notify_one();
    }

    void close() {
        {
            std::lock_guard lk(m_);
            closed_ = true;
        }
        cv_.notify_all();
    }

    /// Next frame, or nullopt on timeout or once closed and drained.
    std::optional<std::string> pop(std::chrono::milliseconds timeout) {
        std::unique_lock lk(m_);
        cv_.wait_for(lk, timeout, [&] { return !q_.empty() || closed_; });
        if (q_.empty()) return std::nullopt;
        std::string f = std::move(q_.front());
        q_.pop_front();
        return f;
    }

    bool done() {
        std::lock_guard lk(m_);
        return closed_ && q_.empty();
    }

    bool dropped() {
        std::lock_guard lk(m_);
        return dropped_;
    }

private:
    std::mutex m_;
    std::condition_variable cv_;
    std::deque<std::string> q_;
    std::size_t capacity_;
    bool closed_ = false;
    bool dropped_ = false;
};

struct ServiceOptions {
    std::optional<std::filesystem::path> log_dir;
    std::size_t command_queue_capacity = 64;
    std::size_t subscriber_capacity = 4096;
    std::chrono::milliseconds telemetry_period{200};
};

/// One simulation on its own thread.
class MissionRunner {
public:
    /// `time_scale` is simulated seconds per wall second; nullopt runs unpaced.
    MissionRunner(std::string id, scenario::Scenario sc, std::optional<double> time_scale, ServiceOptions opts)
        : id_(std::move(id)), time_scale_(time_scale), opts_(std::move(opts)) {
        sim_ = std::make_unique<scenario::Simulation>(std::move(sc));
        sim_->engine().set_sink([this](const SimEvent& e) { on_event(e); });
        if (sim_->mission()) plan_summary_ = sim_->mission()->plan_summary();
    }

    ~MissionRunner() { stop(); }

    MissionRunner(const MissionRunner&) = delete;
    MissionRunner& operator=(const MissionRunner&) = delete;

    void start() {
        std::lock_guard lk(m_);
        sim_->start();
        last_telemetry_ = telemetry_locked(false);
        thread_ = std::thread([this] { loop(); });
    }

    void stop() {
        stop_ = true;
        wake_.notify_all();
        if (thread_.joinable()) thread_.join();
    }

    const std::string& id() const noexcept { return id_; }
    const Json& plan_summary() const noexcept { return plan_summary_; }

    Json status() {
        std::lock_guard lk(m_);
        return {{"id", id_},
                {"state", to_string(state_)},
                {"sim_time", sim_->now()},
                {"end_reason", sim_->finished() ? Json(sim_->end_reason()) : Json()},
                {"time_scale", time_scale_ ? Json(*time_scale_) : Json("AS_FAST_AS_POSSIBLE")},
                {"plan_summary", plan_summary_},
                {"telemetry", last_telemetry_}};
    }

    /// Validates and enqueues a command; returns the acknowledgement body.
    Json post_command(const Json& body) {
        mission::MissionCommand c = translate_errors([&] { return parse_command(body); });
        {
            std::lock_guard lk(m_);
            if (terminated(state_) || sim_->finished()) throw HttpError(409, "mission " + id_ + " has terminated");
            if (c.kind == mission::CommandKind::RETASK) {
                if (!sim_->mission()) throw HttpError(422, "mission has no fleet to retask");
                translate_errors([&] { sim_->mission()->dry_run_retask(*c.area, c.plan); });
            }
            if ((c.kind == mission::CommandKind::ADD_CONSTRAINT || c.kind == mission::CommandKind::ABORT) &&
                !sim_->mission()) {
                throw HttpError(422, "mission has no fleet to command");
            }
        }
        std::lock_guard lk(cmd_m_);
        if (commands_.size() >= opts_.command_queue_capacity) throw HttpError(503, "command queue is full");
        c.id = ++next_command_;
        commands_.push_back(c);
        wake_.notify_all();
        return {{"command_id", c.id}, {"kind", mission::to_string(c.kind)}, {"status", "QUEUED"}};
    }

    /// The final report; nullopt while the mission is still running.
    std::optional<Json> report() {
        std::lock_guard lk(m_);
        if (!terminated(state_)) return std::nullopt;
        return report_;
    }

    bool finished() {
        std::lock_guard lk(m_);
        return terminated(state_);
    }

    /// Registers a subscriber; its first frame is the current state.
    std::shared_ptr<Subscriber> subscribe() {
        auto s = std::make_shared<Subscriber>(opts_.subscriber_capacity);
        std::lock_guard lk(m_);
        Json snap = last_telemetry_;
        snap["snapshot"] = true;
        s->push(snap.dump());
        if (terminated(state_)) {
            s->close();
        } else {
            subscribers_.push_back(s);
        }
        return s;
    }

private:
    mission::MissionCommand parse_command(const Json& body) {
        scenario::detail::Obj o(body, "$");
        mission::MissionCommand c;
        const std::string kind = o.text("kind", "");
        auto k = mission::parse_command_kind(kind);
        if (!k) throw ValidationError("$.kind: expected one of RETASK, ADD_CONSTRAINT, ABORT, PAUSE, RESUME");
        c.kind = *k;
        if (const Json* a = o.get("area")) c.area = scenario::parse_area(*a, "$.area");
        if (const Json* p = o.get("plan")) {
            scenario::detail::Obj po(*p, "$.plan");
            const PlanParams base = sim_->mission() ? sim_->mission()->config().plan : PlanParams{};
            c.plan = scenario::parse_plan_params(po, base);
            po.done();
        }
        if (const Json* ct = o.get("constraint")) c.constraint = scenario::parse_constraint(*ct, "$.constraint");
        c.issued_at = o.number("issued_at", std::chrono::duration<double>(
                                                std::chrono::system_clock::now().time_since_epoch())
                                                .count());
        o.done();
        if (c.kind == mission::CommandKind::RETASK && !c.area) throw ValidationError("$.area: RETASK needs an area");
        if (c.kind == mission::CommandKind::ADD_CONSTRAINT && !c.constraint) {
            throw ValidationError("$.constraint: ADD_CONSTRAINT needs a constraint");
        }
        return c;
    }

    using PlanParams = mission::PlanParams;

    Json telemetry_locked(bool terminal) const {
        Json t = sim_->telemetry();
        t["type"] = "telemetry";
        t["mission_id"] = id_;
        t["state"] = to_string(state_);
        t["terminal"] = terminal;
        if (terminal) t["end_reason"] = sim_->end_reason();
        return t;
    }

    void on_event(const SimEvent& e) {
        if (subscribers_.empty()) return;
        const std::string frame = Json{{"type", "event"},
                                       {"mission_id", id_},
                                       {"event", {{"seq", e.seq}, {"time", e.time}, {"kind", e.kind}, {"payload", e.payload}}}}
                                      .dump();
        broadcast(frame);
    }

    void broadcast(const std::string& frame) {
        for (auto it = subscribers_.begin(); it != subscribers_.end();) {
            (*it)->push(frame);
            it = (*it)->done() ? subscribers_.erase(it) : std::next(it);
        }
    }

    void publish_telemetry(bool terminal) {
        last_telemetry_ = telemetry_locked(terminal);
        last_publish_ = std::chrono::steady_clock::now();
        broadcast(last_telemetry_.dump());
    }

    std::deque<mission::MissionCommand> drain_commands() {
        std::lock_guard lk(cmd_m_);
        std::deque<mission::MissionCommand> out;
        out.swap(commands_);
        return out;
    }

    void loop() {
        using clock = std::chrono::steady_clock;
        auto next_slice = clock::now();
        while (!stop_) {
            bool ended = false;
            bool paused = false;
            {
                std::lock_guard lk(m_);
                try {
                    for (const auto& c : drain_commands()) {
                        if (c.kind == mission::CommandKind::PAUSE) state_ = RunState::PAUSED;
                        if (c.kind == mission::CommandKind::RESUME) state_ = RunState::RUNNING;
                        sim_->submit(c);
                    }
                    if (state_ == RunState::RUNNING) {
                        sim_->advance();
                        if (!sim_->finished() && clock::now() - last_publish_ >= opts_.telemetry_period) {
                            publish_telemetry(false);
                        }
                    } else if (clock::now() - last_publish_ >= std::chrono::milliseconds(500)) {
                        publish_telemetry(false);
                    }
                } catch (const std::exception& ex) {
                    if (!sim_->finished()) sim_->finish("error");
                    failure_ = ex.what();
                }
                if (sim_->finished()) {
                    state_ = sim_->end_reason() == "aborted" ? RunState::ABORTED
                             : sim_->end_reason() == "error" ? RunState::FAILED
                                                              : RunState::COMPLETED;
                    report_ = scenario::report_from_log(sim_->engine().log());
                    if (failure_) report_["error"] = *failure_;
                    write_logs();
                    publish_telemetry(true);
                    for (auto& s : subscribers_) s->close();
                    subscribers_.clear();
                    ended = true;
                }
                paused = state_ == RunState::PAUSED;
            }
            if (ended) break;
            std::unique_lock lk(cmd_m_);
            if (paused) {
                wake_.wait_for(lk, std::chrono::milliseconds(100), [&] { return stop_ || !commands_.empty(); });
                next_slice = clock::now();
            } else if (time_scale_) {
                next_slice += std::chrono::duration_cast<clock::duration>(
                    std::chrono::duration<double>(sim_->scenario().dt / *time_scale_));
                wake_.wait_until(lk, next_slice, [&] { return stop_.load(); });
            }
        }
    }

    void write_logs() {
        if (!opts_.log_dir) return;
        std::error_code ec;
        const auto dir = *opts_.log_dir / id_;
        std::filesystem::create_directories(dir, ec);
        if (ec) return;
        std::ofstream(dir / "events.ndjson", std::ios::binary) << canonical_log(sim_->engine().log());
        std::ofstream(dir / "events.sha256") << log_hash(sim_->engine().log()) << "  events.ndjson\n";
        std::ofstream(dir / "report.json") << report_.dump(2) << '\n';
    }

    std::string id_;
    std::optional<double> time_scale_;
    ServiceOptions opts_;
    std::unique_ptr<scenario::Simulation> sim_;
    Json plan_summary_ = Json::object();

    std::mutex m_;  // guards the simulation and everything below
    RunState state_ = RunState::RUNNING;
    Json last_telemetry_;
    Json report_;
    std::optional<std::string> failure_;
    std::list<std::shared_ptr<Subscriber>> subscribers_;
    std::chrono::steady_clock::time_point last_publish_{};

    std::mutex cmd_m_;
    std::condition_variable_any wake_;
    std::deque<mission::MissionCommand> commands_;
    std::uint64_t next_command_ = 0;

    std::atomic<bool> stop_{false};
    std::thread thread_;
};

/// Builds a scenario document from the compact mission request the console sends.
inline Json scenario_from_request(const Json& req) {
    scenario::detail::Obj o(req, "$");
    const Json& area = o.need("area");
    const auto parsed_area = scenario::parse_area(area, "$.area");
    const double fleet_size = static_cast<double>(o.count("fleet_size", 1));
    if (fleet_size < 1) throw ValidationError("$.fleet_size: must be >= 1");
    const std::uint64_t seed = o.count("seed", 1);
    const double duration = o.number("duration", 7200.0);
    const double max_depth = o.number("max_depth", kSunlightZoneDepth);
    const std::string condition = o.text("condition", "water/ambient");
    o.get("time_scale");  // consumed by the caller

    Json plan = Json::object();
    if (const Json* p = o.get("plan")) {
        scenario::detail::Obj po(*p, "$.plan");
        if (po.has("spacing")) plan["strip_spacing"] = po.number("spacing");
        if (po.has("strip_spacing")) plan["strip_spacing"] = po.number("strip_spacing");
        if (const Json* d = po.get("dimensionality")) {
            if (!d->is_string()) throw ValidationError("$.plan.dimensionality: expected a string");
            const auto v = d->get<std::string>();
            if (v == "BELT_2D" || v == "belt") plan["type"] = "belt";
            else if (v == "GRID_3D" || v == "grid3d") plan["type"] = "grid3d";
            else throw ValidationError("$.plan.dimensionality: expected BELT_2D or GRID_3D");
        }
        for (const char* k : {"layer_spacing", "swath_width", "comms_range", "safety_margin", "cell_size",
                              "position_noise"}) {
            if (po.has(k)) plan[k] = po.number(k);
        }
        if (po.has("comms_link")) plan["comms_link"] = po.text("comms_link", "");
        if (po.has("return_policy")) plan["return_policy"] = po.boolean("return_policy", true);
        po.done();
    }
    Json fleet{{"count", static_cast<std::uint64_t>(fleet_size)}};
    if (const Json* a = o.get("auv")) fleet["defaults"] = *a;
    Json constraints = Json::array();
    if (const Json* c = o.get("constraints")) constraints = *c;

    const Box2 box = bounding_box(parsed_area.polygon);
    const double pad = 100.0;
    Json world{{"bounds",
                {{"min", {box.min.x - pad, box.min.y - pad, -max_depth}}, {"max", {box.max.x + pad, box.max.y + pad, 0.0}}}},
               {"max_depth", max_depth},
               {"condition", condition}};
    if (const Json* p = o.get("pollutants")) {
        scenario::detail::Obj po(*p, "$.pollutants");
        const auto n = po.count("count", 0);
        po.done();
        const double z0 = std::max(-max_depth, parsed_area.depth_bottom - 2.0);
        const double z1 = std::min(0.0, parsed_area.depth_top + 2.0);
        world["pollutants"] = {{"random", {{"count", n}, {"min", {box.min.x, box.min.y, z0}}, {"max", {box.max.x, box.max.y, z1}}}}};
    }
    Json stations = Json::array();
    if (const Json* s = o.get("stations")) {
        stations = *s;
    } else {
        const Vec2 v = parsed_area.polygon.front();
        stations.push_back({{"id", "station-1"}, {"position", {v.x, v.y, 0.0}}});
    }
    o.done();
    return {{"name", "mission"}, {"seed", seed},      {"duration", duration},       {"world", world},
            {"stations", stations}, {"fleet", fleet}, {"areas", Json::array({area})}, {"constraints", constraints},
            {"plan", plan}};
}

inline std::optional<double> parse_time_scale(const Json& req) {
    if (!req.is_object() || !req.contains("time_scale")) return 1.0;
    const Json& t = req["time_scale"];
    if (t.is_string() && t.get<std::string>() == "AS_FAST_AS_POSSIBLE") return std::nullopt;
    if (t.is_number() && t.get<double>() > 0.0 && std::isfinite(t.get<double>())) return t.get<double>();
    throw ValidationError("$.time_scale: expected a positive number or \"AS_FAST_AS_POSSIBLE\"");
}

class MissionRegistry {
public:
    explicit MissionRegistry(ServiceOptions opts = {}) : opts_(std::move(opts)) {}

    /// Creates and starts a mission; returns {id, plan_summary}.
    Json create(const Json& body) {
        auto [sc, scale] = translate_errors([&] {
            if (!body.is_object()) throw ValidationError("$: expected an object");
            std::optional<double> ts = parse_time_scale(body);
            if (body.contains("scenario")) {
                for (const auto& [k, _] : body.items()) {
                    if (k != "scenario" && k != "time_scale") throw ValidationError("$: unknown key '" + k + "'");
                }
                return std::pair{scenario::parse_scenario(body["scenario"]), ts};
            }
            return std::pair{scenario::parse_scenario(scenario_from_request(body)), ts};
        });
        if (!sc.has_mission() && !sc.offload && !sc.has_bench()) throw HttpError(400, "nothing to simulate");
        std::string id;
        {
            std::lock_guard lk(m_);
            id = "m-" + std::to_string(++next_id_);
        }
        auto runner = translate_errors([&] { return std::make_shared<MissionRunner>(id, std::move(sc), scale, opts_); });
        runner->start();
        std::lock_guard lk(m_);
        missions_[id] = runner;
        return {{"id", id}, {"plan_summary", runner->plan_summary()}};
    }

    std::shared_ptr<MissionRunner> find(const std::string& id) {
        std::lock_guard lk(m_);
        auto it = missions_.find(id);
        return it == missions_.end() ? nullptr : it->second;
    }

    Json list() {
        std::lock_guard lk(m_);
        Json out = Json::array();
        for (const auto& [id, r] : missions_) out.push_back(id);
        return out;
    }

    void stop_all() {
        std::map<std::string, std::shared_ptr<MissionRunner>> all;
        {
            std::lock_guard lk(m_);
            all = missions_;
        }
        for (auto& [_, r] : all) r->stop();
    }

private:
    ServiceOptions opts_;
    std::mutex m_;
    std::map<std::string, std::shared_ptr<MissionRunner>> missions_;
    std::uint64_t next_id_ = 0;
};

/// Splits "/v1/missions/{id}/rest" into its parts.
struct Route {
    bool ok = false;
    std::string id;
    std::string tail;
};

inline Route match_mission_route(std::string_view target) {
    if (auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
    constexpr std::string_view prefix = "/v1/missions";
    if (target.substr(0, prefix.size()) != prefix) return {};
    target.remove_prefix(prefix.size());
    if (target.empty() || target == "/") return {true, "", ""};
    if (target.front() != '/') return {};
    target.remove_prefix(1);
    const auto slash = target.find('/');
    if (slash == std::string_view::npos) return {true, std::string(target), ""};
    return {true, std::string(target.substr(0, slash)), std::string(target.substr(slash + 1))};
}

class Server {
public:
    explicit Server(ServiceOptions opts = {}) : registry_(opts) {}
    ~Server() { stop(); }

    Server(const Server&) = delete;
    Server& operator=(const Server&) = delete;

    /// Binds and starts accepting; port 0 picks a free port. Returns the bound port.
    unsigned short start(unsigned short port, const std::string& address = "0.0.0.0") {
        acceptor_.open(tcp::v4());
        acceptor_.set_option(net::socket_base::reuse_address(true));
        acceptor_.bind({net::ip::make_address(address), port});
        acceptor_.listen();
        port_ = acceptor_.local_endpoint().port();
        accept_thread_ = std::thread([this] { accept_loop(); });
        return port_;
    }

    /// Blocks until stop() is called from elsewhere.
    void wait() {
        if (accept_thread_.joinable()) accept_thread_.join();
    }

    void stop() {
        if (stopping_.exchange(true)) return;
        beast::error_code ec;
        ::shutdown(acceptor_.native_handle(), SHUT_RDWR);
        acceptor_.close(ec);
        if (accept_thread_.joinable()) accept_thread_.join();
        {
            std::lock_guard lk(conn_m_);
            for (const auto& [_, fd] : open_fds_) ::shutdown(fd, SHUT_RDWR);
        }
        for (auto& t : connections_) {
            if (t.joinable()) t.join();
        }
        registry_.stop_all();
    }

    unsigned short port() const noexcept { return port_; }
    MissionRegistry& registry() noexcept { return registry_; }

private:
    void accept_loop() {
        while (!stopping_) {
            tcp::socket socket(ioc_);
            beast::error_code ec;
            acceptor_.accept(socket, ec);
            if (ec) {
                if (stopping_) return;
                continue;
            }
            std::lock_guard lk(conn_m_);
            const std::uint64_t token = next_token_++;
            open_fds_[token] = socket.native_handle();
            connections_.emplace_back([this, token, s = std::move(socket)]() mutable { session(std::move(s), token); });
        }
    }

    static http::response<http::string_body> json_response(http::status status, const Json& body, unsigned version,
                                                           bool keep_alive) {
        http::response<http::string_body> res{status, version};
        res.set(http::field::content_type, "application/json");
        res.set(http::field::access_control_allow_origin, "*");
        res.keep_alive(keep_alive);
        res.body() = body.dump();
        res.prepare_payload();
        return res;
    }

    static http::response<http::string_body> error_response(int status, const std::string& msg, const Json& extra,
                                                            unsigned version, bool keep_alive) {
        Json body{{"error", msg}};
        for (const auto& [k, v] : extra.items()) body[k] = v;
        return json_response(static_cast<http::status>(status), body, version, keep_alive);
    }

    http::response<http::string_body> handle(const http::request<http::string_body>& req) {
        const auto version = req.version();
        const bool ka = req.keep_alive();
        if (req.method() == http::verb::options) {
            http::response<http::string_body> res{http::status::no_content, version};
            res.set(http::field::access_control_allow_origin, "*");
            res.set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
            res.set(http::field::access_control_allow_headers, "Content-Type");
            res.keep_alive(ka);
            res.prepare_payload();
            return res;
        }
        try {
            const Route r = match_mission_route(std::string_view(req.target().data(), req.target().size()));
            if (!r.ok) throw HttpError(404, "no such endpoint");
            const auto method = req.method();
            if (r.id.empty()) {
                if (method == http::verb::post) {
                    Json body;
                    try {
                        body = Json::parse(req.body());
                    } catch (const Json::parse_error& e) {
                        throw HttpError(400, std::string("malformed JSON: ") + e.what());
                    }
                    return json_response(http::status::created, registry_.create(body), version, ka);
                }
                if (method == http::verb::get) return json_response(http::status::ok, registry_.list(), version, ka);
                throw HttpError(405, "method not allowed");
            }
            auto mission = registry_.find(r.id);
            if (!mission) throw HttpError(404, "unknown mission " + r.id);
            if (r.tail.empty() && method == http::verb::get) {
                return json_response(http::status::ok, mission->status(), version, ka);
            }
            if (r.tail == "commands" && method == http::verb::post) {
                Json body;
                try {
                    body = Json::parse(req.body());
                } catch (const Json::parse_error& e) {
                    throw HttpError(400, std::string("malformed JSON: ") + e.what());
                }
                return json_response(http::status::accepted, mission->post_command(body), version, ka);
            }
            if (r.tail == "report" && method == http::verb::get) {
                auto rep = mission->report();
                if (!rep) throw HttpError(409, "mission " + r.id + " is still running");
                return json_response(http::status::ok, *rep, version, ka);
            }
            if (r.tail == "stream") throw HttpError(426, "stream requires a WebSocket upgrade");
            throw HttpError(404, "no such endpoint");
        } catch (const HttpError& e) {
            return error_response(e.status, e.what(), e.extra, version, ka);
        } catch (const std::exception& e) {
            return error_response(500, e.what(), Json::object(), version, ka);
        }
    }

    void stream(tcp::socket socket, http::request<http::string_body> req, std::shared_ptr<MissionRunner> mission) {
        websocket::stream<tcp::socket> ws(std::move(socket));
        beast::error_code ec;
        ws.accept(req, ec);
        if (ec) return;
        ws.text(true);
        auto sub = mission->subscribe();
        while (!stopping_) {
            auto frame = sub->pop(std::chrono::milliseconds(200));
            if (frame) {
                ws.write(net::buffer(*frame), ec);
                if (ec) return;
                continue;
            }
            if (sub->done()) break;
        }
        const auto reason = sub->dropped() ? websocket::close_reason(websocket::close_code::try_again_later, "slow consumer")
                                           : websocket::close_reason(websocket::close_code::normal);
        ws.close(reason, ec);
        // Drain until the peer acknowledges the close.
        beast::flat_buffer buf;
        while (!ec) ws.read(buf, ec);
    }

    void session(tcp::socket socket, std::uint64_t token) {
        beast::flat_buffer buffer;
        beast::error_code ec;
        while (!stopping_) {
            http::request<http::string_body> req;
            http::read(socket, buffer, req, ec);
            if (ec) break;
            if (websocket::is_upgrade(req)) {
                const Route r = match_mission_route(std::string_view(req.target().data(), req.target().size()));
                auto mission = r.ok && r.tail == "stream" ? registry_.find(r.id) : nullptr;
                if (!mission) {
                    auto res = error_response(404, "unknown mission " + r.id, Json::object(), req.version(), false);
                    http::write(socket, res, ec);
                    break;
                }
                stream(std::move(socket), std::move(req), mission);
                break;
            }
            auto res = handle(req);
            const bool keep = res.keep_alive();
            http::write(socket, res, ec);
            if (ec || !keep) break;
        }
        if (socket.is_open()) socket.shutdown(tcp::socket::shutdown_both, ec);
        std::lock_guard lk(conn_m_);
        open_fds_.erase(token);
    }

    MissionRegistry registry_;
    net::io_context ioc_;
    tcp::acceptor acceptor_{ioc_};
    unsigned short port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread accept_thread_;
    std::mutex conn_m_;
    std::map<std::uint64_t, int> open_fds_;
    std::uint64_t next_token_ = 0;
    std::vector<std::thread> connections_;
};

/// ABYSS_PORT, default 8080.
inline unsigned short default_port() {
    if (const char* p = std::getenv("ABYSS_PORT")) {
        try {
            const int v = std::stoi(p);
            if (v > 0 && v < 65536) return static_cast<unsigned short>(v);
        } catch (const std::exception&) {
        }
    }
    return 8080;
}

}  // namespace abyss::service
