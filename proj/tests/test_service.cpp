#include <chrono>
#include <thread>

#include <boost/asio/connect.hpp>
#include <gtest/gtest.h>

#include "abyss/service/server.hpp"

using namespace abyss;
using namespace std::chrono_literals;
namespace http = boost::beast::http;
namespace websocket = boost::beast::websocket;
using tcp = boost::asio::ip::tcp;

namespace {

struct Reply {
    int status = 0;
    Json body;
};

class ServiceTest : public ::testing::Test {
protected:
    void SetUp() override { port_ = server_.start(0, "127.0.0.1"); }
    void TearDown() override { server_.stop(); }

    Reply call(http::verb verb, const std::string& target, const std::string& body = "") {
        boost::asio::io_context ioc;
        tcp::socket s(ioc);
        s.connect({boost::asio::ip::make_address("127.0.0.1"), port_});
        http::request<http::string_body> req{verb, target, 11};
        req.set(http::field::host, "localhost");
        req.set(http::field::content_type, "application/json");
        req.keep_alive(false);
        req.body() = body;
        req.prepare_payload();
        http::write(s, req);
        boost::beast::flat_buffer buf;
        http::response<http::string_body> res;
        http::read(s, buf, res);
        Reply r{static_cast<int>(res.result_int()), Json()};
        if (!res.body().empty()) r.body = Json::parse(res.body());
        return r;
    }

    Reply post(const std::string& target, const Json& body) { return call(http::verb::post, target, body.dump()); }
    Reply get(const std::string& target) { return call(http::verb::get, target); }

    std::string create(Json body) {
        const auto r = post("/v1/missions", body);
        EXPECT_EQ(r.status, 201) << r.body.dump();
        return r.body.value("id", "");
    }

    bool wait_finished(const std::string& id, std::chrono::milliseconds limit = 60s) {
        const auto deadline = std::chrono::steady_clock::now() + limit;
        while (std::chrono::steady_clock::now() < deadline) {
            if (get("/v1/missions/" + id + "/report").status == 200) return true;
            std::this_thread::sleep_for(20ms);
        }
        return false;
    }

    // reads every frame until the server closes the stream
    std::vector<Json> drain_stream(const std::string& id, std::function<void()> after_open = {}) {
        boost::asio::io_context ioc;
        websocket::stream<tcp::socket> ws(ioc);
        ws.next_layer().connect({boost::asio::ip::make_address("127.0.0.1"), port_});
        ws.handshake("localhost", "/v1/missions/" + id + "/stream");
        if (after_open) after_open();
        std::vector<Json> frames;
        boost::beast::error_code ec;
        for (;;) {
            boost::beast::flat_buffer buf;
            ws.read(buf, ec);
            if (ec) break;
            frames.push_back(Json::parse(boost::beast::buffers_to_string(buf.data())));
        }
        return frames;
    }

    service::Server server_;
    unsigned short port_ = 0;
};

Json square(int fleet, Json extra = Json::object()) {
    Json j = Json::parse(R"({"area": {"polygon": [[0,0],[40,0],[40,40],[0,40]], "depth_range": [-5,-5]},
                             "plan": {"spacing": 20, "comms_range": 45}, "pollutants": {"count": 30}})");
    j["fleet_size"] = fleet;
    j.merge_patch(extra);
    return j;
}

Json reef_scenario() {
    std::ifstream in(std::string(ABYSS_SCENARIOS) + "/reef_survey.json");
    return Json::parse(in);
}

}  // namespace

TEST(Port, DefaultAndEnvironment) {
    unsetenv("ABYSS_PORT");
    EXPECT_EQ(service::default_port(), 8080);
    setenv("ABYSS_PORT", "9123", 1);
    EXPECT_EQ(service::default_port(), 9123);
    setenv("ABYSS_PORT", "junk", 1);
    EXPECT_EQ(service::default_port(), 8080);
    unsetenv("ABYSS_PORT");
}

TEST(Routes, Matching) {
    auto r = service::match_mission_route("/v1/missions/m-3/stream?x=1");
    EXPECT_TRUE(r.ok);
    EXPECT_EQ(r.id, "m-3");
    EXPECT_EQ(r.tail, "stream");
    EXPECT_FALSE(service::match_mission_route("/v2/missions").ok);
}

TEST_F(ServiceTest, CreateSquareArea) {
    const auto r = post("/v1/missions", square(3, {{"time_scale", "AS_FAST_AS_POSSIBLE"}}));
    ASSERT_EQ(r.status, 201) << r.body.dump();
    EXPECT_EQ(r.body["id"], "m-1");
    EXPECT_EQ(r.body["plan_summary"]["strips"], 3);
    const auto st = get("/v1/missions/m-1");
    EXPECT_EQ(st.status, 200);
    EXPECT_EQ(st.body["id"], "m-1");
}

TEST_F(ServiceTest, MalformedBodies) {
    EXPECT_EQ(call(http::verb::post, "/v1/missions", "{not json").status, 400);
    EXPECT_EQ(post("/v1/missions", Json::array()).status, 400);
    EXPECT_EQ(post("/v1/missions", {{"fleet_size", 2}}).status, 400);
    Json bowtie = square(1);
    bowtie["area"]["polygon"] = Json::parse("[[0,0],[40,40],[40,0],[0,40]]");
    const auto r = post("/v1/missions", bowtie);
    EXPECT_EQ(r.status, 400);
    EXPECT_NE(r.body["error"].get<std::string>().find("self-intersecting"), std::string::npos);
    EXPECT_EQ(post("/v1/missions", square(1, {{"surprise", 1}})).status, 400);
}

TEST_F(ServiceTest, CommsInfeasibleIs422WithPair) {
    const auto r = post("/v1/missions", square(3, {{"plan", {{"comms_range", 15}}}}));
    ASSERT_EQ(r.status, 422);
    ASSERT_TRUE(r.body.contains("pair"));
    EXPECT_EQ(r.body["pair"], Json::array({"auv-1", "auv-2"}));
}

TEST_F(ServiceTest, UnknownMission) {
    EXPECT_EQ(get("/v1/missions/nope").status, 404);
    EXPECT_EQ(get("/v1/missions/nope/report").status, 404);
    EXPECT_EQ(post("/v1/missions/nope/commands", {{"kind", "ABORT"}}).status, 404);
    EXPECT_EQ(get("/v2/other").status, 404);
}

TEST_F(ServiceTest, WebSocketUnknownMissionRefused) {
    boost::asio::io_context ioc;
    tcp::socket s(ioc);
    s.connect({boost::asio::ip::make_address("127.0.0.1"), port_});
    http::request<http::empty_body> req{http::verb::get, "/v1/missions/none/stream", 11};
    req.set(http::field::host, "localhost");
    req.set(http::field::connection, "Upgrade");
    req.set(http::field::upgrade, "websocket");
    req.set(http::field::sec_websocket_key, "dGhlIHNhbXBsZSBub25jZQ==");
    req.set(http::field::sec_websocket_version, "13");
    http::write(s, req);
    boost::beast::flat_buffer buf;
    http::response<http::string_body> res;
    http::read(s, buf, res);
    EXPECT_EQ(res.result_int(), 404u);
}

TEST_F(ServiceTest, StreamNeedsUpgrade) {
    const auto id = create(square(1));
    EXPECT_EQ(get("/v1/missions/" + id + "/stream").status, 426);
}

TEST_F(ServiceTest, ReportWhileRunningIs409) {
    const auto id = create(square(1, {{"time_scale", 1.0}}));
    EXPECT_EQ(get("/v1/missions/" + id + "/report").status, 409);
}

TEST_F(ServiceTest, CommandValidation) {
    const auto id = create(square(1, {{"time_scale", 1.0}}));
    const std::string base = "/v1/missions/" + id + "/commands";
    EXPECT_EQ(post(base, {{"kind", "DANCE"}}).status, 400);
    EXPECT_EQ(post(base, {{"kind", "RETASK"}}).status, 400);
    EXPECT_EQ(post(base, {{"kind", "ADD_CONSTRAINT"}}).status, 400);
    const auto ok = post(base, {{"kind", "PAUSE"}});
    EXPECT_EQ(ok.status, 202);
    EXPECT_EQ(ok.body["status"], "QUEUED");
}

TEST_F(ServiceTest, CommandOnFinishedMissionIs409) {
    const auto id = create(square(1, {{"time_scale", "AS_FAST_AS_POSSIBLE"}}));
    ASSERT_TRUE(wait_finished(id));
    EXPECT_EQ(post("/v1/missions/" + id + "/commands", {{"kind", "ABORT"}}).status, 409);
}

TEST_F(ServiceTest, ZeroPollutantReport) {
    Json req = square(1, {{"time_scale", "AS_FAST_AS_POSSIBLE"}});
    req.erase("pollutants");
    const auto id = create(req);
    ASSERT_TRUE(wait_finished(id));
    const auto rep = get("/v1/missions/" + id + "/report").body;
    for (const auto& [k, v] : rep["detections"].items()) EXPECT_EQ(v, 0);
    EXPECT_GT(rep["coverage_fraction"].get<double>(), 0.0);
}

TEST_F(ServiceTest, PauseHaltsSimTime) {
    const auto id = create(square(1, {{"time_scale", 200.0}}));
    const std::string cmd = "/v1/missions/" + id + "/commands";
    std::this_thread::sleep_for(150ms);
    ASSERT_EQ(post(cmd, {{"kind", "PAUSE"}}).status, 202);
    std::this_thread::sleep_for(300ms);
    const auto a = get("/v1/missions/" + id).body;
    EXPECT_EQ(a["state"], "PAUSED");
    std::this_thread::sleep_for(400ms);
    const auto b = get("/v1/missions/" + id).body;
    EXPECT_DOUBLE_EQ(a["sim_time"].get<double>(), b["sim_time"].get<double>());
    ASSERT_EQ(post(cmd, {{"kind", "RESUME"}}).status, 202);
    std::this_thread::sleep_for(400ms);
    const auto c = get("/v1/missions/" + id).body;
    EXPECT_GT(c["sim_time"].get<double>(), b["sim_time"].get<double>());
}

TEST_F(ServiceTest, AbortGivesTerminalFrame) {
    const auto id = create(square(3, {{"time_scale", 20.0}}));
    const auto frames = drain_stream(id, [&] {
        std::this_thread::sleep_for(200ms);
        EXPECT_EQ(post("/v1/missions/" + id + "/commands", {{"kind", "ABORT"}}).status, 202);
    });
    ASSERT_FALSE(frames.empty());
    EXPECT_TRUE(frames.front().value("snapshot", false));
    const Json& last = frames.back();
    EXPECT_EQ(last["type"], "telemetry");
    EXPECT_TRUE(last["terminal"].get<bool>());
    EXPECT_EQ(last["end_reason"], "aborted");
    // every AUV is sent home with reason "abort"
    std::set<std::string> home;
    bool applied = false;
    for (const auto& f : frames) {
        if (f["type"] != "event") continue;
        const auto& ev = f["event"];
        if (ev["kind"] == "COMMAND_APPLIED" && ev["payload"]["kind"] == "ABORT") applied = true;
        if (ev["kind"] == "STATUS" && ev["payload"]["reason"] == "abort") {
            EXPECT_TRUE(ev["payload"]["status"] == "RETURNING" || ev["payload"]["status"] == "CHARGING");
            home.insert(ev["payload"]["auv"].get<std::string>());
        }
    }
    EXPECT_TRUE(applied);
    EXPECT_EQ(home.size(), 3u);
    EXPECT_EQ(get("/v1/missions/" + id).body["state"], "ABORTED");
}

TEST_F(ServiceTest, StreamIsMonotone) {
    const auto id = create(square(2, {{"time_scale", 400.0}}));
    const auto frames = drain_stream(id);
    double t = -1;
    long long seq = -1;
    for (const auto& f : frames) {
        if (f["type"] == "telemetry") {
            EXPECT_GE(f["sim_time"].get<double>(), t);
            t = f["sim_time"].get<double>();
        } else {
            const auto s = f["event"]["seq"].get<long long>();
            EXPECT_EQ(seq < 0 ? s : seq + 1, s);
            seq = s;
        }
    }
    EXPECT_TRUE(frames.back()["terminal"].get<bool>());
}

TEST_F(ServiceTest, TwoSubscribersSeeTheSameFrames) {
    const auto id = create(square(2, {{"time_scale", 300.0}}));
    std::vector<Json> a, b;
    std::thread ta([&] { a = drain_stream(id); });
    std::thread tb([&] { b = drain_stream(id); });
    ta.join();
    tb.join();
    ASSERT_GT(a.size(), 2u);
    ASSERT_GT(b.size(), 2u);
    // whoever subscribed later sees a suffix of the earlier subscriber's frames
    auto& longer = a.size() >= b.size() ? a : b;
    auto& shorter = a.size() >= b.size() ? b : a;
    const std::vector<Json> tail(shorter.begin() + 1, shorter.end());
    ASSERT_LE(tail.size(), longer.size());
    const std::vector<Json> suffix(longer.end() - static_cast<long>(tail.size()), longer.end());
    EXPECT_EQ(tail, suffix);
}

TEST_F(ServiceTest, ScenarioRunMatchesHeadlessRun) {
    const auto id = create({{"scenario", reef_scenario()}, {"time_scale", "AS_FAST_AS_POSSIBLE"}});
    ASSERT_TRUE(wait_finished(id, 120s));
    const auto service_report = get("/v1/missions/" + id + "/report").body;
    scenario::Simulation sim(scenario::parse_scenario(reef_scenario()));
    sim.run();
    EXPECT_EQ(service_report, scenario::report_from_log(sim.engine().log()));
}

TEST_F(ServiceTest, SameSeedSameReport) {
    const Json req = square(2, {{"time_scale", "AS_FAST_AS_POSSIBLE"}, {"seed", 9}});
    const auto a = create(req);
    const auto b = create(req);
    ASSERT_TRUE(wait_finished(a));
    ASSERT_TRUE(wait_finished(b));
    EXPECT_EQ(get("/v1/missions/" + a + "/report").body, get("/v1/missions/" + b + "/report").body);
}

TEST_F(ServiceTest, CorsPreflight) {
    EXPECT_EQ(call(http::verb::options, "/v1/missions").status, 204);
}
