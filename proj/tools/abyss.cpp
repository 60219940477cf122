// abyss command-line tool. Subcommands: run, replay, bench-sensing, serve.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "abyss/scenario/replay.hpp"
#include "abyss/sensing/bench.hpp"
#include "abyss/service/server.hpp"

namespace fs = std::filesystem;
using namespace abyss;

namespace {

constexpr int kOk = 0;
constexpr int kFail = 1;
constexpr int kInvalid = 2;
constexpr int kRuntime = 3;

bool is_input_error(const std::exception& e) {
    return dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const PlanningError*>(&e) ||
           dynamic_cast<const AssignmentError*>(&e) || dynamic_cast<const ConfigurationError*>(&e) ||
           dynamic_cast<const ArgumentError*>(&e) || dynamic_cast<const Json::exception*>(&e);
}

int run_cmd(const std::string& path, std::optional<std::uint64_t> seed, std::optional<double> until,
            const fs::path& out, const std::string& format) {
    std::unique_ptr<scenario::Simulation> sim;
    try {
        sim = std::make_unique<scenario::Simulation>(scenario::load_scenario(path), seed, until);
    } catch (const std::exception& e) {
        std::cerr << "abyss run: " << e.what() << '\n';
        return is_input_error(e) ? kInvalid : kRuntime;
    }
    try {
        sim->run();
    } catch (const std::exception& e) {
        std::cerr << "abyss run: simulation failed: " << e.what() << '\n';
    }
    const auto& log = sim->engine().log();
    const Json report = scenario::report_from_log(log);
    try {
        fs::create_directories(out);
        std::ofstream(out / "events.ndjson", std::ios::binary) << canonical_log(log);
        std::ofstream(out / "events.sha256") << report["log_hash"].get<std::string>() << "  events.ndjson\n";
        if (format == "csv") {
            std::ofstream(out / "report.csv") << scenario::report_csv(report);
        } else {
            std::ofstream(out / "report.json") << report.dump(2) << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "abyss run: cannot write output: " << e.what() << '\n';
        return kRuntime;
    }
    std::cout << report["name"].get<std::string>() << ": " << report["end_reason"].get<std::string>() << " at t="
              << format_fixed6(report["end_time"].get<double>()) << ", " << log.size() << " events\n"
              << "sha256 " << report["log_hash"].get<std::string>() << '\n';
    return sim->end_reason() == "error" ? kRuntime : kOk;
}

scenario::ReplayResult replay_cmd(const fs::path& path) {
    auto fail = [](std::string why) { return scenario::ReplayResult{false, std::move(why), {}, {}}; };
    std::ifstream in(path, std::ios::binary);
    if (!in) return fail("cannot open " + path.string());
    const fs::path dir = path.parent_path();
    std::optional<std::string> hash;
    for (const fs::path& side : {fs::path(path.string() + ".sha256"), dir / "events.sha256"}) {
        std::ifstream h(side);
        if (!h) continue;
        std::string expected;
        h >> expected;
        hash = expected;
        break;
    }
    std::optional<Json> report;
    if (std::ifstream r(dir / "report.json"); r) {
        try {
            report = Json::parse(r);
        } catch (const std::exception&) {
            return fail("report.json is not valid JSON");
        }
    }
    auto res = scenario::verify_log(in, hash, report);
    if (res.pass) {
        std::cout << res.log.size() << " events, end_time " << format_fixed6(res.log.back().time) << ", sha256 "
                  << res.hash << '\n';
    }
    return res;
}

int bench_cmd(const std::string& path, std::optional<std::uint64_t> seed, bool json) {
    scenario::Scenario sc;
    try {
        sc = scenario::load_scenario(path);
    } catch (const std::exception& e) {
        std::cerr << "abyss bench-sensing: " << e.what() << '\n';
        return is_input_error(e) ? kInvalid : kRuntime;
    }
    auto cfg = sc.sensing.bench;
    if (seed) cfg.seed = *seed;
    else if (!sc.sensing.bench_seed_set) cfg.seed = sc.seed;
    try {
        const auto table = sensing::bench_sensing(sc.sensing.generator, cfg);
        if (json) {
            std::cout << sensing::to_json(table).dump(2) << '\n';
        } else {
            std::cout << sensing::format_table(table);
        }
    } catch (const std::exception& e) {
        std::cerr << "abyss bench-sensing: " << e.what() << '\n';
        return is_input_error(e) ? kInvalid : kRuntime;
    }
    return kOk;
}

int serve_cmd(unsigned short port, const std::string& log_dir) {
    sigset_t set;
    sigemptyset(&set);
    sigaddset(&set, SIGINT);
    sigaddset(&set, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &set, nullptr);
    service::ServiceOptions opts;
    if (!log_dir.empty()) opts.log_dir = log_dir;
    service::Server server(opts);
    try {
        port = server.start(port);
    } catch (const std::exception& e) {
        std::cerr << "abyss serve: " << e.what() << '\n';
        return kRuntime;
    }
    std::cout << "listening on :" << port << std::endl;
    int sig = 0;
    sigwait(&set, &sig);
    std::cout << "shutting down" << std::endl;
    server.stop();
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AUV fleet survey simulator and mission-control service"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> until;
    std::string out = "out";
    std::string format = "json";
    auto* run = app.add_subcommand("run", "Run a scenario headless and write log, hash and report");
    run->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--until", until, "Stop at this simulated time");
    run->add_option("--out", out, "Output directory")->capture_default_str();
    run->add_option("--format", format, "Report format")->check(CLI::IsMember({"json", "csv"}))->capture_default_str();

    std::string log_path;
    auto* replay = app.add_subcommand("replay", "Verify a recorded event log");
    replay->add_option("--log", log_path, "events.ndjson to verify")->required();

    std::string config_path;
    bool bench_json = false;
    auto* bench = app.add_subcommand("bench-sensing", "Cross-validate the material classifiers on synthetic traces");
    bench->add_option("--config", config_path, "Scenario or bench config with a sensing section")->required();
    bench->add_option("--seed", seed, "Override the bench seed");
    bench->add_flag("--json", bench_json, "Print the table as JSON");

    unsigned short port = service::default_port();
    std::string log_dir;
    auto* serve = app.add_subcommand("serve", "Start the HTTP/WebSocket mission-control service");
    serve->add_option("--port", port, "Listen port (default $ABYSS_PORT or 8080)");
    serve->add_option("--log-dir", log_dir, "Write finished missions' logs here");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kInvalid;
    }

    if (*run) {
        if (!fs::exists(scenario_path)) {
            std::cerr << "abyss run: no such file: " << scenario_path << '\n';
            return kInvalid;
        }
        return run_cmd(scenario_path, seed, until, out, format);
    }
    if (*replay) {
        if (!fs::exists(log_path)) {
            std::cerr << "abyss replay: no such file: " << log_path << '\n';
            std::cout << "FAIL\n";
            return kInvalid;
        }
        const auto r = replay_cmd(log_path);
        if (r.pass) {
            std::cout << "PASS\n";
            return kOk;
        }
        std::cout << "FAIL: " << r.reason << '\n';
        return kFail;
    }
    if (*bench) return bench_cmd(config_path, seed, bench_json);
    if (*serve) return serve_cmd(port, log_dir);
    return kInvalid;
}
