#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "abyss/scenario/runner.hpp"

namespace fs = std::filesystem;
using abyss::Json;

namespace {

struct Result {
    int code = -1;
    std::string out;
};

Result cli(const std::string& args) {
    const std::string cmd = std::string(ABYSS_CLI) + " " + args + " 2>/dev/null";
    Result r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

void write_lines(const fs::path& p, const std::vector<std::string>& lines) {
    std::ofstream out(p, std::ios::binary);
    for (const auto& l : lines) out << l << '\n';
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() / ("abyss-cli-" + std::to_string(::getpid()) + "-" +
                                            ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    Result run(const std::string& scenario, const fs::path& out, const std::string& extra = "") {
        return cli("run --scenario " + std::string(ABYSS_SCENARIOS) + "/" + scenario + " --out " + out.string() + " " +
                   extra);
    }

    fs::path dir_;
};

}  // namespace

TEST_F(CliTest, PaperOffloadRunAndReplay) {
    const auto out = dir_ / "a";
    ASSERT_EQ(run("paper_offload.json", out).code, 0);
    const Json rep = Json::parse(slurp(out / "report.json"));
    EXPECT_DOUBLE_EQ(rep["offload"]["success_rate"].get<double>(), 1.0);
    const auto r = cli("replay --log " + (out / "events.ndjson").string());
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.out.find("PASS"), std::string::npos);
}

TEST_F(CliTest, SameSeedSameHash) {
    ASSERT_EQ(run("reef_survey.json", dir_ / "a").code, 0);
    ASSERT_EQ(run("reef_survey.json", dir_ / "b").code, 0);
    EXPECT_EQ(slurp(dir_ / "a" / "events.sha256"), slurp(dir_ / "b" / "events.sha256"));
    EXPECT_EQ(slurp(dir_ / "a" / "events.ndjson"), slurp(dir_ / "b" / "events.ndjson"));
    ASSERT_EQ(run("reef_survey.json", dir_ / "c", "--seed 7").code, 0);
    EXPECT_NE(slurp(dir_ / "a" / "events.sha256"), slurp(dir_ / "c" / "events.sha256"));
}

TEST_F(CliTest, HashFileMatchesLog) {
    ASSERT_EQ(run("paper_offload.json", dir_).code, 0);
    const auto hash = slurp(dir_ / "events.sha256").substr(0, 64);
    EXPECT_EQ(hash, abyss::sha256_hex(slurp(dir_ / "events.ndjson")));
}

TEST_F(CliTest, ReportEqualsLibraryRun) {
    ASSERT_EQ(run("reef_survey.json", dir_).code, 0);
    abyss::scenario::Simulation sim(abyss::scenario::load_scenario(std::string(ABYSS_SCENARIOS) + "/reef_survey.json"));
    sim.run();
    EXPECT_EQ(Json::parse(slurp(dir_ / "report.json")), abyss::scenario::report_from_log(sim.engine().log()));
}

TEST_F(CliTest, DeletedLineFails) {
    ASSERT_EQ(run("paper_offload.json", dir_).code, 0);
    auto lines = lines_of(dir_ / "events.ndjson");
    lines.erase(lines.begin() + 10);
    write_lines(dir_ / "events.ndjson", lines);
    const auto r = cli("replay --log " + (dir_ / "events.ndjson").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("FAIL"), std::string::npos);
    EXPECT_NE(r.out.find("seq gap"), std::string::npos);
}

TEST_F(CliTest, ReorderedLinesFail) {
    ASSERT_EQ(run("paper_offload.json", dir_).code, 0);
    auto lines = lines_of(dir_ / "events.ndjson");
    std::swap(lines[20], lines[21]);
    write_lines(dir_ / "events.ndjson", lines);
    const auto r = cli("replay --log " + (dir_ / "events.ndjson").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("monotonicity"), std::string::npos);
}

TEST_F(CliTest, CorruptedLineNamesLineNumber) {
    ASSERT_EQ(run("paper_offload.json", dir_).code, 0);
    auto lines = lines_of(dir_ / "events.ndjson");
    lines[4] = lines[4].substr(0, lines[4].size() / 2);
    write_lines(dir_ / "events.ndjson", lines);
    const auto r = cli("replay --log " + (dir_ / "events.ndjson").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("line 5"), std::string::npos);
}

TEST_F(CliTest, TamperedPayloadFailsHash) {
    ASSERT_EQ(run("paper_offload.json", dir_).code, 0);
    auto lines = lines_of(dir_ / "events.ndjson");
    auto e = abyss::parse_event(lines[3]);
    e.payload["tampered"] = true;
    lines[3] = abyss::serialize_event(e);
    write_lines(dir_ / "events.ndjson", lines);
    const auto r = cli("replay --log " + (dir_ / "events.ndjson").string());
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("hash mismatch"), std::string::npos);
}

TEST_F(CliTest, MissingFiles) {
    EXPECT_EQ(cli("run --scenario /nonexistent.json --out " + dir_.string()).code, 2);
    EXPECT_EQ(cli("replay --log /nonexistent.ndjson").code, 2);
}

TEST_F(CliTest, InvalidScenarioIsInputError) {
    std::ofstream(dir_ / "bad.json") << R"({"name": "x", "bogus": 1})";
    EXPECT_EQ(cli("run --scenario " + (dir_ / "bad.json").string() + " --out " + (dir_ / "o").string()).code, 2);
}

TEST_F(CliTest, CsvReport) {
    ASSERT_EQ(run("paper_offload.json", dir_, "--format csv").code, 0);
    const auto csv = slurp(dir_ / "report.csv");
    EXPECT_EQ(csv.rfind("metric,value\n", 0), 0u);
    EXPECT_NE(csv.find("offload.completion_rate,1.000000"), std::string::npos);
    EXPECT_FALSE(fs::exists(dir_ / "report.json"));
}

TEST_F(CliTest, UntilStopsEarly) {
    ASSERT_EQ(run("reef_survey.json", dir_, "--until 50").code, 0);
    const Json rep = Json::parse(slurp(dir_ / "report.json"));
    EXPECT_EQ(rep["end_reason"], "duration");
    EXPECT_DOUBLE_EQ(rep["end_time"].get<double>(), 50.0);
}

TEST_F(CliTest, BenchSensingJson) {
    const auto r = cli("bench-sensing --config " + std::string(ABYSS_SCENARIOS) + "/sensing_bench.json --json");
    ASSERT_EQ(r.code, 0);
    const Json t = Json::parse(r.out);
    ASSERT_EQ(t["rows"].size(), 5u);
    EXPECT_EQ(t["rows"][0]["subset"], "all");
    const double avg = t["rows"][0]["average"].get<double>();
    EXPECT_GE(avg, 0.62);
    EXPECT_LE(avg, 0.82);
}
