#include <gtest/gtest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "evospec/io.hpp"
#include "evospec/simulate.hpp"

using namespace evospec;
namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

CliRun run(const std::string& args) {
    const std::string cmd = std::string(EVOSPEC_CLI_PATH) + " " + args + " 2>&1";
    CliRun r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int status = pclose(p);
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() / ("evospec_cli_" + std::to_string(::getpid()) + "_" +
                                           ::testing::UnitTest::GetInstance()->current_test_info()->name());
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }

    std::string write(const std::string& name, const std::string& text) {
        const fs::path p = dir / name;
        std::ofstream(p) << text;
        return p.string();
    }
    std::string series_file(const std::string& name, Model m, int T, std::uint64_t seed) {
        std::ostringstream os;
        write_series_csv(os, simulate({m, T}, seed));
        return write(name, os.str());
    }
    static std::string slurp(const std::string& path) {
        std::ifstream f(path);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    }

    fs::path dir;
};

}  // namespace

TEST(ParseSeriesCsv, HeaderlessAndHeader) {
    std::istringstream a("1\n2.5\n-3e-2\n");
    EXPECT_EQ(parse_series_csv(a), (std::vector<double>{1.0, 2.5, -0.03}));
    std::istringstream b("x\r\n1\r\n2\r\n");
    EXPECT_EQ(parse_series_csv(b), (std::vector<double>{1.0, 2.0}));
}

TEST(ParseSeriesCsv, Errors) {
    std::istringstream empty("");
    EXPECT_THROW(parse_series_csv(empty), ParseError);
    std::istringstream bad("x\n1\n2\n3\n4\n5\nabc\n8\n");
    try {
        parse_series_csv(bad);
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.row, 7);
        EXPECT_NE(std::string(e.what()).find("row 7"), std::string::npos);
    }
    std::istringstream comma("1,2\n");
    EXPECT_THROW(parse_series_csv(comma), ParseError);
    std::istringstream inf("1\ninf\n");
    EXPECT_THROW(parse_series_csv(inf), ParseError);
}

TEST_F(Cli, TestHappyPath) {
    const std::string in = series_file("x.csv", Model::M1, 1000, 1);
    const CliRun r = run("test " + in + " --stat smax --omega 0 --alpha 0.05");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_TRUE(j.contains("reject"));
    EXPECT_EQ(j["statistic"], "smax");
    EXPECT_EQ(j["alpha"], 0.05);
    EXPECT_TRUE(j["reject"].is_boolean());
}

TEST_F(Cli, TestAllStatisticsDefaultSweep) {
    const std::string in = series_file("x.csv", Model::M1, 500, 2);
    const CliRun r = run("test " + in);
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    ASSERT_EQ(j.size(), 10u);  // four frequencies for each single-frequency statistic, plus the two sweeps
    EXPECT_EQ(j[9]["statistic"], "rdmax");
}

TEST_F(Cli, EmptyFile) {
    const CliRun r = run("test " + write("e.csv", ""));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("parse error"), std::string::npos) << r.out;
}

TEST_F(Cli, BadCellCitesRow) {
    std::string text = "x\n";
    for (int i = 0; i < 5; ++i) text += "0.5\n";
    text += "oops\n";
    const CliRun r = run("test " + write("b.csv", text));
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.out.find("row 7"), std::string::npos) << r.out;
}

TEST_F(Cli, TooShort) {
    std::string text;
    for (int i = 0; i < 40; ++i) text += std::to_string(i % 3) + "\n";
    const CliRun r = run("test " + write("s.csv", text));
    EXPECT_EQ(r.code, 1);
}

TEST_F(Cli, FailOnReject) {
    // A variance quadrupling halfway trips the sweep statistic.
    std::vector<double> v = simulate({Model::M1, 1000}, 9).values();
    for (std::size_t i = 500; i < v.size(); ++i) v[i] *= 4.0;
    std::ostringstream os;
    write_series_csv(os, TimeSeries(v));
    const std::string in = write("r.csv", os.str());
    const CliRun a = run("test " + in + " --stat sdmax");
    ASSERT_EQ(a.code, 0) << a.out;
    ASSERT_TRUE(nlohmann::json::parse(a.out)["reject"].get<bool>());
    EXPECT_EQ(run("test " + in + " --stat sdmax --fail-on-reject").code, 2);
}

TEST_F(Cli, SimulateDetectRoundTrip) {
    const std::string x = (dir / "sim.csv").string();
    const std::string truth = (dir / "truth.json").string();
    CliRun r = run("simulate --model M6 -T 1000 --seed 4 --out " + x + " --truth " + truth);
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_EQ(slurp(x).substr(0, 2), "x\n");
    const auto t = nlohmann::json::parse(slurp(truth));
    EXPECT_EQ(t["breaks"][0]["t"], 330);
    r = run("detect " + x + " --seed 3 --threads 2");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["m_hat"].get<int>(), static_cast<int>(j["estimates"].size()));
    EXPECT_TRUE(j.contains("trace"));
    // Same seed, same answer, any thread count.
    EXPECT_EQ(nlohmann::json::parse(run("detect " + x + " --seed 3 --threads 1").out), j);
}

TEST_F(Cli, DetectProfileDump) {
    const std::string in = series_file("x.csv", Model::M3, 1000, 5);
    const std::string prof = (dir / "p.csv").string();
    ASSERT_EQ(run("detect " + in + " --profile " + prof + " --out " + (dir / "d.json").string()).code, 0);
    const std::string p = slurp(prof);
    EXPECT_EQ(p.substr(0, 8), "r,max_d\n");
}

TEST_F(Cli, ConfigOverrides) {
    const std::string in = series_file("x.csv", Model::M1, 1000, 6);
    const std::string cfg = write("c.cfg", "theta = 2\nK = 10\n");
    const CliRun r = run("detect " + in + " --config " + cfg);
    ASSERT_EQ(r.code, 0) << r.out;
    const std::string kv = nlohmann::json::parse(r.out)["config"];
    EXPECT_NE(kv.find("theta = 2"), std::string::npos) << kv;
    EXPECT_EQ(run("detect " + in + " --set bogus=1").code, 1);
}

TEST_F(Cli, MonteCarloSchema) {
    const std::string out = (dir / "mc.csv").string();
    const CliRun r = run("montecarlo --model M1 -T 250 --reps 100 --seed 11 --threads 2 --out " + out);
    ASSERT_EQ(r.code, 0) << r.out;
    std::istringstream csv(slurp(out));
    std::string header;
    std::getline(csv, header);
    EXPECT_EQ(header, "model,T,statistic,alpha,reject_rate,replications,seed");
    int rows = 0;
    for (std::string line; std::getline(csv, line);) {
        ++rows;
        EXPECT_EQ(line.substr(0, 7), "M1,250,");
    }
    EXPECT_EQ(rows, 10);
    const CliRun again = run("montecarlo --model M1 -T 250 --reps 100 --seed 11 --threads 1");
    EXPECT_EQ(again.out, slurp(out));
}

TEST_F(Cli, MonteCarloErrors) {
    EXPECT_EQ(run("montecarlo --model M9 -T 250 --reps 100").code, 1);
    EXPECT_EQ(run("montecarlo --model M1 -T 250 --reps 10").code, 1);
}

TEST_F(Cli, SpectrumExport) {
    const std::string in = series_file("x.csv", Model::M2, 500, 7);
    const CliRun r = run("spectrum " + in + " --side right");
    ASSERT_EQ(r.code, 0) << r.out;
    std::istringstream s(r.out);
    std::string header, first;
    std::getline(s, header);
    std::getline(s, first);
    EXPECT_EQ(header.substr(0, 6), "j,-3.1");
    EXPECT_EQ(std::count(header.begin(), header.end(), ','), default_config(500).n_omega);
    EXPECT_EQ(first.substr(0, 2), "1,");
}
