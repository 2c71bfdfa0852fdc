#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "stochar/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out, err;
};

Result run(std::vector<std::string> args) {
    args.insert(args.begin(), "stochar");
    std::vector<const char*> argv;
    for (const auto& a : args)
        argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = stochar::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

std::vector<std::string> lines(const std::string& s) {
    std::vector<std::string> v;
    std::istringstream in(s);
    for (std::string l; std::getline(in, l);)
        v.push_back(l);
    return v;
}

std::vector<std::string> fields(const std::string& line) {
    std::vector<std::string> v;
    std::istringstream in(line);
    for (std::string f; std::getline(in, f, ',');)
        v.push_back(f);
    if (!line.empty() && line.back() == ',')
        v.emplace_back();
    return v;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("stochar_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    fs::path dir;
};

} // namespace

TEST_F(CliTest, SimulateWritesThreeDeterministicFiles) {
    const std::vector<std::string> args{"simulate", "--scenario", "s1", "--seed", "42", "--dt", "1e-3",
                                        "--nx",     "201",        "--T", "1",      "--out", (dir / "a").string()};
    auto r = run(args);
    ASSERT_EQ(r.code, 0) << r.err;
    for (const char* f : {"surface.csv", "fan.csv", "sigma.csv"})
        ASSERT_TRUE(fs::exists(dir / "a" / f)) << f;
    EXPECT_EQ(lines(slurp(dir / "a" / "surface.csv")).front(), "x,t,u,valid");
    EXPECT_EQ(lines(slurp(dir / "a" / "fan.csv")).front(), "t,x0,xi,eta,chi,alive");
    EXPECT_EQ(lines(slurp(dir / "a" / "sigma.csv")).front(), "x,sigma");
    EXPECT_EQ(lines(slurp(dir / "a" / "sigma.csv")).size(), 202u);

    auto again = args;
    again.back() = (dir / "b").string();
    ASSERT_EQ(run(again).code, 0);
    for (const char* f : {"surface.csv", "fan.csv", "sigma.csv"})
        EXPECT_EQ(slurp(dir / "a" / f), slurp(dir / "b" / f)) << f;
    EXPECT_FALSE(fs::exists(dir / "a" / "surface.csv.tmp"));
}

TEST_F(CliTest, ZeroStepRejected) {
    const auto r = run({"simulate", "--scenario", "s1", "--dt", "0", "--out", dir.string()});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("dt must be positive"), std::string::npos);
}

TEST_F(CliTest, OtherUsageErrors) {
    EXPECT_EQ(run({}).code, 2);
    EXPECT_EQ(run({"simulate", "--scenario", "s1"}).code, 2); // no --out
    EXPECT_EQ(run({"simulate", "--scenario", "s1", "--nx", "1", "--out", dir.string()}).code, 2);
    EXPECT_EQ(run({"simulate", "--scenario", "s1", "--T", "-1", "--out", dir.string()}).code, 2);
    EXPECT_EQ(run({"simulate", "--scenario", "nope", "--out", dir.string()}).code, 2);
    EXPECT_EQ(run({"paths", "--bogus"}).code, 2);
    EXPECT_EQ(run({"explode"}).code, 2);
}

TEST_F(CliTest, ClosedFormInitialValue) {
    const auto r = run({"closed-form", "--id", "D1", "--nx", "101", "--T", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    EXPECT_EQ(ls[0], "x,t,u,valid");
    EXPECT_EQ(ls[1], "0,0,1,1");
    EXPECT_EQ(ls.size(), 1 + 101u * 1001u);
}

TEST_F(CliTest, ClosedFormFunctionalColumn) {
    const auto r = run({"closed-form", "--id", "B2", "--seed", "7", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(slurp(dir / "closed_form.csv"));
    EXPECT_EQ(ls[0], "x,t,u,valid,I");
    EXPECT_EQ(fields(ls[1]).back(), "0");
    EXPECT_EQ(fields(ls.back()).size(), 5u);
}

TEST_F(CliTest, ClosedFormUnknownId) {
    const auto r = run({"closed-form", "--id", "Q9"});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("unknown id"), std::string::npos);
}

TEST_F(CliTest, VerifyAllPasses) {
    const auto r = run({"verify", "--all", "--probes", "1000", "--seed", "1"});
    EXPECT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    ASSERT_EQ(ls.size(), 12u);
    for (const auto& l : ls) {
        const auto f = fields(l);
        ASSERT_EQ(f.size(), 3u);
        EXPECT_EQ(f[2], "PASS") << l;
        EXPECT_LE(std::stod(f[1]), 1e-9);
    }
}

TEST_F(CliTest, VerifySingleIdWritesResiduals) {
    const auto r = run({"verify", "--id", "S1", "--out", dir.string()});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto f = fields(lines(r.out).at(0));
    EXPECT_EQ(f[0], "S1");
    EXPECT_LE(std::stod(f[1]), 1e-9);
    EXPECT_EQ(lines(slurp(dir / "residuals_S1.csv")).size(), 1001u);
}

TEST_F(CliTest, VerifySingularEntry) {
    const auto r = run({"verify", "--id", "D3"});
    EXPECT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(fields(lines(r.out).at(0))[2], "PASS");
}

TEST_F(CliTest, VerifyNeedsTarget) {
    EXPECT_EQ(run({"verify"}).code, 2);
    EXPECT_EQ(run({"verify", "--all", "--id", "S1"}).code, 2);
}

TEST_F(CliTest, StoppingTimeCommonCrossing) {
    const double dt = 1e-3;
    const auto r = run({"stopping-time", "--scenario", "d3", "--nx", "101", "--T", "1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    EXPECT_EQ(ls[0], "x,sigma_numeric,sigma_formula");
    ASSERT_EQ(ls.size(), 102u);
    for (std::size_t k = 1; k < ls.size(); ++k)
        EXPECT_LE(std::stod(fields(ls[k])[1]), 0.5 + 2 * dt);
}

TEST_F(CliTest, StoppingTimeColumnsAgree) {
    const double dt = 1e-3;
    const auto r = run({"stopping-time", "--scenario", "s1", "--seed", "3"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    for (std::size_t k = 1; k < ls.size(); ++k) {
        const auto f = fields(ls[k]);
        const double a = std::stod(f[1]), b = std::stod(f[2]);
        if (std::isinf(a) || std::isinf(b))
            EXPECT_EQ(a, b) << ls[k];
        else
            EXPECT_NEAR(a, b, 2 * dt) << ls[k];
    }
}

TEST_F(CliTest, StoppingTimeNeedsScenario) { EXPECT_EQ(run({"stopping-time"}).code, 2); }

TEST_F(CliTest, CustomScenarioHasNoFormulaColumn) {
    const auto r = run({"stopping-time", "--ic", "x", "--perturbation", "advective", "--noise", "brownian", "--nx",
                        "11", "--T", "0.3"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(fields(lines(r.out).at(1)).back(), "");
}

TEST_F(CliTest, PathsDump) {
    const auto r = run({"paths", "--noise", "geometric-brownian", "--seed", "5", "--dt", "0.1"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto ls = lines(r.out);
    EXPECT_EQ(ls[0], "t,W,S");
    EXPECT_EQ(ls[1], "0,0,1");
    EXPECT_EQ(ls.size(), 12u);
}

TEST_F(CliTest, ConfigFileWithFlagOverride) {
    const auto cfg = dir / "run.cfg";
    std::ofstream(cfg) << "ic=one-minus-x\nperturbation=conservation-lwr\nnoise=brownian\nT=0.5\nseed=3\ndt=0.01\nnx=11\n";
    auto r = run({"simulate", "--config", cfg.string(), "--out", (dir / "a").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    auto sigma = lines(slurp(dir / "a" / "sigma.csv"));
    EXPECT_EQ(sigma.size(), 12u);
    const auto surface = lines(slurp(dir / "a" / "surface.csv"));
    EXPECT_EQ(surface.size(), 1 + 11u * 51u);

    r = run({"simulate", "--config", cfg.string(), "--nx", "21", "--out", (dir / "b").string()});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_EQ(lines(slurp(dir / "b" / "sigma.csv")).size(), 22u);
}

TEST_F(CliTest, ConfigUnknownKeyRejected) {
    const auto cfg = dir / "bad.cfg";
    std::ofstream(cfg) << "ic=x\ncolour=blue\n";
    EXPECT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir.string()}).code, 2);
    std::ofstream(cfg) << "ic=x\nout=/tmp/elsewhere\n";
    EXPECT_EQ(run({"simulate", "--config", cfg.string(), "--out", dir.string()}).code, 2);
}
