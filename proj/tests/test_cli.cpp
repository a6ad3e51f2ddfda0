#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "pmod/io.hpp"
#include "pmod/modulus.hpp"

namespace fs = std::filesystem;
using pmod::json;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

CliRun run(const std::string& args) {
    const std::string cmd = std::string(PMOD_CLI) + " " + args + " 2>&1";
    CliRun r;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) return r;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
    const int st = pclose(p);
    r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
    return r;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

class Cli : public ::testing::Test {
protected:
    fs::path dir;
    void SetUp() override {
        dir = fs::temp_directory_path() /
              ("pmod_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    void TearDown() override { fs::remove_all(dir); }
    std::string at(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_F(Cli, PrepareNormalFormIsIdentity) {
    ASSERT_EQ(run("family normal-form --b 0.3 -o " + at("nf.json")).code, 0);
    const CliRun r = run("prepare " + at("nf.json") + " -o " + at("p.json") + " --report " + at("rep.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    const json rep = json::parse(slurp(at("rep.json")));
    EXPECT_TRUE(rep.at("identity_change").get<bool>());
    EXPECT_LT(rep.at("residuals").at("change_minus_identity").get<double>(), 1e-10);
    EXPECT_LT(rep.at("residuals").at("param_map_minus_identity").get<double>(), 1e-10);
    EXPECT_TRUE(rep.contains("config"));
}

TEST_F(Cli, ModulusOnGridSatisfiesRelations) {
    ASSERT_EQ(run("family simple -o " + at("s.json")).code, 0);
    ASSERT_EQ(run("prepare " + at("s.json") + " -o " + at("p.json") + " --report " + at("rep.json")).code, 0);
    const CliRun r = run("modulus " + at("p.json") + " --grid -0.01 0.01 -o " + at("m.json"));
    ASSERT_EQ(r.code, 0) << r.out;
    const json m = json::parse(slurp(at("m.json")));
    ASSERT_EQ(m.at("records").size(), 2u);
    for (const auto& rec : m.at("records")) {
        EXPECT_TRUE(rec.at("valid").get<bool>());
        for (const auto& [k, v] : rec.at("residuals").items())
            if (pmod::is_relation_residual(k)) EXPECT_LT(v.get<double>(), 1e-6) << k;
    }
}

TEST_F(Cli, SquareRootCheckOfTimeOneModel) {
    ASSERT_EQ(run("family time-one --b 0.3 -o " + at("v1.json")).code, 0);
    const CliRun r = run("sqrt check " + at("v1.json") + " --grid -0.01 0.01 -o " + at("s.json"));
    EXPECT_EQ(r.code, 0) << r.out;
    const json s = json::parse(slurp(at("s.json")));
    EXPECT_TRUE(s.at("passes").get<bool>());
}

TEST_F(Cli, OutputIsDeterministic) {
    ASSERT_EQ(run("family random --seed 7 -o " + at("a.json")).code, 0);
    ASSERT_EQ(run("family random --seed 7 -o " + at("b.json")).code, 0);
    EXPECT_EQ(slurp(at("a.json")), slurp(at("b.json")));
    ASSERT_EQ(run("family simple -o " + at("s.json")).code, 0);
    ASSERT_EQ(run("prepare " + at("s.json") + " -o " + at("p.json") + " --report " + at("r.json")).code, 0);
    const CliRun m1 = run("modulus " + at("p.json") + " --grid 0.01");
    const CliRun m2 = run("modulus " + at("p.json") + " --grid 0.01");
    ASSERT_EQ(m1.code, 0);
    EXPECT_EQ(m1.out, m2.out);
}

TEST_F(Cli, ErrorsAreJsonWithExitOne) {
    const CliRun r = run("validate " + at("missing.json"));
    EXPECT_EQ(r.code, 1);
    const json e = json::parse(r.out);
    EXPECT_EQ(e.at("error").at("kind"), "format");
    std::ofstream(at("bad.json")) << "{\"kind\": 5}";
    EXPECT_EQ(run("validate " + at("bad.json")).code, 1);
    EXPECT_EQ(run("--nmax 0 family simple").code, 1);
}

TEST_F(Cli, CompareExitsTwoOnInequivalence) {
    ASSERT_EQ(run("family normal-form --b 0.3 -o " + at("a.json")).code, 0);
    ASSERT_EQ(run("family normal-form --b 0.2 -o " + at("b.json")).code, 0);
    ASSERT_EQ(run("modulus " + at("a.json") + " --grid -0.01 0.01 -o " + at("ma.json")).code, 0);
    ASSERT_EQ(run("modulus " + at("b.json") + " --grid -0.01 0.01 -o " + at("mb.json")).code, 0);
    const CliRun same = run("compare " + at("ma.json") + " " + at("ma.json"));
    EXPECT_EQ(same.code, 0) << same.out;
    EXPECT_EQ(json::parse(same.out).at("verdict"), "equivalent");
    const CliRun diff = run("compare " + at("ma.json") + " " + at("mb.json"));
    EXPECT_EQ(diff.code, 2) << diff.out;
    EXPECT_EQ(json::parse(diff.out).at("verdict"), "inequivalent");
}
