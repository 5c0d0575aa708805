#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

struct CliRun {
    int code = -1;
    std::string out;
};

CliRun run(const std::string& args)
{
    const std::string cmd = std::string(POTPDA_CLI) + " " + args + " 2>/dev/null";
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

std::string samples(const std::string& name) { return std::string(POTPDA_SAMPLES) + "/" + name; }

fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("potpda_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(Cli, SolveReferenceInstance)
{
    const auto dir = scratch("solve");
    const CliRun r = run("--out " + dir.string() + " solve --a " + samples("a.csv") + " --b " + samples("b.csv") +
                      " --cost " + samples("C.csv") + " --alpha 0.5 --method exact");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_NEAR(j["cost"].get<double>(), 0.1, 1e-12);
    EXPECT_TRUE(j["converged"].get<bool>());
    EXPECT_TRUE(fs::exists(dir / "plan.csv"));
}

TEST(Cli, SolveEntropic)
{
    const auto dir = scratch("solve_ent");
    const CliRun r = run("--out " + dir.string() + " solve --a " + samples("a.csv") + " --b " + samples("b.csv") +
                      " --cost " + samples("C.csv") + " --alpha 0.5 --method entropic --eps 0.03");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NEAR(nlohmann::json::parse(r.out)["cost"].get<double>(), 0.1, 0.002);
}

TEST(Cli, BoundCheckHasNoViolations)
{
    const auto dir = scratch("bound");
    const CliRun r = run("--out " + dir.string() + " --seed 3 bound-check --theorem 1 --trials 100");
    ASSERT_EQ(r.code, 0) << r.out;
    const auto j = nlohmann::json::parse(r.out);
    EXPECT_EQ(j["violations"].get<int>(), 0);
    EXPECT_TRUE(fs::exists(dir / "bound_reports.csv"));
}

TEST(Cli, WeightsOnSampleTask)
{
    const auto dir = scratch("weights");
    const CliRun r = run("--out " + dir.string() + " weights --data " + samples("task.csv") + " --scheme warmpot");
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_TRUE(fs::exists(dir / "weights.csv"));
    EXPECT_TRUE(fs::exists(dir / "weights_hist.csv"));
}

TEST(Cli, TrainWritesTraceAndIsDeterministic)
{
    const auto d1 = scratch("train1"), d2 = scratch("train2");
    const std::string args = " --config " + samples("synthetic.cfg") + " --set total_iters=40 --set ramp_iters=20 train --data " +
                             samples("task.csv");
    ASSERT_EQ(run("--out " + d1.string() + args).code, 0);
    ASSERT_EQ(run("--out " + d2.string() + args).code, 0);
    const std::string t1 = slurp(d1 / "trace.csv");
    EXPECT_EQ(t1.substr(0, t1.find('\n')),
              "iter,alpha,objective,source_loss,alignment,plan_mass,converged,solver_iters,outlier_share");
    EXPECT_EQ(t1, slurp(d2 / "trace.csv"));
    EXPECT_TRUE(fs::exists(d1 / "params.json"));
    EXPECT_NE(slurp(d1 / "config.txt").find("total_iters = 40"), std::string::npos);
}

TEST(Cli, UnknownSubcommandExitsTwo) { EXPECT_EQ(run("frobnicate").code, 2); }

TEST(Cli, ConfigErrorsExitTwo)
{
    const auto dir = scratch("cfgerr");
    EXPECT_EQ(run("--out " + dir.string() + " --set beta=2 train --data " + samples("task.csv")).code, 2);
    EXPECT_EQ(run("--out " + dir.string() + " --set nokey=1 train --data " + samples("task.csv")).code, 2);
}

TEST(Cli, InfeasibleSolveExitsOne)
{
    const auto dir = scratch("infeasible");
    EXPECT_EQ(run("--out " + dir.string() + " solve --a " + samples("a.csv") + " --b " + samples("b.csv") +
                  " --cost " + samples("C.csv") + " --alpha 5")
                  .code,
              1);
}
