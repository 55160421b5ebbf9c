// SPDX-License-Identifier: Apache-2.0
//
// gmpchan: geometry-aided AoA estimation for short-range LoS MIMO channels
// Copyright (C) 2026 The gmpchan authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace gmpchan;
using gmpchan::testing::coarse_config;
using gmpchan::testing::scratch_dir;
namespace fs = std::filesystem;

namespace {

/// Runs the CLI with `args`, stdout/stderr redirected into `dir`; returns the exit status.
int run_cli(const std::string &args, const fs::path &dir)
{
    const std::string cmd = std::string("\"") + GMPCHAN_CLI_PATH + "\" " + args + " >\"" + (dir / "stdout.txt").string() +
                            "\" 2>\"" + (dir / "stderr.txt").string() + "\"";
    const int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path &p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const fs::path &p)
{
    std::ifstream f(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(f, l);)
        out.push_back(l);
    return out;
}

/// Writes a small configuration whose output directory is `dir`/out.
fs::path write_config(const fs::path &dir, Config cfg)
{
    cfg.output_dir = (dir / "out").string();
    const auto path = dir / "config.json";
    std::ofstream(path) << to_json(cfg).dump(2);
    return path;
}

} // namespace

TEST(Cli, FactorsBuildCacheRefuseAndForce)
{
    const auto dir = scratch_dir("cli_factors");
    auto cfg = coarse_config();
    const auto path = write_config(dir, cfg);
    ASSERT_EQ(run_cli("factors --config \"" + path.string() + "\"", dir), 0) << slurp(dir / "stderr.txt");
    int n = 0;
    for (const auto &e : fs::directory_iterator(dir / "out" / "factors"))
        n += e.path().extension() == ".txt";
    EXPECT_EQ(n, 6);
    const auto before = slurp(dir / "out" / "factors" / "factor_fwd_0_1.txt");
    const auto mtime = fs::last_write_time(dir / "out" / "factors" / "factor_fwd_0_1.txt");

    // Second run: every table comes from the cache and nothing is rewritten.
    ASSERT_EQ(run_cli("factors --config \"" + path.string() + "\"", dir), 0);
    EXPECT_NE(slurp(dir / "stderr.txt").find("cached"), std::string::npos);
    EXPECT_EQ(slurp(dir / "stderr.txt").find("built"), std::string::npos);
    EXPECT_EQ(fs::last_write_time(dir / "out" / "factors" / "factor_fwd_0_1.txt"), mtime);

    // Different table parameters: refused without --force, file untouched.
    cfg.r_max = 0.7;
    write_config(dir, cfg);
    EXPECT_EQ(run_cli("factors --config \"" + path.string() + "\"", dir), 2);
    EXPECT_NE(slurp(dir / "stderr.txt").find("--force"), std::string::npos);
    EXPECT_EQ(slurp(dir / "out" / "factors" / "factor_fwd_0_1.txt"), before);

    ASSERT_EQ(run_cli("factors --force --config \"" + path.string() + "\"", dir), 0);
    EXPECT_NE(slurp(dir / "out" / "factors" / "factor_fwd_0_1.txt"), before);
    EXPECT_EQ(read_factor_header(dir / "out" / "factors" / "factor_fwd_0_1.txt").params.r_max, 0.7);
}

TEST(Cli, SimulateSingleTrialAndManifest)
{
    const auto dir = scratch_dir("cli_sim1");
    const auto cfg = coarse_config();
    const auto path = write_config(dir, cfg);
    ASSERT_EQ(run_cli("simulate --trials 1 --config \"" + path.string() + "\"", dir), 0) << slurp(dir / "stderr.txt");
    const auto out = dir / "out";
    EXPECT_EQ(lines_of(out / "trials.csv").size(), 2u);
    for (const char *f : {"summary.csv", "rates_vs_M.csv", "ecdf_gmp.csv", "ecdf_ml.csv", "ecdf_exhaustive.csv", "manifest.json"})
        EXPECT_TRUE(fs::exists(out / f)) << f;
    auto expect = cfg;
    expect.output_dir = out.string();
    expect.n_trials = 1;
    EXPECT_EQ(load_config((out / "manifest.json").string()), expect);
}

TEST(Cli, SimulateSweep)
{
    const auto dir = scratch_dir("cli_sweep");
    auto cfg = coarse_config();
    cfg.n_trials = 2;
    cfg.methods = {Method::gmp, Method::ml};
    const auto path = write_config(dir, cfg);
    ASSERT_EQ(run_cli("simulate --sweep-m 2,3,5,8,16 --config \"" + path.string() + "\"", dir), 0)
        << slurp(dir / "stderr.txt");
    // Header plus (5 values of M) x (2 methods).
    EXPECT_EQ(lines_of(dir / "out" / "rates_vs_M.csv").size(), 11u);
    EXPECT_EQ(lines_of(dir / "out" / "summary.csv").size(), 6u);
    EXPECT_EQ(lines_of(dir / "stdout.txt").size(), 5u);

    EXPECT_EQ(run_cli("simulate --sweep-m 2,x --config \"" + path.string() + "\"", dir), 1);
    EXPECT_EQ(run_cli("simulate --sweep-m 1 --config \"" + path.string() + "\"", dir), 1);
}

TEST(Cli, SeedOverrideChangesSimulation)
{
    const auto dir = scratch_dir("cli_seed");
    auto cfg = coarse_config();
    cfg.n_trials = 2;
    cfg.methods = {Method::ml};
    const auto path = write_config(dir, cfg);
    ASSERT_EQ(run_cli("simulate --seed 7 --config \"" + path.string() + "\"", dir), 0);
    // trials.csv also carries wall-clock timings, so compare the aggregated outputs.
    const auto a = slurp(dir / "out" / "rates_vs_M.csv") + slurp(dir / "out" / "ecdf_ml.csv");
    ASSERT_EQ(run_cli("simulate --seed 7 --config \"" + path.string() + "\"", dir), 0);
    EXPECT_EQ(slurp(dir / "out" / "rates_vs_M.csv") + slurp(dir / "out" / "ecdf_ml.csv"), a);
    ASSERT_EQ(run_cli("simulate --seed 8 --config \"" + path.string() + "\"", dir), 0);
    EXPECT_NE(slurp(dir / "out" / "rates_vs_M.csv") + slurp(dir / "out" / "ecdf_ml.csv"), a);
}

TEST(Cli, ConfigErrorsExitWithOne)
{
    const auto dir = scratch_dir("cli_bad");
    std::ofstream(dir / "bad.json") << R"({"M": 1})";
    std::ofstream(dir / "unknown.json") << R"({"colour": "blue"})";
    EXPECT_EQ(run_cli("simulate --config \"" + (dir / "bad.json").string() + "\"", dir), 1);
    EXPECT_NE(slurp(dir / "stderr.txt").find("config error"), std::string::npos);
    EXPECT_EQ(run_cli("factors --config \"" + (dir / "unknown.json").string() + "\"", dir), 1);
    EXPECT_EQ(run_cli("estimate --config \"" + (dir / "missing.json").string() + "\"", dir), 1);
    EXPECT_NE(run_cli("", dir), 0);
    EXPECT_NE(run_cli("simulate", dir), 0);
}

TEST(Cli, EstimateDumpsBeliefsDeterministically)
{
    const auto dir = scratch_dir("cli_estimate");
    const auto cfg = coarse_config();
    const auto path = write_config(dir, cfg);
    ASSERT_EQ(run_cli("estimate --seed 11 --config \"" + path.string() + "\"", dir), 0) << slurp(dir / "stderr.txt");
    const auto stdout_a = slurp(dir / "stdout.txt");
    const auto beliefs = dir / "out" / "beliefs";
    std::vector<fs::path> files;
    for (const auto &e : fs::directory_iterator(beliefs))
        files.push_back(e.path());
    std::sort(files.begin(), files.end());
    // One file per subarray for each of the two sounded TX endpoints.
    ASSERT_EQ(files.size(), static_cast<std::size_t>(2 * cfg.n_rf));
    std::vector<std::string> first;
    const std::size_t g = cfg.grid().size();
    for (const auto &f : files)
    {
        first.push_back(slurp(f));
        const auto ls = lines_of(f);
        ASSERT_EQ(ls.size(), g + 1) << f;
        EXPECT_EQ(ls[0], "angle_rad,likelihood,fwd_in,bwd_in,posterior");
        double lik = 0.0;
        double post = 0.0;
        for (std::size_t i = 1; i < ls.size(); ++i)
        {
            std::stringstream ss(ls[i]);
            std::vector<double> v;
            for (std::string tok; std::getline(ss, tok, ',');)
                v.push_back(std::stod(tok));
            ASSERT_EQ(v.size(), 5u);
            EXPECT_NEAR(v[0], cfg.grid()[i - 1], 1e-15);
            lik += v[1];
            post += v[4];
        }
        EXPECT_NEAR(lik, 1.0, 1e-9) << f;
        EXPECT_NEAR(post, 1.0, 1e-9) << f;
    }

    ASSERT_EQ(run_cli("estimate --seed 11 --config \"" + path.string() + "\"", dir), 0);
    EXPECT_EQ(slurp(dir / "stdout.txt"), stdout_a);
    for (std::size_t i = 0; i < files.size(); ++i)
        EXPECT_EQ(slurp(files[i]), first[i]) << files[i];
}

TEST(Cli, EstimateNoiselessFarFieldRecoversTruth)
{
    // Far from the array the subarray plane-wave model is accurate, so with no noise the
    // posterior peak sits on the grid point nearest the true local angle.
    const auto dir = scratch_dir("cli_noiseless");
    auto cfg = coarse_config();
    cfg.snr_pilot_db = std::numeric_limits<double>::infinity();
    cfg.reflect_coeff = 0.0;
    cfg.r_min = 1.5;
    cfg.r_max = 1.6;
    cfg.methods = {Method::gmp};
    const auto path = write_config(dir, cfg);
    ASSERT_EQ(run_cli("estimate --seed 3 --config \"" + path.string() + "\"", dir), 0) << slurp(dir / "stderr.txt");
    const auto out = lines_of(dir / "stdout.txt");
    const auto gmp_line = std::find_if(out.begin(), out.end(), [](const std::string &l) { return l.rfind("gmp:", 0) == 0; });
    ASSERT_NE(gmp_line, out.end());
    std::stringstream ss(gmp_line->substr(gmp_line->find("(deg):") + 6));
    int n = 0;
    for (double e; ss >> e; ++n)
        EXPECT_LE(e, rad2deg(cfg.grid().step())) << *gmp_line;
    EXPECT_EQ(n, 2 * cfg.n_rf);
}
