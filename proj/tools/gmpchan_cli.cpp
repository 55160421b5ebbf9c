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

// Command-line front end: factor-table precomputation, single-trial debugging dumps and batch simulation.

#include <gmpchan/gmpchan.hpp>

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace gmpchan;

namespace {

struct Options
{
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<int> jobs;
    bool force = false;
    bool no_multipath = false;
    std::string sweep_m;
};

void add_common(CLI::App *cmd, Options &o)
{
    cmd->add_option("--config", o.config_path, "JSON configuration file")->required();
    cmd->add_option("--out", o.out, "Output directory (default: output_dir from the config)");
    cmd->add_option("--seed", o.seed, "Scenario seed (estimate) or master seed (simulate)");
    cmd->add_option("--trials", o.trials, "Number of Monte Carlo trials");
    cmd->add_option("--jobs", o.jobs, "Worker threads for simulate");
    cmd->add_flag("--force", o.force, "Overwrite factor caches built for another configuration");
    cmd->add_option("--sweep-m", o.sweep_m, "Comma-separated list of M values, e.g. 2,3,5,8,16");
    cmd->add_flag("--no-multipath", o.no_multipath, "Disable wall reflections");
}

Config resolve(const Options &o)
{
    Config cfg = load_config(o.config_path);
    if (!o.out.empty())
        cfg.output_dir = o.out;
    if (o.trials)
        cfg.n_trials = *o.trials;
    if (o.jobs)
        cfg.parallelism = *o.jobs;
    if (o.no_multipath)
        cfg.reflect_coeff = 0.0;
    cfg.validate();
    return cfg;
}

std::vector<int> parse_sweep(const std::string &s, const Config &cfg)
{
    std::vector<int> ms;
    if (s.empty())
        return ms;
    std::stringstream ss(s);
    for (std::string tok; std::getline(ss, tok, ',');)
    {
        int m = 0;
        try
        {
            std::size_t pos = 0;
            m = std::stoi(tok, &pos);
            if (pos != tok.size())
                throw std::invalid_argument(tok);
        }
        catch (const std::logic_error &)
        {
            throw ConfigError("--sweep-m: malformed value '" + tok + "'");
        }
        if (m < 2 || m > cfg.n_per_sub + 1)
            throw ConfigError("--sweep-m: M = " + tok + " outside [2, n_per_sub + 1]");
        ms.push_back(m);
    }
    return ms;
}

const char *status_name(CacheStatus s)
{
    switch (s)
    {
    case CacheStatus::hit:
        return "cached";
    case CacheStatus::built:
        return "built";
    case CacheStatus::rebuilt_forced:
        return "rebuilt (forced)";
    case CacheStatus::mismatch_not_written:
        return "built in memory (cache belongs to another configuration)";
    }
    return "?";
}

CachedFactors load_factors(const Config &cfg, MismatchPolicy policy)
{
    auto cached = ensure_factor_tables(cfg.grid(), cfg.factor_params(), fs::path(cfg.output_dir) / "factors", policy);
    const int pairs = cfg.n_rf - 1;
    for (std::size_t i = 0; i < cached.status.size(); ++i)
    {
        const bool fwd = static_cast<int>(i) < pairs;
        const int p = fwd ? static_cast<int>(i) : static_cast<int>(i) - pairs;
        const auto name = fwd ? factor_file_name(Direction::forward, p, p + 1) : factor_file_name(Direction::backward, p + 1, p);
        std::cerr << "  " << name << ": " << status_name(cached.status[i]) << "\n";
    }
    return cached;
}

void print_record(std::ostream &os, const Config &cfg, const TrialRecord &r)
{
    os << "trial " << r.trial_id << " seed " << r.seed << " r " << format_real(r.r) << " m, status "
       << (r.failed ? "failed: " + r.failure : std::string("ok")) << "\n";
    os << "perfect-CSI rate " << format_real(r.perfect_rate) << " bit/s/Hz\n";
    for (std::size_t gi = 0; gi < r.sounded_tx.size(); ++gi)
    {
        os << "tx " << r.sounded_tx[gi] << " true AoA (deg):";
        for (int k = 0; k < cfg.n_rf; ++k)
            os << " " << rad2deg(r.true_aoa[gi * static_cast<std::size_t>(cfg.n_rf) + static_cast<std::size_t>(k)]);
        os << "\n";
    }
    for (const auto &m : r.methods)
    {
        os << to_string(m.method) << ": rate " << format_real(m.rate) << ", errors (deg):";
        for (double e : m.errors_deg)
            os << " " << e;
        os << "\n";
    }
}

int cmd_factors(const Options &o)
{
    const Config cfg = resolve(o);
    std::cerr << "factor tables, grid " << cfg.grid().size() << " points:\n";
    load_factors(cfg, o.force ? MismatchPolicy::overwrite : MismatchPolicy::refuse);
    return 0;
}

int cmd_estimate(const Options &o)
{
    const Config cfg = resolve(o);
    const auto cached = load_factors(cfg, o.force ? MismatchPolicy::overwrite : MismatchPolicy::build_only);
    const ExperimentContext ctx(cfg, cached.factors);
    const std::uint64_t seed = o.seed ? *o.seed : trial_seed(cfg.master_seed, 0);
    TrialDetail detail;
    const auto rec = run_trial(ctx, 0, seed, &detail);
    write_belief_dumps(fs::path(cfg.output_dir) / "beliefs", ctx.grid, rec, detail);
    print_record(std::cout, cfg, rec);
    return rec.failed ? 2 : 0;
}

int cmd_simulate(const Options &o)
{
    Config cfg = resolve(o);
    if (o.seed)
        cfg.master_seed = *o.seed;
    const auto sweep = parse_sweep(o.sweep_m, cfg);
    const auto cached = load_factors(cfg, o.force ? MismatchPolicy::overwrite : MismatchPolicy::build_only);
    const auto results = simulate_to_directory(cfg, cached.factors, sweep, cfg.output_dir);
    for (const auto &res : results)
    {
        const auto &s = res.summary;
        std::cout << "M=" << s.M << " trials " << s.n_trials << " failed " << s.n_failed << " perfect "
                  << format_real(s.perfect_mean_rate);
        for (const auto &m : s.methods)
            std::cout << " " << to_string(m.method) << " " << format_real(m.mean_rate);
        std::cout << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"Geometry-aided AoA estimation for short-range LoS MIMO channels"};
    app.require_subcommand(1);
    Options o;
    auto *factors = app.add_subcommand("factors", "Precompute and cache geometry factor tables");
    auto *estimate = app.add_subcommand("estimate", "Run one trial and dump per-subarray beliefs");
    auto *simulate = app.add_subcommand("simulate", "Run the Monte Carlo experiment and write CSV summaries");
    for (auto *c : {factors, estimate, simulate})
        add_common(c, o);

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp &e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError &e)
    {
        app.exit(e);
        return 1;
    }

    try
    {
        if (*factors)
            return cmd_factors(o);
        if (*estimate)
            return cmd_estimate(o);
        return cmd_simulate(o);
    }
    catch (const ConfigError &e)
    {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    }
    catch (const std::exception &e)
    {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
