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

#pragma once

#include "config.hpp"
#include "factor_cache.hpp"
#include "geometry.hpp"
#include "inference.hpp"
#include "reconstruction.hpp"
#include "sounding.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace gmpchan {

/// Immutable state shared by every trial of an experiment.
struct ExperimentContext
{
    Config cfg;
    ArrayLayout layout;
    AngularGrid grid;
    CMat steering;
    GeometryFactors factors;

    ExperimentContext(Config c, GeometryFactors f)
        : cfg(std::move(c)), layout(cfg.layout()), grid(cfg.kappa),
          steering(steering_matrix(grid, cfg.n_per_sub)), factors(std::move(f))
    {
        cfg.validate();
        if (static_cast<int>(factors.forward.size()) != cfg.n_rf - 1 ||
            static_cast<int>(factors.backward.size()) != cfg.n_rf - 1)
            throw std::invalid_argument("ExperimentContext: factor tables do not match n_rf.");
        for (const auto *set : {&factors.forward, &factors.backward})
            for (const auto &t : *set)
                if (t.grid_size != grid.size())
                    throw std::invalid_argument("ExperimentContext: factor table grid size mismatch.");
    }

    explicit ExperimentContext(const Config &c) : ExperimentContext(c, build_geometry_factors(c.grid(), c.factor_params()))
    {
    }
};

struct MethodResult
{
    Method method = Method::gmp;
    std::vector<double> estimates;  // radians, [group * n_rf + k]
    std::vector<double> errors_deg; // |estimate - truth| in degrees, same order
    double rate = std::numeric_limits<double>::quiet_NaN();
    double tx_separation = std::numeric_limits<double>::quiet_NaN(); // estimated endpoint distance, meters
};

struct StageTiming
{
    double scenario_ms = 0.0;
    double sounding_ms = 0.0;
    double likelihood_ms = 0.0;
    double ml_ms = 0.0;
    double gmp_ms = 0.0;
    double exhaustive_ms = 0.0;
    double reconstruction_ms = 0.0;
};

struct TrialRecord
{
    std::size_t trial_id = 0;
    std::uint64_t seed = 0;
    double r = 0.0;
    double rx_heading = 0.0;
    double tx_heading = 0.0;
    bool failed = false;
    std::string failure;
    std::vector<int> sounded_tx;
    std::vector<double> true_aoa; // [group * n_rf + k]
    std::vector<MethodResult> methods;
    double perfect_rate = std::numeric_limits<double>::quiet_NaN();
    StageTiming timing;

    const MethodResult &result(Method m) const
    {
        for (const auto &r : methods)
            if (r.method == m)
                return r;
        throw std::out_of_range("TrialRecord: method not run.");
    }
};

/// Beliefs behind one trial, for debugging dumps.
struct TrialDetail
{
    Scenario scenario;
    std::vector<std::vector<Belief>> likelihoods; // ZC sounding, [group][k]
    std::vector<GmpResult> gmp;                   // [group]
    std::vector<std::vector<bool>> usable;        // [group][k]
};

namespace detail {

class Stopwatch
{
  public:
    double lap_ms()
    {
        const auto now = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(now - t_).count();
        t_ = now;
        return ms;
    }

  private:
    std::chrono::steady_clock::time_point t_ = std::chrono::steady_clock::now();
};

inline double angle_error_deg(double est, double truth) { return rad2deg(std::abs(est - truth)); }

} // namespace detail

inline std::vector<int> sounded_antennas(int n_tx)
{
    return n_tx > 1 ? std::vector<int>{0, n_tx - 1} : std::vector<int>{0};
}

/// End-to-end evaluation of one given placement: channel, ZC and DFT sounding, ML / GMP / exhaustive AoA
/// estimation, channel rebuild and rate. Deterministic in `trial_seed`.
inline TrialRecord run_scenario(const ExperimentContext &ctx, const Scenario &sc, std::size_t trial_id,
                                std::uint64_t trial_seed, TrialDetail *detail = nullptr)
{
    const Config &cfg = ctx.cfg;
    const ArrayLayout &layout = ctx.layout;
    const int n_rf = layout.n_rf;
    detail::Stopwatch sw;

    TrialRecord rec;
    rec.trial_id = trial_id;
    rec.seed = trial_seed;

    const RoomSpec room = cfg.room();
    rec.r = sc.distance();
    rec.rx_heading = sc.rx_pose.heading;
    rec.tx_heading = sc.tx_pose.heading;
    const CMat h = cfg.reflect_coeff > 0.0 ? multipath_channel(sc, room, cfg.reflect_coeff) : los_channel(sc);
    const RxGeometry rxg = rx_antenna_positions(sc);
    rec.sounded_tx = sounded_antennas(layout.n_tx);
    const auto n_groups = rec.sounded_tx.size();
    for (int l : rec.sounded_tx)
        for (int k = 0; k < n_rf; ++k)
            rec.true_aoa.push_back(true_local_aoa(sc, k, l));
    if (detail)
        detail->scenario = sc;
    rec.timing.scenario_ms = sw.lap_ms();

    // Noise level is fixed by the ZC sounding and shared by every method.
    std::vector<Codebook> zc;
    for (int k = 0; k < n_rf; ++k)
        zc.push_back(build_codebook(layout.n_per_sub, cfg.M, derive_seed(trial_seed, 100 + static_cast<std::uint64_t>(k)),
                                    cfg.zc_root));
    const double ref_power = pilot_noise_variance(h, layout, zc, rec.sounded_tx, 0.0);
    const double noise_var = ref_power / std::pow(10.0, cfg.snr_pilot_db / 10.0);
    // Noise-free sounding still needs a finite likelihood scale.
    const double infer_var = noise_var > 0.0 ? noise_var : ref_power * 1e-12;

    const bool want_zc = cfg.has_method(Method::gmp) || cfg.has_method(Method::ml);
    MeasurementSet zc_ms;
    if (want_zc)
        zc_ms = acquire_at_noise_var(layout, h, zc, rec.sounded_tx, noise_var, derive_seed(trial_seed, 2));
    rec.timing.sounding_ms = sw.lap_ms();

    std::vector<std::vector<double>> est_ml, est_gmp, est_ex;
    std::vector<std::vector<bool>> usable(n_groups, std::vector<bool>(static_cast<std::size_t>(n_rf), true));
    std::vector<bool> ex_usable(static_cast<std::size_t>(n_rf), true);

    try
    {
        if (want_zc)
        {
            std::vector<std::vector<Belief>> liks(n_groups);
            std::vector<CMat> comp;
            for (int k = 0; k < n_rf; ++k)
                comp.push_back(zc[static_cast<std::size_t>(k)].compression_matrix());
            for (std::size_t gi = 0; gi < n_groups; ++gi)
            {
                for (int k = 0; k < n_rf; ++k)
                {
                    const auto g = estimate_gain(zc_ms, k, rec.sounded_tx[gi]);
                    usable[gi][static_cast<std::size_t>(k)] = g.usable;
                    liks[gi].push_back(g.usable ? likelihood(g.compensated, comp[static_cast<std::size_t>(k)], g.alpha,
                                                             infer_var, ctx.steering)
                                                : Belief::uniform(ctx.grid.size(), BeliefKind::likelihood));
                }
            }
            rec.timing.likelihood_ms = sw.lap_ms();

            for (std::size_t gi = 0; gi < n_groups; ++gi)
            {
                std::vector<double> th;
                for (auto idx : ml_estimate(liks[gi]))
                    th.push_back(ctx.grid[idx]);
                est_ml.push_back(std::move(th));
            }
            rec.timing.ml_ms = sw.lap_ms();

            if (cfg.has_method(Method::gmp))
            {
                for (std::size_t gi = 0; gi < n_groups; ++gi)
                {
                    auto res = run_gmp(liks[gi], ctx.factors);
                    std::vector<double> th;
                    for (const auto &e : res.estimates)
                        th.push_back(ctx.grid[e.index]);
                    est_gmp.push_back(std::move(th));
                    if (detail)
                        detail->gmp.push_back(std::move(res));
                }
            }
            rec.timing.gmp_ms = sw.lap_ms();
            if (detail)
            {
                detail->likelihoods = std::move(liks);
                detail->usable = usable;
            }
        }

        if (cfg.has_method(Method::exhaustive))
        {
            const Codebook dft = dft_codebook(layout.n_per_sub);
            const std::vector<Codebook> books(static_cast<std::size_t>(n_rf), dft);
            const auto ms = acquire_at_noise_var(layout, h, books, rec.sounded_tx, noise_var, derive_seed(trial_seed, 3));
            const CMat a = dft.compression_matrix();
            for (std::size_t gi = 0; gi < n_groups; ++gi)
            {
                std::vector<double> th;
                for (int k = 0; k < n_rf; ++k)
                    th.push_back(ctx.grid[beamscan_likelihood(ms.y[gi][static_cast<std::size_t>(k)], a, infer_var,
                                                              ctx.steering)
                                              .argmax()]);
                est_ex.push_back(std::move(th));
            }
            rec.timing.exhaustive_ms = sw.lap_ms();
        }

        const auto n_streams = cfg.n_streams;
        rec.perfect_rate = achievable_rate(h, h, cfg.snr_data_db, n_streams).rate;
        for (Method m : cfg.methods)
        {
            const auto &est = m == Method::gmp ? est_gmp : m == Method::ml ? est_ml : est_ex;
            MethodResult mr;
            mr.method = m;
            for (std::size_t gi = 0; gi < n_groups; ++gi)
                for (int k = 0; k < n_rf; ++k)
                {
                    const double e = est[gi][static_cast<std::size_t>(k)];
                    mr.estimates.push_back(e);
                    mr.errors_deg.push_back(detail::angle_error_deg(e, rec.true_aoa[gi * static_cast<std::size_t>(n_rf) +
                                                                                    static_cast<std::size_t>(k)]));
                }
            const auto &mask_first = m == Method::exhaustive ? ex_usable : usable.front();
            const auto &mask_last = m == Method::exhaustive ? ex_usable : usable.back();
            const auto ends = tx_endpoints(make_bearings(sc.rx_pose, rxg.midpoints, est.front(), mask_first),
                                           make_bearings(sc.rx_pose, rxg.midpoints, est.back(), mask_last));
            mr.tx_separation = ends.separation();
            const CMat h_est = rebuild_channel(ends, layout, rxg.antennas);
            mr.rate = achievable_rate(h, h_est, cfg.snr_data_db, n_streams, to_string(m)).rate;
            rec.methods.push_back(std::move(mr));
        }
        rec.timing.reconstruction_ms = sw.lap_ms();
    }
    catch (const InferenceError &e)
    {
        rec.failed = true;
        rec.failure = e.what();
    }
    catch (const GeometryError &e)
    {
        rec.failed = true;
        rec.failure = e.what();
    }
    return rec;
}

/// Scenario placed around the room center, drawn from `trial_seed`.
inline Scenario trial_scenario(const ExperimentContext &ctx, std::uint64_t trial_seed)
{
    return sample_scenario(derive_seed(trial_seed, 1), ctx.layout, ctx.cfg.r_min, ctx.cfg.r_max, ctx.cfg.room().center());
}

/// One Monte Carlo trial: a random placement followed by run_scenario.
inline TrialRecord run_trial(const ExperimentContext &ctx, std::size_t trial_id, std::uint64_t trial_seed,
                             TrialDetail *detail = nullptr)
{
    detail::Stopwatch sw;
    const Scenario sc = trial_scenario(ctx, trial_seed);
    const double sample_ms = sw.lap_ms();
    TrialRecord rec = run_scenario(ctx, sc, trial_id, trial_seed, detail);
    rec.timing.scenario_ms += sample_ms;
    return rec;
}

struct EcdfSummary
{
    std::vector<double> sorted;
    std::vector<double> thresholds;
    std::vector<double> fractions;

    // Right-continuous step function: fraction of samples <= t.
    double at(double t) const
    {
        return static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), t) - sorted.begin()) /
               static_cast<double>(sorted.size());
    }
};

inline EcdfSummary ecdf(std::vector<double> samples, const std::vector<double> &thresholds)
{
    if (samples.empty())
        throw std::invalid_argument("ecdf: empty sample set.");
    std::sort(samples.begin(), samples.end());
    EcdfSummary s{std::move(samples), thresholds, {}};
    for (double t : thresholds)
        s.fractions.push_back(s.at(t));
    return s;
}

struct MethodSummary
{
    Method method = Method::gmp;
    double mean_rate = 0.0;
    double stderr_rate = 0.0;
    std::vector<double> errors_deg; // pooled over trials, subarrays and sounded antennas
};

struct BatchSummary
{
    int M = 0;
    std::size_t n_trials = 0;
    std::size_t n_failed = 0;
    double perfect_mean_rate = 0.0;
    double perfect_stderr = 0.0;
    std::vector<MethodSummary> methods;
    std::vector<std::string> failures;

    const MethodSummary &method(Method m) const
    {
        for (const auto &s : methods)
            if (s.method == m)
                return s;
        throw std::out_of_range("BatchSummary: method not run.");
    }
};

struct BatchResult
{
    std::vector<TrialRecord> records;
    BatchSummary summary;
};

namespace detail {

inline std::pair<double, double> mean_stderr(const std::vector<double> &x)
{
    if (x.empty())
        return {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
    double s = 0.0;
    for (double v : x)
        s += v;
    const double mean = s / static_cast<double>(x.size());
    if (x.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double v : x)
        ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(x.size() - 1) / static_cast<double>(x.size()))};
}

} // namespace detail

/// Aggregates in trial order, so the result does not depend on how trials were scheduled.
inline BatchSummary summarize(const Config &cfg, const std::vector<TrialRecord> &records)
{
    BatchSummary s;
    s.M = cfg.M;
    s.n_trials = records.size();
    std::vector<double> perfect;
    std::vector<std::vector<double>> rates(cfg.methods.size());
    s.methods.resize(cfg.methods.size());
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        s.methods[i].method = cfg.methods[i];
    for (const auto &r : records)
    {
        if (r.failed)
        {
            ++s.n_failed;
            s.failures.push_back("trial " + std::to_string(r.trial_id) + ": " + r.failure);
            continue;
        }
        perfect.push_back(r.perfect_rate);
        for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        {
            const auto &mr = r.result(cfg.methods[i]);
            rates[i].push_back(mr.rate);
            auto &pool = s.methods[i].errors_deg;
            pool.insert(pool.end(), mr.errors_deg.begin(), mr.errors_deg.end());
        }
    }
    std::tie(s.perfect_mean_rate, s.perfect_stderr) = detail::mean_stderr(perfect);
    for (std::size_t i = 0; i < cfg.methods.size(); ++i)
        std::tie(s.methods[i].mean_rate, s.methods[i].stderr_rate) = detail::mean_stderr(rates[i]);
    return s;
}

inline std::uint64_t trial_seed(std::uint64_t master_seed, std::size_t trial_id)
{
    return derive_seed(master_seed, static_cast<std::uint64_t>(trial_id));
}

/// Runs `n_trials` independent trials on `parallelism` threads.
inline BatchResult run_batch(const ExperimentContext &ctx, std::size_t n_trials, int parallelism)
{
    if (n_trials < 1)
        throw std::invalid_argument("run_batch: need at least one trial.");
    BatchResult out;
    out.records.resize(n_trials);
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr err;
    auto worker = [&] {
        for (std::size_t i = next++; i < n_trials; i = next++)
        {
            try
            {
                out.records[i] = run_trial(ctx, i, trial_seed(ctx.cfg.master_seed, i));
            }
            catch (...)
            {
                std::lock_guard lock(err_mu);
                if (!err)
                    err = std::current_exception();
            }
        }
    };
    const auto n_threads = static_cast<std::size_t>(std::max(1, parallelism));
    if (n_threads == 1)
        worker();
    else
    {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < std::min(n_threads, n_trials); ++t)
            pool.emplace_back(worker);
    }
    if (err)
        std::rethrow_exception(err);
    out.summary = summarize(ctx.cfg, out.records);
    return out;
}

// ---- CSV output ---------------------------------------------------------

inline std::string csv_real(double v)
{
    if (std::isnan(v))
        return "nan";
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return format_real(v);
}

/// trials.csv columns: trial_id, seed, r_m, rx_heading_rad, tx_heading_rad, status, perfect_rate,
/// then per method <m>_rate, <m>_tx_sep_m and <m>_err_deg_tx<l>_sub<k>, then timing_<stage>_ms.
inline void write_trials_csv(const std::filesystem::path &path, const Config &cfg, const std::vector<TrialRecord> &records)
{
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    const auto sounded = sounded_antennas(cfg.n_tx);
    f << "trial_id,seed,r_m,rx_heading_rad,tx_heading_rad,status,perfect_rate";
    for (Method m : cfg.methods)
    {
        f << "," << to_string(m) << "_rate," << to_string(m) << "_tx_sep_m";
        for (int l : sounded)
            for (int k = 0; k < cfg.n_rf; ++k)
                f << "," << to_string(m) << "_err_deg_tx" << l << "_sub" << k;
    }
    f << ",timing_scenario_ms,timing_sounding_ms,timing_likelihood_ms,timing_ml_ms,timing_gmp_ms,timing_exhaustive_ms,"
         "timing_reconstruction_ms\n";
    const std::size_t n_err = sounded.size() * static_cast<std::size_t>(cfg.n_rf);
    for (const auto &r : records)
    {
        f << r.trial_id << "," << r.seed << "," << csv_real(r.r) << "," << csv_real(r.rx_heading) << ","
          << csv_real(r.tx_heading) << "," << (r.failed ? "failed" : "ok") << "," << csv_real(r.perfect_rate);
        for (Method m : cfg.methods)
        {
            const MethodResult *mr = nullptr;
            for (const auto &x : r.methods)
                if (x.method == m)
                    mr = &x;
            const double nan = std::numeric_limits<double>::quiet_NaN();
            f << "," << csv_real(mr ? mr->rate : nan) << "," << csv_real(mr ? mr->tx_separation : nan);
            for (std::size_t i = 0; i < n_err; ++i)
                f << "," << csv_real(mr ? mr->errors_deg[i] : nan);
        }
        const auto &t = r.timing;
        f << "," << csv_real(t.scenario_ms) << "," << csv_real(t.sounding_ms) << "," << csv_real(t.likelihood_ms) << ","
          << csv_real(t.ml_ms) << "," << csv_real(t.gmp_ms) << "," << csv_real(t.exhaustive_ms) << ","
          << csv_real(t.reconstruction_ms) << "\n";
    }
}

/// ecdf_<method>.csv: one row per distinct error value, the ECDF right after the step.
inline void write_ecdf_csv(const std::filesystem::path &path, const std::vector<double> &errors_deg)
{
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    f << "error_deg,fraction\n";
    if (errors_deg.empty())
        return;
    auto sorted = errors_deg;
    std::sort(sorted.begin(), sorted.end());
    const double n = static_cast<double>(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i)
        if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i])
            f << csv_real(sorted[i]) << "," << csv_real(static_cast<double>(i + 1) / n) << "\n";
}

inline void write_rates_csv(const std::filesystem::path &path, const std::vector<BatchSummary> &sweep)
{
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    f << "M,method,mean_rate,stderr\n";
    for (const auto &s : sweep)
        for (const auto &m : s.methods)
            f << s.M << "," << to_string(m.method) << "," << csv_real(m.mean_rate) << "," << csv_real(m.stderr_rate)
              << "\n";
}

/// summary.csv: per M, trial counts and the perfect-CSI reference rate.
inline void write_summary_csv(const std::filesystem::path &path, const std::vector<BatchSummary> &sweep)
{
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    f << "M,n_trials,n_failed,perfect_mean_rate,perfect_stderr\n";
    for (const auto &s : sweep)
        f << s.M << "," << s.n_trials << "," << s.n_failed << "," << csv_real(s.perfect_mean_rate) << ","
          << csv_real(s.perfect_stderr) << "\n";
}

inline void write_belief_dumps(const std::filesystem::path &dir, const AngularGrid &grid, const TrialRecord &rec,
                               const TrialDetail &d)
{
    std::filesystem::create_directories(dir);
    for (std::size_t gi = 0; gi < d.likelihoods.size(); ++gi)
    {
        for (std::size_t k = 0; k < d.likelihoods[gi].size(); ++k)
        {
            const auto path = dir / ("beliefs_sub" + std::to_string(k) + "_tx" + std::to_string(rec.sounded_tx[gi]) + ".csv");
            std::ofstream f(path);
            if (!f)
                throw std::runtime_error("cannot write '" + path.string() + "'");
            f << "angle_rad,likelihood,fwd_in,bwd_in,posterior\n";
            const auto lik = d.likelihoods[gi][k].mass();
            const bool have_gmp = gi < d.gmp.size();
            const auto fwd = have_gmp ? d.gmp[gi].fwd_in[k].mass() : std::vector<double>(grid.size(), 0.0);
            const auto bwd = have_gmp ? d.gmp[gi].bwd_in[k].mass() : std::vector<double>(grid.size(), 0.0);
            const auto post = have_gmp ? d.gmp[gi].estimates[k].posterior.mass() : std::vector<double>(grid.size(), 0.0);
            for (std::size_t i = 0; i < grid.size(); ++i)
                f << csv_real(grid[i]) << "," << csv_real(lik[i]) << "," << csv_real(fwd[i]) << "," << csv_real(bwd[i])
                  << "," << csv_real(post[i]) << "\n";
        }
    }
}

inline void write_manifest(const std::filesystem::path &path, const Config &cfg)
{
    std::ofstream f(path);
    if (!f)
        throw std::runtime_error("cannot write '" + path.string() + "'");
    f << to_json(cfg).dump(2) << "\n";
}

/// Full experiment: one batch per M in `sweep` (config M if empty), CSVs and manifest written to `out`.
inline std::vector<BatchResult> simulate_to_directory(const Config &cfg, const GeometryFactors &factors,
                                                      const std::vector<int> &sweep, const std::filesystem::path &out)
{
    std::filesystem::create_directories(out);
    const std::vector<int> ms = sweep.empty() ? std::vector<int>{cfg.M} : sweep;
    std::vector<BatchResult> results;
    std::vector<BatchSummary> summaries;
    for (int m : ms)
    {
        Config c = cfg;
        c.M = m;
        const ExperimentContext ctx(c, factors);
        results.push_back(run_batch(ctx, static_cast<std::size_t>(c.n_trials), c.parallelism));
        summaries.push_back(results.back().summary);
    }
    // Trial-level files describe the configured M (or the first sweep value when it is absent).
    std::size_t primary = 0;
    for (std::size_t i = 0; i < ms.size(); ++i)
        if (ms[i] == cfg.M)
            primary = i;
    Config pc = cfg;
    pc.M = ms[primary];
    write_trials_csv(out / "trials.csv", pc, results[primary].records);
    for (const auto &m : results[primary].summary.methods)
        write_ecdf_csv(out / ("ecdf_" + to_string(m.method) + ".csv"), m.errors_deg);
    write_rates_csv(out / "rates_vs_M.csv", summaries);
    write_summary_csv(out / "summary.csv", summaries);
    write_manifest(out / "manifest.json", cfg);
    return results;
}

} // namespace gmpchan
