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

#include "common.hpp"
#include "geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

namespace gmpchan {

/// Uniform grid over (-pi/2, pi/2) with step kappa*pi; G = ceil(1/kappa) - 1 points, endpoints excluded.
class AngularGrid
{
  public:
    explicit AngularGrid(double kappa) : kappa_(kappa)
    {
        if (!(kappa > 0.0) || !(kappa < 0.5))
            throw std::invalid_argument("AngularGrid: kappa must lie in (0, 0.5).");
        const double inv = 1.0 / kappa;
        const double n_round = std::round(inv);
        const bool integral = std::abs(inv - n_round) < 1e-9 * inv;
        const auto g = static_cast<std::size_t>((integral ? n_round : std::ceil(inv)) - 1.0);
        points_.resize(g);
        for (std::size_t i = 0; i < g; ++i)
        {
            // Integral 1/kappa: symmetric grid with 0 exactly on it when 1/kappa is even.
            points_[i] = integral ? (2.0 * static_cast<double>(i + 1) - n_round) * pi / (2.0 * n_round)
                                  : -0.5 * pi + static_cast<double>(i + 1) * kappa * pi;
        }
    }

    double kappa() const { return kappa_; }
    double step() const { return kappa_ * pi; }
    std::size_t size() const { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    const std::vector<double> &points() const { return points_; }

    std::size_t nearest_index(double theta) const
    {
        const double x = std::round((theta - points_.front()) / step());
        if (x <= 0.0)
            return 0;
        return std::min(static_cast<std::size_t>(x), points_.size() - 1);
    }

  private:
    double kappa_;
    std::vector<double> points_;
};

enum class BeliefKind
{
    likelihood,
    fwd_in,
    bwd_in,
    posterior
};

/// Scaled distribution over grid points, stored as log-mass normalized to sum 1.
struct Belief
{
    BeliefKind kind = BeliefKind::likelihood;
    std::vector<double> log_mass;

    std::size_t size() const { return log_mass.size(); }

    static Belief uniform(std::size_t g, BeliefKind kind)
    {
        return {kind, std::vector<double>(g, -std::log(static_cast<double>(g)))};
    }

    // Subtracts log-sum-exp. Throws if every entry is -inf (no mass anywhere).
    void normalize()
    {
        const double mx = *std::max_element(log_mass.begin(), log_mass.end());
        if (!std::isfinite(mx))
            throw InferenceError("Belief: all-zero mass.");
        double s = 0.0;
        for (double v : log_mass)
            s += std::exp(v - mx);
        const double lse = mx + std::log(s);
        for (double &v : log_mass)
            v -= lse;
    }

    std::vector<double> mass() const
    {
        std::vector<double> p(log_mass.size());
        std::transform(log_mass.begin(), log_mass.end(), p.begin(), [](double v) { return std::exp(v); });
        return p;
    }

    // Lowest index wins ties.
    std::size_t argmax() const
    {
        return static_cast<std::size_t>(std::max_element(log_mass.begin(), log_mass.end()) - log_mass.begin());
    }
};

// Likelihood entries never drop below this fraction of the peak.
inline const double log_likelihood_floor = std::log(1e-300);

/// Columns are a_N(theta) for every grid point.
inline CMat steering_matrix(const AngularGrid &grid, int n)
{
    CMat s(n, static_cast<Eigen::Index>(grid.size()));
    for (std::size_t g = 0; g < grid.size(); ++g)
        s.col(static_cast<Eigen::Index>(g)) = steering_vector(grid[g], n);
    return s;
}

inline Belief belief_from_log(std::vector<double> ll, BeliefKind kind = BeliefKind::likelihood)
{
    const double mx = *std::max_element(ll.begin(), ll.end());
    if (!std::isfinite(mx))
        throw InferenceError("likelihood: non-finite log-likelihood.");
    for (double &v : ll)
        v = std::max(v - mx, log_likelihood_floor);
    Belief b{kind, std::move(ll)};
    b.normalize();
    return b;
}

/// p(theta) = exp(-|alpha|^2 ||y~ - A a_N(theta)||^2 / sigma^2) over the grid.
inline Belief likelihood(const CVec &compensated, const CMat &compression, cplx alpha, double noise_var,
                         const CMat &steering)
{
    if (!(noise_var > 0.0))
        throw std::invalid_argument("likelihood: noise variance must be positive.");
    if (compression.rows() != compensated.size() || compression.cols() != steering.rows())
        throw std::invalid_argument("likelihood: dimension mismatch.");
    const CMat proj = compression * steering;
    const double scale = std::norm(alpha) / noise_var;
    std::vector<double> ll(static_cast<std::size_t>(steering.cols()));
    for (Eigen::Index g = 0; g < steering.cols(); ++g)
        ll[static_cast<std::size_t>(g)] = -scale * (compensated - proj.col(g)).squaredNorm();
    return belief_from_log(std::move(ll));
}

inline Belief likelihood(const CVec &compensated, const CMat &compression, cplx alpha, double noise_var,
                         const AngularGrid &grid)
{
    return likelihood(compensated, compression, alpha, noise_var,
                      steering_matrix(grid, static_cast<int>(compression.cols())));
}

/// Likelihood with the complex gain profiled out, log p = |b^H y|^2 / (sigma^2 ||b||^2), b = A a_N(theta).
/// Used by the exhaustive DFT scan, whose codebook carries no gain probe.
inline Belief beamscan_likelihood(const CVec &y, const CMat &compression, double noise_var, const CMat &steering)
{
    if (!(noise_var > 0.0))
        throw std::invalid_argument("beamscan_likelihood: noise variance must be positive.");
    const CMat proj = compression * steering;
    std::vector<double> ll(static_cast<std::size_t>(steering.cols()));
    for (Eigen::Index g = 0; g < steering.cols(); ++g)
    {
        const double nb = proj.col(g).squaredNorm();
        ll[static_cast<std::size_t>(g)] = nb > 0.0 ? std::norm(proj.col(g).dot(y)) / (noise_var * nb) : 0.0;
    }
    return belief_from_log(std::move(ll));
}

/// Local AoA at the next subarray given the AoA at the previous one and the TX distance r1 from the
/// RX array midpoint. `s_prev`, `s_next` are signed subarray offsets along the RX axis.
inline double geometry_map(double theta_prev, double r1, double s_prev, double s_next)
{
    const double st = std::sin(theta_prev), ct = std::cos(theta_prev);
    const double disc = r1 * r1 - s_prev * s_prev * ct * ct;
    if (!(disc > 0.0))
        throw GeometryError("geometry_map: non-positive discriminant.");
    const double r11 = -s_prev * st + std::sqrt(disc);
    if (!(r11 > 0.0))
        throw GeometryError("geometry_map: TX inside the array span.");
    return std::atan((s_prev - s_next + r11 * st) / (r11 * ct));
}

enum class Direction
{
    forward,
    backward
};

inline const char *to_string(Direction d) { return d == Direction::forward ? "forward" : "backward"; }

struct FactorTableParams
{
    double r_min = 0.4;
    double r_max = 0.8;
    double l_tx = 0.0399;
    std::vector<double> offsets;
    int n_r_samples = 40000;
    double smoothing = 1e-6;

    bool operator==(const FactorTableParams &) const = default;
};

/// Discretized g(theta_to | theta_from) for one adjacent subarray pair, row-major G x G,
/// row = conditioning angle, column = conditioned angle.
struct GeometryFactorTable
{
    int from = 0;
    int to = 1;
    Direction direction = Direction::forward;
    double kappa = 0.0;
    FactorTableParams params;
    std::size_t grid_size = 0;
    std::vector<double> table;
    std::vector<std::size_t> impossible_rows;

    std::span<const double> row(std::size_t i) const { return {table.data() + i * grid_size, grid_size}; }
    double operator()(std::size_t i, std::size_t j) const { return table[i * grid_size + j]; }
};

/// Pushes midpoint-rule samples of r1 ~ U[r_min - L_tx/2, r_max + L_tx/2] through geometry_map,
/// bins to the nearest grid point, adds `smoothing` per cell and row-normalizes.
/// For `forward`, pair (from, to) = (p, p+1); for `backward`, (p+1, p).
inline GeometryFactorTable build_factor_table(const AngularGrid &grid, int pair, Direction direction,
                                              const FactorTableParams &params)
{
    if (params.n_r_samples < 2)
        throw std::invalid_argument("build_factor_table: need at least two r samples.");
    if (pair < 0 || pair + 1 >= static_cast<int>(params.offsets.size()))
        throw std::out_of_range("build_factor_table: pair index out of range.");
    if (params.smoothing < 0.0)
        throw std::invalid_argument("build_factor_table: negative smoothing.");

    GeometryFactorTable t;
    t.direction = direction;
    t.from = direction == Direction::forward ? pair : pair + 1;
    t.to = direction == Direction::forward ? pair + 1 : pair;
    t.kappa = grid.kappa();
    t.params = params;
    t.grid_size = grid.size();
    const std::size_t g = grid.size();
    t.table.assign(g * g, 0.0);

    const double s_from = params.offsets[static_cast<std::size_t>(t.from)];
    const double s_to = params.offsets[static_cast<std::size_t>(t.to)];
    const double r_lo = params.r_min - 0.5 * params.l_tx;
    const double r_hi = params.r_max + 0.5 * params.l_tx;
    const int n = params.n_r_samples;
    const double dr = (r_hi - r_lo) / n;
    const double theta0 = grid[0];
    const double inv_step = 1.0 / grid.step();

    std::vector<double> r1(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        r1[static_cast<std::size_t>(i)] = r_lo + (i + 0.5) * dr;

    for (std::size_t i = 0; i < g; ++i)
    {
        double *row = t.table.data() + i * g;
        const double st = std::sin(grid[i]), ct = std::cos(grid[i]);
        const double c2 = s_from * s_from * ct * ct;
        std::size_t hits = 0;
        for (double r : r1)
        {
            const double disc = r * r - c2;
            if (!(disc > 0.0))
                continue;
            const double r11 = -s_from * st + std::sqrt(disc);
            if (!(r11 > 0.0))
                continue;
            const double th = std::atan((s_from - s_to + r11 * st) / (r11 * ct));
            const double x = std::round((th - theta0) * inv_step);
            const std::size_t bin = x <= 0.0 ? 0 : std::min(static_cast<std::size_t>(x), g - 1);
            row[bin] += 1.0;
            ++hits;
        }
        if (hits == 0)
        {
            t.impossible_rows.push_back(i);
            continue;
        }
        const double inv_hits = 1.0 / static_cast<double>(hits);
        double sum = 0.0;
        for (std::size_t j = 0; j < g; ++j)
        {
            row[j] = row[j] * inv_hits + params.smoothing;
            sum += row[j];
        }
        const double inv_sum = 1.0 / sum;
        for (std::size_t j = 0; j < g; ++j)
            row[j] *= inv_sum;
    }
    return t;
}

/// Forward and backward tables for every adjacent pair of the chain.
struct GeometryFactors
{
    std::vector<GeometryFactorTable> forward;  // pair p: theta_p -> theta_{p+1}
    std::vector<GeometryFactorTable> backward; // pair p: theta_{p+1} -> theta_p
};

inline GeometryFactors build_geometry_factors(const AngularGrid &grid, const FactorTableParams &params)
{
    GeometryFactors f;
    const int pairs = static_cast<int>(params.offsets.size()) - 1;
    for (int p = 0; p < pairs; ++p)
    {
        f.forward.push_back(build_factor_table(grid, p, Direction::forward, params));
        f.backward.push_back(build_factor_table(grid, p, Direction::backward, params));
    }
    return f;
}

/// Message through a factor: log sum_i exp(log_out_i) T(i, j), with max-subtraction.
inline Belief propagate(const Belief &out, const GeometryFactorTable &t, BeliefKind kind)
{
    const std::size_t g = t.grid_size;
    if (out.size() != g)
        throw std::invalid_argument("propagate: belief and table sizes differ.");
    const double mx = *std::max_element(out.log_mass.begin(), out.log_mass.end());
    if (!std::isfinite(mx))
        throw InferenceError("propagate: all-zero outgoing message.");

    std::vector<double> acc(g, 0.0);
    for (std::size_t i = 0; i < g; ++i)
    {
        const double w = std::exp(out.log_mass[i] - mx);
        const double *row = t.table.data() + i * g;
        for (std::size_t j = 0; j < g; ++j)
            acc[j] += w * row[j];
    }
    Belief in{kind, std::vector<double>(g)};
    for (std::size_t j = 0; j < g; ++j)
        in.log_mass[j] = acc[j] > 0.0 ? std::log(acc[j]) : -std::numeric_limits<double>::infinity();
    try
    {
        in.normalize();
    }
    catch (const InferenceError &)
    {
        throw InferenceError("propagate: message collapsed to all-zero mass (pair " + std::to_string(t.from) + "->" +
                             std::to_string(t.to) + ").");
    }
    return in;
}

inline Belief product(const Belief &a, const Belief &b, BeliefKind kind)
{
    Belief c{kind, std::vector<double>(a.size())};
    for (std::size_t i = 0; i < a.size(); ++i)
        c.log_mass[i] = a.log_mass[i] + b.log_mass[i];
    c.normalize();
    return c;
}

/// P_fwd_in for every node; node 0 receives the uniform prior.
inline std::vector<Belief> forward_pass(std::span<const Belief> likelihoods, std::span<const GeometryFactorTable> tables)
{
    if (likelihoods.empty() || tables.size() + 1 != likelihoods.size())
        throw std::invalid_argument("forward_pass: need N_RF likelihoods and N_RF - 1 tables.");
    const std::size_t g = likelihoods.front().size();
    std::vector<Belief> in;
    in.reserve(likelihoods.size());
    in.push_back(Belief::uniform(g, BeliefKind::fwd_in));
    for (std::size_t k = 1; k < likelihoods.size(); ++k)
    {
        const Belief out = product(likelihoods[k - 1], in.back(), BeliefKind::fwd_in);
        in.push_back(propagate(out, tables[k - 1], BeliefKind::fwd_in));
    }
    return in;
}

/// P_bwd_in for every node; the last node receives the uniform prior.
/// tables[p] conditions theta_{p+1} and bins theta_p.
inline std::vector<Belief> backward_pass(std::span<const Belief> likelihoods, std::span<const GeometryFactorTable> tables)
{
    if (likelihoods.empty() || tables.size() + 1 != likelihoods.size())
        throw std::invalid_argument("backward_pass: need N_RF likelihoods and N_RF - 1 tables.");
    const std::size_t n = likelihoods.size();
    const std::size_t g = likelihoods.front().size();
    std::vector<Belief> in(n);
    in[n - 1] = Belief::uniform(g, BeliefKind::bwd_in);
    for (std::size_t k = n - 1; k > 0; --k)
    {
        const Belief out = product(likelihoods[k], in[k], BeliefKind::bwd_in);
        in[k - 1] = propagate(out, tables[k - 1], BeliefKind::bwd_in);
    }
    return in;
}

struct NodeEstimate
{
    Belief posterior;
    std::size_t index = 0;
};

/// p_gmp = p * P_fwd_in * P_bwd_in per node, argmax with lowest-index tie-break.
inline std::vector<NodeEstimate> combine_and_estimate(std::span<const Belief> likelihoods, std::span<const Belief> fwd_in,
                                                      std::span<const Belief> bwd_in)
{
    if (fwd_in.size() != likelihoods.size() || bwd_in.size() != likelihoods.size())
        throw std::invalid_argument("combine_and_estimate: belief counts differ.");
    std::vector<NodeEstimate> est;
    for (std::size_t k = 0; k < likelihoods.size(); ++k)
    {
        if (fwd_in[k].size() != likelihoods[k].size() || bwd_in[k].size() != likelihoods[k].size())
            throw std::invalid_argument("combine_and_estimate: beliefs live on different grids.");
        Belief post{BeliefKind::posterior, std::vector<double>(likelihoods[k].size())};
        for (std::size_t i = 0; i < post.size(); ++i)
            post.log_mass[i] = likelihoods[k].log_mass[i] + fwd_in[k].log_mass[i] + bwd_in[k].log_mass[i];
        try
        {
            post.normalize();
        }
        catch (const InferenceError &)
        {
            throw InferenceError("combine_and_estimate: contradictory evidence at subarray " + std::to_string(k) + ".");
        }
        const std::size_t idx = post.argmax();
        est.push_back({std::move(post), idx});
    }
    return est;
}

/// Independent per-subarray argmax.
inline std::vector<std::size_t> ml_estimate(std::span<const Belief> likelihoods)
{
    std::vector<std::size_t> idx;
    for (const auto &b : likelihoods)
        idx.push_back(b.argmax());
    return idx;
}

struct GmpResult
{
    std::vector<Belief> fwd_in;
    std::vector<Belief> bwd_in;
    std::vector<NodeEstimate> estimates;
};

inline GmpResult run_gmp(std::span<const Belief> likelihoods, const GeometryFactors &factors)
{
    GmpResult r;
    r.fwd_in = forward_pass(likelihoods, factors.forward);
    r.bwd_in = backward_pass(likelihoods, factors.backward);
    r.estimates = combine_and_estimate(likelihoods, r.fwd_in, r.bwd_in);
    return r;
}

} // namespace gmpchan
