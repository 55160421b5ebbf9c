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
#include <functional>
#include <string>
#include <vector>

namespace gmpchan {

inline Mat2 rotation(double delta)
{
    const double c = std::cos(delta), s = std::sin(delta);
    Mat2 r;
    r << c, -s, s, c;
    return r;
}

/// Ray from a subarray midpoint towards a TX antenna.
struct Bearing
{
    Vec2 origin;
    Vec2 direction; // unit norm
};

using BearingSet = std::vector<Bearing>;

/// Direction for local AoA theta: the RX axis rotated anti-clockwise by pi/2 - theta.
inline Vec2 bearing_direction(const Pose &rx_pose, double theta)
{
    return rotation(0.5 * pi - theta) * rx_pose.axis();
}

/// Bearings for every subarray with `usable[k]` set (all if `usable` is empty).
inline BearingSet make_bearings(const Pose &rx_pose, const std::vector<Vec2> &midpoints, const std::vector<double> &thetas,
                                const std::vector<bool> &usable = {})
{
    BearingSet b;
    for (std::size_t k = 0; k < midpoints.size(); ++k)
        if (usable.empty() || usable[k])
            b.push_back({midpoints[k], bearing_direction(rx_pose, thetas[k])});
    return b;
}

struct Triangulation
{
    Vec2 position = Vec2::Zero();
    double residual = 0.0; // RMS perpendicular distance to the rays, meters
};

/// Least-squares point minimizing the summed squared perpendicular distance to every bearing line.
inline Triangulation triangulate(const BearingSet &bearings)
{
    if (bearings.size() < 2)
        throw GeometryError("triangulate: need at least two bearings.");
    Mat2 a = Mat2::Zero();
    Vec2 b = Vec2::Zero();
    for (const auto &br : bearings)
    {
        const Mat2 p = Mat2::Identity() - br.direction * br.direction.transpose();
        a += p;
        b += p * br.origin;
    }
    // Eigenvalues of the 2x2 normal matrix; the smaller one vanishes when all rays are parallel.
    const double tr = a.trace();
    const double det = a.determinant();
    if (!(det > 1e-12 * tr * tr))
        throw GeometryError("triangulate: bearings are (nearly) parallel; " + std::to_string(bearings.size()) +
                            " rays give a rank-deficient system.");
    Triangulation t;
    t.position = a.ldlt().solve(b);
    double ss = 0.0;
    for (const auto &br : bearings)
    {
        const Vec2 d = t.position - br.origin;
        const double along = d.dot(br.direction);
        ss += (d - along * br.direction).squaredNorm();
    }
    t.residual = std::sqrt(ss / static_cast<double>(bearings.size()));
    return t;
}

/// q1 = s1 + r11 R(pi/2 - theta1) s, with s the unit vector along the RX array.
inline Vec2 position_from_bearing(const Vec2 &s1, double r11, double theta1, const Vec2 &s_unit)
{
    return s1 + r11 * (rotation(0.5 * pi - theta1) * s_unit);
}

struct TxEndpoints
{
    Vec2 first = Vec2::Zero();
    Vec2 last = Vec2::Zero();
    double residual_first = 0.0;
    double residual_last = 0.0;

    double separation() const { return (last - first).norm(); }
};

inline TxEndpoints tx_endpoints(const BearingSet &first, const BearingSet &last)
{
    const auto a = triangulate(first);
    const auto b = triangulate(last);
    return {a.position, b.position, a.residual, b.residual};
}

/// Places the TX antennas uniformly between the endpoints (the nominal spacing rescaled to the estimated
/// separation) and evaluates the LoS kernel against the known RX antennas.
inline CMat rebuild_channel(const TxEndpoints &ends, const ArrayLayout &layout, const std::vector<Vec2> &rx_antennas)
{
    std::vector<Vec2> tx;
    if (layout.n_tx == 1)
        tx.push_back(ends.first);
    else
    {
        if (!(ends.separation() > 0.0))
            throw GeometryError("rebuild_channel: coincident TX endpoints.");
        for (int j = 0; j < layout.n_tx; ++j)
        {
            const double f = static_cast<double>(j) / (layout.n_tx - 1);
            tx.push_back(ends.first + f * (ends.last - ends.first));
        }
    }
    return los_channel(rx_antennas, tx, layout.wavelength);
}

/// Water-filling over parallel channels with power gains `gains` (noise power 1), total power `power`.
inline std::vector<double> water_filling(std::vector<double> gains, double power)
{
    std::vector<std::size_t> order(gains.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });

    std::vector<double> alloc(gains.size(), 0.0);
    std::size_t active = 0;
    double level = 0.0;
    double inv_sum = 0.0;
    for (std::size_t n = 0; n < order.size(); ++n)
    {
        const double g = gains[order[n]];
        if (!(g > 0.0))
            break;
        const double cand_inv = inv_sum + 1.0 / g;
        const double cand_level = (power + cand_inv) / static_cast<double>(n + 1);
        if (cand_level <= 1.0 / g)
            break;
        inv_sum = cand_inv;
        level = cand_level;
        active = n + 1;
    }
    for (std::size_t n = 0; n < active; ++n)
        alloc[order[n]] = level - 1.0 / gains[order[n]];
    return alloc;
}

inline double capacity(const Eigen::VectorXd &singular_values, double power)
{
    std::vector<double> gains(static_cast<std::size_t>(singular_values.size()));
    for (Eigen::Index i = 0; i < singular_values.size(); ++i)
        gains[static_cast<std::size_t>(i)] = singular_values[i] * singular_values[i];
    const auto p = water_filling(gains, power);
    double c = 0.0;
    for (std::size_t i = 0; i < gains.size(); ++i)
        c += std::log2(1.0 + p[i] * gains[i]);
    return c;
}

struct RatePoint
{
    double rate = 0.0; // bits/s/Hz
    double snr_db = 0.0;
    std::string method;
};

/// Total transmit power (unit noise) such that P * mean |H(i,j)|^2 equals the linear SNR.
inline double transmit_power(const CMat &h, double snr_db)
{
    const double mean_gain = h.cwiseAbs2().mean();
    if (!(mean_gain > 0.0))
        throw std::invalid_argument("transmit_power: zero channel.");
    return std::pow(10.0, snr_db / 10.0) / mean_gain;
}

/// Rate of the true channel when precoding/combining with the leading `n_streams` singular vectors of the
/// estimate: water-filled capacity of U~^H H V~.
inline RatePoint achievable_rate(const CMat &h, const CMat &h_est, double snr_db, int n_streams, std::string method = {})
{
    if (h.rows() != h_est.rows() || h.cols() != h_est.cols())
        throw std::invalid_argument("achievable_rate: dimension mismatch.");
    const auto rank_max = std::min(h.rows(), h.cols());
    if (n_streams < 1 || n_streams > rank_max)
        throw std::invalid_argument("achievable_rate: n_streams out of range.");
    Eigen::JacobiSVD<CMat> svd(h_est, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const CMat u = svd.matrixU().leftCols(n_streams);
    const CMat v = svd.matrixV().leftCols(n_streams);
    const CMat eff = u.adjoint() * h * v;
    const Eigen::VectorXd sv = Eigen::JacobiSVD<CMat>(eff).singularValues();
    return {capacity(sv, transmit_power(h, snr_db)), snr_db, std::move(method)};
}

} // namespace gmpchan
