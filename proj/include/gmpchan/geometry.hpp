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

#include <cmath>
#include <random>
#include <vector>

namespace gmpchan {

/// RX/TX array description.
///
/// The RX array is N_RF collinear half-wavelength subarrays of N elements each, with midpoints spaced by
/// `rx_sub_pitch`. The TX array is a fully digital ULA of `n_tx` elements spaced by `tx_spacing`.
struct ArrayLayout
{
    int n_rf = 4;
    int n_per_sub = 16;
    double wavelength = 5e-3;
    double rx_elem_spacing = 2.5e-3;
    double rx_sub_pitch = 4.75e-2;
    int n_tx = 4;
    double tx_spacing = 1.33e-2;

    int n_rx() const { return n_rf * n_per_sub; }

    double rx_length() const { return (n_rf - 1) * rx_sub_pitch + (n_per_sub - 1) * rx_elem_spacing; }
    double tx_length() const { return (n_tx - 1) * tx_spacing; }

    // Signed midpoint offsets along the RX axis, first subarray at the positive end.
    std::vector<double> subarray_offsets() const
    {
        std::vector<double> s(static_cast<std::size_t>(n_rf));
        for (int k = 0; k < n_rf; ++k)
            s[k] = (0.5 * (n_rf - 1) - k) * rx_sub_pitch;
        return s;
    }

    void validate() const
    {
        if (n_rf < 1 || n_per_sub < 1 || n_tx < 1)
            throw std::invalid_argument("ArrayLayout: element counts must be positive.");
        if (!(wavelength > 0.0))
            throw std::invalid_argument("ArrayLayout: wavelength must be positive.");
        if (std::abs(rx_elem_spacing - 0.5 * wavelength) > 1e-12 * wavelength)
            throw std::invalid_argument("ArrayLayout: RX element spacing must be half a wavelength.");
        if (rx_sub_pitch < (n_per_sub - 1) * rx_elem_spacing - 1e-12)
            throw std::invalid_argument("ArrayLayout: subarrays overlap (pitch too small).");
        if (tx_spacing < 0.0)
            throw std::invalid_argument("ArrayLayout: negative TX spacing.");
    }

    static ArrayLayout with_wavelength(double wavelength)
    {
        ArrayLayout l;
        l.wavelength = wavelength;
        l.rx_elem_spacing = 0.5 * wavelength;
        return l;
    }
};

/// Planar placement of an array: midpoint and direction of the array axis.
struct Pose
{
    Vec2 center = Vec2::Zero();
    double heading = 0.0;

    Vec2 axis() const { return {std::cos(heading), std::sin(heading)}; }

    // Array normal; the axis rotated anti-clockwise by pi/2. Local AoAs are measured from it.
    Vec2 normal() const { return {-std::sin(heading), std::cos(heading)}; }
};

inline double wrap_angle(double a)
{
    a = std::fmod(a + pi, 2.0 * pi);
    if (a < 0.0)
        a += 2.0 * pi;
    a -= pi;
    return a >= pi ? -pi : a;
}

struct Scenario
{
    ArrayLayout layout;
    Pose tx_pose;
    Pose rx_pose;
    double r_min = 0.4;
    double r_max = 0.8;

    double distance() const { return (tx_pose.center - rx_pose.center).norm(); }

    void validate() const
    {
        layout.validate();
        if (!(r_min > 0.5 * layout.rx_length()))
            throw GeometryError("Scenario: r_min must exceed half the RX array length.");
        if (r_min > r_max)
            throw std::invalid_argument("Scenario: r_min > r_max.");
        const double r = distance();
        const double tol = 1e-12 * r_max;
        if (r < r_min - tol || r > r_max + tol)
            throw GeometryError("Scenario: TX-RX distance outside [r_min, r_max].");
    }
};

/// Rectangular room [0, width] x [0, depth]; arrays sit at `array_height` above the floor.
/// A non-positive `height` disables floor and ceiling reflections.
struct RoomSpec
{
    double width = 5.0;
    double depth = 5.0;
    double height = 3.0;
    double array_height = 1.5;

    bool contains(const Vec2 &p) const { return p.x() > 0.0 && p.x() < width && p.y() > 0.0 && p.y() < depth; }
    Vec2 center() const { return {0.5 * width, 0.5 * depth}; }
};

struct RxGeometry
{
    std::vector<Vec2> antennas;  // N_rx entries, subarray-major
    std::vector<Vec2> midpoints; // N_RF entries
    std::vector<double> offsets; // signed midpoint offsets along the RX axis
};

inline RxGeometry rx_antenna_positions(const Scenario &sc)
{
    const auto &l = sc.layout;
    const Vec2 u = sc.rx_pose.axis();
    RxGeometry g;
    g.offsets = l.subarray_offsets();
    g.antennas.reserve(static_cast<std::size_t>(l.n_rx()));
    for (int k = 0; k < l.n_rf; ++k)
    {
        const Vec2 mid = sc.rx_pose.center + g.offsets[k] * u;
        g.midpoints.push_back(mid);
        // Element index grows towards -axis, so a_N(theta) has positive theta towards +axis.
        for (int m = 0; m < l.n_per_sub; ++m)
            g.antennas.push_back(mid + (0.5 * (l.n_per_sub - 1) - m) * l.rx_elem_spacing * u);
    }
    return g;
}

inline std::vector<Vec2> tx_antenna_positions(const Scenario &sc)
{
    const auto &l = sc.layout;
    const Vec2 u = sc.tx_pose.axis();
    std::vector<Vec2> p;
    p.reserve(static_cast<std::size_t>(l.n_tx));
    for (int j = 0; j < l.n_tx; ++j)
        p.push_back(sc.tx_pose.center + (0.5 * (l.n_tx - 1) - j) * l.tx_spacing * u);
    return p;
}

/// Vandermonde response [1, e^{-j pi sin t}, ..., e^{-j (n-1) pi sin t}].
inline CVec steering_vector(double theta, int n)
{
    CVec a(n);
    const double ph = -pi * std::sin(theta);
    for (int m = 0; m < n; ++m)
        a[m] = std::polar(1.0, m * ph);
    return a;
}

/// Free-space LoS kernel lambda/(4 pi d) exp(-j 2 pi d / lambda).
inline cplx los_entry(double d, double wavelength)
{
    if (!(d > 0.0))
        throw GeometryError("los_entry: coincident antennas (zero distance).");
    // Reduce the phase modulo one wavelength first; d/lambda is large and std::polar loses digits otherwise.
    const double cycles = d / wavelength;
    const double frac = cycles - std::floor(cycles);
    return std::polar(wavelength / (4.0 * pi * d), -2.0 * pi * frac);
}

inline CMat los_channel(const std::vector<Vec2> &rx, const std::vector<Vec2> &tx, double wavelength)
{
    CMat h(static_cast<Eigen::Index>(rx.size()), static_cast<Eigen::Index>(tx.size()));
    for (std::size_t i = 0; i < rx.size(); ++i)
        for (std::size_t j = 0; j < tx.size(); ++j)
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = los_entry((rx[i] - tx[j]).norm(), wavelength);
    return h;
}

inline CMat los_channel(const Scenario &sc)
{
    return los_channel(rx_antenna_positions(sc).antennas, tx_antenna_positions(sc), sc.layout.wavelength);
}

/// LoS plus first-order image sources: four side walls and, if the room has a height, floor and ceiling.
/// Every reflected path is scaled by the scalar amplitude coefficient `reflect_coeff`.
inline CMat multipath_channel(const Scenario &sc, const RoomSpec &room, double reflect_coeff)
{
    if (reflect_coeff < 0.0 || reflect_coeff > 1.0)
        throw std::invalid_argument("multipath_channel: reflection coefficient must lie in [0, 1].");
    const auto rx = rx_antenna_positions(sc).antennas;
    const auto tx = tx_antenna_positions(sc);
    for (const auto &p : rx)
        if (!room.contains(p))
            throw GeometryError("multipath_channel: RX array outside the room.");
    for (const auto &p : tx)
        if (!room.contains(p))
            throw GeometryError("multipath_channel: TX array outside the room.");

    CMat h = los_channel(rx, tx, sc.layout.wavelength);
    if (reflect_coeff == 0.0)
        return h;

    const double lambda = sc.layout.wavelength;
    std::vector<double> vertical;
    if (room.height > 0.0)
        vertical = {2.0 * room.array_height, 2.0 * (room.height - room.array_height)};

    for (std::size_t j = 0; j < tx.size(); ++j)
    {
        const Vec2 &t = tx[j];
        const Vec2 images[4] = {{-t.x(), t.y()},
                                {2.0 * room.width - t.x(), t.y()},
                                {t.x(), -t.y()},
                                {t.x(), 2.0 * room.depth - t.y()}};
        for (std::size_t i = 0; i < rx.size(); ++i)
        {
            cplx acc = 0.0;
            for (const auto &img : images)
                acc += los_entry((rx[i] - img).norm(), lambda);
            const double planar = (rx[i] - t).norm();
            for (double dz : vertical)
                acc += los_entry(std::hypot(planar, dz), lambda);
            h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += reflect_coeff * acc;
        }
    }
    return h;
}

/// Signed angle between the RX normal and the ray from `origin` to `target`, positive towards +axis.
inline double local_aoa(const Pose &rx_pose, const Vec2 &origin, const Vec2 &target)
{
    const Vec2 d = target - origin;
    return std::atan2(d.dot(rx_pose.axis()), d.dot(rx_pose.normal()));
}

inline double true_local_aoa(const Scenario &sc, int k, int tx_index)
{
    const auto &l = sc.layout;
    if (k < 0 || k >= l.n_rf || tx_index < 0 || tx_index >= l.n_tx)
        throw std::out_of_range("true_local_aoa: index out of range.");
    const Vec2 mid = sc.rx_pose.center + l.subarray_offsets()[k] * sc.rx_pose.axis();
    return local_aoa(sc.rx_pose, mid, tx_antenna_positions(sc)[tx_index]);
}

inline constexpr double default_endfire_guard = deg2rad(5.0);

/// Draws a random placement: r uniform on [r_min, r_max], RX heading, TX bearing and TX heading uniform.
/// Placements where any (subarray, TX antenna) local AoA is within `guard` of endfire are redrawn.
inline Scenario sample_scenario(std::uint64_t seed, const ArrayLayout &layout, double r_min, double r_max,
                                const Vec2 &rx_center = Vec2::Zero(), double guard = default_endfire_guard,
                                int max_attempts = 10000)
{
    layout.validate();
    if (r_min > r_max)
        throw std::invalid_argument("sample_scenario: r_min must not exceed r_max.");
    if (!(r_min > 0.5 * layout.rx_length()))
        throw GeometryError("sample_scenario: r_min must exceed half the RX array length.");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(-pi, pi);
    std::uniform_real_distribution<double> dist(r_min, r_max > r_min ? r_max : std::nextafter(r_min, 2.0 * r_min));
    const double limit = 0.5 * pi - guard;

    Scenario sc;
    sc.layout = layout;
    sc.r_min = r_min;
    sc.r_max = r_max;
    for (int attempt = 0; attempt < max_attempts; ++attempt)
    {
        const double r = r_max > r_min ? dist(rng) : r_min;
        sc.rx_pose = {rx_center, angle(rng)};
        const double bearing = angle(rng);
        sc.tx_pose = {rx_center + r * Vec2(std::cos(bearing), std::sin(bearing)), angle(rng)};

        const auto rx = rx_antenna_positions(sc);
        const auto tx = tx_antenna_positions(sc);
        bool ok = true;
        for (const auto &mid : rx.midpoints)
            for (const auto &t : tx)
                ok = ok && std::abs(local_aoa(sc.rx_pose, mid, t)) < limit;
        if (ok)
            return sc;
    }
    throw std::runtime_error("sample_scenario: no admissible placement after " + std::to_string(max_attempts) +
                             " attempts (guard " + std::to_string(rad2deg(guard)) + " deg).");
}

} // namespace gmpchan
