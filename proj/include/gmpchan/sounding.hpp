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
#include <numeric>
#include <random>
#include <vector>

namespace gmpchan {

/// Analog beam-training vectors for one subarray. Measurement m is w[m]^H h.
struct Codebook
{
    std::vector<CVec> vectors;
    int m_count = 0;
    std::uint64_t seed = 0;
    std::vector<int> shifts; // circulant shifts of the base sequence, empty for DFT books
    bool has_gain_probe = false;

    int length() const { return vectors.empty() ? 0 : static_cast<int>(vectors.front().size()); }

    // Compression matrix: row m is w[m]^H.
    CMat compression_matrix() const
    {
        CMat a(m_count, length());
        for (int m = 0; m < m_count; ++m)
            a.row(m) = vectors[m].adjoint();
        return a;
    }
};

/// Zadoff-Chu sequence of length n, scaled to unit norm.
inline CVec zc_sequence(int n, int root = 1)
{
    if (n < 1)
        throw std::invalid_argument("zc_sequence: length must be positive.");
    if (std::gcd(root, n) != 1)
        throw std::invalid_argument("zc_sequence: root must be coprime with the length.");
    CVec z(n);
    const long long nn = n, u = root;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (long long m = 0; m < nn; ++m)
    {
        // exp(-j pi u q / n) with q reduced mod 2n keeps the phase argument small.
        const long long q = (nn % 2 == 0) ? m * m : m * (m + 1);
        const long long r = ((u * q) % (2 * nn) + 2 * nn) % (2 * nn);
        z[m] = std::polar(scale, -pi * static_cast<double>(r) / static_cast<double>(nn));
    }
    return z;
}

inline CVec circulant_shift(const CVec &z, int shift)
{
    const auto n = z.size();
    CVec w(n);
    for (Eigen::Index i = 0; i < n; ++i)
        w[i] = z[(i + shift) % n];
    return w;
}

/// M-1 distinct random circulant shifts of a ZC sequence, followed by the sign-flipped gain probe
/// w[M] = w[1] .* [1, -1, ..., -1].
inline Codebook build_codebook(int n, int m_count, std::uint64_t seed, int zc_root = 1)
{
    if (m_count < 2 || m_count > n + 1)
        throw std::invalid_argument("build_codebook: m_count must lie in [2, n + 1].");
    const CVec z = zc_sequence(n, zc_root);

    std::vector<int> pool(static_cast<std::size_t>(n));
    std::iota(pool.begin(), pool.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(pool.begin(), pool.end(), rng);

    Codebook cb;
    cb.m_count = m_count;
    cb.seed = seed;
    cb.has_gain_probe = true;
    cb.shifts.assign(pool.begin(), pool.begin() + (m_count - 1));
    for (int c : cb.shifts)
        cb.vectors.push_back(circulant_shift(z, c));
    CVec probe = cb.vectors.front();
    probe.tail(n - 1) *= -1.0;
    cb.vectors.push_back(std::move(probe));
    return cb;
}

/// Exhaustive beam scan: the N DFT beams, w[m](p) = exp(-j 2 pi m p / N) / sqrt(N).
inline Codebook dft_codebook(int n)
{
    if (n < 1)
        throw std::invalid_argument("dft_codebook: length must be positive.");
    Codebook cb;
    cb.m_count = n;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    for (int m = 0; m < n; ++m)
    {
        CVec w(n);
        for (int p = 0; p < n; ++p)
            w[p] = std::polar(scale, -2.0 * pi * static_cast<double>((m * p) % n) / n);
        cb.vectors.push_back(std::move(w));
    }
    return cb;
}

/// Pilot measurements y_k[m] for each sounded TX antenna (time-orthogonal indicator pilots).
struct MeasurementSet
{
    std::vector<int> sounded_tx;
    std::vector<std::vector<CVec>> y; // [group of sounded_tx][subarray] -> M samples
    double noise_var = 0.0;
    std::vector<Codebook> codebooks; // one per subarray

    int group_of(int tx_index) const
    {
        const auto it = std::find(sounded_tx.begin(), sounded_tx.end(), tx_index);
        if (it == sounded_tx.end())
            throw std::out_of_range("MeasurementSet: TX antenna was not sounded.");
        return static_cast<int>(it - sounded_tx.begin());
    }
};

inline CVec subchannel(const CMat &channel, const ArrayLayout &layout, int k, int tx_index)
{
    return channel.block(static_cast<Eigen::Index>(k) * layout.n_per_sub, tx_index, layout.n_per_sub, 1);
}

/// sigma^2 = mean over subarrays (and sounded antennas) of |w_k[1]^H h_{k,l}|^2, divided by the linear SNR.
inline double pilot_noise_variance(const CMat &channel, const ArrayLayout &layout, const std::vector<Codebook> &codebooks,
                                   const std::vector<int> &sounded_tx, double snr_db)
{
    double power = 0.0;
    for (int l : sounded_tx)
        for (int k = 0; k < layout.n_rf; ++k)
            power += std::norm(codebooks[k].vectors.front().dot(subchannel(channel, layout, k, l)));
    power /= static_cast<double>(sounded_tx.size() * static_cast<std::size_t>(layout.n_rf));
    return power / std::pow(10.0, snr_db / 10.0);
}

inline MeasurementSet acquire_at_noise_var(const ArrayLayout &layout, const CMat &channel,
                                           const std::vector<Codebook> &codebooks, const std::vector<int> &sounded_tx,
                                           double noise_var, std::uint64_t seed)
{
    if (channel.rows() != layout.n_rx() || channel.cols() != layout.n_tx)
        throw std::invalid_argument("acquire: channel dimensions do not match the layout.");
    if (static_cast<int>(codebooks.size()) != layout.n_rf)
        throw std::invalid_argument("acquire: need one codebook per subarray.");
    if (sounded_tx.empty())
        throw std::invalid_argument("acquire: no TX antenna sounded.");
    if (noise_var < 0.0)
        throw std::invalid_argument("acquire: negative noise variance.");

    MeasurementSet ms;
    ms.sounded_tx = sounded_tx;
    ms.noise_var = noise_var;
    ms.codebooks = codebooks;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, std::sqrt(0.5 * noise_var));
    for (int l : sounded_tx)
    {
        if (l < 0 || l >= layout.n_tx)
            throw std::out_of_range("acquire: sounded TX index out of range.");
        std::vector<CVec> per_sub;
        for (int k = 0; k < layout.n_rf; ++k)
        {
            const CVec h = subchannel(channel, layout, k, l);
            const auto &cb = codebooks[k];
            if (cb.length() != layout.n_per_sub)
                throw std::invalid_argument("acquire: codebook length does not match the subarray size.");
            CVec y(cb.m_count);
            for (int m = 0; m < cb.m_count; ++m)
            {
                y[m] = cb.vectors[m].dot(h); // Eigen's dot conjugates the first argument
                if (noise_var > 0.0)
                {
                    const double re = gauss(rng);
                    const double im = gauss(rng);
                    y[m] += cplx(re, im);
                }
            }
            per_sub.push_back(std::move(y));
        }
        ms.y.push_back(std::move(per_sub));
    }
    return ms;
}

/// Sounds with noise variance derived from `snr_db` (+inf disables noise).
inline MeasurementSet acquire(const Scenario &sc, const CMat &channel, const std::vector<Codebook> &codebooks,
                              const std::vector<int> &sounded_tx, double snr_db, std::uint64_t seed)
{
    const double nv = pilot_noise_variance(channel, sc.layout, codebooks, sounded_tx, snr_db);
    return acquire_at_noise_var(sc.layout, channel, codebooks, sounded_tx, nv, seed);
}

struct GainEstimate
{
    cplx alpha = 0.0;
    bool usable = false;
    CVec compensated;                                               // y / alpha
    double compensated_noise_var = std::numeric_limits<double>::infinity(); // sigma^2 / |alpha|^2
};

inline constexpr double min_usable_gain = 1e-12;

/// alpha = (y[1] + y[M]) / (2 conj(eta)), eta the first entry of w[1].
inline GainEstimate estimate_gain(const MeasurementSet &ms, int k, int tx_index)
{
    const auto &cb = ms.codebooks.at(static_cast<std::size_t>(k));
    if (!cb.has_gain_probe)
        throw std::invalid_argument("estimate_gain: codebook has no sign-flip gain probe.");
    const CVec &y = ms.y[static_cast<std::size_t>(ms.group_of(tx_index))][static_cast<std::size_t>(k)];
    const cplx eta = cb.vectors.front()[0];

    GainEstimate g;
    g.alpha = (y[0] + y[cb.m_count - 1]) / (2.0 * std::conj(eta));
    g.usable = std::abs(g.alpha) >= min_usable_gain;
    if (g.usable)
    {
        g.compensated = y / g.alpha;
        g.compensated_noise_var = ms.noise_var / std::norm(g.alpha);
    }
    return g;
}

} // namespace gmpchan
