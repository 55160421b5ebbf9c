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

using namespace gmpchan;

namespace {

// Water level by bisection: sum_i max(0, mu - 1/g_i) = P.
double capacity_oracle(const Eigen::VectorXd &sv, double power)
{
    double lo = 0.0, hi = power + 1e12;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > 0.0)
            hi = std::min(hi, power + 1.0 / (sv[i] * sv[i]));
    for (int it = 0; it < 300; ++it)
    {
        const double mu = 0.5 * (lo + hi);
        double used = 0.0;
        for (Eigen::Index i = 0; i < sv.size(); ++i)
            if (sv[i] > 0.0)
                used += std::max(0.0, mu - 1.0 / (sv[i] * sv[i]));
        (used > power ? hi : lo) = mu;
    }
    const double mu = 0.5 * (lo + hi);
    double c = 0.0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv[i] > 0.0)
            c += std::log2(1.0 + std::max(0.0, mu - 1.0 / (sv[i] * sv[i])) * sv[i] * sv[i]);
    return c;
}

std::vector<double> exact_angles(const Scenario &sc, int l)
{
    std::vector<double> th;
    for (int k = 0; k < sc.layout.n_rf; ++k)
        th.push_back(true_local_aoa(sc, k, l));
    return th;
}

CMat random_unitary(std::mt19937_64 &rng, int n)
{
    const CMat x = gmpchan::testing::random_cmat(rng, n, n);
    Eigen::HouseholderQR<CMat> qr(x);
    return qr.householderQ() * CMat::Identity(n, n);
}

} // namespace

TEST(Rotation, Examples)
{
    EXPECT_EQ(rotation(0.0), Mat2::Identity());
    EXPECT_LT((rotation(0.5 * pi) * Vec2(1.0, 0.0) - Vec2(0.0, 1.0)).norm(), 1e-16);
}

TEST(Rotation, GroupAndOrthogonality)
{
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int t = 0; t < 1000; ++t)
    {
        const double a = u(rng), b = u(rng);
        EXPECT_LT((rotation(a) * rotation(b) - rotation(a + b)).cwiseAbs().maxCoeff(), 1e-14);
        EXPECT_NEAR(rotation(a).determinant(), 1.0, 1e-15);
        EXPECT_LT((rotation(a).transpose() * rotation(a) - Mat2::Identity()).cwiseAbs().maxCoeff(), 1e-15);
    }
}

TEST(Triangulate, TwoExactBearings)
{
    const Vec2 target(0.3, 0.9);
    const Vec2 o1(0.0, 0.0), o2(0.2, 0.0);
    const BearingSet b{{o1, (target - o1).normalized()}, {o2, (target - o2).normalized()}};
    const auto t = triangulate(b);
    EXPECT_LT((t.position - target).norm(), 1e-9);
    EXPECT_LT(t.residual, 1e-9);
}

TEST(Triangulate, DefaultLayoutExampleTarget)
{
    Scenario sc;
    sc.rx_pose = {Vec2::Zero(), 0.0};
    sc.layout.n_tx = 1;
    sc.tx_pose = {Vec2(0.40, 0.10), 0.0};
    const auto rxg = rx_antenna_positions(sc);
    const auto t = triangulate(make_bearings(sc.rx_pose, rxg.midpoints, exact_angles(sc, 0)));
    EXPECT_LT((t.position - sc.tx_pose.center).norm(), 1e-9);
}

TEST(Triangulate, CommonModeGridStepPerturbation)
{
    // Rotating every bearing by one grid step moves the point tangentially by about r * step.
    const double step = deg2rad(0.125);
    for (double bearing_deg = -45.0; bearing_deg <= 45.0; bearing_deg += 5.0)
    {
        Scenario sc;
        sc.rx_pose = {Vec2(1.0, 2.0), 0.4};
        sc.layout.n_tx = 1;
        const double b = deg2rad(bearing_deg);
        sc.tx_pose = {sc.rx_pose.center + 0.6 * (std::sin(b) * sc.rx_pose.axis() + std::cos(b) * sc.rx_pose.normal()), 0};
        const auto rxg = rx_antenna_positions(sc);
        for (double sgn : {-1.0, 1.0})
        {
            auto th = exact_angles(sc, 0);
            for (double &v : th)
                v += sgn * step;
            const auto t = triangulate(make_bearings(sc.rx_pose, rxg.midpoints, th));
            EXPECT_LE((t.position - sc.tx_pose.center).norm(), 2.5e-3) << "bearing " << bearing_deg;
        }
    }
}

TEST(Triangulate, ResidualReflectsInconsistency)
{
    const Vec2 target(0.1, 0.7);
    BearingSet b;
    for (double x : {-0.07, -0.02, 0.03, 0.08})
        b.push_back({Vec2(x, 0.0), (target - Vec2(x, 0.0)).normalized()});
    b[2].direction = rotation(0.01) * b[2].direction;
    EXPECT_GT(triangulate(b).residual, 1e-5);
}

TEST(Triangulate, Errors)
{
    EXPECT_THROW(triangulate({{Vec2::Zero(), Vec2(0.0, 1.0)}}), GeometryError);
    const BearingSet parallel{{Vec2(0.0, 0.0), Vec2(0.0, 1.0)}, {Vec2(0.1, 0.0), Vec2(0.0, 1.0)}};
    EXPECT_THROW(triangulate(parallel), GeometryError);
}

TEST(Triangulate, ExactOnRandomScenariosAnyBearingCount)
{
    std::mt19937_64 rng(2);
    for (int t = 0; t < 300; ++t)
    {
        const Scenario sc = sample_scenario(rng(), ArrayLayout{}, 0.4, 0.8);
        const auto rxg = rx_antenna_positions(sc);
        const auto tx = tx_antenna_positions(sc);
        const auto th = exact_angles(sc, 2);
        for (std::size_t drop = 0; drop <= 2; ++drop)
        {
            std::vector<bool> use(4, true);
            for (std::size_t d = 0; d < drop; ++d)
                use[(t + d) % 4] = false;
            const auto tri = triangulate(make_bearings(sc.rx_pose, rxg.midpoints, th, use));
            EXPECT_LT((tri.position - tx[2]).norm(), 1e-9);
        }
    }
}

TEST(TxEndpoints, ExactAnglesRecoverSeparation)
{
    std::mt19937_64 rng(3);
    for (int t = 0; t < 200; ++t)
    {
        const Scenario sc = sample_scenario(rng(), ArrayLayout{}, 0.4, 0.8);
        const auto rxg = rx_antenna_positions(sc);
        const auto tx = tx_antenna_positions(sc);
        const auto e = tx_endpoints(make_bearings(sc.rx_pose, rxg.midpoints, exact_angles(sc, 0)),
                                    make_bearings(sc.rx_pose, rxg.midpoints, exact_angles(sc, 3)));
        EXPECT_LT((e.first - tx[0]).norm(), 1e-9);
        EXPECT_LT((e.last - tx[3]).norm(), 1e-9);
        EXPECT_NEAR(e.separation(), sc.layout.tx_length(), 1e-9);
    }
}

TEST(TxEndpoints, BearingFormulaMatchesTriangulation)
{
    std::mt19937_64 rng(4);
    for (int t = 0; t < 200; ++t)
    {
        const Scenario sc = sample_scenario(rng(), ArrayLayout{}, 0.4, 0.8);
        const auto rxg = rx_antenna_positions(sc);
        const auto th = exact_angles(sc, 0);
        const Vec2 tri = triangulate(make_bearings(sc.rx_pose, rxg.midpoints, th)).position;
        const double r11 = (tri - rxg.midpoints[0]).norm();
        const Vec2 q1 = position_from_bearing(rxg.midpoints[0], r11, th[0], sc.rx_pose.axis());
        EXPECT_LT((q1 - tri).norm(), 1e-9);
        EXPECT_LT((q1 - tx_antenna_positions(sc)[0]).norm(), 1e-9);
    }
}

TEST(RebuildChannel, ExactEndpointsReproduceLos)
{
    std::mt19937_64 rng(5);
    for (int t = 0; t < 100; ++t)
    {
        const Scenario sc = sample_scenario(rng(), ArrayLayout{}, 0.4, 0.8);
        const auto rxg = rx_antenna_positions(sc);
        const auto e = tx_endpoints(make_bearings(sc.rx_pose, rxg.midpoints, exact_angles(sc, 0)),
                                    make_bearings(sc.rx_pose, rxg.midpoints, exact_angles(sc, 3)));
        const CMat h = los_channel(sc);
        const CMat hr = rebuild_channel(e, sc.layout, rxg.antennas);
        EXPECT_LT(((hr - h).cwiseAbs().array() / h.cwiseAbs().array()).maxCoeff(), 1e-6);
    }
}

TEST(RebuildChannel, TwoAntennasUseEndpointsOnly)
{
    ArrayLayout l;
    l.n_tx = 2;
    const TxEndpoints e{Vec2(0.0, 0.5), Vec2(0.3, 0.5)};
    const std::vector<Vec2> rx{Vec2(0.0, 0.0), Vec2(0.1, 0.0)};
    const CMat h = rebuild_channel(e, l, rx);
    EXPECT_EQ((h - los_channel(rx, {e.first, e.last}, l.wavelength)).norm(), 0.0);
}

TEST(RebuildChannel, InterpolatesAtRescaledSpacing)
{
    const ArrayLayout l; // 4 TX antennas
    const TxEndpoints e{Vec2(0.0, 0.5), Vec2(0.06, 0.5)};
    const std::vector<Vec2> rx{Vec2(0.0, 0.0)};
    const CMat h = rebuild_channel(e, l, rx);
    const CMat ref = los_channel(rx, {Vec2(0.0, 0.5), Vec2(0.02, 0.5), Vec2(0.04, 0.5), Vec2(0.06, 0.5)}, l.wavelength);
    EXPECT_LT((h - ref).cwiseAbs().maxCoeff(), 1e-15);
    EXPECT_THROW(rebuild_channel({Vec2(0.1, 0.1), Vec2(0.1, 0.1)}, l, rx), GeometryError);
}

TEST(RebuildChannel, HalfWavelengthEndpointErrorFlipsPhase)
{
    // Moving the TX by lambda/2 along the ray to an RX element flips that entry's sign.
    ArrayLayout l;
    l.n_tx = 1;
    const std::vector<Vec2> rx{Vec2(0.0, 0.0)};
    const Vec2 q(0.1, 0.6);
    const Vec2 moved = q + 0.5 * l.wavelength * q.normalized();
    const cplx a = rebuild_channel({q, q}, l, rx)(0, 0);
    const cplx b = rebuild_channel({moved, moved}, l, rx)(0, 0);
    EXPECT_NEAR(std::abs(std::arg(b / a)), pi, 1e-6);
}

TEST(WaterFilling, MatchesBisectionOracle)
{
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> u(0.0, 3.0), lp(-3.0, 3.0);
    for (int t = 0; t < 500; ++t)
    {
        Eigen::VectorXd sv(5);
        for (int i = 0; i < 5; ++i)
            sv[i] = u(rng);
        const double p = std::pow(10.0, lp(rng));
        EXPECT_NEAR(capacity(sv, p), capacity_oracle(sv, p), 1e-9 * (1.0 + capacity_oracle(sv, p)));
        std::vector<double> g(5);
        for (int i = 0; i < 5; ++i)
            g[i] = sv[i] * sv[i];
        const auto alloc = water_filling(g, p);
        double sum = 0.0;
        for (double a : alloc)
        {
            EXPECT_GE(a, 0.0);
            sum += a;
        }
        EXPECT_NEAR(sum, p, 1e-9 * p);
    }
}

TEST(AchievableRate, PerfectCsiIsWaterFilledCapacity)
{
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t)
    {
        const Scenario sc = sample_scenario(rng(), ArrayLayout{}, 0.4, 0.8);
        const CMat h = los_channel(sc);
        const auto rp = achievable_rate(h, h, 10.0, 4, "perfect");
        const Eigen::VectorXd sv = Eigen::JacobiSVD<CMat>(h).singularValues();
        const double power = 10.0 / h.cwiseAbs2().mean();
        EXPECT_NEAR(rp.rate, capacity_oracle(sv, power), 1e-9 * rp.rate);
        EXPECT_EQ(rp.method, "perfect");
        EXPECT_EQ(rp.snr_db, 10.0);
    }
}

TEST(AchievableRate, NeverExceedsPerfectCsi)
{
    std::mt19937_64 rng(8);
    const Scenario sc = sample_scenario(1, ArrayLayout{}, 0.4, 0.8);
    const CMat h = los_channel(sc);
    for (int snr : {0, 10})
    {
        const double perfect = achievable_rate(h, h, snr, 4).rate;
        for (int t = 0; t < 500; ++t)
        {
            const CMat est = random_unitary(rng, 64) * gmpchan::testing::random_cmat(rng, 64, 4);
            EXPECT_LE(achievable_rate(h, est, snr, 4).rate, perfect * (1.0 + 1e-12));
        }
    }
}

TEST(AchievableRate, RigidMotionInvariance)
{
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> ang(-pi, pi), off(-1.0, 1.0), jitter(-2e-3, 2e-3);
    for (int t = 0; t < 30; ++t)
    {
        const Scenario sc = sample_scenario(rng(), ArrayLayout{}, 0.4, 0.8);
        const auto rx = rx_antenna_positions(sc).antennas;
        const auto tx = tx_antenna_positions(sc);
        const TxEndpoints est{tx[0] + Vec2(jitter(rng), jitter(rng)), tx[3] + Vec2(jitter(rng), jitter(rng))};
        const Mat2 r = rotation(ang(rng));
        const Vec2 s(off(rng), off(rng));
        auto move = [&](const Vec2 &p) { return Vec2(r * p + s); };
        std::vector<Vec2> rx2, tx2;
        for (const auto &p : rx)
            rx2.push_back(move(p));
        for (const auto &p : tx)
            tx2.push_back(move(p));
        const double a = achievable_rate(los_channel(rx, tx, 5e-3), rebuild_channel(est, sc.layout, rx), 10.0, 4).rate;
        const double b = achievable_rate(los_channel(rx2, tx2, 5e-3),
                                         rebuild_channel({move(est.first), move(est.last)}, sc.layout, rx2), 10.0, 4)
                             .rate;
        EXPECT_NEAR(a, b, 1e-9 * a);
    }
}

TEST(AchievableRate, Errors)
{
    const CMat h = CMat::Ones(8, 2);
    EXPECT_THROW(achievable_rate(h, CMat::Ones(8, 3), 10.0, 2), std::invalid_argument);
    EXPECT_THROW(achievable_rate(h, h, 10.0, 3), std::invalid_argument);
    EXPECT_THROW(achievable_rate(h, h, 10.0, 0), std::invalid_argument);
    EXPECT_THROW(achievable_rate(CMat::Zero(8, 2), h, 10.0, 2), std::invalid_argument);
}
