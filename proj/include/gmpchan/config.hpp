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
#include "inference.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <algorithm>
#include <limits>
#include <numeric>
#include <set>
#include <string>
#include <vector>

namespace gmpchan {

class ConfigError : public std::invalid_argument
{
  public:
    using std::invalid_argument::invalid_argument;
};

enum class Method
{
    gmp,
    ml,
    exhaustive
};

inline std::string to_string(Method m)
{
    switch (m)
    {
    case Method::gmp:
        return "gmp";
    case Method::ml:
        return "ml";
    case Method::exhaustive:
        return "exhaustive";
    }
    return "?";
}

inline Method parse_method(const std::string &s)
{
    if (s == "gmp")
        return Method::gmp;
    if (s == "ml")
        return Method::ml;
    if (s == "exhaustive")
        return Method::exhaustive;
    throw ConfigError("unknown method '" + s + "' (expected gmp, ml or exhaustive)");
}

/// Every experiment tunable. Defaults are the reference short-range setup: 4 subarrays of 16 elements at 60 GHz,
/// a 4-antenna TX, r in [0.4, 0.8] m, 0.125 deg grid, M = 3 pilots per subarray at 5 dB.
struct Config
{
    int n_rf = 4;
    int n_per_sub = 16;
    double wavelength = 5e-3;
    double rx_sub_pitch = 4.75e-2;
    int n_tx = 4;
    double tx_spacing = 1.33e-2;
    double r_min = 0.4;
    double r_max = 0.8;
    double kappa = 1.0 / 1440.0;
    int M = 3;
    int zc_root = 1;
    double snr_pilot_db = 5.0; // +inf disables pilot noise
    double snr_data_db = 10.0;
    double reflect_coeff = 0.3; // 0 disables multipath
    int n_r_samples = 40000;
    double smoothing = 1e-6;
    int n_trials = 500;
    std::uint64_t master_seed = 1;
    std::vector<Method> methods{Method::gmp, Method::ml, Method::exhaustive};
    std::string output_dir = "out";
    // room and run-control extras
    double room_width = 5.0;
    double room_depth = 5.0;
    double room_height = 3.0;
    double array_height = 1.5;
    int n_streams = 4;
    int parallelism = 1;

    bool operator==(const Config &) const = default;

    ArrayLayout layout() const
    {
        ArrayLayout l = ArrayLayout::with_wavelength(wavelength);
        l.n_rf = n_rf;
        l.n_per_sub = n_per_sub;
        l.rx_sub_pitch = rx_sub_pitch;
        l.n_tx = n_tx;
        l.tx_spacing = tx_spacing;
        return l;
    }

    RoomSpec room() const { return {room_width, room_depth, room_height, array_height}; }

    AngularGrid grid() const { return AngularGrid(kappa); }

    FactorTableParams factor_params() const
    {
        const auto l = layout();
        return {r_min, r_max, l.tx_length(), l.subarray_offsets(), n_r_samples, smoothing};
    }

    bool has_method(Method m) const { return std::find(methods.begin(), methods.end(), m) != methods.end(); }

    void validate() const
    {
        try
        {
            layout().validate();
        }
        catch (const std::invalid_argument &e)
        {
            throw ConfigError(e.what());
        }
        if (!(r_min > 0.5 * layout().rx_length()))
            throw ConfigError("r_min must exceed half the RX array length");
        if (r_min > r_max)
            throw ConfigError("r_min must not exceed r_max");
        if (!(kappa > 0.0 && kappa < 0.5))
            throw ConfigError("kappa must lie in (0, 0.5)");
        if (M < 2 || M > n_per_sub + 1)
            throw ConfigError("M must lie in [2, n_per_sub + 1]");
        if (std::gcd(zc_root, n_per_sub) != 1)
            throw ConfigError("zc_root must be coprime with n_per_sub");
        if (std::isnan(snr_pilot_db) || !std::isfinite(snr_data_db))
            throw ConfigError("SNR values must be numbers (snr_pilot_db may be \"inf\")");
        if (reflect_coeff < 0.0 || reflect_coeff > 1.0)
            throw ConfigError("reflect_coeff must lie in [0, 1]");
        if (n_r_samples < 2)
            throw ConfigError("n_r_samples must be at least 2");
        if (smoothing < 0.0)
            throw ConfigError("smoothing must be non-negative");
        if (n_trials < 1)
            throw ConfigError("n_trials must be at least 1");
        if (methods.empty())
            throw ConfigError("methods must not be empty");
        if (std::set<Method>(methods.begin(), methods.end()).size() != methods.size())
            throw ConfigError("methods contains duplicates");
        if (!(room_width > 0.0 && room_depth > 0.0))
            throw ConfigError("room dimensions must be positive");
        if (room_height > 0.0 && !(array_height > 0.0 && array_height < room_height))
            throw ConfigError("array_height must lie inside the room");
        if (n_streams < 1 || n_streams > std::min(n_tx, n_rf * n_per_sub))
            throw ConfigError("n_streams must lie in [1, min(n_tx, n_rx)]");
        if (parallelism < 1)
            throw ConfigError("parallelism must be at least 1");
    }
};

namespace detail {

inline nlohmann::json snr_to_json(double v)
{
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    return v;
}

inline double snr_from_json(const nlohmann::json &j, const char *key)
{
    if (j.is_string())
    {
        const auto s = j.get<std::string>();
        if (s == "inf")
            return std::numeric_limits<double>::infinity();
        throw ConfigError(std::string(key) + ": expected a number or \"inf\"");
    }
    return j.get<double>();
}

} // namespace detail

inline nlohmann::json to_json(const Config &c)
{
    nlohmann::json j;
    j["n_rf"] = c.n_rf;
    j["n_per_sub"] = c.n_per_sub;
    j["wavelength"] = c.wavelength;
    j["rx_sub_pitch"] = c.rx_sub_pitch;
    j["n_tx"] = c.n_tx;
    j["tx_spacing"] = c.tx_spacing;
    j["r_min"] = c.r_min;
    j["r_max"] = c.r_max;
    j["kappa"] = c.kappa;
    j["M"] = c.M;
    j["zc_root"] = c.zc_root;
    j["snr_pilot_db"] = detail::snr_to_json(c.snr_pilot_db);
    j["snr_data_db"] = c.snr_data_db;
    j["reflect_coeff"] = c.reflect_coeff;
    j["n_r_samples"] = c.n_r_samples;
    j["smoothing"] = c.smoothing;
    j["n_trials"] = c.n_trials;
    j["master_seed"] = c.master_seed;
    std::vector<std::string> m;
    for (auto x : c.methods)
        m.push_back(to_string(x));
    j["methods"] = m;
    j["output_dir"] = c.output_dir;
    j["room_width"] = c.room_width;
    j["room_depth"] = c.room_depth;
    j["room_height"] = c.room_height;
    j["array_height"] = c.array_height;
    j["n_streams"] = c.n_streams;
    j["parallelism"] = c.parallelism;
    return j;
}

/// Missing keys keep their defaults; unknown keys are rejected.
inline Config config_from_json(const nlohmann::json &j)
{
    if (!j.is_object())
        throw ConfigError("config: top level must be an object");
    Config c;
    try
    {
        for (const auto &[key, v] : j.items())
        {
            if (key == "n_rf") c.n_rf = v.get<int>();
            else if (key == "n_per_sub") c.n_per_sub = v.get<int>();
            else if (key == "wavelength") c.wavelength = v.get<double>();
            else if (key == "rx_sub_pitch") c.rx_sub_pitch = v.get<double>();
            else if (key == "n_tx") c.n_tx = v.get<int>();
            else if (key == "tx_spacing") c.tx_spacing = v.get<double>();
            else if (key == "r_min") c.r_min = v.get<double>();
            else if (key == "r_max") c.r_max = v.get<double>();
            else if (key == "kappa") c.kappa = v.get<double>();
            else if (key == "M") c.M = v.get<int>();
            else if (key == "zc_root") c.zc_root = v.get<int>();
            else if (key == "snr_pilot_db") c.snr_pilot_db = detail::snr_from_json(v, "snr_pilot_db");
            else if (key == "snr_data_db") c.snr_data_db = v.get<double>();
            else if (key == "reflect_coeff") c.reflect_coeff = v.get<double>();
            else if (key == "n_r_samples") c.n_r_samples = v.get<int>();
            else if (key == "smoothing") c.smoothing = v.get<double>();
            else if (key == "n_trials") c.n_trials = v.get<int>();
            else if (key == "master_seed") c.master_seed = v.get<std::uint64_t>();
            else if (key == "methods")
            {
                c.methods.clear();
                for (const auto &m : v)
                    c.methods.push_back(parse_method(m.get<std::string>()));
            }
            else if (key == "output_dir") c.output_dir = v.get<std::string>();
            else if (key == "room_width") c.room_width = v.get<double>();
            else if (key == "room_depth") c.room_depth = v.get<double>();
            else if (key == "room_height") c.room_height = v.get<double>();
            else if (key == "array_height") c.array_height = v.get<double>();
            else if (key == "n_streams") c.n_streams = v.get<int>();
            else if (key == "parallelism") c.parallelism = v.get<int>();
            else
                throw ConfigError("config: unknown key '" + key + "'");
        }
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.validate();
    return c;
}

inline Config load_config(const std::string &path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try
    {
        in >> j;
    }
    catch (const nlohmann::json::exception &e)
    {
        throw ConfigError("config: " + path + ": " + e.what());
    }
    return config_from_json(j);
}

} // namespace gmpchan
