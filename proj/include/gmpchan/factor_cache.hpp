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

#include "inference.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace gmpchan {

/// Text cache for geometry factor tables.
///
/// Layout, one item per line:
///   GMPFT1
///   grid_size <G>
///   kappa <x>
///   r_min <x>
///   r_max <x>
///   l_tx <x>
///   offsets <count> <x>...
///   n_r_samples <n>
///   smoothing <x>
///   direction forward|backward
///   pair <from> <to>
/// followed by G rows of G space-separated probabilities. Reals use 17 significant digits.
struct FactorCacheHeader
{
    std::size_t grid_size = 0;
    double kappa = 0.0;
    FactorTableParams params;
    Direction direction = Direction::forward;
    int from = 0;
    int to = 1;

    bool operator==(const FactorCacheHeader &) const = default;

    static FactorCacheHeader of(const GeometryFactorTable &t)
    {
        return {t.grid_size, t.kappa, t.params, t.direction, t.from, t.to};
    }
};

inline constexpr const char *factor_cache_magic = "GMPFT1";

class CacheFormatError : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

inline void append_real(std::string &out, double v)
{
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
    out.append(buf, res.ptr);
}

inline std::string format_real(double v)
{
    std::string s;
    append_real(s, v);
    return s;
}

inline std::string header_text(const FactorCacheHeader &h)
{
    std::string s = std::string(factor_cache_magic) + "\n";
    s += "grid_size " + std::to_string(h.grid_size) + "\n";
    s += "kappa " + format_real(h.kappa) + "\n";
    s += "r_min " + format_real(h.params.r_min) + "\n";
    s += "r_max " + format_real(h.params.r_max) + "\n";
    s += "l_tx " + format_real(h.params.l_tx) + "\n";
    s += "offsets " + std::to_string(h.params.offsets.size());
    for (double o : h.params.offsets)
        s += " " + format_real(o);
    s += "\n";
    s += "n_r_samples " + std::to_string(h.params.n_r_samples) + "\n";
    s += "smoothing " + format_real(h.params.smoothing) + "\n";
    s += std::string("direction ") + to_string(h.direction) + "\n";
    s += "pair " + std::to_string(h.from) + " " + std::to_string(h.to) + "\n";
    return s;
}

inline std::string factor_file_name(Direction d, int from, int to)
{
    return std::string("factor_") + (d == Direction::forward ? "fwd_" : "bwd_") + std::to_string(from) + "_" +
           std::to_string(to) + ".txt";
}

inline void write_factor_table(const std::filesystem::path &path, const GeometryFactorTable &t)
{
    std::string out = header_text(FactorCacheHeader::of(t));
    out.reserve(out.size() + t.table.size() * 24);
    for (std::size_t i = 0; i < t.grid_size; ++i)
    {
        for (std::size_t j = 0; j < t.grid_size; ++j)
        {
            if (j)
                out.push_back(' ');
            append_real(out, t(i, j));
        }
        out.push_back('\n');
    }
    const auto tmp = path.string() + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f)
            throw std::runtime_error("cannot write factor cache '" + tmp + "'");
        f.write(out.data(), static_cast<std::streamsize>(out.size()));
        if (!f)
            throw std::runtime_error("write failed for factor cache '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

namespace detail {

struct LineReader
{
    std::istream &in;
    std::string file;
    std::size_t line_no = 0;

    std::string next(const char *what)
    {
        std::string line;
        if (!std::getline(in, line))
            throw CacheFormatError(file + ": unexpected end of file while reading " + what);
        ++line_no;
        return line;
    }

    [[noreturn]] void fail(const std::string &msg) const
    {
        throw CacheFormatError(file + ":" + std::to_string(line_no) + ": " + msg);
    }
};

inline double parse_real(const LineReader &r, std::string_view tok)
{
    double v = 0.0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
        r.fail("malformed number '" + std::string(tok) + "'");
    return v;
}

inline std::vector<std::string> split(const std::string &line)
{
    std::istringstream ss(line);
    std::vector<std::string> t;
    for (std::string w; ss >> w;)
        t.push_back(w);
    return t;
}

inline std::vector<std::string> keyed(LineReader &r, const char *key, std::size_t min_tokens)
{
    auto t = split(r.next(key));
    if (t.empty() || t[0] != key || t.size() < min_tokens + 1)
        r.fail(std::string("expected '") + key + "'");
    return t;
}

inline FactorCacheHeader read_header(LineReader &r)
{
    if (r.next("magic") != factor_cache_magic)
        r.fail("bad magic (expected GMPFT1)");
    FactorCacheHeader h;
    try
    {
        h.grid_size = std::stoul(keyed(r, "grid_size", 1)[1]);
        h.kappa = parse_real(r, keyed(r, "kappa", 1)[1]);
        h.params.r_min = parse_real(r, keyed(r, "r_min", 1)[1]);
        h.params.r_max = parse_real(r, keyed(r, "r_max", 1)[1]);
        h.params.l_tx = parse_real(r, keyed(r, "l_tx", 1)[1]);
        const auto off = keyed(r, "offsets", 1);
        const auto n_off = std::stoul(off[1]);
        if (off.size() != n_off + 2)
            r.fail("offset count mismatch");
        for (std::size_t i = 0; i < n_off; ++i)
            h.params.offsets.push_back(parse_real(r, off[i + 2]));
        h.params.n_r_samples = std::stoi(keyed(r, "n_r_samples", 1)[1]);
        h.params.smoothing = parse_real(r, keyed(r, "smoothing", 1)[1]);
        const auto dir = keyed(r, "direction", 1)[1];
        if (dir == "forward")
            h.direction = Direction::forward;
        else if (dir == "backward")
            h.direction = Direction::backward;
        else
            r.fail("bad direction '" + dir + "'");
        const auto pair = keyed(r, "pair", 2);
        h.from = std::stoi(pair[1]);
        h.to = std::stoi(pair[2]);
    }
    catch (const std::logic_error &)
    {
        r.fail("malformed header field");
    }
    return h;
}

} // namespace detail

inline FactorCacheHeader read_factor_header(const std::filesystem::path &path)
{
    std::ifstream f(path);
    if (!f)
        throw CacheFormatError("cannot open factor cache '" + path.string() + "'");
    detail::LineReader r{f, path.string()};
    return detail::read_header(r);
}

inline GeometryFactorTable read_factor_table(const std::filesystem::path &path)
{
    std::ifstream f(path, std::ios::binary);
    if (!f)
        throw CacheFormatError("cannot open factor cache '" + path.string() + "'");
    detail::LineReader r{f, path.string()};
    const auto h = detail::read_header(r);

    GeometryFactorTable t;
    t.from = h.from;
    t.to = h.to;
    t.direction = h.direction;
    t.kappa = h.kappa;
    t.params = h.params;
    t.grid_size = h.grid_size;
    t.table.resize(h.grid_size * h.grid_size);
    const std::size_t g = h.grid_size;
    for (std::size_t i = 0; i < g; ++i)
    {
        const std::string line = r.next("table row");
        const char *p = line.data();
        const char *end = p + line.size();
        std::size_t count = 0;
        double row_sum = 0.0;
        while (p < end)
        {
            while (p < end && *p == ' ')
                ++p;
            if (p == end)
                break;
            double v = 0.0;
            const auto res = std::from_chars(p, end, v);
            if (res.ec != std::errc())
                throw CacheFormatError(path.string() + ": row " + std::to_string(i) + ": malformed number");
            if (count < g)
                t.table[i * g + count] = v;
            row_sum += v;
            ++count;
            p = res.ptr;
        }
        if (count != g)
            throw CacheFormatError(path.string() + ": row " + std::to_string(i) + ": expected " + std::to_string(g) +
                                   " values, found " + std::to_string(count));
        if (row_sum == 0.0)
            t.impossible_rows.push_back(i);
    }
    std::string extra;
    while (std::getline(f, extra))
        if (!extra.empty())
            throw CacheFormatError(path.string() + ": trailing data after " + std::to_string(g) + " rows");
    return t;
}

enum class CacheStatus
{
    hit,
    built,
    rebuilt_forced,
    mismatch_not_written
};

struct CachedFactors
{
    GeometryFactors factors;
    std::vector<CacheStatus> status; // forward pairs first, then backward pairs
    bool all_hits() const
    {
        return std::all_of(status.begin(), status.end(), [](CacheStatus s) { return s == CacheStatus::hit; });
    }
};

/// How an existing file with a mismatched header is treated.
enum class MismatchPolicy
{
    refuse,      // throw
    overwrite,   // --force
    build_only   // compute in memory, leave the file alone
};

/// Loads every table whose file header matches, builds (and writes) the rest.
inline CachedFactors ensure_factor_tables(const AngularGrid &grid, const FactorTableParams &params,
                                          const std::filesystem::path &dir, MismatchPolicy policy)
{
    std::filesystem::create_directories(dir);
    CachedFactors out;
    const int pairs = static_cast<int>(params.offsets.size()) - 1;
    for (Direction d : {Direction::forward, Direction::backward})
    {
        for (int p = 0; p < pairs; ++p)
        {
            const int from = d == Direction::forward ? p : p + 1;
            const int to = d == Direction::forward ? p + 1 : p;
            const FactorCacheHeader want{grid.size(), grid.kappa(), params, d, from, to};
            const auto path = dir / factor_file_name(d, from, to);

            CacheStatus st = CacheStatus::built;
            if (std::filesystem::exists(path))
            {
                bool match = false;
                try
                {
                    match = read_factor_header(path) == want;
                }
                catch (const CacheFormatError &)
                {
                    match = false;
                }
                if (match)
                {
                    auto t = read_factor_table(path);
                    (d == Direction::forward ? out.factors.forward : out.factors.backward).push_back(std::move(t));
                    out.status.push_back(CacheStatus::hit);
                    continue;
                }
                if (policy == MismatchPolicy::refuse)
                    throw std::runtime_error("factor cache '" + path.string() +
                                             "' was built for a different configuration; use --force to overwrite");
                st = policy == MismatchPolicy::overwrite ? CacheStatus::rebuilt_forced : CacheStatus::mismatch_not_written;
            }
            auto t = build_factor_table(grid, p, d, params);
            if (st != CacheStatus::mismatch_not_written)
                write_factor_table(path, t);
            (d == Direction::forward ? out.factors.forward : out.factors.backward).push_back(std::move(t));
            out.status.push_back(st);
        }
    }
    return out;
}

} // namespace gmpchan
