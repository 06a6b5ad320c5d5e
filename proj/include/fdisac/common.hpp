// SPDX-License-Identifier: Apache-2.0
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

#ifndef FDISAC_COMMON_HPP
#define FDISAC_COMMON_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <concepts>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

namespace fdisac
{
    using Index = Eigen::Index;

    template <typename Real>
    using Complex = std::complex<Real>;

    template <typename Real>
    using CMatrix = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, Eigen::Dynamic>;

    template <typename Real>
    using CVector = Eigen::Matrix<std::complex<Real>, Eigen::Dynamic, 1>;

    template <typename Real>
    using RVector = Eigen::Matrix<Real, Eigen::Dynamic, 1>;

    // Random engine used for every stochastic draw. Streams are always seeded explicitly.
    using Rng = std::mt19937_64;

    inline constexpr double speed_of_light = 299792458.0;

    // Caller supplied malformed arguments (shape mismatch, out-of-range count, ...).
    class InvalidInput : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    // Block diagonalization ran out of null-space dimensions.
    class RankDeficiency : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    // Range estimation had no usable resource element.
    class EstimationFailure : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    template <std::floating_point Real>
    constexpr Real pi_v = std::numbers::pi_v<Real>;

    template <std::floating_point Real>
    constexpr Real deg2rad(Real deg) { return deg * pi_v<Real> / Real(180); }

    template <std::floating_point Real>
    constexpr Real rad2deg(Real rad) { return rad * Real(180) / pi_v<Real>; }

    // dBm -> mW, dB -> linear power ratio
    template <std::floating_point Real>
    Real dbm_to_mw(Real dbm) { return std::pow(Real(10), dbm / Real(10)); }

    template <std::floating_point Real>
    Real mw_to_dbm(Real mw) { return Real(10) * std::log10(mw); }

    template <std::floating_point Real>
    Real db_to_linear(Real db) { return std::pow(Real(10), db / Real(10)); }

    // SplitMix64 finalizer; used to derive independent, reproducible sub-stream seeds.
    constexpr std::uint64_t mix_seed(std::uint64_t x)
    {
        x += 0x9E3779B97F4A7C15ULL;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
        return x ^ (x >> 31);
    }

    constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0)
    {
        return mix_seed(mix_seed(mix_seed(seed) ^ stream) ^ index);
    }

    // Stream tags for derive_seed. Keeping them distinct keeps draws independent across stages.
    namespace stream
    {
        inline constexpr std::uint64_t symbols = 0x53594D42;
        inline constexpr std::uint64_t radar_noise = 0x524E4F49;
        inline constexpr std::uint64_t user_noise = 0x554E4F49;
        inline constexpr std::uint64_t scenario = 0x5343454E;
        inline constexpr std::uint64_t evolution = 0x45564F4C;
        inline constexpr std::uint64_t knowledge = 0x4B4E4F57;
        inline constexpr std::uint64_t prior = 0x50524952;
        inline constexpr std::uint64_t subframe = 0x53554246;
    }

    // Uniform phase on the unit circle.
    template <typename Real>
    Complex<Real> random_phase(Rng &rng)
    {
        std::uniform_real_distribution<Real> u(Real(0), Real(2) * pi_v<Real>);
        return std::polar(Real(1), u(rng));
    }

    // Circularly-symmetric complex Gaussian sample with E|z|^2 = variance.
    template <typename Real>
    Complex<Real> complex_gaussian(Rng &rng, Real variance)
    {
        std::normal_distribution<Real> n(Real(0), std::sqrt(variance / Real(2)));
        const Real re = n(rng);
        const Real im = n(rng);
        return {re, im};
    }

    // Runs fn(i) for i in [0, count). Work is split into contiguous chunks; fn must only write
    // to slots owned by i, so the result never depends on the thread count.
    template <typename Fn>
    void parallel_for(Index count, int threads, Fn &&fn)
    {
        if (threads <= 1 || count < 2)
        {
            for (Index i = 0; i < count; ++i)
                fn(i);
            return;
        }
        const Index n_workers = std::min<Index>(threads, count);
        const Index chunk = (count + n_workers - 1) / n_workers;
        std::vector<std::jthread> workers;
        workers.reserve(static_cast<std::size_t>(n_workers));
        for (Index w = 0; w < n_workers; ++w)
        {
            const Index begin = w * chunk;
            const Index end = std::min(count, begin + chunk);
            workers.emplace_back([begin, end, &fn]
                                 { for (Index i = begin; i < end; ++i) fn(i); });
        }
    }
}

#endif
