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

#ifndef FDISAC_TESTS_SUPPORT_HPP
#define FDISAC_TESTS_SUPPORT_HPP

#include "fdisac/tracking_runner.hpp"

namespace testing
{
    using namespace fdisac;
    using Mat = CMatrix<double>;
    using Vec = CVector<double>;

    inline Mat random_matrix(Index rows, Index cols, Rng &rng, double variance = 1)
    {
        Mat m(rows, cols);
        for (Index i = 0; i < m.size(); ++i)
            m(i) = complex_gaussian<double>(rng, variance);
        return m;
    }

    inline double uniform(Rng &rng, double lo, double hi)
    {
        return std::uniform_real_distribution<double>(lo, hi)(rng);
    }

    inline constexpr double lambda_28ghz = speed_of_light / 28e9;

    inline ArrayGeometry<double> ula(Index n, double offset = 0)
    {
        return ArrayGeometry<double>::half_wavelength(n, lambda_28ghz, offset);
    }

    /// Small but complete scenario: 32-element arrays, 4 chains, fast enough for unit tests.
    inline ScenarioConfig small_config()
    {
        ScenarioConfig c;
        c.n_tx = 32;
        c.n_rx = 32;
        c.n_rf_tx = 4;
        c.n_rf_rx = 4;
        c.n_tx_subarray = 8;
        c.n_rx_subarray = 8;
        c.n_subcarriers = 64;
        c.n_symbols = 2;
        c.n_targets = 2;
        c.n_users = 2;
        c.user_antennas = 1;
        c.n_taps = 16;
        c.n_subframes = 3;
        c.music_grid_step_deg = 0.05;
        c.min_separation_deg = 20;
        return c;
    }
}

#endif
