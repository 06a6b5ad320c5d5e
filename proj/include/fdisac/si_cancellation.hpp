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

#ifndef FDISAC_SI_CANCELLATION_HPP
#define FDISAC_SI_CANCELLATION_HPP

#include "fdisac/common.hpp"

#include <numeric>
#include <optional>

namespace fdisac
{
    template <typename Real = double>
    struct CancellerPair
    {
        CMatrix<Real> analog;  // M_RF x N_RF, at most n_taps nonzeros
        CMatrix<Real> digital; // M_RF x N_RF
        Index n_taps = 0;
    };

    /// Tap-limited analog canceller: -H on the n_taps largest-magnitude entries of H, zero elsewhere.
    /// Magnitude ties go to the lower column-major index.
    template <typename Real>
    CMatrix<Real> design_analog_canceller(const CMatrix<Real> &si_effective, Index n_taps)
    {
        const Index total = si_effective.size();
        if (n_taps < 0 || n_taps > total)
            throw InvalidInput("design_analog_canceller: n_taps must lie in [0, M_RF*N_RF]");
        std::vector<Index> order(static_cast<std::size_t>(total));
        std::iota(order.begin(), order.end(), Index(0));
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b)
                         { return std::abs(si_effective(a)) > std::abs(si_effective(b)); });

        CMatrix<Real> c = CMatrix<Real>::Zero(si_effective.rows(), si_effective.cols());
        for (Index t = 0; t < n_taps; ++t)
        {
            const Index i = order[static_cast<std::size_t>(t)];
            c(i) = -si_effective(i);
        }
        return c;
    }

    /// Imperfect knowledge of the post-analog SI channel: each entry of (H + C) is
    /// perturbed by CN(0, 10^(relative_db/10) |(H + C)_ij|^2).
    template <typename Real = double>
    struct KnowledgeError
    {
        Real relative_db = Real(-40);
        std::uint64_t seed = 0;
    };

    /// D = -(H + C), or -(H_hat + C) when a knowledge error is configured.
    template <typename Real>
    CMatrix<Real> design_digital_canceller(const CMatrix<Real> &si_effective, const CMatrix<Real> &analog,
                                           const std::optional<KnowledgeError<Real>> &error = std::nullopt)
    {
        if (si_effective.rows() != analog.rows() || si_effective.cols() != analog.cols())
            throw InvalidInput("design_digital_canceller: shape mismatch");
        CMatrix<Real> residual = si_effective + analog;
        if (error)
        {
            Rng rng(derive_seed(error->seed, stream::knowledge));
            const Real rel = db_to_linear(error->relative_db);
            for (Index i = 0; i < residual.size(); ++i)
                residual(i) += complex_gaussian<Real>(rng, rel * std::norm(residual(i)));
        }
        return -residual;
    }

    template <typename Real = double>
    struct ResidualSi
    {
        Real total = Real(0);           // ||(H + C + D) V_BB||_F^2
        RVector<Real> analog_row_power; // rows of ||(H + C) V_BB||^2, the saturation quantity
    };

    template <typename Real>
    ResidualSi<Real> residual_si_power(const CMatrix<Real> &si_effective, const CMatrix<Real> &analog,
                                       const CMatrix<Real> &digital, const CMatrix<Real> &v_bb)
    {
        if (si_effective.rows() != analog.rows() || si_effective.cols() != analog.cols() ||
            digital.rows() != analog.rows() || digital.cols() != analog.cols() || v_bb.rows() != analog.cols())
            throw InvalidInput("residual_si_power: shape mismatch");
        const CMatrix<Real> after_analog = (si_effective + analog) * v_bb;
        ResidualSi<Real> out;
        out.analog_row_power = after_analog.rowwise().squaredNorm();
        out.total = (after_analog + digital * v_bb).squaredNorm();
        return out;
    }
}

#endif
