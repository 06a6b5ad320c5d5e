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

#ifndef FDISAC_CHANNEL_MODELS_HPP
#define FDISAC_CHANNEL_MODELS_HPP

#include "fdisac/array_codebook.hpp"

#include <optional>

namespace fdisac
{
    /// Ground truth for one scatterer. The first U scatterers double as DL paths.
    template <typename Real = double>
    struct TargetState
    {
        Real doa = Real(0);   // radians
        Real range = Real(1); // meters
        Real delay = Real(2) / Real(speed_of_light);
        Complex<Real> reflection{1, 0};
        bool is_dl_scatterer = false;
        std::optional<int> dl_user_index;
        Real dl_user_doa = Real(0);
        Complex<Real> dl_gain{0, 0};

        static TargetState at(Real doa, Real range, Complex<Real> reflection = {1, 0})
        {
            if (!(range > Real(0)))
                throw InvalidInput("TargetState: range must be > 0");
            TargetState t;
            t.doa = doa;
            t.range = range;
            t.delay = Real(2) * range / Real(speed_of_light);
            t.reflection = reflection;
            return t;
        }
    };

    /// |alpha|^2 model. radar_equation: G * lambda^2 / ((4 pi)^3 R^4); fixed: constant magnitude.
    template <typename Real = double>
    struct ReflectionModel
    {
        enum class Kind
        {
            radar_equation,
            fixed
        };
        Kind kind = Kind::radar_equation;
        Real reflectivity = Real(1);
        Real fixed_magnitude = Real(1);

        Real magnitude(Real range, Real wavelength) const
        {
            if (kind == Kind::fixed)
                return fixed_magnitude;
            const Real four_pi = Real(4) * pi_v<Real>;
            const Real power = reflectivity * wavelength * wavelength /
                               (four_pi * four_pi * four_pi * std::pow(range, Real(4)));
            return std::sqrt(power);
        }
    };

    template <typename Real = double>
    struct SiChannel
    {
        CMatrix<Real> matrix; // M x N
        Real tx_rx_separation = Real(0);
    };

    template <typename Real = double>
    struct DlChannel
    {
        CMatrix<Real> matrix; // L x N, rank one
        Real pathloss_db = Real(0);
    };

    /// Line-of-sight SI between two parallel ULAs offset by `separation` perpendicular to their
    /// common axis. Entry (m, n) = rho / r exp(-j 2pi r / lambda) with rho fixing ||H||_F^2 = M N.
    template <typename Real>
    SiChannel<Real> build_si_channel(const ArrayGeometry<Real> &tx, const ArrayGeometry<Real> &rx, Real separation)
    {
        tx.validate();
        rx.validate();
        if (!(separation > Real(0)))
            throw InvalidInput("build_si_channel: separation must be > 0");
        const Index m_ant = rx.n_elements;
        const Index n_ant = tx.n_elements;
        const Real k = Real(2) * pi_v<Real> / tx.wavelength;

        SiChannel<Real> si;
        si.tx_rx_separation = separation;
        si.matrix.resize(m_ant, n_ant);
        Real energy = Real(0);
        for (Index n = 0; n < n_ant; ++n)
            for (Index m = 0; m < m_ant; ++m)
            {
                const Real dx = rx.position(m) - tx.position(n);
                const Real r = std::sqrt(separation * separation + dx * dx);
                si.matrix(m, n) = std::polar(Real(1) / r, -k * r);
                energy += Real(1) / (r * r);
            }
        si.matrix *= std::sqrt(Real(m_ant * n_ant) / energy);
        return si;
    }

    /// sum_k alpha_k exp(-j 2pi tau_k p df) a_M(theta_k) a_N(theta_k)^H
    template <typename Real>
    CMatrix<Real> radar_response(std::span<const TargetState<Real>> targets, Index subcarrier, Real subcarrier_spacing,
                                 const ArrayGeometry<Real> &tx, const ArrayGeometry<Real> &rx)
    {
        CMatrix<Real> h = CMatrix<Real>::Zero(rx.n_elements, tx.n_elements);
        for (const auto &t : targets)
        {
            const Real phase = -Real(2) * pi_v<Real> * t.delay * Real(subcarrier) * subcarrier_spacing;
            const Complex<Real> gain = t.reflection * std::polar(Real(1), phase);
            h.noalias() += gain * steering_vector(rx, t.doa) * steering_vector(tx, t.doa).adjoint();
        }
        return h;
    }

    /// beta draw for a DL scatterer: |beta|^2 = 10^(-pathloss/10), uniform phase.
    template <typename Real>
    Complex<Real> draw_dl_gain(Real pathloss_db, Rng &rng)
    {
        return std::pow(Real(10), -pathloss_db / Real(20)) * random_phase<Real>(rng);
    }

    /// beta a_L(phi) a_N(theta)^H for a DL scatterer.
    template <typename Real>
    DlChannel<Real> build_dl_channel(const TargetState<Real> &target, const ArrayGeometry<Real> &user,
                                     const ArrayGeometry<Real> &bs_tx)
    {
        if (!target.is_dl_scatterer)
            throw InvalidInput("build_dl_channel: target is not a DL scatterer");
        DlChannel<Real> dl;
        dl.matrix = target.dl_gain * steering_vector(user, target.dl_user_doa) * steering_vector(bs_tx, target.doa).adjoint();
        const Real g = std::abs(target.dl_gain);
        dl.pathloss_db = g > Real(0) ? -Real(20) * std::log10(g) : std::numeric_limits<Real>::infinity();
        return dl;
    }

    /// One subframe of constant-speed circular motion about the BS; per-target speeds.
    /// Ranges stay fixed; alpha and beta keep their magnitudes and get fresh phases.
    template <typename Real>
    std::vector<TargetState<Real>> evolve_targets(std::span<const TargetState<Real>> state, std::span<const Real> velocities,
                                                  Real subframe_duration, Rng &rng)
    {
        if (!(subframe_duration > Real(0)))
            throw InvalidInput("evolve_targets: subframe duration must be > 0");
        if (velocities.size() != state.size())
            throw InvalidInput("evolve_targets: one velocity per target required");
        std::vector<TargetState<Real>> next(state.begin(), state.end());
        for (std::size_t k = 0; k < next.size(); ++k)
        {
            auto &t = next[k];
            t.doa += std::atan(velocities[k] * subframe_duration / t.range);
            t.reflection = std::abs(t.reflection) * random_phase<Real>(rng);
            if (t.is_dl_scatterer)
                t.dl_gain = std::abs(t.dl_gain) * random_phase<Real>(rng);
        }
        return next;
    }

    template <typename Real>
    std::vector<TargetState<Real>> evolve_targets(std::span<const TargetState<Real>> state, Real velocity,
                                                  Real subframe_duration, Rng &rng)
    {
        const std::vector<Real> v(state.size(), velocity);
        return evolve_targets<Real>(state, std::span<const Real>(v), subframe_duration, rng);
    }

    /// Angular step per subframe for a target at `range` moving at `velocity`.
    template <typename Real>
    Real angular_step(Real velocity, Real subframe_duration, Real range)
    {
        return std::atan(velocity * subframe_duration / range);
    }
}

#endif
