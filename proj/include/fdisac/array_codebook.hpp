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

#ifndef FDISAC_ARRAY_CODEBOOK_HPP
#define FDISAC_ARRAY_CODEBOOK_HPP

#include "fdisac/common.hpp"

#include <span>

namespace fdisac
{
    /// Uniform linear array. Element i sits at array_offset + i * element_spacing along the array axis.
    template <typename Real = double>
    struct ArrayGeometry
    {
        Index n_elements = 1;
        Real element_spacing = Real(0.5);
        Real wavelength = Real(1);
        Real array_offset = Real(0);

        static ArrayGeometry half_wavelength(Index n, Real wavelength, Real offset = Real(0))
        {
            return {n, wavelength / Real(2), wavelength, offset};
        }

        void validate() const
        {
            if (n_elements < 1)
                throw InvalidInput("ArrayGeometry: n_elements must be >= 1");
            if (!(element_spacing > Real(0)))
                throw InvalidInput("ArrayGeometry: element_spacing must be > 0");
            if (!(wavelength > Real(0)))
                throw InvalidInput("ArrayGeometry: wavelength must be > 0");
        }

        Real position(Index i) const { return array_offset + Real(i) * element_spacing; }
    };

    /// ULA response toward theta (radians from broadside):
    /// [a]_i = exp(-j 2pi/lambda * i * d * sin(theta)) / sqrt(N), i = 0..N-1.
    template <typename Real>
    CVector<Real> steering_vector(const ArrayGeometry<Real> &geometry, Real theta)
    {
        geometry.validate();
        const Index n = geometry.n_elements;
        const Real scale = Real(1) / std::sqrt(Real(n));
        const Real step = -Real(2) * pi_v<Real> / geometry.wavelength * geometry.element_spacing * std::sin(theta);
        CVector<Real> a(n);
        for (Index i = 0; i < n; ++i)
            a(i) = std::polar(scale, step * Real(i));
        return a;
    }

    template <typename Real = double>
    struct BeamCodebook
    {
        std::vector<CVector<Real>> beams;
        int bits = 0;

        Index size() const { return static_cast<Index>(beams.size()); }
        Index n_subarray() const { return beams.empty() ? 0 : beams.front().size(); }
        const CVector<Real> &operator[](Index k) const { return beams[static_cast<std::size_t>(k)]; }
    };

    /// Oversampled DFT codebook: beam k steers to sin(theta_k) = -1 + 2k / 2^bits on a subarray
    /// with the given spacing (in wavelengths). 2^bits = n_subarray gives the critically sampled DFT.
    template <typename Real = double>
    BeamCodebook<Real> dft_codebook(int bits, Index n_subarray, Real spacing_wavelengths = Real(0.5))
    {
        if (bits < 1 || bits > 20)
            throw InvalidInput("dft_codebook: bits must be in [1, 20]");
        if (n_subarray < 1)
            throw InvalidInput("dft_codebook: n_subarray must be >= 1");
        const ArrayGeometry<Real> sub{n_subarray, spacing_wavelengths, Real(1), Real(0)};
        const Index n_beams = Index(1) << bits;
        BeamCodebook<Real> book;
        book.bits = bits;
        book.beams.reserve(static_cast<std::size_t>(n_beams));
        for (Index k = 0; k < n_beams; ++k)
        {
            const Real u = Real(-1) + Real(2 * k) / Real(n_beams);
            book.beams.push_back(steering_vector(sub, std::asin(std::clamp(u, Real(-1), Real(1)))));
        }
        return book;
    }

    /// Partially-connected analog beamformer: chain r drives rows r*n_sub .. (r+1)*n_sub-1 only.
    template <typename Real = double>
    struct AnalogBeamformer
    {
        std::vector<CVector<Real>> per_chain_beams;
        std::vector<Index> beam_indices; // codebook index per chain, -1 when not taken from a codebook
        CMatrix<Real> assembled;

        Index n_chains() const { return static_cast<Index>(per_chain_beams.size()); }
        Index n_subarray() const { return per_chain_beams.empty() ? 0 : per_chain_beams.front().size(); }
        Index n_antennas() const { return assembled.rows(); }
    };

    template <typename Real>
    AnalogBeamformer<Real> assemble_analog(std::span<const CVector<Real>> beams, std::vector<Index> indices = {})
    {
        if (beams.empty())
            throw InvalidInput("assemble_analog: need at least one beam");
        const Index n_sub = beams.front().size();
        for (const auto &b : beams)
            if (b.size() != n_sub)
                throw InvalidInput("assemble_analog: beams must share a common length");
        const Index r = static_cast<Index>(beams.size());
        if (indices.empty())
            indices.assign(beams.size(), Index(-1));
        if (static_cast<Index>(indices.size()) != r)
            throw InvalidInput("assemble_analog: index list length differs from beam count");

        AnalogBeamformer<Real> out;
        out.per_chain_beams.assign(beams.begin(), beams.end());
        out.beam_indices = std::move(indices);
        out.assembled = CMatrix<Real>::Zero(r * n_sub, r);
        for (Index c = 0; c < r; ++c)
            out.assembled.block(c * n_sub, c, n_sub, 1) = beams[static_cast<std::size_t>(c)];
        return out;
    }

    template <typename Real>
    AnalogBeamformer<Real> assemble_analog(const BeamCodebook<Real> &codebook, const std::vector<Index> &indices)
    {
        std::vector<CVector<Real>> beams;
        beams.reserve(indices.size());
        for (Index k : indices)
        {
            if (k < 0 || k >= codebook.size())
                throw InvalidInput("assemble_analog: codebook index out of range");
            beams.push_back(codebook[k]);
        }
        return assemble_analog<Real>(std::span<const CVector<Real>>(beams), indices);
    }
}

#endif
