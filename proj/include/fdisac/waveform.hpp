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

#ifndef FDISAC_WAVEFORM_HPP
#define FDISAC_WAVEFORM_HPP

#include "fdisac/channel_models.hpp"

namespace fdisac
{
    enum class GridStage
    {
        symbols,
        tx_antenna,
        rx_antenna,
        rx_chain,
        user_rx
    };

    /**
     * Frequency-domain resource grid of one subframe.
     *
     * Stored as a width x (P*Q) matrix; resource element (p, q) is column q*P + p, so every
     * per-stage linear map is a single matrix product over the whole subframe.
     *
     * A grid may instead carry a low-rank factorization data = left * right (the TX grid is
     * V_RF V_BB times the symbols). Products against it are then evaluated right-to-left.
     */
    template <typename Real = double>
    struct SubframeGrid
    {
        struct Factors
        {
            CMatrix<Real> left;
            CMatrix<Real> right;
        };

        GridStage stage = GridStage::symbols;
        Index n_subcarriers = 0;
        Index n_symbols = 0;
        CMatrix<Real> data;
        std::optional<Factors> factors;

        Index width() const { return factors ? factors->left.rows() : data.rows(); }
        Index n_elements() const { return n_subcarriers * n_symbols; }
        Index column(Index p, Index q) const { return q * n_subcarriers + p; }

        CMatrix<Real> dense() const { return factors ? CMatrix<Real>(factors->left * factors->right) : data; }

        CVector<Real> element(Index p, Index q) const
        {
            const Index j = column(p, q);
            if (factors)
                return factors->left * factors->right.col(j);
            return data.col(j);
        }

        /// h * grid without forming the dense grid when a factorization is present.
        template <typename Derived>
        CMatrix<Real> left_multiplied(const Eigen::MatrixBase<Derived> &h) const
        {
            if (h.cols() != width())
                throw InvalidInput("SubframeGrid: operator width does not match grid width");
            if (factors)
                return (h * factors->left) * factors->right;
            return h * data;
        }
    };

    template <typename Real = double>
    struct NoiseSpec
    {
        Real variance_bs = Real(0);   // mW per resource element
        Real variance_user = Real(0); // mW per resource element

        static NoiseSpec from_dbm(Real bs_dbm, Real user_dbm)
        {
            return {dbm_to_mw(bs_dbm), dbm_to_mw(user_dbm)};
        }
    };

    /// BS array geometry plus numerology needed to synthesize radar echoes.
    template <typename Real = double>
    struct RadarFrontEnd
    {
        ArrayGeometry<Real> tx;
        ArrayGeometry<Real> rx;
        Real subcarrier_spacing = Real(120e3);
    };

    /// Unit-modulus QPSK symbols, UL streams stacked user-major.
    template <typename Real = double>
    SubframeGrid<Real> generate_symbols(Index n_subcarriers, Index n_symbols, Index n_users, Index streams_per_user,
                                        Index n_rf, std::uint64_t seed)
    {
        if (n_subcarriers < 1 || n_symbols < 1 || n_users < 1 || streams_per_user < 1)
            throw InvalidInput("generate_symbols: dimensions must be positive");
        if (n_users * streams_per_user > n_rf)
            throw InvalidInput("generate_symbols: U*L exceeds the number of TX RF chains");
        const Index width = n_users * streams_per_user;
        SubframeGrid<Real> grid;
        grid.stage = GridStage::symbols;
        grid.n_subcarriers = n_subcarriers;
        grid.n_symbols = n_symbols;
        grid.data.resize(width, n_subcarriers * n_symbols);

        Rng rng(derive_seed(seed, stream::symbols));
        const Real a = Real(1) / std::sqrt(Real(2));
        for (Index j = 0; j < grid.data.cols(); ++j)
            for (Index s = 0; s < width; ++s)
            {
                const auto bits = rng();
                grid.data(s, j) = {(bits & 1U) ? -a : a, (bits & 2U) ? -a : a};
            }
        return grid;
    }

    /// x = V_RF V_BB s per resource element. The result keeps the factorization.
    template <typename Real>
    SubframeGrid<Real> tx_precode(const SubframeGrid<Real> &symbols, const AnalogBeamformer<Real> &v_rf,
                                  const CMatrix<Real> &v_bb)
    {
        if (symbols.stage != GridStage::symbols)
            throw InvalidInput("tx_precode: expected a symbol grid");
        if (v_bb.cols() != symbols.width() || v_rf.assembled.cols() != v_bb.rows())
            throw InvalidInput("tx_precode: dimension chain N x N_RF x UL is inconsistent");
        SubframeGrid<Real> out;
        out.stage = GridStage::tx_antenna;
        out.n_subcarriers = symbols.n_subcarriers;
        out.n_symbols = symbols.n_symbols;
        out.factors = typename SubframeGrid<Real>::Factors{v_rf.assembled * v_bb, symbols.dense()};
        return out;
    }

    namespace detail
    {
        // Adds CN(0, variance) to every entry. Subcarrier p draws from its own sub-stream, so the
        // output is identical for any thread count.
        template <typename Real>
        void add_noise(SubframeGrid<Real> &grid, Real variance, std::uint64_t seed, std::uint64_t tag, int threads)
        {
            if (!(variance > Real(0)))
                return;
            const Index p_count = grid.n_subcarriers;
            const Index q_count = grid.n_symbols;
            const Index rows = grid.data.rows();
            parallel_for(p_count, threads, [&](Index p)
                         {
                             Rng rng(derive_seed(seed, tag, static_cast<std::uint64_t>(p)));
                             std::normal_distribution<Real> n(Real(0), std::sqrt(variance / Real(2)));
                             for (Index q = 0; q < q_count; ++q)
                             {
                                 auto col = grid.data.col(q * p_count + p);
                                 for (Index m = 0; m < rows; ++m)
                                 {
                                     const Real re = n(rng);
                                     const Real im = n(rng);
                                     col(m) += Complex<Real>(re, im);
                                 }
                             } });
        }
    }

    /// y = sum_k alpha_k e^{-j2pi tau_k p df} a_M a_N^H x + H_SI x + n at every resource element.
    template <typename Real>
    SubframeGrid<Real> radar_receive(const SubframeGrid<Real> &tx_grid, std::span<const TargetState<Real>> targets,
                                     const SiChannel<Real> &si, const NoiseSpec<Real> &noise, std::uint64_t seed,
                                     const RadarFrontEnd<Real> &front, int threads = 1)
    {
        if (tx_grid.width() != front.tx.n_elements)
            throw InvalidInput("radar_receive: TX grid width differs from the TX array size");
        if (si.matrix.rows() != front.rx.n_elements || si.matrix.cols() != front.tx.n_elements)
            throw InvalidInput("radar_receive: SI channel shape does not match the arrays");

        SubframeGrid<Real> out;
        out.stage = GridStage::rx_antenna;
        out.n_subcarriers = tx_grid.n_subcarriers;
        out.n_symbols = tx_grid.n_symbols;
        out.data = tx_grid.left_multiplied(si.matrix);

        const Index p_count = tx_grid.n_subcarriers;
        for (const auto &t : targets)
        {
            const CVector<Real> a_rx = steering_vector(front.rx, t.doa);
            const CVector<Real> a_tx = steering_vector(front.tx, t.doa);
            Eigen::Matrix<Complex<Real>, 1, Eigen::Dynamic> coeff = tx_grid.left_multiplied(a_tx.adjoint());
            const Real step = -Real(2) * pi_v<Real> * t.delay * front.subcarrier_spacing;
            for (Index j = 0; j < coeff.size(); ++j)
                coeff(j) *= t.reflection * std::polar(Real(1), step * Real(j % p_count));
            out.data.noalias() += a_rx * coeff;
        }
        detail::add_noise(out, noise.variance_bs, seed, stream::radar_noise, threads);
        return out;
    }

    /// Baseband after combining and cancellation: W_RF^H y + (C + D) V_BB s.
    template <typename Real>
    SubframeGrid<Real> bb_combine(const SubframeGrid<Real> &rx_grid, const AnalogBeamformer<Real> &w_rf,
                                  const CMatrix<Real> &analog, const CMatrix<Real> &digital, const CMatrix<Real> &v_bb,
                                  const SubframeGrid<Real> &symbols)
    {
        const Index m_rf = w_rf.n_chains();
        if (rx_grid.width() != w_rf.n_antennas())
            throw InvalidInput("bb_combine: RX grid width differs from combiner rows");
        if (analog.rows() != m_rf || digital.rows() != m_rf || analog.cols() != v_bb.rows() ||
            digital.cols() != v_bb.rows() || v_bb.cols() != symbols.width() ||
            symbols.n_elements() != rx_grid.n_elements())
            throw InvalidInput("bb_combine: canceller/precoder/symbol dimensions are inconsistent");

        SubframeGrid<Real> out;
        out.stage = GridStage::rx_chain;
        out.n_subcarriers = rx_grid.n_subcarriers;
        out.n_symbols = rx_grid.n_symbols;
        out.data = rx_grid.left_multiplied(w_rf.assembled.adjoint());
        const CMatrix<Real> replica = (analog + digital) * v_bb;
        out.data.noalias() += symbols.left_multiplied(replica);
        return out;
    }

    /// r = H_DL x + z at one user.
    template <typename Real>
    SubframeGrid<Real> user_receive(const SubframeGrid<Real> &tx_grid, const DlChannel<Real> &dl, Real variance_user,
                                    std::uint64_t seed, int threads = 1)
    {
        SubframeGrid<Real> out;
        out.stage = GridStage::user_rx;
        out.n_subcarriers = tx_grid.n_subcarriers;
        out.n_symbols = tx_grid.n_symbols;
        out.data = tx_grid.left_multiplied(dl.matrix);
        detail::add_noise(out, variance_user, seed, stream::user_noise, threads);
        return out;
    }

    /// Row m of (H_eff + C) V_BB is compliant iff its squared norm is <= rho_b.
    template <typename Real>
    std::vector<bool> check_saturation(const CMatrix<Real> &si_plus_analog, const CMatrix<Real> &v_bb, Real rho_b)
    {
        if (si_plus_analog.cols() != v_bb.rows())
            throw InvalidInput("check_saturation: dimension mismatch");
        const RVector<Real> rows = (si_plus_analog * v_bb).rowwise().squaredNorm();
        std::vector<bool> ok(static_cast<std::size_t>(rows.size()));
        for (Index m = 0; m < rows.size(); ++m)
            ok[static_cast<std::size_t>(m)] = rows(m) <= rho_b;
        return ok;
    }
}

#endif
