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

#ifndef FDISAC_BEAMFORMER_OPTIMIZER_HPP
#define FDISAC_BEAMFORMER_OPTIMIZER_HPP

#include "fdisac/channel_models.hpp"
#include "fdisac/si_cancellation.hpp"
#include "fdisac/waveform.hpp"

#include <Eigen/SVD>

namespace fdisac
{
    // Singular values below this fraction of the largest one count as zero when
    // sizing null spaces for block diagonalization.
    template <typename Real>
    constexpr Real null_space_tolerance = Real(1e-10);

    template <typename Real = double>
    struct BeamformerSet
    {
        AnalogBeamformer<Real> v_rf; // N x N_RF
        AnalogBeamformer<Real> w_rf; // M x M_RF
        CMatrix<Real> v_bb;          // N_RF x UL
        CancellerPair<Real> cancellers;
        Index effective_streams = 0;  // alpha accepted by the subspace-shrink loop
        CMatrix<Real> si_effective;   // W_RF^H H_SI_hat V_RF the design was based on
    };

    /// Beam directions from the previous subframe and H_R = sum_k a_M(theta_k) a_N(theta_k)^H.
    template <typename Real = double>
    struct RadarPrior
    {
        std::vector<Real> doas;
        CMatrix<Real> composite;
        std::vector<CVector<Real>> rx_steering; // a_M(theta_k), one per prior
        std::vector<CVector<Real>> tx_steering; // a_N(theta_k)

        static RadarPrior make(std::vector<Real> doas, const ArrayGeometry<Real> &rx, const ArrayGeometry<Real> &tx)
        {
            RadarPrior prior;
            prior.composite = CMatrix<Real>::Zero(rx.n_elements, tx.n_elements);
            for (Real theta : doas)
            {
                prior.rx_steering.push_back(steering_vector(rx, theta));
                prior.tx_steering.push_back(steering_vector(tx, theta));
                prior.composite.noalias() += prior.rx_steering.back() * prior.tx_steering.back().adjoint();
            }
            prior.doas = std::move(doas);
            return prior;
        }
    };

    /**
     * How RF chains share the radar objective.
     *
     * joint: every chain maximizes its share of ||H_R V||^2. The terms of H_R are summed before the
     * scan, so with well-separated priors all chains settle on the single strongest direction.
     *
     * per_target: chain r of R only sees the term of prior floor(r K / R), which spreads the chains
     * over all priors in contiguous groups. Adjacent subarrays keep the grating lobes of a group on
     * the nulls of the subarray pattern. With K = 1 both rules coincide.
     */
    enum class BeamAssignment
    {
        joint,
        per_target
    };

    namespace detail
    {
        template <typename Real>
        void require_terms(const RadarPrior<Real> &prior, const char *who)
        {
            if (prior.rx_steering.size() != prior.doas.size() || prior.tx_steering.size() != prior.doas.size() ||
                prior.doas.empty())
                throw InvalidInput(std::string(who) + ": per_target assignment needs a prior built by RadarPrior::make");
        }
    }

    namespace detail
    {
        inline std::size_t assigned_prior(Index chain, Index n_chains, std::size_t n_priors)
        {
            return static_cast<std::size_t>(chain) * n_priors / static_cast<std::size_t>(n_chains);
        }
    }

    /// Per-chain codebook argmax. Under joint assignment the objective is ||H_R^(n) v||^2; ||H_R V||_F^2
    /// splits into a sum over chains because V is block diagonal, so the per-chain scan is the exact
    /// joint maximizer. Ties go to the lowest codebook index.
    template <typename Real>
    AnalogBeamformer<Real> select_tx_analog(const RadarPrior<Real> &prior, const BeamCodebook<Real> &codebook,
                                            BeamAssignment assignment = BeamAssignment::joint)
    {
        const Index n_sub = codebook.n_subarray();
        if (n_sub < 1 || prior.composite.cols() % n_sub != 0)
            throw InvalidInput("select_tx_analog: TX array size is not a multiple of the subarray size");
        const Index n_rf = prior.composite.cols() / n_sub;
        if (assignment == BeamAssignment::per_target)
            detail::require_terms(prior, "select_tx_analog");

        std::vector<Index> chosen(static_cast<std::size_t>(n_rf), 0);
        for (Index n = 0; n < n_rf; ++n)
        {
            CMatrix<Real> block;
            if (assignment == BeamAssignment::joint)
                block = prior.composite.middleCols(n * n_sub, n_sub);
            else
            {
                const auto k = detail::assigned_prior(n, n_rf, prior.doas.size());
                block = prior.rx_steering[k] * prior.tx_steering[k].segment(n * n_sub, n_sub).adjoint();
            }
            Real best = Real(-1);
            for (Index k = 0; k < codebook.size(); ++k)
            {
                const Real obj = (block * codebook[k]).squaredNorm();
                if (obj > best)
                {
                    best = obj;
                    chosen[static_cast<std::size_t>(n)] = k;
                }
            }
        }
        return assemble_analog(codebook, chosen);
    }

    /// Per-chain argmax of ||w^H H_R^(m) V_RF||^2 / (||w^H H_SI^(m) V_RF||^2 + eps),
    /// eps = 1e-12 ||H_SI V_RF||_F^2 (1 when the SI estimate is exactly zero).
    /// Under per_target assignment H_R is replaced by the term of the chain's assigned prior.
    template <typename Real>
    AnalogBeamformer<Real> select_rx_analog(const RadarPrior<Real> &prior, const CMatrix<Real> &si,
                                            const AnalogBeamformer<Real> &v_rf, const BeamCodebook<Real> &codebook,
                                            BeamAssignment assignment = BeamAssignment::joint)
    {
        const Index m_sub = codebook.n_subarray();
        const Index m_ant = prior.composite.rows();
        if (m_sub < 1 || m_ant % m_sub != 0)
            throw InvalidInput("select_rx_analog: RX array size is not a multiple of the subarray size");
        if (si.rows() != m_ant || si.cols() != v_rf.n_antennas() || prior.composite.cols() != v_rf.n_antennas())
            throw InvalidInput("select_rx_analog: SI/prior/TX beamformer shapes disagree");
        const Index m_rf = m_ant / m_sub;
        if (assignment == BeamAssignment::per_target)
            detail::require_terms(prior, "select_rx_analog");

        const CMatrix<Real> radar = prior.composite * v_rf.assembled;
        const CMatrix<Real> leak = si * v_rf.assembled;
        const Real base = leak.squaredNorm();
        const Real eps = base > Real(0) ? Real(1e-12) * base : Real(1);

        std::vector<Index> chosen(static_cast<std::size_t>(m_rf), 0);
        for (Index m = 0; m < m_rf; ++m)
        {
            CMatrix<Real> num_block;
            if (assignment == BeamAssignment::joint)
                num_block = radar.middleRows(m * m_sub, m_sub);
            else
            {
                const auto k = detail::assigned_prior(m, m_rf, prior.doas.size());
                num_block = prior.rx_steering[k].segment(m * m_sub, m_sub) *
                            (prior.tx_steering[k].adjoint() * v_rf.assembled);
            }
            const auto den_block = leak.middleRows(m * m_sub, m_sub);
            Real best = Real(-1);
            for (Index k = 0; k < codebook.size(); ++k)
            {
                const auto &w = codebook[k];
                const Real num = (w.adjoint() * num_block).squaredNorm();
                const Real den = (w.adjoint() * den_block).squaredNorm() + eps;
                const Real ratio = num / den;
                if (ratio > best)
                {
                    best = ratio;
                    chosen[static_cast<std::size_t>(m)] = k;
                }
            }
        }
        return assemble_analog(codebook, chosen);
    }

    template <typename Real = double>
    struct BdPrecoder
    {
        std::vector<CMatrix<Real>> per_user; // alpha x L each
        CMatrix<Real> stacked;               // alpha x UL
    };

    namespace detail
    {
        // Orthonormal basis of the null space of h (columns), from the full right singular basis.
        template <typename Real>
        CMatrix<Real> null_space(const CMatrix<Real> &h)
        {
            const Index n = h.cols();
            if (h.rows() == 0)
                return CMatrix<Real>::Identity(n, n);
            Eigen::JacobiSVD<CMatrix<Real>> svd(h, Eigen::ComputeFullV);
            const auto &sv = svd.singularValues();
            const Real top = sv.size() > 0 ? sv(0) : Real(0);
            Index rank = 0;
            for (Index i = 0; i < sv.size(); ++i)
                if (sv(i) > null_space_tolerance<Real> * top && sv(i) > Real(0))
                    ++rank;
            return svd.matrixV().rightCols(n - rank);
        }
    }

    /**
     * Block diagonalization over effective channels H_eff,u (L x alpha): user u's precoder lives in
     * the null space of every other user's channel and takes its top-L right singular directions there.
     *
     * When H_eff,u has rank r < L inside that null space, the last L - r directions have singular value
     * zero and any orthonormal completion is a valid choice. Given `radar` (K x alpha, rows a_N^H(theta_k)
     * V_RF in effective coordinates), those directions are filled user by user, each one maximizing the
     * part of its target illumination R g that earlier streams do not already produce. This keeps the
     * echoes of different targets from sharing one waveform. Without `radar` the SVD's own completion
     * is kept.
     */
    template <typename Real>
    BdPrecoder<Real> bd_precoder(std::span<const CMatrix<Real>> h_eff, Real tx_power, const CMatrix<Real> &radar = {})
    {
        if (h_eff.empty())
            throw InvalidInput("bd_precoder: no users");
        const Index n_users = static_cast<Index>(h_eff.size());
        const Index alpha = h_eff.front().cols();
        const Index streams = h_eff.front().rows();
        for (const auto &h : h_eff)
            if (h.cols() != alpha || h.rows() != streams)
                throw InvalidInput("bd_precoder: users must share the stream count and effective dimension");
        if (radar.size() > 0 && radar.cols() != alpha)
            throw InvalidInput("bd_precoder: radar rows must have alpha columns");

        struct UserBasis
        {
            CMatrix<Real> e_bar; // null space of the other users
            CMatrix<Real> v;     // right singular basis of H_eff,u e_bar
            Index rank = 0;
        };
        std::vector<UserBasis> basis(static_cast<std::size_t>(n_users));
        for (Index u = 0; u < n_users; ++u)
        {
            CMatrix<Real> others((n_users - 1) * streams, alpha);
            for (Index v = 0, row = 0; v < n_users; ++v)
                if (v != u)
                {
                    others.middleRows(row, streams) = h_eff[static_cast<std::size_t>(v)];
                    row += streams;
                }
            auto &b = basis[static_cast<std::size_t>(u)];
            b.e_bar = detail::null_space(others);
            if (b.e_bar.cols() < streams)
                throw RankDeficiency("bd_precoder: null space of the other users' channels has dimension " +
                                     std::to_string(b.e_bar.cols()) + " < L = " + std::to_string(streams));
            Eigen::JacobiSVD<CMatrix<Real>> svd(h_eff[static_cast<std::size_t>(u)] * b.e_bar, Eigen::ComputeFullV);
            b.v = svd.matrixV();
            const auto &sv = svd.singularValues();
            const Real top = sv.size() > 0 ? sv(0) : Real(0);
            for (Index i = 0; i < std::min<Index>(sv.size(), streams); ++i)
                if (sv(i) > null_space_tolerance<Real> * top && sv(i) > Real(0))
                    ++b.rank;
        }

        std::vector<CMatrix<Real>> e(static_cast<std::size_t>(n_users));
        for (Index u = 0; u < n_users; ++u)
            e[static_cast<std::size_t>(u)] = basis[static_cast<std::size_t>(u)].v.leftCols(streams);

        if (radar.size() > 0)
        {
            // illumination already produced, as columns in target space
            CMatrix<Real> lit(radar.rows(), 0);
            for (Index u = 0; u < n_users; ++u)
            {
                const auto &b = basis[static_cast<std::size_t>(u)];
                const CMatrix<Real> main = radar * b.e_bar * b.v.leftCols(b.rank);
                lit.conservativeResize(Eigen::NoChange, lit.cols() + main.cols());
                lit.rightCols(main.cols()) = main;
            }
            for (Index u = 0; u < n_users; ++u)
            {
                const auto &b = basis[static_cast<std::size_t>(u)];
                auto &eu = e[static_cast<std::size_t>(u)];
                for (Index j = b.rank; j < streams; ++j)
                {
                    // candidates: unit vectors in span of the unused singular directions, orthogonal to fills so far
                    CMatrix<Real> unused = b.v.rightCols(b.e_bar.cols() - b.rank);
                    if (j > b.rank)
                    {
                        const CMatrix<Real> taken = eu.middleCols(b.rank, j - b.rank);
                        unused = detail::null_space<Real>(taken.adjoint() * unused);
                        unused = b.v.rightCols(b.e_bar.cols() - b.rank) * unused;
                    }
                    CMatrix<Real> reach = radar * b.e_bar * unused;
                    if (lit.cols() > 0)
                    {
                        Eigen::JacobiSVD<CMatrix<Real>> q(lit, Eigen::ComputeThinU);
                        Index r = 0;
                        for (Index i = 0; i < q.singularValues().size(); ++i)
                            if (q.singularValues()(i) > null_space_tolerance<Real> * q.singularValues()(0))
                                ++r;
                        const CMatrix<Real> qu = q.matrixU().leftCols(r);
                        reach -= qu * (qu.adjoint() * reach);
                    }
                    Eigen::JacobiSVD<CMatrix<Real>> fill(reach, Eigen::ComputeFullV);
                    eu.col(j) = unused * fill.matrixV().col(0);
                    lit.conservativeResize(Eigen::NoChange, lit.cols() + 1);
                    lit.col(lit.cols() - 1) = radar * b.e_bar * eu.col(j);
                }
            }
        }

        const Real scale = std::sqrt(tx_power / Real(n_users));
        BdPrecoder<Real> out;
        out.stacked.resize(alpha, n_users * streams);
        for (Index u = 0; u < n_users; ++u)
        {
            CMatrix<Real> g = scale * basis[static_cast<std::size_t>(u)].e_bar * e[static_cast<std::size_t>(u)];
            out.stacked.middleCols(u * streams, streams) = g;
            out.per_user.push_back(std::move(g));
        }
        return out;
    }

    template <typename Real = double>
    struct OptimizerInput
    {
        CMatrix<Real> si_channel;               // H_SI estimate, M x N
        std::vector<CMatrix<Real>> dl_channels; // H_DL,u estimates, L x N
        Index n_taps = 0;
        Real tx_power = Real(1);    // P_b, mW per resource element
        Real saturation = Real(1);  // rho_b, mW
        RadarPrior<Real> prior;
        std::optional<KnowledgeError<Real>> knowledge_error;
        BeamAssignment assignment = BeamAssignment::joint;
        bool radar_fill = false; // steer zero-gain BD streams at the priors (see bd_precoder)
    };

    enum class OptimizerStatus
    {
        accepted,
        saturation_failure
    };

    template <typename Real = double>
    struct AlphaStep
    {
        Index alpha = 0;
        RVector<Real> row_power; // ||[(H_eff + C) V_BB]_(m,:)||^2
        bool accepted = false;
    };

    template <typename Real = double>
    struct OptimizerOutcome
    {
        OptimizerStatus status = OptimizerStatus::accepted;
        BeamformerSet<Real> set; // on failure: the last candidate evaluated
        std::vector<AlphaStep<Real>> trace;
        std::string diagnostic;

        bool ok() const { return status == OptimizerStatus::accepted; }
    };

    /**
     * Joint analog beam selection, SI canceller design and BD digital precoding for one subframe.
     *
     * TX beams maximize the prior radar response, RX beams the radar-to-SI ratio. The analog
     * canceller takes N_C taps on the effective channel; B holds the right singular vectors of the
     * post-analog residual in descending order. The precoder is then confined to the last alpha
     * columns of B (the weakest residual-SI directions), shrinking alpha from N_RF to 2 until every RX
     * chain passes the saturation check. V_BB is rescaled so that ||V_RF V_BB||_F^2 = P_b.
     *
     * A run where no alpha passes returns saturation_failure carrying the smallest-alpha candidate.
     * Running out of null-space dimensions below N_RF ends the shrink loop the same way; at alpha =
     * N_RF it throws RankDeficiency.
     */
    template <typename Real>
    OptimizerOutcome<Real> optimize_subframe(const OptimizerInput<Real> &in, const BeamCodebook<Real> &tx_codebook,
                                             const BeamCodebook<Real> &rx_codebook)
    {
        if (in.prior.doas.empty())
            throw InvalidInput("optimize_subframe: at least one radar prior is required");
        if (in.dl_channels.empty())
            throw InvalidInput("optimize_subframe: at least one DL user is required");
        if (in.si_channel.rows() != in.prior.composite.rows() || in.si_channel.cols() != in.prior.composite.cols())
            throw InvalidInput("optimize_subframe: SI channel and radar prior shapes differ");
        for (const auto &h : in.dl_channels)
            if (h.cols() != in.si_channel.cols())
                throw InvalidInput("optimize_subframe: DL channel width differs from the TX array size");

        OptimizerOutcome<Real> out;
        auto &set = out.set;
        set.v_rf = select_tx_analog(in.prior, tx_codebook, in.assignment);
        set.w_rf = select_rx_analog(in.prior, in.si_channel, set.v_rf, rx_codebook, in.assignment);

        const Index n_rf = set.v_rf.n_chains();
        if (in.n_taps < 0 || in.n_taps > n_rf * set.w_rf.n_chains())
            throw InvalidInput("optimize_subframe: N_C must lie in [0, N_RF*M_RF]");
        set.si_effective = set.w_rf.assembled.adjoint() * in.si_channel * set.v_rf.assembled;
        std::vector<CMatrix<Real>> dl_eff;
        dl_eff.reserve(in.dl_channels.size());
        for (const auto &h : in.dl_channels)
            dl_eff.push_back(h * set.v_rf.assembled);

        CMatrix<Real> radar_eff;
        if (in.radar_fill)
        {
            detail::require_terms(in.prior, "optimize_subframe");
            radar_eff.resize(static_cast<Index>(in.prior.doas.size()), n_rf);
            for (std::size_t k = 0; k < in.prior.doas.size(); ++k)
                radar_eff.row(static_cast<Index>(k)) = in.prior.tx_steering[k].adjoint() * set.v_rf.assembled;
        }

        set.cancellers.n_taps = in.n_taps;
        set.cancellers.analog = design_analog_canceller(set.si_effective, in.n_taps);
        const CMatrix<Real> after_analog = set.si_effective + set.cancellers.analog;
        Eigen::JacobiSVD<CMatrix<Real>> svd(after_analog, Eigen::ComputeFullV);
        const CMatrix<Real> basis = svd.matrixV();

        bool accepted = false;
        for (Index alpha = n_rf; alpha >= 2; --alpha)
        {
            const CMatrix<Real> f = basis.rightCols(alpha);
            std::vector<CMatrix<Real>> h_eff;
            h_eff.reserve(dl_eff.size());
            for (const auto &h : dl_eff)
                h_eff.push_back(h * f);

            BdPrecoder<Real> bd;
            try
            {
                bd = bd_precoder<Real>(std::span<const CMatrix<Real>>(h_eff), in.tx_power,
                                       in.radar_fill ? CMatrix<Real>(radar_eff * f) : CMatrix<Real>());
            }
            catch (const RankDeficiency &e)
            {
                if (alpha == n_rf)
                    throw;
                out.diagnostic += "alpha=" + std::to_string(alpha) + ": " + e.what() + "; ";
                break;
            }

            CMatrix<Real> v_bb = f * bd.stacked;
            const Real norm = (set.v_rf.assembled * v_bb).norm();
            if (norm > Real(0))
                v_bb *= std::sqrt(in.tx_power) / norm;

            AlphaStep<Real> step;
            step.alpha = alpha;
            step.row_power = (after_analog * v_bb).rowwise().squaredNorm();
            step.accepted = (step.row_power.array() <= in.saturation).all();
            out.trace.push_back(step);

            set.v_bb = std::move(v_bb);
            set.effective_streams = alpha;
            if (step.accepted)
            {
                accepted = true;
                break;
            }
            out.diagnostic += "alpha=" + std::to_string(alpha) + ": C does not meet the residual SI constraint; ";
        }

        set.cancellers.digital = design_digital_canceller(set.si_effective, set.cancellers.analog, in.knowledge_error);
        out.status = accepted ? OptimizerStatus::accepted : OptimizerStatus::saturation_failure;
        return out;
    }

    /// ||W^H H_R V_RF V_BB||_F^2 / (||(H_eff + C + D) V_BB||_F^2 + ||W_RF||_F^2 sigma_b^2)
    template <typename Real>
    Real radar_snr(const RadarPrior<Real> &prior, const BeamformerSet<Real> &set, Real noise_variance)
    {
        const Real signal = (set.w_rf.assembled.adjoint() * prior.composite * set.v_rf.assembled * set.v_bb).squaredNorm();
        const Real residual = ((set.si_effective + set.cancellers.analog + set.cancellers.digital) * set.v_bb).squaredNorm();
        return signal / (residual + set.w_rf.assembled.squaredNorm() * noise_variance);
    }

    /// sum_u ||H_DL,u V_RF V_BB||_F^2 / sigma_u^2
    template <typename Real>
    Real dl_snr_sum(std::span<const CMatrix<Real>> dl_channels, const BeamformerSet<Real> &set, Real noise_variance)
    {
        const CMatrix<Real> t = set.v_rf.assembled * set.v_bb;
        Real total = Real(0);
        for (const auto &h : dl_channels)
            total += (h * t).squaredNorm();
        return total / noise_variance;
    }
}

#endif
