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

#ifndef FDISAC_ESTIMATION_HPP
#define FDISAC_ESTIMATION_HPP

#include "fdisac/channel_models.hpp"
#include "fdisac/waveform.hpp"

#include <Eigen/Eigenvalues>

#include <numeric>

namespace fdisac
{
    template <typename Real = double>
    struct CovarianceEstimate
    {
        CMatrix<Real> matrix; // M_RF x M_RF, Hermitian PSD
        Index n_snapshots = 0;
    };

    /// (1/PQ) sum over all resource elements of y y^H.
    template <typename Real>
    CovarianceEstimate<Real> sample_covariance(const SubframeGrid<Real> &bb_grid)
    {
        if (bb_grid.n_elements() < 1)
            throw InvalidInput("sample_covariance: empty grid");
        const CMatrix<Real> y = bb_grid.dense();
        CovarianceEstimate<Real> cov;
        cov.n_snapshots = y.cols();
        cov.matrix = CMatrix<Real>::Zero(y.rows(), y.rows());
        cov.matrix.template selfadjointView<Eigen::Lower>().rankUpdate(y, Real(1) / Real(y.cols()));
        cov.matrix = cov.matrix.template selfadjointView<Eigen::Lower>();
        return cov;
    }

    template <typename Real = double>
    struct MusicSpectrum
    {
        std::vector<Real> theta;        // strictly increasing, radians
        std::vector<Real> pseudo_power; // > 0
        Index noise_subspace_dim = 0;
    };

    template <typename Real = double>
    struct MusicResult
    {
        std::vector<Real> doas;    // ascending
        MusicSpectrum<Real> spectrum;
        RVector<Real> eigenvalues; // descending
        bool degenerate = false;   // fewer than K peaks, or no signal/noise eigenvalue gap
    };

    /**
     * MUSIC over the beamspace covariance: P(theta) = 1 / ||U_n^H W_RF^H a_M(theta)||^2 on a uniform
     * grid over [sector_min, sector_max]. The K strongest local maxima (grid points exceeding both
     * neighbours, at least 2 grid steps apart) are returned.
     *
     * With `normalized`, P(theta) is multiplied by ||W_RF^H a_M(theta)||^2. Directions where every
     * analog beam has a null make W_RF^H a_M vanish, so the plain form shows spurious peaks there.
     */
    template <typename Real>
    MusicResult<Real> music_doa(const CovarianceEstimate<Real> &cov, Index n_targets, const AnalogBeamformer<Real> &w_rf,
                                const ArrayGeometry<Real> &rx, Real grid_step, Real sector_min, Real sector_max,
                                bool normalized = false)
    {
        const Index m_rf = cov.matrix.rows();
        if (n_targets < 1 || n_targets >= m_rf)
            throw InvalidInput("music_doa: need 1 <= K < M_RF");
        if (w_rf.n_chains() != m_rf || w_rf.n_antennas() != rx.n_elements)
            throw InvalidInput("music_doa: combiner shape does not match covariance/array");
        if (!(grid_step > Real(0)) || !(sector_max > sector_min))
            throw InvalidInput("music_doa: invalid search grid");

        Eigen::SelfAdjointEigenSolver<CMatrix<Real>> eig(cov.matrix);
        MusicResult<Real> out;
        out.eigenvalues = eig.eigenvalues().reverse();
        const Index noise_dim = m_rf - n_targets;
        // ascending order: the noise subspace is the leading block
        const CMatrix<Real> noise_basis = eig.eigenvectors().leftCols(noise_dim);
        const CMatrix<Real> w_adj = w_rf.assembled.adjoint();

        const Index n_grid = static_cast<Index>(std::floor((sector_max - sector_min) / grid_step + Real(1e-9))) + 1;
        auto &spec = out.spectrum;
        spec.noise_subspace_dim = noise_dim;
        spec.theta.resize(static_cast<std::size_t>(n_grid));
        spec.pseudo_power.resize(static_cast<std::size_t>(n_grid));
        for (Index g = 0; g < n_grid; ++g)
        {
            const Real theta = sector_min + Real(g) * grid_step;
            const CVector<Real> b = w_adj * steering_vector(rx, theta);
            const Real den = (noise_basis.adjoint() * b).squaredNorm();
            const Real num = normalized ? b.squaredNorm() : Real(1);
            constexpr Real tiny = std::numeric_limits<Real>::min();
            spec.theta[static_cast<std::size_t>(g)] = theta;
            spec.pseudo_power[static_cast<std::size_t>(g)] = std::max(num, tiny) / std::max(den, tiny);
        }

        const auto &pw = spec.pseudo_power;
        std::vector<Index> peaks;
        for (Index g = 1; g + 1 < n_grid; ++g)
        {
            const auto i = static_cast<std::size_t>(g);
            if (pw[i] > pw[i - 1] && pw[i] > pw[i + 1])
                peaks.push_back(g);
        }
        auto by_power = [&](Index a, Index b)
        {
            const Real pa = pw[static_cast<std::size_t>(a)];
            const Real pb = pw[static_cast<std::size_t>(b)];
            return pa != pb ? pa > pb : a < b;
        };
        std::sort(peaks.begin(), peaks.end(), by_power);

        std::vector<Index> chosen;
        auto far_enough = [&](Index g)
        {
            return std::all_of(chosen.begin(), chosen.end(), [&](Index c)
                               { return std::abs(c - g) >= 2; });
        };
        for (Index g : peaks)
        {
            if (static_cast<Index>(chosen.size()) == n_targets)
                break;
            if (far_enough(g))
                chosen.push_back(g);
        }
        if (static_cast<Index>(chosen.size()) < n_targets)
        {
            out.degenerate = true;
            std::vector<Index> rest(static_cast<std::size_t>(n_grid));
            std::iota(rest.begin(), rest.end(), Index(0));
            std::sort(rest.begin(), rest.end(), by_power);
            for (Index g : rest)
            {
                if (static_cast<Index>(chosen.size()) == n_targets)
                    break;
                if (far_enough(g))
                    chosen.push_back(g);
            }
        }
        std::sort(chosen.begin(), chosen.end());
        for (Index g : chosen)
            out.doas.push_back(spec.theta[static_cast<std::size_t>(g)]);

        const Real top = out.eigenvalues(0);
        const Real gap = out.eigenvalues(n_targets - 1) - out.eigenvalues(n_targets);
        if (!(top > Real(0)) || gap <= Real(1e-9) * top)
            out.degenerate = true;
        return out;
    }

    template <typename Real = double>
    struct RangeEstimate
    {
        Index bin = 0;            // n*
        Real delay = Real(0);     // n* / (P df)
        Real range = Real(0);     // delay c / 2
        RVector<Real> likelihood; // |A(n)|^2, n = 0..P-1
        Index used_elements = 0;
    };

    /**
     * Quotient-based delay estimation toward a given direction.
     *
     * z_pq averages [W_RF y~_pq]_m / [g_pq]_m over RX antennas, with the reference
     * g_pq = a_M(theta) a_N(theta)^H x_pq. A(n) = sum_q sum_p z_pq e^{j 2pi p n / P} and the delay bin is
     * argmax |A(n)|^2. Reference entries below 1e-12 ||g_pq|| are left out of the average; resource
     * elements with no usable entry are skipped.
     *
     * The W_RF y~ reconstruction is shared by every direction probed on the same subframe.
     */
    template <typename Real = double>
    class RangeEstimator
    {
    public:
        RangeEstimator(const SubframeGrid<Real> &bb_grid, const AnalogBeamformer<Real> &w_rf,
                       const SubframeGrid<Real> &tx_grid, const RadarFrontEnd<Real> &front)
            : tx_grid_(tx_grid), front_(front)
        {
            if (bb_grid.width() != w_rf.n_chains() || w_rf.n_antennas() != front.rx.n_elements)
                throw InvalidInput("range_estimate: combiner does not match baseband grid or RX array");
            if (tx_grid.width() != front.tx.n_elements || tx_grid.n_elements() != bb_grid.n_elements() ||
                tx_grid.n_subcarriers != bb_grid.n_subcarriers)
                throw InvalidInput("range_estimate: TX grid does not match baseband grid");
            reconstruction_ = bb_grid.left_multiplied(w_rf.assembled);
        }

        RangeEstimate<Real> estimate(Real theta_hat) const
        {
            const Index p_count = tx_grid_.n_subcarriers;
            const Index m_ant = front_.rx.n_elements;
            const CVector<Real> a_rx = steering_vector(front_.rx, theta_hat);
            const Eigen::Matrix<Complex<Real>, 1, Eigen::Dynamic> tx_gain =
                tx_grid_.left_multiplied(steering_vector(front_.tx, theta_hat).adjoint());

            // |g_m| = |a_m| |c| and ||g|| = ||a|| |c|, so the exclusion test splits into an
            // antenna mask and a per-element c != 0 check.
            const Real a_norm = a_rx.norm();
            CVector<Real> inv_a = CVector<Real>::Zero(m_ant);
            Index used_antennas = 0;
            for (Index m = 0; m < m_ant; ++m)
                if (std::abs(a_rx(m)) >= Real(1e-12) * a_norm && a_rx(m) != Complex<Real>(0))
                {
                    inv_a(m) = Real(1) / a_rx(m);
                    ++used_antennas;
                }

            CVector<Real> per_subcarrier = CVector<Real>::Zero(p_count);
            RangeEstimate<Real> out;
            if (used_antennas > 0)
                for (Index j = 0; j < reconstruction_.cols(); ++j)
                {
                    const Complex<Real> c = tx_gain(j);
                    if (c == Complex<Real>(0))
                        continue;
                    const Complex<Real> z = (inv_a.transpose() * reconstruction_.col(j)).value() /
                                            (c * Real(used_antennas));
                    per_subcarrier(j % p_count) += z;
                    ++out.used_elements;
                }
            if (out.used_elements == 0)
                throw EstimationFailure("range_estimate: every resource element has a vanishing reference");

            std::vector<Complex<Real>> twiddle(static_cast<std::size_t>(p_count));
            for (Index k = 0; k < p_count; ++k)
                twiddle[static_cast<std::size_t>(k)] = std::polar(Real(1), Real(2) * pi_v<Real> * Real(k) / Real(p_count));

            out.likelihood.resize(p_count);
            Real best = Real(-1);
            for (Index n = 0; n < p_count; ++n)
            {
                Complex<Real> acc(0);
                Index idx = 0;
                for (Index p = 0; p < p_count; ++p)
                {
                    acc += per_subcarrier(p) * twiddle[static_cast<std::size_t>(idx)];
                    idx += n;
                    if (idx >= p_count)
                        idx -= p_count;
                }
                out.likelihood(n) = std::norm(acc);
                if (out.likelihood(n) > best)
                {
                    best = out.likelihood(n);
                    out.bin = n;
                }
            }
            out.delay = Real(out.bin) / (Real(p_count) * front_.subcarrier_spacing);
            out.range = out.delay * Real(speed_of_light) / Real(2);
            return out;
        }

    private:
        const SubframeGrid<Real> &tx_grid_;
        RadarFrontEnd<Real> front_;
        CMatrix<Real> reconstruction_; // W_RF y~, M x PQ
    };

    template <typename Real>
    RangeEstimate<Real> range_estimate(const SubframeGrid<Real> &bb_grid, const AnalogBeamformer<Real> &w_rf,
                                       const SubframeGrid<Real> &tx_grid, Real theta_hat, const RadarFrontEnd<Real> &front)
    {
        return RangeEstimator<Real>(bb_grid, w_rf, tx_grid, front).estimate(theta_hat);
    }

    template <typename Real = double>
    struct EstimationReport
    {
        std::vector<Real> doas;
        std::vector<Real> delays;
        std::vector<Real> ranges;
        std::vector<Index> bins;
        MusicSpectrum<Real> spectrum;
        bool degenerate = false;
    };

    template <typename Real = double>
    struct Association
    {
        std::vector<Index> estimate_for_truth; // truth k is paired with estimate estimate_for_truth[k]
        std::vector<Real> doa_errors;          // estimate - truth, radians, indexed by truth
        std::vector<Real> range_errors;        // meters, indexed by truth
        Real rmse_deg = Real(0);
    };

    /// Minimum total |DoA error| one-to-one pairing (exhaustive; K < M_RF keeps this small).
    template <typename Real>
    Association<Real> associate_and_score(std::span<const Real> est_doas, std::span<const Real> est_ranges,
                                          std::span<const TargetState<Real>> truth)
    {
        const std::size_t k = truth.size();
        if (est_doas.size() != k || est_ranges.size() != k)
            throw InvalidInput("associate_and_score: estimate and truth counts differ");
        if (k > 10)
            throw InvalidInput("associate_and_score: exhaustive assignment limited to 10 targets");

        std::vector<Index> perm(k);
        std::iota(perm.begin(), perm.end(), Index(0));
        std::vector<Index> best = perm;
        Real best_cost = std::numeric_limits<Real>::infinity();
        do
        {
            Real cost = Real(0);
            for (std::size_t t = 0; t < k; ++t)
                cost += std::abs(est_doas[static_cast<std::size_t>(perm[t])] - truth[t].doa);
            if (cost < best_cost)
            {
                best_cost = cost;
                best = perm;
            }
        } while (std::next_permutation(perm.begin(), perm.end()));

        Association<Real> out;
        out.estimate_for_truth = best;
        Real sq = Real(0);
        for (std::size_t t = 0; t < k; ++t)
        {
            const auto e = static_cast<std::size_t>(best[t]);
            out.doa_errors.push_back(est_doas[e] - truth[t].doa);
            out.range_errors.push_back(est_ranges[e] - truth[t].range);
            const Real deg = rad2deg(out.doa_errors.back());
            sq += deg * deg;
        }
        out.rmse_deg = k > 0 ? std::sqrt(sq / Real(k)) : Real(0);
        return out;
    }
}

#endif
