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

// Straight-line reference for the subframe optimizer. Shares no code path with the library
// beyond steering vectors and codebooks: beams are scored on the full assembled matrices, the
// residual basis comes from an eigendecomposition of A^H A, and BD uses explicit projectors.

#ifndef FDISAC_TESTS_ALGORITHM_ORACLE_HPP
#define FDISAC_TESTS_ALGORITHM_ORACLE_HPP

#include "fdisac/beamformer_optimizer.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <optional>

namespace oracle
{
    using fdisac::Index;
    using C = std::complex<double>;
    using Mat = Eigen::MatrixXcd;

    struct Instance
    {
        Mat si;                      // M x N
        std::vector<Mat> dl;         // L x N
        std::vector<double> doas;    // radar priors
        Index n_taps = 0;
        double tx_power = 1;
        double saturation = 1;
        fdisac::BeamAssignment assignment = fdisac::BeamAssignment::joint;
    };

    struct Trace
    {
        std::vector<Index> tx_beams;
        std::vector<Index> rx_beams;
        Index alpha = 0;
        bool accepted = false;
        Mat v_bb;
    };

    inline Mat block_diag(const fdisac::BeamCodebook<double> &book, const std::vector<Index> &idx)
    {
        const Index sub = book.n_subarray();
        Mat out = Mat::Zero(sub * static_cast<Index>(idx.size()), static_cast<Index>(idx.size()));
        for (std::size_t r = 0; r < idx.size(); ++r)
            out.block(static_cast<Index>(r) * sub, static_cast<Index>(r), sub, 1) = book[idx[r]];
        return out;
    }

    // Orthogonal projector onto the null space of h (rows of h span the removed space).
    inline Mat null_projector(const Mat &h, Index dim)
    {
        if (h.rows() == 0)
            return Mat::Identity(dim, dim);
        Eigen::SelfAdjointEigenSolver<Mat> eig(h.adjoint() * h);
        const double top = eig.eigenvalues().maxCoeff();
        Mat p = Mat::Identity(dim, dim);
        for (Index i = 0; i < dim; ++i)
            if (eig.eigenvalues()(i) > 1e-12 * top)
                p -= eig.eigenvectors().col(i) * eig.eigenvectors().col(i).adjoint();
        return p;
    }

    inline Trace run(const Instance &in, const fdisac::BeamCodebook<double> &tx_book,
                     const fdisac::BeamCodebook<double> &rx_book, const fdisac::ArrayGeometry<double> &tx,
                     const fdisac::ArrayGeometry<double> &rx)
    {
        const Index n = tx.n_elements, m = rx.n_elements;
        const Index n_rf = n / tx_book.n_subarray(), m_rf = m / rx_book.n_subarray();
        const Index k_count = static_cast<Index>(in.doas.size());
        const bool per_target = in.assignment == fdisac::BeamAssignment::per_target;

        std::vector<Mat> terms;
        Mat h_r = Mat::Zero(m, n);
        for (double th : in.doas)
        {
            terms.push_back(fdisac::steering_vector(rx, th) * fdisac::steering_vector(tx, th).adjoint());
            h_r += terms.back();
        }

        Trace t;
        // TX beams: change one chain at a time, score the whole ||H V||_F^2 restricted to that chain's column
        t.tx_beams.assign(static_cast<std::size_t>(n_rf), 0);
        for (Index r = 0; r < n_rf; ++r)
        {
            const Mat &target = per_target ? terms[static_cast<std::size_t>(r * k_count / n_rf)] : h_r;
            double best = -1;
            for (Index b = 0; b < tx_book.size(); ++b)
            {
                auto idx = t.tx_beams;
                idx[static_cast<std::size_t>(r)] = b;
                const double obj = (target * block_diag(tx_book, idx).col(r)).squaredNorm();
                if (obj > best)
                {
                    best = obj;
                    t.tx_beams[static_cast<std::size_t>(r)] = b;
                }
            }
        }
        const Mat v_rf = block_diag(tx_book, t.tx_beams);

        // RX beams: echo-to-SI ratio per chain on the full W column
        const Mat leak = in.si * v_rf;
        const double eps = leak.squaredNorm() > 0 ? 1e-12 * leak.squaredNorm() : 1.0;
        t.rx_beams.assign(static_cast<std::size_t>(m_rf), 0);
        for (Index r = 0; r < m_rf; ++r)
        {
            const Mat &target = per_target ? terms[static_cast<std::size_t>(r * k_count / m_rf)] : h_r;
            double best = -1;
            for (Index b = 0; b < rx_book.size(); ++b)
            {
                auto idx = t.rx_beams;
                idx[static_cast<std::size_t>(r)] = b;
                const Mat w = block_diag(rx_book, idx).col(r);
                const double ratio = (w.adjoint() * target * v_rf).squaredNorm() /
                                     ((w.adjoint() * in.si * v_rf).squaredNorm() + eps);
                if (ratio > best)
                {
                    best = ratio;
                    t.rx_beams[static_cast<std::size_t>(r)] = b;
                }
            }
        }
        const Mat w_rf = block_diag(rx_book, t.rx_beams);

        // canceller on the largest entries, then shrink alpha until the residual fits
        const Mat h_eff = w_rf.adjoint() * in.si * v_rf;
        std::vector<std::pair<double, Index>> mags;
        for (Index i = 0; i < h_eff.size(); ++i)
            mags.emplace_back(std::abs(h_eff(i)), i);
        std::stable_sort(mags.begin(), mags.end(), [](auto a, auto b) { return a.first > b.first; });
        Mat residual = h_eff;
        for (Index i = 0; i < in.n_taps; ++i)
            residual(mags[static_cast<std::size_t>(i)].second) = 0;
        // ascending eigenvalues of A^H A: the first alpha eigenvectors are the weakest-SI directions
        Eigen::SelfAdjointEigenSolver<Mat> basis(residual.adjoint() * residual);

        const Index n_users = static_cast<Index>(in.dl.size());
        const Index l = in.dl.front().rows();
        for (Index alpha = n_rf; alpha >= 2; --alpha)
        {
            const Mat f = basis.eigenvectors().leftCols(alpha);
            std::vector<Mat> h;
            for (const auto &d : in.dl)
                h.push_back(d * v_rf * f);

            // BD: project out the other users, then take the top-L eigenvectors
            Mat g(alpha, n_users * l);
            bool feasible = true;
            for (Index u = 0; u < n_users && feasible; ++u)
            {
                Mat others(0, alpha);
                for (Index v = 0; v < n_users; ++v)
                    if (v != u)
                    {
                        Mat grown(others.rows() + l, alpha);
                        grown << others, h[static_cast<std::size_t>(v)];
                        others = grown;
                    }
                const Mat p = null_projector(others, alpha);
                const double null_dim = p.trace().real();
                if (null_dim < static_cast<double>(l) - 0.5)
                {
                    feasible = false;
                    break;
                }
                const Mat hu = h[static_cast<std::size_t>(u)] * p;
                Eigen::SelfAdjointEigenSolver<Mat> e(hu.adjoint() * hu);
                g.middleCols(u * l, l) = std::sqrt(in.tx_power / double(n_users)) *
                                         (p * e.eigenvectors().rightCols(l).rowwise().reverse());
            }
            if (!feasible)
            {
                if (alpha == n_rf)
                    throw fdisac::RankDeficiency("oracle: no BD at full dimension");
                break;
            }
            Mat v_bb = f * g;
            v_bb *= std::sqrt(in.tx_power) / (v_rf * v_bb).norm();
            t.v_bb = v_bb;
            t.alpha = alpha;
            const Eigen::VectorXd rows = (residual * v_bb).rowwise().squaredNorm();
            if ((rows.array() <= in.saturation).all())
            {
                t.accepted = true;
                break;
            }
        }
        return t;
    }

    /// Largest per-column distance after removing each column's common phase, relative to ||b||_F.
    inline double phase_aligned_error(const Mat &a, const Mat &b)
    {
        if (a.rows() != b.rows() || a.cols() != b.cols())
            return std::numeric_limits<double>::infinity();
        double worst = 0;
        for (Index c = 0; c < a.cols(); ++c)
        {
            const C inner = b.col(c).dot(a.col(c));
            const C phase = std::abs(inner) > 0 ? inner / std::abs(inner) : C(1);
            worst = std::max(worst, (a.col(c) - phase * b.col(c)).norm());
        }
        return worst / std::max(b.norm(), 1e-300);
    }
}

#endif
