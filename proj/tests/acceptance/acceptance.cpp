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

// One PASS/FAIL line per acceptance criterion; exit status is nonzero when any criterion fails.

#include "../oracles/checks.hpp"

#include <cstdio>
#include <functional>

namespace
{
    using namespace checks;

    struct Verdict
    {
        bool pass = true;
        std::string detail;
    };

    ScenarioConfig table1(double power_dbm, std::uint64_t seed)
    {
        ScenarioConfig c;
        c.tx_power_dbm = power_dbm;
        c.seed = seed;
        return c;
    }

    std::string fmt(const char *format, double a, double b = 0, double c = 0)
    {
        char buf[256];
        std::snprintf(buf, sizeof buf, format, a, b, c);
        return buf;
    }

    double range_bin_m(const ScenarioConfig &c)
    {
        return speed_of_light / (2 * double(c.n_subcarriers) * c.subcarrier_spacing_hz);
    }

    // all K DoAs within 0.5 deg and all ranges within one bin, single subframe at 30 dBm
    Verdict detection()
    {
        const int runs = 50;
        int good = 0;
        for (int r = 0; r < runs; ++r)
        {
            auto c = table1(30, 1000 + static_cast<std::uint64_t>(r));
            c.n_subframes = 1;
            const auto rec = run_scenario(c).records.front();
            bool ok = rec.doa_errors_deg.size() == static_cast<std::size_t>(c.n_targets);
            for (double e : rec.doa_errors_deg)
                ok = ok && std::abs(e) <= 0.5;
            for (double e : rec.range_errors_m)
                ok = ok && std::abs(e) <= range_bin_m(c) + 1e-9;
            good += ok;
        }
        const double frac = double(good) / runs;
        return {frac >= 0.9, fmt("%.0f%% of %.0f runs resolve every target (need >= 90%%)", 100 * frac, runs)};
    }

    // pooled RMSE over 20 tracked subframes and 10 seeds for every angular step
    Verdict tracking()
    {
        Verdict v;
        for (double power : {20.0, 30.0})
        {
            const double limit = power < 25 ? 1.5 : 0.5;
            for (double step : {0.01, 0.05, 0.1, 0.2})
            {
                std::vector<SubframeRecord> all;
                for (std::uint64_t s = 0; s < 10; ++s)
                {
                    auto c = table1(power, 2000 + s);
                    c.angular_step_deg = step;
                    const auto run = run_scenario(c);
                    all.insert(all.end(), run.records.begin(), run.records.end());
                }
                const double rmse = rmse_over_run(all);
                v.pass = v.pass && rmse <= limit;
                v.detail += fmt("[%.0f dBm, step %.2f: %.3f deg] ", power, step, rmse);
            }
        }
        v.detail += "(limits 1.5 deg at 20 dBm, 0.5 deg at 30 dBm)";
        return v;
    }

    double mean_rate(Mode mode, double power, Index taps, int seeds, std::uint64_t base)
    {
        double sum = 0;
        int count = 0;
        for (int s = 0; s < seeds; ++s)
        {
            auto c = table1(power, base + static_cast<std::uint64_t>(s));
            c.mode = mode;
            c.n_taps = taps;
            c.n_subframes = 2;
            for (const auto &rec : run_scenario(c).records)
            {
                sum += rec.sum_rate;
                ++count;
            }
        }
        return sum / count;
    }

    // N_C = 16: gap to the ideal FD bound <= 1.5 b/s/Hz up to 20 dBm, FD above HD everywhere
    Verdict rates()
    {
        Verdict v;
        for (double power : {10.0, 15.0, 20.0, 25.0, 30.0})
        {
            const double fd = mean_rate(Mode::fd_isac, power, 16, 20, 3000);
            const double hd = mean_rate(Mode::hd_isac, power, 16, 20, 3000);
            const double ideal = mean_rate(Mode::ideal_fd, power, 16, 20, 3000);
            if (power <= 20)
                v.pass = v.pass && ideal - fd <= 1.5;
            v.pass = v.pass && fd > hd;
            v.detail += fmt("[%.0f dBm: fd %.2f, ", power, fd) + fmt("hd %.2f, ideal %.2f] ", hd, ideal);
        }
        return v;
    }

    Verdict taps()
    {
        const double with16 = mean_rate(Mode::fd_isac, 30, 16, 20, 4000);
        const double with8 = mean_rate(Mode::fd_isac, 30, 8, 20, 4000);
        return {with16 >= with8, fmt("mean sum rate N_C=16 %.3f vs N_C=8 %.3f b/s/Hz", with16, with8)};
    }

    Verdict oracles()
    {
        const auto joint = compare_with_oracle(100, 5000, BeamAssignment::joint);
        const auto per = compare_with_oracle(100, 6000, BeamAssignment::per_target);
        const double leak = worst_bd_leakage(200, 7000);
        const double gap = worst_two_form_gap(20, 8000);
        bool bins = true;
        for (Index n0 : {0, 1, 7, 395, 791})
            bins = bins && estimated_bin(n0, static_cast<std::uint64_t>(n0) + 9000) == n0;
        Verdict v;
        v.pass = joint.mismatches == 0 && per.mismatches == 0 && leak < 1e-9 && gap < 1e-10 && bins;
        v.detail = fmt("oracle mismatches %.0f + %.0f of 200, ", joint.mismatches, per.mismatches) +
                   fmt("BD leakage %.2e, two-form gap %.2e, ", leak, gap) + (bins ? "range bins exact" : "range bins off");
        if (!joint.first_mismatch.empty())
            v.detail += "; " + joint.first_mismatch;
        if (!per.first_mismatch.empty())
            v.detail += "; " + per.first_mismatch;
        return v;
    }

    Verdict properties()
    {
        Rng rng(10000);
        std::vector<std::string> broken;
        auto expect = [&](bool ok, const char *what) {
            if (!ok)
                broken.emplace_back(what);
        };

        for (int t = 0; t < 100; ++t)
        {
            const Index n = 1 + static_cast<Index>(rng() % 256);
            expect(std::abs(steering_vector(ula(n), uniform(rng, -1.5, 1.5)).norm() - 1) < 1e-12, "steering norm");
        }
        for (int t = 0; t < 20; ++t)
        {
            const Index n = 8 * (1 + static_cast<Index>(rng() % 16)), m = 8 * (1 + static_cast<Index>(rng() % 16));
            const auto si = build_si_channel(ula(n), ula(m), uniform(rng, 0.001, 0.1));
            expect(std::abs(si.matrix.squaredNorm() - double(m * n)) < 1e-9 * double(m * n), "SI normalization");
        }
        const auto book = dft_codebook<double>(5, 16);
        for (int t = 0; t < 20; ++t)
        {
            SubframeGrid<double> g;
            g.stage = GridStage::rx_chain;
            g.n_subcarriers = 16;
            g.n_symbols = 2;
            g.data = random_matrix(8, 32, rng, uniform(rng, 1e-12, 1e3));
            const auto cov = sample_covariance(g);
            expect((cov.matrix - cov.matrix.adjoint()).norm() == 0, "covariance Hermitian");
            Eigen::SelfAdjointEigenSolver<Mat> eig(cov.matrix);
            expect(eig.eigenvalues().minCoeff() >= -1e-12 * eig.eigenvalues().maxCoeff(), "covariance PSD");
            std::vector<Index> idx(8);
            for (auto &i : idx)
                i = static_cast<Index>(rng() % 32);
            const auto w = assemble_analog(book, idx);
            const auto res = music_doa(cov, 4, w, ula(128), deg2rad(0.1), deg2rad(-60.0), deg2rad(60.0));
            for (Index i = 1; i < res.eigenvalues.size(); ++i)
                expect(res.eigenvalues(i) <= res.eigenvalues(i - 1), "eigenvalues descending");
        }
        for (int t = 0; t < 20; ++t)
        {
            auto in = random_instance(rng, BeamAssignment::joint);
            OptimizerInput<double> lib;
            lib.si_channel = in.si;
            lib.dl_channels = in.dl;
            lib.n_taps = in.n_taps;
            lib.tx_power = in.tx_power;
            lib.saturation = in.saturation;
            lib.prior = RadarPrior<double>::make(in.doas, ula(128), ula(128));
            const auto out = optimize_subframe(lib, book, book);
            if (out.ok())
            {
                const double p = (out.set.v_rf.assembled * out.set.v_bb).squaredNorm();
                expect(std::abs(p - in.tx_power) <= 1e-9 * in.tx_power, "power equality");
            }
        }
        for (int t = 0; t < 50; ++t)
        {
            const Mat a = random_matrix(8, 8, rng), v = random_matrix(8, 4, rng);
            const double rho = uniform(rng, 0.5, 8);
            const auto flags = check_saturation(a, v, rho);
            for (Index i = 0; i < 8; ++i)
            {
                double power = 0;
                for (Index j = 0; j < 4; ++j)
                {
                    std::complex<double> acc = 0;
                    for (Index k = 0; k < 8; ++k)
                        acc += a(i, k) * v(k, j);
                    power += std::norm(acc);
                }
                expect(flags[static_cast<std::size_t>(i)] == (power <= rho), "saturation flags");
            }
        }
        auto c = testing::small_config();
        c.mode = Mode::fd_isac;
        c.threads = 1;
        const auto one = run_scenario(c);
        c.threads = 8;
        expect(one.records == run_scenario(c).records, "thread determinism");

        Verdict v;
        v.pass = broken.empty();
        v.detail = broken.empty() ? "all invariants hold" : "violated:";
        for (const auto &b : broken)
            if (v.detail.find(b) == std::string::npos)
                v.detail += " " + b;
        return v;
    }
}

int main(int argc, char **argv)
{
    const std::vector<std::pair<int, std::function<Verdict()>>> criteria{
        {1, detection}, {2, tracking}, {3, rates}, {4, taps}, {5, oracles}, {6, properties}};
    // optional argument: run a single criterion
    const int only = argc > 1 ? std::atoi(argv[1]) : 0;
    bool all = true;
    for (const auto &[id, check] : criteria)
    {
        if (only && id != only)
            continue;
        const auto v = check();
        all = all && v.pass;
        std::printf("CRITERION %d: %s %s\n", id, v.pass ? "PASS" : "FAIL", v.detail.c_str());
        std::fflush(stdout);
    }
    return all ? 0 : 1;
}
