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

#ifndef FDISAC_TRACKING_RUNNER_HPP
#define FDISAC_TRACKING_RUNNER_HPP

#include "fdisac/beamformer_optimizer.hpp"
#include "fdisac/estimation.hpp"

#include <filesystem>
#include <numeric>
#include <string>

namespace fdisac
{
    enum class Mode
    {
        fd_isac,
        hd_isac,
        ideal_fd
    };

    std::string to_string(Mode mode);
    Mode parse_mode(const std::string &text); // accepts fd_isac/hd_isac/ideal_fd and fd/hd/ideal
    std::string to_string(BeamAssignment assignment);
    BeamAssignment parse_assignment(const std::string &text);

    /// Every knob of one simulated deployment. Field names double as config-file keys.
    struct ScenarioConfig
    {
        // numerology
        double carrier_hz = 28e9;
        double bandwidth_hz = 100e6;
        double subframe_duration_s = 1e-3;
        Index n_symbols = 14;
        Index n_subcarriers = 792;
        double subcarrier_spacing_hz = 120e3;

        // power budget, mW / dBm per resource element
        double tx_power_dbm = 30;
        double noise_floor_dbm = -90;
        double user_noise_floor_dbm = -90;
        double saturation_dbm = -30;
        bool noiseless = false;

        // recorded for reference; no model consumes them
        double adc_bits = 14;
        double papr_db = 10;
        double dynamic_range_db = 60;

        // BS arrays
        Index n_tx = 128;
        Index n_rx = 128;
        Index n_rf_tx = 8;
        Index n_rf_rx = 8;
        Index n_tx_subarray = 16;
        Index n_rx_subarray = 16;
        double element_spacing_wavelengths = 0.5;
        double tx_rx_separation_m = 0.005;
        int codebook_bits = 5;
        Index n_taps = 16;
        BeamAssignment beam_assignment = BeamAssignment::per_target;
        bool radar_fill = true;
        bool si_knowledge_error = false;
        double si_knowledge_error_db = -40;

        // users and targets
        Index n_users = 2;
        Index user_antennas = 2;
        Index n_targets = 4;
        double dl_pathloss_db = 100;
        double sector_min_deg = -60;
        double sector_max_deg = 60;
        double min_range_m = 10;
        double max_range_m = 80;
        double min_separation_deg = 10;
        std::string reflection_model = "radar_equation"; // or "fixed"
        // RCS in m^2 (10) times the M N array gain left out of unit-norm steering vectors
        double reflectivity = 163840;
        double fixed_reflection_magnitude = 1e-5;

        // motion
        double velocity_mps = 0;
        double angular_step_deg = 0; // > 0: every target advances by exactly this much per subframe

        // protocol
        Index n_subframes = 20;
        Mode mode = Mode::fd_isac;
        double hd_dl_fraction = 0.5;
        double initial_prior_error_deg = 1;
        double music_grid_step_deg = 0.01;
        bool music_normalized = true;
        std::uint64_t seed = 1;
        int threads = 1;

        double wavelength() const { return speed_of_light / carrier_hz; }
        ArrayGeometry<double> tx_geometry() const;
        ArrayGeometry<double> rx_geometry() const;
        ArrayGeometry<double> user_geometry() const;
        ReflectionModel<double> reflection() const;
        double max_angular_step_deg() const;
        NoiseSpec<double> noise() const;

        /// Throws InvalidInput naming the first violated invariant.
        void validate() const;
    };

    struct SubframeRecord
    {
        Index index = 0;
        std::vector<double> true_doas_deg;
        std::vector<double> true_ranges_m;
        std::vector<double> est_doas_deg;   // paired with truth, same order
        std::vector<double> est_ranges_m;
        std::vector<double> doa_errors_deg;
        std::vector<double> range_errors_m;
        std::vector<Index> range_bins;
        double rmse_deg = 0;
        std::vector<double> user_rates; // bits/s/Hz, after any HD time split
        double sum_rate = 0;
        double radar_snr_db = 0;
        double residual_si_dbm = 0;
        Index alpha = 0;
        bool saturation_ok = true;
        bool fallback_used = false;
        bool music_degenerate = false;

        bool operator==(const SubframeRecord &) const = default;
    };

    struct RunResult
    {
        std::vector<SubframeRecord> records;
        std::vector<MusicSpectrum<double>> spectra; // one per subframe
    };

    std::vector<TargetState<double>> draw_targets(const ScenarioConfig &config);

    /// Subframe protocol: optimize from the previous estimates, transmit, sense, estimate, score.
    RunResult run_scenario(const ScenarioConfig &config);

    /// Same protocol from caller-supplied initial targets (K entries, user u served through the
    /// scatterer with dl_user_index == u).
    RunResult run_scenario(const ScenarioConfig &config, std::vector<TargetState<double>> targets);

    /**
     * Per-user log2 det(I + Q_u^{-1} H_u T_u T_u^H H_u^H), with T_u user u's L columns of V_RF V_BB
     * and Q_u = sigma^2 I plus the leakage of every other user's streams into user u.
     */
    template <typename Real>
    std::vector<Real> dl_user_rates(std::span<const CMatrix<Real>> dl_channels, const BeamformerSet<Real> &set,
                                    Real noise_variance)
    {
        const Index n_users = static_cast<Index>(dl_channels.size());
        std::vector<Real> rates;
        if (n_users == 0)
            return rates;
        const CMatrix<Real> t = set.v_rf.assembled * set.v_bb;
        if (t.cols() % n_users != 0)
            throw InvalidInput("dl_sum_rate: precoder width is not a multiple of the user count");
        const Index streams = t.cols() / n_users;
        for (Index u = 0; u < n_users; ++u)
        {
            const auto &h = dl_channels[static_cast<std::size_t>(u)];
            const Index l = h.rows();
            CMatrix<Real> q = noise_variance * CMatrix<Real>::Identity(l, l);
            CMatrix<Real> signal;
            for (Index v = 0; v < n_users; ++v)
            {
                const CMatrix<Real> ht = h * t.middleCols(v * streams, streams);
                if (v == u)
                    signal = ht * ht.adjoint();
                else
                    q += ht * ht.adjoint();
            }
            const CMatrix<Real> m = CMatrix<Real>::Identity(l, l) + q.ldlt().solve(signal);
            // det(I + Q^{-1} S) is real and >= 1; the modulus drops rounding residue in the imaginary part
            rates.push_back(std::log2(std::abs(m.determinant())));
        }
        return rates;
    }

    template <typename Real>
    Real dl_sum_rate(std::span<const CMatrix<Real>> dl_channels, const BeamformerSet<Real> &set, Real noise_variance)
    {
        const auto rates = dl_user_rates(dl_channels, set, noise_variance);
        return std::accumulate(rates.begin(), rates.end(), Real(0));
    }

    /// RMSE in degrees over every per-target DoA error in the window.
    double rmse_over_run(std::span<const SubframeRecord> records);

    // ---- I/O ----

    ScenarioConfig parse_config(const std::string &text);
    ScenarioConfig load_config(const std::filesystem::path &path);
    std::string config_to_text(const ScenarioConfig &config);
    void set_config_value(ScenarioConfig &config, const std::string &key, const std::string &value);
    std::vector<std::string> config_keys();

    /// records.csv (+ summary.json, + spectrum_<i>.csv when spectra are given) under `dir`.
    void export_results(const ScenarioConfig &config, const RunResult &run, const std::filesystem::path &dir,
                        bool write_spectra = false);
    std::string records_to_csv(const ScenarioConfig &config, std::span<const SubframeRecord> records);
    std::vector<SubframeRecord> records_from_csv(const std::string &csv, const ScenarioConfig &config);
    std::string summary_json(const ScenarioConfig &config, std::span<const SubframeRecord> records);
}

#endif
