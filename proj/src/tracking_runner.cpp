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

#include "fdisac/tracking_runner.hpp"

namespace fdisac
{
    std::string to_string(Mode mode)
    {
        switch (mode)
        {
        case Mode::fd_isac:
            return "fd_isac";
        case Mode::hd_isac:
            return "hd_isac";
        case Mode::ideal_fd:
            return "ideal_fd";
        }
        return "unknown";
    }

    Mode parse_mode(const std::string &text)
    {
        if (text == "fd_isac" || text == "fd")
            return Mode::fd_isac;
        if (text == "hd_isac" || text == "hd")
            return Mode::hd_isac;
        if (text == "ideal_fd" || text == "ideal")
            return Mode::ideal_fd;
        throw InvalidInput("unknown mode '" + text + "' (expected fd_isac, hd_isac or ideal_fd)");
    }

    std::string to_string(BeamAssignment assignment)
    {
        return assignment == BeamAssignment::joint ? "joint" : "per_target";
    }

    BeamAssignment parse_assignment(const std::string &text)
    {
        if (text == "joint")
            return BeamAssignment::joint;
        if (text == "per_target")
            return BeamAssignment::per_target;
        throw InvalidInput("unknown beam assignment '" + text + "' (expected joint or per_target)");
    }

    ArrayGeometry<double> ScenarioConfig::tx_geometry() const
    {
        return {n_tx, element_spacing_wavelengths * wavelength(), wavelength(), 0.0};
    }

    ArrayGeometry<double> ScenarioConfig::rx_geometry() const
    {
        return {n_rx, element_spacing_wavelengths * wavelength(), wavelength(), 0.0};
    }

    ArrayGeometry<double> ScenarioConfig::user_geometry() const
    {
        return {user_antennas, element_spacing_wavelengths * wavelength(), wavelength(), 0.0};
    }

    ReflectionModel<double> ScenarioConfig::reflection() const
    {
        ReflectionModel<double> model;
        model.kind = reflection_model == "fixed" ? ReflectionModel<double>::Kind::fixed
                                                 : ReflectionModel<double>::Kind::radar_equation;
        model.reflectivity = reflectivity;
        model.fixed_magnitude = fixed_reflection_magnitude;
        return model;
    }

    NoiseSpec<double> ScenarioConfig::noise() const
    {
        if (noiseless)
            return {0.0, 0.0};
        return NoiseSpec<double>::from_dbm(noise_floor_dbm, user_noise_floor_dbm);
    }

    void ScenarioConfig::validate() const
    {
        auto require = [](bool ok, const std::string &what)
        {
            if (!ok)
                throw InvalidInput("config: " + what);
        };
        require(carrier_hz > 0, "carrier_hz must be > 0");
        require(subframe_duration_s > 0, "subframe_duration_s must be > 0");
        require(n_symbols >= 1 && n_subcarriers >= 1, "n_symbols and n_subcarriers must be >= 1");
        require(subcarrier_spacing_hz > 0, "subcarrier_spacing_hz must be > 0");
        require(n_rf_tx >= 1 && n_rf_rx >= 1 && n_tx_subarray >= 1 && n_rx_subarray >= 1,
                "RF chain and subarray counts must be >= 1");
        require(n_tx == n_rf_tx * n_tx_subarray, "n_tx must equal n_rf_tx * n_tx_subarray");
        require(n_rx == n_rf_rx * n_rx_subarray, "n_rx must equal n_rf_rx * n_rx_subarray");
        require(n_users >= 1 && user_antennas >= 1, "n_users and user_antennas must be >= 1");
        require(n_users * user_antennas <= n_rf_tx, "n_users * user_antennas must not exceed n_rf_tx");
        require(n_targets >= 1 && n_targets < n_rf_rx, "n_targets must satisfy 1 <= K < n_rf_rx");
        require(n_targets >= n_users, "n_targets must be >= n_users (DL paths are a subset of the scatterers)");
        require(element_spacing_wavelengths > 0, "element_spacing_wavelengths must be > 0");
        require(tx_rx_separation_m > 0, "tx_rx_separation_m must be > 0");
        require(codebook_bits >= 1 && codebook_bits <= 16, "codebook_bits must lie in [1, 16]");
        require(n_taps >= 0 && n_taps <= n_rf_tx * n_rf_rx, "n_taps must lie in [0, n_rf_tx * n_rf_rx]");
        require(sector_min_deg >= -90 && sector_max_deg <= 90 && sector_min_deg < sector_max_deg,
                "sector must satisfy -90 <= sector_min_deg < sector_max_deg <= 90");
        require(min_range_m > 0 && max_range_m >= min_range_m, "ranges must satisfy 0 < min_range_m <= max_range_m");
        require(min_separation_deg >= 0, "min_separation_deg must be >= 0");
        require(reflection_model == "radar_equation" || reflection_model == "fixed",
                "reflection_model must be radar_equation or fixed");
        require(reflectivity > 0 && fixed_reflection_magnitude >= 0, "reflection magnitudes must be positive");
        require(velocity_mps >= 0 && angular_step_deg >= 0, "velocity_mps and angular_step_deg must be >= 0");
        require(n_subframes >= 1, "n_subframes must be >= 1");
        require(hd_dl_fraction > 0 && hd_dl_fraction < 1, "hd_dl_fraction must lie in (0, 1)");
        require(mode != Mode::hd_isac || static_cast<Index>(std::lround(n_symbols * (1 - hd_dl_fraction))) >= 1,
                "hd_isac needs at least one sensing symbol");
        require(initial_prior_error_deg >= 0, "initial_prior_error_deg must be >= 0");
        require(music_grid_step_deg > 0, "music_grid_step_deg must be > 0");
        require(threads >= 1, "threads must be >= 1");

        const double drift = static_cast<double>(n_subframes) * max_angular_step_deg();
        const double usable = sector_max_deg - sector_min_deg - drift;
        require(usable >= static_cast<double>(n_targets - 1) * min_separation_deg,
                "sector too narrow for n_targets at min_separation_deg after accounting for target drift");
    }

    double ScenarioConfig::max_angular_step_deg() const
    {
        if (angular_step_deg > 0)
            return angular_step_deg;
        return rad2deg(angular_step(velocity_mps, subframe_duration_s, min_range_m));
    }

    std::vector<TargetState<double>> draw_targets(const ScenarioConfig &config)
    {
        Rng rng(derive_seed(config.seed, stream::scenario));
        const double drift = static_cast<double>(config.n_subframes) * config.max_angular_step_deg();
        std::uniform_real_distribution<double> doa_dist(config.sector_min_deg, config.sector_max_deg - drift);
        std::uniform_real_distribution<double> range_dist(config.min_range_m, config.max_range_m);
        std::uniform_real_distribution<double> user_doa_dist(config.sector_min_deg, config.sector_max_deg);

        std::vector<double> doas;
        while (static_cast<Index>(doas.size()) < config.n_targets)
        {
            const double candidate = doa_dist(rng);
            const bool clear = std::all_of(doas.begin(), doas.end(), [&](double d)
                                           { return std::abs(d - candidate) >= config.min_separation_deg; });
            if (clear)
                doas.push_back(candidate);
            else if (doas.size() > 0 && rng() % 4096 == 0)
                doas.clear(); // a bad early draw can leave no room; start over
        }

        const auto model = config.reflection();
        std::vector<TargetState<double>> targets;
        for (Index k = 0; k < config.n_targets; ++k)
        {
            const double range = range_dist(rng);
            const double mag = model.magnitude(range, config.wavelength());
            auto t = TargetState<double>::at(deg2rad(doas[static_cast<std::size_t>(k)]), range,
                                             mag * random_phase<double>(rng));
            if (k < config.n_users)
            {
                t.is_dl_scatterer = true;
                t.dl_user_index = static_cast<int>(k);
                t.dl_user_doa = deg2rad(user_doa_dist(rng));
                t.dl_gain = draw_dl_gain(config.dl_pathloss_db, rng);
            }
            targets.push_back(t);
        }
        return targets;
    }

    namespace
    {
        std::vector<double> target_velocities(const ScenarioConfig &config, std::span<const TargetState<double>> targets)
        {
            std::vector<double> v;
            for (const auto &t : targets)
                v.push_back(config.angular_step_deg > 0
                                ? t.range * std::tan(deg2rad(config.angular_step_deg)) / config.subframe_duration_s
                                : config.velocity_mps);
            return v;
        }

        std::vector<CMatrix<double>> dl_matrices(const ScenarioConfig &config, std::span<const TargetState<double>> targets)
        {
            std::vector<CMatrix<double>> out(static_cast<std::size_t>(config.n_users));
            for (const auto &t : targets)
                if (t.is_dl_scatterer && t.dl_user_index)
                    out[static_cast<std::size_t>(*t.dl_user_index)] =
                        build_dl_channel(t, config.user_geometry(), config.tx_geometry()).matrix;
            return out;
        }

        double to_db(double x) { return 10.0 * std::log10(std::max(x, 1e-300)); }
    }

    RunResult run_scenario(const ScenarioConfig &config)
    {
        config.validate();
        return run_scenario(config, draw_targets(config));
    }

    RunResult run_scenario(const ScenarioConfig &config, std::vector<TargetState<double>> targets)
    {
        config.validate();
        if (static_cast<Index>(targets.size()) != config.n_targets)
            throw InvalidInput("run_scenario: expected " + std::to_string(config.n_targets) + " initial targets");
        for (Index u = 0; u < config.n_users; ++u)
            if (std::none_of(targets.begin(), targets.end(), [&](const TargetState<double> &t)
                             { return t.is_dl_scatterer && t.dl_user_index == static_cast<int>(u); }))
                throw InvalidInput("run_scenario: no DL scatterer for user " + std::to_string(u));
        const auto tx_geom = config.tx_geometry();
        const auto rx_geom = config.rx_geometry();
        const RadarFrontEnd<double> front{tx_geom, rx_geom, config.subcarrier_spacing_hz};
        const auto noise = config.noise();
        const double tx_power = dbm_to_mw(config.tx_power_dbm);
        const double rho_b = dbm_to_mw(config.saturation_dbm);
        const bool has_si = config.mode == Mode::fd_isac;
        const Index sensing_symbols = config.mode == Mode::hd_isac
                                          ? static_cast<Index>(std::lround(config.n_symbols * (1 - config.hd_dl_fraction)))
                                          : config.n_symbols;
        const double rate_scale = config.mode == Mode::hd_isac ? config.hd_dl_fraction : 1.0;

        const auto tx_book = dft_codebook<double>(config.codebook_bits, config.n_tx_subarray, config.element_spacing_wavelengths);
        const auto rx_book = dft_codebook<double>(config.codebook_bits, config.n_rx_subarray, config.element_spacing_wavelengths);

        SiChannel<double> si = build_si_channel(tx_geom, rx_geom, config.tx_rx_separation_m);
        if (!has_si)
            si.matrix.setZero();

        const auto velocities = target_velocities(config, targets);

        std::vector<double> prior_doas;
        {
            Rng rng(derive_seed(config.seed, stream::prior));
            std::uniform_real_distribution<double> err(-config.initial_prior_error_deg, config.initial_prior_error_deg);
            for (const auto &t : targets)
                prior_doas.push_back(t.doa + deg2rad(err(rng)));
        }

        RunResult result;
        std::optional<BeamformerSet<double>> previous_set;
        std::vector<CMatrix<double>> previous_dl;
        for (Index i = 0; i < config.n_subframes; ++i)
        {
            if (i > 0)
            {
                Rng rng(derive_seed(config.seed, stream::evolution, static_cast<std::uint64_t>(i)));
                targets = evolve_targets<double>(targets, velocities, config.subframe_duration_s, rng);
            }
            const auto dl_now = dl_matrices(config, targets);

            OptimizerInput<double> in;
            in.si_channel = si.matrix;
            in.dl_channels = i == 0 ? dl_now : previous_dl;
            in.n_taps = config.n_taps;
            in.tx_power = tx_power;
            in.saturation = rho_b;
            in.prior = RadarPrior<double>::make(prior_doas, rx_geom, tx_geom);
            in.assignment = config.beam_assignment;
            in.radar_fill = config.radar_fill;
            if (config.si_knowledge_error && has_si)
                in.knowledge_error = KnowledgeError<double>{config.si_knowledge_error_db,
                                                            derive_seed(config.seed, stream::knowledge, static_cast<std::uint64_t>(i))};

            auto outcome = optimize_subframe(in, tx_book, rx_book);
            SubframeRecord rec;
            rec.index = i;
            rec.saturation_ok = outcome.ok();
            if (!outcome.ok() && previous_set)
            {
                outcome.set = *previous_set;
                rec.fallback_used = true;
            }
            const auto &set = outcome.set;
            rec.alpha = set.effective_streams;

            // sensing
            const std::uint64_t sub_seed = derive_seed(config.seed, stream::subframe, static_cast<std::uint64_t>(i));
            const auto symbols = generate_symbols<double>(config.n_subcarriers, sensing_symbols, config.n_users,
                                                          config.user_antennas, config.n_rf_tx, sub_seed);
            const auto tx_grid = tx_precode(symbols, set.v_rf, set.v_bb);
            const auto rx_grid = radar_receive<double>(tx_grid, targets, si, noise, sub_seed, front, config.threads);
            const auto bb = bb_combine(rx_grid, set.w_rf, set.cancellers.analog, set.cancellers.digital, set.v_bb, symbols);

            const auto cov = sample_covariance(bb);
            auto music = music_doa(cov, config.n_targets, set.w_rf, rx_geom, deg2rad(config.music_grid_step_deg),
                                   deg2rad(config.sector_min_deg), deg2rad(config.sector_max_deg), config.music_normalized);
            rec.music_degenerate = music.degenerate;

            std::vector<double> est_ranges;
            std::vector<Index> bins;
            const RangeEstimator<double> ranger(bb, set.w_rf, tx_grid, front);
            for (double theta : music.doas)
            {
                try
                {
                    const auto r = ranger.estimate(theta);
                    est_ranges.push_back(r.range);
                    bins.push_back(r.bin);
                }
                catch (const EstimationFailure &)
                {
                    est_ranges.push_back(std::numeric_limits<double>::quiet_NaN());
                    bins.push_back(-1);
                }
            }

            const auto assoc = associate_and_score<double>(music.doas, est_ranges, targets);
            for (std::size_t k = 0; k < targets.size(); ++k)
            {
                const auto e = static_cast<std::size_t>(assoc.estimate_for_truth[k]);
                rec.true_doas_deg.push_back(rad2deg(targets[k].doa));
                rec.true_ranges_m.push_back(targets[k].range);
                rec.est_doas_deg.push_back(rad2deg(music.doas[e]));
                rec.est_ranges_m.push_back(est_ranges[e]);
                rec.doa_errors_deg.push_back(rad2deg(assoc.doa_errors[k]));
                rec.range_errors_m.push_back(assoc.range_errors[k]);
                rec.range_bins.push_back(bins[e]);
            }
            rec.rmse_deg = assoc.rmse_deg;

            // the actual residual SI seen through the physical channel
            const CMatrix<double> si_eff_true = set.w_rf.assembled.adjoint() * si.matrix * set.v_rf.assembled;
            const double residual = ((si_eff_true + set.cancellers.analog + set.cancellers.digital) * set.v_bb).squaredNorm();
            rec.residual_si_dbm = to_db(residual);
            rec.radar_snr_db = to_db(radar_snr(in.prior, set, noise.variance_bs));

            // downlink; rates use the noise floor even in noiseless runs so they stay finite
            const double rate_noise = dbm_to_mw(config.user_noise_floor_dbm);
            rec.user_rates = dl_user_rates<double>(dl_now, set, rate_noise);
            for (double &r : rec.user_rates)
                r *= rate_scale;
            rec.sum_rate = std::accumulate(rec.user_rates.begin(), rec.user_rates.end(), 0.0);

            result.records.push_back(std::move(rec));
            result.spectra.push_back(std::move(music.spectrum));

            prior_doas = music.doas;
            previous_dl = dl_now;
            if (outcome.ok() || !previous_set)
                previous_set = set;
        }
        return result;
    }

    double rmse_over_run(std::span<const SubframeRecord> records)
    {
        if (records.empty())
            throw InvalidInput("rmse_over_run: empty window");
        double sq = 0;
        std::size_t n = 0;
        for (const auto &r : records)
            for (double e : r.doa_errors_deg)
            {
                sq += e * e;
                ++n;
            }
        if (n == 0)
            throw InvalidInput("rmse_over_run: records carry no DoA errors");
        return std::sqrt(sq / static_cast<double>(n));
    }
}
