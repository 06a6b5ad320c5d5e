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

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace fdisac
{
    namespace
    {
        std::string num(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        // Column layout depends on K and U only, so header and rows are generated from one list.
        std::vector<std::string> header(const ScenarioConfig &config)
        {
            std::vector<std::string> h{"index"};
            const char *per_target[] = {"true_doa_deg", "true_range_m", "est_doa_deg", "est_range_m",
                                        "doa_error_deg", "range_error_m", "range_bin"};
            for (const char *name : per_target)
                for (Index k = 0; k < config.n_targets; ++k)
                    h.push_back(std::string(name) + "_" + std::to_string(k));
            h.push_back("rmse_deg");
            for (Index u = 0; u < config.n_users; ++u)
                h.push_back("rate_user_" + std::to_string(u));
            for (const char *name : {"sum_rate", "radar_snr_db", "residual_si_dbm", "alpha", "saturation_ok",
                                     "fallback_used", "music_degenerate"})
                h.emplace_back(name);
            return h;
        }

        void check_shape(const ScenarioConfig &config, const SubframeRecord &r)
        {
            const auto k = static_cast<std::size_t>(config.n_targets);
            if (r.true_doas_deg.size() != k || r.true_ranges_m.size() != k || r.est_doas_deg.size() != k ||
                r.est_ranges_m.size() != k || r.doa_errors_deg.size() != k || r.range_errors_m.size() != k ||
                r.range_bins.size() != k || r.user_rates.size() != static_cast<std::size_t>(config.n_users))
                throw InvalidInput("records_to_csv: record " + std::to_string(r.index) +
                                   " does not match the configured target/user counts");
        }

        std::vector<std::string> split(const std::string &line, char sep)
        {
            std::vector<std::string> out;
            std::string cell;
            std::istringstream in(line);
            while (std::getline(in, cell, sep))
                out.push_back(cell);
            if (!line.empty() && line.back() == sep)
                out.emplace_back();
            return out;
        }

        double to_double(const std::string &s)
        {
            char *end = nullptr;
            const double v = std::strtod(s.c_str(), &end);
            if (s.empty() || end != s.c_str() + s.size())
                throw InvalidInput("records_from_csv: malformed number '" + s + "'");
            return v;
        }

        double mean(const std::vector<double> &v)
        {
            return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
        }

        nlohmann::ordered_json config_echo(const ScenarioConfig &config)
        {
            nlohmann::ordered_json j;
            std::istringstream in(config_to_text(config));
            std::string line;
            while (std::getline(in, line))
            {
                const auto eq = line.find(" = ");
                const std::string key = line.substr(0, eq);
                const std::string value = line.substr(eq + 3);
                if (value == "true" || value == "false")
                    j[key] = value == "true";
                else
                {
                    char *end = nullptr;
                    const double v = std::strtod(value.c_str(), &end);
                    if (!value.empty() && end == value.c_str() + value.size())
                        j[key] = v;
                    else
                        j[key] = value;
                }
            }
            return j;
        }

        void write_file(const std::filesystem::path &path, const std::string &content)
        {
            std::ofstream out(path, std::ios::binary);
            if (!out)
                throw std::runtime_error("cannot open " + path.string() + " for writing");
            out << content;
            if (!out)
                throw std::runtime_error("write failed for " + path.string());
        }
    }

    std::string records_to_csv(const ScenarioConfig &config, std::span<const SubframeRecord> records)
    {
        std::string out;
        const auto h = header(config);
        for (std::size_t i = 0; i < h.size(); ++i)
            out += (i ? "," : "") + h[i];
        out += '\n';
        for (const auto &r : records)
        {
            check_shape(config, r);
            std::vector<std::string> row{std::to_string(r.index)};
            for (const auto *v : {&r.true_doas_deg, &r.true_ranges_m, &r.est_doas_deg, &r.est_ranges_m,
                                  &r.doa_errors_deg, &r.range_errors_m})
                for (double x : *v)
                    row.push_back(num(x));
            // range bins sit between the per-target doubles and the scalars, as in the header
            for (Index b : r.range_bins)
                row.push_back(std::to_string(b));
            row.push_back(num(r.rmse_deg));
            for (double x : r.user_rates)
                row.push_back(num(x));
            row.push_back(num(r.sum_rate));
            row.push_back(num(r.radar_snr_db));
            row.push_back(num(r.residual_si_dbm));
            row.push_back(std::to_string(r.alpha));
            row.push_back(r.saturation_ok ? "1" : "0");
            row.push_back(r.fallback_used ? "1" : "0");
            row.push_back(r.music_degenerate ? "1" : "0");
            for (std::size_t i = 0; i < row.size(); ++i)
                out += (i ? "," : "") + row[i];
            out += '\n';
        }
        return out;
    }

    std::vector<SubframeRecord> records_from_csv(const std::string &csv, const ScenarioConfig &config)
    {
        std::istringstream in(csv);
        std::string line;
        if (!std::getline(in, line))
            throw InvalidInput("records_from_csv: missing header");
        const auto expected = header(config);
        if (split(line, ',') != expected)
            throw InvalidInput("records_from_csv: header does not match the configured target/user counts");

        const auto k = static_cast<std::size_t>(config.n_targets);
        std::vector<SubframeRecord> records;
        while (std::getline(in, line))
        {
            if (line.empty())
                continue;
            const auto cells = split(line, ',');
            if (cells.size() != expected.size())
                throw InvalidInput("records_from_csv: row has " + std::to_string(cells.size()) + " cells, expected " +
                                   std::to_string(expected.size()));
            std::size_t c = 0;
            SubframeRecord r;
            r.index = static_cast<Index>(to_double(cells[c++]));
            for (auto *v : {&r.true_doas_deg, &r.true_ranges_m, &r.est_doas_deg, &r.est_ranges_m, &r.doa_errors_deg,
                            &r.range_errors_m})
                for (std::size_t i = 0; i < k; ++i)
                    v->push_back(to_double(cells[c++]));
            for (std::size_t i = 0; i < k; ++i)
                r.range_bins.push_back(static_cast<Index>(to_double(cells[c++])));
            r.rmse_deg = to_double(cells[c++]);
            for (Index u = 0; u < config.n_users; ++u)
                r.user_rates.push_back(to_double(cells[c++]));
            r.sum_rate = to_double(cells[c++]);
            r.radar_snr_db = to_double(cells[c++]);
            r.residual_si_dbm = to_double(cells[c++]);
            r.alpha = static_cast<Index>(to_double(cells[c++]));
            r.saturation_ok = cells[c++] == "1";
            r.fallback_used = cells[c++] == "1";
            r.music_degenerate = cells[c++] == "1";
            records.push_back(std::move(r));
        }
        return records;
    }

    std::string summary_json(const ScenarioConfig &config, std::span<const SubframeRecord> records)
    {
        nlohmann::ordered_json j;
        j["config"] = config_echo(config);
        nlohmann::ordered_json agg;
        agg["n_records"] = records.size();
        if (!records.empty())
        {
            std::vector<double> sum_rate, snr, si, alpha;
            std::vector<std::vector<double>> per_user(static_cast<std::size_t>(config.n_users));
            std::size_t saturation_failures = 0, fallbacks = 0, degenerate = 0;
            for (const auto &r : records)
            {
                sum_rate.push_back(r.sum_rate);
                snr.push_back(r.radar_snr_db);
                si.push_back(r.residual_si_dbm);
                alpha.push_back(static_cast<double>(r.alpha));
                for (std::size_t u = 0; u < per_user.size() && u < r.user_rates.size(); ++u)
                    per_user[u].push_back(r.user_rates[u]);
                saturation_failures += r.saturation_ok ? 0 : 1;
                fallbacks += r.fallback_used ? 1 : 0;
                degenerate += r.music_degenerate ? 1 : 0;
            }
            agg["rmse_deg"] = rmse_over_run(records);
            agg["mean_sum_rate"] = mean(sum_rate);
            nlohmann::ordered_json users = nlohmann::ordered_json::array();
            for (const auto &u : per_user)
                users.push_back(mean(u));
            agg["mean_user_rates"] = users;
            agg["mean_radar_snr_db"] = mean(snr);
            agg["mean_residual_si_dbm"] = mean(si);
            agg["mean_alpha"] = mean(alpha);
            agg["saturation_failures"] = saturation_failures;
            agg["fallbacks"] = fallbacks;
            agg["music_degenerate"] = degenerate;
        }
        j["aggregate"] = agg;
        return j.dump(2) + "\n";
    }

    void export_results(const ScenarioConfig &config, const RunResult &run, const std::filesystem::path &dir,
                        bool write_spectra)
    {
        std::error_code ec;
        std::filesystem::create_directories(dir, ec);
        if (ec)
            throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
        write_file(dir / "records.csv", records_to_csv(config, run.records));
        write_file(dir / "summary.json", summary_json(config, run.records));
        if (!write_spectra)
            return;
        for (std::size_t i = 0; i < run.spectra.size(); ++i)
        {
            const auto &s = run.spectra[i];
            std::string out = "theta_deg,pseudo_power\n";
            for (std::size_t g = 0; g < s.theta.size(); ++g)
                out += num(rad2deg(s.theta[g])) + "," + num(s.pseudo_power[g]) + "\n";
            write_file(dir / ("spectrum_" + std::to_string(i) + ".csv"), out);
        }
    }
}
