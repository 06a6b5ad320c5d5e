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

// Config files are plain "key = value" lines. '#' starts a comment, blank lines are ignored,
// keys are the ScenarioConfig field names and unknown keys are an error.

#include "fdisac/tracking_runner.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

namespace fdisac
{
    namespace
    {
        using Member = std::variant<double ScenarioConfig::*, Index ScenarioConfig::*, int ScenarioConfig::*,
                                    bool ScenarioConfig::*, std::uint64_t ScenarioConfig::*,
                                    std::string ScenarioConfig::*, Mode ScenarioConfig::*,
                                    BeamAssignment ScenarioConfig::*>;

        struct Field
        {
            const char *key;
            Member member;
        };

#define FDISAC_FIELD(name) Field{#name, &ScenarioConfig::name}

        const std::vector<Field> &fields()
        {
            static const std::vector<Field> table = {
                FDISAC_FIELD(carrier_hz),
                FDISAC_FIELD(bandwidth_hz),
                FDISAC_FIELD(subframe_duration_s),
                FDISAC_FIELD(n_symbols),
                FDISAC_FIELD(n_subcarriers),
                FDISAC_FIELD(subcarrier_spacing_hz),
                FDISAC_FIELD(tx_power_dbm),
                FDISAC_FIELD(noise_floor_dbm),
                FDISAC_FIELD(user_noise_floor_dbm),
                FDISAC_FIELD(saturation_dbm),
                FDISAC_FIELD(noiseless),
                FDISAC_FIELD(adc_bits),
                FDISAC_FIELD(papr_db),
                FDISAC_FIELD(dynamic_range_db),
                FDISAC_FIELD(n_tx),
                FDISAC_FIELD(n_rx),
                FDISAC_FIELD(n_rf_tx),
                FDISAC_FIELD(n_rf_rx),
                FDISAC_FIELD(n_tx_subarray),
                FDISAC_FIELD(n_rx_subarray),
                FDISAC_FIELD(element_spacing_wavelengths),
                FDISAC_FIELD(tx_rx_separation_m),
                FDISAC_FIELD(codebook_bits),
                FDISAC_FIELD(n_taps),
                FDISAC_FIELD(beam_assignment),
                FDISAC_FIELD(radar_fill),
                FDISAC_FIELD(si_knowledge_error),
                FDISAC_FIELD(si_knowledge_error_db),
                FDISAC_FIELD(n_users),
                FDISAC_FIELD(user_antennas),
                FDISAC_FIELD(n_targets),
                FDISAC_FIELD(dl_pathloss_db),
                FDISAC_FIELD(sector_min_deg),
                FDISAC_FIELD(sector_max_deg),
                FDISAC_FIELD(min_range_m),
                FDISAC_FIELD(max_range_m),
                FDISAC_FIELD(min_separation_deg),
                FDISAC_FIELD(reflection_model),
                FDISAC_FIELD(reflectivity),
                FDISAC_FIELD(fixed_reflection_magnitude),
                FDISAC_FIELD(velocity_mps),
                FDISAC_FIELD(angular_step_deg),
                FDISAC_FIELD(n_subframes),
                FDISAC_FIELD(mode),
                FDISAC_FIELD(hd_dl_fraction),
                FDISAC_FIELD(initial_prior_error_deg),
                FDISAC_FIELD(music_grid_step_deg),
                FDISAC_FIELD(music_normalized),
                FDISAC_FIELD(seed),
                FDISAC_FIELD(threads),
            };
            return table;
        }

#undef FDISAC_FIELD

        std::string trim(const std::string &s)
        {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos)
                return {};
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        }

        template <typename T>
        T parse_number(const std::string &key, const std::string &text)
        {
            T value{};
            const char *end = text.data() + text.size();
            const auto [ptr, ec] = std::from_chars(text.data(), end, value);
            if (ec != std::errc() || ptr != end)
                throw InvalidInput("config: key '" + key + "' expects a number, got '" + text + "'");
            return value;
        }

        bool parse_bool(const std::string &key, const std::string &text)
        {
            if (text == "true" || text == "1")
                return true;
            if (text == "false" || text == "0")
                return false;
            throw InvalidInput("config: key '" + key + "' expects true/false, got '" + text + "'");
        }

        std::string format_double(double v)
        {
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.17g", v);
            return buf;
        }

        const Field &find_field(const std::string &key)
        {
            for (const auto &f : fields())
                if (key == f.key)
                    return f;
            throw InvalidInput("config: unknown key '" + key + "'");
        }
    }

    std::vector<std::string> config_keys()
    {
        std::vector<std::string> keys;
        for (const auto &f : fields())
            keys.emplace_back(f.key);
        return keys;
    }

    void set_config_value(ScenarioConfig &config, const std::string &key, const std::string &value)
    {
        const Field &f = find_field(key);
        std::visit(
            [&](auto member)
            {
                using T = std::remove_reference_t<decltype(config.*member)>;
                if constexpr (std::is_same_v<T, bool>)
                    config.*member = parse_bool(key, value);
                else if constexpr (std::is_same_v<T, std::string>)
                    config.*member = value;
                else if constexpr (std::is_same_v<T, Mode>)
                    config.*member = parse_mode(value);
                else if constexpr (std::is_same_v<T, BeamAssignment>)
                    config.*member = parse_assignment(value);
                else if constexpr (std::is_same_v<T, double>)
                {
                    char *end = nullptr;
                    const double v = std::strtod(value.c_str(), &end);
                    if (value.empty() || end != value.c_str() + value.size())
                        throw InvalidInput("config: key '" + key + "' expects a number, got '" + value + "'");
                    config.*member = v;
                }
                else
                    config.*member = parse_number<T>(key, value);
            },
            f.member);
    }

    ScenarioConfig parse_config(const std::string &text)
    {
        ScenarioConfig config;
        std::istringstream in(text);
        std::string line;
        int line_no = 0;
        while (std::getline(in, line))
        {
            ++line_no;
            const auto hash = line.find('#');
            if (hash != std::string::npos)
                line.erase(hash);
            line = trim(line);
            if (line.empty())
                continue;
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw InvalidInput("config line " + std::to_string(line_no) + ": expected 'key = value'");
            const std::string key = trim(line.substr(0, eq));
            const std::string value = trim(line.substr(eq + 1));
            try
            {
                set_config_value(config, key, value);
            }
            catch (const InvalidInput &e)
            {
                throw InvalidInput("config line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        return config;
    }

    ScenarioConfig load_config(const std::filesystem::path &path)
    {
        std::ifstream in(path);
        if (!in)
            throw std::runtime_error("cannot open config file " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse_config(ss.str());
    }

    std::string config_to_text(const ScenarioConfig &config)
    {
        std::string out;
        for (const auto &f : fields())
        {
            out += f.key;
            out += " = ";
            std::visit(
                [&](auto member)
                {
                    using T = std::remove_cvref_t<decltype(config.*member)>;
                    const auto &v = config.*member;
                    if constexpr (std::is_same_v<T, bool>)
                        out += v ? "true" : "false";
                    else if constexpr (std::is_same_v<T, std::string>)
                        out += v;
                    else if constexpr (std::is_same_v<T, Mode> || std::is_same_v<T, BeamAssignment>)
                        out += to_string(v);
                    else if constexpr (std::is_same_v<T, double>)
                        out += format_double(v);
                    else
                        out += std::to_string(v);
                },
                f.member);
            out += '\n';
        }
        return out;
    }
}
