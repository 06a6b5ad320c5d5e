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

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace fdisac;

namespace
{
    struct Overrides
    {
        std::string config_path;
        std::optional<std::uint64_t> seed;
        std::optional<std::string> mode;
        std::optional<double> tx_power_dbm;
        std::optional<Index> taps;
        std::string out = "out";
        bool spectra = false;
    };

    void add_common(CLI::App *cmd, Overrides &o)
    {
        cmd->add_option("--config", o.config_path, "scenario file (key = value lines)");
        cmd->add_option("--seed", o.seed, "override the scenario seed");
        cmd->add_option("--out", o.out, "output directory")->capture_default_str();
        cmd->add_option("--mode", o.mode, "fd | hd | ideal");
        cmd->add_option("--tx-power-dbm", o.tx_power_dbm, "override tx_power_dbm");
        cmd->add_option("--taps", o.taps, "override n_taps");
        cmd->add_flag("--spectra", o.spectra, "also write spectrum_<i>.csv per subframe");
    }

    ScenarioConfig resolve(const Overrides &o)
    {
        ScenarioConfig c = o.config_path.empty() ? ScenarioConfig{} : load_config(o.config_path);
        if (o.seed)
            c.seed = *o.seed;
        if (o.mode)
            c.mode = parse_mode(*o.mode);
        if (o.tx_power_dbm)
            c.tx_power_dbm = *o.tx_power_dbm;
        if (o.taps)
            c.n_taps = *o.taps;
        c.validate();
        return c;
    }

    void print_summary(const ScenarioConfig &c, const RunResult &run)
    {
        const auto s = nlohmann::json::parse(summary_json(c, run.records));
        const auto &a = s["aggregate"];
        std::cout << to_string(c.mode) << " tx=" << c.tx_power_dbm << " dBm  rmse=" << a["rmse_deg"].get<double>()
                  << " deg  sum_rate=" << a["mean_sum_rate"].get<double>()
                  << " b/s/Hz  saturation_failures=" << a["saturation_failures"].get<std::size_t>() << "\n";
    }
}

int main(int argc, char **argv)
{
    CLI::App app{"Full-duplex ISAC base station simulator"};
    app.require_subcommand(1);

    Overrides run_opts;
    auto *run_cmd = app.add_subcommand("run", "simulate one scenario");
    add_common(run_cmd, run_opts);

    Overrides sweep_opts;
    std::string sweep_param;
    std::vector<std::string> sweep_values;
    auto *sweep_cmd = app.add_subcommand("sweep", "run once per value of one config key");
    add_common(sweep_cmd, sweep_opts);
    sweep_cmd->add_option("--param", sweep_param, "config key to vary")->required();
    sweep_cmd->add_option("--values", sweep_values, "comma-separated values")->required()->delimiter(',');

    std::string validate_path;
    auto *validate_cmd = app.add_subcommand("validate", "check a scenario file");
    validate_cmd->add_option("--config", validate_path)->required();

    CLI11_PARSE(app, argc, argv);

    try
    {
        if (*run_cmd)
        {
            const auto c = resolve(run_opts);
            const auto run = run_scenario(c);
            export_results(c, run, run_opts.out, run_opts.spectra);
            print_summary(c, run);
        }
        else if (*sweep_cmd)
        {
            const auto base = resolve(sweep_opts);
            const std::filesystem::path out = sweep_opts.out;
            nlohmann::ordered_json combined;
            combined["param"] = sweep_param;
            combined["runs"] = nlohmann::ordered_json::array();
            for (const auto &value : sweep_values)
            {
                ScenarioConfig c = base;
                set_config_value(c, sweep_param, value);
                c.validate();
                const auto run = run_scenario(c);
                const auto dir = out / (sweep_param + "_" + value);
                export_results(c, run, dir, sweep_opts.spectra);
                auto s = nlohmann::ordered_json::parse(summary_json(c, run.records));
                nlohmann::ordered_json entry;
                entry["value"] = value;
                entry["records"] = (dir / "records.csv").string();
                entry["aggregate"] = s["aggregate"];
                combined["runs"].push_back(entry);
                print_summary(c, run);
            }
            std::ofstream f(out / "sweep_summary.json");
            if (!f)
                throw std::runtime_error("cannot write " + (out / "sweep_summary.json").string());
            f << combined.dump(2) << "\n";
        }
        else if (*validate_cmd)
        {
            load_config(validate_path).validate();
            std::cout << validate_path << ": ok\n";
        }
    }
    catch (const std::exception &e)
    {
        std::cerr << "isac-sim: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
