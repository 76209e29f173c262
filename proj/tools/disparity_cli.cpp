/*
 * Copyright 2026 The disparity-trial authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "disparity/config.hpp"
#include "disparity/errors.hpp"
#include "disparity/pipeline.hpp"
#include "disparity/report.hpp"

#include "CLI11.hpp"

#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

std::string exit_code_table()
{
    std::ostringstream out;
    out << "Exit codes:\n  " << std::setw(3) << std::left << 0 << " success\n  " << std::setw(3) << 1 << " internal error\n";
    for (auto c : disparity::all_error_codes()) {
        out << "  " << std::setw(3) << disparity::exit_code(c) << " " << disparity::error_name(c) << "\n";
    }
    return out.str();
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Target-trial disparity estimation, simulation and design realization"};
    app.footer(exit_code_table());
    std::string config_path;
    std::string data;
    std::string out;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::optional<int> bootstrap;
    app.add_option("--config", config_path, "Run config (JSON)")->required()->check(CLI::ExistingFile);
    app.add_option("--data", data, "Input CSV; overrides config \"data\"");
    app.add_option("--out", out, "Report path; overrides config \"out\" (stdout when neither is set)");
    app.add_option("--seed", seed, "Master seed; overrides config \"seed\"");
    app.add_option("--bootstrap", bootstrap, "Bootstrap replicates B; 0 disables")->check(CLI::NonNegativeNumber);
    app.add_option("--mode", mode, "estimate | simulate | sample | validate | oracle")
        ->check(CLI::IsMember({"estimate", "simulate", "sample", "validate", "oracle"}));
    CLI11_PARSE(app, argc, argv);

    disparity::RunConfig rc;
    try {
        rc = disparity::load_run_config(config_path);
        if (!data.empty()) rc.data_path = data;
        if (!out.empty()) rc.out_path = out;
        if (seed) rc.seed = *seed;
        if (!mode.empty()) rc.mode = disparity::parse_run_mode(mode);
        if (bootstrap) {
            if (*bootstrap == 0) {
                rc.bootstrap.reset();
            }
            else {
                if (!rc.bootstrap) rc.bootstrap = disparity::InferenceConfig{};
                rc.bootstrap->replicates = *bootstrap;
            }
        }
    }
    catch (const disparity::Error& e) {
        std::cerr << e.what() << "\n";
        std::cout << disparity::serialize_report(disparity::error_block(e));
        return disparity::exit_code(e.code());
    }

    auto result = disparity::run_pipeline(rc);
    if (rc.out_path.empty()) {
        std::cout << disparity::serialize_report(result.report);
    }
    if (result.status != 0) {
        std::cerr << result.report["error"]["message"].get<std::string>() << "\n";
    }
    return result.status;
}
