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
#pragma once

#include "disparity/inference.hpp"
#include "disparity/oracle_sim.hpp"
#include "disparity/sampling_design.hpp"
#include "disparity/table.hpp"
#include "disparity/trial_spec.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

namespace disparity {

enum class RunMode { Estimate, Simulate, Sample, Validate, Oracle };

const char* to_string(RunMode mode);
RunMode parse_run_mode(const std::string& text);

struct SamplingConfig {
    std::array<StageSizes, 2> sizes{};
    Normalization normalization = Normalization::Max;
    std::string output; // CSV of the realized sample; optional
};

struct RunConfig {
    RunMode mode = RunMode::Estimate;
    std::string data_path;
    std::string dag_path;
    std::optional<DagConfig> dag;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    Schema schema;
    std::map<std::string, std::string> enrollment_groups; // labels, echoed only
    TrialSpec spec;
    std::optional<InferenceConfig> bootstrap;
    SamplingConfig sampling;
    std::string replicates_out;
    std::string population_out;
};

// Relative paths are resolved against base_dir. Throws ConfigError.
RunConfig parse_run_config(const nlohmann::json& doc, const std::string& base_dir = "");
RunConfig load_run_config(const std::string& path);

DagConfig parse_dag(const nlohmann::json& doc);
DagConfig load_dag(const std::string& path);

TrialSpec parse_trial_spec(const nlohmann::json& doc);

nlohmann::json to_json(const TrialSpec& spec);
nlohmann::json to_json(const DagConfig& dag);
nlohmann::json to_json(const InferenceConfig& config);

} // namespace disparity
