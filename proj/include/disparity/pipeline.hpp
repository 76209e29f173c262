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

#include "disparity/config.hpp"

#include <nlohmann/json.hpp>

namespace disparity {

struct PipelineResult {
    int status = 0; // 0 or exit_code of the failing error
    nlohmann::json report;
};

// Runs one analysis end to end. Errors are reported, never thrown: the report
// then holds an error block. The report is written to config.out_path when set.
PipelineResult run_pipeline(const RunConfig& config);

} // namespace disparity
