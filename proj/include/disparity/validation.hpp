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

#include "disparity/table.hpp"
#include "disparity/trial_spec.hpp"

#include <array>
#include <string>
#include <vector>

namespace disparity {

struct StratumCount {
    std::string stratum;
    std::vector<double> key;
    std::array<std::size_t, 2> by_group{0, 0};
    std::size_t standard = 0;
};

struct SelectionCell {
    int group = 0;
    std::string stratum;
    std::vector<double> key;
    std::size_t q_ddagger = 0;
    std::size_t q_dagger = 0;
};

struct Violation {
    std::string assumption; // "A4" overlap or "A3" positivity of selection
    int group = 0;
    std::string stratum;
};

struct ValidationReport {
    std::vector<StratumCount> strata;          // A strata among Q = 1
    std::vector<SelectionCell> selection_cells; // (A, N) cells among Q-ddagger = 1, Props II-IV
    std::vector<Violation> violations;
    std::vector<std::string> warnings;
};

// Continuous covariates are screened after binning into deciles of the
// screened subset.
ValidationReport validate_table(const ObservationTable& table, const TrialSpec& spec);

} // namespace disparity
