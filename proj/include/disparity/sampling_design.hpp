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
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace disparity {

struct StageSizes {
    double n0 = 1.0;
    double n1 = 1.0;
    double n2 = 1.0;
};

enum class Normalization { Max, SumToOne };

struct Stratum {
    int group = 0;
    std::vector<double> key; // allowable values then non-allowable values
    std::string label;
    std::size_t count = 0;   // eligible records in the frame
    double alpha1 = 0.0;
    double alpha2 = 0.0;
    double alpha1_star = 0.0;
    double alpha2_star = 0.0;
};

struct SamplingFractions {
    Proposition proposition = Proposition::I;
    std::array<StageSizes, 2> sizes{}; // indexed by group
    std::vector<std::string> key_vars;
    std::vector<Stratum> strata;       // sorted by (group, key)
    bool normalized = false;
    Normalization normalization = Normalization::Max;

    const Stratum* find(int group, const std::vector<double>& key) const;
};

// Stage-1 fractions realize the intervened group-r population, stage-2
// fractions standardize its allowables to the standard population. Requires
// n0 >= n1 >= n2 > 0 per group.
SamplingFractions compute_sampling_fractions(const ObservationTable& table, const TrialSpec& spec,
                                             const std::array<StageSizes, 2>& sizes);

// Max: divide by max(1, largest fraction) per group and stage. SumToOne:
// divide by the stage total. Throws DegenerateFractions when a stage is all zero.
SamplingFractions normalize_fractions(SamplingFractions fractions, Normalization mode = Normalization::Max);

struct TwoPhaseSample {
    ObservationTable table;  // stage-1 survivors
    std::vector<int> stage;  // 1 = stage 1 only, 2 = also kept at stage 2
    ObservationTable final_sample() const;
};

// Independent Bernoulli thinning of the eligible frame {Q = 1}.
TwoPhaseSample two_phase_sample(const ObservationTable& table, const SamplingFractions& fractions, std::uint64_t seed);

void write_sample(std::ostream& out, const TwoPhaseSample& sample);

} // namespace disparity
