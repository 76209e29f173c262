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
#include "disparity/models.hpp"
#include "disparity/table.hpp"
#include "disparity/trial_spec.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace disparity {

struct WeightDiagnostics {
    std::size_t count = 0;
    double mean = 0.0;
    double min = 0.0;
    double max = 0.0;
};

WeightDiagnostics summarize_weights(const std::vector<double>& w);

struct WeightVector {
    Proposition proposition = Proposition::I;
    int group = 1;
    bool alternate = false;
    // Reference subpopulation {Q = 1, R = group}, as table row indices.
    std::vector<std::size_t> rows;
    std::vector<double> omega;
    // Factor name -> per-row values aligned with rows; omega is their product.
    std::map<std::string, std::vector<double>> factors;
    WeightDiagnostics diagnostics;
    std::vector<ModelAudit> models;
    std::vector<std::string> notes;
};

struct TauEstimate {
    int group = 1;
    double value = 0.0;
    EstimatorKind kind = EstimatorKind::Weighting;
    std::size_t reference_rows = 0;
    std::vector<ModelAudit> models;
    std::optional<WeightDiagnostics> weights;
    std::vector<std::string> notes;
};

struct DisparityEstimate {
    EstimatorKind kind = EstimatorKind::Weighting;
    TauEstimate tau_r;      // R = 1
    TauEstimate tau_rprime; // R = 0
    double difference = 0.0;
    std::optional<std::pair<double, double>> ci;
    std::vector<double> replicates;
    std::size_t replicate_failures = 0;
    std::uint64_t seed = 0;
    std::optional<WeightDiagnostics> weights; // both groups pooled
    std::vector<std::string> notes;
};

// Weights for the reference subpopulation {Q = 1, R = group}. The override
// form replaces the standard population selector.
WeightVector compute_weights(const ObservationTable& table, const TrialSpec& spec, int group);
WeightVector compute_weights(const ObservationTable& table, const TrialSpec& spec, int group,
                             const StandardPopulation& standard);

TauEstimate estimate_tau_weighting(const ObservationTable& table, const TrialSpec& spec, int group);
TauEstimate estimate_tau_ice(const ObservationTable& table, const TrialSpec& spec, int group);

// kind must be Weighting or Ice. With a bootstrap config the full trial
// preparation and estimation is replayed on cluster resamples.
// Expects a prepared table (one trial per person-time); eligibility flags are
// evaluated when missing.
DisparityEstimate estimate_disparity(const ObservationTable& table, const TrialSpec& spec, EstimatorKind kind,
                                     std::uint64_t seed = 0);

// Cluster bootstrap of the difference on the raw table; each replicate redoes
// trial selection with its own seed.
BootstrapResult bootstrap_disparity(const ObservationTable& raw, const TrialSpec& spec, EstimatorKind kind,
                                    const InferenceConfig& config, std::optional<double> point = std::nullopt);

void attach_bootstrap(DisparityEstimate& est, const BootstrapResult& res);

} // namespace disparity
