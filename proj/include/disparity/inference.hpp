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

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace disparity {

enum class ResampleMode { WithReplacement, WithoutReplacement };

struct InferenceConfig {
    int replicates = 1000;
    ResampleMode mode = ResampleMode::WithReplacement;
    double level = 0.95;
    std::uint64_t seed = 0;
    int workers = 1;
    // Subsample size for without_replacement; defaults to half the clusters.
    std::optional<std::size_t> subsample;
};

// Estimator contract: pure given (table, seed).
using ReplicateFn = std::function<double(const ObservationTable&, std::uint64_t)>;

struct BootstrapResult {
    double point = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    std::vector<double> replicates; // NaN marks a failed replicate
    std::size_t failures = 0;
    std::vector<std::string> warnings;
};

std::uint64_t replicate_seed(std::uint64_t master, std::size_t b);

// Draws clusters and concatenates their records. Repeated draws of a cluster
// get "~k" suffixes on cluster_id and person_id so copies stay distinct people.
ObservationTable resample_clusters(const ObservationTable& table, ResampleMode mode, std::uint64_t seed,
                                   std::optional<std::size_t> subsample = std::nullopt);

// Indices of the clusters drawn by one resample (with multiplicity).
std::vector<std::size_t> draw_clusters(std::size_t clusters, ResampleMode mode, std::uint64_t seed,
                                       std::optional<std::size_t> subsample = std::nullopt);

BootstrapResult cluster_bootstrap(const ObservationTable& table, const InferenceConfig& config, const ReplicateFn& estimator,
                                  std::optional<double> point = std::nullopt);

double percentile(std::vector<double> values, double p);

void write_replicates(std::ostream& out, const std::vector<double>& replicates);

} // namespace disparity
