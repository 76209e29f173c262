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
#include <map>
#include <string>
#include <vector>

namespace disparity {

enum class NodeRole { H, X, L, R, WDDagger, WDagger, WPrime, Y };
enum class Link { Logistic, Linear, Identity };

const char* to_string(NodeRole role);
const char* to_string(Link link);

struct Interaction {
    std::string a;
    std::string b;
    double coefficient = 0.0;
};

struct DagNode {
    std::string name;
    NodeRole role = NodeRole::X;
    std::vector<std::string> parents;
    std::vector<double> coefficients; // aligned with parents
    double intercept = 0.0;
    std::vector<Interaction> interactions;
    Link link = Link::Logistic;
    double noise_sd = 1.0;   // linear link only
    double cluster_sd = 0.0; // cluster-level shift on the linear predictor
};

struct DagConfig {
    std::vector<DagNode> nodes; // topological order
    std::size_t n = 1000;
    std::uint64_t seed = 1;
    std::size_t clusters = 1;
    std::int64_t time_units = 1;
};

// Throws BadDag on unknown/late parents, role-order violations, or more than
// one R, Y or W-dagger node.
void validate_dag(const DagConfig& dag);

// Copy of the DAG with the edge from -> to removed.
DagConfig without_edge(const DagConfig& dag, const std::string& from, const std::string& to);
bool has_edge(const DagConfig& dag, const std::string& from, const std::string& to);

struct SyntheticPopulation {
    ObservationTable table;
    DagConfig dag;
    std::string w_dagger; // empty when the DAG has no W-dagger node
    // Values of every node after W-dagger under W-dagger forced to 0 and 1,
    // sharing the exogenous draws of the observed world.
    std::map<std::string, std::vector<std::array<double, 2>>> potential;
    std::vector<std::array<double, 2>> y_potential;

    bool intervened = false;
    std::vector<double> g_w_dagger;
    std::vector<double> g_outcome;
    std::vector<EligibilityFlags> g_flags;
};

SyntheticPopulation simulate_population(const DagConfig& dag);

// Redraws W-dagger from donors in the same (W-ddagger values, A values, R)
// cell, then recomputes eligibility and attaches Y(G) from the potentials.
SyntheticPopulation apply_stochastic_intervention(SyntheticPopulation pop, const TrialSpec& spec, std::uint64_t seed);

// Population CSV with truth_ columns appended.
void write_population(std::ostream& out, const SyntheticPopulation& pop);

struct Truth {
    double value = 0.0;
    double se = 0.0;
};

struct TruthDisparity {
    Truth tau_r;
    Truth tau_rprime;
    Truth difference;
};

// Direct grouped means over the (counterfactual) columns. Prop I uses the
// observed eligible population; Props II-IV need an intervened population.
Truth true_tau(const SyntheticPopulation& pop, const TrialSpec& spec, int group);
TruthDisparity true_disparity(const SyntheticPopulation& pop, const TrialSpec& spec);

// Evaluates the identifying formula of the proposition by enumeration over
// discrete (n, a) strata with empirical conditional frequencies.
double brute_force_identify(const ObservationTable& table, const TrialSpec& spec, int group);
double brute_force_identify(const ObservationTable& table, const TrialSpec& spec, Proposition proposition, int group);

} // namespace disparity
