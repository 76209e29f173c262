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
#include "disparity/pipeline.hpp"

#include "disparity/emulation.hpp"
#include "disparity/errors.hpp"
#include "disparity/estimators.hpp"
#include "disparity/report.hpp"
#include "disparity/rng.hpp"
#include "disparity/sampling_design.hpp"
#include "disparity/validation.hpp"

#include <filesystem>
#include <fstream>

namespace disparity {

using nlohmann::json;

namespace {

const char* kModule = "cli";

struct Seeds {
    std::uint64_t master = 0;
    std::uint64_t selection = 0;
    std::uint64_t bootstrap = 0;
    std::uint64_t sample = 0;
    std::uint64_t intervention = 0;
};

Seeds derive_seeds(const RunConfig& rc)
{
    if (!rc.seed) {
        throw Error(ErrorCode::ConfigError, kModule, "a seed is required (config \"seed\" or --seed)");
    }
    Seeds s;
    s.master = *rc.seed;
    s.selection = hash_combine(s.master, 1);
    s.bootstrap = hash_combine(s.master, 2);
    s.sample = hash_combine(s.master, 3);
    s.intervention = hash_combine(s.master, 4);
    return s;
}

ObservationTable load_data(const RunConfig& rc)
{
    if (rc.data_path.empty()) {
        throw Error(ErrorCode::ConfigError, kModule, std::string("mode '") + to_string(rc.mode) + "' needs a data path");
    }
    if (!std::filesystem::is_regular_file(rc.data_path)) {
        throw Error(ErrorCode::ConfigError, kModule, "data file '" + rc.data_path + "' does not exist");
    }
    return load_observations(rc.data_path, rc.schema);
}

DagConfig load_dag_config(const RunConfig& rc)
{
    if (rc.dag) {
        return *rc.dag;
    }
    if (rc.dag_path.empty()) {
        throw Error(ErrorCode::ConfigError, kModule, std::string("mode '") + to_string(rc.mode) + "' needs a dag");
    }
    if (!std::filesystem::is_regular_file(rc.dag_path)) {
        throw Error(ErrorCode::ConfigError, kModule, "dag file '" + rc.dag_path + "' does not exist");
    }
    return load_dag(rc.dag_path);
}

json group_counts(const ObservationTable& t)
{
    std::array<std::size_t, 2> n{0, 0};
    std::array<std::size_t, 2> qdd{0, 0}, qd{0, 0}, qp{0, 0}, q{0, 0}, tt{0, 0};
    for (const auto& r : t.records) {
        auto g = static_cast<std::size_t>(r.group);
        n[g] += 1;
        qdd[g] += r.flags.q_ddagger;
        qd[g] += r.flags.q_dagger;
        qp[g] += r.flags.q_prime;
        q[g] += r.flags.q;
        tt[g] += static_cast<std::size_t>(r.standard);
    }
    auto pair = [](const std::array<std::size_t, 2>& a) { return json{{"0", a[0]}, {"1", a[1]}}; };
    return {{"n_by_group", pair(n)},
            {"eligibility",
             {{"q_ddagger", pair(qdd)}, {"q_dagger", pair(qd)}, {"q_prime", pair(qp)}, {"q", pair(q)}, {"standard", pair(tt)}}}};
}

std::vector<EstimatorKind> kinds_of(EstimatorKind k)
{
    if (k == EstimatorKind::Both) {
        return {EstimatorKind::Weighting, EstimatorKind::Ice};
    }
    return {k};
}

json base_report(const RunConfig& rc, const Seeds& seeds)
{
    json j;
    j["mode"] = to_string(rc.mode);
    j["software_version"] = kSoftwareVersion;
    j["spec"] = to_json(rc.spec);
    j["enrollment_groups"] = rc.enrollment_groups;
    j["seeds"] = {{"master", seeds.master}, {"selection", seeds.selection}};
    return j;
}

json run_estimate(const RunConfig& rc, const Seeds& seeds)
{
    auto raw = load_data(rc);
    check_spec(rc.spec, raw);
    std::vector<std::string> warnings;
    auto prepared = prepare_trials(raw, rc.spec, seeds.selection, &warnings);
    auto validation = validate_table(prepared, rc.spec);

    json j = base_report(rc, seeds);
    j["records"] = raw.size();
    j["trials"] = prepared.size();
    j.update(group_counts(prepared));
    j["validation"] = to_json(validation);
    j["warnings"] = warnings;
    if (rc.bootstrap) {
        j["seeds"]["bootstrap"] = seeds.bootstrap;
        j["bootstrap"] = to_json(*rc.bootstrap);
    }
    else {
        j["bootstrap"] = nullptr;
    }

    json estimators = json::object();
    bool first = true;
    for (auto kind : kinds_of(rc.spec.estimator)) {
        auto est = estimate_disparity(prepared, rc.spec, kind, seeds.selection);
        if (rc.bootstrap) {
            auto cfg = *rc.bootstrap;
            cfg.seed = seeds.bootstrap;
            auto res = bootstrap_disparity(raw, rc.spec, kind, cfg, est.difference);
            attach_bootstrap(est, res);
            if (!rc.replicates_out.empty()) {
                auto path = rc.replicates_out;
                if (rc.spec.estimator == EstimatorKind::Both) {
                    path += std::string(".") + to_string(kind);
                }
                std::ofstream out(path);
                if (!out) {
                    throw Error(ErrorCode::IoError, kModule, "cannot write '" + path + "'");
                }
                write_replicates(out, est.replicates);
            }
        }
        auto ej = to_json(est);
        if (first) {
            j["tau_r"] = ej["tau_r"]["value"];
            j["tau_rprime"] = ej["tau_rprime"]["value"];
            j["difference"] = ej["difference"];
            j["ci"] = ej["ci"];
            j["weights"] = ej["weights"];
            j["replicate_failures"] = ej["replicate_failures"];
            first = false;
        }
        estimators[to_string(kind)] = ej;
    }
    j["estimators"] = estimators;
    return j;
}

json run_validate(const RunConfig& rc, const Seeds& seeds)
{
    auto raw = load_data(rc);
    check_spec(rc.spec, raw);
    std::vector<std::string> warnings;
    auto prepared = prepare_trials(raw, rc.spec, seeds.selection, &warnings);
    json j = base_report(rc, seeds);
    j["records"] = raw.size();
    j["trials"] = prepared.size();
    j.update(group_counts(prepared));
    j["validation"] = to_json(validate_table(prepared, rc.spec));
    j["warnings"] = warnings;
    return j;
}

json run_sample(const RunConfig& rc, const Seeds& seeds)
{
    auto raw = load_data(rc);
    check_spec(rc.spec, raw);
    std::vector<std::string> warnings;
    auto prepared = prepare_trials(raw, rc.spec, seeds.selection, &warnings);
    auto fractions = compute_sampling_fractions(prepared, rc.spec, rc.sampling.sizes);
    fractions = normalize_fractions(fractions, rc.sampling.normalization);
    auto sample = two_phase_sample(prepared, fractions, seeds.sample);
    if (!rc.sampling.output.empty()) {
        std::ofstream out(rc.sampling.output);
        if (!out) {
            throw Error(ErrorCode::IoError, kModule, "cannot write '" + rc.sampling.output + "'");
        }
        write_sample(out, sample);
    }
    json j = base_report(rc, seeds);
    j["seeds"]["sample"] = seeds.sample;
    j["records"] = raw.size();
    j["trials"] = prepared.size();
    j.update(group_counts(prepared));
    j["warnings"] = warnings;
    json sizes = json::object();
    for (int g = 0; g < 2; ++g) {
        const auto& s = rc.sampling.sizes[static_cast<std::size_t>(g)];
        sizes[std::to_string(g)] = {s.n0, s.n1, s.n2};
    }
    j["sizes"] = sizes;
    j["normalization"] = rc.sampling.normalization == Normalization::Max ? "max" : "sum_to_one";
    json strata = json::array();
    for (const auto& s : fractions.strata) {
        strata.push_back({{"group", s.group},
                          {"stratum", s.label},
                          {"count", s.count},
                          {"alpha1", s.alpha1},
                          {"alpha2", s.alpha2},
                          {"alpha1_star", s.alpha1_star},
                          {"alpha2_star", s.alpha2_star}});
    }
    j["strata"] = strata;
    std::array<std::array<std::size_t, 2>, 2> kept{};
    for (std::size_t i = 0; i < sample.table.size(); ++i) {
        auto g = static_cast<std::size_t>(sample.table.records[i].group);
        kept[g][0] += 1;
        kept[g][1] += sample.stage[i] == 2 ? 1 : 0;
    }
    j["sampled"] = {{"stage1", {{"0", kept[0][0]}, {"1", kept[1][0]}}},
                    {"stage2", {{"0", kept[0][1]}, {"1", kept[1][1]}}}};
    return j;
}

json truth_json(const TruthDisparity& t)
{
    auto one = [](const Truth& x) { return json{{"value", x.value}, {"se", x.se}}; };
    return {{"tau_r", one(t.tau_r)}, {"tau_rprime", one(t.tau_rprime)}, {"difference", one(t.difference)}};
}

SyntheticPopulation simulate_for(const RunConfig& rc, const Seeds& seeds, json& j)
{
    auto dag = load_dag_config(rc);
    auto pop = simulate_population(dag);
    bool can_intervene = !pop.w_dagger.empty() && !rc.spec.partition.w_dagger.empty();
    if (can_intervene) {
        pop = apply_stochastic_intervention(std::move(pop), rc.spec, seeds.intervention);
        j["seeds"]["intervention"] = seeds.intervention;
    }
    j["dag"] = to_json(dag);
    j["records"] = pop.table.size();
    j["intervened"] = pop.intervened;
    return pop;
}

json run_simulate(const RunConfig& rc, const Seeds& seeds)
{
    json j = base_report(rc, seeds);
    auto pop = simulate_for(rc, seeds, j);
    if (!rc.population_out.empty()) {
        std::ofstream out(rc.population_out);
        if (!out) {
            throw Error(ErrorCode::IoError, kModule, "cannot write '" + rc.population_out + "'");
        }
        write_population(out, pop);
    }
    auto flagged = assign_standard_membership(evaluate_eligibility(pop.table, rc.spec.partition), rc.spec);
    j.update(group_counts(flagged));
    if (rc.spec.proposition == Proposition::I || pop.intervened) {
        j["truth"] = truth_json(true_disparity(pop, rc.spec));
    }
    else {
        j["truth"] = nullptr;
    }
    return j;
}

json run_oracle(const RunConfig& rc, const Seeds& seeds)
{
    json j = base_report(rc, seeds);
    auto pop = simulate_for(rc, seeds, j);
    json props = json::object();
    for (auto p : {Proposition::I, Proposition::II, Proposition::III, Proposition::IV}) {
        TrialSpec s = rc.spec;
        s.proposition = p;
        try {
            check_spec(s, pop.table);
        }
        catch (const Error&) {
            continue;
        }
        if (p != Proposition::I && !pop.intervened) {
            continue;
        }
        json entry;
        entry["truth"] = truth_json(true_disparity(pop, s));
        auto prepared = prepare_trials(pop.table, s, seeds.selection);
        for (auto kind : {EstimatorKind::Weighting, EstimatorKind::Ice}) {
            try {
                entry[to_string(kind)] = to_json(estimate_disparity(prepared, s, kind, seeds.selection));
            }
            catch (const Error& e) {
                entry[to_string(kind)] = error_block(e);
            }
        }
        props[to_string(p)] = entry;
    }
    j["propositions"] = props;
    return j;
}

} // namespace

PipelineResult run_pipeline(const RunConfig& rc)
{
    PipelineResult result;
    try {
        auto seeds = derive_seeds(rc);
        switch (rc.mode) {
        case RunMode::Estimate: result.report = run_estimate(rc, seeds); break;
        case RunMode::Validate: result.report = run_validate(rc, seeds); break;
        case RunMode::Sample: result.report = run_sample(rc, seeds); break;
        case RunMode::Simulate: result.report = run_simulate(rc, seeds); break;
        case RunMode::Oracle: result.report = run_oracle(rc, seeds); break;
        }
        result.report["status"] = "ok";
    }
    catch (const Error& e) {
        result.status = exit_code(e.code());
        result.report = error_block(e);
        result.report["mode"] = to_string(rc.mode);
        result.report["software_version"] = kSoftwareVersion;
        result.report["status"] = "error";
    }
    catch (const std::exception& e) {
        result.status = 1;
        result.report = {{"error", {{"code", "InternalError"}, {"exit_code", 1}, {"module", kModule}, {"message", e.what()}}}};
        result.report["mode"] = to_string(rc.mode);
        result.report["software_version"] = kSoftwareVersion;
        result.report["status"] = "error";
    }
    if (!rc.out_path.empty()) {
        try {
            emit_report(result.report, rc.out_path);
        }
        catch (const Error& e) {
            if (result.status == 0) {
                result.status = exit_code(e.code());
            }
        }
    }
    return result;
}

} // namespace disparity
