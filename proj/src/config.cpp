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

#include <filesystem>
#include <fstream>
#include <set>

namespace disparity {

using nlohmann::json;

namespace {

const char* kModule = "cli";

[[noreturn]] void fail(const std::string& msg)
{
    throw Error(ErrorCode::ConfigError, kModule, msg);
}

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed)
{
    if (!obj.is_object()) {
        fail(where + " must be an object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.count(key)) {
            fail("unknown key '" + key + "' in " + where);
        }
    }
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where)
{
    try {
        return obj.at(key).get<T>();
    }
    catch (const json::exception& e) {
        fail(where + "." + key + ": " + e.what());
    }
}

template <typename T>
std::optional<T> get_opt(const json& obj, const char* key, const std::string& where)
{
    if (!obj.contains(key) || obj.at(key).is_null()) {
        return std::nullopt;
    }
    return get<T>(obj, key, where);
}

json read_json_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in) {
        fail("cannot open '" + path + "'");
    }
    try {
        return json::parse(in);
    }
    catch (const json::exception& e) {
        fail("'" + path + "' is not valid JSON: " + e.what());
    }
}

std::string resolve_path(const std::string& path, const std::string& base)
{
    if (path.empty() || base.empty() || std::filesystem::path(path).is_absolute()) {
        return path;
    }
    return (std::filesystem::path(base) / path).lexically_normal().string();
}

ColumnKind parse_column_kind(const std::string& s)
{
    if (s == "binary") return ColumnKind::Binary;
    if (s == "categorical") return ColumnKind::Categorical;
    if (s == "continuous") return ColumnKind::Continuous;
    fail("unknown column kind '" + s + "'");
}

OutcomeKind parse_outcome_kind(const std::string& s)
{
    if (s == "binary") return OutcomeKind::Binary;
    if (s == "continuous") return OutcomeKind::Continuous;
    fail("unknown outcome kind '" + s + "'");
}

Criterion parse_criterion(const json& j, const std::string& where)
{
    check_keys(j, where, {"var", "in", "min", "max"});
    Criterion c;
    c.var = get<std::string>(j, "var", where);
    if (j.contains("in")) {
        if (!j["in"].is_array()) {
            fail(where + ".in must be an array");
        }
        for (const auto& v : j["in"]) {
            if (v.is_string()) {
                c.in.push_back(v.get<std::string>());
            }
            else if (v.is_number()) {
                c.in.push_back(format_number(v.get<double>()));
            }
            else {
                fail(where + ".in holds a value that is neither text nor a number");
            }
        }
    }
    c.min = get_opt<double>(j, "min", where);
    c.max = get_opt<double>(j, "max", where);
    if (c.in.empty() && !c.min && !c.max) {
        fail(where + " needs at least one of in, min, max");
    }
    return c;
}

std::vector<Criterion> parse_criteria(const json& j, const std::string& where)
{
    std::vector<Criterion> out;
    if (j.is_null()) {
        return out;
    }
    if (!j.is_array()) {
        fail(where + " must be an array");
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        out.push_back(parse_criterion(j[i], where + "[" + std::to_string(i) + "]"));
    }
    return out;
}

json criterion_json(const Criterion& c)
{
    json j;
    j["var"] = c.var;
    if (!c.in.empty()) j["in"] = c.in;
    if (c.min) j["min"] = *c.min;
    if (c.max) j["max"] = *c.max;
    return j;
}

std::vector<CovariateSpec> parse_covariates(const json& j, const std::string& where)
{
    std::vector<CovariateSpec> out;
    if (j.is_null()) {
        return out;
    }
    if (!j.is_array()) {
        fail(where + " must be an array");
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto& item = j[i];
        CovariateSpec c;
        if (item.is_string()) {
            c.name = item.get<std::string>();
        }
        else {
            auto w = where + "[" + std::to_string(i) + "]";
            check_keys(item, w, {"name", "term", "knots", "knot_quantiles"});
            c.name = get<std::string>(item, "name", w);
            auto term = get_opt<std::string>(item, "term", w).value_or("linear");
            if (term == "linear") c.term = Term::Linear;
            else if (term == "categorical") c.term = Term::Categorical;
            else if (term == "spline") c.term = Term::Spline;
            else fail(w + ".term '" + term + "' is not linear, categorical or spline");
            if (auto k = get_opt<std::vector<double>>(item, "knots", w)) c.knots = *k;
            if (auto q = get_opt<std::vector<double>>(item, "knot_quantiles", w)) c.knot_quantiles = *q;
        }
        out.push_back(c);
    }
    return out;
}

json covariates_json(const std::vector<CovariateSpec>& list)
{
    json arr = json::array();
    for (const auto& c : list) {
        json j;
        j["name"] = c.name;
        j["term"] = to_string(c.term);
        if (c.term == Term::Spline) {
            if (c.knots.empty()) j["knot_quantiles"] = c.knot_quantiles;
            else j["knots"] = c.knots;
        }
        arr.push_back(j);
    }
    return arr;
}

Proposition parse_proposition(const std::string& s)
{
    if (s == "I") return Proposition::I;
    if (s == "II") return Proposition::II;
    if (s == "III") return Proposition::III;
    if (s == "IV") return Proposition::IV;
    fail("proposition must be I, II, III or IV, got '" + s + "'");
}

NodeRole parse_role(const std::string& s)
{
    for (auto r : {NodeRole::H, NodeRole::X, NodeRole::L, NodeRole::R, NodeRole::WDDagger, NodeRole::WDagger,
                   NodeRole::WPrime, NodeRole::Y}) {
        if (s == to_string(r)) return r;
    }
    fail("unknown node role '" + s + "'");
}

Link parse_link(const std::string& s)
{
    for (auto l : {Link::Logistic, Link::Linear, Link::Identity}) {
        if (s == to_string(l)) return l;
    }
    fail("unknown link '" + s + "'");
}

std::uint64_t parse_seed(const json& j, const std::string& where)
{
    if (j.is_number_unsigned()) {
        return j.get<std::uint64_t>();
    }
    if (j.is_number_integer() && j.get<std::int64_t>() >= 0) {
        return static_cast<std::uint64_t>(j.get<std::int64_t>());
    }
    fail(where + " must be a non-negative integer");
}

InferenceConfig parse_inference(const json& j)
{
    const std::string w = "bootstrap";
    check_keys(j, w, {"replicates", "mode", "level", "workers", "subsample"});
    InferenceConfig c;
    if (auto b = get_opt<int>(j, "replicates", w)) c.replicates = *b;
    auto mode = get_opt<std::string>(j, "mode", w).value_or("with_replacement");
    if (mode == "with_replacement") c.mode = ResampleMode::WithReplacement;
    else if (mode == "without_replacement") c.mode = ResampleMode::WithoutReplacement;
    else fail("bootstrap.mode must be with_replacement or without_replacement");
    if (auto l = get_opt<double>(j, "level", w)) c.level = *l;
    if (auto k = get_opt<int>(j, "workers", w)) c.workers = *k;
    if (auto m = get_opt<std::size_t>(j, "subsample", w)) c.subsample = *m;
    if (c.replicates < 1) fail("bootstrap.replicates must be at least 1");
    if (!(c.level > 0.0 && c.level < 1.0)) fail("bootstrap.level must lie in (0, 1)");
    if (c.workers < 1) fail("bootstrap.workers must be at least 1");
    return c;
}

SamplingConfig parse_sampling(const json& j, const std::string& base)
{
    const std::string w = "sampling";
    check_keys(j, w, {"sizes", "normalization", "output"});
    SamplingConfig c;
    const auto& sizes = j.at("sizes");
    check_keys(sizes, "sampling.sizes", {"0", "1"});
    for (int g = 0; g < 2; ++g) {
        auto key = std::to_string(g);
        auto v = get<std::vector<double>>(sizes, key.c_str(), "sampling.sizes");
        if (v.size() != 3) {
            fail("sampling.sizes." + key + " must be [N0, N1, N2]");
        }
        c.sizes[static_cast<std::size_t>(g)] = {v[0], v[1], v[2]};
    }
    auto norm = get_opt<std::string>(j, "normalization", w).value_or("max");
    if (norm == "max") c.normalization = Normalization::Max;
    else if (norm == "sum_to_one") c.normalization = Normalization::SumToOne;
    else fail("sampling.normalization must be max or sum_to_one");
    c.output = resolve_path(get_opt<std::string>(j, "output", w).value_or(""), base);
    return c;
}

} // namespace

const char* to_string(RunMode mode)
{
    switch (mode) {
    case RunMode::Estimate: return "estimate";
    case RunMode::Simulate: return "simulate";
    case RunMode::Sample: return "sample";
    case RunMode::Validate: return "validate";
    case RunMode::Oracle: return "oracle";
    }
    return "estimate";
}

RunMode parse_run_mode(const std::string& text)
{
    for (auto m : {RunMode::Estimate, RunMode::Simulate, RunMode::Sample, RunMode::Validate, RunMode::Oracle}) {
        if (text == to_string(m)) return m;
    }
    fail("unknown mode '" + text + "'");
}

TrialSpec parse_trial_spec(const json& doc)
{
    TrialSpec spec;
    if (doc.contains("eligibility")) {
        const auto& e = doc["eligibility"];
        check_keys(e, "eligibility", {"w_ddagger", "w_dagger", "w_prime", "prime_affected_by_dagger"});
        if (e.contains("w_ddagger")) spec.partition.w_ddagger = parse_criteria(e["w_ddagger"], "eligibility.w_ddagger");
        if (e.contains("w_dagger")) spec.partition.w_dagger = parse_criteria(e["w_dagger"], "eligibility.w_dagger");
        if (e.contains("w_prime")) spec.partition.w_prime = parse_criteria(e["w_prime"], "eligibility.w_prime");
        spec.partition.prime_affected_by_dagger =
            get_opt<bool>(e, "prime_affected_by_dagger", "eligibility").value_or(false);
    }
    if (doc.contains("allowables")) spec.allowables = parse_covariates(doc["allowables"], "allowables");
    if (doc.contains("non_allowables")) spec.non_allowables = parse_covariates(doc["non_allowables"], "non_allowables");
    if (doc.contains("standard")) {
        const auto& s = doc["standard"];
        if (s.is_string()) {
            auto k = s.get<std::string>();
            if (k == "marginalized") spec.standard.kind = StandardKind::MarginalizedGroup;
            else if (k == "privileged") spec.standard.kind = StandardKind::PrivilegedGroup;
            else if (k == "all_eligible") spec.standard.kind = StandardKind::AllEligible;
            else fail("standard must be marginalized, privileged, all_eligible or {\"predicate\": ...}");
        }
        else {
            check_keys(s, "standard", {"predicate"});
            spec.standard.kind = StandardKind::Predicate;
            spec.standard.predicate = parse_criterion(s.at("predicate"), "standard.predicate");
        }
    }
    if (doc.contains("time_zero")) {
        const auto& t = doc["time_zero"];
        check_keys(t, "time_zero", {"selection"});
        auto sel = get_opt<std::string>(t, "selection", "time_zero").value_or("per_time_unit");
        if (sel == "per_time_unit") spec.selection = TrialSelection::PerTimeUnit;
        else if (sel == "per_person") spec.selection = TrialSelection::PerPerson;
        else fail("time_zero.selection must be per_time_unit or per_person");
    }
    if (doc.contains("analysis")) {
        const auto& a = doc["analysis"];
        const std::string w = "analysis";
        check_keys(a, w, {"proposition", "estimator", "models", "truncation", "alternate_weights"});
        spec.proposition = parse_proposition(get_opt<std::string>(a, "proposition", w).value_or("I"));
        auto est = get_opt<std::string>(a, "estimator", w).value_or("weighting");
        if (est == "weighting") spec.estimator = EstimatorKind::Weighting;
        else if (est == "ice") spec.estimator = EstimatorKind::Ice;
        else if (est == "both") spec.estimator = EstimatorKind::Both;
        else fail("analysis.estimator must be weighting, ice or both");
        auto models = get_opt<std::string>(a, "models", w).value_or("main_effects");
        if (models == "main_effects") spec.models = ModelForm::MainEffects;
        else if (models == "saturated") spec.models = ModelForm::Saturated;
        else fail("analysis.models must be main_effects or saturated");
        spec.truncation = get_opt<double>(a, "truncation", w);
        spec.alternate_weights = get_opt<bool>(a, "alternate_weights", w).value_or(false);
    }
    try {
        check_spec(spec);
    }
    catch (const Error& e) {
        fail(e.what());
    }
    return spec;
}

DagConfig parse_dag(const json& doc)
{
    const std::string w = "dag";
    check_keys(doc, w, {"nodes", "n", "seed", "clusters", "time_units"});
    DagConfig dag;
    if (auto n = get_opt<std::size_t>(doc, "n", w)) dag.n = *n;
    if (doc.contains("seed")) dag.seed = parse_seed(doc["seed"], "dag.seed");
    if (auto c = get_opt<std::size_t>(doc, "clusters", w)) dag.clusters = *c;
    if (auto t = get_opt<std::int64_t>(doc, "time_units", w)) dag.time_units = *t;
    if (!doc.contains("nodes") || !doc["nodes"].is_array()) {
        fail("dag.nodes must be an array");
    }
    for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
        const auto& j = doc["nodes"][i];
        auto nw = "dag.nodes[" + std::to_string(i) + "]";
        check_keys(j, nw,
                   {"name", "role", "parents", "coefficients", "intercept", "interactions", "link", "noise_sd",
                    "cluster_sd"});
        DagNode node;
        node.name = get<std::string>(j, "name", nw);
        node.role = parse_role(get<std::string>(j, "role", nw));
        if (auto p = get_opt<std::vector<std::string>>(j, "parents", nw)) node.parents = *p;
        if (auto c = get_opt<std::vector<double>>(j, "coefficients", nw)) node.coefficients = *c;
        if (auto b = get_opt<double>(j, "intercept", nw)) node.intercept = *b;
        if (auto l = get_opt<std::string>(j, "link", nw)) node.link = parse_link(*l);
        if (auto s = get_opt<double>(j, "noise_sd", nw)) node.noise_sd = *s;
        if (auto s = get_opt<double>(j, "cluster_sd", nw)) node.cluster_sd = *s;
        if (j.contains("interactions")) {
            for (const auto& it : j["interactions"]) {
                check_keys(it, nw + ".interactions", {"a", "b", "coefficient"});
                node.interactions.push_back({get<std::string>(it, "a", nw), get<std::string>(it, "b", nw),
                                             get<double>(it, "coefficient", nw)});
            }
        }
        if (node.coefficients.size() != node.parents.size()) {
            fail(nw + ": coefficients and parents differ in length");
        }
        dag.nodes.push_back(node);
    }
    return dag;
}

DagConfig load_dag(const std::string& path)
{
    return parse_dag(read_json_file(path));
}

RunConfig parse_run_config(const json& doc, const std::string& base_dir)
{
    check_keys(doc, "config",
               {"mode", "data", "dag", "out", "seed", "columns", "outcome", "enrollment_groups", "eligibility",
                "allowables", "non_allowables", "standard", "time_zero", "analysis", "bootstrap", "sampling",
                "replicates_out", "population_out"});
    RunConfig rc;
    const std::string w = "config";
    if (auto m = get_opt<std::string>(doc, "mode", w)) rc.mode = parse_run_mode(*m);
    rc.data_path = resolve_path(get_opt<std::string>(doc, "data", w).value_or(""), base_dir);
    if (doc.contains("dag")) {
        if (doc["dag"].is_string()) {
            rc.dag_path = resolve_path(doc["dag"].get<std::string>(), base_dir);
        }
        else {
            rc.dag = parse_dag(doc["dag"]);
        }
    }
    rc.out_path = resolve_path(get_opt<std::string>(doc, "out", w).value_or(""), base_dir);
    if (doc.contains("seed") && !doc["seed"].is_null()) rc.seed = parse_seed(doc["seed"], "seed");
    if (doc.contains("columns")) {
        if (!doc["columns"].is_array()) fail("columns must be an array");
        for (std::size_t i = 0; i < doc["columns"].size(); ++i) {
            const auto& c = doc["columns"][i];
            auto cw = "columns[" + std::to_string(i) + "]";
            check_keys(c, cw, {"name", "kind"});
            rc.schema.covariates.push_back(
                {get<std::string>(c, "name", cw), parse_column_kind(get<std::string>(c, "kind", cw))});
        }
    }
    if (doc.contains("outcome")) {
        check_keys(doc["outcome"], "outcome", {"kind"});
        rc.schema.outcome = parse_outcome_kind(get<std::string>(doc["outcome"], "kind", "outcome"));
    }
    if (doc.contains("enrollment_groups")) {
        check_keys(doc["enrollment_groups"], "enrollment_groups", {"0", "1"});
        rc.enrollment_groups = get<std::map<std::string, std::string>>(doc, "enrollment_groups", w);
    }
    rc.spec = parse_trial_spec(doc);
    if (doc.contains("bootstrap") && !doc["bootstrap"].is_null()) rc.bootstrap = parse_inference(doc["bootstrap"]);
    if (doc.contains("sampling")) rc.sampling = parse_sampling(doc["sampling"], base_dir);
    rc.replicates_out = resolve_path(get_opt<std::string>(doc, "replicates_out", w).value_or(""), base_dir);
    rc.population_out = resolve_path(get_opt<std::string>(doc, "population_out", w).value_or(""), base_dir);
    return rc;
}

RunConfig load_run_config(const std::string& path)
{
    auto doc = read_json_file(path);
    auto base = std::filesystem::path(path).parent_path().string();
    return parse_run_config(doc, base);
}

json to_json(const TrialSpec& spec)
{
    json j;
    json e;
    auto crit = [](const std::vector<Criterion>& list) {
        json arr = json::array();
        for (const auto& c : list) arr.push_back(criterion_json(c));
        return arr;
    };
    e["w_ddagger"] = crit(spec.partition.w_ddagger);
    e["w_dagger"] = crit(spec.partition.w_dagger);
    e["w_prime"] = crit(spec.partition.w_prime);
    e["prime_affected_by_dagger"] = spec.partition.prime_affected_by_dagger;
    j["eligibility"] = e;
    j["allowables"] = covariates_json(spec.allowables);
    j["non_allowables"] = covariates_json(spec.non_allowables);
    if (spec.standard.kind == StandardKind::Predicate) {
        j["standard"] = {{"predicate", criterion_json(spec.standard.predicate)}};
    }
    else {
        j["standard"] = to_string(spec.standard.kind);
    }
    j["time_zero"] = {{"selection", spec.selection == TrialSelection::PerPerson ? "per_person" : "per_time_unit"}};
    json a;
    a["proposition"] = to_string(spec.proposition);
    a["estimator"] = to_string(spec.estimator);
    a["models"] = to_string(spec.models);
    a["truncation"] = spec.truncation ? json(*spec.truncation) : json(nullptr);
    a["alternate_weights"] = spec.alternate_weights;
    j["analysis"] = a;
    return j;
}

json to_json(const DagConfig& dag)
{
    json j;
    j["n"] = dag.n;
    j["seed"] = dag.seed;
    j["clusters"] = dag.clusters;
    j["time_units"] = dag.time_units;
    json nodes = json::array();
    for (const auto& n : dag.nodes) {
        json o;
        o["name"] = n.name;
        o["role"] = to_string(n.role);
        o["parents"] = n.parents;
        o["coefficients"] = n.coefficients;
        o["intercept"] = n.intercept;
        o["link"] = to_string(n.link);
        if (n.link == Link::Linear) o["noise_sd"] = n.noise_sd;
        if (n.cluster_sd != 0.0) o["cluster_sd"] = n.cluster_sd;
        if (!n.interactions.empty()) {
            json arr = json::array();
            for (const auto& it : n.interactions) {
                arr.push_back({{"a", it.a}, {"b", it.b}, {"coefficient", it.coefficient}});
            }
            o["interactions"] = arr;
        }
        nodes.push_back(o);
    }
    j["nodes"] = nodes;
    return j;
}

json to_json(const InferenceConfig& c)
{
    json j;
    j["replicates"] = c.replicates;
    j["mode"] = c.mode == ResampleMode::WithReplacement ? "with_replacement" : "without_replacement";
    j["level"] = c.level;
    j["subsample"] = c.subsample ? json(*c.subsample) : json(nullptr);
    return j;
}

} // namespace disparity
