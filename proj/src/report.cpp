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
#include "disparity/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <ostream>

namespace disparity {

using nlohmann::json;

json round_numbers(const json& doc)
{
    if (doc.is_number_float()) {
        double v = doc.get<double>();
        if (!std::isfinite(v)) {
            return nullptr;
        }
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.10g", v);
        double r = std::strtod(buf, nullptr);
        return r == 0.0 ? 0.0 : r; // drop negative zero
    }
    if (doc.is_array()) {
        json out = json::array();
        for (const auto& v : doc) {
            out.push_back(round_numbers(v));
        }
        return out;
    }
    if (doc.is_object()) {
        json out = json::object();
        for (const auto& [k, v] : doc.items()) {
            out[k] = round_numbers(v);
        }
        return out;
    }
    return doc;
}

std::string serialize_report(const json& doc)
{
    return round_numbers(doc).dump(2) + "\n";
}

void emit_report(const json& doc, std::ostream& out)
{
    out << serialize_report(doc);
    if (!out) {
        throw Error(ErrorCode::IoError, "cli", "failed writing report");
    }
}

void emit_report(const json& doc, const std::string& path)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, "cli", "cannot write '" + path + "'");
    }
    emit_report(doc, out);
}

json to_json(const WeightDiagnostics& w)
{
    return {{"count", w.count}, {"mean", w.mean}, {"min", w.min}, {"max", w.max}};
}

json to_json(const ModelAudit& m)
{
    return {{"name", m.name},           {"kind", m.kind},           {"rows", m.rows},
            {"parameters", m.parameters}, {"converged", m.converged}, {"iterations", m.iterations}};
}

json to_json(const TauEstimate& t)
{
    json j;
    j["group"] = t.group;
    j["value"] = t.value;
    j["estimator"] = to_string(t.kind);
    j["reference_rows"] = t.reference_rows;
    json models = json::array();
    for (const auto& m : t.models) {
        models.push_back(to_json(m));
    }
    j["models"] = models;
    j["weights"] = t.weights ? to_json(*t.weights) : json(nullptr);
    j["notes"] = t.notes;
    return j;
}

json to_json(const DisparityEstimate& d)
{
    json j;
    j["estimator"] = to_string(d.kind);
    j["tau_r"] = to_json(d.tau_r);
    j["tau_rprime"] = to_json(d.tau_rprime);
    j["difference"] = d.difference;
    j["ci"] = d.ci ? json::array({d.ci->first, d.ci->second}) : json(nullptr);
    j["replicates"] = d.replicates.size();
    j["replicate_failures"] = d.replicate_failures;
    j["weights"] = d.weights ? to_json(*d.weights) : json(nullptr);
    j["notes"] = d.notes;
    return j;
}

json to_json(const ValidationReport& v)
{
    json strata = json::array();
    for (const auto& s : v.strata) {
        strata.push_back({{"stratum", s.stratum},
                          {"group_0", s.by_group[0]},
                          {"group_1", s.by_group[1]},
                          {"standard", s.standard}});
    }
    json cells = json::array();
    for (const auto& c : v.selection_cells) {
        cells.push_back(
            {{"group", c.group}, {"stratum", c.stratum}, {"q_ddagger", c.q_ddagger}, {"q_dagger", c.q_dagger}});
    }
    json violations = json::array();
    for (const auto& x : v.violations) {
        violations.push_back({{"assumption", x.assumption}, {"group", x.group}, {"stratum", x.stratum}});
    }
    return {{"strata", strata},
            {"selection_cells", cells},
            {"violations", violations},
            {"warnings", v.warnings},
            {"ok", v.violations.empty()}};
}

json error_block(const Error& e)
{
    return {{"error",
             {{"code", error_name(e.code())},
              {"exit_code", exit_code(e.code())},
              {"module", e.module()},
              {"message", e.what()}}}};
}

} // namespace disparity
