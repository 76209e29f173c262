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
#include "disparity/validation.hpp"

#include "disparity/emulation.hpp"

#include <algorithm>
#include <map>

namespace disparity {

namespace {

double quantile_sorted(const std::vector<double>& v, double p)
{
    double h = (static_cast<double>(v.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(h);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

struct Discretizer {
    VarRef ref;
    std::string name;
    const std::vector<std::string>* labels = nullptr;
    std::vector<double> cuts; // non-empty only for continuous columns

    double code(const Record& rec) const
    {
        double v = ObservationTable::value(rec, ref);
        if (cuts.empty()) {
            return v;
        }
        return static_cast<double>(std::upper_bound(cuts.begin(), cuts.end(), v) - cuts.begin());
    }

    std::string describe(double code) const
    {
        if (!cuts.empty()) {
            return name + "=decile" + std::to_string(static_cast<int>(code) + 1);
        }
        if (labels) {
            return name + "=" + labels->at(static_cast<std::size_t>(code));
        }
        return name + "=" + format_number(code);
    }
};

std::vector<Discretizer> discretizers(const ObservationTable& table, const std::vector<CovariateSpec>& vars,
                                      const std::vector<std::size_t>& rows)
{
    std::vector<Discretizer> out;
    for (const auto& c : vars) {
        Discretizer d;
        d.ref = table.resolve(c.name);
        d.name = c.name;
        d.labels = table.labels_of(d.ref);
        if (table.kind_of(d.ref) == ColumnKind::Continuous && !rows.empty()) {
            std::vector<double> vals;
            for (auto i : rows) {
                vals.push_back(table.value(i, d.ref));
            }
            std::sort(vals.begin(), vals.end());
            for (int k = 1; k <= 9; ++k) {
                double q = quantile_sorted(vals, k / 10.0);
                if (d.cuts.empty() || q > d.cuts.back()) {
                    d.cuts.push_back(q);
                }
            }
        }
        out.push_back(std::move(d));
    }
    return out;
}

std::string describe(const std::vector<Discretizer>& ds, const std::vector<double>& key)
{
    if (ds.empty()) {
        return "(all)";
    }
    std::string s;
    for (std::size_t j = 0; j < ds.size(); ++j) {
        if (j) {
            s += ",";
        }
        s += ds[j].describe(key[j]);
    }
    return s;
}

std::vector<double> key_of(const std::vector<Discretizer>& ds, const Record& rec)
{
    std::vector<double> key;
    key.reserve(ds.size());
    for (const auto& d : ds) {
        key.push_back(d.code(rec));
    }
    return key;
}

} // namespace

ValidationReport validate_table(const ObservationTable& table, const TrialSpec& spec)
{
    ValidationReport report;
    ObservationTable annotated_copy;
    const ObservationTable* t = &table;
    if (!table.has_eligibility || !table.has_standard) {
        annotated_copy = assign_standard_membership(evaluate_eligibility(table, spec.partition), spec);
        t = &annotated_copy;
    }

    std::vector<std::size_t> eligible;
    for (std::size_t i = 0; i < t->size(); ++i) {
        if (t->records[i].flags.q == 1) {
            eligible.push_back(i);
        }
    }
    auto a_disc = discretizers(*t, spec.allowables, eligible);
    for (const auto& d : a_disc) {
        if (!d.cuts.empty()) {
            report.warnings.push_back("continuous allowable '" + d.name +
                                      "' screened by deciles; model-based extrapolation is not checked");
        }
    }
    std::map<std::vector<double>, StratumCount> strata;
    for (auto i : eligible) {
        const auto& rec = t->records[i];
        auto key = key_of(a_disc, rec);
        auto& s = strata[key];
        s.key = key;
        s.by_group[static_cast<std::size_t>(rec.group)] += 1;
        s.standard += static_cast<std::size_t>(rec.standard);
    }
    for (auto& [key, s] : strata) {
        s.stratum = describe(a_disc, key);
        for (int g = 0; g < 2; ++g) {
            if (s.by_group[static_cast<std::size_t>(g)] == 0) {
                report.violations.push_back({"A4", g, s.stratum});
            }
        }
        report.strata.push_back(s);
    }

    if (spec.proposition != Proposition::I) {
        std::vector<CovariateSpec> an = spec.allowables;
        an.insert(an.end(), spec.non_allowables.begin(), spec.non_allowables.end());
        std::vector<std::size_t> base;
        for (std::size_t i = 0; i < t->size(); ++i) {
            if (t->records[i].flags.q_ddagger == 1) {
                base.push_back(i);
            }
        }
        auto an_disc = discretizers(*t, an, base);
        std::map<std::pair<int, std::vector<double>>, SelectionCell> cells;
        for (auto i : base) {
            const auto& rec = t->records[i];
            auto key = key_of(an_disc, rec);
            auto& c = cells[{rec.group, key}];
            c.group = rec.group;
            c.key = key;
            c.q_ddagger += 1;
            c.q_dagger += static_cast<std::size_t>(rec.flags.q_dagger);
        }
        for (auto& [k, c] : cells) {
            c.stratum = describe(an_disc, c.key);
            if (c.q_dagger == 0) {
                report.violations.push_back({"A3", c.group, c.stratum});
            }
            report.selection_cells.push_back(c);
        }
    }
    return report;
}

} // namespace disparity
