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
#include "disparity/sampling_design.hpp"

#include "disparity/emulation.hpp"
#include "disparity/errors.hpp"
#include "disparity/estimators.hpp"
#include "disparity/rng.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <sstream>

namespace disparity {

namespace {

const char* kModule = "sampling_design";

std::vector<VarRef> key_refs(const ObservationTable& t, const std::vector<std::string>& vars)
{
    std::vector<VarRef> out;
    for (const auto& v : vars) {
        out.push_back(t.resolve(v));
    }
    return out;
}

std::vector<double> key_of(const ObservationTable& t, std::size_t i, const std::vector<VarRef>& refs)
{
    std::vector<double> k;
    for (auto ref : refs) {
        k.push_back(t.value(i, ref));
    }
    return k;
}

} // namespace

const Stratum* SamplingFractions::find(int group, const std::vector<double>& key) const
{
    auto it = std::lower_bound(strata.begin(), strata.end(), std::make_pair(group, key),
                               [](const Stratum& s, const std::pair<int, std::vector<double>>& v) {
                                   return std::tie(s.group, s.key) < std::tie(v.first, v.second);
                               });
    if (it == strata.end() || it->group != group || it->key != key) {
        return nullptr;
    }
    return &*it;
}

SamplingFractions compute_sampling_fractions(const ObservationTable& raw, const TrialSpec& spec,
                                             const std::array<StageSizes, 2>& sizes)
{
    for (const auto& s : sizes) {
        if (!(s.n2 > 0.0 && s.n1 >= s.n2 && s.n0 >= s.n1)) {
            throw Error(ErrorCode::SpecMismatch, kModule, "stage sizes must satisfy N0 >= N1 >= N2 > 0");
        }
    }
    ObservationTable t = (raw.has_eligibility && raw.has_standard)
                             ? raw
                             : assign_standard_membership(evaluate_eligibility(raw, spec.partition), spec);
    SamplingFractions out;
    out.proposition = spec.proposition;
    out.sizes = sizes;
    for (const auto& a : spec.allowables) {
        out.key_vars.push_back(a.name);
    }
    for (const auto& n : spec.non_allowables) {
        out.key_vars.push_back(n.name);
    }
    auto refs = key_refs(t, out.key_vars);

    for (int r = 1; r >= 0; --r) {
        WeightVector full;
        WeightVector stage1;
        try {
            full = compute_weights(t, spec, r);
            stage1 = compute_weights(t, spec, r, StandardPopulation::group(r));
        }
        catch (const Error& e) {
            if (e.code() == ErrorCode::PositivityViolation || e.code() == ErrorCode::SpecMismatch) {
                throw Error(e.code(), kModule, e.what());
            }
            throw;
        }
        const auto& sz = sizes[static_cast<std::size_t>(r)];
        double sum1 = 0.0;
        double sumf = 0.0;
        for (std::size_t k = 0; k < full.rows.size(); ++k) {
            sum1 += stage1.omega[k];
            sumf += full.omega[k];
        }
        if (!(sum1 > 0.0) || !(sumf > 0.0)) {
            throw Error(ErrorCode::PositivityViolation, kModule, "group " + std::to_string(r) + " has no design mass");
        }
        const double mean1 = sum1 / static_cast<double>(full.rows.size());
        std::map<std::vector<double>, Stratum> strata;
        for (std::size_t k = 0; k < full.rows.size(); ++k) {
            auto key = key_of(t, full.rows[k], refs);
            auto& s = strata[key];
            if (s.count == 0) {
                s.group = r;
                s.key = key;
                s.alpha1 = (sz.n1 / sz.n0) * (stage1.omega[k] / mean1);
                double ratio = stage1.omega[k] > 0.0 ? full.omega[k] / stage1.omega[k] : 0.0;
                s.alpha2 = (sz.n2 / sz.n1) * ratio * (sum1 / sumf);
                std::string label;
                for (std::size_t j = 0; j < key.size(); ++j) {
                    label += (j ? "," : "") + out.key_vars[j] + "=" + format_number(key[j]);
                }
                s.label = label.empty() ? "(all)" : label;
            }
            s.count += 1;
        }
        for (auto& [key, s] : strata) {
            out.strata.push_back(s);
        }
    }
    std::sort(out.strata.begin(), out.strata.end(),
              [](const Stratum& a, const Stratum& b) { return std::tie(a.group, a.key) < std::tie(b.group, b.key); });
    for (auto& s : out.strata) {
        s.alpha1_star = s.alpha1;
        s.alpha2_star = s.alpha2;
    }
    return out;
}

SamplingFractions normalize_fractions(SamplingFractions f, Normalization mode)
{
    for (int g = 0; g < 2; ++g) {
        for (int stage = 1; stage <= 2; ++stage) {
            double mx = 0.0;
            double total = 0.0;
            bool any = false;
            for (const auto& s : f.strata) {
                if (s.group != g) {
                    continue;
                }
                any = true;
                double a = stage == 1 ? s.alpha1 : s.alpha2;
                mx = std::max(mx, a);
                total += a;
            }
            if (!any) {
                continue;
            }
            if (!(mx > 0.0)) {
                throw Error(ErrorCode::DegenerateFractions, kModule,
                            "all stage-" + std::to_string(stage) + " fractions are zero for group " + std::to_string(g));
            }
            double scale = mode == Normalization::Max ? std::max(1.0, mx) : total;
            for (auto& s : f.strata) {
                if (s.group != g) {
                    continue;
                }
                if (stage == 1) {
                    s.alpha1_star = s.alpha1 / scale;
                }
                else {
                    s.alpha2_star = s.alpha2 / scale;
                }
            }
        }
    }
    f.normalized = true;
    f.normalization = mode;
    return f;
}

ObservationTable TwoPhaseSample::final_sample() const
{
    ObservationTable out;
    out.columns = table.columns;
    out.outcome_kind = table.outcome_kind;
    out.has_eligibility = table.has_eligibility;
    out.has_standard = table.has_standard;
    for (std::size_t i = 0; i < table.size(); ++i) {
        if (stage[i] == 2) {
            out.records.push_back(table.records[i]);
        }
    }
    return out;
}

TwoPhaseSample two_phase_sample(const ObservationTable& table, const SamplingFractions& fractions, std::uint64_t seed)
{
    if (!table.has_eligibility) {
        throw Error(ErrorCode::SpecMismatch, kModule, "two-phase sampling needs eligibility annotations");
    }
    auto refs = key_refs(table, fractions.key_vars);
    TwoPhaseSample out;
    out.table.columns = table.columns;
    out.table.outcome_kind = table.outcome_kind;
    out.table.has_eligibility = table.has_eligibility;
    out.table.has_standard = table.has_standard;
    for (std::size_t i = 0; i < table.size(); ++i) {
        const auto& rec = table.records[i];
        if (rec.flags.q != 1) {
            continue;
        }
        const Stratum* s = fractions.find(rec.group, key_of(table, i, refs));
        if (!s) {
            continue;
        }
        double a1 = fractions.normalized ? s->alpha1_star : std::min(1.0, s->alpha1);
        double a2 = fractions.normalized ? s->alpha2_star : std::min(1.0, s->alpha2);
        Stream rng(hash_combine(seed, 0x73616d70ULL, i));
        double u1 = rng.uniform();
        double u2 = rng.uniform();
        if (u1 >= a1) {
            continue;
        }
        out.table.records.push_back(rec);
        out.stage.push_back(u2 < a2 ? 2 : 1);
    }
    return out;
}

void write_sample(std::ostream& out, const TwoPhaseSample& sample)
{
    std::ostringstream base;
    write_observations(base, sample.table);
    std::istringstream lines(base.str());
    std::string line;
    std::getline(lines, line);
    out << line << ",stage\n";
    std::size_t i = 0;
    while (std::getline(lines, line)) {
        out << line << ',' << sample.stage[i++] << '\n';
    }
}

} // namespace disparity
