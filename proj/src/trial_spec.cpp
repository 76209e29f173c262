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
#include "disparity/trial_spec.hpp"

#include "disparity/errors.hpp"

#include <algorithm>
#include <charconv>
#include <set>

namespace disparity {

namespace {

const char* kModule = "data_model";

std::optional<double> parse_number(const std::string& s)
{
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        return std::nullopt;
    }
    return v;
}

} // namespace

BoundCriterion::BoundCriterion(const ObservationTable& table, const Criterion& c)
    : ref_(table.resolve(c.var))
    , has_values_(!c.in.empty())
    , min_(c.min)
    , max_(c.max)
{
    const auto* labels = table.labels_of(ref_);
    for (const auto& text : c.in) {
        if (labels) {
            auto it = std::find(labels->begin(), labels->end(), text);
            if (it != labels->end()) {
                values_.push_back(static_cast<double>(it - labels->begin()));
            }
            continue;
        }
        auto v = parse_number(text);
        if (!v) {
            throw Error(ErrorCode::BadValue, kModule, "criterion on '" + c.var + "' lists non-numeric value '" + text + "'");
        }
        values_.push_back(*v);
    }
    std::sort(values_.begin(), values_.end());
}

bool BoundCriterion::admits_value(double v) const
{
    if (has_values_ && !std::binary_search(values_.begin(), values_.end(), v)) {
        return false;
    }
    if (min_ && v < *min_) {
        return false;
    }
    if (max_ && v > *max_) {
        return false;
    }
    return true;
}

bool BoundCriterion::admits(const Record& rec) const
{
    return admits_value(ObservationTable::value(rec, ref_));
}

const char* to_string(Proposition p)
{
    switch (p) {
    case Proposition::I: return "I";
    case Proposition::II: return "II";
    case Proposition::III: return "III";
    case Proposition::IV: return "IV";
    }
    return "I";
}

const char* to_string(EstimatorKind k)
{
    switch (k) {
    case EstimatorKind::Weighting: return "weighting";
    case EstimatorKind::Ice: return "ice";
    case EstimatorKind::Both: return "both";
    }
    return "weighting";
}

const char* to_string(StandardKind k)
{
    switch (k) {
    case StandardKind::MarginalizedGroup: return "marginalized";
    case StandardKind::PrivilegedGroup: return "privileged";
    case StandardKind::AllEligible: return "all_eligible";
    case StandardKind::Predicate: return "predicate";
    }
    return "marginalized";
}

const char* to_string(ModelForm f)
{
    return f == ModelForm::Saturated ? "saturated" : "main_effects";
}

const char* to_string(Term t)
{
    switch (t) {
    case Term::Linear: return "linear";
    case Term::Categorical: return "categorical";
    case Term::Spline: return "spline";
    }
    return "linear";
}

void check_spec(const TrialSpec& spec)
{
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::SpecMismatch, "data_model", msg); };
    const auto& p = spec.partition;
    std::set<std::string> partition_vars;
    for (const auto* list : {&p.w_ddagger, &p.w_dagger, &p.w_prime}) {
        std::set<std::string> local;
        for (const auto& c : *list) {
            local.insert(c.var);
        }
        for (const auto& v : local) {
            if (!partition_vars.insert(v).second) {
                fail("eligibility variable '" + v + "' appears in more than one partition component");
            }
        }
    }
    std::set<std::string> a_names;
    for (const auto& a : spec.allowables) {
        if (!a_names.insert(a.name).second) {
            fail("allowable '" + a.name + "' listed twice");
        }
        if (partition_vars.count(a.name)) {
            fail("allowable '" + a.name + "' is also an eligibility variable");
        }
    }
    std::set<std::string> n_names;
    for (const auto& n : spec.non_allowables) {
        if (!n_names.insert(n.name).second) {
            fail("non-allowable '" + n.name + "' listed twice");
        }
        if (a_names.count(n.name)) {
            fail("'" + n.name + "' is both allowable and non-allowable");
        }
        if (partition_vars.count(n.name)) {
            fail("non-allowable '" + n.name + "' is also an eligibility variable");
        }
    }
    for (const auto* list : {&spec.allowables, &spec.non_allowables}) {
        for (const auto& c : *list) {
            if (c.name == kGroupColumn) {
                fail("R cannot be used as a model covariate");
            }
            if (!c.knots.empty() && !std::is_sorted(c.knots.begin(), c.knots.end())) {
                fail("knots for '" + c.name + "' are not sorted");
            }
        }
    }
    switch (spec.proposition) {
    case Proposition::I:
        if (!p.w_prime.empty()) {
            fail("Proposition I requires an empty W' component");
        }
        break;
    case Proposition::II:
        if (p.w_dagger.empty() || !p.w_prime.empty()) {
            fail("Proposition II requires a nonempty W-dagger component and an empty W' component");
        }
        break;
    case Proposition::III:
        if (p.w_dagger.empty() || p.w_prime.empty()) {
            fail("Proposition III requires nonempty W-dagger and W' components");
        }
        if (p.prime_affected_by_dagger) {
            fail("Proposition III requires prime_affected_by_dagger = false");
        }
        break;
    case Proposition::IV:
        if (p.w_dagger.empty() || p.w_prime.empty()) {
            fail("Proposition IV requires nonempty W-dagger and W' components");
        }
        if (!p.prime_affected_by_dagger) {
            fail("Proposition IV requires prime_affected_by_dagger = true");
        }
        break;
    }
    if (spec.truncation && !(*spec.truncation > 0.0 && *spec.truncation < 0.5)) {
        fail("truncation percentile must lie in (0, 0.5)");
    }
    if (spec.standard.kind == StandardKind::Predicate && spec.standard.predicate.var.empty()) {
        fail("predicate standard population needs a variable");
    }
}

void check_spec(const TrialSpec& spec, const ObservationTable& table)
{
    check_spec(spec);
    const auto& p = spec.partition;
    for (const auto* list : {&p.w_ddagger, &p.w_dagger, &p.w_prime}) {
        for (const auto& c : *list) {
            table.resolve(c.var);
        }
    }
    for (const auto* list : {&spec.allowables, &spec.non_allowables}) {
        for (const auto& c : *list) {
            table.resolve(c.name);
        }
    }
    if (spec.standard.kind == StandardKind::Predicate) {
        table.resolve(spec.standard.predicate.var);
    }
}

} // namespace disparity
