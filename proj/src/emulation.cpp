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
#include "disparity/emulation.hpp"

#include "disparity/errors.hpp"
#include "disparity/rng.hpp"

#include <algorithm>
#include <numeric>
#include <set>

namespace disparity {

namespace {

int all_admit(const std::vector<BoundCriterion>& crit, const Record& rec)
{
    for (const auto& c : crit) {
        if (!c.admits(rec)) {
            return 0;
        }
    }
    return 1;
}

std::vector<BoundCriterion> bind_criteria(const ObservationTable& table, const std::vector<Criterion>& list)
{
    std::vector<BoundCriterion> out;
    for (const auto& c : list) {
        auto ref = table.find(c.var);
        if (!ref) {
            throw Error(ErrorCode::UnknownVariable, "emulation", "eligibility criterion references absent column '" + c.var + "'");
        }
        out.emplace_back(table, c);
    }
    return out;
}

} // namespace

ObservationTable evaluate_eligibility(ObservationTable table, const EligibilityPartition& partition)
{
    auto dd = bind_criteria(table, partition.w_ddagger);
    auto d = bind_criteria(table, partition.w_dagger);
    auto p = bind_criteria(table, partition.w_prime);
    for (auto& rec : table.records) {
        rec.flags.q_ddagger = all_admit(dd, rec);
        rec.flags.q_dagger = all_admit(d, rec);
        rec.flags.q_prime = all_admit(p, rec);
        rec.flags.q = rec.flags.q_ddagger * rec.flags.q_dagger * rec.flags.q_prime;
    }
    table.has_eligibility = true;
    return table;
}

ObservationTable select_trials(const ObservationTable& table, std::uint64_t seed, TrialSelection mode)
{
    std::vector<std::size_t> order(table.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const auto& recs = table.records;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& x = recs[a];
        const auto& y = recs[b];
        if (x.person_id != y.person_id) {
            return x.person_id < y.person_id;
        }
        if (x.time_unit != y.time_unit) {
            return x.time_unit < y.time_unit;
        }
        return x.visit_id < y.visit_id;
    });

    ObservationTable out;
    out.columns = table.columns;
    out.outcome_kind = table.outcome_kind;
    out.has_eligibility = table.has_eligibility;
    out.has_standard = table.has_standard;

    const bool per_person = mode == TrialSelection::PerPerson;
    std::size_t begin = 0;
    while (begin < order.size()) {
        std::size_t end = begin + 1;
        const auto& first = recs[order[begin]];
        while (end < order.size() && recs[order[end]].person_id == first.person_id &&
               (per_person || recs[order[end]].time_unit == first.time_unit)) {
            ++end;
        }
        std::vector<std::size_t> candidates;
        if (per_person && table.has_eligibility) {
            for (std::size_t k = begin; k < end; ++k) {
                if (recs[order[k]].flags.q == 1) {
                    candidates.push_back(order[k]);
                }
            }
        }
        if (candidates.empty()) {
            candidates.assign(order.begin() + static_cast<std::ptrdiff_t>(begin), order.begin() + static_cast<std::ptrdiff_t>(end));
        }
        std::uint64_t key = hash_combine(seed, hash_string(first.person_id),
                                         per_person ? 0x5045u : static_cast<std::uint64_t>(first.time_unit));
        Stream rng(key);
        out.records.push_back(recs[candidates[rng.below(candidates.size())]]);
        begin = end;
    }
    return out;
}

StandardSelector::StandardSelector(const ObservationTable& table, const StandardPopulation& standard)
    : kind_(standard.kind)
{
    if (kind_ == StandardKind::Predicate) {
        predicate_.emplace(table, standard.predicate);
    }
}

bool StandardSelector::operator()(const Record& rec) const
{
    switch (kind_) {
    case StandardKind::MarginalizedGroup: return rec.group == 1;
    case StandardKind::PrivilegedGroup: return rec.group == 0;
    case StandardKind::AllEligible: return true;
    case StandardKind::Predicate: return predicate_->admits(rec);
    }
    return false;
}

ObservationTable assign_standard_membership(ObservationTable table, const TrialSpec& spec)
{
    if (!table.has_eligibility) {
        table = evaluate_eligibility(std::move(table), spec.partition);
    }
    StandardSelector sel(table, spec.standard);
    std::size_t count = 0;
    for (auto& rec : table.records) {
        rec.standard = (rec.flags.q == 1 && sel(rec)) ? 1 : 0;
        count += static_cast<std::size_t>(rec.standard);
    }
    if (count == 0) {
        throw Error(ErrorCode::EmptyStandard, "emulation",
                    std::string("no eligible record satisfies the '") + to_string(spec.standard.kind) + "' standard population");
    }
    table.has_standard = true;
    return table;
}

ObservationTable prepare_trials(const ObservationTable& raw, const TrialSpec& spec, std::uint64_t seed,
                                std::vector<std::string>* warnings)
{
    check_spec(spec, raw);
    auto flagged = evaluate_eligibility(raw, spec.partition);
    auto selected = select_trials(flagged, seed, spec.selection);
    if (warnings) {
        std::set<std::int64_t> units;
        for (const auto& rec : selected.records) {
            units.insert(rec.time_unit);
        }
        bool time_allowable = std::any_of(spec.allowables.begin(), spec.allowables.end(),
                                          [](const CovariateSpec& c) { return c.name == kTimeColumn; });
        if (units.size() > 1 && !time_allowable) {
            warnings->push_back("multiple time units present but time_unit is not listed among the allowables");
        }
    }
    return assign_standard_membership(std::move(selected), spec);
}

} // namespace disparity
