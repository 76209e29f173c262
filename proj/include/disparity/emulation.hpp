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

#include <cstdint>
#include <string>
#include <vector>

namespace disparity {

// Sets q_ddagger, q_dagger, q_prime and q = product; empty components count as 1.
ObservationTable evaluate_eligibility(ObservationTable table, const EligibilityPartition& partition);

// Keeps one uniformly chosen record per (person_id, time_unit), or per person
// among eligible records when mode is PerPerson. Output is in canonical
// (person_id, time_unit, visit_id) order, so it does not depend on input order.
ObservationTable select_trials(const ObservationTable& table, std::uint64_t seed,
                               TrialSelection mode = TrialSelection::PerTimeUnit);

// Selector S of the standard population, ignoring eligibility.
class StandardSelector {
public:
    StandardSelector(const ObservationTable& table, const StandardPopulation& standard);
    bool operator()(const Record& rec) const;

private:
    StandardKind kind_;
    std::optional<BoundCriterion> predicate_;
};

// T = q * S. Throws EmptyStandard when no record ends up with T = 1.
ObservationTable assign_standard_membership(ObservationTable table, const TrialSpec& spec);

// evaluate_eligibility, select_trials and assign_standard_membership in order.
// Warnings (e.g. time_unit not listed as allowable) are appended when given.
ObservationTable prepare_trials(const ObservationTable& raw, const TrialSpec& spec, std::uint64_t seed,
                                std::vector<std::string>* warnings = nullptr);

} // namespace disparity
