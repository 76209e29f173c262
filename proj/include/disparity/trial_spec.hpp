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

#include <optional>
#include <string>
#include <vector>

namespace disparity {

// Admissible set for one eligibility variable: explicit values ("in") and/or a
// closed interval. Values are kept as text so they can name category labels.
struct Criterion {
    std::string var;
    std::vector<std::string> in;
    std::optional<double> min;
    std::optional<double> max;
};

// Criterion bound to a table column.
class BoundCriterion {
public:
    BoundCriterion(const ObservationTable& table, const Criterion& c);
    bool admits(const Record& rec) const;
    bool admits_value(double v) const;
    VarRef ref() const { return ref_; }

private:
    VarRef ref_;
    std::vector<double> values_;
    bool has_values_;
    std::optional<double> min_;
    std::optional<double> max_;
};

struct EligibilityPartition {
    std::vector<Criterion> w_ddagger;
    std::vector<Criterion> w_dagger;
    std::vector<Criterion> w_prime;
    bool prime_affected_by_dagger = false;
};

enum class Term { Linear, Categorical, Spline };

struct CovariateSpec {
    std::string name;
    Term term = Term::Linear;
    std::vector<double> knots;            // explicit knots, used when non-empty
    std::vector<double> knot_quantiles{0.10, 0.50, 0.90};
};

enum class StandardKind { MarginalizedGroup, PrivilegedGroup, AllEligible, Predicate };

struct StandardPopulation {
    StandardKind kind = StandardKind::MarginalizedGroup;
    Criterion predicate;

    static StandardPopulation group(int r)
    {
        return {r == 1 ? StandardKind::MarginalizedGroup : StandardKind::PrivilegedGroup, {}};
    }
};

enum class Proposition { I, II, III, IV };
enum class EstimatorKind { Weighting, Ice, Both };
enum class ModelForm { MainEffects, Saturated };
enum class TrialSelection { PerTimeUnit, PerPerson };

struct TrialSpec {
    EligibilityPartition partition;
    std::vector<CovariateSpec> allowables;
    std::vector<CovariateSpec> non_allowables;
    StandardPopulation standard;
    Proposition proposition = Proposition::I;
    EstimatorKind estimator = EstimatorKind::Weighting;
    ModelForm models = ModelForm::MainEffects;
    // Symmetric percentile truncation of the weights, e.g. 0.01 clamps at the
    // 1st and 99th percentiles. Off when empty.
    std::optional<double> truncation;
    // Prop III weighting through the alternate construction built from models
    // conditioned on Q'.
    bool alternate_weights = false;
    TrialSelection selection = TrialSelection::PerTimeUnit;
};

const char* to_string(Proposition p);
const char* to_string(EstimatorKind k);
const char* to_string(StandardKind k);
const char* to_string(ModelForm f);
const char* to_string(Term t);

// Structural checks on the declaration; throws SpecMismatch.
void check_spec(const TrialSpec& spec);
// Additionally checks that every referenced variable exists; throws UnknownVariable.
void check_spec(const TrialSpec& spec, const ObservationTable& table);

} // namespace disparity
