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

#include "disparity/numerics.hpp"
#include "disparity/table.hpp"
#include "disparity/trial_spec.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

namespace disparity {

enum class Family { Logistic, Gaussian };

// Per-analysis view of an annotated table: eligibility flags, group, the
// standard-population selector S and outcome as flat vectors, plus cached
// level codes for saturated cell lookup.
class Frame {
public:
    Frame(const ObservationTable& table, const TrialSpec& spec);
    Frame(const ObservationTable& table, const TrialSpec& spec, const StandardPopulation& standard);

    const ObservationTable& table;
    const TrialSpec& spec;
    std::size_t n = 0;
    std::vector<int> R, qdd, qd, qp, q, S;
    std::vector<double> Y;
    Family outcome_family = Family::Logistic;

    std::vector<std::size_t> rows(const std::function<bool(std::size_t)>& pred) const;

    // Cell identifier over the given variables; identical covariate values give
    // identical identifiers.
    std::uint64_t cell(std::size_t row, const std::vector<VarRef>& vars);
    std::vector<VarRef> refs(const std::vector<CovariateSpec>& vars) const;

private:
    struct Levels {
        std::vector<std::uint32_t> code;
        std::uint64_t count = 0;
    };
    const Levels& levels(VarRef ref);
    std::map<VarRef, Levels> levels_;
};

struct ModelSpec {
    std::string name;
    std::vector<CovariateSpec> vars;
    ModelForm form = ModelForm::MainEffects;
    Family family = Family::Logistic;
};

struct ModelAudit {
    std::string name;
    std::string kind;  // constant, cells or glm
    std::size_t rows = 0;
    std::size_t parameters = 0;
    bool converged = true;
    int iterations = 0;
};

class FittedModel {
public:
    // response and weights are aligned with rows. Fit failures surface as
    // ModelFailure naming the model.
    static FittedModel fit(Frame& frame, const ModelSpec& spec, const std::vector<std::size_t>& rows,
                           const std::vector<double>& response, const std::vector<double>* weights = nullptr);

    // NaN marks rows whose covariate cell has no support in the fit subset.
    std::vector<double> predict(Frame& frame, const std::vector<std::size_t>& rows) const;

    const ModelAudit& audit() const { return audit_; }

private:
    enum class Kind { Constant, Cells, Glm };

    Matrix design(Frame& frame, const std::vector<std::size_t>& rows, std::vector<bool>* supported) const;

    ModelSpec spec_;
    Kind kind_ = Kind::Constant;
    double constant_ = 0.0;
    std::vector<VarRef> refs_;
    std::unordered_map<std::uint64_t, double> cells_;
    std::vector<std::vector<double>> knots_;
    std::vector<std::vector<double>> categories_;
    GlmFit glm_;
    ModelAudit audit_;
};

} // namespace disparity
