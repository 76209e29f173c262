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

#include <stdexcept>
#include <string>
#include <vector>

namespace disparity {

enum class ErrorCode {
    MissingColumn = 1,
    DuplicateKey,
    BadValue,
    MissingValue,
    UnknownVariable,
    EmptyStandard,
    BadKnots,
    SeparationDetected,
    RankDeficient,
    DimensionMismatch,
    PositivityViolation,
    ModelFailure,
    SpecMismatch,
    EmptyGroup,
    EmptyStage,
    DegenerateFractions,
    BadDag,
    EmptyConditioningCell,
    EmptyCell,
    TooFewClusters,
    ReplicateFailure,
    ConfigError,
    IoError,
};

const char* error_name(ErrorCode code);

// Process exit status used by the CLI; distinct per code, 0 is success.
int exit_code(ErrorCode code);

std::vector<ErrorCode> all_error_codes();

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string module, const std::string& message);

    ErrorCode code() const { return code_; }
    const std::string& module() const { return module_; }

private:
    ErrorCode code_;
    std::string module_;
};

} // namespace disparity
