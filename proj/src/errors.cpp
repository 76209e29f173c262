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
#include "disparity/errors.hpp"

namespace disparity {

const char* error_name(ErrorCode code)
{
    switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateKey: return "DuplicateKey";
    case ErrorCode::BadValue: return "BadValue";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::UnknownVariable: return "UnknownVariable";
    case ErrorCode::EmptyStandard: return "EmptyStandard";
    case ErrorCode::BadKnots: return "BadKnots";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::PositivityViolation: return "PositivityViolation";
    case ErrorCode::ModelFailure: return "ModelFailure";
    case ErrorCode::SpecMismatch: return "SpecMismatch";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::EmptyStage: return "EmptyStage";
    case ErrorCode::DegenerateFractions: return "DegenerateFractions";
    case ErrorCode::BadDag: return "BadDag";
    case ErrorCode::EmptyConditioningCell: return "EmptyConditioningCell";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::TooFewClusters: return "TooFewClusters";
    case ErrorCode::ReplicateFailure: return "ReplicateFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

int exit_code(ErrorCode code)
{
    return 10 + static_cast<int>(code);
}

std::vector<ErrorCode> all_error_codes()
{
    std::vector<ErrorCode> out;
    for (int c = static_cast<int>(ErrorCode::MissingColumn); c <= static_cast<int>(ErrorCode::IoError); ++c) {
        out.push_back(static_cast<ErrorCode>(c));
    }
    return out;
}

Error::Error(ErrorCode code, std::string module, const std::string& message)
    : std::runtime_error(std::string(error_name(code)) + " [" + module + "]: " + message)
    , code_(code)
    , module_(std::move(module))
{
}

} // namespace disparity
