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

#include "disparity/errors.hpp"
#include "disparity/estimators.hpp"
#include "disparity/validation.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>

namespace disparity {

inline constexpr const char* kSoftwareVersion = "0.1.0";

// Rounds every floating-point number to 10 significant digits; NaN and
// infinities become null.
nlohmann::json round_numbers(const nlohmann::json& doc);

// Sorted keys, two-space indent, trailing newline.
std::string serialize_report(const nlohmann::json& doc);

void emit_report(const nlohmann::json& doc, std::ostream& out);
void emit_report(const nlohmann::json& doc, const std::string& path);

nlohmann::json to_json(const WeightDiagnostics& w);
nlohmann::json to_json(const ModelAudit& m);
nlohmann::json to_json(const TauEstimate& t);
nlohmann::json to_json(const DisparityEstimate& d);
nlohmann::json to_json(const ValidationReport& v);
nlohmann::json error_block(const Error& e);

} // namespace disparity
