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

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace disparity {

enum class ColumnKind { Binary, Categorical, Continuous };
enum class OutcomeKind { Binary, Continuous };

const char* to_string(ColumnKind kind);
const char* to_string(OutcomeKind kind);

struct ColumnInfo {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
    // Non-empty only for categorical columns holding text; the stored value is
    // the index into this sorted list.
    std::vector<std::string> labels;
};

struct EligibilityFlags {
    int q_ddagger = 1;
    int q_dagger = 1;
    int q_prime = 1;
    int q = 1;
};

struct Record {
    std::string person_id;
    std::string visit_id;
    std::string cluster_id;
    std::int64_t time_unit = 0;
    int group = 0;
    double outcome = 0.0;
    std::vector<double> covariates;
    EligibilityFlags flags;
    int standard = 0;
};

// Reserved names usable wherever a covariate name is expected.
inline constexpr const char* kGroupColumn = "R";
inline constexpr const char* kTimeColumn = "time_unit";
inline constexpr const char* kOutcomeColumn = "Y";

// Resolved column reference: >= 0 indexes covariates, negative values name the
// reserved columns.
using VarRef = int;
inline constexpr VarRef kRefTime = -1;
inline constexpr VarRef kRefGroup = -2;

class ObservationTable {
public:
    std::vector<ColumnInfo> columns;
    OutcomeKind outcome_kind = OutcomeKind::Binary;
    std::vector<Record> records;
    bool has_eligibility = false;
    bool has_standard = false;

    std::size_t size() const { return records.size(); }
    std::optional<VarRef> find(const std::string& name) const;
    // Throws UnknownVariable.
    VarRef resolve(const std::string& name) const;
    std::string name_of(VarRef ref) const;
    ColumnKind kind_of(VarRef ref) const;
    const std::vector<std::string>* labels_of(VarRef ref) const;

    static double value(const Record& rec, VarRef ref)
    {
        if (ref >= 0) {
            return rec.covariates[static_cast<std::size_t>(ref)];
        }
        return ref == kRefTime ? static_cast<double>(rec.time_unit) : static_cast<double>(rec.group);
    }
    double value(std::size_t row, VarRef ref) const { return value(records[row], ref); }
};

struct ColumnDecl {
    std::string name;
    ColumnKind kind = ColumnKind::Continuous;
};

struct Schema {
    OutcomeKind outcome = OutcomeKind::Binary;
    std::vector<ColumnDecl> covariates;
};

ObservationTable read_observations(std::istream& in, const Schema& schema);
ObservationTable load_observations(const std::string& path, const Schema& schema);

// Writes the fixed columns, the covariates and, when present, the annotation
// columns q_ddagger, q_dagger, q_prime, q, T. Numbers use the shortest
// round-trip representation.
void write_observations(std::ostream& out, const ObservationTable& table);
void save_observations(const std::string& path, const ObservationTable& table);

std::string format_number(double v);

// Minimal RFC 4180 helpers shared with other CSV writers.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

} // namespace disparity
