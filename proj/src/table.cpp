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
#include "disparity/table.hpp"

#include "disparity/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

namespace disparity {

namespace {

const char* kModule = "data_model";

std::optional<double> parse_double(const std::string& s)
{
    if (s.empty()) {
        return std::nullopt;
    }
    double v = 0.0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') {
        ++first;
    }
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || ptr != last || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

std::string trim(const std::string& s)
{
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) {
        ++b;
    }
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) {
        --e;
    }
    return s.substr(b, e - b);
}

std::string where(std::size_t line, const std::string& column)
{
    return "line " + std::to_string(line) + ", column '" + column + "'";
}

} // namespace

const char* to_string(ColumnKind kind)
{
    switch (kind) {
    case ColumnKind::Binary: return "binary";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Continuous: return "continuous";
    }
    return "continuous";
}

const char* to_string(OutcomeKind kind)
{
    return kind == OutcomeKind::Binary ? "binary" : "continuous";
}

std::optional<VarRef> ObservationTable::find(const std::string& name) const
{
    if (name == kGroupColumn) {
        return kRefGroup;
    }
    if (name == kTimeColumn) {
        return kRefTime;
    }
    for (std::size_t j = 0; j < columns.size(); ++j) {
        if (columns[j].name == name) {
            return static_cast<VarRef>(j);
        }
    }
    return std::nullopt;
}

VarRef ObservationTable::resolve(const std::string& name) const
{
    auto ref = find(name);
    if (!ref) {
        throw Error(ErrorCode::UnknownVariable, kModule, "no column named '" + name + "'");
    }
    return *ref;
}

std::string ObservationTable::name_of(VarRef ref) const
{
    if (ref == kRefGroup) {
        return kGroupColumn;
    }
    if (ref == kRefTime) {
        return kTimeColumn;
    }
    return columns.at(static_cast<std::size_t>(ref)).name;
}

ColumnKind ObservationTable::kind_of(VarRef ref) const
{
    if (ref == kRefGroup) {
        return ColumnKind::Binary;
    }
    if (ref == kRefTime) {
        return ColumnKind::Categorical;
    }
    return columns.at(static_cast<std::size_t>(ref)).kind;
}

const std::vector<std::string>* ObservationTable::labels_of(VarRef ref) const
{
    if (ref < 0) {
        return nullptr;
    }
    const auto& labels = columns.at(static_cast<std::size_t>(ref)).labels;
    return labels.empty() ? nullptr : &labels;
}

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                }
                else {
                    quoted = false;
                }
            }
            else {
                field.push_back(c);
            }
        }
        else if (c == '"') {
            quoted = true;
        }
        else if (c == ',') {
            out.push_back(field);
            field.clear();
        }
        else if (c != '\r') {
            field.push_back(c);
        }
    }
    out.push_back(field);
    return out;
}

std::string csv_escape(const std::string& field)
{
    if (field.find_first_of(",\"\n\r") == std::string::npos) {
        return field;
    }
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') {
            out += "\"\"";
        }
        else {
            out.push_back(c);
        }
    }
    out += "\"";
    return out;
}

std::string format_number(double v)
{
    if (v == 0.0) {
        return "0";
    }
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

ObservationTable read_observations(std::istream& in, const Schema& schema)
{
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::MissingColumn, kModule, "input has no header row");
    }
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) {
        line = line.substr(3);
    }
    auto header = split_csv_line(line);
    for (auto& h : header) {
        h = trim(h);
    }
    auto index_of = [&](const std::string& name) -> std::size_t {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) {
            throw Error(ErrorCode::MissingColumn, kModule, "required column '" + name + "' absent from header");
        }
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t c_person = index_of("person_id");
    const std::size_t c_visit = index_of("visit_id");
    const std::size_t c_cluster = index_of("cluster_id");
    const std::size_t c_time = index_of(kTimeColumn);
    const std::size_t c_group = index_of(kGroupColumn);
    const std::size_t c_outcome = index_of(kOutcomeColumn);
    std::vector<std::size_t> c_cov;
    std::set<std::string> seen_names;
    for (const auto& decl : schema.covariates) {
        if (decl.name == kGroupColumn || decl.name == kTimeColumn || decl.name == kOutcomeColumn ||
            !seen_names.insert(decl.name).second) {
            throw Error(ErrorCode::MissingColumn, kModule, "covariate name '" + decl.name + "' is reserved or repeated");
        }
        c_cov.push_back(index_of(decl.name));
    }

    std::vector<std::vector<std::string>> raw_cov;
    ObservationTable table;
    table.outcome_kind = schema.outcome;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto cells = split_csv_line(line);
        if (cells.size() != header.size()) {
            throw Error(ErrorCode::BadValue, kModule,
                        "line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) + " fields, header has " +
                            std::to_string(header.size()));
        }
        for (auto& c : cells) {
            c = trim(c);
        }
        auto required = [&](std::size_t idx) -> const std::string& {
            if (cells[idx].empty()) {
                throw Error(ErrorCode::MissingValue, kModule, "empty cell at " + where(line_no, header[idx]));
            }
            return cells[idx];
        };
        Record rec;
        rec.person_id = required(c_person);
        rec.visit_id = required(c_visit);
        rec.cluster_id = required(c_cluster);
        {
            const auto& s = required(c_time);
            std::int64_t t = 0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), t);
            if (ec != std::errc() || ptr != s.data() + s.size()) {
                throw Error(ErrorCode::BadValue, kModule, "time_unit must be an integer at " + where(line_no, header[c_time]));
            }
            rec.time_unit = t;
        }
        {
            auto g = parse_double(required(c_group));
            if (!g || (*g != 0.0 && *g != 1.0)) {
                throw Error(ErrorCode::BadValue, kModule, "R must be 0 or 1 at " + where(line_no, header[c_group]));
            }
            rec.group = static_cast<int>(*g);
        }
        {
            auto y = parse_double(required(c_outcome));
            if (!y) {
                throw Error(ErrorCode::BadValue, kModule, "Y is not numeric at " + where(line_no, header[c_outcome]));
            }
            if (schema.outcome == OutcomeKind::Binary && *y != 0.0 && *y != 1.0) {
                throw Error(ErrorCode::BadValue, kModule, "binary Y outside {0,1} at " + where(line_no, header[c_outcome]));
            }
            rec.outcome = *y;
        }
        std::vector<std::string> cov_cells;
        cov_cells.reserve(c_cov.size());
        for (std::size_t j = 0; j < c_cov.size(); ++j) {
            cov_cells.push_back(required(c_cov[j]));
        }
        raw_cov.push_back(std::move(cov_cells));
        table.records.push_back(std::move(rec));
    }

    const std::size_t n = table.records.size();
    for (std::size_t j = 0; j < schema.covariates.size(); ++j) {
        const auto& decl = schema.covariates[j];
        ColumnInfo info{decl.name, decl.kind, {}};
        std::vector<double> values(n);
        bool numeric = true;
        for (std::size_t i = 0; i < n && numeric; ++i) {
            auto v = parse_double(raw_cov[i][j]);
            if (!v) {
                numeric = false;
            }
            else {
                values[i] = *v;
            }
        }
        if (!numeric) {
            if (decl.kind != ColumnKind::Categorical) {
                for (std::size_t i = 0; i < n; ++i) {
                    if (!parse_double(raw_cov[i][j])) {
                        throw Error(ErrorCode::BadValue, kModule,
                                    "non-numeric value '" + raw_cov[i][j] + "' at " + where(i + 2, decl.name));
                    }
                }
            }
            std::set<std::string> uniq;
            for (std::size_t i = 0; i < n; ++i) {
                uniq.insert(raw_cov[i][j]);
            }
            info.labels.assign(uniq.begin(), uniq.end());
            for (std::size_t i = 0; i < n; ++i) {
                auto it = std::lower_bound(info.labels.begin(), info.labels.end(), raw_cov[i][j]);
                values[i] = static_cast<double>(it - info.labels.begin());
            }
        }
        else if (decl.kind == ColumnKind::Binary) {
            for (std::size_t i = 0; i < n; ++i) {
                if (values[i] != 0.0 && values[i] != 1.0) {
                    throw Error(ErrorCode::BadValue, kModule, "binary covariate outside {0,1} at " + where(i + 2, decl.name));
                }
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            table.records[i].covariates.push_back(values[i]);
        }
        table.columns.push_back(std::move(info));
    }

    std::unordered_set<std::string> keys;
    keys.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = table.records[i];
        std::string key = rec.person_id;
        key.push_back('\x1f');
        key += rec.visit_id;
        if (!keys.insert(key).second) {
            throw Error(ErrorCode::DuplicateKey, kModule,
                        "duplicate (person_id, visit_id) = (" + rec.person_id + ", " + rec.visit_id + ") at data row " +
                            std::to_string(i + 1));
        }
    }
    return table;
}

ObservationTable load_observations(const std::string& path, const Schema& schema)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorCode::IoError, kModule, "cannot open '" + path + "'");
    }
    return read_observations(in, schema);
}

void write_observations(std::ostream& out, const ObservationTable& table)
{
    out << "person_id,visit_id,cluster_id,time_unit,R,Y";
    for (const auto& c : table.columns) {
        out << ',' << csv_escape(c.name);
    }
    if (table.has_eligibility) {
        out << ",q_ddagger,q_dagger,q_prime,q";
    }
    if (table.has_standard) {
        out << ",T";
    }
    out << '\n';
    for (const auto& rec : table.records) {
        out << csv_escape(rec.person_id) << ',' << csv_escape(rec.visit_id) << ',' << csv_escape(rec.cluster_id) << ','
            << rec.time_unit << ',' << rec.group << ',' << format_number(rec.outcome);
        for (std::size_t j = 0; j < table.columns.size(); ++j) {
            const auto& labels = table.columns[j].labels;
            if (!labels.empty()) {
                out << ',' << csv_escape(labels.at(static_cast<std::size_t>(rec.covariates[j])));
            }
            else {
                out << ',' << format_number(rec.covariates[j]);
            }
        }
        if (table.has_eligibility) {
            out << ',' << rec.flags.q_ddagger << ',' << rec.flags.q_dagger << ',' << rec.flags.q_prime << ',' << rec.flags.q;
        }
        if (table.has_standard) {
            out << ',' << rec.standard;
        }
        out << '\n';
    }
}

void save_observations(const std::string& path, const ObservationTable& table)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw Error(ErrorCode::IoError, kModule, "cannot write '" + path + "'");
    }
    write_observations(out, table);
    if (!out) {
        throw Error(ErrorCode::IoError, kModule, "write failed for '" + path + "'");
    }
}

} // namespace disparity
