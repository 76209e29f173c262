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

#include "disparity/rng.hpp"
#include "disparity/table.hpp"
#include "disparity/trial_spec.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace disparity::testing {

inline ObservationTable make_table(const std::vector<std::string>& covariates, ColumnKind kind = ColumnKind::Binary)
{
    ObservationTable t;
    for (const auto& c : covariates) {
        t.columns.push_back({c, kind, {}});
    }
    return t;
}

inline void add_record(ObservationTable& t, int group, double y, std::vector<double> covariates,
                       const std::string& cluster = "c1")
{
    Record r;
    r.person_id = "p" + std::to_string(t.size() + 1);
    r.visit_id = "v1";
    r.cluster_id = cluster;
    r.group = group;
    r.outcome = y;
    r.covariates = std::move(covariates);
    t.records.push_back(r);
}

// Twelve records, binary a and an eligibility column. Group 1 eligible strata
// means are 0.5 (a = 0, two records) and 1 (a = 1, one record); group 0 has
// 1/3 (a = 0) and 1/2 (a = 1). Standard = group 1 gives tau(1) = 2/3,
// tau(0) = 7/18 and a difference of 5/18.
inline ObservationTable twelve_record_table()
{
    auto t = make_table({"elig", "a"});
    add_record(t, 1, 1, {1, 0});
    add_record(t, 1, 0, {1, 0});
    add_record(t, 1, 1, {1, 1});
    add_record(t, 1, 0, {0, 1});
    add_record(t, 0, 1, {1, 0});
    add_record(t, 0, 0, {1, 0});
    add_record(t, 0, 0, {1, 0});
    add_record(t, 0, 1, {1, 1});
    add_record(t, 0, 1, {1, 1});
    add_record(t, 0, 0, {1, 1});
    add_record(t, 0, 0, {1, 1});
    add_record(t, 0, 1, {0, 0});
    return t;
}

inline TrialSpec twelve_record_spec()
{
    TrialSpec s;
    s.partition.w_ddagger = {{"elig", {"1"}, {}, {}}};
    s.allowables = {{"a", Term::Categorical, {}, {}}};
    s.standard = StandardPopulation::group(1);
    s.proposition = Proposition::I;
    s.models = ModelForm::Saturated;
    return s;
}

// About 500 records over binary a1, a2 (allowable), n (non-allowable) and
// binary eligibility variables wdd, wd, wp. Every (R, a, n) cell is populated
// and every selection probability is strictly inside (0, 1).
inline ObservationTable discrete_fixture(std::size_t n = 512, std::uint64_t seed = 20240611)
{
    auto t = make_table({"a1", "a2", "n", "wdd", "wd", "wp"});
    auto expit = [](double x) { return 1.0 / (1.0 + std::exp(-x)); };
    for (std::size_t i = 0; i < n; ++i) {
        Stream rng(hash_combine(seed, i));
        double a1 = rng.uniform() < 0.5 ? 1 : 0;
        double a2 = rng.uniform() < 0.4 ? 1 : 0;
        int r = rng.uniform() < expit(-0.2 + 0.6 * a1 - 0.4 * a2) ? 1 : 0;
        double nn = rng.uniform() < expit(-0.3 + 0.8 * r + 0.5 * a1) ? 1 : 0;
        double wdd = rng.uniform() < 0.85 ? 1 : 0;
        double wd = rng.uniform() < expit(0.4 + 0.7 * nn - 0.5 * r + 0.3 * a2) ? 1 : 0;
        double wp = rng.uniform() < expit(0.8 + 0.9 * wd - 0.4 * nn + 0.3 * a1) ? 1 : 0;
        double y = rng.uniform() < expit(-0.5 + 0.7 * a1 + 0.4 * a2 + 0.8 * nn + 0.5 * r + 0.3 * wd) ? 1 : 0;
        add_record(t, r, y, {a1, a2, nn, wdd, wd, wp}, "c" + std::to_string(i % 16 + 1));
    }
    return t;
}

inline TrialSpec discrete_spec(Proposition p, bool with_prime = true)
{
    TrialSpec s;
    s.partition.w_ddagger = {{"wdd", {"1"}, {}, {}}};
    if (p != Proposition::I) {
        s.partition.w_dagger = {{"wd", {"1"}, {}, {}}};
        s.non_allowables = {{"n", Term::Categorical, {}, {}}};
    }
    if ((p == Proposition::III || p == Proposition::IV) && with_prime) {
        s.partition.w_prime = {{"wp", {"1"}, {}, {}}};
    }
    s.partition.prime_affected_by_dagger = p == Proposition::IV;
    s.allowables = {{"a1", Term::Categorical, {}, {}}, {"a2", Term::Categorical, {}, {}}};
    s.standard = StandardPopulation::group(1);
    s.proposition = p;
    s.models = ModelForm::Saturated;
    return s;
}

} // namespace disparity::testing
