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
#include "fixtures.hpp"

#include "disparity/config.hpp"
#include "disparity/emulation.hpp"
#include "disparity/errors.hpp"
#include "disparity/estimators.hpp"
#include "disparity/oracle_sim.hpp"
#include "disparity/sampling_design.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace disparity;
using namespace disparity::testing;

namespace {

ObservationTable annotate(const ObservationTable& t, const TrialSpec& s)
{
    return assign_standard_membership(evaluate_eligibility(t, s.partition), s);
}

const std::array<StageSizes, 2> kSizes{StageSizes{1000, 600, 300}, StageSizes{800, 500, 200}};

SamplingFractions manual(const std::vector<double>& a1, const std::vector<double>& a2)
{
    SamplingFractions f;
    for (std::size_t i = 0; i < a1.size(); ++i) {
        Stratum s;
        s.group = 0;
        s.key = {static_cast<double>(i)};
        s.count = 10;
        s.alpha1 = a1[i];
        s.alpha2 = a2[i];
        f.strata.push_back(s);
    }
    return f;
}

} // namespace

TEST(Fractions, PropOneStageOneIsConstant)
{
    auto t = discrete_fixture();
    auto s = discrete_spec(Proposition::I);
    auto f = compute_sampling_fractions(annotate(t, s), s, kSizes);
    for (const auto& st : f.strata) {
        const auto& n = kSizes[static_cast<std::size_t>(st.group)];
        EXPECT_NEAR(st.alpha1, n.n1 / n.n0, 1e-12) << st.label;
    }
}

TEST(Fractions, PropOneWithoutAllowablesIsSimpleRandomSampling)
{
    auto t = discrete_fixture();
    auto s = discrete_spec(Proposition::I);
    s.allowables.clear();
    s.models = ModelForm::MainEffects;
    auto f = compute_sampling_fractions(annotate(t, s), s, kSizes);
    ASSERT_EQ(f.strata.size(), 2u);
    for (const auto& st : f.strata) {
        const auto& n = kSizes[static_cast<std::size_t>(st.group)];
        EXPECT_NEAR(st.alpha1, n.n1 / n.n0, 1e-12);
        EXPECT_NEAR(st.alpha2, n.n2 / n.n1, 1e-12);
    }
}

TEST(Fractions, PropTwoStageOneByCounting)
{
    auto t = annotate(discrete_fixture(), discrete_spec(Proposition::II));
    auto s = discrete_spec(Proposition::II);
    s.allowables = {{"a1", Term::Categorical, {}, {}}};
    auto f = compute_sampling_fractions(t, s, kSizes);
    auto a1 = t.resolve("a1");
    auto nn = t.resolve("n");
    // alpha1 = (N1/N0) P(n | Qdd, r, a) / P(n | Q, r, a).
    for (const auto& st : f.strata) {
        double a = st.key[0];
        double n = st.key[1];
        double dd_an = 0, dd_a = 0, q_an = 0, q_a = 0;
        for (const auto& r : t.records) {
            if (r.group != st.group || ObservationTable::value(r, a1) != a) continue;
            bool match = ObservationTable::value(r, nn) == n;
            if (r.flags.q_ddagger == 1) {
                dd_a += 1;
                dd_an += match ? 1 : 0;
            }
            if (r.flags.q == 1) {
                q_a += 1;
                q_an += match ? 1 : 0;
            }
        }
        const auto& sz = kSizes[static_cast<std::size_t>(st.group)];
        EXPECT_NEAR(st.alpha1, (sz.n1 / sz.n0) * (dd_an / dd_a) / (q_an / q_a), 1e-12) << st.label;
    }
}

TEST(Fractions, StageSizeOrder)
{
    auto t = discrete_fixture();
    auto s = discrete_spec(Proposition::I);
    std::array<StageSizes, 2> bad{StageSizes{100, 200, 50}, StageSizes{100, 50, 10}};
    EXPECT_THROW(compute_sampling_fractions(annotate(t, s), s, bad), Error);
}

TEST(Normalize, ConstantStaysConstant)
{
    auto f = normalize_fractions(manual({0.3, 0.3, 0.3}, {2.0, 2.0, 2.0}));
    for (const auto& s : f.strata) {
        EXPECT_DOUBLE_EQ(s.alpha1_star, 0.3);
        EXPECT_DOUBLE_EQ(s.alpha2_star, 1.0);
    }
}

TEST(Normalize, PreservesRatios)
{
    for (auto mode : {Normalization::Max, Normalization::SumToOne}) {
        auto f = normalize_fractions(manual({0.2, 0.4}, {3.0, 6.0}), mode);
        EXPECT_NEAR(f.strata[1].alpha1_star / f.strata[0].alpha1_star, 2.0, 1e-14);
        EXPECT_NEAR(f.strata[1].alpha2_star / f.strata[0].alpha2_star, 2.0, 1e-14);
        for (const auto& s : f.strata) {
            EXPECT_LE(s.alpha1_star, 1.0);
            EXPECT_LE(s.alpha2_star, 1.0);
            EXPECT_GE(s.alpha2_star, 0.0);
        }
    }
}

TEST(Normalize, ZeroStratumAndDegenerate)
{
    auto f = normalize_fractions(manual({0.0, 0.5}, {1.0, 1.0}));
    EXPECT_EQ(f.strata[0].alpha1_star, 0.0);
    try {
        normalize_fractions(manual({0.0, 0.0}, {1.0, 1.0}));
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::DegenerateFractions);
    }
}

TEST(TwoPhase, IdentityAndEmpty)
{
    auto s = discrete_spec(Proposition::I);
    auto t = annotate(discrete_fixture(), s);
    auto f = normalize_fractions(compute_sampling_fractions(t, s, kSizes));
    for (auto& st : f.strata) {
        st.alpha1_star = 1.0;
        st.alpha2_star = 1.0;
    }
    auto all = two_phase_sample(t, f, 3);
    std::size_t eligible = 0;
    for (const auto& r : t.records) eligible += r.flags.q == 1 ? 1 : 0;
    EXPECT_EQ(all.final_sample().size(), eligible);
    for (auto& st : f.strata) st.alpha2_star = 0.0;
    EXPECT_EQ(two_phase_sample(t, f, 3).final_sample().size(), 0u);
}

TEST(TwoPhase, DeterministicAndExportable)
{
    auto s = discrete_spec(Proposition::II);
    auto t = annotate(discrete_fixture(), s);
    auto f = normalize_fractions(compute_sampling_fractions(t, s, kSizes));
    auto a = two_phase_sample(t, f, 99);
    auto b = two_phase_sample(t, f, 99);
    ASSERT_EQ(a.stage, b.stage);
    std::ostringstream out;
    write_sample(out, a);
    std::string header = out.str().substr(0, out.str().find('\n'));
    EXPECT_EQ(header.substr(header.size() - 6), ",stage");
    for (int st : a.stage) EXPECT_TRUE(st == 1 || st == 2);
}

TEST(Duality, ProductOfFractionsProportionalToWeights)
{
    const std::array<StageSizes, 2> equal{StageSizes{1, 1, 1}, StageSizes{1, 1, 1}};
    auto t = discrete_fixture(900, 31);
    for (auto p : {Proposition::I, Proposition::II, Proposition::III, Proposition::IV}) {
        auto s = discrete_spec(p);
        auto at = annotate(t, s);
        auto f = normalize_fractions(compute_sampling_fractions(at, s, equal));
        for (int g : {0, 1}) {
            auto w = compute_weights(at, s, g);
            std::vector<VarRef> refs;
            for (const auto& v : f.key_vars) refs.push_back(at.resolve(v));
            double lo = INFINITY, hi = -INFINITY;
            for (std::size_t k = 0; k < w.rows.size(); ++k) {
                std::vector<double> key;
                for (auto ref : refs) key.push_back(at.value(w.rows[k], ref));
                const auto* st = f.find(g, key);
                ASSERT_NE(st, nullptr);
                double ratio = st->alpha1_star * st->alpha2_star / w.omega[k];
                lo = std::min(lo, ratio);
                hi = std::max(hi, ratio);
            }
            EXPECT_LT((hi - lo) / hi, 1e-10) << to_string(p) << " group " << g;
        }
    }
}

TEST(TwoPhase, SampleMeanApproachesTau)
{
    auto dag = load_dag(std::string(DISPARITY_TEST_DATA) + "/fig2b.json");
    dag.n = 220000;
    TrialSpec s;
    s.partition.w_ddagger = {{"Wdd", {"1"}, {}, {}}};
    s.partition.w_dagger = {{"Wd", {"1"}, {}, {}}};
    s.allowables = {{"X1", Term::Categorical, {}, {}}, {"X2", Term::Categorical, {}, {}}};
    s.models = ModelForm::Saturated;
    auto t = annotate(simulate_population(dag).table, s);
    const std::array<StageSizes, 2> equal{StageSizes{1, 1, 1}, StageSizes{1, 1, 1}};
    auto f = normalize_fractions(compute_sampling_fractions(t, s, equal));
    auto sample = two_phase_sample(t, f, 8);
    for (int g : {0, 1}) {
        double sum = 0, n = 0;
        for (std::size_t i = 0; i < sample.table.size(); ++i) {
            const auto& r = sample.table.records[i];
            if (sample.stage[i] == 2 && r.group == g) {
                sum += r.outcome;
                n += 1;
            }
        }
        double tau = estimate_tau_weighting(t, s, g).value;
        double mean = sum / n;
        double se = std::sqrt(mean * (1 - mean) / n);
        EXPECT_LT(std::abs(mean - tau), 3 * se) << "group " << g << " n " << n;
    }
}
