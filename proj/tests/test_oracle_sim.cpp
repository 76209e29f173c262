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
#include "disparity/oracle_sim.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <sstream>

using namespace disparity;
using namespace disparity::testing;

namespace {

DagConfig fig2b(std::size_t n = 100000)
{
    auto d = load_dag(std::string(DISPARITY_TEST_DATA) + "/fig2b.json");
    d.n = n;
    return d;
}

TrialSpec fig2b_spec(Proposition p)
{
    TrialSpec s;
    s.partition.w_ddagger = {{"Wdd", {"1"}, {}, {}}};
    s.partition.w_dagger = {{"Wd", {"1"}, {}, {}}};
    s.allowables = {{"X1", Term::Categorical, {}, {}}, {"X2", Term::Categorical, {}, {}}};
    if (p != Proposition::I) s.non_allowables = {{"L", Term::Categorical, {}, {}}};
    s.proposition = p;
    s.models = ModelForm::Saturated;
    return s;
}

// Inverse-variance pooled log odds ratio of two binary variables across strata.
struct Pooled {
    double log_or = 0.0;
    double se = 0.0;
};

Pooled pooled_log_or(const std::map<std::vector<double>, std::array<double, 4>>& cells)
{
    double num = 0.0;
    double den = 0.0;
    for (const auto& [k, c] : cells) {
        // c = {x0y0, x0y1, x1y0, x1y1}
        if (std::min({c[0], c[1], c[2], c[3]}) < 5) continue;
        double l = std::log(c[3] * c[0] / (c[1] * c[2]));
        double v = 1 / c[0] + 1 / c[1] + 1 / c[2] + 1 / c[3];
        num += l / v;
        den += 1 / v;
    }
    return {num / den, std::sqrt(1 / den)};
}

} // namespace

TEST(Simulate, ConsistencyOfPotentialOutcomes)
{
    auto pop = simulate_population(fig2b(20000));
    auto wd = pop.table.resolve("Wd");
    ASSERT_EQ(pop.w_dagger, "Wd");
    for (std::size_t i = 0; i < pop.table.size(); ++i) {
        auto w = static_cast<std::size_t>(pop.table.value(i, wd));
        ASSERT_EQ(pop.y_potential[i][w], pop.table.records[i].outcome);
    }
}

TEST(Simulate, DeterministicGivenSeed)
{
    auto a = simulate_population(fig2b(3000));
    auto b = simulate_population(fig2b(3000));
    std::ostringstream x, y;
    write_population(x, a);
    write_population(y, b);
    EXPECT_EQ(x.str(), y.str());
    EXPECT_NE(x.str().find("truth_Y_w1"), std::string::npos);
}

TEST(Simulate, NullGraphHasNoDisparity)
{
    auto d = load_dag(std::string(DISPARITY_TEST_DATA) + "/null_dag.json");
    d.n = 100000;
    d.clusters = 1;
    for (auto& node : d.nodes) node.cluster_sd = 0.0;
    auto pop = simulate_population(d);
    TrialSpec s = fig2b_spec(Proposition::I);
    s.allowables = {{"X1", Term::Categorical, {}, {}}};
    auto truth = true_disparity(pop, s);
    EXPECT_LT(std::abs(truth.difference.value), 3 * truth.difference.se);
}

TEST(Simulate, SelectionDependsOnL)
{
    auto pop = simulate_population(fig2b());
    auto flagged = evaluate_eligibility(pop.table, fig2b_spec(Proposition::II).partition);
    auto l = flagged.resolve("L");
    std::array<double, 2> n{0, 0}, pass{0, 0};
    for (const auto& r : flagged.records) {
        if (r.flags.q_ddagger != 1) continue;
        auto k = static_cast<std::size_t>(ObservationTable::value(r, l));
        n[k] += 1;
        pass[k] += r.flags.q_dagger;
    }
    double p0 = pass[0] / n[0];
    double p1 = pass[1] / n[1];
    double se = std::sqrt(p0 * (1 - p0) / n[0] + p1 * (1 - p1) / n[1]);
    EXPECT_GT(std::abs(p1 - p0), 5 * se);
}

TEST(Simulate, BadDagOrdering)
{
    DagConfig d;
    d.nodes = {{"Y", NodeRole::Y, {}, {}, 0.0, {}, Link::Logistic, 1.0, 0.0},
               {"X", NodeRole::X, {"Y"}, {1.0}, 0.0, {}, Link::Logistic, 1.0, 0.0},
               {"R", NodeRole::R, {}, {}, 0.0, {}, Link::Logistic, 1.0, 0.0}};
    try {
        simulate_population(d);
        FAIL();
    }
    catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::BadDag);
    }
}

TEST(Simulate, ExchangeabilityHookHolds)
{
    // Y(1) independent of W-dagger given its parents (W-ddagger, A, N, R).
    auto pop = simulate_population(fig2b());
    const auto& t = pop.table;
    std::vector<VarRef> refs{t.resolve("Wdd"), t.resolve("X1"), t.resolve("X2"), t.resolve("L"), kRefGroup};
    auto wd = t.resolve("Wd");
    std::map<std::vector<double>, std::array<double, 4>> cells;
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::vector<double> key;
        for (auto r : refs) key.push_back(t.value(i, r));
        int x = static_cast<int>(t.value(i, wd));
        int y = static_cast<int>(pop.y_potential[i][1]);
        cells[key][static_cast<std::size_t>(2 * x + y)] += 1;
    }
    auto p = pooled_log_or(cells);
    EXPECT_LT(std::abs(p.log_or) / p.se, 3.0);
}

TEST(Intervention, PreservesSelectionLaw)
{
    auto pop = apply_stochastic_intervention(simulate_population(fig2b()), fig2b_spec(Proposition::II), 5);
    const auto& t = pop.table;
    std::vector<VarRef> refs{t.resolve("Wdd"), t.resolve("X1"), t.resolve("X2"), kRefGroup};
    auto wd = t.resolve("Wd");
    // Homogeneity chi-square: observed vs redrawn W-dagger over the joint cells.
    std::map<std::vector<double>, std::array<double, 2>> obs, drawn;
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::vector<double> key;
        for (auto r : refs) key.push_back(t.value(i, r));
        key.push_back(t.value(i, wd));
        obs[key][0] += 1;
        key.back() = pop.g_w_dagger[i];
        drawn[key][0] += 1;
    }
    double chi2 = 0.0;
    int df = 0;
    for (const auto& [k, c] : obs) {
        double a = c[0];
        double b = drawn.count(k) ? drawn[k][0] : 0.0;
        double e = (a + b) / 2;
        if (e > 0) {
            chi2 += (a - e) * (a - e) / e + (b - e) * (b - e) / e;
            ++df;
        }
    }
    df -= 1;
    boost::math::chi_squared dist(df);
    EXPECT_GT(boost::math::cdf(boost::math::complement(dist, chi2)), 0.01) << "chi2 " << chi2 << " df " << df;
}

TEST(Intervention, SeversDependenceOnNonAllowables)
{
    auto pop = apply_stochastic_intervention(simulate_population(fig2b()), fig2b_spec(Proposition::II), 6);
    const auto& t = pop.table;
    std::vector<VarRef> refs{t.resolve("Wdd"), t.resolve("X1"), t.resolve("X2"), kRefGroup};
    auto l = t.resolve("L");
    auto wd = t.resolve("Wd");
    std::map<std::vector<double>, std::array<double, 4>> after, before;
    for (std::size_t i = 0; i < t.size(); ++i) {
        std::vector<double> key;
        for (auto r : refs) key.push_back(t.value(i, r));
        int n = static_cast<int>(t.value(i, l));
        after[key][static_cast<std::size_t>(2 * n + static_cast<int>(pop.g_w_dagger[i]))] += 1;
        before[key][static_cast<std::size_t>(2 * n + static_cast<int>(t.value(i, wd)))] += 1;
    }
    auto a = pooled_log_or(after);
    auto b = pooled_log_or(before);
    EXPECT_LT(std::abs(a.log_or) / a.se, 3.0);
    EXPECT_GT(std::abs(b.log_or) / b.se, 10.0);
}

TEST(Intervention, DeterministicReplay)
{
    auto pop = simulate_population(fig2b(5000));
    auto s = fig2b_spec(Proposition::II);
    auto a = apply_stochastic_intervention(pop, s, 12);
    auto b = apply_stochastic_intervention(pop, s, 12);
    auto c = apply_stochastic_intervention(pop, s, 13);
    EXPECT_EQ(a.g_w_dagger, b.g_w_dagger);
    EXPECT_NE(a.g_w_dagger, c.g_w_dagger);
}

TEST(Truth, PropOneMatchesDirectStandardization)
{
    auto pop = simulate_population(fig2b(30000));
    auto s = fig2b_spec(Proposition::I);
    for (int g : {0, 1}) {
        EXPECT_NEAR(true_tau(pop, s, g).value, brute_force_identify(pop.table, s, g), 1e-12);
    }
}

TEST(Truth, PropTwoNeedsIntervention)
{
    auto pop = simulate_population(fig2b(2000));
    EXPECT_THROW(true_tau(pop, fig2b_spec(Proposition::II), 1), Error);
}

TEST(BruteForce, ConstantNonAllowableReducesToPropOne)
{
    auto t = discrete_fixture(500, 6);
    auto n = t.resolve("n");
    for (auto& r : t.records) r.covariates[static_cast<std::size_t>(n)] = 1.0;
    auto s2 = discrete_spec(Proposition::II);
    auto s1 = s2;
    s1.proposition = Proposition::I;
    s1.non_allowables.clear();
    for (int g : {0, 1}) {
        EXPECT_NEAR(brute_force_identify(t, s2, g), brute_force_identify(t, s1, g), 1e-12);
    }
}

TEST(BruteForce, TrivialPrimeReducesToPropTwo)
{
    auto t = discrete_fixture(500, 7);
    auto wp = t.resolve("wp");
    for (auto& r : t.records) r.covariates[static_cast<std::size_t>(wp)] = 1.0;
    auto s4 = discrete_spec(Proposition::IV);
    auto s2 = discrete_spec(Proposition::II);
    for (int g : {0, 1}) {
        EXPECT_NEAR(brute_force_identify(t, s4, g), brute_force_identify(t, s2, g), 1e-12);
    }
}

TEST(BruteForce, RequiresDiscreteCovariates)
{
    auto t = make_table({"age"}, ColumnKind::Continuous);
    add_record(t, 1, 1, {30.5});
    add_record(t, 0, 0, {41.0});
    TrialSpec s;
    s.allowables = {{"age", Term::Linear, {}, {}}};
    EXPECT_THROW(brute_force_identify(t, s, 1), Error);
}
