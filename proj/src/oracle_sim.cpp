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
#include "disparity/oracle_sim.hpp"

#include "disparity/emulation.hpp"
#include "disparity/errors.hpp"
#include "disparity/numerics.hpp"
#include "disparity/rng.hpp"

#include <boost/math/distributions/normal.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>

namespace disparity {

namespace {

const char* kModule = "oracle_sim";

int role_rank(NodeRole role)
{
    switch (role) {
    case NodeRole::H: return 0;
    case NodeRole::X:
    case NodeRole::L:
    case NodeRole::R: return 1;
    case NodeRole::WDDagger: return 2;
    case NodeRole::WDagger: return 3;
    case NodeRole::WPrime: return 4;
    case NodeRole::Y: return 5;
    }
    return 0;
}

double open_unit(std::uint64_t bits)
{
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

double normal_quantile(double u)
{
    static const boost::math::normal_distribution<double> standard(0.0, 1.0);
    return boost::math::quantile(standard, u);
}

struct Compiled {
    std::vector<std::vector<std::size_t>> parents;
    std::vector<std::vector<std::array<std::size_t, 2>>> inter;
    std::size_t r_index = 0;
    std::size_t y_index = 0;
    std::optional<std::size_t> wd_index;
};

Compiled compile(const DagConfig& dag)
{
    Compiled c;
    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < dag.nodes.size(); ++j) {
        index[dag.nodes[j].name] = j;
    }
    for (std::size_t j = 0; j < dag.nodes.size(); ++j) {
        const auto& node = dag.nodes[j];
        std::vector<std::size_t> ps;
        for (const auto& p : node.parents) {
            ps.push_back(index.at(p));
        }
        c.parents.push_back(ps);
        std::vector<std::array<std::size_t, 2>> it;
        for (const auto& x : node.interactions) {
            it.push_back({index.at(x.a), index.at(x.b)});
        }
        c.inter.push_back(it);
        if (node.role == NodeRole::R) {
            c.r_index = j;
        }
        if (node.role == NodeRole::Y) {
            c.y_index = j;
        }
        if (node.role == NodeRole::WDagger) {
            c.wd_index = j;
        }
    }
    return c;
}

double evaluate_node(const DagConfig& dag, const Compiled& c, std::size_t j, const std::vector<double>& vals,
                     std::uint64_t record, double cluster_shift)
{
    const auto& node = dag.nodes[j];
    double eta = node.intercept + cluster_shift;
    for (std::size_t k = 0; k < c.parents[j].size(); ++k) {
        eta += node.coefficients[k] * vals[c.parents[j][k]];
    }
    for (std::size_t k = 0; k < node.interactions.size(); ++k) {
        eta += node.interactions[k].coefficient * vals[c.inter[j][k][0]] * vals[c.inter[j][k][1]];
    }
    const double u = open_unit(hash_combine(dag.seed, record, static_cast<std::uint64_t>(j)));
    switch (node.link) {
    case Link::Logistic: return u < expit(eta) ? 1.0 : 0.0;
    case Link::Linear: return eta + node.noise_sd * normal_quantile(u);
    case Link::Identity: return eta;
    }
    return eta;
}

} // namespace

const char* to_string(NodeRole role)
{
    switch (role) {
    case NodeRole::H: return "H";
    case NodeRole::X: return "X";
    case NodeRole::L: return "L";
    case NodeRole::R: return "R";
    case NodeRole::WDDagger: return "W_ddagger";
    case NodeRole::WDagger: return "W_dagger";
    case NodeRole::WPrime: return "W_prime";
    case NodeRole::Y: return "Y";
    }
    return "X";
}

const char* to_string(Link link)
{
    switch (link) {
    case Link::Logistic: return "logistic";
    case Link::Linear: return "linear";
    case Link::Identity: return "identity";
    }
    return "logistic";
}

void validate_dag(const DagConfig& dag)
{
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::BadDag, kModule, msg); };
    std::map<std::string, std::size_t> index;
    int n_r = 0;
    int n_y = 0;
    int n_wd = 0;
    for (std::size_t j = 0; j < dag.nodes.size(); ++j) {
        const auto& node = dag.nodes[j];
        if (node.name.empty() || !index.emplace(node.name, j).second) {
            fail("node names must be unique and non-empty ('" + node.name + "')");
        }
        if (node.name == kTimeColumn || node.name == "person_id" || node.name == "visit_id" || node.name == "cluster_id") {
            fail("node name '" + node.name + "' is reserved");
        }
        if (node.coefficients.size() != node.parents.size()) {
            fail("node '" + node.name + "' needs one coefficient per parent");
        }
        std::set<std::string> seen;
        for (const auto& p : node.parents) {
            auto it = index.find(p);
            if (it == index.end() || it->second >= j) {
                fail("parent '" + p + "' of '" + node.name + "' is unknown or not earlier in topological order");
            }
            if (!seen.insert(p).second) {
                fail("parent '" + p + "' repeated for '" + node.name + "'");
            }
            const auto& parent = dag.nodes[it->second];
            if (role_rank(parent.role) > role_rank(node.role)) {
                fail(std::string("role order violated: ") + to_string(parent.role) + " '" + p + "' cannot precede " +
                     to_string(node.role) + " '" + node.name + "'");
            }
        }
        for (const auto& x : node.interactions) {
            if (!seen.count(x.a) || !seen.count(x.b)) {
                fail("interaction terms of '" + node.name + "' must use its parents");
            }
        }
        switch (node.role) {
        case NodeRole::R:
            ++n_r;
            if (node.link != Link::Logistic) {
                fail("R must use the logistic link");
            }
            break;
        case NodeRole::Y: ++n_y; break;
        case NodeRole::WDagger:
            ++n_wd;
            if (node.link != Link::Logistic) {
                fail("the W-dagger node must be binary (logistic link)");
            }
            break;
        default: break;
        }
        if (!(node.noise_sd >= 0.0) || !(node.cluster_sd >= 0.0)) {
            fail("noise scales must be nonnegative");
        }
    }
    if (n_r != 1 || n_y != 1) {
        fail("exactly one R node and one Y node are required");
    }
    if (n_wd > 1) {
        fail("at most one W-dagger node is supported");
    }
    if (dag.n == 0 || dag.clusters == 0 || dag.time_units <= 0) {
        fail("n, clusters and time_units must be positive");
    }
}

bool has_edge(const DagConfig& dag, const std::string& from, const std::string& to)
{
    for (const auto& node : dag.nodes) {
        if (node.name == to) {
            return std::find(node.parents.begin(), node.parents.end(), from) != node.parents.end();
        }
    }
    return false;
}

DagConfig without_edge(const DagConfig& dag, const std::string& from, const std::string& to)
{
    DagConfig out = dag;
    for (auto& node : out.nodes) {
        if (node.name != to) {
            continue;
        }
        for (std::size_t k = 0; k < node.parents.size(); ++k) {
            if (node.parents[k] == from) {
                node.parents.erase(node.parents.begin() + static_cast<std::ptrdiff_t>(k));
                node.coefficients.erase(node.coefficients.begin() + static_cast<std::ptrdiff_t>(k));
                break;
            }
        }
        node.interactions.erase(std::remove_if(node.interactions.begin(), node.interactions.end(),
                                               [&](const Interaction& x) { return x.a == from || x.b == from; }),
                                node.interactions.end());
    }
    return out;
}

SyntheticPopulation simulate_population(const DagConfig& dag)
{
    validate_dag(dag);
    const Compiled c = compile(dag);
    const std::size_t m = dag.nodes.size();

    SyntheticPopulation pop;
    pop.dag = dag;
    auto& table = pop.table;
    table.outcome_kind = dag.nodes[c.y_index].link == Link::Logistic ? OutcomeKind::Binary : OutcomeKind::Continuous;
    std::vector<std::size_t> cov_nodes;
    for (std::size_t j = 0; j < m; ++j) {
        if (j == c.r_index || j == c.y_index) {
            continue;
        }
        const auto& node = dag.nodes[j];
        table.columns.push_back({node.name, node.link == Link::Logistic ? ColumnKind::Binary : ColumnKind::Continuous, {}});
        cov_nodes.push_back(j);
    }
    if (c.wd_index) {
        pop.w_dagger = dag.nodes[*c.wd_index].name;
        for (std::size_t j = *c.wd_index + 1; j < m; ++j) {
            pop.potential[dag.nodes[j].name].resize(dag.n);
        }
        pop.y_potential.resize(dag.n);
    }

    // Cluster shifts per (cluster, node).
    std::vector<std::vector<double>> shift(dag.clusters, std::vector<double>(m, 0.0));
    for (std::size_t k = 0; k < dag.clusters; ++k) {
        for (std::size_t j = 0; j < m; ++j) {
            if (dag.nodes[j].cluster_sd > 0.0) {
                double u = open_unit(hash_combine(dag.seed, 0x636c7573ULL, hash_combine(k, j)));
                shift[k][j] = dag.nodes[j].cluster_sd * normal_quantile(u);
            }
        }
    }

    table.records.resize(dag.n);
    std::vector<double> vals(m);
    std::vector<double> forced(m);
    for (std::size_t i = 0; i < dag.n; ++i) {
        const std::size_t cluster = i % dag.clusters;
        for (std::size_t j = 0; j < m; ++j) {
            vals[j] = evaluate_node(dag, c, j, vals, i, shift[cluster][j]);
        }
        auto& rec = table.records[i];
        rec.person_id = "p" + std::to_string(i + 1);
        rec.visit_id = "v1";
        rec.cluster_id = "c" + std::to_string(cluster + 1);
        rec.time_unit = dag.time_units == 1
                            ? 1
                            : 1 + static_cast<std::int64_t>(hash_combine(dag.seed, 0x74696d65ULL, i) %
                                                            static_cast<std::uint64_t>(dag.time_units));
        rec.group = static_cast<int>(vals[c.r_index]);
        rec.outcome = vals[c.y_index];
        rec.covariates.reserve(cov_nodes.size());
        for (auto j : cov_nodes) {
            rec.covariates.push_back(vals[j]);
        }
        if (c.wd_index) {
            const std::size_t wd = *c.wd_index;
            for (int w = 0; w < 2; ++w) {
                forced = vals;
                forced[wd] = static_cast<double>(w);
                for (std::size_t j = wd + 1; j < m; ++j) {
                    forced[j] = evaluate_node(dag, c, j, forced, i, shift[cluster][j]);
                    pop.potential[dag.nodes[j].name][i][static_cast<std::size_t>(w)] = forced[j];
                }
                pop.y_potential[i][static_cast<std::size_t>(w)] = forced[c.y_index];
            }
        }
    }
    return pop;
}

SyntheticPopulation apply_stochastic_intervention(SyntheticPopulation pop, const TrialSpec& spec, std::uint64_t seed)
{
    const auto& table = pop.table;
    const auto& part = spec.partition;
    if (pop.w_dagger.empty()) {
        throw Error(ErrorCode::SpecMismatch, kModule, "population has no W-dagger node to intervene on");
    }
    for (const auto& cr : part.w_dagger) {
        if (cr.var != pop.w_dagger) {
            throw Error(ErrorCode::SpecMismatch, kModule,
                        "W-dagger criterion on '" + cr.var + "' but the simulated W-dagger node is '" + pop.w_dagger + "'");
        }
    }
    const VarRef wd = table.resolve(pop.w_dagger);
    std::vector<VarRef> cond;
    for (const auto& cr : part.w_ddagger) {
        cond.push_back(table.resolve(cr.var));
    }
    for (const auto& a : spec.allowables) {
        cond.push_back(table.resolve(a.name));
    }
    cond.push_back(kRefGroup);

    const std::size_t n = table.size();
    std::map<std::vector<double>, std::vector<double>> donors;
    std::vector<std::vector<double>> keys(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> key;
        key.reserve(cond.size());
        for (auto ref : cond) {
            key.push_back(table.value(i, ref));
        }
        donors[key].push_back(table.value(i, wd));
        keys[i] = std::move(key);
    }

    std::vector<BoundCriterion> dd;
    std::vector<BoundCriterion> d;
    std::vector<BoundCriterion> p;
    for (const auto& cr : part.w_ddagger) {
        dd.emplace_back(table, cr);
    }
    for (const auto& cr : part.w_dagger) {
        d.emplace_back(table, cr);
    }
    for (const auto& cr : part.w_prime) {
        p.emplace_back(table, cr);
    }

    pop.g_w_dagger.assign(n, 0.0);
    pop.g_outcome.assign(n, 0.0);
    pop.g_flags.assign(n, EligibilityFlags{});
    for (std::size_t i = 0; i < n; ++i) {
        const auto& pool = donors.at(keys[i]);
        if (pool.empty()) {
            throw Error(ErrorCode::EmptyConditioningCell, kModule, "no donors for record " + std::to_string(i + 1));
        }
        Stream rng(hash_combine(seed, 0x67646167ULL, i));
        double w = pool[rng.below(pool.size())];
        const auto wi = static_cast<std::size_t>(w);
        pop.g_w_dagger[i] = w;
        pop.g_outcome[i] = pop.y_potential[i][wi];
        const auto& rec = table.records[i];
        EligibilityFlags f;
        f.q_ddagger = 1;
        for (const auto& c : dd) {
            f.q_ddagger &= c.admits(rec) ? 1 : 0;
        }
        f.q_dagger = 1;
        for (const auto& c : d) {
            f.q_dagger &= c.admits_value(w) ? 1 : 0;
        }
        f.q_prime = 1;
        for (std::size_t k = 0; k < p.size(); ++k) {
            const auto& name = part.w_prime[k].var;
            auto it = pop.potential.find(name);
            double v = it != pop.potential.end() ? it->second[i][wi] : ObservationTable::value(rec, p[k].ref());
            f.q_prime &= p[k].admits_value(v) ? 1 : 0;
        }
        f.q = f.q_ddagger * f.q_dagger * f.q_prime;
        pop.g_flags[i] = f;
    }
    pop.intervened = true;
    return pop;
}

void write_population(std::ostream& out, const SyntheticPopulation& pop)
{
    std::ostringstream base;
    write_observations(base, pop.table);
    std::istringstream lines(base.str());
    std::string line;
    std::getline(lines, line);
    out << line;
    std::vector<std::string> pnames;
    for (const auto& [name, v] : pop.potential) {
        pnames.push_back(name);
    }
    if (!pop.w_dagger.empty()) {
        out << ",truth_Y_w0,truth_Y_w1";
        for (const auto& name : pnames) {
            out << ",truth_" << name << "_w0,truth_" << name << "_w1";
        }
    }
    if (pop.intervened) {
        out << ",truth_g_" << pop.w_dagger << ",truth_g_Y,truth_g_q_ddagger,truth_g_q_dagger,truth_g_q_prime,truth_g_q";
    }
    out << '\n';
    std::size_t i = 0;
    while (std::getline(lines, line)) {
        out << line;
        if (!pop.w_dagger.empty()) {
            out << ',' << format_number(pop.y_potential[i][0]) << ',' << format_number(pop.y_potential[i][1]);
            for (const auto& name : pnames) {
                const auto& v = pop.potential.at(name)[i];
                out << ',' << format_number(v[0]) << ',' << format_number(v[1]);
            }
        }
        if (pop.intervened) {
            const auto& f = pop.g_flags[i];
            out << ',' << format_number(pop.g_w_dagger[i]) << ',' << format_number(pop.g_outcome[i]) << ',' << f.q_ddagger
                << ',' << f.q_dagger << ',' << f.q_prime << ',' << f.q;
        }
        out << '\n';
        ++i;
    }
}

namespace {

struct Cell {
    double count = 0.0;
    double sum = 0.0;
    double sumsq = 0.0;
};

using Key = std::vector<double>;

Key key_for(const ObservationTable& t, std::size_t i, const std::vector<VarRef>& refs)
{
    Key k;
    k.reserve(refs.size());
    for (auto ref : refs) {
        k.push_back(t.value(i, ref));
    }
    return k;
}

std::vector<VarRef> resolve_discrete(const ObservationTable& t, const std::vector<CovariateSpec>& vars)
{
    std::vector<VarRef> out;
    for (const auto& v : vars) {
        auto ref = t.resolve(v.name);
        if (t.kind_of(ref) == ColumnKind::Continuous) {
            throw Error(ErrorCode::SpecMismatch, kModule, "enumeration needs discrete covariates; '" + v.name + "' is continuous");
        }
        out.push_back(ref);
    }
    return out;
}

struct TruthParts {
    std::map<Key, Cell> standard; // count by a among Q(G)=1, S=1
    std::array<std::map<Key, Cell>, 2> group;
    double n_standard = 0.0;
};

TruthParts truth_parts(const SyntheticPopulation& pop, const TrialSpec& spec)
{
    const auto& t = pop.table;
    auto refs = resolve_discrete(t, spec.allowables);
    StandardSelector sel(t, spec.standard);
    std::vector<EligibilityFlags> flags;
    std::vector<double> y;
    if (spec.proposition == Proposition::I) {
        auto flagged = evaluate_eligibility(t, spec.partition);
        for (const auto& rec : flagged.records) {
            flags.push_back(rec.flags);
            y.push_back(rec.outcome);
        }
    }
    else {
        if (!pop.intervened) {
            throw Error(ErrorCode::SpecMismatch, kModule, "truth for Propositions II-IV needs an intervened population");
        }
        flags = pop.g_flags;
        y = pop.g_outcome;
    }
    TruthParts parts;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (flags[i].q != 1) {
            continue;
        }
        auto key = key_for(t, i, refs);
        const auto& rec = t.records[i];
        if (sel(rec)) {
            parts.standard[key].count += 1.0;
            parts.n_standard += 1.0;
        }
        auto& c = parts.group[static_cast<std::size_t>(rec.group)][key];
        c.count += 1.0;
        c.sum += y[i];
        c.sumsq += y[i] * y[i];
    }
    if (parts.n_standard == 0.0) {
        throw Error(ErrorCode::EmptyStandard, kModule, "standard population empty in the truth population");
    }
    return parts;
}

struct CellStats {
    double mean = 0.0;
    double var_of_mean = 0.0;
};

CellStats stats(const TruthParts& parts, int group, const Key& a)
{
    const auto& g = parts.group[static_cast<std::size_t>(group)];
    auto it = g.find(a);
    if (it == g.end() || it->second.count == 0.0) {
        throw Error(ErrorCode::EmptyCell, kModule, "no eligible R=" + std::to_string(group) + " records in a standard stratum");
    }
    const auto& c = it->second;
    double m = c.sum / c.count;
    double var = c.count > 1.0 ? (c.sumsq - c.count * m * m) / (c.count - 1.0) : 0.0;
    return {m, std::max(var, 0.0) / c.count};
}

} // namespace

Truth true_tau(const SyntheticPopulation& pop, const TrialSpec& spec, int group)
{
    auto parts = truth_parts(pop, spec);
    double tau = 0.0;
    double var = 0.0;
    double second = 0.0;
    for (const auto& [a, c] : parts.standard) {
        double p = c.count / parts.n_standard;
        auto s = stats(parts, group, a);
        tau += p * s.mean;
        var += p * p * s.var_of_mean;
        second += p * s.mean * s.mean;
    }
    var += std::max(second - tau * tau, 0.0) / parts.n_standard;
    return {tau, std::sqrt(var)};
}

TruthDisparity true_disparity(const SyntheticPopulation& pop, const TrialSpec& spec)
{
    auto parts = truth_parts(pop, spec);
    TruthDisparity out;
    double d = 0.0;
    double vd = 0.0;
    double second = 0.0;
    std::array<double, 2> tau{0.0, 0.0};
    std::array<double, 2> vt{0.0, 0.0};
    std::array<double, 2> sec{0.0, 0.0};
    for (const auto& [a, c] : parts.standard) {
        double p = c.count / parts.n_standard;
        auto s1 = stats(parts, 1, a);
        auto s0 = stats(parts, 0, a);
        double delta = s1.mean - s0.mean;
        d += p * delta;
        vd += p * p * (s1.var_of_mean + s0.var_of_mean);
        second += p * delta * delta;
        tau[1] += p * s1.mean;
        tau[0] += p * s0.mean;
        vt[1] += p * p * s1.var_of_mean;
        vt[0] += p * p * s0.var_of_mean;
        sec[1] += p * s1.mean * s1.mean;
        sec[0] += p * s0.mean * s0.mean;
    }
    vd += std::max(second - d * d, 0.0) / parts.n_standard;
    for (int g = 0; g < 2; ++g) {
        vt[g] += std::max(sec[g] - tau[g] * tau[g], 0.0) / parts.n_standard;
    }
    out.tau_r = {tau[1], std::sqrt(vt[1])};
    out.tau_rprime = {tau[0], std::sqrt(vt[0])};
    out.difference = {d, std::sqrt(vd)};
    return out;
}

namespace {

// Counts and outcome/flag sums over rows matching a predicate, keyed by a
// covariate tuple.
class Tally {
public:
    std::map<Key, Cell> cells;
    double total = 0.0;

    void add(const Key& k, double v)
    {
        auto& c = cells[k];
        c.count += 1.0;
        c.sum += v;
        total += 1.0;
    }
    double count(const Key& k) const
    {
        auto it = cells.find(k);
        return it == cells.end() ? 0.0 : it->second.count;
    }
    double mean(const Key& k, const char* what) const
    {
        auto it = cells.find(k);
        if (it == cells.end() || it->second.count == 0.0) {
            throw Error(ErrorCode::EmptyCell, kModule, std::string("unpopulated cell for ") + what);
        }
        return it->second.sum / it->second.count;
    }
};

Key join(const Key& n, const Key& a)
{
    Key k = n;
    k.insert(k.end(), a.begin(), a.end());
    return k;
}

} // namespace

double brute_force_identify(const ObservationTable& table, const TrialSpec& spec, int group)
{
    return brute_force_identify(table, spec, spec.proposition, group);
}

double brute_force_identify(const ObservationTable& raw, const TrialSpec& spec, Proposition prop, int group)
{
    ObservationTable t = raw.has_eligibility ? raw : evaluate_eligibility(raw, spec.partition);
    auto aref = resolve_discrete(t, spec.allowables);
    auto nref = resolve_discrete(t, spec.non_allowables);
    StandardSelector sel(t, spec.standard);

    // Distinct n values observed anywhere, for enumeration.
    std::set<Key> n_levels;
    std::set<Key> a_levels;
    std::vector<Key> akey(t.size());
    std::vector<Key> nkey(t.size());
    for (std::size_t i = 0; i < t.size(); ++i) {
        akey[i] = key_for(t, i, aref);
        nkey[i] = key_for(t, i, nref);
        n_levels.insert(nkey[i]);
        a_levels.insert(akey[i]);
    }
    auto rows = [&](auto pred, auto&& keyfn, auto&& valfn) {
        Tally tl;
        for (std::size_t i = 0; i < t.size(); ++i) {
            const auto& rec = t.records[i];
            if (pred(rec)) {
                tl.add(keyfn(i), valfn(rec));
            }
        }
        return tl;
    };
    auto by_a = [&](std::size_t i) { return akey[i]; };
    auto by_na = [&](std::size_t i) { return join(nkey[i], akey[i]); };
    auto one = [](const Record&) { return 1.0; };
    auto outcome = [](const Record& r) { return r.outcome; };
    auto qdag = [](const Record& r) { return static_cast<double>(r.flags.q_dagger); };
    auto qpr = [](const Record& r) { return static_cast<double>(r.flags.q_prime); };
    auto is_r = [group](const Record& r) { return r.group == group; };
    auto S = [&](const Record& r) { return sel(r); };

    // Outcome regression cells on {Q = 1, R = r}.
    Tally ybar_na = rows([&](const Record& r) { return r.flags.q == 1 && is_r(r); }, by_na, outcome);
    Tally ybar_a = rows([&](const Record& r) { return r.flags.q == 1 && is_r(r); }, by_a, outcome);

    // Inner sum over n: sum_n ybar(n, a) * weight(n, a) / sum_n weight(n, a).
    auto n_average = [&](const Key& a, const std::function<double(const Key&)>& weight) {
        double num = 0.0;
        double den = 0.0;
        for (const auto& n : n_levels) {
            double w = weight(n);
            if (w == 0.0) {
                continue;
            }
            num += w * ybar_na.mean(join(n, a), "E(Y|Q=1,r,n,a)");
            den += w;
        }
        if (den == 0.0) {
            throw Error(ErrorCode::EmptyCell, kModule, "no N mass in a required allowable stratum");
        }
        return num / den;
    };

    double tau = 0.0;
    switch (prop) {
    case Proposition::I: {
        Tally std_a = rows([&](const Record& r) { return r.flags.q == 1 && S(r); }, by_a, one);
        for (const auto& [a, c] : std_a.cells) {
            tau += (c.count / std_a.total) * ybar_a.mean(a, "E(Y|Q=1,r,a)");
        }
        break;
    }
    case Proposition::II: {
        Tally std_a = rows([&](const Record& r) { return r.flags.q == 1 && S(r); }, by_a, one);
        Tally n_dd = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && is_r(r); }, by_na, one);
        for (const auto& [a, c] : std_a.cells) {
            tau += (c.count / std_a.total) * n_average(a, [&](const Key& n) { return n_dd.count(join(n, a)); });
        }
        break;
    }
    case Proposition::III: {
        Tally std_a = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && r.flags.q_prime == 1 && S(r); }, by_a, one);
        Tally sel_a = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && S(r); }, by_a, qdag);
        Tally n_ddp = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && r.flags.q_prime == 1 && is_r(r); }, by_na, one);
        double norm = 0.0;
        std::map<Key, double> pstar;
        for (const auto& [a, c] : std_a.cells) {
            double v = (c.count / std_a.total) * sel_a.mean(a, "P(Q†|Q‡=1,S,a)");
            pstar[a] = v;
            norm += v;
        }
        if (norm == 0.0) {
            throw Error(ErrorCode::EmptyCell, kModule, "standard allowable distribution has no mass after selection");
        }
        for (const auto& [a, v] : pstar) {
            if (v == 0.0) {
                continue;
            }
            tau += (v / norm) * n_average(a, [&](const Key& n) { return n_ddp.count(join(n, a)); });
        }
        break;
    }
    case Proposition::IV: {
        Tally n_dr = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && is_r(r); }, by_na, one);
        Tally prime_r = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && r.flags.q_dagger == 1 && is_r(r); }, by_na, qpr);
        Tally n_ds = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && S(r); }, by_na, one);
        Tally prime_s = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && r.flags.q_dagger == 1 && S(r); }, by_na, qpr);
        Tally std_a = rows([&](const Record& r) { return r.flags.q_ddagger == 1 && r.flags.q_dagger == 1 && S(r); }, by_a, one);
        std::map<Key, double> pstar;
        double norm = 0.0;
        for (const auto& [a, c] : std_a.cells) {
            double m = 0.0;
            double mass = 0.0;
            for (const auto& n : n_levels) {
                double cnt = n_ds.count(join(n, a));
                if (cnt == 0.0) {
                    continue;
                }
                m += cnt * prime_s.mean(join(n, a), "P(Q'|Q†Q‡=1,S,n,a)");
                mass += cnt;
            }
            double v = (c.count / std_a.total) * (m / mass);
            pstar[a] = v;
            norm += v;
        }
        if (norm == 0.0) {
            throw Error(ErrorCode::EmptyCell, kModule, "standard allowable distribution has no mass after W' selection");
        }
        for (const auto& [a, v] : pstar) {
            if (v == 0.0) {
                continue;
            }
            tau += (v / norm) * n_average(a, [&](const Key& n) {
                double cnt = n_dr.count(join(n, a));
                if (cnt == 0.0) {
                    return 0.0;
                }
                return cnt * prime_r.mean(join(n, a), "P(Q'|Q†Q‡=1,r,n,a)");
            });
        }
        break;
    }
    }
    return tau;
}

} // namespace disparity
