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
#include "disparity/estimators.hpp"

#include "disparity/emulation.hpp"
#include "disparity/errors.hpp"
#include "disparity/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace disparity {

namespace {

const char* kModule = "estimators";
constexpr double kFloor = 1e-10;

using Rows = std::vector<std::size_t>;

ObservationTable annotated(const ObservationTable& table, const TrialSpec& spec)
{
    if (table.has_eligibility && table.has_standard) {
        return table;
    }
    return assign_standard_membership(evaluate_eligibility(table, spec.partition), spec);
}

double quantile(std::vector<double> v, double p)
{
    std::sort(v.begin(), v.end());
    double h = (static_cast<double>(v.size()) - 1.0) * p;
    auto lo = static_cast<std::size_t>(std::floor(h));
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

class Engine {
public:
    Engine(const ObservationTable& t, const TrialSpec& s, int group, const StandardPopulation& standard)
        : frame(t, s, standard)
        , spec(s)
        , r(group)
    {
        check_spec(s, t);
        A = s.allowables;
        AN = s.non_allowables;
        AN.insert(AN.end(), s.allowables.begin(), s.allowables.end());
        Rr.resize(frame.n);
        for (std::size_t i = 0; i < frame.n; ++i) {
            Rr[i] = frame.R[i] == r ? 1 : 0;
        }
        Er = where([&](std::size_t i) { return frame.q[i] == 1 && Rr[i] == 1; });
        if (Er.empty()) {
            throw Error(ErrorCode::EmptyGroup, kModule, "no eligible records with R = " + std::to_string(r));
        }
    }

    Frame frame;
    const TrialSpec& spec;
    int r;
    std::vector<CovariateSpec> A;
    std::vector<CovariateSpec> AN;
    std::vector<int> Rr;
    Rows Er;
    std::vector<ModelAudit> audits;

    Rows where(const std::function<bool(std::size_t)>& pred) const { return frame.rows(pred); }

    template <typename T>
    static std::vector<double> values(const Rows& rows, const std::vector<T>& v)
    {
        std::vector<double> out;
        out.reserve(rows.size());
        for (auto i : rows) {
            out.push_back(static_cast<double>(v[i]));
        }
        return out;
    }

    std::string group_tag() const { return "R=" + std::to_string(r); }

    FittedModel fit(const std::string& name, const Rows& rows, const std::vector<double>& response,
                    const std::vector<CovariateSpec>& vars, Family family = Family::Logistic,
                    const std::vector<double>* weights = nullptr)
    {
        if (rows.empty()) {
            throw Error(ErrorCode::EmptyStage, kModule, "subset for model '" + name + "' is empty");
        }
        ModelSpec ms{name, vars, spec.models, family};
        auto m = FittedModel::fit(frame, ms, rows, response, weights);
        audits.push_back(m.audit());
        return m;
    }

    std::string record_tag(std::size_t row) const
    {
        const auto& rec = frame.table.records[row];
        return "record (" + rec.person_id + ", " + rec.visit_id + ")";
    }

    // Predictions that must exist (cell supported by the fit subset).
    std::vector<double> predict(const FittedModel& m, const Rows& rows)
    {
        auto p = m.predict(frame, rows);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (std::isnan(p[k])) {
                throw Error(ErrorCode::PositivityViolation, kModule,
                            "model '" + m.audit().name + "' has no support in the covariate stratum of " + record_tag(rows[k]));
            }
        }
        return p;
    }

    std::vector<double> predict_optional(const FittedModel& m, const Rows& rows)
    {
        return m.predict(frame, rows);
    }

    // Denominator probabilities must stay above the floor on the rows where
    // the identifying formula needs them.
    void require_floor(const FittedModel& m, const Rows& rows)
    {
        auto p = predict(m, rows);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (p[k] < kFloor) {
                throw Error(ErrorCode::PositivityViolation, kModule,
                            "denominator '" + m.audit().name + "' below 1e-10 at " + record_tag(rows[k]));
            }
        }
    }

    static void require_floor(double v, const std::string& what)
    {
        if (!(v >= kFloor)) {
            throw Error(ErrorCode::PositivityViolation, kModule, "denominator '" + what + "' below 1e-10");
        }
    }

    double mean(const Rows& rows, const std::vector<double>& resp, const std::string& what) const
    {
        if (rows.empty()) {
            throw Error(ErrorCode::EmptyStage, kModule, "subset for '" + what + "' is empty");
        }
        double s = 0.0;
        for (double v : resp) {
            s += v;
        }
        return s / static_cast<double>(rows.size());
    }

    struct Standardization {
        std::vector<double> ratio; // P(S|.,a) / P(R=r|.,a) on Er
        double marginal = 1.0;     // P(R=r|.) / P(S|.)
    };

    Standardization standardization(const Rows& base, const std::string& cond)
    {
        Standardization out;
        auto respS = values(base, frame.S);
        auto respR = values(base, Rr);
        auto mS = fit("P(S=1|" + cond + ",A)", base, respS, A);
        auto mR = fit("P(" + group_tag() + "|" + cond + ",A)", base, respR, A);
        Rows baseS;
        for (auto i : base) {
            if (frame.S[i] == 1) {
                baseS.push_back(i);
            }
        }
        if (baseS.empty()) {
            throw Error(ErrorCode::EmptyStandard, kModule, "standard population is empty on {" + cond + "}");
        }
        require_floor(mR, baseS);
        auto pS = predict_optional(mS, Er);
        auto pR = predict(mR, Er);
        out.ratio.resize(Er.size());
        for (std::size_t k = 0; k < Er.size(); ++k) {
            out.ratio[k] = std::isnan(pS[k]) ? 0.0 : pS[k] / pR[k];
        }
        double margR = mean(base, respR, "P(" + group_tag() + "|" + cond + ")");
        double margS = mean(base, respS, "P(S=1|" + cond + ")");
        require_floor(margS, "P(S=1|" + cond + ")");
        out.marginal = margR / margS;
        return out;
    }

    // Ratio of a coarse to a fine selection model, evaluated on Er, with the
    // fine model checked for positivity on its own fit subset.
    std::vector<double> selection_ratio(const Rows& base, const std::vector<double>& resp, const std::string& cond,
                                        const std::vector<CovariateSpec>& coarse, const std::string& coarse_tag,
                                        const std::vector<CovariateSpec>& fine, const std::string& fine_tag,
                                        const std::string& outcome = "Q†=1")
    {
        auto mc = fit("P(" + outcome + "|" + cond + coarse_tag + ")", base, resp, coarse);
        auto mf = fit("P(" + outcome + "|" + cond + fine_tag + ")", base, resp, fine);
        require_floor(mf, base);
        auto pc = predict(mc, Er);
        auto pf = predict(mf, Er);
        std::vector<double> out(Er.size());
        for (std::size_t k = 0; k < Er.size(); ++k) {
            out[k] = pc[k] / pf[k];
        }
        return out;
    }

    std::vector<double> constant(double v) const { return std::vector<double>(Er.size(), v); }
};

// omega = product of factors; rows whose standardization factor is zero carry
// zero weight regardless of the other factors.
void combine(WeightVector& wv, const std::vector<std::string>& order, const std::string& gate)
{
    const std::size_t m = wv.rows.size();
    wv.omega.assign(m, 1.0);
    for (std::size_t k = 0; k < m; ++k) {
        if (wv.factors.at(gate)[k] == 0.0) {
            wv.omega[k] = 0.0;
            continue;
        }
        double w = 1.0;
        for (const auto& name : order) {
            double f = wv.factors.at(name)[k];
            if (!std::isfinite(f)) {
                throw Error(ErrorCode::PositivityViolation, kModule, "weight factor '" + name + "' is not finite");
            }
            w *= f;
        }
        wv.omega[k] = w;
    }
}

WeightVector weights_impl(const ObservationTable& t, const TrialSpec& spec, int group, const StandardPopulation& standard)
{
    Engine e(t, spec, group, standard);
    auto& f = e.frame;
    WeightVector wv;
    wv.proposition = spec.proposition;
    wv.group = group;
    wv.rows = e.Er;
    const std::string dd = "Q‡=1";
    const std::string r = e.group_tag();

    switch (spec.proposition) {
    case Proposition::I: {
        Rows E = e.where([&](std::size_t i) { return f.q[i] == 1; });
        auto st = e.standardization(E, "Q=1");
        wv.factors["standardization"] = st.ratio;
        wv.factors["marginal_ratio"] = e.constant(st.marginal);
        combine(wv, {"standardization", "marginal_ratio"}, "standardization");
        break;
    }
    case Proposition::II: {
        Rows D = e.where([&](std::size_t i) { return f.qdd[i] == 1 && e.Rr[i] == 1; });
        wv.factors["selection"] =
            e.selection_ratio(D, Engine::values(D, f.qd), dd + "," + r, e.A, ",A", e.AN, ",N,A");
        Rows E = e.where([&](std::size_t i) { return f.q[i] == 1; });
        auto st = e.standardization(E, "Q=1");
        wv.factors["standardization"] = st.ratio;
        wv.factors["marginal_ratio"] = e.constant(st.marginal);
        combine(wv, {"selection", "standardization", "marginal_ratio"}, "standardization");
        break;
    }
    case Proposition::III: {
        const std::string ddp = "Q‡Q'=1";
        Rows DP = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.qp[i] == 1; });
        Rows DPr;
        for (auto i : DP) {
            if (e.Rr[i] == 1) {
                DPr.push_back(i);
            }
        }
        auto selResp = Engine::values(DPr, f.qd);
        if (!spec.alternate_weights) {
            // Selection ratio against the marginal P(Q-dagger|Q-ddagger Q', r).
            auto mf = e.fit("P(Q†=1|" + ddp + "," + r + ",N,A)", DPr, selResp, e.AN);
            e.require_floor(mf, DPr);
            double marg = e.mean(DPr, selResp, "P(Q†=1|" + ddp + "," + r + ")");
            auto pf = e.predict(mf, e.Er);
            std::vector<double> sel(e.Er.size());
            for (std::size_t k = 0; k < sel.size(); ++k) {
                sel[k] = marg / pf[k];
            }
            wv.factors["selection"] = sel;

            Rows DS = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.S[i] == 1; });
            auto tResp = Engine::values(DS, f.qd);
            auto mt = e.fit("P(Q†=1|" + dd + ",S=1,A)", DS, tResp, e.A);
            double tm = e.mean(DS, tResp, "P(Q†=1|" + dd + ",S=1)");
            Engine::require_floor(tm, "P(Q†=1|" + dd + ",S=1)");
            auto pt = e.predict_optional(mt, e.Er);
            std::vector<double> tf(e.Er.size());
            for (std::size_t k = 0; k < tf.size(); ++k) {
                tf[k] = pt[k] / tm;
            }
            wv.factors["standard_selection"] = tf;

            auto st = e.standardization(DP, ddp);
            wv.factors["standardization"] = st.ratio;
            wv.factors["marginal_ratio"] = e.constant(st.marginal);
            combine(wv, {"selection", "standard_selection", "standardization", "marginal_ratio"}, "standardization");
        }
        else {
            wv.alternate = true;
            wv.factors["selection"] = e.selection_ratio(DPr, selResp, ddp + "," + r, e.A, ",A", e.AN, ",N,A");
            Rows E = e.where([&](std::size_t i) { return f.q[i] == 1; });
            auto st = e.standardization(E, "Q=1");
            wv.factors["standardization"] = st.ratio;
            wv.factors["marginal_ratio"] = e.constant(st.marginal);

            Rows DS = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.S[i] == 1; });
            Rows DDS = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.qd[i] == 1 && f.S[i] == 1; });
            auto pResp = Engine::values(DS, f.qp);
            auto ppResp = Engine::values(DDS, f.qp);
            auto mNum = e.fit("P(Q'=1|" + dd + ",S=1,A)", DS, pResp, e.A);
            auto mDen = e.fit("P(Q'=1|Q†Q‡=1,S=1,A)", DDS, ppResp, e.A);
            double margNum = e.mean(DDS, ppResp, "P(Q'=1|Q†Q‡=1,S=1)");
            double margDen = e.mean(DS, pResp, "P(Q'=1|" + dd + ",S=1)");
            Engine::require_floor(margDen, "P(Q'=1|" + dd + ",S=1)");
            auto pn = e.predict_optional(mNum, e.Er);
            auto pd = e.predict_optional(mDen, e.Er);
            std::vector<double> qf(e.Er.size());
            for (std::size_t k = 0; k < qf.size(); ++k) {
                if (wv.factors["standardization"][k] != 0.0 && !(pd[k] >= kFloor)) {
                    throw Error(ErrorCode::PositivityViolation, kModule,
                                "denominator 'P(Q'=1|Q†Q‡=1,S=1,A)' below 1e-10 at " + e.record_tag(e.Er[k]));
                }
                qf[k] = pn[k] / pd[k];
            }
            wv.factors["prime_ratio"] = qf;
            wv.factors["prime_marginal"] = e.constant(margNum / margDen);
            combine(wv, {"selection", "standardization", "marginal_ratio", "prime_ratio", "prime_marginal"},
                    "standardization");
        }
        break;
    }
    case Proposition::IV: {
        const std::string dds = "Q†Q‡=1";
        Rows Dr = e.where([&](std::size_t i) { return f.qdd[i] == 1 && e.Rr[i] == 1; });
        Rows DS = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.S[i] == 1; });
        Rows DD = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.qd[i] == 1; });
        Rows DDr;
        Rows DDS;
        for (auto i : DD) {
            if (e.Rr[i] == 1) {
                DDr.push_back(i);
            }
            if (f.S[i] == 1) {
                DDS.push_back(i);
            }
        }
        // omega_r on {Q-dagger Q-ddagger = 1, R = r} and on Er.
        auto mrA = e.fit("P(Q†=1|" + dd + "," + r + ",A)", Dr, Engine::values(Dr, f.qd), e.A);
        auto mrNA = e.fit("P(Q†=1|" + dd + "," + r + ",N,A)", Dr, Engine::values(Dr, f.qd), e.AN);
        e.require_floor(mrNA, Dr);
        auto omega_r_on = [&](const Rows& rows) {
            auto a = e.predict(mrA, rows);
            auto b = e.predict(mrNA, rows);
            for (std::size_t k = 0; k < rows.size(); ++k) {
                a[k] /= b[k];
            }
            return a;
        };
        wv.factors["selection"] = omega_r_on(e.Er);

        auto st = e.standardization(DD, dds);
        wv.factors["standardization"] = st.ratio;
        wv.factors["marginal_ratio"] = e.constant(st.marginal);

        auto wr = omega_r_on(DDr);
        auto qpr = Engine::values(DDr, f.qp);
        auto mQr = e.fit("E(ω_r Q'|" + dds + "," + r + ",A)", DDr, qpr, e.A, Family::Logistic, &wr);
        double margQr = e.mean(DDr, qpr, "E(Q'|" + dds + "," + r + ")");
        auto pQr = e.predict(mQr, e.Er);
        std::vector<double> inner_r(e.Er.size());
        for (std::size_t k = 0; k < inner_r.size(); ++k) {
            if (!(pQr[k] >= kFloor)) {
                throw Error(ErrorCode::PositivityViolation, kModule,
                            "denominator 'E(ω_r Q'|" + dds + "," + r + ",A)' below 1e-10 at " + e.record_tag(e.Er[k]));
            }
            inner_r[k] = margQr / pQr[k];
        }
        wv.factors["group_prime"] = inner_r;

        auto msA = e.fit("P(Q†=1|" + dd + ",S=1,A)", DS, Engine::values(DS, f.qd), e.A);
        auto msNA = e.fit("P(Q†=1|" + dd + ",S=1,N,A)", DS, Engine::values(DS, f.qd), e.AN);
        e.require_floor(msNA, DS);
        auto wsA = e.predict(msA, DDS);
        auto wsNA = e.predict(msNA, DDS);
        std::vector<double> ws(DDS.size());
        for (std::size_t k = 0; k < DDS.size(); ++k) {
            ws[k] = wsA[k] / wsNA[k];
        }
        auto qps = Engine::values(DDS, f.qp);
        if (DDS.empty()) {
            throw Error(ErrorCode::EmptyStandard, kModule, "standard population is empty on {" + dds + "}");
        }
        auto mQs = e.fit("E(ω_S Q'|" + dds + ",S=1,A)", DDS, qps, e.A, Family::Logistic, &ws);
        double wsum = 0.0;
        double wqsum = 0.0;
        for (std::size_t k = 0; k < DDS.size(); ++k) {
            wsum += ws[k];
            wqsum += ws[k] * qps[k];
        }
        double margQs = wqsum / wsum;
        Engine::require_floor(margQs, "E(ω_S Q'|" + dds + ",S=1)");
        auto pQs = e.predict_optional(mQs, e.Er);
        std::vector<double> inner_s(e.Er.size());
        for (std::size_t k = 0; k < inner_s.size(); ++k) {
            inner_s[k] = pQs[k] / margQs;
        }
        wv.factors["standard_prime"] = inner_s;
        combine(wv, {"selection", "standardization", "marginal_ratio", "group_prime", "standard_prime"},
                "standardization");
        break;
    }
    }

    if (spec.truncation) {
        double p = *spec.truncation;
        double lo = quantile(wv.omega, p);
        double hi = quantile(wv.omega, 1.0 - p);
        std::size_t clamped = 0;
        for (auto& w : wv.omega) {
            double c = std::clamp(w, lo, hi);
            clamped += c != w ? 1u : 0u;
            w = c;
        }
        wv.notes.push_back("weights truncated at the " + format_number(100.0 * p) + "/" + format_number(100.0 * (1.0 - p)) +
                           " percentiles (" + std::to_string(clamped) + " records clamped)");
    }
    for (double w : wv.omega) {
        if (!std::isfinite(w) || w < 0.0) {
            throw Error(ErrorCode::PositivityViolation, kModule, "non-finite or negative weight");
        }
    }
    wv.diagnostics = summarize_weights(wv.omega);
    wv.models = std::move(e.audits);
    return wv;
}

double weighted_mean(const std::vector<double>& w, const std::vector<double>& y)
{
    double sw = 0.0;
    double swy = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        sw += w[k];
        swy += w[k] * y[k];
    }
    if (!(sw > 0.0)) {
        throw Error(ErrorCode::PositivityViolation, kModule, "weights sum to zero; the standard population has no overlap");
    }
    return swy / sw;
}

TauEstimate ice_impl(const ObservationTable& t, const TrialSpec& spec, int group)
{
    Engine e(t, spec, group, spec.standard);
    auto& f = e.frame;
    const Family yfam = f.outcome_family;
    const std::string r = e.group_tag();
    const std::string dd = "Q‡=1";
    TauEstimate out;
    out.group = group;
    out.kind = EstimatorKind::Ice;
    out.reference_rows = e.Er.size();
    auto yEr = Engine::values(e.Er, f.Y);

    auto nonempty = [](const Rows& rows, const std::string& what) {
        if (rows.empty()) {
            throw Error(ErrorCode::EmptyStage, kModule, "ICE stage subset {" + what + "} is empty");
        }
    };

    switch (spec.proposition) {
    case Proposition::I: {
        Rows ES = e.where([&](std::size_t i) { return f.q[i] == 1 && f.S[i] == 1; });
        nonempty(ES, "Q=1,S=1");
        auto m = e.fit("E(Y|Q=1," + r + ",A)", e.Er, yEr, e.A, yfam);
        auto p = e.predict(m, ES);
        out.value = weighted_mean(std::vector<double>(p.size(), 1.0), p);
        break;
    }
    case Proposition::II: {
        Rows Dr = e.where([&](std::size_t i) { return f.qdd[i] == 1 && e.Rr[i] == 1; });
        Rows ES = e.where([&](std::size_t i) { return f.q[i] == 1 && f.S[i] == 1; });
        nonempty(Dr, dd + "," + r);
        nonempty(ES, "Q=1,S=1");
        auto m1 = e.fit("E(Y|Q=1," + r + ",N,A)", e.Er, yEr, e.AN, yfam);
        auto p1 = e.predict(m1, Dr);
        auto m2 = e.fit("E(η1|" + dd + "," + r + ",A)", Dr, p1, e.A, yfam);
        auto p2 = e.predict(m2, ES);
        out.value = weighted_mean(std::vector<double>(p2.size(), 1.0), p2);
        break;
    }
    case Proposition::III: {
        Rows DS = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.S[i] == 1; });
        Rows DPS = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.qp[i] == 1 && f.S[i] == 1; });
        Rows DPr = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.qp[i] == 1 && e.Rr[i] == 1; });
        nonempty(DS, dd + ",S=1");
        nonempty(DPS, "Q‡Q'=1,S=1");
        nonempty(DPr, "Q‡Q'=1," + r);
        // Part A: weights on {Q-ddagger Q' = 1, S = 1}.
        auto qdDS = Engine::values(DS, f.qd);
        auto m0 = e.fit("P(Q†=1|" + dd + ",S=1,A)", DS, qdDS, e.A);
        double eta1 = e.mean(DS, qdDS, "P(Q†=1|" + dd + ",S=1)");
        Engine::require_floor(eta1, "P(Q†=1|" + dd + ",S=1)");
        auto p0 = e.predict(m0, DPS);
        std::vector<double> w(DPS.size());
        for (std::size_t k = 0; k < w.size(); ++k) {
            w[k] = p0[k] / eta1;
        }
        // Part B: iterated expectation.
        auto m2 = e.fit("E(Y|Q=1," + r + ",N,A)", e.Er, yEr, e.AN, yfam);
        auto p2 = e.predict(m2, DPr);
        auto m3 = e.fit("E(η2|Q‡Q'=1," + r + ",A)", DPr, p2, e.A, yfam);
        auto p3 = e.predict(m3, DPS);
        out.value = weighted_mean(w, p3);
        break;
    }
    case Proposition::IV: {
        const std::string dds = "Q†Q‡=1";
        Rows Dr = e.where([&](std::size_t i) { return f.qdd[i] == 1 && e.Rr[i] == 1; });
        Rows DDr = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.qd[i] == 1 && e.Rr[i] == 1; });
        Rows DS = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.S[i] == 1; });
        Rows DDS = e.where([&](std::size_t i) { return f.qdd[i] == 1 && f.qd[i] == 1 && f.S[i] == 1; });
        nonempty(Dr, dd + "," + r);
        nonempty(DDr, dds + "," + r);
        nonempty(DS, dd + ",S=1");
        nonempty(DDS, dds + ",S=1");
        // Part A: omega_{r,q-ddagger} on {Q-ddagger = 1, R = r}.
        auto m0 = e.fit("P(Q'=1|" + dds + "," + r + ",N,A)", DDr, Engine::values(DDr, f.qp), e.AN);
        auto p0 = e.predict(m0, Dr);
        auto m1 = e.fit("E(η0|" + dd + "," + r + ",A)", Dr, p0, e.A);
        auto p1 = e.predict(m1, Dr);
        std::vector<double> wr(Dr.size());
        for (std::size_t k = 0; k < wr.size(); ++k) {
            if (!(p1[k] >= kFloor)) {
                throw Error(ErrorCode::PositivityViolation, kModule,
                            "denominator 'E(η0|" + dd + "," + r + ",A)' below 1e-10 at " + e.record_tag(Dr[k]));
            }
            wr[k] = p0[k] / p1[k];
        }
        // Part B: standard-population weights on {Q-dagger Q-ddagger = 1, S = 1}.
        auto m2 = e.fit("P(Q'=1|" + dds + ",S=1,N,A)", DDS, Engine::values(DDS, f.qp), e.AN);
        auto p2 = e.predict(m2, DS);
        auto m3 = e.fit("E(η2|" + dd + ",S=1,A)", DS, p2, e.A);
        auto p3 = e.predict(m3, DDS);
        double eta4 = 0.0;
        for (double v : p3) {
            eta4 += v;
        }
        eta4 /= static_cast<double>(p3.size());
        Engine::require_floor(eta4, "η4");
        std::vector<double> wb(DDS.size());
        for (std::size_t k = 0; k < wb.size(); ++k) {
            wb[k] = p3[k] / eta4;
        }
        // Part C: weighted iterated expectation.
        auto m5 = e.fit("E(Y|Q=1," + r + ",N,A)", e.Er, yEr, e.AN, yfam);
        auto p5 = e.predict(m5, Dr);
        auto m6 = e.fit("E(η5|" + dd + "," + r + ",A;ω)", Dr, p5, e.A, yfam, &wr);
        auto p6 = e.predict(m6, DDS);
        out.value = weighted_mean(wb, p6);
        break;
    }
    }
    out.models = std::move(e.audits);
    return out;
}

} // namespace

WeightDiagnostics summarize_weights(const std::vector<double>& w)
{
    WeightDiagnostics d;
    d.count = w.size();
    if (w.empty()) {
        return d;
    }
    double s = 0.0;
    d.min = w[0];
    d.max = w[0];
    for (double v : w) {
        s += v;
        d.min = std::min(d.min, v);
        d.max = std::max(d.max, v);
    }
    d.mean = s / static_cast<double>(w.size());
    return d;
}

WeightVector compute_weights(const ObservationTable& table, const TrialSpec& spec, int group)
{
    return compute_weights(table, spec, group, spec.standard);
}

WeightVector compute_weights(const ObservationTable& table, const TrialSpec& spec, int group,
                             const StandardPopulation& standard)
{
    auto t = annotated(table, spec);
    return weights_impl(t, spec, group, standard);
}

TauEstimate estimate_tau_weighting(const ObservationTable& table, const TrialSpec& spec, int group)
{
    auto t = annotated(table, spec);
    auto wv = weights_impl(t, spec, group, spec.standard);
    TauEstimate out;
    out.group = group;
    out.kind = EstimatorKind::Weighting;
    out.reference_rows = wv.rows.size();
    std::vector<double> y;
    y.reserve(wv.rows.size());
    for (auto i : wv.rows) {
        y.push_back(t.records[i].outcome);
    }
    out.value = weighted_mean(wv.omega, y);
    out.weights = wv.diagnostics;
    out.models = std::move(wv.models);
    out.notes = std::move(wv.notes);
    return out;
}

TauEstimate estimate_tau_ice(const ObservationTable& table, const TrialSpec& spec, int group)
{
    auto t = annotated(table, spec);
    return ice_impl(t, spec, group);
}

DisparityEstimate estimate_disparity(const ObservationTable& table, const TrialSpec& spec, EstimatorKind kind,
                                     std::uint64_t seed)
{
    if (kind == EstimatorKind::Both) {
        throw Error(ErrorCode::SpecMismatch, kModule, "estimate_disparity takes a single estimator kind");
    }
    auto t = annotated(table, spec);
    DisparityEstimate out;
    out.kind = kind;
    out.seed = seed;
    if (kind == EstimatorKind::Weighting) {
        auto w1 = weights_impl(t, spec, 1, spec.standard);
        auto w0 = weights_impl(t, spec, 0, spec.standard);
        auto tau = [&](WeightVector& wv) {
            TauEstimate te;
            te.group = wv.group;
            te.kind = kind;
            te.reference_rows = wv.rows.size();
            std::vector<double> y;
            for (auto i : wv.rows) {
                y.push_back(t.records[i].outcome);
            }
            te.value = weighted_mean(wv.omega, y);
            te.weights = wv.diagnostics;
            te.models = wv.models;
            te.notes = wv.notes;
            return te;
        };
        out.tau_r = tau(w1);
        out.tau_rprime = tau(w0);
        std::vector<double> all = w1.omega;
        all.insert(all.end(), w0.omega.begin(), w0.omega.end());
        out.weights = summarize_weights(all);
        out.notes = w1.notes;
    }
    else {
        out.tau_r = ice_impl(t, spec, 1);
        out.tau_rprime = ice_impl(t, spec, 0);
    }
    out.difference = out.tau_r.value - out.tau_rprime.value;

    return out;
}

BootstrapResult bootstrap_disparity(const ObservationTable& raw, const TrialSpec& spec, EstimatorKind kind,
                                    const InferenceConfig& config, std::optional<double> point)
{
    auto fn = [&spec, kind](const ObservationTable& sample, std::uint64_t rep_seed) {
        auto prepared = prepare_trials(sample, spec, rep_seed);
        return estimate_disparity(prepared, spec, kind, rep_seed).difference;
    };
    return cluster_bootstrap(raw, config, fn, point);
}

void attach_bootstrap(DisparityEstimate& est, const BootstrapResult& res)
{
    est.ci = std::make_pair(res.lower, res.upper);
    est.replicates = res.replicates;
    est.replicate_failures = res.failures;
    est.notes.insert(est.notes.end(), res.warnings.begin(), res.warnings.end());
}

} // namespace disparity
