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
#include "disparity/models.hpp"

#include "disparity/emulation.hpp"
#include "disparity/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace disparity {

namespace {

const char* kModule = "estimators";

} // namespace

Frame::Frame(const ObservationTable& t, const TrialSpec& s)
    : Frame(t, s, s.standard)
{
}

Frame::Frame(const ObservationTable& t, const TrialSpec& s, const StandardPopulation& standard)
    : table(t)
    , spec(s)
    , n(t.size())
{
    StandardSelector sel(t, standard);
    R.resize(n);
    qdd.resize(n);
    qd.resize(n);
    qp.resize(n);
    q.resize(n);
    S.resize(n);
    Y.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& rec = t.records[i];
        R[i] = rec.group;
        qdd[i] = rec.flags.q_ddagger;
        qd[i] = rec.flags.q_dagger;
        qp[i] = rec.flags.q_prime;
        q[i] = rec.flags.q;
        S[i] = sel(rec) ? 1 : 0;
        Y[i] = rec.outcome;
    }
    outcome_family = t.outcome_kind == OutcomeKind::Binary ? Family::Logistic : Family::Gaussian;
}

std::vector<std::size_t> Frame::rows(const std::function<bool(std::size_t)>& pred) const
{
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i) {
        if (pred(i)) {
            out.push_back(i);
        }
    }
    return out;
}

std::vector<VarRef> Frame::refs(const std::vector<CovariateSpec>& vars) const
{
    std::vector<VarRef> out;
    out.reserve(vars.size());
    for (const auto& v : vars) {
        out.push_back(table.resolve(v.name));
    }
    return out;
}

const Frame::Levels& Frame::levels(VarRef ref)
{
    auto it = levels_.find(ref);
    if (it != levels_.end()) {
        return it->second;
    }
    std::vector<double> uniq;
    uniq.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        uniq.push_back(table.value(i, ref));
    }
    std::sort(uniq.begin(), uniq.end());
    uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
    Levels lv;
    lv.count = uniq.size();
    lv.code.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        lv.code[i] = static_cast<std::uint32_t>(std::lower_bound(uniq.begin(), uniq.end(), table.value(i, ref)) - uniq.begin());
    }
    return levels_.emplace(ref, std::move(lv)).first->second;
}

std::uint64_t Frame::cell(std::size_t row, const std::vector<VarRef>& vars)
{
    std::uint64_t id = 0;
    std::uint64_t stride = 1;
    for (auto ref : vars) {
        const auto& lv = levels(ref);
        id += stride * lv.code[row];
        if (lv.count > 0 && stride > std::numeric_limits<std::uint64_t>::max() / lv.count) {
            throw Error(ErrorCode::ModelFailure, kModule, "too many saturated cells to index");
        }
        stride *= std::max<std::uint64_t>(lv.count, 1);
    }
    return id;
}

FittedModel FittedModel::fit(Frame& frame, const ModelSpec& spec, const std::vector<std::size_t>& rows,
                             const std::vector<double>& response, const std::vector<double>* weights)
{
    FittedModel m;
    m.spec_ = spec;
    m.refs_ = frame.refs(spec.vars);
    m.audit_.name = spec.name;
    m.audit_.rows = rows.size();

    double sw = 0.0;
    double swy = 0.0;
    bool constant = true;
    std::optional<double> first;
    for (std::size_t k = 0; k < rows.size(); ++k) {
        double w = weights ? (*weights)[k] : 1.0;
        if (w <= 0.0) {
            continue;
        }
        sw += w;
        swy += w * response[k];
        if (!first) {
            first = response[k];
        }
        else if (response[k] != *first) {
            constant = false;
        }
    }
    if (sw <= 0.0) {
        throw Error(ErrorCode::EmptyStage, kModule, "model '" + spec.name + "' has no rows with positive weight");
    }

    if (constant || spec.vars.empty()) {
        m.kind_ = Kind::Constant;
        m.constant_ = constant ? *first : swy / sw;
        m.audit_.kind = "constant";
        m.audit_.parameters = 1;
        return m;
    }

    if (spec.form == ModelForm::Saturated) {
        for (auto ref : m.refs_) {
            if (frame.table.kind_of(ref) == ColumnKind::Continuous) {
                throw Error(ErrorCode::SpecMismatch, kModule,
                            "saturated model '" + spec.name + "' needs discrete covariates; '" + frame.table.name_of(ref) +
                                "' is continuous");
            }
        }
        std::unordered_map<std::uint64_t, std::pair<double, double>> acc;
        for (std::size_t k = 0; k < rows.size(); ++k) {
            double w = weights ? (*weights)[k] : 1.0;
            if (w <= 0.0) {
                continue;
            }
            auto& a = acc[frame.cell(rows[k], m.refs_)];
            a.first += w * response[k];
            a.second += w;
        }
        for (const auto& [id, a] : acc) {
            m.cells_[id] = a.first / a.second;
        }
        m.kind_ = Kind::Cells;
        m.audit_.kind = "cells";
        m.audit_.parameters = m.cells_.size();
        return m;
    }

    m.kind_ = Kind::Glm;
    m.audit_.kind = "glm";
    for (std::size_t j = 0; j < spec.vars.size(); ++j) {
        const auto& v = spec.vars[j];
        std::vector<double> vals;
        vals.reserve(rows.size());
        for (auto i : rows) {
            vals.push_back(frame.table.value(i, m.refs_[j]));
        }
        std::vector<double> knots;
        std::vector<double> cats;
        if (v.term == Term::Spline) {
            knots = v.knots.empty() ? quantile_knots(vals, v.knot_quantiles) : v.knots;
            for (std::size_t k = 1; k < knots.size(); ++k) {
                if (!(knots[k] > knots[k - 1])) {
                    throw Error(ErrorCode::BadKnots, kModule, "knots for '" + v.name + "' must be strictly increasing");
                }
            }
        }
        else if (v.term == Term::Categorical) {
            std::sort(vals.begin(), vals.end());
            vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
            cats = vals;
        }
        m.knots_.push_back(std::move(knots));
        m.categories_.push_back(std::move(cats));
    }
    Matrix X = m.design(frame, rows, nullptr);
    Vector y(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t k = 0; k < rows.size(); ++k) {
        y[static_cast<Eigen::Index>(k)] = response[k];
    }
    Vector w;
    if (weights) {
        w = Eigen::Map<const Vector>(weights->data(), static_cast<Eigen::Index>(weights->size()));
    }
    try {
        m.glm_ = spec.family == Family::Logistic ? fit_logistic(X, y, weights ? &w : nullptr)
                                                 : fit_linear(X, y, weights ? &w : nullptr);
    }
    catch (const Error& e) {
        throw Error(ErrorCode::ModelFailure, kModule, "model '" + spec.name + "' failed: " + e.what());
    }
    if (!m.glm_.converged) {
        throw Error(ErrorCode::ModelFailure, kModule,
                    "model '" + spec.name + "' did not converge in " + std::to_string(m.glm_.iterations) + " iterations");
    }
    m.audit_.parameters = static_cast<std::size_t>(X.cols());
    m.audit_.converged = m.glm_.converged;
    m.audit_.iterations = m.glm_.iterations;
    return m;
}

Matrix FittedModel::design(Frame& frame, const std::vector<std::size_t>& rows, std::vector<bool>* supported) const
{
    std::size_t cols = 1;
    for (std::size_t j = 0; j < spec_.vars.size(); ++j) {
        switch (spec_.vars[j].term) {
        case Term::Linear: cols += 1; break;
        case Term::Categorical: cols += categories_[j].empty() ? 0 : categories_[j].size() - 1; break;
        case Term::Spline: cols += knots_[j].size() < 3 ? 1 : knots_[j].size() - 1; break;
        }
    }
    Matrix X = Matrix::Zero(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    if (supported) {
        supported->assign(rows.size(), true);
    }
    for (std::size_t k = 0; k < rows.size(); ++k) {
        auto r = static_cast<Eigen::Index>(k);
        X(r, 0) = 1.0;
        Eigen::Index c = 1;
        for (std::size_t j = 0; j < spec_.vars.size(); ++j) {
            double v = frame.table.value(rows[k], refs_[j]);
            switch (spec_.vars[j].term) {
            case Term::Linear:
                X(r, c++) = v;
                break;
            case Term::Categorical: {
                const auto& cats = categories_[j];
                auto it = std::lower_bound(cats.begin(), cats.end(), v);
                if (it == cats.end() || *it != v) {
                    if (supported) {
                        (*supported)[k] = false;
                    }
                }
                else if (it != cats.begin()) {
                    X(r, c + (it - cats.begin()) - 1) = 1.0;
                }
                c += static_cast<Eigen::Index>(cats.empty() ? 0 : cats.size() - 1);
                break;
            }
            case Term::Spline: {
                auto row = spline_row(v, knots_[j]);
                for (double b : row) {
                    X(r, c++) = b;
                }
                break;
            }
            }
        }
    }
    return X;
}

std::vector<double> FittedModel::predict(Frame& frame, const std::vector<std::size_t>& rows) const
{
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> out(rows.size(), nan);
    switch (kind_) {
    case Kind::Constant:
        std::fill(out.begin(), out.end(), constant_);
        break;
    case Kind::Cells:
        for (std::size_t k = 0; k < rows.size(); ++k) {
            auto it = cells_.find(frame.cell(rows[k], refs_));
            if (it != cells_.end()) {
                out[k] = it->second;
            }
        }
        break;
    case Kind::Glm: {
        std::vector<bool> ok;
        Matrix X = design(frame, rows, &ok);
        Vector p = spec_.family == Family::Logistic ? predict_prob(glm_, X) : predict_linear(glm_, X);
        for (std::size_t k = 0; k < rows.size(); ++k) {
            if (ok[k]) {
                out[k] = p[static_cast<Eigen::Index>(k)];
            }
        }
        break;
    }
    }
    return out;
}

} // namespace disparity
