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
#include "disparity/numerics.hpp"

#include "disparity/errors.hpp"

#include <algorithm>
#include <cmath>

namespace disparity {

namespace {

const char* kModule = "numerics";

void check_knots(const std::vector<double>& knots)
{
    for (std::size_t i = 1; i < knots.size(); ++i) {
        if (!(knots[i] > knots[i - 1])) {
            throw Error(ErrorCode::BadKnots, kModule, "knots must be strictly increasing");
        }
    }
    for (double k : knots) {
        if (!std::isfinite(k)) {
            throw Error(ErrorCode::BadKnots, kModule, "knots must be finite");
        }
    }
}

double cube_pos(double v)
{
    return v > 0.0 ? v * v * v : 0.0;
}

void check_inputs(const Matrix& X, const Vector& y, const Vector* w)
{
    if (X.rows() != y.size()) {
        throw Error(ErrorCode::DimensionMismatch, kModule,
                    "design has " + std::to_string(X.rows()) + " rows but response has " + std::to_string(y.size()));
    }
    if (w) {
        if (w->size() != y.size()) {
            throw Error(ErrorCode::DimensionMismatch, kModule, "weight vector length differs from response length");
        }
        for (Eigen::Index i = 0; i < w->size(); ++i) {
            if (!std::isfinite((*w)[i]) || (*w)[i] < 0.0) {
                throw Error(ErrorCode::ModelFailure, kModule, "weights must be finite and nonnegative");
            }
        }
    }
    if (X.cols() == 0) {
        throw Error(ErrorCode::RankDeficient, kModule, "design has no columns");
    }
}

// log(mu) and log(1 - mu) for mu = expit(eta), without cancellation.
double log_expit(double eta)
{
    return eta >= 0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

double xlogy(double x, double y)
{
    return x == 0.0 ? 0.0 : x * std::log(y);
}

double deviance(const Vector& eta, const Vector& y, const Vector* w)
{
    double dev = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double wi = w ? (*w)[i] : 1.0;
        if (wi == 0.0) {
            continue;
        }
        double yi = y[i];
        double ll = yi * log_expit(eta[i]) + (1.0 - yi) * log_expit(-eta[i]);
        double sat = xlogy(yi, yi) + xlogy(1.0 - yi, 1.0 - yi);
        dev += 2.0 * wi * (sat - ll);
    }
    return dev;
}

Eigen::Index effective_rank(const Matrix& X, const Vector* w)
{
    Matrix Xw = X;
    if (w) {
        for (Eigen::Index i = 0; i < X.rows(); ++i) {
            Xw.row(i) *= std::sqrt((*w)[i]);
        }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(Xw);
    qr.setThreshold(1e-10);
    return qr.rank();
}

} // namespace

std::vector<double> spline_row(double x, const std::vector<double>& knots)
{
    std::vector<double> row{x};
    const std::size_t k = knots.size();
    if (k < 3) {
        return row;
    }
    const double tk = knots[k - 1];
    const double tk1 = knots[k - 2];
    const double scale = (tk - knots[0]) * (tk - knots[0]);
    for (std::size_t j = 0; j + 2 < k; ++j) {
        double tj = knots[j];
        double v = cube_pos(x - tj) - cube_pos(x - tk1) * (tk - tj) / (tk - tk1) + cube_pos(x - tk) * (tk1 - tj) / (tk - tk1);
        row.push_back(v / scale);
    }
    return row;
}

Matrix spline_basis(const std::vector<double>& x, const std::vector<double>& knots)
{
    check_knots(knots);
    const std::size_t cols = knots.size() < 3 ? 1 : knots.size() - 1;
    Matrix out(static_cast<Eigen::Index>(x.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < x.size(); ++i) {
        auto row = spline_row(x[i], knots);
        for (std::size_t j = 0; j < cols; ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = row[j];
        }
    }
    return out;
}

std::vector<double> quantile_knots(std::vector<double> x, const std::vector<double>& probs)
{
    std::vector<double> out;
    if (x.empty()) {
        return out;
    }
    std::sort(x.begin(), x.end());
    for (double p : probs) {
        double h = (static_cast<double>(x.size()) - 1.0) * p;
        auto lo = static_cast<std::size_t>(std::floor(h));
        std::size_t hi = std::min(lo + 1, x.size() - 1);
        double q = x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
        if (out.empty() || q > out.back()) {
            out.push_back(q);
        }
    }
    return out;
}

double expit(double eta)
{
    if (eta >= 0) {
        return 1.0 / (1.0 + std::exp(-eta));
    }
    double e = std::exp(eta);
    return e / (1.0 + e);
}

double logistic_loglik(const Matrix& design, const Vector& y, const Vector* weights, const Vector& beta)
{
    Vector eta = design * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double wi = weights ? (*weights)[i] : 1.0;
        ll += wi * (y[i] * log_expit(eta[i]) + (1.0 - y[i]) * log_expit(-eta[i]));
    }
    return ll;
}

Vector logistic_score(const Matrix& design, const Vector& y, const Vector* weights, const Vector& beta)
{
    Vector eta = design * beta;
    Vector r(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double wi = weights ? (*weights)[i] : 1.0;
        r[i] = wi * (y[i] - expit(eta[i]));
    }
    return design.transpose() * r;
}

GlmFit fit_logistic(const Matrix& X, const Vector& y, const Vector* w, const FitOptions& opt)
{
    check_inputs(X, y, w);
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!(y[i] >= 0.0 && y[i] <= 1.0)) {
            throw Error(ErrorCode::ModelFailure, kModule, "logistic response outside [0,1]");
        }
    }
    const Eigen::Index n = X.rows();
    const Eigen::Index p = X.cols();
    if (effective_rank(X, w) < p) {
        throw Error(ErrorCode::RankDeficient, kModule,
                    "design matrix with " + std::to_string(p) + " columns is numerically singular");
    }

    GlmFit fit;
    Vector beta = Vector::Zero(p);
    Vector eta = Vector::Zero(n);
    double dev = deviance(eta, y, w);
    Matrix Xw(n, p);
    Vector zw(n);
    for (int iter = 1; iter <= opt.max_iterations; ++iter) {
        fit.iterations = iter;
        Vector sw(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double mu = expit(eta[i]);
            double v = std::max(mu * (1.0 - mu), 1e-300);
            double s = std::sqrt((w ? (*w)[i] : 1.0) * v);
            sw[i] = s;
            zw[i] = s * (eta[i] + (y[i] - mu) / v);
        }
        Xw.noalias() = sw.asDiagonal() * X;
        Eigen::ColPivHouseholderQR<Matrix> qr(Xw);
        qr.setThreshold(1e-12);
        if (qr.rank() < p) {
            throw Error(ErrorCode::RankDeficient, kModule, "weighted normal equations became singular during IRLS");
        }
        Vector proposal = qr.solve(zw);
        Vector step = proposal - beta;
        Vector cand = proposal;
        Vector cand_eta = X * cand;
        double cand_dev = deviance(cand_eta, y, w);
        int halvings = 0;
        while (!(cand_dev <= dev + 1e-12 * (1.0 + std::abs(dev))) && halvings < 40) {
            step *= 0.5;
            cand = beta + step;
            cand_eta = X * cand;
            cand_dev = deviance(cand_eta, y, w);
            ++halvings;
        }
        beta = cand;
        eta = cand_eta;
        dev = cand_dev;

        Vector score = logistic_score(X, y, w, beta);
        fit.max_score = score.cwiseAbs().maxCoeff();
        double max_coef = beta.cwiseAbs().maxCoeff();
        if (max_coef > opt.separation_threshold) {
            double pinned = 1.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (w && (*w)[i] == 0.0) {
                    continue;
                }
                double mu = expit(eta[i]);
                pinned = std::min(pinned, std::min(mu, 1.0 - mu));
            }
            if (pinned < 1e-6) {
                throw Error(ErrorCode::SeparationDetected, kModule,
                            "coefficient magnitude " + std::to_string(max_coef) + " with fitted probabilities pinned at 0/1");
            }
        }
        if (fit.max_score < opt.tolerance) {
            fit.converged = true;
            break;
        }
    }
    fit.coefficients = beta;
    fit.deviance = dev;
    return fit;
}

GlmFit fit_linear(const Matrix& X, const Vector& y, const Vector* w)
{
    check_inputs(X, y, w);
    const Eigen::Index n = X.rows();
    Matrix Xw = X;
    Vector yw = y;
    if (w) {
        for (Eigen::Index i = 0; i < n; ++i) {
            double s = std::sqrt((*w)[i]);
            Xw.row(i) *= s;
            yw[i] *= s;
        }
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(Xw);
    qr.setThreshold(1e-10);
    if (qr.rank() < X.cols()) {
        throw Error(ErrorCode::RankDeficient, kModule, "design matrix is numerically singular");
    }
    GlmFit fit;
    fit.coefficients = qr.solve(yw);
    Vector resid = yw - Xw * fit.coefficients;
    fit.deviance = resid.squaredNorm();
    fit.max_score = (Xw.transpose() * resid).cwiseAbs().maxCoeff();
    fit.converged = true;
    fit.iterations = 1;
    return fit;
}

Vector predict_prob(const GlmFit& fit, const Matrix& design)
{
    if (design.cols() != fit.coefficients.size()) {
        throw Error(ErrorCode::DimensionMismatch, kModule,
                    "design has " + std::to_string(design.cols()) + " columns, fit has " +
                        std::to_string(fit.coefficients.size()) + " coefficients");
    }
    Vector eta = design * fit.coefficients;
    return eta.unaryExpr([](double e) { return expit(e); });
}

Vector predict_linear(const GlmFit& fit, const Matrix& design)
{
    if (design.cols() != fit.coefficients.size()) {
        throw Error(ErrorCode::DimensionMismatch, kModule, "design/coefficient column mismatch");
    }
    return design * fit.coefficients;
}

} // namespace disparity
