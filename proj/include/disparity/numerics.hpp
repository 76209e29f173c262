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

#include <Eigen/Dense>

#include <vector>

namespace disparity {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Restricted cubic spline block: column 0 is x, then k-2 nonlinear terms
// scaled by (t_k - t_1)^2. Fewer than 3 knots gives x alone.
Matrix spline_basis(const std::vector<double>& x, const std::vector<double>& knots);
std::vector<double> spline_row(double x, const std::vector<double>& knots);

// Type-7 empirical quantiles of x at probs, duplicates removed.
std::vector<double> quantile_knots(std::vector<double> x, const std::vector<double>& probs);

struct FitOptions {
    double tolerance = 1e-8;
    int max_iterations = 100;
    double separation_threshold = 15.0;
};

struct GlmFit {
    Vector coefficients;
    bool converged = false;
    int iterations = 0;
    double deviance = 0.0;
    double max_score = 0.0;
};

// Weighted Bernoulli (or quasi-Bernoulli for y in [0,1]) likelihood by IRLS
// with step-halving. Throws SeparationDetected, RankDeficient, DimensionMismatch.
GlmFit fit_logistic(const Matrix& design, const Vector& y, const Vector* weights = nullptr, const FitOptions& opt = {});

// Weighted least squares. Throws RankDeficient, DimensionMismatch.
GlmFit fit_linear(const Matrix& design, const Vector& y, const Vector* weights = nullptr);

Vector predict_prob(const GlmFit& fit, const Matrix& design);
Vector predict_linear(const GlmFit& fit, const Matrix& design);

double expit(double eta);
double logistic_loglik(const Matrix& design, const Vector& y, const Vector* weights, const Vector& beta);
Vector logistic_score(const Matrix& design, const Vector& y, const Vector* weights, const Vector& beta);

} // namespace disparity
