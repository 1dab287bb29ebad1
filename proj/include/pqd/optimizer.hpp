// Copyright 2026 The pqd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "pqd/error.hpp"

namespace pqd {

/// f(x) returning the value and writing the gradient into `grad`.
using Objective = std::function<double(const Eigen::VectorXd &x, Eigen::VectorXd &grad)>;

struct BfgsOptions {
    std::size_t max_iterations = 100000;
    /// Stop once the largest gradient component falls to this level.
    double gradient_tolerance = 1e-15;
    double armijo = 1e-4;
    double backtrack = 0.5;
    double min_step = 1e-20;
    bool record_history = false;
};

struct OptimizeResult {
    Eigen::VectorXd x;
    double value = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    double gradient_norm = 0.0;
    bool converged = false;
    std::string status;
    std::vector<double> history;
};

/// Quasi-Newton minimization with an inverse-Hessian BFGS update and
/// backtracking Armijo line search. Accepted steps never increase f.
inline OptimizeResult minimize_bfgs(const Objective &f, Eigen::VectorXd x0, const BfgsOptions &options = {}) {
    const Eigen::Index dim = x0.size();
    OptimizeResult out;
    out.x = std::move(x0);
    Eigen::VectorXd g(dim);
    out.value = f(out.x, g);
    ++out.evaluations;
    if (!std::isfinite(out.value) || !g.allFinite()) {
        throw Error(ErrorKind::numerical, "objective is not finite at the starting point");
    }
    if (options.record_history) {
        out.history.push_back(out.value);
    }
    Eigen::MatrixXd hinv = Eigen::MatrixXd::Identity(dim, dim);
    bool scaled = false;
    Eigen::VectorXd g_new(dim);
    Eigen::VectorXd x_new(dim);
    out.status = "maximum iterations reached";
    while (true) {
        out.gradient_norm = g.lpNorm<Eigen::Infinity>();
        if (out.gradient_norm <= options.gradient_tolerance) {
            out.converged = true;
            out.status = "gradient tolerance reached";
            break;
        }
        if (out.iterations >= options.max_iterations) {
            break;
        }
        Eigen::VectorXd d = -(hinv * g);
        double slope = g.dot(d);
        if (!(slope < 0.0)) {
            hinv.setIdentity();
            scaled = false;
            d = -g;
            slope = -g.squaredNorm();
        }
        double t = 1.0;
        double f_new = 0.0;
        bool accepted = false;
        while (t >= options.min_step) {
            x_new = out.x + t * d;
            f_new = f(x_new, g_new);
            ++out.evaluations;
            // Strict decrease as well: once t * slope is below the resolution of f,
            // Armijo alone would accept steps that make no progress.
            if (std::isfinite(f_new) && g_new.allFinite() && f_new < out.value &&
                f_new <= out.value + options.armijo * t * slope) {
                accepted = true;
                break;
            }
            t *= options.backtrack;
        }
        if (!accepted) {
            if (scaled) {
                // Retry along steepest descent before giving up.
                hinv.setIdentity();
                scaled = false;
                continue;
            }
            out.status = "line search could not decrease the objective";
            break;
        }
        Eigen::VectorXd s = x_new - out.x;
        Eigen::VectorXd y = g_new - g;
        double sy = s.dot(y);
        if (sy > 1e-300 && sy > 1e-14 * s.norm() * y.norm()) {
            if (!scaled) {
                hinv *= sy / y.squaredNorm();
                scaled = true;
            }
            double rho = 1.0 / sy;
            Eigen::VectorXd hy = hinv * y;
            double yhy = y.dot(hy);
            hinv.noalias() -= rho * (s * hy.transpose() + hy * s.transpose());
            hinv.noalias() += (rho * rho * yhy + rho) * (s * s.transpose());
        }
        out.x.swap(x_new);
        g.swap(g_new);
        out.value = f_new;
        ++out.iterations;
        if (options.record_history) {
            out.history.push_back(out.value);
        }
    }
    return out;
}

struct SgdOptions {
    std::size_t epochs = 200;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
};

/// Plain minibatch gradient descent. `batch_objective(x, grad, batch)` must
/// evaluate the loss on minibatch `batch` of `num_batches`.
inline OptimizeResult minimize_sgd(
    const std::function<double(const Eigen::VectorXd &, Eigen::VectorXd &, std::size_t)> &batch_objective,
    std::size_t num_batches, const Objective &full_objective, Eigen::VectorXd x0, const SgdOptions &options) {
    OptimizeResult out;
    out.x = std::move(x0);
    Eigen::VectorXd g(out.x.size());
    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        for (std::size_t b = 0; b < num_batches; ++b) {
            double v = batch_objective(out.x, g, b);
            ++out.evaluations;
            if (!std::isfinite(v)) {
                throw Error(ErrorKind::numerical, "minibatch loss is not finite");
            }
            out.x -= options.learning_rate * g;
            ++out.iterations;
        }
    }
    out.value = full_objective(out.x, g);
    out.gradient_norm = g.lpNorm<Eigen::Infinity>();
    out.status = "epoch budget exhausted";
    return out;
}

}  // namespace pqd
