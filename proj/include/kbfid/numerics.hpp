#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "kbfid/error.hpp"

namespace kbfid {

/// Composite Newton-Cotes rule on N evenly spaced intervals of width dt.
/// Supported orders: 0 (left endpoint / zeroth-order hold), 1 (trapezoid),
/// 3 (Simpson 3/8, requires N divisible by 3).
struct QuadratureRule {
    int order = 1;
    double dt = 0.0;
    int num_intervals = 1;
};

inline void validate(const QuadratureRule& rule) {
    if (rule.dt <= 0.0) {
        throw ConfigError("quadrature rule requires dt > 0, got dt=" + std::to_string(rule.dt));
    }
    if (rule.num_intervals < 1) {
        throw ConfigError("quadrature rule requires at least one interval, got N=" +
                          std::to_string(rule.num_intervals));
    }
    switch (rule.order) {
        case 0:
        case 1:
            return;
        case 3:
            if (rule.num_intervals % 3 != 0) {
                throw ConfigError("Simpson 3/8 (order 3) requires the interval count to be "
                                  "divisible by 3; got N=" + std::to_string(rule.num_intervals));
            }
            return;
        default:
            throw ConfigError("unsupported quadrature order " + std::to_string(rule.order) +
                              " (supported: 0, 1, 3)");
    }
}

/// Weights w_0..w_N such that sum_i w_i g(t_i) approximates the integral of g
/// over [t_0, t_N]. Weights are nonnegative and sum to N*dt.
inline std::vector<double> quadrature_weights(const QuadratureRule& rule) {
    validate(rule);
    const int n = rule.num_intervals;
    std::vector<double> w(static_cast<std::size_t>(n) + 1, 0.0);
    switch (rule.order) {
        case 0:
            for (int i = 0; i < n; ++i) w[i] = rule.dt;
            break;
        case 1:
            w[0] = w[n] = 0.5 * rule.dt;
            for (int i = 1; i < n; ++i) w[i] = rule.dt;
            break;
        case 3:
            for (int b = 0; b < n; b += 3) {
                w[b + 0] += 0.375 * rule.dt;  // 3/8
                w[b + 1] += 1.125 * rule.dt;  // 9/8
                w[b + 2] += 1.125 * rule.dt;
                w[b + 3] += 0.375 * rule.dt;
            }
            break;
    }
    return w;
}

/// One classical 4-stage Runge-Kutta step of x' = f(x, u, t). The input u is
/// held constant across the step.
template <typename Field>
Eigen::VectorXd rk4_step(Field&& f, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                         double t, double dt) {
    const Eigen::VectorXd k1 = f(x, u, t);
    const Eigen::VectorXd k2 = f(x + 0.5 * dt * k1, u, t + 0.5 * dt);
    const Eigen::VectorXd k3 = f(x + 0.5 * dt * k2, u, t + 0.5 * dt);
    const Eigen::VectorXd k4 = f(x + dt * k3, u, t + dt);
    Eigen::VectorXd next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    if (!next.allFinite()) {
        throw DivergenceError("integration produced non-finite state at t=" + std::to_string(t),
                              t);
    }
    return next;
}

/// Relative singular-value cutoff used by the pseudo-inverse. Singular values
/// below cutoff * sigma_max are truncated, which makes rank handling
/// deterministic and yields the minimum-norm solution on rank deficiency.
inline constexpr double kPinvRelativeCutoff = 1e-10;

/// Minimizer G of ||Z - G * Xi||_F via SVD pseudo-inverse: G = Z * pinv(Xi).
inline Eigen::MatrixXd least_squares_pinv(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& Xi,
                                          double rel_cutoff = kPinvRelativeCutoff) {
    if (Z.cols() != Xi.cols()) {
        throw ShapeError("least_squares_pinv: Z has " + std::to_string(Z.cols()) +
                         " columns but Xi has " + std::to_string(Xi.cols()));
    }
    if (Z.cols() < 1) {
        throw ShapeError("least_squares_pinv: need at least one column");
    }
    if (!Z.allFinite() || !Xi.allFinite()) {
        throw DataError("least_squares_pinv: input contains non-finite values");
    }
    Eigen::BDCSVD<Eigen::MatrixXd> svd(Xi, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd& sv = svd.singularValues();
    const double cutoff = sv.size() > 0 ? rel_cutoff * sv(0) : 0.0;
    Eigen::VectorXd inv = Eigen::VectorXd::Zero(sv.size());
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > cutoff && sv(i) > 0.0) inv(i) = 1.0 / sv(i);
    }
    // pinv(Xi) = V * diag(inv) * U^T, hence G = (Z * V) * diag(inv) * U^T.
    return (Z * svd.matrixV()) * inv.asDiagonal() * svd.matrixU().transpose();
}

/// Central-difference gradient of a scalar loss, component by component.
template <typename Loss>
Eigen::VectorXd finite_diff_grad(Loss&& loss, const Eigen::VectorXd& theta, double eps) {
    if (eps <= 0.0) throw ConfigError("finite_diff_grad requires eps > 0");
    Eigen::VectorXd grad(theta.size());
    Eigen::VectorXd probe = theta;
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
        probe(i) = theta(i) + eps;
        const double hi = loss(probe);
        probe(i) = theta(i) - eps;
        const double lo = loss(probe);
        probe(i) = theta(i);
        grad(i) = (hi - lo) / (2.0 * eps);
    }
    return grad;
}

}  // namespace kbfid
