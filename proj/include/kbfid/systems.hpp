#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "kbfid/error.hpp"

namespace kbfid {

/// Type-erased control-affine plant: xdot = f0(x) + sum_i f_i(x) u_i.
struct ControlAffineSystem {
    std::string name;
    int state_dim = 0;
    int input_dim = 0;
    std::function<Eigen::VectorXd(const Eigen::VectorXd&)> drift;
    std::vector<std::function<Eigen::VectorXd(const Eigen::VectorXd&)>> couplings;

    Eigen::VectorXd field(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
        if (x.size() != state_dim) {
            throw ShapeError("system '" + name + "' expects state of dim " +
                             std::to_string(state_dim) + ", got " + std::to_string(x.size()));
        }
        if (u.size() != input_dim) {
            throw ShapeError("system '" + name + "' expects input of dim " +
                             std::to_string(input_dim) + ", got " + std::to_string(u.size()));
        }
        Eigen::VectorXd dx = drift(x);
        for (int i = 0; i < input_dim; ++i) dx += couplings[static_cast<std::size_t>(i)](x) * u(i);
        return dx;
    }
};

/// Two-dimensional plant with a quadratic slow manifold:
///   x1' = mu*x1 + u1 + u3*x1
///   x2' = lambda*(x2 - x1^2) + u2
struct ParabolicSystem {
    double mu = -3.0;
    double lambda = -2.0;

    static constexpr int state_dim = 2;
    static constexpr int input_dim = 3;

    Eigen::Vector2d drift(const Eigen::Vector2d& x) const {
        return {mu * x(0), lambda * (x(1) - x(0) * x(0))};
    }

    Eigen::Vector2d field(const Eigen::Vector2d& x, const Eigen::Vector3d& u) const {
        Eigen::Vector2d dx = drift(x);
        dx(0) += u(0) + u(2) * x(0);
        dx(1) += u(1);
        return dx;
    }

    /// Isolated equilibrium under constant input; requires mu + u3 != 0.
    Eigen::Vector2d equilibrium(const Eigen::Vector3d& u) const {
        const double denom = mu + u(2);
        if (denom == 0.0) {
            throw DomainError("parabolic equilibrium is singular: mu + u3 = 0");
        }
        const double x1 = -u(0) / denom;
        return {x1, x1 * x1 - u(1) / lambda};
    }
};

/// Damped, torque-controlled double pendulum. State is
/// (theta1, theta1dot, theta2, theta2dot), angles measured from the downward
/// vertical; inputs are torques on the two joints.
struct DoublePendulumSystem {
    double m1 = 1.0;  // upper mass, kg
    double m2 = 1.0;  // lower mass, kg
    double l1 = 1.0;  // m
    double l2 = 1.0;  // m
    double g = 9.81;  // m/s^2

    /// The second gravity term of the theta2 acceleration. The default keeps
    /// -Mbar*g*sin(theta1); the alternative uses sin(theta2) as in the
    /// textbook derivation. See make_system's "-conventional" suffix.
    bool gravity2_uses_theta1 = true;

    static constexpr int state_dim = 4;
    static constexpr int input_dim = 2;

    Eigen::Vector4d field(const Eigen::Vector4d& x, const Eigen::Vector2d& u) const {
        const double th1 = x(0), w1 = x(1), th2 = x(2), w2 = x(3);
        const double delta = th2 - th1;
        const double mbar = m1 + m2;
        const double cd = std::cos(delta), sd = std::sin(delta);
        const double rho = mbar - m2 * cd * cd;  // > 0 whenever m1 > 0

        const double acc1 =
            (m2 * l1 * w1 * w1 * sd * cd + m2 * g * std::sin(th2) * cd + m2 * l2 * w2 * w2 * sd -
             mbar * g * std::sin(th1) + u(0)) /
                (l1 * rho) -
            w1;
        const double grav2 = gravity2_uses_theta1 ? std::sin(th1) : std::sin(th2);
        const double acc2 =
            (-m2 * l2 * w2 * w2 * sd * cd + mbar * g * std::sin(th1) * cd -
             mbar * l1 * w1 * w1 * sd - mbar * g * grav2 + u(1)) /
                (l2 * rho) -
            w2;
        return {w1, acc1, w2, acc2};
    }

    /// Total mechanical energy (kinetic + potential), zero level at the pivot.
    double energy(const Eigen::Vector4d& x) const {
        const double th1 = x(0), w1 = x(1), th2 = x(2), w2 = x(3);
        const double v1sq = l1 * l1 * w1 * w1;
        const double v2sq =
            v1sq + l2 * l2 * w2 * w2 + 2.0 * l1 * l2 * w1 * w2 * std::cos(th1 - th2);
        const double kinetic = 0.5 * m1 * v1sq + 0.5 * m2 * v2sq;
        const double y1 = -l1 * std::cos(th1);
        const double y2 = y1 - l2 * std::cos(th2);
        return kinetic + m1 * g * y1 + m2 * g * y2;
    }
};

inline ControlAffineSystem as_control_affine(const ParabolicSystem& sys) {
    ControlAffineSystem ca;
    ca.name = "parabolic";
    ca.state_dim = ParabolicSystem::state_dim;
    ca.input_dim = ParabolicSystem::input_dim;
    ca.drift = [sys](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return sys.drift(Eigen::Vector2d(x));
    };
    ca.couplings = {
        [](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::Vector2d(1.0, 0.0); },
        [](const Eigen::VectorXd&) -> Eigen::VectorXd { return Eigen::Vector2d(0.0, 1.0); },
        [](const Eigen::VectorXd& x) -> Eigen::VectorXd { return Eigen::Vector2d(x(0), 0.0); },
    };
    return ca;
}

inline ControlAffineSystem as_control_affine(const DoublePendulumSystem& sys) {
    ControlAffineSystem ca;
    ca.name = sys.gravity2_uses_theta1 ? "double-pendulum" : "double-pendulum-conventional";
    ca.state_dim = DoublePendulumSystem::state_dim;
    ca.input_dim = DoublePendulumSystem::input_dim;
    ca.drift = [sys](const Eigen::VectorXd& x) -> Eigen::VectorXd {
        return sys.field(Eigen::Vector4d(x), Eigen::Vector2d::Zero());
    };
    // Torques enter the accelerations linearly through 1/(l_i * rho).
    ca.couplings = {
        [sys](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            const double delta = x(2) - x(0);
            const double cd = std::cos(delta);
            const double rho = sys.m1 + sys.m2 - sys.m2 * cd * cd;
            return Eigen::Vector4d(0.0, 1.0 / (sys.l1 * rho), 0.0, 0.0);
        },
        [sys](const Eigen::VectorXd& x) -> Eigen::VectorXd {
            const double delta = x(2) - x(0);
            const double cd = std::cos(delta);
            const double rho = sys.m1 + sys.m2 - sys.m2 * cd * cd;
            return Eigen::Vector4d(0.0, 0.0, 0.0, 1.0 / (sys.l2 * rho));
        },
    };
    return ca;
}

/// Look up a plant by its CLI/config name.
inline ControlAffineSystem make_system(const std::string& name) {
    if (name == "parabolic") return as_control_affine(ParabolicSystem{});
    if (name == "double-pendulum") return as_control_affine(DoublePendulumSystem{});
    if (name == "double-pendulum-conventional") {
        DoublePendulumSystem sys;
        sys.gravity2_uses_theta1 = false;
        return as_control_affine(sys);
    }
    throw ConfigError("unknown system '" + name +
                      "' (known: parabolic, double-pendulum, double-pendulum-conventional)");
}

/// Exact lifting dictionary for the parabolic system: z = (x1, x2, x1^2, 1).
inline Eigen::Vector4d analytic_lift(const Eigen::Vector2d& x) {
    return {x(0), x(1), x(0) * x(0), 1.0};
}

/// Batched form of analytic_lift; columns are samples.
inline Eigen::MatrixXd analytic_lift_batch(const Eigen::MatrixXd& x) {
    if (x.rows() != 2) throw ShapeError("analytic_lift expects 2-dimensional states");
    Eigen::MatrixXd z(4, x.cols());
    z.row(0) = x.row(0);
    z.row(1) = x.row(1);
    z.row(2) = x.row(0).array().square();
    z.row(3).setOnes();
    return z;
}

/// Exact bilinear dynamics of the parabolic system in the analytic_lift
/// dictionary. Serves as the ground-truth oracle for identification tests.
struct AnalyticKbf {
    Eigen::Matrix4d A;
    std::array<Eigen::Matrix4d, 3> B;
};

inline AnalyticKbf analytic_kbf_matrices(double mu, double lambda) {
    AnalyticKbf out;
    out.A.setZero();
    out.A(0, 0) = mu;
    out.A(1, 1) = lambda;
    out.A(1, 2) = -lambda;
    out.A(2, 2) = 2.0 * mu;
    for (auto& b : out.B) b.setZero();
    out.B[0](0, 3) = 1.0;  // u1 shifts x1'
    out.B[0](2, 0) = 2.0;  // d(x1^2)/dt picks up 2*u1*x1
    out.B[1](1, 3) = 1.0;  // u2 shifts x2'
    out.B[2](0, 0) = 1.0;  // u3*x1 in x1'
    out.B[2](2, 2) = 2.0;  // 2*u3*x1^2 in d(x1^2)/dt
    return out;
}

}  // namespace kbfid
