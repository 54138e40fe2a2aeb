#pragma once

#include <Eigen/Dense>

namespace kcs {

/// maximize  c^T v
/// s.t.      ||M v - y|| <= R,   ||v|| <= B
///
/// M may have zero rows, in which case only the ball constraint is present.
struct TwoBallProgram {
    Eigen::VectorXd objective;
    Eigen::MatrixXd M;
    Eigen::VectorXd y;
    double R = 0.0;
    double B = 0.0;
};

struct BarrierOptions {
    /// Terminate when the barrier duality-gap bound (constraints / tau) drops below this.
    double gap_tolerance = 1e-10;
    double tau_growth = 10.0;
    int max_newton_steps = 100;
};

struct ConeSolution {
    double value = 0.0;
    Eigen::VectorXd v;
    double gap_bound = 0.0;
    int newton_steps = 0;
};

/// Log-barrier interior-point solver with a phase-I feasibility search.
/// Throws InfeasibleSetError when the feasible set has no interior point.
[[nodiscard]] ConeSolution solve_two_ball(const TwoBallProgram& program,
                                          const BarrierOptions& options = {});

}  // namespace kcs
