#include "kcs/socp.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "kcs/errors.hpp"

namespace kcs {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Normalised constraint h(v) = |A v - b|^2 / r^2 - 1 <= 0. A empty means A = I, b = 0.
struct QuadConstraint {
    const MatrixXd* A = nullptr;
    const VectorXd* b = nullptr;
    double r2 = 1.0;

    [[nodiscard]] VectorXd residual(const VectorXd& v) const {
        return A ? VectorXd(*A * v - *b) : v;
    }
    [[nodiscard]] double value(const VectorXd& v) const {
        return residual(v).squaredNorm() / r2 - 1.0;
    }
    [[nodiscard]] VectorXd gradient(const VectorXd& v) const {
        const VectorXd r = residual(v);
        return A ? VectorXd(2.0 * A->transpose() * r / r2) : VectorXd(2.0 * r / r2);
    }
    [[nodiscard]] MatrixXd hessian(Eigen::Index n) const {
        return A ? MatrixXd(2.0 * A->transpose() * *A / r2)
                 : MatrixXd(2.0 / r2 * MatrixXd::Identity(n, n));
    }
};

std::vector<QuadConstraint> constraints_of(const TwoBallProgram& p) {
    std::vector<QuadConstraint> out;
    if (p.M.rows() > 0) out.push_back({&p.M, &p.y, p.R * p.R});
    out.push_back({nullptr, nullptr, p.B * p.B});
    return out;
}

// Barrier objective tau * lin^T v - sum ln(-h_i(v)).
struct BarrierProblem {
    const std::vector<QuadConstraint>& cons;
    Eigen::Index n;
    VectorXd lin;

    [[nodiscard]] bool interior(const VectorXd& v) const {
        for (const auto& c : cons) {
            if (!(c.value(v) < 0.0)) return false;
        }
        return true;
    }

    [[nodiscard]] double value(double tau, const VectorXd& v) const {
        double f = tau * lin.dot(v);
        for (const auto& c : cons) f -= std::log(-c.value(v));
        return f;
    }

    void derivatives(double tau, const VectorXd& v, VectorXd& g, MatrixXd& h) const {
        g = tau * lin;
        h = MatrixXd::Zero(n, n);
        for (const auto& c : cons) {
            const double sl = -c.value(v);
            const VectorXd gh = c.gradient(v);
            g += gh / sl;
            h += gh * gh.transpose() / (sl * sl);
            h += c.hessian(n) / sl;
        }
    }
};

// Newton direction; falls back to a floored eigen-solve when LDLT loses
// positive definiteness to round-off.
VectorXd newton_direction(const MatrixXd& h, const VectorXd& g) {
    const Eigen::LDLT<MatrixXd> ldlt(h);
    if (ldlt.info() == Eigen::Success) {
        VectorXd dz = -ldlt.solve(g);
        if (dz.allFinite() && -g.dot(dz) > 0.0) return dz;
    }
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(h);
    const double floor = 1e-14 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
    const VectorXd inv = es.eigenvalues().cwiseMax(floor).cwiseInverse();
    return -(es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose() * g);
}

// Damped Newton centring at fixed tau. Returns the number of steps taken.
int centre(const BarrierProblem& prob, double tau, VectorXd& v, int max_steps) {
    int steps = 0;
    VectorXd g;
    MatrixXd h;
    for (; steps < max_steps; ++steps) {
        prob.derivatives(tau, v, g, h);
        const VectorXd dv = newton_direction(h, g);
        const double decrement2 = -g.dot(dv);
        if (!std::isfinite(decrement2)) throw NumericError("barrier Newton step is not finite");
        if (decrement2 <= 1e-14) break;

        const double f0 = prob.value(tau, v);
        const double slack_tol = 1e-15 * (1.0 + std::abs(f0));
        double step = 1.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls, step *= 0.5) {
            const VectorXd trial = v + step * dv;
            if (!prob.interior(trial)) continue;
            if (prob.value(tau, trial) <= f0 - 0.25 * step * decrement2 + slack_tol) {
                v = trial;
                accepted = true;
                break;
            }
        }
        if (!accepted) break;  // round-off floor reached
    }
    return steps;
}

// Phase I. The Pareto front of (|v|, |M v - y|) is the ridge path
// v(mu) = (M^T M + mu I)^{-1} M^T y, along which the normalised residual
// constraint increases and the norm constraint decreases in mu. The minimum of
// max(h_1, h_2) therefore sits where they cross; bisect for it in ln mu.
VectorXd ridge_path_start(const TwoBallProgram& p, double& worst) {
    const Eigen::Index n = p.objective.size();
    if (p.M.rows() == 0) {
        worst = -1.0;
        return VectorXd::Zero(n);
    }
    const Eigen::JacobiSVD<MatrixXd> svd(p.M, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const VectorXd s = svd.singularValues();
    const VectorXd uy = svd.matrixU().transpose() * p.y;
    auto point = [&](double mu) {
        VectorXd coef = VectorXd::Zero(n);
        for (Eigen::Index i = 0; i < s.size(); ++i) {
            if (s(i) > 0.0 || mu > 0.0) coef(i) = s(i) * uy(i) / (s(i) * s(i) + mu);
        }
        return VectorXd(svd.matrixV() * coef);
    };
    auto h = [&](const VectorXd& v) {
        const double h1 = (p.M * v - p.y).squaredNorm() / (p.R * p.R) - 1.0;
        const double h2 = v.squaredNorm() / (p.B * p.B) - 1.0;
        return std::pair{h1, h2};
    };
    const double smax = s.size() > 0 ? std::max(s(0), 1e-300) : 1.0;
    double lo = std::log(1e-18 * smax * smax);
    double hi = std::log(1e8 * smax * smax + 1e8);
    VectorXd best = point(0.0);
    {
        const auto [h1, h2] = h(best);
        worst = std::max(h1, h2);
        if (h2 <= h1) return best;  // norm constraint slack even at the least-squares end
    }
    for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
        const double mid = 0.5 * (lo + hi);
        const VectorXd v = point(std::exp(mid));
        const auto [h1, h2] = h(v);
        if (std::max(h1, h2) < worst) {
            worst = std::max(h1, h2);
            best = v;
        }
        if (h1 < h2) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return best;
}

}  // namespace

ConeSolution solve_two_ball(const TwoBallProgram& p, const BarrierOptions& opt) {
    const Eigen::Index n = p.objective.size();
    if (p.M.rows() > 0 && (p.M.cols() != n || p.y.size() != p.M.rows())) {
        throw InputError("two-ball program: inconsistent dimensions");
    }
    if (!(p.B > 0.0)) throw InputError("two-ball program: B must be positive");
    if (p.M.rows() > 0 && !(p.R > 0.0)) {
        throw InfeasibleSetError("two-ball program: residual ball has zero radius");
    }
    const auto cons = constraints_of(p);
    const double m = static_cast<double>(cons.size());
    ConeSolution sol;

    double worst = 0.0;
    VectorXd v = ridge_path_start(p, worst);
    if (!(worst < 0.0)) {
        throw InfeasibleSetError("two-ball program has no strictly feasible point (min max h = " +
                                 std::to_string(worst) + ")");
    }

    // Phase II: min -tau c^T v - sum ln(-h_i(v)).
    BarrierProblem p2{cons, n, -p.objective};
    double tau = 1.0;
    for (int outer = 0; outer < 60; ++outer) {
        sol.newton_steps += centre(p2, tau, v, opt.max_newton_steps);
        if (m / tau <= opt.gap_tolerance) break;
        tau *= opt.tau_growth;
    }
    sol.v = v;
    sol.value = p.objective.dot(v);
    sol.gap_bound = m / tau;
    return sol;
}

}  // namespace kcs
