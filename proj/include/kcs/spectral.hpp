#pragma once

#include <Eigen/Dense>

#include "kcs/seqstate.hpp"

namespace kcs {

/// Eigendecomposition K_t = Q diag(lambda) Q^T of a frozen regression state.
///
/// Once built (O(t^3)), ridge quantities at an arbitrary alpha cost O(t) per
/// projected query, which makes continuous minimisation over alpha cheap.
class SpectralSnapshot {
public:
    explicit SpectralSnapshot(const RegressionState& state);

    struct Moments {
        double mean = 0.0;
        double var = 0.0;
    };

    [[nodiscard]] Eigen::Index size() const { return eigenvalues_.size(); }
    [[nodiscard]] const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }

    /// Q^T kx for a cross vector (or each column of a cross matrix).
    [[nodiscard]] Eigen::VectorXd project(const Eigen::VectorXd& kx) const;
    [[nodiscard]] Eigen::MatrixXd project(const Eigen::MatrixXd& kx) const;

    /// Posterior mean and variance at alpha from a projected cross vector.
    [[nodiscard]] Moments moments(double alpha, const Eigen::VectorXd& projected,
                                  double kxx) const;
    /// y^T (K / alpha + I)^{-1} y.
    [[nodiscard]] double weighted_quadratic(double alpha) const;
    /// ln det(K / alpha + I).
    [[nodiscard]] double logdet_scaled(double alpha) const;

private:
    Eigen::VectorXd eigenvalues_;
    Eigen::MatrixXd eigenvectors_;
    Eigen::VectorXd projected_y_;
};

}  // namespace kcs
