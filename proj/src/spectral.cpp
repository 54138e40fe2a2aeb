#include "kcs/spectral.hpp"

#include <cmath>

#include "kcs/errors.hpp"

namespace kcs {

SpectralSnapshot::SpectralSnapshot(const RegressionState& state) {
    const Eigen::Index t = static_cast<Eigen::Index>(state.size());
    if (t == 0) {
        eigenvalues_.resize(0);
        eigenvectors_.resize(0, 0);
        projected_y_.resize(0);
        return;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(state.gram_matrix());
    if (eig.info() != Eigen::Success) {
        throw NumericError("eigendecomposition of the kernel matrix did not converge");
    }
    // K is PSD; negative eigenvalues are round-off.
    eigenvalues_ = eig.eigenvalues().cwiseMax(0.0);
    eigenvectors_ = eig.eigenvectors();
    projected_y_ = eigenvectors_.transpose() * state.responses();
}

Eigen::VectorXd SpectralSnapshot::project(const Eigen::VectorXd& kx) const {
    if (size() == 0) return Eigen::VectorXd(0);
    return eigenvectors_.transpose() * kx;
}

Eigen::MatrixXd SpectralSnapshot::project(const Eigen::MatrixXd& kx) const {
    if (size() == 0) return Eigen::MatrixXd(0, kx.cols());
    return eigenvectors_.transpose() * kx;
}

SpectralSnapshot::Moments SpectralSnapshot::moments(double alpha, const Eigen::VectorXd& projected,
                                                    double kxx) const {
    Moments m{0.0, kxx};
    if (size() == 0) return m;
    const Eigen::ArrayXd inv = (eigenvalues_.array() + alpha).inverse();
    m.mean = (projected.array() * projected_y_.array() * inv).sum();
    m.var = clamp_variance(kxx - (projected.array().square() * inv).sum());
    return m;
}

double SpectralSnapshot::weighted_quadratic(double alpha) const {
    if (size() == 0) return 0.0;
    return alpha * (projected_y_.array().square() / (eigenvalues_.array() + alpha)).sum();
}

double SpectralSnapshot::logdet_scaled(double alpha) const {
    if (size() == 0) return 0.0;
    return (eigenvalues_.array() / alpha).log1p().sum();
}

}  // namespace kcs
