#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "kcs/kernel.hpp"

namespace kcs {

struct Observation {
    Point x;
    double y = 0.0;
};

struct StateOptions {
    /// Added to the diagonal of K before factorising K itself (cone-program oracle only).
    double jitter = 1e-10;
    /// Rebuild every cache from scratch after this many appends; 0 disables.
    std::size_t reanchor_every = 256;

    bool operator==(const StateOptions&) const = default;
};

/// Factorisations of K_t + alpha I kept current across appends.
struct AlphaCache {
    double alpha = 0.0;
    Eigen::MatrixXd chol_upper;  // U with U^T U = K + alpha I
    Eigen::MatrixXd inverse;     // (K + alpha I)^{-1}
    Eigen::VectorXd weights;     // (K + alpha I)^{-1} y
    double logdet_scaled = 0.0;  // ln det(K / alpha + I)
};

/// Posterior mean and variance for a batch of query points at one alpha.
struct RidgeMoments {
    Eigen::VectorXd mean;
    Eigen::VectorXd var;
};

/// Growing kernel ridge regression state with per-alpha caches.
///
/// The set of alphas is fixed at construction. Appends update every cache with
/// the Schur-complement block rules (inverse, log-determinant, right Cholesky
/// factor), which costs O(t^2) per alpha. Read operations are const and may run
/// concurrently between appends.
class RegressionState {
public:
    RegressionState(KernelSpec spec, std::span<const double> alphas, StateOptions options = {});

    void append(const Observation& obs);
    void append(const Point& x, double y) { append(Observation{x, y}); }

    [[nodiscard]] std::size_t size() const { return xs_.size(); }
    [[nodiscard]] const KernelSpec& spec() const { return spec_; }
    [[nodiscard]] const StateOptions& options() const { return options_; }
    [[nodiscard]] std::span<const Point> points() const { return xs_; }
    [[nodiscard]] const Eigen::VectorXd& responses() const { return y_; }
    [[nodiscard]] const Eigen::MatrixXd& gram_matrix() const { return k_; }
    [[nodiscard]] std::vector<double> alphas() const;
    [[nodiscard]] bool has_alpha(double alpha) const;
    /// Throws ConfigError when alpha was not declared at construction.
    [[nodiscard]] const AlphaCache& cache(double alpha) const;

    [[nodiscard]] Eigen::VectorXd cross(const Point& x) const;
    [[nodiscard]] Eigen::MatrixXd cross(std::span<const Point> queries) const;

    [[nodiscard]] double ridge_mean(double alpha, const Point& x) const;
    [[nodiscard]] double ridge_var(double alpha, const Point& x) const;
    /// Mean from a precomputed cross vector kx = k_t(x).
    [[nodiscard]] double ridge_mean_cross(double alpha, const Eigen::VectorXd& kx) const;
    [[nodiscard]] double ridge_var(double alpha, const Eigen::VectorXd& kx, double kxx) const;
    /// Batched form; column j of `kx` is the cross vector of query j.
    [[nodiscard]] RidgeMoments ridge_moments(double alpha, const Eigen::MatrixXd& kx,
                                             const Eigen::VectorXd& kxx) const;

    /// y^T (K / alpha + I)^{-1} y.
    [[nodiscard]] double weighted_quadratic(double alpha) const;
    /// ln det(K / alpha + I).
    [[nodiscard]] double logdet_scaled(double alpha) const;

    /// Same data, every cache rebuilt by dense factorisation.
    [[nodiscard]] RegressionState recompute_from_scratch() const;
    void reanchor();

    /// Upper U with U^T U = K_{t+1} + jitter I, where K_{t+1} is K_t bordered by x.
    [[nodiscard]] Eigen::MatrixXd cholesky_upper_augmented(const Point& x, double jitter) const;

private:
    [[nodiscard]] AlphaCache& find(double alpha);
    void update_cache(AlphaCache& cache, const Eigen::VectorXd& kx, double kxx, double y);
    void rebuild_cache(AlphaCache& cache) const;

    KernelSpec spec_;
    StateOptions options_;
    std::vector<Point> xs_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd k_;
    std::vector<AlphaCache> caches_;
};

/// Clamp a computed posterior variance at zero. Values below -1e-8 indicate
/// numerical corruption and raise InternalError.
[[nodiscard]] double clamp_variance(double rho2);

}  // namespace kcs
