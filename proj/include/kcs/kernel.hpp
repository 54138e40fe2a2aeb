#pragma once

#include <span>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace kcs {

using Point = Eigen::VectorXd;

enum class KernelFamily { rbf, matern32, matern52 };

[[nodiscard]] std::string_view to_string(KernelFamily family);
/// Parses `rbf`, `matern32` or `matern52`; throws ConfigError otherwise.
[[nodiscard]] KernelFamily parse_kernel_family(std::string_view name);

/// Stationary kernel with unit output scale, so k(x, x) = 1 everywhere.
///
///   rbf       exp(-r^2 / (2 l^2))
///   matern32  (1 + sqrt(3) r / l) exp(-sqrt(3) r / l)
///   matern52  (1 + sqrt(5) r / l + 5 r^2 / (3 l^2)) exp(-sqrt(5) r / l)
struct KernelSpec {
    KernelFamily family = KernelFamily::rbf;
    double lengthscale = 1.0;

    /// Matern smoothness nu; +infinity for the RBF kernel.
    [[nodiscard]] double smoothness() const;
    void validate() const;

    friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

[[nodiscard]] KernelSpec make_kernel(KernelFamily family, double lengthscale);

/// Kernel as a function of the Euclidean distance r >= 0.
[[nodiscard]] double eval_distance(const KernelSpec& spec, double r);

[[nodiscard]] double eval(const KernelSpec& spec, const Point& x, const Point& xp);

/// Gram matrix K_ij = k(x_i, x_j). Upper triangle is evaluated and mirrored.
[[nodiscard]] Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const Point> xs);

/// k_t(x) = [k(x, x_1), ..., k(x, x_t)].
[[nodiscard]] Eigen::VectorXd cross_vector(const KernelSpec& spec, std::span<const Point> xs,
                                           const Point& x);

/// Column j holds cross_vector(xs, queries[j]).
[[nodiscard]] Eigen::MatrixXd cross_matrix(const KernelSpec& spec, std::span<const Point> xs,
                                           std::span<const Point> queries);

}  // namespace kcs
