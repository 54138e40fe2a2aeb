#include "kcs/kernel.hpp"

#include <cmath>
#include <limits>

#include "kcs/errors.hpp"

namespace kcs {

namespace {

void check_dims(const Point& x, const Point& xp) {
    if (x.size() != xp.size()) {
        throw InputError("kernel: dimension mismatch (" + std::to_string(x.size()) + " vs " +
                         std::to_string(xp.size()) + ")");
    }
}

}  // namespace

std::string_view to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::rbf: return "rbf";
        case KernelFamily::matern32: return "matern32";
        case KernelFamily::matern52: return "matern52";
    }
    return "unknown";
}

KernelFamily parse_kernel_family(std::string_view name) {
    if (name == "rbf") return KernelFamily::rbf;
    if (name == "matern32") return KernelFamily::matern32;
    if (name == "matern52") return KernelFamily::matern52;
    throw ConfigError("unknown kernel family '" + std::string(name) + "'");
}

double KernelSpec::smoothness() const {
    switch (family) {
        case KernelFamily::matern32: return 1.5;
        case KernelFamily::matern52: return 2.5;
        case KernelFamily::rbf: break;
    }
    return std::numeric_limits<double>::infinity();
}

void KernelSpec::validate() const {
    if (!(lengthscale > 0.0) || !std::isfinite(lengthscale)) {
        throw ConfigError("kernel lengthscale must be a positive finite number");
    }
}

KernelSpec make_kernel(KernelFamily family, double lengthscale) {
    KernelSpec spec{family, lengthscale};
    spec.validate();
    return spec;
}

double eval_distance(const KernelSpec& spec, double r) {
    const double l = spec.lengthscale;
    switch (spec.family) {
        case KernelFamily::rbf:
            return std::exp(-0.5 * (r * r) / (l * l));
        case KernelFamily::matern32: {
            const double z = std::sqrt(3.0) * r / l;
            return (1.0 + z) * std::exp(-z);
        }
        case KernelFamily::matern52: {
            const double z = std::sqrt(5.0) * r / l;
            return (1.0 + z + z * z / 3.0) * std::exp(-z);
        }
    }
    return 0.0;
}

double eval(const KernelSpec& spec, const Point& x, const Point& xp) {
    check_dims(x, xp);
    return eval_distance(spec, (x - xp).norm());
}

Eigen::MatrixXd gram(const KernelSpec& spec, std::span<const Point> xs) {
    const auto t = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd k(t, t);
    for (Eigen::Index i = 0; i < t; ++i) {
        k(i, i) = eval(spec, xs[i], xs[i]);
        for (Eigen::Index j = i + 1; j < t; ++j) {
            k(i, j) = eval(spec, xs[i], xs[j]);
            k(j, i) = k(i, j);
        }
    }
    return k;
}

Eigen::VectorXd cross_vector(const KernelSpec& spec, std::span<const Point> xs, const Point& x) {
    Eigen::VectorXd k(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t s = 0; s < xs.size(); ++s) {
        k(static_cast<Eigen::Index>(s)) = eval(spec, x, xs[s]);
    }
    return k;
}

Eigen::MatrixXd cross_matrix(const KernelSpec& spec, std::span<const Point> xs,
                             std::span<const Point> queries) {
    Eigen::MatrixXd k(static_cast<Eigen::Index>(xs.size()),
                      static_cast<Eigen::Index>(queries.size()));
    for (std::size_t j = 0; j < queries.size(); ++j) {
        k.col(static_cast<Eigen::Index>(j)) = cross_vector(spec, xs, queries[j]);
    }
    return k;
}

}  // namespace kcs
