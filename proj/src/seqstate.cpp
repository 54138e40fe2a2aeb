#include "kcs/seqstate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "kcs/errors.hpp"

namespace kcs {

namespace {

constexpr double kNegativeVarianceTolerance = 1e-8;

bool same_alpha(double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(std::abs(a), std::abs(b));
}

}  // namespace

double clamp_variance(double rho2) {
    if (rho2 < -kNegativeVarianceTolerance) {
        throw InternalError("posterior variance " + std::to_string(rho2) +
                            " is negative beyond round-off");
    }
    return std::max(rho2, 0.0);
}

RegressionState::RegressionState(KernelSpec spec, std::span<const double> alphas,
                                 StateOptions options)
    : spec_(spec), options_(options), y_(0), k_(0, 0) {
    spec_.validate();
    if (alphas.empty()) throw ConfigError("regression state needs at least one alpha");
    if (!(options_.jitter >= 0.0)) throw ConfigError("jitter must be nonnegative");
    for (double a : alphas) {
        if (!(a > 0.0) || !std::isfinite(a)) {
            throw ConfigError("alpha must be positive and finite, got " + std::to_string(a));
        }
        if (has_alpha(a)) continue;
        AlphaCache c;
        c.alpha = a;
        c.chol_upper.resize(0, 0);
        c.inverse.resize(0, 0);
        c.weights.resize(0);
        caches_.push_back(std::move(c));
    }
}

std::vector<double> RegressionState::alphas() const {
    std::vector<double> out;
    out.reserve(caches_.size());
    for (const auto& c : caches_) out.push_back(c.alpha);
    return out;
}

bool RegressionState::has_alpha(double alpha) const {
    return std::any_of(caches_.begin(), caches_.end(),
                       [&](const AlphaCache& c) { return same_alpha(c.alpha, alpha); });
}

const AlphaCache& RegressionState::cache(double alpha) const {
    for (const auto& c : caches_) {
        if (same_alpha(c.alpha, alpha)) return c;
    }
    throw ConfigError("alpha " + std::to_string(alpha) + " is not cached in the regression state");
}

AlphaCache& RegressionState::find(double alpha) {
    return const_cast<AlphaCache&>(std::as_const(*this).cache(alpha));
}

Eigen::VectorXd RegressionState::cross(const Point& x) const {
    return cross_vector(spec_, xs_, x);
}

Eigen::MatrixXd RegressionState::cross(std::span<const Point> queries) const {
    return cross_matrix(spec_, xs_, queries);
}

void RegressionState::append(const Observation& obs) {
    if (!xs_.empty() && obs.x.size() != xs_.front().size()) {
        throw InputError("append: point dimension " + std::to_string(obs.x.size()) +
                         " does not match " + std::to_string(xs_.front().size()));
    }
    if (!obs.x.allFinite() || !std::isfinite(obs.y)) {
        throw InputError("append: observation has non-finite entries");
    }
    const Eigen::VectorXd kx = cross(obs.x);
    const double kxx = eval(spec_, obs.x, obs.x);

    for (auto& c : caches_) update_cache(c, kx, kxx, obs.y);

    const Eigen::Index t = k_.rows();
    k_.conservativeResize(t + 1, t + 1);
    k_.col(t).head(t) = kx;
    k_.row(t).head(t) = kx.transpose();
    k_(t, t) = kxx;
    y_.conservativeResize(t + 1);
    y_(t) = obs.y;
    xs_.push_back(obs.x);

    if (options_.reanchor_every > 0 && xs_.size() % options_.reanchor_every == 0) reanchor();
}

void RegressionState::update_cache(AlphaCache& c, const Eigen::VectorXd& kx, double kxx,
                                   double y) {
    const Eigen::Index t = kx.size();
    const Eigen::VectorXd v = c.inverse * kx;
    const double schur = kxx + c.alpha - kx.dot(v);
    if (!(schur > 0.0)) {
        throw InternalError("append: non-positive Schur complement " + std::to_string(schur) +
                            " at alpha " + std::to_string(c.alpha));
    }

    // Block inverse of [[K + aI, k], [k^T, kxx + a]].
    c.inverse.conservativeResize(t + 1, t + 1);
    c.inverse.topLeftCorner(t, t).noalias() += (v / schur) * v.transpose();
    c.inverse.col(t).head(t) = -v / schur;
    c.inverse.row(t).head(t) = -v.transpose() / schur;
    c.inverse(t, t) = 1.0 / schur;

    const double resid = (y - v.dot(y_)) / schur;
    c.weights.conservativeResize(t + 1);
    c.weights.head(t) -= resid * v;
    c.weights(t) = resid;

    c.logdet_scaled += std::log1p((schur - c.alpha) / c.alpha);

    // Right Cholesky factor: new column is [U^{-T} k; sqrt(kxx + a - |U^{-T} k|^2)].
    Eigen::VectorXd w = kx;
    if (t > 0) c.chol_upper.transpose().triangularView<Eigen::Lower>().solveInPlace(w);
    const double pivot = kxx + c.alpha - w.squaredNorm();
    if (!(pivot > 0.0)) {
        throw InternalError("append: Cholesky pivot " + std::to_string(pivot) +
                            " is not positive at alpha " + std::to_string(c.alpha));
    }
    c.chol_upper.conservativeResize(t + 1, t + 1);
    c.chol_upper.col(t).head(t) = w;
    c.chol_upper.row(t).head(t).setZero();
    c.chol_upper(t, t) = std::sqrt(pivot);
}

void RegressionState::rebuild_cache(AlphaCache& c) const {
    const Eigen::Index t = k_.rows();
    Eigen::MatrixXd a = k_;
    a.diagonal().array() += c.alpha;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericError("Cholesky of K + alpha I failed at alpha " + std::to_string(c.alpha));
    }
    c.chol_upper = llt.matrixU();
    c.inverse = llt.solve(Eigen::MatrixXd::Identity(t, t));
    c.weights = llt.solve(y_);
    c.logdet_scaled = 2.0 * c.chol_upper.diagonal().array().log().sum() -
                      static_cast<double>(t) * std::log(c.alpha);
}

RegressionState RegressionState::recompute_from_scratch() const {
    RegressionState fresh = *this;
    fresh.reanchor();
    return fresh;
}

void RegressionState::reanchor() {
    k_ = gram(spec_, xs_);
    for (auto& c : caches_) rebuild_cache(c);
}

double RegressionState::ridge_mean_cross(double alpha, const Eigen::VectorXd& kx) const {
    const auto& c = cache(alpha);
    if (kx.size() == 0) return 0.0;
    return kx.dot(c.weights);
}

double RegressionState::ridge_var(double alpha, const Eigen::VectorXd& kx, double kxx) const {
    const auto& c = cache(alpha);
    if (kx.size() == 0) return kxx;
    return clamp_variance(kxx - kx.dot(c.inverse * kx));
}

double RegressionState::ridge_mean(double alpha, const Point& x) const {
    return ridge_mean_cross(alpha, cross(x));
}

double RegressionState::ridge_var(double alpha, const Point& x) const {
    return ridge_var(alpha, cross(x), eval(spec_, x, x));
}

RidgeMoments RegressionState::ridge_moments(double alpha, const Eigen::MatrixXd& kx,
                                            const Eigen::VectorXd& kxx) const {
    const auto& c = cache(alpha);
    RidgeMoments out;
    if (kx.rows() == 0) {
        out.mean = Eigen::VectorXd::Zero(kxx.size());
        out.var = kxx;
        return out;
    }
    out.mean = kx.transpose() * c.weights;
    const Eigen::MatrixXd ik = c.inverse * kx;
    out.var = kxx - (kx.array() * ik.array()).colwise().sum().transpose().matrix();
    for (Eigen::Index j = 0; j < out.var.size(); ++j) out.var(j) = clamp_variance(out.var(j));
    return out;
}

double RegressionState::weighted_quadratic(double alpha) const {
    const auto& c = cache(alpha);
    if (y_.size() == 0) return 0.0;
    return std::max(0.0, c.alpha * y_.dot(c.weights));
}

double RegressionState::logdet_scaled(double alpha) const {
    return cache(alpha).logdet_scaled;
}

Eigen::MatrixXd RegressionState::cholesky_upper_augmented(const Point& x, double jitter) const {
    if (!xs_.empty() && x.size() != xs_.front().size()) {
        throw InputError("augmented Cholesky: point dimension mismatch");
    }
    if (!(jitter >= 0.0)) throw ConfigError("jitter must be nonnegative");
    const Eigen::Index t = k_.rows();
    Eigen::MatrixXd a(t + 1, t + 1);
    a.topLeftCorner(t, t) = k_;
    const Eigen::VectorXd kx = cross(x);
    a.col(t).head(t) = kx;
    a.row(t).head(t) = kx.transpose();
    a(t, t) = eval(spec_, x, x);
    a.diagonal().array() += jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericError("augmented kernel matrix is not positive definite; increase the jitter");
    }
    return llt.matrixU();
}

}  // namespace kcs
