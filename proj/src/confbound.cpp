#include "kcs/confbound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "kcs/errors.hpp"

namespace kcs {

namespace {

constexpr double kNegativeRadiusTolerance = 1e-8;

double checked_radius2(double r2, double alpha) {
    if (r2 < -kNegativeRadiusTolerance) {
        throw InfeasibleSetError("confidence set is empty: squared radius " + std::to_string(r2) +
                                 " at alpha " + std::to_string(alpha));
    }
    return std::max(r2, 0.0);
}

std::optional<DualCertificate> certificate(double radius, double rho, double alpha) {
    if (!(radius > 0.0) || !(rho > 0.0)) return std::nullopt;
    const double eta1 = rho / (2.0 * std::sqrt(alpha) * radius);
    return DualCertificate{eta1, alpha * eta1};
}

BoundResult symmetric_bound(double mean, double var, double radius, double scale, double alpha) {
    const double rho = std::sqrt(var);
    BoundResult r;
    r.ucb = mean + scale * rho;
    r.lcb = mean - scale * rho;
    r.radius = radius;
    r.width_scale = scale;
    r.alpha_star = alpha;
    r.alpha_star_lcb = alpha;
    return r;
}

// Shared evaluation of mu +/- scale * rho across a batch for one alpha.
void fill_symmetric(const RegressionState& state, double alpha, double radius, double scale,
                    const Eigen::MatrixXd& kx, const Eigen::VectorXd& kxx,
                    std::vector<BoundResult>& out, bool with_certificate) {
    const RidgeMoments m = state.ridge_moments(alpha, kx, kxx);
    for (std::size_t j = 0; j < out.size(); ++j) {
        const auto jj = static_cast<Eigen::Index>(j);
        out[j] = symmetric_bound(m.mean(jj), m.var(jj), radius, scale, alpha);
        if (with_certificate) out[j].dual_certificate = certificate(radius, std::sqrt(m.var(jj)), alpha);
    }
}

Eigen::VectorXd self_kernel(const KernelSpec& spec, std::span<const Point> xs) {
    Eigen::VectorXd kxx(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t j = 0; j < xs.size(); ++j) kxx(static_cast<Eigen::Index>(j)) = eval(spec, xs[j], xs[j]);
    return kxx;
}

}  // namespace

std::string_view to_string(Method method) {
    switch (method) {
        case Method::cmm: return "cmm";
        case Method::dmm: return "dmm";
        case Method::amm: return "amm";
        case Method::ay: return "ay";
        case Method::igp: return "igp";
    }
    return "unknown";
}

Method parse_method(std::string_view name) {
    if (name == "cmm") return Method::cmm;
    if (name == "dmm") return Method::dmm;
    if (name == "amm") return Method::amm;
    if (name == "ay") return Method::ay;
    if (name == "igp") return Method::igp;
    throw ConfigError("unknown bound method '" + std::string(name) + "'");
}

void ConfidenceConfig::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw ConfigError(std::string(name) + " must be positive and finite");
        }
    };
    positive(sigma, "bound.sigma");
    positive(B, "bound.B");
    positive(c, "bound.c");
    positive(lambda, "bound.lambda");
    positive(eta, "bound.eta");
    if (!(delta > 0.0 && delta <= 1.0)) throw ConfigError("bound.delta must lie in (0, 1]");
    if (alpha_grid.empty()) throw ConfigError("bound.alpha_grid must not be empty");
    for (double a : alpha_grid) positive(a, "bound.alpha_grid entries");
}

std::vector<double> ConfidenceConfig::required_alphas() const {
    switch (method) {
        case Method::cmm:
        case Method::amm: return {matched_alpha()};
        case Method::dmm: {
            std::vector<double> out = alpha_grid;
            out.push_back(matched_alpha());
            return out;
        }
        case Method::ay: return {lambda};
        case Method::igp: return {1.0 + eta};
    }
    return {};
}

bool ConfidenceConfig::grid_contains_matched_alpha() const {
    const double m = matched_alpha();
    return std::any_of(alpha_grid.begin(), alpha_grid.end(),
                       [&](double a) { return std::abs(a - m) <= 1e-12 * std::max(a, m); });
}

double radius_R(const RegressionState& state, const ConfidenceConfig& cfg) {
    cfg.validate();
    const double a0 = cfg.matched_alpha();
    const double s2 = cfg.sigma * cfg.sigma;
    const double r2 = state.weighted_quadratic(a0) + s2 * state.logdet_scaled(a0) +
                      2.0 * s2 * std::log(1.0 / cfg.delta);
    return std::sqrt(r2);
}

double tilde_radius(const RegressionState& state, const ConfidenceConfig& cfg, double alpha) {
    const double r = radius_R(state, cfg);
    const double r2 = r * r + alpha * cfg.B * cfg.B - state.weighted_quadratic(alpha);
    return std::sqrt(checked_radius2(r2, alpha));
}

double ay_radius(const RegressionState& state, const ConfidenceConfig& cfg) {
    cfg.validate();
    const double ld = state.logdet_scaled(cfg.lambda);
    return cfg.sigma * std::sqrt(ld + 2.0 * std::log(1.0 / cfg.delta)) +
           std::sqrt(cfg.lambda) * cfg.B;
}

double igp_radius(const RegressionState& state, const ConfidenceConfig& cfg) {
    cfg.validate();
    const double ld = state.logdet_scaled(1.0 + cfg.eta);
    const double t = static_cast<double>(state.size());
    return cfg.sigma * std::sqrt(ld + t * cfg.eta + 2.0 * std::log(1.0 / cfg.delta)) + cfg.B;
}

BoundResult analytic_bounds(const RegressionState& state, const ConfidenceConfig& cfg,
                            double alpha, const Point& x) {
    const double radius = tilde_radius(state, cfg, alpha);
    const Eigen::VectorXd kx = state.cross(x);
    const double mean = state.ridge_mean_cross(alpha, kx);
    const double var = state.ridge_var(alpha, kx, eval(state.spec(), x, x));
    BoundResult r = symmetric_bound(mean, var, radius, radius / std::sqrt(alpha), alpha);
    r.dual_certificate = certificate(radius, std::sqrt(var), alpha);
    return r;
}

BoundResult dual_bounds_grid(const RegressionState& state, const ConfidenceConfig& cfg,
                             const Point& x) {
    ConfidenceConfig grid_cfg = cfg;
    grid_cfg.method = Method::dmm;
    const std::vector<Point> one{x};
    return compute_bounds(state, grid_cfg, one).front();
}

BoundResult ay_bounds(const RegressionState& state, const ConfidenceConfig& cfg, const Point& x) {
    const double radius = ay_radius(state, cfg);
    const Eigen::VectorXd kx = state.cross(x);
    return symmetric_bound(state.ridge_mean_cross(cfg.lambda, kx),
                           state.ridge_var(cfg.lambda, kx, eval(state.spec(), x, x)), radius,
                           radius / std::sqrt(cfg.lambda), cfg.lambda);
}

BoundResult igp_bounds(const RegressionState& state, const ConfidenceConfig& cfg, const Point& x) {
    const double radius = igp_radius(state, cfg);
    const double alpha = 1.0 + cfg.eta;
    const Eigen::VectorXd kx = state.cross(x);
    return symmetric_bound(state.ridge_mean_cross(alpha, kx),
                           state.ridge_var(alpha, kx, eval(state.spec(), x, x)), radius, radius,
                           alpha);
}

// ---------------------------------------------------------------------------
// Continuous minimisation over alpha

ExactBoundSolver::ExactBoundSolver(const RegressionState& state, const ConfidenceConfig& cfg,
                                   ExactOptions options)
    : state_(&state), cfg_(cfg), options_(options), snapshot_(state) {
    cfg_.validate();
    if (options_.scan_points < 2 || !(options_.log_alpha_max > options_.log_alpha_min) ||
        !(options_.tolerance > 0.0)) {
        throw ConfigError("invalid continuous-alpha search options");
    }
    const double a0 = cfg_.matched_alpha();
    const double s2 = cfg_.sigma * cfg_.sigma;
    radius2_ = snapshot_.weighted_quadratic(a0) + s2 * snapshot_.logdet_scaled(a0) +
               2.0 * s2 * std::log(1.0 / cfg_.delta);
}

double ExactBoundSolver::tilde_radius2(double alpha) const {
    return checked_radius2(radius2_ + alpha * cfg_.B * cfg_.B - snapshot_.weighted_quadratic(alpha),
                           alpha);
}

double ExactBoundSolver::objective(double alpha, const Eigen::VectorXd& projected, double kxx,
                                   bool upper) const {
    const auto m = snapshot_.moments(alpha, projected, kxx);
    const double width = std::sqrt(tilde_radius2(alpha) * m.var / alpha);
    return (upper ? m.mean : -m.mean) + width;
}

ExactBoundSolver::SideResult ExactBoundSolver::minimise(const Eigen::VectorXd& projected,
                                                        double kxx, bool upper) const {
    const int n = options_.scan_points;
    const double lo = options_.log_alpha_min;
    const double step = (options_.log_alpha_max - lo) / (n - 1);
    auto f = [&](double s) { return objective(std::exp(s), projected, kxx, upper); };

    int best = 0;
    double best_value = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double v = f(lo + i * step);
        if (v < best_value) {
            best_value = v;
            best = i;
        }
    }

    // Golden-section search inside the bracket around the best scan point.
    double a = lo + std::max(best - 1, 0) * step;
    double b = lo + std::min(best + 1, n - 1) * step;
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    while (b - a > options_.tolerance) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    SideResult r{best_value, std::exp(lo + best * step)};
    const double s_mid = 0.5 * (a + b);
    const double f_mid = f(s_mid);
    for (auto [s, v] : {std::pair{c, fc}, std::pair{d, fd}, std::pair{s_mid, f_mid}}) {
        if (v < r.value) r = {v, std::exp(s)};
    }
    return r;
}

BoundResult ExactBoundSolver::bounds(const Eigen::VectorXd& kx, double kxx) const {
    const Eigen::VectorXd projected = snapshot_.project(kx);
    const SideResult up = minimise(projected, kxx, true);
    const SideResult down = minimise(projected, kxx, false);
    BoundResult r;
    r.ucb = up.value;
    r.lcb = -down.value;
    r.alpha_star = up.alpha;
    r.alpha_star_lcb = down.alpha;
    r.radius = std::sqrt(tilde_radius2(up.alpha));
    r.width_scale = r.radius / std::sqrt(up.alpha);
    const double rho = std::sqrt(snapshot_.moments(up.alpha, projected, kxx).var);
    r.dual_certificate = certificate(r.radius, rho, up.alpha);
    return r;
}

BoundResult ExactBoundSolver::bounds(const Point& x) const {
    return bounds(state_->cross(x), eval(state_->spec(), x, x));
}

BoundResult exact_bounds(const RegressionState& state, const ConfidenceConfig& cfg, const Point& x,
                         const ExactOptions& options) {
    return ExactBoundSolver(state, cfg, options).bounds(x);
}

// ---------------------------------------------------------------------------

BoundResult compute_bounds(const RegressionState& state, const ConfidenceConfig& cfg,
                           const Point& x) {
    const std::vector<Point> one{x};
    return compute_bounds(state, cfg, one).front();
}

std::vector<BoundResult> compute_bounds(const RegressionState& state, const ConfidenceConfig& cfg,
                                        std::span<const Point> xs) {
    cfg.validate();
    std::vector<BoundResult> out(xs.size());
    if (xs.empty()) return out;
    const Eigen::MatrixXd kx = state.cross(xs);
    const Eigen::VectorXd kxx = self_kernel(state.spec(), xs);

    switch (cfg.method) {
        case Method::amm: {
            const double alpha = cfg.matched_alpha();
            const double radius = tilde_radius(state, cfg, alpha);
            fill_symmetric(state, alpha, radius, radius / std::sqrt(alpha), kx, kxx, out, true);
            break;
        }
        case Method::ay: {
            const double radius = ay_radius(state, cfg);
            fill_symmetric(state, cfg.lambda, radius, radius / std::sqrt(cfg.lambda), kx, kxx,
                           out, false);
            break;
        }
        case Method::igp: {
            const double radius = igp_radius(state, cfg);
            fill_symmetric(state, 1.0 + cfg.eta, radius, radius, kx, kxx, out, false);
            break;
        }
        case Method::dmm: {
            std::vector<BoundResult> lower(xs.size());
            std::vector<BoundResult> candidate(xs.size());
            bool first = true;
            for (double alpha : cfg.alpha_grid) {
                const double radius = tilde_radius(state, cfg, alpha);
                fill_symmetric(state, alpha, radius, radius / std::sqrt(alpha), kx, kxx,
                               candidate, true);
                for (std::size_t j = 0; j < xs.size(); ++j) {
                    if (first || candidate[j].ucb < out[j].ucb) out[j] = candidate[j];
                    if (first || candidate[j].lcb > lower[j].lcb) lower[j] = candidate[j];
                }
                first = false;
            }
            for (std::size_t j = 0; j < xs.size(); ++j) {
                out[j].lcb = lower[j].lcb;
                out[j].alpha_star_lcb = lower[j].alpha_star;
            }
            break;
        }
        case Method::cmm: {
            const ExactBoundSolver solver(state, cfg);
            for (std::size_t j = 0; j < xs.size(); ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                out[j] = solver.bounds(Eigen::VectorXd(kx.col(jj)), kxx(jj));
            }
            break;
        }
    }
    return out;
}

double socp_primal_ucb(const RegressionState& state, const ConfidenceConfig& cfg, const Point& x,
                       const SocpOptions& options) {
    const auto t = static_cast<Eigen::Index>(state.size());
    if (state.size() > options.max_t) {
        throw ConfigError("cone-program oracle limited to t <= " + std::to_string(options.max_t));
    }
    // K_{t+1} + jitter I = U^T U; with v = U w the kernel values are U^T v.
    const Eigen::MatrixXd U = state.cholesky_upper_augmented(x, options.jitter);
    TwoBallProgram program;
    program.objective = U.col(t);
    program.M = U.leftCols(t).transpose();
    program.y = state.responses();
    program.R = radius_R(state, cfg);
    program.B = cfg.B;
    return solve_two_ball(program, options.barrier).value;
}

}  // namespace kcs
