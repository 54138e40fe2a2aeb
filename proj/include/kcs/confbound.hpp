#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "kcs/seqstate.hpp"
#include "kcs/socp.hpp"
#include "kcs/spectral.hpp"

namespace kcs {

/// Bound families. CMM, DMM and AMM are built from the martingale-mixture
/// radius; AY and IGP are the self-normalised baselines.
enum class Method { cmm, dmm, amm, ay, igp };

[[nodiscard]] std::string_view to_string(Method method);
[[nodiscard]] Method parse_method(std::string_view name);

struct ConfidenceConfig {
    double sigma = 0.1;  // sub-Gaussian noise scale
    double B = 10.0;     // RKHS norm bound
    double delta = 0.01;
    double c = 1.0;  // covariance scale of the Gaussian mixture
    std::vector<double> alpha_grid{0.001, 0.003, 0.01, 0.03, 0.1};
    Method method = Method::dmm;
    double lambda = 0.01;  // AY regulariser
    double eta = 0.002;    // IGP regulariser

    void validate() const;
    /// sigma^2 / c, the alpha at which the quadratic terms of the radius cancel.
    [[nodiscard]] double matched_alpha() const { return sigma * sigma / c; }
    /// Alphas a regression state must cache to evaluate `method`.
    [[nodiscard]] std::vector<double> required_alphas() const;
    [[nodiscard]] bool grid_contains_matched_alpha() const;
};

struct DualCertificate {
    double eta1 = 0.0;
    double eta2 = 0.0;
};

struct BoundResult {
    double lcb = 0.0;
    double ucb = 0.0;
    /// Radius on the upper side: R~ for our bounds, the baseline radius for AY/IGP.
    double radius = 0.0;
    /// Multiplier on the posterior standard deviation at the upper side.
    double width_scale = 0.0;
    double alpha_star = 0.0;
    /// The lower side is minimised independently and may pick another alpha.
    double alpha_star_lcb = 0.0;
    std::optional<DualCertificate> dual_certificate;
};

/// R_t with R_t^2 = y^T (I + cK/s^2)^{-1} y + s^2 ln det(I + cK/s^2) + 2 s^2 ln(1/delta).
[[nodiscard]] double radius_R(const RegressionState& state, const ConfidenceConfig& cfg);

/// R~_{alpha,t}^2 = R_t^2 + alpha B^2 - y^T (K/alpha + I)^{-1} y, clamped at zero.
/// Throws InfeasibleSetError when it is negative beyond 1e-8.
[[nodiscard]] double tilde_radius(const RegressionState& state, const ConfidenceConfig& cfg,
                                  double alpha);

/// sigma sqrt(ln det(K/lambda + I) + 2 ln(1/delta)) + sqrt(lambda) B
[[nodiscard]] double ay_radius(const RegressionState& state, const ConfidenceConfig& cfg);
/// sigma sqrt(ln det(K/(1+eta) + I) + t eta + 2 ln(1/delta)) + B
[[nodiscard]] double igp_radius(const RegressionState& state, const ConfidenceConfig& cfg);

/// mu_alpha(x) +/- (R~_alpha / sqrt(alpha)) rho_alpha(x).
[[nodiscard]] BoundResult analytic_bounds(const RegressionState& state,
                                          const ConfidenceConfig& cfg, double alpha,
                                          const Point& x);

/// Analytic bounds minimised (upper) / maximised (lower) over cfg.alpha_grid.
[[nodiscard]] BoundResult dual_bounds_grid(const RegressionState& state,
                                           const ConfidenceConfig& cfg, const Point& x);

struct ExactOptions {
    double log_alpha_min = std::log(1e-6);
    double log_alpha_max = std::log(1e6);
    int scan_points = 32;
    /// Golden-section termination width in ln(alpha).
    double tolerance = 1e-6;
};

/// Dual bound minimised over continuous alpha: coarse log-grid scan, then
/// golden-section refinement around the best bracket.
[[nodiscard]] BoundResult exact_bounds(const RegressionState& state, const ConfidenceConfig& cfg,
                                       const Point& x, const ExactOptions& options = {});

/// Evaluates exact bounds for many points against one eigendecomposition.
class ExactBoundSolver {
public:
    ExactBoundSolver(const RegressionState& state, const ConfidenceConfig& cfg,
                     ExactOptions options = {});

    [[nodiscard]] BoundResult bounds(const Eigen::VectorXd& kx, double kxx) const;
    [[nodiscard]] BoundResult bounds(const Point& x) const;
    /// The dual objective at one alpha; `upper` selects the side.
    [[nodiscard]] double objective(double alpha, const Eigen::VectorXd& projected, double kxx,
                                   bool upper) const;

private:
    struct SideResult {
        double value = 0.0;
        double alpha = 0.0;
    };
    [[nodiscard]] SideResult minimise(const Eigen::VectorXd& projected, double kxx,
                                      bool upper) const;
    [[nodiscard]] double tilde_radius2(double alpha) const;

    const RegressionState* state_;
    ConfidenceConfig cfg_;
    ExactOptions options_;
    SpectralSnapshot snapshot_;
    double radius2_ = 0.0;
};

[[nodiscard]] BoundResult ay_bounds(const RegressionState& state, const ConfidenceConfig& cfg,
                                    const Point& x);
[[nodiscard]] BoundResult igp_bounds(const RegressionState& state, const ConfidenceConfig& cfg,
                                     const Point& x);

/// Dispatch on cfg.method.
[[nodiscard]] BoundResult compute_bounds(const RegressionState& state,
                                         const ConfidenceConfig& cfg, const Point& x);
/// Batched dispatch; shares the cross matrix (and, for CMM, the eigendecomposition).
[[nodiscard]] std::vector<BoundResult> compute_bounds(const RegressionState& state,
                                                      const ConfidenceConfig& cfg,
                                                      std::span<const Point> xs);

struct SocpOptions {
    double jitter = 1e-10;
    /// The cone program is a verification oracle; refuse larger problems.
    std::size_t max_t = 64;
    BarrierOptions barrier{};
};

/// Upper bound from the representer cone program
///   max k_{t+1}(x)^T w  s.t. ||K_{t,t+1} w - y|| <= R_t, ||L_{t+1} w|| <= B
/// solved in the variable v = L_{t+1} w.
[[nodiscard]] double socp_primal_ucb(const RegressionState& state, const ConfidenceConfig& cfg,
                                     const Point& x, const SocpOptions& options = {});

}  // namespace kcs
