#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "amliq/params.hpp"

namespace amliq {

// ---------- GBM benchmark ----------

// Verbatim log-likelihood of log-returns under GBM with drift convention
// "mu*dt is the mean log-return" (no Ito correction — the estimator maximizes
// exactly this expression).
double gbm_loglik(const std::vector<double>& prices, double dt, double mu, double sigma);

struct GbmFit {
    double mu_hat = 0.0;
    double sigma_hat = 0.0;
    bool degenerate = false; // constant series: sigma_hat = 0
    // asymptotic standard errors of the two estimators
    double mu_se = 0.0;
    double sigma_se = 0.0;
};
GbmFit gbm_mle(const std::vector<double>& prices, double dt);

// ---------- state space / EKF ----------

enum class MeasurementKind {
    log_price, // y = log S (default; h nonlinear)
    price      // y = S (linear h; used for the exact-Kalman equivalence check)
};

struct SsmConfig {
    double dt = 1.0 / 252.0;
    MeasurementKind measurement = MeasurementKind::log_price;
    double meas_noise_var = 1e-6; // R
    // initial state/covariance rules (first observation's price, L0 = theta_bar)
    double init_l = std::numeric_limits<double>::quiet_NaN(); // NaN -> theta_bar
    bool finite_difference_jacobian = false;
};

struct FilterOutput {
    double neg_loglik = 0.0;
    std::vector<std::array<double, 2>> states;      // filtered (S, L) per step
    std::vector<std::array<double, 3>> covariances; // (P11, P12, P22)
};

// Extended Kalman filter over X = (S, L): Euler transition with analytic
// Jacobian, state-dependent process noise evaluated at the predicted state,
// scalar measurement (Joseph-form update, PSD-clamped covariance).
// `prices` is the raw positive price series; the measurement transform
// (log or identity) is applied internally per cfg. The first observation
// initializes the state; the likelihood sums over the rest.
FilterOutput ekf_filter_loglik(const std::vector<double>& prices,
                               const ModelParams& theta, const SsmConfig& cfg);

// ---------- derivative-free maximization ----------

// Full parameter vector in the calibration order.
inline constexpr int kThetaDim = 11;
inline constexpr std::array<const char*, kThetaDim> kThetaNames = {
    "mu", "alpha", "beta", "theta_bar", "sigma_S", "sigma_L",
    "rho1", "rho2", "rho3", "lambda", "zeta"};

std::array<double, kThetaDim> params_to_theta(const ModelParams& p);
ModelParams theta_to_params(const std::array<double, kThetaDim>& theta,
                            const ModelParams& base);

struct OptimResult {
    std::array<double, kThetaDim> theta{};
    double neg_loglik = 0.0;
    bool converged = false;
    int evaluations = 0;
};

struct OptimOptions {
    int max_evaluations = 2000;
    double rel_diameter_tol = 1e-6;
    int restarts = 2;
    double init_scale = 0.1; // relative simplex size
    std::uint64_t seed = 7;  // simplex jitter
};

// Restarted Nelder-Mead over the coordinates not pinned by fixed_mask, with
// box bounds enforced by projection. MaxEvaluationsReached is reported via
// converged=false, never thrown.
OptimResult maximize_loglik(
    const std::function<double(const std::array<double, kThetaDim>&)>& neg_loglik,
    const std::array<double, kThetaDim>& init,
    const std::array<double, kThetaDim>& lower,
    const std::array<double, kThetaDim>& upper,
    const std::array<bool, kThetaDim>& fixed_mask,
    const OptimOptions& opt = {});

struct CalibrationResult {
    std::array<double, kThetaDim> theta_hat{};
    double neg_loglik = 0.0;
    bool converged = false;
    int evaluations = 0;
    std::vector<std::array<double, 2>> filtered_states;
    std::vector<double> std_errors; // numerical-Hessian based, optional
};

struct CalibrateOptions {
    bool fix_lambda_zeta = true; // Table-7 style pinning
    bool compute_std_errors = false;
    OptimOptions optim{};
    SsmConfig ssm{};
};

// EKF-MLE for the liquidity model on one futures window. init defaults start
// from the GBM fit (sigma_S) and the spec defaults elsewhere.
CalibrationResult calibrate_liquidity_model(const std::vector<double>& prices,
                                            const ModelParams& base,
                                            const CalibrateOptions& opt = {});

// ---------- evaluation helpers ----------

enum class Moneyness { OTM, ATM, ITM };
Moneyness bucket_moneyness(double s, double k);
std::string moneyness_name(Moneyness m);

double rmse(const std::vector<double>& theoretical, const std::vector<double>& actual);

} // namespace amliq
