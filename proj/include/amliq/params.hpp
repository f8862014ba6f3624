#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "amliq/errors.hpp"

namespace amliq {

inline constexpr double kPi = 3.14159265358979323846;

// Market/model/cost parameters plus contract terms. One record serves both
// the pricing PDE (which ignores mu) and the physical-measure calibration.
struct ModelParams {
    double mu = 0.02;        // physical drift (1/yr); unused by the PDE
    double alpha = 2.0;      // mean-reversion speed of L (1/yr)
    double theta_bar = 0.6;  // long-run illiquidity level
    double sigma_S = 0.3;    // asset volatility (1/sqrt(yr))
    double sigma_L = 0.2;    // liquidity volatility (1/sqrt(yr))
    double beta = 0.4;       // price sensitivity to liquidity (> 0)
    double rho1 = 0.2;       // corr(W_gamma, W_S)
    double rho2 = 0.5;       // corr(W_S, W_L)
    double rho3 = 0.3;       // corr(W_gamma, W_L)
    double lambda = 5.0;     // TC sensitivity inside theta(L)
    double zeta = 0.5;       // concavity exponent of g(L) = L^zeta, in (0, 1]
    double r = 0.02;         // risk-free rate (1/yr)
    double kappa = 0.008;    // proportional transaction-cost rate
    double delta_t = 1.0 / 12.0; // hedging interval (yr)
    double K = 10.0;         // strike
    double T = 1.0;          // maturity (yr)

    // Optional split of the cost rate appearing inside theta(L) from the
    // hedging cost rate; NaN means "same as kappa".
    double kappa_theta = std::numeric_limits<double>::quiet_NaN();

    [[nodiscard]] double kappa_for_theta() const {
        return std::isnan(kappa_theta) ? kappa : kappa_theta;
    }
};

// Throws one of NonPositiveVolatility / CorrelationNotPSD / ZetaOutOfRange /
// NegativeKappa / GridTooSmall-style errors if the record is inadmissible.
// Returns the params unchanged otherwise.
const ModelParams& validate_params(const ModelParams& p);

// Smallest eigenvalue of the 3x3 correlation matrix of (W_gamma, W_S, W_L);
// admissibility requires it >= -1e-10 (the Brownian decomposition needs a
// real square root).
double correlation_min_eigenvalue(double rho1, double rho2, double rho3);

// theta(L) = theta_bar + kappa*lambda*l^zeta. Requires l >= 0.
inline double theta_effective(double l, const ModelParams& p) {
    if (l < 0.0) throw NegativeLiquidity("theta_effective: l < 0");
    return p.theta_bar + p.kappa_for_theta() * p.lambda * std::pow(l, p.zeta);
}

// Flat key=value config support. Unknown keys are an error; '#' starts a
// comment. Returns the list of keys that were set (used by the CLI to detect
// config/flag conflicts).
std::map<std::string, double> read_config_file(const std::string& path);
void apply_config(ModelParams& p, const std::map<std::string, double>& kv);

} // namespace amliq
