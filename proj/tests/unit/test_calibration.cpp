#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"

#include "amliq/calibration.hpp"
#include "amliq/mc.hpp"
#include "amliq/params.hpp"

using namespace amliq;

namespace {

// Log-price GBM path with the same drift convention as gbm_loglik
// (mu*dt is the mean log-return).
std::vector<double> synthetic_gbm(double s0, double mu, double sigma, double dt,
                                  int n, std::uint64_t seed) {
    NormalSource src(seed);
    std::vector<double> prices(static_cast<size_t>(n));
    prices[0] = s0;
    for (int t = 1; t < n; ++t)
        prices[static_cast<size_t>(t)] =
            prices[static_cast<size_t>(t) - 1] *
            std::exp(mu * dt + sigma * std::sqrt(dt) * src.next());
    return prices;
}

// Textbook linear Kalman filter specialized to the price-measurement state
// space with zeta = 1 (theta(L) affine in L, transition exactly linear).
// Written in plain scalar 2x2 arithmetic so it shares nothing with the EKF.
double linear_kf_neg_loglik(const std::vector<double>& prices, const ModelParams& th,
                            const SsmConfig& cfg) {
    const double dt = cfg.dt;
    const double kt = th.kappa_for_theta();
    const double R = cfg.meas_noise_var;

    double x0 = prices.front();
    double x1 = th.theta_bar;
    double p00 = 1e-4 * x0 * x0;
    double p01 = 0.0;
    double p11 = th.sigma_L * th.sigma_L / (2.0 * th.alpha);

    double nll = 0.0;
    for (size_t t = 1; t < prices.size(); ++t) {
        const double theta_l = th.theta_bar + th.lambda * kt * x1; // zeta = 1, L > 0
        const double xp0 = x0 * (1.0 + th.mu * dt);
        const double xp1 = x1 + th.alpha * (theta_l - x1) * dt;
        const double f00 = 1.0 + th.mu * dt;
        const double f11 = 1.0 + (th.alpha * th.lambda * kt - th.alpha) * dt;

        const double q00 = xp0 * xp0 *
                           (th.beta * th.beta * xp1 * xp1 + th.sigma_S * th.sigma_S +
                            2.0 * th.rho1 * th.beta * xp1 * th.sigma_S) * dt;
        const double q01 = xp0 * th.sigma_L *
                           (th.beta * xp1 * th.rho3 + th.sigma_S * th.rho2) * dt;
        const double q11 = th.sigma_L * th.sigma_L * dt;

        const double pp00 = f00 * p00 * f00 + q00;
        const double pp01 = f00 * p01 * f11 + q01;
        const double pp11 = f11 * p11 * f11 + q11;

        const double e = prices[t] - xp0; // H = [1, 0]
        const double v = pp00 + R;
        const double k0 = pp00 / v;
        const double k1 = pp01 / v;
        x0 = xp0 + k0 * e;
        x1 = xp1 + k1 * e;

        // Joseph form: (I-KH) PP (I-KH)' + K R K'
        const double a00 = (1.0 - k0) * pp00;
        const double a01 = (1.0 - k0) * pp01;
        const double a10 = -k1 * pp00 + pp01;
        const double a11 = -k1 * pp01 + pp11;
        p00 = a00 * (1.0 - k0) + k0 * k0 * R;
        p01 = -a00 * k1 + a01 + k0 * k1 * R;
        p11 = -a10 * k1 + a11 + k1 * k1 * R;

        nll += 0.5 * (std::log(2.0 * kPi) + std::log(v) + e * e / v);
    }
    return nll;
}

} // namespace

TEST_CASE("GBM maximum likelihood") {
    // exact geometric series: both log-returns are ln(1.05), variance zero
    const GbmFit fit = gbm_mle({100.0, 105.0, 110.25}, 1.0);
    CHECK(fit.mu_hat == doctest::Approx(0.0487901641694320031).epsilon(1e-14));
    CHECK(fit.degenerate);
    CHECK(fit.sigma_hat == 0.0);

    // single flat return: closed-form density value
    CHECK(gbm_loglik({100.0, 100.0}, 1.0 / 252, 0.0, 0.2) ==
          doctest::Approx(3.45521392298513929).epsilon(1e-14));

    CHECK_THROWS_AS(gbm_mle({1.0, 2.0}, 1.0), SeriesTooShort);
    CHECK_THROWS_AS(gbm_loglik({5.0}, 1.0, 0.0, 0.2), SeriesTooShort);
    CHECK_THROWS_AS(gbm_loglik({1.0, -1.0, 1.0}, 1.0, 0.0, 0.2), NonPositivePrice);
    CHECK_THROWS_AS(gbm_loglik({1.0, 2.0}, 1.0, 0.0, 0.0), NonPositiveSigma);
    CHECK_THROWS_AS(gbm_mle({1.0, 2.0, 3.0}, 0.0), NonPositiveInput);
}

TEST_CASE("GBM estimator recovers synthetic parameters within 3 SE") {
    const double mu = 0.1, sigma = 0.25, dt = 1.0 / 252;
    const std::vector<double> prices = synthetic_gbm(100.0, mu, sigma, dt, 2000, 31);
    const GbmFit fit = gbm_mle(prices, dt);
    CHECK_FALSE(fit.degenerate);
    CHECK(std::abs(fit.mu_hat - mu) <= 3.0 * fit.mu_se);
    CHECK(std::abs(fit.sigma_hat - sigma) <= 3.0 * fit.sigma_se);

    // the MLE maximizes the likelihood it reports
    const double at_hat = gbm_loglik(prices, dt, fit.mu_hat, fit.sigma_hat);
    CHECK(at_hat >= gbm_loglik(prices, dt, fit.mu_hat + 0.01, fit.sigma_hat));
    CHECK(at_hat >= gbm_loglik(prices, dt, fit.mu_hat, fit.sigma_hat * 1.01));
}

TEST_CASE("EKF equals the exact Kalman filter on a linear state space") {
    ModelParams p;
    p.zeta = 1.0; // theta(L) affine => exactly linear transition for L > 0
    SsmConfig cfg;
    cfg.measurement = MeasurementKind::price;
    cfg.meas_noise_var = 1e-4;

    std::vector<double> prices;
    for (int t = 0; t < 60; ++t)
        prices.push_back(8.0 * std::exp(0.0005 * t + 0.01 * std::sin(0.9 * t)));

    const FilterOutput ekf = ekf_filter_loglik(prices, p, cfg);
    const double ref = linear_kf_neg_loglik(prices, p, cfg);
    CHECK(ekf.neg_loglik == doctest::Approx(ref).epsilon(1e-8));
    CHECK(ekf.states.size() == prices.size());
}

TEST_CASE("EKF filtered covariances stay PSD") {
    ModelParams p;
    SsmConfig cfg; // default log-price measurement
    const std::vector<double> prices = synthetic_gbm(8.0, 0.05, 0.3, 1.0 / 252, 120, 17);
    const FilterOutput out = ekf_filter_loglik(prices, p, cfg);
    REQUIRE(out.covariances.size() == prices.size());
    for (const auto& c : out.covariances) {
        CHECK(c[0] >= -1e-15);
        CHECK(c[2] >= -1e-15);
        CHECK(c[0] * c[2] - c[1] * c[1] >= -1e-12 * std::max(1.0, c[0] * c[2]));
    }
    CHECK(std::isfinite(out.neg_loglik));

    CHECK_THROWS_AS(ekf_filter_loglik({}, p, cfg), EmptyInput);
    CHECK_THROWS_AS(ekf_filter_loglik({1.0, -2.0}, p, cfg), NonPositivePrice);
    SsmConfig bad = cfg;
    bad.meas_noise_var = 0.0;
    CHECK_THROWS_AS(ekf_filter_loglik(prices, p, bad), NonPositiveInput);
}

TEST_CASE("parameter vector round trip") {
    ModelParams p;
    p.mu = 0.07;
    p.alpha = 3.5;
    p.rho3 = -0.2;
    p.zeta = 0.8;
    const std::array<double, kThetaDim> theta = params_to_theta(p);
    const ModelParams q = theta_to_params(theta, ModelParams{});
    CHECK(q.mu == p.mu);
    CHECK(q.alpha == p.alpha);
    CHECK(q.beta == p.beta);
    CHECK(q.theta_bar == p.theta_bar);
    CHECK(q.sigma_S == p.sigma_S);
    CHECK(q.sigma_L == p.sigma_L);
    CHECK(q.rho1 == p.rho1);
    CHECK(q.rho2 == p.rho2);
    CHECK(q.rho3 == p.rho3);
    CHECK(q.lambda == p.lambda);
    CHECK(q.zeta == p.zeta);
    // contract terms come from the base record, not the vector
    CHECK(q.K == 10.0);
}

TEST_CASE("Nelder-Mead on a quadratic bowl") {
    std::array<double, kThetaDim> target{};
    for (int k = 0; k < kThetaDim; ++k) target[static_cast<size_t>(k)] = 0.3 + 0.05 * k;
    auto bowl = [&target](const std::array<double, kThetaDim>& th) {
        double acc = 0.0;
        for (int k : {0, 1, 4}) {
            const double d = th[static_cast<size_t>(k)] - target[static_cast<size_t>(k)];
            acc += (1.0 + k) * d * d;
        }
        return acc;
    };
    std::array<double, kThetaDim> init{}, lower{}, upper{};
    std::array<bool, kThetaDim> fixed{};
    fixed.fill(true);
    for (int k : {0, 1, 4}) fixed[static_cast<size_t>(k)] = false;
    for (int k = 0; k < kThetaDim; ++k) {
        init[static_cast<size_t>(k)] = 1.0;
        lower[static_cast<size_t>(k)] = -5.0;
        upper[static_cast<size_t>(k)] = 5.0;
    }

    const OptimResult res = maximize_loglik(bowl, init, lower, upper, fixed);
    CHECK(res.converged);
    for (int k : {0, 1, 4})
        CHECK(res.theta[static_cast<size_t>(k)] ==
              doctest::Approx(target[static_cast<size_t>(k)]).epsilon(1e-4));
    CHECK(res.theta[2] == 1.0); // fixed coordinates never move
    CHECK(res.evaluations > 0);

    OptimOptions tiny;
    tiny.max_evaluations = 5;
    const OptimResult starved = maximize_loglik(bowl, init, lower, upper, fixed, tiny);
    CHECK_FALSE(starved.converged);
    CHECK(starved.evaluations <= 12); // budget plus at most one in-flight NM move

    std::array<double, kThetaDim> outside = init;
    outside[0] = 7.0;
    CHECK_THROWS_AS(maximize_loglik(bowl, outside, lower, upper, fixed), Error);
}

TEST_CASE("Nelder-Mead recovers the GBM MLE") {
    const double dt = 1.0 / 252;
    const std::vector<double> prices = synthetic_gbm(50.0, 0.08, 0.2, dt, 800, 4);
    const GbmFit fit = gbm_mle(prices, dt);

    // free (mu, sigma_S), everything else pinned
    auto objective = [&prices, dt](const std::array<double, kThetaDim>& th) {
        return -gbm_loglik(prices, dt, th[0], th[4]);
    };
    std::array<double, kThetaDim> init = params_to_theta(ModelParams{});
    std::array<double, kThetaDim> lower{}, upper{};
    std::array<bool, kThetaDim> fixed{};
    fixed.fill(true);
    fixed[0] = fixed[4] = false;
    for (int k = 0; k < kThetaDim; ++k) {
        lower[static_cast<size_t>(k)] = -2.0;
        upper[static_cast<size_t>(k)] = 5.0;
    }
    lower[4] = 1e-4;

    const OptimResult res = maximize_loglik(objective, init, lower, upper, fixed);
    CHECK(res.converged);
    CHECK(res.theta[0] == doctest::Approx(fit.mu_hat).epsilon(1e-4));
    CHECK(res.theta[4] == doctest::Approx(fit.sigma_hat).epsilon(1e-4));
    CHECK(res.neg_loglik ==
          doctest::Approx(-gbm_loglik(prices, dt, fit.mu_hat, fit.sigma_hat)).epsilon(1e-6));
}

TEST_CASE("liquidity-model calibration smoke") {
    ModelParams truth;
    truth.mu = 0.05;
    SimulateOptions sim;
    sim.s0 = 100.0;
    sim.l0 = truth.theta_bar;
    sim.keep_paths = true;
    const PathBatch batch = simulate_paths(truth, 1, 252, 11, Measure::physical, sim);
    const std::vector<double>& prices = batch.s_paths[0];

    CalibrateOptions opt;
    opt.optim.max_evaluations = 400;
    opt.optim.restarts = 0;
    const CalibrationResult res = calibrate_liquidity_model(prices, ModelParams{}, opt);
    CHECK(std::isfinite(res.neg_loglik));
    CHECK(res.evaluations > 0);
    CHECK(res.theta_hat[9] == 5.0);  // lambda pinned
    CHECK(res.theta_hat[10] == 0.5); // zeta pinned
    CHECK(res.filtered_states.size() == prices.size());
    CHECK(res.std_errors.empty());
}

TEST_CASE("moneyness buckets and RMSE") {
    CHECK(bucket_moneyness(10.4, 10.0) == Moneyness::OTM); // put: high spot is out
    CHECK(bucket_moneyness(10.0, 10.0) == Moneyness::ATM);
    CHECK(bucket_moneyness(10.29, 10.0) == Moneyness::ATM);
    CHECK(bucket_moneyness(9.71, 10.0) == Moneyness::ATM);
    CHECK(bucket_moneyness(9.6, 10.0) == Moneyness::ITM);
    CHECK(moneyness_name(Moneyness::OTM) == "OTM");
    CHECK_THROWS_AS(bucket_moneyness(0.0, 10.0), NonPositiveInput);
    CHECK_THROWS_AS(bucket_moneyness(10.0, -1.0), NonPositiveInput);

    CHECK(rmse({0.0, 0.0}, {3.0, 4.0}) ==
          doctest::Approx(3.53553390593273762).epsilon(1e-15));
    CHECK(rmse({1.0, 2.0}, {1.0, 2.0}) == 0.0);
    CHECK_THROWS_AS(rmse({1.0}, {1.0, 2.0}), LengthMismatch);
    CHECK_THROWS_AS(rmse({}, {}), EmptyInput);
}
