#include "amliq/calibration.hpp"

#include "amliq/mc.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace amliq {

namespace {

std::vector<double> log_returns(const std::vector<double>& prices) {
    if (prices.size() < 2) throw SeriesTooShort("need at least 2 prices");
    std::vector<double> x(prices.size() - 1);
    for (size_t t = 0; t < x.size(); ++t) {
        if (!(prices[t] > 0.0) || !(prices[t + 1] > 0.0))
            throw NonPositivePrice("price series must be strictly positive");
        x[t] = std::log(prices[t + 1] / prices[t]);
    }
    return x;
}

} // namespace

double gbm_loglik(const std::vector<double>& prices, double dt, double mu, double sigma) {
    if (!(sigma > 0.0)) throw NonPositiveSigma("gbm_loglik: sigma must be > 0");
    if (!(dt > 0.0)) throw NonPositiveInput("gbm_loglik: dt must be > 0");
    const std::vector<double> x = log_returns(prices);
    const double v = sigma * sigma * dt;
    double ll = 0.0;
    for (double xt : x) {
        const double resid = xt - mu * dt;
        ll += -0.5 * (std::log(2.0 * kPi * v) + resid * resid / v);
    }
    return ll;
}

GbmFit gbm_mle(const std::vector<double>& prices, double dt) {
    if (prices.size() < 3) throw SeriesTooShort("gbm_mle: need at least 3 prices");
    if (!(dt > 0.0)) throw NonPositiveInput("gbm_mle: dt must be > 0");
    const std::vector<double> x = log_returns(prices);
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double s2 = 0.0;
    for (double xt : x) s2 += (xt - mean) * (xt - mean);
    s2 /= n; // MLE normalization

    GbmFit fit;
    fit.mu_hat = mean / dt;
    if (s2 == 0.0) {
        fit.degenerate = true;
        fit.sigma_hat = 0.0;
        return fit;
    }
    fit.sigma_hat = std::sqrt(s2 / dt);
    fit.mu_se = fit.sigma_hat / std::sqrt(n * dt);
    fit.sigma_se = fit.sigma_hat / std::sqrt(2.0 * n);
    return fit;
}

// ---------------------------------------------------------------- EKF ----

namespace {

// symmetrize and clamp negative eigenvalues of a 2x2 covariance to zero
void psd_clamp(Eigen::Matrix2d& p) {
    p = 0.5 * (p + p.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(p);
    const Eigen::Vector2d ev = es.eigenvalues();
    if (ev(0) >= 0.0) return;
    Eigen::Vector2d cl = ev.cwiseMax(0.0);
    p = es.eigenvectors() * cl.asDiagonal() * es.eigenvectors().transpose();
}

} // namespace

FilterOutput ekf_filter_loglik(const std::vector<double>& prices,
                               const ModelParams& theta, const SsmConfig& cfg) {
    if (prices.empty()) throw EmptyInput("ekf_filter_loglik: no observations");
    if (!(cfg.meas_noise_var > 0.0))
        throw NonPositiveInput("ekf_filter_loglik: measurement noise must be > 0");
    for (double pr : prices)
        if (!(pr > 0.0)) throw NonPositivePrice("ekf_filter_loglik: prices must be positive");
    validate_params(theta);

    const double dt = cfg.dt;
    const double kt = theta.kappa_for_theta();
    const double r_meas = cfg.meas_noise_var;
    const bool log_meas = (cfg.measurement == MeasurementKind::log_price);

    Eigen::Vector2d x;
    x(0) = prices.front();
    x(1) = std::isnan(cfg.init_l) ? theta.theta_bar : cfg.init_l;
    Eigen::Matrix2d p = Eigen::Matrix2d::Zero();
    p(0, 0) = 1e-4 * x(0) * x(0);
    p(1, 1) = theta.alpha > 1e-12 ? theta.sigma_L * theta.sigma_L / (2.0 * theta.alpha)
                                  : theta.sigma_L * theta.sigma_L;

    FilterOutput out;
    out.states.reserve(prices.size());
    out.covariances.reserve(prices.size());
    out.states.push_back({x(0), x(1)});
    out.covariances.push_back({p(0, 0), p(0, 1), p(1, 1)});

    const double eps_l = 1e-8;
    for (size_t t = 1; t < prices.size(); ++t) {
        // predict
        const double l_abs = std::max(std::abs(x(1)), eps_l);
        const double th = theta.theta_bar + theta.lambda * kt * std::pow(l_abs, theta.zeta);
        Eigen::Vector2d xp;
        xp(0) = x(0) * (1.0 + theta.mu * dt);
        xp(1) = x(1) + theta.alpha * (th - x(1)) * dt;

        const double sgn_l = (x(1) >= 0.0) ? 1.0 : -1.0;
        const double dtheta_dl =
            theta.lambda * kt * theta.zeta * std::pow(l_abs, theta.zeta - 1.0) * sgn_l;
        Eigen::Matrix2d f = Eigen::Matrix2d::Identity();
        f(0, 0) = 1.0 + theta.mu * dt;
        f(1, 1) = 1.0 + (theta.alpha * dtheta_dl - theta.alpha) * dt;

        // state-dependent process noise at the predicted state
        const double sp = xp(0), lp = xp(1);
        Eigen::Matrix2d q;
        q(0, 0) = sp * sp *
                  (theta.beta * theta.beta * lp * lp + theta.sigma_S * theta.sigma_S +
                   2.0 * theta.rho1 * theta.beta * lp * theta.sigma_S) * dt;
        q(0, 1) = sp * theta.sigma_L * (theta.beta * lp * theta.rho3 + theta.sigma_S * theta.rho2) * dt;
        q(1, 0) = q(0, 1);
        q(1, 1) = theta.sigma_L * theta.sigma_L * dt;

        Eigen::Matrix2d pp = f * p * f.transpose() + q;
        psd_clamp(pp);

        // update (scalar measurement)
        double h_val;
        Eigen::RowVector2d h_jac = Eigen::RowVector2d::Zero();
        if (log_meas) {
            if (!(sp > 0.0)) throw DivergedFilter("predicted price is non-positive");
            h_val = std::log(sp);
            h_jac(0) = 1.0 / sp;
        } else {
            h_val = sp;
            h_jac(0) = 1.0;
        }
        const double y = log_meas ? std::log(prices[t]) : prices[t];
        const double e = y - h_val;
        const double v = (h_jac * pp * h_jac.transpose())(0) + r_meas;
        if (!(v > 0.0) || !std::isfinite(v))
            throw InnovationCovSingular("innovation covariance is not positive");

        const Eigen::Vector2d k = pp * h_jac.transpose() / v;
        x = xp + k * e;
        const Eigen::Matrix2d ikh = Eigen::Matrix2d::Identity() - k * h_jac;
        p = ikh * pp * ikh.transpose() + k * r_meas * k.transpose(); // Joseph form
        psd_clamp(p);

        out.neg_loglik += 0.5 * (std::log(2.0 * kPi) + std::log(v) + e * e / v);
        if (!std::isfinite(out.neg_loglik) || x.norm() > 1e12)
            throw DivergedFilter("filter state diverged");
        out.states.push_back({x(0), x(1)});
        out.covariances.push_back({p(0, 0), p(0, 1), p(1, 1)});
    }
    return out;
}

// ------------------------------------------------------ parameter maps ----

std::array<double, kThetaDim> params_to_theta(const ModelParams& p) {
    return {p.mu, p.alpha, p.beta, p.theta_bar, p.sigma_S, p.sigma_L,
            p.rho1, p.rho2, p.rho3, p.lambda, p.zeta};
}

ModelParams theta_to_params(const std::array<double, kThetaDim>& theta,
                            const ModelParams& base) {
    ModelParams p = base;
    p.mu = theta[0];
    p.alpha = theta[1];
    p.beta = theta[2];
    p.theta_bar = theta[3];
    p.sigma_S = theta[4];
    p.sigma_L = theta[5];
    p.rho1 = theta[6];
    p.rho2 = theta[7];
    p.rho3 = theta[8];
    p.lambda = theta[9];
    p.zeta = theta[10];
    return p;
}

// ------------------------------------------------------------ optimizer ----

namespace {

constexpr double kBadObjective = 1e300;

double guarded_eval(const std::function<double(const std::array<double, kThetaDim>&)>& fn,
                    const std::array<double, kThetaDim>& theta, int& evals) {
    ++evals;
    try {
        const double v = fn(theta);
        return std::isfinite(v) ? v : kBadObjective;
    } catch (const std::exception&) {
        return kBadObjective;
    }
}

} // namespace

OptimResult maximize_loglik(
    const std::function<double(const std::array<double, kThetaDim>&)>& neg_loglik,
    const std::array<double, kThetaDim>& init,
    const std::array<double, kThetaDim>& lower,
    const std::array<double, kThetaDim>& upper,
    const std::array<bool, kThetaDim>& fixed_mask, const OptimOptions& opt) {
    std::vector<int> free_idx;
    for (int k = 0; k < kThetaDim; ++k) {
        if (lower[static_cast<size_t>(k)] > upper[static_cast<size_t>(k)])
            throw Error("maximize_loglik: lower bound exceeds upper bound");
        if (init[static_cast<size_t>(k)] < lower[static_cast<size_t>(k)] ||
            init[static_cast<size_t>(k)] > upper[static_cast<size_t>(k)])
            throw Error(std::string("maximize_loglik: init outside bounds for ") +
                        kThetaNames[static_cast<size_t>(k)]);
        if (!fixed_mask[static_cast<size_t>(k)]) free_idx.push_back(k);
    }

    const int m = static_cast<int>(free_idx.size());
    int evals = 0;
    OptimResult res;
    res.theta = init;
    if (m == 0) {
        res.neg_loglik = guarded_eval(neg_loglik, init, evals);
        res.converged = true;
        res.evaluations = evals;
        return res;
    }

    auto embed = [&](const std::vector<double>& z) {
        std::array<double, kThetaDim> full = res.theta;
        for (int k = 0; k < m; ++k) {
            const int q = free_idx[static_cast<size_t>(k)];
            full[static_cast<size_t>(q)] =
                std::clamp(z[static_cast<size_t>(k)], lower[static_cast<size_t>(q)],
                           upper[static_cast<size_t>(q)]);
        }
        return full;
    };
    auto clamp_free = [&](std::vector<double>& z) {
        for (int k = 0; k < m; ++k) {
            const int q = free_idx[static_cast<size_t>(k)];
            z[static_cast<size_t>(k)] = std::clamp(
                z[static_cast<size_t>(k)], lower[static_cast<size_t>(q)], upper[static_cast<size_t>(q)]);
        }
    };

    std::uint64_t rng_state = opt.seed;
    auto jitter = [&]() { // uniform in [0.75, 1.25)
        return 0.75 + 0.5 * (static_cast<double>(splitmix64(rng_state) >> 11) * 0x1.0p-53);
    };

    std::vector<double> best(static_cast<size_t>(m));
    for (int k = 0; k < m; ++k)
        best[static_cast<size_t>(k)] = init[static_cast<size_t>(free_idx[static_cast<size_t>(k)])];
    double best_f = guarded_eval(neg_loglik, embed(best), evals);
    bool converged = false;

    double scale = opt.init_scale;
    for (int round = 0; round <= opt.restarts && evals < opt.max_evaluations; ++round) {
        // simplex around the incumbent
        std::vector<std::vector<double>> sx(static_cast<size_t>(m) + 1, best);
        std::vector<double> fx(static_cast<size_t>(m) + 1);
        fx[0] = best_f;
        for (int k = 1; k <= m; ++k) {
            const int q = free_idx[static_cast<size_t>(k - 1)];
            double step = scale * std::max(std::abs(best[static_cast<size_t>(k - 1)]), 0.1) * jitter();
            if (best[static_cast<size_t>(k - 1)] + step > upper[static_cast<size_t>(q)]) step = -step;
            sx[static_cast<size_t>(k)][static_cast<size_t>(k - 1)] += step;
            clamp_free(sx[static_cast<size_t>(k)]);
            fx[static_cast<size_t>(k)] = guarded_eval(neg_loglik, embed(sx[static_cast<size_t>(k)]), evals);
            if (evals >= opt.max_evaluations) break;
        }

        while (evals < opt.max_evaluations) {
            // order
            std::vector<size_t> ord(sx.size());
            std::iota(ord.begin(), ord.end(), size_t{0});
            std::sort(ord.begin(), ord.end(),
                      [&](size_t a, size_t b) { return fx[a] < fx[b]; });
            const size_t ibest = ord.front(), iworst = ord.back(), isecond = ord[ord.size() - 2];

            // relative simplex diameter
            double diam = 0.0, ref = 1.0;
            for (int k = 0; k < m; ++k)
                ref = std::max(ref, std::abs(sx[ibest][static_cast<size_t>(k)]));
            for (size_t vtx = 0; vtx < sx.size(); ++vtx)
                for (int k = 0; k < m; ++k)
                    diam = std::max(diam, std::abs(sx[vtx][static_cast<size_t>(k)] -
                                                   sx[ibest][static_cast<size_t>(k)]));
            if (diam / ref < opt.rel_diameter_tol) {
                converged = true;
                break;
            }

            std::vector<double> centroid(static_cast<size_t>(m), 0.0);
            for (size_t vtx = 0; vtx < sx.size(); ++vtx) {
                if (vtx == iworst) continue;
                for (int k = 0; k < m; ++k)
                    centroid[static_cast<size_t>(k)] += sx[vtx][static_cast<size_t>(k)];
            }
            for (int k = 0; k < m; ++k) centroid[static_cast<size_t>(k)] /= m;

            auto blend = [&](double coef) {
                std::vector<double> z(static_cast<size_t>(m));
                for (int k = 0; k < m; ++k)
                    z[static_cast<size_t>(k)] = centroid[static_cast<size_t>(k)] +
                                                coef * (centroid[static_cast<size_t>(k)] -
                                                        sx[iworst][static_cast<size_t>(k)]);
                clamp_free(z);
                return z;
            };

            std::vector<double> xr = blend(1.0);
            const double fr = guarded_eval(neg_loglik, embed(xr), evals);
            if (fr < fx[ibest]) {
                std::vector<double> xe = blend(2.0);
                const double fe = guarded_eval(neg_loglik, embed(xe), evals);
                if (fe < fr) { sx[iworst] = xe; fx[iworst] = fe; }
                else { sx[iworst] = xr; fx[iworst] = fr; }
            } else if (fr < fx[isecond]) {
                sx[iworst] = xr;
                fx[iworst] = fr;
            } else {
                const bool outside = fr < fx[iworst];
                std::vector<double> xc = blend(outside ? 0.5 : -0.5);
                const double fc = guarded_eval(neg_loglik, embed(xc), evals);
                if (fc < std::min(fr, fx[iworst])) {
                    sx[iworst] = xc;
                    fx[iworst] = fc;
                } else { // shrink toward the best vertex
                    for (size_t vtx = 0; vtx < sx.size(); ++vtx) {
                        if (vtx == ibest) continue;
                        for (int k = 0; k < m; ++k)
                            sx[vtx][static_cast<size_t>(k)] =
                                0.5 * (sx[vtx][static_cast<size_t>(k)] +
                                       sx[ibest][static_cast<size_t>(k)]);
                        fx[vtx] = guarded_eval(neg_loglik, embed(sx[vtx]), evals);
                        if (evals >= opt.max_evaluations) break;
                    }
                }
            }
        }

        // fold the round's best vertex into the incumbent
        for (size_t vtx = 0; vtx < sx.size(); ++vtx)
            if (fx[vtx] < best_f) { best_f = fx[vtx]; best = sx[vtx]; }
        scale *= 0.25; // tighter simplex on each restart
    }

    const std::array<double, kThetaDim> full = embed(best);
    res.theta = full;
    res.neg_loglik = best_f;
    res.converged = converged;
    res.evaluations = evals;
    return res;
}

// ----------------------------------------------------------- calibration ----

CalibrationResult calibrate_liquidity_model(const std::vector<double>& prices,
                                            const ModelParams& base,
                                            const CalibrateOptions& opt) {
    const GbmFit gbm = gbm_mle(prices, opt.ssm.dt);

    ModelParams start = base;
    start.mu = gbm.mu_hat;
    if (!gbm.degenerate && gbm.sigma_hat > 1e-6) start.sigma_S = gbm.sigma_hat;

    std::array<double, kThetaDim> init = params_to_theta(start);
    std::array<double, kThetaDim> lower = {-2.0, 1e-4, 1e-6, 1e-6, 1e-6, 1e-8,
                                           -0.99, -0.99, -0.99, 0.0, 0.05};
    std::array<double, kThetaDim> upper = {2.0, 50.0, 20.0, 10.0, 5.0, 5.0,
                                           0.99, 0.99, 0.99, 100.0, 1.0};
    for (int k = 0; k < kThetaDim; ++k)
        init[static_cast<size_t>(k)] = std::clamp(init[static_cast<size_t>(k)],
                                                  lower[static_cast<size_t>(k)],
                                                  upper[static_cast<size_t>(k)]);
    std::array<bool, kThetaDim> fixed{};
    if (opt.fix_lambda_zeta) {
        fixed[9] = true;  // lambda
        fixed[10] = true; // zeta
    }

    const SsmConfig ssm = opt.ssm;
    auto objective = [&prices, &base, &ssm](const std::array<double, kThetaDim>& th) {
        const ModelParams p = theta_to_params(th, base);
        return ekf_filter_loglik(prices, p, ssm).neg_loglik;
    };

    const OptimResult best = maximize_loglik(objective, init, lower, upper, fixed, opt.optim);

    CalibrationResult out;
    out.theta_hat = best.theta;
    out.neg_loglik = best.neg_loglik;
    out.converged = best.converged;
    out.evaluations = best.evaluations;
    try {
        out.filtered_states =
            ekf_filter_loglik(prices, theta_to_params(best.theta, base), ssm).states;
    } catch (const std::exception&) {
        // leave states empty when the optimum is on a degenerate edge
    }

    if (opt.compute_std_errors) {
        std::vector<int> free_idx;
        for (int k = 0; k < kThetaDim; ++k)
            if (!fixed[static_cast<size_t>(k)]) free_idx.push_back(k);
        const int m = static_cast<int>(free_idx.size());
        int dummy = 0;
        auto f0 = [&](const std::array<double, kThetaDim>& th) {
            return guarded_eval(objective, th, dummy);
        };
        Eigen::MatrixXd hess(m, m);
        bool ok = true;
        const double fc = f0(best.theta);
        for (int aa = 0; aa < m && ok; ++aa) {
            for (int bb = aa; bb < m && ok; ++bb) {
                const int qa = free_idx[static_cast<size_t>(aa)];
                const int qb = free_idx[static_cast<size_t>(bb)];
                const double ha = 1e-4 * std::max(1.0, std::abs(best.theta[static_cast<size_t>(qa)]));
                const double hb = 1e-4 * std::max(1.0, std::abs(best.theta[static_cast<size_t>(qb)]));
                auto shifted = [&](double da, double db) {
                    std::array<double, kThetaDim> th = best.theta;
                    th[static_cast<size_t>(qa)] += da;
                    th[static_cast<size_t>(qb)] += db;
                    return f0(th);
                };
                double second;
                if (aa == bb) {
                    second = (shifted(ha, 0.0) - 2.0 * fc + shifted(-ha, 0.0)) / (ha * ha);
                } else {
                    second = (shifted(ha, hb) - shifted(ha, -hb) - shifted(-ha, hb) +
                              shifted(-ha, -hb)) / (4.0 * ha * hb);
                }
                if (!std::isfinite(second) || std::abs(second) >= kBadObjective) ok = false;
                hess(aa, bb) = second;
                hess(bb, aa) = second;
            }
        }
        if (ok) {
            const Eigen::MatrixXd cov = hess.fullPivLu().solve(Eigen::MatrixXd::Identity(m, m));
            out.std_errors.assign(static_cast<size_t>(kThetaDim), 0.0);
            for (int aa = 0; aa < m; ++aa) {
                const double vv = cov(aa, aa);
                out.std_errors[static_cast<size_t>(free_idx[static_cast<size_t>(aa)])] =
                    vv > 0.0 ? std::sqrt(vv) : 0.0;
            }
        }
    }
    return out;
}

// ------------------------------------------------------------- evaluation ----

Moneyness bucket_moneyness(double s, double k) {
    if (!(s > 0.0) || !(k > 0.0))
        throw NonPositiveInput("bucket_moneyness: s and k must be positive");
    const double ratio = s / k;
    if (ratio > 1.03) return Moneyness::OTM;
    if (ratio < 0.97) return Moneyness::ITM;
    return Moneyness::ATM;
}

std::string moneyness_name(Moneyness m) {
    switch (m) {
        case Moneyness::OTM: return "OTM";
        case Moneyness::ATM: return "ATM";
        case Moneyness::ITM: return "ITM";
    }
    return "?";
}

double rmse(const std::vector<double>& theoretical, const std::vector<double>& actual) {
    if (theoretical.size() != actual.size())
        throw LengthMismatch("rmse: sequences differ in length");
    if (theoretical.empty()) throw EmptyInput("rmse: empty sequences");
    double acc = 0.0;
    for (size_t q = 0; q < theoretical.size(); ++q) {
        const double d = theoretical[q] - actual[q];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(theoretical.size()));
}

} // namespace amliq
