#include "amliq/pipeline.hpp"

#include "amliq/adi.hpp"
#include "amliq/export_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>

namespace amliq {

namespace {

// smallest n_t keeping the explicit L=0 row of the ADI step comfortably
// inside its stability region
int stable_n_t(int requested, double t_years, double sigma_s, int n_s) {
    const double limit = 0.9;
    const double need = t_years * sigma_s * sigma_s * (n_s - 1) * (n_s - 1) / limit;
    return std::max(requested, static_cast<int>(std::ceil(need)) + 1);
}

// GBM-with-transaction-costs benchmark: the same engine with the liquidity
// channel switched off (beta ~ 0, sigma_L = 0, alpha = 0), so the cost term
// reduces to the classical sqrt(2/(pi*dt))*kappa*sigma*S^2*|V_SS| correction.
ModelParams benchmark_params(const ModelParams& base, double sigma_hat, double kappa) {
    ModelParams p = base;
    p.beta = 1e-12;
    p.sigma_L = 0.0;
    p.alpha = 0.0;
    p.theta_bar = 1e-6;
    p.sigma_S = sigma_hat;
    p.rho1 = p.rho2 = p.rho3 = 0.0;
    p.kappa = kappa;
    p.kappa_theta = std::numeric_limits<double>::quiet_NaN();
    return p;
}

double price_quote(const ModelParams& p_in, double spot, double l0, double strike,
                   double ttm, Side side, const EvaluateOptions& opt) {
    ModelParams p = p_in;
    p.K = strike;
    p.T = ttm;
    const int n_t = stable_n_t(opt.n_t, ttm, p.sigma_S, opt.n_s);
    const Grid g = build_grid(opt.n_s, opt.n_l, n_t, p, opt.s_max_mult, opt.l_max);
    AdiOptions aopt;
    if (side == Side::holder) {
        return price_holder(p, g, aopt).price_at(spot, std::clamp(l0, 0.0, g.l_max));
    }
    const PricingResult h = price_holder(p, g, aopt);
    return price_writer(p, g, h.boundary, aopt).price_at(spot, std::clamp(l0, 0.0, g.l_max));
}

} // namespace

std::vector<WindowFit> calibrate_pipeline(const FuturesSeries& futures,
                                          const ModelParams& base,
                                          const CalibratePipelineOptions& opt) {
    std::vector<FuturesSeries> windows;
    try {
        windows = build_windows(futures, opt.window_len, opt.shift, opt.n_windows);
    } catch (const SeriesTooShort&) {
        if (!opt.allow_single_window || futures.size() < 30) throw;
        windows.push_back(futures);
    }

    CalibrateOptions copt = opt.calibrate;
    copt.ssm.dt = opt.dt;

    std::vector<WindowFit> fits;
    fits.reserve(windows.size());
    for (size_t w = 0; w < windows.size(); ++w) {
        const FuturesSeries& win = windows[w];
        WindowFit fit;
        fit.window_index = static_cast<int>(w);
        fit.start = win.dates.front();
        fit.end = win.dates.back();
        fit.gbm = gbm_mle(win.closes, opt.dt);
        fit.gbm_neg_loglik =
            fit.gbm.degenerate
                ? std::numeric_limits<double>::quiet_NaN()
                : -gbm_loglik(win.closes, opt.dt, fit.gbm.mu_hat, fit.gbm.sigma_hat);
        fit.liquidity = calibrate_liquidity_model(win.closes, base, copt);
        fits.push_back(std::move(fit));
    }
    return fits;
}

EvaluationReport evaluate_pipeline(const FuturesSeries& futures,
                                   const std::vector<OptionQuote>& quotes,
                                   const WindowFit& fit, const ModelParams& base,
                                   const EvaluateOptions& opt) {
    if (futures.size() == 0) throw EmptyInput("evaluate_pipeline: empty futures series");

    const ModelParams p_fit = theta_to_params(fit.liquidity.theta_hat, base);
    ModelParams p_model = p_fit;
    p_model.kappa = opt.kappa;
    p_model.kappa_theta = p_fit.kappa_for_theta(); // keep theta(L) as calibrated

    const double sigma_hat = fit.gbm.degenerate ? p_fit.sigma_S : fit.gbm.sigma_hat;
    const ModelParams p_bench = benchmark_params(base, sigma_hat, opt.kappa);

    // filtered liquidity path over the full series under the fitted model
    SsmConfig ssm = {};
    ssm.dt = 1.0 / 252.0;
    std::vector<std::array<double, 2>> states;
    try {
        states = ekf_filter_loglik(futures.closes, p_fit, ssm).states;
    } catch (const Error&) {
        states.assign(futures.size(), {0.0, p_fit.theta_bar});
    }

    EvaluationReport rep;
    std::array<std::vector<double>, 4> model_v, bench_v, actual_v; // All,OTM,ITM,ATM
    for (const OptionQuote& q : quotes) {
        if (q.volume < opt.min_volume) continue;
        QuoteEvaluation row;
        row.quote = q;
        row.ttm_years = static_cast<double>(days_between(q.date, q.expiry)) / 365.0;
        if (row.ttm_years <= 0.0) continue;
        const double spot = q.underlying_close;
        row.bucket = bucket_moneyness(spot, q.strike);

        // filtered L at the latest futures date <= quote date
        auto it = std::upper_bound(futures.dates.begin(), futures.dates.end(), q.date);
        const size_t idx = (it == futures.dates.begin())
                               ? 0
                               : static_cast<size_t>(std::distance(futures.dates.begin(), it)) - 1;
        row.l0_used = states[idx][1];

        row.model_price = price_quote(p_model, spot, row.l0_used, q.strike,
                                      row.ttm_years, opt.side, opt);
        row.benchmark_price = price_quote(p_bench, spot, 0.0, q.strike,
                                          row.ttm_years, opt.side, opt);

        const int bucket_slot = (row.bucket == Moneyness::OTM)   ? 1
                                : (row.bucket == Moneyness::ITM) ? 2
                                                                 : 3;
        for (int slot : {0, bucket_slot}) {
            model_v[static_cast<size_t>(slot)].push_back(row.model_price);
            bench_v[static_cast<size_t>(slot)].push_back(row.benchmark_price);
            actual_v[static_cast<size_t>(slot)].push_back(q.price);
        }
        rep.rows.push_back(std::move(row));
    }

    for (int slot = 0; slot < 4; ++slot) {
        rep.counts[static_cast<size_t>(slot)] =
            static_cast<int>(actual_v[static_cast<size_t>(slot)].size());
        if (rep.counts[static_cast<size_t>(slot)] > 0) {
            rep.model_rmse[static_cast<size_t>(slot)] =
                rmse(model_v[static_cast<size_t>(slot)], actual_v[static_cast<size_t>(slot)]);
            rep.benchmark_rmse[static_cast<size_t>(slot)] =
                rmse(bench_v[static_cast<size_t>(slot)], actual_v[static_cast<size_t>(slot)]);
        } else {
            rep.model_rmse[static_cast<size_t>(slot)] = std::numeric_limits<double>::quiet_NaN();
            rep.benchmark_rmse[static_cast<size_t>(slot)] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return rep;
}

std::string calibrate_report_json(const std::vector<WindowFit>& fits) {
    nlohmann::json out = nlohmann::json::array();
    for (const WindowFit& fit : fits) {
        nlohmann::json jw;
        jw["window"] = fit.window_index;
        jw["start"] = format_date(fit.start);
        jw["end"] = format_date(fit.end);
        jw["gbm"] = {{"mu", fit.gbm.mu_hat},
                     {"sigma", fit.gbm.sigma_hat},
                     {"mu_se", fit.gbm.mu_se},
                     {"sigma_se", fit.gbm.sigma_se},
                     {"degenerate", fit.gbm.degenerate},
                     {"neg_loglik", fit.gbm_neg_loglik}};
        nlohmann::json params = nlohmann::json::array();
        for (int k = 0; k < kThetaDim; ++k) {
            nlohmann::json jp;
            jp["parameter"] = kThetaNames[static_cast<size_t>(k)];
            jp["estimate"] = fit.liquidity.theta_hat[static_cast<size_t>(k)];
            if (!fit.liquidity.std_errors.empty() &&
                fit.liquidity.std_errors[static_cast<size_t>(k)] > 0.0) {
                jp["std_error"] = fit.liquidity.std_errors[static_cast<size_t>(k)];
                jp["t_stat"] = fit.liquidity.theta_hat[static_cast<size_t>(k)] /
                               fit.liquidity.std_errors[static_cast<size_t>(k)];
            }
            params.push_back(std::move(jp));
        }
        jw["liquidity"] = {{"parameters", std::move(params)},
                           {"neg_loglik", fit.liquidity.neg_loglik},
                           {"converged", fit.liquidity.converged},
                           {"evaluations", fit.liquidity.evaluations}};
        out.push_back(std::move(jw));
    }
    return out.dump(2);
}

std::string evaluation_report_json(const EvaluationReport& rep) {
    static const char* kBucketNames[4] = {"all", "otm", "itm", "atm"};
    nlohmann::json out;
    for (int slot = 0; slot < 4; ++slot) {
        nlohmann::json jb;
        jb["count"] = rep.counts[static_cast<size_t>(slot)];
        if (rep.counts[static_cast<size_t>(slot)] > 0) {
            jb["model_rmse"] = rep.model_rmse[static_cast<size_t>(slot)];
            jb["benchmark_rmse"] = rep.benchmark_rmse[static_cast<size_t>(slot)];
        }
        out["buckets"][kBucketNames[slot]] = std::move(jb);
    }
    nlohmann::json rows = nlohmann::json::array();
    for (const QuoteEvaluation& row : rep.rows) {
        rows.push_back({{"date", format_date(row.quote.date)},
                        {"strike", row.quote.strike},
                        {"expiry", format_date(row.quote.expiry)},
                        {"market", row.quote.price},
                        {"model", row.model_price},
                        {"benchmark", row.benchmark_price},
                        {"bucket", moneyness_name(row.bucket)},
                        {"l0", row.l0_used},
                        {"ttm_years", row.ttm_years}});
    }
    out["quotes"] = std::move(rows);
    return out.dump(2);
}

} // namespace amliq
