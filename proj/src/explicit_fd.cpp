#include "amliq/explicit_fd.hpp"

#include "amliq/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace amliq {

// Forward Euler on the full operator at level n. All stencils are written
// out locally on purpose: this marcher cross-checks the ADI one, so it
// shares no assembly code with it.
PricingResult price_explicit(const ModelParams& p, const Grid& g, Side side,
                             Style style, const ExerciseBoundary* boundary,
                             const ExplicitOptions& opt) {
    validate_params(p);
    if (g.n_s < 4 || g.n_l < 4 || g.n_t < 2)
        throw GridTooSmall("explicit march needs n_s, n_l >= 4 and n_t >= 2");
    const bool holder_american = (style == Style::american && side == Side::holder);
    const bool writer_american = (style == Style::american && side == Side::writer);
    if (writer_american) {
        if (boundary == nullptr)
            throw Error("explicit writer march needs the holder boundary");
        if (boundary->n_l != g.n_l || boundary->n_t != g.n_t)
            throw LengthMismatch("holder boundary was built on a different grid");
    }
    const auto t0 = std::chrono::steady_clock::now();

    const int ns = g.n_s, nl = g.n_l;
    const double ds = g.delta_s, dl = g.delta_l, dtau = g.delta_tau;
    const double r = p.r, sl = p.sigma_L, sl2 = sl * sl;
    const double a = cost_sign(side);
    const double cost_pref = std::sqrt(2.0 / (kPi * p.delta_t)) * p.kappa;

    std::vector<double> w(static_cast<size_t>(nl));
    for (int j = 0; j < nl; ++j) w[static_cast<size_t>(j)] = l_drift(g.l(j), p);

    PricingResult res;
    res.grid = &g;
    res.degenerate_cfl = dtau * p.sigma_S * p.sigma_S * (ns - 1) * (ns - 1);

    PriceSurface v(ns, nl, side, style, 0);
    for (int i = 0; i < ns; ++i) {
        const double pay = std::max(p.K - g.s(i), 0.0);
        for (int j = 0; j < nl; ++j) v.at(i, j) = pay;
    }
    PriceSurface next = v;

    if (holder_american) {
        res.boundary = ExerciseBoundary(nl, g.n_t);
        for (int j = 0; j < nl; ++j) res.boundary.set(j, 0, p.K, false);
    }

    const double blow_up = 10.0 * p.K;
    for (int n = 0; n + 1 < g.n_t; ++n) {
        const std::vector<double>& vn = v.values;
        std::vector<double>& out = next.values;
        auto at = [&vn, nl](int i, int j) -> double {
            return vn[static_cast<size_t>(i) * nl + j];
        };

        parallel_for(1, ns - 1, opt.jobs, [&](int i) {
            const double di = static_cast<double>(i);
            const double si = g.s(i);
            double* orow = out.data() + static_cast<size_t>(i) * nl;
            for (int j = 1; j < nl - 1; ++j) {
                const double lj = g.l(j);
                const double vc = at(i, j);
                const double vip = at(i + 1, j), vim = at(i - 1, j);
                const double vjp = at(i, j + 1), vjm = at(i, j - 1);
                const double cross = at(i + 1, j + 1) - at(i + 1, j - 1) -
                                     at(i - 1, j + 1) + at(i - 1, j - 1);
                const double d2 = vip - 2.0 * vc + vim;
                const double k0 = di * di * (p.beta * p.beta * lj * lj +
                                             p.sigma_S * p.sigma_S +
                                             2.0 * p.rho1 * p.sigma_S * p.beta * lj);
                const double k1e = di / (4.0 * dl) *
                                   (p.rho3 * sl * p.beta * lj + p.rho2 * p.sigma_S * sl);
                const double k2 = p.beta * di * lj * d2 / ds;
                const double k3 = p.sigma_S * di * d2 / ds;
                const double k4 = sl / (4.0 * ds * dl) * cross;
                const double scale = k2 * k2 + k3 * k3 + k4 * k4;
                const double rad = clamp_radicand(
                    scale + 2.0 * (p.rho1 * k2 * k3 + p.rho2 * k3 * k4 + p.rho3 * k2 * k4),
                    scale);
                const double cost = cost_pref * si * std::sqrt(rad);
                orow[j] = vc + dtau * (0.5 * k0 * d2 + 0.5 * di * r * (vip - vim) +
                                       0.5 * sl2 / (dl * dl) * (vjp - 2.0 * vc + vjm) +
                                       w[static_cast<size_t>(j)] / (2.0 * dl) * (vjp - vjm) +
                                       k1e * cross - r * vc - a * cost);
            }
            // degenerate L = 0 row
            {
                const double vss = (at(i + 1, 0) - 2.0 * at(i, 0) + at(i - 1, 0)) / (ds * ds);
                const double vs = (at(i + 1, 0) - at(i - 1, 0)) / (2.0 * ds);
                const double vll = (2.0 * at(i, 0) - 5.0 * at(i, 1) + 4.0 * at(i, 2) -
                                    at(i, 3)) / (dl * dl);
                const double vl = (-3.0 * at(i, 0) + 4.0 * at(i, 1) - at(i, 2)) / (2.0 * dl);
                const double vsl = (at(i + 1, 1) - at(i + 1, 0) - at(i - 1, 1) +
                                    at(i - 1, 0)) / (2.0 * ds * dl);
                const double psi1 = p.sigma_S * si * vss;
                const double psi2 = sl * vsl;
                const double scale0 = psi1 * psi1 + psi2 * psi2;
                const double rad0 = clamp_radicand(scale0 + 2.0 * p.rho2 * psi1 * psi2, scale0);
                const double cost0 = cost_pref * si * std::sqrt(rad0);
                orow[0] = at(i, 0) + dtau * (p.sigma_S * p.sigma_S * si * si / 2.0 * vss +
                                             sl2 / 2.0 * vll +
                                             p.rho2 * p.sigma_S * sl * si * vsl +
                                             r * si * vs + p.alpha * p.theta_bar * vl -
                                             r * at(i, 0) - a * cost0);
            }
        });

        for (int j = 0; j < nl; ++j) {
            out[static_cast<size_t>(j)] = p.K;
            out[static_cast<size_t>(ns - 1) * nl + j] = 0.0;
        }
        for (int i = 0; i < ns; ++i)
            out[static_cast<size_t>(i) * nl + nl - 1] = out[static_cast<size_t>(i) * nl + nl - 2];

        double delta = 0.0;
        bool bad = false;
        for (size_t q = 0; q < out.size(); ++q) {
            const double d = std::abs(out[q] - vn[q]);
            if (d > delta) delta = d;
            if (!std::isfinite(out[q]) || std::abs(out[q]) > blow_up) bad = true;
        }
        if (bad)
            throw InstabilityDetected("explicit march diverged at step " +
                                      std::to_string(n + 1) + "; increase n_t");
        if (delta > res.max_step_delta) res.max_step_delta = delta;

        if (style == Style::american) {
            if (side == Side::holder) {
                for (int i = 0; i < ns; ++i) {
                    const double pay = std::max(p.K - g.s(i), 0.0);
                    double* orow = out.data() + static_cast<size_t>(i) * nl;
                    for (int j = 0; j < nl; ++j) orow[j] = std::max(orow[j], pay);
                }
            } else {
                const int lag_row = (opt.writer_lag == WriterBoundaryLag::n) ? n : n + 1;
                const double* sf_row = boundary->row(lag_row);
                for (int i = 0; i < ns; ++i) {
                    const double si = g.s(i);
                    const double pay = std::max(p.K - si, 0.0);
                    double* orow = out.data() + static_cast<size_t>(i) * nl;
                    for (int j = 0; j < nl; ++j)
                        if (si <= sf_row[j] + 1e-12) orow[j] = pay;
                }
            }
        }

        std::swap(v.values, next.values);
        v.time_index = n + 1;

        if (holder_american) {
            const BoundaryRow row =
                extract_boundary(v, g, p.K, opt.boundary_tol, opt.relaxed_boundary);
            for (int j = 0; j < nl; ++j)
                res.boundary.set(j, n + 1, row.flag[static_cast<size_t>(j)] ? 0.0
                                           : g.s(static_cast<int>(row.idx[static_cast<size_t>(j)])),
                                 row.flag[static_cast<size_t>(j)] != 0);
        }
    }

    if (holder_american && opt.refine_boundary) {
        const BoundaryRow row =
            extract_boundary(v, g, p.K, opt.boundary_tol, opt.relaxed_boundary);
        res.refined_sf_final.resize(static_cast<size_t>(nl));
        for (int j = 0; j < nl; ++j)
            res.refined_sf_final[static_cast<size_t>(j)] =
                row.flag[static_cast<size_t>(j)]
                    ? 0.0
                    : refine_boundary_point(v, g, p.K, j, row.idx[static_cast<size_t>(j)]);
    }

    res.final_surface = std::move(v);
    res.steps = g.n_t - 1;
    res.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - t0).count();
    return res;
}

} // namespace amliq
