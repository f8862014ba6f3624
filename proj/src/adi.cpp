#include "amliq/adi.hpp"

#include "amliq/parallel.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <string>

namespace amliq {

namespace {

// Time-independent coefficients of one Douglas-Rachford step, plus the work
// buffers for both sweeps. Layouts: interior (i, j) arrays are j-major
// (jj = j-1 rows of length mi = n_s-2) so an S-line is contiguous.
class Stepper {
public:
    Stepper(const Grid& g, const ModelParams& p, Side side, double eta)
        : g_(g), p_(p), a_(cost_sign(side)), eta_(eta),
          mi_(g.n_s - 2), mj_(g.n_l - 2) {
        const double dtau = g.delta_tau;
        const double ds = g.delta_s;
        const double dl = g.delta_l;
        const double r = p.r;
        const double sl2 = p.sigma_L * p.sigma_L;

        const size_t nij = static_cast<size_t>(mi_) * mj_;
        diag1_.resize(nij);
        low1_.resize(static_cast<size_t>(mi_ - 1) * mj_);
        up1_.resize(static_cast<size_t>(mi_ - 1) * mj_);
        c_vc_.resize(nij);
        c_up_.resize(nij);
        c_dn_.resize(nij);
        k1m_.resize(nij);
        k2f_.resize(nij);
        f1_.resize(static_cast<size_t>(mj_));
        cjp_.resize(static_cast<size_t>(mj_));
        cjm_.resize(static_cast<size_t>(mj_));
        h_.resize(static_cast<size_t>(g.n_l));
        m_.resize(static_cast<size_t>(g.n_l));
        k3f_.resize(static_cast<size_t>(mi_));
        costc_.resize(static_cast<size_t>(mi_));
        diag2_.resize(static_cast<size_t>(mj_));
        low2_.resize(static_cast<size_t>(mj_ - 1));
        up2_.resize(static_cast<size_t>(mj_ - 1));

        k4f_ = p.sigma_L / (4.0 * ds * dl);
        cost_pref_ = std::sqrt(2.0 / (kPi * p.delta_t)) * p.kappa;
        g2_ = 1.0 + eta * dtau * (sl2 / (dl * dl) + r / 2.0);

        for (int j = 0; j < g.n_l; ++j) {
            const double w = l_drift(g.l(j), p);
            h_[static_cast<size_t>(j)] = eta * dtau / (2.0 * dl) * (sl2 / dl + w);
            m_[static_cast<size_t>(j)] = eta * dtau / (2.0 * dl) * (sl2 / dl - w);
        }
        for (int i = 1; i <= mi_; ++i) {
            k3f_[static_cast<size_t>(i - 1)] = p.sigma_S * i / ds;
            costc_[static_cast<size_t>(i - 1)] = cost_pref_ * g.s(i);
        }
        for (int j = 1; j <= mj_; ++j) {
            const size_t jj = static_cast<size_t>(j - 1);
            const double lj = g.l(j);
            const double w = l_drift(lj, p);
            cjp_[jj] = dtau / (2.0 * dl) * (sl2 / dl + w);
            cjm_[jj] = dtau / (2.0 * dl) * (sl2 / dl - w);
            for (int i = 1; i <= mi_; ++i) {
                const double di = static_cast<double>(i);
                const double k0 = di * di * (p.beta * p.beta * lj * lj +
                                             p.sigma_S * p.sigma_S +
                                             2.0 * p.rho1 * p.sigma_S * p.beta * lj);
                const size_t q = jj * mi_ + static_cast<size_t>(i - 1);
                diag1_[q] = 1.0 + eta * dtau * k0 + r * eta * dtau / 2.0;
                const double e = eta * dtau / 2.0 * (k0 + di * r);
                const double f = eta * dtau / 2.0 * (k0 - di * r);
                if (i < mi_) up1_[jj * (mi_ - 1) + static_cast<size_t>(i - 1)] = -e;
                if (i > 1) low1_[jj * (mi_ - 1) + static_cast<size_t>(i - 2)] = -f;
                if (i == 1) f1_[jj] = f;
                c_vc_[q] = 1.0 - dtau * (1.0 - eta) * (k0 + r / 2.0) -
                           dtau * (sl2 / (dl * dl) + r / 2.0);
                c_up_[q] = (1.0 - eta) * dtau / 2.0 * (k0 + di * r);
                c_dn_[q] = (1.0 - eta) * dtau / 2.0 * (k0 - di * r);
                k1m_[q] = di * dtau / (4.0 * dl) *
                          (p.rho3 * p.sigma_L * p.beta * lj + p.rho2 * p.sigma_S * p.sigma_L);
                k2f_[q] = p.beta * di * lj / ds;
            }
        }
        for (int j = 1; j <= mj_; ++j) {
            const size_t k = static_cast<size_t>(j - 1);
            diag2_[k] = g2_;
            if (j < mj_) up2_[k] = -h_[static_cast<size_t>(j)];
            if (j > 1) low2_[k - 1] = -m_[static_cast<size_t>(j)];
        }
        diag2_[static_cast<size_t>(mj_ - 1)] = g2_ - h_[static_cast<size_t>(g.n_l - 2)];

        rbuf_.resize(nij);
        scr1_.resize(nij);
        rr2_.resize(nij);
        scr2_.resize(nij);
    }

    [[nodiscard]] double cfl() const {
        return g_.delta_tau * p_.sigma_S * p_.sigma_S * (g_.n_s - 1) * (g_.n_s - 1);
    }

    // vn -> out (same vector may not alias). sf_row: writer exercise region.
    void step(const std::vector<double>& vn, std::vector<double>& out, Style style,
              const double* sf_row, int jobs) {
        const int nl = g_.n_l;
        const int ns = g_.n_s;
        const double dtau = g_.delta_tau;
        const double ds = g_.delta_s;
        const double dl = g_.delta_l;
        const double K = p_.K;
        const double a = a_;

        auto at = [nl](const std::vector<double>& v, int i, int j) -> double {
            return v[static_cast<size_t>(i) * nl + j];
        };

        // --- sub-step 1: implicit in S, line per interior j ---------------
        parallel_for(1, nl - 1, jobs, [&](int j) {
            const size_t jj = static_cast<size_t>(j - 1);
            double* line = rbuf_.data() + jj * mi_;
            const double cjp = cjp_[jj], cjm = cjm_[jj];
            for (int i = 1; i <= mi_; ++i) {
                const size_t q = jj * mi_ + static_cast<size_t>(i - 1);
                const double vc = at(vn, i, j);
                const double vip = at(vn, i + 1, j), vim = at(vn, i - 1, j);
                const double vjp = at(vn, i, j + 1), vjm = at(vn, i, j - 1);
                const double cross = at(vn, i + 1, j + 1) - at(vn, i + 1, j - 1) -
                                     at(vn, i - 1, j + 1) + at(vn, i - 1, j - 1);
                const double d2 = vip - 2.0 * vc + vim;
                const double k2 = k2f_[q] * d2;
                const double k3 = k3f_[static_cast<size_t>(i - 1)] * d2;
                const double k4 = k4f_ * cross;
                const double scale = k2 * k2 + k3 * k3 + k4 * k4;
                const double rad = clamp_radicand(
                    scale + 2.0 * (p_.rho1 * k2 * k3 + p_.rho2 * k3 * k4 + p_.rho3 * k2 * k4),
                    scale);
                const double cost = costc_[static_cast<size_t>(i - 1)] * std::sqrt(rad);
                line[i - 1] = c_vc_[q] * vc + c_up_[q] * vip + c_dn_[q] * vim +
                              cjp * vjp + cjm * vjm + k1m_[q] * cross - a * dtau * cost;
            }
            line[0] += f1_[jj] * K; // V(0, L) = K on the intermediate level too
            solve_tridiagonal_inplace(low1_.data() + jj * (mi_ - 1),
                                      diag1_.data() + jj * mi_,
                                      up1_.data() + jj * (mi_ - 1), line,
                                      scr1_.data() + jj * mi_, mi_);
        });

        // --- degenerate L = 0 row: explicit step of the reduced operator --
        std::copy(vn.begin(), vn.end(), out.begin());
        {
            const double csig2 = p_.sigma_S * p_.sigma_S;
            for (int i = 1; i <= mi_; ++i) {
                const double si = g_.s(i);
                const double vss = (at(vn, i + 1, 0) - 2.0 * at(vn, i, 0) + at(vn, i - 1, 0)) / (ds * ds);
                const double vs = (at(vn, i + 1, 0) - at(vn, i - 1, 0)) / (2.0 * ds);
                const double vll = (2.0 * at(vn, i, 0) - 5.0 * at(vn, i, 1) +
                                    4.0 * at(vn, i, 2) - at(vn, i, 3)) / (dl * dl);
                const double vl = (-3.0 * at(vn, i, 0) + 4.0 * at(vn, i, 1) - at(vn, i, 2)) / (2.0 * dl);
                const double vsl = (at(vn, i + 1, 1) - at(vn, i + 1, 0) -
                                    at(vn, i - 1, 1) + at(vn, i - 1, 0)) / (2.0 * ds * dl);
                const double psi1 = p_.sigma_S * si * vss;
                const double psi2 = p_.sigma_L * vsl;
                const double scale0 = psi1 * psi1 + psi2 * psi2;
                const double rad0 = clamp_radicand(scale0 + 2.0 * p_.rho2 * psi1 * psi2, scale0);
                const double cost0 = cost_pref_ * si * std::sqrt(rad0);
                out[static_cast<size_t>(i) * nl] =
                    at(vn, i, 0) + dtau * (csig2 * si * si / 2.0 * vss +
                                           p_.sigma_L * p_.sigma_L / 2.0 * vll +
                                           p_.rho2 * p_.sigma_S * p_.sigma_L * si * vsl +
                                           p_.r * si * vs + p_.alpha * p_.theta_bar * vl -
                                           p_.r * at(vn, i, 0) - a * cost0);
            }
            out[0] = K;
            out[static_cast<size_t>(ns - 1) * nl] = 0.0;
        }

        // --- sub-step 2: implicit in L, line per interior i ----------------
        parallel_for(1, ns - 1, jobs, [&](int i) {
            const size_t ii = static_cast<size_t>(i - 1);
            double* line = rr2_.data() + ii * mj_;
            const double* vhalf = rbuf_.data(); // j-major interior
            const double ceta = eta_ * g_.delta_tau *
                                (p_.sigma_L * p_.sigma_L / (dl * dl) + p_.r / 2.0);
            for (int j = 1; j <= mj_; ++j) {
                const size_t jj = static_cast<size_t>(j - 1);
                line[jj] = vhalf[jj * mi_ + ii] + ceta * at(vn, i, j) -
                           h_[static_cast<size_t>(j)] * at(vn, i, j + 1) -
                           m_[static_cast<size_t>(j)] * at(vn, i, j - 1);
            }
            line[0] += m_[1] * out[static_cast<size_t>(i) * nl]; // updated degenerate row
            solve_tridiagonal_inplace(low2_.data(), diag2_.data(), up2_.data(), line,
                                      scr2_.data() + ii * mj_, mj_);
            double* orow = out.data() + static_cast<size_t>(i) * nl;
            for (int j = 1; j <= mj_; ++j) orow[j] = line[j - 1];
        });

        // boundary conditions and the Neumann copy at l_max
        for (int j = 0; j < nl; ++j) {
            out[static_cast<size_t>(j)] = K;
            out[static_cast<size_t>(ns - 1) * nl + j] = 0.0;
        }
        for (int i = 0; i < ns; ++i)
            out[static_cast<size_t>(i) * nl + nl - 1] = out[static_cast<size_t>(i) * nl + nl - 2];

        // style/side constraint
        if (style == Style::american) {
            if (a > 0.0) { // holder: projection onto the payoff
                for (int i = 0; i < ns; ++i) {
                    const double pay = std::max(K - g_.s(i), 0.0);
                    double* orow = out.data() + static_cast<size_t>(i) * nl;
                    for (int j = 0; j < nl; ++j) orow[j] = std::max(orow[j], pay);
                }
            } else if (sf_row != nullptr) { // writer: exercise-region overwrite
                for (int i = 0; i < ns; ++i) {
                    const double si = g_.s(i);
                    const double pay = std::max(K - si, 0.0);
                    double* orow = out.data() + static_cast<size_t>(i) * nl;
                    for (int j = 0; j < nl; ++j)
                        if (si <= sf_row[j] + 1e-12) orow[j] = pay;
                }
            }
        }
    }

private:
    const Grid& g_;
    const ModelParams& p_;
    double a_, eta_;
    int mi_, mj_;
    double k4f_ = 0.0, cost_pref_ = 0.0, g2_ = 0.0;
    std::vector<double> diag1_, low1_, up1_, c_vc_, c_up_, c_dn_, k1m_, k2f_;
    std::vector<double> f1_, cjp_, cjm_, h_, m_, k3f_, costc_;
    std::vector<double> diag2_, low2_, up2_;
    std::vector<double> rbuf_, scr1_, rr2_, scr2_;
};

void fill_payoff(PriceSurface& v, const Grid& g, double strike) {
    for (int i = 0; i < g.n_s; ++i) {
        const double pay = std::max(strike - g.s(i), 0.0);
        for (int j = 0; j < g.n_l; ++j) v.at(i, j) = pay;
    }
}

// Shared backward march. `boundary_in` drives the writer's overwrite;
// `boundary_out` collects the holder's extraction.
PricingResult march(const ModelParams& p, const Grid& g, Side side, Style style,
                    const ExerciseBoundary* boundary_in, const AdiOptions& opt) {
    validate_params(p);
    if (g.n_s < 4 || g.n_l < 4 || g.n_t < 2)
        throw GridTooSmall("adi march needs n_s, n_l >= 4 and n_t >= 2");
    const auto t0 = std::chrono::steady_clock::now();

    Stepper st(g, p, side, opt.eta);
    const bool holder_american = (style == Style::american && side == Side::holder);
    const bool writer_american = (style == Style::american && side == Side::writer);
    if (writer_american) {
        if (boundary_in == nullptr)
            throw Error("writer march needs the holder boundary");
        if (boundary_in->n_l != g.n_l || boundary_in->n_t != g.n_t)
            throw LengthMismatch("holder boundary was built on a different grid");
    }

    PricingResult res;
    res.grid = &g;
    res.degenerate_cfl = st.cfl();

    PriceSurface v(g.n_s, g.n_l, side, style, 0);
    fill_payoff(v, g, p.K);
    PriceSurface next(g.n_s, g.n_l, side, style, 0);

    if (holder_american) {
        res.boundary = ExerciseBoundary(g.n_l, g.n_t);
        for (int j = 0; j < g.n_l; ++j) res.boundary.set(j, 0, p.K, false);
    }
    if (opt.retain_all_levels) res.retained.push_back(v);

    const double blow_up = 10.0 * p.K;
    for (int n = 0; n + 1 < g.n_t; ++n) {
        const double* sf_row = nullptr;
        if (writer_american) {
            const int lag_row = (opt.writer_lag == WriterBoundaryLag::n) ? n : n + 1;
            sf_row = boundary_in->row(lag_row);
        }
        st.step(v.values, next.values, style, sf_row, opt.jobs);
        next.time_index = n + 1;

        double delta = 0.0;
        bool bad = false;
        for (size_t q = 0; q < next.values.size(); ++q) {
            const double d = std::abs(next.values[q] - v.values[q]);
            if (d > delta) delta = d;
            if (!std::isfinite(next.values[q]) || std::abs(next.values[q]) > blow_up)
                bad = true;
        }
        if (bad)
            throw InstabilityDetected(
                "march diverged at step " + std::to_string(n + 1) +
                "; the explicit L=0 row needs dtau*sigma_S^2*(n_s-1)^2 <~ 0.9, here " +
                std::to_string(st.cfl()));
        if (delta > res.max_step_delta) res.max_step_delta = delta;

        std::swap(v.values, next.values);
        v.time_index = n + 1;

        if (holder_american) {
            const BoundaryRow row =
                extract_boundary(v, g, p.K, opt.boundary_tol, opt.relaxed_boundary);
            for (int j = 0; j < g.n_l; ++j)
                res.boundary.set(j, n + 1, row.flag[static_cast<size_t>(j)] ? 0.0
                                           : g.s(static_cast<int>(row.idx[static_cast<size_t>(j)])),
                                 row.flag[static_cast<size_t>(j)] != 0);
        }
        if (opt.retain_all_levels) res.retained.push_back(v);
    }

    if (holder_american && opt.refine_boundary) {
        const BoundaryRow row =
            extract_boundary(v, g, p.K, opt.boundary_tol, opt.relaxed_boundary);
        res.refined_sf_final.resize(static_cast<size_t>(g.n_l));
        for (int j = 0; j < g.n_l; ++j)
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

} // namespace

PriceSurface adi_step(const PriceSurface& v_n, const Grid& g, const ModelParams& p,
                      Side side, double eta, Style style, const double* sf_row) {
    validate_params(p);
    if (v_n.n_s != g.n_s || v_n.n_l != g.n_l)
        throw LengthMismatch("surface does not match the grid");
    Stepper st(g, p, side, eta);
    PriceSurface out(g.n_s, g.n_l, side, style, v_n.time_index + 1);
    st.step(v_n.values, out.values, style, sf_row, 1);
    return out;
}

PricingResult price_holder(const ModelParams& p, const Grid& g, const AdiOptions& opt) {
    return march(p, g, Side::holder, Style::american, nullptr, opt);
}

PricingResult price_writer(const ModelParams& p, const Grid& g,
                           const ExerciseBoundary& boundary, const AdiOptions& opt) {
    return march(p, g, Side::writer, Style::american, &boundary, opt);
}

PricingResult price_european(const ModelParams& p, const Grid& g, Side side,
                             const AdiOptions& opt) {
    return march(p, g, side, Style::european, nullptr, opt);
}

BoundaryRow extract_boundary(const PriceSurface& v, const Grid& g, double strike,
                             double tol, bool relaxed) {
    if (v.n_s != g.n_s || v.n_l != g.n_l)
        throw LengthMismatch("surface does not match the grid");
    BoundaryRow row;
    row.idx.assign(static_cast<size_t>(g.n_l), 0);
    row.flag.assign(static_cast<size_t>(g.n_l), 0);
    for (int j = 0; j < g.n_l; ++j) {
        int found = -1;
        // strict rule: largest i with |V - (K - S_i)| < tol
        for (int i = g.n_s - 1; i >= 0; --i) {
            if (std::abs(v.at(i, j) - (strike - g.s(i))) < tol) { found = i; break; }
        }
        if (found < 0 && relaxed) {
            for (int i = g.n_s - 1; i >= 0; --i) {
                double dvds;
                if (i == 0) dvds = (v.at(1, j) - v.at(0, j)) / g.delta_s;
                else if (i == g.n_s - 1) dvds = (v.at(i, j) - v.at(i - 1, j)) / g.delta_s;
                else dvds = (v.at(i + 1, j) - v.at(i - 1, j)) / (2.0 * g.delta_s);
                const double prox = 0.5 * g.delta_s * (1.0 + std::abs(dvds));
                if (std::abs(v.at(i, j) - (strike - g.s(i))) < prox) { found = i; break; }
            }
        }
        if (found < 0) {
            row.idx[static_cast<size_t>(j)] = 0;
            row.flag[static_cast<size_t>(j)] = 1;
        } else {
            row.idx[static_cast<size_t>(j)] = static_cast<std::uint32_t>(found);
        }
    }
    return row;
}

double refine_boundary_point(const PriceSurface& v, const Grid& g, double strike,
                             int j, std::uint32_t node_idx) {
    const int m = static_cast<int>(node_idx);
    if (j < 0 || j >= g.n_l || m < 0 || m >= g.n_s)
        throw IndexOutOfInterior("refine_boundary_point: index outside the grid");
    const double sm = g.s(m);
    if (m + 2 > g.n_s - 1) return sm;
    const double e1 = v.at(m + 1, j) - (strike - g.s(m + 1));
    const double e2 = v.at(m + 2, j) - (strike - g.s(m + 2));
    if (!(e1 > 0.0) || !(e2 > e1)) return sm;
    const double r1 = std::sqrt(e1), r2 = std::sqrt(e2);
    const double sf = g.s(m + 1) - g.delta_s * r1 / (r2 - r1);
    return std::clamp(sf, sm, g.s(m + 1));
}

} // namespace amliq
