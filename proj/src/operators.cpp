#include "amliq/operators.hpp"

#include <cmath>
#include <string>

namespace amliq {

namespace {

void require_interior(int i, int j, const Grid& g) {
    if (i < 1 || i > g.n_s - 2 || j < 1 || j > g.n_l - 2)
        throw IndexOutOfInterior("(" + std::to_string(i) + ", " + std::to_string(j) +
                                 ") is not an interior node");
}

} // namespace

StencilK stencil_k(const PriceSurface& v_prev, int i, int j, const Grid& g,
                   const ModelParams& p) {
    require_interior(i, j, g);
    const double di = static_cast<double>(i);
    const double lj = g.l(j);
    StencilK k{};
    k.k0 = di * di * (p.beta * p.beta * lj * lj + p.sigma_S * p.sigma_S +
                      2.0 * p.rho1 * p.sigma_S * p.beta * lj);
    k.k1 = di * g.delta_tau / (4.0 * g.delta_l) *
           (p.rho3 * p.sigma_L * p.beta * lj + p.rho2 * p.sigma_S * p.sigma_L);
    const double d2 = v_prev.at(i + 1, j) - 2.0 * v_prev.at(i, j) + v_prev.at(i - 1, j);
    const double cross = v_prev.at(i + 1, j + 1) - v_prev.at(i + 1, j - 1) -
                         v_prev.at(i - 1, j + 1) + v_prev.at(i - 1, j - 1);
    k.k2 = p.beta * di * lj * d2 / g.delta_s;
    k.k3 = p.sigma_S * di * d2 / g.delta_s;
    k.k4 = p.sigma_L / (4.0 * g.delta_s * g.delta_l) * cross;
    return k;
}

double cost_term(const PriceSurface& v_prev, int i, int j, const Grid& g,
                 const ModelParams& p) {
    const StencilK k = stencil_k(v_prev, i, j, g, p);
    const double scale = k.k2 * k.k2 + k.k3 * k.k3 + k.k4 * k.k4;
    const double rad = scale + 2.0 * p.rho1 * k.k2 * k.k3 + 2.0 * p.rho2 * k.k3 * k.k4 +
                       2.0 * p.rho3 * k.k2 * k.k4;
    return std::sqrt(2.0 / (kPi * p.delta_t)) * p.kappa * g.s(i) *
           std::sqrt(clamp_radicand(rad, scale));
}

SweepSystem assemble_s_sweep(const PriceSurface& v_n, int j, const Grid& g,
                             const ModelParams& p, Side side, double eta,
                             double v_np1_bnd_low, double v_np1_bnd_high) {
    require_interior(1, j, g);
    const int m = g.n_s - 2;
    const double dtau = g.delta_tau;
    const double dl = g.delta_l;
    const double r = p.r;
    const double sl2 = p.sigma_L * p.sigma_L;
    const double wj = l_drift(g.l(j), p);
    const double a = cost_sign(side);

    SweepSystem sys;
    sys.direction = SweepSystem::Direction::S;
    sys.line_index = j;
    sys.lower.resize(static_cast<size_t>(m) - 1);
    sys.diag.resize(static_cast<size_t>(m));
    sys.upper.resize(static_cast<size_t>(m) - 1);
    sys.rhs.resize(static_cast<size_t>(m));

    for (int i = 1; i <= m; ++i) {
        const StencilK k = stencil_k(v_n, i, j, g, p);
        const double di = static_cast<double>(i);
        const double cost = cost_term(v_n, i, j, g, p);
        const double vc = v_n.at(i, j);
        const double cross = v_n.at(i + 1, j + 1) - v_n.at(i + 1, j - 1) -
                             v_n.at(i - 1, j + 1) + v_n.at(i - 1, j - 1);

        const size_t kk = static_cast<size_t>(i) - 1;
        sys.diag[kk] = 1.0 + eta * dtau * k.k0 + r * eta * dtau / 2.0;
        if (i < m) sys.upper[kk] = -eta * dtau / 2.0 * (k.k0 + di * r);
        if (i > 1) sys.lower[kk - 1] = -eta * dtau / 2.0 * (k.k0 - di * r);

        double rhs =
            (1.0 - dtau * (1.0 - eta) * (k.k0 + r / 2.0) - dtau * (sl2 / (dl * dl) + r / 2.0)) * vc +
            (1.0 - eta) * dtau / 2.0 * (k.k0 + di * r) * v_n.at(i + 1, j) +
            (1.0 - eta) * dtau / 2.0 * (k.k0 - di * r) * v_n.at(i - 1, j) +
            dtau / (2.0 * dl) * (sl2 / dl + wj) * v_n.at(i, j + 1) +
            dtau / (2.0 * dl) * (sl2 / dl - wj) * v_n.at(i, j - 1) +
            k.k1 * cross - a * dtau * cost;
        sys.rhs[kk] = rhs;
    }
    // fold the Dirichlet boundary values of the intermediate level
    sys.rhs[0] += eta * dtau / 2.0 *
                  (stencil_k(v_n, 1, j, g, p).k0 - 1.0 * r) * v_np1_bnd_low;
    sys.rhs[static_cast<size_t>(m) - 1] +=
        eta * dtau / 2.0 *
        (stencil_k(v_n, m, j, g, p).k0 + static_cast<double>(m) * r) * v_np1_bnd_high;
    return sys;
}

SweepSystem assemble_l_sweep(const PriceSurface& v_half, const PriceSurface& v_n,
                             int i, const Grid& g, const ModelParams& p,
                             double eta, double v_bnd_l0) {
    require_interior(i, 1, g);
    const int m = g.n_l - 2;
    const double dtau = g.delta_tau;
    const double dl = g.delta_l;
    const double r = p.r;
    const double sl2 = p.sigma_L * p.sigma_L;
    const double gdiag = 1.0 + eta * dtau * (sl2 / (dl * dl) + r / 2.0);

    SweepSystem sys;
    sys.direction = SweepSystem::Direction::L;
    sys.line_index = i;
    sys.lower.resize(static_cast<size_t>(m) - 1);
    sys.diag.resize(static_cast<size_t>(m));
    sys.upper.resize(static_cast<size_t>(m) - 1);
    sys.rhs.resize(static_cast<size_t>(m));

    for (int j = 1; j <= m; ++j) {
        const double wj = l_drift(g.l(j), p);
        const double h = eta * dtau / (2.0 * dl) * (sl2 / dl + wj);
        const double mm = eta * dtau / (2.0 * dl) * (sl2 / dl - wj);
        const size_t kk = static_cast<size_t>(j) - 1;
        sys.diag[kk] = gdiag;
        if (j < m) sys.upper[kk] = -h;
        if (j > 1) sys.lower[kk - 1] = -mm;
        sys.rhs[kk] = v_half.at(i, j) + eta * dtau * (sl2 / (dl * dl) + r / 2.0) * v_n.at(i, j) -
                      h * v_n.at(i, j + 1) - mm * v_n.at(i, j - 1);
    }
    // degenerate-row Dirichlet fold at j=1 and the Neumann fold at l_max
    {
        const double w1 = l_drift(g.l(1), p);
        sys.rhs[0] += eta * dtau / (2.0 * dl) * (sl2 / dl - w1) * v_bnd_l0;
        const double wm = l_drift(g.l(m), p);
        sys.diag[static_cast<size_t>(m) - 1] =
            gdiag - eta * dtau / (2.0 * dl) * (sl2 / dl + wm);
    }
    return sys;
}

double degenerate_l_row(const PriceSurface& v_n, int i, const Grid& g,
                        const ModelParams& p, Side side) {
    if (i < 1 || i > g.n_s - 2)
        throw IndexOutOfInterior("degenerate row needs 1 <= i <= n_s - 2");
    if (g.n_l < 4)
        throw GridTooSmall("one-sided L stencil needs at least 4 liquidity nodes");
    const double ds = g.delta_s;
    const double dl = g.delta_l;
    const double si = g.s(i);

    const double vss = (v_n.at(i + 1, 0) - 2.0 * v_n.at(i, 0) + v_n.at(i - 1, 0)) / (ds * ds);
    const double vs = (v_n.at(i + 1, 0) - v_n.at(i - 1, 0)) / (2.0 * ds);
    const double vll = (2.0 * v_n.at(i, 0) - 5.0 * v_n.at(i, 1) + 4.0 * v_n.at(i, 2) -
                        v_n.at(i, 3)) / (dl * dl);
    const double vl = (-3.0 * v_n.at(i, 0) + 4.0 * v_n.at(i, 1) - v_n.at(i, 2)) / (2.0 * dl);
    const double vsl = (v_n.at(i + 1, 1) - v_n.at(i + 1, 0) - v_n.at(i - 1, 1) +
                        v_n.at(i - 1, 0)) / (2.0 * ds * dl);

    const double psi1 = p.sigma_S * si * vss;
    const double psi2 = p.sigma_L * vsl;
    const double scale = psi1 * psi1 + psi2 * psi2;
    const double rad = clamp_radicand(scale + 2.0 * p.rho2 * psi1 * psi2, scale);
    const double cost = std::sqrt(2.0 / (kPi * p.delta_t)) * p.kappa * si * std::sqrt(rad);

    return v_n.at(i, 0) +
           g.delta_tau * (p.sigma_S * p.sigma_S * si * si / 2.0 * vss +
                          p.sigma_L * p.sigma_L / 2.0 * vll +
                          p.rho2 * p.sigma_S * p.sigma_L * si * vsl + p.r * si * vs +
                          p.alpha * p.theta_bar * vl - p.r * v_n.at(i, 0) -
                          cost_sign(side) * cost);
}

} // namespace amliq
