#pragma once

#include <array>

#include "amliq/grid.hpp"
#include "amliq/params.hpp"
#include "amliq/surface.hpp"
#include "amliq/tridiag.hpp"

namespace amliq {

// The five stencil coefficients of the discrete operator at interior (i, j),
// with the nonlinear pieces k2..k4 evaluated on the previous time level
// (explicit treatment). Indices are 0-based: i plays the role of (i-1) in the
// 1-based grid formulas, so the S-node is i*delta_s.
struct StencilK {
    double k0, k1, k2, k3, k4;
};

StencilK stencil_k(const PriceSurface& v_prev, int i, int j, const Grid& g,
                   const ModelParams& p);

// Expected transaction-cost density sqrt(2/(pi*dt)) * kappa * S_i * sqrt(Q)
// with Q the correlation-weighted quadratic form of (k2, k3, k4). Per unit
// time: the caller multiplies by delta_tau and applies the side sign.
// Throws NegativeRadicand when Q is negative beyond FP noise (scale-aware).
double cost_term(const PriceSurface& v_prev, int i, int j, const Grid& g,
                 const ModelParams& p);

// S-direction implicit line at fixed interior j: diag D, off-diagonals -E/-F,
// rhs R plus the boundary vector b folded into the first/last entries.
// v_np1_bnd_low/high are the time-(n+1) boundary values V(0, l_j), V(s_max, l_j)
// used for the intermediate level.
SweepSystem assemble_s_sweep(const PriceSurface& v_n, int j, const Grid& g,
                             const ModelParams& p, Side side, double eta,
                             double v_np1_bnd_low, double v_np1_bnd_high);

// L-direction implicit line at fixed interior i: diag G, off-diagonals -H/-M,
// rhs RR plus the boundary vector c. v_bnd_l0 is the already-updated
// time-(n+1) value on the degenerate row; the l_max end folds the Neumann
// condition into the last diagonal (G - H).
SweepSystem assemble_l_sweep(const PriceSurface& v_half, const PriceSurface& v_n,
                             int i, const Grid& g, const ModelParams& p,
                             double eta, double v_bnd_l0);

// One explicit time step of the reduced operator on the j = 0 (L -> 0) row,
// returning the new value at (i, 0). One-sided second-derivative and shifted
// cross stencils keep every index on the grid.
double degenerate_l_row(const PriceSurface& v_n, int i, const Grid& g,
                        const ModelParams& p, Side side);

// Convection coefficient alpha*(theta(L_j) - L_j) shared by both sweeps.
inline double l_drift(double lj, const ModelParams& p) {
    return p.alpha * (p.theta_bar + p.lambda * p.kappa_for_theta() * std::pow(lj, p.zeta) - lj);
}

// Scale-aware clamp for the cost radicand: tiny negatives (FP noise on an
// O(|k|^2) quantity) clamp to zero, anything worse reports an inadmissible
// correlation triple.
inline double clamp_radicand(double q, double scale) {
    if (q >= 0.0) return q;
    if (q > -1e-14 * std::max(1.0, scale)) return 0.0;
    throw NegativeRadicand("cost radicand negative beyond FP noise");
}

} // namespace amliq
