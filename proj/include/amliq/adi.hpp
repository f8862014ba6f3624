#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "amliq/operators.hpp"

namespace amliq {

// Which holder-boundary time level gates the writer's exercise-region
// overwrite: the printed algorithm uses level n; n+1 is available.
enum class WriterBoundaryLag { n, n_plus_1 };

struct AdiOptions {
    double eta = 0.5;                 // Crank-Nicolson weighting
    WriterBoundaryLag writer_lag = WriterBoundaryLag::n;
    bool retain_all_levels = false;   // keep every surface (surface export)
    bool refine_boundary = false;     // sub-node boundary via sqrt-interpolation
    double boundary_tol = 1e-8;       // |V - (K - S)| match tolerance
    bool relaxed_boundary = false;    // proximity fallback when nothing matches
    int jobs = 1;                     // line-solve parallelism cap
};

struct PricingResult {
    PriceSurface final_surface;                 // level n_t - 1
    ExerciseBoundary boundary;                  // holder american runs only
    std::vector<PriceSurface> retained;         // all levels when requested
    std::vector<double> refined_sf_final;       // per j, when refine_boundary
    // diagnostics
    double wall_ms = 0.0;
    int steps = 0;
    double max_step_delta = 0.0;                // max |V^{n+1}-V^n| over the run
    double degenerate_cfl = 0.0;                // dtau * sigma_S^2 * (n_s-1)^2
    const Grid* grid = nullptr;

    [[nodiscard]] double price_at(double s0, double l0) const {
        return interpolate_price(final_surface, *grid, s0, l0);
    }
};

// One Douglas-Rachford step from level n to n+1: S-implicit sub-step, the
// explicit degenerate row, then the L-implicit sub-step, boundary conditions,
// and the style/side-specific constraint (projection for the American holder,
// exercise-region overwrite for the writer when sf_row — n_l currency values —
// is given).
PriceSurface adi_step(const PriceSurface& v_n, const Grid& g, const ModelParams& p,
                      Side side, double eta, Style style,
                      const double* sf_row = nullptr);

// Full backward march for the holder (Algorithm 1): starts from the payoff,
// projects each level, extracts the free boundary.
PricingResult price_holder(const ModelParams& p, const Grid& g,
                           const AdiOptions& opt = {});

// Writer march (Algorithm 2) on the holder's boundary: cost sign flipped,
// payoff enforced on the exercise region.
PricingResult price_writer(const ModelParams& p, const Grid& g,
                           const ExerciseBoundary& boundary,
                           const AdiOptions& opt = {});

// European-style march (projection disabled); side picks the cost sign.
PricingResult price_european(const ModelParams& p, const Grid& g, Side side,
                             const AdiOptions& opt = {});

// Per-j boundary row of one holder level: largest node with
// |V - (K - S_i)| < tol, else flag + node 0. The relaxed mode falls back to
// a proximity band of half a grid cell's value change when nothing matches.
struct BoundaryRow {
    std::vector<std::uint32_t> idx;
    std::vector<std::uint8_t> flag;
};
BoundaryRow extract_boundary(const PriceSurface& v, const Grid& g, double strike,
                             double tol = 1e-8, bool relaxed = false);

// Sub-node refinement at one j: linear interpolation in sqrt(V - payoff)
// through the first two holding-region nodes (exact under the quadratic
// tangency of smooth pasting). Falls back to the node value when the excess
// profile is unusable; the result is confined to [S_m, S_{m+1}].
double refine_boundary_point(const PriceSurface& v, const Grid& g, double strike,
                             int j, std::uint32_t node_idx);

} // namespace amliq
