#pragma once

#include "amliq/adi.hpp"

namespace amliq {

// Fully explicit forward-Euler marcher for the same PDE systems. Kept
// deliberately independent of the ADI assembly code so the two pricers
// cross-check each other. Conditionally stable: the caller must pick n_t
// large enough (the run throws InstabilityDetected when any node passes
// 10*K in magnitude).
struct ExplicitOptions {
    WriterBoundaryLag writer_lag = WriterBoundaryLag::n;
    bool refine_boundary = false;
    double boundary_tol = 1e-8;
    bool relaxed_boundary = false;
    int jobs = 1;
};

PricingResult price_explicit(const ModelParams& p, const Grid& g, Side side,
                             Style style, const ExerciseBoundary* boundary = nullptr,
                             const ExplicitOptions& opt = {});

} // namespace amliq
