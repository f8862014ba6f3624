#pragma once

#include <vector>

#include "amliq/errors.hpp"
#include "amliq/params.hpp"

namespace amliq {

// Uniform (S, L, tau) grid: s_i = i*delta_s for i = 0..n_s-1 (the 1-based
// grid of the discretization maps to 0-based storage), likewise for l and
// tau. All three counts are node counts; a march takes n_t - 1 steps.
struct Grid {
    int n_s = 0, n_l = 0, n_t = 0;
    double s_max = 0.0, l_max = 0.0, t_max = 0.0;
    double delta_s = 0.0, delta_l = 0.0, delta_tau = 0.0;
    std::vector<double> s_nodes, l_nodes, tau_nodes;

    [[nodiscard]] double s(int i) const { return s_nodes[static_cast<size_t>(i)]; }
    [[nodiscard]] double l(int j) const { return l_nodes[static_cast<size_t>(j)]; }
    [[nodiscard]] double tau(int n) const { return tau_nodes[static_cast<size_t>(n)]; }
};

// s_max defaults to 8*K via s_max_mult, l_max to 5. Throws GridTooSmall for
// counts below what the stencils need.
Grid build_grid(int n_s, int n_l, int n_t, const ModelParams& p,
                double s_max_mult = 8.0, double l_max = 5.0);

} // namespace amliq
