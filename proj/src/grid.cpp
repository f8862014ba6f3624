#include "amliq/grid.hpp"

#include <cmath>

namespace amliq {

Grid build_grid(int n_s, int n_l, int n_t, const ModelParams& p,
                double s_max_mult, double l_max) {
    if (n_s < 4 || n_l < 4)
        throw GridTooSmall("need at least 4 nodes in S and L");
    if (n_t < 2)
        throw GridTooSmall("need at least 2 time nodes");
    if (!(s_max_mult > 0.0) || !(l_max > 0.0))
        throw GridTooSmall("s_max and l_max must be positive");

    Grid g;
    g.n_s = n_s;
    g.n_l = n_l;
    g.n_t = n_t;
    g.s_max = s_max_mult * p.K;
    g.l_max = l_max;
    g.t_max = p.T;
    g.delta_s = g.s_max / (n_s - 1);
    g.delta_l = g.l_max / (n_l - 1);
    g.delta_tau = g.t_max / (n_t - 1);
    g.s_nodes.resize(static_cast<size_t>(n_s));
    g.l_nodes.resize(static_cast<size_t>(n_l));
    g.tau_nodes.resize(static_cast<size_t>(n_t));
    for (int i = 0; i < n_s; ++i) g.s_nodes[static_cast<size_t>(i)] = i * g.delta_s;
    for (int j = 0; j < n_l; ++j) g.l_nodes[static_cast<size_t>(j)] = j * g.delta_l;
    for (int n = 0; n < n_t; ++n) g.tau_nodes[static_cast<size_t>(n)] = n * g.delta_tau;
    // pin the endpoints exactly
    g.s_nodes.back() = g.s_max;
    g.l_nodes.back() = g.l_max;
    g.tau_nodes.back() = g.t_max;
    return g;
}

} // namespace amliq
