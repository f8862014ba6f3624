#include "amliq/surface.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace amliq {

double interpolate_price(const PriceSurface& v, const Grid& g, double s0, double l0) {
    const double eps_s = 1e-12 * std::max(1.0, g.s_max);
    const double eps_l = 1e-12 * std::max(1.0, g.l_max);
    if (s0 < -eps_s || s0 > g.s_max + eps_s || l0 < -eps_l || l0 > g.l_max + eps_l)
        throw PointOutsideGrid("(" + std::to_string(s0) + ", " + std::to_string(l0) +
                               ") lies outside the grid");
    s0 = std::clamp(s0, 0.0, g.s_max);
    l0 = std::clamp(l0, 0.0, g.l_max);

    int i = static_cast<int>(std::floor(s0 / g.delta_s));
    int j = static_cast<int>(std::floor(l0 / g.delta_l));
    i = std::clamp(i, 0, g.n_s - 2);
    j = std::clamp(j, 0, g.n_l - 2);
    const double xs = (s0 - g.s(i)) / g.delta_s;
    const double xl = (l0 - g.l(j)) / g.delta_l;

    return (1.0 - xs) * (1.0 - xl) * v.at(i, j) + xs * (1.0 - xl) * v.at(i + 1, j) +
           (1.0 - xs) * xl * v.at(i, j + 1) + xs * xl * v.at(i + 1, j + 1);
}

} // namespace amliq
