#pragma once

#include <cstdint>
#include <vector>

#include "amliq/errors.hpp"
#include "amliq/grid.hpp"

namespace amliq {

enum class Side { holder, writer };
enum class Style { american, european };

// +1 for the holder (expected hedging cost subtracted), -1 for the writer.
inline double cost_sign(Side s) { return s == Side::holder ? 1.0 : -1.0; }

// Option values V[i][j] at one time level, row-major in i (S index).
struct PriceSurface {
    int n_s = 0, n_l = 0;
    Side side = Side::holder;
    Style style = Style::american;
    int time_index = 0;
    std::vector<double> values; // size n_s * n_l, index i*n_l + j

    PriceSurface() = default;
    PriceSurface(int ns, int nl, Side sd, Style st, int n = 0)
        : n_s(ns), n_l(nl), side(sd), style(st), time_index(n),
          values(static_cast<size_t>(ns) * static_cast<size_t>(nl), 0.0) {}

    [[nodiscard]] double at(int i, int j) const {
        return values[static_cast<size_t>(i) * n_l + j];
    }
    double& at(int i, int j) { return values[static_cast<size_t>(i) * n_l + j]; }
};

// Free boundary Sf per liquidity level and time step, in currency. Row n = 0
// is the expiry level (Sf = K exactly even when K is off-grid); later rows
// hold grid-node values from the extraction rule plus a per-entry "no node
// matched" flag.
struct ExerciseBoundary {
    int n_l = 0, n_t = 0;
    std::vector<double> values;        // [n * n_l + j]
    std::vector<std::uint8_t> flagged; // 1 where no node satisfied the rule

    ExerciseBoundary() = default;
    ExerciseBoundary(int nl, int nt)
        : n_l(nl), n_t(nt),
          values(static_cast<size_t>(nl) * static_cast<size_t>(nt), 0.0),
          flagged(static_cast<size_t>(nl) * static_cast<size_t>(nt), 0) {}

    [[nodiscard]] double sf(int j, int n) const {
        return values[static_cast<size_t>(n) * n_l + j];
    }
    [[nodiscard]] bool is_flagged(int j, int n) const {
        return flagged[static_cast<size_t>(n) * n_l + j] != 0;
    }
    void set(int j, int n, double sf_value, bool flag) {
        values[static_cast<size_t>(n) * n_l + j] = sf_value;
        flagged[static_cast<size_t>(n) * n_l + j] = flag ? 1 : 0;
    }
    [[nodiscard]] const double* row(int n) const {
        return values.data() + static_cast<size_t>(n) * n_l;
    }
};

// Bilinear interpolation on the four enclosing nodes. Throws PointOutsideGrid.
double interpolate_price(const PriceSurface& v, const Grid& g, double s0, double l0);

} // namespace amliq
