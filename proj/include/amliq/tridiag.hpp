#pragma once

#include <cmath>
#include <vector>

#include "amliq/errors.hpp"

namespace amliq {

// One tridiagonal line of either sweep direction. lower/upper have one entry
// fewer than diag; lower[k] multiplies x[k], upper[k] multiplies x[k+1] in
// row k+1 / row k respectively.
struct SweepSystem {
    enum class Direction { S, L };
    Direction direction = Direction::S;
    int line_index = 0; // the fixed other coordinate
    std::vector<double> lower, diag, upper, rhs;
};

// Thomas algorithm (the LU factorization of a tridiagonal matrix).
// Throws SingularPivot on a zero (or non-finite) pivot.
inline std::vector<double> solve_tridiagonal(const SweepSystem& sys) {
    const size_t m = sys.diag.size();
    std::vector<double> cp(m > 0 ? m - 1 : 0), x(m);
    if (m == 0) return x;
    if (sys.diag[0] == 0.0 || !std::isfinite(sys.diag[0]))
        throw SingularPivot("solve_tridiagonal: zero pivot at row 0");
    if (m > 1) cp[0] = sys.upper[0] / sys.diag[0];
    x[0] = sys.rhs[0] / sys.diag[0];
    for (size_t k = 1; k < m; ++k) {
        const double den = sys.diag[k] - sys.lower[k - 1] * cp[k - 1];
        if (den == 0.0 || !std::isfinite(den))
            throw SingularPivot("solve_tridiagonal: zero pivot at row " + std::to_string(k));
        if (k < m - 1) cp[k] = sys.upper[k] / den;
        x[k] = (sys.rhs[k] - sys.lower[k - 1] * x[k - 1]) / den;
    }
    for (size_t k = m - 1; k-- > 0;) x[k] -= cp[k] * x[k + 1];
    return x;
}

// In-place variant used by the time marchers: solves into rhs, using scratch
// for the eliminated superdiagonal. All spans must have the right sizes.
inline void solve_tridiagonal_inplace(const double* lower, const double* diag,
                                      const double* upper, double* rhs,
                                      double* scratch, int m) {
    if (m <= 0) return;
    double den = diag[0];
    if (den == 0.0) throw SingularPivot("tridiagonal: zero pivot");
    if (m > 1) scratch[0] = upper[0] / den;
    rhs[0] /= den;
    for (int k = 1; k < m; ++k) {
        den = diag[k] - lower[k - 1] * scratch[k - 1];
        if (den == 0.0) throw SingularPivot("tridiagonal: zero pivot");
        if (k < m - 1) scratch[k] = upper[k] / den;
        rhs[k] = (rhs[k] - lower[k - 1] * rhs[k - 1]) / den;
    }
    for (int k = m - 2; k >= 0; --k) rhs[k] -= scratch[k] * rhs[k + 1];
}

} // namespace amliq
