#include "amliq/mc.hpp"

#include "amliq/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace amliq {

namespace {

constexpr int kBlockPaths = 4096; // paths per substream block (pairs: half)

// 53-bit uniforms; (0,1] for the log leg so it never takes log(0).
inline double uniform_open(std::mt19937_64& rng) {
    return (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
}
inline double uniform_half_open(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

struct Coeffs {
    double c21, c22, c31, c32, c33;
};

Coeffs decomposition_coeffs(const ModelParams& p) {
    const double q1 = 1.0 - p.rho1 * p.rho1;
    if (!(q1 > 0.0))
        throw NegativeRadicand("correlated_increments: |rho1| = 1 degenerates the decomposition");
    Coeffs c{};
    c.c21 = p.rho1;
    c.c22 = std::sqrt(q1);
    c.c31 = p.rho3;
    c.c32 = (p.rho2 - p.rho1 * p.rho3) / c.c22;
    double q3 = 1.0 - p.rho3 * p.rho3 - c.c32 * c.c32;
    if (q3 < 0.0) {
        if (q3 < -1e-12)
            throw NegativeRadicand("correlated_increments: correlation triple is inadmissible");
        q3 = 0.0;
    }
    c.c33 = std::sqrt(q3);
    return c;
}

struct BlockMoments {
    double sum = 0.0, sumsq = 0.0; // over pair means (or single paths)
    int count = 0;
};

} // namespace

double NormalSource::next() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = uniform_open(rng_);
    const double u2 = uniform_half_open(rng_);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

WienerIncrements correlated_increments(double z1, double z2, double z3,
                                       const ModelParams& p, double dt) {
    const Coeffs c = decomposition_coeffs(p);
    const double sq = std::sqrt(dt);
    WienerIncrements d{};
    d.d_w_gamma = sq * z1;
    d.d_w_s = sq * (c.c21 * z1 + c.c22 * z2);
    d.d_w_l = sq * (c.c31 * z1 + c.c32 * z2 + c.c33 * z3);
    return d;
}

PathBatch simulate_paths(const ModelParams& p, int n_paths, int n_steps,
                         std::uint64_t seed, Measure measure,
                         const SimulateOptions& opt) {
    validate_params(p);
    if (n_paths <= 0 || n_steps <= 0)
        throw NonPositiveInput("simulate_paths: n_paths and n_steps must be positive");
    if (opt.antithetic && n_paths % 2 != 0)
        throw LengthMismatch("antithetic simulation needs an even n_paths");

    const Coeffs c = decomposition_coeffs(p);
    const double dt = p.T / n_steps;
    const double sq = std::sqrt(dt);
    const double drift = (measure == Measure::risk_neutral) ? p.r : p.mu;
    const double kt = p.kappa_for_theta();

    PathBatch batch;
    batch.seed = seed;
    batch.n_steps = n_steps;
    batch.n_paths = n_paths;
    batch.measure = measure;
    batch.s_terminal.resize(static_cast<size_t>(n_paths));
    batch.l_terminal.resize(static_cast<size_t>(n_paths));
    if (opt.keep_paths)
        batch.s_paths.assign(static_cast<size_t>(n_paths),
                             std::vector<double>(static_cast<size_t>(n_steps) + 1));
    if (opt.keep_l_paths)
        batch.l_paths.assign(static_cast<size_t>(n_paths),
                             std::vector<double>(static_cast<size_t>(n_steps) + 1));

    const int unit = opt.antithetic ? 2 : 1;
    const int n_units = n_paths / unit;
    const int units_per_block = kBlockPaths / unit;
    const int n_blocks = (n_units + units_per_block - 1) / units_per_block;

    std::vector<std::uint64_t> block_seeds(static_cast<size_t>(n_blocks));
    std::uint64_t state = seed;
    for (int b = 0; b < n_blocks; ++b) block_seeds[static_cast<size_t>(b)] = splitmix64(state);

    parallel_for(0, n_blocks, opt.jobs, [&](int b) {
        NormalSource normals(block_seeds[static_cast<size_t>(b)]);
        const int u_begin = b * units_per_block;
        const int u_end = std::min(n_units, u_begin + units_per_block);
        std::array<double, 2> s{}, l{};
        for (int u = u_begin; u < u_end; ++u) {
            const int base = u * unit;
            s.fill(opt.s0);
            l.fill(opt.l0);
            if (opt.keep_paths)
                for (int q = 0; q < unit; ++q)
                    batch.s_paths[static_cast<size_t>(base + q)][0] = opt.s0;
            if (opt.keep_l_paths)
                for (int q = 0; q < unit; ++q)
                    batch.l_paths[static_cast<size_t>(base + q)][0] = opt.l0;
            for (int k = 0; k < n_steps; ++k) {
                const double z1 = normals.next();
                const double z2 = normals.next();
                const double z3 = normals.next();
                for (int q = 0; q < unit; ++q) {
                    const double sgn = (q == 0) ? 1.0 : -1.0;
                    const double dwg = sq * sgn * z1;
                    const double dws = sq * sgn * (c.c21 * z1 + c.c22 * z2);
                    const double dwl = sq * sgn * (c.c31 * z1 + c.c32 * z2 + c.c33 * z3);
                    const double theta =
                        p.theta_bar + kt * p.lambda * std::pow(std::abs(l[static_cast<size_t>(q)]), p.zeta);
                    const double s_new = s[static_cast<size_t>(q)] *
                                         (1.0 + drift * dt + p.beta * l[static_cast<size_t>(q)] * dwg +
                                          p.sigma_S * dws);
                    double l_new = l[static_cast<size_t>(q)] +
                                   p.alpha * (theta - l[static_cast<size_t>(q)]) * dt +
                                   p.sigma_L * dwl;
                    if (opt.reflect_l) l_new = std::abs(l_new);
                    s[static_cast<size_t>(q)] = std::max(s_new, 1e-12);
                    l[static_cast<size_t>(q)] = l_new;
                    if (opt.keep_paths)
                        batch.s_paths[static_cast<size_t>(base + q)][static_cast<size_t>(k) + 1] =
                            s[static_cast<size_t>(q)];
                    if (opt.keep_l_paths)
                        batch.l_paths[static_cast<size_t>(base + q)][static_cast<size_t>(k) + 1] =
                            l[static_cast<size_t>(q)];
                }
            }
            for (int q = 0; q < unit; ++q) {
                batch.s_terminal[static_cast<size_t>(base + q)] = s[static_cast<size_t>(q)];
                batch.l_terminal[static_cast<size_t>(base + q)] = l[static_cast<size_t>(q)];
            }
        }
    });
    return batch;
}

McPrice price_european_mc(const ModelParams& p, double s0, double l0,
                          int n_paths, std::uint64_t seed, const McOptions& opt) {
    validate_params(p);
    if (n_paths < 2)
        throw NonPositiveInput("price_european_mc: need at least one antithetic pair");
    if (opt.n_steps <= 0)
        throw NonPositiveInput("price_european_mc: n_steps must be positive");

    const Coeffs c = decomposition_coeffs(p);
    const int n_pairs = n_paths / 2;
    const double dt = p.T / opt.n_steps;
    const double sq = std::sqrt(dt);
    const double disc = std::exp(-p.r * p.T);
    const double kt = p.kappa_for_theta();

    const int pairs_per_block = kBlockPaths / 2;
    const int n_blocks = (n_pairs + pairs_per_block - 1) / pairs_per_block;
    std::vector<std::uint64_t> block_seeds(static_cast<size_t>(n_blocks));
    std::uint64_t state = seed;
    for (int b = 0; b < n_blocks; ++b) block_seeds[static_cast<size_t>(b)] = splitmix64(state);

    std::vector<BlockMoments> blocks(static_cast<size_t>(n_blocks));
    parallel_for(0, n_blocks, opt.jobs, [&](int b) {
        NormalSource normals(block_seeds[static_cast<size_t>(b)]);
        const int pr_begin = b * pairs_per_block;
        const int pr_end = std::min(n_pairs, pr_begin + pairs_per_block);
        // Kahan accumulation keeps each block's sums order-exact.
        double sum = 0.0, comp = 0.0, sumsq = 0.0, compsq = 0.0;
        for (int pr = pr_begin; pr < pr_end; ++pr) {
            double s_pos = s0, l_pos = l0, s_neg = s0, l_neg = l0;
            for (int k = 0; k < opt.n_steps; ++k) {
                const double z1 = normals.next();
                const double z2 = normals.next();
                const double z3 = normals.next();
                const double dwg = sq * z1;
                const double dws = sq * (c.c21 * z1 + c.c22 * z2);
                const double dwl = sq * (c.c31 * z1 + c.c32 * z2 + c.c33 * z3);

                const double th_pos = p.theta_bar + kt * p.lambda * std::pow(std::abs(l_pos), p.zeta);
                const double s_pos_new =
                    s_pos * (1.0 + p.r * dt + p.beta * l_pos * dwg + p.sigma_S * dws);
                double l_pos_new = l_pos + p.alpha * (th_pos - l_pos) * dt + p.sigma_L * dwl;
                if (opt.reflect_l) l_pos_new = std::abs(l_pos_new);
                s_pos = std::max(s_pos_new, 1e-12);
                l_pos = l_pos_new;

                const double th_neg = p.theta_bar + kt * p.lambda * std::pow(std::abs(l_neg), p.zeta);
                const double s_neg_new =
                    s_neg * (1.0 + p.r * dt - p.beta * l_neg * dwg - p.sigma_S * dws);
                double l_neg_new = l_neg + p.alpha * (th_neg - l_neg) * dt - p.sigma_L * dwl;
                if (opt.reflect_l) l_neg_new = std::abs(l_neg_new);
                s_neg = std::max(s_neg_new, 1e-12);
                l_neg = l_neg_new;
            }
            const double pay = 0.5 * disc * (std::max(p.K - s_pos, 0.0) + std::max(p.K - s_neg, 0.0));
            double y = pay - comp;
            double t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            y = pay * pay - compsq;
            t = sumsq + y;
            compsq = (t - sumsq) - y;
            sumsq = t;
        }
        blocks[static_cast<size_t>(b)] = BlockMoments{sum, sumsq, pr_end - pr_begin};
    });

    // ordered cross-block reduction, again compensated
    double sum = 0.0, comp = 0.0, sumsq = 0.0, compsq = 0.0;
    for (const BlockMoments& bm : blocks) {
        double y = bm.sum - comp;
        double t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        y = bm.sumsq - compsq;
        t = sumsq + y;
        compsq = (t - sumsq) - y;
        sumsq = t;
    }

    McPrice out;
    out.n_paths = 2 * n_pairs;
    out.seed = seed;
    out.price = sum / n_pairs;
    if (n_pairs > 1) {
        const double var = std::max(0.0, (sumsq - sum * sum / n_pairs) / (n_pairs - 1));
        out.stderr_ = std::sqrt(var / n_pairs);
    }
    return out;
}

} // namespace amliq
