#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "amliq/params.hpp"

namespace amliq {

enum class Measure { risk_neutral, physical };

// Deterministic normal source: mt19937_64 + explicit Box-Muller (library
// normal_distribution is implementation-defined, which would break the
// bitwise-reproducibility contract across toolchains).
class NormalSource {
public:
    explicit NormalSource(std::uint64_t seed) : rng_(seed) {}
    double next();

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// SplitMix64 step; used to derive independent per-block substream seeds from
// the master seed.
std::uint64_t splitmix64(std::uint64_t& state);

// Exact decomposition of the three correlated Brownian increments from three
// independent standard normals. Throws NegativeRadicand when the triple is
// inadmissible (the z3 coefficient would be imaginary).
struct WienerIncrements {
    double d_w_gamma, d_w_s, d_w_l;
};
WienerIncrements correlated_increments(double z1, double z2, double z3,
                                       const ModelParams& p, double dt);

struct PathBatch {
    std::vector<double> s_terminal;
    std::vector<double> l_terminal;
    std::vector<std::vector<double>> l_paths; // filled when keep_l_paths
    std::vector<std::vector<double>> s_paths; // filled when keep_paths
    std::uint64_t seed = 0;
    int n_steps = 0, n_paths = 0;
    Measure measure = Measure::risk_neutral;
};

struct SimulateOptions {
    double s0 = 8.0, l0 = 0.3;
    bool keep_paths = false;     // store full S paths
    bool keep_l_paths = false;   // store full L paths
    bool antithetic = false;
    bool reflect_l = false;      // reflect L at zero instead of |L|^zeta
    int jobs = 1;
};

// Euler-Maruyama on (S, L); drift r under risk_neutral, mu under physical;
// L's drift uses theta_effective (with |L|^zeta once L goes negative, unless
// reflect_l). S floored at 1e-12.
PathBatch simulate_paths(const ModelParams& p, int n_paths, int n_steps,
                         std::uint64_t seed, Measure measure,
                         const SimulateOptions& opt = {});

struct McPrice {
    double price = 0.0;
    double stderr_ = 0.0;
    int n_paths = 0;
    std::uint64_t seed = 0;
};

struct McOptions {
    int n_steps = 252;
    bool reflect_l = false;
    int jobs = 1;
};

// Discounted mean of (K - S_T)^+ under the risk-neutral measure with
// antithetic variates; n_paths counts total paths (antithetic pairs share
// draws). Block-seeded substreams + ordered Kahan reduction keep the result
// identical for any jobs value.
McPrice price_european_mc(const ModelParams& p, double s0, double l0,
                          int n_paths, std::uint64_t seed,
                          const McOptions& opt = {});

} // namespace amliq
