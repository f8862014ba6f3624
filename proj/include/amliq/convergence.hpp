#pragma once

#include <string>
#include <vector>

#include "amliq/adi.hpp"

namespace amliq {

// Experimental order of convergence:
//   EOC_{i+2} = (ln D_{i+2} - ln D_{i+1}) / (ln N_{i+1} - ln N_{i+2}),
// D being successive |value differences| along a refinement ladder.
struct EocRow {
    int steps = 0;
    double value = 0.0;
    double difference = 0.0; // NaN on the first row
    double eoc = 0.0;        // NaN on the first two rows
};

std::vector<EocRow> eoc_table(const std::vector<int>& steps,
                              const std::vector<double>& values);

enum class LadderDirection { tau, s, l };
enum class LadderScheme { adi, explicit_fd };

struct LadderSpec {
    LadderDirection direction = LadderDirection::tau;
    LadderScheme scheme = LadderScheme::adi;
    Side side = Side::holder;
    Style style = Style::american;
    std::vector<int> steps;        // ladder in the chosen direction
    int n_s = 100, n_l = 80, n_t = 1000; // fixed counts for other directions
    double s0 = 8.0, l0 = 0.3;
    AdiOptions adi{};
};

// Runs the ladder (reusing the holder boundary for writer-side tables) and
// returns one EOC row per rung.
std::vector<EocRow> run_ladder(const ModelParams& p, const LadderSpec& spec);

std::string eoc_csv(const std::vector<EocRow>& rows);

} // namespace amliq
