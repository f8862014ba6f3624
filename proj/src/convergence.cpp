#include "amliq/convergence.hpp"

#include "amliq/explicit_fd.hpp"
#include "amliq/export_io.hpp"

#include <cmath>
#include <limits>

namespace amliq {

std::vector<EocRow> eoc_table(const std::vector<int>& steps,
                              const std::vector<double>& values) {
    if (steps.size() != values.size())
        throw LengthMismatch("eoc_table: steps and values differ in length");
    if (steps.empty()) throw EmptyInput("eoc_table: empty ladder");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<EocRow> rows(steps.size());
    for (size_t k = 0; k < steps.size(); ++k) {
        rows[k].steps = steps[k];
        rows[k].value = values[k];
        rows[k].difference = k >= 1 ? std::abs(values[k] - values[k - 1]) : nan;
        rows[k].eoc = nan;
        if (k >= 2 && rows[k].difference > 0.0 && rows[k - 1].difference > 0.0) {
            const double dn = std::log(static_cast<double>(steps[k - 1])) -
                              std::log(static_cast<double>(steps[k]));
            if (dn != 0.0)
                rows[k].eoc =
                    (std::log(rows[k].difference) - std::log(rows[k - 1].difference)) / dn;
        }
    }
    return rows;
}

std::vector<EocRow> run_ladder(const ModelParams& p, const LadderSpec& spec) {
    if (spec.steps.empty()) throw EmptyInput("run_ladder: no rungs");
    std::vector<double> values;
    values.reserve(spec.steps.size());
    for (int rung : spec.steps) {
        int n_s = spec.n_s, n_l = spec.n_l, n_t = spec.n_t;
        switch (spec.direction) {
            case LadderDirection::tau: n_t = rung; break;
            case LadderDirection::s: n_s = rung; break;
            case LadderDirection::l: n_l = rung; break;
        }
        const Grid g = build_grid(n_s, n_l, n_t, p);

        double value;
        if (spec.scheme == LadderScheme::adi) {
            if (spec.style == Style::european) {
                value = price_european(p, g, spec.side, spec.adi).price_at(spec.s0, spec.l0);
            } else if (spec.side == Side::holder) {
                value = price_holder(p, g, spec.adi).price_at(spec.s0, spec.l0);
            } else {
                const PricingResult h = price_holder(p, g, spec.adi);
                value = price_writer(p, g, h.boundary, spec.adi).price_at(spec.s0, spec.l0);
            }
        } else {
            ExplicitOptions eopt;
            eopt.writer_lag = spec.adi.writer_lag;
            if (spec.style == Style::american && spec.side == Side::writer) {
                const PricingResult h = price_explicit(p, g, Side::holder, Style::american,
                                                       nullptr, eopt);
                value = price_explicit(p, g, Side::writer, Style::american,
                                       &h.boundary, eopt).price_at(spec.s0, spec.l0);
            } else {
                value = price_explicit(p, g, spec.side, spec.style, nullptr, eopt)
                            .price_at(spec.s0, spec.l0);
            }
        }
        values.push_back(value);
    }
    return eoc_table(spec.steps, values);
}

std::string eoc_csv(const std::vector<EocRow>& rows) {
    std::string out = "steps,value,difference,eoc\n";
    for (const EocRow& row : rows) {
        out += std::to_string(row.steps) + "," + format_double(row.value) + ",";
        if (!std::isnan(row.difference)) out += format_double(row.difference);
        out += ",";
        if (!std::isnan(row.eoc)) out += format_double(row.eoc);
        out += "\n";
    }
    return out;
}

} // namespace amliq
