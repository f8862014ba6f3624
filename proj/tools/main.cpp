#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "amliq/adi.hpp"
#include "amliq/calibration.hpp"
#include "amliq/convergence.hpp"
#include "amliq/data_io.hpp"
#include "amliq/errors.hpp"
#include "amliq/explicit_fd.hpp"
#include "amliq/export_io.hpp"
#include "amliq/mc.hpp"
#include "amliq/params.hpp"
#include "amliq/pipeline.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

// Flag misuse detected after CLI11 parsing (config/flag conflicts, missing
// combinations); maps to exit code 1 like any other bad invocation.
struct FlagError : amliq::Error {
    using amliq::Error::Error;
};

std::string fmt6(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.6g", x);
    return buf;
}

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

std::string jstr(const std::string& s) { return "\"" + json_escape(s) + "\""; }

std::string jnum(double x) {
    if (!std::isfinite(x)) return "null";
    return amliq::format_double17(x);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw amliq::Error("cannot open '" + path + "' for writing");
    out << content;
    if (!out) throw amliq::Error("short write to '" + path + "'");
}

// Reproduction manifest: resolved parameters at 17 significant digits, grid,
// and the run-specific knobs each subcommand registers.
struct Manifest {
    std::string subcommand;
    const amliq::ModelParams* params = nullptr;
    const amliq::Grid* grid = nullptr;
    std::vector<std::pair<std::string, std::string>> run; // pre-rendered JSON
    std::vector<std::string> outputs;

    void add(const std::string& key, double v) { run.emplace_back(key, jnum(v)); }
    void add(const std::string& key, int v) { run.emplace_back(key, std::to_string(v)); }
    void add(const std::string& key, std::uint64_t v) { run.emplace_back(key, std::to_string(v)); }
    void add(const std::string& key, bool v) { run.emplace_back(key, v ? "true" : "false"); }
    void add(const std::string& key, const std::string& v) { run.emplace_back(key, jstr(v)); }

    void write(const std::string& path) const {
        std::ostringstream out;
        out << "{\n";
        out << "  \"tool\": " << jstr("amliq") << ",\n";
        out << "  \"version\": " << jstr(kToolVersion) << ",\n";
        out << "  \"compiler\": " << jstr(__VERSION__) << ",\n";
        out << "  \"subcommand\": " << jstr(subcommand) << ",\n";
        if (params) {
            const amliq::ModelParams& p = *params;
            out << "  \"parameters\": {\n";
            out << "    \"mu\": " << jnum(p.mu) << ",\n";
            out << "    \"alpha\": " << jnum(p.alpha) << ",\n";
            out << "    \"theta_bar\": " << jnum(p.theta_bar) << ",\n";
            out << "    \"sigma_S\": " << jnum(p.sigma_S) << ",\n";
            out << "    \"sigma_L\": " << jnum(p.sigma_L) << ",\n";
            out << "    \"beta\": " << jnum(p.beta) << ",\n";
            out << "    \"rho1\": " << jnum(p.rho1) << ",\n";
            out << "    \"rho2\": " << jnum(p.rho2) << ",\n";
            out << "    \"rho3\": " << jnum(p.rho3) << ",\n";
            out << "    \"lambda\": " << jnum(p.lambda) << ",\n";
            out << "    \"zeta\": " << jnum(p.zeta) << ",\n";
            out << "    \"r\": " << jnum(p.r) << ",\n";
            out << "    \"kappa\": " << jnum(p.kappa) << ",\n";
            out << "    \"kappa_theta\": " << jnum(p.kappa_theta) << ",\n";
            out << "    \"delta_t\": " << jnum(p.delta_t) << ",\n";
            out << "    \"K\": " << jnum(p.K) << ",\n";
            out << "    \"T\": " << jnum(p.T) << "\n";
            out << "  },\n";
        }
        if (grid) {
            out << "  \"grid\": {\n";
            out << "    \"n_s\": " << grid->n_s << ",\n";
            out << "    \"n_l\": " << grid->n_l << ",\n";
            out << "    \"n_t\": " << grid->n_t << ",\n";
            out << "    \"s_max\": " << jnum(grid->s_max) << ",\n";
            out << "    \"l_max\": " << jnum(grid->l_max) << ",\n";
            out << "    \"t_max\": " << jnum(grid->t_max) << "\n";
            out << "  },\n";
        }
        out << "  \"run\": {";
        for (size_t k = 0; k < run.size(); ++k) {
            out << (k ? ",\n    " : "\n    ") << jstr(run[k].first) << ": " << run[k].second;
        }
        out << "\n  },\n";
        out << "  \"outputs\": [";
        for (size_t k = 0; k < outputs.size(); ++k)
            out << (k ? ", " : "") << jstr(outputs[k]);
        out << "]\n}\n";
        write_text_file(path, out.str());
    }
};

// Model-parameter flags shared by every subcommand, with config-file support.
// A key set both in the config file and on the command line is an explicit
// conflict, not an override.
struct ParamCli {
    amliq::ModelParams p;
    std::string config_path;
    std::vector<std::pair<std::string, CLI::Option*>> tracked;

    void attach(CLI::App* cmd) {
        cmd->add_option("--config", config_path, "flat key=value parameter file");
        auto track = [&](const char* flag, const char* key, double& field, const char* help) {
            tracked.emplace_back(key, cmd->add_option(flag, field, help));
        };
        track("--mu", "mu", p.mu, "physical drift (1/yr)");
        track("--alpha", "alpha", p.alpha, "mean-reversion speed of L (1/yr)");
        track("--theta-bar", "theta_bar", p.theta_bar, "long-run illiquidity level");
        track("--sigma-s", "sigma_S", p.sigma_S, "asset volatility");
        track("--sigma-l", "sigma_L", p.sigma_L, "liquidity volatility");
        track("--beta", "beta", p.beta, "price sensitivity to liquidity");
        track("--rho1", "rho1", p.rho1, "corr(W_gamma, W_S)");
        track("--rho2", "rho2", p.rho2, "corr(W_S, W_L)");
        track("--rho3", "rho3", p.rho3, "corr(W_gamma, W_L)");
        track("--lambda", "lambda", p.lambda, "cost sensitivity inside theta(L)");
        track("--zeta", "zeta", p.zeta, "concavity exponent of g(L), in (0,1]");
        track("--r", "r", p.r, "risk-free rate (1/yr)");
        track("--kappa", "kappa", p.kappa, "proportional transaction-cost rate");
        track("--kappa-theta", "kappa_theta", p.kappa_theta,
              "cost rate inside theta(L); defaults to kappa");
        track("--delta-t", "delta_t", p.delta_t, "hedging interval (yr)");
        track("--strike", "K", p.K, "strike");
        track("--maturity", "T", p.T, "maturity (yr)");
    }

    amliq::ModelParams resolve() {
        if (!config_path.empty()) {
            const auto kv = amliq::read_config_file(config_path);
            for (const auto& [key, opt] : tracked) {
                if (kv.count(key) && opt->count() > 0)
                    throw FlagError("'" + key + "' is set both in " + config_path +
                                    " and on the command line");
            }
            amliq::apply_config(p, kv);
        }
        return amliq::validate_params(p);
    }
};

amliq::Side parse_side(const std::string& s) {
    return s == "writer" ? amliq::Side::writer : amliq::Side::holder;
}

std::string with_suffix(const std::string& path, const std::string& suffix) {
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos) return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

bool wants_json(const std::string& path) {
    return path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
}

// ---------------------------------------------------------------------------
// price

struct PriceOpts {
    ParamCli params;
    std::string side = "holder", style = "american";
    double s0 = 8.0, l0 = 0.3;
    int ns = 100, nl = 100, nt = 1000;
    double smax_mult = 8.0, lmax = 5.0;
    bool refine = false;
    int jobs = 1;
    std::string surface_out, boundary_out, manifest_path = "price_manifest.json";
};

int run_price(PriceOpts& o) {
    const amliq::ModelParams p = o.params.resolve();
    const amliq::Grid g = amliq::build_grid(o.ns, o.nl, o.nt, p, o.smax_mult, o.lmax);
    amliq::AdiOptions aopt;
    aopt.jobs = o.jobs;
    aopt.refine_boundary = o.refine;

    const bool want_holder = o.side != "writer";
    const bool want_writer = o.side != "holder";
    const amliq::Style style =
        o.style == "european" ? amliq::Style::european : amliq::Style::american;

    Manifest man;
    man.subcommand = "price";
    man.params = &p;
    man.grid = &g;
    man.add("side", o.side);
    man.add("style", o.style);
    man.add("s0", o.s0);
    man.add("l0", o.l0);
    man.add("s_max_mult", o.smax_mult);
    man.add("refine_boundary", o.refine);
    man.add("jobs", o.jobs);

    if (!o.boundary_out.empty() && style == amliq::Style::european)
        throw FlagError("--boundary-out needs an American-style run");

    amliq::PricingResult holder, writer;
    const amliq::ExerciseBoundary* boundary = nullptr;
    if (style == amliq::Style::american) {
        holder = amliq::price_holder(p, g, aopt);  // the writer needs its boundary
        boundary = &holder.boundary;
        if (want_writer) writer = amliq::price_writer(p, g, holder.boundary, aopt);
    } else {
        if (want_holder) holder = amliq::price_european(p, g, amliq::Side::holder, aopt);
        if (want_writer) writer = amliq::price_european(p, g, amliq::Side::writer, aopt);
    }

    auto emit = [&](const char* label, const amliq::PricingResult& res) {
        const double v = res.price_at(o.s0, o.l0);
        std::printf("%-8s %s\n", label, fmt6(v).c_str());
        man.add(std::string(label) + "_price", v);
        man.add(std::string(label) + "_wall_ms", res.wall_ms);
    };
    if (want_holder) emit("holder", holder);
    if (want_writer) emit("writer", writer);
    if (want_holder || style == amliq::Style::american)
        man.add("degenerate_cfl", holder.degenerate_cfl);

    auto write_surface = [&](const amliq::PricingResult& res, const std::string& path) {
        const std::string text = wants_json(path)
                                     ? amliq::surface_json(res.final_surface, g, g.t_max)
                                     : amliq::surface_csv(res.final_surface, g, g.t_max);
        write_text_file(path, text);
        man.outputs.push_back(path);
    };
    if (!o.surface_out.empty()) {
        if (want_holder && want_writer) {
            write_surface(holder, with_suffix(o.surface_out, "_holder"));
            write_surface(writer, with_suffix(o.surface_out, "_writer"));
        } else {
            write_surface(want_writer ? writer : holder, o.surface_out);
        }
    }
    if (!o.boundary_out.empty() && boundary) {
        const std::string text = wants_json(o.boundary_out)
                                     ? amliq::boundary_json(*boundary, g)
                                     : amliq::boundary_csv(*boundary, g);
        write_text_file(o.boundary_out, text);
        man.outputs.push_back(o.boundary_out);
    }
    man.write(o.manifest_path);
    return 0;
}

// ---------------------------------------------------------------------------
// converge

struct ConvergeOpts {
    ParamCli params;
    std::string direction = "tau", scheme = "adi", side = "both", style = "american";
    std::vector<int> steps;
    int ns = -1, nl = -1, nt = -1; // -1: pick the table defaults per direction
    double s0 = 8.0, l0 = 0.3;
    int jobs = 1;
    std::string out, manifest_path = "converge_manifest.json";
};

void converge_defaults(ConvergeOpts& o, amliq::LadderSpec& spec) {
    const bool adi = o.scheme == "adi";
    if (o.direction == "tau") {
        spec.direction = amliq::LadderDirection::tau;
        if (o.steps.empty())
            o.steps = adi ? std::vector<int>{2000, 3000, 4000, 5000}
                          : std::vector<int>{50000, 100000, 200000};
        spec.n_s = o.ns > 0 ? o.ns : 100;
        spec.n_l = o.nl > 0 ? o.nl : (adi ? 80 : 100);
    } else if (o.direction == "s") {
        spec.direction = amliq::LadderDirection::s;
        if (o.steps.empty()) o.steps = {20, 60, 100, 140};
        spec.n_t = o.nt > 0 ? o.nt : (adi ? 2000 : 100000);
        spec.n_l = o.nl > 0 ? o.nl : 50;
    } else {
        spec.direction = amliq::LadderDirection::l;
        if (o.steps.empty()) o.steps = {20, 35, 50, 65};
        spec.n_t = o.nt > 0 ? o.nt : (adi ? 3000 : 100000);
        spec.n_s = o.ns > 0 ? o.ns : 60;
    }
    spec.steps = o.steps;
}

void print_eoc(const char* title, const std::vector<amliq::EocRow>& rows) {
    std::printf("%s\n%10s %14s %14s %10s\n", title, "steps", "value", "difference", "eoc");
    for (const auto& r : rows) {
        std::printf("%10d %14s %14s %10s\n", r.steps, fmt6(r.value).c_str(),
                    std::isnan(r.difference) ? "-" : fmt6(r.difference).c_str(),
                    std::isnan(r.eoc) ? "-" : fmt6(r.eoc).c_str());
    }
}

std::string merged_eoc_csv(const std::vector<amliq::EocRow>& h,
                           const std::vector<amliq::EocRow>& w) {
    std::string out =
        "steps,holder_value,holder_difference,holder_eoc,"
        "writer_value,writer_difference,writer_eoc\n";
    for (size_t k = 0; k < h.size(); ++k) {
        auto cell = [](double x) { return std::isnan(x) ? std::string() : amliq::format_double(x); };
        out += std::to_string(h[k].steps) + "," + amliq::format_double(h[k].value) + "," +
               cell(h[k].difference) + "," + cell(h[k].eoc) + "," +
               amliq::format_double(w[k].value) + "," + cell(w[k].difference) + "," +
               cell(w[k].eoc) + "\n";
    }
    return out;
}

int run_converge(ConvergeOpts& o) {
    const amliq::ModelParams p = o.params.resolve();
    amliq::LadderSpec spec;
    spec.scheme = o.scheme == "adi" ? amliq::LadderScheme::adi : amliq::LadderScheme::explicit_fd;
    spec.style = o.style == "european" ? amliq::Style::european : amliq::Style::american;
    spec.s0 = o.s0;
    spec.l0 = o.l0;
    spec.adi.jobs = o.jobs;
    converge_defaults(o, spec);

    const bool both = o.side == "both";
    std::vector<amliq::EocRow> rows_h, rows_w;
    if (both || o.side == "holder") {
        spec.side = amliq::Side::holder;
        rows_h = amliq::run_ladder(p, spec);
        print_eoc("holder", rows_h);
    }
    if (both || o.side == "writer") {
        spec.side = amliq::Side::writer;
        rows_w = amliq::run_ladder(p, spec);
        print_eoc("writer", rows_w);
    }

    const std::string out_path =
        o.out.empty() ? "eoc_" + o.direction + "_" + o.scheme + ".csv" : o.out;
    std::string csv;
    if (both) csv = merged_eoc_csv(rows_h, rows_w);
    else csv = amliq::eoc_csv(rows_h.empty() ? rows_w : rows_h);
    write_text_file(out_path, csv);

    Manifest man;
    man.subcommand = "converge";
    man.params = &p;
    man.add("direction", o.direction);
    man.add("scheme", o.scheme);
    man.add("side", o.side);
    man.add("style", o.style);
    man.add("s0", o.s0);
    man.add("l0", o.l0);
    man.add("n_s", spec.n_s);
    man.add("n_l", spec.n_l);
    man.add("n_t", spec.n_t);
    {
        std::string arr = "[";
        for (size_t k = 0; k < o.steps.size(); ++k)
            arr += (k ? ", " : "") + std::to_string(o.steps[k]);
        man.run.emplace_back("steps", arr + "]");
    }
    man.add("jobs", o.jobs);
    man.outputs.push_back(out_path);
    man.write(o.manifest_path);
    return 0;
}

// ---------------------------------------------------------------------------
// compare

struct CompareOpts {
    ParamCli params;
    std::string style = "american";
    std::vector<double> s0s;
    double l0 = 0.3;
    int ns = 100, nl = 100, nt = 1000;
    int explicit_nt = 200000;
    double smax_mult = 8.0, lmax = 5.0;
    bool no_mc = false;
    int mc_paths = 400000, mc_steps = 252;
    std::uint64_t seed = 20240901;
    int jobs = 1;
    std::string out = "compare.csv", manifest_path = "compare_manifest.json";
};

int run_compare(CompareOpts& o) {
    const amliq::ModelParams p = o.params.resolve();
    if (o.s0s.empty()) o.s0s = {8.0, 9.0, 10.0, 11.0, 12.0};
    const amliq::Grid g = amliq::build_grid(o.ns, o.nl, o.nt, p, o.smax_mult, o.lmax);
    const amliq::Grid ge = amliq::build_grid(o.ns, o.nl, o.explicit_nt, p, o.smax_mult, o.lmax);
    amliq::AdiOptions aopt;
    aopt.jobs = o.jobs;
    amliq::ExplicitOptions eopt;
    eopt.jobs = o.jobs;

    Manifest man;
    man.subcommand = "compare";
    man.params = &p;
    man.grid = &g;
    man.add("style", o.style);
    man.add("l0", o.l0);
    man.add("explicit_n_t", o.explicit_nt);
    man.add("jobs", o.jobs);

    std::string csv;
    auto rel = [](double a, double b) { return std::abs(a - b) / std::abs(b); };

    if (o.style == "american") {
        const auto ah = amliq::price_holder(p, g, aopt);
        const auto aw = amliq::price_writer(p, g, ah.boundary, aopt);
        const auto eh = amliq::price_explicit(p, ge, amliq::Side::holder,
                                              amliq::Style::american, nullptr, eopt);
        const auto ew = amliq::price_explicit(p, ge, amliq::Side::writer,
                                              amliq::Style::american, &eh.boundary, eopt);
        csv = "s0,adi_holder,explicit_holder,rel_diff_holder,"
              "adi_writer,explicit_writer,rel_diff_writer\n";
        std::printf("%6s %12s %12s %10s %12s %12s %10s\n", "s0", "adi_h", "expl_h",
                    "rel_h", "adi_w", "expl_w", "rel_w");
        for (double s0 : o.s0s) {
            const double vah = ah.price_at(s0, o.l0), veh = eh.price_at(s0, o.l0);
            const double vaw = aw.price_at(s0, o.l0), vew = ew.price_at(s0, o.l0);
            std::printf("%6s %12s %12s %10s %12s %12s %10s\n", fmt6(s0).c_str(),
                        fmt6(vah).c_str(), fmt6(veh).c_str(), fmt6(rel(vah, veh)).c_str(),
                        fmt6(vaw).c_str(), fmt6(vew).c_str(), fmt6(rel(vaw, vew)).c_str());
            csv += amliq::format_double(s0) + "," + amliq::format_double(vah) + "," +
                   amliq::format_double(veh) + "," + amliq::format_double(rel(vah, veh)) + "," +
                   amliq::format_double(vaw) + "," + amliq::format_double(vew) + "," +
                   amliq::format_double(rel(vaw, vew)) + "\n";
        }
    } else {
        const auto ae = amliq::price_european(p, g, amliq::Side::holder, aopt);
        const auto ee = amliq::price_explicit(p, ge, amliq::Side::holder,
                                              amliq::Style::european, nullptr, eopt);
        amliq::McOptions mopt;
        mopt.n_steps = o.mc_steps;
        mopt.jobs = o.jobs;
        csv = "s0,adi,explicit,rel_diff_adi_explicit,mc,mc_stderr,rel_diff_adi_mc\n";
        std::printf("%6s %12s %12s %10s %12s %12s %10s\n", "s0", "adi", "explicit",
                    "rel", "mc", "mc_se", "rel_mc");
        int point = 0;
        for (double s0 : o.s0s) {
            const double va = ae.price_at(s0, o.l0), ve = ee.price_at(s0, o.l0);
            std::string mc_cell, mcse_cell, relmc_cell;
            std::string mc_disp = "-", mcse_disp = "-", relmc_disp = "-";
            if (!o.no_mc) {
                const auto mc = amliq::price_european_mc(
                    p, s0, o.l0, o.mc_paths, o.seed + static_cast<std::uint64_t>(point), mopt);
                mc_cell = amliq::format_double(mc.price);
                mcse_cell = amliq::format_double(mc.stderr_);
                relmc_cell = amliq::format_double(rel(va, mc.price));
                mc_disp = fmt6(mc.price);
                mcse_disp = fmt6(mc.stderr_);
                relmc_disp = fmt6(rel(va, mc.price));
            }
            std::printf("%6s %12s %12s %10s %12s %12s %10s\n", fmt6(s0).c_str(),
                        fmt6(va).c_str(), fmt6(ve).c_str(), fmt6(rel(va, ve)).c_str(),
                        mc_disp.c_str(), mcse_disp.c_str(), relmc_disp.c_str());
            csv += amliq::format_double(s0) + "," + amliq::format_double(va) + "," +
                   amliq::format_double(ve) + "," + amliq::format_double(rel(va, ve)) + "," +
                   mc_cell + "," + mcse_cell + "," + relmc_cell + "\n";
            ++point;
        }
        man.add("mc_paths", o.mc_paths);
        man.add("mc_steps", o.mc_steps);
        man.add("seed", o.seed);
        man.add("mc", !o.no_mc);
    }
    write_text_file(o.out, csv);
    man.outputs.push_back(o.out);
    man.write(o.manifest_path);
    return 0;
}

// ---------------------------------------------------------------------------
// sweep

struct SweepOpts {
    ParamCli params;
    std::string param = "kappa";
    std::vector<double> values;
    std::string side = "holder", style = "american";
    std::vector<double> s0s{8.0};
    double l0 = 0.3;
    int ns = 100, nl = 100, nt = 1000;
    double smax_mult = 8.0, lmax = 5.0;
    int jobs = 1;
    std::string out = "sweep_boundary.csv", price_out = "sweep_prices.csv";
    std::string manifest_path = "sweep_manifest.json";
};

int run_sweep(SweepOpts& o) {
    if (o.values.empty()) throw FlagError("sweep needs at least one --values entry");
    const amliq::ModelParams base = o.params.resolve();
    const amliq::Style style =
        o.style == "european" ? amliq::Style::european : amliq::Style::american;
    const amliq::Side side = parse_side(o.side);

    std::string bnd_csv = "param,value,L,sf\n";
    std::string price_csv = "param,value,s0,l0,price\n";
    bool have_boundary = false;

    std::printf("%-10s %10s", o.param.c_str(), "value");
    for (double s0 : o.s0s) std::printf(" %12s", ("V(" + fmt6(s0) + ")").c_str());
    std::printf("\n");

    const amliq::Grid g = amliq::build_grid(o.ns, o.nl, o.nt, base, o.smax_mult, o.lmax);
    for (double val : o.values) {
        amliq::ModelParams p = base;
        if (o.param == "kappa") p.kappa = val;
        else if (o.param == "alpha") p.alpha = val;
        else if (o.param == "beta") p.beta = val;
        else p.theta_bar = val;
        amliq::validate_params(p);

        amliq::AdiOptions aopt;
        aopt.jobs = o.jobs;
        aopt.refine_boundary = style == amliq::Style::american;

        amliq::PricingResult res;
        if (style == amliq::Style::european) {
            res = amliq::price_european(p, g, side, aopt);
        } else {
            amliq::PricingResult h = amliq::price_holder(p, g, aopt);
            if (side == amliq::Side::writer) {
                res = amliq::price_writer(p, g, h.boundary, aopt);
                res.refined_sf_final = h.refined_sf_final; // boundary is the holder's
            } else {
                res = std::move(h);
            }
        }
        if (!res.refined_sf_final.empty()) {
            have_boundary = true;
            for (int j = 0; j < g.n_l; ++j) {
                bnd_csv += o.param + "," + amliq::format_double(val) + "," +
                           amliq::format_double(g.l(j)) + "," +
                           amliq::format_double(res.refined_sf_final[static_cast<size_t>(j)]) +
                           "\n";
            }
        }
        std::printf("%-10s %10s", o.param.c_str(), fmt6(val).c_str());
        for (double s0 : o.s0s) {
            const double v = res.price_at(s0, o.l0);
            std::printf(" %12s", fmt6(v).c_str());
            price_csv += o.param + "," + amliq::format_double(val) + "," +
                         amliq::format_double(s0) + "," + amliq::format_double(o.l0) + "," +
                         amliq::format_double(v) + "\n";
        }
        std::printf("\n");
    }

    Manifest man;
    man.subcommand = "sweep";
    man.params = &base;
    man.grid = &g;
    man.add("param", o.param);
    {
        std::string arr = "[";
        for (size_t k = 0; k < o.values.size(); ++k)
            arr += (k ? ", " : "") + jnum(o.values[k]);
        man.run.emplace_back("values", arr + "]");
    }
    man.add("side", o.side);
    man.add("style", o.style);
    man.add("l0", o.l0);
    man.add("jobs", o.jobs);

    write_text_file(o.price_out, price_csv);
    man.outputs.push_back(o.price_out);
    if (have_boundary) {
        write_text_file(o.out, bnd_csv);
        man.outputs.push_back(o.out);
    }
    man.write(o.manifest_path);
    return 0;
}

// ---------------------------------------------------------------------------
// calibrate / evaluate

struct CalibrateOpts_ {
    ParamCli params;
    std::string futures_path;
    int window_len = 762, shift = 5, n_windows = 5;
    double dt = 1.0 / 252.0;
    bool free_lambda_zeta = false, std_errors = false;
    int max_evals = 2000;
    std::string out = "calibration.json", manifest_path = "calibrate_manifest.json";
};

amliq::CalibratePipelineOptions pipeline_options(const CalibrateOpts_& o) {
    amliq::CalibratePipelineOptions copt;
    copt.window_len = o.window_len;
    copt.shift = o.shift;
    copt.n_windows = o.n_windows;
    copt.dt = o.dt;
    copt.calibrate.fix_lambda_zeta = !o.free_lambda_zeta;
    copt.calibrate.compute_std_errors = o.std_errors;
    copt.calibrate.optim.max_evaluations = o.max_evals;
    return copt;
}

void print_fits(const std::vector<amliq::WindowFit>& fits) {
    for (const auto& fit : fits) {
        std::printf("window %d  %s .. %s\n", fit.window_index,
                    amliq::format_date(fit.start).c_str(),
                    amliq::format_date(fit.end).c_str());
        std::printf("  gbm        mu=%s sigma=%s nll=%s\n", fmt6(fit.gbm.mu_hat).c_str(),
                    fmt6(fit.gbm.sigma_hat).c_str(), fmt6(fit.gbm_neg_loglik).c_str());
        std::printf("  liquidity  nll=%s evals=%d converged=%s\n",
                    fmt6(fit.liquidity.neg_loglik).c_str(), fit.liquidity.evaluations,
                    fit.liquidity.converged ? "yes" : "no");
        std::printf("   ");
        for (int k = 0; k < amliq::kThetaDim; ++k)
            std::printf(" %s=%s", amliq::kThetaNames[static_cast<size_t>(k)],
                        fmt6(fit.liquidity.theta_hat[static_cast<size_t>(k)]).c_str());
        std::printf("\n");
    }
}

int run_calibrate(CalibrateOpts_& o) {
    const amliq::ModelParams p = o.params.resolve();
    const amliq::FuturesSeries futures = amliq::load_futures_csv(o.futures_path);
    const auto fits = amliq::calibrate_pipeline(futures, p, pipeline_options(o));
    print_fits(fits);
    write_text_file(o.out, amliq::calibrate_report_json(fits));

    Manifest man;
    man.subcommand = "calibrate";
    man.params = &p;
    man.add("futures", o.futures_path);
    man.add("n_observations", static_cast<int>(futures.size()));
    man.add("window_len", o.window_len);
    man.add("shift", o.shift);
    man.add("n_windows", o.n_windows);
    man.add("dt", o.dt);
    man.add("fix_lambda_zeta", !o.free_lambda_zeta);
    man.add("std_errors", o.std_errors);
    man.add("max_evaluations", o.max_evals);
    man.outputs.push_back(o.out);
    man.write(o.manifest_path);
    return 0;
}

struct EvaluateOpts_ {
    CalibrateOpts_ cal;
    std::string options_path;
    int window_index = 0;
    int ns = 100, nl = 40, nt = 400;
    double s_max_mult = 3.0, l_max = 3.0;
    std::string side = "holder";
    double min_volume = 1200.0, kappa = 0.00005;
    std::string out = "evaluation.json", calibration_out;
};

int run_evaluate(EvaluateOpts_& o) {
    const amliq::ModelParams p = o.cal.params.resolve();
    const amliq::FuturesSeries futures = amliq::load_futures_csv(o.cal.futures_path);
    const auto quotes = amliq::load_options_csv(o.options_path, 0.0);
    const auto fits = amliq::calibrate_pipeline(futures, p, pipeline_options(o.cal));
    if (o.window_index < 0 || o.window_index >= static_cast<int>(fits.size()))
        throw FlagError("--window " + std::to_string(o.window_index) + " out of range (" +
                        std::to_string(fits.size()) + " windows)");
    print_fits({fits[static_cast<size_t>(o.window_index)]});
    if (!o.calibration_out.empty())
        write_text_file(o.calibration_out, amliq::calibrate_report_json(fits));

    amliq::EvaluateOptions eopt;
    eopt.n_s = o.ns;
    eopt.n_l = o.nl;
    eopt.n_t = o.nt;
    eopt.s_max_mult = o.s_max_mult;
    eopt.l_max = o.l_max;
    eopt.side = parse_side(o.side);
    eopt.min_volume = o.min_volume;
    eopt.kappa = o.kappa;
    const auto rep = amliq::evaluate_pipeline(futures, quotes,
                                              fits[static_cast<size_t>(o.window_index)], p, eopt);

    static const char* kBuckets[4] = {"All", "OTM", "ITM", "ATM"};
    std::printf("%-6s %8s %14s %14s\n", "bucket", "count", "model_rmse", "benchmark_rmse");
    for (int k = 0; k < 4; ++k) {
        std::printf("%-6s %8d %14s %14s\n", kBuckets[k], rep.counts[static_cast<size_t>(k)],
                    fmt6(rep.model_rmse[static_cast<size_t>(k)]).c_str(),
                    fmt6(rep.benchmark_rmse[static_cast<size_t>(k)]).c_str());
    }
    write_text_file(o.out, amliq::evaluation_report_json(rep));

    Manifest man;
    man.subcommand = "evaluate";
    man.params = &p;
    man.add("futures", o.cal.futures_path);
    man.add("options", o.options_path);
    man.add("n_quotes_loaded", static_cast<int>(quotes.size()));
    man.add("window", o.window_index);
    man.add("n_s", o.ns);
    man.add("n_l", o.nl);
    man.add("n_t", o.nt);
    man.add("s_max_mult", o.s_max_mult);
    man.add("l_max", o.l_max);
    man.add("side", o.side);
    man.add("min_volume", o.min_volume);
    man.add("kappa", o.kappa);
    man.add("window_len", o.cal.window_len);
    man.add("shift", o.cal.shift);
    man.add("n_windows", o.cal.n_windows);
    man.add("dt", o.cal.dt);
    if (!o.calibration_out.empty()) man.outputs.push_back(o.calibration_out);
    man.outputs.push_back(o.out);
    man.write(o.cal.manifest_path);
    return 0;
}

// ---------------------------------------------------------------------------
// fixtures

struct FixtureOpts {
    ParamCli params;
    std::string futures_out = "futures.csv", options_out = "options.csv";
    double s0 = 3000.0, l0 = 0.25;
    int n_days = 800, quote_every = 21, quotes_per_date = 4;
    double expiry_years = 0.5, volume_low = 800.0, volume_high = 5000.0;
    std::uint64_t seed = 20240601;
    std::string manifest_path = "fixtures_manifest.json";
};

int run_fixtures(FixtureOpts& o) {
    amliq::FixtureSpec spec;
    spec.params = o.params.resolve();
    spec.s0 = o.s0;
    spec.l0 = o.l0;
    spec.n_days = o.n_days;
    spec.quote_every = o.quote_every;
    spec.quotes_per_date = o.quotes_per_date;
    spec.expiry_years = o.expiry_years;
    spec.volume_low = o.volume_low;
    spec.volume_high = o.volume_high;
    spec.seed = o.seed;
    const amliq::FixtureData fx = amliq::generate_fixture(spec);
    amliq::write_fixture(fx, o.futures_out, o.options_out);
    std::printf("futures rows %zu -> %s\n", fx.futures.size(), o.futures_out.c_str());
    std::printf("option quotes %zu -> %s\n", fx.quotes.size(), o.options_out.c_str());

    Manifest man;
    man.subcommand = "fixtures";
    man.params = &spec.params;
    man.add("s0", o.s0);
    man.add("l0", o.l0);
    man.add("n_days", o.n_days);
    man.add("quote_every", o.quote_every);
    man.add("quotes_per_date", o.quotes_per_date);
    man.add("expiry_years", o.expiry_years);
    man.add("volume_low", o.volume_low);
    man.add("volume_high", o.volume_high);
    man.add("seed", o.seed);
    man.outputs.push_back(o.futures_out);
    man.outputs.push_back(o.options_out);
    man.write(o.manifest_path);
    return 0;
}

void attach_common_grid(CLI::App* cmd, int& ns, int& nl, int& nt) {
    cmd->add_option("--ns", ns, "S-direction node count");
    cmd->add_option("--nl", nl, "L-direction node count");
    cmd->add_option("--nt", nt, "time node count");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"American put pricing under stochastic illiquidity with transaction costs"};
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    PriceOpts price;
    auto* cmd_price = app.add_subcommand("price", "one ADI pricing run");
    price.params.attach(cmd_price);
    cmd_price->add_option("--side", price.side)->check(CLI::IsMember({"holder", "writer", "both"}));
    cmd_price->add_option("--style", price.style)->check(CLI::IsMember({"american", "european"}));
    cmd_price->add_option("--s0", price.s0, "query asset price");
    cmd_price->add_option("--l0", price.l0, "query liquidity level");
    attach_common_grid(cmd_price, price.ns, price.nl, price.nt);
    cmd_price->add_option("--smax-mult", price.smax_mult, "s_max as a multiple of K");
    cmd_price->add_option("--lmax", price.lmax, "liquidity-domain upper bound");
    cmd_price->add_flag("--refine", price.refine, "sub-node exercise boundary");
    cmd_price->add_option("--jobs", price.jobs, "worker parallelism cap");
    cmd_price->add_option("--surface-out", price.surface_out, "surface file (.csv or .json)");
    cmd_price->add_option("--boundary-out", price.boundary_out, "boundary file (.csv or .json)");
    cmd_price->add_option("--manifest", price.manifest_path);

    ConvergeOpts conv;
    auto* cmd_conv = app.add_subcommand("converge", "EOC refinement ladders");
    conv.params.attach(cmd_conv);
    cmd_conv->add_option("--direction", conv.direction)->check(CLI::IsMember({"tau", "s", "l"}));
    cmd_conv->add_option("--scheme", conv.scheme)->check(CLI::IsMember({"adi", "explicit"}));
    cmd_conv->add_option("--side", conv.side)->check(CLI::IsMember({"holder", "writer", "both"}));
    cmd_conv->add_option("--style", conv.style)->check(CLI::IsMember({"american", "european"}));
    cmd_conv->add_option("--steps", conv.steps, "refinement ladder")->delimiter(',');
    attach_common_grid(cmd_conv, conv.ns, conv.nl, conv.nt);
    cmd_conv->add_option("--s0", conv.s0);
    cmd_conv->add_option("--l0", conv.l0);
    cmd_conv->add_option("--jobs", conv.jobs);
    cmd_conv->add_option("--out", conv.out, "EOC table CSV path");
    cmd_conv->add_option("--manifest", conv.manifest_path);

    CompareOpts comp;
    auto* cmd_comp = app.add_subcommand("compare", "ADI vs explicit vs Monte Carlo");
    comp.params.attach(cmd_comp);
    cmd_comp->add_option("--style", comp.style)->check(CLI::IsMember({"american", "european"}));
    cmd_comp->add_option("--s0", comp.s0s, "query asset prices")->delimiter(',');
    cmd_comp->add_option("--l0", comp.l0);
    attach_common_grid(cmd_comp, comp.ns, comp.nl, comp.nt);
    cmd_comp->add_option("--explicit-nt", comp.explicit_nt, "time nodes for the explicit run");
    cmd_comp->add_option("--smax-mult", comp.smax_mult);
    cmd_comp->add_option("--lmax", comp.lmax);
    cmd_comp->add_flag("--no-mc", comp.no_mc, "skip the Monte Carlo column");
    cmd_comp->add_option("--mc-paths", comp.mc_paths);
    cmd_comp->add_option("--mc-steps", comp.mc_steps);
    cmd_comp->add_option("--seed", comp.seed);
    cmd_comp->add_option("--jobs", comp.jobs);
    cmd_comp->add_option("--out", comp.out);
    cmd_comp->add_option("--manifest", comp.manifest_path);

    SweepOpts sweep;
    auto* cmd_sweep = app.add_subcommand("sweep", "price/boundary curves over a parameter grid");
    sweep.params.attach(cmd_sweep);
    cmd_sweep->add_option("--param", sweep.param)
        ->check(CLI::IsMember({"kappa", "alpha", "beta", "theta_bar"}));
    cmd_sweep->add_option("--values", sweep.values, "parameter grid")->delimiter(',');
    cmd_sweep->add_option("--side", sweep.side)->check(CLI::IsMember({"holder", "writer"}));
    cmd_sweep->add_option("--style", sweep.style)->check(CLI::IsMember({"american", "european"}));
    cmd_sweep->add_option("--s0", sweep.s0s, "query asset prices")->delimiter(',');
    cmd_sweep->add_option("--l0", sweep.l0);
    attach_common_grid(cmd_sweep, sweep.ns, sweep.nl, sweep.nt);
    cmd_sweep->add_option("--smax-mult", sweep.smax_mult);
    cmd_sweep->add_option("--lmax", sweep.lmax);
    cmd_sweep->add_option("--jobs", sweep.jobs);
    cmd_sweep->add_option("--out", sweep.out, "boundary curves CSV");
    cmd_sweep->add_option("--price-out", sweep.price_out, "price curves CSV");
    cmd_sweep->add_option("--manifest", sweep.manifest_path);

    CalibrateOpts_ cal;
    auto* cmd_cal = app.add_subcommand("calibrate", "windowed GBM + EKF maximum likelihood");
    cal.params.attach(cmd_cal);
    cmd_cal->add_option("--futures", cal.futures_path, "futures CSV (date,close)")->required();
    cmd_cal->add_option("--window-len", cal.window_len);
    cmd_cal->add_option("--shift", cal.shift);
    cmd_cal->add_option("--windows", cal.n_windows);
    cmd_cal->add_option("--dt", cal.dt, "observation spacing in years");
    cmd_cal->add_flag("--free-lambda-zeta", cal.free_lambda_zeta,
                      "estimate lambda and zeta instead of pinning them");
    cmd_cal->add_flag("--std-errors", cal.std_errors, "numerical-Hessian standard errors");
    cmd_cal->add_option("--max-evals", cal.max_evals);
    cmd_cal->add_option("--out", cal.out, "report JSON path");
    cmd_cal->add_option("--manifest", cal.manifest_path);

    EvaluateOpts_ eval;
    auto* cmd_eval = app.add_subcommand("evaluate", "quote-level pricing error by moneyness");
    eval.cal.params.attach(cmd_eval);
    cmd_eval->add_option("--futures", eval.cal.futures_path, "futures CSV (date,close)")->required();
    cmd_eval->add_option("--options", eval.options_path, "option quotes CSV")->required();
    cmd_eval->add_option("--window", eval.window_index, "calibration window to evaluate");
    cmd_eval->add_option("--window-len", eval.cal.window_len);
    cmd_eval->add_option("--shift", eval.cal.shift);
    cmd_eval->add_option("--windows", eval.cal.n_windows);
    cmd_eval->add_option("--dt", eval.cal.dt);
    cmd_eval->add_flag("--free-lambda-zeta", eval.cal.free_lambda_zeta);
    cmd_eval->add_option("--max-evals", eval.cal.max_evals);
    cmd_eval->add_option("--ns", eval.ns, "pricing grid S nodes");
    cmd_eval->add_option("--nl", eval.nl, "pricing grid L nodes");
    cmd_eval->add_option("--nt", eval.nt, "pricing grid time nodes");
    cmd_eval->add_option("--smax-mult", eval.s_max_mult, "s_max as a multiple of spot");
    cmd_eval->add_option("--lmax", eval.l_max);
    cmd_eval->add_option("--side", eval.side)->check(CLI::IsMember({"holder", "writer"}));
    cmd_eval->add_option("--min-volume", eval.min_volume, "liquidity filter");
    cmd_eval->add_option("--eval-kappa", eval.kappa, "exchange fee rate for pricing");
    cmd_eval->add_option("--out", eval.out, "report JSON path");
    cmd_eval->add_option("--calibration-out", eval.calibration_out);
    cmd_eval->add_option("--manifest", eval.cal.manifest_path);

    FixtureOpts fix;
    auto* cmd_fix = app.add_subcommand("fixtures", "synthetic futures/options data");
    fix.params.attach(cmd_fix);
    cmd_fix->add_option("--futures-out", fix.futures_out);
    cmd_fix->add_option("--options-out", fix.options_out);
    cmd_fix->add_option("--s0", fix.s0);
    cmd_fix->add_option("--l0", fix.l0);
    cmd_fix->add_option("--days", fix.n_days);
    cmd_fix->add_option("--quote-every", fix.quote_every);
    cmd_fix->add_option("--quotes-per-date", fix.quotes_per_date);
    cmd_fix->add_option("--expiry-years", fix.expiry_years);
    cmd_fix->add_option("--volume-low", fix.volume_low);
    cmd_fix->add_option("--volume-high", fix.volume_high);
    cmd_fix->add_option("--seed", fix.seed);
    cmd_fix->add_option("--manifest", fix.manifest_path);

    int rc = 0;
    cmd_price->callback([&] { rc = run_price(price); });
    cmd_conv->callback([&] { rc = run_converge(conv); });
    cmd_comp->callback([&] { rc = run_compare(comp); });
    cmd_sweep->callback([&] { rc = run_sweep(sweep); });
    cmd_cal->callback([&] { rc = run_calibrate(cal); });
    cmd_eval->callback([&] { rc = run_evaluate(eval); });
    cmd_fix->callback([&] { rc = run_fixtures(fix); });

    const char* sub = argc > 1 ? argv[1] : "";
    auto diag3 = [&](const char* kind, const std::exception& e) {
        std::fprintf(stderr, "{\"subcommand\": %s, \"error\": %s, \"what\": %s}\n",
                     jstr(sub).c_str(), jstr(kind).c_str(), jstr(e.what()).c_str());
        return 3;
    };
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const FlagError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const amliq::NonPositiveVolatility& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const amliq::CorrelationNotPSD& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const amliq::ZetaOutOfRange& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const amliq::NegativeKappa& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const amliq::GridTooSmall& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const amliq::PointOutsideGrid& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const amliq::InstabilityDetected& e) {
        return diag3("InstabilityDetected", e);
    } catch (const amliq::SingularPivot& e) {
        return diag3("SingularPivot", e);
    } catch (const amliq::DivergedFilter& e) {
        return diag3("DivergedFilter", e);
    } catch (const amliq::InnovationCovSingular& e) {
        return diag3("InnovationCovSingular", e);
    } catch (const amliq::NegativeRadicand& e) {
        return diag3("NegativeRadicand", e);
    } catch (const amliq::NonPositiveSigma& e) {
        return diag3("NonPositiveSigma", e);
    } catch (const amliq::Error& e) {
        // what's left is file/data ingestion
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return rc;
}
