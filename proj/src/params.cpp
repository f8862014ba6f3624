#include "amliq/params.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <fstream>
#include <sstream>

namespace amliq {

double correlation_min_eigenvalue(double rho1, double rho2, double rho3) {
    // Correlation matrix of (W_gamma, W_S, W_L): rho1 = (gamma,S),
    // rho2 = (S,L), rho3 = (gamma,L).
    Eigen::Matrix3d c;
    c << 1.0, rho1, rho3,
        rho1, 1.0, rho2,
        rho3, rho2, 1.0;
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(c, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

const ModelParams& validate_params(const ModelParams& p) {
    if (!(p.sigma_S > 0.0))
        throw NonPositiveVolatility("sigma_S must be > 0");
    if (p.sigma_L < 0.0)
        throw NonPositiveVolatility("sigma_L must be >= 0");
    if (!(p.beta > 0.0))
        throw NonPositiveVolatility("beta must be > 0");
    if (p.alpha < 0.0)
        throw NonPositiveVolatility("alpha must be >= 0");
    if (!(p.K > 0.0) || !(p.T > 0.0) || !(p.delta_t > 0.0))
        throw NonPositiveVolatility("K, T, delta_t must be > 0");
    if (p.kappa < 0.0)
        throw NegativeKappa("kappa must be >= 0");
    if (!std::isnan(p.kappa_theta) && p.kappa_theta < 0.0)
        throw NegativeKappa("kappa_theta must be >= 0");
    if (!(p.zeta > 0.0) || p.zeta > 1.0)
        throw ZetaOutOfRange("zeta must lie in (0, 1]");
    for (double rho : {p.rho1, p.rho2, p.rho3})
        if (std::abs(rho) > 1.0)
            throw CorrelationNotPSD("|rho| exceeds 1");
    if (correlation_min_eigenvalue(p.rho1, p.rho2, p.rho3) < -1e-10)
        throw CorrelationNotPSD("correlation matrix of (rho1, rho2, rho3) is not PSD");
    return p;
}

std::map<std::string, double> read_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open config file: " + path);
    static const std::map<std::string, bool> known = {
        {"mu", true}, {"alpha", true}, {"theta_bar", true}, {"sigma_S", true},
        {"sigma_L", true}, {"beta", true}, {"rho1", true}, {"rho2", true},
        {"rho3", true}, {"lambda", true}, {"zeta", true}, {"r", true},
        {"kappa", true}, {"kappa_theta", true}, {"delta_t", true}, {"K", true},
        {"T", true}};
    std::map<std::string, double> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        line = line.substr(first, last - first + 1);
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error("config line " + std::to_string(lineno) + ": expected key=value");
        std::string key = line.substr(0, eq);
        while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
        if (!known.count(key))
            throw Error("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
        const std::string valstr = line.substr(eq + 1);
        size_t used = 0;
        double val = 0.0;
        try {
            val = std::stod(valstr, &used);
        } catch (const std::exception&) {
            throw Error("config line " + std::to_string(lineno) + ": bad number '" + valstr + "'");
        }
        while (used < valstr.size() && (valstr[used] == ' ' || valstr[used] == '\t')) ++used;
        if (used != valstr.size())
            throw Error("config line " + std::to_string(lineno) + ": trailing junk after number");
        if (out.count(key))
            throw Error("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
        out[key] = val;
    }
    return out;
}

void apply_config(ModelParams& p, const std::map<std::string, double>& kv) {
    for (const auto& [key, val] : kv) {
        if (key == "mu") p.mu = val;
        else if (key == "alpha") p.alpha = val;
        else if (key == "theta_bar") p.theta_bar = val;
        else if (key == "sigma_S") p.sigma_S = val;
        else if (key == "sigma_L") p.sigma_L = val;
        else if (key == "beta") p.beta = val;
        else if (key == "rho1") p.rho1 = val;
        else if (key == "rho2") p.rho2 = val;
        else if (key == "rho3") p.rho3 = val;
        else if (key == "lambda") p.lambda = val;
        else if (key == "zeta") p.zeta = val;
        else if (key == "r") p.r = val;
        else if (key == "kappa") p.kappa = val;
        else if (key == "kappa_theta") p.kappa_theta = val;
        else if (key == "delta_t") p.delta_t = val;
        else if (key == "K") p.K = val;
        else if (key == "T") p.T = val;
        else throw Error("apply_config: unknown key '" + key + "'");
    }
}

} // namespace amliq
