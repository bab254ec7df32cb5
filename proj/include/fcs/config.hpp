#ifndef FCS_CONFIG_HPP
#define FCS_CONFIG_HPP

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcs/params.hpp"

namespace fcs {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct NumericsConfig {
    int n_max_override = 0;   // 0: automatic truncation policy
    double tol = 1e-8;        // propagation tolerance
    double chi_step = 1e-2;   // counting-field differentiation step
    double omega_step = 0.0;  // 0: default 1e-4 * gamma
    double horizon = 100.0;   // propagation horizon
};

enum class SweepAxis { Detuning, Squeezing, Kerr };

inline std::string to_string(SweepAxis a) {
    switch (a) {
        case SweepAxis::Detuning: return "detuning";
        case SweepAxis::Squeezing: return "squeezing";
        case SweepAxis::Kerr: return "kerr";
    }
    return "?";
}

// One requested output column; cumulants carry the requested order.
struct OutputSpec {
    std::string kind;  // cfi | qfi | eta | cumulants | distribution
    int order = 0;     // for cumulants
};

struct SweepConfig {
    std::string name;  // output file stem; default "<axis>-sweep"
    SweepAxis axis = SweepAxis::Detuning;
    double start = 0.0;
    double stop = 0.0;
    int points = 0;
    std::vector<std::string> methods;  // meanfield | numeric
    std::vector<OutputSpec> outputs;

    std::vector<double> grid() const {
        std::vector<double> g;
        if (points == 1) {
            g.push_back(start);
            return g;
        }
        for (int k = 0; k < points; ++k) {
            g.push_back(start + (stop - start) * k / (points - 1));
        }
        return g;
    }
};

struct Config {
    ModelParams model;
    NumericsConfig numerics;
    SweepConfig sweep;

    double omega_step() const {
        return numerics.omega_step > 0.0 ? numerics.omega_step : 1e-4 * model.gamma;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid number for '" + key + "': " + v);
    }
}

inline int parse_int(const std::string& key, const std::string& v) {
    try {
        size_t pos = 0;
        const int x = std::stoi(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return x;
    } catch (const std::exception&) {
        throw ConfigError("invalid integer for '" + key + "': " + v);
    }
}

inline std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace detail

inline Config parse_config(std::istream& in) {
    Config cfg;
    cfg.model.beta = std::sqrt(10.0);  // caption default beta^2 = 10
    std::string section;
    std::string line;
    int lineno = 0;
    bool have_sweep = false;
    while (std::getline(in, line)) {
        ++lineno;
        const auto cut = line.find_first_of("#;");
        if (cut != std::string::npos) line = line.substr(0, cut);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
            }
            section = detail::trim(line.substr(1, line.size() - 2));
            if (section != "model" && section != "numerics" && section != "sweep") {
                throw ConfigError("unknown section [" + section + "]");
            }
            if (section == "sweep") have_sweep = true;
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (section == "model") {
            if (key == "omega_delta") cfg.model.omega_delta = detail::parse_double(key, val);
            else if (key == "drive") cfg.model.drive = detail::parse_double(key, val);
            else if (key == "gamma") cfg.model.gamma = detail::parse_double(key, val);
            else if (key == "beta_sq") {
                const double b2 = detail::parse_double(key, val);
                if (b2 < 0.0) throw ConfigError("beta_sq must be nonnegative");
                cfg.model.beta = std::sqrt(b2);
            } else if (key == "r") cfg.model.r = detail::parse_double(key, val);
            else if (key == "u2") cfg.model.u2 = detail::parse_double(key, val);
            else throw ConfigError("unknown key '" + key + "' in [model]");
        } else if (section == "numerics") {
            if (key == "n_max_override") cfg.numerics.n_max_override = detail::parse_int(key, val);
            else if (key == "tol") cfg.numerics.tol = detail::parse_double(key, val);
            else if (key == "chi_step") cfg.numerics.chi_step = detail::parse_double(key, val);
            else if (key == "omega_step") cfg.numerics.omega_step = detail::parse_double(key, val);
            else if (key == "horizon") cfg.numerics.horizon = detail::parse_double(key, val);
            else throw ConfigError("unknown key '" + key + "' in [numerics]");
        } else if (section == "sweep") {
            if (key == "name") cfg.sweep.name = val;
            else if (key == "axis") {
                if (val == "detuning") cfg.sweep.axis = SweepAxis::Detuning;
                else if (val == "squeezing") cfg.sweep.axis = SweepAxis::Squeezing;
                else if (val == "kerr") cfg.sweep.axis = SweepAxis::Kerr;
                else throw ConfigError("unknown sweep axis '" + val + "'");
            } else if (key == "start") cfg.sweep.start = detail::parse_double(key, val);
            else if (key == "stop") cfg.sweep.stop = detail::parse_double(key, val);
            else if (key == "points") cfg.sweep.points = detail::parse_int(key, val);
            else if (key == "methods") {
                cfg.sweep.methods = detail::split_list(val);
                for (const auto& m : cfg.sweep.methods) {
                    if (m != "meanfield" && m != "numeric") {
                        throw ConfigError("unknown method '" + m + "'");
                    }
                }
            } else if (key == "outputs") {
                for (const auto& o : detail::split_list(val)) {
                    OutputSpec spec;
                    const auto colon = o.find(':');
                    spec.kind = o.substr(0, colon);
                    if (spec.kind == "cumulants") {
                        spec.order = colon == std::string::npos
                                         ? 4
                                         : detail::parse_int("cumulants", o.substr(colon + 1));
                        if (spec.order < 1 || spec.order > 6) {
                            throw ConfigError("cumulant order must be in 1..6");
                        }
                    } else if (spec.kind != "cfi" && spec.kind != "qfi" && spec.kind != "eta" &&
                               spec.kind != "distribution") {
                        throw ConfigError("unknown output '" + o + "'");
                    }
                    cfg.sweep.outputs.push_back(spec);
                }
            } else throw ConfigError("unknown key '" + key + "' in [sweep]");
        } else {
            throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
        }
    }
    if (have_sweep) {
        if (cfg.sweep.points < 1) throw ConfigError("[sweep] points must be >= 1");
        if (cfg.sweep.points > 1 && !(cfg.sweep.stop > cfg.sweep.start)) {
            throw ConfigError("[sweep] requires stop > start for more than one point");
        }
        if (cfg.sweep.methods.empty()) throw ConfigError("[sweep] methods must be nonempty");
        if (cfg.sweep.outputs.empty()) throw ConfigError("[sweep] outputs must be nonempty");
        if (cfg.sweep.name.empty()) cfg.sweep.name = to_string(cfg.sweep.axis) + "-sweep";
    }
    try {
        cfg.model.validate();
    } catch (const InvalidParameter& e) {
        throw ConfigError(std::string("invalid model parameters: ") + e.what());
    }
    return cfg;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

}  // namespace fcs

#endif
