#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace twomode::cli {

namespace {

using VT = ValueType;

std::vector<KeySpec> build_schema()
{
    return {
        // Model constants. source = overlap derives Omega, A, B from the integrals.
        {"model", "source", VT::Choice, "frequencies", {"frequencies", "overlap"}, "where Omega, A, B come from"},
        {"model", "omega", VT::Real, "5.388", {}, "Omega"},
        {"model", "a", VT::Real, "1.902", {}, "A"},
        {"model", "b", VT::Real, "2.022", {}, "B"},
        {"model", "j00", VT::Real, "0", {}, "overlap integral J00"},
        {"model", "j01", VT::Real, "0", {}, "overlap integral J01"},
        {"model", "j11", VT::Real, "0", {}, "overlap integral J11"},
        {"model", "e0", VT::Real, "0", {}, "linear level E0"},
        {"model", "e1", VT::Real, "0", {}, "linear level E1"},
        {"model", "lambda", VT::Real, "0", {}, "nonlinearity"},
        {"model", "hbar", VT::Real, "1", {}, "Planck constant"},

        {"run", "seed", VT::Integer, "1", {}, "base seed for noise"},
        {"run", "workers", VT::Integer, "0", {}, "worker threads (0: TWOMODE_WORKERS or all cores)"},
        {"run", "precision", VT::Integer, "17", {}, "significant digits in tables"},

        {"portrait", "energies", VT::RealList, "-3.7, -3.486, 0, 5", {}, "one orbit per energy"},
        {"portrait", "points", VT::Integer, "512", {}, "rows per orbit"},
        {"portrait", "dt", VT::Real, "1e-3", {}, "integrator step"},

        {"scan-threshold", "system", VT::Choice, "bloch", {"bloch", "duffing", "duffing-slowflow"}, "model to scan"},
        {"scan-threshold", "omega_min", VT::Real, "0.3", {}, "grid start, in units of Omega0"},
        {"scan-threshold", "omega_max", VT::Real, "1.6", {}, "grid end, in units of Omega0"},
        {"scan-threshold", "omega_steps", VT::Integer, "27", {}, "grid points"},
        {"scan-threshold", "omegas", VT::RealList, "", {}, "explicit absolute frequencies (replaces the grid)"},
        {"scan-threshold", "phi", VT::Real, "0", {}, "drive phase"},
        {"scan-threshold", "horizon_periods", VT::Real, "200", {}, "detection horizon in drive periods"},
        {"scan-threshold", "tmax", VT::OptionalReal, "auto", {}, "fixed detection horizon (overrides periods)"},
        {"scan-threshold", "f_lo", VT::Real, "0", {}, "bracket low end"},
        {"scan-threshold", "f_hi", VT::Real, "0.4", {}, "bracket high end (doubled while it fails)"},
        {"scan-threshold", "iters", VT::Integer, "20", {}, "bisection iterations"},
        {"scan-threshold", "margin_fraction", VT::Real, "0.05", {}, "core margin / (Esep - Eminus)"},
        {"scan-threshold", "dt", VT::Real, "1e-3", {}, "integrator step"},

        {"scan-duffing", "omega_min", VT::Real, "0.7", {}, "grid start"},
        {"scan-duffing", "omega_max", VT::Real, "1.3", {}, "grid end"},
        {"scan-duffing", "omega_steps", VT::Integer, "25", {}, "grid points"},
        {"scan-duffing", "omegas", VT::RealList, "", {}, "explicit frequencies (replaces the grid)"},
        {"scan-duffing", "numeric", VT::Boolean, "true", {}, "run the direct simulation"},
        {"scan-duffing", "horizon_periods", VT::Real, "400", {}, "escape horizon in drive periods"},
        {"scan-duffing", "f_lo", VT::Real, "0", {}, "bracket low end"},
        {"scan-duffing", "f_hi", VT::Real, "0.4", {}, "bracket high end"},
        {"scan-duffing", "iters", VT::Integer, "20", {}, "bisection iterations"},
        {"scan-duffing", "dt", VT::Real, "1e-3", {}, "integrator step"},
        {"scan-duffing", "variant", VT::Choice, "paper", {"paper", "linear", "standard-averaging"}, "slow-flow equations"},
        {"scan-duffing", "tmax", VT::Real, "1e4", {}, "slow-flow horizon"},

        {"melnikov", "omegas", VT::RealList, "2.887", {}, "drive frequencies"},
        {"melnikov", "amplitude", VT::Real, "0.2", {}, "F"},
        {"melnikov", "eps_saddle", VT::Real, "1e-8", {}, "window end: Delta = -1 + eps"},
        {"melnikov", "dt", VT::Real, "1e-3", {}, "integrator step"},
        {"melnikov", "tail_tol", VT::Real, "1e-2", {}, "largest |dV/dt| at the window ends"},

        {"histogram", "mode", VT::Choice, "harmonic-histogram", {"harmonic-histogram", "invariant-theory", "langevin-histogram"}, "what to tabulate"},
        {"histogram", "amplitude", VT::Real, "0.2", {}, "harmonic F"},
        {"histogram", "omega", VT::Real, "2.887", {}, "harmonic frequency"},
        {"histogram", "phi", VT::Real, "0", {}, "harmonic phase"},
        {"histogram", "periods", VT::Real, "1e4", {}, "harmonic run length in drive periods"},
        {"histogram", "delta_e", VT::OptionalReal, "auto", {}, "layer half-width (auto: Melnikov)"},
        {"histogram", "bins", VT::Integer, "60", {}, "energy bins"},
        {"histogram", "e_min", VT::OptionalReal, "auto", {}, "grid start (auto: Eminus)"},
        {"histogram", "e_max", VT::OptionalReal, "auto", {}, "grid end (auto: Esep + 3 dE, or Eplus for noise)"},
        {"histogram", "s0", VT::Real, "0.1", {}, "noise spectral density"},
        {"histogram", "noise_dt", VT::Real, "1e-2", {}, "noise sample step"},
        {"histogram", "tmax", VT::Real, "4000", {}, "noise run length"},
        {"histogram", "dt", VT::OptionalReal, "auto", {}, "integrator step (auto: 1e-3 harmonic, noise_dt noise)"},
        {"histogram", "stride", VT::Integer, "10", {}, "use every n-th step"},

        {"diffusion", "mode", VT::Choice, "profile", {"profile", "points"}, "grid profile or listed energies"},
        {"diffusion", "method", VT::Choice, "time-integral", {"time-integral", "fourier-sum"}, "evaluation of D"},
        {"diffusion", "cutoff", VT::OptionalReal, "none", {}, "band limit (none: white)"},
        {"diffusion", "well_cells", VT::Integer, "40", {}, "cells on [Eminus, Esep]"},
        {"diffusion", "upper_cells", VT::Integer, "120", {}, "cells on [Esep, Eplus]"},
        {"diffusion", "eps_fraction", VT::Real, "1e-3", {}, "one-sided offset at Esep / (Eplus - Eminus)"},
        {"diffusion", "k_max", VT::Integer, "256", {}, "harmonics for the Fourier sum"},
        {"diffusion", "energies", VT::RealList, "-3.7, 0, 5", {}, "energies for mode = points"},

        {"langevin", "mode", VT::Choice, "trajectory", {"trajectory", "ensemble"}, "single run or ensemble statistics"},
        {"langevin", "s0", VT::Real, "1e-3", {}, "noise spectral density"},
        {"langevin", "cutoff", VT::OptionalReal, "none", {}, "band limit (none: white)"},
        {"langevin", "noise_dt", VT::Real, "1e-2", {}, "noise sample step"},
        {"langevin", "dt", VT::Real, "1e-2", {}, "integrator step (divides noise_dt)"},
        {"langevin", "tmax", VT::Real, "100", {}, "run length"},
        {"langevin", "stride", VT::Integer, "10", {}, "rows every n steps"},
        {"langevin", "start_delta", VT::OptionalReal, "auto", {}, "trajectory start Delta (auto: Delta0)"},
        {"langevin", "start_theta", VT::Real, "0", {}, "trajectory start Theta"},
        {"langevin", "members", VT::Integer, "1000", {}, "ensemble size"},
        {"langevin", "start_energy", VT::OptionalReal, "auto", {}, "ensemble orbit energy (auto: mid-well)"},

        {"fp", "init", VT::Choice, "stationary", {"stationary", "point-left"}, "initial density"},
        {"fp", "tmax", VT::Real, "10", {}, "evolution time"},
        {"fp", "dt", VT::OptionalReal, "auto", {}, "PDE step (auto: 0.9 of the stable step)"},
        {"fp", "s0", VT::Real, "1", {}, "noise spectral density"},
        {"fp", "snapshots", VT::Integer, "1", {}, "tables written, evenly spaced in time"},
        {"fp", "well_cells", VT::Integer, "40", {}, "cells on [Eminus, Esep]"},
        {"fp", "upper_cells", VT::Integer, "120", {}, "cells on [Esep, Eplus]"},
        {"fp", "method", VT::Choice, "time-integral", {"time-integral", "fourier-sum"}, "evaluation of D"},
        {"fp", "cutoff", VT::OptionalReal, "none", {}, "band limit (none: white)"},
    };
}

bool parse_real(const std::string& s, double& out)
{
    const std::string t = trim(s);
    if (t.empty()) {
        return false;
    }
    errno = 0;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return errno == 0 && end == t.c_str() + t.size() && std::isfinite(out);
}

bool is_auto(const std::string& s)
{
    const std::string t = trim(s);
    return t == "auto" || t == "none";
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(trim(item));
    }
    if (!out.empty() && out.back().empty() && !s.empty() && s.back() == ',') {
        out.pop_back();
    }
    return out;
}

} // namespace

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

const std::vector<KeySpec>& schema()
{
    static const std::vector<KeySpec> s = build_schema();
    return s;
}

Config::Config()
{
    for (const auto& k : schema()) {
        values_[k.name()] = k.default_value;
        explicit_[k.name()] = false;
    }
}

const KeySpec& Config::spec(const std::string& name) const
{
    for (const auto& k : schema()) {
        if (k.name() == name) {
            return k;
        }
    }
    throw ConfigError("unknown configuration key '" + name + "'");
}

bool Config::has_key(const std::string& name) const
{
    return values_.count(name) != 0;
}

bool Config::is_explicit(const std::string& name) const
{
    auto it = explicit_.find(name);
    return it != explicit_.end() && it->second;
}

void Config::validate(const KeySpec& k, const std::string& value) const
{
    auto fail = [&](const std::string& why) {
        throw ConfigError(k.name() + " = '" + value + "': " + why);
    };
    double x = 0.0;
    switch (k.type) {
    case VT::Real:
        if (!parse_real(value, x)) {
            fail("expected a finite number");
        }
        break;
    case VT::OptionalReal:
        if (!is_auto(value) && !parse_real(value, x)) {
            fail("expected a finite number or auto/none");
        }
        break;
    case VT::Integer:
        if (!parse_real(value, x) || x != std::floor(x) || std::abs(x) > 9e15) {
            fail("expected an integer");
        }
        break;
    case VT::Boolean: {
        const std::string t = trim(value);
        if (t != "true" && t != "false" && t != "1" && t != "0") {
            fail("expected true or false");
        }
        break;
    }
    case VT::Text:
        break;
    case VT::RealList:
        for (const auto& item : split_list(value)) {
            if (!parse_real(item, x)) {
                fail("expected a comma-separated list of numbers");
            }
        }
        break;
    case VT::Choice:
        if (std::find(k.choices.begin(), k.choices.end(), trim(value)) == k.choices.end()) {
            std::string all;
            for (const auto& c : k.choices) {
                all += (all.empty() ? "" : ", ") + c;
            }
            fail("expected one of " + all);
        }
        break;
    }
}

void Config::set(const std::string& name, const std::string& value)
{
    const KeySpec& k = spec(name);
    validate(k, value);
    values_[name] = trim(value);
    explicit_[name] = true;
}

void Config::load_text(const std::string& text, const std::string& origin, bool model_only)
{
    namespace pt = boost::property_tree;
    pt::ptree tree;
    std::istringstream in(text);
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError(origin + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    for (const auto& [section, body] : tree) {
        if (body.empty()) {
            throw ConfigError(origin + ": key '" + section + "' outside a [section]");
        }
        if (model_only && section != "model") {
            throw ConfigError(origin + ": only [model] is allowed in a parameter file");
        }
        for (const auto& [key, value] : body) {
            const std::string name = section + "." + key;
            if (!has_key(name)) {
                throw ConfigError(origin + ": unknown key '" + name + "'");
            }
            set(name, value.data());
        }
    }
}

void Config::load_file(const std::string& path, bool model_only)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot read '" + path + "'");
    }
    std::stringstream ss;
    ss << in.rdbuf();
    load_text(ss.str(), path, model_only);
}

double Config::real(const std::string& name) const
{
    double x = 0.0;
    if (!parse_real(values_.at(spec(name).name()), x)) {
        throw ConfigError(name + " is not a number");
    }
    return x;
}

std::optional<double> Config::optional_real(const std::string& name) const
{
    const std::string& v = values_.at(spec(name).name());
    if (is_auto(v)) {
        return std::nullopt;
    }
    return real(name);
}

long long Config::integer(const std::string& name) const
{
    return static_cast<long long>(real(name));
}

bool Config::boolean(const std::string& name) const
{
    const std::string& v = values_.at(spec(name).name());
    return v == "true" || v == "1";
}

std::string Config::text(const std::string& name) const
{
    return values_.at(spec(name).name());
}

std::vector<double> Config::real_list(const std::string& name) const
{
    std::vector<double> out;
    for (const auto& item : split_list(values_.at(spec(name).name()))) {
        double x = 0.0;
        parse_real(item, x);
        out.push_back(x);
    }
    return out;
}

std::vector<std::string> Config::echo(const std::vector<std::string>& sections) const
{
    std::vector<std::string> lines;
    for (const auto& k : schema()) {
        if (std::find(sections.begin(), sections.end(), k.section) != sections.end()) {
            lines.push_back(k.name() + " = " + values_.at(k.name()));
        }
    }
    return lines;
}

} // namespace twomode::cli
