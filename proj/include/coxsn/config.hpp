#pragma once

// Declarative experiment configuration (JSON).

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "coxsn/random_measure.hpp"
#include "coxsn/shot_noise.hpp"

namespace coxsn {

using json = nlohmann::json;

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

namespace config_detail {

inline void require_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

inline void check_keys(const json& j, const std::string& where, std::set<std::string> allowed) {
    require_object(j, where);
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
    }
}

inline double number(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key)) throw ConfigError(where + ": missing '" + key + "'");
    if (!j.at(key).is_number()) throw ConfigError(where + ": '" + key + "' must be a number");
    return j.at(key).get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback, const std::string& where) {
    return j.contains(key) ? number(j, key, where) : fallback;
}

inline std::vector<double> numbers(const json& j, const std::string& key, const std::string& where) {
    if (!j.contains(key) || !j.at(key).is_array()) throw ConfigError(where + ": '" + key + "' must be an array");
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) throw ConfigError(where + ": '" + key + "' must hold numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

inline std::string type_of(const json& j, const std::string& where) {
    require_object(j, where);
    if (!j.contains("type") || !j.at("type").is_string()) throw ConfigError(where + ": missing string 'type'");
    return j.at("type").get<std::string>();
}

// Re-throw model validation failures as configuration errors.
template <class F>
auto validated(const std::string& where, F&& make) {
    try {
        return make();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
    }
}

}  // namespace config_detail

inline JumpDistribution parse_jumps(const json& j, const std::string& where = "jumps") {
    using namespace config_detail;
    auto type = type_of(j, where);
    JumpDistribution out;
    if (type == "degenerate") {
        check_keys(j, where, {"type", "value"});
        out = DegenerateJump{number_or(j, "value", 1.0, where)};
    } else if (type == "exponential") {
        check_keys(j, where, {"type", "rate"});
        out = ExponentialJump{number(j, "rate", where)};
    } else if (type == "gamma") {
        check_keys(j, where, {"type", "shape", "rate"});
        out = GammaJump{number(j, "shape", where), number(j, "rate", where)};
    } else {
        throw ConfigError(where + ": unknown jump type '" + type + "'");
    }
    validated(where, [&] {
        validate(out);
        return 0;
    });
    return out;
}

inline RateFunction parse_rate(const json& j, const std::string& where = "rate") {
    using namespace config_detail;
    auto type = type_of(j, where);
    RateFunction out;
    if (type == "constant") {
        check_keys(j, where, {"type", "value"});
        out = ConstantRate{number(j, "value", where)};
    } else if (type == "linear") {
        check_keys(j, where, {"type", "intercept", "slope"});
        out = LinearRate{number(j, "intercept", where), number(j, "slope", where)};
    } else if (type == "piecewise") {
        check_keys(j, where, {"type", "knots", "values"});
        out = PiecewiseConstantRate{numbers(j, "knots", where), numbers(j, "values", where)};
    } else {
        throw ConfigError(where + ": unknown rate type '" + type + "'");
    }
    validated(where, [&] {
        validate(out);
        return 0;
    });
    return out;
}

inline MeasureModel parse_measure(const json& j, const std::string& where = "measure") {
    using namespace config_detail;
    auto type = type_of(j, where);
    return validated(where, [&]() -> MeasureModel {
        if (type == "gamma") {
            check_keys(j, where, {"type", "shape", "rate"});
            return GammaProcess{number(j, "shape", where), number(j, "rate", where)};
        }
        if (type == "poisson") {
            check_keys(j, where, {"type", "rate"});
            return PoissonCounting{number(j, "rate", where)};
        }
        if (type == "compound_poisson") {
            check_keys(j, where, {"type", "rate", "jumps"});
            if (!j.contains("jumps")) throw ConfigError(where + ": missing 'jumps'");
            return CompoundPoisson{number(j, "rate", where), parse_jumps(j.at("jumps"), where + ".jumps")};
        }
        if (type == "deterministic") {
            check_keys(j, where, {"type", "slope"});
            return Deterministic{number(j, "slope", where)};
        }
        if (type == "mixed_poisson") {
            check_keys(j, where, {"type", "values", "probabilities"});
            return MixedPoisson{numbers(j, "values", where), numbers(j, "probabilities", where)};
        }
        if (type == "general_additive") {
            check_keys(j, where, {"type", "rate", "jumps"});
            if (!j.contains("rate") || !j.contains("jumps")) throw ConfigError(where + ": needs 'rate' and 'jumps'");
            return GeneralAdditive{
                {parse_rate(j.at("rate"), where + ".rate"), parse_jumps(j.at("jumps"), where + ".jumps")}};
        }
        throw ConfigError(where + ": unknown measure type '" + type + "'");
    });
}

inline PaymentModel parse_payment(const json& j, const std::string& where = "payment") {
    using namespace config_detail;
    auto type = type_of(j, where);
    return validated(where, [&]() -> PaymentModel {
        if (type == "zero") {
            check_keys(j, where, {"type"});
            return ZeroPayment{};
        }
        if (type == "indicator") {
            check_keys(j, where, {"type"});
            return UnitIndicator{};
        }
        if (type == "exponential_decay") {
            check_keys(j, where, {"type", "total", "decay"});
            return ExponentialDecayPoisson{number_or(j, "total", 5.0, where), number_or(j, "decay", 1.0, where)};
        }
        if (type == "thinned_poisson") {
            check_keys(j, where, {"type", "intensity"});
            if (!j.contains("intensity")) throw ConfigError(where + ": missing 'intensity'");
            return ThinnedPoisson{parse_rate(j.at("intensity"), where + ".intensity")};
        }
        throw ConfigError(where + ": unknown payment type '" + type + "'");
    });
}

/// Compact model syntax used on the command line:
///   gamma:SHAPE,RATE  poisson:RATE  deterministic:SLOPE
///   compound_poisson:RATE,EXP_JUMP_RATE  mixed_poisson:V1,V2,... (equal weights)
inline json measure_json_from_shorthand(const std::string& text) {
    auto colon = text.find(':');
    std::string type = text.substr(0, colon);
    std::vector<double> args;
    if (colon != std::string::npos) {
        std::stringstream ss(text.substr(colon + 1));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            try {
                std::size_t used = 0;
                args.push_back(std::stod(tok, &used));
                if (used != tok.size()) throw std::invalid_argument(tok);
            } catch (const std::exception&) {
                throw ConfigError("model '" + text + "': bad number '" + tok + "'");
            }
        }
    }
    auto need = [&](std::size_t n) {
        if (args.size() != n) throw ConfigError("model '" + text + "': expected " + std::to_string(n) + " parameters");
    };
    if (type == "gamma") {
        need(2);
        return {{"type", "gamma"}, {"shape", args[0]}, {"rate", args[1]}};
    }
    if (type == "poisson") {
        need(1);
        return {{"type", "poisson"}, {"rate", args[0]}};
    }
    if (type == "deterministic") {
        need(1);
        return {{"type", "deterministic"}, {"slope", args[0]}};
    }
    if (type == "compound_poisson") {
        need(2);
        return {{"type", "compound_poisson"}, {"rate", args[0]}, {"jumps", {{"type", "exponential"}, {"rate", args[1]}}}};
    }
    if (type == "mixed_poisson") {
        if (args.empty()) throw ConfigError("model '" + text + "': needs at least one value");
        std::vector<double> probs(args.size(), 1.0 / static_cast<double>(args.size()));
        return {{"type", "mixed_poisson"}, {"values", args}, {"probabilities", probs}};
    }
    throw ConfigError("unknown model '" + type + "'");
}

struct OutputPaths {
    std::string path;      // time,M
    std::string arrivals;  // T_j,payment_jump_times
    std::string measure;   // time,mass_increment
    std::string cox;       // arrival_time,multiplicity
};

struct ExperimentConfig {
    json measure_spec;
    json payment_spec;
    MeasureModel measure = Deterministic{0.0};
    PaymentModel payment = ZeroPayment{};
    double horizon = 1.0;
    std::vector<double> grid;
    std::uint64_t seed = 1;
    int knots_per_unit = SampleOptions{}.knots_per_unit;
    OutputPaths outputs;

    SampleOptions sampling() const { return {knots_per_unit}; }

    /// The configuration with every default filled in.
    json resolved() const {
        json out;
        out["measure"] = measure_spec;
        out["payment"] = payment_spec;
        out["horizon"] = horizon;
        out["grid"] = grid;
        out["seed"] = seed;
        out["knots_per_unit"] = knots_per_unit;
        json o = json::object();
        if (!outputs.path.empty()) o["path"] = outputs.path;
        if (!outputs.arrivals.empty()) o["arrivals"] = outputs.arrivals;
        if (!outputs.measure.empty()) o["measure"] = outputs.measure;
        if (!outputs.cox.empty()) o["cox"] = outputs.cox;
        out["outputs"] = o;
        return out;
    }
};

/// Validates the whole tree before anything is sampled. `grid` is either an
/// explicit increasing array in (0, horizon] or {"points": n}.
inline ExperimentConfig parse_experiment(const json& j) {
    using namespace config_detail;
    check_keys(j, "config", {"measure", "payment", "horizon", "grid", "seed", "knots_per_unit", "outputs"});
    ExperimentConfig c;
    if (!j.contains("measure")) throw ConfigError("config: missing 'measure'");
    c.measure_spec = j.at("measure");
    c.measure = parse_measure(c.measure_spec);
    c.payment_spec = j.contains("payment") ? j.at("payment") : json{{"type", "zero"}};
    c.payment = parse_payment(c.payment_spec);
    c.horizon = number(j, "horizon", "config");
    if (!(c.horizon > 0.0)) throw ConfigError("config: 'horizon' must be positive");
    if (j.contains("seed")) {
        if (!j.at("seed").is_number_unsigned()) throw ConfigError("config: 'seed' must be a non-negative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    if (j.contains("knots_per_unit")) {
        if (!j.at("knots_per_unit").is_number_integer() || j.at("knots_per_unit").get<int>() < 1)
            throw ConfigError("config: 'knots_per_unit' must be a positive integer");
        c.knots_per_unit = j.at("knots_per_unit").get<int>();
    }
    const json grid = j.contains("grid") ? j.at("grid") : json{{"points", 100}};
    if (grid.is_array()) {
        c.grid = numbers(j, "grid", "config");
    } else {
        check_keys(grid, "grid", {"points"});
        if (!grid.contains("points") || !grid.at("points").is_number_integer() || grid.at("points").get<long>() < 1)
            throw ConfigError("grid: 'points' must be a positive integer");
        c.grid = uniform_grid(c.horizon, grid.at("points").get<std::size_t>());
    }
    validated("grid", [&] {
        check_grid(c.grid, c.horizon);
        return 0;
    });
    if (c.grid.empty()) throw ConfigError("grid: needs at least one point");
    if (j.contains("outputs")) {
        const auto& o = j.at("outputs");
        check_keys(o, "outputs", {"path", "arrivals", "measure", "cox"});
        auto str = [&](const char* key, std::string& dst) {
            if (!o.contains(key)) return;
            if (!o.at(key).is_string()) throw ConfigError(std::string("outputs: '") + key + "' must be a string");
            dst = o.at(key).get<std::string>();
        };
        str("path", c.outputs.path);
        str("arrivals", c.outputs.arrivals);
        str("measure", c.outputs.measure);
        str("cox", c.outputs.cox);
    }
    return c;
}

inline json read_json_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open '" + file + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + file + "': " + e.what());
    }
}

inline ExperimentConfig load_experiment(const std::string& file) { return parse_experiment(read_json_file(file)); }

}  // namespace coxsn
