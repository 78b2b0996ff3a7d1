#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "heat_grid.hpp"
#include "integrator.hpp"
#include "linear_system.hpp"
#include "potential.hpp"
#include "test_functions.hpp"

namespace moyo {

using json = nlohmann::json;

namespace cfg {

[[noreturn]] inline void fail(const std::string& path, const std::string& msg) {
    throw ConfigError("config error at " + path + ": " + msg);
}

inline void check_keys(const json& j, const std::string& path,
                       const std::vector<std::string>& allowed) {
    if (!j.is_object()) fail(path, "expected an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const auto& k : allowed)
            if (it.key() == k) { ok = true; break; }
        if (!ok) fail(path + "." + it.key(), "unknown key");
    }
}

inline const json& need(const json& j, const std::string& path, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing required key");
    return *it;
}

inline double num(const json& j, const std::string& path, const std::string& key) {
    const json& v = need(j, path, key);
    if (!v.is_number()) fail(path + "." + key, "expected a number");
    return v.get<double>();
}

inline double num_or(const json& j, const std::string& path, const std::string& key,
                     double fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number()) fail(path + "." + key, "expected a number");
    return it->get<double>();
}

inline long long integer(const json& j, const std::string& path, const std::string& key) {
    const json& v = need(j, path, key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<long long>();
}

inline long long integer_or(const json& j, const std::string& path, const std::string& key,
                            long long fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_number_integer()) fail(path + "." + key, "expected an integer");
    return it->get<long long>();
}

inline std::string str(const json& j, const std::string& path, const std::string& key) {
    const json& v = need(j, path, key);
    if (!v.is_string()) fail(path + "." + key, "expected a string");
    return v.get<std::string>();
}

inline bool flag_or(const json& j, const std::string& path, const std::string& key,
                    bool fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    if (!it->is_boolean()) fail(path + "." + key, "expected a boolean");
    return it->get<bool>();
}

inline std::vector<double> num_array(const json& v, const std::string& path) {
    if (!v.is_array() || v.empty()) fail(path, "expected a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : v) {
        if (!e.is_number()) fail(path, "expected numbers only");
        out.push_back(e.get<double>());
    }
    return out;
}

inline std::vector<double> num_array(const json& j, const std::string& path,
                                     const std::string& key) {
    return num_array(need(j, path, key), path + "." + key);
}

inline Vec to_vec(const std::vector<double>& v) {
    Vec x(static_cast<int>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) x[static_cast<int>(i)] = v[i];
    return x;
}

}  // namespace cfg

// A configured base system: either a plain diagonal/OU system or a heat grid
// (which also carries its grid geometry and orthant constraint).
struct SystemConfig {
    LinearSystem system;
    std::optional<HeatGridSystem> heat;
    json resolved;
};

inline SystemConfig make_system(const json& j, const std::string& path) {
    cfg::check_keys(j, path, {"kind", "omega", "eigenvalues", "dim", "barrier"});
    const std::string kind = cfg::str(j, path, "kind");
    if (kind == "ou") {
        const double omega = cfg::num(j, path, "omega");
        return {ou_system(omega), std::nullopt, json{{"kind", "ou"}, {"omega", omega}}};
    }
    if (kind == "diagonal") {
        const auto ev = cfg::num_array(j, path, "eigenvalues");
        return {LinearSystem::diagonal(cfg::to_vec(ev)), std::nullopt,
                json{{"kind", "diagonal"}, {"eigenvalues", ev}}};
    }
    if (kind == "heat_grid") {
        const int d = static_cast<int>(cfg::integer(j, path, "dim"));
        const double barrier = cfg::num_or(j, path, "barrier", 0.0);
        HeatGridSystem h = build_heat_grid(d, barrier);
        LinearSystem sys = h.system;
        return {std::move(sys), std::move(h),
                json{{"kind", "heat_grid"}, {"dim", d}, {"barrier", barrier}}};
    }
    cfg::fail(path + ".kind", "unknown system kind '" + kind +
                                  "' (expected ou, diagonal, or heat_grid)");
}

inline ConvexPotential make_potential(const json& j, const std::string& path, int dim,
                                      json* resolved = nullptr) {
    cfg::check_keys(j, path, {"kind", "lo", "hi", "center", "radius", "weight", "shift"});
    const std::string kind = cfg::str(j, path, "kind");
    json echo{{"kind", kind}};
    ConvexPotential out = ConvexPotential::zero(dim);
    if (kind == "zero") {
        // keep the flat potential
    } else if (kind == "halfline") {
        if (dim != 1) cfg::fail(path, "halfline potential needs a 1D system");
        const double lo = cfg::num_or(j, path, "lo", 0.0);
        echo["lo"] = lo;
        out = indicator_halfline(lo);
    } else if (kind == "interval") {
        if (dim != 1) cfg::fail(path, "interval potential needs a 1D system");
        const double lo = cfg::num(j, path, "lo"), hi = cfg::num(j, path, "hi");
        echo["lo"] = lo;
        echo["hi"] = hi;
        out = indicator_interval(lo, hi);
    } else if (kind == "box") {
        const auto lo = cfg::num_array(j, path, "lo"), hi = cfg::num_array(j, path, "hi");
        if (static_cast<int>(lo.size()) != dim || static_cast<int>(hi.size()) != dim)
            cfg::fail(path, "box bounds must match the system dimension");
        echo["lo"] = lo;
        echo["hi"] = hi;
        out = indicator_box(cfg::to_vec(lo), cfg::to_vec(hi));
    } else if (kind == "ball") {
        const auto c = cfg::num_array(j, path, "center");
        const double r = cfg::num(j, path, "radius");
        if (static_cast<int>(c.size()) != dim)
            cfg::fail(path, "ball center must match the system dimension");
        echo["center"] = c;
        echo["radius"] = r;
        out = indicator_ball(cfg::to_vec(c), r);
    } else if (kind == "orthant") {
        const double shift = cfg::num_or(j, path, "shift", 0.0);
        echo["shift"] = shift;
        out = indicator_orthant(dim, shift);
    } else if (kind == "quadratic") {
        const double w = cfg::num(j, path, "weight");
        std::vector<double> c(static_cast<std::size_t>(dim), 0.0);
        if (j.contains("center")) c = cfg::num_array(j, path, "center");
        if (static_cast<int>(c.size()) != dim)
            cfg::fail(path, "quadratic center must match the system dimension");
        echo["weight"] = w;
        echo["center"] = c;
        out = quadratic_iso(dim, w, cfg::to_vec(c));
    } else {
        cfg::fail(path + ".kind", "unknown potential kind '" + kind + "'");
    }
    if (resolved) *resolved = std::move(echo);
    return out;
}

// Test functions are named by compact spec strings so CSV rows stay stable:
//   constant[:c] | coordinate:i | clip:i:m | cos:h0[,h1..] | sine:h0[,..] |
//   smooth_step:i:c:eps
inline TestFunction make_test_function(const std::string& spec, int dim,
                                       const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char ch : spec) {
        if (ch == ':') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += ch;
        }
    }
    parts.push_back(cur);
    auto as_num = [&](const std::string& s) {
        try {
            std::size_t used = 0;
            const double v = std::stod(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
            return v;
        } catch (const std::exception&) {
            cfg::fail(path, "bad number '" + s + "' in test function '" + spec + "'");
        }
    };
    auto as_axis = [&](const std::string& s) {
        const int i = static_cast<int>(as_num(s));
        if (i < 0 || i >= dim) cfg::fail(path, "axis out of range in '" + spec + "'");
        return i;
    };
    auto as_dirs = [&](const std::string& s) {
        Vec h = Vec::Zero(dim);
        int i = 0;
        std::stringstream ss(s);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (i >= dim) cfg::fail(path, "too many components in '" + spec + "'");
            h[i++] = as_num(tok);
        }
        if (i != dim) cfg::fail(path, "direction length must match dimension in '" + spec + "'");
        return h;
    };

    const std::string& head = parts[0];
    TestFunction t;
    if (head == "constant" && parts.size() <= 2) {
        t = tf_constant(parts.size() == 2 ? as_num(parts[1]) : 1.0);
    } else if (head == "coordinate" && parts.size() == 2) {
        t = tf_coordinate(as_axis(parts[1]));
    } else if (head == "clip" && parts.size() == 3) {
        t = tf_coordinate_clipped(as_axis(parts[1]), as_num(parts[2]));
    } else if (head == "cos" && parts.size() == 2) {
        t = tf_cosine(as_dirs(parts[1]));
    } else if (head == "sine" && parts.size() == 2) {
        t = tf_sine(as_dirs(parts[1]));
    } else if (head == "smooth_step" && parts.size() == 4) {
        t = tf_smooth_step(as_axis(parts[1]), as_num(parts[2]), as_num(parts[3]));
    } else {
        cfg::fail(path, "unknown test function '" + spec + "'");
    }
    t.name = spec;  // echo the exact spec string into reports
    return t;
}

inline json load_json_file(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ConfigError("cannot open config file: " + file);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");
    return j;
}

}  // namespace moyo
