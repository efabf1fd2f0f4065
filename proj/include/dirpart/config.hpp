#pragma once

// Flat key = value run configuration. One setting per line, '#' starts a
// comment, blank lines are ignored. Numbers may be written as fractions
// ("1/128"). Unknown or repeated keys are rejected with the line number.

#include <dirpart/domains.hpp>
#include <dirpart/errors.hpp>
#include <dirpart/solver.hpp>

#include <cerrno>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace dirpart {

enum class RunMode { partition, eigen };

struct RunManifest {
    std::string name = "run";
    RunMode mode = RunMode::partition;
    int dim = 2;
    std::size_t n = 256;
    Shape shape = Shape::torus;
    ShapeParams params;
    std::size_t k = 1;
    SolverConfig solver;
    /// Eigen mode: tolerance for both the final tau and the inner loop,
    /// unless tau_min or tol_u is given explicitly.
    double tol = 1e-5;
    bool tau_min_set = false;
    bool tol_u_set = false;
    std::optional<Metric> metric; // unset: periodic on the torus, euclidean otherwise
    std::vector<std::uint64_t> seeds{0};
    std::filesystem::path output = "out";

    /// Throws ConfigError on any inconsistency; never touches the grid.
    void validate() const {
        if (name.empty()) throw ConfigError("name must not be empty", 0);
        if (dim != 2 && dim != 3) throw ConfigError("dim must be 2 or 3", 0);
        try {
            (void)GridSpec(dim, n);
            (void)resolve_params(shape, params);
        } catch (const Error& e) {
            throw ConfigError(e.what(), 0);
        }
        if (shape_dim(shape) != 0 && shape_dim(shape) != dim) {
            throw ConfigError(std::string("shape ") + std::string(shape_name(shape)) + " needs dim=" +
                                  std::to_string(shape_dim(shape)),
                              0);
        }
        if (k == 0) throw ConfigError("k must be >= 1", 0);
        if (k > 255) throw ConfigError("k must be <= 255 (8-bit label output)", 0);
        if (mode == RunMode::eigen && k != 1) throw ConfigError("eigen mode needs k = 1", 0);
        if (seeds.empty()) throw ConfigError("at least one seed is required", 0);
        try {
            effective_solver().validate();
        } catch (const Error& e) {
            throw ConfigError(e.what(), 0);
        }
    }

    SolverConfig effective_solver() const {
        if (mode == RunMode::partition) return solver;
        SolverConfig c = solver;
        if (!tau_min_set) c.tau_min = tol;
        if (!tol_u_set) c.tol_u = tol;
        return c;
    }
};

namespace detail {

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& v, std::size_t line) {
    const auto slash = v.find('/');
    if (slash != std::string::npos) {
        const double num = parse_real(trim(std::string_view(v).substr(0, slash)), line);
        const double den = parse_real(trim(std::string_view(v).substr(slash + 1)), line);
        if (den == 0.0) throw ConfigError("division by zero in '" + v + "'", line);
        return num / den;
    }
    char* end = nullptr;
    errno = 0;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE || !std::isfinite(x)) {
        throw ConfigError("expected a number, got '" + v + "'", line);
    }
    return x;
}

inline std::uint64_t parse_uint(const std::string& v, std::size_t line) {
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || ptr != v.data() + v.size()) {
        throw ConfigError("expected a non-negative integer, got '" + v + "'", line);
    }
    return x;
}

inline bool parse_bool(const std::string& v, std::size_t line) {
    if (v == "true" || v == "yes" || v == "1" || v == "on") return true;
    if (v == "false" || v == "no" || v == "0" || v == "off") return false;
    throw ConfigError("expected true/false, got '" + v + "'", line);
}

} // namespace detail

/// Parses config text. `seeds = N` expands to rng seeds seed, seed+1, ...;
/// `seed_list = 3, 8, 11` gives them explicitly.
inline RunManifest parse_config(std::string_view text) {
    using namespace detail;
    RunManifest m;
    std::map<std::string, std::size_t> seen;
    std::optional<std::uint64_t> seed, seed_count;
    std::optional<std::vector<std::uint64_t>> seed_list;
    std::optional<double> tau0;
    std::size_t line_no = 0;

    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(std::string_view(raw).substr(0, hash));
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string val = trim(std::string_view(line).substr(eq + 1));
        if (key.empty()) throw ConfigError("missing key", line_no);
        if (val.empty()) throw ConfigError("missing value for '" + key + "'", line_no);
        if (auto [it, fresh] = seen.emplace(key, line_no); !fresh) {
            throw ConfigError("'" + key + "' already set on line " + std::to_string(it->second), line_no);
        }

        if (key == "name") {
            m.name = val;
        } else if (key == "mode") {
            if (val == "partition") m.mode = RunMode::partition;
            else if (val == "eigen") m.mode = RunMode::eigen;
            else throw ConfigError("mode must be partition or eigen", line_no);
        } else if (key == "dim") {
            m.dim = static_cast<int>(parse_uint(val, line_no));
        } else if (key == "n") {
            m.n = parse_uint(val, line_no);
        } else if (key == "shape") {
            const auto s = parse_shape(val);
            if (!s) throw ConfigError("unknown shape '" + val + "'", line_no);
            m.shape = *s;
        } else if (key == "size") {
            m.params.size = parse_real(val, line_no);
        } else if (key == "aspect") {
            m.params.aspect = parse_real(val, line_no);
        } else if (key == "rotation") {
            m.params.rotation = parse_real(val, line_no);
        } else if (key == "k") {
            m.k = parse_uint(val, line_no);
        } else if (key == "tau0") {
            tau0 = parse_real(val, line_no);
        } else if (key == "tau_min") {
            m.solver.tau_min = parse_real(val, line_no);
            m.tau_min_set = true;
        } else if (key == "tol_phi") {
            m.solver.tol_phi_cells = parse_uint(val, line_no);
        } else if (key == "tol_u") {
            m.solver.tol_u = parse_real(val, line_no);
            m.tol_u_set = true;
        } else if (key == "tol") {
            m.tol = parse_real(val, line_no);
        } else if (key == "u_change_norm") {
            if (val == "l2") m.solver.u_change_norm = ChangeNorm::l2;
            else if (val == "euclidean") m.solver.u_change_norm = ChangeNorm::euclidean;
            else throw ConfigError("u_change_norm must be l2 or euclidean", line_no);
        } else if (key == "max_outer") {
            m.solver.max_outer = parse_uint(val, line_no);
        } else if (key == "max_inner") {
            m.solver.max_inner = parse_uint(val, line_no);
        } else if (key == "max_reseeds") {
            m.solver.max_reseeds = static_cast<int>(parse_uint(val, line_no));
        } else if (key == "variant") {
            if (val == "alg1" || val == "ALG1") m.solver.variant = Variant::alg1;
            else if (val == "alg2" || val == "ALG2") m.solver.variant = Variant::alg2;
            else throw ConfigError("variant must be alg1 or alg2", line_no);
        } else if (key == "adaptive") {
            m.solver.adaptive = parse_bool(val, line_no);
        } else if (key == "tau_eval") {
            m.solver.tau_eval = parse_real(val, line_no);
        } else if (key == "metric") {
            if (val == "periodic") m.metric = Metric::periodic;
            else if (val == "euclidean") m.metric = Metric::euclidean;
            else if (val != "auto") throw ConfigError("metric must be auto, periodic or euclidean", line_no);
        } else if (key == "seed") {
            seed = parse_uint(val, line_no);
        } else if (key == "seeds") {
            seed_count = parse_uint(val, line_no);
            if (*seed_count == 0) throw ConfigError("seeds must be >= 1", line_no);
        } else if (key == "seed_list") {
            std::vector<std::uint64_t> list;
            std::stringstream ss(val);
            std::string item;
            while (std::getline(ss, item, ',')) list.push_back(parse_uint(trim(item), line_no));
            seed_list = std::move(list);
        } else if (key == "output") {
            m.output = val;
        } else {
            throw ConfigError("unknown key '" + key + "'", line_no);
        }
    }

    if (seed_list && (seed || seed_count)) {
        throw ConfigError("seed_list excludes seed and seeds", seen.at("seed_list"));
    }
    if (seed_list) {
        m.seeds = *seed_list;
    } else {
        const std::uint64_t first = seed.value_or(0);
        m.seeds.clear();
        for (std::uint64_t i = 0; i < seed_count.value_or(1); ++i) m.seeds.push_back(first + i);
    }
    m.solver.rng_seed = m.seeds.front();
    m.solver.tau0 = tau0.value_or(m.mode == RunMode::eigen ? 0.1 : 0.25);
    if (m.mode == RunMode::eigen) m.solver.variant = Variant::alg2;

    m.validate();
    return m;
}

inline RunManifest load_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot read config " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const ConfigError& e) {
        const std::string where = e.line() ? ":" + std::to_string(e.line()) : std::string();
        throw ConfigError(path.string() + where + ": " + e.what(), e.line());
    }
}

} // namespace dirpart
