#pragma once

// Executes a RunManifest (all seeds, optionally in parallel) and writes the
// label field, energy trace and JSON summary.

#include <dirpart/config.hpp>
#include <dirpart/domains.hpp>
#include <dirpart/init.hpp>
#include <dirpart/solver.hpp>

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace dirpart {

inline constexpr std::uint8_t kOutsideByte = 255;

/// Gray level for a label: 0..k-1 spread over 0..254, OUTSIDE = 255.
inline std::uint8_t label_gray(std::int32_t label, std::size_t k) {
    if (label == kOutside) return kOutsideByte;
    if (k <= 1) return 0;
    return static_cast<std::uint8_t>(static_cast<std::size_t>(label) * 254 / (k - 1));
}

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path, bool binary = false) {
    std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
    if (!f) throw Error("cannot write " + path.string());
    return f;
}

inline void check_written(std::ofstream& f, const std::filesystem::path& path) {
    f.flush();
    if (!f) throw Error("write failed: " + path.string());
}

} // namespace detail

/// Binary PGM (P5, maxval 255). Image row r is grid index i0 = r, so the
/// first row is x1 = -pi and columns run along x2.
inline void write_pgm(const Partition& phi, const std::filesystem::path& path) {
    const GridSpec& g = phi.spec();
    if (g.dim() != 2) throw InvalidArgument("write_pgm needs a 2D partition");
    if (phi.k() > 255) throw InvalidArgument("write_pgm supports at most 255 labels");
    auto f = detail::open_out(path, true);
    f << "P5\n" << g.n() << ' ' << g.n() << "\n255\n";
    std::vector<char> bytes(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        bytes[i] = static_cast<char>(label_gray(phi.label(i), phi.k()));
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    detail::check_written(f, path);
}

/// Binary PPM (P6) of the label gray ramp with region interfaces in red: a
/// domain node is marked when any of its four periodic neighbours carries a
/// different label.
inline void write_boundary_ppm(const Partition& phi, const std::filesystem::path& path) {
    const GridSpec& g = phi.spec();
    if (g.dim() != 2) throw InvalidArgument("write_boundary_ppm needs a 2D partition");
    const std::size_t n = g.n();
    auto f = detail::open_out(path, true);
    f << "P6\n" << n << ' ' << n << "\n255\n";
    std::vector<char> bytes(3 * g.size());
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t c = 0; c < n; ++c) {
            const std::size_t i = r * n + c;
            const std::int32_t l = phi.label(i);
            const std::size_t nb[4] = {((r + 1) % n) * n + c, ((r + n - 1) % n) * n + c,
                                       r * n + (c + 1) % n, r * n + (c + n - 1) % n};
            bool edge = false;
            for (std::size_t j : nb) edge = edge || (l != kOutside && phi.label(j) != l);
            const auto gray = static_cast<char>(label_gray(l, phi.k()));
            bytes[3 * i] = edge ? static_cast<char>(255) : gray;
            bytes[3 * i + 1] = edge ? 0 : gray;
            bytes[3 * i + 2] = edge ? 0 : gray;
        }
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    detail::check_written(f, path);
}

/// 3D labels as raw bytes (label value itself, OUTSIDE = 255) plus JSON metadata.
inline void write_raw3d(const Partition& phi, const std::filesystem::path& raw_path,
                        const std::filesystem::path& meta_path) {
    const GridSpec& g = phi.spec();
    if (g.dim() != 3) throw InvalidArgument("write_raw3d needs a 3D partition");
    if (phi.k() > 255) throw InvalidArgument("write_raw3d supports at most 255 labels");
    auto f = detail::open_out(raw_path, true);
    std::vector<char> bytes(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto l = phi.label(i);
        bytes[i] = static_cast<char>(l == kOutside ? kOutsideByte : static_cast<std::uint8_t>(l));
    }
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    detail::check_written(f, raw_path);

    nlohmann::ordered_json meta;
    meta["file"] = raw_path.filename().string();
    meta["dims"] = {g.n(), g.n(), g.n()};
    meta["dtype"] = "uint8";
    meta["order"] = "row-major, axis 0 slowest";
    meta["endianness"] = "none (single byte)";
    meta["outside"] = kOutsideByte;
    meta["k"] = phi.k();
    meta["box"] = {-kPi, kPi};
    meta["spacing"] = g.h();
    auto m = detail::open_out(meta_path);
    m << meta.dump(2) << '\n';
    detail::check_written(m, meta_path);
}

inline std::string format_real(double x) {
    std::ostringstream s;
    s << std::setprecision(17) << x;
    return s.str();
}

inline void write_trace_csv(const EnergyTrace& trace, const std::filesystem::path& path) {
    auto f = detail::open_out(path);
    f << "iter,tau,energy,changed_cells,wall_ms\n";
    for (const auto& r : trace.records) {
        f << r.iter << ',' << format_real(r.tau) << ',' << format_real(r.energy) << ','
          << r.changed_cells << ',' << std::fixed << std::setprecision(3) << r.wall_ms
          << std::defaultfloat << '\n';
    }
    detail::check_written(f, path);
}

/// One seed's outcome.
struct SeedRun {
    std::uint64_t seed = 0;
    SolveResult result;
    double wall_ms = 0.0;
};

struct EigenRun {
    EigenResult result;
    Partition domain;
    double wall_ms = 0.0;
};

struct RunOutcome {
    RunManifest manifest;
    std::vector<SeedRun> runs; // partition mode, in manifest seed order
    std::optional<EigenRun> eigen;
    std::size_t best = 0;

    bool converged() const {
        if (eigen) return eigen->result.converged;
        return std::all_of(runs.begin(), runs.end(), [](const SeedRun& r) { return r.result.converged; });
    }
};

inline SeedRun run_seed(const RunManifest& m, const DomainMask& mask, std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    SolverConfig cfg = m.effective_solver();
    cfg.rng_seed = seed;
    const MultiField u0 = voronoi_init(m.k, mask, seed, m.metric.value_or(default_metric(mask)));
    SeedRun r{seed, solve(cfg, mask, u0), 0.0};
    r.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

/// Runs every seed of the manifest. With jobs > 1 seeds are distributed over
/// worker threads; results are stored by seed position, so the outcome does
/// not depend on scheduling.
inline RunOutcome execute(const RunManifest& m, unsigned jobs = 1) {
    m.validate();
    const GridSpec g(m.dim, m.n);
    const DomainMask mask = make_mask(g, m.shape, m.params);
    RunOutcome out{m, {}, std::nullopt, 0};

    if (m.mode == RunMode::eigen) {
        const auto t0 = std::chrono::steady_clock::now();
        EigenResult e = eigen_solve(mask, m.effective_solver());
        std::vector<std::int32_t> labels(g.size(), kOutside);
        for (std::size_t i = 0; i < g.size(); ++i) labels[i] = mask.contains(i) ? 0 : kOutside;
        const double ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        out.eigen = EigenRun{std::move(e), Partition(g, 1, std::move(labels)), ms};
        return out;
    }

    std::vector<std::optional<SeedRun>> slots(m.seeds.size());
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(m.seeds.size())));
    if (jobs == 1) {
        for (std::size_t i = 0; i < m.seeds.size(); ++i) slots[i] = run_seed(m, mask, m.seeds[i]);
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(jobs);
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < jobs; ++w) {
            pool.emplace_back([&, w] {
                try {
                    for (std::size_t i; (i = next++) < m.seeds.size();) {
                        slots[i] = run_seed(m, mask, m.seeds[i]);
                    }
                } catch (...) {
                    errors[w] = std::current_exception();
                }
            });
        }
        for (auto& t : pool) t.join();
        for (auto& e : errors) {
            if (e) std::rethrow_exception(e);
        }
    }
    for (auto& s : slots) out.runs.push_back(std::move(*s));
    for (std::size_t i = 1; i < out.runs.size(); ++i) {
        if (out.runs[i].result.energy.total < out.runs[out.best].result.energy.total) out.best = i;
    }
    return out;
}

inline nlohmann::ordered_json summary_json(const RunOutcome& o) {
    const RunManifest& m = o.manifest;
    nlohmann::ordered_json j;
    j["name"] = m.name;
    j["mode"] = m.mode == RunMode::eigen ? "eigen" : "partition";
    j["dim"] = m.dim;
    j["n"] = m.n;
    j["shape"] = shape_name(m.shape);
    const ShapeParams p = resolve_params(m.shape, m.params);
    j["shape_params"] = {{"size", p.size}, {"aspect", p.aspect}, {"rotation", p.rotation}};
    j["k"] = m.k;
    j["converged"] = o.converged();

    if (o.eigen) {
        const EigenResult& e = o.eigen->result;
        j["lambda"] = e.lambda;
        j["tol"] = m.tol;
        j["tau0"] = m.solver.tau0;
        j["iterations"] = e.iterations;
        j["tau_schedule"] = e.taus;
        j["lambda_per_tau"] = e.lambdas;
        j["timing"] = {{"wall_ms", o.eigen->wall_ms}};
        return j;
    }

    const SeedRun& best = o.runs[o.best];
    const SolveResult& r = best.result;
    j["seed"] = best.seed;
    j["energy"] = {{"total", r.energy.total}, {"per_region", r.energy.per_region}};
    j["final_tau"] = r.final_tau;
    j["iterations"] = r.iterations;
    j["tau_schedule"] = r.tau_schedule;
    j["stage_energies"] = r.stage_energies;
    j["reseeds"] = r.reseeds;
    j["warnings"] = r.warnings;

    std::vector<double> energies;
    nlohmann::ordered_json per_seed = nlohmann::ordered_json::array();
    for (const auto& s : o.runs) {
        energies.push_back(s.result.energy.total);
        per_seed.push_back({{"seed", s.seed},
                            {"energy", s.result.energy.total},
                            {"iterations", s.result.iterations},
                            {"converged", s.result.converged}});
    }
    j["seeds"] = {{"count", o.runs.size()},
                  {"best", *std::min_element(energies.begin(), energies.end())},
                  {"mean", std::accumulate(energies.begin(), energies.end(), 0.0) /
                               static_cast<double>(energies.size())},
                  {"runs", per_seed}};
    nlohmann::ordered_json timing;
    timing["best_seed_wall_ms"] = best.wall_ms;
    double total = 0.0;
    for (const auto& s : o.runs) total += s.wall_ms;
    timing["mean_wall_ms"] = total / static_cast<double>(o.runs.size());
    j["timing"] = timing;
    return j;
}

/// Writes labels.pgm and boundaries.ppm (2D) or labels.raw + labels.meta.json (3D), trace.csv
/// and summary.json into `dir` (created if missing). Partition mode writes
/// the best seed's labels and trace.
inline void emit_outputs(const RunOutcome& o, const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create " + dir.string() + ": " + ec.message());

    const Partition& labels = o.eigen ? o.eigen->domain : o.runs[o.best].result.phi;
    if (labels.spec().dim() == 2) {
        write_pgm(labels, dir / "labels.pgm");
        write_boundary_ppm(labels, dir / "boundaries.ppm");
    } else {
        write_raw3d(labels, dir / "labels.raw", dir / "labels.meta.json");
    }
    if (!o.eigen) write_trace_csv(o.runs[o.best].result.trace, dir / "trace.csv");

    const auto path = dir / "summary.json";
    auto f = detail::open_out(path);
    f << summary_json(o).dump(2) << '\n';
    detail::check_written(f, path);
}

} // namespace dirpart
