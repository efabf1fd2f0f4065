// Command-line front end: solve a config, compute a single-domain
// eigenvalue, or run a shipped preset.

#include <dirpart/config.hpp>
#include <dirpart/run.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#ifndef DIRPART_PRESET_DIR
#define DIRPART_PRESET_DIR "presets"
#endif

namespace fs = std::filesystem;
using namespace dirpart;

namespace {

struct RunFlags {
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> seeds;
    std::optional<std::string> out;
    bool allow_nonconverged = false;
    unsigned jobs = 1;
};

void add_run_flags(CLI::App* cmd, RunFlags& f) {
    cmd->add_option("--seed", f.seed, "First rng seed (overrides the config)");
    cmd->add_option("--seeds", f.seeds, "Number of seeds, best-of-N (overrides the config)")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--out", f.out, "Output directory (overrides the config)");
    cmd->add_flag("--allow-nonconverged", f.allow_nonconverged,
                  "Exit 0 even if a run hit an iteration cap or lost a region");
    cmd->add_option("--jobs", f.jobs, "Seeds run concurrently")->check(CLI::PositiveNumber);
}

void print_outcome(const RunOutcome& o, const fs::path& dir) {
    const auto& m = o.manifest;
    if (o.eigen) {
        std::printf("%s: lambda = %.6f (%zu iterations, final tau %.3g)%s\n", m.name.c_str(),
                    o.eigen->result.lambda, o.eigen->result.iterations, o.eigen->result.taus.back(),
                    o.eigen->result.converged ? "" : " [not converged]");
    } else {
        double mean = 0.0;
        for (const auto& r : o.runs) mean += r.result.energy.total;
        mean /= static_cast<double>(o.runs.size());
        const auto& best = o.runs[o.best];
        std::printf("%s: best energy %.6f (seed %llu), mean %.6f over %zu seed(s)\n", m.name.c_str(),
                    best.result.energy.total, static_cast<unsigned long long>(best.seed), mean,
                    o.runs.size());
        for (const auto& r : o.runs) {
            std::printf("  seed %llu: %.6f, %zu iterations%s\n", static_cast<unsigned long long>(r.seed),
                        r.result.energy.total, r.result.iterations,
                        r.result.converged ? "" : " [not converged]");
            for (const auto& w : r.result.warnings) std::printf("    warning: %s\n", w.c_str());
        }
    }
    std::printf("outputs in %s\n", dir.string().c_str());
}

int run_manifest(RunManifest m, const RunFlags& f) {
    if (f.seed || f.seeds) {
        const std::uint64_t first = f.seed.value_or(m.seeds.front());
        const std::uint64_t count = f.seeds.value_or(f.seed ? 1 : m.seeds.size());
        m.seeds.clear();
        for (std::uint64_t i = 0; i < count; ++i) m.seeds.push_back(first + i);
        m.solver.rng_seed = first;
    }
    if (f.out) m.output = *f.out;
    const RunOutcome o = execute(m, f.jobs);
    emit_outputs(o, m.output);
    print_outcome(o, m.output);
    if (!o.converged() && !f.allow_nonconverged) {
        std::fprintf(stderr, "error: %s did not converge (pass --allow-nonconverged to accept)\n",
                     m.name.c_str());
        return 3;
    }
    return 0;
}

fs::path preset_dir() {
    if (const char* env = std::getenv("DIRPART_PRESETS")) return env;
    return DIRPART_PRESET_DIR;
}

std::vector<fs::path> list_presets() {
    std::vector<fs::path> out;
    const fs::path dir = preset_dir();
    if (!fs::is_directory(dir)) throw Error("preset directory not found: " + dir.string());
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".cfg") out.push_back(e.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dirichlet k-partitions by diffusion, thresholding and projection"};
    app.require_subcommand(1);

    RunFlags solve_flags;
    std::string config_path;
    auto* solve_cmd = app.add_subcommand("solve", "Run a configuration file");
    solve_cmd->add_option("--config", config_path, "Config file (key = value lines)")
        ->required()
        ->check(CLI::ExistingFile);
    add_run_flags(solve_cmd, solve_flags);

    std::string shape;
    std::size_t n = 256;
    double tol = 1e-5;
    double tau0 = 0.1;
    int dim = 0;
    std::optional<std::string> eigen_out;
    auto* eigen_cmd = app.add_subcommand("eigen", "First Dirichlet eigenvalue of one shape");
    eigen_cmd->add_option("--shape", shape, "Shape name")->required();
    eigen_cmd->add_option("--n", n, "Grid points per axis (power of two)")->required();
    eigen_cmd->add_option("--tol", tol, "Final tau and inner-loop tolerance")->required();
    eigen_cmd->add_option("--tau0", tau0, "Initial tau")->capture_default_str();
    eigen_cmd->add_option("--dim", dim, "2 or 3 (default: the shape's own)");
    eigen_cmd->add_option("--out", eigen_out, "Also write labels and summary.json here");

    auto* presets_cmd = app.add_subcommand("presets", "Shipped experiment configs");
    presets_cmd->require_subcommand(1);
    presets_cmd->add_subcommand("list", "List preset names");
    RunFlags preset_flags;
    std::string preset_name;
    auto* preset_run = presets_cmd->add_subcommand("run", "Run a preset by name");
    preset_run->add_option("name", preset_name, "Preset name")->required();
    add_run_flags(preset_run, preset_flags);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*solve_cmd) return run_manifest(load_config(config_path), solve_flags);

        if (*eigen_cmd) {
            RunManifest m;
            m.mode = RunMode::eigen;
            m.shape = shape_from_name(shape);
            m.dim = dim != 0 ? dim : (shape_dim(m.shape) != 0 ? shape_dim(m.shape) : 2);
            m.n = n;
            m.tol = tol;
            m.solver.tau0 = tau0;
            m.solver.variant = Variant::alg2;
            m.name = "eigen_" + shape;
            m.validate();
            const RunOutcome o = execute(m);
            if (eigen_out) {
                emit_outputs(o, *eigen_out);
            }
            std::printf("%s n=%zu tol=%g: lambda = %.6f (%zu iterations)%s\n", shape.c_str(), n, tol,
                        o.eigen->result.lambda, o.eigen->result.iterations,
                        o.eigen->result.converged ? "" : " [not converged]");
            return o.converged() ? 0 : 3;
        }

        if (presets_cmd->got_subcommand("list")) {
            for (const auto& p : list_presets()) {
                const RunManifest m = load_config(p);
                std::printf("%-28s %s n=%zu %s k=%zu, %zu seed(s)\n", p.stem().string().c_str(),
                            m.mode == RunMode::eigen ? "eigen    " : "partition", m.n,
                            std::string(shape_name(m.shape)).c_str(), m.k, m.seeds.size());
            }
            return 0;
        }
        if (*preset_run) {
            const fs::path p = preset_dir() / (preset_name + ".cfg");
            if (!fs::exists(p)) throw Error("no preset named '" + preset_name + "' in " + preset_dir().string());
            return run_manifest(load_config(p), preset_flags);
        }
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
