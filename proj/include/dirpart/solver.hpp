#pragma once

#include <dirpart/domains.hpp>
#include <dirpart/init.hpp>
#include <dirpart/partition.hpp>
#include <dirpart/spectral.hpp>

#include <chrono>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dirpart {

enum class Variant {
    alg1, ///< one projection step per thresholding
    alg2, ///< projections iterated to a fixed point per thresholding
};

/// How the inner loop measures ||u^{m+1} - u^m||.
enum class ChangeNorm {
    euclidean, ///< sqrt(sum of squared nodal differences), no cell weight
    l2,        ///< discrete L2 norm, h^(dim/2) times the Euclidean one
};

struct SolverConfig {
    double tau0 = 0.25;
    /// Outer loop is stationary when at most this many labels change.
    std::size_t tol_phi_cells = 0;
    double tol_u = 1e-5;
    ChangeNorm u_change_norm = ChangeNorm::l2;
    /// Adaptive runs (and eigen_solve) stop halving once tau < tau_min.
    double tau_min = 1.0 / 128.0;
    std::size_t max_outer = 10000;
    std::size_t max_inner = 200000;
    std::uint64_t rng_seed = 0;
    Variant variant = Variant::alg1;
    bool adaptive = false;
    /// When > 0, every trace record also carries E at this fixed tau.
    double tau_eval = 0.0;
    int max_reseeds = 5;

    void validate() const {
        if (!(tau0 > 0.0)) throw InvalidArgument("tau0 must be positive");
        if (!(tol_u > 0.0)) throw InvalidArgument("tol_u must be positive");
        if (!(tau_min > 0.0)) throw InvalidArgument("tau_min must be positive");
        if (tau_min > tau0) throw InvalidArgument("tau_min must not exceed tau0");
        if (max_outer == 0 || max_inner == 0) throw InvalidArgument("iteration caps must be >= 1");
        if (tau_eval < 0.0) throw InvalidArgument("tau_eval must be >= 0");
        if (max_reseeds < 0) throw InvalidArgument("max_reseeds must be >= 0");
    }
};

/// Defaults for the single-domain eigenvalue scheme: tau starts at 0.1 and
/// `tol` bounds both the final tau and the inner-loop change.
inline SolverConfig eigen_config(double tol, double tau0 = 0.1) {
    SolverConfig c;
    c.tau0 = tau0;
    c.tau_min = tol;
    c.tol_u = tol;
    c.variant = Variant::alg2;
    return c;
}

struct TraceRecord {
    std::size_t iter = 0;
    double tau = 0.0;
    /// E^tau(phi^{s+1}, u^s), from the same diffused fields as the update.
    double energy = 0.0;
    std::vector<double> per_region;
    std::size_t changed_cells = 0;
    double wall_ms = 0.0;
    std::size_t inner_steps = 0;
    std::optional<double> energy_eval;
    /// A vanished region was reseeded after this record's update.
    bool reseeded = false;
};

struct EnergyTrace {
    std::vector<TraceRecord> records;

    /// Consecutive records comparable under the energy-decay guarantee:
    /// same tau and no reseed in between.
    static bool comparable(const TraceRecord& a, const TraceRecord& b) {
        return a.tau == b.tau && !a.reseeded;
    }

    /// Number of comparable pairs where energy rose by more than slack * k / tau.
    std::size_t monotonicity_violations(std::size_t k, double slack = 1e-10) const {
        std::size_t bad = 0;
        for (std::size_t i = 1; i < records.size(); ++i) {
            const auto& a = records[i - 1];
            const auto& b = records[i];
            if (!comparable(a, b)) continue;
            if (b.energy > a.energy + slack * static_cast<double>(k) / a.tau) ++bad;
        }
        return bad;
    }
};

struct SolveResult {
    Partition phi;
    MultiField u;
    EnergyTrace trace;
    /// E^tau(phi, u) of the returned state at the final tau.
    EnergyValue energy;
    double final_tau = 0.0;
    std::vector<double> tau_schedule;
    /// E^tau of each stage's output at that stage's tau.
    std::vector<double> stage_energies;
    /// Labels changed between the outputs of consecutive tau stages.
    std::vector<std::size_t> stage_changes;
    bool converged = false;
    std::size_t iterations = 0;
    std::size_t reseeds = 0;
    std::vector<std::string> warnings;
};

namespace detail {

inline double change_norm(const MultiField& a, const MultiField& b, ChangeNorm norm) {
    const double d = euclidean_distance(a, b);
    return norm == ChangeNorm::l2 ? d * std::sqrt(a.spec().cell_volume()) : d;
}

inline std::size_t domain_cells(const Partition& p) {
    std::size_t c = 0;
    for (auto l : p.labels()) c += l != kOutside;
    return c;
}

// Mutable bookkeeping shared across the tau stages of one run.
struct RunState {
    EnergyTrace trace;
    std::size_t iterations = 0;
    std::size_t reseeds = 0;
    std::map<std::size_t, int> reseeds_per_region;
    std::vector<std::string> warnings;
    bool failed = false;
};

struct StageResult {
    Partition phi;
    MultiField u;
    bool converged;
};

// Replaces every vanished component by the normalized indicator of the
// domain node where max_l |u_star_l|^2 is smallest. Returns false once a
// region exceeds its reseed budget.
inline bool reseed_empty(MultiField& u, const Partition& phi, const MultiField& u_star,
                         const DomainMask& mask, const SolverConfig& cfg, RunState& run) {
    const GridSpec& g = u.spec();
    std::vector<std::size_t> taken;
    for (std::size_t l = 0; l < u.k(); ++l) {
        if (phi.cell_count(l) > 0) continue;
        if (++run.reseeds_per_region[l] > cfg.max_reseeds) {
            run.warnings.push_back("region " + std::to_string(l) + " vanished more than " +
                                   std::to_string(cfg.max_reseeds) + " times");
            return false;
        }
        std::size_t worst = g.size();
        double worst_val = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!mask.contains(i)) continue;
            if (std::find(taken.begin(), taken.end(), i) != taken.end()) continue;
            double cover = 0.0;
            for (std::size_t j = 0; j < u_star.k(); ++j) cover = std::max(cover, u_star[j][i] * u_star[j][i]);
            if (cover < worst_val) {
                worst_val = cover;
                worst = i;
            }
        }
        taken.push_back(worst);
        ScalarField spike(g);
        spike[worst] = 1.0 / std::sqrt(g.cell_volume());
        u[l] = std::move(spike);
        ++run.reseeds;
        run.warnings.push_back("region " + std::to_string(l) + " vanished at iteration " +
                               std::to_string(run.iterations) + "; reseeded");
    }
    return true;
}

// Iterates the chosen variant at fixed tau until no label changes (beyond
// tol_phi_cells) between consecutive outer iterations, or max_outer.
inline StageResult run_stage(const DomainMask& mask, MultiField u, double tau,
                             const SolverConfig& cfg, RunState& run) {
    using Clock = std::chrono::steady_clock;
    const HeatOperator heat(mask.spec(), tau);
    std::optional<HeatOperator> eval_heat;
    if (cfg.tau_eval > 0.0) eval_heat.emplace(mask.spec(), cfg.tau_eval);

    std::optional<Partition> prev;
    for (std::size_t s = 0; s < cfg.max_outer; ++s) {
        const auto t0 = Clock::now();
        const MultiField u_star = diffuse(heat, u);
        Partition phi = threshold_phi(u_star, mask);

        TraceRecord rec;
        rec.iter = run.iterations++;
        rec.tau = tau;
        const EnergyValue e = energy_from_diffused(phi, u_star, tau);
        rec.energy = e.total;
        rec.per_region = e.per_region;
        rec.changed_cells = prev ? phi.changed_cells(*prev) : domain_cells(phi);
        if (eval_heat) rec.energy_eval = energy_from_diffused(phi, diffuse(*eval_heat, u), cfg.tau_eval).total;

        Projection proj = project_diffused(phi, u_star, heat, u);
        rec.inner_steps = 1;
        if (cfg.variant == Variant::alg2 && proj.ok()) {
            while (rec.inner_steps < cfg.max_inner) {
                const double d = change_norm(proj.u, u, cfg.u_change_norm);
                if (d < cfg.tol_u) break;
                u = std::move(proj.u);
                proj = project_diffused(phi, diffuse(heat, u), heat, u);
                ++rec.inner_steps;
                if (!proj.ok()) break;
            }
        }
        u = std::move(proj.u);
        if (!proj.ok()) {
            rec.reseeded = true;
            if (!reseed_empty(u, phi, u_star, mask, cfg, run)) {
                rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
                run.trace.records.push_back(std::move(rec));
                run.failed = true;
                return {std::move(phi), std::move(u), false};
            }
        }
        rec.wall_ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
        const bool stationary = prev && !rec.reseeded && rec.changed_cells <= cfg.tol_phi_cells;
        run.trace.records.push_back(std::move(rec));
        if (stationary) return {std::move(phi), std::move(u), true};
        prev = std::move(phi);
    }
    run.warnings.push_back("no stationary partition after " + std::to_string(cfg.max_outer) +
                           " iterations at tau=" + std::to_string(tau));
    return {std::move(*prev), std::move(u), false};
}

inline SolveResult finish(StageResult stage, RunState run, EnergyValue e, double tau,
                          std::vector<double> schedule, std::vector<double> stage_energies,
                          std::vector<std::size_t> stage_changes, bool converged) {
    return SolveResult{std::move(stage.phi), std::move(stage.u), std::move(run.trace), std::move(e),
                       tau, std::move(schedule), std::move(stage_energies), std::move(stage_changes),
                       converged, run.iterations, run.reseeds, std::move(run.warnings)};
}

inline void check_start(const DomainMask& mask, const MultiField& u0) {
    require_same_grid(mask.spec(), u0.spec(), "solver");
    if (!u0.is_normalized(1e-8)) throw InvalidArgument("initial fields must have unit L2 norm");
}

} // namespace detail

/// One iteration at fixed tau: diffuse, threshold, single projection.
/// A vanished region is reported through Projection::empty.
inline std::pair<Partition, Projection> step_alg1(const MultiField& u, double tau,
                                                  const DomainMask& mask) {
    require_same_grid(mask.spec(), u.spec(), "step_alg1");
    const HeatOperator heat(u.spec(), tau);
    const MultiField u_star = diffuse(heat, u);
    Partition phi = threshold_phi(u_star, mask);
    Projection proj = project_diffused(phi, u_star, heat, u);
    return {std::move(phi), std::move(proj)};
}

/// Fixed-tau run with the variant in cfg.variant, tau = cfg.tau0.
inline SolveResult run_fixed(const SolverConfig& cfg, const DomainMask& mask, const MultiField& u0) {
    cfg.validate();
    detail::check_start(mask, u0);
    detail::RunState run;
    auto stage = detail::run_stage(mask, u0, cfg.tau0, cfg, run);
    const bool ok = stage.converged && !run.failed;
    EnergyValue e = relaxed_energy(stage.phi, stage.u, cfg.tau0);
    const double total = e.total;
    return detail::finish(std::move(stage), std::move(run), std::move(e), cfg.tau0, {cfg.tau0},
                          {total}, {}, ok);
}

inline SolveResult run_alg1(SolverConfig cfg, const DomainMask& mask, const MultiField& u0) {
    cfg.variant = Variant::alg1;
    return run_fixed(cfg, mask, u0);
}

inline SolveResult run_alg2(SolverConfig cfg, const DomainMask& mask, const MultiField& u0) {
    cfg.variant = Variant::alg2;
    return run_fixed(cfg, mask, u0);
}

/// Adaptive-in-tau run: stationary solve at tau, halve tau, warm start from
/// the previous (phi, u), until tau drops below cfg.tau_min.
inline SolveResult run_adaptive(const SolverConfig& cfg, const DomainMask& mask,
                                const MultiField& u0) {
    cfg.validate();
    detail::check_start(mask, u0);
    detail::RunState run;
    std::vector<double> schedule;
    std::vector<double> stage_energies;
    std::vector<std::size_t> stage_changes;
    bool ok = true;
    double tau = cfg.tau0;
    std::optional<detail::StageResult> last;
    EnergyValue e;
    MultiField u = u0;
    while (true) {
        auto stage = detail::run_stage(mask, std::move(u), tau, cfg, run);
        schedule.push_back(tau);
        e = relaxed_energy(stage.phi, stage.u, tau);
        stage_energies.push_back(e.total);
        if (last) stage_changes.push_back(stage.phi.changed_cells(last->phi));
        ok = ok && stage.converged;
        u = stage.u;
        last = std::move(stage);
        if (run.failed || tau / 2.0 < cfg.tau_min) break;
        tau /= 2.0;
    }
    ok = ok && !run.failed;
    return detail::finish(std::move(*last), std::move(run), std::move(e), tau, std::move(schedule),
                          std::move(stage_energies), std::move(stage_changes), ok);
}

/// Dispatches on cfg.adaptive.
inline SolveResult solve(const SolverConfig& cfg, const DomainMask& mask, const MultiField& u0) {
    return cfg.adaptive ? run_adaptive(cfg, mask, u0) : run_fixed(cfg, mask, u0);
}

struct EigenResult {
    double lambda = 0.0;
    ScalarField u;
    /// tau levels visited and the converged estimate at each.
    std::vector<double> taus;
    std::vector<double> lambdas;
    /// integral of (1 - psi) |u| after each level.
    std::vector<double> leakage;
    std::size_t iterations = 0;
    bool converged = true;
};

/// First Dirichlet eigenvalue of the masked domain: projection iteration
/// with phi = psi fixed, tau halved from cfg.tau0 while tau >= cfg.tau_min.
/// The returned u is sign-normalized so its largest-magnitude node is positive.
inline EigenResult eigen_solve(const DomainMask& mask, const SolverConfig& cfg) {
    cfg.validate();
    const GridSpec& g = mask.spec();
    std::vector<std::int32_t> labels(g.size(), kOutside);
    for (std::size_t i = 0; i < g.size(); ++i) labels[i] = mask.contains(i) ? 0 : kOutside;
    const Partition phi(g, 1, std::move(labels));
    MultiField u = MultiField::normalized({mask.indicator()});

    EigenResult out{0.0, ScalarField(g), {}, {}, {}, 0, true};
    for (double tau = cfg.tau0; tau >= cfg.tau_min; tau /= 2.0) {
        const HeatOperator heat(g, tau);
        MultiField u_star = diffuse(heat, u);
        std::size_t m = 0;
        while (true) {
            Projection p = project_diffused(phi, u_star, heat, u);
            if (!p.ok()) throw Error("eigen_solve: projected field vanished");
            const double d = detail::change_norm(p.u, u, cfg.u_change_norm);
            u = std::move(p.u);
            u_star = diffuse(heat, u);
            ++m;
            if (d < cfg.tol_u) break;
            if (m >= cfg.max_inner) {
                out.converged = false;
                break;
            }
        }
        out.iterations += m;
        out.taus.push_back(tau);
        out.lambdas.push_back(energy_from_diffused(phi, u_star, tau).total);
        double leak = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!mask.contains(i)) leak += std::abs(u[0][i]);
        }
        out.leakage.push_back(leak * g.cell_volume());
        if (!out.converged) break;
    }
    if (out.taus.empty()) throw InvalidArgument("eigen_solve: tau0 below tau_min");
    out.lambda = out.lambdas.back();
    out.u = u[0];
    std::size_t arg = 0;
    for (std::size_t i = 1; i < g.size(); ++i) {
        if (std::abs(out.u[i]) > std::abs(out.u[arg])) arg = i;
    }
    if (out.u[arg] < 0.0) out.u *= -1.0;
    return out;
}

} // namespace dirpart
