#pragma once

#include <dirpart/domains.hpp>
#include <dirpart/partition.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

namespace dirpart {

enum class Metric { periodic, euclidean };

/// Wrap-around distance on the full torus, flat distance inside a masked domain.
inline Metric default_metric(const DomainMask& mask) {
    return mask.is_full() ? Metric::periodic : Metric::euclidean;
}

/// Uniform integer in [0, bound) drawn from the raw 64-bit output of
/// std::mt19937_64 by rejection. The engine's output sequence is fixed by the
/// standard, so this is reproducible across platforms (std distributions are not).
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
    if (bound == 0) throw InvalidArgument("uniform_below: empty range");
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x = gen();
    while (x >= limit) x = gen();
    return x % bound;
}

/// k seed nodes drawn without replacement from the domain nodes.
struct SeedSet {
    std::vector<std::size_t> cells;
    std::uint64_t rng_seed = 0;

    std::vector<std::array<double, 3>> points(const GridSpec& spec) const {
        std::vector<std::array<double, 3>> p;
        p.reserve(cells.size());
        for (std::size_t c : cells) p.push_back(spec.point(c));
        return p;
    }
};

inline SeedSet draw_seeds(std::size_t k, const DomainMask& mask, std::uint64_t rng_seed) {
    if (k == 0) throw InvalidArgument("need k >= 1 seeds");
    std::vector<std::size_t> pool;
    pool.reserve(mask.cell_count());
    for (std::size_t i = 0; i < mask.spec().size(); ++i) {
        if (mask.contains(i)) pool.push_back(i);
    }
    if (k > pool.size()) {
        throw InvalidArgument("k=" + std::to_string(k) + " exceeds the " +
                              std::to_string(pool.size()) + " domain nodes");
    }
    std::mt19937_64 gen(rng_seed);
    SeedSet s{{}, rng_seed};
    // Partial Fisher-Yates.
    for (std::size_t j = 0; j < k; ++j) {
        const std::size_t pick = j + uniform_below(gen, pool.size() - j);
        std::swap(pool[j], pool[pick]);
        s.cells.push_back(pool[j]);
    }
    return s;
}

inline double seed_distance2(const std::array<double, 3>& a, const std::array<double, 3>& b,
                             int dim, Metric metric) {
    double s = 0.0;
    for (int ax = 0; ax < dim; ++ax) {
        double d = std::abs(a[static_cast<std::size_t>(ax)] - b[static_cast<std::size_t>(ax)]);
        if (metric == Metric::periodic) d = std::min(d, 2.0 * kPi - d);
        s += d * d;
    }
    return s;
}

/// Nearest-seed labelling of the domain nodes; ties go to the smaller seed index.
inline Partition voronoi_partition(std::span<const std::array<double, 3>> seeds,
                                   const DomainMask& mask, Metric metric) {
    const GridSpec& g = mask.spec();
    if (seeds.empty()) throw InvalidArgument("voronoi partition needs at least one seed");
    std::vector<std::int32_t> labels(g.size(), kOutside);
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!mask.contains(i)) continue;
        const auto x = g.point(i);
        std::size_t best = 0;
        double best_d = seed_distance2(x, seeds[0], g.dim(), metric);
        for (std::size_t l = 1; l < seeds.size(); ++l) {
            const double d = seed_distance2(x, seeds[l], g.dim(), metric);
            if (d < best_d) {
                best_d = d;
                best = l;
            }
        }
        labels[i] = static_cast<std::int32_t>(best);
    }
    return Partition(g, seeds.size(), std::move(labels));
}

/// u_l = chi_{A_l} / sqrt(|A_l|) for the Voronoi cells A_l of the given seeds.
inline MultiField voronoi_fields(const Partition& cells) {
    std::vector<ScalarField> comps;
    comps.reserve(cells.k());
    for (std::size_t l = 0; l < cells.k(); ++l) comps.push_back(cells.indicator(l));
    return MultiField::normalized(std::move(comps));
}

inline MultiField voronoi_init(std::span<const std::array<double, 3>> seeds,
                               const DomainMask& mask, Metric metric) {
    return voronoi_fields(voronoi_partition(seeds, mask, metric));
}

/// Random Voronoi initial guess: k seeds uniform over the domain nodes,
/// normalized indicators of their cells. A seed whose cell comes out empty
/// is redrawn (at most 100 times).
inline MultiField voronoi_init(std::size_t k, const DomainMask& mask, std::uint64_t rng_seed,
                               Metric metric) {
    SeedSet seeds = draw_seeds(k, mask, rng_seed);
    std::mt19937_64 retry_gen(rng_seed ^ 0x9e3779b97f4a7c15ULL);
    for (int attempt = 0; attempt <= 100; ++attempt) {
        const auto pts = seeds.points(mask.spec());
        Partition cells = voronoi_partition(pts, mask, metric);
        std::optional<std::size_t> empty;
        for (std::size_t l = 0; l < k && !empty; ++l) {
            if (cells.cell_count(l) == 0) empty = l;
        }
        if (!empty) return voronoi_fields(cells);
        std::size_t cell = 0;
        do {
            cell = uniform_below(retry_gen, mask.spec().size());
        } while (!mask.contains(cell));
        seeds.cells[*empty] = cell;
    }
    throw Error("voronoi_init: could not obtain " + std::to_string(k) + " nonempty cells");
}

inline MultiField voronoi_init(std::size_t k, const DomainMask& mask, std::uint64_t rng_seed) {
    return voronoi_init(k, mask, rng_seed, default_metric(mask));
}

} // namespace dirpart
