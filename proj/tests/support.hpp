#pragma once

#include <dirpart/grid.hpp>
#include <dirpart/partition.hpp>

#include <cstdint>
#include <random>
#include <vector>

namespace dirpart::test {

inline ScalarField random_field(const GridSpec& g, std::mt19937_64& rng, double lo = -1.0,
                                double hi = 1.0) {
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(g.size());
    for (double& x : v) x = d(rng);
    return ScalarField(g, std::move(v));
}

inline MultiField random_unit_fields(const GridSpec& g, std::size_t k, std::mt19937_64& rng) {
    std::vector<ScalarField> c;
    for (std::size_t l = 0; l < k; ++l) c.push_back(random_field(g, rng));
    return MultiField::normalized(std::move(c));
}

/// Random labels over the mask; every region gets at least one node when possible.
inline Partition random_partition(const DomainMask& mask, std::size_t k, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::int32_t> d(0, static_cast<std::int32_t>(k) - 1);
    std::vector<std::int32_t> labels(mask.spec().size(), kOutside);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (mask.contains(i)) labels[i] = d(rng);
    }
    return Partition(mask.spec(), k, std::move(labels));
}

inline double max_abs_diff(const ScalarField& a, const ScalarField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace dirpart::test
