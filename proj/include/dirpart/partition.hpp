#pragma once

#include <dirpart/domains.hpp>
#include <dirpart/grid.hpp>
#include <dirpart/spectral.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dirpart {

/// Label carried by nodes outside the domain.
inline constexpr std::int32_t kOutside = -1;

/// A k-tuple of fields on one grid. Holds the candidate eigenfunctions
/// u = (u_1, ..., u_k); every update in this library leaves each component
/// with unit discrete L2 norm. The diffused tuple heat(u) reuses the type
/// without that normalization.
class MultiField {
public:
    explicit MultiField(std::vector<ScalarField> components) : components_(std::move(components)) {
        if (components_.empty()) throw InvalidArgument("multi-field needs k >= 1 components");
        for (const auto& c : components_) {
            require_same_grid(components_.front().spec(), c.spec(), "multi-field");
        }
    }

    /// Scales every component to unit L2 norm.
    static MultiField normalized(std::vector<ScalarField> components) {
        for (std::size_t l = 0; l < components.size(); ++l) {
            const double nrm = l2_norm(components[l]);
            if (!(nrm > 0.0)) {
                throw InvalidArgument("component " + std::to_string(l) + " has zero norm");
            }
            components[l] *= 1.0 / nrm;
        }
        return MultiField(std::move(components));
    }

    std::size_t k() const noexcept { return components_.size(); }
    const GridSpec& spec() const noexcept { return components_.front().spec(); }

    const ScalarField& operator[](std::size_t l) const { return components_.at(l); }
    ScalarField& operator[](std::size_t l) { return components_.at(l); }

    std::span<const ScalarField> components() const noexcept { return components_; }

    bool is_normalized(double tol = 1e-10) const {
        for (const auto& c : components_) {
            if (std::abs(l2_norm(c) - 1.0) > tol) return false;
        }
        return true;
    }

private:
    std::vector<ScalarField> components_;
};

/// Unweighted Euclidean distance between two tuples, summed over components.
inline double euclidean_distance(const MultiField& a, const MultiField& b) {
    require_same_grid(a.spec(), b.spec(), "distance");
    if (a.k() != b.k()) throw ShapeError("distance: component count mismatch");
    double s = 0.0;
    for (std::size_t l = 0; l < a.k(); ++l) {
        const auto x = a[l].values();
        const auto y = b[l].values();
        for (std::size_t i = 0; i < x.size(); ++i) {
            const double d = x[i] - y[i];
            s += d * d;
        }
    }
    return std::sqrt(s);
}

/// Disjoint indicator family phi_1..phi_k stored as one label per node.
class Partition {
public:
    Partition(const GridSpec& spec, std::size_t k, std::vector<std::int32_t> labels)
        : spec_(spec), k_(k), labels_(std::move(labels)) {
        if (k_ == 0) throw InvalidArgument("partition needs k >= 1");
        if (labels_.size() != spec_.size()) throw ShapeError("partition label count mismatch");
        for (std::int32_t l : labels_) {
            if (l != kOutside && (l < 0 || static_cast<std::size_t>(l) >= k_)) {
                throw InvalidArgument("label " + std::to_string(l) + " out of range for k=" +
                                      std::to_string(k_));
            }
        }
    }

    /// Every node outside the domain; all regions empty.
    static Partition empty(const GridSpec& spec, std::size_t k) {
        return Partition(spec, k, std::vector<std::int32_t>(spec.size(), kOutside));
    }

    const GridSpec& spec() const noexcept { return spec_; }
    std::size_t k() const noexcept { return k_; }
    std::span<const std::int32_t> labels() const noexcept { return labels_; }
    std::int32_t label(std::size_t i) const { return labels_.at(i); }

    std::size_t cell_count(std::size_t region) const {
        std::size_t c = 0;
        for (std::int32_t l : labels_) c += (l == static_cast<std::int32_t>(region)) ? 1 : 0;
        return c;
    }

    double area(std::size_t region) const {
        return static_cast<double>(cell_count(region)) * spec_.cell_volume();
    }

    ScalarField indicator(std::size_t region) const {
        ScalarField out(spec_);
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            out[i] = labels_[i] == static_cast<std::int32_t>(region) ? 1.0 : 0.0;
        }
        return out;
    }

    std::size_t changed_cells(const Partition& other) const {
        require_same_grid(spec_, other.spec_, "changed_cells");
        std::size_t c = 0;
        for (std::size_t i = 0; i < labels_.size(); ++i) c += labels_[i] != other.labels_[i];
        return c;
    }

    /// True when labelled nodes are exactly the domain nodes.
    bool covers(const DomainMask& mask) const {
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if ((labels_[i] != kOutside) != mask.contains(i)) return false;
        }
        return true;
    }

    friend bool operator==(const Partition&, const Partition&) = default;

private:
    GridSpec spec_;
    std::size_t k_;
    std::vector<std::int32_t> labels_;
};

/// E^tau split by region: per_region[l] = (1 - integral(phi_l |heat u_l|^2)) / tau.
struct EnergyValue {
    double total = 0.0;
    std::vector<double> per_region;
};

/// Componentwise heat(u_l).
inline MultiField diffuse(const HeatOperator& heat, const MultiField& u) {
    std::vector<ScalarField> out;
    out.reserve(u.k());
    for (std::size_t l = 0; l < u.k(); ++l) out.push_back(heat.apply(u[l]));
    return MultiField(std::move(out));
}

/// Energy from already-diffused components u_star = heat(u).
inline EnergyValue energy_from_diffused(const Partition& phi, const MultiField& u_star, double tau) {
    if (!(tau > 0.0)) throw InvalidArgument("energy needs tau > 0");
    require_same_grid(phi.spec(), u_star.spec(), "relaxed_energy");
    if (phi.k() != u_star.k()) throw ShapeError("relaxed_energy: k mismatch");
    const std::size_t k = phi.k();
    std::vector<double> overlap(k, 0.0);
    const auto labels = phi.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == kOutside) continue;
        const auto l = static_cast<std::size_t>(labels[i]);
        const double v = u_star[l][i];
        overlap[l] += v * v;
    }
    EnergyValue e;
    e.per_region.resize(k);
    const double dv = phi.spec().cell_volume();
    for (std::size_t l = 0; l < k; ++l) {
        e.per_region[l] = (1.0 - dv * overlap[l]) / tau;
        e.total += e.per_region[l];
    }
    return e;
}

inline EnergyValue relaxed_energy(const Partition& phi, const MultiField& u, double tau) {
    if (!(tau > 0.0)) throw InvalidArgument("energy needs tau > 0");
    require_same_grid(phi.spec(), u.spec(), "relaxed_energy");
    if (phi.k() != u.k()) throw ShapeError("relaxed_energy: k mismatch");
    return energy_from_diffused(phi, diffuse(HeatOperator(u.spec(), tau), u), tau);
}

/// Pointwise thresholding: each domain node goes to the smallest index that
/// maximizes |u_star_l|^2; nodes outside the domain are kOutside.
inline Partition threshold_phi(const MultiField& u_star, const DomainMask& mask) {
    require_same_grid(u_star.spec(), mask.spec(), "threshold_phi");
    const std::size_t k = u_star.k();
    std::vector<std::int32_t> labels(u_star.spec().size(), kOutside);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!mask.contains(i)) continue;
        std::size_t best = 0;
        double best_val = u_star[0][i] * u_star[0][i];
        for (std::size_t l = 1; l < k; ++l) {
            const double v = u_star[l][i] * u_star[l][i];
            if (v > best_val) {
                best_val = v;
                best = l;
            }
        }
        labels[i] = static_cast<std::int32_t>(best);
    }
    return Partition(u_star.spec(), k, std::move(labels));
}

/// A region whose projected field vanished.
struct EmptyRegion {
    std::size_t region;
};

/// Result of the projection step. When `empty` is set, that component is
/// carried over unchanged from the input and the caller decides what to do.
struct Projection {
    MultiField u;
    std::optional<EmptyRegion> empty;

    bool ok() const noexcept { return !empty.has_value(); }
};

inline constexpr double kEmptyRegionNorm = 1e-14;

/// u_l <- heat(phi_l * u_star_l) / ||.||, with u_star = heat(u) precomputed.
inline Projection project_diffused(const Partition& phi, const MultiField& u_star,
                                   const HeatOperator& heat, const MultiField& previous) {
    require_same_grid(phi.spec(), u_star.spec(), "project_u");
    require_same_grid(phi.spec(), heat.spec(), "project_u");
    if (phi.k() != u_star.k() || phi.k() != previous.k()) {
        throw ShapeError("project_u: k mismatch");
    }
    std::vector<ScalarField> next;
    next.reserve(phi.k());
    std::optional<EmptyRegion> empty;
    const auto labels = phi.labels();
    ScalarField masked(phi.spec());
    for (std::size_t l = 0; l < phi.k(); ++l) {
        const auto src = u_star[l].values();
        auto dst = masked.values();
        for (std::size_t i = 0; i < dst.size(); ++i) {
            dst[i] = labels[i] == static_cast<std::int32_t>(l) ? src[i] : 0.0;
        }
        ScalarField w = heat.apply(masked);
        const double nrm = l2_norm(w);
        if (nrm < kEmptyRegionNorm) {
            if (!empty) empty = EmptyRegion{l};
            next.push_back(previous[l]);
            continue;
        }
        w *= 1.0 / nrm;
        next.push_back(std::move(w));
    }
    return Projection{MultiField(std::move(next)), empty};
}

inline Projection project_u(const Partition& phi, const MultiField& u, double tau) {
    if (!(tau > 0.0)) throw InvalidArgument("project_u needs tau > 0");
    require_same_grid(phi.spec(), u.spec(), "project_u");
    const HeatOperator heat(u.spec(), tau);
    return project_diffused(phi, diffuse(heat, u), heat, u);
}

} // namespace dirpart
