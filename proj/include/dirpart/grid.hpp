#pragma once

#include <dirpart/errors.hpp>

#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dirpart {

inline constexpr double kPi = std::numbers::pi;

/// Uniform periodic grid on the box [-pi, pi]^dim.
///
/// Samples sit on the nodes x_i = -pi + i*h, i = 0..n-1, with h = 2*pi/n,
/// along every axis. Node 0 lies on the box face and is identified with +pi
/// by periodicity, so the node set is symmetric under x -> -x (index
/// i -> (n - i) mod n).
///
/// Fields are stored row-major with axis 0 slowest:
/// linear = (i0 * n + i1) * n + i2 in 3D, i0 * n + i1 in 2D.
class GridSpec {
public:
    GridSpec(int dim, std::size_t n) : dim_(dim), n_(n) {
        if (dim != 2 && dim != 3) {
            throw InvalidArgument("grid dimension must be 2 or 3, got " + std::to_string(dim));
        }
        if (n < 4 || (n & (n - 1)) != 0) {
            throw InvalidArgument("points per axis must be a power of two >= 4, got " +
                                  std::to_string(n));
        }
    }

    int dim() const noexcept { return dim_; }
    std::size_t n() const noexcept { return n_; }
    std::size_t size() const noexcept { return dim_ == 2 ? n_ * n_ : n_ * n_ * n_; }
    double half_width() const noexcept { return kPi; }
    double h() const noexcept { return 2.0 * kPi / static_cast<double>(n_); }
    double cell_volume() const noexcept { return std::pow(h(), dim_); }

    /// Coordinate of node i along any axis.
    double coord(std::size_t i) const noexcept { return -kPi + static_cast<double>(i) * h(); }

    std::array<std::size_t, 3> multi_index(std::size_t linear) const noexcept {
        std::array<std::size_t, 3> idx{0, 0, 0};
        for (int a = dim_ - 1; a >= 0; --a) {
            idx[static_cast<std::size_t>(a)] = linear % n_;
            linear /= n_;
        }
        return idx;
    }

    std::size_t linear_index(const std::array<std::size_t, 3>& idx) const noexcept {
        std::size_t out = 0;
        for (int a = 0; a < dim_; ++a) out = out * n_ + idx[static_cast<std::size_t>(a)];
        return out;
    }

    /// Physical coordinates of a node; unused trailing axes are 0.
    std::array<double, 3> point(std::size_t linear) const noexcept {
        const auto idx = multi_index(linear);
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < dim_; ++a) {
            x[static_cast<std::size_t>(a)] = coord(idx[static_cast<std::size_t>(a)]);
        }
        return x;
    }

    friend bool operator==(const GridSpec&, const GridSpec&) = default;

    std::string describe() const {
        return std::to_string(dim_) + "D n=" + std::to_string(n_);
    }

private:
    int dim_;
    std::size_t n_;
};

inline void require_same_grid(const GridSpec& a, const GridSpec& b, const char* where) {
    if (!(a == b)) {
        throw ShapeError(std::string(where) + ": grid mismatch (" + a.describe() + " vs " +
                         b.describe() + ")");
    }
}

/// Real values sampled on a GridSpec.
class ScalarField {
public:
    explicit ScalarField(const GridSpec& spec) : spec_(spec), values_(spec.size(), 0.0) {}

    ScalarField(const GridSpec& spec, std::vector<double> values)
        : spec_(spec), values_(std::move(values)) {
        if (values_.size() != spec_.size()) {
            throw ShapeError("field has " + std::to_string(values_.size()) + " values, grid " +
                             spec_.describe() + " needs " + std::to_string(spec_.size()));
        }
    }

    static ScalarField constant(const GridSpec& spec, double c) {
        return ScalarField(spec, std::vector<double>(spec.size(), c));
    }

    /// Samples fn(point) at every node; fn receives a std::array<double, 3>.
    template <class Fn>
    static ScalarField sample(const GridSpec& spec, Fn&& fn) {
        std::vector<double> v(spec.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(spec.point(i));
        return ScalarField(spec, std::move(v));
    }

    const GridSpec& spec() const noexcept { return spec_; }
    std::size_t size() const noexcept { return values_.size(); }

    std::span<const double> values() const noexcept { return values_; }
    std::span<double> values() noexcept { return values_; }

    double operator[](std::size_t i) const noexcept { return values_[i]; }
    double& operator[](std::size_t i) noexcept { return values_[i]; }

    ScalarField& operator*=(double c) noexcept {
        for (double& v : values_) v *= c;
        return *this;
    }

    bool all_finite() const noexcept {
        for (double v : values_) {
            if (!std::isfinite(v)) return false;
        }
        return true;
    }

private:
    GridSpec spec_;
    std::vector<double> values_;
};

/// Midpoint-rule integral over the box: h^dim * sum(values).
inline double integrate(const ScalarField& f) {
    const auto v = f.values();
    return f.spec().cell_volume() * std::accumulate(v.begin(), v.end(), 0.0);
}

/// Discrete L2 inner product <f, g> = h^dim * sum(f * g).
inline double inner(const ScalarField& f, const ScalarField& g) {
    require_same_grid(f.spec(), g.spec(), "inner");
    const auto a = f.values();
    const auto b = g.values();
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return f.spec().cell_volume() * s;
}

inline double l2_norm(const ScalarField& f) { return std::sqrt(inner(f, f)); }

/// Unweighted Euclidean norm of the value vector, sqrt(sum(v^2)).
inline double euclidean_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace dirpart
