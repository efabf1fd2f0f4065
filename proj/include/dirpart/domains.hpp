#pragma once

#include <dirpart/grid.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace dirpart {

enum class Shape {
    torus,
    square,
    rotated_square,
    rectangle,
    equilateral_triangle,
    disk,
    three_quarter_disk,
    pentagon,
    hexagon,
    three_fold_star,
    five_fold_star,
    cube,
    ball,
    tetrahedron,
};

inline constexpr std::array<Shape, 14> kAllShapes{
    Shape::torus,          Shape::square,         Shape::rotated_square,
    Shape::rectangle,      Shape::equilateral_triangle, Shape::disk,
    Shape::three_quarter_disk, Shape::pentagon,   Shape::hexagon,
    Shape::three_fold_star, Shape::five_fold_star, Shape::cube,
    Shape::ball,           Shape::tetrahedron,
};

inline std::string_view shape_name(Shape s) {
    switch (s) {
    case Shape::torus: return "torus";
    case Shape::square: return "square";
    case Shape::rotated_square: return "rotated_square";
    case Shape::rectangle: return "rectangle";
    case Shape::equilateral_triangle: return "equilateral_triangle";
    case Shape::disk: return "disk";
    case Shape::three_quarter_disk: return "three_quarter_disk";
    case Shape::pentagon: return "pentagon";
    case Shape::hexagon: return "hexagon";
    case Shape::three_fold_star: return "three_fold_star";
    case Shape::five_fold_star: return "five_fold_star";
    case Shape::cube: return "cube";
    case Shape::ball: return "ball";
    case Shape::tetrahedron: return "tetrahedron";
    }
    return "?";
}

inline std::optional<Shape> parse_shape(std::string_view name) {
    for (Shape s : kAllShapes) {
        if (shape_name(s) == name) return s;
    }
    return std::nullopt;
}

inline Shape shape_from_name(std::string_view name) {
    if (auto s = parse_shape(name)) return *s;
    throw DomainError("unknown shape '" + std::string(name) + "'");
}

/// Spatial dimension a shape lives in; 0 for the torus (any dimension).
inline int shape_dim(Shape s) {
    switch (s) {
    case Shape::torus: return 0;
    case Shape::cube:
    case Shape::ball:
    case Shape::tetrahedron: return 3;
    default: return 2;
    }
}

/// Shape parameters. Zero means "use the shape's default".
///
///   size     side length (square, rotated_square, rectangle width,
///            equilateral_triangle, cube); radius (disk, three_quarter_disk,
///            ball, circumradius of pentagon/hexagon, outer radius of stars);
///            circumradius (tetrahedron).
///   aspect   rectangle height / width; star inner / outer radius.
///   rotation counterclockwise rotation in the (x1, x2) plane, radians.
struct ShapeParams {
    double size = 0.0;
    double aspect = 0.0;
    double rotation = 0.0;
};

inline ShapeParams default_params(Shape s) {
    switch (s) {
    case Shape::torus: return {0.0, 0.0, 0.0};
    case Shape::square:
    case Shape::rotated_square:
    case Shape::rectangle:
    case Shape::equilateral_triangle:
    case Shape::cube: return {kPi, s == Shape::rectangle ? 0.5 : 0.0, 0.0};
    case Shape::three_fold_star:
    case Shape::five_fold_star: return {kPi / 2.0, 0.5, 0.0};
    case Shape::tetrahedron: return {3.0 * kPi / 4.0, 0.0, 0.0};
    default: return {kPi / 2.0, 0.0, 0.0};
    }
}

inline ShapeParams resolve_params(Shape s, ShapeParams p) {
    const ShapeParams d = default_params(s);
    if (p.size == 0.0) p.size = d.size;
    if (p.aspect == 0.0) p.aspect = d.aspect;
    if (s != Shape::torus && !(p.size > 0.0)) {
        throw DomainError(std::string(shape_name(s)) + ": size must be positive");
    }
    if ((s == Shape::rectangle || s == Shape::three_fold_star || s == Shape::five_fold_star) &&
        !(p.aspect > 0.0)) {
        throw DomainError(std::string(shape_name(s)) + ": aspect must be positive");
    }
    if ((s == Shape::three_fold_star || s == Shape::five_fold_star) && p.aspect >= 1.0) {
        throw DomainError(std::string(shape_name(s)) + ": inner radius must be below outer");
    }
    return p;
}

namespace detail {

// Points within this distance of a boundary count as inside, so nodes lying
// exactly on a face of the shape are part of the domain.
inline constexpr double kBoundaryEps = 1e-9;

using Vec2 = std::array<double, 2>;

inline Vec2 rotate(Vec2 p, double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c * p[0] - s * p[1], s * p[0] + c * p[1]};
}

inline double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const double dx = b[0] - a[0];
    const double dy = b[1] - a[1];
    const double len2 = dx * dx + dy * dy;
    double t = ((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2;
    t = std::clamp(t, 0.0, 1.0);
    const double ex = a[0] + t * dx - p[0];
    const double ey = a[1] + t * dy - p[1];
    return std::sqrt(ex * ex + ey * ey);
}

// Closed point-in-polygon (crossing number, boundary included).
inline bool in_polygon(Vec2 p, const std::vector<Vec2>& poly) {
    bool inside = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        if (segment_distance(p, poly[j], poly[i]) <= kBoundaryEps) return true;
        const Vec2& a = poly[i];
        const Vec2& b = poly[j];
        if ((a[1] > p[1]) != (b[1] > p[1])) {
            const double x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if (p[0] < x) inside = !inside;
        }
    }
    return inside;
}

// Star polygon with `points` tips at radius `outer`, alternating with
// `inner`; a tip (or vertex, when inner == outer) points along +x2.
inline std::vector<Vec2> star_polygon(int points, double outer, double inner) {
    std::vector<Vec2> v;
    const int count = inner == outer ? points : 2 * points;
    for (int i = 0; i < count; ++i) {
        const double angle = kPi / 2.0 + 2.0 * kPi * i / count;
        const double r = (inner == outer || i % 2 == 0) ? outer : inner;
        v.push_back({r * std::cos(angle), r * std::sin(angle)});
    }
    return v;
}

inline bool inside_2d(Shape s, const ShapeParams& p, Vec2 x) {
    const double a = p.size;
    const double eps = kBoundaryEps;
    const double rot = p.rotation + (s == Shape::rotated_square ? kPi / 4.0 : 0.0);
    const Vec2 q = rotate(x, -rot);
    switch (s) {
    case Shape::square:
    case Shape::rotated_square:
        return std::abs(q[0]) <= a / 2.0 + eps && std::abs(q[1]) <= a / 2.0 + eps;
    case Shape::rectangle:
        return std::abs(q[0]) <= a / 2.0 + eps && std::abs(q[1]) <= a * p.aspect / 2.0 + eps;
    case Shape::disk: return std::hypot(q[0], q[1]) <= a + eps;
    case Shape::three_quarter_disk:
        // Disk with the open quadrant {x1 > 0, x2 < 0} removed.
        return std::hypot(q[0], q[1]) <= a + eps && !(q[0] > eps && q[1] < -eps);
    case Shape::equilateral_triangle:
        return in_polygon(q, star_polygon(3, a / std::sqrt(3.0), a / std::sqrt(3.0)));
    case Shape::pentagon: return in_polygon(q, star_polygon(5, a, a));
    case Shape::hexagon: return in_polygon(q, star_polygon(6, a, a));
    case Shape::three_fold_star: return in_polygon(q, star_polygon(3, a, a * p.aspect));
    case Shape::five_fold_star: return in_polygon(q, star_polygon(5, a, a * p.aspect));
    default: return false;
    }
}

inline bool inside_3d(Shape s, const ShapeParams& p, const std::array<double, 3>& x) {
    const double a = p.size;
    const double eps = kBoundaryEps;
    const Vec2 q = rotate({x[0], x[1]}, -p.rotation);
    const std::array<double, 3> y{q[0], q[1], x[2]};
    switch (s) {
    case Shape::cube:
        return std::abs(y[0]) <= a / 2.0 + eps && std::abs(y[1]) <= a / 2.0 + eps &&
               std::abs(y[2]) <= a / 2.0 + eps;
    case Shape::ball: return std::sqrt(y[0] * y[0] + y[1] * y[1] + y[2] * y[2]) <= a + eps;
    case Shape::tetrahedron: {
        // Regular tetrahedron with circumradius a, one vertex on +x3. Each
        // face lies at distance a/3 from the centre, opposite its vertex.
        const double rxy = 2.0 * std::sqrt(2.0) / 3.0;
        const std::array<std::array<double, 3>, 4> dirs{{
            {0.0, 0.0, 1.0},
            {rxy, 0.0, -1.0 / 3.0},
            {rxy * std::cos(2.0 * kPi / 3.0), rxy * std::sin(2.0 * kPi / 3.0), -1.0 / 3.0},
            {rxy * std::cos(4.0 * kPi / 3.0), rxy * std::sin(4.0 * kPi / 3.0), -1.0 / 3.0},
        }};
        for (const auto& d : dirs) {
            if (d[0] * y[0] + d[1] * y[1] + d[2] * y[2] < -a / 3.0 - eps) return false;
        }
        return true;
    }
    default: return false;
    }
}

} // namespace detail

/// Indicator of the physical domain inside the periodic box.
class DomainMask {
public:
    DomainMask(ScalarField indicator, Shape shape, ShapeParams params)
        : indicator_(std::move(indicator)), shape_(shape), params_(params) {
        for (double v : indicator_.values()) {
            if (v != 0.0 && v != 1.0) throw DomainError("mask values must be 0 or 1");
            if (v == 1.0) ++cells_;
        }
        if (cells_ == 0) {
            throw DomainError(std::string(shape_name(shape_)) + " mask is empty on grid " +
                              indicator_.spec().describe());
        }
    }

    const GridSpec& spec() const noexcept { return indicator_.spec(); }
    const ScalarField& indicator() const noexcept { return indicator_; }
    Shape shape() const noexcept { return shape_; }
    std::string_view name() const { return shape_name(shape_); }
    const ShapeParams& params() const noexcept { return params_; }

    bool contains(std::size_t i) const noexcept { return indicator_[i] == 1.0; }
    std::size_t cell_count() const noexcept { return cells_; }
    bool is_full() const noexcept { return cells_ == indicator_.size(); }

private:
    ScalarField indicator_;
    Shape shape_;
    ShapeParams params_;
    std::size_t cells_{0};
};

/// Samples the shape on the grid: nodes inside or on the boundary get 1.
inline DomainMask make_mask(const GridSpec& spec, Shape shape, ShapeParams params = {}) {
    const int need = shape_dim(shape);
    if (need != 0 && need != spec.dim()) {
        throw DomainError(std::string(shape_name(shape)) + " is a " + std::to_string(need) +
                          "D shape, grid is " + spec.describe());
    }
    params = resolve_params(shape, params);
    ScalarField psi = ScalarField::sample(spec, [&](const std::array<double, 3>& x) {
        if (shape == Shape::torus) return 1.0;
        const bool in = spec.dim() == 2 ? detail::inside_2d(shape, params, {x[0], x[1]})
                                        : detail::inside_3d(shape, params, x);
        return in ? 1.0 : 0.0;
    });
    return DomainMask(std::move(psi), shape, params);
}

inline DomainMask make_mask(const GridSpec& spec, std::string_view shape, ShapeParams params = {}) {
    return make_mask(spec, shape_from_name(shape), params);
}

/// Pointwise product f * psi.
inline ScalarField restrict_to_domain(const ScalarField& f, const DomainMask& mask) {
    require_same_grid(f.spec(), mask.spec(), "restrict");
    ScalarField out = f;
    const auto psi = mask.indicator().values();
    auto v = out.values();
    for (std::size_t i = 0; i < v.size(); ++i) v[i] *= psi[i];
    return out;
}

/// Smallest distance from a domain node to the box faces.
inline double box_margin(const DomainMask& mask) {
    const GridSpec& g = mask.spec();
    double reach = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (!mask.contains(i)) continue;
        const auto x = g.point(i);
        for (int a = 0; a < g.dim(); ++a) reach = std::max(reach, std::abs(x[static_cast<std::size_t>(a)]));
    }
    return kPi - reach;
}

} // namespace dirpart
