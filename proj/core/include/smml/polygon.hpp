#pragma once

#include <Eigen/Dense>

#include <optional>
#include <vector>

#include "smml/box.hpp"

namespace smml {

/// Half-plane { x : normal . x >= offset }.
struct HalfPlane {
    Eigen::Vector2d normal;
    double offset;

    double signed_value(const Eigen::Vector2d& p) const { return normal.dot(p) - offset; }
};

/// Convex polygon, counter-clockwise vertex order. Empty vector = empty set.
struct Polygon2 {
    std::vector<Eigen::Vector2d> vertices;

    bool empty() const { return vertices.size() < 3; }
    double area() const;
    Eigen::Vector2d centroid() const;
};

Polygon2 box_polygon(const Box& box);

/// Sutherland-Hodgman clip of a convex polygon against one half-plane.
Polygon2 clip(const Polygon2& poly, const HalfPlane& hp);

/// Intersection segment of the line { normal . x = offset } with a convex
/// region given as half-planes plus a bounding box. Returns endpoints or
/// nullopt when the intersection is shorter than tol.
std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> clip_line_to_region(
    const Eigen::Vector2d& normal, double offset, const std::vector<HalfPlane>& halfplanes,
    const Box& box, double tol = 1e-12);

}  // namespace smml
