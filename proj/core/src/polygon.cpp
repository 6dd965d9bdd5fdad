#include "smml/polygon.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace smml {

double Polygon2::area() const {
    if (empty()) return 0.0;
    double twice = 0.0;
    for (size_t k = 0; k < vertices.size(); ++k) {
        const auto& p = vertices[k];
        const auto& q = vertices[(k + 1) % vertices.size()];
        twice += p.x() * q.y() - q.x() * p.y();
    }
    return 0.5 * twice;
}

Eigen::Vector2d Polygon2::centroid() const {
    if (empty()) return Eigen::Vector2d::Zero();
    double twice = 0.0;
    Eigen::Vector2d c = Eigen::Vector2d::Zero();
    for (size_t k = 0; k < vertices.size(); ++k) {
        const auto& p = vertices[k];
        const auto& q = vertices[(k + 1) % vertices.size()];
        const double cross = p.x() * q.y() - q.x() * p.y();
        twice += cross;
        c += cross * (p + q);
    }
    if (twice == 0.0) return vertices[0];
    return c / (3.0 * twice);
}

Polygon2 box_polygon(const Box& box) {
    if (box.dim() != 2) throw std::invalid_argument("box_polygon: box must be two-dimensional");
    Polygon2 poly;
    poly.vertices = {{box.lo[0], box.lo[1]},
                     {box.hi[0], box.lo[1]},
                     {box.hi[0], box.hi[1]},
                     {box.lo[0], box.hi[1]}};
    return poly;
}

Polygon2 clip(const Polygon2& poly, const HalfPlane& hp) {
    Polygon2 out;
    const size_t count = poly.vertices.size();
    if (count == 0) return out;
    // Points within a small band of the boundary count as inside, so repeated
    // clips against near-identical planes stay stable.
    const double eps = 1e-12 * (1.0 + std::abs(hp.offset));
    for (size_t k = 0; k < count; ++k) {
        const Eigen::Vector2d& cur = poly.vertices[k];
        const Eigen::Vector2d& nxt = poly.vertices[(k + 1) % count];
        const double vc = hp.signed_value(cur);
        const double vn = hp.signed_value(nxt);
        const bool cur_in = vc >= -eps;
        const bool nxt_in = vn >= -eps;
        if (cur_in) out.vertices.push_back(cur);
        if (cur_in != nxt_in) {
            const double t = vc / (vc - vn);
            out.vertices.push_back(cur + t * (nxt - cur));
        }
    }
    if (out.vertices.size() >= 3 && std::abs(out.area()) < 1e-30) out.vertices.clear();
    return out;
}

std::optional<std::pair<Eigen::Vector2d, Eigen::Vector2d>> clip_line_to_region(
    const Eigen::Vector2d& normal, double offset, const std::vector<HalfPlane>& halfplanes,
    const Box& box, double tol) {
    const double norm = normal.norm();
    if (norm == 0.0) return std::nullopt;
    const Eigen::Vector2d unit = normal / norm;
    const Eigen::Vector2d base = (offset / norm) * unit;
    const Eigen::Vector2d tangent(-unit.y(), unit.x());

    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    auto restrict_halfplane = [&](const Eigen::Vector2d& n, double c) {
        // n . (base + s tangent) >= c  =>  s * (n . tangent) >= c - n . base
        const double slope = n.dot(tangent);
        const double rhs = c - n.dot(base);
        if (std::abs(slope) < 1e-300) {
            if (rhs > 1e-9 * (1.0 + std::abs(c))) lo = 1.0, hi = 0.0;  // empty
            return;
        }
        if (slope > 0.0)
            lo = std::max(lo, rhs / slope);
        else
            hi = std::min(hi, rhs / slope);
    };

    for (const auto& hp : halfplanes) restrict_halfplane(hp.normal, hp.offset);
    restrict_halfplane(Eigen::Vector2d(1, 0), box.lo[0]);
    restrict_halfplane(Eigen::Vector2d(-1, 0), -box.hi[0]);
    restrict_halfplane(Eigen::Vector2d(0, 1), box.lo[1]);
    restrict_halfplane(Eigen::Vector2d(0, -1), -box.hi[1]);

    if (!(hi - lo > tol)) return std::nullopt;
    return std::make_pair(base + lo * tangent, base + hi * tangent);
}

}  // namespace smml
