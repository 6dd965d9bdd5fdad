#include "smml/partition.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace smml {

namespace {

// Separating half-space of cell i against cell j:
//   lambda_i(x) >= lambda_j(x)  <=>  (theta_i - theta_j) . x >= offset_j - offset_i.
HalfSpace separating_halfspace(const AffineScores& scores, int i, int j) {
    HalfSpace hs;
    hs.normal = (scores.theta().row(i) - scores.theta().row(j)).transpose();
    hs.offset = scores.offset()[j] - scores.offset()[i];
    hs.other = j;
    return hs;
}

}  // namespace

bool Partition::cell_contains(int i, const VectorXd& x, double tol) const {
    if (!box_.contains(x, tol)) return false;
    for (const auto& hs : cells_[i].active)
        if (hs.normal.dot(x) < hs.offset - tol) return false;
    // Pruned constraints are implied in exact arithmetic; re-check via scores
    // to keep the test meaningful for unpruned dimensions too.
    const double mine = scores_.score(i, x);
    return scores_.max_score(x) <= mine + std::max(tol, 1e-9 * (1.0 + std::abs(mine)));
}

const Polygon2& Partition::polygon(int i) const {
    if (dim() != 2) throw std::logic_error("partition: polygons exist only for d = 2");
    return cells_[i].poly;
}

std::pair<double, double> Partition::interval(int i) const {
    if (dim() != 1) throw std::logic_error("partition: intervals exist only for d = 1");
    return {cells_[i].lo, cells_[i].hi};
}

Partition build_cells(const Estimator& est, const ExponentialFamily& family, const Box& box) {
    validate_estimator(est, family);
    if (box.dim() != est.dim()) throw std::invalid_argument("build_cells: box dimension mismatch");
    if (!box.bounded()) throw std::invalid_argument("build_cells: truncation box must be bounded");

    Partition part;
    part.est_ = est;
    part.scores_ = AffineScores(est, family);
    part.box_ = box;
    const int n = est.n();
    const int d = est.dim();
    part.cells_.resize(n);

    if (d == 1) {
        for (int i = 0; i < n; ++i) {
            auto& cell = part.cells_[i];
            double lo = box.lo[0], hi = box.hi[0];
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                const HalfSpace hs = separating_halfspace(part.scores_, i, j);
                const double a = hs.normal[0];
                if (a > 0.0)
                    lo = std::max(lo, hs.offset / a);
                else
                    hi = std::min(hi, hs.offset / a);
            }
            cell.lo = lo;
            cell.hi = hi;
            cell.empty = !(hi - lo > 0.0);
            if (!cell.empty) {
                for (int j = 0; j < n; ++j) {
                    if (j == i) continue;
                    HalfSpace hs = separating_halfspace(part.scores_, i, j);
                    const double bound = hs.offset / hs.normal[0];
                    const bool binds = hs.normal[0] > 0.0 ? std::abs(bound - lo) <= 1e-12 * (1 + std::abs(lo))
                                                          : std::abs(bound - hi) <= 1e-12 * (1 + std::abs(hi));
                    if (binds) cell.active.push_back(std::move(hs));
                }
            }
        }
        // Faces: interval endpoints shared by two nonempty cells.
        for (int i = 0; i < n; ++i) {
            if (part.cells_[i].empty) continue;
            for (int j = i + 1; j < n; ++j) {
                if (part.cells_[j].empty) continue;
                const auto& ci = part.cells_[i];
                const auto& cj = part.cells_[j];
                double point;
                if (std::abs(ci.hi - cj.lo) <= 1e-10 * (1.0 + std::abs(ci.hi)))
                    point = ci.hi;
                else if (std::abs(cj.hi - ci.lo) <= 1e-10 * (1.0 + std::abs(cj.hi)))
                    point = cj.hi;
                else
                    continue;
                if (point <= box.lo[0] || point >= box.hi[0]) continue;
                Face face;
                face.i = i;
                face.j = j;
                face.a = face.b = VectorXd::Constant(1, point);
                const double dir = est.assertions(j, 0) - est.assertions(i, 0);
                face.normal = VectorXd::Constant(1, dir > 0.0 ? 1.0 : -1.0);
                face.measure = 1.0;
                part.faces_.push_back(std::move(face));
            }
        }
        return part;
    }

    if (d == 2) {
        for (int i = 0; i < n; ++i) {
            auto& cell = part.cells_[i];
            Polygon2 poly = box_polygon(box);
            std::vector<HalfPlane> planes;
            for (int j = 0; j < n && !poly.empty(); ++j) {
                if (j == i) continue;
                const HalfSpace hs = separating_halfspace(part.scores_, i, j);
                const HalfPlane hp{Eigen::Vector2d(hs.normal[0], hs.normal[1]), hs.offset};
                poly = clip(poly, hp);
                planes.push_back(hp);
            }
            cell.poly = poly;
            cell.empty = poly.empty() || std::abs(poly.area()) < 1e-14 * box.volume();
            if (cell.empty) cell.poly.vertices.clear();
        }
        // Active half-spaces and faces via the segment test: the constraint
        // against j binds iff the line lambda_i = lambda_j meets cell i in a
        // segment of positive length.
        for (int i = 0; i < n; ++i) {
            if (part.cells_[i].empty) continue;
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                HalfSpace hs_ij = separating_halfspace(part.scores_, i, j);
                std::vector<HalfPlane> others;
                for (int k = 0; k < n; ++k) {
                    if (k == i || k == j) continue;
                    const HalfSpace hs = separating_halfspace(part.scores_, i, k);
                    others.push_back({Eigen::Vector2d(hs.normal[0], hs.normal[1]), hs.offset});
                }
                const Eigen::Vector2d normal(hs_ij.normal[0], hs_ij.normal[1]);
                const auto segment =
                    clip_line_to_region(normal, hs_ij.offset, others, box, 1e-12);
                if (!segment) continue;
                part.cells_[i].active.push_back(std::move(hs_ij));
                if (j > i && !part.cells_[j].empty) {
                    Face face;
                    face.i = i;
                    face.j = j;
                    face.a = VectorXd(2);
                    face.b = VectorXd(2);
                    face.a << segment->first.x(), segment->first.y();
                    face.b << segment->second.x(), segment->second.y();
                    VectorXd dir =
                        (est.assertions.row(j) - est.assertions.row(i)).transpose();
                    face.normal = dir / dir.norm();
                    face.measure = (segment->second - segment->first).norm();
                    part.faces_.push_back(std::move(face));
                }
            }
        }
        return part;
    }

    // d >= 3: half-space description only; faces by sampled witnesses.
    for (int i = 0; i < n; ++i) {
        auto& cell = part.cells_[i];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cell.active.push_back(separating_halfspace(part.scores_, i, j));
        }
    }
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const int samples = 512;
    for (int i = 0; i < n; ++i) {
        VectorXd probe(d);
        bool any_inside = false;
        for (int s = 0; s < samples && !any_inside; ++s) {
            for (int k = 0; k < d; ++k)
                probe[k] = box.lo[k] + unit(rng) * (box.hi[k] - box.lo[k]);
            any_inside = part.scores_.argmax(probe) == i;
        }
        part.cells_[i].empty = !any_inside;
    }
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const HalfSpace hs = separating_halfspace(part.scores_, i, j);
            const double norm = hs.normal.norm();
            bool found = false;
            VectorXd witness;
            for (int s = 0; s < samples && !found; ++s) {
                VectorXd x(d);
                for (int k = 0; k < d; ++k)
                    x[k] = box.lo[k] + unit(rng) * (box.hi[k] - box.lo[k]);
                // Project onto the separating hyperplane.
                const double gap = (hs.normal.dot(x) - hs.offset) / (norm * norm);
                x -= gap * hs.normal;
                if (!box.contains(x)) continue;
                const double si = part.scores_.score(i, x);
                const double sj = part.scores_.score(j, x);
                const double best = part.scores_.max_score(x);
                const double tol = 1e-9 * (1.0 + std::abs(best));
                if (si >= best - tol && sj >= best - tol) {
                    found = true;
                    witness = x;
                }
            }
            if (found) {
                Face face;
                face.i = i;
                face.j = j;
                face.a = face.b = witness;
                VectorXd dir = (est.assertions.row(j) - est.assertions.row(i)).transpose();
                face.normal = dir / dir.norm();
                face.measure = 0.0;  // witness only; measure not estimated for d >= 3
                part.faces_.push_back(std::move(face));
            }
        }
    }
    return part;
}

}  // namespace smml
