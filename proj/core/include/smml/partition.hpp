#pragma once

#include <Eigen/Dense>

#include <vector>

#include "smml/box.hpp"
#include "smml/estimator.hpp"
#include "smml/polygon.hpp"

namespace smml {

/// Half-space { x : normal . x >= offset } in R^d.
struct HalfSpace {
    VectorXd normal;
    double offset;
    int other;  ///< index of the competing cell that induced this constraint
};

/// A shared (d-1)-dimensional face between cells i and j. In d=2 the
/// endpoints span a segment; in d=1 both endpoints coincide (a point).
/// `normal` is the unit vector orthogonal to the face pointing from cell i
/// into cell j, i.e. along theta_j - theta_i.
struct Face {
    int i = 0;
    int j = 0;
    VectorXd a;
    VectorXd b;
    VectorXd normal;
    double measure = 0.0;  ///< segment length (d=2); 1 for a point face (d=1)
};

/// The argmax cells V_i = { x in B : lambda_i(x) >= lambda_j(x) for all j },
/// stored as pruned half-space lists plus explicit geometry for d <= 2.
class Partition {
  public:
    int n() const { return static_cast<int>(cells_.size()); }
    int dim() const { return box_.dim(); }
    const Box& box() const { return box_; }
    const Estimator& estimator() const { return est_; }
    const AffineScores& scores() const { return scores_; }

    /// Argmax cell of x; ties go to the smallest index.
    int assign(const VectorXd& x) const { return scores_.argmax(x); }
    /// Membership by the half-space description, tolerance in score units.
    bool cell_contains(int i, const VectorXd& x, double tol = 0.0) const;

    bool empty_cell(int i) const { return cells_[i].empty; }
    const std::vector<HalfSpace>& halfspaces(int i) const { return cells_[i].active; }

    /// d=2 only: the clipped convex polygon of cell i.
    const Polygon2& polygon(int i) const;
    /// d=1 only: the cell interval clipped to B (lo > hi for empty cells).
    std::pair<double, double> interval(int i) const;

    /// All shared faces of positive (d-1)-measure. Exact for d <= 2,
    /// sample-detected witnesses for d >= 3.
    const std::vector<Face>& shared_faces() const { return faces_; }

    friend Partition build_cells(const Estimator& est, const ExponentialFamily& family,
                                 const Box& box);

  private:
    struct Cell {
        std::vector<HalfSpace> active;
        Polygon2 poly;             // d == 2
        double lo = 0.0, hi = 0.0; // d == 1
        bool empty = false;
    };

    Estimator est_;
    AffineScores scores_;
    Box box_;
    std::vector<Cell> cells_;
    std::vector<Face> faces_;
};

/// Builds the partition of B induced by the estimator's affine scores.
/// Throws std::invalid_argument for degenerate (duplicate) assertions.
Partition build_cells(const Estimator& est, const ExponentialFamily& family, const Box& box);

}  // namespace smml
