#pragma once

#include <Eigen/Dense>

#include <functional>

#include "smml/marginal.hpp"
#include "smml/partition.hpp"
#include "smml/quadrature.hpp"

namespace smml {

struct QuadratureOptions {
    double cell_tol = 1e-11;   ///< absolute tolerance per cell integral
    int max_refine_depth = 8;  ///< triangle/interval bisection depth cap
    int grid_per_axis = 256;   ///< resolution of the midpoint-grid fallback
};

/// Per-cell mass and first moment of a density over the partition cells:
/// mass_i = integral over V_i of rho, moment_i = integral of x rho.
struct CellIntegrals {
    VectorXd mass;           ///< n
    MatrixXd moment;         ///< n x d
    VectorXd error;          ///< per-cell quadrature error estimate
    bool warning = false;    ///< set when an error estimate exceeded tolerance

    VectorXd mean(int i) const { return moment.row(i).transpose() / mass[i]; }
};

/// Integrates rho over every cell. Geometric schemes for d <= 2 (exact
/// interval/polygon decomposition, adaptive Gauss rules); midpoint grid with
/// argmax assignment for d >= 3.
CellIntegrals cell_integrals(const Partition& partition, const ScalarField& rho,
                             const QuadratureOptions& opts = {});

/// Midpoint-grid variant usable in any dimension (the d >= 3 route, exposed
/// for cross-checks).
CellIntegrals cell_integrals_grid(const Partition& partition, const ScalarField& rho,
                                  const QuadratureOptions& opts = {});

/// Mass/moment integrals of the truncated-and-renormalized marginal; the
/// quantities entering the stationarity equations.
CellIntegrals cell_integrals(const Partition& partition, const MarginalDensity& marginal,
                             const QuadratureOptions& opts = {});

}  // namespace smml
