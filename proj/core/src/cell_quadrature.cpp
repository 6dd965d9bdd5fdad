#include "smml/cell_quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace smml {

namespace {

CellIntegrals make_empty(int n, int d) {
    CellIntegrals out;
    out.mass = VectorXd::Zero(n);
    out.moment = MatrixXd::Zero(n, d);
    out.error = VectorXd::Zero(n);
    return out;
}

void integrate_interval_cell(const ScalarField& rho, double lo, double hi,
                             const QuadratureOptions& opts, double& mass, double& moment,
                             double& err) {
    VectorXd x(1);
    auto f = [&](double t) {
        x[0] = t;
        return rho(x);
    };
    auto fx = [&](double t) {
        x[0] = t;
        return t * rho(x);
    };
    double e0 = 0.0, e1 = 0.0;
    mass = integrate_interval_adaptive(f, lo, hi, opts.cell_tol, &e0, opts.max_refine_depth + 14);
    moment =
        integrate_interval_adaptive(fx, lo, hi, opts.cell_tol, &e1, opts.max_refine_depth + 14);
    err = e0 + e1;
}

void integrate_polygon_cell(const ScalarField& rho, const Polygon2& poly,
                            const QuadratureOptions& opts, double& mass, Eigen::Vector2d& moment,
                            double& err) {
    mass = 0.0;
    moment.setZero();
    err = 0.0;
    if (poly.empty()) return;
    const Eigen::Vector2d c = poly.centroid();
    const size_t count = poly.vertices.size();
    for (size_t k = 0; k < count; ++k) {
        const Eigen::Vector2d& a = poly.vertices[k];
        const Eigen::Vector2d& b = poly.vertices[(k + 1) % count];
        double e = 0.0;
        mass += integrate_triangle_refined(rho, c, a, b, opts.cell_tol, &e,
                                           opts.max_refine_depth);
        err += e;
        for (int axis = 0; axis < 2; ++axis) {
            auto fx = [&](const VectorXd& p) { return p[axis] * rho(p); };
            double em = 0.0;
            moment[axis] +=
                integrate_triangle_refined(fx, c, a, b, opts.cell_tol, &em, opts.max_refine_depth);
            err += em;
        }
    }
}

}  // namespace

CellIntegrals cell_integrals_grid(const Partition& partition, const ScalarField& rho,
                                  const QuadratureOptions& opts) {
    const int n = partition.n();
    const int d = partition.dim();
    const Box& box = partition.box();
    CellIntegrals out = make_empty(n, d);

    const int per_axis = opts.grid_per_axis;
    double dvol = 1.0;
    for (int k = 0; k < d; ++k) dvol *= (box.hi[k] - box.lo[k]) / per_axis;

    VectorXd x(d);
    std::vector<int> idx(d, 0);
    while (true) {
        for (int k = 0; k < d; ++k)
            x[k] = box.lo[k] + (idx[k] + 0.5) * (box.hi[k] - box.lo[k]) / per_axis;
        const int cell = partition.assign(x);
        const double w = rho(x) * dvol;
        out.mass[cell] += w;
        out.moment.row(cell) += w * x.transpose();
        int k = 0;
        while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == d) break;
    }
    // Coarse error proxy: one midpoint-rule cell worth of variation per cell.
    out.error.setConstant(dvol);
    out.warning = dvol > opts.cell_tol;
    return out;
}

CellIntegrals cell_integrals(const Partition& partition, const ScalarField& rho,
                             const QuadratureOptions& opts) {
    const int n = partition.n();
    const int d = partition.dim();
    CellIntegrals out = make_empty(n, d);

    if (d == 1) {
        for (int i = 0; i < n; ++i) {
            if (partition.empty_cell(i)) continue;
            const auto [lo, hi] = partition.interval(i);
            integrate_interval_cell(rho, lo, hi, opts, out.mass[i], out.moment(i, 0),
                                    out.error[i]);
        }
    } else if (d == 2) {
        for (int i = 0; i < n; ++i) {
            if (partition.empty_cell(i)) continue;
            Eigen::Vector2d m;
            integrate_polygon_cell(rho, partition.polygon(i), opts, out.mass[i], m, out.error[i]);
            out.moment.row(i) = m.transpose();
        }
    } else {
        return cell_integrals_grid(partition, rho, opts);
    }

    for (int i = 0; i < n; ++i)
        if (out.error[i] > 10.0 * opts.cell_tol) out.warning = true;
    return out;
}

CellIntegrals cell_integrals(const Partition& partition, const MarginalDensity& marginal,
                             const QuadratureOptions& opts) {
    return cell_integrals(
        partition, [&](const VectorXd& x) { return marginal.normalized_eval(x); }, opts);
}

}  // namespace smml
