#pragma once

#include <Eigen/Dense>

#include <limits>
#include <stdexcept>

namespace smml {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Axis-aligned box in R^d. Entries may be +-infinity for unbounded axes.
struct Box {
    VectorXd lo;
    VectorXd hi;

    Box() = default;
    Box(VectorXd lo_, VectorXd hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
        if (lo.size() != hi.size()) throw std::invalid_argument("box: lo/hi dimension mismatch");
        for (int k = 0; k < lo.size(); ++k)
            if (!(lo[k] < hi[k])) throw std::invalid_argument("box: lo must be < hi on every axis");
    }

    static Box whole_space(int d) {
        const double inf = std::numeric_limits<double>::infinity();
        return Box(VectorXd::Constant(d, -inf), VectorXd::Constant(d, inf));
    }

    int dim() const { return static_cast<int>(lo.size()); }

    bool bounded() const {
        return lo.allFinite() && hi.allFinite();
    }

    bool contains(const VectorXd& x, double tol = 0.0) const {
        for (int k = 0; k < lo.size(); ++k)
            if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) return false;
        return true;
    }

    bool strictly_contains(const VectorXd& x) const {
        for (int k = 0; k < lo.size(); ++k)
            if (!(x[k] > lo[k] && x[k] < hi[k])) return false;
        return true;
    }

    VectorXd center() const { return 0.5 * (lo + hi); }
    VectorXd widths() const { return hi - lo; }

    double volume() const {
        double v = 1.0;
        for (int k = 0; k < lo.size(); ++k) v *= hi[k] - lo[k];
        return v;
    }
};

}  // namespace smml
