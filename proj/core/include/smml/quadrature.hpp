#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "smml/box.hpp"

namespace smml {

using ScalarField = std::function<double(const VectorXd&)>;
using ScalarFn1 = std::function<double(double)>;

/// Gauss-Legendre nodes/weights on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes by Newton iteration on the Legendre polynomial; cached per order.
const GaussRule& gauss_legendre(int order);

/// Fixed-order Gauss-Legendre on [a, b].
double integrate_interval(const ScalarFn1& f, double a, double b, int order = 16);

/// Adaptive composite Gauss-Legendre on [a, b]; bisects until the two-level
/// estimate is below tol (absolute). err_out gets the final estimate.
double integrate_interval_adaptive(const ScalarFn1& f, double a, double b, double tol,
                                   double* err_out = nullptr, int max_depth = 30);

/// Tensor-product Gauss-Legendre over a bounded box with `panels` composite
/// panels per axis. Cost is (panels*order)^d evaluations.
double integrate_box(const ScalarField& f, const Box& box, int panels = 8, int order = 8);

/// Panel-doubling tensor quadrature until successive values differ by < tol.
double integrate_box_adaptive(const ScalarField& f, const Box& box, double tol,
                              double* err_out = nullptr, int max_panels = 256);

/// Composite Simpson weights for `count` equally spaced nodes spanning a
/// length-`length` interval. count must be odd and >= 3.
std::vector<double> simpson_weights(int count, double length);

/// Symmetric triangle quadrature rule, degree of exactness 7 (13 points).
/// Points in barycentric coordinates, weights normalized to sum 1.
struct TriangleRule {
    Eigen::Matrix<double, 13, 3> bary;
    Eigen::Matrix<double, 13, 1> weights;
};
const TriangleRule& triangle_rule_deg7();

/// Quadrature of f over triangle (a,b,c), fixed rule (no refinement).
double integrate_triangle(const ScalarField& f, const Eigen::Vector2d& a,
                          const Eigen::Vector2d& b, const Eigen::Vector2d& c);

/// One-level refined triangle quadrature with error estimate: the rule on the
/// four midpoint children vs the parent; recurses while the gap exceeds tol.
double integrate_triangle_refined(const ScalarField& f, const Eigen::Vector2d& a,
                                  const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                                  double tol, double* err_out = nullptr, int max_depth = 6);

/// Standard normal CDF.
double normal_cdf(double z);

/// Returns k >= 0 with P(Z > k) = tail for a standard normal Z.
double normal_tail_quantile(double tail);

}  // namespace smml
