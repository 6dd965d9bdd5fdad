#include "smml/marginal.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "smml/quadrature.hpp"

namespace smml {

namespace {

double gaussian_box_mass(const VectorXd& mean, double var, const Box& box) {
    const double sd = std::sqrt(var);
    double mass = 1.0;
    for (int k = 0; k < mean.size(); ++k) {
        const double a = (box.lo[k] - mean[k]) / sd;
        const double b = (box.hi[k] - mean[k]) / sd;
        mass *= normal_cdf(b) - normal_cdf(a);
    }
    return mass;
}

}  // namespace

MarginalDensity::MarginalDensity(ExponentialFamily family, Prior prior, TruncationOptions trunc)
    : family_(std::move(family)), prior_(std::move(prior)), trunc_(trunc) {
    if (prior_.dim() != family_.dim())
        throw std::invalid_argument("marginal: prior and family dimensions disagree");
    if (!(trunc_.epsilon > 0.0 && trunc_.epsilon < 1.0))
        throw std::invalid_argument("marginal: truncation epsilon must be in (0, 1)");
    const int d = family_.dim();

    closed_form_ = family_.kind() == "gaussian" && prior_.is_gaussian();
    if (closed_form_) {
        const auto& g = prior_.gaussian();
        mean_ = g.mean;
        var_ = 1.0 + g.scale * g.scale;
        // Split the allowed tail mass evenly across axes and invert the
        // Gaussian tail: per-axis tail eps_axis satisfies
        // (1 - eps_axis)^d >= 1 - epsilon.
        // The 0.9 safety factor keeps the realized mass strictly above the
        // target despite rounding in the tail quantile.
        const double eps_axis = 0.9 * (1.0 - std::pow(1.0 - trunc_.epsilon, 1.0 / d));
        const double k = normal_tail_quantile(0.5 * eps_axis);
        const double sd = std::sqrt(var_);
        box_ = Box(mean_.array() - k * sd, mean_.array() + k * sd);
        captured_mass_ = gaussian_box_mass(mean_, var_, box_);
        moment_ = mean_;  // box is symmetric about the mean
        return;
    }

    // Quadrature marginal: r(x) = sum_j w_j f(x | theta_j) over prior nodes.
    // Grow the box until the captured mass (vs. the exact total mass 1)
    // reaches 1 - epsilon.
    const auto& nodes = prior_.quadrature_nodes();
    double in_domain_mass = 0.0;
    for (long j = 0; j < nodes.weights.size(); ++j) {
        if (family_.in_domain(nodes.nodes.row(j).transpose())) in_domain_mass += nodes.weights[j];
    }
    if (in_domain_mass < 1.0 - 1e-8)
        throw std::invalid_argument(
            "marginal: prior places mass outside the family's natural domain");
    VectorXd mean_guess = VectorXd::Zero(d);
    MatrixXd second = MatrixXd::Zero(d, d);
    for (long j = 0; j < nodes.weights.size(); ++j) {
        const VectorXd theta = nodes.nodes.row(j).transpose();
        if (!family_.in_domain(theta)) continue;
        const VectorXd mu = family_.grad_psi(theta);
        mean_guess += nodes.weights[j] * mu;
        second += nodes.weights[j] * (family_.hess_psi(theta) + mu * mu.transpose());
    }
    const MatrixXd cov = second - mean_guess * mean_guess.transpose();
    VectorXd spread = cov.diagonal().cwiseMax(1e-12).cwiseSqrt();

    VectorXd lo = mean_guess - 6.0 * spread;
    VectorXd hi = mean_guess + 6.0 * spread;
    for (int k = 0; k < d; ++k) {
        lo[k] = std::max(lo[k], family_.support().lo[k]);
        hi[k] = std::min(hi[k], family_.support().hi[k]);
    }

    auto raw = [this](const VectorXd& x) { return eval(x); };
    const double tol = 0.05 * trunc_.epsilon;
    for (int grow = 0; grow < 40; ++grow) {
        box_ = Box(lo, hi);
        captured_mass_ = integrate_box_adaptive(raw, box_, tol);
        if (captured_mass_ >= 1.0 - trunc_.epsilon) break;
        for (int k = 0; k < d; ++k) {
            const double pad = 0.5 * (hi[k] - lo[k]);
            lo[k] = std::max(lo[k] - pad, family_.support().lo[k]);
            hi[k] = std::min(hi[k] + pad, family_.support().hi[k]);
        }
    }
    if (captured_mass_ < 1.0 - trunc_.epsilon)
        throw std::runtime_error("marginal: failed to capture the requested mass in a box");

    moment_ = VectorXd::Zero(d);
    for (int k = 0; k < d; ++k) {
        const int axis = k;
        moment_[k] = integrate_box_adaptive(
                         [&](const VectorXd& x) { return x[axis] * eval(x); }, box_, tol) /
                     captured_mass_;
    }
}

double MarginalDensity::eval(const VectorXd& x) const {
    if (closed_form_) {
        const int d = dim();
        const double norm = std::pow(2.0 * std::numbers::pi * var_, -0.5 * d);
        return norm * std::exp(-0.5 * (x - mean_).squaredNorm() / var_);
    }
    if (!family_.in_support(x)) return 0.0;
    const auto& nodes = prior_.quadrature_nodes();
    const double lh = family_.log_h(x);
    double sum = 0.0;
    for (long j = 0; j < nodes.weights.size(); ++j) {
        const VectorXd theta = nodes.nodes.row(j).transpose();
        if (nodes.weights[j] == 0.0 || !family_.in_domain(theta)) continue;
        sum += nodes.weights[j] *
               std::exp(x.dot(theta) - family_.psi(theta) + lh);
    }
    return sum;
}

double MarginalDensity::normalized_eval(const VectorXd& x) const {
    return eval(x) / captured_mass_;
}

VectorXd MarginalDensity::grad(const VectorXd& x) const {
    if (closed_form_) return -eval(x) / var_ * (x - mean_);
    const int d = dim();
    VectorXd g(d);
    const double step = 1e-6;
    for (int k = 0; k < d; ++k) {
        VectorXd xp = x, xm = x;
        xp[k] += step;
        xm[k] -= step;
        g[k] = (eval(xp) - eval(xm)) / (2.0 * step);
    }
    return g;
}

}  // namespace smml
