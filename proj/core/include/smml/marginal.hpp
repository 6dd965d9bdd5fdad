#pragma once

#include <Eigen/Dense>

#include <memory>

#include "smml/box.hpp"
#include "smml/family.hpp"
#include "smml/prior.hpp"

namespace smml {

struct TruncationOptions {
    double epsilon = 1e-6;  ///< mass allowed outside the truncation box
};

/// Prior mixture density of the data, r(x) = integral pi(theta) f(x|theta),
/// together with a bounded truncation box B capturing >= 1 - epsilon of its
/// mass. Closed form for the Gaussian family with a Gaussian prior
/// (r = N(m0, (1+s0^2) I)); prior-node quadrature otherwise.
class MarginalDensity {
  public:
    MarginalDensity(ExponentialFamily family, Prior prior, TruncationOptions trunc = {});

    const ExponentialFamily& family() const { return family_; }
    const Prior& prior() const { return prior_; }
    int dim() const { return family_.dim(); }
    bool closed_form() const { return closed_form_; }

    /// Raw density r(x), valid anywhere in the support.
    double eval(const VectorXd& x) const;
    /// r(x) / mass(B): the working density of the truncated problem.
    double normalized_eval(const VectorXd& x) const;
    /// Gradient of the raw density (analytic when closed form, else central
    /// finite differences with step 1e-6 per axis).
    VectorXd grad(const VectorXd& x) const;
    /// Gradient of the normalized density.
    VectorXd normalized_grad(const VectorXd& x) const { return grad(x) / captured_mass_; }

    const Box& box() const { return box_; }
    double captured_mass() const { return captured_mass_; }
    double truncation_epsilon() const { return trunc_.epsilon; }
    /// First moment of r restricted to B, divided by the captured mass.
    const VectorXd& moment() const { return moment_; }

  private:
    ExponentialFamily family_;
    Prior prior_;
    TruncationOptions trunc_;
    bool closed_form_ = false;
    // Closed-form case: r = N(mean_, var_ I).
    VectorXd mean_;
    double var_ = 1.0;
    Box box_;
    double captured_mass_ = 1.0;
    VectorXd moment_;
};

}  // namespace smml
