#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "smml/box.hpp"

namespace smml {

/// Callback bundle describing an exponential family
///   f(x | theta) = exp(x . theta - psi(theta)) h(x)
/// on an open support with convex natural parameter domain.
struct FamilyCallbacks {
    int dim = 0;
    Box support;         ///< data space (axis entries may be infinite)
    Box natural_domain;  ///< natural parameter space (open box semantics)
    Box validation_box;  ///< bounded sub-box of the domain used for checks

    std::function<double(const VectorXd&)> psi;
    std::function<VectorXd(const VectorXd&)> grad_psi;
    std::function<MatrixXd(const VectorXd&)> hess_psi;
    std::function<double(const VectorXd&)> log_h;
    /// Optional closed-form inverse of the mean map; Newton fallback otherwise.
    std::function<VectorXd(const VectorXd&)> mu_inverse = nullptr;
    /// Optional Newton starting point for mu_inverse given a target mean.
    std::function<VectorXd(const VectorXd&)> mu_inverse_guess = nullptr;
};

class ExponentialFamily {
  public:
    ExponentialFamily(std::string kind, FamilyCallbacks callbacks);

    const std::string& kind() const { return kind_; }
    int dim() const { return impl_->dim; }
    const Box& support() const { return impl_->support; }
    const Box& natural_domain() const { return impl_->natural_domain; }
    const Box& validation_box() const { return impl_->validation_box; }

    bool in_domain(const VectorXd& theta) const;
    bool in_support(const VectorXd& x) const;

    /// Log-partition function. Throws std::domain_error outside the domain.
    double psi(const VectorXd& theta) const;
    /// Mean map mu(theta) = grad psi.
    VectorXd grad_psi(const VectorXd& theta) const;
    /// Covariance map, symmetric positive-definite on the domain.
    MatrixXd hess_psi(const VectorXd& theta) const;
    /// Carrier term. Throws std::domain_error outside the support.
    double log_h(const VectorXd& x) const;

    /// log f(x | theta) = x . theta - psi(theta) + log h(x).
    double log_density(const VectorXd& x, const VectorXd& theta) const;

    /// Inverts the mean map by damped Newton with hess_psi as Jacobian.
    /// Throws std::runtime_error when m is not resolvable as a mean.
    VectorXd mu_inverse(const VectorXd& m) const;

  private:
    std::string kind_;
    std::shared_ptr<const FamilyCallbacks> impl_;
};

/// Isotropic Gaussian with known unit variance, any dimension:
/// psi = |theta|^2/2, h = standard normal density, mu = identity.
ExponentialFamily make_gaussian_family(int dim);

/// Exponential distribution in its natural parametrization (d = 1):
/// support x > 0, theta < 0, psi = -log(-theta), h = 1, mu = -1/theta.
ExponentialFamily make_exponential_rate_family();

/// Finite-difference consistency checks run when a family is registered:
/// grad vs FD(psi), hess vs FD(grad), positive-definiteness, over random
/// draws from the validation box. Throws std::invalid_argument on failure.
void validate_family(const ExponentialFamily& family, int samples = 100,
                     std::uint64_t seed = 20240901);

/// Registry of family constructors keyed by kind tag. Built-ins
/// ("gaussian", "exponential_rate") are pre-registered.
class FamilyRegistry {
  public:
    using Factory = std::function<ExponentialFamily(int dim)>;

    static FamilyRegistry& instance();

    /// Registers a factory; the first construction is validated.
    void register_family(const std::string& kind, Factory factory);
    ExponentialFamily make(const std::string& kind, int dim) const;
    std::vector<std::string> kinds() const;

  private:
    FamilyRegistry();
    std::vector<std::pair<std::string, Factory>> factories_;
};

}  // namespace smml
