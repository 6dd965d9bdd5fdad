#pragma once

#include <Eigen/Dense>

#include <variant>
#include <vector>

#include "smml/box.hpp"
#include "smml/family.hpp"

namespace smml {

/// Isotropic Gaussian prior N(mean, scale^2 I) on the natural parameters.
struct GaussianPrior {
    VectorXd mean;
    double scale = 1.0;
};

/// Density tabulated on a tensor grid over a box inside the natural domain.
/// Node counts must be odd (composite Simpson); values are normalized to
/// integrate to 1 at construction.
struct TabulatedPrior {
    Box domain;
    std::vector<int> shape;      ///< nodes per axis
    std::vector<double> values;  ///< flat grid values, first axis fastest; size = prod(shape)
};

class Prior {
  public:
    explicit Prior(GaussianPrior gaussian);
    /// Validates shape/values, rejects negative entries, normalizes mass.
    explicit Prior(TabulatedPrior table);

    bool is_gaussian() const { return std::holds_alternative<GaussianPrior>(spec_); }
    const GaussianPrior& gaussian() const { return std::get<GaussianPrior>(spec_); }
    const TabulatedPrior& table() const { return std::get<TabulatedPrior>(spec_); }

    int dim() const;
    double density(const VectorXd& theta) const;

    /// Quadrature nodes/weights representing integrals against the prior:
    /// integral pi(theta) f(theta) dtheta ~= sum_j w_j f(theta_j).
    /// Gaussian priors get a tensor Gauss-Hermite-style panel rule over
    /// mean +- 8 scale; tabulated priors use their own Simpson grid.
    struct NodeSet {
        MatrixXd nodes;    ///< count x d
        VectorXd weights;  ///< count
    };
    const NodeSet& quadrature_nodes() const { return nodes_; }

  private:
    std::variant<GaussianPrior, TabulatedPrior> spec_;
    NodeSet nodes_;
};

}  // namespace smml
