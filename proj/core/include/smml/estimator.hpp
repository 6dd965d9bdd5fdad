#pragma once

#include <Eigen/Dense>

#include "smml/family.hpp"

namespace smml {

/// n assertions (rows of `assertions`) with their coding probabilities.
struct Estimator {
    MatrixXd assertions;     ///< n x d, row i holds theta_hat_i
    VectorXd coding_probs;   ///< n positive entries summing to 1

    int n() const { return static_cast<int>(coding_probs.size()); }
    int dim() const { return static_cast<int>(assertions.cols()); }
};

/// Checks the estimator invariants: q_i > 0, sum q = 1 to 1e-10, every
/// assertion inside the natural domain, pairwise distances > 1e-12.
/// Throws std::invalid_argument naming the violated condition.
void validate_estimator(const Estimator& est, const ExponentialFamily& family);

/// Precomputed affine scores lambda_i(x) = log q_i + x . theta_i - psi(theta_i).
class AffineScores {
  public:
    AffineScores() = default;
    AffineScores(const Estimator& est, const ExponentialFamily& family);

    int n() const { return static_cast<int>(offset_.size()); }
    double score(int i, const VectorXd& x) const { return theta_.row(i).dot(x) + offset_[i]; }
    /// Argmax over i; ties resolved to the smallest index.
    int argmax(const VectorXd& x) const;
    double max_score(const VectorXd& x) const;

    const MatrixXd& theta() const { return theta_; }
    const VectorXd& offset() const { return offset_; }

  private:
    MatrixXd theta_;
    VectorXd offset_;
};

/// lambda_i(x), computed directly from the estimator.
double lambda_score(const Estimator& est, const ExponentialFamily& family, int i,
                    const VectorXd& x);

/// Index of the cell containing x: argmax_i lambda_i(x), smallest index wins ties.
int assign(const Estimator& est, const ExponentialFamily& family, const VectorXd& x);

}  // namespace smml
