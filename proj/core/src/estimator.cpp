#include "smml/estimator.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace smml {

void validate_estimator(const Estimator& est, const ExponentialFamily& family) {
    const int n = est.n();
    if (n < 1) throw std::invalid_argument("estimator: n must be >= 1");
    if (est.assertions.rows() != n)
        throw std::invalid_argument("estimator: assertion count differs from q count");
    if (est.dim() != family.dim())
        throw std::invalid_argument("estimator: dimension differs from the family");
    for (int i = 0; i < n; ++i) {
        if (!(est.coding_probs[i] > 0.0)) {
            std::ostringstream msg;
            msg << "estimator: coding probability " << i << " is not positive";
            throw std::invalid_argument(msg.str());
        }
        if (!family.in_domain(est.assertions.row(i).transpose())) {
            std::ostringstream msg;
            msg << "estimator: assertion " << i << " outside the natural domain";
            throw std::invalid_argument(msg.str());
        }
    }
    if (std::abs(est.coding_probs.sum() - 1.0) > 1e-10)
        throw std::invalid_argument("estimator: coding probabilities must sum to 1");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((est.assertions.row(i) - est.assertions.row(j)).norm() <= 1e-12) {
                std::ostringstream msg;
                msg << "estimator: assertions " << i << " and " << j << " coincide";
                throw std::invalid_argument(msg.str());
            }
}

AffineScores::AffineScores(const Estimator& est, const ExponentialFamily& family)
    : theta_(est.assertions), offset_(est.n()) {
    for (int i = 0; i < est.n(); ++i)
        offset_[i] = std::log(est.coding_probs[i]) - family.psi(est.assertions.row(i).transpose());
}

int AffineScores::argmax(const VectorXd& x) const {
    int best = 0;
    double best_score = score(0, x);
    for (int i = 1; i < n(); ++i) {
        const double s = score(i, x);
        if (s > best_score) {
            best_score = s;
            best = i;
        }
    }
    return best;
}

double AffineScores::max_score(const VectorXd& x) const {
    double best = score(0, x);
    for (int i = 1; i < n(); ++i) best = std::max(best, score(i, x));
    return best;
}

double lambda_score(const Estimator& est, const ExponentialFamily& family, int i,
                    const VectorXd& x) {
    if (i < 0 || i >= est.n()) throw std::out_of_range("lambda_score: cell index out of range");
    return std::log(est.coding_probs[i]) + est.assertions.row(i).dot(x) -
           family.psi(est.assertions.row(i).transpose());
}

int assign(const Estimator& est, const ExponentialFamily& family, const VectorXd& x) {
    return AffineScores(est, family).argmax(x);
}

}  // namespace smml
