#include "smml/family.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace smml {

namespace {

void check_callbacks(const FamilyCallbacks& cb) {
    if (cb.dim < 1) throw std::invalid_argument("family: dimension must be positive");
    if (cb.support.dim() != cb.dim || cb.natural_domain.dim() != cb.dim ||
        cb.validation_box.dim() != cb.dim)
        throw std::invalid_argument("family: box dimensions disagree");
    if (!cb.validation_box.bounded())
        throw std::invalid_argument("family: validation box must be bounded");
    if (!cb.psi || !cb.grad_psi || !cb.hess_psi || !cb.log_h)
        throw std::invalid_argument("family: psi, grad_psi, hess_psi and log_h are required");
}

}  // namespace

ExponentialFamily::ExponentialFamily(std::string kind, FamilyCallbacks callbacks)
    : kind_(std::move(kind)) {
    check_callbacks(callbacks);
    impl_ = std::make_shared<const FamilyCallbacks>(std::move(callbacks));
}

bool ExponentialFamily::in_domain(const VectorXd& theta) const {
    if (theta.size() != dim()) return false;
    return impl_->natural_domain.strictly_contains(theta);
}

bool ExponentialFamily::in_support(const VectorXd& x) const {
    if (x.size() != dim()) return false;
    return impl_->support.strictly_contains(x);
}

double ExponentialFamily::psi(const VectorXd& theta) const {
    if (!in_domain(theta)) throw std::domain_error("psi: theta outside the natural domain");
    return impl_->psi(theta);
}

VectorXd ExponentialFamily::grad_psi(const VectorXd& theta) const {
    if (!in_domain(theta)) throw std::domain_error("grad_psi: theta outside the natural domain");
    return impl_->grad_psi(theta);
}

MatrixXd ExponentialFamily::hess_psi(const VectorXd& theta) const {
    if (!in_domain(theta)) throw std::domain_error("hess_psi: theta outside the natural domain");
    return impl_->hess_psi(theta);
}

double ExponentialFamily::log_h(const VectorXd& x) const {
    if (!in_support(x)) throw std::domain_error("log_h: x outside the support");
    return impl_->log_h(x);
}

double ExponentialFamily::log_density(const VectorXd& x, const VectorXd& theta) const {
    return x.dot(theta) - psi(theta) + log_h(x);
}

VectorXd ExponentialFamily::mu_inverse(const VectorXd& m) const {
    if (m.size() != dim()) throw std::invalid_argument("mu_inverse: dimension mismatch");
    if (impl_->mu_inverse) {
        VectorXd theta = impl_->mu_inverse(m);
        if (!in_domain(theta)) throw std::runtime_error("mu_inverse: mean outside image of mu");
        return theta;
    }

    VectorXd theta = impl_->mu_inverse_guess ? impl_->mu_inverse_guess(m)
                                             : impl_->validation_box.center();
    if (!in_domain(theta)) theta = impl_->validation_box.center();
    double resid = (impl_->grad_psi(theta) - m).norm();
    const double target = 1e-10 * (1.0 + m.norm());
    for (int it = 0; it < 100; ++it) {
        if (resid <= target) return theta;
        const MatrixXd q = impl_->hess_psi(theta);
        const VectorXd step = q.ldlt().solve(m - impl_->grad_psi(theta));
        double alpha = 1.0;
        bool accepted = false;
        for (int half = 0; half < 60; ++half) {
            const VectorXd cand = theta + alpha * step;
            if (in_domain(cand)) {
                const double cand_resid = (impl_->grad_psi(cand) - m).norm();
                if (cand_resid < resid) {
                    theta = cand;
                    resid = cand_resid;
                    accepted = true;
                    break;
                }
            }
            alpha *= 0.5;
        }
        if (!accepted) break;
    }
    if (resid <= target) return theta;
    throw std::runtime_error("mu_inverse: mean outside image of mu (Newton did not converge)");
}

ExponentialFamily make_gaussian_family(int dim) {
    if (dim < 1) throw std::invalid_argument("gaussian family: dimension must be positive");
    FamilyCallbacks cb;
    cb.dim = dim;
    cb.support = Box::whole_space(dim);
    cb.natural_domain = Box::whole_space(dim);
    cb.validation_box = Box(VectorXd::Constant(dim, -4.0), VectorXd::Constant(dim, 4.0));
    cb.psi = [](const VectorXd& th) { return 0.5 * th.squaredNorm(); };
    cb.grad_psi = [](const VectorXd& th) { return th; };
    cb.hess_psi = [dim](const VectorXd&) { return MatrixXd::Identity(dim, dim).eval(); };
    cb.log_h = [dim](const VectorXd& x) {
        return -0.5 * x.squaredNorm() - 0.5 * dim * std::log(2.0 * std::numbers::pi);
    };
    cb.mu_inverse = [](const VectorXd& m) { return m; };
    return ExponentialFamily("gaussian", std::move(cb));
}

ExponentialFamily make_exponential_rate_family() {
    FamilyCallbacks cb;
    cb.dim = 1;
    const double inf = std::numeric_limits<double>::infinity();
    cb.support = Box(VectorXd::Constant(1, 0.0), VectorXd::Constant(1, inf));
    cb.natural_domain = Box(VectorXd::Constant(1, -inf), VectorXd::Constant(1, 0.0));
    cb.validation_box = Box(VectorXd::Constant(1, -8.0), VectorXd::Constant(1, -0.25));
    cb.psi = [](const VectorXd& th) { return -std::log(-th[0]); };
    cb.grad_psi = [](const VectorXd& th) { return VectorXd::Constant(1, -1.0 / th[0]).eval(); };
    cb.hess_psi = [](const VectorXd& th) {
        return MatrixXd::Constant(1, 1, 1.0 / (th[0] * th[0])).eval();
    };
    cb.log_h = [](const VectorXd&) { return 0.0; };
    cb.mu_inverse = [](const VectorXd& m) {
        if (!(m[0] > 0.0)) throw std::runtime_error("mu_inverse: mean outside image of mu");
        return VectorXd::Constant(1, -1.0 / m[0]).eval();
    };
    return ExponentialFamily("exponential_rate", std::move(cb));
}

void validate_family(const ExponentialFamily& family, int samples, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const Box& vb = family.validation_box();
    const int d = family.dim();
    const double fd_step = 1e-4;
    std::uniform_real_distribution<double> unit(0.0, 1.0);

    for (int s = 0; s < samples; ++s) {
        VectorXd theta(d);
        for (int k = 0; k < d; ++k)
            theta[k] = vb.lo[k] + (0.1 + 0.8 * unit(rng)) * (vb.hi[k] - vb.lo[k]);

        const VectorXd grad = family.grad_psi(theta);
        VectorXd fd_grad(d);
        for (int k = 0; k < d; ++k) {
            VectorXd tp = theta, tm = theta;
            tp[k] += fd_step;
            tm[k] -= fd_step;
            fd_grad[k] = (family.psi(tp) - family.psi(tm)) / (2.0 * fd_step);
        }
        if ((grad - fd_grad).norm() > 1e-6 * (1.0 + grad.norm())) {
            std::ostringstream msg;
            msg << "family '" << family.kind() << "': grad_psi disagrees with FD(psi) at sample "
                << s;
            throw std::invalid_argument(msg.str());
        }

        const MatrixXd hess = family.hess_psi(theta);
        MatrixXd fd_hess(d, d);
        for (int k = 0; k < d; ++k) {
            VectorXd tp = theta, tm = theta;
            tp[k] += fd_step;
            tm[k] -= fd_step;
            fd_hess.col(k) = (family.grad_psi(tp) - family.grad_psi(tm)) / (2.0 * fd_step);
        }
        if ((hess - fd_hess).norm() > 1e-5 * (1.0 + hess.norm())) {
            std::ostringstream msg;
            msg << "family '" << family.kind()
                << "': hess_psi disagrees with FD(grad_psi) at sample " << s;
            throw std::invalid_argument(msg.str());
        }

        const Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (hess + hess.transpose()));
        if (eig.eigenvalues().minCoeff() <= 0.0) {
            std::ostringstream msg;
            msg << "family '" << family.kind() << "': hess_psi not positive-definite at sample "
                << s;
            throw std::invalid_argument(msg.str());
        }
    }
}

FamilyRegistry::FamilyRegistry() {
    factories_.emplace_back("gaussian", [](int dim) { return make_gaussian_family(dim); });
    factories_.emplace_back("exponential_rate", [](int dim) {
        if (dim != 1)
            throw std::invalid_argument("exponential_rate family is one-dimensional");
        return make_exponential_rate_family();
    });
}

FamilyRegistry& FamilyRegistry::instance() {
    static FamilyRegistry registry;
    return registry;
}

void FamilyRegistry::register_family(const std::string& kind, Factory factory) {
    for (auto& [name, _] : factories_)
        if (name == kind) throw std::invalid_argument("family kind already registered: " + kind);
    factories_.emplace_back(kind, std::move(factory));
}

ExponentialFamily FamilyRegistry::make(const std::string& kind, int dim) const {
    for (const auto& [name, factory] : factories_) {
        if (name == kind) {
            ExponentialFamily family = factory(dim);
            if (name != "gaussian" && name != "exponential_rate")
                validate_family(family, 100);
            return family;
        }
    }
    throw std::invalid_argument("unknown family kind: " + kind);
}

std::vector<std::string> FamilyRegistry::kinds() const {
    std::vector<std::string> out;
    for (const auto& [name, _] : factories_) out.push_back(name);
    return out;
}

}  // namespace smml
