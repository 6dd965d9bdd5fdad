#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "smml/family.hpp"
#include "support/test_utils.hpp"

using namespace smml;
using testutil::vec1;
using testutil::vec2;

TEST_CASE("gaussian psi values") {
    const auto family = make_gaussian_family(2);
    CHECK(family.psi(vec2(0.0, 0.0)) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(family.psi(vec2(3.0, 4.0)) == doctest::Approx(12.5).epsilon(1e-15));
}

TEST_CASE("exponential-rate psi against direct normalization integral") {
    const auto family = make_exponential_rate_family();
    const double theta = -2.0;
    // psi(theta) = log integral_0^inf exp(x theta) dx, h == 1.
    const double integral =
        testutil::simpson([&](double x) { return std::exp(theta * x); }, 0.0, 30.0, 4000);
    CHECK(family.psi(vec1(theta)) == doctest::Approx(std::log(integral)).epsilon(1e-10));
    CHECK(family.psi(vec1(theta)) == doctest::Approx(-std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("grad_psi examples") {
    const auto g2 = make_gaussian_family(2);
    CHECK((g2.grad_psi(vec2(1.0, -1.0)) - vec2(1.0, -1.0)).norm() == 0.0);

    const auto g3 = make_gaussian_family(3);
    CHECK(g3.grad_psi(Eigen::VectorXd::Zero(3)).norm() == 0.0);

    const auto exp_rate = make_exponential_rate_family();
    const double theta = -2.0;
    // Mean oracle: expectation of the normalized density (-theta) exp(x theta).
    const double mean = testutil::simpson(
        [&](double x) { return x * (-theta) * std::exp(theta * x); }, 0.0, 30.0, 4000);
    CHECK(exp_rate.grad_psi(vec1(theta))[0] == doctest::Approx(mean).epsilon(1e-10));
    CHECK(exp_rate.grad_psi(vec1(theta))[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("hess_psi examples") {
    const auto g2 = make_gaussian_family(2);
    CHECK((g2.hess_psi(vec2(0.3, 7.0)) - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);

    const auto g1 = make_gaussian_family(1);
    CHECK(g1.hess_psi(vec1(5.0))(0, 0) == doctest::Approx(1.0));

    const auto exp_rate = make_exponential_rate_family();
    const double theta = -2.0;
    const double mean = 0.5;
    const double var = testutil::simpson(
        [&](double x) {
            return (x - mean) * (x - mean) * (-theta) * std::exp(theta * x);
        },
        0.0, 30.0, 4000);
    CHECK(exp_rate.hess_psi(vec1(theta))(0, 0) == doctest::Approx(var).epsilon(1e-9));
    CHECK(exp_rate.hess_psi(vec1(theta))(0, 0) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("log_h examples") {
    const auto g2 = make_gaussian_family(2);
    CHECK(g2.log_h(vec2(0.0, 0.0)) ==
          doctest::Approx(-std::log(2.0 * std::numbers::pi)).epsilon(1e-14));

    const auto exp_rate = make_exponential_rate_family();
    CHECK(exp_rate.log_h(vec1(1.0)) == 0.0);

    const auto g1 = make_gaussian_family(1);
    CHECK(g1.log_h(vec1(2.0)) ==
          doctest::Approx(-2.0 - 0.5 * std::log(2.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("mu_inverse examples") {
    const auto g2 = make_gaussian_family(2);
    CHECK((g2.mu_inverse(vec2(0.3, -0.7)) - vec2(0.3, -0.7)).norm() == 0.0);

    const auto g1 = make_gaussian_family(1);
    CHECK(g1.mu_inverse(vec1(0.0))[0] == 0.0);

    const auto exp_rate = make_exponential_rate_family();
    // Invert the mean map numerically: solve grad_psi(theta) = 0.5 by bisection.
    const double root = testutil::bisect(
        [&](double th) { return -1.0 / th - 0.5; }, -10.0, -0.1);
    CHECK(exp_rate.mu_inverse(vec1(0.5))[0] == doctest::Approx(root).epsilon(1e-10));
    CHECK(exp_rate.mu_inverse(vec1(0.5))[0] == doctest::Approx(-2.0).epsilon(1e-12));
}

TEST_CASE("domain errors") {
    const auto exp_rate = make_exponential_rate_family();
    CHECK_THROWS_AS(exp_rate.psi(vec1(0.0)), std::domain_error);
    CHECK_THROWS_AS(exp_rate.psi(vec1(1.0)), std::domain_error);
    CHECK_THROWS_AS(exp_rate.grad_psi(vec1(0.5)), std::domain_error);
    CHECK_THROWS_AS(exp_rate.log_h(vec1(-1.0)), std::domain_error);
    CHECK_THROWS_AS(exp_rate.mu_inverse(vec1(-0.5)), std::runtime_error);
}

TEST_CASE("finite-difference consistency over random draws") {
    std::mt19937_64 rng(99);
    for (const auto& family : {make_gaussian_family(2), make_exponential_rate_family()}) {
        const Box& vb = family.validation_box();
        const int d = family.dim();
        const double step = 1e-4;
        for (int s = 0; s < 100; ++s) {
            // Keep FD stencils inside the domain.
            Eigen::VectorXd lo = vb.lo.array() + 2 * step;
            Eigen::VectorXd hi = vb.hi.array() - 2 * step;
            const Eigen::VectorXd theta = testutil::random_point(lo, hi, rng);

            Eigen::VectorXd fd_grad(d);
            for (int k = 0; k < d; ++k) {
                Eigen::VectorXd tp = theta, tm = theta;
                tp[k] += step;
                tm[k] -= step;
                fd_grad[k] = (family.psi(tp) - family.psi(tm)) / (2 * step);
            }
            const Eigen::VectorXd grad = family.grad_psi(theta);
            CHECK((grad - fd_grad).norm() <= 1e-6 * (1.0 + grad.norm()));

            Eigen::MatrixXd fd_hess(d, d);
            for (int k = 0; k < d; ++k) {
                Eigen::VectorXd tp = theta, tm = theta;
                tp[k] += step;
                tm[k] -= step;
                fd_hess.col(k) = (family.grad_psi(tp) - family.grad_psi(tm)) / (2 * step);
            }
            const Eigen::MatrixXd hess = family.hess_psi(theta);
            CHECK((hess - fd_hess).norm() <= 1e-5 * (1.0 + hess.norm()));

            const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hess);
            CHECK(eig.eigenvalues().minCoeff() > 0.0);

            // Round trip through the mean map.
            const Eigen::VectorXd back = family.mu_inverse(grad);
            CHECK((back - theta).norm() <= 1e-8 * (1.0 + theta.norm()));
        }
    }
}

TEST_CASE("density normalization over random parameters") {
    std::mt19937_64 rng(7);
    SUBCASE("gaussian d=2") {
        const auto family = make_gaussian_family(2);
        std::uniform_real_distribution<double> unit(-2.0, 2.0);
        for (int s = 0; s < 10; ++s) {
            const Eigen::VectorXd theta = vec2(unit(rng), unit(rng));
            const double mass = testutil::simpson2(
                [&](double x, double y) {
                    return std::exp(family.log_density(vec2(x, y), theta));
                },
                theta[0] - 9, theta[0] + 9, theta[1] - 9, theta[1] + 9, 160);
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
    SUBCASE("exponential-rate") {
        const auto family = make_exponential_rate_family();
        std::uniform_real_distribution<double> unit(-4.0, -0.5);
        for (int s = 0; s < 10; ++s) {
            const double theta = unit(rng);
            const double mass = testutil::simpson(
                [&](double x) {
                    return x <= 0.0 ? 0.0
                                    : std::exp(family.log_density(vec1(x), vec1(theta)));
                },
                1e-12, 40.0 / -theta, 4000);
            CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
        }
    }
}

TEST_CASE("registry accepts consistent families and rejects broken callbacks") {
    // Scaled Gaussian X ~ N(2 theta, 2): psi = theta^2, h = N(0, 2) density.
    FamilyCallbacks good;
    good.dim = 1;
    good.support = Box::whole_space(1);
    good.natural_domain = Box::whole_space(1);
    good.validation_box = Box(vec1(-3.0), vec1(3.0));
    good.psi = [](const Eigen::VectorXd& th) { return th[0] * th[0]; };
    good.grad_psi = [](const Eigen::VectorXd& th) { return vec1(2.0 * th[0]); };
    good.hess_psi = [](const Eigen::VectorXd&) {
        return Eigen::MatrixXd::Constant(1, 1, 2.0).eval();
    };
    good.log_h = [](const Eigen::VectorXd& x) {
        return -x[0] * x[0] / 4.0 - 0.5 * std::log(4.0 * std::numbers::pi);
    };
    FamilyRegistry::instance().register_family(
        "gaussian_scaled", [good](int) { return ExponentialFamily("gaussian_scaled", good); });
    const auto family = FamilyRegistry::instance().make("gaussian_scaled", 1);
    CHECK(family.grad_psi(vec1(1.5))[0] == doctest::Approx(3.0));
    CHECK(family.mu_inverse(vec1(3.0))[0] == doctest::Approx(1.5).epsilon(1e-10));

    FamilyCallbacks broken = good;
    broken.grad_psi = [](const Eigen::VectorXd& th) { return vec1(th[0]); };  // inconsistent
    FamilyRegistry::instance().register_family(
        "broken_family", [broken](int) { return ExponentialFamily("broken_family", broken); });
    CHECK_THROWS_AS(FamilyRegistry::instance().make("broken_family", 1), std::invalid_argument);

    CHECK_THROWS_AS(FamilyRegistry::instance().make("no_such_family", 1), std::invalid_argument);
    CHECK_THROWS_AS(FamilyRegistry::instance().make("exponential_rate", 2),
                    std::invalid_argument);
}
