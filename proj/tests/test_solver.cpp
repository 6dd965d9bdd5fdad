#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "smml/solver.hpp"
#include "support/test_utils.hpp"

using namespace smml;
using testutil::vec1;
using testutil::vec2;

namespace {

MarginalDensity gg_marginal(int d, double mean0, double scale, double eps = 1e-6) {
    return MarginalDensity(make_gaussian_family(d),
                           Prior(GaussianPrior{Eigen::VectorXd::Constant(d, mean0), scale}),
                           TruncationOptions{eps});
}

Estimator estimator_1d(const std::vector<double>& thetas, const std::vector<double>& probs) {
    Estimator est;
    est.assertions.resize(thetas.size(), 1);
    est.coding_probs.resize(probs.size());
    for (size_t i = 0; i < thetas.size(); ++i) {
        est.assertions(i, 0) = thetas[i];
        est.coding_probs[i] = probs[i];
    }
    return est;
}

/// Independent Simpson value of C = -integral of rho_hat log h over B.
double carrier_oracle_1d(const MarginalDensity& marginal, const ExponentialFamily& family) {
    const Box& box = marginal.box();
    return -testutil::simpson(
        [&](double x) {
            return marginal.normalized_eval(vec1(x)) * family.log_h(vec1(x));
        },
        box.lo[0], box.hi[0], 4096);
}

}  // namespace

TEST_CASE("single-cell I1 equals the carrier constant") {
    const auto family = make_gaussian_family(2);
    const auto marginal = gg_marginal(2, 0.0, 1.0);
    Estimator est;
    est.assertions = Eigen::MatrixXd::Zero(1, 2);
    est.coding_probs = Eigen::VectorXd::Ones(1);

    const Partition part = build_cells(est, family, marginal.box());
    const I1Evaluation i1 = evaluate_i1(est, part, marginal, family);
    CHECK_FALSE(i1.used_direct);
    CHECK(i1.i1 == doctest::Approx(i1.constant_c).epsilon(1e-12));

    // Independent value: for the untruncated problem C = log(2 pi) + (1/2) *
    // (trace of the marginal covariance + |m0|^2); truncation shifts it by
    // O(eps * log-tail).
    const double full_space = std::log(2.0 * std::numbers::pi) + 0.5 * (2.0 * 2.0);
    CHECK(i1.constant_c == doctest::Approx(full_space).epsilon(1e-4));
}

TEST_CASE("finite-sum and direct I1 agree after one Lemma projection") {
    const auto family = make_gaussian_family(2);
    const auto marginal = gg_marginal(2, 0.3, 1.5);
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> unit(-2.0, 2.0);
    Estimator est;
    est.assertions.resize(3, 2);
    for (int i = 0; i < 3; ++i) est.assertions.row(i) << unit(rng), unit(rng);
    est.coding_probs.resize(3);
    est.coding_probs << 0.5, 0.3, 0.2;

    const Partition part = build_cells(est, family, marginal.box());
    const Estimator projected = lloyd_step(est, marginal, family, marginal.box()).next;
    const I1Evaluation i1 = evaluate_i1(projected, part, marginal, family);
    CHECK_FALSE(i1.used_direct);
    CHECK(std::abs(i1.finite_sum - i1.direct) <= 1e-6);

    // A random (unprojected) estimator fails the consistency precondition and
    // falls back to the direct expansion.
    const I1Evaluation raw = evaluate_i1(est, part, marginal, family);
    CHECK(raw.used_direct);
    CHECK(raw.i1 == raw.direct);
}

TEST_CASE("lloyd n=1 converges in one step to the mean") {
    const auto family = make_gaussian_family(2);
    const auto marginal = gg_marginal(2, -0.4, 2.0);
    Estimator est;
    est.assertions.resize(1, 2);
    est.assertions << 1.7, 0.9;
    est.coding_probs = Eigen::VectorXd::Ones(1);
    const LloydOutcome out = lloyd_step(est, marginal, family, marginal.box());
    CHECK(out.next.coding_probs[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((out.next.assertions.row(0).transpose() - marginal.moment()).norm() <= 1e-8);
}

TEST_CASE("symmetric pair is a lloyd fixed point") {
    const auto family = make_gaussian_family(1);
    const auto marginal = gg_marginal(1, 0.0, 3.0);
    const Box& box = marginal.box();
    // Oracle: the symmetric two-cell stationary point has cells split at 0 and
    // assertions at the conditional means (Gaussian family: mu = identity).
    const double num = testutil::simpson(
        [&](double x) { return x * marginal.normalized_eval(vec1(x)); }, 0.0, box.hi[0], 4096);
    const double den = testutil::simpson(
        [&](double x) { return marginal.normalized_eval(vec1(x)); }, 0.0, box.hi[0], 4096);
    const double a = num / den;

    const Estimator est = estimator_1d({a, -a}, {0.5, 0.5});
    const LloydOutcome out = lloyd_step(est, marginal, family, marginal.box());
    CHECK(out.next.coding_probs[0] == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(out.next.assertions(0, 0) == doctest::Approx(a).epsilon(1e-8));
    CHECK(out.next.assertions(1, 0) == doctest::Approx(-a).epsilon(1e-8));

    const Eigen::VectorXd res = residual(est, marginal, family, marginal.box());
    CHECK(res.lpNorm<Eigen::Infinity>() <= 1e-8);
}

TEST_CASE("residual vanishes at the single-cell solution") {
    const auto family = make_gaussian_family(2);
    const auto marginal = gg_marginal(2, 0.25, 1.0);
    Estimator est;
    est.assertions.resize(1, 2);
    est.assertions.row(0) = family.mu_inverse(marginal.moment()).transpose();
    est.coding_probs = Eigen::VectorXd::Ones(1);
    const Eigen::VectorXd res = residual(est, marginal, family, marginal.box());
    CHECK(res.lpNorm<Eigen::Infinity>() <= 1e-10);
}

TEST_CASE("residual responds to a coding-probability perturbation") {
    const auto family = make_gaussian_family(1);
    const auto marginal = gg_marginal(1, 0.0, 3.0);
    SolverConfig config;
    config.n = 2;
    config.seed = 5;
    const SolveResult solved = multi_start(config, marginal, family);
    REQUIRE(solved.converged);

    Estimator bumped = solved.estimator;
    bumped.coding_probs[0] += 0.01;
    bumped.coding_probs /= bumped.coding_probs.sum();
    const Eigen::VectorXd res = residual(bumped, marginal, family, marginal.box());
    CHECK(res[0] > 0.0);
    CHECK(res[0] > 1e-4);
    CHECK(res[0] < 2e-2);

    // Decomposition check: the residual is exactly the perturbed coding
    // probability minus the perturbed cell mass.
    const Partition p1 = build_cells(bumped, family, marginal.box());
    const double m1 = cell_integrals(p1, marginal).mass[0];
    CHECK(res[0] == doctest::Approx(bumped.coding_probs[0] - m1).epsilon(1e-12));
}

TEST_CASE("lloyd iterations do not increase I1") {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    int problem_count = 0;
    for (int d : {1, 2}) {
        for (int n : {2, 3, 5}) {
            const int reps = d == 1 ? 4 : 3;
            for (int rep = 0; rep < reps; ++rep) {
                ++problem_count;
                const double mean0 = 2.0 * unit(rng) - 1.0;
                const double scale = 1.0 + 2.0 * unit(rng);
                const auto family = make_gaussian_family(d);
                const auto marginal = gg_marginal(d, mean0, scale);
                SolverConfig config;
                config.n = n;
                config.seed = 1000 + problem_count;
                Estimator est = initial_estimator(config, marginal, family, 0);

                const double c = carrier_constant(marginal, family);
                double prev = std::numeric_limits<double>::infinity();
                const int iters = d == 1 ? 15 : 8;
                for (int it = 0; it < iters; ++it) {
                    const LloydOutcome out =
                        lloyd_step(est, marginal, family, marginal.box());
                    est = out.next;
                    // A reseed restarts a cell; the descent property applies
                    // to pure alternating updates only.
                    if (out.reseeded > 0) prev = std::numeric_limits<double>::infinity();
                    double value = 0.0;
                    for (int i = 0; i < n; ++i) {
                        const double q = est.coding_probs[i];
                        const Eigen::VectorXd theta = est.assertions.row(i).transpose();
                        value += q * (std::log(q) + theta.dot(family.grad_psi(theta)) -
                                      family.psi(theta));
                    }
                    const double i1 = c - value;
                    CHECK(i1 <= prev + 1e-8);
                    prev = i1;
                }
            }
        }
    }
    CHECK(problem_count >= 20);
}

TEST_CASE("quasi-newton n=1 converges in at most three iterations") {
    const auto family = make_gaussian_family(2);
    const auto marginal = gg_marginal(2, 0.0, 1.0);
    SolverConfig config;
    config.n = 1;
    config.lloyd_warmup = 0;
    config.init = SolverConfig::Init::UserSupplied;
    Estimator init;
    init.assertions.resize(1, 2);
    init.assertions << 0.7, -0.4;
    init.coding_probs = Eigen::VectorXd::Ones(1);
    config.user_init = init;

    const SolveResult result = quasi_newton_solve(config, marginal, family, init);
    CHECK(result.converged);
    CHECK(result.diagnostics.iterations <= 3);
    CHECK(result.residual_norm <= 1e-8);
    CHECK((result.estimator.assertions.row(0).transpose() - marginal.moment()).norm() <= 1e-7);
}

TEST_CASE("quasi-newton matches pure lloyd and uses fewer iterations") {
    const auto family = make_gaussian_family(1);
    const auto marginal = gg_marginal(1, 0.0, 3.0);
    SolverConfig config;
    config.n = 3;
    config.seed = 3;
    config.lloyd_warmup = 5;
    const Estimator init = initial_estimator(config, marginal, family, 0);

    const SolveResult qn = quasi_newton_solve(config, marginal, family, init);
    REQUIRE(qn.converged);

    Estimator est = init;
    int lloyd_iters = 0;
    for (; lloyd_iters < 5000; ++lloyd_iters) {
        const Eigen::VectorXd res = residual(est, marginal, family, marginal.box());
        if (res.lpNorm<Eigen::Infinity>() <= config.residual_tolerance) break;
        est = lloyd_step(est, marginal, family, marginal.box()).next;
    }
    REQUIRE(lloyd_iters < 5000);

    // Same stationary point (sorted to remove label permutations).
    std::vector<double> qn_thetas, lloyd_thetas;
    for (int i = 0; i < 3; ++i) {
        qn_thetas.push_back(qn.estimator.assertions(i, 0));
        lloyd_thetas.push_back(est.assertions(i, 0));
    }
    std::sort(qn_thetas.begin(), qn_thetas.end());
    std::sort(lloyd_thetas.begin(), lloyd_thetas.end());
    for (int i = 0; i < 3; ++i)
        CHECK(qn_thetas[i] == doctest::Approx(lloyd_thetas[i]).epsilon(1e-6));
    CHECK(qn.diagnostics.iterations < lloyd_iters);
}

TEST_CASE("identical seeds give bit-identical solves") {
    const auto family = make_gaussian_family(2);
    // Tight truncation: isotropic 2-D problems have a rotational valley whose
    // gradient scales with the boundary density, i.e. with epsilon.
    const auto marginal = gg_marginal(2, 0.1, 2.0, 1e-10);
    SolverConfig config;
    config.n = 3;
    config.seed = 77;
    config.restarts = 2;
    const SolveResult a = multi_start(config, marginal, family);
    const SolveResult b = multi_start(config, marginal, family);
    CHECK((a.estimator.assertions - b.estimator.assertions).norm() == 0.0);
    CHECK((a.estimator.coding_probs - b.estimator.coding_probs).norm() == 0.0);
    CHECK(a.i1 == b.i1);
    CHECK(a.residual_norm == b.residual_norm);
    CHECK(a.restart_index == b.restart_index);
    REQUIRE(a.trace.size() == b.trace.size());
    for (size_t k = 0; k < a.trace.size(); ++k) CHECK(a.trace[k] == b.trace[k]);
}

TEST_CASE("multi-start returns the best of its restarts") {
    const auto family = make_gaussian_family(1);
    const auto marginal = gg_marginal(1, 0.0, 3.0);
    SolverConfig config;
    config.n = 3;
    config.seed = 11;
    config.restarts = 8;
    const SolveResult best = multi_start(config, marginal, family);
    REQUIRE(best.converged);
    for (int r = 0; r < 8; ++r) {
        const Estimator init = initial_estimator(config, marginal, family, r);
        const SolveResult run = quasi_newton_solve(config, marginal, family, init);
        if (run.converged && !run.diagnostics.saddle_rejected)
            CHECK(best.i1 <= run.i1 + 1e-12);
    }
}

TEST_CASE("n=2 beats n=1 and the mirrored solution has equal I1") {
    const auto family = make_gaussian_family(1);
    const auto marginal = gg_marginal(1, 0.0, 3.0);
    SolverConfig config;
    config.seed = 9;
    config.restarts = 4;

    config.n = 1;
    const SolveResult one = multi_start(config, marginal, family);
    config.n = 2;
    const SolveResult two = multi_start(config, marginal, family);
    REQUIRE(one.converged);
    REQUIRE(two.converged);
    CHECK(two.i1 < one.i1);

    // Mirror the solved pair: equal I1 by the symmetry of the problem.
    Estimator mirrored = two.estimator;
    mirrored.assertions = -mirrored.assertions;
    const Partition part = build_cells(mirrored, family, marginal.box());
    const I1Evaluation i1 = evaluate_i1(mirrored, part, marginal, family);
    CHECK(i1.i1 == doctest::Approx(two.i1).epsilon(1e-9));
}

TEST_CASE("face inequality holds at solutions and fails on cramped estimators") {
    const auto family = make_gaussian_family(1);
    const auto marginal = gg_marginal(1, 0.0, 3.0);

    SUBCASE("single cell is a vacuous pass") {
        Estimator est;
        est.assertions = Eigen::MatrixXd::Zero(1, 1);
        est.coding_probs = Eigen::VectorXd::Ones(1);
        const Partition part = build_cells(est, family, marginal.box());
        const FaceInequalityReport report =
            face_inequality_check(est, part, marginal, family);
        CHECK(report.pass);
        CHECK(report.faces.empty());
    }

    SUBCASE("solved symmetric pair passes at the boundary point") {
        SolverConfig config;
        config.n = 2;
        config.seed = 4;
        const SolveResult solved = multi_start(config, marginal, family);
        REQUIRE(solved.converged);
        const Partition part = build_cells(solved.estimator, family, marginal.box());
        const FaceInequalityReport report =
            face_inequality_check(solved.estimator, part, marginal, family);
        REQUIRE(report.faces.size() == 1);
        CHECK(report.pass);
        CHECK(report.min_margin > 0.0);
    }

    SUBCASE("two assertions a hair apart violate the bound") {
        const Estimator cramped = estimator_1d({5e-4, -5e-4}, {0.5, 0.5});
        const Partition part = build_cells(cramped, family, marginal.box());
        const FaceInequalityReport report =
            face_inequality_check(cramped, part, marginal, family);
        REQUIRE(report.faces.size() == 1);
        CHECK_FALSE(report.pass);
        CHECK(report.min_margin < 0.0);
    }
}

TEST_CASE("translation covariance of the solved estimator") {
    const auto family = make_gaussian_family(1);
    const double shift = 1.3;
    const auto base = gg_marginal(1, 0.0, 2.0);
    const auto moved = gg_marginal(1, shift, 2.0);
    SolverConfig config;
    config.n = 2;
    config.seed = 21;
    config.restarts = 2;

    const SolveResult a = multi_start(config, base, family);
    const SolveResult b = multi_start(config, moved, family);
    REQUIRE(a.converged);
    REQUIRE(b.converged);

    std::vector<double> ta = {a.estimator.assertions(0, 0), a.estimator.assertions(1, 0)};
    std::vector<double> tb = {b.estimator.assertions(0, 0), b.estimator.assertions(1, 0)};
    std::sort(ta.begin(), ta.end());
    std::sort(tb.begin(), tb.end());
    for (int i = 0; i < 2; ++i) CHECK(tb[i] - ta[i] == doctest::Approx(shift).epsilon(1e-6));
    // The code length itself is translation invariant (the density value
    // f(x+v | theta+v) is unchanged); the carrier constant absorbs a
    // |v|^2/2 + m0.v shift that the assertion term gives back.
    CHECK(b.i1 == doctest::Approx(a.i1).epsilon(1e-8));
    CHECK(b.constant_c - a.constant_c ==
          doctest::Approx(0.5 * shift * shift).epsilon(1e-6));
}

TEST_CASE("stationarity: lloyd fixed point iff small residual") {
    const auto family = make_gaussian_family(2);
    const auto marginal = gg_marginal(2, 0.0, 2.0, 1e-10);
    SolverConfig config;
    config.n = 3;
    config.seed = 8;
    config.restarts = 2;
    const SolveResult solved = multi_start(config, marginal, family);
    REQUIRE(solved.converged);

    // Fixed point forward direction: one more sweep barely moves the state.
    const LloydOutcome sweep =
        lloyd_step(solved.estimator, marginal, family, marginal.box());
    CHECK((sweep.next.assertions - solved.estimator.assertions).lpNorm<Eigen::Infinity>() <=
          1e-6);
    CHECK((sweep.next.coding_probs - solved.estimator.coding_probs).lpNorm<Eigen::Infinity>() <=
          1e-7);

    // Reverse direction: a visibly non-stationary state has a large residual.
    Estimator off = solved.estimator;
    off.assertions(0, 0) += 0.25;
    const Eigen::VectorXd res = residual(off, marginal, family, marginal.box());
    CHECK(res.lpNorm<Eigen::Infinity>() > 1e-3);
}

TEST_CASE("carrier constant matches an independent quadrature") {
    const auto family = make_gaussian_family(1);
    const auto marginal = gg_marginal(1, 0.4, 2.5);
    const double c = carrier_constant(marginal, family);
    CHECK(c == doctest::Approx(carrier_oracle_1d(marginal, family)).epsilon(1e-9));
}

TEST_CASE("empty-cell policy: reseed keeps n cells, fail throws") {
    const auto family = make_gaussian_family(2);
    const auto marginal = gg_marginal(2, 0.0, 1.5);
    // Start with one assertion parked far outside the mass.
    Estimator est;
    est.assertions.resize(3, 2);
    est.assertions << 0.5, 0.0, -0.5, 0.0, 40.0, 40.0;
    est.coding_probs.resize(3);
    est.coding_probs << 0.45, 0.45, 0.1;

    CHECK_THROWS_AS(lloyd_step(est, marginal, family, marginal.box(), {},
                               SolverConfig::EmptyCellPolicy::Fail),
                    std::runtime_error);

    const LloydOutcome out = lloyd_step(est, marginal, family, marginal.box(), {},
                                        SolverConfig::EmptyCellPolicy::Reseed);
    CHECK(out.reseeded >= 1);
    CHECK(out.next.coding_probs.minCoeff() > 0.0);
    CHECK(out.next.coding_probs.sum() == doctest::Approx(1.0).epsilon(1e-12));
}
