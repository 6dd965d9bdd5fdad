#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "smml/partition.hpp"
#include "support/test_utils.hpp"

using namespace smml;
using testutil::vec1;
using testutil::vec2;

namespace {

Estimator make_estimator(const std::vector<Eigen::VectorXd>& thetas,
                         const std::vector<double>& probs) {
    Estimator est;
    const int n = static_cast<int>(thetas.size());
    est.assertions.resize(n, thetas[0].size());
    est.coding_probs.resize(n);
    for (int i = 0; i < n; ++i) {
        est.assertions.row(i) = thetas[i].transpose();
        est.coding_probs[i] = probs[i];
    }
    return est;
}

Estimator random_estimator(int n, int d, std::uint64_t seed, double spread = 2.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-spread, spread);
    std::uniform_real_distribution<double> mass(0.5, 2.0);
    Estimator est;
    est.assertions.resize(n, d);
    est.coding_probs.resize(n);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) est.assertions(i, k) = unit(rng);
        est.coding_probs[i] = mass(rng);
    }
    est.coding_probs /= est.coding_probs.sum();
    return est;
}

Box square_box(double half, int d = 2) {
    return Box(Eigen::VectorXd::Constant(d, -half), Eigen::VectorXd::Constant(d, half));
}

}  // namespace

TEST_CASE("lambda_score plug-in values") {
    const auto family = make_gaussian_family(2);
    const auto single = make_estimator({vec2(0, 0)}, {1.0});
    CHECK(lambda_score(single, family, 0, vec2(1, 1)) == 0.0);

    const auto pair = make_estimator({vec2(1, 0), vec2(-1, 0)}, {0.5, 0.5});
    CHECK(lambda_score(pair, family, 0, vec2(2, 0)) ==
          doctest::Approx(std::log(0.5) + 2.0 - 0.5).epsilon(1e-15));
}

TEST_CASE("equal coding probabilities reduce the face to the bisector-like plane") {
    const auto family = make_gaussian_family(2);
    const auto est = make_estimator({vec2(1.0, 0.5), vec2(-0.5, 1.5)}, {0.5, 0.5});
    const Eigen::VectorXd diff = vec2(1.0 - (-0.5), 0.5 - 1.5);
    const double rhs = family.psi(vec2(1.0, 0.5)) - family.psi(vec2(-0.5, 1.5));
    // Solve x . diff = rhs along a probe line and check score equality there.
    for (double s : {-1.0, 0.0, 2.0}) {
        Eigen::VectorXd x(2);
        x[1] = s;
        x[0] = (rhs - diff[1] * s) / diff[0];
        CHECK(lambda_score(est, family, 0, x) ==
              doctest::Approx(lambda_score(est, family, 1, x)).epsilon(1e-12));
    }
}

TEST_CASE("assign on the symmetric pair, ties to the smaller index") {
    const auto family = make_gaussian_family(2);
    const auto est = make_estimator({vec2(1, 0), vec2(-1, 0)}, {0.5, 0.5});
    CHECK(assign(est, family, vec2(0.1, 0.0)) == 0);
    CHECK(assign(est, family, vec2(-0.1, 0.0)) == 1);
    CHECK(assign(est, family, vec2(0.0, 0.7)) == 0);  // exactly on the face
}

TEST_CASE("build_cells n=1 is the whole box") {
    const auto family = make_gaussian_family(2);
    const auto est = make_estimator({vec2(0.3, -0.2)}, {1.0});
    const Box box = square_box(2.0);
    const Partition part = build_cells(est, family, box);
    CHECK(part.polygon(0).area() == doctest::Approx(box.volume()).epsilon(1e-14));
    CHECK(part.shared_faces().empty());
}

TEST_CASE("symmetric pair splits the box at x1 = 0") {
    const auto family = make_gaussian_family(2);
    const auto est = make_estimator({vec2(1, 0), vec2(-1, 0)}, {0.5, 0.5});
    const Box box = square_box(3.0);
    const Partition part = build_cells(est, family, box);
    CHECK(part.polygon(0).area() == doctest::Approx(0.5 * box.volume()).epsilon(1e-12));
    CHECK(part.polygon(1).area() == doctest::Approx(0.5 * box.volume()).epsilon(1e-12));
    for (const auto& v : part.polygon(0).vertices) CHECK(v.x() >= -1e-12);

    REQUIRE(part.shared_faces().size() == 1);
    const Face& face = part.shared_faces()[0];
    CHECK(face.a[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(face.b[0] == doctest::Approx(0.0).epsilon(1e-14));
    CHECK(face.measure == doctest::Approx(box.widths()[1]).epsilon(1e-12));
    // Normal points from cell 0 into cell 1, i.e. along theta_1 - theta_0.
    CHECK(face.normal[0] == doctest::Approx(-1.0));
}

TEST_CASE("duplicate assertions raise a degeneracy error naming the pair") {
    const auto family = make_gaussian_family(2);
    const auto est = make_estimator({vec2(1, 1), vec2(0, 0), vec2(1, 1)}, {0.3, 0.4, 0.3});
    CHECK_THROWS_WITH_AS(build_cells(est, family, square_box(2.0)),
                         doctest::Contains("assertions 0 and 2"), std::invalid_argument);
}

TEST_CASE("argmax assignment agrees with half-space membership") {
    const auto family = make_gaussian_family(2);
    const Box box = square_box(4.0);
    std::mt19937_64 rng(2024);
    for (std::uint64_t seed : {11u, 22u, 33u}) {
        const Estimator est = random_estimator(8, 2, seed);
        const Partition part = build_cells(est, family, box);
        for (int s = 0; s < 10000 / 3; ++s) {
            Eigen::VectorXd x = testutil::random_point(box.lo, box.hi, rng);
            // Skip points within a hair of a tie (measure-zero face set).
            double best = -1e300, second = -1e300;
            for (int i = 0; i < est.n(); ++i) {
                const double sc = lambda_score(est, family, i, x);
                if (sc > best) {
                    second = best;
                    best = sc;
                } else if (sc > second) {
                    second = sc;
                }
            }
            if (best - second < 1e-10) continue;
            const int cell = part.assign(x);
            CHECK(part.cell_contains(cell, x, 1e-9));
            for (int i = 0; i < est.n(); ++i) {
                if (i == cell || part.empty_cell(i)) continue;
                CHECK_FALSE(part.cell_contains(i, x, -1e-12));
            }
        }
    }
}

TEST_CASE("cells are convex: midpoints stay inside") {
    const auto family = make_gaussian_family(2);
    const Box box = square_box(4.0);
    const Estimator est = random_estimator(6, 2, 77);
    const Partition part = build_cells(est, family, box);
    std::mt19937_64 rng(5);
    int checked = 0;
    while (checked < 100) {
        const Eigen::VectorXd a = testutil::random_point(box.lo, box.hi, rng);
        const Eigen::VectorXd b = testutil::random_point(box.lo, box.hi, rng);
        const int cell = part.assign(a);
        if (part.assign(b) != cell) continue;
        CHECK(part.assign(0.5 * (a + b)) == cell);
        ++checked;
    }
}

TEST_CASE("cells cover the box") {
    const auto family = make_gaussian_family(2);
    const Box box = square_box(3.5);
    for (std::uint64_t seed : {1u, 2u, 3u, 4u}) {
        const Estimator est = random_estimator(7, 2, seed);
        const Partition part = build_cells(est, family, box);
        double total = 0.0;
        for (int i = 0; i < part.n(); ++i)
            if (!part.empty_cell(i)) total += part.polygon(i).area();
        CHECK(total == doctest::Approx(box.volume()).epsilon(1e-9));
    }
}

TEST_CASE("three collinear assertions with equal weights yield two parallel faces") {
    const auto family = make_gaussian_family(2);
    const auto est = make_estimator({vec2(-1.5, 0), vec2(0, 0), vec2(1.5, 0)},
                                    {1.0 / 3, 1.0 / 3, 1.0 / 3});
    const Box box = square_box(4.0);
    const Partition part = build_cells(est, family, box);
    REQUIRE(part.shared_faces().size() == 2);
    for (const Face& face : part.shared_faces()) {
        CHECK(std::abs(face.normal[1]) < 1e-14);  // both faces vertical
        CHECK(face.measure == doctest::Approx(box.widths()[1]).epsilon(1e-12));
    }
    // Verify on a fine assignment grid: labels change twice along x.
    int changes = 0;
    int prev = -1;
    for (int k = 0; k < 2001; ++k) {
        const double x = -4.0 + 8.0 * k / 2000.0;
        const int cell = part.assign(vec2(x, 0.77));
        if (prev >= 0 && cell != prev) ++changes;
        prev = cell;
    }
    CHECK(changes == 2);
    // Middle pair 0-2 shares no face.
    for (const Face& face : part.shared_faces()) CHECK(face.j - face.i == 1);
}

TEST_CASE("lifted-envelope facet projection equals the clipped polygons") {
    // The cell of x is the facet of the upper envelope of the affine scores
    // above x; on a fine grid the brute-force envelope argmax must land in
    // the matching clipped polygon.
    const auto family = make_gaussian_family(2);
    const Box box = square_box(3.0);
    const Estimator est = random_estimator(9, 2, 321);
    const Partition part = build_cells(est, family, box);
    const AffineScores scores(est, family);
    for (int gx = 0; gx < 60; ++gx) {
        for (int gy = 0; gy < 60; ++gy) {
            const Eigen::VectorXd x =
                vec2(box.lo[0] + (gx + 0.5) * box.widths()[0] / 60,
                     box.lo[1] + (gy + 0.5) * box.widths()[1] / 60);
            int envelope_facet = 0;
            double best = scores.score(0, x);
            for (int i = 1; i < est.n(); ++i) {
                const double sc = scores.score(i, x);
                if (sc > best) {
                    best = sc;
                    envelope_facet = i;
                }
            }
            if (best - scores.score(envelope_facet == 0 ? 1 : 0, x) < 1e-10) continue;
            CHECK(part.cell_contains(envelope_facet, x, 1e-9));
        }
    }
}

TEST_CASE("continuity corollary: the posterior envelope is continuous across faces") {
    const auto family = make_gaussian_family(2);
    const Box box = square_box(3.0);
    const Estimator est = random_estimator(5, 2, 99);
    const Partition part = build_cells(est, family, box);
    std::mt19937_64 rng(17);

    // Pointwise identity in cell interiors.
    for (int s = 0; s < 1000; ++s) {
        const Eigen::VectorXd x = testutil::random_point(box.lo, box.hi, rng);
        const int cell = part.assign(x);
        const double lhs = std::log(est.coding_probs[cell]) +
                           family.log_density(x, est.assertions.row(cell).transpose());
        const double rhs = family.log_h(x) + part.scores().max_score(x);
        CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(rhs)));
    }

    // Continuity across each face: approach from both sides.
    for (const Face& face : part.shared_faces()) {
        const Eigen::VectorXd mid = 0.5 * (face.a + face.b);
        const Eigen::VectorXd n = face.normal;
        auto envelope = [&](const Eigen::VectorXd& x) {
            return family.log_h(x) + part.scores().max_score(x);
        };
        const double eps = 1e-7;
        const double jump = std::abs(envelope(mid + eps * n) - envelope(mid - eps * n));
        CHECK(jump <= 1e-5);  // Lipschitz * 2 eps with plenty of slack
    }
}

TEST_CASE("one-dimensional cells are intervals with point faces") {
    const auto family = make_gaussian_family(1);
    const auto est = make_estimator({vec1(-2.0), vec1(0.0), vec1(1.5)}, {0.25, 0.5, 0.25});
    const Box box(vec1(-5.0), vec1(5.0));
    const Partition part = build_cells(est, family, box);

    double covered = 0.0;
    for (int i = 0; i < 3; ++i) {
        const auto [lo, hi] = part.interval(i);
        covered += hi - lo;
    }
    CHECK(covered == doctest::Approx(box.volume()).epsilon(1e-12));
    REQUIRE(part.shared_faces().size() == 2);
    for (const Face& face : part.shared_faces()) {
        CHECK(face.i + 1 == face.j);
        const double x = face.a[0];
        CHECK(lambda_score(est, family, face.i, vec1(x)) ==
              doctest::Approx(lambda_score(est, family, face.j, vec1(x))).epsilon(1e-12));
    }
}

TEST_CASE("empty cells are reported, not dropped") {
    const auto family = make_gaussian_family(2);
    // A dominated assertion: same location quality but tiny coding mass far out.
    const auto est = make_estimator({vec2(0, 0), vec2(0.05, 0.0)}, {1.0 - 1e-9, 1e-9});
    const Partition part = build_cells(est, family, square_box(0.5));
    CHECK(part.n() == 2);
    // lambda_0 - lambda_1 = log(q0/q1) - x.(t1-t0) ... dominated everywhere in
    // the small box, so cell 1 must be flagged empty.
    CHECK(part.empty_cell(1));
    CHECK_FALSE(part.empty_cell(0));
}
