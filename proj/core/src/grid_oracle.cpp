#include "smml/grid_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace smml {

namespace {

std::vector<int> choose_axis_counts(long target, const Box& box) {
    const int d = box.dim();
    std::vector<int> counts(d, 1);
    if (d == 1) {
        counts[0] = static_cast<int>(target);
        return counts;
    }
    if (d == 2) {
        // Prefer divisor pairs (exact total) whose cell aspect is closest to
        // square; fall back to a rounded split for awkward totals.
        const double want = box.widths()[0] / box.widths()[1];
        double best_penalty = std::numeric_limits<double>::infinity();
        long best_a = 0;
        for (long a = 1; a * a <= target; ++a) {
            if (target % a != 0) continue;
            const long b = target / a;
            for (auto [g0, g1] : {std::pair{a, b}, std::pair{b, a}}) {
                if (g0 < 4 || g1 < 4) continue;
                const double penalty = std::abs(std::log((double(g0) / g1) / want));
                if (penalty < best_penalty) {
                    best_penalty = penalty;
                    best_a = g0;
                }
            }
        }
        if (best_a > 0 && best_penalty < std::log(2.5)) {
            counts[0] = static_cast<int>(best_a);
            counts[1] = static_cast<int>(target / best_a);
            return counts;
        }
        counts[0] = std::max(4, static_cast<int>(std::lround(std::sqrt(double(target) * want))));
        counts[1] = std::max(4, static_cast<int>(std::lround(double(target) / counts[0])));
        return counts;
    }
    const int per_axis =
        std::max(2, static_cast<int>(std::lround(std::pow(double(target), 1.0 / d))));
    for (int k = 0; k < d; ++k) counts[k] = per_axis;
    return counts;
}

}  // namespace

GridProblem make_grid_problem(const MarginalDensity& marginal, long target_points) {
    if (target_points < 1)
        throw std::invalid_argument("grid problem: target point count must be positive");
    GridProblem problem;
    problem.box = marginal.box();
    const int d = problem.box.dim();
    problem.axis_counts = choose_axis_counts(target_points, problem.box);
    long total = 1;
    for (int c : problem.axis_counts) total *= c;

    problem.spacing.resize(d);
    for (int k = 0; k < d; ++k)
        problem.spacing[k] = problem.box.widths()[k] / problem.axis_counts[k];

    problem.points.resize(total, d);
    problem.weights.resize(total);
    problem.log_carrier.resize(total);
    const ExponentialFamily& family = marginal.family();

    std::vector<int> idx(d, 0);
    VectorXd x(d);
    for (long row = 0; row < total; ++row) {
        for (int k = 0; k < d; ++k)
            x[k] = problem.box.lo[k] + (idx[k] + 0.5) * problem.spacing[k];
        problem.points.row(row) = x.transpose();
        problem.weights[row] = marginal.normalized_eval(x);
        problem.log_carrier[row] = family.log_h(x);
        int k = 0;
        while (k < d && ++idx[k] == problem.axis_counts[k]) idx[k++] = 0;
    }
    const double sum = problem.weights.sum();
    if (!(sum > 0.0)) throw std::runtime_error("grid problem: zero total weight");
    problem.weights /= sum;
    problem.code_constant = -problem.weights.dot(problem.log_carrier);
    return problem;
}

Coloring::Coloring(const GridProblem& problem, int n_colors, std::vector<int> labels)
    : n_colors_(n_colors), labels_(std::move(labels)) {
    if (n_colors_ < 1) throw std::invalid_argument("coloring: need at least one color");
    if (static_cast<long>(labels_.size()) != problem.size())
        throw std::invalid_argument("coloring: label count differs from grid size");
    for (int c : labels_)
        if (c < 0 || c >= n_colors_) throw std::invalid_argument("coloring: label out of range");
    recompute(problem);
}

void Coloring::move(const GridProblem& problem, long k, int c) {
    const int old = labels_[k];
    if (old == c) return;
    const double w = problem.weights[k];
    mass_[old] -= w;
    moment_.row(old) -= w * problem.points.row(k);
    --counts_[old];
    if (counts_[old] == 0) {
        mass_[old] = 0.0;
        moment_.row(old).setZero();
    }
    mass_[c] += w;
    moment_.row(c) += w * problem.points.row(k);
    ++counts_[c];
    labels_[k] = c;
}

void Coloring::recompute(const GridProblem& problem) {
    const int d = static_cast<int>(problem.points.cols());
    counts_.assign(n_colors_, 0);
    mass_ = VectorXd::Zero(n_colors_);
    moment_ = MatrixXd::Zero(n_colors_, d);
    for (long k = 0; k < problem.size(); ++k) {
        const int c = labels_[k];
        ++counts_[c];
        mass_[c] += problem.weights[k];
        moment_.row(c) += problem.weights[k] * problem.points.row(k);
    }
}

namespace {

/// Contribution of one class to sum q (log q + theta.mu - psi); zero for an
/// empty class (the class drops out of the code).
double class_term(const ExponentialFamily& family, double mass, const VectorXd& moment) {
    if (!(mass > 0.0)) return 0.0;
    const VectorXd theta = family.mu_inverse(moment / mass);
    return mass * (std::log(mass) + theta.dot(family.grad_psi(theta)) - family.psi(theta));
}

}  // namespace

double discrete_i1(const GridProblem& problem, const Coloring& coloring,
                   const ExponentialFamily& family, bool require_all_nonempty) {
    double sum = 0.0;
    for (int c = 0; c < coloring.n_colors(); ++c) {
        if (coloring.class_count(c) == 0) {
            if (require_all_nonempty)
                throw std::runtime_error("discrete_i1: color class " + std::to_string(c) +
                                         " is empty");
            continue;
        }
        sum += class_term(family, coloring.class_mass(c), coloring.class_moment(c));
    }
    return problem.code_constant - sum;
}

GreedyResult greedy_descent(const GridProblem& problem, const ExponentialFamily& family,
                            int n_colors, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const long g = problem.size();
    std::vector<int> labels(g);
    std::uniform_int_distribution<int> color(0, n_colors - 1);
    for (long k = 0; k < g; ++k) labels[k] = color(rng);

    GreedyResult result{Coloring(problem, n_colors, std::move(labels))};
    Coloring& coloring = result.coloring;

    std::vector<long> order(g);
    std::iota(order.begin(), order.end(), 0);

    const int max_sweeps = 2000;
    for (result.sweeps = 0; result.sweeps < max_sweeps; ++result.sweeps) {
        std::shuffle(order.begin(), order.end(), rng);
        long sweep_moves = 0;
        for (long k : order) {
            const int a = coloring.label(k);
            const double w = problem.weights[k];
            const VectorXd wx = w * problem.points.row(k).transpose();

            const double term_a_cur =
                class_term(family, coloring.class_mass(a), coloring.class_moment(a));
            const double term_a_new = class_term(family, coloring.class_mass(a) - w,
                                                 coloring.class_moment(a) - wx);
            int best_color = a;
            double best_gain = 0.0;
            for (int b = 0; b < n_colors; ++b) {
                if (b == a) continue;
                const double term_b_cur =
                    class_term(family, coloring.class_mass(b), coloring.class_moment(b));
                const double term_b_new = class_term(family, coloring.class_mass(b) + w,
                                                     coloring.class_moment(b) + wx);
                // I1 = C - sum(terms): a move improves when the term sum grows.
                const double gain = term_a_new + term_b_new - term_a_cur - term_b_cur;
                if (gain > best_gain) {
                    best_gain = gain;
                    best_color = b;
                }
            }
            // Strictly-improving with an epsilon floor so rounding noise in the
            // incremental statistics cannot produce move cycles.
            const double floor =
                1e-14 * (1.0 + std::abs(term_a_cur) + std::abs(best_gain));
            if (best_color != a && best_gain > floor) {
                if (coloring.class_count(a) == 1) result.emptied_class = true;
                coloring.move(problem, k, best_color);
                ++sweep_moves;
            }
        }
        result.moves += sweep_moves;
        if (sweep_moves == 0) break;
    }
    result.i1 = discrete_i1(problem, coloring, family);
    return result;
}

MatchReport theorem_match(const GridProblem& problem, const Coloring& coloring,
                          const ExponentialFamily& family) {
    MatchReport report;
    report.label_map.assign(coloring.n_colors(), -1);
    std::vector<int> kept;
    for (int c = 0; c < coloring.n_colors(); ++c) {
        if (coloring.class_count(c) == 0) continue;
        report.label_map[c] = static_cast<int>(kept.size());
        kept.push_back(c);
    }
    report.effective_n = static_cast<int>(kept.size());
    if (report.effective_n == 0) throw std::runtime_error("theorem_match: empty coloring");

    const int d = static_cast<int>(problem.points.cols());
    report.implied.assertions.resize(report.effective_n, d);
    report.implied.coding_probs.resize(report.effective_n);
    for (int c = 0; c < report.effective_n; ++c) {
        const int orig = kept[c];
        const double mass = coloring.class_mass(orig);
        report.implied.coding_probs[c] = mass;
        report.implied.assertions.row(c) =
            family.mu_inverse(coloring.class_moment(orig) / mass).transpose();
    }
    report.implied.coding_probs /= report.implied.coding_probs.sum();

    const AffineScores scores(report.implied, family);
    double mismatch = 0.0;
    for (long k = 0; k < problem.size(); ++k) {
        const int predicted = scores.argmax(problem.points.row(k).transpose());
        if (predicted != report.label_map[coloring.label(k)]) mismatch += problem.weights[k];
    }
    report.mismatch_weight = mismatch;
    return report;
}

}  // namespace smml
