#pragma once

#include <cstdint>
#include <vector>

#include "smml/cell_quadrature.hpp"
#include "smml/marginal.hpp"
#include "smml/partition.hpp"

namespace smml {

/// Lattice discretization of the truncation box with weights proportional to
/// the (renormalized) marginal at each lattice cell center, normalized to 1.
struct GridProblem {
    MatrixXd points;              ///< G x d lattice cell centers
    VectorXd weights;             ///< G positive weights, sum 1
    VectorXd log_carrier;        ///< log h at each point
    std::vector<int> axis_counts;
    VectorXd spacing;
    Box box;
    double code_constant = 0.0;  ///< C_disc = -sum_k w_k log h(x_k)

    long size() const { return weights.size(); }
    double max_spacing() const { return spacing.maxCoeff(); }
};

/// Builds a lattice of ~target_points cells over the marginal's box. In d=2
/// the per-axis counts are chosen among divisor pairs of target_points to
/// match the box aspect when possible, so the total is exact.
GridProblem make_grid_problem(const MarginalDensity& marginal, long target_points);

/// Color assignment with incrementally maintained per-class statistics.
class Coloring {
  public:
    Coloring(const GridProblem& problem, int n_colors, std::vector<int> labels);

    int n_colors() const { return n_colors_; }
    const std::vector<int>& labels() const { return labels_; }
    int label(long k) const { return labels_[k]; }
    long class_count(int c) const { return counts_[c]; }
    double class_mass(int c) const { return mass_[c]; }
    VectorXd class_moment(int c) const { return moment_.row(c).transpose(); }

    /// Moves point k to color c, updating the statistics incrementally.
    void move(const GridProblem& problem, long k, int c);
    /// Recomputes all statistics from scratch (drift control / testing).
    void recompute(const GridProblem& problem);

  private:
    int n_colors_;
    std::vector<int> labels_;
    std::vector<long> counts_;
    VectorXd mass_;
    MatrixXd moment_;
};

/// Expected code length of the coloring: C_disc - sum over nonempty classes
/// of q_c (log q_c + theta_c . mu(theta_c) - psi(theta_c)) with q_c, theta_c
/// the discrete analogues of the stationarity equations.
/// Throws std::runtime_error when `require_all_nonempty` and a class is empty.
double discrete_i1(const GridProblem& problem, const Coloring& coloring,
                   const ExponentialFamily& family, bool require_all_nonempty = false);

struct GreedyResult {
    Coloring coloring;
    double i1 = 0.0;
    int sweeps = 0;
    long moves = 0;
    bool emptied_class = false;
};

/// Greedy local search: random initial coloring, then repeated sweeps in
/// reshuffled order moving single points to their best strictly-improving
/// color until a full sweep makes no move. Deterministic given the seed.
GreedyResult greedy_descent(const GridProblem& problem, const ExponentialFamily& family,
                            int n_colors, std::uint64_t seed);

struct MatchReport {
    double mismatch_weight = 0.0;  ///< weight of points whose color != assign(x)
    Estimator implied;             ///< estimator computed from the coloring
    int effective_n = 0;           ///< nonempty classes
    std::vector<int> label_map;    ///< original color -> compacted index (-1 if empty)
};

/// Compares the coloring against the polytope partition predicted by its own
/// implied assertions and coding probabilities.
MatchReport theorem_match(const GridProblem& problem, const Coloring& coloring,
                          const ExponentialFamily& family);

}  // namespace smml
