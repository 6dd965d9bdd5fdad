#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "smml/cell_quadrature.hpp"
#include "smml/marginal.hpp"
#include "smml/partition.hpp"

namespace smml {

struct SolverConfig {
    enum class Init { RandomFromMarginal, UserSupplied, PerturbedGrid };
    enum class EmptyCellPolicy { Reseed, Fail };

    int n = 1;
    Init init = Init::RandomFromMarginal;
    std::uint64_t seed = 1;
    int max_outer_iterations = 200;
    double i1_tolerance = 1e-9;        ///< eps_I, stall detection on the trace
    double residual_tolerance = 1e-8;  ///< eps_F, convergence criterion
    int restarts = 1;
    EmptyCellPolicy empty_cell_policy = EmptyCellPolicy::Reseed;
    int lloyd_warmup = 12;  ///< fixed-point sweeps before switching to quasi-Newton
    std::optional<Estimator> user_init;
    QuadratureOptions quadrature;
};

struct SolveDiagnostics {
    int empty_cell_events = 0;
    int quadrature_warnings = 0;
    int lloyd_fallbacks = 0;
    int iterations = 0;
    bool saddle_rejected = false;  ///< face inequality failed at the solution
};

struct SolveResult {
    Estimator estimator;
    double i1 = 0.0;
    double constant_c = 0.0;
    double residual_norm = 0.0;  ///< infinity norm of the n(d+1) residual
    bool converged = false;
    int restart_index = 0;
    std::vector<double> trace;  ///< I1 after each outer iteration
    SolveDiagnostics diagnostics;
};

/// The h-dependent additive constant C = -integral over B of rho log h,
/// where rho is the truncated-and-renormalized marginal.
double carrier_constant(const MarginalDensity& marginal, const ExponentialFamily& family);

struct I1Evaluation {
    double i1 = 0.0;          ///< finite-sum value when consistent, else `direct`
    double constant_c = 0.0;
    double finite_sum = 0.0;  ///< C - sum q_i (log q_i + theta_i . mu_i - psi_i)
    double direct = 0.0;      ///< C - sum over cells of rho (log q_i + x.theta_i - psi_i)
    double consistency_gap = 0.0;
    bool used_direct = false;
};

/// Evaluates I1 for an estimator over a given partition. When (q, theta)
/// reproduce the cell masses and means to eps_F the finite-sum form applies;
/// otherwise the flag is set and the direct cell-integral expansion is used.
I1Evaluation evaluate_i1(const Estimator& est, const Partition& partition,
                         const MarginalDensity& marginal, const ExponentialFamily& family,
                         const QuadratureOptions& opts = {}, double eps_f = 1e-8,
                         std::optional<double> precomputed_c = std::nullopt);

struct LloydOutcome {
    Estimator next;
    CellIntegrals integrals;  ///< integrals of the pre-update partition
    int reseeded = 0;
};

/// One alternating-minimization sweep: build cells from (theta, q), then
/// q_i' = M_i / sum M_j and theta_i' = mu^{-1}(S_i / M_i). Cells whose mass
/// falls below 1e-12 follow the empty-cell policy (reseed at the point of
/// worst mass-weighted code length, or fail).
LloydOutcome lloyd_step(const Estimator& est, const MarginalDensity& marginal,
                        const ExponentialFamily& family, const Box& box,
                        const QuadratureOptions& opts = {},
                        SolverConfig::EmptyCellPolicy policy = SolverConfig::EmptyCellPolicy::Reseed);

/// Stationarity residual, n(d+1) entries: [q_i - M_i] for i = 1..n followed
/// by the n*d entries of [q_i mu(theta_i) - S_i], with (M, S) the
/// mass/moment integrals of the cells built from (theta, q).
VectorXd residual(const Estimator& est, const MarginalDensity& marginal,
                  const ExponentialFamily& family, const Box& box,
                  const QuadratureOptions& opts = {});

/// Safeguarded Broyden solve of the stationarity equations: q parameterized
/// by n-1 free log-ratios, backtracking line search on |residual|^2, Lloyd
/// sweeps as warmup and as fallback when the line search stalls.
SolveResult quasi_newton_solve(const SolverConfig& config, const MarginalDensity& marginal,
                               const ExponentialFamily& family, const Estimator& init);

/// Deterministic initial estimator for a restart index.
Estimator initial_estimator(const SolverConfig& config, const MarginalDensity& marginal,
                            const ExponentialFamily& family, std::uint64_t restart);

/// Runs `restarts` independent seeds and returns the best converged result
/// (lowest I1; face-inequality failures are rejected when an alternative
/// exists). Falls back to the best non-converged iterate, flagged.
SolveResult multi_start(const SolverConfig& config, const MarginalDensity& marginal,
                        const ExponentialFamily& family);

struct FaceInequalityEntry {
    int i = 0;
    int j = 0;
    double min_margin = 0.0;  ///< min over samples of |theta_i - theta_j| - rhs(x)
    double lhs = 0.0;
    VectorXd worst_point;
};

struct FaceInequalityReport {
    std::vector<FaceInequalityEntry> faces;
    double min_margin = 0.0;
    bool pass = true;
};

/// Second-variation necessary condition on every shared face:
///   |theta_i - theta_j| >= r(x)/q_i [1 + (x-mu_i).Q_i^{-1}(x-mu_i)]
///                        + r(x)/q_j [1 + (x-mu_j).Q_j^{-1}(x-mu_j)]
/// sampled at >= `samples` points per face (single point for d = 1).
FaceInequalityReport face_inequality_check(const Estimator& est, const Partition& partition,
                                           const MarginalDensity& marginal,
                                           const ExponentialFamily& family, int samples = 20);

}  // namespace smml
