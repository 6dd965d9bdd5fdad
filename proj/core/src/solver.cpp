#include "smml/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace smml {

namespace {

double finite_sum_value(const Estimator& est, const ExponentialFamily& family, double c) {
    double sum = 0.0;
    for (int i = 0; i < est.n(); ++i) {
        const VectorXd theta = est.assertions.row(i).transpose();
        const double q = est.coding_probs[i];
        sum += q * (std::log(q) + theta.dot(family.grad_psi(theta)) - family.psi(theta));
    }
    return c - sum;
}

double direct_value(const Estimator& est, const CellIntegrals& integrals,
                    const ExponentialFamily& family, double c) {
    double sum = 0.0;
    for (int i = 0; i < est.n(); ++i) {
        const VectorXd theta = est.assertions.row(i).transpose();
        const double q = est.coding_probs[i];
        sum += (std::log(q) - family.psi(theta)) * integrals.mass[i] +
               theta.dot(integrals.moment.row(i).transpose());
    }
    return c - sum;
}

/// Lemma-style parameters of a partition: masses renormalized to coding
/// probabilities, means pulled back through the mean map.
Estimator params_from_integrals(const CellIntegrals& integrals, const Estimator& shape,
                                const ExponentialFamily& family) {
    Estimator out = shape;
    const double total = integrals.mass.sum();
    for (int i = 0; i < shape.n(); ++i) {
        out.coding_probs[i] = integrals.mass[i] / total;
        if (integrals.mass[i] > 1e-12)
            out.assertions.row(i) = family.mu_inverse(integrals.mean(i)).transpose();
    }
    return out;
}

}  // namespace

double carrier_constant(const MarginalDensity& marginal, const ExponentialFamily& family) {
    auto f = [&](const VectorXd& x) { return -marginal.normalized_eval(x) * family.log_h(x); };
    return integrate_box_adaptive(f, marginal.box(), 1e-10);
}

I1Evaluation evaluate_i1(const Estimator& est, const Partition& partition,
                         const MarginalDensity& marginal, const ExponentialFamily& family,
                         const QuadratureOptions& opts, double eps_f,
                         std::optional<double> precomputed_c) {
    validate_estimator(est, family);
    const CellIntegrals integrals = cell_integrals(partition, marginal, opts);

    I1Evaluation out;
    out.constant_c = precomputed_c ? *precomputed_c : carrier_constant(marginal, family);
    out.finite_sum = finite_sum_value(est, family, out.constant_c);
    out.direct = direct_value(est, integrals, family, out.constant_c);

    double gap = 0.0;
    for (int i = 0; i < est.n(); ++i) {
        gap = std::max(gap, std::abs(est.coding_probs[i] - integrals.mass[i]));
        if (integrals.mass[i] > 1e-12) {
            const VectorXd mu = family.grad_psi(est.assertions.row(i).transpose());
            gap = std::max(gap, (mu - integrals.mean(i)).lpNorm<Eigen::Infinity>());
        }
    }
    out.consistency_gap = gap;
    out.used_direct = gap > eps_f;
    out.i1 = out.used_direct ? out.direct : out.finite_sum;
    return out;
}

namespace {

/// Probe-grid argmax of rho(x) * achieved code length, used to reseed cells.
/// Candidates closer than min_separation to any current assertion mean are
/// skipped so the reseeded cell cannot be starved by a near-duplicate.
VectorXd worst_code_length_point(const Partition& partition, const MarginalDensity& marginal,
                                 const ExponentialFamily& family, double min_separation) {
    const Box& box = partition.box();
    const int d = box.dim();
    const Estimator& est = partition.estimator();
    MatrixXd means(est.n(), d);
    for (int i = 0; i < est.n(); ++i)
        means.row(i) = family.grad_psi(est.assertions.row(i).transpose()).transpose();

    const int per_axis = d == 1 ? 513 : (d == 2 ? 65 : 17);
    VectorXd x(d), best_x = box.center();
    double best = -std::numeric_limits<double>::infinity();
    bool found = false;
    std::vector<int> idx(d, 0);
    while (true) {
        for (int k = 0; k < d; ++k)
            x[k] = box.lo[k] + (idx[k] + 0.5) * (box.hi[k] - box.lo[k]) / per_axis;
        bool separated = true;
        for (int i = 0; i < est.n() && separated; ++i)
            if ((means.row(i).transpose() - x).norm() < min_separation) separated = false;
        if (separated) {
            const double code_length = -(family.log_h(x) + partition.scores().max_score(x));
            const double score = marginal.normalized_eval(x) * code_length;
            if (score > best) {
                best = score;
                best_x = x;
                found = true;
            }
        }
        int k = 0;
        while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == d) break;
    }
    if (!found) best_x = box.center();
    return best_x;
}

}  // namespace

LloydOutcome lloyd_step(const Estimator& est, const MarginalDensity& marginal,
                        const ExponentialFamily& family, const Box& box,
                        const QuadratureOptions& opts, SolverConfig::EmptyCellPolicy policy) {
    Estimator current = est;
    LloydOutcome out;
    out.next = est;

    const int max_attempts = 3 * est.n() + 3;
    std::vector<int> reseed_rounds(est.n(), 0);
    for (int attempt = 0; attempt <= max_attempts; ++attempt) {
        const Partition partition = build_cells(current, family, box);
        CellIntegrals integrals = cell_integrals(partition, marginal, opts);

        int empty = -1;
        for (int i = 0; i < current.n(); ++i)
            if (integrals.mass[i] < 1e-12) {
                empty = i;
                break;
            }
        if (empty < 0) {
            out.integrals = std::move(integrals);
            out.next = params_from_integrals(out.integrals, current, family);
            return out;
        }
        if (policy == SolverConfig::EmptyCellPolicy::Fail)
            throw std::runtime_error("lloyd_step: cell " + std::to_string(empty) +
                                     " lost all mass");

        // Reseed at the point with the worst mass-weighted code length and a
        // small coding probability, escalated when the same cell starves
        // again (a 1/(10n) mass can be swallowed whole by the neighbors'
        // log-q offsets in sparse layouts).
        const double separation = 0.02 * box.widths().minCoeff();
        const VectorXd seed_point =
            worst_code_length_point(partition, marginal, family, separation);
        const double q_new = std::min(
            1.0 / current.n(),
            std::pow(8.0, reseed_rounds[empty]) / (10.0 * current.n()));
        ++reseed_rounds[empty];
        current.assertions.row(empty) = family.mu_inverse(seed_point).transpose();
        current.coding_probs[empty] = q_new;
        current.coding_probs /= current.coding_probs.sum();
        ++out.reseeded;
    }
    throw std::runtime_error("lloyd_step: empty-cell reseeding did not stabilize");
}

VectorXd residual(const Estimator& est, const MarginalDensity& marginal,
                  const ExponentialFamily& family, const Box& box,
                  const QuadratureOptions& opts) {
    const Partition partition = build_cells(est, family, box);
    const CellIntegrals integrals = cell_integrals(partition, marginal, opts);
    const int n = est.n();
    const int d = est.dim();
    VectorXd res(n * (d + 1));
    for (int i = 0; i < n; ++i) res[i] = est.coding_probs[i] - integrals.mass[i];
    for (int i = 0; i < n; ++i) {
        const VectorXd mu = family.grad_psi(est.assertions.row(i).transpose());
        res.segment(n + i * d, d) =
            est.coding_probs[i] * mu - integrals.moment.row(i).transpose();
    }
    return res;
}

namespace {

struct PackedState {
    VectorXd u;  ///< n-1 log-ratios followed by n*d assertion coordinates
};

VectorXd pack_state(const Estimator& est) {
    const int n = est.n(), d = est.dim();
    VectorXd u(n - 1 + n * d);
    const double log_qn = std::log(est.coding_probs[n - 1]);
    for (int i = 0; i < n - 1; ++i) u[i] = std::log(est.coding_probs[i]) - log_qn;
    for (int i = 0; i < n; ++i)
        u.segment(n - 1 + i * d, d) = est.assertions.row(i).transpose();
    return u;
}

Estimator unpack_state(const VectorXd& u, int n, int d) {
    Estimator est;
    est.assertions.resize(n, d);
    est.coding_probs.resize(n);
    VectorXd z(n);
    for (int i = 0; i < n - 1; ++i) z[i] = std::clamp(u[i], -40.0, 40.0);
    z[n - 1] = 0.0;
    const double zmax = z.maxCoeff();
    VectorXd e = (z.array() - zmax).exp();
    est.coding_probs = e / e.sum();
    for (int i = 0; i < n; ++i)
        est.assertions.row(i) = u.segment(n - 1 + i * d, d).transpose();
    return est;
}

struct ResidualEval {
    VectorXd reduced;       ///< n-1 mass equations + n*d moment equations
    double full_inf = 0.0;  ///< infinity norm of all n(d+1) equations
    CellIntegrals integrals;
    bool valid = false;
};

ResidualEval eval_residual(const Estimator& est, const MarginalDensity& marginal,
                           const ExponentialFamily& family, const Box& box,
                           const QuadratureOptions& opts) {
    ResidualEval out;
    const int n = est.n(), d = est.dim();
    Partition partition;
    try {
        partition = build_cells(est, family, box);
    } catch (const std::invalid_argument&) {
        return out;  // degenerate state, caller treats as line-search failure
    }
    out.integrals = cell_integrals(partition, marginal, opts);
    out.reduced.resize(n - 1 + n * d);
    out.full_inf = 0.0;
    for (int i = 0; i < n; ++i) {
        const double ri = est.coding_probs[i] - out.integrals.mass[i];
        if (i < n - 1) out.reduced[i] = ri;
        out.full_inf = std::max(out.full_inf, std::abs(ri));
    }
    for (int i = 0; i < n; ++i) {
        const VectorXd mu = family.grad_psi(est.assertions.row(i).transpose());
        const VectorXd ri =
            est.coding_probs[i] * mu - out.integrals.moment.row(i).transpose();
        out.reduced.segment(n - 1 + i * d, d) = ri;
        out.full_inf = std::max(out.full_inf, ri.lpNorm<Eigen::Infinity>());
    }
    out.valid = true;
    return out;
}

}  // namespace

SolveResult quasi_newton_solve(const SolverConfig& config, const MarginalDensity& marginal,
                               const ExponentialFamily& family, const Estimator& init) {
    const Box& box = marginal.box();
    const int n = config.n, d = family.dim();
    if (init.n() != n) throw std::invalid_argument("quasi_newton_solve: init has wrong n");
    const double eps_f = config.residual_tolerance;
    const QuadratureOptions& quad = config.quadrature;

    SolveResult result;
    result.constant_c = carrier_constant(marginal, family);
    Estimator est = init;
    int iterations = 0;

    auto record = [&](const Estimator& e) {
        result.trace.push_back(finite_sum_value(e, family, result.constant_c));
    };

    // Lloyd warmup: cheap global progress toward the fixed point.
    for (int it = 0; it < config.lloyd_warmup && iterations < config.max_outer_iterations;
         ++it, ++iterations) {
        LloydOutcome step = lloyd_step(est, marginal, family, box, quad,
                                       config.empty_cell_policy);
        result.diagnostics.empty_cell_events += step.reseeded;
        if (step.integrals.warning) ++result.diagnostics.quadrature_warnings;
        est = step.next;
        record(est);
    }

    ResidualEval eval = eval_residual(est, marginal, family, box, quad);
    if (!eval.valid) throw std::runtime_error("quasi_newton_solve: degenerate warmup state");

    const int m = n - 1 + n * d;
    VectorXd u = pack_state(est);
    MatrixXd jac(m, m);
    bool jac_fresh = false;

    auto fd_jacobian = [&](const VectorXd& at, const ResidualEval& base) {
        for (int c = 0; c < m; ++c) {
            const double step = 1e-6 * (1.0 + std::abs(at[c]));
            VectorXd up = at;
            up[c] += step;
            const ResidualEval pe =
                eval_residual(unpack_state(up, n, d), marginal, family, box, quad);
            if (!pe.valid) {
                jac.col(c).setZero();
                jac(c, c) = 1.0;
                continue;
            }
            jac.col(c) = (pe.reduced - base.reduced) / step;
        }
        jac_fresh = true;
    };

    // Levenberg-style damping handles the singular directions that symmetric
    // problems produce (the solution set can be a manifold, so the residual
    // Jacobian is rank-deficient at convergence).
    double damping = 1e-8;
    auto record_direct = [&](const ResidualEval& at, const Estimator& e) {
        result.trace.push_back(direct_value(e, at.integrals, family, result.constant_c));
    };

    while (iterations < config.max_outer_iterations) {
        if (eval.full_inf <= eps_f) {
            result.converged = true;
            break;
        }
        ++iterations;

        if (!jac_fresh) fd_jacobian(u, eval);

        const MatrixXd jtj = jac.transpose() * jac;
        const VectorXd jtf = jac.transpose() * eval.reduced;
        const double scale = std::max(jtj.trace() / m, 1e-300);
        const double phi0 = eval.reduced.squaredNorm();
        bool accepted = false;
        for (int attempt = 0; attempt < 10 && !accepted; ++attempt) {
            const MatrixXd damped = jtj + damping * scale * MatrixXd::Identity(m, m);
            const VectorXd step = damped.ldlt().solve(-jtf);
            if (!step.allFinite()) {
                damping *= 10.0;
                continue;
            }
            for (double alpha : {1.0, 0.5, 0.25}) {
                const VectorXd cand_u = u + alpha * step;
                const Estimator cand = unpack_state(cand_u, n, d);
                const ResidualEval ce = eval_residual(cand, marginal, family, box, quad);
                if (!ce.valid) continue;
                if (ce.reduced.squaredNorm() <= phi0 * (1.0 - 1e-4 * alpha)) {
                    const VectorXd du = alpha * step;
                    const VectorXd df = ce.reduced - eval.reduced;
                    jac += (df - jac * du) * du.transpose() / du.squaredNorm();
                    u = cand_u;
                    est = cand;
                    eval = ce;
                    accepted = true;
                    break;
                }
            }
            if (!accepted) damping *= 10.0;
        }
        if (accepted) {
            damping = std::max(0.3 * damping, 1e-12);
        } else {
            // Safeguard: one Lloyd sweep, then rebuild the Jacobian.
            ++result.diagnostics.lloyd_fallbacks;
            LloydOutcome fallback =
                lloyd_step(est, marginal, family, box, quad, config.empty_cell_policy);
            result.diagnostics.empty_cell_events += fallback.reseeded;
            est = fallback.next;
            u = pack_state(est);
            eval = eval_residual(est, marginal, family, box, quad);
            if (!eval.valid) throw std::runtime_error("quasi_newton_solve: degenerate fallback");
            jac_fresh = false;
            damping = 1e-6;
        }
        record_direct(eval, est);
    }
    if (eval.full_inf <= eps_f) result.converged = true;

    result.estimator = est;
    result.residual_norm = eval.full_inf;
    result.diagnostics.iterations = iterations;
    const Partition partition = build_cells(est, family, box);
    const I1Evaluation i1 =
        evaluate_i1(est, partition, marginal, family, quad, eps_f, result.constant_c);
    result.i1 = i1.i1;
    return result;
}

Estimator initial_estimator(const SolverConfig& config, const MarginalDensity& marginal,
                            const ExponentialFamily& family, std::uint64_t restart) {
    const int n = config.n, d = family.dim();
    const Box& box = marginal.box();

    if (config.init == SolverConfig::Init::UserSupplied) {
        if (!config.user_init)
            throw std::invalid_argument("solver: user-supplied init requested but absent");
        Estimator est = *config.user_init;
        validate_estimator(est, family);
        return est;
    }

    std::mt19937_64 rng(config.seed + 0x9E3779B97F4A7C15ull * restart);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Estimator est;
    est.assertions.resize(n, d);
    est.coding_probs = VectorXd::Constant(n, 1.0 / n);

    if (config.init == SolverConfig::Init::PerturbedGrid) {
        const int per_axis = static_cast<int>(std::ceil(std::pow(double(n), 1.0 / d)));
        const VectorXd center = marginal.moment();
        const VectorXd span = 0.5 * box.widths() / 3.0;  // middle third of the box
        int placed = 0;
        std::vector<int> idx(d, 0);
        while (placed < n) {
            VectorXd x(d);
            for (int k = 0; k < d; ++k) {
                const double frac = per_axis == 1 ? 0.5 : double(idx[k]) / (per_axis - 1);
                const double jitter = 0.2 * (2.0 * unit(rng) - 1.0) / std::max(per_axis - 1, 1);
                x[k] = center[k] + span[k] * (2.0 * (frac + jitter) - 1.0);
                x[k] = std::clamp(x[k], box.lo[k] + 1e-9, box.hi[k] - 1e-9);
            }
            est.assertions.row(placed++) = family.mu_inverse(x).transpose();
            int k = 0;
            while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
            if (k == d)
                for (int kk = 0; kk < d; ++kk) idx[kk] = 0;
        }
        return est;
    }

    // Random-from-marginal: rejection sampling of the renormalized density.
    double rho_max = 0.0;
    {
        const int per_axis = d == 1 ? 257 : (d == 2 ? 33 : 9);
        VectorXd x(d);
        std::vector<int> idx(d, 0);
        while (true) {
            for (int k = 0; k < d; ++k)
                x[k] = box.lo[k] + (idx[k] + 0.5) * (box.hi[k] - box.lo[k]) / per_axis;
            rho_max = std::max(rho_max, marginal.normalized_eval(x));
            int k = 0;
            while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
            if (k == d) break;
        }
        rho_max *= 1.5;
    }
    const double min_sep = 1e-6 * box.widths().norm();
    for (int i = 0; i < n; ++i) {
        VectorXd x(d);
        bool ok = false;
        for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
            for (int k = 0; k < d; ++k) x[k] = box.lo[k] + unit(rng) * (box.hi[k] - box.lo[k]);
            if (unit(rng) * rho_max > marginal.normalized_eval(x)) continue;
            ok = true;
            for (int j = 0; j < i && ok; ++j) {
                VectorXd prev_mu = family.grad_psi(est.assertions.row(j).transpose());
                if ((prev_mu - x).norm() < min_sep) ok = false;
            }
        }
        if (!ok) throw std::runtime_error("solver: failed to sample initial assertions");
        est.assertions.row(i) = family.mu_inverse(x).transpose();
    }
    return est;
}

SolveResult multi_start(const SolverConfig& config, const MarginalDensity& marginal,
                        const ExponentialFamily& family) {
    if (config.restarts < 1) throw std::invalid_argument("multi_start: restarts must be >= 1");
    std::vector<SolveResult> runs;
    runs.reserve(config.restarts);
    for (int r = 0; r < config.restarts; ++r) {
        Estimator init = initial_estimator(config, marginal, family, r);
        SolveResult run = quasi_newton_solve(config, marginal, family, init);
        run.restart_index = r;
        if (run.converged) {
            const Partition partition = build_cells(run.estimator, family, marginal.box());
            const FaceInequalityReport report =
                face_inequality_check(run.estimator, partition, marginal, family);
            run.diagnostics.saddle_rejected = !report.pass;
        }
        runs.push_back(std::move(run));
    }

    auto better = [](const SolveResult& a, const SolveResult& b) {
        const int ra = (a.converged ? 0 : 2) + (a.diagnostics.saddle_rejected ? 1 : 0);
        const int rb = (b.converged ? 0 : 2) + (b.diagnostics.saddle_rejected ? 1 : 0);
        if (ra != rb) return ra < rb;
        if (a.converged != b.converged) return a.converged;
        if (a.i1 != b.i1) return a.i1 < b.i1;
        return a.restart_index < b.restart_index;
    };
    int best = 0;
    for (int r = 1; r < config.restarts; ++r)
        if (better(runs[r], runs[best])) best = r;
    return runs[best];
}

FaceInequalityReport face_inequality_check(const Estimator& est, const Partition& partition,
                                           const MarginalDensity& marginal,
                                           const ExponentialFamily& family, int samples) {
    FaceInequalityReport report;
    report.min_margin = std::numeric_limits<double>::infinity();
    for (const Face& face : partition.shared_faces()) {
        FaceInequalityEntry entry;
        entry.i = face.i;
        entry.j = face.j;
        const VectorXd theta_i = est.assertions.row(face.i).transpose();
        const VectorXd theta_j = est.assertions.row(face.j).transpose();
        entry.lhs = (theta_i - theta_j).norm();
        const VectorXd mu_i = family.grad_psi(theta_i);
        const VectorXd mu_j = family.grad_psi(theta_j);
        const MatrixXd qi_inv = family.hess_psi(theta_i).inverse();
        const MatrixXd qj_inv = family.hess_psi(theta_j).inverse();
        const double qi = est.coding_probs[face.i];
        const double qj = est.coding_probs[face.j];

        const int count = (face.b - face.a).norm() > 0.0 ? std::max(samples, 2) : 1;
        entry.min_margin = std::numeric_limits<double>::infinity();
        for (int s = 0; s < count; ++s) {
            const double t = count == 1 ? 0.5 : (s + 0.5) / count;
            const VectorXd x = face.a + t * (face.b - face.a);
            const double rho = marginal.normalized_eval(x);
            const VectorXd di = x - mu_i;
            const VectorXd dj = x - mu_j;
            const double rhs = rho / qi * (1.0 + di.dot(qi_inv * di)) +
                               rho / qj * (1.0 + dj.dot(qj_inv * dj));
            const double margin = entry.lhs - rhs;
            if (margin < entry.min_margin) {
                entry.min_margin = margin;
                entry.worst_point = x;
            }
        }
        report.min_margin = std::min(report.min_margin, entry.min_margin);
        report.faces.push_back(std::move(entry));
    }
    if (report.faces.empty()) report.min_margin = 0.0;  // vacuous pass
    report.pass = report.min_margin >= -1e-9;
    return report;
}

}  // namespace smml
