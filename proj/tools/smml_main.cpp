// Command line front end: config-driven solves, the discrete grid
// experiment, optimality checks, and artifact export.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <string>

#include "smml/io.hpp"
#include "smml/variation.hpp"

namespace fs = std::filesystem;
using namespace smml;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitNotConverged = 2;

bool wants_format(const OutputConfig& output, const std::string& fmt) {
    return std::find(output.formats.begin(), output.formats.end(), fmt) != output.formats.end();
}

int cmd_solve(const std::string& config_path, const std::string& out_override) {
    ProblemConfig config = load_problem_config(config_path);
    if (!out_override.empty()) config.output.directory = out_override;
    const ExponentialFamily family = config.make_family();
    const MarginalDensity marginal = config.make_marginal();

    const SolveResult result = multi_start(config.solver, marginal, family);
    const Partition partition = build_cells(result.estimator, family, marginal.box());

    fs::create_directories(config.output.directory);
    const fs::path dir(config.output.directory);
    if (wants_format(config.output, "json")) {
        write_text_file((dir / "solve_result.json").string(),
                        to_stable_string(result_to_json(result, config, marginal)));
        write_text_file((dir / "geometry.json").string(),
                        to_stable_string(geometry_to_json(partition)));
    }
    if (wants_format(config.output, "svg") && family.dim() <= 2)
        write_text_file((dir / "partition.svg").string(), partition_svg(partition));

    std::printf("n=%d  I1=%.12g  C=%.12g  residual=%.3e  converged=%s  restarts=%d\n",
                result.estimator.n(), result.i1, result.constant_c, result.residual_norm,
                result.converged ? "yes" : "no", config.solver.restarts);
    return result.converged ? kExitOk : kExitNotConverged;
}

int cmd_oracle(const std::string& config_path, const std::string& out_override) {
    ProblemConfig config = load_problem_config(config_path);
    if (!out_override.empty()) config.output.directory = out_override;
    const ExponentialFamily family = config.make_family();
    const MarginalDensity marginal = config.make_marginal();
    const GridProblem problem = make_grid_problem(marginal, config.oracle.grid_points);

    std::optional<GreedyResult> best;
    std::uint64_t best_seed = 0;
    for (std::uint64_t seed : config.oracle.seeds) {
        GreedyResult run = greedy_descent(problem, family, config.solver.n, seed);
        if (!best || run.i1 < best->i1) {
            best = std::move(run);
            best_seed = seed;
        }
    }
    const MatchReport match = theorem_match(problem, best->coloring, family);
    const Partition predicted = build_cells(match.implied, family, problem.box);

    fs::create_directories(config.output.directory);
    const fs::path dir(config.output.directory);
    if (wants_format(config.output, "csv"))
        write_text_file((dir / "points.csv").string(), points_csv(problem, best->coloring));
    if (wants_format(config.output, "svg") && family.dim() == 2)
        write_text_file((dir / "overlay.svg").string(),
                        overlay_svg(problem, best->coloring, predicted));
    if (wants_format(config.output, "json")) {
        json doc;
        doc["schema_version"] = kSchemaVersion;
        doc["config"] = config.echo;
        doc["grid_points"] = problem.size();
        doc["discrete_I1"] = best->i1;
        doc["sweeps"] = best->sweeps;
        doc["moves"] = best->moves;
        doc["emptied_class"] = best->emptied_class;
        doc["best_seed"] = best_seed;
        doc["effective_n"] = match.effective_n;
        doc["mismatch_fraction"] = match.mismatch_weight;
        json assertions = json::array();
        for (int i = 0; i < match.implied.n(); ++i) {
            json row = json::array();
            for (int k = 0; k < match.implied.dim(); ++k)
                row.push_back(match.implied.assertions(i, k));
            assertions.push_back(row);
        }
        doc["assertions"] = assertions;
        json probs = json::array();
        for (int i = 0; i < match.implied.n(); ++i)
            probs.push_back(match.implied.coding_probs[i]);
        doc["coding_probabilities"] = probs;
        write_text_file((dir / "oracle_result.json").string(), to_stable_string(doc));
    }

    std::printf("grid=%ld  discrete I1=%.10g  sweeps=%d  mismatch=%.5f%%  threshold=%.5f%%\n",
                problem.size(), best->i1, best->sweeps, 100.0 * match.mismatch_weight,
                100.0 * config.oracle.mismatch_threshold);
    return match.mismatch_weight <= config.oracle.mismatch_threshold ? kExitOk
                                                                     : kExitNotConverged;
}

struct CheckRow {
    std::string name;
    double value;
    double threshold;
    bool pass;
};

void print_rows(const std::vector<CheckRow>& rows) {
    std::printf("%-44s %14s %14s  %s\n", "check", "value", "threshold", "status");
    for (const auto& row : rows)
        std::printf("%-44s %14.4e %14.4e  %s\n", row.name.c_str(), row.value, row.threshold,
                    row.pass ? "PASS" : "FAIL");
}

int cmd_check(const std::string& config_path, const std::string& result_path) {
    const ProblemConfig config = load_problem_config(config_path);
    const LoadedResult loaded = result_from_json(json::parse(read_text_file(result_path)));
    const Estimator& est = loaded.result.estimator;
    const ExponentialFamily family = config.make_family();
    const MarginalDensity marginal = config.make_marginal();
    if (est.dim() != family.dim())
        throw ConfigError("result and config dimensions disagree");

    const double eps_f = config.solver.residual_tolerance;
    const QuadratureOptions& quad = config.solver.quadrature;
    const Partition partition = build_cells(est, family, marginal.box());
    std::vector<CheckRow> rows;

    // Stationarity.
    const VectorXd res = residual(est, marginal, family, marginal.box(), quad);
    rows.push_back({"residual_inf_norm", res.lpNorm<Eigen::Infinity>(), eps_f,
                    res.lpNorm<Eigen::Infinity>() <= eps_f});
    const double qsum_gap = std::abs(est.coding_probs.sum() - 1.0);
    rows.push_back({"coding_prob_sum_gap", qsum_gap, 1e-10, qsum_gap <= 1e-10});
    const I1Evaluation i1 = evaluate_i1(est, partition, marginal, family, quad, eps_f);
    const double route_gap = std::abs(i1.finite_sum - i1.direct);
    rows.push_back({"i1_finite_sum_vs_direct", route_gap, 1e-6, route_gap <= 1e-6});

    // Face inequality.
    const FaceInequalityReport ineq = face_inequality_check(est, partition, marginal, family);
    rows.push_back({"face_inequality_min_margin", ineq.min_margin, -1e-9, ineq.pass});

    // Continuity corollary: log(q f) equals the score envelope plus log h.
    {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const Box& box = marginal.box();
        double worst = 0.0;
        for (int s = 0; s < 1000; ++s) {
            VectorXd x(family.dim());
            for (int k = 0; k < family.dim(); ++k)
                x[k] = box.lo[k] + unit(rng) * (box.hi[k] - box.lo[k]);
            const int cell = partition.assign(x);
            const double lhs = std::log(est.coding_probs[cell]) +
                               family.log_density(x, est.assertions.row(cell).transpose());
            const double rhs = family.log_h(x) + partition.scores().max_score(x);
            worst = std::max(worst, std::abs(lhs - rhs) / (1.0 + std::abs(rhs)));
        }
        rows.push_back({"continuity_corollary_rel_gap", worst, 1e-12, worst <= 1e-12});
    }

    // Variation checks on every shared face (d = 2 only; faces are points in
    // d = 1 and the deformation apparatus needs a segment).
    if (family.dim() == 2) {
        int face_idx = 0;
        for (const Face& face : partition.shared_faces()) {
            DeformationSpec spec;
            spec.cell_i = face.i;
            spec.cell_j = face.j;
            const VariationContext ctx(est, marginal, family, spec, quad);
            const VariationReport report = verify_variation(ctx);
            const std::string tag =
                "face_" + std::to_string(face.i) + "_" + std::to_string(face.j);

            const double id_tol = 10.0 * std::max(report.id_error_estimate, 20.0 * eps_f);
            rows.push_back({tag + "_first_variation_zero", std::abs(report.id_formula), id_tol,
                            std::abs(report.id_formula) <= id_tol});
            const double fd_gap = std::abs(report.id_formula - report.id_numeric);
            const double fd_tol =
                1e-3 * std::max({std::abs(report.id_numeric), std::abs(report.idd_numeric) * 1e-3,
                                 1e-9});
            rows.push_back({tag + "_first_variation_fd_gap", fd_gap, fd_tol, fd_gap <= fd_tol});
            const double idd_gap = std::abs(report.idd_formula - report.idd_numeric);
            const double idd_tol = 1e-2 * std::max(std::abs(report.idd_numeric), 1e-6);
            rows.push_back(
                {tag + "_second_variation_fd_gap", idd_gap, idd_tol, idd_gap <= idd_tol});
            rows.push_back({tag + "_second_variation_sign", report.idd_formula, -1e-6,
                            report.idd_formula >= -1e-6});

            if (face_idx == 0) {
                // Flow-derivative lemma on the first face, all test densities.
                for (int region : {1, 2}) {
                    for (const auto [kind, label] :
                         {std::pair{TestDensity::One, "rho1"},
                          std::pair{TestDensity::Coordinate, "rhox"},
                          std::pair{TestDensity::Marginal, "rhor"}}) {
                        const FlowLemmaReport flow = flow_lemma_check(ctx, region, kind);
                        const double scale =
                            std::max({1.0, std::abs(flow.first_formula),
                                      std::abs(flow.second_formula)});
                        const double gap = std::max(flow.first_gap, flow.second_gap) / scale;
                        rows.push_back({tag + "_flow_" + label + "_u" + std::to_string(region),
                                        gap, 1e-4, gap <= 1e-4});
                    }
                }
            }
            ++face_idx;
        }
    }

    print_rows(rows);
    const bool all_pass =
        std::all_of(rows.begin(), rows.end(), [](const CheckRow& r) { return r.pass; });
    std::printf("%s\n", all_pass ? "ALL CHECKS PASSED" : "CHECKS FAILED");
    return all_pass ? kExitOk : kExitNotConverged;
}

int cmd_export(const std::string& result_path, const std::string& format,
               const std::string& out_path) {
    const LoadedResult loaded = result_from_json(json::parse(read_text_file(result_path)));
    std::string payload;
    if (format == "json") {
        const MarginalDensity marginal = loaded.config.make_marginal();
        payload = to_stable_string(
            result_to_json(loaded.result, loaded.config, marginal));
    } else if (format == "svg") {
        const ExponentialFamily family = loaded.config.make_family();
        const MarginalDensity marginal = loaded.config.make_marginal();
        if (family.dim() > 2) throw ConfigError("svg export needs d <= 2");
        const Partition partition =
            build_cells(loaded.result.estimator, family, marginal.box());
        payload = partition_svg(partition);
    } else if (format == "csv") {
        std::ostringstream csv;
        const Estimator& est = loaded.result.estimator;
        csv << "index,";
        for (int k = 0; k < est.dim(); ++k) csv << "theta" << (k + 1) << ',';
        csv << "q\n";
        char buf[64];
        for (int i = 0; i < est.n(); ++i) {
            csv << i;
            for (int k = 0; k < est.dim(); ++k) {
                std::snprintf(buf, sizeof(buf), ",%.17g", est.assertions(i, k));
                csv << buf;
            }
            std::snprintf(buf, sizeof(buf), ",%.17g", est.coding_probs[i]);
            csv << buf << '\n';
        }
        payload = csv.str();
    } else {
        throw ConfigError("unknown export format: " + format);
    }
    if (out_path.empty())
        std::fwrite(payload.data(), 1, payload.size(), stdout);
    else
        write_text_file(out_path, payload);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SMML estimator construction for exponential families"};
    app.require_subcommand(1);

    std::string config_path, result_path, out_dir, format = "json", out_path;

    CLI::App* solve = app.add_subcommand("solve", "run the continuous solver on a config");
    solve->add_option("config", config_path, "problem config (JSON)")->required();
    solve->add_option("--output-dir", out_dir, "override output.directory");

    CLI::App* oracle = app.add_subcommand("oracle", "run the discrete grid experiment");
    oracle->add_option("config", config_path, "problem config (JSON)")->required();
    oracle->add_option("--output-dir", out_dir, "override output.directory");

    CLI::App* check = app.add_subcommand("check", "verify optimality conditions of a result");
    check->add_option("config", config_path, "problem config (JSON)")->required();
    check->add_option("result", result_path, "solve result (JSON)")->required();

    CLI::App* exp = app.add_subcommand("export", "re-emit artifacts from a result file");
    exp->add_option("result", result_path, "solve result (JSON)")->required();
    exp->add_option("--format", format, "json|svg|csv");
    exp->add_option("--out", out_path, "output file (stdout when omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (solve->parsed()) return cmd_solve(config_path, out_dir);
        if (oracle->parsed()) return cmd_oracle(config_path, out_dir);
        if (check->parsed()) return cmd_check(config_path, result_path);
        if (exp->parsed()) return cmd_export(result_path, format, out_path);
    } catch (const ConfigError& err) {
        std::cerr << "config error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitNotConverged;
    }
    return kExitUsage;
}
