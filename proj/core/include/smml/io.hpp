#pragma once

#include <nlohmann/json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "smml/grid_oracle.hpp"
#include "smml/marginal.hpp"
#include "smml/partition.hpp"
#include "smml/solver.hpp"

namespace smml {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Error carrying a config-file location (line numbers are 1-based; 0 when
/// the offending key could not be located in the source text).
struct ConfigError : std::runtime_error {
    ConfigError(const std::string& message, int line = 0)
        : std::runtime_error(line > 0 ? message + " (line " + std::to_string(line) + ")"
                                      : message),
          line_number(line) {}
    int line_number = 0;
};

struct OracleRunConfig {
    long grid_points = 12000;
    std::vector<std::uint64_t> seeds = {1};
    double mismatch_threshold = 0.01;
};

struct OutputConfig {
    std::string directory = "out";
    std::vector<std::string> formats = {"json", "svg", "csv"};
};

/// Parsed and defaults-resolved problem description. `echo` holds the fully
/// explicit config embedded verbatim in every output file.
struct ProblemConfig {
    std::string family_kind = "gaussian";
    int dimension = 1;

    bool prior_is_gaussian = true;
    VectorXd prior_mean;
    double prior_scale = 1.0;
    std::optional<TabulatedPrior> prior_table;

    double truncation_epsilon = 1e-6;
    SolverConfig solver;
    OracleRunConfig oracle;
    OutputConfig output;

    json echo;

    ExponentialFamily make_family() const;
    Prior make_prior() const;
    MarginalDensity make_marginal() const;
};

/// Parses a config document; rejects unknown keys and invalid values with
/// line-anchored ConfigError messages.
ProblemConfig parse_problem_config(const std::string& text);
ProblemConfig load_problem_config(const std::string& path);

json result_to_json(const SolveResult& result, const ProblemConfig& config,
                    const MarginalDensity& marginal);
/// Restores the estimator and problem from a result document.
struct LoadedResult {
    SolveResult result;
    ProblemConfig config;
};
LoadedResult result_from_json(const json& doc);

json geometry_to_json(const Partition& partition);

/// Serializes a json document with a stable layout (2-space indent, sorted
/// keys not required because insertion order is deterministic).
std::string to_stable_string(const json& doc);

/// SVG of the partition: cells filled from a fixed color table, faces and
/// the box frame drawn in black. Byte-stable for identical inputs.
std::string partition_svg(const Partition& partition, int width = 900);

/// SVG of the discrete experiment: weighted points colored by label under
/// the polygon boundaries predicted by the implied estimator.
std::string overlay_svg(const GridProblem& problem, const Coloring& coloring,
                        const Partition& predicted, int width = 900);

/// Point-cloud CSV: x1,..,xd,weight,color (1-based colors).
std::string points_csv(const GridProblem& problem, const Coloring& coloring);

void write_text_file(const std::string& path, const std::string& contents);
std::string read_text_file(const std::string& path);

}  // namespace smml
