#include "smml/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace smml {

namespace {

int line_of_byte(const std::string& text, size_t byte) {
    int line = 1;
    for (size_t k = 0; k < byte && k < text.size(); ++k)
        if (text[k] == '\n') ++line;
    return line;
}

int line_of_key(const std::string& text, const std::string& key) {
    const std::string needle = "\"" + key + "\"";
    const size_t pos = text.find(needle);
    if (pos == std::string::npos) return 0;
    return line_of_byte(text, pos);
}

void reject_unknown_keys(const json& obj, const std::string& section,
                         const std::vector<std::string>& allowed, const std::string& text) {
    for (const auto& [key, _] : obj.items()) {
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ConfigError("unknown key '" + key + "' in section '" + section + "'",
                              line_of_key(text, key));
    }
}

const json& require_section(const json& doc, const std::string& key, const std::string& text) {
    if (!doc.contains(key))
        throw ConfigError("missing required section '" + key + "'");
    if (!doc[key].is_object())
        throw ConfigError("section '" + key + "' must be an object", line_of_key(text, key));
    return doc[key];
}

double require_number(const json& obj, const std::string& path, const std::string& key,
                      const std::string& text, double fallback, bool required = false) {
    if (!obj.contains(key)) {
        if (required) throw ConfigError("missing required field '" + path + "." + key + "'");
        return fallback;
    }
    if (!obj[key].is_number())
        throw ConfigError("field '" + path + "." + key + "' must be a number",
                          line_of_key(text, key));
    return obj[key].get<double>();
}

long require_integer(const json& obj, const std::string& path, const std::string& key,
                     const std::string& text, long fallback, bool required = false) {
    if (!obj.contains(key)) {
        if (required) throw ConfigError("missing required field '" + path + "." + key + "'");
        return fallback;
    }
    if (!obj[key].is_number_integer())
        throw ConfigError("field '" + path + "." + key + "' must be an integer",
                          line_of_key(text, key));
    return obj[key].get<long>();
}

std::string require_string(const json& obj, const std::string& path, const std::string& key,
                           const std::string& text, const std::string& fallback,
                           bool required = false) {
    if (!obj.contains(key)) {
        if (required) throw ConfigError("missing required field '" + path + "." + key + "'");
        return fallback;
    }
    if (!obj[key].is_string())
        throw ConfigError("field '" + path + "." + key + "' must be a string",
                          line_of_key(text, key));
    return obj[key].get<std::string>();
}

VectorXd vector_from_json(const json& arr) {
    VectorXd v(arr.size());
    for (size_t k = 0; k < arr.size(); ++k) v[k] = arr[k].get<double>();
    return v;
}

json vector_to_json(const VectorXd& v) {
    json arr = json::array();
    for (int k = 0; k < v.size(); ++k) arr.push_back(v[k]);
    return arr;
}

json matrix_to_json(const MatrixXd& m) {
    json arr = json::array();
    for (int i = 0; i < m.rows(); ++i) arr.push_back(vector_to_json(m.row(i).transpose()));
    return arr;
}

const char* kColorTable[] = {"#e6194b", "#3cb44b", "#ffe119", "#4363d8",
                             "#f58231", "#911eb4", "#46f0f0", "#f032e6",
                             "#bcf60c", "#008080", "#9a6324", "#800000"};
constexpr int kColorCount = 12;

std::string fmt(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

std::string fmt_full(double value) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

struct SvgFrame {
    double scale, ox, oy;
    int width, height, margin;

    static SvgFrame fit(const Box& box, int width, int margin) {
        SvgFrame f;
        f.width = width;
        f.margin = margin;
        const double wx = box.widths()[0];
        const double wy = box.dim() > 1 ? box.widths()[1] : wx * 0.25;
        f.scale = (width - 2.0 * margin) / wx;
        f.height = static_cast<int>(std::lround(wy * f.scale)) + 2 * margin;
        f.ox = box.lo[0];
        f.oy = box.dim() > 1 ? box.lo[1] : 0.0;
        return f;
    }
    double px(double x) const { return margin + (x - ox) * scale; }
    double py(double y) const { return height - margin - (y - oy) * scale; }
};

}  // namespace

ExponentialFamily ProblemConfig::make_family() const {
    return FamilyRegistry::instance().make(family_kind, dimension);
}

Prior ProblemConfig::make_prior() const {
    if (prior_is_gaussian) return Prior(GaussianPrior{prior_mean, prior_scale});
    return Prior(*prior_table);
}

MarginalDensity ProblemConfig::make_marginal() const {
    return MarginalDensity(make_family(), make_prior(), TruncationOptions{truncation_epsilon});
}

ProblemConfig parse_problem_config(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& err) {
        throw ConfigError(std::string("config is not valid JSON: ") + err.what(),
                          line_of_byte(text, err.byte));
    }
    if (!doc.is_object()) throw ConfigError("config root must be an object");
    reject_unknown_keys(doc, "(root)",
                        {"model", "prior", "truncation", "solver", "oracle", "output"}, text);

    ProblemConfig cfg;

    const json& model = require_section(doc, "model", text);
    reject_unknown_keys(model, "model", {"family", "dimension"}, text);
    cfg.family_kind = require_string(model, "model", "family", text, "", true);
    cfg.dimension = static_cast<int>(require_integer(model, "model", "dimension", text, 0, true));
    if (cfg.dimension < 1)
        throw ConfigError("field 'model.dimension' must be >= 1", line_of_key(text, "dimension"));

    const json& prior = require_section(doc, "prior", text);
    const std::string prior_kind = require_string(prior, "prior", "kind", text, "", true);
    if (prior_kind == "gaussian") {
        reject_unknown_keys(prior, "prior", {"kind", "mean", "scale"}, text);
        cfg.prior_is_gaussian = true;
        if (!prior.contains("mean") || !prior["mean"].is_array())
            throw ConfigError("field 'prior.mean' must be an array",
                              line_of_key(text, "mean"));
        cfg.prior_mean = vector_from_json(prior["mean"]);
        if (cfg.prior_mean.size() != cfg.dimension)
            throw ConfigError("field 'prior.mean' must have model.dimension entries",
                              line_of_key(text, "mean"));
        cfg.prior_scale = require_number(prior, "prior", "scale", text, 0.0, true);
        if (!(cfg.prior_scale > 0.0))
            throw ConfigError("field 'prior.scale' must be positive", line_of_key(text, "scale"));
    } else if (prior_kind == "tabulated") {
        reject_unknown_keys(prior, "prior", {"kind", "box", "shape", "values"}, text);
        cfg.prior_is_gaussian = false;
        if (!prior.contains("box") || !prior["box"].is_object() ||
            !prior["box"].contains("lo") || !prior["box"].contains("hi"))
            throw ConfigError("field 'prior.box' must hold arrays 'lo' and 'hi'",
                              line_of_key(text, "box"));
        TabulatedPrior table;
        table.domain = Box(vector_from_json(prior["box"]["lo"]),
                           vector_from_json(prior["box"]["hi"]));
        if (!prior.contains("shape") || !prior["shape"].is_array())
            throw ConfigError("field 'prior.shape' must be an array",
                              line_of_key(text, "shape"));
        for (const auto& s : prior["shape"]) table.shape.push_back(s.get<int>());
        if (!prior.contains("values") || !prior["values"].is_array())
            throw ConfigError("field 'prior.values' must be an array",
                              line_of_key(text, "values"));
        for (const auto& v : prior["values"]) table.values.push_back(v.get<double>());
        cfg.prior_table = std::move(table);
    } else {
        throw ConfigError("field 'prior.kind' must be 'gaussian' or 'tabulated'",
                          line_of_key(text, "kind"));
    }

    if (doc.contains("truncation")) {
        const json& trunc = doc["truncation"];
        reject_unknown_keys(trunc, "truncation", {"epsilon"}, text);
        cfg.truncation_epsilon =
            require_number(trunc, "truncation", "epsilon", text, cfg.truncation_epsilon);
        if (!(cfg.truncation_epsilon > 0.0 && cfg.truncation_epsilon < 1.0))
            throw ConfigError("field 'truncation.epsilon' must be in (0, 1)",
                              line_of_key(text, "epsilon"));
    }

    const json& solver = require_section(doc, "solver", text);
    reject_unknown_keys(solver, "solver",
                        {"n", "init", "seed", "max_outer_iterations", "i1_tolerance",
                         "residual_tolerance", "restarts", "empty_cell_policy", "lloyd_warmup",
                         "quadrature", "init_assertions", "init_coding_probs"},
                        text);
    cfg.solver.n = static_cast<int>(require_integer(solver, "solver", "n", text, 0, true));
    if (cfg.solver.n < 1)
        throw ConfigError("field 'solver.n' must be >= 1", line_of_key(text, "n"));
    const std::string init =
        require_string(solver, "solver", "init", text, "random-from-r");
    if (init == "random-from-r")
        cfg.solver.init = SolverConfig::Init::RandomFromMarginal;
    else if (init == "user-supplied")
        cfg.solver.init = SolverConfig::Init::UserSupplied;
    else if (init == "perturbed-grid")
        cfg.solver.init = SolverConfig::Init::PerturbedGrid;
    else
        throw ConfigError(
            "field 'solver.init' must be one of random-from-r|user-supplied|perturbed-grid",
            line_of_key(text, "init"));
    cfg.solver.seed = static_cast<std::uint64_t>(
        require_integer(solver, "solver", "seed", text, static_cast<long>(cfg.solver.seed)));
    cfg.solver.max_outer_iterations = static_cast<int>(
        require_integer(solver, "solver", "max_outer_iterations", text, 200));
    cfg.solver.i1_tolerance = require_number(solver, "solver", "i1_tolerance", text, 1e-9);
    cfg.solver.residual_tolerance =
        require_number(solver, "solver", "residual_tolerance", text, 1e-8);
    if (!(cfg.solver.i1_tolerance > 0.0) || !(cfg.solver.residual_tolerance > 0.0))
        throw ConfigError("solver tolerances must be positive", line_of_key(text, "solver"));
    cfg.solver.restarts =
        static_cast<int>(require_integer(solver, "solver", "restarts", text, 1));
    if (cfg.solver.restarts < 1)
        throw ConfigError("field 'solver.restarts' must be >= 1",
                          line_of_key(text, "restarts"));
    const std::string policy =
        require_string(solver, "solver", "empty_cell_policy", text, "reseed");
    if (policy == "reseed")
        cfg.solver.empty_cell_policy = SolverConfig::EmptyCellPolicy::Reseed;
    else if (policy == "fail")
        cfg.solver.empty_cell_policy = SolverConfig::EmptyCellPolicy::Fail;
    else
        throw ConfigError("field 'solver.empty_cell_policy' must be reseed|fail",
                          line_of_key(text, "empty_cell_policy"));
    cfg.solver.lloyd_warmup =
        static_cast<int>(require_integer(solver, "solver", "lloyd_warmup", text, 12));
    if (solver.contains("quadrature")) {
        const json& quad = solver["quadrature"];
        reject_unknown_keys(quad, "solver.quadrature",
                            {"cell_tol", "max_refine_depth", "grid_per_axis"}, text);
        cfg.solver.quadrature.cell_tol =
            require_number(quad, "solver.quadrature", "cell_tol", text, 1e-11);
        cfg.solver.quadrature.max_refine_depth = static_cast<int>(
            require_integer(quad, "solver.quadrature", "max_refine_depth", text, 6));
        cfg.solver.quadrature.grid_per_axis = static_cast<int>(
            require_integer(quad, "solver.quadrature", "grid_per_axis", text, 256));
    }
    if (solver.contains("init_assertions") || solver.contains("init_coding_probs")) {
        if (!solver.contains("init_assertions") || !solver.contains("init_coding_probs"))
            throw ConfigError(
                "fields 'solver.init_assertions' and 'solver.init_coding_probs' come together",
                line_of_key(text, "solver"));
        Estimator est;
        const json& rows = solver["init_assertions"];
        est.assertions.resize(rows.size(), cfg.dimension);
        for (size_t r = 0; r < rows.size(); ++r) {
            const VectorXd row = vector_from_json(rows[r]);
            if (row.size() != cfg.dimension)
                throw ConfigError("'solver.init_assertions' rows must have dimension entries",
                                  line_of_key(text, "init_assertions"));
            est.assertions.row(r) = row.transpose();
        }
        est.coding_probs = vector_from_json(solver["init_coding_probs"]);
        if (est.coding_probs.size() != est.assertions.rows())
            throw ConfigError("'solver.init_coding_probs' size must match assertions",
                              line_of_key(text, "init_coding_probs"));
        cfg.solver.user_init = std::move(est);
    }

    if (doc.contains("oracle")) {
        const json& oracle = doc["oracle"];
        reject_unknown_keys(oracle, "oracle", {"grid_points", "seeds", "mismatch_threshold"},
                            text);
        cfg.oracle.grid_points = require_integer(oracle, "oracle", "grid_points", text, 12000);
        if (cfg.oracle.grid_points < 1)
            throw ConfigError("field 'oracle.grid_points' must be >= 1",
                              line_of_key(text, "grid_points"));
        if (oracle.contains("seeds")) {
            if (!oracle["seeds"].is_array() || oracle["seeds"].empty())
                throw ConfigError("field 'oracle.seeds' must be a nonempty array",
                                  line_of_key(text, "seeds"));
            cfg.oracle.seeds.clear();
            for (const auto& s : oracle["seeds"])
                cfg.oracle.seeds.push_back(s.get<std::uint64_t>());
        }
        cfg.oracle.mismatch_threshold =
            require_number(oracle, "oracle", "mismatch_threshold", text, 0.01);
    }

    if (doc.contains("output")) {
        const json& output = doc["output"];
        reject_unknown_keys(output, "output", {"directory", "formats"}, text);
        cfg.output.directory =
            require_string(output, "output", "directory", text, cfg.output.directory);
        if (output.contains("formats")) {
            cfg.output.formats.clear();
            for (const auto& f : output["formats"]) {
                const std::string fmt_name = f.get<std::string>();
                if (fmt_name != "json" && fmt_name != "svg" && fmt_name != "csv")
                    throw ConfigError("output format must be json|svg|csv",
                                      line_of_key(text, "formats"));
                cfg.output.formats.push_back(fmt_name);
            }
        }
    }

    // Defaults-resolved echo.
    json echo;
    echo["model"] = {{"family", cfg.family_kind}, {"dimension", cfg.dimension}};
    if (cfg.prior_is_gaussian) {
        echo["prior"] = {{"kind", "gaussian"},
                         {"mean", vector_to_json(cfg.prior_mean)},
                         {"scale", cfg.prior_scale}};
    } else {
        json shape = json::array(), values = json::array();
        for (int s : cfg.prior_table->shape) shape.push_back(s);
        for (double v : cfg.prior_table->values) values.push_back(v);
        echo["prior"] = {{"kind", "tabulated"},
                         {"box",
                          {{"lo", vector_to_json(cfg.prior_table->domain.lo)},
                           {"hi", vector_to_json(cfg.prior_table->domain.hi)}}},
                         {"shape", shape},
                         {"values", values}};
    }
    echo["truncation"] = {{"epsilon", cfg.truncation_epsilon}};
    echo["solver"] = {
        {"n", cfg.solver.n},
        {"init", init},
        {"seed", cfg.solver.seed},
        {"max_outer_iterations", cfg.solver.max_outer_iterations},
        {"i1_tolerance", cfg.solver.i1_tolerance},
        {"residual_tolerance", cfg.solver.residual_tolerance},
        {"restarts", cfg.solver.restarts},
        {"empty_cell_policy", policy},
        {"lloyd_warmup", cfg.solver.lloyd_warmup},
        {"quadrature",
         {{"cell_tol", cfg.solver.quadrature.cell_tol},
          {"max_refine_depth", cfg.solver.quadrature.max_refine_depth},
          {"grid_per_axis", cfg.solver.quadrature.grid_per_axis}}}};
    if (cfg.solver.user_init) {
        echo["solver"]["init_assertions"] = matrix_to_json(cfg.solver.user_init->assertions);
        echo["solver"]["init_coding_probs"] = vector_to_json(cfg.solver.user_init->coding_probs);
    }
    json seeds = json::array();
    for (auto s : cfg.oracle.seeds) seeds.push_back(s);
    echo["oracle"] = {{"grid_points", cfg.oracle.grid_points},
                      {"seeds", seeds},
                      {"mismatch_threshold", cfg.oracle.mismatch_threshold}};
    json formats = json::array();
    for (const auto& f : cfg.output.formats) formats.push_back(f);
    echo["output"] = {{"directory", cfg.output.directory}, {"formats", formats}};
    cfg.echo = std::move(echo);
    return cfg;
}

ProblemConfig load_problem_config(const std::string& path) {
    return parse_problem_config(read_text_file(path));
}

json result_to_json(const SolveResult& result, const ProblemConfig& config,
                    const MarginalDensity& marginal) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["config"] = config.echo;
    doc["model"] = config.echo["model"];
    doc["prior"] = config.echo["prior"];
    doc["n"] = result.estimator.n();
    doc["assertions"] = matrix_to_json(result.estimator.assertions);
    doc["coding_probabilities"] = vector_to_json(result.estimator.coding_probs);
    doc["I1"] = result.i1;
    doc["C"] = result.constant_c;
    doc["residual_norm"] = result.residual_norm;
    doc["converged"] = result.converged;
    doc["restart_index"] = result.restart_index;
    json trace = json::array();
    for (double v : result.trace) trace.push_back(v);
    doc["trace"] = trace;
    doc["diagnostics"] = {{"empty_cell_events", result.diagnostics.empty_cell_events},
                          {"quadrature_warnings", result.diagnostics.quadrature_warnings},
                          {"lloyd_fallbacks", result.diagnostics.lloyd_fallbacks},
                          {"iterations", result.diagnostics.iterations},
                          {"saddle_rejected", result.diagnostics.saddle_rejected}};
    doc["truncation"] = {{"box",
                          {{"lo", vector_to_json(marginal.box().lo)},
                           {"hi", vector_to_json(marginal.box().hi)}}},
                         {"captured_mass", marginal.captured_mass()}};
    return doc;
}

LoadedResult result_from_json(const json& doc) {
    if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != kSchemaVersion)
        throw ConfigError("result document has an unsupported schema_version");
    LoadedResult loaded;
    loaded.config = parse_problem_config(doc.at("config").dump());
    SolveResult& result = loaded.result;
    const json& rows = doc.at("assertions");
    const int n = doc.at("n").get<int>();
    if (static_cast<int>(rows.size()) != n)
        throw ConfigError("result document: assertion count differs from n");
    result.estimator.assertions.resize(n, loaded.config.dimension);
    for (int r = 0; r < n; ++r)
        result.estimator.assertions.row(r) = vector_from_json(rows[r]).transpose();
    result.estimator.coding_probs = vector_from_json(doc.at("coding_probabilities"));
    result.i1 = doc.at("I1").get<double>();
    result.constant_c = doc.at("C").get<double>();
    result.residual_norm = doc.at("residual_norm").get<double>();
    result.converged = doc.at("converged").get<bool>();
    result.restart_index = doc.value("restart_index", 0);
    if (doc.contains("trace"))
        for (const auto& v : doc["trace"]) result.trace.push_back(v.get<double>());
    return loaded;
}

json geometry_to_json(const Partition& partition) {
    json doc;
    doc["schema_version"] = kSchemaVersion;
    json cells = json::array();
    for (int i = 0; i < partition.n(); ++i) {
        json cell;
        cell["index"] = i;
        cell["q"] = partition.estimator().coding_probs[i];
        cell["theta"] = vector_to_json(partition.estimator().assertions.row(i).transpose());
        cell["empty"] = partition.empty_cell(i);
        if (partition.dim() == 2) {
            json verts = json::array();
            if (!partition.empty_cell(i))
                for (const auto& v : partition.polygon(i).vertices)
                    verts.push_back(json::array({v.x(), v.y()}));
            cell["vertices"] = verts;
        } else if (partition.dim() == 1) {
            const auto [lo, hi] = partition.interval(i);
            cell["interval"] = json::array({lo, hi});
        }
        cells.push_back(std::move(cell));
    }
    doc["cells"] = cells;
    return doc;
}

std::string to_stable_string(const json& doc) { return doc.dump(2) + "\n"; }

std::string partition_svg(const Partition& partition, int width) {
    const Box& box = partition.box();
    const SvgFrame frame = SvgFrame::fit(box, width, 20);
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << frame.width << "\" height=\""
        << frame.height << "\" viewBox=\"0 0 " << frame.width << " " << frame.height << "\">\n";
    svg << "<rect width=\"" << frame.width << "\" height=\"" << frame.height
        << "\" fill=\"#ffffff\"/>\n";

    if (partition.dim() == 2) {
        for (int i = 0; i < partition.n(); ++i) {
            if (partition.empty_cell(i)) continue;
            svg << "<polygon points=\"";
            const auto& verts = partition.polygon(i).vertices;
            for (size_t k = 0; k < verts.size(); ++k) {
                if (k) svg << ' ';
                svg << fmt(frame.px(verts[k].x()), 2) << ',' << fmt(frame.py(verts[k].y()), 2);
            }
            svg << "\" fill=\"" << kColorTable[i % kColorCount]
                << "\" fill-opacity=\"0.55\" stroke=\"none\"/>\n";
        }
        for (const Face& face : partition.shared_faces()) {
            svg << "<line x1=\"" << fmt(frame.px(face.a[0]), 2) << "\" y1=\""
                << fmt(frame.py(face.a[1]), 2) << "\" x2=\"" << fmt(frame.px(face.b[0]), 2)
                << "\" y2=\"" << fmt(frame.py(face.b[1]), 2)
                << "\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
        }
    } else if (partition.dim() == 1) {
        const double y0 = frame.margin, y1 = frame.height - frame.margin;
        for (int i = 0; i < partition.n(); ++i) {
            if (partition.empty_cell(i)) continue;
            const auto [lo, hi] = partition.interval(i);
            svg << "<rect x=\"" << fmt(frame.px(lo), 2) << "\" y=\"" << fmt(y0, 2)
                << "\" width=\"" << fmt((hi - lo) * frame.scale, 2) << "\" height=\""
                << fmt(y1 - y0, 2) << "\" fill=\"" << kColorTable[i % kColorCount]
                << "\" fill-opacity=\"0.55\" stroke=\"none\"/>\n";
        }
        for (const Face& face : partition.shared_faces()) {
            svg << "<line x1=\"" << fmt(frame.px(face.a[0]), 2) << "\" y1=\"" << fmt(y0, 2)
                << "\" x2=\"" << fmt(frame.px(face.a[0]), 2) << "\" y2=\"" << fmt(y1, 2)
                << "\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
        }
    }
    svg << "<rect x=\"" << frame.margin << "\" y=\"" << frame.margin << "\" width=\""
        << frame.width - 2 * frame.margin << "\" height=\"" << frame.height - 2 * frame.margin
        << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string overlay_svg(const GridProblem& problem, const Coloring& coloring,
                        const Partition& predicted, int width) {
    const Box& box = problem.box;
    const SvgFrame frame = SvgFrame::fit(box, width, 20);
    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << frame.width << "\" height=\""
        << frame.height << "\" viewBox=\"0 0 " << frame.width << " " << frame.height << "\">\n";
    svg << "<rect width=\"" << frame.width << "\" height=\"" << frame.height
        << "\" fill=\"#ffffff\"/>\n";

    const double radius =
        std::max(0.8, 0.42 * problem.spacing.minCoeff() * frame.scale);
    const int d = box.dim();
    for (long k = 0; k < problem.size(); ++k) {
        const double x = problem.points(k, 0);
        const double y = d > 1 ? problem.points(k, 1) : 0.25 * box.widths()[0] * 0.5;
        svg << "<circle cx=\"" << fmt(frame.px(x), 2) << "\" cy=\"" << fmt(frame.py(y), 2)
            << "\" r=\"" << fmt(radius, 2) << "\" fill=\""
            << kColorTable[coloring.label(k) % kColorCount] << "\"/>\n";
    }
    if (predicted.dim() == 2) {
        for (const Face& face : predicted.shared_faces()) {
            svg << "<line x1=\"" << fmt(frame.px(face.a[0]), 2) << "\" y1=\""
                << fmt(frame.py(face.a[1]), 2) << "\" x2=\"" << fmt(frame.px(face.b[0]), 2)
                << "\" y2=\"" << fmt(frame.py(face.b[1]), 2)
                << "\" stroke=\"#000000\" stroke-width=\"1.8\"/>\n";
        }
    }
    svg << "<rect x=\"" << frame.margin << "\" y=\"" << frame.margin << "\" width=\""
        << frame.width - 2 * frame.margin << "\" height=\"" << frame.height - 2 * frame.margin
        << "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n";
    svg << "</svg>\n";
    return svg.str();
}

std::string points_csv(const GridProblem& problem, const Coloring& coloring) {
    std::ostringstream out;
    const int d = static_cast<int>(problem.points.cols());
    for (int k = 0; k < d; ++k) out << 'x' << (k + 1) << ',';
    out << "weight,color\n";
    for (long row = 0; row < problem.size(); ++row) {
        for (int k = 0; k < d; ++k) out << fmt_full(problem.points(row, k)) << ',';
        out << fmt_full(problem.weights[row]) << ',' << (coloring.label(row) + 1) << '\n';
    }
    return out.str();
}

void write_text_file(const std::string& path, const std::string& contents) {
    std::ofstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open for writing: " + path);
    file << contents;
    if (!file) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) throw std::runtime_error("cannot open for reading: " + path);
    std::ostringstream buf;
    buf << file.rdbuf();
    return buf.str();
}

}  // namespace smml
