#include "smml/variation.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace smml {

namespace {

constexpr int kFaceOrder = 16;
constexpr int kFacePanels = 8;
constexpr int kNormalOrder = 8;

/// Distance from `origin` along `dir` (unit) to the first crossing of a
/// polygon edge, ignoring crossings closer than `skip`.
double ray_clearance(const Polygon2& poly, const Eigen::Vector2d& origin,
                     const Eigen::Vector2d& dir, double skip) {
    double best = std::numeric_limits<double>::infinity();
    const size_t count = poly.vertices.size();
    for (size_t k = 0; k < count; ++k) {
        const Eigen::Vector2d& p = poly.vertices[k];
        const Eigen::Vector2d& q = poly.vertices[(k + 1) % count];
        const Eigen::Vector2d e = q - p;
        const double det = dir.x() * (-e.y()) - dir.y() * (-e.x());
        if (std::abs(det) < 1e-300) continue;
        const Eigen::Vector2d rhs = p - origin;
        const double u = (rhs.x() * (-e.y()) - rhs.y() * (-e.x())) / det;
        const double v = (dir.x() * rhs.y() - dir.y() * rhs.x()) / det;
        if (u > skip && v >= -1e-12 && v <= 1.0 + 1e-12) best = std::min(best, u);
    }
    return best;
}

double polygon_mass(const Polygon2& poly, const ScalarField& rho, const QuadratureOptions& opts,
                    Eigen::Vector2d* moment) {
    if (poly.empty()) {
        if (moment) moment->setZero();
        return 0.0;
    }
    const Eigen::Vector2d c = poly.centroid();
    double mass = 0.0;
    Eigen::Vector2d mom = Eigen::Vector2d::Zero();
    const size_t count = poly.vertices.size();
    for (size_t k = 0; k < count; ++k) {
        const Eigen::Vector2d& a = poly.vertices[k];
        const Eigen::Vector2d& b = poly.vertices[(k + 1) % count];
        mass += integrate_triangle_refined(rho, c, a, b, opts.cell_tol, nullptr,
                                           opts.max_refine_depth);
        for (int axis = 0; axis < 2; ++axis) {
            auto fx = [&](const VectorXd& p) { return p[axis] * rho(p); };
            mom[axis] += integrate_triangle_refined(fx, c, a, b, opts.cell_tol, nullptr,
                                                    opts.max_refine_depth);
        }
    }
    if (moment) *moment = mom;
    return mass;
}

}  // namespace

VariationContext::VariationContext(const Estimator& est, const MarginalDensity& marginal,
                                   const ExponentialFamily& family, const DeformationSpec& spec,
                                   const QuadratureOptions& opts)
    : spec_(spec), marginal_(&marginal), family_(&family) {
    if (family.dim() != 2)
        throw std::invalid_argument("variation: deformations are implemented for d = 2");
    if (!(spec.sub_lo >= 0.0 && spec.sub_lo < spec.sub_hi && spec.sub_hi <= 1.0))
        throw std::invalid_argument("variation: sub-segment fractions must satisfy 0<=lo<hi<=1");
    if (!(spec.amplitude > 0.0))
        throw std::invalid_argument("variation: bump amplitude must be positive");

    const Box& box = marginal.box();
    const Partition partition = build_cells(est, family, box);
    const int n = est.n();
    const int i = spec.cell_i, j = spec.cell_j;
    if (i < 0 || j < 0 || i >= n || j >= n || i == j)
        throw std::invalid_argument("variation: bad cell pair");

    // Separating half-plane of cell i against j, optionally translated along
    // the unit normal (which points from cell i into cell j).
    const AffineScores& scores = partition.scores();
    Eigen::Vector2d sep_normal =
        (scores.theta().row(i) - scores.theta().row(j)).transpose().head<2>();
    double sep_offset = scores.offset()[j] - scores.offset()[i];
    normal_ = -sep_normal.normalized();  // theta_j - theta_i direction
    // Translating the plane {sep_normal . x = c} by delta along normal_
    // changes its offset by delta * (sep_normal . normal_) = -delta |sep_normal|.
    sep_offset -= spec.face_shift * sep_normal.norm();

    // Build the two cells against the (possibly shifted) plane.
    auto build_cell = [&](int owner) {
        Polygon2 poly = box_polygon(box);
        for (int k = 0; k < n && !poly.empty(); ++k) {
            if (k == owner) continue;
            HalfPlane hp;
            if ((owner == i && k == j) || (owner == j && k == i)) {
                hp.normal = owner == i ? sep_normal : Eigen::Vector2d(-sep_normal);
                hp.offset = owner == i ? sep_offset : -sep_offset;
            } else {
                hp.normal =
                    (scores.theta().row(owner) - scores.theta().row(k)).transpose().head<2>();
                hp.offset = scores.offset()[k] - scores.offset()[owner];
            }
            poly = clip(poly, hp);
        }
        return poly;
    };
    const Polygon2 poly_i = build_cell(i);
    const Polygon2 poly_j = build_cell(j);
    if (poly_i.empty() || poly_j.empty())
        throw std::invalid_argument("variation: a deformed cell vanished (shift too large?)");

    // Shared segment of the shifted plane inside cell i.
    std::vector<HalfPlane> others;
    for (int k = 0; k < n; ++k) {
        if (k == i || k == j) continue;
        HalfPlane hp;
        hp.normal = (scores.theta().row(i) - scores.theta().row(k)).transpose().head<2>();
        hp.offset = scores.offset()[k] - scores.offset()[i];
        others.push_back(hp);
    }
    const auto segment = clip_line_to_region(sep_normal, sep_offset, others, box, 1e-12);
    if (!segment) throw std::invalid_argument("variation: cells share no face");
    const Eigen::Vector2d full_a = segment->first;
    const Eigen::Vector2d full_b = segment->second;
    face_a_ = full_a + spec.sub_lo * (full_b - full_a);
    face_b_ = full_a + spec.sub_hi * (full_b - full_a);

    // Collar clearance: shortest exit distance from D into either cell along
    // the normal, sampled along the sub-segment.
    collar_ = std::numeric_limits<double>::infinity();
    const int probes = 33;
    for (int s = 0; s <= probes; ++s) {
        const double t = double(s) / probes;
        const Eigen::Vector2d p = face_a_ + t * (face_b_ - face_a_);
        const double skip = 1e-9 * box.widths().norm();
        collar_ = std::min(collar_, ray_clearance(poly_j, p, normal_, skip));
        collar_ = std::min(collar_, ray_clearance(poly_i, p, -normal_, skip));
    }
    if (!std::isfinite(collar_) || collar_ <= 0.0)
        throw std::invalid_argument("variation: could not establish a collar around the face");

    // Base masses/moments: unshifted cells from the partition, the pair i, j
    // from the rebuilt polygons.
    QuadratureOptions quad = opts;
    auto rho = [&](const VectorXd& x) { return marginal.normalized_eval(x); };
    const CellIntegrals base = cell_integrals(partition, marginal, quad);
    mass_ = base.mass;
    moment_ = base.moment;
    Eigen::Vector2d m_i, m_j;
    mass_[i] = polygon_mass(poly_i, rho, quad, &m_i);
    mass_[j] = polygon_mass(poly_j, rho, quad, &m_j);
    moment_.row(i) = m_i.transpose();
    moment_.row(j) = m_j.transpose();
    total_mass_ = mass_.sum();

    params_.assertions.resize(n, 2);
    params_.coding_probs.resize(n);
    for (int k = 0; k < n; ++k) {
        if (!(mass_[k] > 1e-12))
            throw std::invalid_argument("variation: empty cell in the base partition");
        params_.coding_probs[k] = mass_[k] / total_mass_;
        params_.assertions.row(k) =
            family.mu_inverse(moment_.row(k).transpose() / mass_[k]).transpose();
    }
    constant_c_ = carrier_constant(marginal, family);
}

double VariationContext::bump(double s) const {
    const double len = face_length();
    if (s <= 0.0 || s >= len) return 0.0;
    const double z = s / len - 0.5;  // in (-1/2, 1/2)
    const double c = std::cos(std::numbers::pi * z);
    return spec_.amplitude * c * c;
}

Eigen::Vector2d VariationContext::face_point(double s) const {
    const Eigen::Vector2d tangent = (face_b_ - face_a_).normalized();
    return face_a_ + s * tangent;
}

double VariationContext::face_integral(
    const std::function<double(double, const VectorXd&)>& f) const {
    const double len = face_length();
    const GaussRule& rule = gauss_legendre(kFaceOrder);
    const double panel = len / kFacePanels;
    double total = 0.0;
    VectorXd x(2);
    for (int p = 0; p < kFacePanels; ++p) {
        const double mid = (p + 0.5) * panel;
        for (int q = 0; q < kFaceOrder; ++q) {
            const double s = mid + 0.5 * panel * rule.nodes[q];
            const Eigen::Vector2d pt = face_point(s);
            x << pt.x(), pt.y();
            total += 0.5 * panel * rule.weights[q] * f(s, x);
        }
    }
    return total;
}

double VariationContext::wedge_integral(const ScalarField& rho, double t) const {
    const GaussRule& inner = gauss_legendre(kNormalOrder);
    return face_integral([&](double s, const VectorXd& x) {
        const double reach = t * bump(s);
        if (reach == 0.0) return 0.0;
        double sum = 0.0;
        VectorXd p(2);
        for (int q = 0; q < kNormalOrder; ++q) {
            const double u = 0.5 * reach * (1.0 + inner.nodes[q]);
            p[0] = x[0] + u * normal_.x();
            p[1] = x[1] + u * normal_.y();
            sum += 0.5 * reach * inner.weights[q] * rho(p);
        }
        return sum;
    });
}

Eigen::Vector2d VariationContext::wedge_moment(const ScalarField& rho, double t) const {
    Eigen::Vector2d out;
    for (int axis = 0; axis < 2; ++axis) {
        auto fx = [&](const VectorXd& p) { return p[axis] * rho(p); };
        out[axis] = wedge_integral(fx, t);
    }
    return out;
}

double VariationContext::deformed_i1(double t) const {
    if (std::abs(t) * spec_.amplitude >= collar_)
        throw std::invalid_argument("variation: flow displacement escapes the collar");
    auto rho = [this](const VectorXd& x) { return marginal_->normalized_eval(x); };
    const double dm = wedge_integral(rho, t);
    const Eigen::Vector2d ds = wedge_moment(rho, t);

    const int n = params_.n();
    const int i = spec_.cell_i, j = spec_.cell_j;
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        double mass = mass_[k];
        VectorXd moment = moment_.row(k).transpose();
        if (k == i) {
            mass += dm;
            moment += ds;
        } else if (k == j) {
            mass -= dm;
            moment -= ds;
        }
        const double q = mass / total_mass_;
        const VectorXd theta = family_->mu_inverse(moment / mass);
        sum += q * (std::log(q) + theta.dot(family_->grad_psi(theta)) - family_->psi(theta));
    }
    return constant_c_ - sum;
}

double first_variation_formula(const VariationContext& ctx) {
    const AffineScores scores(ctx.params(), ctx.family());
    const int i = ctx.cell_i(), j = ctx.cell_j();
    const double integral = ctx.face_integral([&](double s, const VectorXd& x) {
        return ctx.marginal().normalized_eval(x) * ctx.bump(s) *
               (scores.score(i, x) - scores.score(j, x));
    });
    return -integral;
}

double second_variation_formula(const VariationContext& ctx, SecondVariationTerms* terms_out) {
    const AffineScores scores(ctx.params(), ctx.family());
    const int i = ctx.cell_i(), j = ctx.cell_j();
    const Estimator& params = ctx.params();
    const VectorXd theta_i = params.assertions.row(i).transpose();
    const VectorXd theta_j = params.assertions.row(j).transpose();
    const VectorXd mu_i = ctx.family().grad_psi(theta_i);
    const VectorXd mu_j = ctx.family().grad_psi(theta_j);
    VectorXd n2(2);
    n2 << ctx.normal().x(), ctx.normal().y();

    SecondVariationTerms terms;
    // g is constant along N, so div(g rho N) = g (N . grad rho).
    terms.divergence_term = ctx.face_integral([&](double s, const VectorXd& x) {
        const double g = ctx.bump(s);
        const double normal_drho = n2.dot(ctx.marginal().normalized_grad(x));
        return (scores.score(i, x) - scores.score(j, x)) * g * g * normal_drho;
    });
    terms.int_g_rho = ctx.face_integral([&](double s, const VectorXd& x) {
        return ctx.bump(s) * ctx.marginal().normalized_eval(x);
    });
    terms.int_g2_rho = ctx.face_integral([&](double s, const VectorXd& x) {
        const double g = ctx.bump(s);
        return g * g * ctx.marginal().normalized_eval(x);
    });
    const double qi = params.coding_probs[i];
    const double qj = params.coding_probs[j];
    terms.mass_term = (1.0 / qi + 1.0 / qj) * terms.int_g_rho * terms.int_g_rho;

    terms.delta_i = VectorXd::Zero(2);
    terms.delta_j = VectorXd::Zero(2);
    for (int axis = 0; axis < 2; ++axis) {
        terms.delta_i[axis] = ctx.face_integral([&](double s, const VectorXd& x) {
            return (x[axis] - mu_i[axis]) * ctx.bump(s) * ctx.marginal().normalized_eval(x);
        });
        terms.delta_j[axis] = ctx.face_integral([&](double s, const VectorXd& x) {
            return (x[axis] - mu_j[axis]) * ctx.bump(s) * ctx.marginal().normalized_eval(x);
        });
    }
    const MatrixXd qi_inv = ctx.family().hess_psi(theta_i).inverse();
    const MatrixXd qj_inv = ctx.family().hess_psi(theta_j).inverse();
    terms.delta_term = terms.delta_i.dot(qi_inv * terms.delta_i) / qi +
                       terms.delta_j.dot(qj_inv * terms.delta_j) / qj;

    terms.normal_jump_term = terms.int_g2_rho * n2.dot(theta_i - theta_j);

    if (terms_out) *terms_out = terms;
    return -terms.total();
}

VariationReport verify_variation(const VariationContext& ctx, double step_hint) {
    VariationReport report;
    report.id_formula = first_variation_formula(ctx);
    report.idd_formula = second_variation_formula(ctx, &report.terms);

    const double h = step_hint > 0.0 ? step_hint : 0.2 * ctx.collar() / ctx.amplitude();
    report.step = h;
    report.step_refined = 0.5 * h;

    auto central_first = [&](double step) {
        return (ctx.deformed_i1(step) - ctx.deformed_i1(-step)) / (2.0 * step);
    };
    auto central_second = [&](double step) {
        return (ctx.deformed_i1(step) - 2.0 * ctx.deformed_i1(0.0) + ctx.deformed_i1(-step)) /
               (step * step);
    };

    const double d1 = central_first(h);
    const double d1r = central_first(0.5 * h);
    report.id_numeric = (4.0 * d1r - d1) / 3.0;
    report.id_error_estimate = std::abs(report.id_numeric - d1r);

    const double d2 = central_second(h);
    const double d2r = central_second(0.5 * h);
    report.idd_numeric = (4.0 * d2r - d2) / 3.0;
    report.idd_error_estimate = std::abs(report.idd_numeric - d2r);
    return report;
}

FlowLemmaReport flow_lemma_check(const VariationContext& ctx, int region, TestDensity rho_kind) {
    if (region != 1 && region != 2)
        throw std::invalid_argument("flow_lemma_check: region must be 1 or 2");
    const double sign = region == 1 ? 1.0 : -1.0;

    ScalarField rho;
    std::function<VectorXd(const VectorXd&)> grad_rho;
    switch (rho_kind) {
        case TestDensity::One:
            rho = [](const VectorXd&) { return 1.0; };
            grad_rho = [](const VectorXd&) { return VectorXd::Zero(2).eval(); };
            break;
        case TestDensity::Coordinate:
            rho = [](const VectorXd& x) { return x[0]; };
            grad_rho = [](const VectorXd&) {
                VectorXd g = VectorXd::Zero(2);
                g[0] = 1.0;
                return g;
            };
            break;
        case TestDensity::Marginal:
            rho = [&ctx](const VectorXd& x) { return ctx.marginal().normalized_eval(x); };
            grad_rho = [&ctx](const VectorXd& x) { return ctx.marginal().normalized_grad(x); };
            break;
    }

    VectorXd n2(2);
    n2 << ctx.normal().x(), ctx.normal().y();

    FlowLemmaReport report;
    report.first_formula = sign * ctx.face_integral([&](double s, const VectorXd& x) {
        return ctx.bump(s) * rho(x);
    });
    report.second_formula = sign * ctx.face_integral([&](double s, const VectorXd& x) {
        const double g = ctx.bump(s);
        return g * g * n2.dot(grad_rho(x));
    });

    const double h = 0.2 * ctx.collar() / ctx.amplitude();
    auto sweep = [&](double t) { return sign * ctx.wedge_integral(rho, t); };
    auto first_fd = [&](double step) { return (sweep(step) - sweep(-step)) / (2.0 * step); };
    auto second_fd = [&](double step) {
        return (sweep(step) + sweep(-step)) / (step * step);  // c(0) cancels
    };
    const double f1 = first_fd(h), f1r = first_fd(0.5 * h);
    const double f2 = second_fd(h), f2r = second_fd(0.5 * h);
    report.first_numeric = (4.0 * f1r - f1) / 3.0;
    report.second_numeric = (4.0 * f2r - f2) / 3.0;
    report.first_gap = std::abs(report.first_numeric - report.first_formula);
    report.second_gap = std::abs(report.second_numeric - report.second_formula);
    return report;
}

}  // namespace smml
