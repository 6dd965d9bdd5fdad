#include "smml/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace smml {

namespace {

GaussRule compute_gauss_legendre(int order) {
    if (order < 1) throw std::invalid_argument("gauss_legendre: order must be >= 1");
    GaussRule rule;
    rule.nodes.resize(order);
    rule.weights.resize(order);
    const int m = (order + 1) / 2;
    for (int i = 0; i < m; ++i) {
        // Chebyshev-based initial guess, then Newton on P_n.
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = order * (x * p0 - p1) / (x * x - 1.0);
            const double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        rule.nodes[i] = -x;
        rule.nodes[order - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * pp * pp);
        rule.weights[i] = w;
        rule.weights[order - 1 - i] = w;
    }
    return rule;
}

}  // namespace

const GaussRule& gauss_legendre(int order) {
    static std::map<int, GaussRule> cache;
    static std::mutex mutex;
    std::lock_guard lock(mutex);
    auto it = cache.find(order);
    if (it == cache.end()) it = cache.emplace(order, compute_gauss_legendre(order)).first;
    return it->second;
}

double integrate_interval(const ScalarFn1& f, double a, double b, int order) {
    const GaussRule& rule = gauss_legendre(order);
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (int i = 0; i < order; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return half * sum;
}

namespace {

double adaptive_interval_impl(const ScalarFn1& f, double a, double b, double whole, double tol,
                              double& err_acc, int depth, int max_depth) {
    const double mid = 0.5 * (a + b);
    const double left = integrate_interval(f, a, mid);
    const double right = integrate_interval(f, mid, b);
    const double gap = std::abs(left + right - whole);
    const double stop_tol = std::max(tol, 5e-15 * (std::abs(left + right) + 1e-3));
    if (gap < stop_tol || depth >= max_depth) {
        err_acc += gap;
        return left + right;
    }
    return adaptive_interval_impl(f, a, mid, left, 0.5 * stop_tol, err_acc, depth + 1,
                                  max_depth) +
           adaptive_interval_impl(f, mid, b, right, 0.5 * stop_tol, err_acc, depth + 1,
                                  max_depth);
}

}  // namespace

double integrate_interval_adaptive(const ScalarFn1& f, double a, double b, double tol,
                                   double* err_out, int max_depth) {
    if (!(b >= a)) throw std::invalid_argument("integrate_interval_adaptive: b < a");
    if (b == a) {
        if (err_out) *err_out = 0.0;
        return 0.0;
    }
    double err = 0.0;
    const double whole = integrate_interval(f, a, b);
    const double value = adaptive_interval_impl(f, a, b, whole, tol, err, 0, max_depth);
    if (err_out) *err_out = err;
    return value;
}

double integrate_box(const ScalarField& f, const Box& box, int panels, int order) {
    if (!box.bounded()) throw std::invalid_argument("integrate_box: box must be bounded");
    const int d = box.dim();
    const GaussRule& rule = gauss_legendre(order);
    const int per_axis = panels * order;

    // Precompute per-axis node/weight arrays.
    std::vector<std::vector<double>> nodes(d), weights(d);
    for (int k = 0; k < d; ++k) {
        nodes[k].resize(per_axis);
        weights[k].resize(per_axis);
        const double panel_w = (box.hi[k] - box.lo[k]) / panels;
        for (int p = 0; p < panels; ++p) {
            const double a = box.lo[k] + p * panel_w;
            const double mid = a + 0.5 * panel_w;
            for (int i = 0; i < order; ++i) {
                nodes[k][p * order + i] = mid + 0.5 * panel_w * rule.nodes[i];
                weights[k][p * order + i] = 0.5 * panel_w * rule.weights[i];
            }
        }
    }

    VectorXd x(d);
    std::vector<int> idx(d, 0);
    double total = 0.0;
    while (true) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            x[k] = nodes[k][idx[k]];
            w *= weights[k][idx[k]];
        }
        total += w * f(x);
        int k = 0;
        while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
        if (k == d) break;
    }
    return total;
}

double integrate_box_adaptive(const ScalarField& f, const Box& box, double tol, double* err_out,
                              int max_panels) {
    int panels = 4;
    double prev = integrate_box(f, box, panels);
    while (panels < max_panels) {
        panels *= 2;
        const double cur = integrate_box(f, box, panels);
        const double gap = std::abs(cur - prev);
        if (gap < tol) {
            if (err_out) *err_out = gap;
            return cur;
        }
        prev = cur;
    }
    if (err_out) *err_out = std::numeric_limits<double>::quiet_NaN();
    return prev;
}

std::vector<double> simpson_weights(int count, double length) {
    if (count < 3 || count % 2 == 0)
        throw std::invalid_argument("simpson_weights: node count must be odd and >= 3");
    const double h = length / (count - 1);
    std::vector<double> w(count, 0.0);
    for (int i = 0; i + 2 < count; i += 2) {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
    }
    return w;
}

const TriangleRule& triangle_rule_deg7() {
    static const TriangleRule rule = [] {
        TriangleRule r;
        // 13-point symmetric rule (Strang-Fix/Dunavant), exact through degree 7.
        const double w1 = -0.149570044467670;
        const double w2 = 0.175615257433204;
        const double w3 = 0.053347235608839;
        const double w4 = 0.077113760890257;
        const double a2 = 0.260345966079038, b2 = 0.479308067841923;
        const double a3 = 0.065130102902216, b3 = 0.869739794195568;
        const double a4 = 0.312865496004875, b4 = 0.638444188569809, c4 = 0.048690315425316;
        int row = 0;
        auto add = [&](double x, double y, double z, double w) {
            r.bary.row(row) << x, y, z;
            r.weights[row] = w;
            ++row;
        };
        add(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, w1);
        add(a2, a2, b2, w2);
        add(a2, b2, a2, w2);
        add(b2, a2, a2, w2);
        add(a3, a3, b3, w3);
        add(a3, b3, a3, w3);
        add(b3, a3, a3, w3);
        add(a4, b4, c4, w4);
        add(a4, c4, b4, w4);
        add(b4, a4, c4, w4);
        add(b4, c4, a4, w4);
        add(c4, a4, b4, w4);
        add(c4, b4, a4, w4);
        return r;
    }();
    return rule;
}

double integrate_triangle(const ScalarField& f, const Eigen::Vector2d& a, const Eigen::Vector2d& b,
                          const Eigen::Vector2d& c) {
    const TriangleRule& rule = triangle_rule_deg7();
    const double area =
        0.5 * std::abs((b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y()));
    if (area == 0.0) return 0.0;
    double sum = 0.0;
    VectorXd x(2);
    for (int i = 0; i < 13; ++i) {
        const auto bc = rule.bary.row(i);
        x[0] = bc[0] * a.x() + bc[1] * b.x() + bc[2] * c.x();
        x[1] = bc[0] * a.y() + bc[1] * b.y() + bc[2] * c.y();
        sum += rule.weights[i] * f(x);
    }
    return area * sum;
}

namespace {

double refined_triangle_impl(const ScalarField& f, const Eigen::Vector2d& a,
                             const Eigen::Vector2d& b, const Eigen::Vector2d& c, double parent,
                             double tol, double& err_acc, int depth, int max_depth) {
    const Eigen::Vector2d ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
    const double v0 = integrate_triangle(f, a, ab, ca);
    const double v1 = integrate_triangle(f, ab, b, bc);
    const double v2 = integrate_triangle(f, ca, bc, c);
    const double v3 = integrate_triangle(f, ab, bc, ca);
    const double children = v0 + v1 + v2 + v3;
    const double gap = std::abs(children - parent);
    // Relative floor: once the two-level gap is at the rounding scale of the
    // value itself, further splitting only accumulates noise.
    const double stop_tol = std::max(tol, 5e-14 * (std::abs(children) + 1e-3));
    if (gap < stop_tol || depth >= max_depth) {
        err_acc += gap;
        return children;
    }
    const double t = 0.25 * stop_tol;
    return refined_triangle_impl(f, a, ab, ca, v0, t, err_acc, depth + 1, max_depth) +
           refined_triangle_impl(f, ab, b, bc, v1, t, err_acc, depth + 1, max_depth) +
           refined_triangle_impl(f, ca, bc, c, v2, t, err_acc, depth + 1, max_depth) +
           refined_triangle_impl(f, ab, bc, ca, v3, t, err_acc, depth + 1, max_depth);
}

}  // namespace

double integrate_triangle_refined(const ScalarField& f, const Eigen::Vector2d& a,
                                  const Eigen::Vector2d& b, const Eigen::Vector2d& c, double tol,
                                  double* err_out, int max_depth) {
    double err = 0.0;
    const double parent = integrate_triangle(f, a, b, c);
    const double value = refined_triangle_impl(f, a, b, c, parent, tol, err, 0, max_depth);
    if (err_out) *err_out = err;
    return value;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_tail_quantile(double tail) {
    if (!(tail > 0.0 && tail < 0.5))
        throw std::invalid_argument("normal_tail_quantile: tail must be in (0, 0.5)");
    // Newton on erfc with a log-tail initial guess; the derivative is the
    // normal pdf which stays well-scaled for the tails we use (>= 1e-18).
    double k = std::sqrt(-2.0 * std::log(tail));
    for (int it = 0; it < 60; ++it) {
        const double fv = normal_cdf(-k) - tail;
        const double pdf = std::exp(-0.5 * k * k) / std::sqrt(2.0 * std::numbers::pi);
        if (pdf == 0.0) break;
        const double step = fv / pdf;
        k += step;
        if (std::abs(step) < 1e-14 * (1.0 + std::abs(k))) break;
    }
    return k;
}

}  // namespace smml
