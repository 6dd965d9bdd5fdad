#include "smml/prior.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "smml/quadrature.hpp"

namespace smml {

namespace {

Prior::NodeSet gaussian_nodes(const GaussianPrior& prior) {
    // Composite Gauss-Legendre over mean +- 8 scale per axis; 12 panels of an
    // 8-point rule integrate the Gaussian factor to ~1e-13.
    const int d = static_cast<int>(prior.mean.size());
    const int panels = 12, order = 8;
    const int per_axis = panels * order;
    const GaussRule& rule = gauss_legendre(order);

    std::vector<std::vector<double>> xs(d), ws(d);
    for (int k = 0; k < d; ++k) {
        const double lo = prior.mean[k] - 8.0 * prior.scale;
        const double panel_w = 16.0 * prior.scale / panels;
        xs[k].resize(per_axis);
        ws[k].resize(per_axis);
        for (int p = 0; p < panels; ++p) {
            const double mid = lo + (p + 0.5) * panel_w;
            for (int i = 0; i < order; ++i) {
                xs[k][p * order + i] = mid + 0.5 * panel_w * rule.nodes[i];
                ws[k][p * order + i] = 0.5 * panel_w * rule.weights[i];
            }
        }
    }

    long count = 1;
    for (int k = 0; k < d; ++k) count *= per_axis;
    Prior::NodeSet set;
    set.nodes.resize(count, d);
    set.weights.resize(count);
    const double norm =
        std::pow(2.0 * std::numbers::pi * prior.scale * prior.scale, -0.5 * d);
    std::vector<int> idx(d, 0);
    for (long row = 0; row < count; ++row) {
        double w = 1.0;
        double quad = 0.0;
        for (int k = 0; k < d; ++k) {
            const double t = xs[k][idx[k]];
            set.nodes(row, k) = t;
            w *= ws[k][idx[k]];
            const double z = (t - prior.mean[k]) / prior.scale;
            quad += z * z;
        }
        set.weights[row] = w * norm * std::exp(-0.5 * quad);
        int k = 0;
        while (k < d && ++idx[k] == per_axis) idx[k++] = 0;
    }
    return set;
}

Prior::NodeSet tabulated_nodes(const TabulatedPrior& table) {
    const int d = table.domain.dim();
    std::vector<std::vector<double>> axis_w(d);
    long count = 1;
    for (int k = 0; k < d; ++k) {
        axis_w[k] = simpson_weights(table.shape[k], table.domain.hi[k] - table.domain.lo[k]);
        count *= table.shape[k];
    }
    Prior::NodeSet set;
    set.nodes.resize(count, d);
    set.weights.resize(count);
    std::vector<int> idx(d, 0);
    for (long row = 0; row < count; ++row) {
        double w = 1.0;
        for (int k = 0; k < d; ++k) {
            const double step =
                (table.domain.hi[k] - table.domain.lo[k]) / (table.shape[k] - 1);
            set.nodes(row, k) = table.domain.lo[k] + idx[k] * step;
            w *= axis_w[k][idx[k]];
        }
        set.weights[row] = w * table.values[row];
        int k = 0;
        while (k < d && ++idx[k] == table.shape[k]) idx[k++] = 0;
    }
    return set;
}

}  // namespace

Prior::Prior(GaussianPrior gaussian) : spec_(std::move(gaussian)) {
    const auto& g = std::get<GaussianPrior>(spec_);
    if (g.mean.size() < 1) throw std::invalid_argument("prior: empty mean");
    if (!(g.scale > 0.0)) throw std::invalid_argument("prior: scale must be positive");
    nodes_ = gaussian_nodes(g);
}

Prior::Prior(TabulatedPrior table) : spec_(std::move(table)) {
    auto& t = std::get<TabulatedPrior>(spec_);
    const int d = t.domain.dim();
    if (static_cast<int>(t.shape.size()) != d)
        throw std::invalid_argument("prior: shape rank disagrees with domain");
    long count = 1;
    for (int k = 0; k < d; ++k) {
        if (t.shape[k] < 3 || t.shape[k] % 2 == 0)
            throw std::invalid_argument("prior: node counts must be odd and >= 3");
        count *= t.shape[k];
    }
    if (static_cast<long>(t.values.size()) != count)
        throw std::invalid_argument("prior: values size disagrees with shape");
    for (double v : t.values)
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("prior: density values must be finite and >= 0");

    nodes_ = tabulated_nodes(t);
    const double mass = nodes_.weights.sum();
    if (!(mass > 0.0)) throw std::invalid_argument("prior: tabulated density has zero mass");
    for (double& v : t.values) v /= mass;
    nodes_.weights /= mass;
}

int Prior::dim() const {
    if (is_gaussian()) return static_cast<int>(gaussian().mean.size());
    return table().domain.dim();
}

double Prior::density(const VectorXd& theta) const {
    if (is_gaussian()) {
        const auto& g = gaussian();
        const int d = dim();
        const double norm = std::pow(2.0 * std::numbers::pi * g.scale * g.scale, -0.5 * d);
        return norm * std::exp(-0.5 * (theta - g.mean).squaredNorm() / (g.scale * g.scale));
    }
    // Multilinear interpolation on the grid; zero outside the domain.
    const auto& t = table();
    const int d = t.domain.dim();
    if (!t.domain.contains(theta)) return 0.0;
    std::vector<int> base(d);
    std::vector<double> frac(d);
    for (int k = 0; k < d; ++k) {
        const double step = (t.domain.hi[k] - t.domain.lo[k]) / (t.shape[k] - 1);
        double pos = (theta[k] - t.domain.lo[k]) / step;
        int cell = static_cast<int>(std::floor(pos));
        cell = std::max(0, std::min(cell, t.shape[k] - 2));
        base[k] = cell;
        frac[k] = pos - cell;
    }
    double value = 0.0;
    for (int corner = 0; corner < (1 << d); ++corner) {
        double w = 1.0;
        long index = 0;
        for (int k = d - 1; k >= 0; --k) {  // axis 0 varies fastest in values[]
            const int bit = (corner >> k) & 1;
            w *= bit ? frac[k] : 1.0 - frac[k];
            index = index * t.shape[k] + (base[k] + bit);
        }
        value += w * t.values[index];
    }
    return value;
}

}  // namespace smml
