#pragma once

#include <Eigen/Dense>

#include "smml/cell_quadrature.hpp"
#include "smml/marginal.hpp"
#include "smml/partition.hpp"
#include "smml/solver.hpp"

namespace smml {

/// A boundary deformation: a sub-segment D of the face shared by two cells,
/// carrying a cosine-squared bump profile that is extended constantly along
/// the (constant) face normal. The induced flow F_t(x) = x + t g(x) N is then
/// exact on the collar, not merely first order. d = 2 only.
struct DeformationSpec {
    int cell_i = 0;          ///< plays U_1 (the normal points out of it)
    int cell_j = 1;          ///< plays U_2
    double sub_lo = 0.2;     ///< D start, as a fraction of the shared segment
    double sub_hi = 0.8;     ///< D end, fraction in (sub_lo, 1]
    double amplitude = 1.0;  ///< bump height (g is amplitude * cos^2)
    /// Translate the face by this offset along the normal before deforming;
    /// used to probe configurations with lambda_i != lambda_j on D.
    double face_shift = 0.0;
};

/// Frozen geometry and Lemma-consistent parameters for one deformation.
class VariationContext {
  public:
    VariationContext(const Estimator& est, const MarginalDensity& marginal,
                     const ExponentialFamily& family, const DeformationSpec& spec,
                     const QuadratureOptions& opts = {});

    const Eigen::Vector2d& face_a() const { return face_a_; }
    const Eigen::Vector2d& face_b() const { return face_b_; }
    const Eigen::Vector2d& normal() const { return normal_; }
    double face_length() const { return (face_b_ - face_a_).norm(); }
    /// Largest |t| * amplitude the collar admits before the flow would touch
    /// another boundary piece.
    double collar() const { return collar_; }
    double amplitude() const { return spec_.amplitude; }

    /// Bump profile at arclength s from face_a (zero outside [0, length]).
    double bump(double s) const;
    /// Point on the face at arclength s.
    Eigen::Vector2d face_point(double s) const;

    /// Parameters recomputed from the (possibly shifted) cells, i.e. the
    /// q_i(0), theta_i(0) entering the variation formulas.
    const Estimator& params() const { return params_; }
    int cell_i() const { return spec_.cell_i; }
    int cell_j() const { return spec_.cell_j; }

    /// Signed sweep integrals over the wedge between the face and its image
    /// under the flow at time t: integral over D of
    /// integral_0^{t g(s)} rho(p(s) + u N) du ds.
    double wedge_integral(const ScalarField& rho, double t) const;
    Eigen::Vector2d wedge_moment(const ScalarField& rho, double t) const;

    /// I1(t) per the deformation: masses and moments of cells i, j follow the
    /// flow, parameters are recomputed through the stationarity equations.
    /// Throws std::invalid_argument when |t| * amplitude >= collar.
    double deformed_i1(double t) const;

    /// Line integral over D with the face arclength measure.
    double face_integral(const std::function<double(double /*s*/, const VectorXd&)>& f) const;

    const MarginalDensity& marginal() const { return *marginal_; }
    const ExponentialFamily& family() const { return *family_; }

  private:
    DeformationSpec spec_;
    const MarginalDensity* marginal_;
    const ExponentialFamily* family_;
    Eigen::Vector2d face_a_, face_b_;
    Eigen::Vector2d normal_;
    double collar_ = 0.0;
    Estimator params_;
    VectorXd mass_;    ///< per-cell masses of the base (shifted) partition
    MatrixXd moment_;  ///< per-cell moments
    double total_mass_ = 1.0;
    double constant_c_ = 0.0;
};

/// First variation, Eq-form: dI1/dt at t=0 equals
/// -(integral over D of rho g (lambda_i - lambda_j)).
double first_variation_formula(const VariationContext& ctx);

/// The four contributions to -d^2I1/dt^2 at t=0, plus the raw face integrals
/// needed to study concentrated bumps.
struct SecondVariationTerms {
    double divergence_term = 0.0;   ///< integral (lambda_i - lambda_j) g div(g rho N)
    double mass_term = 0.0;         ///< (1/q_i + 1/q_j) (integral g rho)^2
    double delta_term = 0.0;        ///< sum_k delta_k . Q_k^{-1} delta_k / q_k
    double normal_jump_term = 0.0;  ///< integral g^2 rho N.(theta_i - theta_j)
    double int_g_rho = 0.0;
    double int_g2_rho = 0.0;
    VectorXd delta_i, delta_j;

    double total() const { return divergence_term + mass_term + delta_term + normal_jump_term; }
};

/// Second variation: returns d^2I1/dt^2 at t=0 = -(sum of the four terms).
double second_variation_formula(const VariationContext& ctx,
                                SecondVariationTerms* terms = nullptr);

/// Formula-vs-finite-difference comparison for both variations, Richardson
/// extrapolated from two step sizes.
struct VariationReport {
    double id_formula = 0.0;
    double id_numeric = 0.0;
    double idd_formula = 0.0;
    double idd_numeric = 0.0;
    double step = 0.0;
    double step_refined = 0.0;
    double id_error_estimate = 0.0;   ///< |Richardson - refined-step value|
    double idd_error_estimate = 0.0;
    SecondVariationTerms terms;
};
VariationReport verify_variation(const VariationContext& ctx, double step_hint = 0.0);

/// Flow-derivative checks of c(t) = integral over U_region(t) of rho for
/// rho in {1, x_1, marginal}: first derivative vs integral g rho over D,
/// second vs integral g div(g rho N) over D. Signs: + for region i, - for j.
enum class TestDensity { One, Coordinate, Marginal };
struct FlowLemmaReport {
    double first_formula = 0.0;
    double first_numeric = 0.0;
    double second_formula = 0.0;
    double second_numeric = 0.0;
    double first_gap = 0.0;
    double second_gap = 0.0;
};
FlowLemmaReport flow_lemma_check(const VariationContext& ctx, int region, TestDensity rho);

}  // namespace smml
