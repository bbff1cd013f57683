#pragma once

#include "iontrap/configuration.hpp"
#include "iontrap/ion_system.hpp"
#include "iontrap/spline.hpp"
#include "iontrap/statics.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace iontrap {

/// Split of a full configuration into a kink coordinate and a dressing
/// vector q = Q - f(X). The position is fixed by the tangency condition
/// <f'(X), q> = 0 (mass-weighted); both constraint residuals are reported.
struct KinkFrame {
    double position = 0.0;          // X
    double momentum = 0.0;          // Pi = <f'(X), v> when velocities are given
    Eigen::VectorXd dressing;       // q, packed (z..., x...)
    double c1 = 0.0;                // <f(X), q>
    double c2 = 0.0;                // <f'(X), q>
};

struct ReducedTrajectory {
    std::vector<double> t;       // natural time
    std::vector<double> position;
    std::vector<double> velocity;
    std::vector<double> energy;  // 0.5 M(X) V^2 + U(X)
};

/// Collective-variable view of an adiabatic kink trajectory: per-coordinate
/// cubic splines of f(X) supply f, f', f'' and through them the effective
/// mass, the projector onto the kink mode, and the reduced one-dimensional
/// dynamics of the bare kink. Inner products carry the ion masses so the
/// bare-kink kinetic energy is exactly 0.5 M(X) Xdot^2.
class KinkCurveModel {
public:
    KinkCurveModel(const IonSystem& sys, const PnCurve& curve);

    double x_min() const { return x_min_; }
    double x_max() const { return x_max_; }
    std::size_t n_coords() const { return 2 * mu_.size(); }

    Eigen::VectorXd configuration_at(double X) const;  // f(X)
    Eigen::VectorXd tangent_at(double X) const;        // f'(X)
    Eigen::VectorXd curvature_at(double X) const;      // f''(X)

    double pn_energy(double X) const;   // U(X), relative to the kink-free chain
    double pn_force(double X) const;    // -dU/dX

    /// M(X) = sum_j m_j f_j'(X)^2, strictly positive on the sampled range.
    double effective_mass(double X) const;
    /// The plain f.f evaluation kept for comparison with the inertia above.
    double effective_mass_literal(double X) const;

    /// Rank-one projector P v = f' <f', v> / M onto the kink mode.
    Eigen::MatrixXd projector(double X) const;
    Eigen::VectorXd apply_projector(double X, const Eigen::VectorXd& v) const;

    double mass_inner(const Eigen::VectorXd& a, const Eigen::VectorXd& b) const;

    /// Integrates M Xdd + U'(X) + <f', f''> Xd^2 = 0 with classical RK4.
    /// Positions leaving the sampled range throw OutOfRange (kink escape in
    /// the reduced picture). X0 and V0 in natural units.
    ReducedTrajectory integrate_bare_kink(double X0, double V0, double duration,
                                          double dt) const;

    /// Finds X with <f'(X), Q - f(X)> = 0, preferring the root with the
    /// smallest dressing norm; `hint` narrows the search to the nearest root.
    KinkFrame decompose(const Configuration& q_full,
                        std::optional<double> hint = std::nullopt) const;
    KinkFrame decompose(const Configuration& q_full, const std::vector<double>& vz,
                        const std::vector<double>& vx,
                        std::optional<double> hint = std::nullopt) const;

    /// Residual of the projected dressing equation of motion,
    /// (1 - P)(qdd + f'' Xd^2 + mu^{-1} grad V), evaluated at frame `i` of a
    /// uniformly spaced decomposed trajectory by central differences.
    Eigen::VectorXd dressing_residual(const std::vector<KinkFrame>& frames,
                                      std::size_t i, double dt) const;

private:
    double constraint_c2(double X, const Eigen::VectorXd& packed) const;

    IonSystem sys_;
    std::vector<double> mu_;        // per ion
    std::vector<CubicSpline> coord_;  // 2N splines over X
    CubicSpline energy_;
    double x_min_ = 0.0, x_max_ = 0.0;
    std::vector<double> sample_x_;
};

} // namespace iontrap
