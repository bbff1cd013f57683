#pragma once

#include "iontrap/configuration.hpp"
#include "iontrap/ion_system.hpp"
#include "iontrap/kink_detect.hpp"

#include <Eigen/Dense>

#include <optional>
#include <vector>

namespace iontrap {

/// Differentiable kink-centre constraint g(Q) over the packed coordinate
/// vector. Evaluation sorts the axial coordinates internally and maps
/// derivatives back through the permutation, so ion labels need not be in
/// axial order. The odd variant pins a specific interface bond (a slot pair
/// in the sorted order); the extended variant is the distortion-weighted
/// bond-midpoint average against a fixed reference chain.
class CentreFunctional {
public:
    static CentreFunctional odd(std::size_t interface_bond);
    static CentreFunctional extended(std::vector<double> reference_z);

    KinkKind kind() const { return kind_; }
    std::size_t interface_bond() const { return bond_; }

    double value(const Eigen::VectorXd& packed) const;
    Eigen::VectorXd gradient(const Eigen::VectorXd& packed) const;
    /// out += coeff * d2g/dQ2
    void add_scaled_hessian(const Eigen::VectorXd& packed, double coeff,
                            Eigen::MatrixXd& out) const;

private:
    KinkKind kind_ = KinkKind::extended;
    std::size_t bond_ = 0;
    std::vector<double> ref_z_;
};

Configuration minimize_energy(const IonSystem& sys, const Configuration& q0,
                              double tol = 1e-9);

/// Relaxed on-axis chain (exactly linear by symmetry of the start).
Configuration relax_linear_chain(const IonSystem& sys);
/// Relaxed planar zigzag, reached from an alternating transverse seed.
/// Falls back to the linear chain above the structural transition.
Configuration relax_zigzag(const IonSystem& sys);

/// Builds a single stationary kink from a kink-free zigzag by flipping the
/// transverse sign of every ion on one side of the chain centre and
/// re-relaxing. Throws NoKinkFormed when the relaxation anneals back.
Configuration seed_kink(const IonSystem& sys, const Configuration& zigzag);

struct SolveOptions {
    double kkt_tol = 1e-9;          // |grad V + lambda grad g|_inf
    double constraint_tol = 1e-10;  // |g(Q) - X|
    int max_newton = 60;
    int max_outer = 12;
    double initial_penalty = 1e3;
    double max_newton_step = 0.2;   // cap on one Newton displacement
};

struct ConstrainedResult {
    Configuration config;
    double multiplier = 0.0;
    int iterations = 0;
};

/// Stationary point of V(Q) + lambda (g(Q) - X): damped Newton on the
/// first-order system, with an augmented-Lagrangian fallback when the warm
/// start is too far out. Throws ConstraintSingular when |grad g| < 1e-12 at
/// the start, NoConvergence otherwise on failure.
ConstrainedResult constrained_minimize(const IonSystem& sys, const Configuration& q0,
                                       const CentreFunctional& g, double target,
                                       const SolveOptions& opts = {},
                                       std::optional<double> lambda0 = std::nullopt);

struct PnSample {
    double position;       // X
    Configuration config;  // f(X); ion labels follow the curve's reference
    double energy;         // U(X) - V(reference), natural units
    double multiplier;     // lambda; equals -dU/dX
};

struct PnCurve {
    std::vector<PnSample> samples;  // ascending in position
    KinkKind kind = KinkKind::extended;
    Configuration reference;        // kink-free zigzag of the same system
    double reference_energy = 0.0;  // V(reference)
    bool lost_left = false;         // continuation ended in kink loss
    bool lost_right = false;

    const PnSample& nearest(double X) const;
};

struct TraceOptions {
    double step = 0.0;              // dX; 0 -> local axial spacing / 20
    int max_step_halvings = 4;      // floor = step / 2^4
    SolveOptions solve;
    bool stop_on_kink_loss = true;
    /// Centre functional to trace with; defaults to the detector's taxonomy.
    /// Near the odd/extended crossover the band classification says
    /// "intermediate" while a specific functional is still wanted.
    std::optional<KinkKind> kind_override;
};

/// Continuation of the constrained minimizer over kink positions in
/// [x_min, x_max], warm-starting each solve from the neighbouring sample.
/// The grid is anchored at the start's own centre. Kink loss truncates the
/// affected side and sets the corresponding flag.
PnCurve trace_adiabatic(const IonSystem& sys, const Configuration& start,
                        const Configuration& reference, double x_min, double x_max,
                        const TraceOptions& opts = {});

struct PnExtremum {
    double position;
    double energy;        // relative, natural units
    bool is_minimum;
    Configuration config;
};

/// Refines an extremum of U between two samples bracketing a sign change of
/// lambda ( = -dU/dX) down to |lambda| <= lambda_tol.
PnExtremum refine_extremum(const IonSystem& sys, const PnCurve& curve,
                           std::size_t left_sample, double lambda_tol = 1e-8);

std::vector<PnExtremum> curve_extrema(const IonSystem& sys, const PnCurve& curve,
                                      double lambda_tol = 1e-8);

struct PnBarrier {
    double site_position;     // X of the local minimum
    double peak_position;     // X of the adjacent maximum
    double height;            // natural units
    double height_kelvin;
};

/// Adjacent (minimum, maximum) energy differences along the curve, both in
/// natural units and kelvin. Throws TooFewExtrema when fewer than three
/// interior extrema exist.
std::vector<PnBarrier> pn_barriers(const IonSystem& sys, const PnCurve& curve);

struct CurveResiduals {
    double max_centre_error = 0.0;  // |g(f(X)) - X|
    double max_kkt = 0.0;           // |grad V + lambda grad g|_inf
};

/// Re-evaluates the defining residuals of every sample.
CurveResiduals verify(const IonSystem& sys, const PnCurve& curve);

} // namespace iontrap
