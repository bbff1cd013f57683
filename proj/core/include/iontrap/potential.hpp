#pragma once

#include "iontrap/configuration.hpp"
#include "iontrap/ion_system.hpp"

#include <Eigen/Dense>

#include <vector>

namespace iontrap {

/// Instantaneous trap values; split out from ScaledCoeffs so ramps can vary
/// them per step without touching the per-ion arrays.
struct TrapState {
    double alpha2;   // (nu_x/nu_z)^2
    double efield;   // dimensionless

    static TrapState from(const ScaledCoeffs& c) { return {c.alpha * c.alpha, c.efield}; }
};

// ---- kernels on raw arrays (hot path; no allocation, no checks) ----

/// Total dimensionless potential energy.
double energy_kernel(const double* z, const double* x, std::size_t n,
                     const double* radial, const double* axial, TrapState trap);

/// Forces (negative gradient), accumulated into fz/fx (overwritten).
/// Returns the potential energy from the same pass.
double force_kernel(const double* z, const double* x, std::size_t n,
                    const double* radial, const double* axial, TrapState trap,
                    double* fz, double* fx);

// ---- spec-level API (validated, Configuration-based) ----

double potential_energy(const IonSystem& sys, const Configuration& q);
double potential_energy(const ScaledCoeffs& c, const Configuration& q);

/// Exact analytic gradient in the (z..., x...) packing.
std::vector<double> gradient(const IonSystem& sys, const Configuration& q);
std::vector<double> gradient(const ScaledCoeffs& c, const Configuration& q);
void gradient_into(const ScaledCoeffs& c, TrapState trap, const Configuration& q,
                   std::vector<double>& out);

/// Exact second derivatives, 2N x 2N, same packing. Symmetric by
/// construction (each pair contribution is written to both triangles).
Eigen::MatrixXd hessian(const IonSystem& sys, const Configuration& q);
Eigen::MatrixXd hessian(const ScaledCoeffs& c, TrapState trap, const Configuration& q);

/// Normal-mode frequencies in Hz from the mass-weighted Hessian at a
/// stationary point, ascending. Negative eigenvalues (unstable directions)
/// map to negative frequencies -sqrt(-ev)*nu_z so instabilities are visible.
std::vector<double> normal_mode_frequencies_hz(const IonSystem& sys, const Configuration& q);

/// Transverse confinement at which the lowest zigzag mode of the N-ion
/// linear chain softens to zero, found by bisection on nu_x. The linear
/// equilibrium is recomputed on-axis for each candidate.
double critical_nu_x_hz(const IonSystem& sys, double lo_hz, double hi_hz,
                        double tol_hz = 10.0);

} // namespace iontrap
