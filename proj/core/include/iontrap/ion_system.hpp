#pragma once

#include "iontrap/units.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace iontrap {

/// How the axial trap term scales with an ion's mass. `paper` applies the
/// same m^2/m_j prefactor to both trap terms, so a single heavy ion
/// oscillates axially at nu_z * (m/m_j). `static_dc` treats the axial dc
/// potential as mass-independent potential energy, giving nu_z * sqrt(m/m_j).
enum class AxialMassScaling { paper, static_dc };

AxialMassScaling axial_scaling_from_string(const std::string& s);
std::string to_string(AxialMassScaling s);

/// Trap + ion species description, all SI. The radial pseudopotential term
/// for ion j carries m^2/m_j so that its secular frequency is nu_x * (m/m_j),
/// with m the reference mass.
struct IonSystem {
    std::vector<double> masses_amu;       // per ion, left-to-right
    double nu_z_hz = 0.0;                 // axial secular frequency, reference mass
    double nu_x_hz = 0.0;                 // transverse secular frequency, reference mass
    double e_field_v_per_m = 0.0;         // uniform dc field along x
    AxialMassScaling axial_mass_scaling = AxialMassScaling::paper;
    double reference_mass_amu = 172.0;    // 172Yb+

    static IonSystem uniform(std::size_t n_ions, double nu_z_hz, double nu_x_hz);

    std::size_t size() const { return masses_amu.size(); }
    /// Copy with the ion at `position` (0-based from the left) replaced by a
    /// heavier/lighter species.
    IonSystem with_mass_defect(std::size_t position, double mass_amu) const;
    IonSystem with_nu_x(double nu_x_hz) const;
    IonSystem with_e_field(double v_per_m) const;

    UnitSystem units() const { return UnitSystem(reference_mass_amu, nu_z_hz); }
    void validate() const;  // throws ConfigError
};

/// Parses the documented config schema:
/// {"n_ions": 30, "nu_z_hz": 24.6e3, "nu_x_hz": 140e3,
///  "masses_amu": [...optional...], "e_field_v_per_m": 0,
///  "axial_mass_scaling": "paper",
///  "defects": [{"position": 11, "mass_amu": 220}] }
IonSystem ion_system_from_json_text(const std::string& text);
std::string ion_system_to_json_text(const IonSystem& sys);

/// Per-ion dimensionless coefficients consumed by the energy/force kernels.
/// mu = m_j/m; the trap terms are 0.5*radial*alpha^2*x^2 + 0.5*axial*z^2
/// with alpha = nu_x/nu_z.
struct ScaledCoeffs {
    std::vector<double> mu;
    std::vector<double> radial;  // m/m_j squared over mu: equals 1/mu
    std::vector<double> axial;   // 1/mu (paper) or 1 (static_dc)
    double alpha = 0.0;
    double efield = 0.0;  // dimensionless linear slope along x

    static ScaledCoeffs from(const IonSystem& sys);
};

} // namespace iontrap
