#pragma once

namespace iontrap {

namespace constants {
// CODATA 2018; e and k_B are exact SI values.
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double vacuum_permittivity = 8.8541878128e-12;  // F/m
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double boltzmann = 1.380649e-23;  // J/K
inline constexpr double pi = 3.14159265358979323846;
// e^2 / (4 pi eps0), J*m
double coulomb_constant();
} // namespace constants

/// Natural scales of a harmonically trapped Coulomb system: length
/// l = (e^2 / (4 pi eps0 m w_z^2))^(1/3), time 1/w_z, energy m w_z^2 l^2,
/// temperature energy/k_B. Internally everything runs in these units;
/// SI enters and leaves only through this class.
class UnitSystem {
public:
    UnitSystem(double reference_mass_amu, double nu_z_hz);

    double length_m() const { return length_; }
    double time_s() const { return time_; }
    double energy_j() const { return energy_; }
    double temperature_k() const { return temperature_; }
    double mass_kg() const { return mass_; }
    double omega_z() const { return omega_z_; }  // rad/s

    double length_from_si(double meters) const { return meters / length_; }
    double length_to_si(double dimensionless) const { return dimensionless * length_; }
    double time_from_si(double seconds) const { return seconds / time_; }
    double time_to_si(double dimensionless) const { return dimensionless * time_; }
    double energy_from_si(double joules) const { return joules / energy_; }
    double energy_to_si(double dimensionless) const { return dimensionless * energy_; }
    double energy_to_kelvin(double dimensionless) const;
    double temperature_from_kelvin(double kelvin) const { return kelvin / temperature_; }
    double velocity_from_si(double m_per_s) const { return m_per_s * time_ / length_; }
    double velocity_to_si(double dimensionless) const { return dimensionless * length_ / time_; }
    // Uniform field E_x (V/m) -> linear potential slope in natural units.
    double efield_from_si(double v_per_m) const;
    double efield_to_si(double dimensionless) const;
    // Friction coefficient (kg/s) -> natural units (scaled by m w_z).
    double friction_from_si(double kg_per_s) const;

private:
    double mass_;
    double omega_z_;
    double length_;
    double time_;
    double energy_;
    double temperature_;
};

} // namespace iontrap
