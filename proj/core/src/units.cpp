#include "iontrap/units.hpp"

#include <cmath>
#include <stdexcept>

namespace iontrap {

namespace constants {
double coulomb_constant() {
    return elementary_charge * elementary_charge /
           (4.0 * pi * vacuum_permittivity);
}
} // namespace constants

UnitSystem::UnitSystem(double reference_mass_amu, double nu_z_hz) {
    if (reference_mass_amu <= 0.0 || nu_z_hz <= 0.0)
        throw std::invalid_argument("UnitSystem: mass and frequency must be positive");
    mass_ = reference_mass_amu * constants::atomic_mass_unit;
    omega_z_ = 2.0 * constants::pi * nu_z_hz;
    length_ = std::cbrt(constants::coulomb_constant() / (mass_ * omega_z_ * omega_z_));
    time_ = 1.0 / omega_z_;
    energy_ = mass_ * omega_z_ * omega_z_ * length_ * length_;
    temperature_ = energy_ / constants::boltzmann;
}

double UnitSystem::energy_to_kelvin(double dimensionless) const {
    return dimensionless * temperature_;
}

double UnitSystem::efield_from_si(double v_per_m) const {
    // -e E x in joules == -(efield) (x/l) in energy units
    return constants::elementary_charge * v_per_m * length_ / energy_;
}

double UnitSystem::efield_to_si(double dimensionless) const {
    return dimensionless * energy_ / (constants::elementary_charge * length_);
}

double UnitSystem::friction_from_si(double kg_per_s) const {
    return kg_per_s / (mass_ * omega_z_);
}

} // namespace iontrap
