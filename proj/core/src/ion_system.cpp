#include "iontrap/ion_system.hpp"

#include "iontrap/errors.hpp"

#include <json.hpp>

#include <stdexcept>

namespace iontrap {

AxialMassScaling axial_scaling_from_string(const std::string& s) {
    if (s == "paper") return AxialMassScaling::paper;
    if (s == "static") return AxialMassScaling::static_dc;
    throw ConfigError("axial_mass_scaling must be \"paper\" or \"static\", got \"" + s + "\"");
}

std::string to_string(AxialMassScaling s) {
    return s == AxialMassScaling::paper ? "paper" : "static";
}

IonSystem IonSystem::uniform(std::size_t n_ions, double nu_z_hz, double nu_x_hz) {
    IonSystem sys;
    sys.masses_amu.assign(n_ions, sys.reference_mass_amu);
    sys.nu_z_hz = nu_z_hz;
    sys.nu_x_hz = nu_x_hz;
    sys.validate();
    return sys;
}

IonSystem IonSystem::with_mass_defect(std::size_t position, double mass_amu) const {
    if (position >= size())
        throw ConfigError("defect position out of range");
    IonSystem out = *this;
    out.masses_amu[position] = mass_amu;
    out.validate();
    return out;
}

IonSystem IonSystem::with_nu_x(double nu_x) const {
    IonSystem out = *this;
    out.nu_x_hz = nu_x;
    out.validate();
    return out;
}

IonSystem IonSystem::with_e_field(double v_per_m) const {
    IonSystem out = *this;
    out.e_field_v_per_m = v_per_m;
    return out;
}

void IonSystem::validate() const {
    if (masses_amu.empty())
        throw ConfigError("IonSystem requires at least one ion");
    for (double m : masses_amu)
        if (!(m > 0.0))
            throw ConfigError("ion masses must be positive");
    if (!(nu_z_hz > 0.0) || !(nu_x_hz > 0.0))
        throw ConfigError("trap frequencies must be positive");
    if (!(reference_mass_amu > 0.0))
        throw ConfigError("reference mass must be positive");
}

IonSystem ion_system_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("invalid JSON config: ") + e.what());
    }
    IonSystem sys;
    try {
        if (j.contains("reference_mass_amu"))
            sys.reference_mass_amu = j["reference_mass_amu"].get<double>();
        if (j.contains("masses_amu")) {
            sys.masses_amu = j["masses_amu"].get<std::vector<double>>();
            if (j.contains("n_ions") &&
                j["n_ions"].get<std::size_t>() != sys.masses_amu.size())
                throw ConfigError("n_ions disagrees with masses_amu length");
        } else {
            if (!j.contains("n_ions"))
                throw ConfigError("config requires n_ions or masses_amu");
            sys.masses_amu.assign(j["n_ions"].get<std::size_t>(), sys.reference_mass_amu);
        }
        sys.nu_z_hz = j.at("nu_z_hz").get<double>();
        sys.nu_x_hz = j.at("nu_x_hz").get<double>();
        if (j.contains("e_field_v_per_m"))
            sys.e_field_v_per_m = j["e_field_v_per_m"].get<double>();
        if (j.contains("axial_mass_scaling"))
            sys.axial_mass_scaling =
                axial_scaling_from_string(j["axial_mass_scaling"].get<std::string>());
        if (j.contains("defects"))
            for (const auto& d : j["defects"])
                sys = sys.with_mass_defect(d.at("position").get<std::size_t>(),
                                           d.at("mass_amu").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    sys.validate();
    return sys;
}

std::string ion_system_to_json_text(const IonSystem& sys) {
    nlohmann::json j;
    j["n_ions"] = sys.size();
    j["masses_amu"] = sys.masses_amu;
    j["nu_z_hz"] = sys.nu_z_hz;
    j["nu_x_hz"] = sys.nu_x_hz;
    j["e_field_v_per_m"] = sys.e_field_v_per_m;
    j["axial_mass_scaling"] = to_string(sys.axial_mass_scaling);
    j["reference_mass_amu"] = sys.reference_mass_amu;
    return j.dump(2);
}

ScaledCoeffs ScaledCoeffs::from(const IonSystem& sys) {
    sys.validate();
    ScaledCoeffs c;
    const std::size_t n = sys.size();
    c.mu.resize(n);
    c.radial.resize(n);
    c.axial.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        c.mu[j] = sys.masses_amu[j] / sys.reference_mass_amu;
        c.radial[j] = 1.0 / c.mu[j];
        c.axial[j] = sys.axial_mass_scaling == AxialMassScaling::paper ? 1.0 / c.mu[j] : 1.0;
    }
    c.alpha = sys.nu_x_hz / sys.nu_z_hz;
    c.efield = sys.units().efield_from_si(sys.e_field_v_per_m);
    return c;
}

} // namespace iontrap
