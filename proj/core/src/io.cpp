#include "iontrap/io.hpp"

#include "iontrap/errors.hpp"
#include "iontrap/version.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace iontrap {

std::string format_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw ConfigError("cannot open for writing: " + path);
    out << content;
    if (!out)
        throw ConfigError("short write: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw ConfigError("cannot open: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_pn_curve_tsv(const std::string& path, const IonSystem& sys, const PnCurve& curve) {
    const UnitSystem units = sys.units();
    std::ostringstream out;
    out << "X_m\tU_J\tU_K\tlambda";
    for (std::size_t j = 0; j < sys.size(); ++j)
        out << "\tz" << j << "_m";
    for (std::size_t j = 0; j < sys.size(); ++j)
        out << "\tx" << j << "_m";
    out << "\n";
    for (const PnSample& s : curve.samples) {
        out << format_double(units.length_to_si(s.position)) << '\t'
            << format_double(units.energy_to_si(s.energy)) << '\t'
            << format_double(units.energy_to_kelvin(s.energy)) << '\t'
            << format_double(s.multiplier);
        for (double z : s.config.z)
            out << '\t' << format_double(units.length_to_si(z));
        for (double x : s.config.x)
            out << '\t' << format_double(units.length_to_si(x));
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_trajectory_tsv(const std::string& path, const UnitSystem& units,
                          const std::vector<Frame>& frames) {
    std::ostringstream out;
    const std::size_t n = frames.empty() ? 0 : frames.front().z.size();
    out << "t_s";
    for (std::size_t j = 0; j < n; ++j) out << "\tz" << j << "_m";
    for (std::size_t j = 0; j < n; ++j) out << "\tx" << j << "_m";
    for (std::size_t j = 0; j < n; ++j) out << "\tvz" << j << "_m_per_s";
    for (std::size_t j = 0; j < n; ++j) out << "\tvx" << j << "_m_per_s";
    out << "\n";
    for (const Frame& f : frames) {
        out << format_double(f.t_s);
        for (double v : f.z) out << '\t' << format_double(units.length_to_si(v));
        for (double v : f.x) out << '\t' << format_double(units.length_to_si(v));
        for (double v : f.vz) out << '\t' << format_double(units.velocity_to_si(v));
        for (double v : f.vx) out << '\t' << format_double(units.velocity_to_si(v));
        out << '\n';
    }
    write_text_file(path, out.str());
}

void write_reduced_trajectory_tsv(const std::string& path, const UnitSystem& units,
                                  const ReducedTrajectory& traj) {
    std::ostringstream out;
    out << "t_s\tX_m\tXdot_m_per_s\tE_reduced_J\n";
    for (std::size_t i = 0; i < traj.t.size(); ++i)
        out << format_double(units.time_to_si(traj.t[i])) << '\t'
            << format_double(units.length_to_si(traj.position[i])) << '\t'
            << format_double(units.velocity_to_si(traj.velocity[i])) << '\t'
            << format_double(units.energy_to_si(traj.energy[i])) << '\n';
    write_text_file(path, out.str());
}

std::string kink_report_json(const KinkReport& rep, const UnitSystem& units, double t_s) {
    nlohmann::json j;
    j["t"] = t_s;
    j["structure"] = to_string(rep.structure);
    j["n_kinks"] = rep.n_kinks();
    j["a"] = units.length_to_si(rep.transverse_spacing);
    j["b"] = units.length_to_si(rep.axial_spacing);
    j["kinks"] = nlohmann::json::array();
    for (const DetectedKink& k : rep.kinks)
        j["kinks"].push_back({{"kind", to_string(k.kind)},
                              {"X", units.length_to_si(k.centre)}});
    return j.dump();
}

void write_manifest(const std::string& path, const std::string& subcommand,
                    const std::string& config_json_text, unsigned long long master_seed,
                    const std::vector<std::string>& outputs) {
    nlohmann::json j;
    j["tool"] = "iontrap";
    j["version"] = project_version;
    j["subcommand"] = subcommand;
    j["master_seed"] = master_seed;
    j["outputs"] = outputs;
    j["config"] = nlohmann::json::parse(config_json_text);
    write_text_file(path, j.dump(2) + "\n");
}

} // namespace iontrap
