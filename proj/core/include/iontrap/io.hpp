#pragma once

#include "iontrap/collective.hpp"
#include "iontrap/dynamics.hpp"
#include "iontrap/kink_detect.hpp"
#include "iontrap/statics.hpp"
#include "iontrap/units.hpp"

#include <string>
#include <vector>

namespace iontrap {

/// Shortest round-trip decimal form; locale-independent, so identical runs
/// produce byte-identical files.
std::string format_double(double v);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

/// Columns: X_m, U_J, U_K, lambda, then z and x per ion in meters.
void write_pn_curve_tsv(const std::string& path, const IonSystem& sys, const PnCurve& curve);

/// Columns: t_s, then z, x (m) and vz, vx (m/s) per ion.
void write_trajectory_tsv(const std::string& path, const UnitSystem& units,
                          const std::vector<Frame>& frames);

/// Columns: t_s, X_m, Xdot_m_per_s, E_reduced_J.
void write_reduced_trajectory_tsv(const std::string& path, const UnitSystem& units,
                                  const ReducedTrajectory& traj);

/// One JSON object: {t, structure, n_kinks, kinks:[{kind,X}], a, b} in SI.
std::string kink_report_json(const KinkReport& rep, const UnitSystem& units, double t_s);

/// Full provenance of a run: resolved config, seed, code version, outputs.
void write_manifest(const std::string& path, const std::string& subcommand,
                    const std::string& config_json_text, unsigned long long master_seed,
                    const std::vector<std::string>& outputs);

} // namespace iontrap
