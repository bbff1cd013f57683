#pragma once

#include "iontrap/dynamics.hpp"
#include "iontrap/ion_system.hpp"
#include "iontrap/kink_detect.hpp"
#include "iontrap/statics.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace iontrap {

enum class Stage { created, survived };
std::string to_string(Stage s);

struct DefectSpec {
    std::size_t position = 0;  // 0-based from the leftmost ion
    double mass_amu = 220.0;
};

/// One stochastic quench campaign: an ensemble of independent Langevin
/// trajectories per quench parameter, each seeded from (master_seed, trial).
struct QuenchScenario {
    std::string name = "quench";
    std::size_t n_ions = 30;
    double nu_z_hz = 24.6e3;
    double nu_x_start_hz = 500e3;
    double nu_x_end_hz = 140e3;
    AxialMassScaling axial_mass_scaling = AxialMassScaling::paper;
    std::vector<DefectSpec> defects;
    std::vector<double> tau_q_us{15.0, 30.0, 50.0, 75.0, 100.0};
    int trials_per_tau = 200;
    std::uint64_t master_seed = 1;
    RampShape ramp_shape = RampShape::linear_nu;
    double e_field_v_per_m = 0.0;       // static field held through the run
    double init_temperature_k = 1e-3;   // ensemble temperature before the ramp
    double equilibration_s = 100e-6;
    double equilibration_eta_factor = 10.0;  // stronger friction while preparing
    LangevinParams langevin{1e-3, 3e-21, 1e-8};
    double survival_time_s = 400e-6;
    DetectOptions detect;

    IonSystem start_system() const;
    IonSystem end_system() const;
};

struct TrialRecord {
    int trial = 0;
    std::uint64_t seed = 0;
    double tau_q_us = 0.0;
    int n_created = 0;
    int n_survived = 0;
    std::vector<double> survived_centres_m;
    std::string status = "ok";
};

/// Deterministic shared inputs computed once per scenario.
struct ScenarioContext {
    IonSystem start_sys;
    IonSystem end_sys;
    Configuration linear_start;      // relaxed chain at nu_x_start
    Configuration zigzag_reference;  // relaxed kink-free chain at nu_x_end
};

ScenarioContext prepare_context(const QuenchScenario& sc);
TrialRecord run_single_trial(const QuenchScenario& sc, const ScenarioContext& ctx,
                             int trial_index);

/// Fans trials out over a worker pool. The result is a pure function of
/// (scenario, master seed), independent of worker count and scheduling;
/// per-trial errors are recorded in the trial status, not rethrown.
std::vector<TrialRecord> run_scenario(const QuenchScenario& sc, int workers);

struct DensityEstimate {
    double tau_q_us = 0.0;
    double d = 0.0;       // mean kinks per trial
    double ci_lo = 0.0;   // 95% interval
    double ci_hi = 0.0;
    int n_trials = 0;
    Stage stage = Stage::created;
};

/// Mean kink count and 95% interval per quench parameter, ascending tau_Q.
/// Wilson score interval when all counts are 0/1, otherwise a normal
/// interval on the mean. Failed trials are excluded. Throws EmptyGroup when
/// no valid records exist.
std::vector<DensityEstimate> density_curve(const std::vector<TrialRecord>& records,
                                           Stage stage);

struct SpatialHistogram {
    int left = 0;
    int centre = 0;
    int right = 0;
    double centre_halfwidth_m = 0.0;
};

/// Surviving kinks classified as centre when within 1.5 lattice spacings of
/// the axis (the middle three sites), else left/right by sign.
SpatialHistogram spatial_histogram(const std::vector<TrialRecord>& records,
                                   double axial_spacing_m);

std::string trial_record_jsonl(const TrialRecord& r);
TrialRecord trial_record_from_jsonl(const std::string& line);
void write_trial_records(const std::string& path, const std::vector<TrialRecord>& records);
std::vector<TrialRecord> read_trial_records(const std::string& path);
void write_density_tsv(const std::string& path, const std::vector<DensityEstimate>& rows);
void write_histogram_tsv(const std::string& path, const SpatialHistogram& hist);

// ---------------------------------------------------------------- fields

struct TimedReport {
    double t_s = 0.0;
    KinkReport report;
    double defect_z_m = 0.0;
};

struct ProtocolOutcome {
    std::vector<TimedReport> history;
    KinkReport final_report;
    double final_defect_z_m = 0.0;
    double axial_spacing_m = 0.0;     // b of the kink-free reference
    int max_simultaneous_kinks = 0;
    bool success = false;
    std::string detail;
};

/// Shared knobs of the dc-field protocols.
struct FieldProtocolConfig {
    std::size_t n_ions = 30;
    double nu_z_hz = 24.6e3;
    double nu_x_hz = 140e3;
    AxialMassScaling axial_mass_scaling = AxialMassScaling::paper;
    std::vector<DefectSpec> defects{{9, 220.0}};
    double base_temperature_k = 0.5e-3;
    LangevinParams langevin{0.5e-3, 3e-21, 1e-8};
    std::uint64_t seed = 1;
    int observe_stride = 2000;
};

/// Kink drag: a centred kink plus an off-centre defect; the field is ramped
/// up, the crystal is heated so the kink explores the chain, then cooled.
/// Success: the kink ends trapped at the defect and both end at the centre.
struct DragProtocol {
    FieldProtocolConfig common;
    double field_v_per_m = 50.0;
    double field_ramp_s = 0.6e-3;
    double heat_temperature_k = 8e-3;
    double heat_duration_s = 1.2e-3;
    double settle_duration_s = 2.0e-3;
};
ProtocolOutcome run_drag_protocol(const DragProtocol& p);

/// Smallest field in `fields` (ascending) for which the drag protocol
/// succeeds on a majority of `seeds`.
std::optional<double> drag_threshold_field(const DragProtocol& base,
                                           const std::vector<double>& fields,
                                           const std::vector<std::uint64_t>& seeds);

/// Deterministic kink creation without a quench: ramping the field on a
/// zigzag with one defect expels the defect, transiently creating two kinks
/// of which one survives pinned at the defect.
struct FieldRampCreation {
    FieldProtocolConfig common;
    double field_max_v_per_m = 300.0;
    double ramp_s = 1.2e-3;
    double settle_s = 1.5e-3;
};
ProtocolOutcome run_field_ramp_creation(const FieldRampCreation& p);

/// Radial quench with two defects held in a static field; the number of
/// ions between the defects fixes the kink parity at the end.
struct PairCreationQuench {
    FieldProtocolConfig common;  // defects must hold exactly two entries
    double nu_x_start_hz = 500e3;
    double tau_q_us = 75.0;
    double field_v_per_m = 15.0;
    double init_temperature_k = 0.5e-3;
    double survival_time_s = 400e-6;
};
ProtocolOutcome run_pair_creation_quench(const PairCreationQuench& p);

} // namespace iontrap
