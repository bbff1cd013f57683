#pragma once

#include "iontrap/configuration.hpp"
#include "iontrap/ion_system.hpp"
#include "iontrap/kink_detect.hpp"
#include "iontrap/potential.hpp"
#include "iontrap/rng.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

namespace iontrap {

/// Instantaneous phase-space state in natural units. Slots stay ordered by z;
/// after every step any axial crossings are re-sorted with velocities, the
/// per-ion coefficients and the original labels permuted alongside, so a mass
/// defect keeps its identity through exchanges.
struct DynamicsState {
    Configuration config;
    std::vector<double> vz, vx;
    double time = 0.0;
    std::uint64_t rng_seed = 0;

    std::vector<double> mu, radial, axial;  // per-slot coefficients
    std::vector<std::size_t> labels;        // original ion index per slot

    std::size_t size() const { return config.size(); }
    /// Slot currently occupied by the ion that started at `original_index`.
    std::size_t slot_of(std::size_t original_index) const;
};

DynamicsState make_state(const IonSystem& sys, const Configuration& q,
                         std::uint64_t rng_seed);

struct LangevinParams {
    double temperature_k = 0.0;
    double eta_kg_per_s = 3e-21;  // laser-cooling friction
    double dt_s = 1e-8;
};

enum class RampShape { linear_nu, linear_nu_squared };

/// Time base is the ramp start. nu_x moves from start to end over ramp_time
/// and stays at end afterwards. The optional field program is piecewise
/// linear between nodes with flat extrapolation; without nodes the system's
/// static field applies.
struct RampSchedule {
    double nu_x_start_hz = 0.0;
    double nu_x_end_hz = 0.0;
    double ramp_time_s = 0.0;  // t_r; the quench parameter is tau_Q = t_r/2
    RampShape shape = RampShape::linear_nu;
    std::vector<std::pair<double, double>> e_field_nodes;  // (t_s, V/m)
    double hold_time_s = 0.0;

    double nu_x_hz_at(double t_s) const;
    std::optional<double> e_field_at(double t_s) const;
    double total_time_s() const { return ramp_time_s + hold_time_s; }
};

struct Frame {
    double t_s;
    std::vector<double> z, x, vz, vx;  // natural units
};

/// Integrator working area + cached conversions for one IonSystem.
class Propagator {
public:
    explicit Propagator(const IonSystem& sys);

    const UnitSystem& units() const { return units_; }
    const IonSystem& system() const { return sys_; }

    TrapState trap(double nu_x_hz, std::optional<double> e_field_v_per_m = {}) const;
    TrapState trap() const { return trap(sys_.nu_x_hz); }

    /// One velocity-Verlet step, dt in natural time. Throws Instability when
    /// the single-step energy drift exceeds drift_tol of |E|.
    void step_nve(DynamicsState& s, double dt, TrapState tp,
                  double drift_tol = 1e-3);
    /// One BAOAB step: half kick, half drift, exact Ornstein-Uhlenbeck
    /// velocity refresh, half drift, half kick.
    void step_langevin(DynamicsState& s, double dt, TrapState tp,
                       double temperature, double eta, GaussianRng& rng);

    double potential_energy(const DynamicsState& s, TrapState tp) const;
    double kinetic_energy(const DynamicsState& s) const;

    /// Maxwell-Boltzmann velocities at the given natural temperature.
    void draw_velocities(DynamicsState& s, double temperature, GaussianRng& rng) const;

private:
    void refresh_forces(const DynamicsState& s, TrapState tp);
    void resort(DynamicsState& s);

    IonSystem sys_;
    ScaledCoeffs coeffs_;
    UnitSystem units_;
    std::vector<double> fz_, fx_;
    double cached_energy_ = 0.0;
    bool forces_valid_ = false;
};

// ---- spec-level single-step wrappers (SI in, SI state fields stay natural)

void step_nve(const IonSystem& sys, DynamicsState& state, double dt_s);
void step_langevin(const IonSystem& sys, DynamicsState& state, const LangevinParams& p);

/// Langevin relaxation toward the thermal ensemble at p.temperature_k.
/// T = 0 short-circuits to a relaxed stationary configuration with zero
/// velocities. Warns on stderr when the duration is below ten damping times.
DynamicsState thermalize(const IonSystem& sys, const DynamicsState& state0,
                         const LangevinParams& p, double duration_s);

struct QuenchOptions {
    double survival_time_s = 400e-6;  // measured from ramp start
    int frame_stride = 0;             // 0: record no frames
    double ion_loss_factor = 10.0;    // |z| beyond this times the chain length
    DetectOptions detect;
    const Configuration* reference = nullptr;  // kink-free chain at nu_x_end
};

struct QuenchResult {
    KinkReport at_ramp_end;
    KinkReport at_survival;
    std::vector<Frame> frames;
    DynamicsState final_state;
};

/// Langevin integration across the schedule: ramp, then hold until
/// max(schedule end, survival time). Kink reports are taken at the end of
/// the ramp and at the survival time.
QuenchResult run_quench(const IonSystem& sys, const DynamicsState& state0,
                        const RampSchedule& schedule, const LangevinParams& p,
                        const QuenchOptions& opts = {});

/// Generic driven segment used by the field protocols: per-step trap values
/// from `program` (seconds from segment start), optional observer called
/// every `stride` steps.
struct SegmentObserver {
    int stride = 0;
    std::function<void(double t_s, const DynamicsState&)> fn;
};

void run_segment(Propagator& prop, DynamicsState& state, const LangevinParams& p,
                 double duration_s,
                 const std::function<TrapState(double t_s)>& program,
                 const SegmentObserver& observer = {}, std::uint64_t stream = 0);

} // namespace iontrap
