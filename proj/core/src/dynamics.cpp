#include "iontrap/dynamics.hpp"

#include "iontrap/errors.hpp"
#include "iontrap/statics.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

namespace iontrap {

namespace {

void state_check_size(const IonSystem& sys, const DynamicsState& state) {
    if (state.size() != sys.size())
        throw ConfigError("state size does not match the ion system");
}

} // namespace

std::size_t DynamicsState::slot_of(std::size_t original_index) const {
    for (std::size_t k = 0; k < labels.size(); ++k)
        if (labels[k] == original_index)
            return k;
    throw OutOfRange("no slot holds this ion label");
}

DynamicsState make_state(const IonSystem& sys, const Configuration& q,
                         std::uint64_t rng_seed) {
    if (q.size() != sys.size())
        throw ConfigError("configuration size does not match the ion system");
    DynamicsState s;
    s.config = q;
    const std::size_t n = q.size();
    s.vz.assign(n, 0.0);
    s.vx.assign(n, 0.0);
    s.rng_seed = rng_seed;
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    s.mu = c.mu;
    s.radial = c.radial;
    s.axial = c.axial;
    s.labels.resize(n);
    std::iota(s.labels.begin(), s.labels.end(), std::size_t{0});
    if (!s.config.is_sorted_by_z()) {
        const auto perm = s.config.sort_by_z();
        std::vector<double> mu(n), ra(n), ax(n);
        std::vector<std::size_t> lb(n);
        for (std::size_t k = 0; k < n; ++k) {
            mu[k] = s.mu[perm[k]];
            ra[k] = s.radial[perm[k]];
            ax[k] = s.axial[perm[k]];
            lb[k] = s.labels[perm[k]];
        }
        s.mu = mu; s.radial = ra; s.axial = ax; s.labels = lb;
    }
    return s;
}

double RampSchedule::nu_x_hz_at(double t_s) const {
    if (ramp_time_s <= 0.0 || t_s >= ramp_time_s)
        return nu_x_end_hz;
    if (t_s <= 0.0)
        return nu_x_start_hz;
    const double f = t_s / ramp_time_s;
    if (shape == RampShape::linear_nu)
        return nu_x_start_hz + (nu_x_end_hz - nu_x_start_hz) * f;
    const double s2 = nu_x_start_hz * nu_x_start_hz;
    const double e2 = nu_x_end_hz * nu_x_end_hz;
    return std::sqrt(s2 + (e2 - s2) * f);
}

std::optional<double> RampSchedule::e_field_at(double t_s) const {
    if (e_field_nodes.empty())
        return std::nullopt;
    if (t_s <= e_field_nodes.front().first)
        return e_field_nodes.front().second;
    for (std::size_t i = 0; i + 1 < e_field_nodes.size(); ++i) {
        const auto& [ta, ea] = e_field_nodes[i];
        const auto& [tb, eb] = e_field_nodes[i + 1];
        if (t_s <= tb)
            return ea + (eb - ea) * (t_s - ta) / (tb - ta);
    }
    return e_field_nodes.back().second;
}

Propagator::Propagator(const IonSystem& sys)
    : sys_(sys), coeffs_(ScaledCoeffs::from(sys)), units_(sys.units()) {
    fz_.resize(sys.size());
    fx_.resize(sys.size());
}

TrapState Propagator::trap(double nu_x_hz, std::optional<double> e_field_v_per_m) const {
    const double alpha = nu_x_hz / sys_.nu_z_hz;
    const double e = units_.efield_from_si(e_field_v_per_m.value_or(sys_.e_field_v_per_m));
    return {alpha * alpha, e};
}

void Propagator::refresh_forces(const DynamicsState& s, TrapState tp) {
    cached_energy_ = force_kernel(s.config.z.data(), s.config.x.data(), s.size(),
                                  s.radial.data(), s.axial.data(), tp,
                                  fz_.data(), fx_.data());
    forces_valid_ = true;
}

void Propagator::resort(DynamicsState& s) {
    if (s.config.is_sorted_by_z())
        return;
    const auto perm = s.config.sort_by_z();
    const std::size_t n = s.size();
    std::vector<double> tmp(n);
    auto apply = [&](std::vector<double>& v) {
        for (std::size_t k = 0; k < n; ++k) tmp[k] = v[perm[k]];
        v = tmp;
    };
    apply(s.vz);
    apply(s.vx);
    apply(s.mu);
    apply(s.radial);
    apply(s.axial);
    apply(fz_);
    apply(fx_);
    std::vector<std::size_t> lb(n);
    for (std::size_t k = 0; k < n; ++k) lb[k] = s.labels[perm[k]];
    s.labels = lb;
}

double Propagator::potential_energy(const DynamicsState& s, TrapState tp) const {
    return energy_kernel(s.config.z.data(), s.config.x.data(), s.size(),
                         s.radial.data(), s.axial.data(), tp);
}

double Propagator::kinetic_energy(const DynamicsState& s) const {
    double ke = 0.0;
    for (std::size_t j = 0; j < s.size(); ++j)
        ke += 0.5 * s.mu[j] * (s.vz[j] * s.vz[j] + s.vx[j] * s.vx[j]);
    return ke;
}

void Propagator::draw_velocities(DynamicsState& s, double temperature,
                                 GaussianRng& rng) const {
    for (std::size_t j = 0; j < s.size(); ++j) {
        const double sigma = std::sqrt(temperature / s.mu[j]);
        s.vz[j] = sigma * rng.normal();
        s.vx[j] = sigma * rng.normal();
    }
}

void Propagator::step_nve(DynamicsState& s, double dt, TrapState tp, double drift_tol) {
    const std::size_t n = s.size();
    refresh_forces(s, tp);
    const double e0 = cached_energy_ + kinetic_energy(s);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = 0.5 * dt / s.mu[j];
        s.vz[j] += h * fz_[j];
        s.vx[j] += h * fx_[j];
        s.config.z[j] += dt * s.vz[j];
        s.config.x[j] += dt * s.vx[j];
    }
    refresh_forces(s, tp);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = 0.5 * dt / s.mu[j];
        s.vz[j] += h * fz_[j];
        s.vx[j] += h * fx_[j];
    }
    const double e1 = cached_energy_ + kinetic_energy(s);
    if (!std::isfinite(e1) || std::abs(e1 - e0) > drift_tol * std::abs(e0))
        throw Instability("energy drift in one step exceeds tolerance");
    s.time += dt;
    resort(s);
}

void Propagator::step_langevin(DynamicsState& s, double dt, TrapState tp,
                               double temperature, double eta, GaussianRng& rng) {
    const std::size_t n = s.size();
    refresh_forces(s, tp);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = 0.5 * dt / s.mu[j];
        s.vz[j] += h * fz_[j];
        s.vx[j] += h * fx_[j];
        s.config.z[j] += 0.5 * dt * s.vz[j];
        s.config.x[j] += 0.5 * dt * s.vx[j];
    }
    for (std::size_t j = 0; j < n; ++j) {
        const double gamma = eta / s.mu[j];
        const double c1 = std::exp(-gamma * dt);
        const double c2 = std::sqrt(std::max(0.0, (1.0 - c1 * c1) * temperature / s.mu[j]));
        s.vz[j] = c1 * s.vz[j] + c2 * rng.normal();
        s.vx[j] = c1 * s.vx[j] + c2 * rng.normal();
    }
    for (std::size_t j = 0; j < n; ++j) {
        s.config.z[j] += 0.5 * dt * s.vz[j];
        s.config.x[j] += 0.5 * dt * s.vx[j];
    }
    refresh_forces(s, tp);
    for (std::size_t j = 0; j < n; ++j) {
        const double h = 0.5 * dt / s.mu[j];
        s.vz[j] += h * fz_[j];
        s.vx[j] += h * fx_[j];
        if (!std::isfinite(s.config.z[j]) || std::abs(s.vz[j]) > 1e6)
            throw Instability("non-finite state in Langevin step");
    }
    s.time += dt;
    resort(s);
}

void step_nve(const IonSystem& sys, DynamicsState& state, double dt_s) {
    Propagator prop(sys);
    state_check_size(sys, state);
    prop.step_nve(state, prop.units().time_from_si(dt_s), prop.trap());
}

void step_langevin(const IonSystem& sys, DynamicsState& state, const LangevinParams& p) {
    Propagator prop(sys);
    state_check_size(sys, state);
    GaussianRng rng(state.rng_seed);
    prop.step_langevin(state, prop.units().time_from_si(p.dt_s), prop.trap(),
                       prop.units().temperature_from_kelvin(p.temperature_k),
                       prop.units().friction_from_si(p.eta_kg_per_s), rng);
}

DynamicsState thermalize(const IonSystem& sys, const DynamicsState& state0,
                         const LangevinParams& p, double duration_s) {
    Propagator prop(sys);
    if (p.temperature_k <= 0.0) {
        const Configuration relaxed = minimize_energy(sys, state0.config);
        DynamicsState out = make_state(sys, relaxed, state0.rng_seed);
        out.time = state0.time;
        return out;
    }
    const double damping_s =
        *std::max_element(state0.mu.begin(), state0.mu.end()) /
        prop.units().friction_from_si(p.eta_kg_per_s) * prop.units().time_s();
    if (duration_s < 10.0 * damping_s)
        std::cerr << "thermalize: duration " << duration_s << " s is below ten damping times ("
                  << 10.0 * damping_s << " s); the sample may not be equilibrated\n";

    DynamicsState s = state0;
    GaussianRng rng(s.rng_seed);
    const double temp = prop.units().temperature_from_kelvin(p.temperature_k);
    prop.draw_velocities(s, temp, rng);
    const double dt = prop.units().time_from_si(p.dt_s);
    const double eta = prop.units().friction_from_si(p.eta_kg_per_s);
    const TrapState tp = prop.trap();
    const long steps = std::lround(duration_s / p.dt_s);
    for (long k = 0; k < steps; ++k)
        prop.step_langevin(s, dt, tp, temp, eta, rng);
    return s;
}

QuenchResult run_quench(const IonSystem& sys, const DynamicsState& state0,
                        const RampSchedule& schedule, const LangevinParams& p,
                        const QuenchOptions& opts) {
    state_check_size(sys, state0);
    Propagator prop(sys);
    QuenchResult result;
    DynamicsState s = state0;
    GaussianRng rng(mix_seed(s.rng_seed, 0x71e2c1));

    const double dt = prop.units().time_from_si(p.dt_s);
    const double temp = prop.units().temperature_from_kelvin(p.temperature_k);
    const double eta = prop.units().friction_from_si(p.eta_kg_per_s);
    const double t_end_s = std::max(schedule.total_time_s(), opts.survival_time_s);
    const long total_steps = std::lround(t_end_s / p.dt_s);
    const long ramp_steps = std::lround(schedule.ramp_time_s / p.dt_s);
    const long survival_steps = std::lround(opts.survival_time_s / p.dt_s);
    const double chain_len =
        *std::max_element(s.config.z.begin(), s.config.z.end()) -
        *std::min_element(s.config.z.begin(), s.config.z.end());

    auto snapshot = [&](KinkReport& into) {
        into = detect(s.config, opts.reference, opts.detect);
    };
    auto record_frame = [&](long k) {
        if (opts.frame_stride <= 0 || k % opts.frame_stride != 0)
            return;
        Frame f;
        f.t_s = prop.units().time_to_si(s.time);
        f.z = s.config.z;
        f.x = s.config.x;
        f.vz = s.vz;
        f.vx = s.vx;
        result.frames.push_back(std::move(f));
    };

    record_frame(0);
    for (long k = 0; k < total_steps; ++k) {
        const double t_s = (static_cast<double>(k) + 0.5) * p.dt_s;
        const TrapState tp = prop.trap(schedule.nu_x_hz_at(t_s), schedule.e_field_at(t_s));
        prop.step_langevin(s, dt, tp, temp, eta, rng);
        record_frame(k + 1);
        if ((k & 63) == 0) {
            const double zmax = std::max(std::abs(s.config.z.front()),
                                         std::abs(s.config.z.back()));
            if (zmax > opts.ion_loss_factor * chain_len)
                throw IonLoss("an ion escaped the chain region");
        }
        if (k + 1 == ramp_steps)
            snapshot(result.at_ramp_end);
        if (k + 1 == survival_steps)
            snapshot(result.at_survival);
    }
    if (ramp_steps >= total_steps || ramp_steps == 0)
        snapshot(result.at_ramp_end);
    if (survival_steps >= total_steps)
        snapshot(result.at_survival);
    result.final_state = std::move(s);
    return result;
}

void run_segment(Propagator& prop, DynamicsState& state, const LangevinParams& p,
                 double duration_s,
                 const std::function<TrapState(double t_s)>& program,
                 const SegmentObserver& observer, std::uint64_t stream) {
    GaussianRng rng(mix_seed(state.rng_seed, 0x5e67e2ULL + stream));
    const double dt = prop.units().time_from_si(p.dt_s);
    const double temp = prop.units().temperature_from_kelvin(p.temperature_k);
    const double eta = prop.units().friction_from_si(p.eta_kg_per_s);
    const long steps = std::lround(duration_s / p.dt_s);
    const double t0_s = prop.units().time_to_si(state.time);
    for (long k = 0; k < steps; ++k) {
        const double t_s = (static_cast<double>(k) + 0.5) * p.dt_s;
        prop.step_langevin(state, dt, program(t_s), temp, eta, rng);
        if (observer.stride > 0 && observer.fn && (k + 1) % observer.stride == 0)
            observer.fn(t0_s + (static_cast<double>(k) + 1.0) * p.dt_s, state);
    }
}

} // namespace iontrap
