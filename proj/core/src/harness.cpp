#include "iontrap/harness.hpp"

#include "iontrap/errors.hpp"
#include "iontrap/io.hpp"
#include "iontrap/potential.hpp"
#include "iontrap/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

namespace iontrap {

std::string to_string(Stage s) { return s == Stage::created ? "created" : "survived"; }

IonSystem QuenchScenario::start_system() const {
    IonSystem sys = IonSystem::uniform(n_ions, nu_z_hz, nu_x_start_hz);
    sys.axial_mass_scaling = axial_mass_scaling;
    sys.e_field_v_per_m = e_field_v_per_m;
    for (const DefectSpec& d : defects)
        sys = sys.with_mass_defect(d.position, d.mass_amu);
    return sys;
}

IonSystem QuenchScenario::end_system() const {
    return start_system().with_nu_x(nu_x_end_hz);
}

ScenarioContext prepare_context(const QuenchScenario& sc) {
    ScenarioContext ctx;
    ctx.start_sys = sc.start_system();
    ctx.end_sys = sc.end_system();
    ctx.linear_start = relax_linear_chain(ctx.start_sys);
    ctx.zigzag_reference = relax_zigzag(ctx.end_sys);
    // The reference must be kink-free; a defect can occasionally freeze the
    // alternating seed into a kinked minimum, in which case the mirrored
    // seed relaxes cleanly.
    if (detect(ctx.zigzag_reference, nullptr, sc.detect).structure ==
        CrystalStructure::kinked) {
        Configuration flipped = ctx.zigzag_reference;
        for (double& v : flipped.x) v = -v;
        Configuration alt = minimize_energy(ctx.end_sys, flipped);
        if (detect(alt, nullptr, sc.detect).structure != CrystalStructure::kinked)
            ctx.zigzag_reference = alt;
    }
    return ctx;
}

TrialRecord run_single_trial(const QuenchScenario& sc, const ScenarioContext& ctx,
                             int trial_index) {
    TrialRecord rec;
    rec.trial = trial_index;
    rec.seed = mix_seed(sc.master_seed, static_cast<std::uint64_t>(trial_index));
    const std::size_t tau_index =
        static_cast<std::size_t>(trial_index) / static_cast<std::size_t>(sc.trials_per_tau);
    rec.tau_q_us = sc.tau_q_us.at(tau_index);

    const UnitSystem units = ctx.start_sys.units();
    try {
        DynamicsState state0 = make_state(ctx.start_sys, ctx.linear_start, rec.seed);
        LangevinParams prep = sc.langevin;
        prep.temperature_k = sc.init_temperature_k;
        prep.eta_kg_per_s *= sc.equilibration_eta_factor;
        DynamicsState warm = thermalize(ctx.start_sys, state0, prep, sc.equilibration_s);
        warm.time = 0.0;

        RampSchedule schedule;
        schedule.nu_x_start_hz = sc.nu_x_start_hz;
        schedule.nu_x_end_hz = sc.nu_x_end_hz;
        schedule.ramp_time_s = 2.0 * rec.tau_q_us * 1e-6;  // t_r = 2 tau_Q
        schedule.shape = sc.ramp_shape;
        schedule.hold_time_s =
            std::max(0.0, sc.survival_time_s - schedule.ramp_time_s);

        QuenchOptions qo;
        qo.survival_time_s = sc.survival_time_s;
        qo.detect = sc.detect;
        qo.reference = &ctx.zigzag_reference;

        const QuenchResult res = run_quench(ctx.start_sys, warm, schedule, sc.langevin, qo);
        rec.n_created = static_cast<int>(res.at_ramp_end.n_kinks());
        rec.n_survived = static_cast<int>(res.at_survival.n_kinks());
        for (const DetectedKink& k : res.at_survival.kinks)
            rec.survived_centres_m.push_back(units.length_to_si(k.centre));
    } catch (const IonLoss& e) {
        rec.status = std::string("ion_loss: ") + e.what();
    } catch (const Instability& e) {
        rec.status = std::string("instability: ") + e.what();
    } catch (const NoConvergence& e) {
        rec.status = std::string("no_convergence: ") + e.what();
    }
    return rec;
}

std::vector<TrialRecord> run_scenario(const QuenchScenario& sc, int workers) {
    if (sc.trials_per_tau < 1 || sc.tau_q_us.empty())
        throw ConfigError("scenario needs at least one trial and one tau_Q");
    const ScenarioContext ctx = prepare_context(sc);
    const int total = static_cast<int>(sc.tau_q_us.size()) * sc.trials_per_tau;
    std::vector<TrialRecord> records(total);
    std::atomic<int> next{0};
    auto work = [&]() {
        for (;;) {
            const int i = next.fetch_add(1);
            if (i >= total)
                return;
            records[static_cast<std::size_t>(i)] = run_single_trial(sc, ctx, i);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w)
            pool.emplace_back(work);
        for (std::thread& t : pool)
            t.join();
    }
    return records;
}

// ------------------------------------------------------------- statistics

namespace {

void wilson_interval(int successes, int n, double& lo, double& hi) {
    const double z = 1.959963984540054;
    const double p = static_cast<double>(successes) / n;
    const double z2n = z * z / n;
    const double centre = (p + 0.5 * z2n) / (1.0 + z2n);
    const double half = z * std::sqrt(p * (1.0 - p) / n + 0.25 * z2n * z2n / (z * z)) /
                        (1.0 + z2n);
    lo = std::max(0.0, centre - half);
    hi = centre + half;
}

} // namespace

std::vector<DensityEstimate> density_curve(const std::vector<TrialRecord>& records,
                                           Stage stage) {
    std::vector<double> taus;
    for (const TrialRecord& r : records)
        if (r.status == "ok" &&
            std::find(taus.begin(), taus.end(), r.tau_q_us) == taus.end())
            taus.push_back(r.tau_q_us);
    if (taus.empty())
        throw EmptyGroup("no valid trial records");
    std::sort(taus.begin(), taus.end());

    std::vector<DensityEstimate> out;
    for (double tau : taus) {
        std::vector<int> counts;
        for (const TrialRecord& r : records)
            if (r.status == "ok" && r.tau_q_us == tau)
                counts.push_back(stage == Stage::created ? r.n_created : r.n_survived);
        DensityEstimate e;
        e.tau_q_us = tau;
        e.n_trials = static_cast<int>(counts.size());
        e.stage = stage;
        double sum = 0.0;
        int max_count = 0;
        for (int c : counts) {
            sum += c;
            max_count = std::max(max_count, c);
        }
        e.d = sum / e.n_trials;
        if (max_count <= 1) {
            wilson_interval(static_cast<int>(sum), e.n_trials, e.ci_lo, e.ci_hi);
        } else {
            double var = 0.0;
            for (int c : counts)
                var += (c - e.d) * (c - e.d);
            var = counts.size() > 1 ? var / (counts.size() - 1) : 0.0;
            const double half = 1.959963984540054 * std::sqrt(var / counts.size());
            e.ci_lo = std::max(0.0, e.d - half);
            e.ci_hi = e.d + half;
        }
        out.push_back(e);
    }
    return out;
}

SpatialHistogram spatial_histogram(const std::vector<TrialRecord>& records,
                                   double axial_spacing_m) {
    SpatialHistogram h;
    h.centre_halfwidth_m = 1.5 * axial_spacing_m;
    for (const TrialRecord& r : records) {
        if (r.status != "ok")
            continue;
        for (double x : r.survived_centres_m) {
            if (std::abs(x) <= h.centre_halfwidth_m)
                ++h.centre;
            else if (x < 0.0)
                ++h.left;
            else
                ++h.right;
        }
    }
    return h;
}

// ---------------------------------------------------------- serialization

std::string trial_record_jsonl(const TrialRecord& r) {
    nlohmann::json j;
    j["trial"] = r.trial;
    j["seed"] = r.seed;
    j["tau_q_us"] = r.tau_q_us;
    j["n_kinks_created"] = r.n_created;
    j["n_kinks_survived"] = r.n_survived;
    j["kink_centres_m"] = r.survived_centres_m;
    j["status"] = r.status;
    return j.dump();
}

TrialRecord trial_record_from_jsonl(const std::string& line) {
    TrialRecord r;
    const nlohmann::json j = nlohmann::json::parse(line);
    r.trial = j.at("trial").get<int>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.tau_q_us = j.at("tau_q_us").get<double>();
    r.n_created = j.at("n_kinks_created").get<int>();
    r.n_survived = j.at("n_kinks_survived").get<int>();
    r.survived_centres_m = j.at("kink_centres_m").get<std::vector<double>>();
    r.status = j.at("status").get<std::string>();
    return r;
}

void write_trial_records(const std::string& path, const std::vector<TrialRecord>& records) {
    std::ostringstream out;
    for (const TrialRecord& r : records)
        out << trial_record_jsonl(r) << '\n';
    write_text_file(path, out.str());
}

std::vector<TrialRecord> read_trial_records(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open: " + path);
    std::vector<TrialRecord> out;
    std::string line;
    while (std::getline(in, line))
        if (!line.empty())
            out.push_back(trial_record_from_jsonl(line));
    return out;
}

void write_density_tsv(const std::string& path, const std::vector<DensityEstimate>& rows) {
    std::ostringstream out;
    out << "tau_q_us\tstage\td\tci_lo\tci_hi\tn_trials\n";
    for (const DensityEstimate& e : rows)
        out << format_double(e.tau_q_us) << '\t' << to_string(e.stage) << '\t'
            << format_double(e.d) << '\t' << format_double(e.ci_lo) << '\t'
            << format_double(e.ci_hi) << '\t' << e.n_trials << '\n';
    write_text_file(path, out.str());
}

void write_histogram_tsv(const std::string& path, const SpatialHistogram& hist) {
    std::ostringstream out;
    out << "region\tcount\n";
    out << "left\t" << hist.left << '\n';
    out << "centre\t" << hist.centre << '\n';
    out << "right\t" << hist.right << '\n';
    write_text_file(path, out.str());
}

// -------------------------------------------------------------- protocols

namespace {

IonSystem protocol_system(const FieldProtocolConfig& c) {
    IonSystem sys = IonSystem::uniform(c.n_ions, c.nu_z_hz, c.nu_x_hz);
    sys.axial_mass_scaling = c.axial_mass_scaling;
    for (const DefectSpec& d : c.defects)
        sys = sys.with_mass_defect(d.position, d.mass_amu);
    return sys;
}

struct ProtocolRun {
    IonSystem sys;
    Configuration zigzag;
    Propagator prop;
    DynamicsState state;
    std::size_t defect_label;
    double b;  // axial spacing, natural units
    ProtocolOutcome outcome;
    DetectOptions detect_opts;

    ProtocolRun(const FieldProtocolConfig& c, const Configuration& start,
                const Configuration& zz)
        : sys(protocol_system(c)),
          zigzag(zz),
          prop(sys),
          state(make_state(sys, start, c.seed)),
          defect_label(c.defects.empty() ? 0 : c.defects.front().position) {
        b = detect(zigzag, nullptr, detect_opts).axial_spacing;
        outcome.axial_spacing_m = prop.units().length_to_si(b);
    }

    void observe(double t_s) {
        TimedReport tr;
        tr.t_s = t_s;
        tr.report = detect(state.config, &zigzag, detect_opts);
        tr.defect_z_m =
            prop.units().length_to_si(state.config.z[state.slot_of(defect_label)]);
        outcome.max_simultaneous_kinks = std::max(
            outcome.max_simultaneous_kinks, static_cast<int>(tr.report.n_kinks()));
        outcome.history.push_back(std::move(tr));
    }

    SegmentObserver observer(int stride) {
        SegmentObserver obs;
        obs.stride = stride;
        obs.fn = [this](double t_s, const DynamicsState&) { observe(t_s); };
        return obs;
    }

    void finish() {
        outcome.final_report = detect(state.config, &zigzag, detect_opts);
        outcome.final_defect_z_m =
            prop.units().length_to_si(state.config.z[state.slot_of(defect_label)]);
    }

    double kink_to_defect_m() const {
        double best = std::numeric_limits<double>::infinity();
        for (const DetectedKink& k : outcome.final_report.kinks)
            best = std::min(best, std::abs(prop.units().length_to_si(k.centre) -
                                           outcome.final_defect_z_m));
        return best;
    }
};

} // namespace

ProtocolOutcome run_drag_protocol(const DragProtocol& p) {
    const IonSystem sys = protocol_system(p.common);
    const Configuration zigzag = relax_zigzag(sys);
    const Configuration kinked = seed_kink(sys, zigzag);
    ProtocolRun run(p.common, kinked, zigzag);

    const double z_defect_0 =
        run.prop.units().length_to_si(zigzag.z[p.common.defects.front().position]);
    const double b_m = run.outcome.axial_spacing_m;

    LangevinParams base = p.common.langevin;
    base.temperature_k = p.common.base_temperature_k;
    LangevinParams hot = base;
    hot.temperature_k = p.heat_temperature_k;

    const double field = p.field_v_per_m;
    auto ramped = [&](double t_s) {
        return run.prop.trap(sys.nu_x_hz, field * std::min(1.0, t_s / p.field_ramp_s));
    };
    auto held = [&](double) { return run.prop.trap(sys.nu_x_hz, field); };

    run.observe(0.0);
    run_segment(run.prop, run.state, base, p.field_ramp_s, ramped,
                run.observer(p.common.observe_stride), 1);
    run_segment(run.prop, run.state, hot, p.heat_duration_s, held,
                run.observer(p.common.observe_stride), 2);
    run_segment(run.prop, run.state, base, p.settle_duration_s, held,
                run.observer(p.common.observe_stride), 3);
    run.finish();

    ProtocolOutcome out = std::move(run.outcome);
    const bool started_off_centre = std::abs(z_defect_0) > 3.0 * b_m;
    const bool kink_at_defect =
        out.final_report.n_kinks() >= 1 && run.kink_to_defect_m() <= 2.0 * b_m;
    const bool centred = std::abs(out.final_defect_z_m) <= 2.5 * b_m;
    out.success = started_off_centre && kink_at_defect && centred;
    std::ostringstream detail;
    detail << "defect z0 = " << z_defect_0 << " m, final z = " << out.final_defect_z_m
           << " m, kinks = " << out.final_report.n_kinks();
    out.detail = detail.str();
    return out;
}

std::optional<double> drag_threshold_field(const DragProtocol& base,
                                           const std::vector<double>& fields,
                                           const std::vector<std::uint64_t>& seeds) {
    for (double field : fields) {
        int wins = 0;
        for (std::uint64_t seed : seeds) {
            DragProtocol p = base;
            p.field_v_per_m = field;
            p.common.seed = seed;
            if (run_drag_protocol(p).success)
                ++wins;
        }
        if (2 * wins > static_cast<int>(seeds.size()))
            return field;
    }
    return std::nullopt;
}

ProtocolOutcome run_field_ramp_creation(const FieldRampCreation& p) {
    const IonSystem sys = protocol_system(p.common);
    const Configuration zigzag = relax_zigzag(sys);
    ProtocolRun run(p.common, zigzag, zigzag);
    const double b_m = run.outcome.axial_spacing_m;

    LangevinParams base = p.common.langevin;
    base.temperature_k = p.common.base_temperature_k;

    const double field = p.field_max_v_per_m;
    auto ramped = [&](double t_s) {
        return run.prop.trap(sys.nu_x_hz, field * std::min(1.0, t_s / p.ramp_s));
    };
    auto held = [&](double) { return run.prop.trap(sys.nu_x_hz, field); };

    run.observe(0.0);
    run_segment(run.prop, run.state, base, p.ramp_s, ramped,
                run.observer(p.common.observe_stride), 1);
    run_segment(run.prop, run.state, base, p.settle_s, held,
                run.observer(p.common.observe_stride), 2);
    run.finish();

    ProtocolOutcome out = std::move(run.outcome);
    const bool pair_seen = out.max_simultaneous_kinks >= 2;
    const bool one_left = out.final_report.n_kinks() == 1;
    const bool at_defect = one_left && run.kink_to_defect_m() <= 2.0 * b_m;
    out.success = pair_seen && one_left && at_defect;
    std::ostringstream detail;
    detail << "max simultaneous kinks = " << out.max_simultaneous_kinks
           << ", final kinks = " << out.final_report.n_kinks()
           << ", defect z = " << out.final_defect_z_m << " m";
    out.detail = detail.str();
    return out;
}

ProtocolOutcome run_pair_creation_quench(const PairCreationQuench& p) {
    if (p.common.defects.size() != 2)
        throw ConfigError("pair creation needs exactly two defects");
    QuenchScenario sc;
    sc.n_ions = p.common.n_ions;
    sc.nu_z_hz = p.common.nu_z_hz;
    sc.nu_x_start_hz = p.nu_x_start_hz;
    sc.nu_x_end_hz = p.common.nu_x_hz;
    sc.axial_mass_scaling = p.common.axial_mass_scaling;
    sc.defects = p.common.defects;
    sc.tau_q_us = {p.tau_q_us};
    sc.trials_per_tau = 1;
    sc.master_seed = p.common.seed;
    sc.e_field_v_per_m = p.field_v_per_m;
    sc.init_temperature_k = p.init_temperature_k;
    sc.langevin = p.common.langevin;
    sc.survival_time_s = p.survival_time_s;

    const ScenarioContext ctx = prepare_context(sc);
    const TrialRecord rec = run_single_trial(sc, ctx, 0);

    ProtocolOutcome out;
    out.axial_spacing_m = 0.0;
    const auto& d0 = p.common.defects[0];
    const auto& d1 = p.common.defects[1];
    const std::size_t between =
        (d1.position > d0.position ? d1.position - d0.position : d0.position - d1.position) - 1;
    const bool expect_kink = between % 2 == 0;
    out.max_simultaneous_kinks = rec.n_survived;
    out.final_defect_z_m = 0.0;
    out.success = rec.status == "ok" &&
                  (expect_kink ? rec.n_survived % 2 == 1 : rec.n_survived % 2 == 0);
    std::ostringstream detail;
    detail << "ions between defects = " << between << ", survived kinks = "
           << rec.n_survived << ", status = " << rec.status;
    out.detail = detail.str();
    return out;
}

} // namespace iontrap
