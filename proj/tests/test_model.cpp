#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iontrap/errors.hpp"
#include "iontrap/ion_system.hpp"
#include "iontrap/potential.hpp"
#include "iontrap/units.hpp"

#include "oracles.hpp"

#include <cmath>

using namespace iontrap;

namespace {

IonSystem yb30(double nu_x_hz = 140e3) { return IonSystem::uniform(30, 24.6e3, nu_x_hz); }

} // namespace

TEST_CASE("unit system scales and 12-digit round trip") {
    const UnitSystem u(172.0, 24.6e3);
    // l = (e^2/(4 pi eps0 m w_z^2))^(1/3): tens of micrometers for Yb at 24.6 kHz
    CHECK(u.length_m() > 1e-5);
    CHECK(u.length_m() < 1e-4);
    CHECK(u.time_s() == doctest::Approx(1.0 / (2.0 * constants::pi * 24.6e3)));

    const double vals[] = {1.0, 3.7e-5, 2.2e8, 9.1e-31};
    for (double v : vals) {
        CHECK(u.length_to_si(u.length_from_si(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(u.energy_to_si(u.energy_from_si(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(u.time_to_si(u.time_from_si(v)) == doctest::Approx(v).epsilon(1e-12));
        CHECK(u.efield_to_si(u.efield_from_si(v)) == doctest::Approx(v).epsilon(1e-12));
    }
    // temperature scale is energy/k_B
    CHECK(u.temperature_k() == doctest::Approx(u.energy_j() / constants::boltzmann));
}

TEST_CASE("single ion at the origin has zero energy and gradient") {
    IonSystem sys = IonSystem::uniform(1, 24.6e3, 500e3);
    Configuration q({0.0}, {0.0});
    CHECK(potential_energy(sys, q) == 0.0);
    for (double g : gradient(sys, q))
        CHECK(g == 0.0);
}

TEST_CASE("two equal ions: analytic equilibrium spacing s^3 = 2 l^3") {
    IonSystem sys = IonSystem::uniform(2, 24.6e3, 500e3);
    const double s = std::cbrt(2.0);
    Configuration q({-s / 2.0, s / 2.0}, {0.0, 0.0});
    const auto g = gradient(sys, q);
    for (double v : g)
        CHECK(std::abs(v) < 1e-10);
}

TEST_CASE("three equal ions: equilibrium at (5/4)^(1/3) from the centre") {
    // Independent reduction: V(d) = d^2 + 5/(2d) over symmetric placements,
    // stationary at d^3 = 5/4.
    const double d = std::cbrt(5.0 / 4.0);
    CHECK(d == doctest::Approx(1.0772).epsilon(1e-4));

    IonSystem sys = IonSystem::uniform(3, 24.6e3, 500e3);
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    auto fg = [&](const std::vector<double>& v, std::vector<double>& grad) {
        Configuration q = unpack(v);
        gradient_into(c, TrapState::from(c), q, grad);
        return potential_energy(c, q);
    };
    std::vector<double> x0 = {-0.8, 0.1, 0.9, 0.01, -0.02, 0.015};
    const auto xmin = oracles::bb_descent(fg, x0);
    CHECK(xmin[0] == doctest::Approx(-d).epsilon(1e-6));
    CHECK(xmin[1] == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(xmin[2] == doctest::Approx(d).epsilon(1e-6));
}

TEST_CASE("analytic gradient matches central finite differences") {
    GaussianRng rng(42);
    IonSystem sys = IonSystem::uniform(8, 24.6e3, 140e3);
    sys = sys.with_mass_defect(3, 220.0);
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    auto energy_of = [&](const std::vector<double>& v) {
        return potential_energy(c, unpack(v));
    };
    for (int trial = 0; trial < 100; ++trial) {
        const Configuration q = oracles::random_configuration(8, rng);
        const auto g = gradient(sys, q);
        const auto g_fd = oracles::fd_gradient(energy_of, pack(q));
        double err2 = 0.0, ref2 = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) {
            err2 += (g[i] - g_fd[i]) * (g[i] - g_fd[i]);
            ref2 += g_fd[i] * g_fd[i];
        }
        CHECK(std::sqrt(err2 / ref2) < 1e-6);
    }
}

TEST_CASE("field term enters the gradient as a constant transverse pull") {
    GaussianRng rng(4242);
    IonSystem sys = IonSystem::uniform(8, 24.6e3, 140e3).with_e_field(40.0);
    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    const IonSystem off = sys.with_e_field(0.0);
    const Configuration q = oracles::random_configuration(8, rng);
    const auto g_on = gradient(sys, q);
    const auto g_off = gradient(off, q);
    for (std::size_t j = 0; j < 8; ++j) {
        CHECK(g_on[j] == doctest::Approx(g_off[j]));  // z untouched
        CHECK(g_on[8 + j] - g_off[8 + j] ==
              doctest::Approx(-c.efield).epsilon(1e-12));
    }
}

TEST_CASE("coincident ions are rejected") {
    IonSystem sys = IonSystem::uniform(2, 24.6e3, 500e3);
    Configuration q({0.3, 0.3}, {-0.1, -0.1});
    CHECK_THROWS_AS(potential_energy(sys, q), CoincidentIons);
    CHECK_THROWS_AS(gradient(sys, q), CoincidentIons);
    CHECK_THROWS_AS(hessian(sys, q), CoincidentIons);
}

TEST_CASE("Coulomb part is invariant under global axial translation") {
    GaussianRng rng(7);
    const std::size_t n = 10;
    const Configuration q = oracles::random_configuration(n, rng);
    Configuration shifted = q;
    for (double& z : shifted.z)
        z += 1.7;
    // trap terms off: compare the raw pair sums
    const std::vector<double> zero(n, 0.0);
    TrapState off{0.0, 0.0};
    const double v0 = energy_kernel(q.z.data(), q.x.data(), n, zero.data(), zero.data(), off);
    const double v1 = energy_kernel(shifted.z.data(), shifted.x.data(), n, zero.data(),
                                    zero.data(), off);
    CHECK(std::abs(v1 - v0) < 1e-12 * std::abs(v0));
}

TEST_CASE("mirror symmetries of the potential") {
    GaussianRng rng(3);
    IonSystem sys = yb30(204e3);
    const Configuration q = oracles::random_configuration(30, rng);

    SUBCASE("x -> -x with no field") {
        Configuration m = q;
        for (double& x : m.x)
            x = -x;
        CHECK(potential_energy(sys, m) == potential_energy(sys, q));
    }
    SUBCASE("z -> -z with equal masses") {
        Configuration m = q;
        for (double& z : m.z)
            z = -z;
        CHECK(potential_energy(sys, m) == doctest::Approx(potential_energy(sys, q))
                                              .epsilon(1e-14));
    }
    SUBCASE("x -> -x is broken by a field") {
        IonSystem f = sys.with_e_field(50.0);
        Configuration m = q;
        for (double& x : m.x)
            x = -x;
        CHECK(potential_energy(f, m) != potential_energy(f, q));
    }
}

TEST_CASE("hessian is exactly symmetric and matches FD of the gradient") {
    GaussianRng rng(11);
    IonSystem sys = IonSystem::uniform(6, 24.6e3, 300e3);
    sys = sys.with_mass_defect(2, 188.0);
    const Configuration q = oracles::random_configuration(6, rng);
    const Eigen::MatrixXd h = hessian(sys, q);
    CHECK((h - h.transpose()).lpNorm<Eigen::Infinity>() == 0.0);

    const ScaledCoeffs c = ScaledCoeffs::from(sys);
    const double fd_h = 1e-6;
    std::vector<double> base = pack(q);
    for (std::size_t i = 0; i < base.size(); ++i) {
        std::vector<double> vp = base, vm = base;
        vp[i] += fd_h;
        vm[i] -= fd_h;
        const auto gp = gradient(c, unpack(vp));
        const auto gm = gradient(c, unpack(vm));
        for (std::size_t j = 0; j < base.size(); ++j) {
            const double fd = (gp[j] - gm[j]) / (2.0 * fd_h);
            CHECK(h(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) ==
                  doctest::Approx(fd).epsilon(5e-5).scale(1.0));
        }
    }
}

TEST_CASE("single-ion normal modes follow the mass-scaling flag") {
    IonSystem sys = IonSystem::uniform(1, 24.6e3, 500e3);
    sys.masses_amu[0] = 220.0;
    const double ratio = 172.0 / 220.0;
    Configuration q({0.0}, {0.0});

    SUBCASE("paper scaling: both frequencies scale as m/m_j") {
        const auto f = normal_mode_frequencies_hz(sys, q);
        CHECK(f[0] == doctest::Approx(24.6e3 * ratio).epsilon(1e-10));
        CHECK(f[1] == doctest::Approx(500e3 * ratio).epsilon(1e-10));
    }
    SUBCASE("static scaling: axial frequency scales as sqrt(m/m_j)") {
        sys.axial_mass_scaling = AxialMassScaling::static_dc;
        const auto f = normal_mode_frequencies_hz(sys, q);
        CHECK(f[0] == doctest::Approx(24.6e3 * std::sqrt(ratio)).epsilon(1e-10));
        CHECK(f[1] == doctest::Approx(500e3 * ratio).epsilon(1e-10));
    }
}

TEST_CASE("zigzag mode of the 30-ion linear chain softens at the critical point") {
    IonSystem sys = yb30(500e3);
    const double crit = critical_nu_x_hz(sys, 200e3, 500e3);
    // The rule-of-thumb 0.73 N^0.86 overestimates the exact soft-mode
    // threshold of this Hamiltonian by ~12% at N = 30; the acceptance suite
    // reports that comparison. Here: consistency between the eigen
    // threshold, a homogeneous-chain estimate from the central spacing, and
    // a direct buckling oracle.
    const double formula = 0.73 * std::pow(30.0, 0.86) * 24.6e3;
    CHECK(formula == doctest::Approx(334.7e3).epsilon(5e-3));
    CHECK(crit > 0.75 * formula);
    CHECK(crit < 1.1 * formula);

    // homogeneous estimate: nu_z sqrt(3.5 zeta(3) / d_c^3) with the central
    // spacing of the relaxed chain
    {
        const ScaledCoeffs c = ScaledCoeffs::from(sys);
        std::vector<double> z0(30);
        for (std::size_t j = 0; j < 30; ++j)
            z0[j] = 0.62 * (static_cast<double>(j) - 14.5);
        auto fg = [&](const std::vector<double>& v, std::vector<double>& grad) {
            Configuration q;
            q.z = v;
            q.x.assign(30, 0.0);
            std::vector<double> full;
            gradient_into(c, TrapState::from(c), q, full);
            grad.assign(full.begin(), full.begin() + 30);
            return potential_energy(c, q);
        };
        const auto zmin = oracles::bb_descent(fg, z0, 1e-10);
        const double d_c = zmin[15] - zmin[14];
        const double est = 24.6e3 * std::sqrt(3.5 * 1.2020569031595943 / (d_c * d_c * d_c));
        CHECK(crit == doctest::Approx(est).epsilon(0.05));
    }

    // the lowest transverse eigenvalue changes sign across the threshold
    auto lowest_transverse = [&](double nu_x) {
        IonSystem s2 = sys.with_nu_x(nu_x);
        const ScaledCoeffs c = ScaledCoeffs::from(s2);
        std::vector<double> z0(30);
        for (std::size_t j = 0; j < 30; ++j)
            z0[j] = 0.62 * (static_cast<double>(j) - 14.5);
        auto fg = [&](const std::vector<double>& v, std::vector<double>& grad) {
            Configuration q;
            q.z = v;
            q.x.assign(30, 0.0);
            std::vector<double> full;
            gradient_into(c, TrapState::from(c), q, full);
            grad.assign(full.begin(), full.begin() + 30);
            return potential_energy(c, q);
        };
        const auto zmin = oracles::bb_descent(fg, z0, 1e-10);
        Configuration q;
        q.z = zmin;
        q.x.assign(30, 0.0);
        const auto freqs = normal_mode_frequencies_hz(s2, q);
        return freqs.front();
    };
    CHECK(lowest_transverse(crit + 15e3) > 0.0);
    CHECK(lowest_transverse(crit - 15e3) < 0.0);
}

TEST_CASE("ion system config parsing") {
    const std::string text = R"({
        "n_ions": 30,
        "nu_z_hz": 24.6e3,
        "nu_x_hz": 140e3,
        "e_field_v_per_m": 12.5,
        "axial_mass_scaling": "paper",
        "defects": [{"position": 11, "mass_amu": 220}]
    })";
    const IonSystem sys = ion_system_from_json_text(text);
    CHECK(sys.size() == 30);
    CHECK(sys.masses_amu[11] == 220.0);
    CHECK(sys.masses_amu[10] == 172.0);
    CHECK(sys.e_field_v_per_m == 12.5);

    CHECK_THROWS_AS(ion_system_from_json_text("{"), ConfigError);
    CHECK_THROWS_AS(ion_system_from_json_text(R"({"n_ions": 3})"), ConfigError);
    CHECK_THROWS_AS(ion_system_from_json_text(
                        R"({"n_ions": 3, "nu_z_hz": -1, "nu_x_hz": 1})"),
                    ConfigError);

    const IonSystem back = ion_system_from_json_text(ion_system_to_json_text(sys));
    CHECK(back.masses_amu == sys.masses_amu);
    CHECK(back.nu_x_hz == sys.nu_x_hz);
}
