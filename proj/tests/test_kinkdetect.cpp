#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "iontrap/errors.hpp"
#include "iontrap/kink_detect.hpp"
#include "iontrap/statics.hpp"

#include <algorithm>
#include <cmath>

using namespace iontrap;

namespace {

IonSystem yb30(double nu_x_hz) { return IonSystem::uniform(30, 24.6e3, nu_x_hz); }

// Synthetic zigzag with an odd-kink interface at bond j0 (two neighbours on
// the same side).
Configuration synthetic_kink(std::size_t n, std::size_t j0, double a, double b) {
    Configuration q;
    q.z.resize(n);
    q.x.resize(n);
    int side = 1;
    for (std::size_t j = 0; j < n; ++j) {
        q.z[j] = b * (static_cast<double>(j) - 0.5 * static_cast<double>(n - 1));
        q.x[j] = side * a / 2.0;
        if (j != j0)
            side = -side;  // skipping the flip creates the interface at (j0, j0+1)
    }
    return q;
}

} // namespace

TEST_CASE("odd centre: symmetric interface sits at the midpoint") {
    // ions j=2,3 on the same side at z = -c, +c
    Configuration q({-3.0, -1.0, -0.5, 0.5, 1.0, 3.0},
                    {0.3, -0.3, 0.3, 0.3, -0.3, 0.3});
    CHECK(kink_centre_odd(q, 2) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("odd centre: direct substitution") {
    // j = 0 (even), x_j = 2u, x_{j+1} = u, z = (0, 1) -> X = 2/3
    Configuration q({0.0, 1.0}, {0.2, 0.1});
    CHECK(kink_centre_odd(q, 0) == doctest::Approx(2.0 / 3.0));
    // interface position is inside the bond
    CHECK(kink_centre_odd(q, 0) >= q.z[0]);
    CHECK(kink_centre_odd(q, 0) <= q.z[1]);
}

TEST_CASE("odd centre requires a same-side pair") {
    Configuration q({0.0, 1.0}, {0.2, -0.1});
    CHECK_THROWS_AS(kink_centre_odd(q, 0), NotAKinkInterface);
    CHECK_THROWS_AS(kink_centre_odd(q, 5), NotAKinkInterface);
}

TEST_CASE("extended centre: reference itself has no distortion") {
    Configuration ref({-1.0, 0.0, 1.0}, {0.1, -0.1, 0.1});
    CHECK_THROWS_AS(kink_centre_extended(ref, ref), NoDistortion);
}

TEST_CASE("extended centre: distortion confined to one bond") {
    Configuration ref({-1.5, -0.5, 0.5, 1.5}, {0.0, 0.0, 0.0, 0.0});
    Configuration q = ref;
    // stretch bond (1,2) symmetrically; the weighted average lands on its midpoint
    q.z[1] -= 0.05;
    q.z[2] += 0.05;
    const double mid = 0.5 * (q.z[1] + q.z[2]);
    CHECK(kink_centre_extended(q, ref) == doctest::Approx(mid).epsilon(1e-12));
}

TEST_CASE("extended centre is invariant under order-preserving relabeling") {
    Configuration ref({-1.5, -0.5, 0.5, 1.5}, {0.0, 0.0, 0.0, 0.0});
    Configuration q({-1.55, -0.5, 0.45, 1.5}, {0.1, -0.1, 0.1, -0.1});
    const double x1 = kink_centre_extended(q, ref);
    // scramble the storage order; values are sorted internally
    Configuration scrambled({0.45, -1.55, 1.5, -0.5}, {0.1, 0.1, -0.1, -0.1});
    CHECK(kink_centre_extended(scrambled, ref) == doctest::Approx(x1).epsilon(1e-14));
}

TEST_CASE("detect: relaxed linear chain at 500 kHz") {
    const Configuration lin = relax_linear_chain(yb30(500e3));
    const KinkReport rep = detect(lin);
    CHECK(rep.structure == CrystalStructure::linear);
    CHECK(rep.n_kinks() == 0);
}

TEST_CASE("detect: kink-free zigzag at 140 kHz") {
    const Configuration zz = relax_zigzag(yb30(140e3));
    const KinkReport rep = detect(zz);
    CHECK(rep.structure == CrystalStructure::zigzag);
    CHECK(rep.n_kinks() == 0);
    // extended-kink regime has wider rows than axial spacing
    CHECK(rep.transverse_spacing > rep.axial_spacing);
}

TEST_CASE("detect: seeded kink at 140 kHz is one extended kink near the centre") {
    const IonSystem sys = yb30(140e3);
    const Configuration zz = relax_zigzag(sys);
    const Configuration kinked = seed_kink(sys, zz);
    const KinkReport rep = detect(kinked, &zz);
    CHECK(rep.structure == CrystalStructure::kinked);
    REQUIRE(rep.n_kinks() == 1);
    CHECK(rep.kinks.front().kind == KinkKind::extended);
    CHECK(std::abs(rep.kinks.front().centre) < 2.0 * rep.axial_spacing);
}

TEST_CASE("detect: seeded kink at 236 kHz is odd and localized") {
    const IonSystem sys = yb30(236e3);
    const Configuration zz = relax_zigzag(sys);
    const Configuration kinked = seed_kink(sys, zz);
    const KinkReport rep = detect(kinked, &zz);
    REQUIRE(rep.n_kinks() == 1);
    CHECK(rep.kinks.front().kind == KinkKind::odd);
    CHECK(rep.transverse_spacing < rep.axial_spacing);
    CHECK(rep.kinks.front().interface_index >= 0);
    CHECK(std::abs(rep.kinks.front().centre) < 2.0 * rep.axial_spacing);
}

TEST_CASE("detect: kind follows the a-b band rule across the crossover") {
    // a/b crosses 1 near 209 kHz for 30 ions at 24.6 kHz; the 15% band
    // around it reads intermediate
    for (double nu : {195e3, 204e3, 220e3}) {
        const IonSystem sys = yb30(nu);
        const Configuration zz = relax_zigzag(sys);
        const Configuration kinked = seed_kink(sys, zz);
        const KinkReport rep = detect(kinked, &zz);
        REQUIRE(rep.n_kinks() == 1);
        const double rel = std::abs(rep.transverse_spacing - rep.axial_spacing) /
                           rep.axial_spacing;
        if (rel < 0.15)
            CHECK(rep.kinks.front().kind == KinkKind::intermediate);
        else if (rep.transverse_spacing < rep.axial_spacing)
            CHECK(rep.kinks.front().kind == KinkKind::odd);
        else
            CHECK(rep.kinks.front().kind == KinkKind::extended);
    }
}

TEST_CASE("detect: synthetic double kink counts two") {
    Configuration q = synthetic_kink(30, 9, 0.6, 0.45);
    // add a second interface far from the first: flip everything right of bond 20
    for (std::size_t j = 21; j < q.size(); ++j)
        q.x[j] = -q.x[j];
    const KinkReport rep = detect(q);
    CHECK(rep.structure == CrystalStructure::kinked);
    CHECK(rep.n_kinks() == 2);
}

TEST_CASE("detect: centres negate under z -> -z") {
    const IonSystem sys = yb30(204e3);
    const Configuration zz = relax_zigzag(sys);
    Configuration kinked = seed_kink(sys, zz);
    // move the kink off-centre so the sign is informative: use a synthetic
    // interface offset instead when the seed lands dead centre
    KinkReport rep = detect(kinked, &zz);
    REQUIRE(rep.n_kinks() == 1);
    Configuration mirrored = kinked;
    for (double& z : mirrored.z)
        z = -z;
    const KinkReport rep_m = detect(mirrored, &zz);
    REQUIRE(rep_m.n_kinks() == 1);
    CHECK(rep_m.kinks.front().centre ==
          doctest::Approx(-rep.kinks.front().centre).epsilon(1e-9).scale(1.0));
}

TEST_CASE("detect: uniform transverse offset does not change the report") {
    const IonSystem sys = yb30(140e3);
    const Configuration zz = relax_zigzag(sys);
    Configuration kinked = seed_kink(sys, zz);
    const KinkReport rep = detect(kinked, &zz);
    Configuration shifted = kinked;
    for (double& x : shifted.x)
        x += 2.3;  // the dc-field displacement scale
    const KinkReport rep_s = detect(shifted, &zz);
    CHECK(rep_s.n_kinks() == rep.n_kinks());
    REQUIRE(rep_s.n_kinks() == 1);
    CHECK(rep_s.kinks.front().centre ==
          doctest::Approx(rep.kinks.front().centre).epsilon(1e-6).scale(1.0));
}

TEST_CASE("detect: an ion expelled far from the rows reads as a vacancy, not noise") {
    // kink-free zigzag, then pull one ion far out transversely and close the
    // axial gap it left: 29 in-chain ions in clean alternation
    const IonSystem sys = yb30(140e3);
    Configuration zz = relax_zigzag(sys);
    const KinkReport before = detect(zz);
    REQUIRE(before.structure == CrystalStructure::zigzag);
    Configuration q = zz;
    const std::size_t k = 14;
    q.x[k] += 8.0 * before.transverse_spacing;
    // squeeze neighbours toward the vacancy so the remaining chain is smooth
    for (std::size_t j = 0; j < q.size(); ++j) {
        if (j == k) continue;
        const double shift = 0.5 * before.axial_spacing;
        if (q.z[j] < q.z[k]) q.z[j] += shift * 0.5;
        else q.z[j] -= shift * 0.5;
    }
    const KinkReport rep = detect(q);
    // the far ion must not contribute phantom sign changes
    CHECK(rep.structure != CrystalStructure::disordered);
    CHECK(rep.n_kinks() <= 1);
}
