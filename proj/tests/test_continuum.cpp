#include <qmeasure/continuum.hpp>
#include <qmeasure/propagator.hpp>
#include <qmeasure/quadrature.hpp>

#include <catch2/catch_amalgamated.hpp>

using namespace qm;
using Catch::Approx;

namespace {

constexpr double kPi = 3.14159265358979323846;

WaveFn gaussian(double x0, double p0, double s) {
    return [=](double x) -> Cx {
        double mag = std::pow(2.0 * kPi * s * s, -0.25) *
                     std::exp(-(x - x0) * (x - x0) / (4.0 * s * s));
        return mag * std::exp(Cx{0.0, p0 * x});
    };
}

} // namespace

TEST_CASE("propagator closed forms") {
    SECTION("free particle at the origin") {
        auto spec = PropagatorSpec::free_particle();
        Cx k = std::get<Cx>(propagator_value(spec, 0.0, 1.0, 0.0, 0.0));
        // (2 pi i)^{-1/2}
        CHECK(k.real() == Approx(0.2820947917738781).epsilon(1e-14));
        CHECK(k.imag() == Approx(-0.2820947917738781).epsilon(1e-14));
    }
    SECTION("free particle in d dimensions factorizes") {
        auto s1 = PropagatorSpec::free_particle(1);
        auto s3 = PropagatorSpec::free_particle(3);
        Cx k1 = std::get<Cx>(propagator_value(s1, 0.3, 0.7, -0.2, 0.0));
        Cx k3 = std::get<Cx>(
            propagator_value(s3, {0.3, 0.3, 0.3}, 0.7, {-0.2, -0.2, -0.2}, 0.0));
        CHECK(std::abs(k3 - k1 * k1 * k1) < 1e-14);
    }
    SECTION("half-line kernel vanishes off the positive axis") {
        auto spec = PropagatorSpec::half_line();
        CHECK(std::get<Cx>(propagator_value(spec, 1.0, 1.0, -1.0, 0.0)) == Cx{0.0, 0.0});
        CHECK(std::get<Cx>(propagator_value(spec, -0.5, 1.0, 1.0, 0.0)) == Cx{0.0, 0.0});
        CHECK(std::get<Cx>(propagator_value(spec, 0.0, 1.0, 1.0, 0.0)) == Cx{0.0, 0.0});
        CHECK(std::abs(std::get<Cx>(propagator_value(spec, 1.0, 1.0, 1.0, 0.0))) > 0.0);
    }
    SECTION("isotropic SHO factorizes over axes") {
        auto s1 = PropagatorSpec::sho(1.3, 1);
        auto s2 = PropagatorSpec::sho(1.3, 2);
        Cx a = std::get<Cx>(propagator_value(s1, 0.4, 0.9, -0.1, 0.0));
        Cx b = std::get<Cx>(propagator_value(s1, -0.2, 0.9, 0.5, 0.0));
        Cx k2 = std::get<Cx>(propagator_value(s2, {0.4, -0.2}, 0.9, {-0.1, 0.5}, 0.0));
        CHECK(std::abs(k2 - a * b) < 1e-14);
    }
    SECTION("SHO caustics return a tagged delta") {
        auto spec = PropagatorSpec::sho(2.0);
        auto v = propagator_value(spec, 0.5, kPi / 2.0, 0.1, 0.0); // dt = pi/omega
        REQUIRE(std::holds_alternative<DeltaTag>(v));
        DeltaTag tag = std::get<DeltaTag>(v);
        CHECK(tag.caustic_index == 1);
        CHECK(tag.parity == -1);
        CHECK(std::abs(tag.phase - Cx{0.0, -1.0}) < 1e-12);

        auto v2 = propagator_value(spec, 0.5, kPi, 0.1, 0.0); // dt = 2 pi/omega
        DeltaTag tag2 = std::get<DeltaTag>(v2);
        CHECK(tag2.caustic_index == 2);
        CHECK(tag2.parity == 1);
        CHECK(std::abs(tag2.phase - Cx{-1.0, 0.0}) < 1e-12);
    }
    SECTION("near-caustic separations are refused") {
        auto spec = PropagatorSpec::sho(1.0);
        CHECK_THROWS_AS(propagator_value(spec, 0.0, kPi - 5e-4, 0.0, 0.0), NumericalError);
    }
    SECTION("reversed times are a usage error") {
        auto spec = PropagatorSpec::free_particle();
        CHECK_THROWS_AS(propagator_value(spec, 0.0, 0.0, 0.0, 1.0), UsageError);
    }
    SECTION("constant vector potential only shifts the phase") {
        auto free = PropagatorSpec::free_particle();
        auto va = PropagatorSpec::vector_potential({0.7}, 1.3);
        Rng rng(7);
        for (int t = 0; t < 50; ++t) {
            double xp = rng.uniform(-3, 3), x = rng.uniform(-3, 3);
            Cx kf = std::get<Cx>(propagator_value(free, xp, 1.0, x, 0.0));
            Cx ka = std::get<Cx>(propagator_value(va, xp, 1.0, x, 0.0));
            CHECK(std::abs(ka) == Approx(std::abs(kf)).epsilon(1e-14));
        }
    }
}

TEST_CASE("ESCK composition against the closed form") {
    GridSpec gs;
    gs.lo = -18.0;
    gs.hi = 18.0;
    gs.rad_per_panel = 4.0;
    ConvergenceLadder lad({0.32, 0.16, 0.08, 0.04, 0.02});

    SECTION("free particle at the origin and at random points") {
        auto spec = PropagatorSpec::free_particle();
        CHECK(check_esck(spec, 0.0, 1.0, 0.0, 0.0, 0.5, lad, gs).residual < 1e-3);
        Rng rng(19);
        for (int t = 0; t < 6; ++t) {
            double x3 = rng.uniform(-2, 2), x1 = rng.uniform(-2, 2);
            CHECK(check_esck(spec, x3, 1.0, x1, 0.0, 0.5, lad, gs).residual < 1e-3);
        }
    }
    SECTION("SHO off caustic") {
        auto spec = PropagatorSpec::sho(1.0);
        CHECK(check_esck(spec, 0.4, 1.3, -0.3, 0.0, 0.7, lad, gs).residual < 1e-2);
        CHECK(check_esck(spec, 1.5, 1.3, 0.9, 0.0, 0.7, lad, gs).residual < 1e-2);
    }
    SECTION("caustic intervals are reported inapplicable") {
        auto spec = PropagatorSpec::sho(1.0);
        EsckResult r = check_esck(spec, 0.0, kPi, 0.0, 0.0, 1.2, lad, gs);
        CHECK_FALSE(r.applicable);
    }
    SECTION("vector potential composes too") {
        auto spec = PropagatorSpec::vector_potential({0.4});
        CHECK(check_esck(spec, 0.7, 1.0, -0.4, 0.0, 0.5, lad, gs).residual < 1e-3);
    }
}

TEST_CASE("unrestricted evolution is unitary on the grid") {
    GridSpec gs;
    ConvergenceLadder lad;
    SECTION("free particle two-time and three-time") {
        auto spec = PropagatorSpec::free_particle();
        QuadGrid fg = gs.full_grid(gs.panel_width_for(spec, 0.5));
        WaveFunction w = evolve_unrestricted(gaussian(0, 0.7, 1.0), 1.0, spec, lad, gs, fg, {0.5});
        CHECK(w.norm() == Approx(1.0).margin(1e-6));
        EvolutionDiagnostics diag;
        WaveFunction w2 = restricted_evolution_homogeneous(
            gaussian(0, 0.7, 1.0), HomogeneousEvent::all(1.0), spec, lad, gs, fg, &diag);
        CHECK(w2.norm() == Approx(1.0).margin(1e-6));
        CHECK(diag.laddered_slots == 1);
    }
    SECTION("vector potential") {
        auto spec = PropagatorSpec::vector_potential({0.5});
        QuadGrid fg = gs.full_grid(gs.panel_width_for(spec, 1.0));
        WaveFunction w = evolve_unrestricted(gaussian(0, 0.0, 1.0), 1.0, spec, lad, gs, fg, {});
        CHECK(w.norm() == Approx(1.0).margin(1e-6));
    }
    SECTION("SHO off caustic") {
        auto spec = PropagatorSpec::sho(1.0);
        QuadGrid fg = gs.full_grid(gs.panel_width_for(spec, 1.1));
        WaveFunction w = evolve_unrestricted(gaussian(0.8, 0.0, 0.9), 1.1, spec, lad, gs, fg, {});
        CHECK(w.norm() == Approx(1.0).margin(1e-6));
    }
}

TEST_CASE("restricted evolution") {
    GridSpec gs;
    ConvergenceLadder lad;
    auto spec = PropagatorSpec::free_particle();

    SECTION("a box holding nearly all the mass changes almost nothing") {
        // [-5,5] holds all but ~1e-8 of a sigma=0.8 Gaussian's mass
        WaveFn psi = gaussian(0, 0.0, 0.8);
        QuadGrid fg = gs.full_grid(gs.panel_width_for(spec, 1.0));
        HomogeneousEvent restricted({0.0, 1.0}, {Region::interval(-5.0, 5.0), Region::full(1)});
        WaveFunction wr = restricted_evolution_homogeneous(psi, restricted, spec, lad, gs, fg);
        WaveFunction wu = evolve_unrestricted(psi, 1.0, spec, lad, gs, fg, {});
        CHECK(l2_distance(wr, wu) < 1e-3);
    }

    SECTION("final-slot characteristic function is exact on the aligned grid") {
        WaveFn psi = gaussian(0, 0.0, 1.0);
        HomogeneousEvent ev({0.0, 1.0}, {Region::full(1), Region::interval(0.0, 1.5)});
        ContinuumEvent ce = ContinuumEvent::single(ev);
        QuadGrid fg = make_final_grid({&ce}, spec, gs);
        WaveFunction w = restricted_evolution_homogeneous(psi, ev, spec, lad, gs, fg);
        for (std::size_t i = 0; i < fg.size(); ++i) {
            double x = fg.nodes()[i];
            if (x < 0.0 || x > 1.5)
                CHECK(w.values(static_cast<Eigen::Index>(i)) == Cx{0.0, 0.0});
        }
    }

    SECTION("bounded regions outside the working box are a usage error") {
        WaveFn psi = gaussian(0, 0.0, 1.0);
        QuadGrid fg = gs.full_grid(0.25);
        HomogeneousEvent ev({0.0, 1.0}, {Region::interval(-40.0, -20.0), Region::full(1)});
        CHECK_THROWS_AS(restricted_evolution_homogeneous(psi, ev, spec, lad, gs, fg),
                        UsageError);
    }
}

TEST_CASE("continuum decoherence functional") {
    GridSpec gs;
    ConvergenceLadder lad;
    auto spec = PropagatorSpec::free_particle();
    WaveFn psi = gaussian(0, 0.0, 1.0);

    SECTION("normalization") {
        ContinuumEvent omega = ContinuumEvent::single(HomogeneousEvent::all(1.0));
        Cx d = decoherence_continuum(omega, omega, psi, spec, lad, gs);
        CHECK(std::abs(d - Cx{1.0, 0.0}) < 1e-4);
    }

    SECTION("two-slit interference violates classical additivity") {
        // broad coherent state through two slits at t2, measured in a common
        // final window inside the central fringe
        GridSpec wide = gs;
        wide.lo = -16.0;
        wide.hi = 16.0;
        WaveFn broad = gaussian(0, 0.0, 2.0);
        Region slit_a = Region::interval(-1.4, -0.6);
        Region slit_b = Region::interval(0.6, 1.4);
        Region window = Region::interval(-1.2, 1.2);
        std::vector<double> ts{0.0, 0.4, 2.0};
        ContinuumEvent a =
            ContinuumEvent::single(HomogeneousEvent(ts, {Region::full(1), slit_a, window}));
        ContinuumEvent b =
            ContinuumEvent::single(HomogeneousEvent(ts, {Region::full(1), slit_b, window}));
        ContinuumEvent ab = continuum_union(a, b);

        double mu_a = quantal_measure_continuum(a, broad, spec, lad, wide);
        double mu_b = quantal_measure_continuum(b, broad, spec, lad, wide);
        double mu_ab = quantal_measure_continuum(ab, broad, spec, lad, wide);
        Cx d_ab = decoherence_continuum(a, b, broad, spec, lad, wide);
        Cx d_ba = decoherence_continuum(b, a, broad, spec, lad, wide);

        double interference = mu_ab - mu_a - mu_b;
        CHECK(std::abs(interference) > 1e-2);
        CHECK(std::abs(d_ab - std::conj(d_ba)) < 1e-6);
        CHECK(interference == Approx(2.0 * d_ab.real()).margin(1e-6));
    }

    SECTION("disjoint final boxes give orthogonal restricted states") {
        HomogeneousEvent ha({0.0, 1.0}, {Region::full(1), Region::interval(-2.0, -0.5)});
        HomogeneousEvent hb({0.0, 1.0}, {Region::full(1), Region::interval(0.5, 2.0)});
        Cx d = decoherence_continuum(ContinuumEvent::single(ha), ContinuumEvent::single(hb), psi,
                                     spec, lad, gs);
        CHECK(std::abs(d) < 1e-12);
    }
}

TEST_CASE("half-line support is exact") {
    GridSpec gs;
    gs.lo = -6.0;
    gs.hi = 14.0;
    // the state sits at x0 = 3, so the ladder starts lower to keep the
    // damping perturbative
    ConvergenceLadder lad({0.04, 0.02, 0.01, 0.005, 0.0025});
    auto spec = PropagatorSpec::half_line();
    WaveFn raw = gaussian(3.0, 0.0, 0.8);
    WaveFn psi = [raw](double x) { return x <= 0.0 ? Cx{0.0, 0.0} : raw(x); };

    QuadGrid fg = gs.full_grid(gs.panel_width_for(spec, 0.5));
    for (const HomogeneousEvent& ev :
         {HomogeneousEvent::all(1.0),
          HomogeneousEvent({0.0, 0.5, 1.0},
                           {Region::full(1), Region::interval(1.0, 4.0), Region::full(1)}),
          HomogeneousEvent({0.0, 1.0}, {Region::interval(0.5, 6.0), Region::full(1)})}) {
        WaveFunction w = restricted_evolution_homogeneous(psi, ev, spec, lad, gs, fg);
        CHECK(w.norm() > 0.1);
        for (std::size_t i = 0; i < fg.size(); ++i)
            if (fg.nodes()[i] <= 0.0)
                CHECK(w.values(static_cast<Eigen::Index>(i)) == Cx{0.0, 0.0});
    }
}

TEST_CASE("SHO caustic handling") {
    GridSpec gs;
    gs.lo = -10.0;
    gs.hi = 10.0;
    ConvergenceLadder lad;
    auto spec = PropagatorSpec::sho(1.0);
    WaveFn psi = gaussian(1.0, 0.0, 0.8);
    const double T = kPi; // one caustic period

    SECTION("three-time evolution across T = pi/omega flips parity with phase -i") {
        QuadGrid fg = gs.full_grid(gs.panel_width_for(spec, T / 2.0));
        REQUIRE(fg.symmetric());
        WaveFunction w = evolve_unrestricted(psi, T, spec, lad, gs, fg, {T / 2.0});
        WaveFunction expect = WaveFunction::sample(
            [&](double x) { return Cx{0.0, -1.0} * psi(-x); }, fg, T);
        CHECK(l2_distance(w, expect) < 1e-3);
    }

    SECTION("the delta branch applied on a symmetric grid matches the split route") {
        QuadGrid fg = gs.full_grid(gs.panel_width_for(spec, T / 2.0));
        // single caustic step uses the tagged delta action
        HomogeneousEvent direct({0.0, T}, {Region::full(1), Region::full(1)});
        WaveFunction wd = restricted_evolution_homogeneous(psi, direct, spec, lad, gs, fg);
        WaveFunction ws = evolve_unrestricted(psi, T, spec, lad, gs, fg, {T / 2.0});
        CHECK(l2_distance(wd, ws) < 1e-3);
    }

    SECTION("three-time restricted events factor through the intermediate state") {
        Region mid = Region::interval(-2.0, 2.5);
        Region fin = Region::interval(-1.5, 0.5);
        double t2 = T / 2.0;
        HomogeneousEvent ev({0.0, t2, T}, {Region::full(1), mid, fin});
        ContinuumEvent ce = ContinuumEvent::single(ev);
        QuadGrid fg = make_final_grid({&ce}, spec, gs);
        WaveFunction via_event = restricted_evolution_homogeneous(psi, ev, spec, lad, gs, fg);

        // two-stage route: unrestricted to t2, then a two-time event from t2
        QuadGrid mid_grid(slot_segments(mid, gs.lo, gs.hi),
                          gs.panel_width_for(spec, t2), gs.order);
        WaveFunction at_t2 = evolve_unrestricted(psi, t2, spec, lad, gs, mid_grid, {});
        Eigen::VectorXcd final_vals(static_cast<Eigen::Index>(fg.size()));
        for (std::size_t i = 0; i < fg.size(); ++i) {
            double y = fg.nodes()[i];
            Cx acc = 0.0;
            if (fin.contains1(y))
                for (std::size_t j = 0; j < mid_grid.size(); ++j)
                    acc += mid_grid.weights()[j] *
                           propagator_finite(spec, y, T, mid_grid.nodes()[j], t2) *
                           at_t2.values(static_cast<Eigen::Index>(j));
            final_vals(static_cast<Eigen::Index>(i)) = acc;
        }
        WaveFunction two_stage{fg, final_vals, T};
        CHECK(l2_distance(via_event, two_stage) < 1e-6);
    }
}

TEST_CASE("back-evolution to the initial time") {
    GridSpec gs;
    ConvergenceLadder lad;
    auto spec = PropagatorSpec::free_particle();
    WaveFn psi = gaussian(0, 0.4, 1.0);
    QuadGrid fg = gs.full_grid(gs.panel_width_for(spec, 1.0));

    SECTION("forward then back returns the input") {
        WaveFunction fwd = evolve_unrestricted(psi, 1.0, spec, lad, gs, fg, {});
        WaveFunction back = evolve_back_to_initial(fwd, spec, fg);
        WaveFunction init = WaveFunction::sample(psi, fg, 0.0);
        CHECK(l2_distance(back, init) < 1e-4);
        CHECK(back.norm() == Approx(fwd.norm()).margin(1e-4));
    }

    SECTION("back-evolution is linear and preserves inner products") {
        HomogeneousEvent ea({0.0, 1.0}, {Region::interval(-3.0, 0.5), Region::full(1)});
        HomogeneousEvent eb({0.0, 1.0}, {Region::interval(-0.5, 3.0), Region::full(1)});
        WaveFunction wa = restricted_evolution_homogeneous(psi, ea, spec, lad, gs, fg);
        WaveFunction wb = restricted_evolution_homogeneous(psi, eb, spec, lad, gs, fg);
        WaveFunction ba = evolve_back_to_initial(wa, spec, fg);
        WaveFunction bb = evolve_back_to_initial(wb, spec, fg);

        Cx before = l2_inner(wa, wb);
        Cx after = l2_inner(ba, bb);
        CHECK(std::abs(before - after) < 1e-4);

        // sum of back-evolved pieces equals back-evolution of the sum
        WaveFunction sum{fg, wa.values + wb.values, 1.0};
        WaveFunction bsum = evolve_back_to_initial(sum, spec, fg);
        CHECK((bsum.values - (ba.values + bb.values)).norm() < 1e-10);
    }

    SECTION("events with different final times combine at t = 0") {
        // different truncation times: back-evolve each to t=0, then add
        HomogeneousEvent e1({0.0, 0.8}, {Region::interval(-2.0, 1.0), Region::full(1)});
        HomogeneousEvent e2({0.0, 1.3}, {Region::interval(-1.0, 2.0), Region::full(1)});
        QuadGrid g1 = gs.full_grid(gs.panel_width_for(spec, 0.8));
        QuadGrid g2 = gs.full_grid(gs.panel_width_for(spec, 1.3));
        WaveFunction w1 = restricted_evolution_homogeneous(psi, e1, spec, lad, gs, g1);
        WaveFunction w2 = restricted_evolution_homogeneous(psi, e2, spec, lad, gs, g2);
        WaveFunction b1 = evolve_back_to_initial(w1, spec, fg);
        WaveFunction b2 = evolve_back_to_initial(w2, spec, fg);
        WaveFunction combined{fg, b1.values + b2.values, 0.0};
        CHECK(combined.norm() > 0.0);
        CHECK(combined.norm() <= b1.norm() + b2.norm() + 1e-12);
    }
}

TEST_CASE("wavefunction sampling and norms") {
    GridSpec gs;
    QuadGrid g = gs.full_grid(0.25);
    WaveFunction w = WaveFunction::sample(gaussian(0, 0.3, 1.0), g, 0.0);
    CHECK(w.norm() == Approx(1.0).margin(1e-8));
    w.normalize();
    CHECK(w.norm() == Approx(1.0).margin(1e-13));

    ConvergenceLadder bad;
    bad.epsilons = {0.1, 0.2, 0.05};
    CHECK_THROWS_AS(bad.validate(), UsageError);
    CHECK_THROWS_AS(ConvergenceLadder({0.1, 0.05}), UsageError);
}
