#include <doctest.h>

#include <cmath>
#include <vector>

#include "hbl/spectral.hpp"

using namespace hbl;

namespace {

const Grid kUnitGrid{12.0, 599};  // h = 0.02, fast enough for unit scale

double l2(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace

TEST_CASE("discretize reproduces the Laplacian stencil") {
    const Grid g{4.0, 3}; // h = 1
    const auto t = discretize_potential([](double) { return 0.0; }, g);
    REQUIRE(t.diag.size() == 3);
    for (double d : t.diag) CHECK(d == doctest::Approx(2.0).epsilon(1e-15));
    for (double e : t.off) CHECK(e == doctest::Approx(-1.0).epsilon(1e-15));
    // closed-form Toeplitz eigenvalues 2 - sqrt(2), 2, 2 + sqrt(2)
    const auto lam = lowest_eigenvalues(t, 3);
    CHECK(lam[0] == doctest::Approx(2.0 - std::sqrt(2.0)).epsilon(1e-10));
    CHECK(lam[1] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(lam[2] == doctest::Approx(2.0 + std::sqrt(2.0)).epsilon(1e-10));
}

TEST_CASE("adding a constant to q shifts every eigenvalue exactly") {
    const Grid g{4.0, 3};
    const double kappa = 0.625;
    const auto base = lowest_eigenvalues(discretize_potential([](double) { return 0.0; }, g), 3);
    const auto shifted =
        lowest_eigenvalues(discretize_potential([&](double) { return kappa; }, g), 3);
    for (int i = 0; i < 3; ++i)
        CHECK(std::abs(shifted[static_cast<std::size_t>(i)] -
                       base[static_cast<std::size_t>(i)] - kappa) < 1e-10);
}

TEST_CASE("discretize rejects non-finite potential nodes") {
    const Grid g{4.0, 3};
    CHECK_THROWS_AS(
        discretize_potential([](double r) { return r == 2.0 ? INFINITY : 0.0; }, g),
        SingularNode);
}

TEST_CASE("q_ell spot values") {
    const auto mp = ModelParams::validate(3, 3, 0.3);
    // r = 4, ell = 0: q0(4) = 16/16 - 3/4 + 1/2 - V(4)
    const double s = mp.k.b + 16.0;
    const double v4 = 3.0 * mp.k.a / s - 1.5 * mp.k.a * mp.k.a * 16.0 / (s * s);
    CHECK(q_ell(mp, 0, 4.0) == doctest::Approx(0.75 - v4).epsilon(1e-14));
    CHECK(q_ell(mp, 0, 4.0) == doctest::Approx(0.75 - potential_v(mp, 4.0)).epsilon(1e-14));
    // centrifugal dominance at the origin for ell = 1
    const double r0 = 1e-4;
    CHECK(q_ell(mp, 1, r0) * r0 * r0 / 2.0 == doctest::Approx(1.0).epsilon(1e-5));
    // d != 3 is rejected
    const auto d4 = ModelParams::validate(4, 3, 0.1);
    CHECK_THROWS_AS(q_ell(d4, 0, 1.0), DimensionError);
    CHECK_THROWS_AS(q_susy(d4, 1.0), DimensionError);
}

TEST_CASE("q_susy spot value and asymptotics") {
    const auto mp = ModelParams::validate(3, 3, 0.3);
    const double s = mp.k.b + 1.0;
    const double expected = 1.0 / 16.0 + 2.0 - 1.25 + 3.0 * (1.0 - 2.0) / (2.0 * s) +
                            12.0 / (4.0 * s * s);
    CHECK(q_susy(mp, 1.0) == doctest::Approx(expected).epsilon(1e-14));
    CHECK(expected == doctest::Approx(1.390).epsilon(2e-4));
    // r -> infinity: q_S ~ r^2/16 + p/(p-1) - 5/4 + o(1)
    const double r = 400.0;
    CHECK(q_susy(mp, r) - r * r / 16.0 ==
          doctest::Approx(1.5 - 1.25).epsilon(1e-3));
}

TEST_CASE("positivity certificates for c in (1/4, 1/3)") {
    for (double c : {0.26, 0.30, 0.33}) {
        const auto mp = ModelParams::validate(3, 3, c);
        for (int ell = 1; ell <= 4; ++ell) {
            CHECK(min_q_on(RadialOperatorSpec::make_q_ell(mp, ell), 1e-3, 50.0) > 0.0);
        }
        CHECK(min_q_on(RadialOperatorSpec::make_q_susy(mp), 1e-3, 50.0) > 0.0);
    }
}

TEST_CASE("c = 0 limit potentials") {
    CHECK(q_limit(0, 2.0) == doctest::Approx(-1.5).epsilon(1e-15));
    CHECK(q_susy_limit(2.0) == doctest::Approx(-0.5).epsilon(1e-15));
    // pointwise convergence q_ell -> q_limit as c -> 0+
    for (double r : {0.5, 1.0, 3.0}) {
        double prev = 1.0;
        for (double c : {1e-2, 1e-5, 1e-8}) {
            const auto mp = ModelParams::validate(3, 3, c);
            const double diff = std::abs(q_ell(mp, 1, r) - q_limit(1, r));
            CHECK(diff < prev);
            prev = diff;
        }
        CHECK(prev < 1e-3);
    }
}

TEST_CASE("partner potential from the ground state equals q_susy") {
    for (auto [p, c] : std::vector<std::pair<int, double>>{{3, 0.3}, {5, 0.1}}) {
        const auto mp = ModelParams::validate(3, p, c);
        const Grid g{12.0, 1199}; // nodes every 0.01
        const auto partner = susy_partner_from_ground(mp, g);
        double worst = 0.0;
        for (int i = 0; i < g.n; ++i) {
            const double r = g.node(i);
            if (r < 0.05 || r > 10.0) continue;
            worst = std::max(worst,
                             std::abs(partner[static_cast<std::size_t>(i)] - q_susy(mp, r)));
        }
        CHECK(worst < 1e-9);
    }
    // W approaches r/4 at large r
    const auto mp = ModelParams::validate(3, 3, 0.3);
    CHECK(susy_w(mp, 60.0) / (60.0 / 4.0) == doctest::Approx(1.0).epsilon(1e-2));
}

TEST_CASE("c = 0 ladder: eigenvalues are n + ell/2 - 1") {
    for (int ell : {0, 1, 2, 3}) {
        const auto spec = RadialOperatorSpec::make_q_ell_limit(ell);
        const Spectrum s = eigen_lowest(spec, Grid::spectral_default(), 4);
        for (int n = 0; n < 4; ++n) {
            const double exact = n + 0.5 * ell - 1.0;
            CHECK(s.eigenvalues[static_cast<std::size_t>(n)] ==
                  doctest::Approx(exact).epsilon(0).scale(1).epsilon(1e-6));
        }
    }
    // SUSY limit: the -1 level is removed, the ladder starts at 0
    const Spectrum ss =
        eigen_lowest(RadialOperatorSpec::make_q_susy_limit(), Grid::spectral_default(), 3);
    for (int n = 0; n < 3; ++n)
        CHECK(std::abs(ss.eigenvalues[static_cast<std::size_t>(n)] - n) < 1e-6);
}

TEST_CASE("node counting examples") {
    const auto l0 = RadialOperatorSpec::make_q_ell_limit(0);
    const auto l1 = RadialOperatorSpec::make_q_ell_limit(1);
    CHECK(shoot_count_nodes(l0, -0.5, kUnitGrid) == 1);
    CHECK(shoot_count_nodes(l1, -1.0, kUnitGrid) == 0);
    // below the potential minimum there is no oscillation
    CHECK(shoot_count_nodes(l0, -3.0, kUnitGrid) == 0);
    CHECK(shoot_count_nodes(l0, 3.5, kUnitGrid) == 5); // levels -1,0,1,2,3 below
}

TEST_CASE("dual-solver agreement on eigenvalues and counts") {
    const auto mp = ModelParams::validate(3, 3, 0.3);
    for (const auto& spec :
         {RadialOperatorSpec::make_q_ell(mp, 0), RadialOperatorSpec::make_q_susy(mp),
          RadialOperatorSpec::make_q_ell_limit(2)}) {
        const Spectrum sm = eigen_lowest(spec, kUnitGrid, 3);
        const Spectrum sh = eigen_lowest_shooting(spec, kUnitGrid, 3);
        for (int j = 0; j < 3; ++j) {
            const double em = sm.eigenvalues[static_cast<std::size_t>(j)];
            const double es = sh.eigenvalues[static_cast<std::size_t>(j)];
            CHECK(std::abs(em - es) <
                  10.0 * (sm.errors[static_cast<std::size_t>(j)] +
                          sh.errors[static_cast<std::size_t>(j)]));
        }
        // count below an arbitrary probe agrees between the routes
        for (double probe : {-0.75, 0.3, 1.7}) {
            const auto t = discretize(spec, kUnitGrid);
            CHECK(sturm_count_below(t, probe) == shoot_count_nodes(spec, probe, kUnitGrid));
        }
    }
}

TEST_CASE("discrete operator annihilates gtilde + lambda gtilde at order h^2") {
    const auto mp = ModelParams::validate(3, 3, 0.3);
    const auto spec = RadialOperatorSpec::make_q_ell(mp, 0);
    auto residual = [&](const Grid& g) {
        const auto t = discretize(spec, g);
        std::vector<double> u(static_cast<std::size_t>(g.n)), res(u.size());
        for (int i = 0; i < g.n; ++i)
            u[static_cast<std::size_t>(i)] = susy_gtilde(mp, g.node(i));
        for (int i = 0; i < g.n; ++i) {
            const auto k = static_cast<std::size_t>(i);
            double v = t.diag[k] * u[k];
            if (i > 0) v += t.off[k - 1] * u[k - 1];
            if (i + 1 < g.n) v += t.off[k] * u[k + 1];
            res[k] = v + u[k]; // B0 gtilde = -gtilde
        }
        return l2(res) / l2(u);
    };
    const double r1 = residual(kUnitGrid);
    const double r2 = residual(kUnitGrid.refined());
    const double order = std::log2(r1 / r2);
    CHECK(r1 < 5e-2);
    CHECK(order == doctest::Approx(2.0).epsilon(0.15));
}

TEST_CASE("SUSY isospectrality: spectrum of q_S is spectrum of q_0 minus {-1}") {
    for (double c : {0.26, 0.30, 0.33}) {
        const auto mp = ModelParams::validate(3, 3, c);
        const Grid g{12.0, 1199};
        const Spectrum s0 = eigen_lowest(RadialOperatorSpec::make_q_ell(mp, 0), g, 4);
        const Spectrum ss = eigen_lowest(RadialOperatorSpec::make_q_susy(mp), g, 3);
        CHECK(std::abs(s0.eigenvalues[0] + 1.0) < 2e-4);
        for (int j = 0; j < 3; ++j) {
            const auto k = static_cast<std::size_t>(j);
            const double combined = 10.0 * (s0.errors[k + 1] + ss.errors[k]) + 1e-8;
            CHECK(std::abs(s0.eigenvalues[k + 1] - ss.eigenvalues[k]) < combined);
        }
    }
}

TEST_CASE("doubling r_max leaves eigenvalues unchanged to 1e-9") {
    const auto mp = ModelParams::validate(3, 3, 0.3);
    for (const auto& spec :
         {RadialOperatorSpec::make_q_ell(mp, 0), RadialOperatorSpec::make_q_ell(mp, 1)}) {
        // at the default domain (16 -> 32), every reported eigenvalue holds still
        const Spectrum near16 = eigen_lowest(spec, Grid{16.0, 1599}, 3);
        const Spectrum far32 = eigen_lowest(spec, Grid{32.0, 3199}, 3); // same h
        for (int j = 0; j < 3; ++j)
            CHECK(std::abs(near16.eigenvalues[static_cast<std::size_t>(j)] -
                           far32.eigenvalues[static_cast<std::size_t>(j)]) < 1e-9);
        // the ground state is already insensitive at r_max = 12; excited
        // levels sit on a few-1e-9 truncation floor there, hence the 16 default
        const Spectrum near12 = eigen_lowest(spec, Grid{12.0, 1199}, 1);
        const Spectrum far24 = eigen_lowest(spec, Grid{24.0, 2399}, 1);
        CHECK(std::abs(near12.eigenvalues[0] - far24.eigenvalues[0]) < 1e-9);
    }
}

TEST_CASE("unstable_count across the spectrum structure") {
    const auto mp = ModelParams::validate(3, 3, 0.3);
    const auto u0 = unstable_count(mp, 0);
    CHECK(u0.count == 1); // the symmetry eigenvalue -1
    CHECK_FALSE(u0.marginal);
    CHECK(u0.multiplicity == 1);
    CHECK(unstable_count(mp, 1).count == 0);
    CHECK(unstable_count(mp, 1).multiplicity == 3);
    CHECK(unstable_count(mp, 2).count == 0);
    // small c: a genuine ell = 1 instability persists
    const auto small = ModelParams::validate(3, 3, 0.05);
    CHECK(unstable_count(small, 1).count == 1);
}

TEST_CASE("scan_crossing localizes the ell = 1 sign change") {
    const Grid g{12.0, 899};
    const auto rep = scan_crossing(3, 1, 0.05, 0.25, 5, g);
    CHECK(rep.found);
    CHECK(rep.count_lo == 1);
    CHECK(rep.count_hi == 0);
    // reference frozen from the dual-solver eigenvalue scan (matrix at two
    // resolutions, shooting, and a doubled domain all agree to 9 digits)
    CHECK(rep.c_star > 0.068);
    CHECK(rep.c_star < 0.069);
    CHECK(rep.width <= 1e-4);
    CHECK(rep.curve.size() == 5);

    const auto none = scan_crossing(3, 2, 0.05, 0.30, 3, g);
    CHECK_FALSE(none.found);
    CHECK(none.count_lo == 0);
    CHECK(none.count_hi == 0);

    const auto degenerate = scan_crossing(3, 1, 0.1, 0.1, 0, g);
    CHECK_FALSE(degenerate.found);
}
