// Acceptance suite: one gate per criterion, each printing PASS/FAIL with the
// measured numbers and its runtime. The binary exits nonzero if any gate
// fails. Budgets and tolerances are fixed here, not configurable.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "hbl/evolution.hpp"
#include "hbl/ggmt.hpp"
#include "hbl/model.hpp"
#include "hbl/parallel.hpp"
#include "hbl/spectral.hpp"

using namespace hbl;

namespace {

struct Gate {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " FAILED{" << what << "}";
        }
    }
};

std::vector<double> log_spaced(double lo, double hi, int n) {
    std::vector<double> out;
    const double ratio = std::log(hi / lo);
    for (int i = 0; i < n; ++i) out.push_back(lo * std::exp(ratio * i / (n - 1)));
    return out;
}

// ------------------------------------------------------------ criterion 1

void criterion_1(Gate& g) {
    const auto samples = log_spaced(1e-3, 50.0, 120);
    double worst_profile = 0.0, worst_g = 0.0;
    for (auto [p, c] : std::vector<std::pair<int, double>>{
             {3, 0.26}, {3, 0.30}, {3, 0.33}, {5, 0.1}, {5, 0.19}}) {
        const auto mp = ModelParams::validate(3, p, c);
        for (double r : samples) {
            const double sp = std::max(1.0, std::pow(phi(mp, r), p));
            worst_profile = std::max(worst_profile, std::abs(profile_residual(mp, r)) / sp);
            const double sg = std::max(1.0, std::abs(symmetry_g(mp, r)));
            worst_g = std::max(worst_g, std::abs(l_residual_on_g(mp, r)) / sg);
        }
    }
    g.detail << "max profile residual " << worst_profile << ", max Lg-g residual "
             << worst_g;
    g.require(worst_profile <= 1e-9, "profile residual above 1e-9");
    g.require(worst_g <= 1e-9, "Lg = g residual above 1e-9");
}

// ------------------------------------------------------------ criterion 2

void criterion_2(Gate& g) {
    const Grid grid = Grid::spectral_default();
    double worst = 0.0;
    for (int ell = 0; ell <= 3; ++ell) {
        const Spectrum s =
            eigen_lowest(RadialOperatorSpec::make_q_ell_limit(ell), grid, 4, 2);
        for (int n = 0; n < 4; ++n) {
            const double exact = n + 0.5 * ell - 1.0;
            worst = std::max(worst,
                             std::abs(s.eigenvalues[static_cast<std::size_t>(n)] - exact));
        }
        // unstable-part anchors
        if (ell == 0) {
            g.require(std::abs(s.eigenvalues[0] + 1.0) <= 1e-6, "anchor -1 (ell 0)");
            g.require(std::abs(s.eigenvalues[1]) <= 1e-6, "anchor 0 (ell 0)");
        }
        if (ell == 1) g.require(std::abs(s.eigenvalues[0] + 0.5) <= 1e-6, "anchor -1/2");
        if (ell == 2) g.require(std::abs(s.eigenvalues[0]) <= 1e-6, "anchor 0 (ell 2)");
    }
    g.detail << "max ladder deviation " << worst;
    g.require(worst <= 1e-6, "ladder deviation above 1e-6");
}

// ------------------------------------------------------------ criterion 3

double discrete_residual(const ModelParams& mp, const Grid& grid) {
    const auto spec = RadialOperatorSpec::make_q_ell(mp, 0);
    const Tridiagonal t = discretize(spec, grid);
    double num = 0.0, den = 0.0;
    std::vector<double> u(static_cast<std::size_t>(grid.n));
    for (int i = 0; i < grid.n; ++i)
        u[static_cast<std::size_t>(i)] = susy_gtilde(mp, grid.node(i));
    for (int i = 0; i < grid.n; ++i) {
        const auto k = static_cast<std::size_t>(i);
        double v = t.diag[k] * u[k];
        if (i > 0) v += t.off[k - 1] * u[k - 1];
        if (i + 1 < grid.n) v += t.off[k] * u[k + 1];
        num += (v + u[k]) * (v + u[k]); // B0 gtilde = -gtilde
        den += u[k] * u[k];
    }
    return std::sqrt(num / den);
}

void criterion_3(Gate& g) {
    const Grid grid = Grid::spectral_default();
    double worst_sym = 0.0, worst_order = 2.0, worst_susy = 0.0;
    for (double c : {0.26, 0.30, 0.33}) {
        const auto mp = ModelParams::validate(3, 3, c);
        const Spectrum s0 = eigen_lowest(RadialOperatorSpec::make_q_ell(mp, 0), grid, 4, 3);
        worst_sym = std::max(worst_sym, std::abs(s0.eigenvalues[0] + 1.0));

        const double r1 = discrete_residual(mp, grid);
        const double r2 = discrete_residual(mp, grid.refined());
        const double order = std::log2(r1 / r2);
        if (std::abs(order - 2.0) > std::abs(worst_order - 2.0)) worst_order = order;

        const Spectrum ss = eigen_lowest(RadialOperatorSpec::make_q_susy(mp), grid, 3, 3);
        for (int j = 0; j < 3; ++j) {
            const auto k = static_cast<std::size_t>(j);
            const double gap = std::abs(s0.eigenvalues[k + 1] - ss.eigenvalues[k]);
            const double budget = 10.0 * (s0.errors[k + 1] + ss.errors[k]) + 1e-8;
            worst_susy = std::max(worst_susy, gap / budget);
        }
    }
    g.detail << "max |lambda0 + 1| " << worst_sym << ", residual order " << worst_order
             << ", SUSY gap/budget " << worst_susy;
    g.require(worst_sym <= 1e-6, "symmetry eigenvalue beyond 1e-6");
    g.require(worst_order > 1.8 && worst_order < 2.2, "residual not order h^2");
    g.require(worst_susy <= 1.0, "SUSY isospectrality beyond combined error");
}

// ------------------------------------------------------------ criterion 4

void criterion_4(Gate& g) {
    double worst = std::numeric_limits<double>::infinity();
    for (double c : {0.26, 0.2775, 0.295, 0.3125, 0.33}) {
        const auto mp = ModelParams::validate(3, 3, c);
        for (int ell = 1; ell <= 4; ++ell)
            worst = std::min(worst,
                             min_q_on(RadialOperatorSpec::make_q_ell(mp, ell), 1e-3, 50.0));
        worst = std::min(worst, min_q_on(RadialOperatorSpec::make_q_susy(mp), 1e-3, 50.0));
    }
    g.detail << "smallest grid minimum " << worst;
    g.require(worst > 0.0, "a potential dips non-positive");
}

// ------------------------------------------------------------ criterion 5

void criterion_5(Gate& g) {
    bool reproduced = false;
    for (auto conv : {PrefactorConvention::Theorem4AlphaPlus1,
                      PrefactorConvention::Appendix4DeltaPlus1}) {
        const double g09 = appendix_G(0.09, 1.0, 1.5, conv).G;
        const double g08 = appendix_G(0.08, 1.0, 1.5, conv).G;
        g.detail << to_string(conv) << ": G(0.09)=" << g09 << " G(0.08)=" << g08 << "; ";
        if (g09 > 0.0 && g09 <= 0.98 && g08 > 0.98 && g08 <= 1.12) reproduced = true;
    }
    g.require(reproduced, "neither convention reproduces the printed pair");
}

// ------------------------------------------------------------ criterion 6

void criterion_6(Gate& g) {
    std::vector<double> cs;
    for (int i = 0; i < 10; ++i) cs.push_back(0.05 + (0.32 - 0.05) * i / 9.0);
    const std::vector<double> deltas{0.5, 0.875, 1.25, 1.625, 2.0};
    const std::vector<double> kappas{1.5, 2.0, 3.0};

    int checked = 0;
    double min_margin = std::numeric_limits<double>::infinity();
    bool appendix_ok = true;
    for (double c : cs) {
        const auto mp = ModelParams::validate(3, 3, c);
        const int count = unstable_count(mp, 1).count;
        std::vector<GgmtResult> theo(deltas.size() * kappas.size());
        std::vector<GgmtResult> appx(deltas.size() * kappas.size());
        parallel_for_index(theo.size(), [&](std::size_t idx) {
            const double d = deltas[idx / kappas.size()];
            const double k = kappas[idx % kappas.size()];
            theo[idx] = appendix_G(c, d, k, PrefactorConvention::Theorem4AlphaPlus1);
            appx[idx] = appendix_G(c, d, k, PrefactorConvention::Appendix4DeltaPlus1);
        });
        for (std::size_t idx = 0; idx < theo.size(); ++idx) {
            ++checked;
            min_margin = std::min(min_margin, theo[idx].G + theo[idx].quad_error - count);
            g.require(count <= theo[idx].G + theo[idx].quad_error,
                      "theorem bound violated at c=" + std::to_string(c));
            if (count > appx[idx].G + appx[idx].quad_error) appendix_ok = false;
        }
    }
    g.detail << checked << " cells, min theorem margin " << min_margin
             << ", appendix convention " << (appendix_ok ? "also sound" : "violated");
}

// ------------------------------------------------------------ criterion 7

void criterion_7(Gate& g) {
    const Grid grid = Grid::spectral_default();
    const CrossingReport rep = scan_crossing(3, 1, 0.05, 0.25, 9, grid);
    g.require(rep.found, "no sign change found on [0.05, 0.25]");
    g.require(rep.width <= 1e-4, "bisection width above 1e-4");
    g.detail << "eigenvalue crossing c* = " << rep.c_star << " (width " << rep.width << ")";

    // where the worked bound G_{c,1}(3/2) itself crosses 1, for comparison
    auto g_at = [](double c) {
        return appendix_G(c, 1.0, 1.5, PrefactorConvention::Appendix4DeltaPlus1).G;
    };
    double lo = 0.05, hi = 0.25;
    if ((g_at(lo) - 1.0) * (g_at(hi) - 1.0) < 0.0) {
        while (hi - lo > 1e-4) {
            const double mid = 0.5 * (lo + hi);
            if ((g_at(mid) - 1.0) * (g_at(lo) - 1.0) > 0.0)
                lo = mid;
            else
                hi = mid;
        }
        g.detail << "; G_{c,1}(3/2) = 1 at c = " << 0.5 * (lo + hi);
    }

    // counts across the scanned range
    for (double c : {0.05, 0.09, 0.13, 0.17, 0.21, 0.25}) {
        const auto mp = ModelParams::validate(3, 3, c);
        g.require(unstable_count(mp, 0).count == 1,
                  "ell=0 count != 1 at c=" + std::to_string(c));
        g.require(unstable_count(mp, 2).count == 0,
                  "ell=2 count != 0 at c=" + std::to_string(c));
    }

    // The stated localization. The spectral scan, confirmed by both solvers
    // at several resolutions and domain sizes, puts the eigenvalue crossing
    // near 0.068; the interval (0.08, 0.09) is where the worked bound
    // crosses 1 (reported above). Asserted as written.
    g.require(rep.c_star > 0.08 && rep.c_star < 0.09,
              "eigenvalue crossing outside (0.08, 0.09)");
}

// ------------------------------------------------------------ criterion 8

void criterion_8(Gate& g) {
    const SimGrid grid = SimGrid::similarity_default();
    const auto mp = ModelParams::validate(3, 3, 0.3);
    double worst_rel = 0.0;
    for (int ell : {0, 1, 2}) {
        for (int k : {0, 1, 2}) {
            const ModeRate r = measured_mode_rate(mp, ell, k, grid);
            const double rel = std::abs(r.rate - r.expected) / std::abs(r.expected);
            worst_rel = std::max(worst_rel, rel);
            if (ell == 0 && k == 0)
                g.require(std::abs(r.rate - 1.0) <= 0.05, "g mode growth not +1 within 5%");
        }
    }
    g.detail << "worst relative rate error " << worst_rel * 100.0 << "%";
    g.require(worst_rel <= 0.05, "a mode misses its spectral rate by more than 5%");
}

// ------------------------------------------------------------ criterion 9

void criterion_9(Gate& g) {
    const auto mp = ModelParams::validate(3, 3, 0.3);
    auto v0 = [](double r) { return 0.01 * std::exp(-r * r); };

    // similarity leg: tuned trajectory must lose >= 3 orders in sigma norm
    const TuneResult tuned = tune_blowup_time(v0, mp, SimGrid::similarity_default());
    const auto& hist = tuned.trajectory.history;
    const double decay = hist.back().sigma / hist.front().sigma;
    g.detail << "tuned T = " << tuned.T << ", sigma decay factor " << decay;
    g.require(!tuned.trajectory.blew_up, "tuned trajectory escaped the basin");
    g.require(decay <= 1e-3, "sigma norm lost fewer than 3 orders");
    g.require(std::abs(tuned.T - 1.0) < 0.05, "tuned T not near 1");

    // physical leg: rescaled distance to phi decreases across checkpoints.
    // h = 0.002 keeps the scheme floor (measured on an exact-data control)
    // below the decaying perturbation throughout the checkpoint window.
    const SimGrid pg{20.0, 10000};
    Column u0(static_cast<std::size_t>(pg.nodes()));
    for (int i = 0; i < pg.nodes(); ++i)
        u0[static_cast<std::size_t>(i)] = phi(mp, pg.r(i)) + v0(pg.r(i));
    u0.back() = 0.0;
    const PhysicalRun run = evolve_physical(u0, mp, pg);
    g.detail << ", physical T_est = " << run.T_est;
    g.require(std::abs(run.T_est - tuned.T) < 5e-3, "physical and tuned T disagree");

    double prev = std::numeric_limits<double>::infinity();
    g.detail << ", rescaled errors:";
    for (int k = 0; k < 5; ++k) {
        const double back = 0.95 * std::pow(0.9, k);
        const double err = rescaled_error(run, run.T_est, run.T_est - back, mp, pg);
        g.detail << " " << err;
        g.require(err < prev, "rescaled error not decreasing at checkpoint " +
                                  std::to_string(k));
        prev = err;
    }
}

// ------------------------------------------------------------ criterion 10

void criterion_10(Gate& g) {
    const auto mp = ModelParams::validate(3, 3, 0.3);
    auto f = [](double r) { return std::exp(-r * r / 4.0); };
    auto sup_err = [&](int cells, double dtau, double tau) {
        const SimGrid grid{12.0, cells};
        Column init(static_cast<std::size_t>(grid.nodes()));
        for (int i = 0; i < grid.nodes(); ++i)
            init[static_cast<std::size_t>(i)] = f(grid.r(i));
        init.back() = 0.0;
        SimilarityRunOptions opt;
        opt.nonlinear = false;
        opt.with_potential = false;
        opt.dtau = dtau;
        opt.tau_end = tau;
        const auto run = run_similarity(mp, 0, init, grid, opt);
        const Column exact = free_semigroup_apply(f, tau, mp, grid);
        double worst = 0.0;
        for (std::size_t i = 0; i < exact.size(); ++i)
            worst = std::max(worst, std::abs(run.final_values[i] - exact[i]));
        return worst;
    };
    // C measured once and frozen: errors stay below 0.5 (h^2 + dtau)
    const double kC = 0.5;
    double worst_order = 2.0;
    for (double tau : {0.25, 0.5, 1.0}) {
        const double coarse = sup_err(600, 2e-3, tau);  // h = 0.02
        const double fine = sup_err(1200, 5e-4, tau);   // h = 0.01, dtau/4
        const double order = std::log2(coarse / fine);
        if (std::abs(order - 2.0) > std::abs(worst_order - 2.0)) worst_order = order;
        g.require(coarse <= kC * (0.02 * 0.02 + 2e-3), "coarse error above C(h^2+dtau)");
        g.require(fine <= kC * (0.01 * 0.01 + 5e-4), "fine error above C(h^2+dtau)");
    }
    g.detail << "fitted order " << worst_order;
    g.require(worst_order >= 1.8 && worst_order <= 2.2, "order outside [1.8, 2.2]");
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        double budget_s;
        std::function<void(Gate&)> fn;
    };
    const std::vector<Entry> entries = {
        {1, "exact residual suite", 1.0, criterion_1},
        {2, "c = 0 ladder", 30.0, criterion_2},
        {3, "symmetry eigenvalue and SUSY isospectrality", 60.0, criterion_3},
        {4, "positivity certificates", 10.0, criterion_4},
        {5, "GGMT reproduction", 10.0, criterion_5},
        {6, "GGMT soundness grid", 300.0, criterion_6},
        {7, "crossing localization", 300.0, criterion_7},
        {8, "linear rate agreement", 120.0, criterion_8},
        {9, "stable blowup at desk scale", 600.0, criterion_9},
        {10, "free propagator oracle", 60.0, criterion_10},
    };

    int failures = 0;
    for (const auto& e : entries) {
        Gate gate;
        const auto start = std::chrono::steady_clock::now();
        try {
            e.fn(gate);
        } catch (const std::exception& ex) {
            gate.pass = false;
            gate.detail << " EXCEPTION{" << ex.what() << "}";
        }
        const double secs = std::chrono::duration<double>(
                                std::chrono::steady_clock::now() - start)
                                .count();
        if (secs > e.budget_s) {
            gate.pass = false;
            gate.detail << " OVER BUDGET{" << secs << "s > " << e.budget_s << "s}";
        }
        std::printf("[%s] criterion %d: %s (%s; %.1fs)\n", gate.pass ? "PASS" : "FAIL",
                    e.id, e.name, gate.detail.str().c_str(), secs);
        std::fflush(stdout);
        if (!gate.pass) ++failures;
    }
    if (failures) std::printf("%d criterion(s) failed\n", failures);
    return failures == 0 ? 0 : 1;
}
