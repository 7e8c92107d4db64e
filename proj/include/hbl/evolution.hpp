#pragma once

// Time evolution in similarity variables (per spherical-harmonic mode, IMEX:
// implicit in the drift-diffusion operator, explicit in the nonlinearity) and
// of the radial physical equation (explicit, adaptive step). Also the
// sigma-weighted projections, the initial-data operator with blowup-time
// tuning, and the closed-form free propagator used as an oracle.

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include "hbl/errors.hpp"
#include "hbl/model.hpp"
#include "hbl/spectral.hpp"
#include "hbl/tridiag.hpp"

namespace hbl {

/// Uniform radial grid for evolutions: nodes r_i = i h, i = 0..cells,
/// r_cells = R pinned to zero (Dirichlet truncation).
struct SimGrid {
    double R = 12.0;
    int cells = 1200;

    double h() const { return R / cells; }
    int nodes() const { return cells + 1; }
    double r(int i) const { return i * h(); }

    static SimGrid similarity_default() { return SimGrid{12.0, 1200}; }
    static SimGrid physical_default() { return SimGrid{20.0, 1000}; }
};

using Column = std::vector<double>;

inline double sup_norm(const Column& f) {
    double m = 0.0;
    for (double x : f) m = std::max(m, std::abs(x));
    return m;
}

/// Weighted inner product <f, g>_sigma = 4 pi int f g e^{-r^2/4} r^2 dr by the
/// trapezoidal rule on the grid (the 4 pi carries the angular measure).
inline double inner_sigma(const Column& f, const Column& g, const SimGrid& grid) {
    if (f.size() != g.size() || static_cast<int>(f.size()) != grid.nodes())
        throw GridMismatch("inner_sigma needs both samples on the grid's nodes");
    const double h = grid.h();
    double acc = 0.0;
    for (int i = 0; i <= grid.cells; ++i) {
        const double r = grid.r(i);
        const double w = f[static_cast<std::size_t>(i)] * g[static_cast<std::size_t>(i)] *
                         std::exp(-r * r / 4.0) * r * r;
        acc += (i == 0 || i == grid.cells) ? 0.5 * w : w;
    }
    return 4.0 * M_PI * acc * h;
}

inline double sigma_norm(const Column& f, const SimGrid& grid) {
    return std::sqrt(std::max(0.0, inner_sigma(f, f, grid)));
}

/// Samples of g and its sigma normalization; the rank-one projector data.
struct ProjectionWeights {
    Column g;
    double gg = 0.0;
    bool single_mode_guarantee = true; ///< p = 3 and c in (1/4, 1/3)

    static ProjectionWeights make(const ModelParams& mp, const SimGrid& grid) {
        ProjectionWeights w;
        w.g.resize(static_cast<std::size_t>(grid.nodes()));
        for (int i = 0; i < grid.nodes(); ++i)
            w.g[static_cast<std::size_t>(i)] = symmetry_g(mp, grid.r(i));
        w.g.back() = 0.0; // Dirichlet-consistent truncation
        w.gg = inner_sigma(w.g, w.g, grid);
        w.single_mode_guarantee = (mp.p == 3 && mp.c > 0.25 && mp.c < 1.0 / 3.0);
        return w;
    }
};

struct Projection {
    double coef = 0.0;
    Column remainder;
};

/// coef = <f, g>/<g, g>; remainder = f - coef g, sigma-orthogonal to g.
inline Projection project_unstable(const Column& f, const ProjectionWeights& w,
                                   const SimGrid& grid) {
    Projection p;
    p.coef = inner_sigma(f, w.g, grid) / w.gg;
    p.remainder.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) p.remainder[i] = f[i] - p.coef * w.g[i];
    return p;
}

inline double binomial(int n, int k) {
    double acc = 1.0;
    for (int i = 1; i <= k; ++i) acc = acc * (n - k + i) / i;
    return acc;
}

inline double ipow(double x, int n) {
    if (n < 0) return 1.0 / ipow(x, -n);
    double acc = 1.0;
    while (n > 0) {
        if (n & 1) acc *= x;
        x *= x;
        n >>= 1;
    }
    return acc;
}

/// Nonlinearity in the expanded polynomial form
///   N(f) = sum_{n=2}^p C(p,n) phi^{p-n} f^n
///        - c r^2 sum_{n=2}^{2p-1} C(2p-1,n) phi^{2p-1-n} f^n.
inline Column apply_nonlinearity(const Column& f, const ModelParams& mp, const SimGrid& grid) {
    if (static_cast<int>(f.size()) != grid.nodes())
        throw GridMismatch("apply_nonlinearity needs samples on the grid's nodes");
    const int p = mp.p;
    Column out(f.size(), 0.0);
    for (int i = 0; i < grid.nodes(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double r = grid.r(i);
        const double ph = phi(mp, r);
        const double fi = f[k];
        double fn = fi * fi; // f^n starting at n = 2
        double focusing = 0.0, henon = 0.0;
        for (int n = 2; n <= 2 * p - 1; ++n) {
            if (n <= p) focusing += binomial(p, n) * ipow(ph, p - n) * fn;
            henon += binomial(2 * p - 1, n) * ipow(ph, 2 * p - 1 - n) * fn;
            fn *= fi;
        }
        out[k] = focusing - mp.c * r * r * henon;
    }
    return out;
}

/// The definitional form N(f) = eta(phi + f) - eta(phi) - eta'(phi) f with
/// eta(v) = |v|^{p-1} v - c r^2 v^{2p-1}; kept as the independent route.
inline Column nonlinearity_def_form(const Column& f, const ModelParams& mp,
                                    const SimGrid& grid) {
    if (static_cast<int>(f.size()) != grid.nodes())
        throw GridMismatch("nonlinearity_def_form needs samples on the grid's nodes");
    const int p = mp.p;
    auto eta = [&](double v, double r2) {
        return std::pow(std::abs(v), p - 1) * v - mp.c * r2 * std::pow(v, 2 * p - 1);
    };
    auto eta_prime = [&](double v, double r2) {
        return p * std::pow(std::abs(v), p - 1) -
               mp.c * (2 * p - 1) * r2 * std::pow(v, 2 * p - 2);
    };
    Column out(f.size());
    for (int i = 0; i < grid.nodes(); ++i) {
        const auto k = static_cast<std::size_t>(i);
        const double r = grid.r(i);
        const double r2 = r * r;
        const double ph = phi(mp, r);
        out[k] = eta(ph + f[k], r2) - eta(ph, r2) - eta_prime(ph, r2) * f[k];
    }
    return out;
}

/// Initial data operator U(v0, T)(y) = T^{1/(p-1)}(phi(sqrt(T) y) +
/// v0(sqrt(T) y)) - phi(y), sampled with phi in closed form.
inline Column initial_data_op(const std::function<double(double)>& v0, double T,
                              const ModelParams& mp, const SimGrid& grid) {
    if (!(T >= 0.5) || !(T <= 1.5))
        throw RangeError("initial_data_op needs T in [1/2, 3/2]");
    const double root = std::sqrt(T);
    const double amp = std::pow(T, mp.m());
    Column out(static_cast<std::size_t>(grid.nodes()));
    for (int i = 0; i < grid.nodes(); ++i) {
        const double r = grid.r(i);
        out[static_cast<std::size_t>(i)] =
            amp * (phi(mp, root * r) + v0(root * r)) - phi(mp, r);
    }
    out.back() = 0.0;
    return out;
}

struct HistoryPoint {
    double time = 0.0;
    double sup = 0.0;
    double sigma = 0.0;
    double ucoef = 0.0;
};

struct Snapshot {
    double time = 0.0;
    Column values;
};

/// One similarity-variable evolution for a single mode ell.
///
/// Implicit part per step: Delta_r - (r/2) d/dr - 1/(p-1) + V - ell(ell+1)/r^2
/// (V optional for free-propagator comparisons); explicit part: the
/// nonlinearity (ell = 0 runs only). Origin closure: reflection u'(0) = 0 for
/// ell = 0, u(0) = 0 otherwise; Dirichlet at R.
class SimilarityStepper {
public:
    SimilarityStepper(const ModelParams& mp, const SimGrid& grid, int ell, double dtau,
                      bool nonlinear, bool with_potential = true)
        : mp_(mp), grid_(grid), ell_(ell), dtau_(dtau), nonlinear_(nonlinear) {
        if (!(dtau > 0.0) || dtau > dtau_max(grid.h(), nonlinear))
            throw RangeError("dtau must lie in (0, dtau_max(h)]");
        if (nonlinear_ && ell_ != 0)
            throw RangeError("nonlinear runs are radial (ell = 0) only");
        const double h = grid_.h();
        const double ih2 = 1.0 / (h * h);
        i0_ = (ell_ == 0) ? 0 : 1;
        const int m = grid_.cells - i0_; // unknowns i0 .. cells-1
        lower_.assign(static_cast<std::size_t>(m), 0.0);
        diag_.assign(static_cast<std::size_t>(m), 0.0);
        upper_.assign(static_cast<std::size_t>(m), 0.0);
        for (int i = i0_; i < grid_.cells; ++i) {
            const auto k = static_cast<std::size_t>(i - i0_);
            double dd, lo = 0.0, up = 0.0;
            if (i == 0) {
                // Delta_r f(0) = d f''(0) ~ 2 d (f1 - f0)/h^2
                dd = -2.0 * mp_.d * ih2 - mp_.m();
                up = 2.0 * mp_.d * ih2;
            } else {
                const double r = grid_.r(i);
                const double adv = (mp_.d - 1) / (2.0 * r * h) - r / (4.0 * h);
                dd = -2.0 * ih2 - mp_.m();
                if (ell_ > 0) dd -= ell_ * (ell_ + 1.0) / (r * r);
                lo = ih2 - adv;
                up = ih2 + adv;
            }
            if (with_potential) dd += potential_v(mp_, grid_.r(i));
            // A = I - dtau L over the unknowns
            diag_[k] = 1.0 - dtau_ * dd;
            lower_[k] = (i > i0_) ? -dtau_ * lo : 0.0;
            upper_[k] = (i + 1 < grid_.cells) ? -dtau_ * up : 0.0;
        }
        if (nonlinear_) {
            // cache the nonlinearity's coefficient columns
            const int p = mp_.p;
            const int terms = 2 * p - 2; // n = 2 .. 2p-1
            nl_.assign(static_cast<std::size_t>(terms * grid_.nodes()), 0.0);
            for (int i = 0; i < grid_.nodes(); ++i) {
                const double r = grid_.r(i);
                const double ph = phi(mp_, r);
                for (int n = 2; n <= 2 * p - 1; ++n) {
                    double coef = -mp_.c * r * r * binomial(2 * p - 1, n) *
                                  ipow(ph, 2 * p - 1 - n);
                    if (n <= p) coef += binomial(p, n) * ipow(ph, p - n);
                    nl_[static_cast<std::size_t>((n - 2) * grid_.nodes() + i)] = coef;
                }
            }
        }
    }

    /// The implicit half is unconditionally stable; the bound protects the
    /// explicit nonlinearity (and first-order accuracy) on nonlinear runs.
    static double dtau_max(double h, bool nonlinear = true) { return nonlinear ? h : 1.0; }

    const SimGrid& grid() const { return grid_; }
    int ell() const { return ell_; }
    double dtau() const { return dtau_; }

    /// Advance by one step in place. Throws BlowupDetected when a nonlinear
    /// iterate leaves the basin (sup > 1e6).
    void step(Column& f) const {
        const int m = grid_.cells - i0_;
        rhs_.assign(static_cast<std::size_t>(m), 0.0);
        if (nonlinear_) {
            const int nn = grid_.nodes();
            for (int i = i0_; i < grid_.cells; ++i) {
                const double fi = f[static_cast<std::size_t>(i)];
                double fn = fi * fi;
                double acc = 0.0;
                for (int n = 2; n <= 2 * mp_.p - 1; ++n) {
                    acc += nl_[static_cast<std::size_t>((n - 2) * nn + i)] * fn;
                    fn *= fi;
                }
                rhs_[static_cast<std::size_t>(i - i0_)] =
                    f[static_cast<std::size_t>(i)] + dtau_ * acc;
            }
        } else {
            for (int i = i0_; i < grid_.cells; ++i)
                rhs_[static_cast<std::size_t>(i - i0_)] = f[static_cast<std::size_t>(i)];
        }
        thomas_solve(lower_, diag_, upper_, rhs_);
        for (int i = i0_; i < grid_.cells; ++i)
            f[static_cast<std::size_t>(i)] = rhs_[static_cast<std::size_t>(i - i0_)];
        if (i0_ == 1) f[0] = 0.0;
        f[static_cast<std::size_t>(grid_.cells)] = 0.0;
        if (nonlinear_ && sup_norm(f) > 1e6)
            throw BlowupDetected("similarity iterate left the basin (sup > 1e6)");
    }

    /// Apply the transposed solve (I - dtau L)^{-T}; used for the left
    /// unstable mode in deflation.
    void step_transposed(Column& f) const {
        const int m = grid_.cells - i0_;
        rhs_.assign(static_cast<std::size_t>(m), 0.0);
        for (int i = i0_; i < grid_.cells; ++i)
            rhs_[static_cast<std::size_t>(i - i0_)] = f[static_cast<std::size_t>(i)];
        // transpose of a tridiagonal swaps the off-diagonals (with shift)
        std::vector<double> tl(static_cast<std::size_t>(m), 0.0),
            tu(static_cast<std::size_t>(m), 0.0);
        for (int k = 0; k + 1 < m; ++k) {
            tl[static_cast<std::size_t>(k + 1)] = upper_[static_cast<std::size_t>(k)];
            tu[static_cast<std::size_t>(k)] = lower_[static_cast<std::size_t>(k + 1)];
        }
        thomas_solve(tl, diag_, tu, rhs_);
        for (int i = i0_; i < grid_.cells; ++i)
            f[static_cast<std::size_t>(i)] = rhs_[static_cast<std::size_t>(i - i0_)];
        if (i0_ == 1) f[0] = 0.0;
        f[static_cast<std::size_t>(grid_.cells)] = 0.0;
    }

    /// Dominant right/left eigenvectors of the resolvent step operator by
    /// power iteration (the growth direction of the discrete flow and its
    /// dual). A large internal step sharpens the spectral separation; the
    /// eigenvectors do not depend on it.
    static std::pair<Column, Column> unstable_mode_pair(const ModelParams& mp,
                                                        const SimGrid& grid,
                                                        int iters = 120) {
        SimilarityStepper power(mp, grid, 0, 0.5, false, true);
        Column v(static_cast<std::size_t>(grid.nodes()), 0.0);
        Column w(static_cast<std::size_t>(grid.nodes()), 0.0);
        for (int i = 0; i < grid.cells; ++i) {
            v[static_cast<std::size_t>(i)] = symmetry_g(mp, grid.r(i));
            w[static_cast<std::size_t>(i)] =
                symmetry_g(mp, grid.r(i)) * std::exp(-grid.r(i) * grid.r(i) / 4.0);
        }
        auto normalize = [](Column& x) {
            double n = 0.0;
            for (double y : x) n += y * y;
            n = std::sqrt(n);
            for (double& y : x) y /= n;
        };
        for (int it = 0; it < iters; ++it) {
            power.step(v);
            normalize(v);
            power.step_transposed(w);
            normalize(w);
        }
        return {v, w};
    }

private:
    ModelParams mp_;
    SimGrid grid_;
    int ell_;
    double dtau_;
    bool nonlinear_;
    int i0_ = 0;
    std::vector<double> lower_, diag_, upper_;
    std::vector<double> nl_; // nonlinearity coefficient columns, term-major
    mutable std::vector<double> rhs_;
};

/// Remove the discrete growth direction from a seed: f <- f - v (w.f)/(w.v).
inline void deflate_against(Column& f, const Column& v, const Column& w) {
    double wf = 0.0, wv = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) {
        wf += w[i] * f[i];
        wv += w[i] * v[i];
    }
    const double beta = wf / wv;
    for (std::size_t i = 0; i < f.size(); ++i) f[i] -= beta * v[i];
}

struct SimilarityRunOptions {
    double dtau = 5e-4;
    double tau_end = 8.0;
    bool nonlinear = true;
    bool with_potential = true;
    int record_every = 20;
    std::vector<double> snapshot_times;
};

struct SimilarityRun {
    std::vector<HistoryPoint> history;
    std::vector<Snapshot> snapshots;
    Column final_values;
    double final_tau = 0.0;
    bool blew_up = false;
};

/// March a mode-ell state to tau_end, recording norms and the unstable
/// coefficient. A nonlinear blowup stops the run and is flagged, not thrown.
inline SimilarityRun run_similarity(const ModelParams& mp, int ell, const Column& initial,
                                    const SimGrid& grid, const SimilarityRunOptions& opt) {
    SimilarityStepper stepper(mp, grid, ell, opt.dtau, opt.nonlinear, opt.with_potential);
    const ProjectionWeights weights = ProjectionWeights::make(mp, grid);
    SimilarityRun run;
    Column f = initial;
    f.back() = 0.0;
    if (ell > 0) f[0] = 0.0;

    auto record = [&](double tau) {
        run.history.push_back({tau, sup_norm(f), sigma_norm(f, grid),
                               inner_sigma(f, weights.g, grid) / weights.gg});
    };
    record(0.0);
    std::size_t next_snap = 0;
    auto maybe_snapshot = [&](double tau) {
        while (next_snap < opt.snapshot_times.size() &&
               tau >= opt.snapshot_times[next_snap] - 1e-12) {
            run.snapshots.push_back({tau, f});
            ++next_snap;
        }
    };
    maybe_snapshot(0.0);

    const long steps = std::lround(opt.tau_end / opt.dtau);
    for (long s = 1; s <= steps; ++s) {
        try {
            stepper.step(f);
        } catch (const BlowupDetected&) {
            run.blew_up = true;
            record(s * opt.dtau);
            break;
        }
        const double tau = s * opt.dtau;
        if (s % opt.record_every == 0 || s == steps) record(tau);
        maybe_snapshot(tau);
        run.final_tau = tau;
    }
    run.final_values = std::move(f);
    return run;
}

/// Closed-form free propagator: [S0(tau) f](r) = e^{-tau/(p-1)} (G_a * f)
/// evaluated at e^{-tau/2} r, a(tau) = 1 - e^{-tau}; the 3D convolution of
/// radial functions reduced to a 1D kernel integral (Simpson rule).
inline Column free_semigroup_apply(const std::function<double(double)>& f, double tau,
                                   const ModelParams& mp, const SimGrid& grid) {
    if (!(tau > 0.0)) throw RangeError("free_semigroup_apply needs tau > 0");
    const double a = 1.0 - std::exp(-tau);
    const double damp = std::exp(-tau * mp.m());
    const double scale = std::exp(-tau / 2.0);

    const double s_max = grid.R + 12.0;
    const int n_simpson = 24000; // even
    const double ds = s_max / n_simpson;
    const double norm = std::pow(4.0 * M_PI * a, -1.5);

    auto convolve_at = [&](double R0) {
        double acc = 0.0;
        for (int j = 0; j <= n_simpson; ++j) {
            const double s = j * ds;
            double val;
            if (R0 < 1e-8) {
                val = 4.0 * M_PI * s * s * f(s) * std::exp(-s * s / (4.0 * a));
            } else {
                const double dm = (R0 - s) * (R0 - s) / (4.0 * a);
                const double dp = (R0 + s) * (R0 + s) / (4.0 * a);
                val = (4.0 * M_PI * a / R0) * s * f(s) *
                      (std::exp(-dm) - std::exp(-dp));
            }
            const double w = (j == 0 || j == n_simpson) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            acc += w * val;
        }
        return norm * acc * ds / 3.0;
    };

    Column out(static_cast<std::size_t>(grid.nodes()));
    for (int i = 0; i < grid.nodes(); ++i)
        out[static_cast<std::size_t>(i)] = damp * convolve_at(scale * grid.r(i));
    return out;
}

struct TuneResult {
    double T = 1.0;
    SimilarityRun trajectory;
    int trials = 0;
};

/// Tune the blowup time: bisect/secant T in [1-bracket, 1+bracket] on the
/// sign of the final unstable coefficient of the nonlinear similarity run of
/// U(v0, T), then return the tuned trajectory.
inline TuneResult tune_blowup_time(const std::function<double(double)>& v0,
                                   const ModelParams& mp,
                                   const SimGrid& grid = SimGrid::similarity_default(),
                                   SimilarityRunOptions opt = {}, double bracket = 0.1,
                                   double t_tol = 1e-10) {
    opt.nonlinear = true;
    opt.with_potential = true;
    TuneResult result;

    // phi itself: U(v0, 1) vanishes identically and T = 1 is exact
    const Column at_one = initial_data_op(v0, 1.0, mp, grid);
    if (sup_norm(at_one) == 0.0) {
        result.T = 1.0;
        result.trajectory = run_similarity(mp, 0, at_one, grid, opt);
        return result;
    }

    auto final_coef = [&](double T) {
        const SimilarityRun run =
            run_similarity(mp, 0, initial_data_op(v0, T, mp, grid), grid, opt);
        ++result.trials;
        return run.history.back().ucoef;
    };

    double lo = 1.0 - bracket, hi = 1.0 + bracket;
    double flo = final_coef(lo), fhi = final_coef(hi);
    if (flo == 0.0) {
        result.T = lo;
    } else if (fhi == 0.0) {
        result.T = hi;
    } else if (flo * fhi > 0.0) {
        throw NoSignChange("unstable coefficient has the same sign at both bracket ends");
    } else {
        // Illinois regula falsi on the ordered bracket [lo, hi]
        for (int it = 0; it < 200 && hi - lo > t_tol; ++it) {
            double mid = (lo * fhi - hi * flo) / (fhi - flo);
            const double pad = 0.01 * (hi - lo);
            mid = std::clamp(mid, lo + pad, hi - pad);
            const double fm = final_coef(mid);
            if (fm == 0.0) {
                lo = hi = mid;
                break;
            }
            if (fm * flo < 0.0) {
                hi = mid;
                fhi = fm;
                flo *= 0.5; // damp the retained end so the bracket keeps moving
            } else {
                lo = mid;
                flo = fm;
                fhi *= 0.5;
            }
        }
        result.T = 0.5 * (lo + hi);
    }
    result.trajectory =
        run_similarity(mp, 0, initial_data_op(v0, result.T, mp, grid), grid, opt);
    return result;
}

struct PhysicalRunOptions {
    double t_max = 4.0;
    double sup_stop = 1e6;
    double snapshot_ratio = 1.1; ///< keep a profile every x growth of the sup
    int record_every = 10;
};

struct PhysicalRun {
    std::vector<HistoryPoint> history; ///< time, sup (sigma, ucoef unused)
    std::vector<Snapshot> snapshots;
    bool blew_up = false;
    double T_est = 0.0;
    double fit_r2 = 0.0;
    int fit_points = 0;
};

/// Evolve the radial physical equation u_t = Delta u + u^p - c r^2 u^{2p-1}
/// by explicit stepping, dt = min(h^2/4, 0.1 sup^{-(p-1)}); stop at the sup
/// threshold and fit sup^{-(p-1)} linearly in t over the last decade of
/// growth to estimate the blowup time.
inline PhysicalRun evolve_physical(const Column& u0, const ModelParams& mp,
                                   const SimGrid& grid = SimGrid::physical_default(),
                                   const PhysicalRunOptions& opt = {}) {
    if (static_cast<int>(u0.size()) != grid.nodes())
        throw GridMismatch("evolve_physical needs samples on the grid's nodes");
    const int p = mp.p;
    const double h = grid.h();
    const double ih2 = 1.0 / (h * h);
    Column u = u0;
    u.back() = 0.0;
    Column lap(u.size());

    PhysicalRun run;
    double t = 0.0;
    double sup = sup_norm(u);
    double last_snap_sup = sup / opt.snapshot_ratio; // force a snapshot at t = 0
    double last_snap_t = -1.0;
    long iter = 0;
    run.history.push_back({t, sup, 0.0, 0.0});

    std::vector<double> cr2(u.size());
    for (int i = 0; i < grid.nodes(); ++i)
        cr2[static_cast<std::size_t>(i)] = mp.c * grid.r(i) * grid.r(i);

    while (t < opt.t_max) {
        if (sup >= opt.sup_stop) {
            run.blew_up = true;
            break;
        }
        // snapshots on sup-ratio crossings, plus a coarse time cadence so the
        // slow early phase stays covered for rescaling
        if (sup >= last_snap_sup * opt.snapshot_ratio || t - last_snap_t >= 0.02) {
            run.snapshots.push_back({t, u});
            last_snap_sup = sup;
            last_snap_t = t;
        }
        const double dt =
            std::min(h * h / 4.0, sup > 0.0 ? 0.1 * ipow(sup, -(p - 1)) : h * h / 4.0);
        // d = 3 radial Laplacian, reflection at the origin
        lap[0] = 2.0 * mp.d * ih2 * (u[1] - u[0]);
        for (int i = 1; i < grid.cells; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double r = grid.r(i);
            lap[k] = ih2 * (u[k + 1] - 2.0 * u[k] + u[k - 1]) +
                     (mp.d - 1) / r * (u[k + 1] - u[k - 1]) / (2.0 * h);
        }
        for (int i = 0; i < grid.cells; ++i) {
            const auto k = static_cast<std::size_t>(i);
            const double v = u[k];
            u[k] += dt * (lap[k] + ipow(v, p) - cr2[k] * ipow(v, 2 * p - 1));
        }
        t += dt;
        sup = sup_norm(u);
        ++iter;
        if (iter % opt.record_every == 0) run.history.push_back({t, sup, 0.0, 0.0});
    }
    if (!run.blew_up) throw NoBlowup("sup norm never reached the stop threshold");
    run.history.push_back({t, sup, 0.0, 0.0});
    run.snapshots.push_back({t, u});

    // Linear fit of y = sup^{-(p-1)} against t over the last decade of
    // resolved growth. Once the shrinking core drops below a few grid
    // cells the max node degenerates to the ODE regime, so the window is
    // capped at sup ~ 1/h where the profile is still represented.
    const double sup_final = run.history.back().sup;
    const double cap = std::min(sup_final, 0.9 / h);
    const double lo_cut = cap / 10.0;
    double t_sum = 0.0;
    int n = 0;
    for (const auto& hpt : run.history) {
        if (hpt.sup < lo_cut || hpt.sup > cap) continue;
        t_sum += hpt.time;
        ++n;
    }
    if (n < 8) { // weak data: fall back to everything recorded
        t_sum = 0.0;
        n = 0;
        for (const auto& hpt : run.history) {
            t_sum += hpt.time;
            ++n;
        }
    }
    const double t_mean = t_sum / n;
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int m = 0;
    for (const auto& hpt : run.history) {
        const bool in_window = (hpt.sup >= lo_cut && hpt.sup <= cap);
        if (!(in_window || n == static_cast<int>(run.history.size()))) continue;
        const double x = hpt.time - t_mean; // centered: the late samples cluster
        const double y = std::pow(hpt.sup, -(p - 1.0));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
        ++m;
    }
    run.fit_points = m;
    const double slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    const double intercept = (sy - slope * sx) / m;
    run.T_est = t_mean - intercept / slope;
    const double ss_res = syy - intercept * sy - slope * sxy;
    const double ss_tot = syy - sy * sy / m;
    run.fit_r2 = 1.0 - ss_res / ss_tot;
    return run;
}

/// Catmull-Rom interpolation of uniform samples at x (grid units of h).
inline double interp_cubic(const Column& y, double h, double x) {
    const int n = static_cast<int>(y.size());
    const double u = x / h;
    int j = static_cast<int>(std::floor(u));
    j = std::clamp(j, 0, n - 2);
    const double t = u - j;
    auto at = [&](int i) { return y[static_cast<std::size_t>(std::clamp(i, 0, n - 1))]; };
    const double p0 = at(j - 1), p1 = at(j), p2 = at(j + 1), p3 = at(j + 2);
    return p1 + 0.5 * t *
                    (p2 - p0 +
                     t * (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3 +
                          t * (3.0 * (p1 - p2) + p3 - p0)));
}

/// sup_y |(T-t)^{1/(p-1)} u(t, sqrt(T-t) y) - phi(y)| over the rescaled core,
/// from the snapshot recorded nearest to t.
inline double rescaled_error(const PhysicalRun& run, double T_est, double t,
                             const ModelParams& mp, const SimGrid& grid) {
    if (!(t < T_est)) throw OutOfHistory("rescaled_error needs t < T_est");
    if (std::sqrt(T_est - t) < 3.0 * grid.h())
        throw OutOfHistory("fewer than 3 grid points resolve the rescaled core");
    const Snapshot* best = nullptr;
    double best_gap = 0.025; // snapshots are dense on the approach to T
    for (const auto& s : run.snapshots) {
        const double gap = std::abs(s.time - t);
        if (gap <= best_gap) {
            best_gap = gap;
            best = &s;
        }
    }
    if (best == nullptr) throw OutOfHistory("no snapshot recorded near the requested time");
    const double tt = T_est - best->time;
    if (!(tt > 0.0) || std::sqrt(tt) < 3.0 * grid.h())
        throw OutOfHistory("fewer than 3 grid points resolve the rescaled core");
    const double root = std::sqrt(tt);
    const double amp = std::pow(tt, mp.m());
    const double y_max = std::min(8.0, (grid.R - grid.h()) / root);
    double worst = 0.0;
    for (double y = 0.0; y <= y_max; y += 0.02) {
        const double u_here = interp_cubic(best->values, grid.h(), root * y);
        worst = std::max(worst, std::abs(amp * u_here - phi(mp, y)));
    }
    return worst;
}

/// Build the mode-ell seed from the k-th discrete B-eigenfunction: transform
/// u -> e^{r^2/8} u / r onto the evolution grid (even extrapolation at the
/// origin for ell = 0).
inline Column eigenmode_seed(const ModelParams& mp, int ell, int k, const SimGrid& grid) {
    const Grid sg{grid.R, grid.cells - 1}; // interior nodes coincide
    const auto spec = RadialOperatorSpec::make_q_ell(mp, ell);
    const Tridiagonal t = discretize(spec, sg);
    const Column u = inverse_iteration(t, lowest_eigenvalues(t, k + 1).back());
    Column f(static_cast<std::size_t>(grid.nodes()), 0.0);
    for (int i = 1; i < grid.cells; ++i) {
        const double r = grid.r(i);
        f[static_cast<std::size_t>(i)] =
            std::exp(r * r / 8.0) * u[static_cast<std::size_t>(i - 1)] / r;
    }
    if (ell == 0) f[0] = (4.0 * f[1] - f[2]) / 3.0;
    return f;
}

struct ModeRate {
    double lambda_b = 0.0;  ///< spectral eigenvalue (B-convention)
    double rate = 0.0;      ///< measured log-amplitude slope (L-convention)
    double expected = 0.0;  ///< -lambda_b
};

/// Seed the linear mode-ell stepper with the k-th spectral eigenfunction and
/// fit the modal-amplitude slope over [tau0, tau1]. For ell = 0 the discrete
/// growth direction is deflated out of stable-mode seeds first.
inline ModeRate measured_mode_rate(const ModelParams& mp, int ell, int k, const SimGrid& grid,
                                   double dtau = 5e-4, double tau0 = 1.0, double tau1 = 4.0) {
    const Grid sg{grid.R, grid.cells - 1};
    const Spectrum s = eigen_lowest(RadialOperatorSpec::make_q_ell(mp, ell), sg, k + 1, 2);
    ModeRate out;
    out.lambda_b = s.eigenvalues[static_cast<std::size_t>(k)];
    out.expected = -out.lambda_b;

    Column seed = eigenmode_seed(mp, ell, k, grid);
    SimilarityStepper stepper(mp, grid, ell, dtau, false, true);
    if (ell == 0 && out.lambda_b > 0.0) {
        const auto [v, w] = SimilarityStepper::unstable_mode_pair(mp, grid);
        deflate_against(seed, v, w);
    }
    // measure against the seed's own shape in the sigma product
    const Column probe = seed;
    auto coef = [&](const Column& f) {
        double num = 0.0, den = 0.0;
        for (int i = 0; i <= grid.cells; ++i) {
            const double r = grid.r(i);
            const double w = std::exp(-r * r / 4.0) * r * r;
            num += f[static_cast<std::size_t>(i)] * probe[static_cast<std::size_t>(i)] * w;
            den += probe[static_cast<std::size_t>(i)] * probe[static_cast<std::size_t>(i)] * w;
        }
        return num / den;
    };

    Column f = seed;
    const long steps = std::lround(tau1 / dtau);
    const long start = std::lround(tau0 / dtau);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (long step = 1; step <= steps; ++step) {
        stepper.step(f);
        if (step >= start && step % 40 == 0) {
            const double tau = step * dtau;
            const double a = std::abs(coef(f));
            if (a > 0.0) {
                const double y = std::log(a);
                sx += tau;
                sy += y;
                sxx += tau * tau;
                sxy += tau * y;
                ++n;
            }
        }
    }
    out.rate = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return out;
}

} // namespace hbl
