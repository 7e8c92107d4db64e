#pragma once

// Per-ell radial Schroedinger operators in the B-convention, their SUSY
// partner, and low-lying spectra computed by two independent routes:
//   MATRIX_BISECTION  - central differences + Sturm-sequence bisection,
//                       Richardson-extrapolated across grid refinements;
//   SHOOTING_NODECOUNT- outward Pruefer integration, eigenvalues located by
//                       node-count transitions.
// Sign convention: lambda_L = -lambda_B maps back to the linearized operator.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hbl/errors.hpp"
#include "hbl/model.hpp"
#include "hbl/tridiag.hpp"

namespace hbl {

/// Uniform grid on (0, r_max): interior nodes r_i = i h, i = 1..n, with
/// h = r_max/(n+1) and homogeneous Dirichlet ends.
struct Grid {
    double r_max = 12.0;
    int n = 1199;

    double h() const { return r_max / (n + 1); }
    double node(int i) const { return (i + 1) * h(); }
    /// Bisect every interval: the step halves exactly.
    Grid refined() const { return Grid{r_max, 2 * n + 1}; }

    static Grid checked(double r_max, int n) {
        if (n < 100) throw RangeError("grid needs n >= 100, got " + std::to_string(n));
        if (!(r_max >= 8.0))
            throw RangeError("grid needs r_max >= 8, got " + std::to_string(r_max));
        return Grid{r_max, n};
    }
    /// h = 0.01 out to r = 16; far enough that Dirichlet truncation is below
    /// 1e-9 for every eigenvalue reported at the default depth.
    static Grid spectral_default() { return Grid{16.0, 1599}; }
};

enum class OperatorKind { QEll, QSusy, QEllLimit, QSusyLimit };

inline const char* to_string(OperatorKind k) {
    switch (k) {
        case OperatorKind::QEll: return "Q_ELL";
        case OperatorKind::QSusy: return "Q_SUSY";
        case OperatorKind::QEllLimit: return "Q_ELL_LIMIT";
        case OperatorKind::QSusyLimit: return "Q_SUSY_LIMIT";
    }
    return "?";
}

/// q_ell(r) = r^2/16 - 3/4 + 1/(p-1) - V(r) + ell(ell+1)/r^2 (d = 3 only).
inline double q_ell(const ModelParams& mp, int ell, double r) {
    if (mp.d != 3) throw DimensionError("q_ell is defined in the d=3 reduction");
    return r * r / 16.0 - 0.75 + mp.m() - potential_v(mp, r) +
           static_cast<double>(ell) * (ell + 1) / (r * r);
}

/// q_S(r) = r^2/16 + 2/r^2 - 5/4 + p(r^2-2)/((p-1)(b+r^2)) + 4p r^2/((p-1)^2 (b+r^2)^2).
inline double q_susy(const ModelParams& mp, double r) {
    if (mp.d != 3) throw DimensionError("q_susy is defined in the d=3 reduction");
    const double s = mp.k.b + r * r;
    const double pm1 = mp.p - 1.0;
    return r * r / 16.0 + 2.0 / (r * r) - 1.25 + mp.p * (r * r - 2.0) / (pm1 * s) +
           4.0 * mp.p * r * r / (pm1 * pm1 * s * s);
}

/// c = 0 limits: q_limit(r, ell) = r^2/16 + ell(ell+1)/r^2 - 7/4.
inline double q_limit(int ell, double r) {
    return r * r / 16.0 + static_cast<double>(ell) * (ell + 1) / (r * r) - 1.75;
}

/// c = 0 SUSY limit: r^2/16 + 2/r^2 - 5/4.
inline double q_susy_limit(double r) { return r * r / 16.0 + 2.0 / (r * r) - 1.25; }

/// Partner potential recomputed from the ground state: W^2 + W' - 1 with
/// W = -gtilde'/gtilde in closed form. Must coincide with q_susy pointwise.
inline std::vector<double> susy_partner_from_ground(const ModelParams& mp, const Grid& grid) {
    std::vector<double> out(static_cast<std::size_t>(grid.n));
    for (int i = 0; i < grid.n; ++i) {
        const double r = grid.node(i);
        const double w = susy_w(mp, r);
        out[static_cast<std::size_t>(i)] = w * w + susy_w_prime(mp, r) - 1.0;
    }
    return out;
}

/// A concrete 1D Schroedinger problem -u'' + q u with its origin behavior.
struct RadialOperatorSpec {
    OperatorKind kind = OperatorKind::QEllLimit;
    std::optional<ModelParams> params; // absent for the c = 0 limit kinds
    int ell = 0;

    static RadialOperatorSpec make_q_ell(const ModelParams& mp, int ell) {
        if (mp.d != 3) throw DimensionError("Q_ELL operators require d = 3");
        if (ell < 0) throw RangeError("ell must be >= 0");
        return RadialOperatorSpec{OperatorKind::QEll, mp, ell};
    }
    static RadialOperatorSpec make_q_susy(const ModelParams& mp) {
        if (mp.d != 3) throw DimensionError("Q_SUSY requires d = 3");
        return RadialOperatorSpec{OperatorKind::QSusy, mp, 0};
    }
    static RadialOperatorSpec make_q_ell_limit(int ell) {
        if (ell < 0) throw RangeError("ell must be >= 0");
        return RadialOperatorSpec{OperatorKind::QEllLimit, std::nullopt, ell};
    }
    static RadialOperatorSpec make_q_susy_limit() {
        return RadialOperatorSpec{OperatorKind::QSusyLimit, std::nullopt, 0};
    }

    double q(double r) const {
        switch (kind) {
            case OperatorKind::QEll: return q_ell(*params, ell, r);
            case OperatorKind::QSusy: return q_susy(*params, r);
            case OperatorKind::QEllLimit: return q_limit(ell, r);
            case OperatorKind::QSusyLimit: return q_susy_limit(r);
        }
        return 0.0;
    }

    /// Index nu of the regular origin behavior u ~ r^{nu+1}.
    int regular_index() const {
        switch (kind) {
            case OperatorKind::QEll:
            case OperatorKind::QEllLimit: return ell;
            case OperatorKind::QSusy:
            case OperatorKind::QSusyLimit: return 1;
        }
        return 0;
    }

    /// Spherical-harmonic degeneracy of the mode (metadata only).
    int multiplicity() const { return 2 * ell + 1; }
};

/// Second-order central-difference discretization with Dirichlet ends.
/// u(0) = 0 realizes the ell = 0 origin condition; the centrifugal blowup
/// enforces it automatically for ell >= 1.
template <typename Potential>
inline Tridiagonal discretize_potential(Potential&& q, const Grid& grid) {
    const double h = grid.h();
    const double inv_h2 = 1.0 / (h * h);
    Tridiagonal t;
    t.diag.resize(static_cast<std::size_t>(grid.n));
    t.off.assign(static_cast<std::size_t>(grid.n - 1), -inv_h2);
    for (int i = 0; i < grid.n; ++i) {
        const double qi = q(grid.node(i));
        if (!std::isfinite(qi))
            throw SingularNode("potential is not finite at r = " + std::to_string(grid.node(i)));
        t.diag[static_cast<std::size_t>(i)] = 2.0 * inv_h2 + qi;
    }
    return t;
}

inline Tridiagonal discretize(const RadialOperatorSpec& spec, const Grid& grid) {
    return discretize_potential([&](double r) { return spec.q(r); }, grid);
}

enum class SolveMethod { MatrixBisection, ShootingNodecount };

inline const char* to_string(SolveMethod m) {
    return m == SolveMethod::MatrixBisection ? "MATRIX_BISECTION" : "SHOOTING_NODECOUNT";
}

/// Sorted low-lying eigenvalues in the B-convention with per-eigenvalue
/// error estimates. lambda_L = -lambda_B recovers the L-convention.
struct Spectrum {
    std::vector<double> eigenvalues;
    std::vector<double> errors;
    SolveMethod method = SolveMethod::MatrixBisection;
    Grid grid;
    OperatorKind kind = OperatorKind::QEllLimit;
    int ell = 0;
    std::optional<ModelParams> params;

    std::vector<double> lambda_l() const {
        std::vector<double> out(eigenvalues.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = -eigenvalues[i];
        return out;
    }
};

/// k smallest eigenvalues by the matrix route. `levels` grids are used
/// (each halving the step) and the h^2 Richardson ladder is collapsed; the
/// error field is the magnitude of the last extrapolation correction.
inline Spectrum eigen_lowest(const RadialOperatorSpec& spec, const Grid& grid, int k,
                             int levels = 2) {
    if (k < 1) throw RangeError("eigen_lowest needs k >= 1");
    if (k > grid.n) throw RangeError("eigen_lowest needs k <= n");
    levels = std::max(levels, 2);

    std::vector<std::vector<double>> lam(static_cast<std::size_t>(levels));
    Grid g = grid;
    for (int lev = 0; lev < levels; ++lev) {
        lam[static_cast<std::size_t>(lev)] = lowest_eigenvalues(discretize(spec, g), k);
        g = g.refined();
    }
    // Richardson ladder: column j eliminates the h^{2(j+1)} term.
    std::vector<double> errors(static_cast<std::size_t>(k), 0.0);
    for (int col = 1; col < levels; ++col) {
        const double w = std::pow(4.0, col);
        for (int lev = 0; lev + col < levels; ++lev) {
            auto& lo = lam[static_cast<std::size_t>(lev)];
            const auto& hi = lam[static_cast<std::size_t>(lev + 1)];
            for (int j = 0; j < k; ++j) {
                const double ext = (w * hi[static_cast<std::size_t>(j)] -
                                    lo[static_cast<std::size_t>(j)]) /
                                   (w - 1.0);
                if (lev == 0)
                    errors[static_cast<std::size_t>(j)] =
                        std::abs(ext - hi[static_cast<std::size_t>(j)]);
                lo[static_cast<std::size_t>(j)] = ext;
            }
        }
    }
    Spectrum s;
    s.eigenvalues = lam[0];
    s.errors = std::move(errors);
    for (auto& e : s.errors) e = std::max(e, 1e-12);
    s.method = SolveMethod::MatrixBisection;
    s.grid = grid;
    s.kind = spec.kind;
    s.ell = spec.ell;
    s.params = spec.params;
    return s;
}

/// Node count of the regular solution of -u'' + q u = lambda u on
/// (r_min, r_max), by outward Pruefer integration u = rho sin(theta),
/// u' = rho cos(theta). The phase never re-crosses a multiple of pi, so the
/// count is floor(theta_end / pi). The log-derivative formulation never
/// overflows under the confining potential.
inline int shoot_count_nodes(const RadialOperatorSpec& spec, double lambda, const Grid& grid) {
    const double r_min = std::min(1e-3, 0.5 * grid.h());
    const double r_max = grid.r_max;
    const int nu = spec.regular_index();

    auto theta_dot = [&](double r, double th) {
        const double ct = std::cos(th), st = std::sin(th);
        return ct * ct + (lambda - spec.q(r)) * st * st;
    };

    double r = r_min;
    double theta = std::atan(r_min / (nu + 1.0)); // regular branch u ~ r^{nu+1}
    const double h_base = std::min(grid.h(), 1e-3);
    while (r < r_max) {
        double step = std::min(h_base, std::max(r / 8.0, 1e-8));
        step = std::min(step, r_max - r);
        if (r + step == r) throw StiffnessError("step size underflow in node counting");
        const double k1 = theta_dot(r, theta);
        const double k2 = theta_dot(r + 0.5 * step, theta + 0.5 * step * k1);
        const double k3 = theta_dot(r + 0.5 * step, theta + 0.5 * step * k2);
        const double k4 = theta_dot(r + step, theta + step * k3);
        theta += step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        r += step;
    }
    return static_cast<int>(std::floor(theta / M_PI));
}

/// Minimum of the potential over a log-spaced sample of [lo, hi];
/// the certificate behind the positivity claims.
inline double min_q_on(const RadialOperatorSpec& spec, double lo, double hi,
                       int samples = 20000) {
    double best = std::numeric_limits<double>::infinity();
    const double ratio = std::log(hi / lo);
    for (int i = 0; i <= samples; ++i) {
        const double r = lo * std::exp(ratio * i / samples);
        best = std::min(best, spec.q(r));
    }
    return best;
}

/// k smallest eigenvalues by the shooting route: for each index the
/// node-count transition is bracketed and bisected.
inline Spectrum eigen_lowest_shooting(const RadialOperatorSpec& spec, const Grid& grid, int k,
                                      double tol = 1e-9) {
    double lo0 = min_q_on(spec, std::min(1e-3, grid.h()), grid.r_max) - 1.0;
    Spectrum s;
    s.method = SolveMethod::ShootingNodecount;
    s.grid = grid;
    s.kind = spec.kind;
    s.ell = spec.ell;
    s.params = spec.params;
    double prev = lo0;
    for (int j = 1; j <= k; ++j) {
        double lo = prev;
        double hi = lo + 1.0;
        while (shoot_count_nodes(spec, hi, grid) < j) {
            lo = hi;
            hi += std::max(1.0, 0.5 * (hi - lo0));
            if (hi > lo0 + 1e4) throw StiffnessError("eigenvalue bracket expansion failed");
        }
        while (hi - lo > tol * std::max(1.0, std::abs(hi))) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if (shoot_count_nodes(spec, mid, grid) >= j)
                hi = mid;
            else
                lo = mid;
        }
        const double lam = 0.5 * (lo + hi);
        s.eigenvalues.push_back(lam);
        s.errors.push_back(std::max(hi - lo, 1e-12));
        prev = lam;
    }
    return s;
}

/// Margin around zero inside which an eigenvalue counts as MARGINAL.
inline constexpr double kMarginalBand = 1e-8;

struct UnstableCount {
    int count = 0;           ///< strictly negative eigenvalues, both methods agreeing
    bool marginal = false;   ///< an eigenvalue sits within the +-1e-8 band of zero
    int matrix_count = 0;
    int shooting_count = 0;
    int multiplicity = 1;    ///< spherical-harmonic degeneracy 2 ell + 1
    double near_zero = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

/// Matrix-route negative count with marginal detection; Richardson-corrected
/// near zero so a discretization shift cannot flip the count.
inline UnstableCount matrix_negative_count(const RadialOperatorSpec& spec, const Grid& grid) {
    UnstableCount u;
    u.multiplicity = spec.multiplicity();
    const Tridiagonal coarse = discretize(spec, grid);
    const int below = sturm_count_below(coarse, 0.5); // safe upper bound on candidates
    if (below == 0) return u;
    Spectrum s = eigen_lowest(spec, grid, below, 2);
    for (double lam : s.eigenvalues) {
        if (lam < -kMarginalBand)
            ++u.count;
        else if (lam <= kMarginalBand) {
            u.marginal = true;
            u.near_zero = lam;
        }
    }
    u.matrix_count = u.count;
    return u;
}

inline int shooting_negative_count(const RadialOperatorSpec& spec, const Grid& grid,
                                   bool* marginal = nullptr) {
    const int strict = shoot_count_nodes(spec, -kMarginalBand, grid);
    if (marginal) {
        const int upper = shoot_count_nodes(spec, kMarginalBand, grid);
        *marginal = *marginal || (upper != strict);
    }
    return strict;
}

} // namespace detail

/// Count of strictly negative B-eigenvalues for the given ell, agreed
/// between the two routes. Throws MethodDisagreement when they differ.
inline UnstableCount unstable_count(const ModelParams& mp, int ell,
                                    const Grid& grid = Grid::spectral_default()) {
    const auto spec = RadialOperatorSpec::make_q_ell(mp, ell);
    UnstableCount u = detail::matrix_negative_count(spec, grid);
    bool marg = u.marginal;
    u.shooting_count = detail::shooting_negative_count(spec, grid, &marg);
    u.marginal = marg;
    if (u.shooting_count != u.matrix_count && !u.marginal) {
        throw MethodDisagreement(u.matrix_count, u.shooting_count, u.near_zero,
                                 "matrix and shooting routes disagree on the negative count");
    }
    u.count = u.matrix_count;
    return u;
}

struct CrossingPoint {
    double c = 0.0;
    double lambda0 = 0.0; ///< lowest B-eigenvalue at this c
    int count = 0;
};

struct CrossingReport {
    bool found = false;
    double c_star = std::numeric_limits<double>::quiet_NaN();
    double width = 0.0;
    int count_lo = 0;
    int count_hi = 0;
    std::vector<CrossingPoint> curve;
};

namespace detail {

/// Non-throwing count for scan interiors: a marginal eigenvalue is treated
/// as already crossed (the scan pins it as the locus).
inline std::pair<int, bool> lenient_count(int p, int ell, double c, const Grid& grid) {
    const auto mp = ModelParams::validate(3, p, c);
    UnstableCount u = matrix_negative_count(RadialOperatorSpec::make_q_ell(mp, ell), grid);
    return {u.count, u.marginal};
}

} // namespace detail

/// Bisect c until the negative-eigenvalue count changes, to width 1e-4.
/// The eigenvalue-vs-c curve is sampled at `points` values for the report.
inline CrossingReport scan_crossing(int p, int ell, double c_lo, double c_hi, int points = 25,
                                    const Grid& grid = Grid::spectral_default()) {
    CrossingReport rep;
    if (!(c_lo < c_hi)) return rep; // degenerate interval: NoCrossing

    auto [n_lo, m_lo] = detail::lenient_count(p, ell, c_lo, grid);
    auto [n_hi, m_hi] = detail::lenient_count(p, ell, c_hi, grid);
    rep.count_lo = n_lo;
    rep.count_hi = n_hi;

    if (points > 1) {
        rep.curve.reserve(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
            const double c = c_lo + (c_hi - c_lo) * i / (points - 1);
            const auto mp = ModelParams::validate(3, p, c);
            Spectrum s = eigen_lowest(RadialOperatorSpec::make_q_ell(mp, ell), grid, 1, 2);
            rep.curve.push_back({c, s.eigenvalues[0], detail::lenient_count(p, ell, c, grid).first});
        }
    }

    if (n_lo == n_hi) return rep; // NoCrossing

    double lo = c_lo, hi = c_hi;
    while (hi - lo > 1e-4) {
        const double mid = 0.5 * (lo + hi);
        auto [n_mid, marg] = detail::lenient_count(p, ell, mid, grid);
        if (marg) {
            rep.found = true;
            rep.c_star = mid;
            rep.width = hi - lo;
            return rep;
        }
        if (n_mid == n_lo)
            lo = mid;
        else
            hi = mid;
    }
    rep.found = true;
    rep.c_star = 0.5 * (lo + hi);
    rep.width = hi - lo;
    return rep;
}

} // namespace hbl
