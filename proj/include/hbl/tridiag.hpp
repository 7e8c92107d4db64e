#pragma once

// Symmetric tridiagonal eigenvalue machinery: Sturm-sequence counting,
// bisection for the k smallest eigenvalues, a Thomas solve for general
// tridiagonal systems and inverse iteration for eigenvectors. No external
// linear algebra; matrices here never exceed a few thousand rows.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

namespace hbl {

/// Symmetric tridiagonal matrix: diag has n entries, off has n-1.
struct Tridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const { return diag.size(); }
};

/// Number of eigenvalues strictly below x (Sturm sequence via the LDL^T
/// pivot recurrence, with the usual pivot floor to survive exact hits).
inline int sturm_count_below(const Tridiagonal& t, double x) {
    const std::size_t n = t.size();
    double off_max = 0.0;
    for (double e : t.off) off_max = std::max(off_max, std::abs(e));
    const double pivmin =
        std::max(off_max * off_max, 1.0) * std::numeric_limits<double>::min() /
        std::numeric_limits<double>::epsilon();

    int count = 0;
    double q = t.diag[0] - x;
    if (std::abs(q) < pivmin) q = -pivmin;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < n; ++i) {
        q = t.diag[i] - x - t.off[i - 1] * t.off[i - 1] / q;
        if (std::abs(q) < pivmin) q = -pivmin;
        if (q < 0.0) ++count;
    }
    return count;
}

/// Gershgorin bounds [lo, hi] containing the whole spectrum.
inline std::pair<double, double> gershgorin_bounds(const Tridiagonal& t) {
    const std::size_t n = t.size();
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        double radius = 0.0;
        if (i > 0) radius += std::abs(t.off[i - 1]);
        if (i + 1 < n) radius += std::abs(t.off[i]);
        lo = std::min(lo, t.diag[i] - radius);
        hi = std::max(hi, t.diag[i] + radius);
    }
    return {lo, hi};
}

/// k smallest eigenvalues in ascending order, each bracketed by bisection to
/// width <= rel_tol * max(1, |lambda|).
inline std::vector<double> lowest_eigenvalues(const Tridiagonal& t, int k,
                                              double rel_tol = 1e-12) {
    auto [glo, ghi] = gershgorin_bounds(t);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int j = 1; j <= k; ++j) {
        double lo = out.empty() ? glo : out.back();
        double hi = ghi;
        // invariant: count(lo) < j <= count(hi)
        while (hi - lo > rel_tol * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break; // step underflow
            if (sturm_count_below(t, mid) >= j)
                hi = mid;
            else
                lo = mid;
        }
        out.push_back(0.5 * (lo + hi));
    }
    return out;
}

/// Solve a general tridiagonal system (lower, diag, upper) x = rhs in place.
/// lower[i] multiplies x[i-1] in row i; upper[i] multiplies x[i+1] in row i.
inline void thomas_solve(const std::vector<double>& lower, const std::vector<double>& diag,
                         const std::vector<double>& upper, std::vector<double>& rhs) {
    const std::size_t n = diag.size();
    static thread_local std::vector<double> cp;
    cp.assign(n, 0.0);
    double beta = diag[0];
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        cp[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * cp[i - 1];
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= cp[i] * rhs[i + 1];
}

/// Normalized eigenvector of a symmetric tridiagonal matrix for an eigenvalue
/// approximation lambda, by shifted inverse iteration.
inline std::vector<double> inverse_iteration(const Tridiagonal& t, double lambda,
                                             int iters = 4) {
    const std::size_t n = t.size();
    std::vector<double> lower(n, 0.0), diag(n), upper(n - 1);
    // shift slightly off the eigenvalue so the solve stays well posed
    const double shift = lambda + 1e-11 * std::max(1.0, std::abs(lambda));
    for (std::size_t i = 0; i < n; ++i) diag[i] = t.diag[i] - shift;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        upper[i] = t.off[i];
        lower[i + 1] = t.off[i];
    }
    std::mt19937 rng(12345);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    for (int it = 0; it < iters; ++it) {
        thomas_solve(lower, diag, upper, v);
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
    }
    // fix an overall sign: make the first sizable component positive
    for (double x : v) {
        if (std::abs(x) > 1e-8) {
            if (x < 0.0)
                for (auto& y : v) y = -y;
            break;
        }
    }
    return v;
}

} // namespace hbl
