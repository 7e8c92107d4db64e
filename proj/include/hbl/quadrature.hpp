#pragma once

// Adaptive Gauss-Kronrod (G7, K15) quadrature with interval subdivision.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

namespace hbl {

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int evaluations = 0;
};

namespace detail {

// QUADPACK dqk15 nodes and weights (positive half; node 0 last)
inline constexpr double kXgk[8] = {
    0.9914553711208126, 0.9491079123427585, 0.8648644233597691, 0.7415311855993944,
    0.5860872354676911, 0.4058451513773972, 0.2077849550078985, 0.0};
inline constexpr double kWgk[8] = {
    0.0229353220105292, 0.0630920926299785, 0.1047900103222502, 0.1406532597155259,
    0.1690047266392679, 0.1903505780647854, 0.2044329400752989, 0.2094821410847278};
inline constexpr double kWg[4] = {0.1294849661688697, 0.2797053914892767,
                                  0.3818300505051189, 0.4179591836734694};

template <typename F>
inline void gk15(F&& f, double a, double b, double& value, double& error) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(mid);
    double res_g = fc * kWg[3];
    double res_k = fc * kWgk[7];
    for (int i = 0; i < 7; ++i) {
        const double dx = half * kXgk[i];
        const double fsum = f(mid - dx) + f(mid + dx);
        res_k += kWgk[i] * fsum;
        if (i % 2 == 1) res_g += kWg[i / 2] * fsum;
    }
    value = res_k * half;
    error = std::abs((res_k - res_g) * half);
}

} // namespace detail

/// Integrate f over [a, b], splitting the worst interval until the summed
/// embedded-rule error drops below max(rel_tol * |I|, abs_floor).
template <typename F>
inline QuadratureResult integrate_adaptive(F&& f, double a, double b, double rel_tol = 1e-10,
                                           double abs_floor = 1e-14, int max_intervals = 4000) {
    struct Piece {
        double a, b, value, error;
        bool operator<(const Piece& o) const { return error < o.error; }
    };
    QuadratureResult out;
    if (!(a < b)) return out;

    std::priority_queue<Piece> heap;
    double v, e;
    detail::gk15(f, a, b, v, e);
    out.evaluations = 15;
    heap.push({a, b, v, e});
    double total_v = v, total_e = e;

    int pieces = 1;
    while (total_e > std::max(rel_tol * std::abs(total_v), abs_floor) &&
           pieces < max_intervals) {
        Piece worst = heap.top();
        heap.pop();
        total_v -= worst.value;
        total_e -= worst.error;
        const double mid = 0.5 * (worst.a + worst.b);
        for (auto [lo, hi] : {std::pair{worst.a, mid}, std::pair{mid, worst.b}}) {
            detail::gk15(f, lo, hi, v, e);
            out.evaluations += 15;
            heap.push({lo, hi, v, e});
            total_v += v;
            total_e += e;
        }
        ++pieces;
    }
    out.value = total_v;
    out.error = total_e;
    return out;
}

} // namespace hbl
