#pragma once

// Closed-form objects of the model: the self-similar profile phi, the
// linearization potential V, the symmetry eigenfunction g and the
// supersymmetric ground state gtilde, together with their exact derivative
// rules and residual identities. Everything here is a pure function of
// (d, p, c) and r; derivatives are hand-differentiated rationals times
// Gaussians, so residual tests are limited only by rounding.

#include <cmath>
#include <functional>
#include <sstream>

#include "hbl/errors.hpp"

namespace hbl {

/// a and b from the profile: a = (2/(p-1)) sqrt(p/c), b = 2(sqrt(p/c) - d).
struct ProfileConstants {
    double a = 0.0;
    double b = 0.0;
};

/// Validated model parameters (d, p, c) plus derived constants.
///
/// Admissibility: p odd, p >= 3, and 0 < c < p/d^2 strictly. The profile
/// formula itself would allow any p > 1, but the polynomial expansion of the
/// nonlinearity needs integer odd p, so the restriction is enforced here.
struct ModelParams {
    int d = 3;
    int p = 3;
    double c = 0.0;
    ProfileConstants k;

    /// 1/(p-1)
    double m() const { return 1.0 / (p - 1); }
    /// p/(p-1)
    double q() const { return static_cast<double>(p) / (p - 1); }

    static ModelParams validate(int d, int p, double c) {
        if (d < 1) throw RangeError("d must be a positive integer, got " + std::to_string(d));
        if (p < 3 || p % 2 == 0) {
            std::ostringstream os;
            os << "p must be an odd integer >= 3, got " << p;
            throw ParityError(os.str());
        }
        const double c_max = static_cast<double>(p) / (static_cast<double>(d) * d);
        if (!(c > 0.0) || c >= c_max) {
            std::ostringstream os;
            os << "c must lie strictly in (0, p/d^2) = (0, " << c_max << "), got " << c;
            throw RangeError(os.str());
        }
        ModelParams mp;
        mp.d = d;
        mp.p = p;
        mp.c = c;
        const double root = std::sqrt(static_cast<double>(p) / c);
        mp.k.a = 2.0 / (p - 1) * root;
        mp.k.b = 2.0 * (root - d);
        return mp;
    }
};

/// Spatially homogeneous blowup solution (T-t)^{-1/(p-1)} (p-1)^{-1/(p-1)}.
inline double ode_blowup(double t, double T, int p) {
    if (!(t >= 0.0) || !(t < T)) throw DomainError("ode_blowup requires 0 <= t < T");
    const double m = 1.0 / (p - 1);
    return std::pow(T - t, -m) * std::pow(static_cast<double>(p - 1), -m);
}

/// phi(r) = (a/(b+r^2))^{1/(p-1)}; strictly positive, strictly decreasing.
inline double phi(const ModelParams& mp, double r) {
    return std::pow(mp.k.a / (mp.k.b + r * r), mp.m());
}

inline double phi_prime(const ModelParams& mp, double r) {
    const double s = mp.k.b + r * r;
    return -2.0 * mp.m() * r * phi(mp, r) / s;
}

inline double phi_second(const ModelParams& mp, double r) {
    const double m = mp.m();
    const double s = mp.k.b + r * r;
    return phi(mp, r) * (-2.0 * m / s + 4.0 * m * (m + 1.0) * r * r / (s * s));
}

/// V(r) = p phi^{p-1} - c(2p-1) r^2 phi^{2p-2}, evaluated via the exact
/// rational forms phi^{p-1} = a/(b+r^2), phi^{2p-2} = a^2/(b+r^2)^2.
inline double potential_v(const ModelParams& mp, double r) {
    const double s = mp.k.b + r * r;
    const double a = mp.k.a;
    return mp.p * a / s - mp.c * (2.0 * mp.p - 1.0) * r * r * a * a / (s * s);
}

/// Residual of the profile equation
///   phi'' + ((d-1)/r) phi' - (r/2) phi' - phi/(p-1) + phi^p - c r^2 phi^{2p-1},
/// identically zero for admissible parameters.
inline double profile_residual(const ModelParams& mp, double r) {
    const double f = phi(mp, r);
    const double f1 = phi_prime(mp, r);
    const double f2 = phi_second(mp, r);
    const double fp = std::pow(f, mp.p);
    const double f2p1 = std::pow(f, 2 * mp.p - 1);
    return f2 + (mp.d - 1) / r * f1 - 0.5 * r * f1 - mp.m() * f + fp - mp.c * r * r * f2p1;
}

/// g(r) = (b+r^2)^{-p/(p-1)}, the symmetry eigenfunction of L (Lg = g).
inline double symmetry_g(const ModelParams& mp, double r) {
    return std::pow(mp.k.b + r * r, -mp.q());
}

inline double symmetry_g_prime(const ModelParams& mp, double r) {
    const double s = mp.k.b + r * r;
    return -2.0 * mp.q() * r * std::pow(s, -mp.q() - 1.0);
}

inline double symmetry_g_second(const ModelParams& mp, double r) {
    const double q = mp.q();
    const double s = mp.k.b + r * r;
    return -2.0 * q * std::pow(s, -q - 1.0) + 4.0 * q * (q + 1.0) * r * r * std::pow(s, -q - 2.0);
}

/// Residual of Lg - g with L = Delta - (r/2) d/dr - 1/(p-1) + V in dimension d.
inline double l_residual_on_g(const ModelParams& mp, double r) {
    const double g = symmetry_g(mp, r);
    const double g1 = symmetry_g_prime(mp, r);
    const double g2 = symmetry_g_second(mp, r);
    const double lap = g2 + (mp.d - 1) / r * g1;
    return lap - 0.5 * r * g1 - mp.m() * g + potential_v(mp, r) * g - g;
}

/// gtilde(r) = e^{-r^2/8} r (b+r^2)^{-p/(p-1)}, the ground state of the
/// half-line operator B0 with eigenvalue -1 (B-convention).
inline double susy_gtilde(const ModelParams& mp, double r) {
    return std::exp(-r * r / 8.0) * r * symmetry_g(mp, r);
}

/// W = -gtilde'/gtilde = -1/r + r/4 + 2q r/(b+r^2); the superpotential.
inline double susy_w(const ModelParams& mp, double r) {
    const double s = mp.k.b + r * r;
    return -1.0 / r + 0.25 * r + 2.0 * mp.q() * r / s;
}

/// W' in closed form.
inline double susy_w_prime(const ModelParams& mp, double r) {
    const double q = mp.q();
    const double s = mp.k.b + r * r;
    return 1.0 / (r * r) + 0.25 + 2.0 * q / s - 4.0 * q * r * r / (s * s);
}

/// A radial evaluation rule with optional closed-form derivatives.
struct RadialFunction {
    std::function<double(double)> value;
    std::function<double(double)> first;
    std::function<double(double)> second;

    double operator()(double r) const { return value(r); }
};

} // namespace hbl
