#pragma once

// Upper bound on the number of negative eigenvalues of
//   A u = -u'' + (a/r^2) u + b r^2 u + V(r) u
// via the split A = -d^2/dr^2 + alpha/r^2 + Q with Q = (a-alpha)/r^2 + b r^2 + V:
//   nu(A) <= prefactor(kappa, .) * integral_0^inf r^{2 kappa - 1} Q_-(r)^kappa dr.
// Two prefactor conventions coexist in the source material and are kept side
// by side: the theorem's (4 alpha + 1)^{kappa - 1/2} and the worked-example
// display (4 delta + 1)^{kappa - 1/2} with delta = alpha + 1/4. They differ
// by 25% at (delta, kappa) = (1, 3/2), so results always name their convention.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "hbl/errors.hpp"
#include "hbl/model.hpp"
#include "hbl/quadrature.hpp"

namespace hbl {

/// Gamma function for x > 0 (Lanczos, g = 7), relative accuracy ~1e-14.
inline double gamma_fn(double x) {
    if (!(x > 0.0)) throw DomainError("gamma_fn requires x > 0");
    static const double coeff[9] = {0.99999999999980993,  676.5203681218851,
                                    -1259.1392167224028,  771.32342877765313,
                                    -176.61502916214059,  12.507343278686905,
                                    -0.13857109526572012, 9.9843695780195716e-6,
                                    1.5056327351493116e-7};
    if (x < 0.5) return gamma_fn(x + 1.0) / x; // recurrence; reflection unused
    const double z = x - 1.0;
    double acc = coeff[0];
    for (int i = 1; i < 9; ++i) acc += coeff[i] / (z + i);
    const double t = z + 7.5;
    return std::sqrt(2.0 * M_PI) * std::pow(t, z + 0.5) * std::exp(-t) * acc;
}

enum class PrefactorConvention { Theorem4AlphaPlus1, Appendix4DeltaPlus1 };

inline const char* to_string(PrefactorConvention c) {
    return c == PrefactorConvention::Theorem4AlphaPlus1 ? "THEOREM_4ALPHA_PLUS_1"
                                                        : "APPENDIX_4DELTA_PLUS_1";
}

inline PrefactorConvention parse_convention(const std::string& s) {
    if (s == "theorem" || s == "THEOREM_4ALPHA_PLUS_1") return PrefactorConvention::Theorem4AlphaPlus1;
    if (s == "appendix" || s == "APPENDIX_4DELTA_PLUS_1")
        return PrefactorConvention::Appendix4DeltaPlus1;
    throw ConventionRequired("select a prefactor convention: theorem | appendix | both");
}

/// The operator data and the (alpha, kappa) split choice.
struct GgmtProblem {
    double a_coeff = 2.0;               ///< inverse-square coefficient, > -1/4 and != 0
    double b_coeff = 1.0 / 16.0;        ///< confining coefficient, > 0
    std::function<double(double)> V;    ///< bounded continuous radial potential
    double alpha = 0.75;                ///< split parameter, -1/4 < alpha < a_coeff
    double kappa = 1.5;                 ///< exponent, in [3/2, 5]

    void check() const {
        if (!(a_coeff > -0.25) || a_coeff == 0.0)
            throw RangeError("GGMT needs a_coeff > -1/4 and a_coeff != 0");
        if (!(b_coeff > 0.0)) throw RangeError("GGMT needs b_coeff > 0");
        if (!(alpha > -0.25) || !(alpha < a_coeff))
            throw RangeError("GGMT needs -1/4 < alpha < a_coeff");
        if (!(kappa >= 1.5) || !(kappa <= 5.0))
            throw RangeError("GGMT needs kappa in [3/2, 5]");
    }

    double Q(double r) const { return (a_coeff - alpha) / (r * r) + b_coeff * r * r + V(r); }
};

struct QSplit {
    double Q, Qplus, Qminus;
};

inline QSplit q_split(const GgmtProblem& prob, double r) {
    const double q = prob.Q(r);
    return {q, std::max(q, 0.0), std::max(-q, 0.0)};
}

struct Interval {
    double lo = 0.0, hi = 0.0;
};

/// Sign-change roots of Q located by a dense log-spaced scan of [1e-4, 1e2]
/// plus bisection; consecutive roots with Q < 0 between them bound the
/// support of Q_-. Finite because Q -> +inf at both ends.
inline std::vector<Interval> support_bracket(const GgmtProblem& prob) {
    constexpr int kSamples = 10000;
    constexpr double kLo = 1e-4, kHi = 1e2;
    const double ratio = std::log(kHi / kLo);

    auto refine = [&](double lo, double hi) {
        // bisection on the sign of Q to width 1e-12
        const bool neg_lo = prob.Q(lo) < 0.0;
        while (hi - lo > 1e-12) {
            const double mid = 0.5 * (lo + hi);
            if (mid <= lo || mid >= hi) break;
            if ((prob.Q(mid) < 0.0) == neg_lo)
                lo = mid;
            else
                hi = mid;
        }
        return 0.5 * (lo + hi);
    };

    std::vector<Interval> out;
    double prev_r = kLo;
    double prev_q = prob.Q(prev_r);
    double open = 0.0;
    bool inside = prev_q < 0.0;
    if (inside) open = prev_r; // degenerate start; Q -> +inf rules it out in practice
    for (int i = 1; i <= kSamples; ++i) {
        const double r = kLo * std::exp(ratio * i / kSamples);
        const double q = prob.Q(r);
        if ((q < 0.0) != inside) {
            const double root = refine(prev_r, r);
            if (inside)
                out.push_back({open, root});
            else
                open = root;
            inside = q < 0.0;
        }
        prev_r = r;
        prev_q = q;
    }
    if (inside) out.push_back({open, kHi});
    return out;
}

struct GgmtResult {
    double G = 0.0;
    double integral = 0.0;
    double prefactor = 0.0;
    std::vector<Interval> support;
    double quad_error = 0.0;
    PrefactorConvention convention = PrefactorConvention::Theorem4AlphaPlus1;
};

/// Gamma-ratio coefficient of the bound under the chosen convention.
inline double ggmt_prefactor(double alpha, double kappa, PrefactorConvention conv) {
    const double denom_base =
        conv == PrefactorConvention::Theorem4AlphaPlus1 ? 4.0 * alpha + 1.0 : 4.0 * alpha + 2.0;
    const double g1 = gamma_fn(kappa);
    return std::pow(kappa - 1.0, kappa - 1.0) * gamma_fn(2.0 * kappa) /
           (std::pow(denom_base, kappa - 0.5) * std::pow(kappa, kappa) * g1 * g1);
}

/// Evaluate the bound: adaptive quadrature of r^{2k-1} Q_-^k over the support
/// of Q_-, then the convention's prefactor. Empty support gives G = 0.
inline GgmtResult ggmt_bound(const GgmtProblem& prob, PrefactorConvention conv,
                             double quad_rel_tol = 1e-10) {
    prob.check();
    GgmtResult res;
    res.convention = conv;
    res.support = support_bracket(prob);
    res.prefactor = ggmt_prefactor(prob.alpha, prob.kappa, conv);

    auto integrand = [&](double r) {
        const double qm = std::max(-prob.Q(r), 0.0);
        return std::pow(r, 2.0 * prob.kappa - 1.0) * std::pow(qm, prob.kappa);
    };
    for (const auto& iv : res.support) {
        const auto piece = integrate_adaptive(integrand, iv.lo, iv.hi, quad_rel_tol, 1e-14);
        res.integral += piece.value;
        res.quad_error += piece.error;
    }
    res.G = res.prefactor * res.integral;
    res.quad_error *= res.prefactor;
    return res;
}

/// The worked-example assembly: for the ell = 1 operator of the p = 3 model,
///   a_coeff = 2, b_coeff = 1/16, V = -1/4 - V_model, alpha = delta - 1/4,
/// so Q(r) = r^2/16 - 1/4 - V_model(r) + (9/4 - delta)/r^2.
inline GgmtProblem appendix_problem(const ModelParams& mp, double delta, double kappa) {
    if (!(delta > 0.0) || !(delta < 2.25))
        throw RangeError("appendix split needs 0 < delta < 9/4");
    GgmtProblem prob;
    prob.a_coeff = 2.0;
    prob.b_coeff = 1.0 / 16.0;
    prob.V = [mp](double r) { return -0.25 - potential_v(mp, r); };
    prob.alpha = delta - 0.25;
    prob.kappa = kappa;
    return prob;
}

inline GgmtResult appendix_G(double c, double delta, double kappa, PrefactorConvention conv) {
    const auto mp = ModelParams::validate(3, 3, c);
    return ggmt_bound(appendix_problem(mp, delta, kappa), conv);
}

struct OptimumG {
    double delta = 0.0;
    double kappa = 0.0;
    GgmtResult result;
};

/// Exhaustive grid minimum of G; ties break toward smaller kappa, then
/// smaller delta.
inline OptimumG optimize_G(double c, const std::vector<double>& delta_grid,
                           const std::vector<double>& kappa_grid, PrefactorConvention conv) {
    if (delta_grid.empty() || kappa_grid.empty())
        throw RangeError("optimize_G needs non-empty delta and kappa grids");
    OptimumG best;
    bool first = true;
    for (double delta : delta_grid) {
        for (double kappa : kappa_grid) {
            GgmtResult r = appendix_G(c, delta, kappa, conv);
            const bool better =
                first || r.G < best.result.G ||
                (r.G == best.result.G &&
                 (kappa < best.kappa || (kappa == best.kappa && delta < best.delta)));
            if (better) {
                best = OptimumG{delta, kappa, std::move(r)};
                first = false;
            }
        }
    }
    return best;
}

} // namespace hbl
