#pragma once

// Concave barrier omega(t) = t - kappa t^(1+theta) on (0,1] and the
// parameter selection making a L^3 w'' w'^2 + b L^2 w'^2 < -K for large L.

#include "errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace infbound {

struct BarrierParams {
    double kappa = 0.125;
    double theta = 0.5;

    //! 0 < kappa < 1/4 and 1/2 <= theta <= 1.
    [[nodiscard]] bool valid() const
    {
        return std::isfinite(kappa) && std::isfinite(theta) && kappa > 0.0 && kappa < 0.25
            && theta >= 0.5 && theta <= 1.0;
    }

    void validate() const
    {
        if (!valid())
            throw DomainError("BarrierParams: need 0 < kappa < 1/4 and 1/2 <= theta <= 1");
    }
};

struct OmegaValues {
    double omega;
    double omega1; //!< first derivative
    double omega2; //!< second derivative
};

/**
 * omega and its first two derivatives at t in (0, 1].
 *
 * t^(theta-1) blows up at 0 for theta < 1, so omega2 is evaluated at
 * max(t, 4 eps).
 */
inline OmegaValues omega_eval(const BarrierParams& p, double t)
{
    p.validate();
    if (!(t > 0.0 && t <= 1.0))
        throw DomainError("omega_eval: t must lie in (0, 1]");
    const double k = p.kappa;
    const double th = p.theta;
    const double tc = std::max(t, 4.0 * std::numeric_limits<double>::epsilon());
    return {
        t - k * std::pow(t, 1.0 + th),
        1.0 - k * (1.0 + th) * std::pow(t, th),
        -k * th * (1.0 + th) * std::pow(tc, th - 1.0),
    };
}

//! Sampled check of omega > 0, 1/2 <= omega' <= 1, omega'' < 0 plus 1 - 2 kappa >= 1/2.
inline bool check_window(const BarrierParams& p, int sample_count)
{
    if (sample_count < 2)
        throw DomainError("check_window: sample_count must be >= 2");
    if (!p.valid())
        return false;
    if (!(1.0 - 2.0 * p.kappa >= 0.5))
        return false;
    for (int i = 1; i <= sample_count; ++i) {
        const double t = double(i) / double(sample_count + 1);
        const auto w = omega_eval(p, t);
        if (!(w.omega > 0.0 && w.omega1 >= 0.5 && w.omega1 <= 1.0 && w.omega2 < 0.0))
            return false;
    }
    return true;
}

//! The constant (4 kappa / 3)(1 - 4 kappa) used to size the b-term of Lbar.
inline double kappa_bar(const BarrierParams& p)
{
    return (4.0 * p.kappa / 3.0) * (1.0 - 4.0 * p.kappa);
}

/**
 * Uniform lower bound of -omega'' omega'^2 on (0,1):
 * kappa theta (1+theta) (1 - 2 kappa (1+theta)).
 *
 * Note this is smaller than kappa_bar() for theta = 1/2, so kappa_bar()
 * alone does not bound the curvature term.
 */
inline double curvature_floor(const BarrierParams& p)
{
    const double s = p.kappa * (1.0 + p.theta);
    return p.kappa * p.theta * (1.0 + p.theta) * (1.0 - 2.0 * s);
}

/**
 * Threshold Lbar such that a L^3 w'' w'^2 + b L^2 w'^2 < -K for every L >= Lbar:
 *
 *   Lbar = max( 2b / (a kappa_bar),  (K / (a (c - kappa_bar/2)))^(1/3),  1 )
 *
 * with c = curvature_floor(p) > kappa_bar/2.  The first term gives
 * b L^2 <= (a kappa_bar / 2) L^3, the second then makes
 * a c L^3 - b L^2 >= a (c - kappa_bar/2) L^3 >= K.
 */
inline double barrier_threshold(const BarrierParams& p, double K, double a, double b)
{
    p.validate();
    if (!(std::isfinite(K) && K > 0.0))
        throw DomainError("barrier_threshold: K must be positive and finite");
    if (!(std::isfinite(a) && a > 0.0))
        throw DomainError("barrier_threshold: a must be positive and finite");
    if (!(std::isfinite(b) && b >= 0.0))
        throw DomainError("barrier_threshold: b must be non-negative and finite");
    const double kb = kappa_bar(p);
    const double gap = curvature_floor(p) - 0.5 * kb;
    if (!(gap > 0.0))
        throw DomainError("barrier_threshold: curvature floor does not dominate kappa_bar/2");
    const double from_b = 2.0 * b / (a * kb);
    const double from_K = std::cbrt(K / (a * gap));
    const double Lbar = std::max({from_b, from_K, 1.0});
    if (!std::isfinite(Lbar))
        throw OverflowError("barrier_threshold: Lbar is not representable");
    return Lbar;
}

struct ParameterChoice {
    BarrierParams params;
    double kappa_bar;
    double Lbar;
};

//! Fixes theta = 1/2, kappa = 1/8 and returns the matching Lbar(K, a, b).
inline ParameterChoice choose_parameters(double K, double a, double b)
{
    const BarrierParams p{0.125, 0.5};
    return {p, kappa_bar(p), barrier_threshold(p, K, a, b)};
}

//! Left side a L^3 w'' w'^2 + b L^2 w'^2 at t.
inline double keq_lhs(const BarrierParams& p, double L, double a, double b, double t)
{
    const auto w = omega_eval(p, t);
    const double w1sq = w.omega1 * w.omega1;
    return a * L * L * L * w.omega2 * w1sq + b * L * L * w1sq;
}

struct BarrierCertificate {
    BarrierParams params;
    double L = 0.0;
    double a = 0.0;
    double b = 0.0;
    double K = 0.0;
    int samples = 0;
    double worst_margin = 0.0; //!< min over samples of -(lhs + K)
    double worst_t = 0.0;
    bool pass = false;
};

inline BarrierCertificate verify_keq(const BarrierParams& p, double L, double a, double b, double K,
                                     int sample_count)
{
    p.validate();
    if (!(L > 0.0 && a > 0.0 && b >= 0.0 && K > 0.0))
        throw DomainError("verify_keq: need L, a, K > 0 and b >= 0");
    if (sample_count < 1)
        throw DomainError("verify_keq: sample_count must be >= 1");
    BarrierCertificate cert{p, L, a, b, K, sample_count,
                            std::numeric_limits<double>::infinity(), 0.0, false};
    for (int i = 1; i <= sample_count; ++i) {
        const double t = double(i) / double(sample_count + 1);
        const double margin = -(keq_lhs(p, L, a, b, t) + K);
        if (margin < cert.worst_margin) {
            cert.worst_margin = margin;
            cert.worst_t = t;
        }
    }
    cert.pass = cert.worst_margin > 0.0;
    return cert;
}

} // namespace infbound
