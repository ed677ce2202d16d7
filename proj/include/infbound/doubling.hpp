#pragma once

// Doubling of variables: the comparison function
//   phi(x, y) = L omega(|x - y|) + varrho (|x - z0|^2 + |y - z0|^2),
// its derivatives, the interior-maximum bound, an exhaustive search for
// pairs where u(x) - u(y) > phi(x, y), and the classification of such pairs.

#include "barrier.hpp"
#include "errors.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace infbound {

/**
 * Constants of the Lipschitz argument, all derived from ||f+||, ||f-||,
 * ||u|| and Lambda:
 *
 *   varrho = 9 ||u||,  a = 4,  b = 16 varrho,  d = 16 varrho^3,
 *   K = 4 max(||f+||, ||f-||, 1) + d + 1,
 *   L = max(Lbar(K, a, b), 2 Lambda + 4 varrho + 1).
 *
 * a, b, d come from expanding the interior-maximum bound; the L rule makes
 * L/2 - 2 varrho > Lambda.
 */
struct ConstantLedger {
    double Lambda = 0.0;
    double normFp = 0.0;
    double normFm = 0.0;
    double normU = 0.0;
    double varrho = 0.0;
    double a = 4.0;
    double b = 0.0;
    double d = 0.0;
    double K = 0.0;
    double Lbar = 0.0;
    double L = 0.0;
    Vector z0;
    bool L_forced = false;
};

inline ConstantLedger build_ledger(double Lambda, double normFp, double normFm, double normU, const Vector& z0,
                                   const BarrierParams& params = {})
{
    if (!(std::isfinite(Lambda) && Lambda > 0.0))
        throw DomainError("build_ledger: Lambda must be positive");
    if (!(normFp >= 0.0 && normFm >= 0.0 && normU >= 0.0) || !std::isfinite(normFp + normFm + normU))
        throw DomainError("build_ledger: norms must be finite and non-negative");
    ConstantLedger led;
    led.Lambda = Lambda;
    led.normFp = normFp;
    led.normFm = normFm;
    led.normU = normU;
    led.varrho = 9.0 * normU;
    led.a = 4.0;
    led.b = 16.0 * led.varrho;
    led.d = 16.0 * led.varrho * led.varrho * led.varrho;
    led.K = 4.0 * std::max({normFp, normFm, 1.0}) + led.d + 1.0;
    led.Lbar = barrier_threshold(params, led.K, led.a, led.b);
    led.L = std::max(led.Lbar, 2.0 * Lambda + 4.0 * led.varrho + 1.0);
    if (!std::isfinite(led.L))
        throw OverflowError("build_ledger: L is not representable");
    led.z0 = z0;
    return led;
}

//! Replaces L by a user-chosen value (counterexample runs); marks the ledger.
inline ConstantLedger with_forced_L(ConstantLedger led, double L)
{
    if (!(std::isfinite(L) && L > 0.0))
        throw DomainError("with_forced_L: L must be positive");
    led.L = L;
    led.L_forced = true;
    return led;
}

inline ConstantLedger recentered(ConstantLedger led, const Vector& z0)
{
    led.z0 = z0;
    return led;
}

namespace detail {

inline double omega_value(const BarrierParams& p, double t)
{
    return t > 0.0 ? omega_eval(p, t).omega : 0.0;
}

inline void require_same_dim(const Vector& x, const Vector& y, const ConstantLedger& led)
{
    if (x.size() != y.size() || x.size() != led.z0.size())
        throw DomainError("doubling: point dimensions do not match the ledger centre");
}

} // namespace detail

//! L omega(|x-y|) + varrho (|x-z0|^2 + |y-z0|^2); |x - y| <= 1.
inline double phi_eval(const Vector& x, const Vector& y, const ConstantLedger& led, const BarrierParams& params)
{
    detail::require_same_dim(x, y, led);
    const double t = (x - y).norm();
    if (t > 1.0)
        throw DomainError("phi_eval: |x - y| must not exceed 1");
    return led.L * detail::omega_value(params, t) + led.varrho * ((x - led.z0).squaredNorm() + (y - led.z0).squaredNorm());
}

struct PhiGradient {
    Vector dx;
    Vector dy;
};

//! D_x phi = L w'(rho) nu + 2 varrho (x0 - z0),  D_y phi = -L w'(rho) nu + 2 varrho (y0 - z0).
inline PhiGradient grad_phi(const Vector& x0, const Vector& y0, const ConstantLedger& led, const BarrierParams& params)
{
    detail::require_same_dim(x0, y0, led);
    const double rho = (x0 - y0).norm();
    if (!(rho > 0.0))
        throw DegeneratePairError("grad_phi: x0 == y0");
    const Vector nu = (x0 - y0) / rho;
    const double w1 = omega_eval(params, rho).omega1;
    return {led.L * w1 * nu + 2.0 * led.varrho * (x0 - led.z0),
            -led.L * w1 * nu + 2.0 * led.varrho * (y0 - led.z0)};
}

//! L w''(rho) nu (x) nu + L (w'(rho)/rho) (I - nu (x) nu).
inline Matrix m_omega(const Vector& x0, const Vector& y0, const ConstantLedger& led, const BarrierParams& params)
{
    detail::require_same_dim(x0, y0, led);
    const double rho = (x0 - y0).norm();
    if (!(rho > 0.0))
        throw DegeneratePairError("m_omega: x0 == y0");
    const Vector nu = (x0 - y0) / rho;
    const auto w = omega_eval(params, rho);
    const Matrix P = nu * nu.transpose();
    const auto n = nu.size();
    return led.L * w.omega2 * P + led.L * (w.omega1 / rho) * (Matrix::Identity(n, n) - P);
}

//! 4 L w''(rho) (L w'(rho) + varrho rho)^2 + 16 varrho (L^2 w'(rho)^2 + varrho^2), rho in (0,1].
inline double lemma_bound(double L, double varrho, const BarrierParams& params, double rho)
{
    if (!(rho > 0.0 && rho <= 1.0))
        throw DomainError("lemma_bound: rho must lie in (0, 1]");
    const auto w = omega_eval(params, rho);
    const double s = L * w.omega1 + varrho * rho;
    return 4.0 * L * w.omega2 * s * s + 16.0 * varrho * (L * L * w.omega1 * w.omega1 + varrho * varrho);
}

inline double lemma_bound(const ConstantLedger& led, const BarrierParams& params, double rho)
{
    return lemma_bound(led.L, led.varrho, params, rho);
}

//! a L^3 w'' w'^2 + b L^2 w'^2 + d, the expanded form dominating lemma_bound.
inline double expanded_bound(const ConstantLedger& led, const BarrierParams& params, double rho)
{
    const auto w = omega_eval(params, rho);
    const double L = led.L;
    const double w1sq = w.omega1 * w.omega1;
    return led.a * L * L * L * w.omega2 * w1sq + led.b * L * L * w1sq + led.d;
}

struct DoublingWitness {
    std::size_t x_index = 0;
    std::size_t y_index = 0;
    Vector x0;
    Vector y0;
    double rho = 0.0;
    double gap = 0.0; //!< u(x0) - u(y0) - phi(x0, y0)
    Vector nu;
    double tau_w = 0.0;
    double interior_lhs = 0.0; //!< |x0 - z0|^2 + |y0 - z0|^2
    double interior_rhs = 0.0; //!< 2 ||u|| / varrho
    bool interior_ok = false;
};

struct WitnessOptions {
    double search_radius = 0.5;
    std::optional<double> tau_w;
    int workers = 0;
};

/**
 * 4 x the largest second difference of u along an axis.  Removes the affine
 * part of the one-cell oscillation, so linear data gets (almost) no slack.
 */
inline double default_tau_w(const ScalarField& u)
{
    double osc = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        const auto idx = u.multi_index(k);
        for (int a = 0; a < u.dim(); ++a) {
            auto p = idx, q = idx;
            p[std::size_t(a)] += 1;
            q[std::size_t(a)] -= 1;
            if (!u.contains_index(p[0], p[1]) || !u.contains_index(q[0], q[1]))
                continue;
            osc = std::max(osc, std::abs(u[u.flat(p[0], p[1])] + u[u.flat(q[0], q[1])] - 2.0 * u[k]));
        }
    }
    return std::max(4.0 * osc, 1e-12 * std::max(1.0, u.sup_norm()));
}

//! Grid indices in the closed ball of `radius` about `center`, increasing.
inline std::vector<std::size_t> ball_indices(const ScalarField& u, const Vector& center, double radius)
{
    if (center.size() != u.dim())
        throw DomainError("ball_indices: centre dimension mismatch");
    for (int a = 0; a < u.dim(); ++a)
        if (std::abs(center[a]) + radius > 1.0 + 1e-12)
            throw GridError("ball is not contained in the grid");
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < u.size(); ++k)
        if ((u.coord(k) - center).norm() <= radius + 1e-12)
            out.push_back(k);
    return out;
}

/**
 * Maximises u(x) - u(y) - phi(x, y) over all ordered grid pairs in the closed
 * ball B_r(z0).  Ties go to the lexicographically smallest (x, y) index pair.
 * Returns the maximiser if the maximum exceeds tau_w.
 */
inline std::optional<DoublingWitness> find_witness(const ScalarField& u, const ConstantLedger& led,
                                                   const BarrierParams& params, const WitnessOptions& opts = {})
{
    params.validate();
    if (!(opts.search_radius > 0.0 && opts.search_radius <= 0.5))
        throw DomainError("find_witness: search_radius must lie in (0, 1/2]");
    if (led.z0.size() != u.dim())
        throw DomainError("find_witness: ledger centre dimension mismatch");
    const auto pts = ball_indices(u, led.z0, opts.search_radius);
    const double tau = opts.tau_w.value_or(default_tau_w(u));
    if (!(tau > 0.0))
        throw DomainError("find_witness: tau_w must be positive");

    const std::size_t N = pts.size();
    std::vector<Vector> xs(N);
    std::vector<double> vals(N), quad(N);
    for (std::size_t i = 0; i < N; ++i) {
        xs[i] = u.coord(pts[i]);
        vals[i] = u[pts[i]];
        quad[i] = led.varrho * (xs[i] - led.z0).squaredNorm();
    }
    const double k = params.kappa, e = 1.0 + params.theta, L = led.L;

    struct Best {
        double value = -std::numeric_limits<double>::infinity();
        std::size_t i = 0, j = 0;
    };
    const int workers = opts.workers > 0 ? opts.workers : default_worker_count();
    const std::size_t blocks = std::max<std::size_t>(1, std::min<std::size_t>(N, std::size_t(workers) * 4));
    std::vector<Best> best(blocks);
    parallel_for(blocks, workers, [&](std::size_t blk) {
        Best b;
        for (std::size_t i = N * blk / blocks; i < N * (blk + 1) / blocks; ++i) {
            for (std::size_t j = 0; j < N; ++j) {
                const double t = (xs[i] - xs[j]).norm();
                const double om = t > 0.0 ? t - k * std::pow(t, e) : 0.0;
                const double v = vals[i] - vals[j] - (L * om + quad[i] + quad[j]);
                if (v > b.value) {
                    b.value = v;
                    b.i = i;
                    b.j = j;
                }
            }
        }
        best[blk] = b;
    });
    Best top;
    for (const auto& b : best)
        if (b.value > top.value)
            top = b;

    if (!(top.value > tau))
        return std::nullopt;

    DoublingWitness w;
    w.x_index = pts[top.i];
    w.y_index = pts[top.j];
    w.x0 = xs[top.i];
    w.y0 = xs[top.j];
    w.rho = (w.x0 - w.y0).norm();
    w.gap = top.value;
    w.nu = w.rho > 0.0 ? Vector((w.x0 - w.y0) / w.rho) : Vector::Zero(u.dim());
    w.tau_w = tau;
    w.interior_lhs = (w.x0 - led.z0).squaredNorm() + (w.y0 - led.z0).squaredNorm();
    w.interior_rhs = led.varrho > 0.0 ? 2.0 * led.normU / led.varrho : std::numeric_limits<double>::infinity();
    w.interior_ok = w.interior_lhs <= w.interior_rhs;
    return w;
}

enum class CaseTag { PosPos, NegNeg, BothFB, NoFB, Case1, Case2, Inconsistent };

inline const char* to_string(CaseTag t)
{
    switch (t) {
    case CaseTag::PosPos: return "PosPos";
    case CaseTag::NegNeg: return "NegNeg";
    case CaseTag::BothFB: return "BothFB";
    case CaseTag::NoFB: return "NoFB";
    case CaseTag::Case1: return "Case1";
    case CaseTag::Case2: return "Case2";
    case CaseTag::Inconsistent: return "Inconsistent";
    }
    return "?";
}

inline const char* to_string(Phase p)
{
    switch (p) {
    case Phase::positive: return "pos";
    case Phase::negative: return "neg";
    case Phase::free_boundary: return "fb";
    case Phase::zero_interior: return "zero_interior";
    }
    return "?";
}

//! Flux comparison at the free boundary point of a Case1/Case2 witness.
struct FluxRecord {
    bool at_y = true;          //!< Case1: xi_y = -D_y phi at y0; Case2: xi_x = D_x phi at x0
    Vector xi;
    double xi_norm = 0.0;
    double Lambda = 0.0;
    double lower_bound = 0.0;  //!< L/2 - 2 varrho
    bool lambda_bound_holds = false; //!< Lambda >= |xi|
    bool lower_bound_holds = false;  //!< |xi| >= L/2 - 2 varrho
};

struct CaseReport {
    Phase phase_x = Phase::positive;
    Phase phase_y = Phase::positive;
    CaseTag tag = CaseTag::Inconsistent;
    bool ordering_ok = false;          //!< u(x0) > u(y0)
    bool ledger_contradiction = false; //!< the case is excluded by the ledger's size rules
    std::optional<FluxRecord> flux;
};

inline CaseReport classify_witness(const DoublingWitness& w, const PhaseSets& phases, const ScalarField& u,
                                   const ConstantLedger& led, const BarrierParams& params)
{
    if (phases.label.size() != u.size())
        throw DomainError("classify_witness: phases and field grids differ");
    CaseReport rep;
    rep.phase_x = phases.of(w.x_index);
    rep.phase_y = phases.of(w.y_index);
    if (rep.phase_x == Phase::zero_interior || rep.phase_y == Phase::zero_interior)
        throw PhaseError("classify_witness: witness point outside pos, neg and fb");
    rep.ordering_ok = u[w.x_index] > u[w.y_index];

    using enum Phase;
    const Phase px = rep.phase_x, py = rep.phase_y;
    if (!rep.ordering_ok)
        rep.tag = CaseTag::Inconsistent;
    else if (px == positive && py == positive)
        rep.tag = CaseTag::PosPos;
    else if (px == negative && py == negative)
        rep.tag = CaseTag::NegNeg;
    else if (px == free_boundary && py == free_boundary)
        rep.tag = CaseTag::BothFB;
    else if (px == positive && py == negative)
        rep.tag = CaseTag::NoFB;
    else if (px == positive && py == free_boundary)
        rep.tag = CaseTag::Case1;
    else if (px == free_boundary && py == negative)
        rep.tag = CaseTag::Case2;
    else
        rep.tag = CaseTag::Inconsistent;

    const bool K_rule = led.K >= 4.0 * std::max(led.normFp, led.normFm);
    switch (rep.tag) {
    case CaseTag::PosPos:
    case CaseTag::NegNeg:
    case CaseTag::NoFB:
        rep.ledger_contradiction = K_rule;
        break;
    case CaseTag::BothFB:
        rep.ledger_contradiction = true;
        break;
    case CaseTag::Case1:
    case CaseTag::Case2: {
        const auto g = grad_phi(w.x0, w.y0, led, params);
        FluxRecord fr;
        fr.at_y = rep.tag == CaseTag::Case1;
        fr.xi = fr.at_y ? Vector(-g.dy) : g.dx;
        fr.xi_norm = fr.xi.norm();
        fr.Lambda = led.Lambda;
        fr.lower_bound = 0.5 * led.L - 2.0 * led.varrho;
        fr.lambda_bound_holds = led.Lambda >= fr.xi_norm;
        fr.lower_bound_holds = fr.xi_norm >= fr.lower_bound;
        rep.ledger_contradiction = fr.lower_bound > led.Lambda;
        rep.flux = fr;
        break;
    }
    case CaseTag::Inconsistent:
        break;
    }
    return rep;
}

struct LemmaChainTrace {
    Vector Dx_phi;
    Vector Dy_phi;
    Matrix M_omega;
    Matrix M_x;               //!< touching Hessian of the super jet at x0
    Matrix M_y;               //!< touching Hessian of the sub jet at y0
    double defect_x = 0.0;
    double defect_y = 0.0;
    double iota = 0.0;        //!< 2 (L w'(rho)/rho + varrho)
    double iota_identity_error = 0.0; //!< |D_x phi - D_y phi - iota (x0 - y0)|
    double comp4 = 0.0;       //!< <M_omega (Dx - Dy), Dx - Dy>
    double comp4_closed = 0.0;//!< 4 L w'' (L w' + varrho rho)^2
    double grad_sq_sum = 0.0; //!< |Dx|^2 + |Dy|^2
    double grad_sq_bound = 0.0; //!< 4 (L^2 w'^2 + varrho^2)
    double lambda = 0.0;      //!< <A^2 (Dx, Dy), (Dx, Dy)>
    double epsilon = 0.0;
    double matrix_rhs = 0.0;  //!< comp4 + 2 varrho grad_sq_sum + epsilon lambda
    double lhs = 0.0;         //!< <M_x Dx, Dx> - <M_y Dy, Dy>
    double rhs_bound = 0.0;   //!< lemma_bound(rho)
    double tau_chain = 0.0;
    double slack = 0.0;       //!< rhs_bound - lhs
    bool pass = false;        //!< lhs <= rhs_bound + tau_chain
};

/**
 * Fits a super jet at x0 and a sub jet at y0 and evaluates every quantity in
 * the chain ending at lhs <= lemma_bound(rho).  The fitted jets stand in for
 * the matrices of the abstract maximum principle, so `slack` is reported
 * rather than assumed.
 */
inline LemmaChainTrace verify_lemma_chain(const ScalarField& u, const DoublingWitness& w, const ConstantLedger& led,
                                          const BarrierParams& params, const JetOptions& jets = {},
                                          std::optional<double> tau_chain = {})
{
    const auto jx = fit_jet(u, w.x_index, JetSide::super, jets);
    const auto jy = fit_jet(u, w.y_index, JetSide::sub, jets);
    if (!jx || !jy)
        throw JetFitError("verify_lemma_chain: no touching jet within the defect cap");

    LemmaChainTrace tr;
    const auto g = grad_phi(w.x0, w.y0, led, params);
    tr.Dx_phi = g.dx;
    tr.Dy_phi = g.dy;
    tr.M_omega = m_omega(w.x0, w.y0, led, params);
    tr.M_x = jx->touching_hessian();
    tr.M_y = jy->touching_hessian();
    tr.defect_x = jx->touch_defect;
    tr.defect_y = jy->touch_defect;

    const double rho = w.rho;
    const auto om = omega_eval(params, rho);
    const double L = led.L, vr = led.varrho;
    tr.iota = 2.0 * (L * om.omega1 / rho + vr);
    const Vector diff = g.dx - g.dy;
    tr.iota_identity_error = (diff - tr.iota * (w.x0 - w.y0)).norm();
    tr.comp4 = diff.dot(tr.M_omega * diff);
    const double s = L * om.omega1 + vr * rho;
    tr.comp4_closed = 4.0 * L * om.omega2 * s * s;
    tr.grad_sq_sum = g.dx.squaredNorm() + g.dy.squaredNorm();
    tr.grad_sq_bound = 4.0 * (L * L * om.omega1 * om.omega1 + vr * vr);

    const auto n = w.x0.size();
    Matrix A = Matrix::Zero(2 * n, 2 * n);
    A.topLeftCorner(n, n) = tr.M_omega;
    A.topRightCorner(n, n) = -tr.M_omega;
    A.bottomLeftCorner(n, n) = -tr.M_omega;
    A.bottomRightCorner(n, n) = tr.M_omega;
    A += 2.0 * vr * Matrix::Identity(2 * n, 2 * n);
    Vector v(2 * n);
    v << g.dx, g.dy;
    tr.lambda = (A * v).squaredNorm();
    tr.epsilon = tr.lambda > 0.0 ? 8.0 * vr * (L * L * om.omega1 * om.omega1 + vr * vr) / tr.lambda : 1.0;
    tr.matrix_rhs = tr.comp4 + 2.0 * vr * tr.grad_sq_sum + tr.epsilon * tr.lambda;

    tr.lhs = g.dx.dot(tr.M_x * g.dx) - g.dy.dot(tr.M_y * g.dy);
    tr.rhs_bound = lemma_bound(led, params, rho);
    tr.tau_chain = tau_chain.value_or(1e-9 * (std::abs(tr.lhs) + std::abs(tr.rhs_bound) + 1.0));
    tr.slack = tr.rhs_bound - tr.lhs;
    tr.pass = tr.lhs <= tr.rhs_bound + tr.tau_chain;
    return tr;
}

} // namespace infbound
