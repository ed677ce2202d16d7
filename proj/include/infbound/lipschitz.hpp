#pragma once

// Lipschitz quotients over B_r and the end-to-end certificate: ledger,
// witness search over a set of centres, case analysis and lemma chain.

#include "barrier.hpp"
#include "doubling.hpp"
#include "grid.hpp"
#include "parallel.hpp"
#include "solver.hpp"
#include "viscosity.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace infbound {

struct QuotientResult {
    double sup = 0.0;
    std::size_t x_index = 0;
    std::size_t y_index = 0;
};

/**
 * max |u(x) - u(y)| / |x - y| over distinct grid pairs in the closed ball
 * of `region_radius` about `center` (origin by default).  Ties keep the
 * lexicographically smallest index pair.
 */
inline QuotientResult lipschitz_quotient(const ScalarField& u, double region_radius,
                                         std::optional<Vector> center = {})
{
    if (!(region_radius > 0.0))
        throw DomainError("lipschitz_quotient: region radius must be positive");
    const Vector c = center.value_or(Vector::Zero(u.dim()));
    const auto pts = ball_indices(u, c, region_radius);
    QuotientResult best;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vector xi = u.coord(pts[i]);
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double q = std::abs(u[pts[i]] - u[pts[j]]) / (xi - u.coord(pts[j])).norm();
            if (q > best.sup) {
                best = {q, pts[i], pts[j]};
            }
        }
    }
    return best;
}

struct PerPhaseQuotients {
    double pos = 0.0;   //!< pos x pos pairs
    double neg = 0.0;   //!< neg x neg pairs
    double cross = 0.0; //!< every other pair (straddling or touching the free boundary)
};

inline PerPhaseQuotients per_phase_quotients(const ScalarField& u, const PhaseSets& phases, double region_radius)
{
    const auto pts = ball_indices(u, Vector::Zero(u.dim()), region_radius);
    PerPhaseQuotients out;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vector xi = u.coord(pts[i]);
        const Phase pi = phases.of(pts[i]);
        for (std::size_t j = i + 1; j < pts.size(); ++j) {
            const double q = std::abs(u[pts[i]] - u[pts[j]]) / (xi - u.coord(pts[j])).norm();
            const Phase pj = phases.of(pts[j]);
            double& slot = (pi == Phase::positive && pj == Phase::positive)   ? out.pos
                         : (pi == Phase::negative && pj == Phase::negative) ? out.neg
                                                                            : out.cross;
            slot = std::max(slot, q);
        }
    }
    return out;
}

//! per_axis^n centres on {-1/4 + k/(2(per_axis-1))}: a coarse lattice inside B_{1/2}.
inline std::vector<Vector> coarse_centers(int n, int per_axis = 5)
{
    if (per_axis < 1)
        throw DomainError("coarse_centers: need at least one point per axis");
    std::vector<double> ax;
    for (int k = 0; k < per_axis; ++k)
        ax.push_back(per_axis == 1 ? 0.0 : -0.25 + 0.5 * double(k) / double(per_axis - 1));
    std::vector<Vector> out;
    if (n == 1) {
        for (double a : ax)
            out.push_back(Vector::Constant(1, a));
        return out;
    }
    for (double b : ax)
        for (double a : ax) {
            Vector z(2);
            z << a, b;
            out.push_back(z);
        }
    return out;
}

//! Every grid point with |z| <= radius.
inline std::vector<Vector> dense_centers(const ScalarField& u, double radius = 0.25)
{
    std::vector<Vector> out;
    for (std::size_t k : ball_indices(u, Vector::Zero(u.dim()), radius))
        out.push_back(u.coord(k));
    return out;
}

struct CenterResult {
    Vector z0;
    std::optional<DoublingWitness> witness;
    std::optional<CaseReport> case_report;
    std::optional<LemmaChainTrace> chain;
    std::string chain_error; //!< set when the lemma chain could not be evaluated
};

struct LipschitzReport {
    double sup_quotient = 0.0;
    std::size_t arg_x = 0;
    std::size_t arg_y = 0;
    PerPhaseQuotients per_phase;
    ConstantLedger ledger;       //!< centred at the origin
    double bound_value = 0.0;    //!< L + varrho
    double empirical_C = 0.0;    //!< sup_quotient / (L + ||u||)
    double tau_w = 0.0;
    double report_tol = 0.0;     //!< 2 tau_w / h
    double region_radius = 0.5;
    std::vector<CenterResult> centers;
    std::optional<DoublingWitness> certificate; //!< first witness in centre order; none = pass
    std::size_t certificate_center = 0;
    bool quotient_within_bound = false;
    bool pass = false;
};

struct HarnessOptions {
    std::optional<std::vector<Vector>> centers; //!< default coarse_centers(n)
    double region_radius = 0.5;
    double search_radius = 0.5;
    std::optional<double> tau_w;
    std::optional<double> L_override;
    std::optional<double> tol_zero;
    JetOptions jets;
    int workers = 0;
};

//! Sup of |f| over grid points of the closed unit ball.
inline double sup_on_unit_ball(const ScalarField& f)
{
    double s = 0.0;
    for (std::size_t k = 0; k < f.size(); ++k)
        if (f.coord(k).squaredNorm() <= 1.0 + 1e-12)
            s = std::max(s, std::abs(f[k]));
    return s;
}

inline LipschitzReport theorem_report(const ScalarField& u, const ProblemSpec& problem, const BarrierParams& params,
                                      const HarnessOptions& opts = {})
{
    problem.validate();
    params.validate();
    if (!u.same_grid(problem.dirichlet))
        throw DomainError("theorem_report: field and problem grids differ");

    LipschitzReport rep;
    rep.region_radius = opts.region_radius;
    const Vector origin = Vector::Zero(u.dim());
    rep.ledger = build_ledger(problem.Lambda, sup_on_unit_ball(problem.fplus), sup_on_unit_ball(problem.fminus),
                              sup_on_unit_ball(u), origin, params);
    if (opts.L_override)
        rep.ledger = with_forced_L(rep.ledger, *opts.L_override);

    const auto q = lipschitz_quotient(u, opts.region_radius);
    rep.sup_quotient = q.sup;
    rep.arg_x = q.x_index;
    rep.arg_y = q.y_index;
    const auto phases = extract_phases(u, opts.tol_zero);
    rep.per_phase = per_phase_quotients(u, phases, opts.region_radius);
    rep.bound_value = rep.ledger.L + rep.ledger.varrho;
    rep.empirical_C = rep.sup_quotient / (rep.ledger.L + rep.ledger.normU);
    rep.tau_w = opts.tau_w.value_or(default_tau_w(u));
    rep.report_tol = 2.0 * rep.tau_w / u.spacing();

    const auto centers = opts.centers.value_or(coarse_centers(u.dim()));
    rep.centers.resize(centers.size());
    const int workers = opts.workers > 0 ? opts.workers : default_worker_count();
    // Parallel over centres; the witness search inside each runs serially.
    parallel_for(centers.size(), workers, [&](std::size_t c) {
        CenterResult& cr = rep.centers[c];
        cr.z0 = centers[c];
        const auto led = recentered(rep.ledger, cr.z0);
        cr.witness = find_witness(u, led, params, {opts.search_radius, rep.tau_w, 1});
        if (!cr.witness)
            return;
        cr.case_report = classify_witness(*cr.witness, phases, u, led, params);
        if (cr.witness->rho > 0.0) {
            try {
                cr.chain = verify_lemma_chain(u, *cr.witness, led, params, opts.jets);
            } catch (const Error& e) {
                cr.chain_error = e.what();
            }
        } else {
            cr.chain_error = "degenerate witness pair";
        }
    });

    for (std::size_t c = 0; c < rep.centers.size(); ++c) {
        if (rep.centers[c].witness) {
            rep.certificate = rep.centers[c].witness;
            rep.certificate_center = c;
            break;
        }
    }
    rep.quotient_within_bound = rep.sup_quotient <= rep.bound_value + rep.report_tol;
    rep.pass = !rep.certificate && rep.quotient_within_bound;
    return rep;
}

} // namespace infbound
