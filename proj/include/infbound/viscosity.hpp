#pragma once

// Discrete viscosity-solution checks: phase sets, touching jets, the interior
// inequalities and the one-sided free boundary conditions.

#include "errors.hpp"
#include "grid.hpp"
#include "solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace infbound {

enum class Phase : unsigned char {
    positive,
    negative,
    free_boundary,
    zero_interior //!< zero cell with no strict-sign axis neighbour; not part of R(u)
};

struct PhaseSets {
    std::vector<std::size_t> pos;
    std::vector<std::size_t> neg;
    std::vector<std::size_t> fb;
    std::vector<std::size_t> zero_interior;
    std::vector<Phase> label; //!< per grid cell
    double tol_zero = 0.0;

    [[nodiscard]] Phase of(std::size_t k) const { return label.at(k); }
};

//! h^2 ||u||_inf
inline double default_tol_zero(const ScalarField& u)
{
    return u.spacing() * u.spacing() * u.sup_norm();
}

namespace detail {

template <typename F>
void for_axis_neighbours(const ScalarField& u, std::size_t k, F&& f)
{
    const auto idx = u.multi_index(k);
    for (int a = 0; a < u.dim(); ++a) {
        for (int s : {-1, 1}) {
            auto q = idx;
            q[std::size_t(a)] += s;
            if (u.contains_index(q[0], q[1]))
                f(u.flat(q[0], q[1]));
        }
    }
}

} // namespace detail

/**
 * pos/neg are the strict-sign cells (|u| > tol_zero); fb collects zero cells
 * touching a strict-sign cell and strict-sign cells with an opposite-sign
 * axis neighbour.  Zero cells surrounded by zeros are zero_interior.
 */
inline PhaseSets extract_phases(const ScalarField& u, std::optional<double> tol_zero = {})
{
    const double tol = tol_zero.value_or(default_tol_zero(u));
    if (!(tol >= 0.0))
        throw DomainError("extract_phases: tol_zero must be >= 0");
    auto sgn = [&](std::size_t k) { return u[k] > tol ? 1 : (u[k] < -tol ? -1 : 0); };

    PhaseSets sets;
    sets.tol_zero = tol;
    sets.label.resize(u.size());
    for (std::size_t k = 0; k < u.size(); ++k) {
        const int s = sgn(k);
        bool strict_nb = false;
        bool opposite_nb = false;
        detail::for_axis_neighbours(u, k, [&](std::size_t q) {
            const int t = sgn(q);
            strict_nb = strict_nb || t != 0;
            opposite_nb = opposite_nb || (s != 0 && t == -s);
        });
        Phase p;
        if (s == 0)
            p = strict_nb ? Phase::free_boundary : Phase::zero_interior;
        else if (opposite_nb)
            p = Phase::free_boundary;
        else
            p = s > 0 ? Phase::positive : Phase::negative;
        sets.label[k] = p;
        switch (p) {
        case Phase::positive: sets.pos.push_back(k); break;
        case Phase::negative: sets.neg.push_back(k); break;
        case Phase::free_boundary: sets.fb.push_back(k); break;
        case Phase::zero_interior: sets.zero_interior.push_back(k); break;
        }
    }
    return sets;
}

enum class JetSide { super, sub };

struct JetOptions {
    double radius_cells = 3.0; //!< window radius in units of h
    double defect_cap = std::numeric_limits<double>::infinity();
};

/**
 * (xi, M) fitted at `point`.  Touching holds on the window as
 *   super: u(x) <= u(p) + <xi,d> + 1/2 <M d,d> + touch_defect |d|^2
 *   sub:   u(x) >= u(p) + <xi,d> + 1/2 <M d,d> - touch_defect |d|^2
 * up to round_tol |d|^2 of floating point slack.
 */
struct DiscreteJet {
    std::size_t point = 0;
    Vector xi;
    Matrix M;
    JetSide side = JetSide::super;
    double touch_radius = 0.0;
    double touch_defect = 0.0;
    double round_tol = 0.0;

    //! Hessian of the repaired quadratic that genuinely touches on the window.
    [[nodiscard]] Matrix touching_hessian() const
    {
        const double s = side == JetSide::super ? 2.0 * touch_defect : -2.0 * touch_defect;
        return M + s * Matrix::Identity(M.rows(), M.cols());
    }
};

namespace detail {

inline std::vector<std::array<int, 2>> jet_window(int n, double radius_cells)
{
    std::vector<std::array<int, 2>> offs;
    const int r = static_cast<int>(std::floor(radius_cells + 1e-9));
    const double r2 = radius_cells * radius_cells + 1e-9;
    for (int b = (n == 2 ? -r : 0); b <= (n == 2 ? r : 0); ++b)
        for (int a = -r; a <= r; ++a)
            if ((a || b) && double(a * a + b * b) <= r2)
                offs.push_back({a, b});
    return offs;
}

//! Signed excess of u over the model at offset d, divided by |d|^2 (positive = violates touching).
inline double touching_excess(JetSide side, double du, const Vector& d, const Vector& xi, const Matrix& M)
{
    const double q = xi.dot(d) + 0.5 * d.dot(M * d);
    const double ex = (du - q) / d.squaredNorm();
    return side == JetSide::super ? ex : -ex;
}

} // namespace detail

/**
 * Least-squares quadratic through (p, u(p)) on the window, then the smallest
 * curvature slack that makes it touch from above (super) or below (sub).
 * Returns nullopt for rank-deficient windows or slack above defect_cap.
 */
inline std::optional<DiscreteJet> fit_jet(const ScalarField& u, std::size_t idx, JetSide side,
                                          const JetOptions& opts = {})
{
    if (!(opts.radius_cells >= 1.0))
        throw DomainError("fit_jet: window radius must be at least one cell");
    const int n = u.dim();
    const double h = u.spacing();
    const auto base = u.multi_index(idx);
    const auto offs = detail::jet_window(n, opts.radius_cells);
    for (const auto& o : offs)
        if (!u.contains_index(base[0] + o[0], base[1] + o[1]))
            throw GridError("fit_jet: window leaves the grid");

    const int unknowns = n == 1 ? 2 : 5;
    Matrix A(static_cast<Eigen::Index>(offs.size()), unknowns);
    Vector rhs(static_cast<Eigen::Index>(offs.size()));
    const double u0 = u[idx];
    for (std::size_t r = 0; r < offs.size(); ++r) {
        const auto& o = offs[r];
        const double s0 = o[0], s1 = o[1];
        const auto row = static_cast<Eigen::Index>(r);
        if (n == 1) {
            A.row(row) << s0, 0.5 * s0 * s0;
        } else {
            A.row(row) << s0, s1, 0.5 * s0 * s0, s0 * s1, 0.5 * s1 * s1;
        }
        rhs[row] = u[u.flat(base[0] + o[0], base[1] + o[1])] - u0;
    }
    Eigen::ColPivHouseholderQR<Matrix> qr(A);
    if (qr.rank() < unknowns)
        return std::nullopt;
    const Vector c = qr.solve(rhs);

    DiscreteJet jet;
    jet.point = idx;
    jet.side = side;
    jet.touch_radius = opts.radius_cells * h;
    jet.xi = Vector(n);
    jet.M = Matrix(n, n);
    if (n == 1) {
        jet.xi[0] = c[0] / h;
        jet.M(0, 0) = c[1] / (h * h);
    } else {
        jet.xi << c[0] / h, c[1] / h;
        jet.M << c[2] / (h * h), c[3] / (h * h), c[3] / (h * h), c[4] / (h * h);
    }

    double worst = -std::numeric_limits<double>::infinity();
    double scale = std::abs(u0);
    Vector d(n);
    for (std::size_t r = 0; r < offs.size(); ++r) {
        const auto& o = offs[r];
        for (int a = 0; a < n; ++a)
            d[a] = h * o[std::size_t(a)];
        const double ux = u[u.flat(base[0] + o[0], base[1] + o[1])];
        worst = std::max(worst, detail::touching_excess(side, ux - u0, d, jet.xi, jet.M));
        scale = std::max(scale, std::abs(ux) + std::abs(u0) + std::abs(jet.xi.dot(d))
                                    + std::abs(0.5 * d.dot(jet.M * d)));
    }
    jet.round_tol = 1024.0 * std::numeric_limits<double>::epsilon() * scale / (h * h);
    jet.touch_defect = worst > jet.round_tol ? worst : 0.0;
    if (jet.touch_defect > opts.defect_cap)
        return std::nullopt;
    return jet;
}

//! Re-checks the stored touching inequality on every window point.
inline bool jet_touches(const ScalarField& u, const DiscreteJet& jet)
{
    const int n = u.dim();
    const double h = u.spacing();
    const auto base = u.multi_index(jet.point);
    Vector d(n);
    for (const auto& o : detail::jet_window(n, jet.touch_radius / h)) {
        if (!u.contains_index(base[0] + o[0], base[1] + o[1]))
            return false;
        for (int a = 0; a < n; ++a)
            d[a] = h * o[std::size_t(a)];
        const double du = u[u.flat(base[0] + o[0], base[1] + o[1])] - u[jet.point];
        if (detail::touching_excess(jet.side, du, d, jet.xi, jet.M) > jet.touch_defect + jet.round_tol)
            return false;
    }
    return true;
}

struct InteriorCheck {
    bool pass = false;
    double value = 0.0;   //!< -<H xi, xi> with H the touching Hessian
    double forcing = 0.0; //!< f+ or f- at the point
    double slack = 0.0;   //!< value - forcing
};

/**
 * super jet: -<H xi,xi> <= f + tol;  sub jet: -<H xi,xi> >= f - tol,
 * with f = f+ on pos cells and f- on neg cells.
 */
inline InteriorCheck check_interior(const ScalarField& u, const PhaseSets& phases, const ProblemSpec& problem,
                                    const DiscreteJet& jet, double tol)
{
    if (!problem.fplus.same_grid(u))
        throw DomainError("check_interior: problem and field grids differ");
    const Phase ph = phases.of(jet.point);
    if (ph != Phase::positive && ph != Phase::negative)
        throw PhaseError("check_interior: jet point is not in a strict phase");
    InteriorCheck out;
    out.forcing = ph == Phase::positive ? problem.fplus[jet.point] : problem.fminus[jet.point];
    out.value = -jet.xi.dot(jet.touching_hessian() * jet.xi);
    out.slack = out.value - out.forcing;
    out.pass = jet.side == JetSide::super ? out.slack <= tol : out.slack >= -tol;
    return out;
}

//! {4h, 3h, 2h, h}
inline std::vector<double> default_t_list(double h)
{
    return {4.0 * h, 3.0 * h, 2.0 * h, h};
}

struct RaySlope {
    double slope = 0.0;
    double residual = 0.0;      //!< rms misfit of the through-origin model on the fitted t's
    std::vector<double> raw;    //!< u along the ray, one per t in the input order
};

/**
 * Samples u(x + t dir) by interpolation and fits u(x + t dir) - u(x) ~ s t
 * through the origin on the smallest half of t_list.
 */
inline RaySlope ray_slope(const ScalarField& u, std::size_t x, const Vector& dir, std::span<const double> t_list)
{
    if (t_list.empty())
        throw DomainError("ray_slope: empty t_list");
    for (std::size_t i = 0; i < t_list.size(); ++i) {
        if (!(t_list[i] > 0.0))
            throw DomainError("ray_slope: t values must be positive");
        if (i && !(t_list[i] < t_list[i - 1]))
            throw DomainError("ray_slope: t_list must be strictly decreasing");
    }
    const Vector x0 = u.coord(x);
    RaySlope out;
    for (double t : t_list) {
        const Vector y = x0 + t * dir;
        if (!u.contains_point(y))
            throw GridError("ray_slope: ray leaves the grid");
        out.raw.push_back(u.interpolate(y));
    }
    const std::size_t keep = (t_list.size() + 1) / 2;
    const std::size_t first = t_list.size() - keep;
    double num = 0.0, den = 0.0;
    for (std::size_t i = first; i < t_list.size(); ++i) {
        num += t_list[i] * (out.raw[i] - u[x]);
        den += t_list[i] * t_list[i];
    }
    out.slope = num / den;
    double ss = 0.0;
    for (std::size_t i = first; i < t_list.size(); ++i) {
        const double r = out.raw[i] - u[x] - out.slope * t_list[i];
        ss += r * r;
    }
    out.residual = std::sqrt(ss / double(keep));
    return out;
}

struct FBReport {
    std::size_t point = 0;
    JetSide side = JetSide::super; //!< super: subsolution test, sub: supersolution test
    Vector direction;              //!< ray direction actually sampled
    double Lambda = 0.0;
    double slope = 0.0;
    double tol_slope = 0.0;
    double regression_residual = 0.0;
    std::vector<double> t;
    std::vector<double> raw;
    bool pass = false;
};

/**
 * Free boundary condition along the jet direction e = xi/|xi|:
 *   super jet (subsolution):   u(x - t e) >= -Lambda t + o(t)  <=>  slope >= -Lambda - tol_slope
 *   sub jet (supersolution):   u(x + t e) <=  Lambda t + o(t)  <=>  slope <=  Lambda + tol_slope
 * tol_slope defaults to 10 h.
 */
inline FBReport check_fb_condition(const ScalarField& u, std::size_t x_fb, const DiscreteJet& jet, double Lambda,
                                   std::span<const double> t_list, std::optional<double> tol_slope = {})
{
    const double norm = jet.xi.norm();
    if (!(norm > 0.0))
        throw DomainError("check_fb_condition: xi must be nonzero");
    FBReport rep;
    rep.point = x_fb;
    rep.side = jet.side;
    rep.Lambda = Lambda;
    rep.tol_slope = tol_slope.value_or(10.0 * u.spacing());
    const Vector e = jet.xi / norm;
    rep.direction = jet.side == JetSide::super ? Vector(-e) : e;
    const auto fit = ray_slope(u, x_fb, rep.direction, t_list);
    rep.slope = fit.slope;
    rep.regression_residual = fit.residual;
    rep.raw = fit.raw;
    rep.t.assign(t_list.begin(), t_list.end());
    rep.pass = jet.side == JetSide::super ? rep.slope >= -Lambda - rep.tol_slope
                                          : rep.slope <= Lambda + rep.tol_slope;
    return rep;
}

enum class RaySide { plus, minus };

/**
 * One-sided derivative along nu: plus fits u(x + t nu) - u(x) ~ s t,
 * minus fits u(x) - u(x - t nu) ~ s t.  Both equal |grad u| for
 * differentiable u and nu = grad u / |grad u|.
 */
inline double normal_derivative(const ScalarField& u, std::size_t x_fb, const Vector& nu, RaySide side,
                                std::span<const double> t_list)
{
    if (nu.size() != u.dim() || !(std::abs(nu.norm() - 1.0) < 1e-9))
        throw DomainError("normal_derivative: nu must be a unit vector");
    if (side == RaySide::plus)
        return ray_slope(u, x_fb, nu, t_list).slope;
    return -ray_slope(u, x_fb, Vector(-nu), t_list).slope;
}

} // namespace infbound
