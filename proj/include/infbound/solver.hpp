#pragma once

// Monotone midpoint scheme for -Delta_inf u = f+ chi{u>0} + f- chi{u<0}
// on [-1,1]^n (n = 1, 2), damped Gauss-Seidel on the current sign pattern.

#include "errors.hpp"
#include "grid.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace infbound {

enum class DomainShape {
    ball,  //!< inscribed unit ball; everything outside holds Dirichlet data
    square //!< every non-frame grid point is an unknown
};

struct ProblemSpec {
    ScalarField fplus;
    ScalarField fminus;
    double Lambda = 1.0;
    ScalarField dirichlet; //!< values at non-active cells; interior entries ignored
    double zero_set_forcing = 0.0;
    DomainShape domain = DomainShape::ball;

    void validate() const
    {
        if (!fplus.same_grid(fminus) || !fplus.same_grid(dirichlet))
            throw DomainError("ProblemSpec: fields live on different grids");
        fplus.require_finite();
        fminus.require_finite();
        dirichlet.require_finite();
        if (!(std::isfinite(Lambda) && Lambda > 0.0))
            throw DomainError("ProblemSpec: Lambda must be positive");
        if (!std::isfinite(zero_set_forcing))
            throw DomainError("ProblemSpec: zero_set_forcing must be finite");
    }

    //! Forcing selected by the sign of the current value.
    [[nodiscard]] double forcing(std::size_t k, double value) const
    {
        if (value > 0.0)
            return fplus[k];
        if (value < 0.0)
            return fminus[k];
        return zero_set_forcing;
    }

    //! Cell is an unknown of the discrete problem.
    [[nodiscard]] bool active(std::size_t k) const
    {
        if (dirichlet.on_edge(k))
            return false;
        if (domain == DomainShape::square)
            return true;
        return dirichlet.coord(k).squaredNorm() < 1.0 - 1e-12;
    }
};

namespace detail {

//! One representative of each antipodal pair of nearest and diagonal neighbours.
inline const std::vector<std::array<int, 2>>& half_directions(int n)
{
    static const std::vector<std::array<int, 2>> one{{1, 0}};
    static const std::vector<std::array<int, 2>> two{{1, 0}, {0, 1}, {1, 1}, {-1, 1}};
    return n == 1 ? one : two;
}

inline constexpr int max_stencil_width = 8;

struct RingNode {
    int a;
    int b;
    double weight;
};

//! Bilinear interpolation nodes of one point on the ring of radius `width` cells.
struct RingPoint {
    std::array<RingNode, 4> nodes{};
    int count = 0;
};

//! 8 * width equally spaced angles; point j + 4 * width is antipodal to point j.
inline std::vector<RingPoint> build_ring(int width)
{
    const int count = 8 * width;
    std::vector<RingPoint> ring(static_cast<std::size_t>(count));
    for (int j = 0; j < count; ++j) {
        const double angle = 2.0 * std::numbers::pi * j / count;
        double x = width * std::cos(angle), y = width * std::sin(angle);
        if (std::abs(x - std::round(x)) < 1e-12)
            x = std::round(x);
        if (std::abs(y - std::round(y)) < 1e-12)
            y = std::round(y);
        const double a0 = std::floor(x), b0 = std::floor(y);
        const double fx = x - a0, fy = y - b0;
        auto& p = ring[std::size_t(j)];
        const auto add = [&p](int a, int b, double w) {
            if (w > 0.0)
                p.nodes[std::size_t(p.count++)] = {a, b, w};
        };
        add(int(a0), int(b0), (1.0 - fx) * (1.0 - fy));
        add(int(a0) + 1, int(b0), fx * (1.0 - fy));
        add(int(a0), int(b0) + 1, (1.0 - fx) * fy);
        add(int(a0) + 1, int(b0) + 1, fx * fy);
    }
    return ring;
}

inline const std::vector<RingPoint>& ring_points(int width)
{
    static const auto table = [] {
        std::array<std::vector<RingPoint>, max_stencil_width + 1> t;
        for (int w = 2; w <= max_stencil_width; ++w)
            t[std::size_t(w)] = build_ring(w);
        return t;
    }();
    return table[std::size_t(width)];
}

struct RingExtremes {
    double max;
    double min;
    double radius; //!< in grid cells
};

/**
 * Max and min of u over a ring around index k. Width 1 uses the eight
 * neighbours, the diagonal ones pulled back to radius h along their ray.
 * Wider rings have radius width * h and are sampled by bilinear
 * interpolation, which keeps the weights nonnegative. The radius shrinks
 * near the frame so the ring always fits. In 1D the ring is {x - h, x + h}.
 */
inline RingExtremes ring_extremes(const ScalarField& u, std::size_t k, int width)
{
    if (width < 1 || width > max_stencil_width)
        throw DomainError("stencil width must lie in [1, 8]");
    const auto idx = u.multi_index(k);
    const int last = u.points_per_axis() - 1;
    int fit = std::min(idx[0], last - idx[0]);
    if (u.dim() == 2)
        fit = std::min({fit, idx[1], last - idx[1]});
    if (fit < 1)
        throw GridError("ring stencil does not fit at this index");
    const int w = u.dim() == 1 ? 1 : std::min(width, fit);

    double hi = -std::numeric_limits<double>::infinity();
    double lo = std::numeric_limits<double>::infinity();
    if (w == 1) {
        const double uc = u[k];
        for (const auto& d : half_directions(u.dim())) {
            const double inv = (d[0] != 0 && d[1] != 0) ? 1.0 / std::numbers::sqrt2 : 1.0;
            const double vp = uc + (u[u.flat(idx[0] + d[0], idx[1] + d[1])] - uc) * inv;
            const double vq = uc + (u[u.flat(idx[0] - d[0], idx[1] - d[1])] - uc) * inv;
            hi = std::max({hi, vp, vq});
            lo = std::min({lo, vp, vq});
        }
        return {hi, lo, 1.0};
    }
    for (const auto& p : ring_points(w)) {
        double v = 0.0;
        for (int i = 0; i < p.count; ++i) {
            const auto& node = p.nodes[std::size_t(i)];
            v += node.weight * u[u.flat(idx[0] + node.a, idx[1] + node.b)];
        }
        hi = std::max(hi, v);
        lo = std::min(lo, v);
    }
    return {hi, lo, double(w)};
}

inline double gradient_norm_sq(const ScalarField& u, std::size_t k)
{
    const auto idx = u.multi_index(k);
    const double h = u.spacing();
    double s = 0.0;
    for (int a = 0; a < u.dim(); ++a) {
        std::array<int, 2> p = idx, q = idx;
        p[std::size_t(a)] += 1;
        q[std::size_t(a)] -= 1;
        const double g = (u[u.flat(p[0], p[1])] - u[u.flat(q[0], q[1])]) / (2.0 * h);
        s += g * g;
    }
    return s;
}

} // namespace detail

/**
 * Discrete non-normalized infinity Laplacian at an interior index:
 * max(|grad_h u|, guard)^2 (max_S u + min_S u - 2u) / r^2, r the ring radius.
 */
inline double discrete_inflap(const ScalarField& u, std::size_t idx, double gradient_guard,
                              int stencil_width = 1)
{
    if (idx >= u.size() || u.on_edge(idx))
        throw GridError("discrete_inflap: index has no full stencil");
    const auto ext = detail::ring_extremes(u, idx, stencil_width);
    const double r = ext.radius * u.spacing();
    const double g = std::max(std::sqrt(detail::gradient_norm_sq(u, idx)), gradient_guard);
    return g * g * (ext.max + ext.min - 2.0 * u[idx]) / (r * r);
}

/**
 * Ring stencil width growing like sqrt(m): a fixed set of directions
 * leaves an O(1) consistency error for gradients between stencil rays.
 */
inline int automatic_stencil_width(int m)
{
    const int w = static_cast<int>(std::lround(std::sqrt(double(m - 1) / 4.0)));
    return std::clamp(w, 1, detail::max_stencil_width);
}

enum class SweepOrder {
    lexicographic, //!< in-place Gauss-Seidel, increasing flat index
    two_color      //!< per color: every update read from the snapshot taken at the phase start
};

struct SolverConfig {
    int max_iters = 400000;
    double tol = 1e-10;            //!< sup-norm of one sweep's update
    double damping = 0.8;
    std::optional<double> guard;   //!< floor on the squared gradient in the update; defaults to h
    int stencil_width = 0;         //!< 0 = automatic_stencil_width(m)
    SweepOrder order = SweepOrder::lexicographic;
    int workers = 0;               //!< two_color only; 0 = environment default

    void validate() const
    {
        if (max_iters < 1)
            throw DomainError("SolverConfig: max_iters must be >= 1");
        if (!(tol > 0.0))
            throw DomainError("SolverConfig: tol must be positive");
        if (!(damping > 0.0 && damping <= 1.0))
            throw DomainError("SolverConfig: damping must lie in (0, 1]");
        if (guard && !(*guard > 0.0))
            throw DomainError("SolverConfig: guard must be positive");
        if (stencil_width < 0 || stencil_width > detail::max_stencil_width)
            throw DomainError("SolverConfig: stencil_width must lie in [0, 8]");
    }
};

struct SolveResult {
    ScalarField u;
    int iterations = 0;
    double residual = 0.0;
};

class NonConvergenceError : public Error {
public:
    NonConvergenceError(ScalarField last, int iterations, double residual)
        : Error("solve: no convergence after " + std::to_string(iterations) + " sweeps"),
          last_(std::move(last)), iterations_(iterations), residual_(residual)
    {
    }
    [[nodiscard]] const ScalarField& last_iterate() const { return last_; }
    [[nodiscard]] int iterations() const { return iterations_; }
    [[nodiscard]] double residual() const { return residual_; }

private:
    ScalarField last_;
    int iterations_;
    double residual_;
};

namespace detail {

struct PhaseTarget {
    double value;
    bool free_boundary; //!< neither phase has a target of its own sign
};

/**
 * Undamped target at one cell. The phase is the one whose target has its own
 * sign; if both qualify the current sign decides, and if neither does the
 * cell sits on the free boundary at zero.
 */
inline PhaseTarget phase_target(const ScalarField& u, const ProblemSpec& problem, std::size_t k,
                                double guard, int width)
{
    const auto ext = ring_extremes(u, k, width);
    const double r = ext.radius * u.spacing();
    const double g2 = std::max(gradient_norm_sq(u, k), guard);
    const double base = 0.5 * (ext.max + ext.min);
    const double scale = 0.5 * r * r / g2;
    const double up = base + scale * problem.fplus[k];
    const double down = base + scale * problem.fminus[k];
    if (up > 0.0 && down < 0.0)
        return {(u[k] > 0.0 || (u[k] == 0.0 && base >= 0.0)) ? up : down, false};
    if (up > 0.0)
        return {up, false};
    if (down < 0.0)
        return {down, false};
    return {0.0, true};
}

} // namespace detail

//! Damped fixed-point map at one cell, evaluated on `u`.
inline double scheme_update(const ScalarField& u, const ProblemSpec& problem, std::size_t k,
                            double guard, double damping, int width)
{
    const double target = detail::phase_target(u, problem, k, guard, width).value;
    return (1.0 - damping) * u[k] + damping * target;
}

//! Sup over active cells accepted by `include` of |discrete_inflap(u) + f(x, sign u)|.
inline double residual_sup(const ScalarField& u, const ProblemSpec& problem, int width = 1,
                           const std::function<bool(std::size_t)>& include = {})
{
    double r = 0.0;
    for (std::size_t k = 0; k < u.size(); ++k) {
        if (!problem.active(k) || (include && !include(k)))
            continue;
        r = std::max(r, std::abs(discrete_inflap(u, k, 0.0, width) + problem.forcing(k, u[k])));
    }
    return r;
}

inline std::vector<std::size_t> active_cells(const ProblemSpec& problem)
{
    std::vector<std::size_t> cells;
    for (std::size_t k = 0; k < problem.dirichlet.size(); ++k)
        if (problem.active(k))
            cells.push_back(k);
    return cells;
}

inline SolveResult solve(const ProblemSpec& problem, ScalarField initial, const SolverConfig& config)
{
    problem.validate();
    config.validate();
    if (!initial.same_grid(problem.dirichlet))
        throw DomainError("solve: initial field is on a different grid");
    initial.require_finite();

    ScalarField u = std::move(initial);
    const auto cells = active_cells(problem);
    for (std::size_t k = 0; k < u.size(); ++k)
        if (!problem.active(k))
            u[k] = problem.dirichlet[k];

    const double guard = config.guard.value_or(u.spacing());
    const int width = config.stencil_width > 0 ? config.stencil_width
                                               : automatic_stencil_width(u.points_per_axis());

    std::array<std::vector<std::size_t>, 2> colors;
    for (std::size_t k : cells) {
        const auto idx = u.multi_index(k);
        colors[std::size_t((idx[0] + idx[1]) % 2)].push_back(k);
    }
    const int workers = config.workers > 0 ? config.workers : default_worker_count();
    std::vector<double> scratch;

    for (int it = 1; it <= config.max_iters; ++it) {
        double change = 0.0;
        if (config.order == SweepOrder::lexicographic) {
            for (std::size_t k : cells) {
                const double next = scheme_update(u, problem, k, guard, config.damping, width);
                change = std::max(change, std::abs(next - u[k]));
                u[k] = next;
            }
        } else {
            for (const auto& color : colors) {
                scratch.assign(color.size(), 0.0);
                const ScalarField& snapshot = u;
                parallel_for(color.size(), workers, [&](std::size_t i) {
                    scratch[i] = scheme_update(snapshot, problem, color[i], guard, config.damping, width);
                });
                for (std::size_t i = 0; i < color.size(); ++i) {
                    change = std::max(change, std::abs(scratch[i] - u[color[i]]));
                    u[color[i]] = scratch[i];
                }
            }
        }
        if (!std::isfinite(change))
            throw NonConvergenceError(u, it, std::numeric_limits<double>::infinity());
        if (change < config.tol) {
            // Cells converging geometrically to the free boundary are put on it.
            for (std::size_t k : cells)
                if (detail::phase_target(u, problem, k, guard, width).free_boundary)
                    u[k] = 0.0;
            const double res = residual_sup(u, problem, width);
            return {std::move(u), it, res};
        }
    }
    const double res = residual_sup(u, problem, width);
    throw NonConvergenceError(std::move(u), config.max_iters, res);
}

struct ManufacturedProblem {
    ScalarField exact;
    ProblemSpec problem;
};

//! sgn(x1) (1/4) [ (3|x1| + C)^(4/3) - C^(4/3) ]; one-sided slopes at x1 = 0 are C^(1/3).
inline double prandtl_profile(double x1, double C)
{
    const double mag = 0.25 * (std::pow(3.0 * std::abs(x1) + C, 4.0 / 3.0) - std::pow(C, 4.0 / 3.0));
    return x1 > 0.0 ? mag : (x1 < 0.0 ? -mag : 0.0);
}

inline double prandtl_slope(double x1, double C)
{
    return std::cbrt(3.0 * std::abs(x1) + C);
}

//! Margin added to the interface slope C^(1/3) to get Lambda.
inline constexpr double manufactured_flux_margin = 0.1;

/**
 * Two-phase profile with f+ = -1, f- = +1 and Lambda = C^(1/3) + 0.1.
 * Exact zeros on the column x1 = 0.
 */
inline ManufacturedProblem manufactured_solution(double C, int n, int m)
{
    if (!(std::isfinite(C) && C > 0.0))
        throw DomainError("manufactured_solution: C must be positive");
    auto exact = ScalarField::sample(n, m, [C](const Vector& x) { return prandtl_profile(x[0], C); });
    ProblemSpec problem{
        ScalarField(n, m, -1.0),
        ScalarField(n, m, 1.0),
        std::cbrt(C) + manufactured_flux_margin,
        exact,
        0.0,
        DomainShape::ball,
    };
    return {std::move(exact), std::move(problem)};
}

//! Cone slope |x - vertex| with f == 0; infinity-harmonic away from the vertex.
inline ManufacturedProblem cone_problem(int n, int m, double slope, const Vector& vertex)
{
    if (vertex.size() != n)
        throw DomainError("cone_problem: vertex dimension mismatch");
    auto exact = ScalarField::sample(n, m, [&](const Vector& x) { return slope * (x - vertex).norm(); });
    ProblemSpec problem{
        ScalarField(n, m, 0.0),
        ScalarField(n, m, 0.0),
        std::max(slope, 1.0),
        exact,
        0.0,
        DomainShape::ball,
    };
    return {std::move(exact), std::move(problem)};
}

//! Interior cells zero, Dirichlet data elsewhere.
inline ScalarField default_initial(const ProblemSpec& problem)
{
    ScalarField u = problem.dirichlet;
    for (std::size_t k = 0; k < u.size(); ++k)
        if (problem.active(k))
            u[k] = 0.0;
    return u;
}

//! Sup of |a - b| over grid points with |x| <= radius.
inline double sup_error_in_ball(const ScalarField& a, const ScalarField& b, double radius)
{
    double e = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k)
        if (a.coord(k).norm() <= radius + 1e-12)
            e = std::max(e, std::abs(a[k] - b[k]));
    return e;
}

struct ConvergenceRow {
    int m = 0;
    double h = 0.0;
    double sup_error = 0.0; //!< over B_{1/2}
    double residual = 0.0;
    int iterations = 0;
};

using ProblemFamily = std::function<ManufacturedProblem(int m)>;

inline std::vector<ConvergenceRow> convergence_study(const ProblemFamily& family,
                                                     const std::vector<int>& m_list,
                                                     const SolverConfig& config)
{
    if (m_list.empty())
        throw DomainError("convergence_study: empty resolution list");
    for (std::size_t i = 1; i < m_list.size(); ++i)
        if (m_list[i] <= m_list[i - 1])
            throw DomainError("convergence_study: resolutions must increase");
    std::vector<ConvergenceRow> rows;
    for (int m : m_list) {
        auto mp = family(m);
        auto result = solve(mp.problem, default_initial(mp.problem), config);
        rows.push_back({m, result.u.spacing(), sup_error_in_ball(result.u, mp.exact, 0.5),
                        result.residual, result.iterations});
    }
    return rows;
}

} // namespace infbound
