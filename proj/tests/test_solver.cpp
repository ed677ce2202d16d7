#include "infbound/solver.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace infbound;

namespace {

Vector vec2(double a, double b)
{
    Vector v(2);
    v << a, b;
    return v;
}

std::size_t index_of(const ScalarField& u, const Vector& x)
{
    const auto idx = u.nearest_index(x);
    return u.flat(idx[0], idx[1]);
}

ProblemSpec harmonic_problem(const ScalarField& boundary)
{
    const int n = boundary.dim(), m = boundary.points_per_axis();
    return {ScalarField(n, m), ScalarField(n, m), 1.0, boundary, 0.0, DomainShape::square};
}

} // namespace

TEST(DiscreteInflap, ConeAwayFromVertexVanishes)
{
    double previous = 1e300;
    for (int m : {17, 33, 65}) {
        const auto u = ScalarField::sample(2, m, [](const Vector& x) { return 3.0 * (x - vec2(2.0, 0.7)).norm(); });
        const int w = automatic_stencil_width(m);
        const double v = std::abs(discrete_inflap(u, index_of(u, vec2(0.0, 0.0)), 0.0, w));
        EXPECT_LT(v, previous) << m;
        previous = v;
    }
    EXPECT_LT(previous, 0.5);
}

TEST(DiscreteInflap, OneDimensionalProfileTendsToOne)
{
    // (u')^2 u'' = 1 for u = (3t+1)^(4/3)/4.
    double previous = 1e300;
    for (int m : {17, 33, 65, 129}) {
        const auto u = ScalarField::sample(1, m, [](const Vector& x) { return 0.25 * std::pow(std::cbrt(3.0 * x[0] + 1.0), 4); });
        const double err = std::abs(discrete_inflap(u, index_of(u, Vector::Constant(1, 0.5)), 0.0) - 1.0);
        EXPECT_LT(err, previous);
        EXPECT_LT(err, 2.0 * u.spacing() * u.spacing());
        previous = err;
    }
}

TEST(DiscreteInflap, QuadraticWithAxisGradient)
{
    // 1/2 <Qx,x> + <p,x> at the origin: <Qp,p> = 2 for p = e1, Q = [[2, .5], [.5, -1]].
    for (int m : {33, 65}) {
        const auto u = ScalarField::sample(2, m, [](const Vector& x) {
            return x[0] * x[0] + 0.5 * x[0] * x[1] - 0.5 * x[1] * x[1] + x[0];
        });
        const double h = u.spacing();
        const double v = discrete_inflap(u, index_of(u, vec2(0.0, 0.0)), 0.0, automatic_stencil_width(m));
        EXPECT_NEAR(v, 2.0, 20.0 * h) << m;
    }
}

TEST(DiscreteInflap, EdgeIndexRejected)
{
    const ScalarField u(2, 9);
    EXPECT_THROW(discrete_inflap(u, 0, 0.0), GridError);
}

TEST(Solve, ZeroDataIsAFixedPoint)
{
    const ScalarField zero(2, 17);
    const ProblemSpec p{zero, zero, 1.0, zero, 0.0, DomainShape::ball};
    const auto r = solve(p, zero, {});
    EXPECT_EQ(r.iterations, 1);
    EXPECT_EQ(r.u.sup_norm(), 0.0);
    EXPECT_EQ(r.residual, 0.0);
}

TEST(Solve, ConeWithExteriorVertex)
{
    const auto cp = cone_problem(2, 17, 1.0, vec2(1.3, 0.7));
    const auto r = solve(cp.problem, default_initial(cp.problem), {});
    EXPECT_LT(sup_error_in_ball(r.u, cp.exact, 0.5), 0.03);
}

TEST(Solve, OneDimensionalPrandtlErrorIsFirstOrder)
{
    for (int m : {17, 33, 65}) {
        const auto mp = manufactured_solution(1.0, 1, m);
        const auto r = solve(mp.problem, default_initial(mp.problem), {});
        const double err = sup_error_in_ball(r.u, mp.exact, 1.0);
        EXPECT_LT(err, r.u.spacing()) << m;
    }
}

TEST(Solve, TwoColorScheduleIsWorkerIndependent)
{
    const auto mp = manufactured_solution(1.0, 2, 17);
    SolverConfig cfg;
    cfg.order = SweepOrder::two_color;
    cfg.workers = 1;
    const auto serial = solve(mp.problem, default_initial(mp.problem), cfg);
    cfg.workers = 4;
    const auto parallel = solve(mp.problem, default_initial(mp.problem), cfg);
    ASSERT_EQ(serial.iterations, parallel.iterations);
    for (std::size_t k = 0; k < serial.u.size(); ++k)
        ASSERT_EQ(serial.u[k], parallel.u[k]);
}

TEST(Solve, NonConvergenceCarriesLastIterate)
{
    const auto cp = cone_problem(2, 17, 1.0, vec2(1.3, 0.7));
    SolverConfig cfg;
    cfg.max_iters = 3;
    try {
        (void)solve(cp.problem, default_initial(cp.problem), cfg);
        FAIL() << "expected NonConvergenceError";
    } catch (const NonConvergenceError& e) {
        EXPECT_EQ(e.iterations(), 3);
        EXPECT_TRUE(e.last_iterate().same_grid(cp.exact));
    }
}

TEST(Solve, RejectsBadConfig)
{
    const auto cp = cone_problem(2, 9, 1.0, vec2(1.3, 0.7));
    SolverConfig cfg;
    cfg.damping = 0.0;
    EXPECT_THROW((void)solve(cp.problem, default_initial(cp.problem), cfg), DomainError);
    cfg = {};
    cfg.stencil_width = 9;
    EXPECT_THROW((void)solve(cp.problem, default_initial(cp.problem), cfg), DomainError);
}

TEST(SchemeUpdate, MonotoneInNeighbours)
{
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        ScalarField u(2, 9);
        for (std::size_t k = 0; k < u.size(); ++k)
            u[k] = U(rng);
        // Zero forcing, and a forcing whose gradient factor is frozen by a dominant guard.
        for (double f : {0.0, -1.0, 1.0}) {
            const ProblemSpec p{ScalarField(2, 9, f), ScalarField(2, 9, f), 1.0, u, 0.0, DomainShape::square};
            const double guard = f == 0.0 ? 9.0 : 1e6;
            const std::size_t k = u.flat(4, 4);
            const double before = scheme_update(u, p, k, guard, 0.8, 2);
            ScalarField v = u;
            const std::size_t nb = v.flat(4 + int(trial % 5) - 2, 4 + int(trial / 5 % 5) - 2);
            if (nb == k)
                continue;
            v[nb] += std::abs(U(rng));
            ASSERT_GE(scheme_update(v, p, k, guard, 0.8, 2), before);
        }
    }
}

TEST(Solve, ComparisonOfHarmonicFixedPoints)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int trial = 0; trial < 10; ++trial) {
        ScalarField lo(2, 9), hi(2, 9);
        for (std::size_t k = 0; k < lo.size(); ++k) {
            lo[k] = U(rng);
            hi[k] = lo[k] + std::abs(U(rng));
        }
        SolverConfig cfg;
        cfg.stencil_width = 1;
        cfg.tol = 1e-13;
        const auto a = solve(harmonic_problem(lo), lo, cfg);
        const auto b = solve(harmonic_problem(hi), hi, cfg);
        for (std::size_t k = 0; k < lo.size(); ++k)
            ASSERT_LE(a.u[k], b.u[k] + 1e-10);
    }
}

TEST(Solve, MaximumPrincipleWithoutForcing)
{
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    ScalarField g(2, 11);
    double bmax = -1e300, bmin = 1e300;
    for (std::size_t k = 0; k < g.size(); ++k) {
        g[k] = U(rng);
        if (g.on_edge(k)) {
            bmax = std::max(bmax, g[k]);
            bmin = std::min(bmin, g[k]);
        }
    }
    const auto r = solve(harmonic_problem(g), g, {});
    for (std::size_t k = 0; k < g.size(); ++k) {
        EXPECT_LE(r.u[k], bmax + 1e-12);
        EXPECT_GE(r.u[k], bmin - 1e-12);
    }
}

TEST(Manufactured, ProfileValues)
{
    // mpmath: (4^(4/3) - 1)/4 = 1.3374010519681994747...
    EXPECT_NEAR(prandtl_profile(1.0, 1.0), 1.3374010519681994747, 1e-15);
    EXPECT_DOUBLE_EQ(prandtl_slope(0.0, 1.0), 1.0);
    EXPECT_DOUBLE_EQ(prandtl_slope(0.0, 8.0), 2.0);
    const double s = prandtl_slope(0.5, 1.0);
    const double upp = std::pow(2.5, -2.0 / 3.0);
    EXPECT_NEAR(s * s * upp, 1.0, 1e-15);

    const auto mp = manufactured_solution(1.0, 2, 17);
    EXPECT_NEAR(mp.problem.Lambda, 1.1, 1e-15);
    for (std::size_t k = 0; k < mp.exact.size(); ++k) {
        const auto idx = mp.exact.multi_index(k);
        EXPECT_EQ(mp.exact[k], -mp.exact[mp.exact.flat(16 - idx[0], idx[1])]);
    }
    EXPECT_THROW(manufactured_solution(0.0, 2, 17), DomainError);
}

TEST(Manufactured, ResidualShrinksAwayFromInterface)
{
    double previous = 1e300;
    for (int m : {17, 33, 65}) {
        const auto mp = manufactured_solution(1.0, 2, m);
        const double h = mp.exact.spacing();
        const double r = residual_sup(mp.exact, mp.problem, 1,
                                      [&](std::size_t k) { return std::abs(mp.exact.coord(k, 0)) > 2.0 * h; });
        EXPECT_LT(r, previous);
        previous = r;
    }
}

TEST(ConvergenceStudy, TableShape)
{
    const auto family = [](int m) { return cone_problem(2, m, 1.0, Vector::Constant(2, 1.0)); };
    const auto rows = convergence_study(family, {9}, {});
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].m, 9);
    EXPECT_DOUBLE_EQ(rows[0].h, 0.25);
    EXPECT_THROW(convergence_study(family, {}, {}), DomainError);
    EXPECT_THROW(convergence_study(family, {17, 9}, {}), DomainError);
}

TEST(StencilWidth, GrowsWithResolution)
{
    EXPECT_EQ(automatic_stencil_width(5), 1);
    EXPECT_EQ(automatic_stencil_width(17), 2);
    EXPECT_EQ(automatic_stencil_width(33), 3);
    EXPECT_EQ(automatic_stencil_width(65), 4);
    EXPECT_EQ(automatic_stencil_width(100001), 8);
}
