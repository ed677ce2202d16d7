#include "infbound/grid.hpp"
#include "infbound/parallel.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

using namespace infbound;

TEST(ScalarField, Layout)
{
    ScalarField u(2, 5);
    EXPECT_EQ(u.size(), 25u);
    EXPECT_DOUBLE_EQ(u.spacing(), 0.5);
    EXPECT_EQ(u.flat(3, 1), 8u);
    EXPECT_EQ(u.multi_index(8)[0], 3);
    EXPECT_EQ(u.multi_index(8)[1], 1);
    const Vector x = u.coord(8);
    EXPECT_DOUBLE_EQ(x[0], 0.5);
    EXPECT_DOUBLE_EQ(x[1], -0.5);
    EXPECT_TRUE(u.on_edge(0));
    EXPECT_FALSE(u.on_edge(u.flat(2, 2)));
}

TEST(ScalarField, RejectsBadShapes)
{
    EXPECT_THROW(ScalarField(3, 5), DomainError);
    EXPECT_THROW(ScalarField(2, 4), DomainError);
    EXPECT_THROW(ScalarField(1, 3), DomainError);
    EXPECT_THROW(ScalarField::sample(1, 5, [](const Vector&) { return std::nan(""); }), DomainError);
}

TEST(ScalarField, InterpolationReproducesBilinear)
{
    auto f = [](const Vector& x) { return 1.0 + 2.0 * x[0] - 3.0 * x[1] + 0.5 * x[0] * x[1]; };
    const auto u = ScalarField::sample(2, 9, f);
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        Vector x(2);
        x << U(rng), U(rng);
        // Bilinear data is reproduced exactly by bilinear interpolation on each cell.
        EXPECT_NEAR(u.interpolate(x), f(x), 1e-13);
    }
    Vector out(2);
    out << 1.5, 0.0;
    EXPECT_THROW((void)u.interpolate(out), GridError);
}

TEST(GridCsv, RoundTripIsBitExact)
{
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-1e6, 1e6);
    for (int n : {1, 2}) {
        for (int m : {5, 9, 17}) {
            ScalarField u(n, m);
            for (std::size_t k = 0; k < u.size(); ++k)
                u[k] = U(rng) * std::pow(10.0, double(int(k % 40) - 20));
            std::stringstream ss;
            write_grid_csv(ss, u);
            const auto v = read_grid_csv(ss);
            ASSERT_TRUE(v.same_grid(u));
            for (std::size_t k = 0; k < u.size(); ++k)
                ASSERT_EQ(v[k], u[k]);
        }
    }
}

TEST(GridCsv, HeaderAndRows)
{
    const ScalarField u(2, 5, 0.25);
    std::stringstream ss;
    write_grid_csv(ss, u);
    std::string line;
    std::getline(ss, line);
    EXPECT_EQ(line, "5,0.5,2");
    int rows = 0;
    while (std::getline(ss, line)) {
        EXPECT_EQ(line, "0.25,0.25,0.25,0.25,0.25");
        ++rows;
    }
    EXPECT_EQ(rows, 5);
}

TEST(GridCsv, RejectsMalformedInput)
{
    auto parse = [](const std::string& s) {
        std::istringstream is(s);
        return read_grid_csv(is);
    };
    EXPECT_THROW(parse(""), FormatError);
    EXPECT_THROW(parse("5,0.5\n"), FormatError);
    EXPECT_THROW(parse("5,0.25,1\n0,0,0,0,0\n"), FormatError);
    EXPECT_THROW(parse("5,0.5,1\n0,0,0,0\n"), FormatError);
    EXPECT_THROW(parse("5,0.5,1\n0,0,0,0,0,0\n"), FormatError);
    EXPECT_THROW(parse("5,0.5,1\n0,0,x,0,0\n"), FormatError);
    EXPECT_THROW(parse("4,0.5,1\n0,0,0,0\n"), DomainError);
    EXPECT_NO_THROW(parse("5,0.5,1\n0,0,0,0,0\n"));
}

TEST(ParallelFor, VisitsEveryIndexOnce)
{
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits)
        EXPECT_EQ(h.load(), 1);
}

TEST(ParallelFor, PropagatesExceptions)
{
    EXPECT_THROW(parallel_for(100, 3, [](std::size_t i) {
                     if (i == 57)
                         throw std::runtime_error("boom");
                 }),
                 std::runtime_error);
}
