#pragma once

#include "errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace infbound {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/**
 * Function sampled on the uniform grid {-1 + i h}^n, h = 2/(m-1), n in {1, 2}.
 *
 * Storage is row-major with axis 0 (x1) running fastest:
 * flat = i0 + m * i1.
 */
class ScalarField {
public:
    ScalarField() = default;

    ScalarField(int n, int m, double fill = 0.0)
        : n_(n), m_(m)
    {
        if (n != 1 && n != 2)
            throw DomainError("ScalarField: dimension must be 1 or 2");
        if (m < 5 || m % 2 == 0)
            throw DomainError("ScalarField: points per axis must be odd and >= 5");
        h_ = 2.0 / static_cast<double>(m - 1);
        values_.assign(n == 1 ? std::size_t(m) : std::size_t(m) * std::size_t(m), fill);
    }

    template <typename F>
    static ScalarField sample(int n, int m, F&& f)
    {
        ScalarField field(n, m);
        for (std::size_t k = 0; k < field.size(); ++k)
            field.values_[k] = f(field.coord(k));
        field.require_finite();
        return field;
    }

    [[nodiscard]] int dim() const { return n_; }
    [[nodiscard]] int points_per_axis() const { return m_; }
    [[nodiscard]] double spacing() const { return h_; }
    [[nodiscard]] std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t k) { return values_[k]; }
    double operator[](std::size_t k) const { return values_[k]; }

    [[nodiscard]] std::span<const double> values() const { return values_; }
    [[nodiscard]] std::span<double> values() { return values_; }

    [[nodiscard]] std::array<int, 2> multi_index(std::size_t k) const
    {
        if (n_ == 1)
            return {static_cast<int>(k), 0};
        return {static_cast<int>(k % std::size_t(m_)), static_cast<int>(k / std::size_t(m_))};
    }

    [[nodiscard]] std::size_t flat(int i0, int i1 = 0) const
    {
        return std::size_t(i0) + std::size_t(m_) * std::size_t(i1);
    }

    [[nodiscard]] bool contains_index(int i0, int i1 = 0) const
    {
        return i0 >= 0 && i0 < m_ && (n_ == 1 ? i1 == 0 : (i1 >= 0 && i1 < m_));
    }

    [[nodiscard]] double axis_coord(int i) const { return -1.0 + h_ * static_cast<double>(i); }

    [[nodiscard]] double coord(std::size_t k, int axis) const
    {
        return axis_coord(multi_index(k)[std::size_t(axis)]);
    }

    [[nodiscard]] Vector coord(std::size_t k) const
    {
        Vector x(n_);
        const auto idx = multi_index(k);
        for (int a = 0; a < n_; ++a)
            x[a] = axis_coord(idx[std::size_t(a)]);
        return x;
    }

    //! Grid index nearest to x (no range check).
    [[nodiscard]] std::array<int, 2> nearest_index(const Vector& x) const
    {
        std::array<int, 2> idx{0, 0};
        for (int a = 0; a < n_; ++a)
            idx[std::size_t(a)] = static_cast<int>(std::lround((x[a] + 1.0) / h_));
        return idx;
    }

    //! Index lies on the outer frame of the square.
    [[nodiscard]] bool on_edge(std::size_t k) const
    {
        const auto idx = multi_index(k);
        for (int a = 0; a < n_; ++a)
            if (idx[std::size_t(a)] == 0 || idx[std::size_t(a)] == m_ - 1)
                return true;
        return false;
    }

    [[nodiscard]] bool contains_point(const Vector& x, double slack = 1e-12) const
    {
        for (int a = 0; a < n_; ++a)
            if (!(std::abs(x[a]) <= 1.0 + slack))
                return false;
        return true;
    }

    //! Sup norm over the whole grid.
    [[nodiscard]] double sup_norm() const
    {
        double s = 0.0;
        for (double v : values_)
            s = std::max(s, std::abs(v));
        return s;
    }

    //! (Bi)linear interpolation; throws GridError outside [-1,1]^n.
    [[nodiscard]] double interpolate(const Vector& x) const
    {
        if (!contains_point(x))
            throw GridError("ScalarField::interpolate: point outside the grid");
        std::array<int, 2> base{0, 0};
        std::array<double, 2> frac{0.0, 0.0};
        for (int a = 0; a < n_; ++a) {
            const double s = std::clamp((x[a] + 1.0) / h_, 0.0, double(m_ - 1));
            int i = static_cast<int>(std::floor(s));
            i = std::min(i, m_ - 2);
            base[std::size_t(a)] = i;
            frac[std::size_t(a)] = s - double(i);
        }
        if (n_ == 1)
            return (1.0 - frac[0]) * values_[flat(base[0])] + frac[0] * values_[flat(base[0] + 1)];
        const double v00 = values_[flat(base[0], base[1])];
        const double v10 = values_[flat(base[0] + 1, base[1])];
        const double v01 = values_[flat(base[0], base[1] + 1)];
        const double v11 = values_[flat(base[0] + 1, base[1] + 1)];
        return (1.0 - frac[1]) * ((1.0 - frac[0]) * v00 + frac[0] * v10)
             + frac[1] * ((1.0 - frac[0]) * v01 + frac[0] * v11);
    }

    void require_finite() const
    {
        for (double v : values_)
            if (!std::isfinite(v))
                throw DomainError("ScalarField: non-finite value");
    }

    [[nodiscard]] bool same_grid(const ScalarField& other) const
    {
        return n_ == other.n_ && m_ == other.m_;
    }

private:
    int n_ = 0;
    int m_ = 0;
    double h_ = 0.0;
    std::vector<double> values_;
};

//! Decimal text with 17 significant digits; round-trips every finite double.
inline std::string format_g17(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/**
 * Grid CSV: first line "m,h,n", then the m^n values in row-major order,
 * one grid row (m values, comma separated) per line.
 */
inline void write_grid_csv(std::ostream& os, const ScalarField& u)
{
    const int m = u.points_per_axis();
    os << m << ',' << format_g17(u.spacing()) << ',' << u.dim() << '\n';
    const std::size_t rows = u.dim() == 1 ? 1 : std::size_t(m);
    for (std::size_t r = 0; r < rows; ++r) {
        for (int c = 0; c < m; ++c) {
            if (c)
                os << ',';
            os << format_g17(u[r * std::size_t(m) + std::size_t(c)]);
        }
        os << '\n';
    }
}

inline ScalarField read_grid_csv(std::istream& is)
{
    std::string header;
    if (!std::getline(is, header))
        throw FormatError("grid csv: missing header");
    for (char& c : header)
        if (c == ',')
            c = ' ';
    std::istringstream hs(header);
    int m = 0, n = 0;
    double h = 0.0;
    if (!(hs >> m >> h >> n))
        throw FormatError("grid csv: header must be \"m,h,n\"");
    ScalarField u(n, m);
    if (std::abs(h - u.spacing()) > 1e-12 * u.spacing())
        throw FormatError("grid csv: spacing does not match 2/(m-1)");

    std::size_t k = 0;
    std::string line;
    while (std::getline(is, line)) {
        std::size_t pos = 0;
        while (pos < line.size()) {
            std::size_t end = line.find(',', pos);
            if (end == std::string::npos)
                end = line.size();
            std::string tok = line.substr(pos, end - pos);
            tok.erase(0, tok.find_first_not_of(" \t\r"));
            tok.erase(tok.find_last_not_of(" \t\r") + 1);
            if (!tok.empty()) {
                if (k >= u.size())
                    throw FormatError("grid csv: too many values");
                std::size_t used = 0;
                try {
                    u[k] = std::stod(tok, &used);
                } catch (const std::exception&) {
                    throw FormatError("grid csv: bad number '" + tok + "'");
                }
                if (used != tok.size())
                    throw FormatError("grid csv: bad number '" + tok + "'");
                ++k;
            }
            pos = end + 1;
        }
    }
    if (k != u.size())
        throw FormatError("grid csv: expected " + std::to_string(u.size()) + " values, got "
                          + std::to_string(k));
    u.require_finite();
    return u;
}

} // namespace infbound
