#pragma once

// Structured-text (JSON) reports: {config, ledger, results, checks}.
// Floating point numbers are written with 17 significant digits so that
// every value round-trips exactly; non-finite numbers become strings.

#include "barrier.hpp"
#include "doubling.hpp"
#include "grid.hpp"
#include "lipschitz.hpp"
#include "solver.hpp"
#include "viscosity.hpp"

#include <json.hpp>

#include <cmath>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace infbound {

using Json = nlohmann::ordered_json;

namespace detail {

inline void write_escaped(std::ostream& os, const std::string& s)
{
    // Reuse the library's escaping for strings only.
    os << nlohmann::json(s).dump();
}

inline void write_json(std::ostream& os, const Json& j, int indent, int depth)
{
    const std::string pad(std::size_t(indent * (depth + 1)), ' ');
    const std::string close_pad(std::size_t(indent * depth), ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            os << "{}";
            return;
        }
        os << "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first)
                os << ",\n";
            first = false;
            os << pad;
            write_escaped(os, it.key());
            os << ": ";
            write_json(os, it.value(), indent, depth + 1);
        }
        os << '\n' << close_pad << '}';
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            os << "[]";
            return;
        }
        os << "[\n";
        bool first = true;
        for (const auto& el : j) {
            if (!first)
                os << ",\n";
            first = false;
            os << pad;
            write_json(os, el, indent, depth + 1);
        }
        os << '\n' << close_pad << ']';
        return;
    }
    case Json::value_t::number_float: {
        const double v = j.get<double>();
        if (std::isfinite(v))
            os << format_g17(v);
        else
            write_escaped(os, std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf"));
        return;
    }
    default:
        os << j.dump();
        return;
    }
}

} // namespace detail

//! Deterministic pretty printer: key order as inserted, %.17g floats.
inline void write_report(std::ostream& os, const Json& j)
{
    detail::write_json(os, j, 2, 0);
    os << '\n';
}

inline std::string report_text(const Json& j)
{
    std::ostringstream os;
    write_report(os, j);
    return os.str();
}

inline Json check_entry(const std::string& name, bool pass, double lhs, double rhs)
{
    return Json{{"name", name}, {"pass", pass}, {"lhs", lhs}, {"rhs", rhs}, {"slack", rhs - lhs}};
}

inline Json to_json(const Vector& v)
{
    Json a = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i)
        a.push_back(v[i]);
    return a;
}

inline Json to_json(const Matrix& m)
{
    Json a = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            row.push_back(m(r, c));
        a.push_back(row);
    }
    return a;
}

inline Json to_json(const BarrierParams& p)
{
    return Json{{"kappa", p.kappa}, {"theta", p.theta}};
}

inline Json to_json(const BarrierCertificate& c)
{
    return Json{{"params", to_json(c.params)}, {"L", c.L},         {"a", c.a},
                {"b", c.b},                    {"K", c.K},         {"samples", c.samples},
                {"worst_margin", c.worst_margin}, {"worst_t", c.worst_t}, {"pass", c.pass}};
}

inline Json to_json(const ConstantLedger& l)
{
    return Json{{"Lambda", l.Lambda}, {"normFp", l.normFp}, {"normFm", l.normFm}, {"normU", l.normU},
                {"varrho", l.varrho}, {"a", l.a},           {"b", l.b},           {"d", l.d},
                {"K", l.K},           {"Lbar", l.Lbar},     {"L", l.L},           {"z0", to_json(l.z0)},
                {"L_forced", l.L_forced}};
}

inline Json to_json(const DoublingWitness& w)
{
    return Json{{"x_index", w.x_index},   {"y_index", w.y_index},   {"x0", to_json(w.x0)},
                {"y0", to_json(w.y0)},     {"rho", w.rho},           {"gap", w.gap},
                {"nu", to_json(w.nu)},     {"tau_w", w.tau_w},       {"interior_lhs", w.interior_lhs},
                {"interior_rhs", w.interior_rhs}, {"interior_ok", w.interior_ok}};
}

inline Json to_json(const FluxRecord& f)
{
    return Json{{"at", f.at_y ? "y0" : "x0"},
                {"xi", to_json(f.xi)},
                {"xi_norm", f.xi_norm},
                {"Lambda", f.Lambda},
                {"lower_bound", f.lower_bound},
                {"lambda_bound_holds", f.lambda_bound_holds},
                {"lower_bound_holds", f.lower_bound_holds}};
}

inline Json to_json(const CaseReport& c)
{
    Json j{{"phase_x", to_string(c.phase_x)},
           {"phase_y", to_string(c.phase_y)},
           {"tag", to_string(c.tag)},
           {"ordering_ok", c.ordering_ok},
           {"ledger_contradiction", c.ledger_contradiction}};
    j["flux"] = c.flux ? to_json(*c.flux) : Json(nullptr);
    return j;
}

inline Json to_json(const LemmaChainTrace& t)
{
    return Json{{"Dx_phi", to_json(t.Dx_phi)},
                {"Dy_phi", to_json(t.Dy_phi)},
                {"M_omega", to_json(t.M_omega)},
                {"M_x", to_json(t.M_x)},
                {"M_y", to_json(t.M_y)},
                {"defect_x", t.defect_x},
                {"defect_y", t.defect_y},
                {"iota", t.iota},
                {"iota_identity_error", t.iota_identity_error},
                {"comp4", t.comp4},
                {"comp4_closed", t.comp4_closed},
                {"grad_sq_sum", t.grad_sq_sum},
                {"grad_sq_bound", t.grad_sq_bound},
                {"lambda", t.lambda},
                {"epsilon", t.epsilon},
                {"matrix_rhs", t.matrix_rhs},
                {"lhs", t.lhs},
                {"rhs_bound", t.rhs_bound},
                {"tau_chain", t.tau_chain},
                {"slack", t.slack},
                {"pass", t.pass}};
}

inline Json to_json(const FBReport& r)
{
    Json t = Json::array(), raw = Json::array();
    for (double v : r.t)
        t.push_back(v);
    for (double v : r.raw)
        raw.push_back(v);
    return Json{{"point", r.point},
                {"side", r.side == JetSide::super ? "super" : "sub"},
                {"direction", to_json(r.direction)},
                {"Lambda", r.Lambda},
                {"slope", r.slope},
                {"tol_slope", r.tol_slope},
                {"regression_residual", r.regression_residual},
                {"t", t},
                {"raw", raw},
                {"pass", r.pass}};
}

inline Json to_json(const ConvergenceRow& r)
{
    return Json{{"m", r.m}, {"h", r.h}, {"sup_error", r.sup_error}, {"residual", r.residual},
                {"iterations", r.iterations}};
}

inline Json to_json(const CenterResult& c)
{
    Json j{{"z0", to_json(c.z0)}};
    j["witness"] = c.witness ? to_json(*c.witness) : Json(nullptr);
    j["case"] = c.case_report ? to_json(*c.case_report) : Json(nullptr);
    j["lemma_chain"] = c.chain ? to_json(*c.chain) : Json(nullptr);
    if (!c.chain_error.empty())
        j["lemma_chain_error"] = c.chain_error;
    return j;
}

inline Json to_json(const LipschitzReport& r, const ScalarField& u)
{
    Json centers = Json::array();
    for (const auto& c : r.centers)
        centers.push_back(to_json(c));
    return Json{{"sup_quotient", r.sup_quotient},
                {"arg_pair", Json::array({to_json(u.coord(r.arg_x)), to_json(u.coord(r.arg_y))})},
                {"per_phase", Json{{"pos", r.per_phase.pos}, {"neg", r.per_phase.neg}, {"cross", r.per_phase.cross}}},
                {"bound_value", r.bound_value},
                {"empirical_C", r.empirical_C},
                {"tau_w", r.tau_w},
                {"report_tol", r.report_tol},
                {"region_radius", r.region_radius},
                {"certificate", r.certificate ? to_json(*r.certificate) : Json(nullptr)},
                {"certificate_center", r.certificate ? Json(r.certificate_center) : Json(nullptr)},
                {"quotient_within_bound", r.quotient_within_bound},
                {"pass", r.pass},
                {"centers", centers}};
}

} // namespace infbound
