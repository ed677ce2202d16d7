// Command-line front end: solve, barrier, certify, lipschitz, viscosity, convergence.
//
// Every run writes one JSON report {config, ledger, results, checks}.
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or configuration
// error, 3 solver non-convergence.

#include "infbound/infbound.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace infbound;

namespace {

struct RunConfig {
    std::string command;
    std::string profile = "prandtl";
    std::string field = "exact";
    std::string centers = "coarse";
    int m = 33;
    int n = 2;
    double C = 1.0;
    double slope = 1.0;
    std::optional<double> Lambda;
    std::optional<double> K, a, b, L;
    std::optional<double> kappa, theta;
    double tol = 1e-10;
    int max_iters = 400000;
    std::optional<double> tol_slope;
    std::optional<double> tau_w;
    double tol_interior = 0.1;
    int samples = 10000;
    int probes = 16;
    std::vector<int> m_list{17, 33, 65};
    std::string out;
    std::string grid_in;
    std::string grid_out;
    unsigned long long seed = 0;
};

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Json opt_json(const std::optional<double>& v)
{
    return v ? Json(*v) : Json(nullptr);
}

Json config_json(const RunConfig& c)
{
    Json ml = Json::array();
    for (int m : c.m_list)
        ml.push_back(m);
    return Json{{"command", c.command},
                {"profile", c.profile},
                {"field", c.field},
                {"centers", c.centers},
                {"m", c.m},
                {"n", c.n},
                {"C", c.C},
                {"slope", c.slope},
                {"Lambda", opt_json(c.Lambda)},
                {"K", opt_json(c.K)},
                {"a", opt_json(c.a)},
                {"b", opt_json(c.b)},
                {"L", opt_json(c.L)},
                {"kappa", opt_json(c.kappa)},
                {"theta", opt_json(c.theta)},
                {"tol", c.tol},
                {"max_iters", c.max_iters},
                {"tol_slope", opt_json(c.tol_slope)},
                {"tau_w", opt_json(c.tau_w)},
                {"tol_interior", c.tol_interior},
                {"samples", c.samples},
                {"probes", c.probes},
                {"m_list", ml},
                {"grid_in", c.grid_in},
                {"grid_out", c.grid_out},
                {"seed", c.seed}};
}

void validate(const RunConfig& c)
{
    if (c.m < 5 || c.m % 2 == 0)
        throw UsageError("--m must be odd and >= 5");
    if (c.n != 1 && c.n != 2)
        throw UsageError("--n must be 1 or 2");
    auto positive = [](const char* name, double v) {
        if (!(std::isfinite(v) && v > 0.0))
            throw UsageError(std::string(name) + " must be positive");
    };
    positive("--tol", c.tol);
    if (c.max_iters < 1)
        throw UsageError("--max-iters must be >= 1");
    positive("--tol-interior", c.tol_interior);
    positive("--C", c.C);
    positive("--slope", c.slope);
    if (c.tol_slope)
        positive("--tol-slope", *c.tol_slope);
    if (c.tau_w)
        positive("--tau-w", *c.tau_w);
    if (c.Lambda)
        positive("--Lambda", *c.Lambda);
    if (c.L)
        positive("--L", *c.L);
    if (c.samples < 2)
        throw UsageError("--samples must be >= 2");
    for (int m : c.m_list)
        if (m < 5 || m % 2 == 0)
            throw UsageError("--m-list entries must be odd and >= 5");
}

BarrierParams barrier_params(const RunConfig& c)
{
    BarrierParams p;
    if (c.kappa)
        p.kappa = *c.kappa;
    if (c.theta)
        p.theta = *c.theta;
    if (!p.valid())
        throw UsageError("--kappa must lie in (0, 1/4) and --theta in [1/2, 1]");
    return p;
}

Vector default_vertex(int n)
{
    Vector v(n);
    v[0] = 1.3;
    if (n == 2)
        v[1] = 0.7;
    return v;
}

ManufacturedProblem make_problem(const RunConfig& c, int m)
{
    ManufacturedProblem mp;
    if (c.profile == "prandtl") {
        mp = manufactured_solution(c.C, c.n, m);
    } else if (c.profile == "cone") {
        mp = cone_problem(c.n, m, c.slope, default_vertex(c.n));
    } else {
        auto u = ScalarField::sample(c.n, m, [&](const Vector& x) { return c.slope * x[0]; });
        mp.problem = {ScalarField(c.n, m), ScalarField(c.n, m), 1.0, u, 0.0, DomainShape::ball};
        mp.exact = std::move(u);
    }
    if (c.Lambda)
        mp.problem.Lambda = *c.Lambda;
    return mp;
}

SolverConfig solver_config(const RunConfig& c)
{
    SolverConfig s;
    s.tol = c.tol;
    s.max_iters = c.max_iters;
    return s;
}

void write_grid(const std::string& path, const ScalarField& u)
{
    std::ofstream os(path);
    if (!os)
        throw UsageError("cannot write " + path);
    write_grid_csv(os, u);
}

//! The field under study: exact profile, solver output or a CSV grid.
ScalarField study_field(const RunConfig& c, const ManufacturedProblem& mp, Json& results)
{
    if (!c.grid_in.empty()) {
        std::ifstream is(c.grid_in);
        if (!is)
            throw UsageError("cannot read " + c.grid_in);
        auto u = read_grid_csv(is);
        if (!u.same_grid(mp.exact))
            throw UsageError("--grid-in grid does not match --m/--n");
        return u;
    }
    if (c.field == "solved") {
        auto r = solve(mp.problem, default_initial(mp.problem), solver_config(c));
        results["solver"] = Json{{"iterations", r.iterations}, {"residual", r.residual}};
        return std::move(r.u);
    }
    return mp.exact;
}

struct Outcome {
    Json ledger = Json::object();
    Json results = Json::object();
    Json checks = Json::array();
};

Outcome run_barrier(const RunConfig& c)
{
    if (!c.K || !c.a || !c.b)
        throw UsageError("barrier requires --K, --a and --b");
    Outcome o;
    double Lbar = 0.0;
    BarrierParams p;
    if (c.kappa || c.theta) {
        p = barrier_params(c);
        Lbar = barrier_threshold(p, *c.K, *c.a, *c.b);
    } else {
        const auto choice = choose_parameters(*c.K, *c.a, *c.b);
        p = choice.params;
        Lbar = choice.Lbar;
    }
    const double L = c.L.value_or(Lbar);
    o.ledger = Json{{"K", *c.K},
                    {"a", *c.a},
                    {"b", *c.b},
                    {"params", to_json(p)},
                    {"kappa_bar", kappa_bar(p)},
                    {"curvature_floor", curvature_floor(p)},
                    {"Lbar", Lbar},
                    {"L", L}};
    const auto cert = verify_keq(p, L, *c.a, *c.b, *c.K, c.samples);
    o.results["certificate"] = to_json(cert);
    o.checks.push_back(check_entry("keq", cert.pass, -cert.worst_margin - *c.K, -*c.K));
    const bool window = check_window(p, c.samples);
    o.checks.push_back(check_entry("omega_window", window, 1.0 - p.kappa * (1.0 + p.theta), 1.0));
    return o;
}

Outcome run_solve(const RunConfig& c)
{
    Outcome o;
    const auto mp = make_problem(c, c.m);
    const auto r = solve(mp.problem, default_initial(mp.problem), solver_config(c));
    o.results = Json{{"iterations", r.iterations},
                     {"residual", r.residual},
                     {"h", r.u.spacing()},
                     {"stencil_width", automatic_stencil_width(c.m)},
                     {"sup_error_B_half", sup_error_in_ball(r.u, mp.exact, 0.5)},
                     {"sup_norm", r.u.sup_norm()}};
    o.checks.push_back(check_entry("converged", true, double(r.iterations), double(solver_config(c).max_iters)));
    if (!c.grid_out.empty())
        write_grid(c.grid_out, r.u);
    return o;
}

HarnessOptions harness_options(const RunConfig& c, const ScalarField& u)
{
    HarnessOptions h;
    h.centers = c.centers == "dense" ? dense_centers(u) : coarse_centers(u.dim());
    h.tau_w = c.tau_w;
    h.L_override = c.L;
    return h;
}

Outcome run_certify(const RunConfig& c)
{
    Outcome o;
    const auto mp = make_problem(c, c.m);
    const auto u = study_field(c, mp, o.results);
    const auto params = barrier_params(c);
    const auto rep = theorem_report(u, mp.problem, params, harness_options(c, u));
    o.ledger = to_json(rep.ledger);
    o.results["report"] = to_json(rep, u);
    const double gap = rep.certificate ? rep.certificate->gap : 0.0;
    o.checks.push_back(check_entry("no_witness", !rep.certificate, gap, rep.tau_w));
    o.checks.push_back(
        check_entry("quotient_within_bound", rep.quotient_within_bound, rep.sup_quotient, rep.bound_value + rep.report_tol));
    if (!c.grid_out.empty())
        write_grid(c.grid_out, u);
    return o;
}

Outcome run_lipschitz(const RunConfig& c)
{
    Outcome o;
    const auto mp = make_problem(c, c.m);
    const auto u = study_field(c, mp, o.results);
    const auto params = barrier_params(c);
    const auto led = build_ledger(mp.problem.Lambda, sup_on_unit_ball(mp.problem.fplus),
                                  sup_on_unit_ball(mp.problem.fminus), sup_on_unit_ball(u), Vector::Zero(u.dim()), params);
    const auto ledger = c.L ? with_forced_L(led, *c.L) : led;
    o.ledger = to_json(ledger);
    const auto q = lipschitz_quotient(u, 0.5);
    const auto pp = per_phase_quotients(u, extract_phases(u), 0.5);
    o.results = Json{{"sup_quotient", q.sup},
                     {"arg_pair", Json::array({to_json(u.coord(q.x_index)), to_json(u.coord(q.y_index))})},
                     {"per_phase", Json{{"pos", pp.pos}, {"neg", pp.neg}, {"cross", pp.cross}}},
                     {"bound_value", ledger.L + ledger.varrho}};
    o.checks.push_back(check_entry("quotient_within_bound", q.sup <= ledger.L + ledger.varrho, q.sup,
                                   ledger.L + ledger.varrho));
    return o;
}

//! Strict-phase cells whose whole jet window lies in the same phase.
std::vector<std::size_t> clean_cells(const ScalarField& u, const PhaseSets& ph, const std::vector<std::size_t>& cells)
{
    std::vector<std::size_t> out;
    const int r = 3;
    for (std::size_t k : cells) {
        if (u.coord(k).norm() > 0.5 + 1e-12)
            continue;
        const auto idx = u.multi_index(k);
        bool ok = true;
        for (int b = (u.dim() == 2 ? -r : 0); ok && b <= (u.dim() == 2 ? r : 0); ++b)
            for (int a = -r; ok && a <= r; ++a)
                ok = u.contains_index(idx[0] + a, idx[1] + b) && ph.of(u.flat(idx[0] + a, idx[1] + b)) == ph.of(k);
        if (ok)
            out.push_back(k);
    }
    return out;
}

std::vector<std::size_t> sample_cells(std::vector<std::size_t> cells, int probes, std::mt19937_64& rng)
{
    if (probes >= 0 && cells.size() > std::size_t(probes)) {
        std::shuffle(cells.begin(), cells.end(), rng);
        cells.resize(std::size_t(probes));
        std::sort(cells.begin(), cells.end());
    }
    return cells;
}

Outcome run_viscosity(const RunConfig& c)
{
    Outcome o;
    const auto mp = make_problem(c, c.m);
    const auto u = study_field(c, mp, o.results);
    const auto ph = extract_phases(u);
    std::mt19937_64 rng(c.seed);

    std::vector<std::size_t> strict = ph.pos;
    strict.insert(strict.end(), ph.neg.begin(), ph.neg.end());
    std::sort(strict.begin(), strict.end());
    Json interior = Json::array();
    for (std::size_t k : sample_cells(clean_cells(u, ph, strict), c.probes, rng)) {
        for (JetSide side : {JetSide::super, JetSide::sub}) {
            const auto jet = fit_jet(u, k, side);
            if (!jet)
                continue;
            const auto r = check_interior(u, ph, mp.problem, *jet, c.tol_interior);
            const char* s = side == JetSide::super ? "super" : "sub";
            interior.push_back(Json{{"point", to_json(u.coord(k))}, {"side", s}, {"value", r.value},
                                    {"forcing", r.forcing}, {"slack", r.slack}, {"defect", jet->touch_defect},
                                    {"pass", r.pass}});
            // super: value <= f + tol; sub: value >= f - tol.
            if (side == JetSide::super)
                o.checks.push_back(check_entry(std::string("interior_super@") + std::to_string(k), r.pass, r.value,
                                               r.forcing + c.tol_interior));
            else
                o.checks.push_back(check_entry(std::string("interior_sub@") + std::to_string(k), r.pass,
                                               r.forcing - c.tol_interior, r.value));
        }
    }

    std::vector<std::size_t> fb;
    for (std::size_t k : ph.fb)
        if (u.coord(k).norm() <= 0.5 + 1e-12)
            fb.push_back(k);
    Json fbs = Json::array();
    const auto t = default_t_list(u.spacing());
    for (std::size_t k : sample_cells(fb, c.probes, rng)) {
        for (JetSide side : {JetSide::super, JetSide::sub}) {
            const auto jet = fit_jet(u, k, side);
            if (!jet || !(jet->xi.norm() > 0.0))
                continue;
            const auto r = check_fb_condition(u, k, *jet, mp.problem.Lambda, t, c.tol_slope);
            fbs.push_back(to_json(r));
            if (side == JetSide::super)
                o.checks.push_back(check_entry("fb_sub_solution@" + std::to_string(k), r.pass,
                                               -r.Lambda - r.tol_slope, r.slope));
            else
                o.checks.push_back(check_entry("fb_super_solution@" + std::to_string(k), r.pass, r.slope,
                                               r.Lambda + r.tol_slope));
        }
    }
    o.results = Json{{"phase_counts", Json{{"pos", ph.pos.size()}, {"neg", ph.neg.size()}, {"fb", ph.fb.size()},
                                           {"zero_interior", ph.zero_interior.size()}}},
                     {"tol_zero", ph.tol_zero},
                     {"interior", interior},
                     {"free_boundary", fbs}};
    return o;
}

Outcome run_convergence(const RunConfig& c)
{
    Outcome o;
    const auto rows = convergence_study([&](int m) { return make_problem(c, m); }, c.m_list, solver_config(c));
    Json table = Json::array();
    for (const auto& r : rows)
        table.push_back(to_json(r));
    o.results["rows"] = table;
    for (std::size_t i = 1; i < rows.size(); ++i)
        o.checks.push_back(check_entry("error_decreases_m" + std::to_string(rows[i].m),
                                       rows[i].sup_error < rows[i - 1].sup_error, rows[i].sup_error,
                                       rows[i - 1].sup_error));
    return o;
}

int emit(const RunConfig& c, const Outcome& o)
{
    Json report{{"config", config_json(c)}, {"ledger", o.ledger}, {"results", o.results}, {"checks", o.checks}};
    if (c.out.empty()) {
        write_report(std::cout, report);
    } else {
        std::ofstream os(c.out);
        if (!os)
            throw UsageError("cannot write " + c.out);
        write_report(os, report);
    }
    bool pass = true;
    for (const auto& chk : o.checks)
        pass = pass && chk["pass"].get<bool>();
    return pass ? 0 : 1;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Two-phase infinity Laplacian: solver, barrier and Lipschitz certificates"};
    RunConfig c;
    const std::vector<std::string> commands{"solve", "barrier", "certify", "lipschitz", "viscosity", "convergence"};
    app.add_option("command,--command", c.command, "Pipeline to run")->required()->check(CLI::IsMember(commands));
    app.add_option("--profile", c.profile, "Problem family")->check(CLI::IsMember({"prandtl", "cone", "linear"}));
    app.add_option("--field", c.field, "Field to study: exact profile or solver output")
        ->check(CLI::IsMember({"exact", "solved"}));
    app.add_option("--centers", c.centers, "Witness search centres")->check(CLI::IsMember({"coarse", "dense"}));
    app.add_option("--m", c.m, "Grid points per axis (odd, >= 5)");
    app.add_option("--n", c.n, "Dimension (1 or 2)");
    app.add_option("--C", c.C, "Prandtl profile constant");
    app.add_option("--slope", c.slope, "Cone or linear profile slope");
    app.add_option("--Lambda", c.Lambda, "Free boundary flux bound");
    app.add_option("--K", c.K, "Barrier constant K");
    app.add_option("--a", c.a, "Barrier constant a");
    app.add_option("--b", c.b, "Barrier constant b");
    app.add_option("--L", c.L, "Barrier scale L (forces the ledger value)");
    app.add_option("--kappa", c.kappa, "Barrier kappa override");
    app.add_option("--theta", c.theta, "Barrier theta override");
    app.add_option("--tol", c.tol, "Solver update tolerance");
    app.add_option("--max-iters", c.max_iters, "Solver sweep limit");
    app.add_option("--tol-slope", c.tol_slope, "Free boundary slope tolerance (default 10 h)");
    app.add_option("--tau-w", c.tau_w, "Witness gap slack");
    app.add_option("--tol-interior", c.tol_interior, "Interior viscosity inequality tolerance");
    app.add_option("--samples", c.samples, "Barrier sample count");
    app.add_option("--probes", c.probes, "Cells probed per viscosity check family");
    app.add_option("--m-list", c.m_list, "Resolutions for the convergence study")->delimiter(',');
    app.add_option("--out", c.out, "Report path (stdout if omitted)");
    app.add_option("--grid-in", c.grid_in, "Field to study, grid CSV");
    app.add_option("--grid-out", c.grid_out, "Write the studied or solved field as grid CSV");
    app.add_option("--seed", c.seed, "Seed for randomized probe selection");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        validate(c);
        Outcome o;
        if (c.command == "barrier")
            o = run_barrier(c);
        else if (c.command == "solve")
            o = run_solve(c);
        else if (c.command == "certify")
            o = run_certify(c);
        else if (c.command == "lipschitz")
            o = run_lipschitz(c);
        else if (c.command == "viscosity")
            o = run_viscosity(c);
        else
            o = run_convergence(c);
        return emit(c, o);
    } catch (const NonConvergenceError& e) {
        std::cerr << "error: " << e.what() << " (residual " << e.residual() << ")\n";
        return 3;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
