#include "app.hpp"

#include "branchtrace/builtins.hpp"
#include "branchtrace/degree.hpp"
#include "branchtrace/errors.hpp"
#include "branchtrace/oracles.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <map>
#include <numbers>
#include <random>

namespace branchtrace::app {

using nlohmann::json;
namespace fs = std::filesystem;
using continuation::Branch;
using continuation::Classification;
using continuation::Side;

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

json jnum(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::Evaluation, "cannot write " + path.string());
    out << j.dump(2) << '\n';
}

json error_record(const std::string& where, const std::exception& e) {
    json j{{"where", where}, {"message", e.what()}};
    if (const auto* be = dynamic_cast<const Error*>(&e)) j["kind"] = std::string(to_string(be->kind()));
    else j["kind"] = "Internal";
    return j;
}

bool is_config_kind(const std::exception& e) {
    const auto* be = dynamic_cast<const Error*>(&e);
    return be && (be->kind() == ErrorKind::Config || be->kind() == ErrorKind::Precondition);
}

DomainSpec apply_domain(DomainSpec d, const RunConfig& cfg) {
    if (cfg.lambda_min) d.lambda_min = *cfg.lambda_min;
    if (cfg.lambda_max) d.lambda_max = *cfg.lambda_max;
    if (cfg.norm_cap) d.norm_cap = *cfg.norm_cap;
    if (cfg.boundary_threshold) d.boundary_threshold = *cfg.boundary_threshold;
    return d;
}

std::vector<Side> sides_of(const RunConfig& cfg) {
    if (cfg.side == "plus") return {Side::Plus};
    if (cfg.side == "minus") return {Side::Minus};
    return {Side::Plus, Side::Minus};
}

json state_json(const Vector& u) {
    if (u.size() > 16) return nullptr;
    json a = json::array();
    for (Index i = 0; i < u.size(); ++i) a.push_back(jnum(u(i)));
    return a;
}

double inf_norm(const Vector& u) { return u.size() ? u.cwiseAbs().maxCoeff() : 0.0; }

} // namespace

// ---------------------------------------------------------------------------
// Problem setup
// ---------------------------------------------------------------------------

Problem build_problem(const RunConfig& cfg) {
    Problem p;
    if (cfg.is_mcbvp()) {
        if (cfg.base_lambda && *cfg.base_lambda != 0.0)
            throw Error(ErrorKind::Config, "config: mcbvp runs start on the slice lambda = 0");
        auto mesh = std::make_shared<const mcbvp::MeshProblem>(mcbvp::MeshParams{cfg.m, cfg.mu, cfg.q, cfg.delta});
        mcbvp::SystemOptions so;
        so.gradient_threshold = cfg.gradient_threshold;
        p.system = mcbvp::make_system(*mesh, so);
        p.system.domain = apply_domain(p.system.domain, cfg);
        p.base = mcbvp::base_solution(*mesh);
        p.start = Point{0.0, p.base->u0};
        p.mesh = mesh;
        return p;
    }
    builtins::BuiltinCase c = builtins::make(cfg.builtin_name());
    p.system = c.system;
    p.start = c.start;
    if (cfg.base_lambda) {
        p.start.lambda = *cfg.base_lambda;
        if (!cfg.start_u && *cfg.base_lambda != c.start.lambda)
            throw Error(ErrorKind::Config, "config: a custom base_lambda needs start_u");
    }
    if (cfg.start_u) p.start.u = Eigen::Map<const Vector>(cfg.start_u->data(), 1);
    p.system.domain.base_lambda = p.start.lambda;
    p.system.domain = apply_domain(p.system.domain, cfg);
    return p;
}

// ---------------------------------------------------------------------------
// Oracle checks
// ---------------------------------------------------------------------------

namespace {

std::vector<Point> random_points(const RunConfig& cfg, const Problem& problem, int count) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(cfg.seed) * 7919u + 17u);
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    std::vector<Point> pts{problem.start};
    int guard = 0;
    while (static_cast<int>(pts.size()) < count && ++guard < 100 * count) {
        Point pt;
        if (problem.mesh) {
            const Vector& x = problem.mesh->x();
            const double a = 1.0 + 0.3 * unit(rng);
            const double b = 0.3 * unit(rng);
            const int k = 2 + static_cast<int>(3.0 * (unit(rng) + 1.0));
            pt.u = a * problem.start.u + b * (k * std::numbers::pi * x.array()).sin().matrix();
            pt.lambda = unit(rng) < 0.0 ? -unit(rng) * unit(rng) : 0.005 * (unit(rng) + 1.0);
        } else {
            const DomainSpec& d = problem.system.domain;
            const double lo = std::max(d.lambda_min, -2.0), hi = std::min(d.lambda_max, 2.0);
            pt.lambda = lo + 0.5 * (unit(rng) + 1.0) * (hi - lo);
            pt.u = Vector::Constant(problem.system.n_state, 2.0 * unit(rng));
        }
        if (inside_domain(problem.system.domain, pt).margin > 0.05) pts.push_back(pt);
    }
    return pts;
}

} // namespace

std::vector<VerifyCheck> oracle_checks(const RunConfig& cfg, const Problem& problem) {
    std::vector<VerifyCheck> checks;
    const ParameterizedSystem& sys = problem.system;

    {
        VerifyCheck c{"jacobian_fd", true, 0.0, 1e-6, ""};
        const auto pts = random_points(cfg, problem, 10);
        for (const Point& p : pts) {
            const ConsistencyReport r = validate_consistency(sys, p, 1e-6);
            c.measured = std::max({c.measured, r.jac_u_error, r.jac_lambda_error});
        }
        c.passed = c.measured <= c.tolerance;
        c.detail = std::to_string(pts.size()) + " points, central differences with h_fd = 1e-6 (1 + |u|)";
        checks.push_back(c);
    }

    if (problem.mesh) {
        VerifyCheck c{"shooting_lambda0", false, 0.0, 5e-4, ""};
        try {
            const auto shot = oracles::shooting_solve(cfg.mu, cfg.q, 0.0, cfg.m);
            c.measured = (shot.nodes - problem.start.u).cwiseAbs().maxCoeff();
            c.passed = c.measured <= c.tolerance;
            c.detail = "sup-norm gap between shooting and the Newton base state";
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        checks.push_back(c);

        VerifyCheck idx{"index_base_state", false, 0.0, 0.0, ""};
        const Matrix j = sys.jac_u(0.0, problem.start.u);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(j, Eigen::EigenvaluesOnly);
        int eig_sign = 1;
        for (Index i = 0; i < eig.eigenvalues().size(); ++i) eig_sign *= eig.eigenvalues()(i) > 0.0 ? 1 : -1;
        const int ds = degree::det_sign(j);
        idx.measured = ds;
        idx.passed = ds == eig_sign && ds == 1;
        idx.detail = "det_sign " + std::to_string(ds) + ", eigenvalue oracle " + std::to_string(eig_sign);
        checks.push_back(idx);
    } else {
        VerifyCheck c{"slice_degree", false, 0.0, 0.0, ""};
        const double l0 = problem.start.lambda;
        oracles::Box box{Vector::Constant(1, -2.5), Vector::Constant(1, 2.5)};
        try {
            const int bd = degree::box_degree(sys, l0, box, 64);
            const int bf = oracles::brute_force_degree(
                [&](const Vector& u) { return sys.residual(l0, u); }, box, 10000);
            c.measured = bd;
            c.passed = bd == bf;
            c.detail = "box_degree " + std::to_string(bd) + ", brute force " + std::to_string(bf);
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        checks.push_back(c);
    }

    {
        VerifyCheck c{"random_polynomial_degrees", true, 0.0, 0.0, ""};
        int mismatches = 0;
        for (int k = 0; k < 10; ++k) {
            const auto seed = static_cast<std::uint64_t>(cfg.seed) * 1000u + static_cast<std::uint64_t>(k);
            const auto s = oracles::random_polynomial_slice(seed, 1 + k % 2);
            const int bd = degree::box_degree(s.f, s.jac, s.box, s.box.dim() == 1 ? 200 : 40).degree;
            const int bf = oracles::brute_force_degree(s.f, s.box, 4000);
            if (bd != bf || bd != s.expected_degree) ++mismatches;
        }
        c.measured = mismatches;
        c.passed = mismatches == 0;
        c.detail = "10 seeded slices, box_degree vs brute force";
        checks.push_back(c);
    }
    return checks;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace {

struct SideResult {
    Side side;
    std::optional<Branch> branch;
    std::optional<continuation::ClassificationReport> report;
    std::string error;
    std::string error_kind;
};

json event_json(const continuation::Event& e) {
    return json{{"kind", std::string(to_string(e.kind))},
                {"lambda", jnum(e.location.lambda)},
                {"u_inf_norm", jnum(inf_norm(e.location.u))},
                {"u", state_json(e.location.u)},
                {"offset", jnum(e.offset)},
                {"step", e.step},
                {"sign_before", e.sign_before},
                {"sign_after", e.sign_after},
                {"crossing_index", e.crossing_index},
                {"value", jnum(e.value)},
                {"note", e.note}};
}

json crossings_json(const std::vector<degree::SliceCrossing>& cs) {
    json a = json::array();
    for (const auto& c : cs)
        a.push_back({{"lambda0", jnum(c.lambda0)},
                     {"index", c.index},
                     {"u_inf_norm", jnum(inf_norm(c.u))},
                     {"u", state_json(c.u)}});
    return a;
}

void write_branch_files(const fs::path& dir, const Problem& problem, const Branch& b) {
    const std::string side(to_string(b.side));
    std::ofstream jl(dir / ("branch_" + side + ".jsonl"));
    std::ofstream st(dir / ("states_" + side + ".txt"));
    std::map<std::size_t, std::vector<std::string>> tags;
    for (const auto& e : b.events) tags[e.step].push_back(std::string(to_string(e.kind)));
    st << "# lambda u_1 ... u_n, one accepted point per row\n";
    for (std::size_t k = 0; k < b.points.size(); ++k) {
        const Point& p = b.points[k];
        json rec{{"step", k},
                 {"lambda", jnum(p.lambda)},
                 {"u_inf_norm", jnum(inf_norm(p.u))},
                 {"det_sign", degree::det_sign(problem.system.jac_u(p.lambda, p.u))},
                 {"margin", jnum(inside_domain(problem.system.domain, p).margin)},
                 {"residual_norm", jnum(problem.system.residual(p.lambda, p.u).norm())}};
        if (problem.mesh) rec["grad_inf_norm"] = jnum(problem.mesh->max_gradient(p.u));
        if (auto it = tags.find(k); it != tags.end()) rec["event"] = it->second;
        jl << rec.dump() << '\n';
        st << num(p.lambda);
        for (Index i = 0; i < p.u.size(); ++i) st << ' ' << num(p.u(i));
        st << '\n';
    }
}

void write_summary(const fs::path& dir, const Problem& problem, const std::vector<SideResult>& results) {
    std::ofstream csv(dir / "summary.csv");
    csv << "side,step,lambda,u_inf_norm" << (problem.mesh ? ",grad_inf_norm" : "") << '\n';
    for (const auto& r : results) {
        if (!r.branch) continue;
        const std::string side(to_string(r.side));
        for (std::size_t k = 0; k < r.branch->points.size(); ++k) {
            const Point& p = r.branch->points[k];
            csv << side << ',' << k << ',' << num(p.lambda) << ',' << num(inf_norm(p.u));
            if (problem.mesh) csv << ',' << num(problem.mesh->max_gradient(p.u));
            csv << '\n';
        }
    }
}

json balance_json(const Problem& problem, const std::vector<SideResult>& results) {
    json out{{"lambda0", jnum(problem.system.domain.base_lambda)}, {"sides", json::object()}};
    std::vector<degree::SliceCrossing> combined;
    bool any = false;
    for (const auto& r : results) {
        if (!r.report) continue;
        const std::string side(to_string(r.side));
        const auto& rep = *r.report;
        if (rep.balance) {
            any = true;
            out["sides"][side] = {{"crossings", crossings_json(rep.crossings)},
                                  {"sum", rep.balance->sum},
                                  {"nonzero_count", rep.balance->nonzero_count},
                                  {"balanced", rep.balance->balanced}};
        }
        for (const auto& c : rep.crossings) {
            bool dup = false;
            for (const auto& d : combined) dup = dup || (d.u - c.u).norm() <= 1e-6 * (1.0 + c.u.norm());
            if (!dup) combined.push_back(c);
        }
    }
    if (!any) return nullptr;
    const auto bal = degree::degree_balance(combined);
    out["combined"] = {{"crossings", crossings_json(combined)},
                       {"sum", bal.sum},
                       {"nonzero_count", bal.nonzero_count},
                       {"balanced", bal.balanced}};
    return out;
}

json checks_json(const std::vector<VerifyCheck>& checks) {
    json a = json::array();
    bool all = true;
    for (const auto& c : checks) {
        all = all && c.passed;
        a.push_back({{"name", c.name},
                     {"passed", c.passed},
                     {"measured", jnum(c.measured)},
                     {"tolerance", jnum(c.tolerance)},
                     {"detail", c.detail}});
    }
    return json{{"passed", all}, {"checks", a}};
}

struct Prepared {
    RunConfig cfg;
    fs::path out_dir;
};

// Loads and validates the config; on failure writes errors.json and
// returns the exit code through `code`.
std::optional<Prepared> prepare(const std::string& path, const Overrides& ov, std::ostream& log, int& code) {
    Prepared p;
    try {
        p.cfg = load_config(path);
        if (ov.seed) p.cfg.seed = *ov.seed;
        if (ov.max_steps) p.cfg.step.max_steps = *ov.max_steps;
        if (ov.out) p.cfg.output_dir = *ov.out;
        validate(p.cfg);
        p.out_dir = p.cfg.output_dir;
        fs::create_directories(p.out_dir);
        return p;
    } catch (const std::exception& e) {
        log << "config error: " << e.what() << '\n';
        const fs::path dir = ov.out.value_or("out");
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (!ec) write_json(dir / "errors.json", json::array({error_record("config", e)}));
        code = is_config_kind(e) ? kConfigError : kFailure;
        return std::nullopt;
    }
}

} // namespace

int run(const std::string& config_path, const Overrides& ov, std::ostream& log) {
    int code = kOk;
    auto prepared = prepare(config_path, ov, log, code);
    if (!prepared) return code;
    const RunConfig& cfg = prepared->cfg;
    const fs::path& dir = prepared->out_dir;
    json errors = json::array();

    Problem problem;
    try {
        problem = build_problem(cfg);
    } catch (const std::exception& e) {
        errors.push_back(error_record("setup", e));
        write_json(dir / "errors.json", errors);
        log << "setup error: " << e.what() << '\n';
        return is_config_kind(e) ? kConfigError : kFailure;
    }

    // The two unilateral traces share nothing mutable and run concurrently.
    std::vector<std::future<SideResult>> jobs;
    for (Side side : sides_of(cfg)) {
        jobs.push_back(std::async(std::launch::async, [&problem, &cfg, side] {
            SideResult r{side, std::nullopt, std::nullopt, "", ""};
            try {
                r.branch = continuation::trace(problem.system, problem.system.domain, problem.start, side, cfg.step);
                r.report = continuation::classify(*r.branch, problem.system.domain);
            } catch (const Error& e) {
                r.error = e.what();
                r.error_kind = std::string(to_string(e.kind()));
            } catch (const std::exception& e) {
                r.error = e.what();
                r.error_kind = "Internal";
            }
            return r;
        }));
    }
    std::vector<SideResult> results;
    for (auto& j : jobs) results.push_back(j.get());

    json events = json::object();
    json classification = json::object();
    bool stalled = false, failed = false;
    for (const auto& r : results) {
        const std::string side(to_string(r.side));
        if (!r.branch) {
            failed = true;
            errors.push_back({{"where", "trace_" + side}, {"kind", r.error_kind}, {"message", r.error}});
            log << side << ": error: " << r.error << '\n';
            continue;
        }
        const Branch& b = *r.branch;
        const auto& rep = *r.report;
        write_branch_files(dir, problem, b);
        json ev = json::array();
        for (const auto& e : b.events) ev.push_back(event_json(e));
        events[side] = ev;
        classification[side] = {{"label", std::string(to_string(rep.label))},
                                {"alternative", rep.alternative},
                                {"termination", b.termination},
                                {"evidence",
                                 {{"points", b.points.size()},
                                  {"arclength", jnum(b.arclength)},
                                  {"final_lambda", jnum(rep.final_lambda)},
                                  {"final_norm", jnum(rep.final_norm)},
                                  {"final_state_inf", jnum(rep.final_state_inf)},
                                  {"final_margin", jnum(rep.final_margin)},
                                  {"min_margin", jnum(rep.min_margin)},
                                  {"max_norm", jnum(rep.max_norm)},
                                  {"crossings", crossings_json(rep.crossings)}}}};
        if (rep.label == Classification::Stalled) stalled = true;
        log << side << ": " << to_string(rep.label) << " (" << b.termination << "), " << b.points.size()
            << " points, final lambda " << rep.final_lambda << '\n';
    }
    write_json(dir / "events.json", events);
    write_json(dir / "classification.json", classification);
    if (const json bal = balance_json(problem, results); !bal.is_null()) write_json(dir / "balance.json", bal);
    write_summary(dir, problem, results);

    bool verify_failed = false;
    if (cfg.verify) {
        const auto checks = oracle_checks(cfg, problem);
        const json v = checks_json(checks);
        write_json(dir / "verify.json", v);
        verify_failed = !v["passed"].get<bool>();
    }
    write_json(dir / "errors.json", errors);

    if (verify_failed) return kVerifyFailure;
    if (failed) return kFailure;
    if (stalled) return kStalled;
    return kOk;
}

int verify(const std::string& config_path, const Overrides& ov, std::ostream& log) {
    int code = kOk;
    auto prepared = prepare(config_path, ov, log, code);
    if (!prepared) return code;
    const fs::path& dir = prepared->out_dir;
    json errors = json::array();
    try {
        const Problem problem = build_problem(prepared->cfg);
        const auto checks = oracle_checks(prepared->cfg, problem);
        const json v = checks_json(checks);
        write_json(dir / "verify.json", v);
        write_json(dir / "errors.json", errors);
        for (const auto& c : checks)
            log << (c.passed ? "PASS " : "FAIL ") << c.name << " measured=" << c.measured << " (" << c.detail
                << ")\n";
        return v["passed"].get<bool>() ? kOk : kVerifyFailure;
    } catch (const std::exception& e) {
        errors.push_back(error_record("verify", e));
        write_json(dir / "errors.json", errors);
        log << "verify error: " << e.what() << '\n';
        return is_config_kind(e) ? kConfigError : kFailure;
    }
}

int list_builtins(std::ostream& out) {
    const std::map<std::string, std::string> about = {
        {"circle", "u^2 + lambda^2 - 1, start (0, 1)"},
        {"fold", "u^2 - lambda, start (1, 1)"},
        {"line", "u - lambda, start (0, 0), norm cap 5"},
        {"pitchfork", "lambda u - u^3, start (-0.5, 0)"}};
    for (const auto& n : builtins::names()) out << "builtin:" << n << "  " << about.at(n) << '\n';
    out << "mcbvp  finite-difference mean-curvature / Minkowski problem (keys m, mu, q, delta)\n";
    return kOk;
}

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App cli{"branchtrace: continuation, degree and branch classification"};
    cli.require_subcommand(1);
    Overrides ov;
    std::string config;
    std::string out_dir;
    int seed = 0, max_steps = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config, "run configuration file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides output_dir)");
        sub->add_option("--seed", seed, "seed for randomized oracle checks");
        sub->add_option("--max-steps", max_steps, "continuation step budget")->check(CLI::PositiveNumber);
    };
    CLI::App* run_cmd = cli.add_subcommand("run", "trace, classify and write branch data");
    add_common(run_cmd);
    CLI::App* verify_cmd = cli.add_subcommand("verify", "run the oracle cross-checks");
    add_common(verify_cmd);
    CLI::App* list_cmd = cli.add_subcommand("list-builtins", "list the analytic test systems");

    try {
        cli.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = cli.exit(e, out, err);
        return rc == 0 ? kOk : kConfigError;
    }
    for (CLI::App* sub : {run_cmd, verify_cmd}) {
        if (!sub->parsed()) continue;
        if (sub->count("--out")) ov.out = out_dir;
        if (sub->count("--seed")) ov.seed = seed;
        if (sub->count("--max-steps")) ov.max_steps = max_steps;
    }
    if (run_cmd->parsed()) return run(config, ov, out);
    if (verify_cmd->parsed()) return verify(config, ov, out);
    if (list_cmd->parsed()) return list_builtins(out);
    return kConfigError;
}

} // namespace branchtrace::app
