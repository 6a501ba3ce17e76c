// Acceptance checks AC1..AC9. One PASS/FAIL line per criterion; the exit
// status is nonzero when any criterion fails.

#include "branchtrace/builtins.hpp"
#include "branchtrace/continuation.hpp"
#include "branchtrace/degree.hpp"
#include "branchtrace/mcbvp.hpp"
#include "branchtrace/oracles.hpp"
#include "branchtrace/singular.hpp"

#include "app.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace branchtrace;
namespace ct = branchtrace::continuation;
namespace fs = std::filesystem;

namespace {

Vector scalar(double v) { return Vector::Constant(1, v); }

struct Criterion {
    bool ok = true;
    std::ostringstream detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            detail << " [failed: " << what << "]";
        }
    }
};

int failures = 0;

void report(const char* id, const char* title, const std::function<void(Criterion&)>& body) {
    Criterion c;
    try {
        body(c);
    } catch (const std::exception& e) {
        c.ok = false;
        c.detail << " [exception: " << e.what() << "]";
    }
    if (!c.ok) ++failures;
    std::cout << (c.ok ? "PASS " : "FAIL ") << id << " " << title << c.detail.str() << std::endl;
}

std::vector<ct::Event> of_kind(const ct::Branch& b, ct::EventKind k) {
    std::vector<ct::Event> out;
    for (const auto& e : b.events)
        if (e.kind == k) out.push_back(e);
    return out;
}

// Crossings of both unilateral branches on the base slice, deduplicated.
std::vector<degree::SliceCrossing> both_sides(const builtins::BuiltinCase& c, const ct::StepControl& ctl,
                                              std::vector<ct::Branch>* branches = nullptr) {
    std::vector<degree::SliceCrossing> all;
    for (ct::Side side : {ct::Side::Plus, ct::Side::Minus}) {
        const auto b = ct::trace(c.system, c.system.domain, c.start, side, ctl);
        const auto rep = ct::classify(b, c.system.domain);
        for (const auto& x : rep.crossings) {
            bool dup = false;
            for (const auto& y : all) dup = dup || (x.u - y.u).norm() <= 1e-6;
            if (!dup) all.push_back(x);
        }
        if (branches) branches->push_back(b);
    }
    return all;
}

void ac1(Criterion& c) {
    const ct::StepControl ctl;
    for (const char* name : {"circle", "fold"}) {
        const auto bc = builtins::make(name);
        const auto crossings = both_sides(bc, ctl);
        const auto bal = degree::degree_balance(crossings);
        c.detail << " " << name << ": sum=" << bal.sum << " nonzero=" << bal.nonzero_count;
        c.require(bal.sum == 0, std::string(name) + " index sum");
        c.require(bal.nonzero_count == 2, std::string(name) + " crossing count");
        bool at_plus = false, at_minus = false;
        for (const auto& x : crossings) {
            at_plus = at_plus || std::abs(x.u(0) - 1.0) <= 1e-6;
            at_minus = at_minus || std::abs(x.u(0) + 1.0) <= 1e-6;
        }
        c.require(at_plus && at_minus, std::string(name) + " crossings at +-1");
    }
}

void ac2(Criterion& c) {
    const ct::StepControl ctl;
    const auto fold = builtins::make("fold");
    const auto fb = ct::trace(fold.system, fold.system.domain, fold.start, ct::Side::Minus, ctl);
    const auto ret = of_kind(fb, ct::EventKind::BaseReturn);
    c.require(fb.classification == ct::Classification::BaseReturn, "fold label");
    c.require(ret.size() == 1 && std::abs(ret[0].location.u(0) + 1.0) <= 1e-6, "fold u1 = -1");
    if (!ret.empty()) c.detail << " fold u1=" << ret[0].location.u(0);

    const auto line = builtins::make("line");
    DomainSpec dom = line.system.domain;
    dom.norm_cap = 5.0;
    const auto lb = ct::trace(line.system, dom, line.start, ct::Side::Plus, ctl);
    c.require(lb.classification == ct::Classification::Unbounded, "line label");
    c.detail << " line=" << ct::to_string(lb.classification);

    const mcbvp::MeshProblem mesh({200, 12.0, 2.0, 0.5});
    mcbvp::SystemOptions so;
    so.lambda_min = 0.0;
    so.lambda_max = 5.0;
    const auto sys = mcbvp::make_system(mesh, so);
    const auto base = mcbvp::base_solution(mesh);
    ct::StepControl mctl;
    mctl.h_max = 2.0;
    const auto mb = ct::trace(sys, sys.domain, Point{0.0, base.u0}, ct::Side::Plus, mctl);
    const auto rep = ct::classify(mb, sys.domain);
    const bool boundary = !of_kind(mb, ct::EventKind::BoundaryApproach).empty() && rep.final_margin <= 1e-3;
    const bool exhausted = mb.classification == ct::Classification::WindowExhausted && rep.min_margin > 1e-3;
    c.require(boundary || exhausted, "Minkowski disjunction");
    c.detail << " minkowski(delta=0.5)=" << ct::to_string(mb.classification) << " min_margin=" << rep.min_margin
             << " final_lambda=" << rep.final_lambda;
}

void ac3(Criterion& c) {
    using degree::box_degree;
    std::mt19937_64 rng(2026);
    std::normal_distribution<double> g;
    int n_ok = 0;
    for (int k = 0; k < 20; ++k) {
        const int n = 1 + k % 3;
        Matrix a(n, n);
        do {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j) a(i, j) = g(rng);
        } while (degree::det_sign(a) == 0);
        const degree::SliceMap f = [&](const Vector& u) -> Vector { return a * u; };
        const degree::SliceJacobian jf = [&](const Vector&) -> Matrix { return a; };
        const oracles::Box box{Vector::Constant(n, -1.0), Vector::Constant(n, 1.3)};
        n_ok += box_degree(f, jf, box, n == 3 ? 5 : 8).degree == degree::det_sign(a);
    }
    c.require(n_ok == 20, "normalization");
    c.detail << " N:" << n_ok << "/20";

    int a_ok = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const int dim = 1 + static_cast<int>(seed % 2);
        const auto s = oracles::random_polynomial_slice(seed, dim);
        double cut = 0.05;
        for (int t = 0; t < 50; ++t) {
            bool clear = true;
            for (const auto& r : s.roots) clear = clear && std::abs(r(0) - cut) > 0.05;
            if (clear) break;
            cut += 0.037;
        }
        oracles::Box left = s.box, right = s.box;
        left.upper(0) = cut;
        right.lower(0) = cut;
        const int seeds = dim == 1 ? 200 : 40;
        const int whole = box_degree(s.f, s.jac, s.box, seeds).degree;
        a_ok += whole == box_degree(s.f, s.jac, left, seeds).degree + box_degree(s.f, s.jac, right, seeds).degree &&
                whole == s.expected_degree;
    }
    c.require(a_ok == 20, "additivity");
    c.detail << " A:" << a_ok << "/20";

    using C = std::complex<double>;
    std::uniform_real_distribution<double> pos(-1.2, 1.2);
    std::bernoulli_distribution coin(0.5);
    int h_ok = 0;
    for (int k = 0; k < 20; ++k) {
        const int nr = 1 + k % 3;
        std::vector<C> r0, r1;
        std::vector<bool> holo;
        int expected = 0;
        for (int i = 0; i < nr; ++i) {
            r0.emplace_back(pos(rng), pos(rng));
            r1.emplace_back(pos(rng), pos(rng));
            holo.push_back(coin(rng));
            expected += holo.back() ? 1 : -1;
        }
        bool constant = true;
        for (int step = 0; step <= 10; ++step) {
            const double t = step / 10.0;
            std::vector<C> r;
            for (int i = 0; i < nr; ++i) r.push_back((1.0 - t) * r0[i] + t * r1[i]);
            const oracles::SliceMap f = [&](const Vector& u) {
                C p(1.0);
                const C w(u(0), u(1));
                for (int i = 0; i < nr; ++i) p *= holo[i] ? w - r[i] : std::conj(w - r[i]);
                Vector out(2);
                out << p.real(), p.imag();
                return out;
            };
            const oracles::Box box{Vector::Constant(2, -2.0), Vector::Constant(2, 2.0)};
            constant = constant && oracles::brute_force_degree(f, box, 2000) == expected;
        }
        h_ok += constant;
    }
    c.require(h_ok == 20, "homotopy");
    c.detail << " H:" << h_ok << "/20";

    bool moving = true;
    for (int step = 0; step <= 10; ++step) {
        const C cc(-3.0 + 0.6 * step, 1.0 - 0.2 * step);
        const degree::SliceMap f = [&](const Vector& u) {
            const C w(u(0), u(1));
            const C p = (w - cc) * (w - cc - 0.3);
            Vector out(2);
            out << p.real(), p.imag();
            return out;
        };
        const degree::SliceJacobian jf = [&](const Vector& u) {
            const C d = 2.0 * C(u(0), u(1)) - 2.0 * cc - 0.3;
            Matrix m(2, 2);
            m << d.real(), -d.imag(), d.imag(), d.real();
            return m;
        };
        Vector lo(2), hi(2);
        lo << cc.real() + 0.15 - 1.0, cc.imag() - 1.0;
        hi << cc.real() + 0.15 + 1.0, cc.imag() + 1.0;
        moving = moving && box_degree(f, jf, oracles::Box{lo, hi}, 30).degree == 2;
    }
    c.require(moving, "generalized homotopy invariance");
}

degree::MatrixPath sampled(const std::function<Matrix(double)>& l, double a, double b, int n) {
    std::vector<degree::MatrixSample> s;
    for (int i = 0; i <= n; ++i) {
        const double t = i == n ? b : a + (b - a) * i / n;
        s.push_back({t, l(t)});
    }
    return degree::MatrixPath(std::move(s));
}

void ac4(Criterion& c) {
    const auto diag = sampled([](double t) {
        Matrix m = Matrix::Identity(2, 2);
        m(1, 1) = t;
        return m;
    }, -1.0, 1.0, 10);
    c.require(degree::parity(diag) == -1, "diag(1,t) parity");

    std::mt19937_64 rng(4);
    std::normal_distribution<double> g;
    auto rnd = [&](int n) {
        Matrix m(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) m(i, j) = g(rng);
        return m;
    };
    int tested = 0, mult = 0, compat = 0;
    while (tested < 100) {
        const int n = 2 + tested % 3;
        const Matrix a = rnd(n), b = rnd(n), q = rnd(n);
        auto l = [&](double t) -> Matrix { return a + t * b + t * t * q; };
        if (degree::det_sign(l(-1)) == 0 || degree::det_sign(l(0.3)) == 0 || degree::det_sign(l(1)) == 0) continue;
        const auto p1 = sampled(l, -1.0, 0.3, 200);
        const auto p2 = sampled(l, 0.3, 1.0, 200);
        const auto whole = p1.concatenate(p2);
        mult += degree::parity(whole) == degree::parity(p1) * degree::parity(p2);
        compat += degree::parity(whole) == degree::det_sign(l(-1)) * degree::det_sign(l(1)) &&
                  degree::crossing_parity(whole) == degree::parity(whole);
        ++tested;
    }
    c.require(mult == 100, "multiplicativity");
    c.require(compat == 100, "compatibility");
    c.detail << " multiplicative " << mult << "/100, compatible " << compat << "/100";
}

void ac5(Criterion& c) {
    const auto emb = builtins::embedded_fold();
    const auto red = singular::ls_reduce(emb, Point{0.0, Vector::Zero(2)});
    const double r = red.trust_radius;
    double worst = 0.0, roundtrip = 0.0;
    for (int i = 0; i <= 40; ++i)
        for (int j = 0; j <= 40; ++j) {
            const double l = -r + 2 * r * i / 40.0;
            const double z = -r + 2 * r * j / 40.0;
            worst = std::max(worst, std::abs(singular::eval_reduced(red, l, scalar(z))(0) - (z * z - l)));
            const Point p = singular::lift(red, l, scalar(z));
            const auto [lb, zb] = singular::project(red, p);
            roundtrip = std::max({roundtrip, std::abs(lb - l), std::abs(zb(0) - z)});
            if (l > 0.0 && std::abs(z * z - l) < 1e-14) roundtrip = std::max(roundtrip, emb.residual(l, p.u).norm());
        }
    // zeros of G lifted back to zeros of F
    for (int k = 1; k <= 9; ++k) {
        const double z = 0.01 * k;
        const Point p = singular::lift(red, z * z, scalar(z));
        roundtrip = std::max(roundtrip, emb.residual(p.lambda, p.u).norm());
    }
    c.require(worst <= 1e-9, "normal form");
    c.require(roundtrip <= 1e-10, "round trip");
    c.detail << " |G-(z^2-l)|=" << worst << " roundtrip=" << roundtrip;

    const auto fred = singular::ls_reduce(builtins::fold(), Point{0.0, scalar(0.0)});
    const auto fh = singular::enumerate_branches(fred, 0.1, 48);
    const auto pred = singular::ls_reduce(builtins::pitchfork(), Point{0.0, scalar(0.0)});
    const auto ph = singular::enumerate_branches(pred, 0.1, 48);
    c.require(fh.size() == 2, "fold half-branches");
    c.require(ph.size() == 4, "pitchfork half-branches");
    c.detail << " half-branches fold=" << fh.size() << " pitchfork=" << ph.size();
    for (const auto& hb : fh) {
        const auto fit = singular::puiseux_exponent(hb.points, fred.singular_point);
        c.require(std::abs(fit.exponent - 0.5) <= 0.01, "Puiseux exponent");
        c.detail << " exponent=" << fit.exponent;
    }
}

void ac6(Criterion& c) {
    const mcbvp::MeshProblem mesh({200, 12.0, 2.0, 0.1});
    const auto base = mcbvp::base_solution(mesh);
    c.require(base.residual_norm <= 1e-12, "Newton residual");
    c.require(mcbvp::positivity_check(base.u0), "positivity");
    c.require(base.u0.maxCoeff() <= 12.0, "a-priori bound");
    for (Index m : {50, 100, 200}) {
        const mcbvp::MeshProblem mm({m, 12.0, 2.0, 0.1});
        c.require(degree::det_sign(mm.jacobian(0.0, mcbvp::base_solution(mm).u0)) == 1, "det sign +1");
    }
    const auto shot = oracles::shooting_solve(12.0, 2.0, 0.0, 200);
    const double gap = (shot.nodes - base.u0).cwiseAbs().maxCoeff();
    c.require(gap <= 5e-4, "shooting agreement");

    // residual of the exact u* = 0.5 sin(pi x) against its continuous value
    auto err = [](Index m) {
        const mcbvp::MeshProblem mp({m, 12.0, 2.0, 0.1});
        const double pi = std::numbers::pi;
        double worst = 0.0;
        Vector u(m), g(m);
        for (Index i = 0; i < m; ++i) {
            const double x = mp.x()(i);
            u(i) = 0.5 * std::sin(pi * x);
            g(i) = 0.5 * pi * pi * std::sin(pi * x) - 12.0 * u(i) + u(i) * u(i);
        }
        worst = (mp.residual(0.0, u) - g).cwiseAbs().maxCoeff();
        return worst;
    };
    const double e1 = err(49), e2 = err(99), e3 = err(199);
    const double o1 = std::log2(e1 / e2), o2 = std::log2(e2 / e3);
    c.require(o1 >= 1.8 && o1 <= 2.2 && o2 >= 1.8 && o2 <= 2.2, "observed order");
    c.detail << " residual=" << base.residual_norm << " max=" << base.u0.maxCoeff() << " shooting_gap=" << gap
             << " order=" << o1 << "," << o2;
}

void ac7(Criterion& c) {
    struct Setup {
        double delta;
        double lmin, lmax;
    };
    for (const Setup s : {Setup{0.1, -5.0, 5.0}, Setup{0.5, 0.0, 5.0}, Setup{0.9, 0.0, 5.0}}) {
        const mcbvp::MeshProblem mesh({200, 12.0, 2.0, s.delta});
        mcbvp::SystemOptions so;
        so.lambda_min = s.lmin;
        so.lambda_max = s.lmax;
        const auto sys = mcbvp::make_system(mesh, so);
        const auto base = mcbvp::base_solution(mesh);
        ct::StepControl ctl;
        ctl.h_max = 2.0;
        const double bound = 12.0 + 10.0 * mesh.h() * mesh.h();
        for (ct::Side side : {ct::Side::Plus, ct::Side::Minus}) {
            if (s.lmin >= 0.0 && side == ct::Side::Minus) continue;
            const auto b = ct::trace(sys, sys.domain, Point{0.0, base.u0}, side, ctl);
            std::size_t violations = 0;
            for (const auto& p : b.points) {
                if (!(p.u.cwiseAbs().maxCoeff() <= bound)) ++violations;
                if (p.lambda > 0.0 && !(mesh.max_gradient(p.u) < std::sqrt((1.0 - s.delta) / p.lambda))) ++violations;
            }
            c.require(violations == 0, "bounds on delta=" + std::to_string(s.delta));
            c.detail << " delta=" << s.delta << "/" << ct::to_string(side) << ":" << b.points.size() << "pts,"
                     << ct::to_string(b.classification);
        }
    }
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void ac8(Criterion& c) {
    double worst = 0.0;
    for (const auto& name : builtins::names()) {
        const auto bc = builtins::make(name);
        ct::StepControl a;
        ct::StepControl half = a;
        half.h_init = a.h_init / 2.0;
        for (ct::Side side : {ct::Side::Plus, ct::Side::Minus}) {
            const auto b1 = ct::trace(bc.system, bc.system.domain, bc.start, side, a);
            const auto b2 = ct::trace(bc.system, bc.system.domain, bc.start, side, half);
            c.require(b1.classification == b2.classification, name + " classification");
            if (b1.events.size() != b2.events.size()) {
                c.require(false, name + " event count");
                continue;
            }
            for (std::size_t k = 0; k < b1.events.size(); ++k)
                worst = std::max(worst, (b1.events[k].location.packed() - b2.events[k].location.packed()).norm());
        }
    }
    c.require(worst <= 1e-4, "event shift");
    c.detail << " max event shift=" << worst;

    const fs::path dir = fs::temp_directory_path() / "branchtrace_acceptance";
    fs::remove_all(dir);
    fs::create_directories(dir);
    std::ofstream(dir / "run.conf") << "problem = mcbvp\nm = 100\nside = both\nh_max = 2\n";
    std::ostringstream sink;
    const int r1 = app::run((dir / "run.conf").string(), {(dir / "a").string(), std::nullopt, std::nullopt}, sink);
    const int r2 = app::run((dir / "run.conf").string(), {(dir / "b").string(), std::nullopt, std::nullopt}, sink);
    c.require(r1 == 0 && r2 == 0, "runs succeed");
    bool same = true;
    for (const char* f : {"summary.csv", "events.json", "classification.json", "branch_plus.jsonl",
                          "branch_minus.jsonl", "states_plus.txt", "states_minus.txt"})
        same = same && slurp(dir / "a" / f) == slurp(dir / "b" / f) && !slurp(dir / "a" / f).empty();
    c.require(same, "byte-identical outputs");
}

void ac9(Criterion& c) {
    int agree = 0;
    for (std::uint64_t seed = 1000; seed < 1050; ++seed) {
        const int dim = 1 + static_cast<int>(seed % 2);
        const auto s = oracles::random_polynomial_slice(seed, dim);
        const int bd = degree::box_degree(s.f, s.jac, s.box, dim == 1 ? 200 : 40).degree;
        agree += bd == oracles::brute_force_degree(s.f, s.box, 4000);
    }
    c.require(agree == 50, "degree agreement");
    c.detail << " degree agreement " << agree << "/50;";

    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> uni(-2.0, 2.0);
    for (const auto& name : builtins::names()) {
        const auto bc = builtins::make(name);
        double worst = 0.0;
        for (int k = 0; k < 100; ++k) {
            const auto rep = validate_consistency(bc.system, Point{uni(rng), scalar(uni(rng))}, 1e-6);
            worst = std::max({worst, rep.jac_u_error, rep.jac_lambda_error});
        }
        c.require(worst <= 1e-6, name + " jacobian");
        c.detail << " " << name << "=" << worst;
    }
    const mcbvp::MeshProblem mesh({200, 12.0, 2.0, 0.1});
    const auto sys = mcbvp::make_system(mesh);
    const auto base = mcbvp::base_solution(mesh);
    std::uniform_real_distribution<double> lam(-3.0, 0.1);
    std::uniform_real_distribution<double> amp(0.2, 1.5);
    std::normal_distribution<double> noise(0.0, 1e-3);
    double worst = 0.0;
    int used = 0;
    while (used < 100) {
        Vector u = amp(rng) * base.u0;
        for (auto& x : u) x += noise(rng);
        const double l = lam(rng);
        if (!(mesh.margin(l, u) > 0.05)) continue;
        const auto rep = validate_consistency(sys, Point{l, u}, 1e-6);
        worst = std::max({worst, rep.jac_u_error, rep.jac_lambda_error});
        ++used;
    }
    c.require(worst <= 1e-6, "mcbvp jacobian");
    c.detail << " mcbvp=" << worst;
}

} // namespace

int main() {
    report("AC1", "degree balance on circle and fold", ac1);
    report("AC2", "alternative classifier", ac2);
    report("AC3", "degree axioms N, A, H and moving box", ac3);
    report("AC4", "parity", ac4);
    report("AC5", "Lyapunov-Schmidt reduction", ac5);
    report("AC6", "mean-curvature base state", ac6);
    report("AC7", "a-priori and Minkowski gradient bounds", ac7);
    report("AC8", "determinism and step-size robustness", ac8);
    report("AC9", "oracle agreement", ac9);
    return failures == 0 ? 0 : 1;
}
