// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and runtime limits are the documented ones; do not relax.

#include "stochmat/bench.hpp"
#include "stochmat/generator.hpp"
#include "stochmat/oracle.hpp"
#include "stochmat/solvers.hpp"
#include "support/reference.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

using namespace stochmat;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (pass) detail = why;
        pass = false;
    }
};

std::string sci(double x)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", x);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct Case {
    std::string id;
    MG1Model model;
    double rho = 0.0;
    Matrix G_oracle;
    Matrix G_ns;
};

/// 50 instances, m <= 8, N <= 4, drift alternating between [0.5, 0.95] and
/// [1.1, 1.5]. Undamped blocks and N >= 3 keep drifts up to 1.5 reachable.
std::vector<Case> make_cases()
{
    std::vector<Case> out;
    std::mt19937_64 rng(2024);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 50; ++k) {
        const bool transient = k % 2 == 1;
        GeneratorParams p;
        p.m = 1 + k % 8;
        p.N = transient ? 3 + (k / 2) % 2 : 2 + k % 3;
        p.decay = 1.0;
        p.seed = 1000 + static_cast<std::uint64_t>(k);
        const double target = transient ? 1.1 + 0.4 * u(rng) : 0.5 + 0.45 * u(rng);
        Case c;
        c.model = std::get<MG1Model>(generate_with_drift(p, target));
        c.rho = drift(c.model).rho;
        c.id = "m" + std::to_string(p.m) + "_N" + std::to_string(p.N) + "_k" + std::to_string(k);
        out.push_back(std::move(c));
    }
    return out;
}

MG1Model scalar(std::initializer_list<double> values)
{
    MG1Model model;
    for (double v : values) model.A.push_back(Matrix::Constant(1, 1, v));
    return model;
}

Outcome criterion_scalar_golden()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const MG1Model q = scalar({0.2, 0.3, 0.5});
    const double g = ref::scalar_quadratic_root(0.2, 0.3, 0.5);
    double worst = 0.0;

    auto check = [&](const std::string& name, const SolveReport& r) {
        const double err = std::abs(r.G(0, 0) - g);
        worst = std::max(worst, err);
        if (!(err <= 1e-12)) o.fail(name + " error " + sci(err));
    };
    for (int n = 1; n <= 5; ++n) {
        SolverConfig cfg;
        cfg.inner_schedule = FixedSchedule{n};
        check("ns nk=" + std::to_string(n), solve_G(q, cfg));
    }
    SolverConfig newton;
    newton.algorithm = Algorithm::Newton;
    check("newton", solve_G(q, newton));
    // The residual bound only certifies |G - g| <= tol / (1 - 0.7) for the
    // linearly convergent fixed point, so it is run to a tighter residual.
    SolverConfig fi;
    fi.algorithm = Algorithm::FunctionalIteration;
    fi.tol = 1e-14;
    fi.max_outer = 1000;
    check("fi", solve_G(q, fi));
    check("u", solve_U(q));

    const DriftReport d = drift(q);
    const double rho_expect = ref::scalar_drift({0.2, 0.3, 0.5});
    if (!(std::abs(d.rho - rho_expect) <= 1e-15)) o.fail("rho = " + std::to_string(d.rho));
    if (d.recurrence != RecurrenceClass::Transient) o.fail("class is " + to_string(d.recurrence));

    const double secs = seconds_since(t0);
    if (!(secs < 1.0)) o.fail("runtime " + std::to_string(secs) + " s");
    if (o.pass) {
        o.detail = "max |G-0.4| = " + sci(worst) + ", rho = " + std::to_string(d.rho) + " Transient, " +
                   std::to_string(secs) + " s";
    }
    return o;
}

Outcome criterion_oracle_equivalence(std::vector<Case>& cases)
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    double worst_inner = 0.0;
    double worst_final = 0.0;
    long systems = 0;
    for (auto& c : cases) {
        SolverConfig cfg;
        cfg.inspect = [&](const InnerSystemView& v) {
            const Matrix Xk = oracle::kron_solve(v.op.B, v.op.C, v.rhs);
            const double scale = ref::max_abs(Xk);
            const double diff = ref::max_abs(v.solution - Xk);
            const double rel = scale > 0.0 ? diff / scale : (diff == 0.0 ? 0.0 : INFINITY);
            worst_inner = std::max(worst_inner, rel);
            ++systems;
            if (!(rel <= 1e-10)) o.fail(c.id + " inner system relative error " + sci(rel));
        };
        c.G_ns = solve_G(c.model, cfg).G;
        const auto fo = oracle::functional_oracle(c.model, 1000000, 1e-15);
        c.G_oracle = fo.G;
        const double err = ref::max_abs(c.G_ns - c.G_oracle);
        worst_final = std::max(worst_final, err);
        if (!(err <= 1e-7)) o.fail(c.id + " final error vs oracle " + sci(err));
    }
    const double secs = seconds_since(t0);
    if (!(secs < 120.0)) o.fail("runtime " + std::to_string(secs) + " s");
    if (o.pass) {
        o.detail = std::to_string(systems) + " inner systems, max rel " + sci(worst_inner) + "; max final " +
                   sci(worst_final) + ", " + std::to_string(secs) + " s";
    }
    return o;
}

Outcome criterion_monotone(const std::vector<Case>& cases)
{
    Outcome o;
    double worst_drop = 0.0;
    double worst_excess = -INFINITY;
    double worst_residual = INFINITY;
    std::size_t iterates = 0;
    for (const auto& c : cases) {
        SolverConfig cfg;
        cfg.record_iterates = true;
        const SolveReport r = solve_G(c.model, cfg);
        if (!r.iterates.front().isZero(0.0)) o.fail(c.id + " does not start at zero");
        for (std::size_t i = 0; i < r.iterates.size(); ++i) {
            const Matrix& X = r.iterates[i];
            ++iterates;
            if (i > 0) {
                const double drop = (X - r.iterates[i - 1]).minCoeff();
                worst_drop = std::min(worst_drop, drop);
                if (!(drop >= -1e-14)) o.fail(c.id + " iterate decreased by " + sci(-drop));
            }
            const double excess = (X - c.G_oracle).maxCoeff();
            worst_excess = std::max(worst_excess, excess);
            if (!(excess <= 1e-7)) o.fail(c.id + " iterate above oracle by " + sci(excess));
            const double res = residual(c.model, X).minCoeff();
            worst_residual = std::min(worst_residual, res);
            if (!(res >= -1e-12)) o.fail(c.id + " residual entry " + sci(res));
        }
    }
    if (o.pass) {
        o.detail = std::to_string(iterates) + " iterates, min step " + sci(worst_drop) + ", max excess " +
                   sci(worst_excess) + ", min residual " + sci(worst_residual);
    }
    return o;
}

Outcome criterion_stochasticity(const std::vector<Case>& cases)
{
    Outcome o;
    double worst_rec = 0.0;
    double min_deficit = INFINITY;
    int recurrent = 0, transient = 0;
    for (const auto& c : cases) {
        const Vector rows = c.G_ns.rowwise().sum();
        if (c.rho < 1.0) {
            ++recurrent;
            const double err = (rows.array() - 1.0).abs().maxCoeff();
            worst_rec = std::max(worst_rec, err);
            if (!(err <= 1e-8)) o.fail(c.id + " |Ge - e| = " + sci(err));
        } else {
            ++transient;
            // Largest per-row deficit must be strictly positive.
            const double deficit = (1.0 - rows.array()).maxCoeff();
            min_deficit = std::min(min_deficit, deficit);
            if (!(deficit > 0.0)) o.fail(c.id + " has no row deficit");
        }
    }
    if (o.pass) {
        o.detail = std::to_string(recurrent) + " recurrent (max |Ge-e| " + sci(worst_rec) + "), " +
                   std::to_string(transient) + " transient (min deficit " + sci(min_deficit) + ")";
    }
    return o;
}

Outcome criterion_jacobian(const std::vector<Case>& cases)
{
    Outcome o;
    int checked = 0;
    for (const auto& c : cases) {
        if (c.model.dim() > 6 || !(std::abs(c.rho - 1.0) > 1e-3)) continue;
        ++checked;
        const auto cls = oracle::m_matrix_check(oracle::jacobian_kron(c.model, c.G_ns));
        if (cls != oracle::MMatrixClass::NonsingularM) o.fail(c.id + " classified " + oracle::to_string(cls));
    }
    if (checked == 0) o.fail("no eligible instances");
    if (o.pass) o.detail = std::to_string(checked) + " Jacobians are nonsingular M-matrices";
    return o;
}

Outcome criterion_low_rank()
{
    Outcome o;
    double worst_down = 0.0;
    double worst_up = 0.0;
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int k = 0; k < 20; ++k) {
        const bool transient = k % 2 == 1;
        const double target = transient ? 1.1 + 0.4 * u(rng) : 0.5 + 0.45 * u(rng);
        GeneratorParams p;
        p.m = 2 + k % 7;
        p.N = transient ? 3 + (k / 2) % 2 : 2 + k % 3;
        p.decay = 1.0;
        p.r = 1 + k % (p.m - 1);
        p.seed = 500 + static_cast<std::uint64_t>(k);

        p.mode = GeneratorMode::Down;
        const auto down = std::get<LowRankDownModel>(generate_with_drift(p, target));
        const SolveReport rd = solve_G_lowrank_down(down);
        const double ed = ref::max_abs(rd.G - solve_G(down.to_full()).G);
        worst_down = std::max(worst_down, ed);
        if (!(ed <= 1e-9)) o.fail("down k=" + std::to_string(k) + " differs by " + sci(ed));

        p.mode = GeneratorMode::Up;
        const auto up = std::get<LowRankUpModel>(generate_with_drift(p, target));
        SolverConfig cfg;
        bool shapes_ok = true;
        cfg.inspect = [&](const InnerSystemView& v) {
            shapes_ok = shapes_ok && v.op.q() == p.r && v.op.p() == p.m && v.rhs.rows() == p.r &&
                        v.rhs.cols() == p.m && v.solution.rows() == p.r && v.solution.cols() == p.m;
        };
        const SolveReport ru = solve_U(up, cfg);
        if (ru.unknown_rows != p.r || ru.unknown_cols != p.m || !shapes_ok) {
            o.fail("up k=" + std::to_string(k) + " unknown is " + std::to_string(ru.unknown_rows) + "x" +
                   std::to_string(ru.unknown_cols) + ", expected " + std::to_string(p.r) + "x" + std::to_string(p.m));
        }
        const double eu = ref::max_abs(ru.G - solve_G(up.to_full()).G);
        worst_up = std::max(worst_up, eu);
        if (!(eu <= 1e-9)) o.fail("up k=" + std::to_string(k) + " differs by " + sci(eu));
    }
    if (o.pass) o.detail = "down max " + sci(worst_down) + ", up max " + sci(worst_up) + ", up unknowns r x m";
    return o;
}

Outcome criterion_frechet()
{
    Outcome o;
    double worst = 0.0;
    std::mt19937_64 rng(31);
    for (int k = 0; k < 20; ++k) {
        const Index m = 1 + k % 6;
        const MG1Model model = ref::random_stochastic_model(rng, m, 1 + k % 4);
        const Matrix X = ref::random_matrix(rng, m, m, 0.0, 1.0 / static_cast<double>(m));
        Matrix Z = ref::random_matrix(rng, m, m);
        Z /= ref::inf_norm(Z);
        const double h = 1e-5 * std::max(1.0, ref::inf_norm(X));
        const Matrix fd = ((ref::naive_poly(model.A, X + h * Z) - (X + h * Z)) -
                           (ref::naive_poly(model.A, X - h * Z) - (X - h * Z))) /
                          (2.0 * h);
        const Matrix d = oracle::frechet_apply(model, X, Z);
        const double rel = ref::inf_norm(fd - d) / ref::inf_norm(d);
        worst = std::max(worst, rel);
        if (!(rel <= 1e-6)) o.fail("triple " + std::to_string(k) + " relative error " + sci(rel));
    }
    if (o.pass) o.detail = "20 triples, max relative error " + sci(worst);
    return o;
}

Outcome criterion_efficiency()
{
    Outcome o;
    const auto t0 = std::chrono::steady_clock::now();
    const auto instances = bench::suite_instances(bench::parse_suite("m=100,N=10,seeds=1,2,3,4,5"));
    bench::BenchOptions opt;
    opt.repeat = 1;
    opt.tol = 1e-12;
    const auto res = bench::run(instances, bench::parse_algos("ns:nk=4,newton"), opt);
    std::ostringstream summary;
    for (const auto& ir : res.instances) {
        const auto& ns = ir.algos[0].second;
        const auto& nt = ir.algos[1].second;
        if (!ns.converged || !nt.converged) o.fail(ir.id + " did not converge");
        if (!(ns.factorizations < nt.factorizations)) {
            o.fail(ir.id + " ns " + std::to_string(ns.factorizations) + " vs newton " +
                   std::to_string(nt.factorizations) + " factorizations");
        }
        const double diff = ref::max_abs(ns.G - nt.G);
        if (!(diff <= 1e-8)) o.fail(ir.id + " solutions differ by " + sci(diff));
        char buf[96];
        std::snprintf(buf, sizeof buf, " %s:%d/%d(t=%.2f)", ir.id.c_str(), ns.factorizations, nt.factorizations,
                      nt.wall_ns_median > 0 ? static_cast<double>(ns.wall_ns_median) / nt.wall_ns_median : 0.0);
        summary << buf;
    }
    const double secs = seconds_since(t0);
    if (!(secs < 300.0)) o.fail("runtime " + std::to_string(secs) + " s");
    if (o.pass) o.detail = "fact ns/newton, wall ratio ns/newton:" + summary.str() + ", " + std::to_string(secs) + " s";
    return o;
}

Outcome criterion_schedule_identity()
{
    Outcome o;
    std::size_t compared = 0;
    for (int k = 0; k < 10; ++k) {
        GeneratorParams p;
        p.m = 2 + k % 6;
        p.N = 2 + k % 3;
        p.seed = 900 + static_cast<std::uint64_t>(k);
        p.decay = 1.0;
        const MG1Model model = std::get<MG1Model>(generate_with_drift(p, k % 2 == 0 ? 0.8 : 1.25));
        SolverConfig a;
        a.inner_schedule = FixedSchedule{1};
        a.record_iterates = true;
        SolverConfig b;
        b.algorithm = Algorithm::Newton;
        b.record_iterates = true;
        const SolveReport ra = solve_G(model, a);
        const SolveReport rb = solve_G(model, b);
        if (ra.iterates.size() != rb.iterates.size()) {
            o.fail("instance " + std::to_string(k) + " iterate counts differ");
            continue;
        }
        for (std::size_t i = 0; i < ra.iterates.size(); ++i) {
            ++compared;
            if (!(ra.iterates[i] == rb.iterates[i])) o.fail("instance " + std::to_string(k) + " iterate " + std::to_string(i));
        }
    }
    if (o.pass) o.detail = std::to_string(compared) + " iterates bit-identical";
    return o;
}

}  // namespace

int main()
{
    std::vector<Case> cases = make_cases();
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
        {"scalar golden", criterion_scalar_golden},
        {"oracle equivalence", [&] { return criterion_oracle_equivalence(cases); }},
        {"monotone convergence", [&] { return criterion_monotone(cases); }},
        {"stochasticity and classification", [&] { return criterion_stochasticity(cases); }},
        {"Jacobian M-matrix", [&] { return criterion_jacobian(cases); }},
        {"low-rank equivalence", criterion_low_rank},
        {"Frechet correctness", criterion_frechet},
        {"efficiency (factorization counts)", criterion_efficiency},
        {"Newton/NS schedule identity", criterion_schedule_identity},
    };

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        if (!o.pass) ++failures;
        std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
    return failures == 0 ? 0 : 1;
}
