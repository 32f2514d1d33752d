// stochmat: solve, generate and benchmark M/G/1-type matrix equations.
//
// Exit codes: 0 success, 1 bad input (parse, validation, I/O, flags),
// 2 no convergence, 3 benchmark solutions disagree, 4 --check failed.

#include "stochmat/bench.hpp"
#include "stochmat/generator.hpp"
#include "stochmat/io.hpp"
#include "stochmat/oracle.hpp"
#include "stochmat/solvers.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace stochmat;

constexpr int kExitOk = 0;
constexpr int kExitInput = 1;
constexpr int kExitNotConverged = 2;
constexpr int kExitDisagreement = 3;
constexpr int kExitCheck = 4;

struct SolveFlags {
    std::string input;
    std::string algo = "ns";
    std::string nk = "3";
    double tol = 1e-12;
    int max_outer = 100;
    std::string output;
    std::string log;
    bool check = false;
    bool drift = false;
};

struct GenFlags {
    Index m = 4;
    Index N = 2;
    std::uint64_t seed = 1;
    double decay = 0.5;
    double mass0 = 0.6;
    std::string mode = "full";
    Index r = 1;
    std::string output;
};

struct BenchFlags {
    std::string suite;
    std::vector<std::string> inputs;
    std::string algos = "ns:nk=4,newton";
    int repeat = 3;
    double tol = 1e-12;
    int max_outer = 100;
    double decay = 0.5;
    double mass0 = 0.6;
    std::string output;
};

SolverConfig make_config(const SolveFlags& f)
{
    SolverConfig cfg;
    cfg.tol = f.tol;
    cfg.max_outer = f.max_outer;
    if (f.algo == "newton") {
        cfg.algorithm = Algorithm::Newton;
        cfg.inner_schedule = FixedSchedule{1};
    } else if (f.algo == "fi") {
        cfg.algorithm = Algorithm::FunctionalIteration;
    } else {
        cfg.algorithm = Algorithm::NewtonShamanskii;
        if (f.nk == "auto") {
            cfg.inner_schedule = AdaptiveSchedule{};
        } else {
            int n = 0;
            try {
                std::size_t used = 0;
                n = std::stoi(f.nk, &used);
                if (used != f.nk.size()) n = 0;
            } catch (const std::exception&) {
                n = 0;
            }
            if (n <= 0) throw Error("--nk must be a positive integer or 'auto'");
            cfg.inner_schedule = FixedSchedule{n};
        }
    }
    return cfg;
}

/// The drift model of a parsed file: row-stochastic blocks in every case.
MG1Model drift_blocks(const io::AnyModel& model)
{
    if (const auto* g = std::get_if<GIM1Model>(&model)) return MG1Model{g->A};
    return as_full(model);
}

SolveReport dispatch(const io::AnyModel& model, const std::string& algo, const SolverConfig& cfg)
{
    const bool u = algo == "u";
    if (const auto* g = std::get_if<GIM1Model>(&model)) {
        if (u) throw Error("--algo u is not available for kind gim1");
        return solve_R(*g, cfg);
    }
    if (const auto* d = std::get_if<LowRankDownModel>(&model)) {
        if (u) return solve_U(d->to_full(), cfg);
        return solve_G_lowrank_down(*d, cfg);
    }
    if (const auto* up = std::get_if<LowRankUpModel>(&model)) {
        if (u) return solve_U(*up, cfg);
        return solve_G(up->to_full(), cfg);
    }
    const auto& full = std::get<MG1Model>(model);
    return u ? solve_U(full, cfg) : solve_G(full, cfg);
}

/// Dense cross-checks of a converged G against the Kronecker references.
bool run_check(const MG1Model& model, const Matrix& G)
{
    const Index m = model.dim();
    if (m * m > kSizeGuard) {
        std::cout << "check: skipped (m*m = " << m * m << " > 4096)\n";
        return true;
    }
    if (model.degree() == 0) {
        std::cout << "check: trivial model (N = 0)\n";
        return true;
    }
    const Matrix J = oracle::jacobian_kron(model, G);
    const Vector r = oracle::vec(residual(model, G));
    const Vector step = J.fullPivLu().solve(r);
    const double newton_step = step.cwiseAbs().maxCoeff();

    auto S = build_S(model, G);
    StructuredOperator op;
    op.B.push_back(S[0] - Matrix::Identity(m, m));
    for (std::size_t j = 1; j < S.size(); ++j) op.B.push_back(S[j]);
    op.C = G;
    Matrix E(m, m);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) E(i, j) = 1.0 + static_cast<double>((i * 7 + j * 3) % 5) / 5.0;
    }
    const Matrix xs = StructuredFactorization(op).solve(E);
    const Matrix xk = oracle::kron_solve(op.B, op.C, E);
    const double rel = norm_inf(xs - xk) / std::max(norm_inf(xk), 1e-300);
    const auto mclass = oracle::m_matrix_check(J);

    std::cout << "check: sylvester_vs_kron=" << io::format_double(rel)
              << " kron_newton_step=" << io::format_double(newton_step)
              << " jacobian=" << oracle::to_string(mclass) << '\n';
    const bool ok = rel <= 1e-10 && newton_step <= 1e-8;
    if (!ok) std::cout << "check: FAILED\n";
    return ok;
}

void print_summary(const std::string& algo, const SolveReport& rep, const std::optional<double>& rho)
{
    const double res = rep.residual_history.empty() ? rep.initial_residual : rep.residual_history.back();
    std::cout << "algo=" << algo << " outer=" << rep.outer_count << " inner_total=" << rep.inner_total()
              << " fact=" << rep.factorization_count << " residual=" << io::format_double(res)
              << " rho=" << (rho ? io::format_double(*rho) : std::string("nan")) << '\n';
    for (const auto& w : rep.warnings) std::cerr << "warning: " << w << '\n';
}

int cmd_solve(const SolveFlags& f)
{
    io::AnyModel model;
    SolverConfig cfg;
    try {
        model = io::load_model(f.input);
        cfg = make_config(f);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }

    std::optional<DriftReport> d;
    try {
        d = drift(drift_blocks(model));
    } catch (const Error& e) {
        std::cerr << "warning: drift unavailable: " << e.what() << '\n';
    }
    if (f.drift && d) {
        std::cout << "rho=" << io::format_double(d->rho) << " class=" << to_string(d->recurrence) << '\n';
    }
    const std::optional<double> rho = d ? std::optional<double>(d->rho) : std::nullopt;

    SolveReport rep;
    try {
        rep = dispatch(model, f.algo, cfg);
    } catch (const NotConverged& e) {
        print_summary(f.algo, e.report(), rho);
        std::cerr << "error: " << e.what() << '\n';
        try {
            io::write_report(e.report(), f.output, f.log);
        } catch (const io::IoError& ioe) {
            std::cerr << "error: " << ioe.what() << '\n';
        }
        return kExitNotConverged;
    } catch (const SingularColumnSystem& e) {
        std::cerr << "error: " << e.what() << '\n';
        if (d && d->recurrence == RecurrenceClass::NullRecurrent) std::cerr << "warning: NullRecurrent model\n";
        return kExitNotConverged;
    } catch (const NearSingularIminusU& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitNotConverged;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }

    print_summary(f.algo, rep, rho);
    try {
        io::write_report(rep, f.output, f.log);
    } catch (const io::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    if (f.check) {
        // For GI/M/1 input the transposed equation is the one actually solved.
        const MG1Model full = as_full(model);
        const Matrix G = std::holds_alternative<GIM1Model>(model) ? Matrix(rep.G.transpose()) : rep.G;
        if (!run_check(full, G)) return kExitCheck;
    }
    return kExitOk;
}

int cmd_gen(const GenFlags& f)
{
    GeneratorParams p;
    p.m = f.m;
    p.N = f.N;
    p.seed = f.seed;
    p.decay = f.decay;
    p.mass0 = f.mass0;
    p.r = f.r;
    if (f.mode == "full") p.mode = GeneratorMode::Full;
    else if (f.mode == "down") p.mode = GeneratorMode::Down;
    else if (f.mode == "up") p.mode = GeneratorMode::Up;
    else {
        std::cerr << "error: --mode must be full, down or up\n";
        return kExitInput;
    }
    try {
        const io::AnyModel model = generate(p);
        std::ostringstream comment;
        comment << "generated: m=" << f.m << " N=" << f.N << " seed=" << f.seed << " decay="
                << io::format_double(f.decay) << " mass0=" << io::format_double(f.mass0) << " mode=" << f.mode;
        if (p.mode != GeneratorMode::Full) comment << " r=" << f.r;
        const std::string text = io::serialize_model(model, comment.str());
        if (f.output.empty()) std::cout << text;
        else io::write_text(f.output, text);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    return kExitOk;
}

int cmd_bench(const BenchFlags& f)
{
    std::vector<bench::Instance> instances;
    std::vector<bench::AlgoSpec> algos;
    try {
        algos = bench::parse_algos(f.algos);
        if (!f.suite.empty()) {
            GeneratorParams base;
            base.decay = f.decay;
            base.mass0 = f.mass0;
            instances = bench::suite_instances(bench::parse_suite(f.suite), base);
        }
        for (const auto& path : f.inputs) instances.push_back({path, as_full(io::load_model(path))});
        if (instances.empty()) throw Error("bench needs --suite or -i FILE");
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }

    bench::BenchOptions opt;
    opt.repeat = f.repeat;
    opt.tol = f.tol;
    opt.max_outer = f.max_outer;
    bench::BenchResult result;
    try {
        result = bench::run(instances, algos, opt);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }

    std::cout << bench::format_table(result);
    const std::string json = bench::to_json(result).dump(2) + "\n";
    try {
        if (f.output.empty()) std::cout << json;
        else io::write_text(f.output, json);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInput;
    }
    if (result.fatal_disagreement()) {
        std::cerr << "error: converged solutions disagree by " << result.max_disagreement << '\n';
        return kExitDisagreement;
    }
    if (result.max_disagreement > bench::kAgreement) {
        std::cerr << "warning: converged solutions disagree by " << result.max_disagreement << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Minimal nonnegative solutions of M/G/1- and GI/M/1-type matrix equations"};
    app.require_subcommand(1);

    SolveFlags sf;
    auto* solve = app.add_subcommand("solve", "Solve a model file");
    solve->add_option("-i,--input", sf.input, "Model file")->required();
    solve->add_option("--algo", sf.algo, "ns | newton | fi | u")
        ->check(CLI::IsMember({"ns", "newton", "fi", "u"}));
    solve->add_option("--nk", sf.nk, "Inner steps per factorization, or 'auto'");
    solve->add_option("--tol", sf.tol, "Stopping tolerance on the residual infinity norm");
    solve->add_option("--max-outer", sf.max_outer, "Outer iteration cap");
    solve->add_option("-o,--output", sf.output, "Solution CSV");
    solve->add_option("--log", sf.log, "Iteration log CSV");
    solve->add_flag("--check", sf.check, "Verify against the dense Kronecker references");
    solve->add_flag("--drift", sf.drift, "Print the drift and recurrence class");

    GenFlags gf;
    auto* gen = app.add_subcommand("gen", "Generate a random model");
    gen->add_option("-m", gf.m, "Block dimension")->required();
    gen->add_option("-N", gf.N, "Highest block index")->required();
    gen->add_option("--seed", gf.seed, "RNG seed");
    gen->add_option("--decay", gf.decay, "Geometric damping of higher blocks");
    gen->add_option("--mass0", gf.mass0, "Row mass assigned to A_0");
    gen->add_option("--mode", gf.mode, "full | down | up");
    gen->add_option("-r", gf.r, "Rank for low-rank modes");
    gen->add_option("-o,--output", gf.output, "Output file (stdout if omitted)");

    BenchFlags bf;
    auto* bench_cmd = app.add_subcommand("bench", "Compare algorithms on a suite of instances");
    bench_cmd->add_option("--suite", bf.suite, "m=LIST,N=LIST,seeds=LIST");
    bench_cmd->add_option("-i,--input", bf.inputs, "Model files");
    bench_cmd->add_option("--algos", bf.algos, "e.g. ns:nk=4,newton,fi");
    bench_cmd->add_option("--repeat", bf.repeat, "Repeats per algorithm (median wall time)");
    bench_cmd->add_option("--tol", bf.tol, "Stopping tolerance");
    bench_cmd->add_option("--max-outer", bf.max_outer, "Outer iteration cap");
    bench_cmd->add_option("--decay", bf.decay, "Generator decay for --suite");
    bench_cmd->add_option("--mass0", bf.mass0, "Generator mass0 for --suite");
    bench_cmd->add_option("-o,--output", bf.output, "JSON output file (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitInput;
    }

    if (solve->parsed()) return cmd_solve(sf);
    if (gen->parsed()) return cmd_gen(gf);
    return cmd_bench(bf);
}
