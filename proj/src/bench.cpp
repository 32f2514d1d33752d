#include "stochmat/bench.hpp"

#include <algorithm>
#include <charconv>
#include <iomanip>
#include <sstream>

namespace stochmat::bench {

namespace {

std::vector<std::string> split(const std::string& text, char sep)
{
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(text);
    while (std::getline(is, cur, sep)) {
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

template <typename T>
T to_number(const std::string& s, const char* what)
{
    T value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw Error(std::string("cannot parse ") + what + " '" + s + "'");
    }
    return value;
}

AlgoResult run_once(const Instance& inst, const AlgoSpec& spec, const BenchOptions& opt)
{
    SolverConfig cfg;
    cfg.tol = opt.tol;
    cfg.max_outer = opt.max_outer;
    cfg.algorithm = spec.algorithm;
    cfg.inner_schedule = spec.schedule;

    auto fill = [](AlgoResult& r, const SolveReport& rep) {
        r.converged = rep.converged;
        r.residual = rep.residual_history.empty() ? rep.initial_residual : rep.residual_history.back();
        r.outer = rep.outer_count;
        r.inner_total = rep.inner_total();
        r.factorizations = rep.factorization_count;
        r.wall_ns_median = rep.times.total_ns;
        r.G = rep.G;
    };

    AlgoResult r;
    try {
        fill(r, spec.u_iteration ? solve_U(inst.model, cfg) : solve_G(inst.model, cfg));
    } catch (const NotConverged& e) {
        fill(r, e.report());
        r.error = e.what();
    } catch (const Error& e) {
        r.converged = false;
        r.error = e.what();
    }
    return r;
}

}  // namespace

std::int64_t median(std::vector<std::int64_t> values)
{
    if (values.empty()) return 0;
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    if (n % 2 == 1) return values[n / 2];
    return (values[n / 2 - 1] + values[n / 2]) / 2;
}

std::vector<AlgoSpec> parse_algos(const std::string& text)
{
    std::vector<AlgoSpec> out;
    for (const auto& tok : split(text, ',')) {
        AlgoSpec spec;
        spec.name = tok;
        const auto colon = tok.find(':');
        const std::string base = tok.substr(0, colon);
        std::string option = colon == std::string::npos ? "" : tok.substr(colon + 1);
        if (base == "ns" || base == "u") {
            spec.algorithm = Algorithm::NewtonShamanskii;
            spec.u_iteration = base == "u";
            if (!option.empty()) {
                if (option.rfind("nk=", 0) != 0) throw Error("unknown algorithm option '" + option + "'");
                const std::string nk = option.substr(3);
                if (nk == "auto") {
                    spec.schedule = AdaptiveSchedule{};
                } else {
                    const int n = to_number<int>(nk, "nk");
                    if (n <= 0) throw Error("nk must be positive");
                    spec.schedule = FixedSchedule{n};
                }
            }
        } else if (base == "newton" && option.empty()) {
            spec.algorithm = Algorithm::Newton;
            spec.schedule = FixedSchedule{1};
        } else if (base == "fi" && option.empty()) {
            spec.algorithm = Algorithm::FunctionalIteration;
        } else {
            throw Error("unknown algorithm '" + tok + "'");
        }
        out.push_back(std::move(spec));
    }
    if (out.empty()) throw Error("no algorithms given");
    return out;
}

SuiteSpec parse_suite(const std::string& text)
{
    SuiteSpec suite;
    std::string key;
    for (const auto& tok : split(text, ',')) {
        std::string value = tok;
        if (const auto eq = tok.find('='); eq != std::string::npos) {
            key = tok.substr(0, eq);
            value = tok.substr(eq + 1);
        }
        if (key == "m") suite.m.push_back(to_number<Index>(value, "m"));
        else if (key == "N") suite.N.push_back(to_number<Index>(value, "N"));
        else if (key == "seeds") suite.seeds.push_back(to_number<std::uint64_t>(value, "seed"));
        else throw Error("unknown suite key '" + key + "'");
    }
    if (suite.m.empty() || suite.N.empty() || suite.seeds.empty()) {
        throw Error("suite needs m=, N= and seeds= lists");
    }
    return suite;
}

std::vector<Instance> suite_instances(const SuiteSpec& suite, const GeneratorParams& base)
{
    std::vector<Instance> out;
    for (Index m : suite.m) {
        for (Index N : suite.N) {
            for (std::uint64_t seed : suite.seeds) {
                GeneratorParams p = base;
                p.m = m;
                p.N = N;
                p.seed = seed;
                p.mode = GeneratorMode::Full;
                std::ostringstream id;
                id << "m" << m << "_N" << N << "_s" << seed;
                out.push_back({id.str(), generate_full(p)});
            }
        }
    }
    return out;
}

BenchResult run(const std::vector<Instance>& instances, const std::vector<AlgoSpec>& algos,
                const BenchOptions& options)
{
    if (options.repeat <= 0) throw Error("repeat must be positive");
    BenchResult result;
    for (const auto& inst : instances) {
        InstanceResult ir;
        ir.id = inst.id;
        ir.m = inst.model.dim();
        ir.N = inst.model.degree();
        try {
            ir.rho = drift(inst.model).rho;
            ir.rho_known = true;
        } catch (const Error&) {
            ir.rho_known = false;
        }
        for (const auto& spec : algos) {
            std::vector<std::int64_t> times;
            AlgoResult first;
            for (int rep = 0; rep < options.repeat; ++rep) {
                AlgoResult r = run_once(inst, spec, options);
                times.push_back(r.wall_ns_median);
                if (rep == 0) first = std::move(r);
            }
            first.wall_ns_median = median(times);
            ir.algos.emplace_back(spec.name, std::move(first));
        }
        for (std::size_t a = 0; a < ir.algos.size(); ++a) {
            for (std::size_t b = a + 1; b < ir.algos.size(); ++b) {
                const auto& ra = ir.algos[a].second;
                const auto& rb = ir.algos[b].second;
                if (!ra.converged || !rb.converged) continue;
                ir.max_disagreement = std::max(ir.max_disagreement, norm_inf(ra.G - rb.G));
            }
        }
        result.max_disagreement = std::max(result.max_disagreement, ir.max_disagreement);
        result.instances.push_back(std::move(ir));
    }
    return result;
}

nlohmann::ordered_json to_json(const BenchResult& result)
{
    nlohmann::ordered_json root;
    root["instances"] = nlohmann::ordered_json::array();
    for (const auto& ir : result.instances) {
        nlohmann::ordered_json j;
        j["id"] = ir.id;
        j["m"] = ir.m;
        j["N"] = ir.N;
        j["rho"] = ir.rho_known ? nlohmann::ordered_json(ir.rho) : nlohmann::ordered_json(nullptr);
        j["max_disagreement"] = ir.max_disagreement;
        nlohmann::ordered_json algos = nlohmann::ordered_json::object();
        for (const auto& [name, r] : ir.algos) {
            nlohmann::ordered_json a;
            a["converged"] = r.converged;
            a["residual"] = r.residual;
            a["outer"] = r.outer;
            a["inner_total"] = r.inner_total;
            a["factorizations"] = r.factorizations;
            a["wall_ns_median"] = r.wall_ns_median;
            algos[name] = std::move(a);
        }
        j["algos"] = std::move(algos);
        root["instances"].push_back(std::move(j));
    }
    return root;
}

std::string format_table(const BenchResult& result)
{
    std::ostringstream os;
    os << std::left << std::setw(18) << "instance" << std::setw(10) << "rho" << std::setw(14) << "algo"
       << std::setw(6) << "conv" << std::setw(7) << "outer" << std::setw(7) << "inner" << std::setw(6) << "fact"
       << std::setw(12) << "residual" << std::setw(14) << "wall_ms" << "ratio\n";
    for (const auto& ir : result.instances) {
        const double base = ir.algos.empty() ? 0.0 : static_cast<double>(ir.algos.front().second.wall_ns_median);
        for (const auto& [name, r] : ir.algos) {
            std::ostringstream rho;
            rho << std::setprecision(4) << ir.rho;
            std::ostringstream res;
            res << std::scientific << std::setprecision(2) << r.residual;
            std::ostringstream ms;
            ms << std::fixed << std::setprecision(3) << static_cast<double>(r.wall_ns_median) * 1e-6;
            std::ostringstream ratio;
            ratio << std::fixed << std::setprecision(3)
                  << (base > 0.0 ? static_cast<double>(r.wall_ns_median) / base : 0.0);
            os << std::left << std::setw(18) << ir.id << std::setw(10) << (ir.rho_known ? rho.str() : "?")
               << std::setw(14) << name << std::setw(6) << (r.converged ? "yes" : "no") << std::setw(7) << r.outer
               << std::setw(7) << r.inner_total << std::setw(6) << r.factorizations << std::setw(12) << res.str()
               << std::setw(14) << ms.str() << ratio.str() << '\n';
        }
    }
    return os.str();
}

}  // namespace stochmat::bench
