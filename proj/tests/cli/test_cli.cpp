#include "catch_amalgamated.hpp"

#include "stochmat/generator.hpp"
#include "stochmat/io.hpp"
#include "support/reference.hpp"

#include <nlohmann/json.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#ifndef STOCHMAT_CLI_PATH
#error "STOCHMAT_CLI_PATH must point at the stochmat executable"
#endif

namespace fs = std::filesystem;
using namespace stochmat;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;

namespace {

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

fs::path workdir()
{
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / ("stochmat_cli_" + std::to_string(::getpid()));
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Run run(const std::string& args)
{
    const fs::path out = workdir() / "stdout.txt";
    const fs::path err = workdir() / "stderr.txt";
    const std::string cmd = std::string("\"") + STOCHMAT_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                            err.string() + "\"";
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
}

fs::path write(const std::string& name, const std::string& text)
{
    const fs::path p = workdir() / name;
    std::ofstream(p) << text;
    return p;
}

std::string quoted(const fs::path& p)
{
    return "\"" + p.string() + "\"";
}

/// Drops the wall_ns column of an iteration log.
std::string without_timings(const std::string& log)
{
    std::istringstream is(log);
    std::ostringstream os;
    std::string line;
    while (std::getline(is, line)) os << line.substr(0, line.rfind(',')) << '\n';
    return os.str();
}

const char* kQuadratic = "STOCHMAT 1\nkind mg1\nmode full\nm 1\nN 2\nA 0\n0.2\nA 1\n0.3\nA 2\n0.5\n";

}  // namespace

TEST_CASE("solve the scalar quadratic", "[cli][solve]")
{
    const fs::path model = write("quad.smt", kQuadratic);
    const fs::path sol = workdir() / "quad.csv";
    const Run r = run("solve -i " + quoted(model) + " --algo ns --nk 3 -o " + quoted(sol));
    CHECK(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("algo=ns outer="));
    CHECK_THAT(r.out, ContainsSubstring(" inner_total="));
    CHECK_THAT(r.out, ContainsSubstring(" fact="));
    CHECK_THAT(r.out, ContainsSubstring(" residual="));
    CHECK_THAT(r.out, ContainsSubstring(" rho=1.3"));
    const Matrix G = io::parse_matrix_csv(slurp(sol));
    CHECK_THAT(G(0, 0), WithinAbs(ref::scalar_quadratic_root(0.2, 0.3, 0.5), 1e-12));
}

TEST_CASE("newton and ns with one inner step write identical logs", "[cli][solve]")
{
    GeneratorParams p;
    p.m = 5;
    p.N = 3;
    p.seed = 4;
    const fs::path model = write("gen5.smt", io::serialize_model(generate(p)));
    const fs::path a = workdir() / "a.log";
    const fs::path b = workdir() / "b.log";
    REQUIRE(run("solve -i " + quoted(model) + " --algo newton --log " + quoted(a)).code == 0);
    REQUIRE(run("solve -i " + quoted(model) + " --algo ns --nk 1 --log " + quoted(b)).code == 0);
    CHECK(without_timings(slurp(a)) == without_timings(slurp(b)));
    CHECK_THAT(slurp(a), ContainsSubstring("outer,inner,residual_inf,factorizations,wall_ns"));
}

TEST_CASE("solve flags", "[cli][solve]")
{
    const fs::path model = write("quad2.smt", kQuadratic);
    const Run drift = run("solve -i " + quoted(model) + " --drift");
    CHECK(drift.code == 0);
    CHECK_THAT(drift.out, ContainsSubstring("class=Transient"));

    const Run check = run("solve -i " + quoted(model) + " --check");
    CHECK(check.code == 0);
    CHECK_THAT(check.out, ContainsSubstring("NonsingularM"));

    for (const char* algo : {"fi", "u", "newton"}) {
        const Run r = run("solve -i " + quoted(model) + " --algo " + algo + " --max-outer 1000");
        CHECK(r.code == 0);
    }
    CHECK(run("solve -i " + quoted(model) + " --nk auto").code == 0);
    CHECK(run("solve -i " + quoted(model) + " --algo fi --max-outer 3").code == 2);
}

TEST_CASE("null recurrent model exits 2 with a warning", "[cli][solve]")
{
    const fs::path model = write("null.smt", "STOCHMAT 1\nkind mg1\nmode full\nm 1\nN 2\nA 0\n0.5\nA 1\n0\nA 2\n0.5\n");
    const Run r = run("solve -i " + quoted(model) + " --max-outer 20");
    CHECK(r.code == 2);
    CHECK_THAT(r.out + r.err, ContainsSubstring("NullRecurrent"));
}

TEST_CASE("bad input exits 1", "[cli][solve]")
{
    const fs::path bad = write("bad.smt", "STOCHMAT 1\nkind mg1\nmode full\nm 1\nN 1\nA 0\n0.4\nA 1\n0.5\n");
    const Run r = run("solve -i " + quoted(bad));
    CHECK(r.code == 1);
    CHECK_FALSE(r.err.empty());
    CHECK(run("solve -i " + quoted(workdir() / "missing.smt")).code == 1);
}

TEST_CASE("gen is deterministic and valid", "[cli][gen]")
{
    const fs::path a = workdir() / "g1.smt";
    const fs::path b = workdir() / "g2.smt";
    REQUIRE(run("gen -m 6 -N 4 --seed 7 -o " + quoted(a)).code == 0);
    REQUIRE(run("gen -m 6 -N 4 --seed 7 -o " + quoted(b)).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK_NOTHROW(io::load_model(a));

    const fs::path d = workdir() / "g3.smt";
    REQUIRE(run("gen -m 6 -N 3 --mode down -r 2 --seed 2 -o " + quoted(d)).code == 0);
    CHECK(std::holds_alternative<LowRankDownModel>(io::load_model(d)));
    CHECK(run("gen -m 3 -N 3 --mode up -r 4").code == 1);
}

TEST_CASE("gen mass0 knob lowers rho", "[cli][gen]")
{
    auto rho_for = [](const std::string& mass0) {
        const fs::path f = workdir() / ("m" + mass0 + ".smt");
        REQUIRE(run("gen -m 5 -N 3 --seed 3 --mass0 " + mass0 + " -o " + quoted(f)).code == 0);
        const Run r = run("solve -i " + quoted(f) + " --drift");
        const auto pos = r.out.find("rho=");
        REQUIRE(pos != std::string::npos);
        return std::stod(r.out.substr(pos + 4));
    };
    CHECK(rho_for("0.2") > rho_for("0.8"));
}

TEST_CASE("bench writes JSON and a table", "[cli][bench]")
{
    const fs::path json = workdir() / "bench.json";
    const Run r = run("bench --suite m=8,N=3,seeds=1,2 --algos ns:nk=4,newton --repeat 3 -o " + quoted(json));
    REQUIRE(r.code == 0);
    CHECK_THAT(r.out, ContainsSubstring("ns:nk=4"));
    const auto j = nlohmann::json::parse(slurp(json));
    REQUIRE(j["instances"].size() == 2);
    for (const auto& inst : j["instances"]) {
        CHECK(inst["algos"]["ns:nk=4"]["factorizations"].get<int>() <
              inst["algos"]["newton"]["factorizations"].get<int>());
    }

    const fs::path model = write("bench_in.smt", kQuadratic);
    CHECK(run("bench -i " + quoted(model) + " --algos ns,newton,fi --repeat 1 --max-outer 1000").code == 0);
    CHECK(run("bench --suite m=2 --algos ns").code == 1);
}
