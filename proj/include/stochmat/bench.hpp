#pragma once

// Benchmark harness: every algorithm runs on the same instance with the same
// tolerance; converged solutions are cross-checked before anything is reported.

#include "stochmat/generator.hpp"
#include "stochmat/solvers.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stochmat::bench {

/// Converged solutions farther apart than this signal a solver bug.
inline constexpr double kDisagreementFatal = 1e-6;
inline constexpr double kAgreement = 1e-8;

struct AlgoSpec {
    std::string name;  // as given on the command line, e.g. "ns:nk=4"
    Algorithm algorithm = Algorithm::NewtonShamanskii;
    InnerSchedule schedule = FixedSchedule{};
    bool u_iteration = false;
};

/// Parses "ns:nk=K,ns:nk=auto,newton,fi,u" (u accepts ":nk=" too).
std::vector<AlgoSpec> parse_algos(const std::string& text);

struct SuiteSpec {
    std::vector<Index> m;
    std::vector<Index> N;
    std::vector<std::uint64_t> seeds;
};

/// Parses "m=LIST,N=LIST,seeds=LIST"; a comma-separated token without '='
/// extends the previous key's list, so "m=50,100,N=8,seeds=1,2,3" works.
SuiteSpec parse_suite(const std::string& text);

struct Instance {
    std::string id;
    MG1Model model;
};

/// Generated instances, in m-major, then N, then seed order.
std::vector<Instance> suite_instances(const SuiteSpec& suite, const GeneratorParams& base = {});

struct AlgoResult {
    bool converged = false;
    double residual = 0.0;
    int outer = 0;
    int inner_total = 0;
    int factorizations = 0;
    std::int64_t wall_ns_median = 0;
    std::string error;
    Matrix G;
};

struct InstanceResult {
    std::string id;
    Index m = 0;
    Index N = 0;
    double rho = 0.0;
    bool rho_known = false;
    std::vector<std::pair<std::string, AlgoResult>> algos;
    double max_disagreement = 0.0;
};

struct BenchResult {
    std::vector<InstanceResult> instances;
    double max_disagreement = 0.0;
    bool fatal_disagreement() const { return max_disagreement > kDisagreementFatal; }
};

struct BenchOptions {
    int repeat = 3;
    double tol = 1e-12;
    int max_outer = 100;
};

BenchResult run(const std::vector<Instance>& instances, const std::vector<AlgoSpec>& algos,
                const BenchOptions& options);

nlohmann::ordered_json to_json(const BenchResult& result);

/// Human-readable table, including the wall-time ratio of each algorithm
/// against the first one listed.
std::string format_table(const BenchResult& result);

std::int64_t median(std::vector<std::int64_t> values);

}  // namespace stochmat::bench
