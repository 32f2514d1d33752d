#pragma once

// Model text format, solution CSV and iteration-log CSV.
//
//   # comments start with '#', blank lines ignored
//   STOCHMAT 1
//   kind mg1            # mg1 | gim1
//   mode full           # full | down | up
//   m 2
//   N 2
//   r 1                 # required iff mode != full
//   permissive          # optional: validate row sums permissively
//   A 0
//   0.1 0.2
//   0.0 0.3
//   ...
//
// mode=full: A 0..A N (m x m each). mode=down: A0HAT (m x r), GAMMA (r x m),
// then A 1..A N. mode=up: A 0, GAMMA (m x r), then AHAT 1..AHAT N (r x m).
// Sections must appear in exactly this order.

#include "stochmat/model.hpp"
#include "stochmat/solvers.hpp"

#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace stochmat::io {

class ParseError : public Error {
public:
    ParseError(int line, int column, const std::string& message);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Diagnostic> diagnostics);
    const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

private:
    std::vector<Diagnostic> diagnostics_;
};

class IoError : public Error {
public:
    using Error::Error;
};

using AnyModel = std::variant<MG1Model, LowRankDownModel, LowRankUpModel, GIM1Model>;

/// Parses and validates (strict unless the file carries `permissive`).
AnyModel parse_model(std::string_view text);
AnyModel load_model(const std::filesystem::path& path);

/// Canonical text with shortest round-trip decimals. `comment` lines, if any,
/// are emitted as '#' lines after the magic line.
std::string serialize_model(const AnyModel& model, const std::string& comment = {});

/// Shortest decimal that reads back to the same double.
std::string format_double(double x);

/// Row-major CSV with a `# m=<rows>` header.
std::string format_matrix_csv(const Matrix& X);
Matrix parse_matrix_csv(std::string_view text);

/// outer,inner,residual_inf,factorizations,wall_ns, one row per inner step.
std::string format_log_csv(const SolveReport& report);

/// Writes report.G to `solution_path` and the trace to `log_path`; an empty
/// path skips that file. Throws IoError with the OS message on failure.
void write_report(const SolveReport& report, const std::filesystem::path& solution_path,
                  const std::filesystem::path& log_path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace stochmat::io
