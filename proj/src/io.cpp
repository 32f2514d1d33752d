#include "stochmat/io.hpp"

#include <cerrno>
#include <charconv>
#include <cstring>
#include <fstream>
#include <optional>
#include <sstream>

namespace stochmat::io {

namespace {

struct Token {
    std::string_view text;
    int column;  // 1-based
};

struct Line {
    int number;  // 1-based
    std::vector<Token> tokens;
};

std::vector<Line> tokenize(std::string_view text)
{
    std::vector<Line> lines;
    int number = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view raw = text.substr(pos, end - pos);
        ++number;
        if (const auto hash = raw.find('#'); hash != std::string_view::npos) raw = raw.substr(0, hash);
        Line line{number, {}};
        std::size_t i = 0;
        while (i < raw.size()) {
            while (i < raw.size() && (raw[i] == ' ' || raw[i] == '\t' || raw[i] == '\r')) ++i;
            const std::size_t start = i;
            while (i < raw.size() && raw[i] != ' ' && raw[i] != '\t' && raw[i] != '\r') ++i;
            if (i > start) line.tokens.push_back({raw.substr(start, i - start), static_cast<int>(start) + 1});
        }
        if (!line.tokens.empty()) lines.push_back(std::move(line));
        if (end == text.size()) break;
        pos = end + 1;
    }
    return lines;
}

std::string format_parse_message(int line, int column, const std::string& message)
{
    std::ostringstream os;
    os << "line " << line << ", column " << column << ": " << message;
    return os.str();
}

std::string describe(const std::vector<Diagnostic>& diags)
{
    std::ostringstream os;
    os << "model failed validation:";
    for (const auto& d : diags) os << "\n  [" << to_string(d.kind) << "] " << d.message;
    return os.str();
}

double parse_number(const Line& line, const Token& tok)
{
    double value = 0.0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    if (!tok.text.empty() && *first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc() || ptr != last) {
        throw ParseError(line.number, tok.column, "invalid number '" + std::string(tok.text) + "'");
    }
    return value;
}

long parse_integer(const Line& line, const Token& tok)
{
    long value = 0;
    const char* first = tok.text.data();
    const char* last = first + tok.text.size();
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last) {
        throw ParseError(line.number, tok.column, "invalid integer '" + std::string(tok.text) + "'");
    }
    return value;
}

class Parser {
public:
    explicit Parser(std::string_view text) : lines_(tokenize(text)) {}

    AnyModel run()
    {
        parse_header();
        switch (mode_) {
            case Mode::Full: {
                std::vector<Matrix> A;
                for (long i = 0; i <= N_; ++i) A.push_back(read_block("A", i, m_, m_));
                expect_end();
                if (kind_ == Kind::GIM1) {
                    GIM1Model g{trimmed(MG1Model{std::move(A)}).A};
                    check(validate(MG1Model{g.A}, vmode()));
                    return g;
                }
                MG1Model model = trimmed(MG1Model{std::move(A)});
                check(validate(model, vmode()));
                return model;
            }
            case Mode::Down: {
                LowRankDownModel model;
                model.A0_hat = read_block("A0HAT", std::nullopt, m_, r_);
                model.Gamma = read_block("GAMMA", std::nullopt, r_, m_);
                for (long i = 1; i <= N_; ++i) model.upper.push_back(read_block("A", i, m_, m_));
                expect_end();
                model = trimmed(model);
                check(validate(model, vmode()));
                return model;
            }
            case Mode::Up: {
                LowRankUpModel model;
                model.A0 = read_block("A", 0, m_, m_);
                model.Gamma = read_block("GAMMA", std::nullopt, m_, r_);
                for (long i = 1; i <= N_; ++i) model.A_hat.push_back(read_block("AHAT", i, r_, m_));
                expect_end();
                model = trimmed(model);
                check(validate(model, vmode()));
                return model;
            }
        }
        throw ParseError(0, 0, "unreachable");
    }

private:
    enum class Kind { MG1, GIM1 };
    enum class Mode { Full, Down, Up };

    static bool is_section(std::string_view word)
    {
        return word == "A" || word == "A0HAT" || word == "GAMMA" || word == "AHAT";
    }

    ValidationMode vmode() const { return permissive_ ? ValidationMode::Permissive : ValidationMode::Strict; }

    template <typename Model>
    Model trimmed(const Model& model) const
    {
        return zero_threshold_ ? trim_degree(model, *zero_threshold_) : model;
    }

    static void check(const std::vector<Diagnostic>& diags)
    {
        if (!diags.empty()) throw ValidationError(diags);
    }

    const Line* peek() const { return next_ < lines_.size() ? &lines_[next_] : nullptr; }

    int eof_line() const { return lines_.empty() ? 1 : lines_.back().number + 1; }

    void parse_header()
    {
        const Line* first = peek();
        if (!first) throw ParseError(1, 1, "empty model file; expected 'STOCHMAT 1'");
        if (first->tokens[0].text != "STOCHMAT" || first->tokens.size() != 2) {
            throw ParseError(first->number, first->tokens[0].column, "expected magic line 'STOCHMAT 1'");
        }
        if (parse_integer(*first, first->tokens[1]) != 1) {
            throw ParseError(first->number, first->tokens[1].column, "unsupported format version");
        }
        ++next_;

        std::optional<long> m, N, r;
        while (const Line* line = peek()) {
            const auto& key = line->tokens[0];
            if (is_section(key.text)) break;
            ++next_;
            if (key.text == "permissive") {
                if (line->tokens.size() != 1) throw ParseError(line->number, line->tokens[1].column, "'permissive' takes no value");
                permissive_ = true;
                continue;
            }
            if (line->tokens.size() != 2) {
                throw ParseError(line->number, key.column, "header line '" + std::string(key.text) + "' needs exactly one value");
            }
            const auto& val = line->tokens[1];
            if (key.text == "kind") {
                if (val.text == "mg1") kind_ = Kind::MG1;
                else if (val.text == "gim1") kind_ = Kind::GIM1;
                else throw ParseError(line->number, val.column, "kind must be mg1 or gim1");
            } else if (key.text == "mode") {
                if (val.text == "full") mode_ = Mode::Full;
                else if (val.text == "down") mode_ = Mode::Down;
                else if (val.text == "up") mode_ = Mode::Up;
                else throw ParseError(line->number, val.column, "mode must be full, down or up");
            } else if (key.text == "m") {
                m = parse_integer(*line, val);
                if (*m <= 0) throw ParseError(line->number, val.column, "m must be positive");
            } else if (key.text == "N") {
                N = parse_integer(*line, val);
                if (*N < 0) throw ParseError(line->number, val.column, "N must be nonnegative");
            } else if (key.text == "zero_threshold") {
                const double t = parse_number(*line, val);
                if (!(t >= 0.0)) throw ParseError(line->number, val.column, "zero_threshold must be nonnegative");
                zero_threshold_ = t;
            } else if (key.text == "r") {
                r = parse_integer(*line, val);
                if (*r <= 0) throw ParseError(line->number, val.column, "r must be positive");
            } else {
                throw ParseError(line->number, key.column, "unknown header key '" + std::string(key.text) + "'");
            }
        }
        const int here = peek() ? peek()->number : eof_line();
        if (!m) throw ParseError(here, 1, "header is missing 'm'");
        if (!N) throw ParseError(here, 1, "header is missing 'N'");
        if (mode_ != Mode::Full && !r) throw ParseError(here, 1, "header needs 'r' when mode is not full");
        if (mode_ == Mode::Full && r) throw ParseError(here, 1, "'r' is only allowed when mode is down or up");
        if (kind_ == Kind::GIM1 && mode_ != Mode::Full) throw ParseError(here, 1, "kind gim1 supports only mode full");
        if (r && *r > *m) throw ParseError(here, 1, "r must not exceed m");
        m_ = *m;
        N_ = *N;
        r_ = r.value_or(0);
    }

    Matrix read_block(const char* name, std::optional<long> index, long rows, long cols)
    {
        std::string label = name;
        if (index) label += " " + std::to_string(*index);

        const Line* head = peek();
        if (!head) throw ParseError(eof_line(), 1, "expected block '" + label + "' but reached end of file");
        const bool name_ok = head->tokens[0].text == name;
        bool index_ok = false;
        if (index) {
            index_ok = head->tokens.size() == 2 && parse_integer(*head, head->tokens[1]) == *index;
        } else {
            index_ok = head->tokens.size() == 1;
        }
        if (!name_ok || !index_ok) {
            throw ParseError(head->number, head->tokens[0].column, "expected block '" + label + "'");
        }
        ++next_;

        Matrix out(rows, cols);
        for (long i = 0; i < rows; ++i) {
            const Line* line = peek();
            if (!line || is_section(line->tokens[0].text)) {
                const int at = line ? line->number : eof_line();
                throw ParseError(at, 1, "block '" + label + "' is truncated: expected " + std::to_string(rows) +
                                            " rows, found " + std::to_string(i));
            }
            if (static_cast<long>(line->tokens.size()) != cols) {
                throw ParseError(line->number, line->tokens[0].column,
                                 "block '" + label + "' row " + std::to_string(i) + ": expected " +
                                     std::to_string(cols) + " numbers, found " + std::to_string(line->tokens.size()));
            }
            for (long j = 0; j < cols; ++j) out(i, j) = parse_number(*line, line->tokens[static_cast<std::size_t>(j)]);
            ++next_;
        }
        return out;
    }

    void expect_end() const
    {
        if (const Line* line = peek()) {
            throw ParseError(line->number, line->tokens[0].column, "unexpected content after the last block");
        }
    }

    std::vector<Line> lines_;
    std::size_t next_ = 0;
    Kind kind_ = Kind::MG1;
    Mode mode_ = Mode::Full;
    bool permissive_ = false;
    std::optional<double> zero_threshold_;
    long m_ = 0;
    long N_ = 0;
    long r_ = 0;
};

void emit_block(std::ostringstream& os, const std::string& head, const Matrix& M)
{
    os << head << '\n';
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index j = 0; j < M.cols(); ++j) {
            if (j) os << ' ';
            os << format_double(M(i, j));
        }
        os << '\n';
    }
}

void emit_header(std::ostringstream& os, const std::string& comment, const char* kind, const char* mode,
                 Index m, Index N, Index r)
{
    os << "STOCHMAT 1\n";
    std::istringstream lines(comment);
    for (std::string l; std::getline(lines, l);) os << "# " << l << '\n';
    os << "kind " << kind << '\n' << "mode " << mode << '\n';
    os << "m " << m << '\n' << "N " << N << '\n';
    if (r > 0) os << "r " << r << '\n';
}

}  // namespace

ParseError::ParseError(int line, int column, const std::string& message)
    : Error(format_parse_message(line, column, message)), line_(line), column_(column)
{
}

ValidationError::ValidationError(std::vector<Diagnostic> diagnostics)
    : Error(describe(diagnostics)), diagnostics_(std::move(diagnostics))
{
}

AnyModel parse_model(std::string_view text)
{
    return Parser(text).run();
}

AnyModel load_model(const std::filesystem::path& path)
{
    return parse_model(read_text(path));
}

std::string format_double(double x)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    if (ec != std::errc()) throw Error("format_double: conversion failed");
    return std::string(buf, ptr);
}

std::string serialize_model(const AnyModel& model, const std::string& comment)
{
    std::ostringstream os;
    std::visit(
        [&](const auto& mdl) {
            using T = std::decay_t<decltype(mdl)>;
            if constexpr (std::is_same_v<T, MG1Model> || std::is_same_v<T, GIM1Model>) {
                constexpr const char* kind = std::is_same_v<T, MG1Model> ? "mg1" : "gim1";
                emit_header(os, comment, kind, "full", mdl.dim(), mdl.degree(), 0);
                for (Index i = 0; i <= mdl.degree(); ++i) {
                    emit_block(os, "A " + std::to_string(i), mdl.A[static_cast<std::size_t>(i)]);
                }
            } else if constexpr (std::is_same_v<T, LowRankDownModel>) {
                emit_header(os, comment, "mg1", "down", mdl.dim(), mdl.degree(), mdl.rank());
                emit_block(os, "A0HAT", mdl.A0_hat);
                emit_block(os, "GAMMA", mdl.Gamma);
                for (Index i = 1; i <= mdl.degree(); ++i) {
                    emit_block(os, "A " + std::to_string(i), mdl.upper[static_cast<std::size_t>(i - 1)]);
                }
            } else {
                emit_header(os, comment, "mg1", "up", mdl.dim(), mdl.degree(), mdl.rank());
                emit_block(os, "A 0", mdl.A0);
                emit_block(os, "GAMMA", mdl.Gamma);
                for (Index i = 1; i <= mdl.degree(); ++i) {
                    emit_block(os, "AHAT " + std::to_string(i), mdl.A_hat[static_cast<std::size_t>(i - 1)]);
                }
            }
        },
        model);
    return os.str();
}

std::string format_matrix_csv(const Matrix& X)
{
    std::ostringstream os;
    os << "# m=" << X.rows() << '\n';
    for (Index i = 0; i < X.rows(); ++i) {
        for (Index j = 0; j < X.cols(); ++j) {
            if (j) os << ',';
            os << format_double(X(i, j));
        }
        os << '\n';
    }
    return os.str();
}

Matrix parse_matrix_csv(std::string_view text)
{
    std::vector<std::vector<double>> rows;
    int number = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t end = std::min(text.find('\n', pos), text.size());
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++number;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty() || line.front() == '#') continue;
        std::vector<double> row;
        std::size_t p = 0;
        while (true) {
            const std::size_t comma = std::min(line.find(',', p), line.size());
            std::string_view cell = line.substr(p, comma - p);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size()) {
                throw ParseError(number, static_cast<int>(p) + 1, "invalid CSV number '" + std::string(cell) + "'");
            }
            row.push_back(v);
            if (comma == line.size()) break;
            p = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw ParseError(number, 1, "ragged CSV row");
        }
        rows.push_back(std::move(row));
    }
    Matrix out(static_cast<Index>(rows.size()), rows.empty() ? 0 : static_cast<Index>(rows.front().size()));
    for (Index i = 0; i < out.rows(); ++i) {
        for (Index j = 0; j < out.cols(); ++j) out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return out;
}

std::string format_log_csv(const SolveReport& report)
{
    std::ostringstream os;
    os << "outer,inner,residual_inf,factorizations,wall_ns\n";
    for (const auto& rec : report.trace) {
        os << rec.outer << ',' << rec.inner << ',' << format_double(rec.residual_inf) << ','
           << rec.factorizations << ',' << rec.wall_ns << '\n';
    }
    return os.str();
}

void write_text(const std::filesystem::path& path, const std::string& text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing: " + std::strerror(errno));
    out << text;
    out.flush();
    if (!out) throw IoError("write to '" + path.string() + "' failed: " + std::strerror(errno));
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "': " + std::strerror(errno));
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_report(const SolveReport& report, const std::filesystem::path& solution_path,
                  const std::filesystem::path& log_path)
{
    if (!solution_path.empty()) write_text(solution_path, format_matrix_csv(report.G));
    if (!log_path.empty()) write_text(log_path, format_log_csv(report));
}

}  // namespace stochmat::io
