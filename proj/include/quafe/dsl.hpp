#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "quafe/circuit.hpp"
#include "quafe/coupler.hpp"

namespace quafe::dsl {

struct SourceSpan {
    int line = 1, column = 1;       // 1-based
    std::size_t byte_begin = 0, byte_end = 0;
};

struct Diagnostic {
    SourceSpan span;
    std::string message;
};

inline std::string format_diagnostic(const std::string& file, const Diagnostic& d)
{
    return file + ":" + std::to_string(d.span.line) + ":" + std::to_string(d.span.column) +
           ": " + d.message;
}

enum class TokenKind {
    kw_path, kw_waveguide, kw_split, kw_mix, kw_ephase, kw_ophase, kw_couple, kw_detect,
    kw_current, kw_energy,
    identifier, number, arrow, lbrace, rbrace, equals, comma, at, newline, end_of_input
};

enum class Unit { none, rad, deg, ev, kev, nm, mm };

inline const char* unit_suffix(Unit u)
{
    switch (u) {
        case Unit::none: return "";
        case Unit::rad: return "rad";
        case Unit::deg: return "deg";
        case Unit::ev: return "eV";
        case Unit::kev: return "keV";
        case Unit::nm: return "nm";
        case Unit::mm: return "mm";
    }
    return "";
}

struct Token {
    TokenKind kind;
    std::string text;
    double value = 0.0;
    Unit unit = Unit::none;
    SourceSpan span;
};

inline std::string describe(const Token& t)
{
    switch (t.kind) {
        case TokenKind::identifier: return "identifier '" + t.text + "'";
        case TokenKind::number: return "number";
        case TokenKind::arrow: return "'->'";
        case TokenKind::lbrace: return "'{'";
        case TokenKind::rbrace: return "'}'";
        case TokenKind::equals: return "'='";
        case TokenKind::comma: return "','";
        case TokenKind::at: return "'@'";
        case TokenKind::newline: return "end of line";
        case TokenKind::end_of_input: return "end of input";
        default: return "'" + t.text + "'";
    }
}

struct TokenizeResult {
    std::vector<Token> tokens;  // always terminated by end_of_input
    std::vector<Diagnostic> diagnostics;
};

inline TokenizeResult tokenize(std::string_view src)
{
    static const std::map<std::string, TokenKind, std::less<>> keywords = {
        {"path", TokenKind::kw_path},       {"waveguide", TokenKind::kw_waveguide},
        {"split", TokenKind::kw_split},     {"mix", TokenKind::kw_mix},
        {"ephase", TokenKind::kw_ephase},   {"ophase", TokenKind::kw_ophase},
        {"couple", TokenKind::kw_couple},   {"detect", TokenKind::kw_detect},
        {"current", TokenKind::kw_current}, {"energy", TokenKind::kw_energy},
    };
    static const std::map<std::string, Unit, std::less<>> units = {
        {"rad", Unit::rad}, {"deg", Unit::deg}, {"eV", Unit::ev},
        {"keV", Unit::kev}, {"nm", Unit::nm},   {"mm", Unit::mm},
    };

    TokenizeResult result;
    std::size_t pos = 0;
    int line = 1, column = 1;

    auto make_span = [&](std::size_t begin, std::size_t end, int l, int c) {
        return SourceSpan{l, c, begin, end};
    };
    auto push = [&](TokenKind kind, std::size_t begin, std::size_t end, int l, int c,
                    std::string text = {}, double value = 0.0, Unit unit = Unit::none) {
        result.tokens.push_back({kind, std::move(text), value, unit, make_span(begin, end, l, c)});
    };

    while (pos < src.size()) {
        const char ch = src[pos];
        const int tl = line, tc = column;
        const std::size_t begin = pos;

        if (ch == '\n') {
            // collapse: emit newline only if the previous token is not one
            if (!result.tokens.empty() && result.tokens.back().kind != TokenKind::newline)
                push(TokenKind::newline, begin, begin + 1, tl, tc);
            ++pos;
            ++line;
            column = 1;
            continue;
        }
        if (ch == ' ' || ch == '\t' || ch == '\r') {
            ++pos;
            ++column;
            continue;
        }
        if (ch == '#') {
            while (pos < src.size() && src[pos] != '\n') {
                ++pos;
                ++column;
            }
            continue;
        }
        if (std::isalpha(static_cast<unsigned char>(ch)) || ch == '_') {
            std::size_t end = pos;
            while (end < src.size() &&
                   (std::isalnum(static_cast<unsigned char>(src[end])) || src[end] == '_'))
                ++end;
            std::string word(src.substr(pos, end - pos));
            const auto kw = keywords.find(word);
            push(kw != keywords.end() ? kw->second : TokenKind::identifier, pos, end, tl, tc,
                 std::move(word));
            column += static_cast<int>(end - pos);
            pos = end;
            continue;
        }
        const bool minus_number = ch == '-' && pos + 1 < src.size() &&
                                  (std::isdigit(static_cast<unsigned char>(src[pos + 1])) ||
                                   src[pos + 1] == '.');
        if (std::isdigit(static_cast<unsigned char>(ch)) ||
            (ch == '.' && pos + 1 < src.size() &&
             std::isdigit(static_cast<unsigned char>(src[pos + 1]))) ||
            minus_number) {
            // numeric part via strtod (longest valid prefix), then unit suffix
            const std::string tail(src.substr(pos));
            char* endp = nullptr;
            const double value = std::strtod(tail.c_str(), &endp);
            std::size_t consumed = static_cast<std::size_t>(endp - tail.c_str());
            std::size_t end = pos + consumed;
            std::size_t suffix_end = end;
            while (suffix_end < src.size() &&
                   std::isalpha(static_cast<unsigned char>(src[suffix_end])))
                ++suffix_end;
            const std::string suffix(src.substr(end, suffix_end - end));
            Unit unit = Unit::none;
            if (!suffix.empty()) {
                const auto it = units.find(suffix);
                if (it == units.end()) {
                    result.diagnostics.push_back(
                        {make_span(end, suffix_end, tl, tc + static_cast<int>(consumed)),
                         "unknown unit suffix '" + suffix + "'"});
                } else {
                    unit = it->second;
                }
            }
            push(TokenKind::number, pos, suffix_end, tl, tc,
                 std::string(src.substr(pos, suffix_end - pos)), value, unit);
            column += static_cast<int>(suffix_end - pos);
            pos = suffix_end;
            continue;
        }
        if (ch == '-' && pos + 1 < src.size() && src[pos + 1] == '>') {
            push(TokenKind::arrow, pos, pos + 2, tl, tc, "->");
            pos += 2;
            column += 2;
            continue;
        }
        switch (ch) {
            case '{': push(TokenKind::lbrace, pos, pos + 1, tl, tc, "{"); break;
            case '}': push(TokenKind::rbrace, pos, pos + 1, tl, tc, "}"); break;
            case '=': push(TokenKind::equals, pos, pos + 1, tl, tc, "="); break;
            case ',': push(TokenKind::comma, pos, pos + 1, tl, tc, ","); break;
            case '@': push(TokenKind::at, pos, pos + 1, tl, tc, "@"); break;
            default:
                result.diagnostics.push_back({make_span(pos, pos + 1, tl, tc),
                                              std::string("illegal character '") + ch + "'"});
                break;
        }
        ++pos;
        ++column;
    }
    if (!result.tokens.empty() && result.tokens.back().kind != TokenKind::newline)
        push(TokenKind::newline, src.size(), src.size(), line, column);
    push(TokenKind::end_of_input, src.size(), src.size(), line, column);
    return result;
}

// ---- AST ----

struct AstParam {
    std::string key;
    double value = 0.0;
    Unit unit = Unit::none;
    SourceSpan span;

    bool operator==(const AstParam& o) const
    {
        return key == o.key && value == o.value && unit == o.unit;
    }
};

struct AstDecl {
    enum class Kind { path, waveguide };
    Kind kind;
    std::string name;
    std::vector<AstParam> params;  // waveguide only
    SourceSpan span;

    bool operator==(const AstDecl& o) const
    {
        return kind == o.kind && name == o.name && params == o.params;
    }
};

struct AstStatement {
    enum class Kind { split, mix, ephase, ophase, couple, detect };
    Kind kind;
    SourceSpan span;
    std::string a, b, c;          // operands, meaning depends on kind
    double angle_rad = 0.0;       // ephase/ophase, normalized to radians
    DetectorKind detector = DetectorKind::current;
    std::string coupling_ref;     // couple: profile name after '@'

    bool operator==(const AstStatement& o) const
    {
        return kind == o.kind && a == o.a && b == o.b && c == o.c &&
               angle_rad == o.angle_rad && detector == o.detector &&
               coupling_ref == o.coupling_ref;
    }
};

struct CircuitAst {
    std::vector<AstDecl> decls;
    std::vector<AstStatement> stmts;

    bool operator==(const CircuitAst& o) const
    {
        return decls == o.decls && stmts == o.stmts;
    }
};

struct ParseResult {
    CircuitAst ast;
    std::vector<Diagnostic> diagnostics;
    bool ok() const { return diagnostics.empty(); }
};

namespace detail {

struct StatementError {};  // thrown to recover at the next statement boundary

class Parser {
public:
    Parser(std::vector<Token> tokens, std::vector<Diagnostic> diags)
        : tokens_(std::move(tokens)), diags_(std::move(diags))
    {
    }

    ParseResult run()
    {
        ParseResult result;
        skip_newlines();
        // declarations first
        while (at(TokenKind::kw_path) || at(TokenKind::kw_waveguide)) {
            try {
                result.ast.decls.push_back(parse_decl());
                expect_end_of_statement();
            } catch (const StatementError&) {
                recover();
            }
            skip_newlines();
            if (too_many_errors()) break;
        }
        while (!at(TokenKind::end_of_input) && !too_many_errors()) {
            if (at(TokenKind::kw_path) || at(TokenKind::kw_waveguide)) {
                error(peek().span, "declarations must precede statements");
                recover();
                skip_newlines();
                continue;
            }
            try {
                result.ast.stmts.push_back(parse_statement());
                expect_end_of_statement();
            } catch (const StatementError&) {
                recover();
            }
            skip_newlines();
        }
        if (!too_many_errors()) validate_semantics(result.ast);
        result.diagnostics = std::move(diags_);
        return result;
    }

private:
    const Token& peek() const { return tokens_[pos_]; }
    const Token& advance() { return tokens_[pos_ < tokens_.size() - 1 ? pos_++ : pos_]; }
    bool at(TokenKind k) const { return peek().kind == k; }
    bool too_many_errors() const { return diags_.size() >= 10; }

    void skip_newlines()
    {
        while (at(TokenKind::newline)) advance();
    }

    void error(const SourceSpan& span, std::string message)
    {
        if (!too_many_errors()) diags_.push_back({span, std::move(message)});
    }

    [[noreturn]] void fail(std::string expected)
    {
        error(peek().span, "expected " + std::move(expected) + ", found " + describe(peek()));
        throw StatementError{};
    }

    void recover()
    {
        while (!at(TokenKind::newline) && !at(TokenKind::end_of_input)) advance();
    }

    const Token& expect(TokenKind k, const char* what)
    {
        if (!at(k)) fail(what);
        return advance();
    }

    void expect_end_of_statement()
    {
        if (!at(TokenKind::newline) && !at(TokenKind::end_of_input)) fail("end of line");
    }

    std::string expect_identifier(const char* what)
    {
        if (!at(TokenKind::identifier)) fail(what);
        return advance().text;
    }

    double expect_angle()
    {
        if (!at(TokenKind::number)) fail("angle literal");
        const Token t = advance();
        if (t.unit == Unit::rad) return t.value;
        if (t.unit == Unit::deg) return (t.value / 180.0) * M_PI;
        error(t.span, "angle literal requires a 'rad' or 'deg' unit");
        throw StatementError{};
    }

    AstDecl parse_decl()
    {
        const Token& kw = advance();
        AstDecl decl;
        decl.span = kw.span;
        if (kw.kind == TokenKind::kw_path) {
            decl.kind = AstDecl::Kind::path;
            decl.name = expect_identifier("path name");
            return decl;
        }
        decl.kind = AstDecl::Kind::waveguide;
        decl.name = expect_identifier("waveguide name");
        expect(TokenKind::lbrace, "'{'");
        if (!at(TokenKind::rbrace)) {
            while (true) {
                AstParam p;
                p.span = peek().span;
                p.key = expect_identifier("parameter name");
                expect(TokenKind::equals, "'='");
                if (!at(TokenKind::number)) fail("number");
                const Token v = advance();
                p.value = v.value;
                p.unit = v.unit;
                decl.params.push_back(std::move(p));
                if (at(TokenKind::comma)) {
                    advance();
                    continue;
                }
                break;
            }
        }
        expect(TokenKind::rbrace, "'}'");
        return decl;
    }

    AstStatement parse_statement()
    {
        AstStatement st;
        st.span = peek().span;
        switch (peek().kind) {
            case TokenKind::kw_split:
                advance();
                st.kind = AstStatement::Kind::split;
                st.a = expect_identifier("source path");
                expect(TokenKind::arrow, "'->'");
                st.b = expect_identifier("output path");
                st.c = expect_identifier("output path");
                return st;
            case TokenKind::kw_mix:
                advance();
                st.kind = AstStatement::Kind::mix;
                st.a = expect_identifier("input path");
                st.b = expect_identifier("input path");
                expect(TokenKind::arrow, "'->'");
                st.c = expect_identifier("output path");
                return st;
            case TokenKind::kw_ephase:
                advance();
                st.kind = AstStatement::Kind::ephase;
                st.a = expect_identifier("path name");
                st.angle_rad = expect_angle();
                return st;
            case TokenKind::kw_ophase:
                advance();
                st.kind = AstStatement::Kind::ophase;
                st.a = expect_identifier("waveguide name");
                st.angle_rad = expect_angle();
                return st;
            case TokenKind::kw_couple:
                advance();
                st.kind = AstStatement::Kind::couple;
                st.a = expect_identifier("path name");
                st.b = expect_identifier("waveguide name");
                expect(TokenKind::at, "'@'");
                st.coupling_ref = expect_identifier("coupling profile name");
                return st;
            case TokenKind::kw_detect:
                advance();
                st.kind = AstStatement::Kind::detect;
                st.a = expect_identifier("path name");
                if (at(TokenKind::kw_current)) {
                    advance();
                    st.detector = DetectorKind::current;
                } else if (at(TokenKind::kw_energy)) {
                    advance();
                    st.detector = DetectorKind::energy_resolved;
                } else {
                    fail("'current' or 'energy'");
                }
                return st;
            default:
                fail("statement keyword (split, mix, ephase, ophase, couple, detect)");
        }
    }

    void validate_semantics(const CircuitAst& ast)
    {
        std::set<std::string> paths, waveguides;
        for (const auto& d : ast.decls) {
            auto& ns = d.kind == AstDecl::Kind::path ? paths : waveguides;
            if (!ns.insert(d.name).second) error(d.span, "duplicate declaration of '" + d.name + "'");
        }
        auto need_path = [&](const AstStatement& st, const std::string& n) {
            if (!paths.count(n)) error(st.span, "undeclared path '" + n + "'");
        };
        auto need_waveguide = [&](const AstStatement& st, const std::string& n) {
            if (!waveguides.count(n)) error(st.span, "undeclared waveguide '" + n + "'");
        };
        bool seen_detector = false;
        for (const auto& st : ast.stmts) {
            if (too_many_errors()) return;
            if (seen_detector) {
                error(st.span, "statement after detector");
                return;
            }
            switch (st.kind) {
                case AstStatement::Kind::split:
                    need_path(st, st.a);
                    need_path(st, st.b);
                    need_path(st, st.c);
                    break;
                case AstStatement::Kind::mix:
                    need_path(st, st.a);
                    need_path(st, st.b);
                    need_path(st, st.c);
                    if (st.a == st.b) error(st.span, "duplicate input path '" + st.a + "'");
                    break;
                case AstStatement::Kind::ephase:
                    need_path(st, st.a);
                    break;
                case AstStatement::Kind::ophase:
                    need_waveguide(st, st.a);
                    break;
                case AstStatement::Kind::couple:
                    need_path(st, st.a);
                    need_waveguide(st, st.b);
                    break;
                case AstStatement::Kind::detect:
                    need_path(st, st.a);
                    seen_detector = true;
                    break;
            }
        }
        if (!seen_detector && !too_many_errors()) {
            const SourceSpan span = tokens_.back().span;
            error(span, "no detector");
        }
    }

    std::vector<Token> tokens_;
    std::vector<Diagnostic> diags_;
    std::size_t pos_ = 0;
};

inline std::string format_number(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

inline ParseResult parse(TokenizeResult lexed)
{
    detail::Parser parser(std::move(lexed.tokens), std::move(lexed.diagnostics));
    return parser.run();
}

inline ParseResult parse_source(std::string_view src)
{
    return parse(tokenize(src));
}

// Canonical text form; parse(pretty_print(ast)) is structurally identical
// to ast. Performs no numeric simulation.
inline std::string pretty_print(const CircuitAst& ast)
{
    std::string out;
    for (const auto& d : ast.decls) {
        if (d.kind == AstDecl::Kind::path) {
            out += "path " + d.name + "\n";
            continue;
        }
        out += "waveguide " + d.name + " {";
        for (std::size_t i = 0; i < d.params.size(); ++i) {
            out += i == 0 ? " " : ", ";
            out += d.params[i].key + " = " + detail::format_number(d.params[i].value) +
                   unit_suffix(d.params[i].unit);
        }
        out += d.params.empty() ? "}\n" : " }\n";
    }
    for (const auto& st : ast.stmts) {
        switch (st.kind) {
            case AstStatement::Kind::split:
                out += "split " + st.a + " -> " + st.b + " " + st.c + "\n";
                break;
            case AstStatement::Kind::mix:
                out += "mix " + st.a + " " + st.b + " -> " + st.c + "\n";
                break;
            case AstStatement::Kind::ephase:
                out += "ephase " + st.a + " " + detail::format_number(st.angle_rad) + "rad\n";
                break;
            case AstStatement::Kind::ophase:
                out += "ophase " + st.a + " " + detail::format_number(st.angle_rad) + "rad\n";
                break;
            case AstStatement::Kind::couple:
                out += "couple " + st.a + " " + st.b + " @" + st.coupling_ref + "\n";
                break;
            case AstStatement::Kind::detect:
                out += "detect " + st.a + " " +
                       (st.detector == DetectorKind::current ? "current" : "energy") + "\n";
                break;
        }
    }
    return out;
}

// Beam + calibrated geometry against which @calibrated coupling references
// are resolved.
struct CalibrationProfile {
    ElectronBeam beam;
    WaveguideSpec default_spec;
    CouplerGeometry geometry;  // base_rates already calibrated
    std::vector<double> k_grid;
    PhysicalConstants pc = constants();
};

struct LoweringError : std::runtime_error {
    Diagnostic diagnostic;
    explicit LoweringError(Diagnostic d)
        : std::runtime_error(d.message), diagnostic(std::move(d))
    {
    }
};

inline Circuit lower(const CircuitAst& ast, const CalibrationProfile& profile)
{
    Circuit circuit;
    std::map<std::string, WaveguideSpec> wg_specs;
    for (const auto& d : ast.decls) {
        if (d.kind == AstDecl::Kind::path) {
            circuit.paths.push_back(d.name);
            continue;
        }
        circuit.waveguides.push_back(d.name);
        WaveguideSpec spec = profile.default_spec;
        for (const auto& p : d.params) {
            auto length_nm = [&]() -> double {
                if (p.unit == Unit::nm) return p.value;
                if (p.unit == Unit::mm) return p.value * 1e6;
                throw LoweringError({p.span, "parameter '" + p.key + "' requires a length unit"});
            };
            if (p.key == "epsilon") {
                if (p.unit != Unit::none)
                    throw LoweringError({p.span, "'epsilon' is dimensionless"});
                spec.permittivity = p.value;
            } else if (p.key == "width") {
                spec.width_nm = length_nm();
            } else if (p.key == "height") {
                spec.height_nm = length_nm();
            } else if (p.key == "max_modes") {
                if (p.unit != Unit::none)
                    throw LoweringError({p.span, "'max_modes' is dimensionless"});
                spec.max_modes = static_cast<int>(p.value);
            } else {
                throw LoweringError({p.span, "unknown waveguide parameter '" + p.key + "'"});
            }
        }
        try {
            spec.validate();
        } catch (const std::exception& e) {
            throw LoweringError({d.span, e.what()});
        }
        wg_specs.emplace(d.name, spec);
    }

    std::map<std::string, CouplingResult> couplings;
    auto coupling_for = [&](const std::string& wg, const SourceSpan& span) -> const CouplingResult& {
        auto it = couplings.find(wg);
        if (it != couplings.end()) return it->second;
        CouplingResult r;
        try {
            r = mean_photon_numbers(profile.beam, wg_specs.at(wg), profile.geometry,
                                    profile.k_grid, profile.pc);
        } catch (const std::exception& e) {
            throw LoweringError({span, e.what()});
        }
        bool any = false;
        for (const auto& m : r.modes) any = any || m.matched;
        if (!any)
            throw LoweringError({span, "waveguide '" + wg +
                                           "' has no phase-matched modes for the configured beam"});
        return couplings.emplace(wg, std::move(r)).first->second;
    };

    for (const auto& st : ast.stmts) {
        switch (st.kind) {
            case AstStatement::Kind::split:
                circuit.elements.push_back(Splitter{st.a, st.b, st.c});
                break;
            case AstStatement::Kind::mix:
                circuit.elements.push_back(Mixer{st.a, st.b, st.c, "!" + st.c});
                break;
            case AstStatement::Kind::ephase:
                circuit.elements.push_back(ElectronPhase{st.a, st.angle_rad});
                break;
            case AstStatement::Kind::ophase:
                circuit.elements.push_back(OpticalPhase{st.a, st.angle_rad});
                break;
            case AstStatement::Kind::couple: {
                if (st.coupling_ref != "calibrated")
                    throw LoweringError({st.span, "unknown coupling profile '@" + st.coupling_ref + "'"});
                circuit.elements.push_back(CouplerElement{st.a, st.b, coupling_for(st.b, st.span)});
                break;
            }
            case AstStatement::Kind::detect:
                circuit.elements.push_back(Detector{st.a, st.detector});
                break;
        }
    }

    try {
        circuit.validate();
    } catch (const std::exception& e) {
        const SourceSpan span = ast.stmts.empty() ? SourceSpan{} : ast.stmts.front().span;
        throw LoweringError({span, e.what()});
    }
    return circuit;
}

}  // namespace quafe::dsl
