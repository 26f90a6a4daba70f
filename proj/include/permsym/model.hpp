// Copyright 2026 The permsym Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/// @file model.hpp
/// @brief Line-oriented model documents: parsing, validation and printing.
///
/// A document has up to five sections, each at most once:
///
/// @code
/// [system]                       # mandatory
/// N = 2
/// levels = 2
/// dims = n11 n10 n01             # tracked dims, n00 is implicit
/// cutoffs = 3 3 3                # optional, default N + 1
/// energies = 0 1                 # optional, one per level
/// mode cav fock=4 energy=1.0
///
/// [liouvillian]
/// mls_mode_rwa x=0 y=1 mode=cav g=1
/// product coef=(0,-1) JL[11] bL[cav]
///
/// [initial]
/// pure = 1 0 0 0 0               # dims in order, then ket bra per mode
///
/// [solve]
/// method = rk4
/// dt = 0.01
/// t_end = 10
///
/// [output]
/// monitor_every = 30
/// file = ex1.dat
/// observable "<J_11>" mls_occupation n11
/// distribution photons.dat mode_number cav
/// @endcode
///
/// Rates are the half-rates multiplying the dissipator bracket, exactly as
/// the template takes them; the parser never rescales a parameter.

#pragma once

#include "permsym/basis.hpp"
#include "permsym/dynamics.hpp"
#include "permsym/integrators.hpp"
#include "permsym/prune.hpp"
#include "permsym/terms.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace permsym {

/// Syntax or validation error with a 1-based source position.
class ParseError : public Error {
public:
    ParseError(int line, int column, const std::string& reason)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + reason),
          line_(line), column_(column), reason_(reason) {}

    int line() const { return line_; }
    int column() const { return column_; }
    const std::string& reason() const { return reason_; }

private:
    int line_;
    int column_;
    std::string reason_;
};

/// A Liouvillian term with the source line it came from.
struct TermLine {
    Term term;
    int line = 0;

    friend bool operator==(const TermLine& a, const TermLine& b) { return a.term == b.term; }
};

enum class ObservableType { mls_occupation, mode_occupation, g2, product };

struct ObservableDecl {
    std::string label;
    ObservableType type = ObservableType::mls_occupation;
    MLSDimId dim{1, 1};
    std::size_t mode = 0;
    ProductTerm product;
    friend bool operator==(const ObservableDecl&, const ObservableDecl&) = default;
};

struct DistributionDecl {
    std::string file;
    DistributionKind kind;
    friend bool operator==(const DistributionDecl& a, const DistributionDecl& b) {
        if (a.file != b.file || a.kind.index() != b.kind.index()) return false;
        if (auto m = std::get_if<dist::ModeNumber>(&a.kind)) {
            return m->mode == std::get<dist::ModeNumber>(b.kind).mode;
        }
        return std::get<dist::MlsExcitation>(a.kind).dim == std::get<dist::MlsExcitation>(b.kind).dim;
    }
};

struct SolveSection {
    bool steady = false;
    SolverConfig config;
    PruneGranularity prune = PruneGranularity::configuration;
    bool prune_enabled = false;

    friend bool operator==(const SolveSection& a, const SolveSection& b) {
        const auto& x = a.config;
        const auto& y = b.config;
        return a.steady == b.steady && a.prune_enabled == b.prune_enabled &&
               (!a.prune_enabled || a.prune == b.prune) && x.method == y.method &&
               x.t_end == y.t_end && x.dt == y.dt && x.rtol == y.rtol && x.atol == y.atol &&
               x.dt_min == y.dt_min && x.dt_max == y.dt_max;
    }
};

struct OutputSection {
    std::size_t monitor_every = 30;
    std::string file = "observables.dat";
    std::vector<ObservableDecl> observables;
    std::vector<DistributionDecl> distributions;
    friend bool operator==(const OutputSection&, const OutputSection&) = default;
};

inline bool operator==(const ThermalInit& a, const ThermalInit& b) {
    return a.zero_temperature == b.zero_temperature &&
           (a.zero_temperature || a.temperature == b.temperature);
}
inline bool operator==(const PureInit& a, const PureInit& b) { return a.state == b.state; }

struct ModelDocument {
    SystemSpec system;
    std::vector<TermLine> terms;
    InitKind initial = ThermalInit{0.0, true};
    SolveSection solve;
    OutputSection output;

    std::vector<Term> term_list() const {
        std::vector<Term> out;
        for (const auto& t : terms) out.push_back(t.term);
        return out;
    }

    friend bool operator==(const ModelDocument&, const ModelDocument&) = default;
};

namespace detail {

struct Token {
    std::string text;
    int column = 1;
};

struct SourceLine {
    int number = 0;
    std::vector<Token> tokens;
};

inline std::vector<Token> tokenize(const std::string& line, int number) {
    std::vector<Token> out;
    std::size_t i = 0;
    const std::size_t n = line.size();
    while (i < n) {
        const char c = line[i];
        if (c == '#') break;
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            continue;
        }
        Token tok;
        tok.column = static_cast<int>(i) + 1;
        if (c == '"') {
            const auto close = line.find('"', i + 1);
            if (close == std::string::npos) throw ParseError(number, tok.column, "unterminated quoted string");
            tok.text = line.substr(i, close - i + 1);
            i = close + 1;
            if (i < n && line[i] != ' ' && line[i] != '\t' && line[i] != '#' && line[i] != '\r') {
                throw ParseError(number, static_cast<int>(i) + 1, "unexpected text after quoted string");
            }
            out.push_back(std::move(tok));
            continue;
        }
        while (i < n && line[i] != ' ' && line[i] != '\t' && line[i] != '\r' && line[i] != '#') {
            if (line[i] == '(') {
                const auto close = line.find(')', i);
                if (close == std::string::npos) {
                    throw ParseError(number, static_cast<int>(i) + 1, "malformed complex literal: missing ')'");
                }
                for (std::size_t k = i; k <= close; ++k) {
                    if (line[k] != ' ' && line[k] != '\t') tok.text += line[k];
                }
                i = close + 1;
                continue;
            }
            tok.text += line[i++];
        }
        out.push_back(std::move(tok));
    }
    return out;
}

inline std::optional<long long> to_int(std::string_view s) {
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size()) return std::nullopt;
    return v;
}

inline std::optional<double> to_real(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::string format_real(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string format_complex(cplx c) {
    return "(" + format_real(c.real()) + "," + format_real(c.imag()) + ")";
}

class LineParser {
public:
    explicit LineParser(const SourceLine& line) : line_(line) {}

    [[noreturn]] void fail(const Token& t, const std::string& msg) const {
        throw ParseError(line_.number, t.column, msg);
    }
    [[noreturn]] void fail_end(const std::string& msg) const {
        int col = 1;
        if (!line_.tokens.empty()) {
            const auto& t = line_.tokens.back();
            col = t.column + static_cast<int>(t.text.size());
        }
        throw ParseError(line_.number, col, msg);
    }

    long long integer(const Token& t, const std::string& what) const {
        auto v = to_int(t.text);
        if (!v) fail(t, "expected an integer for " + what + ", got '" + t.text + "'");
        return *v;
    }

    std::size_t count(const Token& t, const std::string& what) const {
        const auto v = integer(t, what);
        if (v < 0) fail(t, what + " must be non-negative");
        return static_cast<std::size_t>(v);
    }

    double real(const Token& t, const std::string& what) const {
        auto v = to_real(t.text);
        if (!v) fail(t, "expected a number for " + what + ", got '" + t.text + "'");
        return *v;
    }

    cplx complex(const Token& t) const {
        const auto& s = t.text;
        if (s.size() < 5 || s.front() != '(' || s.back() != ')') {
            fail(t, "malformed complex literal '" + s + "', expected (re,im)");
        }
        const auto comma = s.find(',');
        if (comma == std::string::npos || s.find(',', comma + 1) != std::string::npos) {
            fail(t, "malformed complex literal '" + s + "', expected (re,im)");
        }
        auto re = to_real(std::string_view(s).substr(1, comma - 1));
        auto im = to_real(std::string_view(s).substr(comma + 1, s.size() - comma - 2));
        if (!re || !im) fail(t, "malformed complex literal '" + s + "', expected (re,im)");
        return {*re, *im};
    }

    const SourceLine& line() const { return line_; }

private:
    const SourceLine& line_;
};

inline std::optional<MLSDimId> parse_dim_name(std::string_view s) {
    if (s.size() != 3 || s[0] != 'n' || !std::isdigit(static_cast<unsigned char>(s[1])) ||
        !std::isdigit(static_cast<unsigned char>(s[2]))) {
        return std::nullopt;
    }
    return MLSDimId{s[1] - '0', s[2] - '0'};
}

struct DocumentParser {
    ModelDocument doc;
    bool have_system = false;

    // ---- helpers bound to the parsed system ----

    MLSDimId dim(const LineParser& p, const Token& t, bool allow_ground) const {
        auto d = parse_dim_name(t.text);
        if (!d) p.fail(t, "malformed dim name '" + t.text + "', expected n<k><l>");
        if (d->left >= doc.system.d_levels || d->right >= doc.system.d_levels) {
            p.fail(t, "dim " + t.text + " references a level outside a " +
                          std::to_string(doc.system.d_levels) + "-level system");
        }
        if (d->is_ground()) {
            if (!allow_ground) p.fail(t, "n00 is not allowed here");
            return *d;
        }
        if (!doc.system.has_dim(*d)) p.fail(t, "undeclared dim " + t.text);
        return *d;
    }

    int level(const LineParser& p, const Token& t, const std::string& what) const {
        const auto v = p.integer(t, what);
        if (v < 0 || v >= doc.system.d_levels) {
            p.fail(t, what + " " + t.text + " outside levels 0.." + std::to_string(doc.system.d_levels - 1));
        }
        return static_cast<int>(v);
    }

    std::size_t mode(const LineParser& p, const Token& t) const {
        auto m = doc.system.mode_position(t.text);
        if (!m) p.fail(t, "undeclared mode '" + t.text + "'");
        return *m;
    }

    Factor factor(const LineParser& p, const Token& t) const {
        const auto& s = t.text;
        const auto open = s.find('[');
        if (open == std::string::npos || s.back() != ']' || open == 0) {
            p.fail(t, "malformed operator factor '" + s + "', expected NAME[args]");
        }
        const std::string name = s.substr(0, open);
        const std::string arg = s.substr(open + 1, s.size() - open - 2);
        Token at{arg, t.column + static_cast<int>(open) + 1};
        if (name == "JL" || name == "JR") {
            if (arg.size() != 2 || !std::isdigit(static_cast<unsigned char>(arg[0])) ||
                !std::isdigit(static_cast<unsigned char>(arg[1]))) {
                p.fail(at, "collective operator needs two level digits, got '" + arg + "'");
            }
            const int x = level(p, Token{arg.substr(0, 1), at.column}, "level");
            const int y = level(p, Token{arg.substr(1, 1), at.column + 1}, "level");
            return factor::Collective{name == "JL" ? Side::left : Side::right, x, y};
        }
        if (name == "NC") return factor::NonConnecting{dim(p, at, true)};
        if (name == "C") {
            const auto comma = arg.find(',');
            if (comma == std::string::npos) p.fail(at, "connecting arrow needs C[inc,dec]");
            Token a{arg.substr(0, comma), at.column};
            Token b{arg.substr(comma + 1), at.column + static_cast<int>(comma) + 1};
            const auto inc = dim(p, a, true);
            const auto dec = dim(p, b, true);
            if (inc == dec) p.fail(at, "connecting arrow needs two distinct dims");
            return factor::Connecting{inc, dec};
        }
        if (auto k = parse_mode_op(name)) return factor::Mode{mode(p, at), *k};
        p.fail(t, "unknown operator factor '" + name + "'");
    }

    ProductTerm product(const LineParser& p, cplx coef, std::size_t first) const {
        const auto& toks = p.line().tokens;
        if (first >= toks.size()) p.fail_end("product needs at least one operator factor");
        ProductTerm pt{coef, {}};
        for (std::size_t i = first; i < toks.size(); ++i) pt.factors.push_back(factor(p, toks[i]));
        return pt;
    }

    // ---- sections ----

    void parse_system(const std::vector<SourceLine>& lines, int header_line) {
        std::optional<std::size_t> n;
        std::optional<int> levels;
        std::vector<std::pair<MLSDimId, Token>> dims;
        std::vector<std::size_t> cutoffs;
        std::optional<Token> cutoff_tok;
        std::vector<double> energies;
        std::vector<ModeSpec> modes;
        std::set<std::string> seen;
        for (const auto& l : lines) {
            LineParser p(l);
            const auto& toks = l.tokens;
            if (toks[0].text == "mode") {
                if (toks.size() < 2) p.fail_end("mode declaration needs a name");
                ModeSpec m;
                m.name = toks[1].text;
                if (m.name.find_first_of("[]=,()\"") != std::string::npos || parse_dim_name(m.name)) {
                    p.fail(toks[1], "invalid mode name '" + m.name + "'");
                }
                bool have_fock = false;
                for (std::size_t i = 2; i < toks.size(); ++i) {
                    auto [key, value] = key_value(p, toks[i]);
                    if (key == "fock") {
                        m.fock_cutoff = p.count(value, "fock");
                        if (m.fock_cutoff == 0) p.fail(value, "Fock cutoff must be positive");
                        have_fock = true;
                    } else if (key == "energy") {
                        m.energy = p.real(value, "energy");
                    } else {
                        p.fail(toks[i], "unknown mode attribute '" + key + "'");
                    }
                }
                if (!have_fock) p.fail(toks[0], "mode " + m.name + " needs fock=<cutoff>");
                for (const auto& other : modes) {
                    if (other.name == m.name) p.fail(toks[1], "duplicate mode " + m.name);
                }
                modes.push_back(m);
                continue;
            }
            auto [key, values] = assignment(p);
            if (!seen.insert(key).second) p.fail(toks[0], "duplicate key '" + key + "'");
            if (key == "N") {
                single(p, values);
                const auto v = p.count(values[0], "N");
                if (v == 0) p.fail(values[0], "N must be positive");
                n = v;
            } else if (key == "levels") {
                single(p, values);
                const auto v = p.integer(values[0], "levels");
                if (v < 2 || v > 10) p.fail(values[0], "levels must lie in 2..10");
                levels = static_cast<int>(v);
            } else if (key == "dims") {
                if (values.empty()) p.fail_end("dims needs at least one dim name");
                for (const auto& t : values) {
                    auto d = parse_dim_name(t.text);
                    if (!d) p.fail(t, "malformed dim name '" + t.text + "', expected n<k><l>");
                    dims.emplace_back(*d, t);
                }
            } else if (key == "cutoffs") {
                if (values.empty()) p.fail_end("cutoffs needs one value per dim");
                for (const auto& t : values) cutoffs.push_back(p.count(t, "cutoff"));
                cutoff_tok = values[0];
            } else if (key == "energies") {
                if (values.empty()) p.fail_end("energies needs one value per level");
                for (const auto& t : values) energies.push_back(p.real(t, "energy"));
            } else {
                p.fail(toks[0], "unknown [system] key '" + key + "'");
            }
        }
        if (!n) throw ParseError(header_line, 1, "[system] is missing N");
        if (!levels) throw ParseError(header_line, 1, "[system] is missing levels");
        if (dims.empty()) throw ParseError(header_line, 1, "[system] is missing dims");
        std::vector<TrackedDim> tracked;
        for (std::size_t i = 0; i < dims.size(); ++i) {
            const auto& [d, tok] = dims[i];
            if (d.left >= *levels || d.right >= *levels) {
                throw ParseError(line_of(lines, "dims"), tok.column,
                                 "dim " + tok.text + " references a level outside a " +
                                     std::to_string(*levels) + "-level system");
            }
            if (d.is_ground()) {
                throw ParseError(line_of(lines, "dims"), tok.column,
                                 "n00 is the implicit ground density and cannot be tracked");
            }
            for (std::size_t j = 0; j < i; ++j) {
                if (dims[j].first == d) {
                    throw ParseError(line_of(lines, "dims"), tok.column, "duplicate dim " + tok.text);
                }
            }
            tracked.push_back({d, *n + 1});
        }
        if (!cutoffs.empty()) {
            if (cutoffs.size() != dims.size()) {
                throw ParseError(line_of(lines, "cutoffs"), cutoff_tok->column,
                                 "expected " + std::to_string(dims.size()) + " cutoffs, got " +
                                     std::to_string(cutoffs.size()));
            }
            for (std::size_t i = 0; i < cutoffs.size(); ++i) tracked[i].cutoff = cutoffs[i];
        }
        if (!energies.empty() && energies.size() != static_cast<std::size_t>(*levels)) {
            throw ParseError(line_of(lines, "energies"), 1,
                             "expected " + std::to_string(*levels) + " energies, got " +
                                 std::to_string(energies.size()));
        }
        try {
            doc.system = define_system(*n, *levels, tracked, energies, modes);
        } catch (const Error& e) {
            throw ParseError(header_line, 1, e.what());
        }
        have_system = true;
    }

    void parse_liouvillian(const std::vector<SourceLine>& lines) {
        for (const auto& l : lines) {
            LineParser p(l);
            doc.terms.push_back({parse_term(p), l.number});
        }
    }

    Term parse_term(const LineParser& p) const {
        const auto& toks = p.line().tokens;
        const std::string& name = toks[0].text;
        if (name == "product") {
            if (toks.size() < 2) p.fail_end("product needs coef=(re,im) and factors");
            auto [key, value] = key_value(p, toks[1]);
            if (key != "coef") p.fail(toks[1], "product needs coef=(re,im) first");
            return product(p, p.complex(value), 2);
        }
        Args args(p, 1);
        Term term;
        if (name == "mls_h0") {
            term = TemplateKind{tmpl::MlsH0{level(p, args.get("level"), "level"), p.real(args.get("omega"), "omega")}};
        } else if (name == "mode_h0") {
            term = TemplateKind{tmpl::ModeH0{mode(p, args.get("mode")), p.real(args.get("omega"), "omega")}};
        } else if (name == "mls_mode_rwa" || name == "mls_mode_nonrwa") {
            const int x = level(p, args.get("x"), "x");
            const int y = level(p, args.get("y"), "y");
            if (x == y) p.fail(args.get("y"), "coupling needs two distinct levels");
            const auto m = mode(p, args.get("mode"));
            const double g = p.real(args.get("g"), "g");
            if (name == "mls_mode_rwa") {
                term = TemplateKind{tmpl::MlsModeRwa{x, y, m, g}};
            } else {
                term = TemplateKind{tmpl::MlsModeNonRwa{x, y, m, g}};
            }
        } else if (name == "mls_coh_drive") {
            const int x = level(p, args.get("x"), "x");
            const int y = level(p, args.get("y"), "y");
            if (x == y) p.fail(args.get("y"), "drive needs two distinct levels");
            term = TemplateKind{tmpl::MlsCohDrive{x, y, p.real(args.get("E"), "E")}};
        } else if (name == "mode_coh_drive") {
            term = TemplateKind{tmpl::ModeCohDrive{mode(p, args.get("mode")), p.real(args.get("E"), "E")}};
        } else if (name == "lindblad_relax_mls") {
            const auto from = dim(p, args.get("from"), true);
            const auto to = dim(p, args.get("to"), true);
            if (!from.is_density()) p.fail(args.get("from"), "relaxation needs density dims");
            if (!to.is_density()) p.fail(args.get("to"), "relaxation needs density dims");
            if (from == to) p.fail(args.get("to"), "relaxation needs two distinct dims");
            term = TemplateKind{tmpl::LindbladRelaxMls{from, to, p.real(args.get("rate"), "rate")}};
        } else if (name == "lindblad_deph_mls") {
            term = TemplateKind{tmpl::LindbladDephMls{dim(p, args.get("dim"), true), p.real(args.get("rate"), "rate")}};
        } else if (name == "mls_decay") {
            const int from = level(p, args.get("from"), "from");
            const int to = level(p, args.get("to"), "to");
            if (from == to) p.fail(args.get("to"), "decay needs two distinct levels");
            term = TemplateKind{tmpl::MlsDecay{from, to, p.real(args.get("rate"), "rate")}};
        } else if (name == "lindblad_mode") {
            term = TemplateKind{tmpl::LindbladMode{mode(p, args.get("mode")), p.real(args.get("rate"), "rate")}};
        } else if (name == "lindblad_mode_thermal") {
            term = TemplateKind{tmpl::LindbladModeThermal{mode(p, args.get("mode")), p.real(args.get("rate"), "rate"),
                                                          p.real(args.get("nbar"), "nbar")}};
        } else if (name == "arrow_nc") {
            term = ProductTerm{p.complex(args.get("coef")), {factor::NonConnecting{dim(p, args.get("dim"), true)}}};
        } else if (name == "arrow_c") {
            const auto inc = dim(p, args.get("inc"), true);
            const auto dec = dim(p, args.get("dec"), true);
            if (inc == dec) p.fail(args.get("dec"), "connecting arrow needs two distinct dims");
            term = ProductTerm{p.complex(args.get("coef")), {factor::Connecting{inc, dec}}};
        } else if (name == "collective") {
            const auto& side_tok = args.get("side");
            if (side_tok.text != "left" && side_tok.text != "right") p.fail(side_tok, "side must be left or right");
            term = ProductTerm{p.complex(args.get("coef")),
                               {factor::Collective{side_tok.text == "left" ? Side::left : Side::right,
                                                   level(p, args.get("x"), "x"), level(p, args.get("y"), "y")}}};
        } else if (name == "mode_op") {
            const auto& kind_tok = args.get("kind");
            auto kind = parse_mode_op(kind_tok.text);
            if (!kind) p.fail(kind_tok, "unknown mode operator '" + kind_tok.text + "'");
            term = ProductTerm{p.complex(args.get("coef")), {factor::Mode{mode(p, args.get("mode")), *kind}}};
        } else {
            p.fail(toks[0], "unknown term '" + name + "'");
        }
        args.finish();
        return term;
    }

    void parse_initial(const std::vector<SourceLine>& lines) {
        bool set = false;
        for (const auto& l : lines) {
            LineParser p(l);
            auto [key, values] = assignment(p);
            if (key != "pure" && key != "thermal") p.fail(l.tokens[0], "unknown [initial] key '" + key + "'");
            if (set) p.fail(l.tokens[0], "initial state given twice");
            set = true;
            if (key == "thermal") {
                single(p, values);
                if (values[0].text == "zero") {
                    doc.initial = ThermalInit{0.0, true};
                } else {
                    const double t = p.real(values[0], "temperature");
                    if (!(t > 0.0)) p.fail(values[0], "temperature must be positive (or 'zero')");
                    doc.initial = ThermalInit{t, false};
                }
                continue;
            }
            const auto& spec = doc.system;
            const std::size_t expect = spec.tracked_dims.size() + 2 * spec.modes.size();
            if (values.size() != expect) {
                p.fail(values.empty() ? l.tokens[0] : values[0],
                       "pure state needs " + std::to_string(expect) + " quantum numbers, got " +
                           std::to_string(values.size()));
            }
            MultiIndex m;
            std::size_t sum = 0;
            for (std::size_t i = 0; i < spec.tracked_dims.size(); ++i) {
                const auto v = p.count(values[i], "count");
                if (v >= spec.tracked_dims[i].cutoff) p.fail(values[i], "count exceeds the cutoff of " + spec.tracked_dims[i].id.name());
                sum += v;
                m.mls_counts.push_back(v);
            }
            if (sum > spec.n_systems) p.fail(values[0], "counts sum to more than N");
            for (std::size_t j = 0; j < spec.modes.size(); ++j) {
                const auto& kt = values[spec.tracked_dims.size() + 2 * j];
                const auto& bt = values[spec.tracked_dims.size() + 2 * j + 1];
                const auto k = p.count(kt, "Fock index");
                const auto b = p.count(bt, "Fock index");
                if (k >= spec.modes[j].fock_cutoff) p.fail(kt, "Fock index beyond cutoff of mode " + spec.modes[j].name);
                if (b >= spec.modes[j].fock_cutoff) p.fail(bt, "Fock index beyond cutoff of mode " + spec.modes[j].name);
                m.mode_kets.push_back(k);
                m.mode_bras.push_back(b);
            }
            doc.initial = PureInit{m};
        }
    }

    void parse_solve(const std::vector<SourceLine>& lines) {
        std::set<std::string> seen;
        std::optional<Token> method_tok, steady_tok;
        auto& c = doc.solve.config;
        for (const auto& l : lines) {
            LineParser p(l);
            auto [key, values] = assignment(p);
            if (!seen.insert(key).second) p.fail(l.tokens[0], "duplicate key '" + key + "'");
            single(p, values);
            const Token& v = values[0];
            if (key == "method") {
                if (v.text == "rk4") {
                    c.method = Method::rk4_fixed;
                } else if (v.text == "rk_adaptive") {
                    c.method = Method::rk_adaptive_32;
                } else {
                    p.fail(v, "unknown method '" + v.text + "', expected rk4 or rk_adaptive");
                }
                method_tok = l.tokens[0];
                method_line_ = l.number;
            } else if (key == "steady") {
                if (v.text != "true" && v.text != "false") p.fail(v, "steady must be true or false");
                doc.solve.steady = v.text == "true";
                if (doc.solve.steady) steady_tok = l.tokens[0], steady_line_ = l.number;
            } else if (key == "prune") {
                if (v.text == "none" || v.text == "false") {
                    doc.solve.prune_enabled = false;
                } else if (v.text == "configurations" || v.text == "true") {
                    doc.solve.prune_enabled = true;
                    doc.solve.prune = PruneGranularity::configuration;
                } else if (v.text == "states") {
                    doc.solve.prune_enabled = true;
                    doc.solve.prune = PruneGranularity::state;
                } else {
                    p.fail(v, "prune must be none, configurations, states, true or false");
                }
            } else if (key == "dt" || key == "t_end" || key == "rtol" || key == "atol" || key == "dt_min" ||
                       key == "dt_max") {
                const double x = p.real(v, key);
                if (!(x > 0.0)) p.fail(v, key + " must be positive");
                if (key == "dt") c.dt = x;
                if (key == "t_end") c.t_end = x;
                if (key == "rtol") c.rtol = x;
                if (key == "atol") c.atol = x;
                if (key == "dt_min") c.dt_min = x;
                if (key == "dt_max") c.dt_max = x;
            } else {
                p.fail(l.tokens[0], "unknown [solve] key '" + key + "'");
            }
        }
        if (method_tok && steady_tok) {
            throw ParseError(std::max(method_line_, steady_line_), 1,
                             "choose one solve mode: method and steady = true are exclusive");
        }
        if (c.dt_max < c.dt_min) throw ParseError(lines.empty() ? 0 : lines.back().number, 1, "dt_max must be >= dt_min");
    }

    void parse_output(const std::vector<SourceLine>& lines) {
        std::set<std::string> seen;
        auto& out = doc.output;
        for (const auto& l : lines) {
            LineParser p(l);
            const auto& toks = l.tokens;
            if (toks[0].text == "observable") {
                if (toks.size() < 3) p.fail_end("observable needs a label and a kind");
                ObservableDecl o;
                o.label = label(p, toks[1]);
                const std::string& kind = toks[2].text;
                auto need = [&](std::size_t n) {
                    if (toks.size() != n) {
                        if (toks.size() < n) p.fail_end("observable " + kind + " needs an argument");
                        p.fail(toks[n], "unexpected token '" + toks[n].text + "'");
                    }
                };
                if (kind == "mls_occupation") {
                    need(4);
                    o.type = ObservableType::mls_occupation;
                    o.dim = dim(p, toks[3], true);
                    if (!o.dim.is_density()) p.fail(toks[3], "occupation needs a density dim, got polarization " + toks[3].text);
                } else if (kind == "mode_occupation" || kind == "g2") {
                    need(4);
                    o.type = kind == "g2" ? ObservableType::g2 : ObservableType::mode_occupation;
                    o.mode = mode(p, toks[3]);
                } else if (kind == "product") {
                    if (toks.size() < 5) p.fail_end("product observable needs a coefficient and factors");
                    o.type = ObservableType::product;
                    o.product = product(p, p.complex(toks[3]), 4);
                } else {
                    p.fail(toks[2], "unknown observable kind '" + kind + "'");
                }
                for (const auto& other : out.observables) {
                    if (other.label == o.label) p.fail(toks[1], "duplicate observable label " + o.label);
                }
                out.observables.push_back(std::move(o));
                continue;
            }
            if (toks[0].text == "distribution") {
                if (toks.size() != 4) {
                    if (toks.size() < 4) p.fail_end("distribution needs <file> <kind> <target>");
                    p.fail(toks[4], "unexpected token '" + toks[4].text + "'");
                }
                DistributionDecl d;
                d.file = file_name(p, toks[1]);
                if (toks[2].text == "mode_number") {
                    d.kind = dist::ModeNumber{mode(p, toks[3])};
                } else if (toks[2].text == "mls_excitation") {
                    const auto dd = dim(p, toks[3], true);
                    if (!dd.is_density()) p.fail(toks[3], "excitation distribution needs a density dim");
                    d.kind = dist::MlsExcitation{dd};
                } else {
                    p.fail(toks[2], "unknown distribution kind '" + toks[2].text + "'");
                }
                out.distributions.push_back(std::move(d));
                continue;
            }
            auto [key, values] = assignment(p);
            if (!seen.insert(key).second) p.fail(toks[0], "duplicate key '" + key + "'");
            single(p, values);
            if (key == "monitor_every") {
                const auto v = p.count(values[0], "monitor_every");
                if (v == 0) p.fail(values[0], "monitor_every must be positive");
                out.monitor_every = v;
            } else if (key == "file") {
                out.file = file_name(p, values[0]);
            } else {
                p.fail(toks[0], "unknown [output] key '" + key + "'");
            }
        }
        doc.solve.config.monitor_every = out.monitor_every;
    }

    // ---- small grammar pieces ----

    static std::pair<std::string, Token> key_value(const LineParser& p, const Token& t) {
        const auto eq = t.text.find('=');
        if (eq == std::string::npos || eq == 0 || eq + 1 == t.text.size()) {
            p.fail(t, "expected key=value, got '" + t.text + "'");
        }
        return {t.text.substr(0, eq), Token{t.text.substr(eq + 1), t.column + static_cast<int>(eq) + 1}};
    }

    /// `key = v1 v2 ...` or `key=v1 v2 ...`
    static std::pair<std::string, std::vector<Token>> assignment(const LineParser& p) {
        const auto& toks = p.line().tokens;
        std::vector<Token> values;
        std::string key;
        const auto eq = toks[0].text.find('=');
        if (eq != std::string::npos) {
            key = toks[0].text.substr(0, eq);
            if (key.empty()) p.fail(toks[0], "missing key before '='");
            const std::string rest = toks[0].text.substr(eq + 1);
            if (!rest.empty()) values.push_back({rest, toks[0].column + static_cast<int>(eq) + 1});
            for (std::size_t i = 1; i < toks.size(); ++i) values.push_back(toks[i]);
        } else {
            key = toks[0].text;
            if (toks.size() < 2 || toks[1].text.rfind("=", 0) != 0) {
                p.fail(toks.size() < 2 ? toks[0] : toks[1], "expected '=' after '" + key + "'");
            }
            const std::string rest = toks[1].text.substr(1);
            if (!rest.empty()) values.push_back({rest, toks[1].column + 1});
            for (std::size_t i = 2; i < toks.size(); ++i) values.push_back(toks[i]);
        }
        if (values.empty()) p.fail_end("missing value for '" + key + "'");
        return {key, values};
    }

    static void single(const LineParser& p, const std::vector<Token>& values) {
        if (values.size() != 1) p.fail(values[1], "expected a single value, got extra '" + values[1].text + "'");
    }

    static std::string label(const LineParser& p, const Token& t) {
        std::string s = t.text;
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
        if (s.empty()) p.fail(t, "observable label must not be empty");
        if (s.find_first_of(" \t\"") != std::string::npos) p.fail(t, "observable label must not contain whitespace");
        return s;
    }

    static std::string file_name(const LineParser& p, const Token& t) {
        std::string s = t.text;
        if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = s.substr(1, s.size() - 2);
        if (s.empty() || s.find_first_of(" \t\"") != std::string::npos) p.fail(t, "invalid file name '" + t.text + "'");
        return s;
    }

    static int line_of(const std::vector<SourceLine>& lines, const std::string& key) {
        for (const auto& l : lines) {
            const auto& t = l.tokens[0].text;
            if (t == key || t.rfind(key + "=", 0) == 0) return l.number;
        }
        return 0;
    }

    /// key=value arguments of a term line, each consumed at most once.
    class Args {
    public:
        Args(const LineParser& p, std::size_t first) : p_(p) {
            const auto& toks = p.line().tokens;
            for (std::size_t i = first; i < toks.size(); ++i) {
                auto kv = key_value(p, toks[i]);
                for (const auto& e : entries_) {
                    if (e.key == kv.first) p.fail(toks[i], "duplicate argument '" + kv.first + "'");
                }
                entries_.push_back({kv.first, kv.second, toks[i], false});
            }
        }

        const Token& get(const std::string& key) {
            for (auto& e : entries_) {
                if (e.key == key) {
                    e.used = true;
                    return e.value;
                }
            }
            p_.fail_end("missing argument " + key + "=");
        }

        void finish() const {
            for (const auto& e : entries_) {
                if (!e.used) p_.fail(e.whole, "unknown argument '" + e.key + "'");
            }
        }

    private:
        struct Entry {
            std::string key;
            Token value;
            Token whole;
            bool used;
        };
        const LineParser& p_;
        std::vector<Entry> entries_;
    };

    int method_line_ = 0;
    int steady_line_ = 0;
};

} // namespace detail

inline ModelDocument parse_model(const std::string& text) {
    static const std::vector<std::string> kSections = {"system", "liouvillian", "initial", "solve", "output"};
    std::map<std::string, std::pair<int, std::vector<detail::SourceLine>>> sections;
    std::string current;
    std::istringstream in(text);
    std::string raw;
    int number = 0;
    while (std::getline(in, raw)) {
        ++number;
        auto toks = detail::tokenize(raw, number);
        if (toks.empty()) continue;
        const auto& first = toks[0].text;
        if (first.front() == '[') {
            if (first.back() != ']' || toks.size() != 1) {
                throw ParseError(number, toks[0].column, "malformed section header");
            }
            const std::string name = first.substr(1, first.size() - 2);
            if (std::find(kSections.begin(), kSections.end(), name) == kSections.end()) {
                throw ParseError(number, toks[0].column, "unknown section [" + name + "]");
            }
            if (sections.count(name)) throw ParseError(number, toks[0].column, "duplicate section [" + name + "]");
            sections[name].first = number;
            current = name;
            continue;
        }
        if (current.empty()) throw ParseError(number, toks[0].column, "content before the first section header");
        sections[current].second.push_back({number, std::move(toks)});
    }
    if (!sections.count("system")) throw ParseError(std::max(number, 1), 1, "missing [system] section");

    detail::DocumentParser p;
    p.parse_system(sections["system"].second, sections["system"].first);
    if (sections.count("liouvillian")) p.parse_liouvillian(sections["liouvillian"].second);
    if (sections.count("initial")) p.parse_initial(sections["initial"].second);
    if (sections.count("solve")) p.parse_solve(sections["solve"].second);
    if (sections.count("output")) p.parse_output(sections["output"].second);
    return p.doc;
}

namespace detail {

inline std::string factor_text(const SystemSpec& spec, const Factor& f) {
    if (auto c = std::get_if<factor::Collective>(&f)) {
        return std::string(c->side == Side::left ? "JL[" : "JR[") + std::to_string(c->x) + std::to_string(c->y) + "]";
    }
    if (auto m = std::get_if<factor::Mode>(&f)) {
        return std::string(mode_op_name(m->kind)) + "[" + spec.modes.at(m->mode).name + "]";
    }
    if (auto n = std::get_if<factor::NonConnecting>(&f)) return "NC[" + n->dim.name() + "]";
    const auto& c = std::get<factor::Connecting>(f);
    return "C[" + c.inc.name() + "," + c.dec.name() + "]";
}

inline std::string factors_text(const SystemSpec& spec, const ProductTerm& p) {
    std::string s;
    for (const auto& f : p.factors) s += " " + factor_text(spec, f);
    return s;
}

} // namespace detail

/// One canonical line for a term (no trailing newline).
inline std::string print_term(const SystemSpec& spec, const Term& term) {
    using detail::format_real;
    if (auto p = std::get_if<ProductTerm>(&term)) {
        return "product coef=" + detail::format_complex(p->coef) + detail::factors_text(spec, *p);
    }
    auto mname = [&](std::size_t m) { return spec.modes.at(m).name; };
    return std::visit(
        [&](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, tmpl::MlsH0>) {
                return "mls_h0 level=" + std::to_string(v.level) + " omega=" + format_real(v.omega);
            } else if constexpr (std::is_same_v<T, tmpl::ModeH0>) {
                return "mode_h0 mode=" + mname(v.mode) + " omega=" + format_real(v.omega);
            } else if constexpr (std::is_same_v<T, tmpl::MlsModeRwa> || std::is_same_v<T, tmpl::MlsModeNonRwa>) {
                return std::string(std::is_same_v<T, tmpl::MlsModeRwa> ? "mls_mode_rwa" : "mls_mode_nonrwa") +
                       " x=" + std::to_string(v.x) + " y=" + std::to_string(v.y) + " mode=" + mname(v.mode) +
                       " g=" + format_real(v.g);
            } else if constexpr (std::is_same_v<T, tmpl::MlsCohDrive>) {
                return "mls_coh_drive x=" + std::to_string(v.x) + " y=" + std::to_string(v.y) + " E=" + format_real(v.E);
            } else if constexpr (std::is_same_v<T, tmpl::ModeCohDrive>) {
                return "mode_coh_drive mode=" + mname(v.mode) + " E=" + format_real(v.E);
            } else if constexpr (std::is_same_v<T, tmpl::LindbladRelaxMls>) {
                return "lindblad_relax_mls from=" + v.from.name() + " to=" + v.to.name() + " rate=" + format_real(v.rate);
            } else if constexpr (std::is_same_v<T, tmpl::LindbladDephMls>) {
                return "lindblad_deph_mls dim=" + v.dim.name() + " rate=" + format_real(v.rate);
            } else if constexpr (std::is_same_v<T, tmpl::MlsDecay>) {
                return "mls_decay from=" + std::to_string(v.from) + " to=" + std::to_string(v.to) +
                       " rate=" + format_real(v.rate);
            } else if constexpr (std::is_same_v<T, tmpl::LindbladMode>) {
                return "lindblad_mode mode=" + mname(v.mode) + " rate=" + format_real(v.rate);
            } else {
                return "lindblad_mode_thermal mode=" + mname(v.mode) + " rate=" + format_real(v.rate) +
                       " nbar=" + format_real(v.nbar);
            }
        },
        std::get<TemplateKind>(term));
}

/// Canonical text of a document; parse_model(print_model(d)) == d.
inline std::string print_model(const ModelDocument& doc) {
    using detail::format_real;
    const auto& s = doc.system;
    std::ostringstream out;
    out << "[system]\n";
    out << "N = " << s.n_systems << "\n";
    out << "levels = " << s.d_levels << "\n";
    out << "dims =";
    for (const auto& d : s.tracked_dims) out << " " << d.id.name();
    out << "\ncutoffs =";
    for (const auto& d : s.tracked_dims) out << " " << d.cutoff;
    out << "\nenergies =";
    for (double e : s.level_energies) out << " " << format_real(e);
    out << "\n";
    for (const auto& m : s.modes) {
        out << "mode " << m.name << " fock=" << m.fock_cutoff << " energy=" << format_real(m.energy) << "\n";
    }
    out << "\n[liouvillian]\n";
    for (const auto& t : doc.terms) out << print_term(s, t.term) << "\n";
    out << "\n[initial]\n";
    if (auto p = std::get_if<PureInit>(&doc.initial)) {
        out << "pure =";
        for (auto c : p->state.mls_counts) out << " " << c;
        for (std::size_t j = 0; j < p->state.mode_kets.size(); ++j) {
            out << " " << p->state.mode_kets[j] << " " << p->state.mode_bras[j];
        }
        out << "\n";
    } else {
        const auto& th = std::get<ThermalInit>(doc.initial);
        out << "thermal = " << (th.zero_temperature ? std::string("zero") : format_real(th.temperature)) << "\n";
    }
    const auto& c = doc.solve.config;
    out << "\n[solve]\n";
    if (doc.solve.steady) {
        out << "steady = true\n";
    } else {
        out << "method = " << (c.method == Method::rk4_fixed ? "rk4" : "rk_adaptive") << "\n";
    }
    out << "dt = " << format_real(c.dt) << "\n";
    out << "t_end = " << format_real(c.t_end) << "\n";
    out << "rtol = " << format_real(c.rtol) << "\n";
    out << "atol = " << format_real(c.atol) << "\n";
    out << "dt_min = " << format_real(c.dt_min) << "\n";
    if (std::isfinite(c.dt_max)) out << "dt_max = " << format_real(c.dt_max) << "\n";
    out << "prune = "
        << (!doc.solve.prune_enabled ? "none"
                                     : (doc.solve.prune == PruneGranularity::configuration ? "configurations" : "states"))
        << "\n";
    out << "\n[output]\n";
    out << "monitor_every = " << doc.output.monitor_every << "\n";
    out << "file = " << doc.output.file << "\n";
    for (const auto& o : doc.output.observables) {
        out << "observable \"" << o.label << "\" ";
        switch (o.type) {
        case ObservableType::mls_occupation: out << "mls_occupation " << o.dim.name(); break;
        case ObservableType::mode_occupation: out << "mode_occupation " << s.modes.at(o.mode).name; break;
        case ObservableType::g2: out << "g2 " << s.modes.at(o.mode).name; break;
        case ObservableType::product:
            out << "product " << detail::format_complex(o.product.coef) << detail::factors_text(s, o.product);
            break;
        }
        out << "\n";
    }
    for (const auto& d : doc.output.distributions) {
        out << "distribution " << d.file << " ";
        if (auto m = std::get_if<dist::ModeNumber>(&d.kind)) {
            out << "mode_number " << s.modes.at(m->mode).name;
        } else {
            out << "mls_excitation " << std::get<dist::MlsExcitation>(d.kind).dim.name();
        }
        out << "\n";
    }
    return out.str();
}

} // namespace permsym
