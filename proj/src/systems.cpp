#include "sts/systems.hpp"

#include <json.hpp>

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

namespace sts {

namespace {

// ---------------------------------------------------------------------------
// Recursive-descent parser
// ---------------------------------------------------------------------------

class Cursor {
public:
    Cursor(const std::string& text, int dimension) : text_(text), dim_(dimension) {}

    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
            ++pos_;
    }
    bool done() {
        skip_ws();
        return pos_ >= text_.size();
    }
    char peek() {
        skip_ws();
        return pos_ < text_.size() ? text_[pos_] : '\0';
    }
    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }
    void expect(char c, const std::string& what) {
        if (!accept(c)) fail("expected '" + std::string(1, c) + "' (" + what + ")");
    }
    bool accept_word(const std::string& w) {
        skip_ws();
        if (text_.compare(pos_, w.size(), w) == 0) {
            pos_ += w.size();
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError("flow expression error at position " + std::to_string(pos_) +
                          ": " + msg + " in \"" + text_ + "\"");
    }

    double number() {
        skip_ws();
        const size_t start = pos_;
        if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
        size_t digits = 0;
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
            ++pos_;
            ++digits;
        }
        if (pos_ < text_.size() && text_[pos_] == '.') {
            ++pos_;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++digits;
            }
        }
        if (digits == 0) fail("expected a number");
        if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
            ++pos_;
            if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
            size_t exp_digits = 0;
            while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
                ++pos_;
                ++exp_digits;
            }
            if (exp_digits == 0) fail("malformed exponent");
        }
        return std::stod(text_.substr(start, pos_ - start));
    }

    int integer(const std::string& what) {
        const size_t start = pos_;
        const double v = number();
        const double r = std::round(v);
        if (v != r) {
            pos_ = start;
            fail("non-integer " + what);
        }
        return static_cast<int>(r);
    }

    int variable() {
        skip_ws();
        if (!accept('x')) fail("expected a variable x1..x" + std::to_string(dim_));
        if (pos_ >= text_.size() || !std::isdigit(static_cast<unsigned char>(text_[pos_])))
            fail("expected a variable index after 'x'");
        const int idx = text_[pos_] - '0';
        ++pos_;
        if (idx < 1 || idx > dim_)
            fail("variable x" + std::to_string(idx) + " out of range for dimension " +
                 std::to_string(dim_));
        return idx - 1;
    }

    size_t pos() const { return pos_; }

private:
    const std::string& text_;
    int dim_;
    size_t pos_ = 0;
};

std::array<int, 3> parse_phase(Cursor& cur) {
    std::array<int, 3> wave{0, 0, 0};
    double sign = 1.0;
    while (true) {
        const int n = cur.integer("wavenumber");
        cur.expect('*', "wavenumber must multiply a variable");
        const int var = cur.variable();
        wave[var] += static_cast<int>(sign) * n;
        if (cur.accept('+')) {
            sign = 1.0;
        } else if (cur.accept('-')) {
            sign = -1.0;
        } else {
            break;
        }
    }
    return wave;
}

FlowTerm parse_term(Cursor& cur) {
    FlowTerm term;
    term.coeff = 1.0;
    bool have_coeff = false;
    const char c = cur.peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '+' || c == '-') {
        term.coeff = cur.number();
        have_coeff = true;
        if (!cur.accept('*')) {
            term.kind = FlowTerm::Kind::Const;
            return term;
        }
    }
    if (cur.accept_word("sin")) {
        term.kind = FlowTerm::Kind::Sin;
    } else if (cur.accept_word("cos")) {
        term.kind = FlowTerm::Kind::Cos;
    } else {
        cur.fail(have_coeff ? "expected sin/cos after '*'"
                            : "expected a term (number, sin or cos)");
    }
    cur.expect('(', "function argument");
    term.wave = parse_phase(cur);
    cur.expect(')', "closing the function argument");
    return term;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

FlowExpression parse_flow_expression(const std::string& text, int dimension) {
    if (dimension < 1 || dimension > 3)
        throw ConfigError("parse_flow_expression: dimension must be 1..3");
    FlowExpression expr;
    expr.source = text;
    expr.dimension = dimension;
    Cursor cur(text, dimension);
    double sign = 1.0;
    if (cur.accept('-'))
        sign = -1.0;
    else
        cur.accept('+');
    while (true) {
        FlowTerm term = parse_term(cur);
        term.coeff *= sign;
        expr.terms.push_back(term);
        if (cur.accept('+')) {
            sign = 1.0;
        } else if (cur.accept('-')) {
            sign = -1.0;
        } else {
            break;
        }
    }
    if (!cur.done()) cur.fail("unexpected trailing input");
    return expr;
}

std::string FlowExpression::to_string() const {
    if (terms.empty()) return "0";
    std::string out;
    for (size_t i = 0; i < terms.size(); ++i) {
        const FlowTerm& t = terms[i];
        double c = t.coeff;
        if (i == 0) {
            if (c < 0) {
                out += "-";
                c = -c;
            }
        } else {
            out += (c < 0) ? " - " : " + ";
            c = std::abs(c);
        }
        if (t.kind == FlowTerm::Kind::Const) {
            out += format_double(c);
            continue;
        }
        out += format_double(c);
        out += "*";
        out += (t.kind == FlowTerm::Kind::Sin) ? "sin(" : "cos(";
        bool first = true;
        bool any = false;
        for (int a = 0; a < dimension; ++a) {
            if (t.wave[a] == 0) continue;
            any = true;
            int n = t.wave[a];
            if (first) {
                if (n < 0) {
                    out += "-";
                    n = -n;
                }
            } else {
                out += (n < 0) ? " - " : " + ";
                n = std::abs(n);
            }
            out += std::to_string(n) + "*x" + std::to_string(a + 1);
            first = false;
        }
        if (!any) out += "0*x1";
        out += ")";
    }
    return out;
}

TrigField FlowExpression::to_field(const ModeLattice& lattice) const {
    if (lattice.dimension() != dimension)
        throw ConfigError("FlowExpression: lattice dimension mismatch");
    TrigField field(lattice);
    for (const FlowTerm& t : terms) {
        if (t.kind == FlowTerm::Kind::Const) {
            field.coeffs()(lattice.index_of({0, 0, 0})) += t.coeff;
            continue;
        }
        std::array<int, 3> neg{-t.wave[0], -t.wave[1], -t.wave[2]};
        if (!lattice.contains(t.wave))
            throw ConfigError("flow expression term \"" + to_string() +
                              "\": mode outside lattice cutoff M=" +
                              std::to_string(lattice.cutoff()));
        if (t.kind == FlowTerm::Kind::Cos) {
            field.coeffs()(lattice.index_of(t.wave)) += Complex(t.coeff / 2.0, 0.0);
            field.coeffs()(lattice.index_of(neg)) += Complex(t.coeff / 2.0, 0.0);
        } else {
            field.coeffs()(lattice.index_of(t.wave)) += Complex(0.0, -t.coeff / 2.0);
            field.coeffs()(lattice.index_of(neg)) += Complex(0.0, t.coeff / 2.0);
        }
    }
    return field;
}

TrigField parse_to_field(const std::string& text, const ModeLattice& lattice) {
    return parse_flow_expression(text, lattice.dimension()).to_field(lattice);
}

// ---------------------------------------------------------------------------
// Builtins
// ---------------------------------------------------------------------------

namespace {

class ParamReader {
public:
    explicit ParamReader(const BuiltinParams& p) : params_(p) {}

    double get(const std::string& key, double fallback) {
        seen_.insert(key);
        auto it = params_.values.find(key);
        return it == params_.values.end() ? fallback : it->second;
    }

    void finish(const std::string& system) const {
        for (const auto& [key, value] : params_.values)
            if (!seen_.count(key))
                throw ConfigError("builtin " + system + ": unknown parameter \"" + key +
                                  "\"");
    }

private:
    const BuiltinParams& params_;
    std::set<std::string> seen_;
};

TrigVectorField fields_from_exprs(const ModeLattice& lat,
                                  const std::vector<std::string>& exprs) {
    TrigVectorField v(lat);
    for (int i = 0; i < lat.dimension(); ++i) v.comps[i] = parse_to_field(exprs[i], lat);
    return v;
}

}  // namespace

std::vector<std::string> builtin_names() {
    return {"diffusion", "grad1d", "mult1d", "grad2d", "shear2d", "abc3d"};
}

SystemSpec builtin(const std::string& name, const BuiltinParams& params) {
    ParamReader p(params);
    if (name == "diffusion") {
        const int d = static_cast<int>(p.get("D", 1));
        const int def_m = (d == 1) ? 16 : 4;
        const int m = static_cast<int>(p.get("M", def_m));
        const double theta = p.get("theta", 1.0);
        p.finish(name);
        ModeLattice lat(d, m);
        return SystemSpec(lat, TrigVectorField(lat),
                          NoiseModel(constant_frame(lat), theta), name);
    }
    if (name == "grad1d") {
        const int m = static_cast<int>(p.get("M", 16));
        const double theta = p.get("theta", 0.5);
        p.finish(name);
        ModeLattice lat(1, m);
        return SystemSpec(lat, fields_from_exprs(lat, {"-sin(1*x1)"}),
                          NoiseModel(constant_frame(lat), theta), name);
    }
    if (name == "mult1d") {
        const int m = static_cast<int>(p.get("M", 16));
        const double theta = p.get("theta", 0.3);
        p.finish(name);
        ModeLattice lat(1, m);
        TrigVectorField g(lat);
        g.comps[0] = parse_to_field("1 + 0.5*cos(1*x1)", lat);
        return SystemSpec(lat, fields_from_exprs(lat, {"-sin(1*x1)"}),
                          NoiseModel({g}, theta), name);
    }
    if (name == "grad2d") {
        const int m = static_cast<int>(p.get("M", 4));
        const double theta = p.get("theta", 0.5);
        const double eps = p.get("eps", 0.0);
        p.finish(name);
        ModeLattice lat(2, m);
        TrigVectorField f = fields_from_exprs(lat, {"sin(1*x1)", "sin(1*x2)"});
        if (eps != 0.0) {
            const TrigField cross = parse_to_field("sin(1*x1 + 1*x2)", lat);
            f.comps[0].coeffs() += eps * cross.coeffs();
            f.comps[1].coeffs() += eps * cross.coeffs();
        }
        return SystemSpec(lat, std::move(f), NoiseModel(constant_frame(lat), theta),
                          name);
    }
    if (name == "shear2d") {
        const int m = static_cast<int>(p.get("M", 4));
        const double theta = p.get("theta", 0.5);
        p.finish(name);
        ModeLattice lat(2, m);
        return SystemSpec(lat, fields_from_exprs(lat, {"sin(1*x2)", "0"}),
                          NoiseModel(constant_frame(lat), theta), name);
    }
    if (name == "abc3d") {
        const int m = static_cast<int>(p.get("M", 8));
        const double theta = p.get("theta", 0.2);
        const double a = p.get("A", 1.0);
        const double b = p.get("B", 1.0);
        const double c = p.get("C", 1.0);
        p.finish(name);
        ModeLattice lat(3, m);
        TrigVectorField f(lat);
        auto add = [&](int comp, const std::string& expr, double amp) {
            f.comps[comp].coeffs() += amp * parse_to_field(expr, lat).coeffs();
        };
        add(0, "sin(1*x3)", a);
        add(0, "cos(1*x2)", c);
        add(1, "sin(1*x1)", b);
        add(1, "cos(1*x3)", a);
        add(2, "sin(1*x2)", c);
        add(2, "cos(1*x1)", b);
        return SystemSpec(lat, std::move(f), NoiseModel(constant_frame(lat), theta),
                          name);
    }
    throw ConfigError("unknown builtin system \"" + name + "\" (available: " +
                      [] {
                          std::string s;
                          for (const auto& n : builtin_names()) s += n + " ";
                          return s;
                      }() +
                      ")");
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

SystemSpec load_system_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open system config \"" + path + "\"");
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config \"" + path + "\": JSON parse failure: " + e.what());
    }

    auto require = [&](const char* field) -> const nlohmann::json& {
        if (!doc.contains(field))
            throw ConfigError("config \"" + path + "\": missing field \"" +
                              std::string(field) + "\"");
        return doc.at(field);
    };

    const std::string name = require("name").get<std::string>();
    const int d = require("D").get<int>();
    const int m = require("M").get<int>();
    const double theta = require("theta").get<double>();
    const auto& f_doc = require("F");
    const auto& g_doc = require("G");
    if (!f_doc.is_array() || static_cast<int>(f_doc.size()) != d)
        throw ConfigError("config \"" + path + "\": F must list " + std::to_string(d) +
                          " component expressions");
    if (!g_doc.is_array() || g_doc.empty())
        throw ConfigError("config \"" + path + "\": G must list noise fields");

    ModeLattice lat(d, m);
    TrigVectorField flow(lat);
    for (int i = 0; i < d; ++i)
        flow.comps[i] = parse_to_field(f_doc.at(i).get<std::string>(), lat);

    std::vector<TrigVectorField> noise_fields;
    for (const auto& field_doc : g_doc) {
        if (!field_doc.is_array() || static_cast<int>(field_doc.size()) != d)
            throw ConfigError("config \"" + path + "\": each entry of G must list " +
                              std::to_string(d) + " component expressions");
        TrigVectorField g(lat);
        for (int i = 0; i < d; ++i)
            g.comps[i] = parse_to_field(field_doc.at(i).get<std::string>(), lat);
        noise_fields.push_back(std::move(g));
    }
    return SystemSpec(lat, std::move(flow), NoiseModel(std::move(noise_fields), theta),
                      name);
}

SystemSpec resolve_system(const std::string& name_or_path, const BuiltinParams& params) {
    if (std::filesystem::exists(name_or_path) &&
        std::filesystem::is_regular_file(name_or_path))
        return load_system_config(name_or_path);
    return builtin(name_or_path, params);
}

}  // namespace sts
