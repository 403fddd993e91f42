#include "gformula/terms.hpp"

#include <cctype>
#include <stdexcept>

namespace gformula {

bool Term::references(std::string_view col) const {
    switch (kind) {
    case Kind::Raw:
    case Kind::CumSum:
        return column == col;
    case Kind::Product:
        return lhs->references(col) || rhs->references(col);
    case Kind::Square:
        return lhs->references(col);
    default:
        return false;
    }
}

bool Term::reads_current(std::string_view col) const {
    switch (kind) {
    case Kind::Raw:
        return column == col;
    case Kind::CumSum:
        return lag == 0 && column == col;
    case Kind::Product:
        return lhs->reads_current(col) || rhs->reads_current(col);
    case Kind::Square:
        return lhs->reads_current(col);
    default:
        return false;
    }
}

std::string Term::to_string() const {
    switch (kind) {
    case Kind::Intercept:
        return "1";
    case Kind::Time:
        return "t";
    case Kind::Raw:
        return column;
    case Kind::CumSum:
        return lag == 0 ? "cum(" + column + ")" : "cum(" + column + "," + std::to_string(lag) + ")";
    case Kind::Product:
        return lhs->to_string() + "*" + rhs->to_string();
    case Kind::Square:
        return lhs->to_string() + "^2";
    }
    return "?";
}

std::string TermList::to_string() const {
    std::string out;
    for (const auto& t : terms) {
        if (!out.empty()) out += " + ";
        out += t.to_string();
    }
    return out;
}

namespace {

struct Cursor {
    std::string_view s;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eof() {
        skip_ws();
        return pos >= s.size();
    }
    char peek() {
        skip_ws();
        return pos < s.size() ? s[pos] : '\0';
    }
    bool consume(char ch) {
        if (peek() == ch) {
            ++pos;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& why) {
        throw std::invalid_argument("term parse error at position " + std::to_string(pos) + ": " +
                                    why + " in '" + std::string(s) + "'");
    }
    std::string ident() {
        skip_ws();
        std::size_t start = pos;
        while (pos < s.size() &&
               (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_' || s[pos] == '.'))
            ++pos;
        if (start == pos) fail("expected identifier");
        return std::string(s.substr(start, pos - start));
    }
};

Term parse_primitive(Cursor& c) {
    if (c.peek() == '1') {
        ++c.pos;
        return Term::intercept();
    }
    std::string name = c.ident();
    if (name == "t") return Term::time_index();
    if (name == "cum") {
        if (!c.consume('(')) c.fail("expected '(' after cum");
        std::string col = c.ident();
        int lag = 0;
        if (c.consume(',')) {
            std::string l = c.ident();
            if (l == "0")
                lag = 0;
            else if (l == "1")
                lag = 1;
            else
                c.fail("cum lag must be 0 or 1");
        }
        if (!c.consume(')')) c.fail("expected ')' after cum arguments");
        return Term::cumsum(col, lag);
    }
    return Term::raw(name);
}

// primitive ('^2')? ('*' primitive ('^2')?)*
Term parse_factor(Cursor& c) {
    Term t = parse_primitive(c);
    if (c.peek() == '^') {
        ++c.pos;
        if (!c.consume('2')) c.fail("only squares ('^2') are supported");
        t = Term::square(std::move(t));
    }
    while (c.peek() == '*') {
        ++c.pos;
        Term r = parse_primitive(c);
        if (c.peek() == '^') {
            ++c.pos;
            if (!c.consume('2')) c.fail("only squares ('^2') are supported");
            r = Term::square(std::move(r));
        }
        t = Term::product(std::move(t), std::move(r));
    }
    return t;
}

} // namespace

TermList parse_terms(std::string_view text) {
    Cursor c{text};
    TermList out;
    if (c.eof()) throw std::invalid_argument("empty term list");
    out.terms.push_back(parse_factor(c));
    while (!c.eof()) {
        if (!c.consume('+')) c.fail("expected '+'");
        out.terms.push_back(parse_factor(c));
    }
    return out;
}

double eval_term(const Term& term, const EvalContext& ctx, int t) {
    switch (term.kind) {
    case Term::Kind::Intercept:
        return 1.0;
    case Term::Kind::Time:
        return static_cast<double>(t);
    case Term::Kind::Raw:
        return ctx.value(term.column, t);
    case Term::Kind::CumSum: {
        double sum = 0.0;
        for (int j = 0; j <= t - term.lag; ++j) sum += ctx.value(term.column, j);
        return sum;
    }
    case Term::Kind::Product:
        return eval_term(*term.lhs, ctx, t) * eval_term(*term.rhs, ctx, t);
    case Term::Kind::Square: {
        double v = eval_term(*term.lhs, ctx, t);
        return v * v;
    }
    }
    return 0.0;
}

double PanelSubjectContext::value(std::string_view column, int t) const {
    int row = panel_.row_at(subject_, t);
    if (row < 0)
        throw std::out_of_range("subject " + std::to_string(subject_) + " has no row at time " +
                                std::to_string(t));
    if (column == "x") return regime_exposure_ ? *regime_exposure_ : panel_.x[row];
    int c = panel_.cov_index(column);
    if (c < 0) throw std::invalid_argument("unknown column '" + std::string(column) + "'");
    return panel_.covs[c][row];
}

Eigen::MatrixXd build_design(const Panel& panel, const TermList& terms, int time,
                             const std::optional<Regime>& regime_override) {
    if (time > panel.horizon)
        throw std::invalid_argument("design time " + std::to_string(time) + " beyond horizon " +
                                    std::to_string(panel.horizon));
    std::optional<double> g;
    if (regime_override) g = static_cast<double>(regime_override->g);

    auto subjects = panel.at_risk(time);
    Eigen::MatrixXd X(static_cast<Eigen::Index>(subjects.size()), terms.size());
    for (std::size_t i = 0; i < subjects.size(); ++i) {
        PanelSubjectContext ctx(panel, subjects[i], g);
        for (int j = 0; j < terms.size(); ++j)
            X(static_cast<Eigen::Index>(i), j) = eval_term(terms.terms[j], ctx, time);
    }
    return X;
}

} // namespace gformula
