#ifndef GFORMULA_TERMS_HPP
#define GFORMULA_TERMS_HPP

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gformula/panel.hpp"

namespace gformula {

// Static intervention: exposure fixed to g at every time.
struct Regime {
    int g = 0;
};

// One design-matrix term. Raw reads a column at the current time; CumSum is
// the running sum of a column through time t - lag (empty sums are 0, so a
// lag-1 cumulative term is 0 at t = 0). Product/Square combine sub-terms.
struct Term {
    enum class Kind { Intercept, Time, Raw, CumSum, Product, Square };

    Kind kind = Kind::Intercept;
    std::string column; // Raw, CumSum
    int lag = 0;        // CumSum: 0 or 1
    std::shared_ptr<const Term> lhs, rhs;

    static Term intercept() { return Term{}; }
    static Term time_index() {
        Term t;
        t.kind = Kind::Time;
        return t;
    }
    static Term raw(std::string col) {
        Term t;
        t.kind = Kind::Raw;
        t.column = std::move(col);
        return t;
    }
    static Term cumsum(std::string col, int lag = 0) {
        Term t;
        t.kind = Kind::CumSum;
        t.column = std::move(col);
        t.lag = lag;
        return t;
    }
    static Term product(Term a, Term b) {
        Term t;
        t.kind = Kind::Product;
        t.lhs = std::make_shared<const Term>(std::move(a));
        t.rhs = std::make_shared<const Term>(std::move(b));
        return t;
    }
    static Term square(Term a) {
        Term t;
        t.kind = Kind::Square;
        t.lhs = std::make_shared<const Term>(std::move(a));
        return t;
    }

    bool references(std::string_view col) const;
    // true when evaluating the term at time t reads `col` at time t itself
    bool reads_current(std::string_view col) const;
    std::string to_string() const;
};

struct TermList {
    std::vector<Term> terms;

    int size() const { return static_cast<int>(terms.size()); }
    std::string to_string() const;
};

// Parses "1 + t + x + cum(l,1) + x*l + t^2". Terms are '+'-separated;
// products bind two primitive terms; '^2' squares a primitive term.
TermList parse_terms(std::string_view text);

// Value source for term evaluation: exposure or covariate at a given time.
// Implementations: observed panel subject (optionally with the exposure
// overridden by a regime) and simulated pseudo-subject histories.
class EvalContext {
public:
    virtual ~EvalContext() = default;
    virtual double value(std::string_view column, int t) const = 0;
};

double eval_term(const Term& term, const EvalContext& ctx, int t);

// Evaluates a subject's observed history; regime_exposure, when set, replaces
// the exposure column at every time.
class PanelSubjectContext : public EvalContext {
public:
    PanelSubjectContext(const Panel& panel, int subject,
                        std::optional<double> regime_exposure = {})
        : panel_(panel), subject_(subject), regime_exposure_(regime_exposure) {}

    double value(std::string_view column, int t) const override;

private:
    const Panel& panel_;
    int subject_;
    std::optional<double> regime_exposure_;
};

// Design matrix at `time`: one row per at-risk subject, one column per term.
// With regime_override, exposure-derived terms see the regime value instead
// of the observed exposures.
Eigen::MatrixXd build_design(const Panel& panel, const TermList& terms, int time,
                             const std::optional<Regime>& regime_override = {});

} // namespace gformula

#endif
