#include "gformula/model.hpp"

#include <stdexcept>

namespace gformula {

namespace {

void check_columns_exist(const TermList& terms, const Panel& panel, const std::string& where) {
    auto check = [&](const Term& t, auto&& self) -> void {
        switch (t.kind) {
        case Term::Kind::Raw:
        case Term::Kind::CumSum:
            if (t.column != "x" && panel.cov_index(t.column) < 0)
                throw std::invalid_argument(where + ": unknown column '" + t.column + "'");
            break;
        case Term::Kind::Product:
            self(*t.lhs, self);
            self(*t.rhs, self);
            break;
        case Term::Kind::Square:
            self(*t.lhs, self);
            break;
        default:
            break;
        }
    };
    for (const auto& t : terms.terms) check(t, check);
}

void check_intercept_first(const TermList& terms, const std::string& where) {
    if (terms.terms.empty() || terms.terms.front().kind != Term::Kind::Intercept)
        throw std::invalid_argument(where + ": first term must be the intercept");
}

} // namespace

void validate_model_spec(const ModelSpec& spec, const Panel& panel) {
    check_intercept_first(spec.outcome.terms, "outcome model");
    check_columns_exist(spec.outcome.terms, panel, "outcome model");
    if (spec.outcome.family == Family::BernoulliLogit && !panel.y_binary)
        throw std::invalid_argument("Bernoulli outcome model on a real-valued outcome column");

    for (std::size_t j = 0; j < spec.covariate_models.size(); ++j) {
        const auto& cm = spec.covariate_models[j];
        const std::string where = "covariate model '" + cm.name + "'";
        if (panel.cov_index(cm.name) < 0)
            throw std::invalid_argument(where + ": no such panel covariate");
        check_intercept_first(cm.terms, where);
        check_columns_exist(cm.terms, panel, where);
        // L(t) precedes X(t), so the exposure may enter lagged terms only;
        // likewise the modeled covariate itself and covariates later in the
        // sampling order are not available at the current time.
        for (const auto& term : cm.terms.terms) {
            if (term.reads_current("x"))
                throw std::invalid_argument(where + ": term '" + term.to_string() +
                                            "' references the exposure at the current time");
            for (std::size_t j2 = j; j2 < spec.covariate_models.size(); ++j2) {
                if (term.reads_current(spec.covariate_models[j2].name))
                    throw std::invalid_argument(where + ": term '" + term.to_string() +
                                                "' references covariate '" +
                                                spec.covariate_models[j2].name +
                                                "' at the current time");
            }
        }
    }
    if (spec.exposure_model) {
        check_intercept_first(spec.exposure_model->terms, "exposure model");
        check_columns_exist(spec.exposure_model->terms, panel, "exposure model");
    }
}

PriorSpec flat_priors(const ModelSpec& spec) {
    PriorSpec out;
    out.blocks.emplace_back(spec.outcome.terms.size(), Prior::flat());
    for (const auto& cm : spec.covariate_models)
        out.blocks.emplace_back(cm.terms.size(), Prior::flat());
    return out;
}

PriorSpec default_priors(const ModelSpec& spec, const Prior& intercept_prior,
                         const Prior& other_prior) {
    PriorSpec out = flat_priors(spec);
    for (auto& block : out.blocks) {
        for (std::size_t i = 0; i < block.size(); ++i)
            block[i] = (i == 0) ? intercept_prior : other_prior;
    }
    return out;
}

namespace {

void check_prior(const Prior& p, const std::string& where) {
    switch (p.kind) {
    case PriorKind::Normal:
        if (!(p.scale > 0.0))
            throw std::invalid_argument(where + ": normal prior variance must be > 0");
        break;
    case PriorKind::DoubleExponential:
        if (!(p.scale > 0.0))
            throw std::invalid_argument(where + ": double-exponential prior rate must be > 0");
        break;
    case PriorKind::Flat:
        break;
    }
}

} // namespace

void validate_priors(const PriorSpec& priors, const ModelSpec& spec) {
    std::size_t n_blocks = 1 + spec.covariate_models.size();
    if (priors.blocks.size() != n_blocks)
        throw std::invalid_argument("prior spec has " + std::to_string(priors.blocks.size()) +
                                    " blocks, model has " + std::to_string(n_blocks));
    auto check_block = [&](std::size_t b, int n_terms, const std::string& label) {
        if (static_cast<int>(priors.blocks[b].size()) != n_terms)
            throw std::invalid_argument("prior block '" + label + "' has " +
                                        std::to_string(priors.blocks[b].size()) +
                                        " entries, model has " + std::to_string(n_terms));
        for (const auto& p : priors.blocks[b]) check_prior(p, "prior block '" + label + "'");
    };
    check_block(0, spec.outcome.terms.size(), "y");
    for (std::size_t j = 0; j < spec.covariate_models.size(); ++j)
        check_block(1 + j, spec.covariate_models[j].terms.size(), spec.covariate_models[j].name);
    check_prior(priors.log_sigma_prior, "log_sigma");
}

} // namespace gformula
