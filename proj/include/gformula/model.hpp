#ifndef GFORMULA_MODEL_HPP
#define GFORMULA_MODEL_HPP

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "gformula/terms.hpp"

namespace gformula {

enum class Family { BernoulliLogit, GaussianIdentity };

struct OutcomeModel {
    TermList terms;
    Family family = Family::BernoulliLogit;
    Eigen::VectorXd coef;
    double sigma = 1.0;       // Gaussian scale
    bool sigma_fixed = false; // when true, sigma is neither fitted nor sampled
};

struct CovariateModel {
    std::string name; // panel covariate this model generates
    TermList terms;
    Family family = Family::BernoulliLogit;
    Eigen::VectorXd coef;
    double sigma = 1.0;
    bool sigma_fixed = false;
};

// Carried for completeness; never fitted or sampled. Static regimes do not
// depend on the exposure mechanism, and the factorized likelihood lets the
// other blocks be estimated without it.
struct ExposureModel {
    TermList terms;
    Eigen::VectorXd coef;
};

struct ModelSpec {
    OutcomeModel outcome;
    std::vector<CovariateModel> covariate_models; // in sampling order
    std::optional<ExposureModel> exposure_model;
};

// Structural checks against a panel: referenced columns exist, every term
// list starts with an intercept, and covariate models respect temporal
// ordering -- model j may read covariate j' >= j and the exposure only
// through lagged terms, never at the current time. Throws on violation.
void validate_model_spec(const ModelSpec& spec, const Panel& panel);

enum class CiMethod { Wald, Percentile };

struct EffectEstimate {
    double point = 0.0;
    double se = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    CiMethod ci_method = CiMethod::Wald;
    std::vector<double> draws; // optional per-draw effects
};

enum class PriorKind { Normal, DoubleExponential, Flat };

struct Prior {
    PriorKind kind = PriorKind::Flat;
    double mean = 0.0;
    double scale = 1.0; // variance (Normal) or rate lambda (DoubleExponential)

    static Prior normal(double mean, double variance) {
        return Prior{PriorKind::Normal, mean, variance};
    }
    static Prior double_exponential(double mean, double rate) {
        return Prior{PriorKind::DoubleExponential, mean, rate};
    }
    static Prior flat() { return Prior{}; }
};

// Per-coefficient priors, one vector per sampled block: blocks[0] is the
// outcome model, blocks[1 + j] is covariate model j. log_sigma_prior applies
// to each sampled Gaussian log-scale parameter.
struct PriorSpec {
    std::vector<std::vector<Prior>> blocks;
    Prior log_sigma_prior = Prior::flat();
};

PriorSpec flat_priors(const ModelSpec& spec);
// intercept_prior on each block's leading intercept, other_prior elsewhere
PriorSpec default_priors(const ModelSpec& spec, const Prior& intercept_prior,
                         const Prior& other_prior);

// variance/rate positivity and block-shape agreement; throws on violation
void validate_priors(const PriorSpec& priors, const ModelSpec& spec);

} // namespace gformula

#endif
