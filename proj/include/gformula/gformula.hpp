#ifndef GFORMULA_GFORMULA_HPP
#define GFORMULA_GFORMULA_HPP

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gformula/mcmc.hpp"
#include "gformula/model.hpp"
#include "gformula/panel.hpp"
#include "gformula/rng.hpp"

namespace gformula {

// Standardized mean outcome under a static regime, one entry per time
// 0..horizon. For a binary outcome entries are cumulative incidence (0 at
// baseline when horizon >= 1); for a time-fixed panel the single entry at
// time 0 is the standardized mean. Gaussian outcomes never exit the risk set.

// Exact standardization: baseline covariates take their empirical
// distribution; covariate paths at t >= 1 are enumerated and weighted by
// model-implied probabilities, so the result carries no Monte Carlo noise.
// Requires Bernoulli models for every simulated covariate and a path count
// of at most 2^20.
std::vector<double> standardize_exact(const ModelSpec& spec, const Panel& panel,
                                      const Regime& regime, int horizon);

// Monte Carlo standardization: n_pseudo pseudo-subjects draw a baseline from
// the empirical distribution, then iteratively draw covariates and outcome
// under the regime, survivors only continuing.
std::vector<double> standardize_mc(const ModelSpec& spec, const Panel& panel,
                                   const Regime& regime, int horizon, int n_pseudo, Rng& rng);

bool exact_feasible(const ModelSpec& spec, const Panel& panel, int horizon);

// Precomputed enumeration for repeated per-draw standardization with fixed
// (panel, regime, model structure) and varying coefficients.
class ExactStandardizer {
public:
    ExactStandardizer(const ModelSpec& spec, const Panel& panel, const Regime& regime,
                      int horizon);

    // coefs[0] = outcome coefficients, coefs[1 + j] = covariate model j
    std::vector<double> run(const std::vector<Eigen::VectorXd>& coefs) const;

private:
    struct CovStep {
        int model = 0;
        Eigen::RowVectorXd row;
        double value = 0.0;
    };
    struct Path {
        double weight = 0.0;
        std::vector<CovStep> steps;
        std::vector<Eigen::RowVectorXd> outcome_rows; // per outcome time
    };
    int horizon_;
    Family outcome_family_;
    int n_models_ = 0;
    std::vector<int> coef_counts_; // expected sizes, outcome first
    std::vector<Path> paths_;
};

struct EffectSummary {
    EffectEstimate wald;       // point, se, point +- 1.96 se; draws attached
    EffectEstimate percentile; // same point/se, 2.5/97.5 percentile bounds
    bool covered = false;      // truth inside the Wald interval, when given
};

EffectSummary summarize_effect(std::vector<double> draws, std::optional<double> truth = {});

struct TrajectorySummary {
    std::vector<double> mean; // per time 0..k
    std::vector<double> se;
};

struct GFormulaResult {
    std::vector<TrajectorySummary> trajectories; // [0] first regime, [1] second
    EffectEstimate effect;                       // Wald; .draws = per-draw contrasts
    EffectEstimate effect_percentile;
    int divergence_count = 0;             // flagged refits (bootstrap) or flagged init fits
    std::vector<double> acceptance_rates; // Bayes only, per block
};

// Standard g-formula: S subject-level bootstrap resamples, MLE refit on each,
// contrast of regimes.first minus regimes.second at the final time. Point
// estimate is the mean over resamples and se their sample SD. Divergent
// refits are kept (clamped) and counted.
GFormulaResult frequentist_gformula(const Panel& panel, const ModelSpec& spec,
                                    const std::pair<Regime, Regime>& regimes, int horizon,
                                    int bootstrap_samples, Rng& rng, int mc_pseudo = 20000);

// Bayesian g-formula: posterior draws from sample_chain, per-draw
// standardization of both regimes (exact when feasible), posterior mean / SD
// of the per-draw contrasts, Wald and percentile intervals both populated.
GFormulaResult bayesian_gformula(const Panel& panel, const ModelSpec& spec,
                                 const PriorSpec& priors,
                                 const std::pair<Regime, Regime>& regimes, int horizon,
                                 const SamplerConfig& sampler, int mc_pseudo = 20000);

// CSV: regime,time,mean,se,ci_low,ci_high,ci_method with '#' metadata lines.
void write_effect_csv(const GFormulaResult& result, const std::pair<Regime, Regime>& regimes,
                      const std::vector<std::pair<std::string, std::string>>& metadata,
                      const std::string& path);

} // namespace gformula

#endif
