#ifndef GFORMULA_MCMC_HPP
#define GFORMULA_MCMC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "gformula/glm.hpp"
#include "gformula/model.hpp"
#include "gformula/panel.hpp"

namespace gformula {

struct SamplerConfig {
    int iterations = 10000; // C, retained (pre-thinning) iterations after burn-in
    int burn_in = 1000;     // B
    int thin = 1;
    std::uint64_t seed = 0;
    double initial_step_scale = 0.1;
    bool adapt = true; // proposal-scale adaptation, burn-in only
    double target_acceptance = 0.30;
};

// Flattened parameter vector layout: outcome block first, then one block per
// covariate model. A sampled Gaussian scale contributes one trailing
// log-sigma entry to its block.
struct ParamLayout {
    struct Block {
        std::string label;
        int offset = 0;
        int n_coef = 0; // regression coefficients, excluding log-sigma
        bool has_log_sigma = false;
        int size() const { return n_coef + (has_log_sigma ? 1 : 0); }
    };
    std::vector<Block> blocks;
    int total = 0;

    static ParamLayout from_spec(const ModelSpec& spec);
    std::vector<std::string> param_names(const ModelSpec& spec) const;
};

// Cached response/design pair for one likelihood block. Covariate models are
// fit on the pooled rows t = 1..k; the outcome model uses t = 0 for
// time-fixed panels and t = 1..k otherwise.
struct BlockData {
    std::string label;
    Family family = Family::BernoulliLogit;
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    double fixed_sigma = 1.0;
    bool sigma_fixed = false;
};

std::vector<BlockData> build_block_data(const Panel& panel, const ModelSpec& spec);

struct ChainOutput {
    Eigen::MatrixXd draws; // floor(C/thin) x total, post burn-in only
    std::vector<double> log_posterior;   // per retained draw
    std::vector<double> acceptance_rate; // per block, post burn-in
    std::vector<double> step_scales;     // per block, after adaptation
    std::vector<std::string> param_names;
    ParamLayout layout;
};

double prior_logdensity(double value, const Prior& prior);

// Joint log-posterior of all sampled blocks: sum over blocks of block
// log-likelihood plus log-prior. The exposure block never enters.
double log_posterior(const Eigen::VectorXd& theta, const ModelSpec& spec, const PriorSpec& priors,
                     const Panel& panel);

// Blockwise Gaussian random-walk Metropolis. During burn-in each block's step
// scale is multiplied by 1.1 after a 50-iteration window with acceptance
// above target + 0.1 and by 1/1.1 below target - 0.1; scales are frozen
// afterwards. Initial point is the per-block MLE when it converged cleanly,
// zeros otherwise. Fully deterministic given config.seed.
ChainOutput sample_chain(const SamplerConfig& config, const ModelSpec& spec,
                         const PriorSpec& priors, const Panel& panel);

// header: iter,<param names>,log_post
void write_draws_csv(const ChainOutput& chain, int thin, const std::string& path);

} // namespace gformula

#endif
