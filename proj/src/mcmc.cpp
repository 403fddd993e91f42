#include "gformula/mcmc.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "gformula/rng.hpp"

namespace gformula {

ParamLayout ParamLayout::from_spec(const ModelSpec& spec) {
    ParamLayout layout;
    int offset = 0;
    auto add = [&](const std::string& label, int n_coef, Family family, bool sigma_fixed) {
        ParamLayout::Block b;
        b.label = label;
        b.offset = offset;
        b.n_coef = n_coef;
        b.has_log_sigma = (family == Family::GaussianIdentity) && !sigma_fixed;
        offset += b.size();
        layout.blocks.push_back(std::move(b));
    };
    add("y", spec.outcome.terms.size(), spec.outcome.family, spec.outcome.sigma_fixed);
    for (const auto& cm : spec.covariate_models)
        add(cm.name, cm.terms.size(), cm.family, cm.sigma_fixed);
    layout.total = offset;
    return layout;
}

std::vector<std::string> ParamLayout::param_names(const ModelSpec& spec) const {
    std::vector<std::string> names;
    auto add_block = [&](const Block& b, const TermList& terms) {
        for (const auto& t : terms.terms) names.push_back(b.label + ":" + t.to_string());
        if (b.has_log_sigma) names.push_back(b.label + ":log_sigma");
    };
    add_block(blocks[0], spec.outcome.terms);
    for (std::size_t j = 0; j < spec.covariate_models.size(); ++j)
        add_block(blocks[1 + j], spec.covariate_models[j].terms);
    return names;
}

std::vector<BlockData> build_block_data(const Panel& panel, const ModelSpec& spec) {
    validate_model_spec(spec, panel);
    std::vector<BlockData> blocks;

    const int k = panel.horizon;
    const int outcome_start = (k == 0) ? 0 : 1;

    auto stack = [&](const TermList& terms, int t_start, auto&& value_of)
        -> std::pair<Eigen::MatrixXd, Eigen::VectorXd> {
        std::vector<Eigen::MatrixXd> designs;
        std::vector<double> response;
        Eigen::Index total_rows = 0;
        for (int t = t_start; t <= k; ++t) {
            designs.push_back(build_design(panel, terms, t));
            for (int subject : panel.at_risk(t)) response.push_back(value_of(subject, t));
            total_rows += designs.back().rows();
        }
        Eigen::MatrixXd X(total_rows, terms.size());
        Eigen::Index row = 0;
        for (const auto& d : designs) {
            X.middleRows(row, d.rows()) = d;
            row += d.rows();
        }
        Eigen::VectorXd y = Eigen::Map<Eigen::VectorXd>(response.data(),
                                                        static_cast<Eigen::Index>(response.size()));
        return {std::move(X), std::move(y)};
    };

    {
        BlockData b;
        b.label = "y";
        b.family = spec.outcome.family;
        b.fixed_sigma = spec.outcome.sigma;
        b.sigma_fixed = spec.outcome.sigma_fixed;
        auto [X, y] = stack(spec.outcome.terms, outcome_start,
                            [&](int subject, int t) { return panel.y[panel.row_at(subject, t)]; });
        b.X = std::move(X);
        b.y = std::move(y);
        blocks.push_back(std::move(b));
    }
    for (const auto& cm : spec.covariate_models) {
        if (k == 0)
            throw std::invalid_argument("covariate model '" + cm.name +
                                        "' on a time-fixed panel");
        BlockData b;
        b.label = cm.name;
        b.family = cm.family;
        b.fixed_sigma = cm.sigma;
        b.sigma_fixed = cm.sigma_fixed;
        int c = panel.cov_index(cm.name);
        auto [X, y] = stack(cm.terms, 1, [&](int subject, int t) {
            return panel.covs[c][panel.row_at(subject, t)];
        });
        b.X = std::move(X);
        b.y = std::move(y);
        blocks.push_back(std::move(b));
    }
    return blocks;
}

double prior_logdensity(double value, const Prior& prior) {
    const double log2pi = 1.8378770664093454836;
    switch (prior.kind) {
    case PriorKind::Normal:
        return -0.5 * (log2pi + std::log(prior.scale)) -
               (value - prior.mean) * (value - prior.mean) / (2.0 * prior.scale);
    case PriorKind::DoubleExponential:
        return std::log(prior.scale / 2.0) - prior.scale * std::abs(value - prior.mean);
    case PriorKind::Flat:
        return 0.0;
    }
    return 0.0;
}

namespace {

// log-likelihood + log-prior of one block; theta_b includes the trailing
// log-sigma entry for sampled Gaussian scales
double block_log_posterior(const Eigen::VectorXd& theta_b, const BlockData& data,
                           const std::vector<Prior>& coef_priors, const Prior& log_sigma_prior,
                           const ParamLayout::Block& block) {
    Eigen::VectorXd beta = theta_b.head(block.n_coef);
    double lp = 0.0;
    if (data.family == Family::BernoulliLogit) {
        lp = loglik_bernoulli(beta, data.X, data.y);
    } else {
        double sigma = block.has_log_sigma ? std::exp(theta_b[block.n_coef]) : data.fixed_sigma;
        if (!(sigma > 0.0) || !std::isfinite(sigma)) // exp under/overflow: reject
            return -std::numeric_limits<double>::infinity();
        lp = loglik_gaussian(beta, sigma, data.X, data.y);
        if (block.has_log_sigma) lp += prior_logdensity(theta_b[block.n_coef], log_sigma_prior);
    }
    for (int i = 0; i < block.n_coef; ++i) lp += prior_logdensity(beta[i], coef_priors[i]);
    if (!std::isfinite(lp) && !(lp < 0)) // NaN or +inf: reject outright
        throw std::runtime_error("non-finite prior or likelihood in block '" + data.label + "'");
    return lp;
}

} // namespace

double log_posterior(const Eigen::VectorXd& theta, const ModelSpec& spec, const PriorSpec& priors,
                     const Panel& panel) {
    validate_priors(priors, spec);
    ParamLayout layout = ParamLayout::from_spec(spec);
    if (theta.size() != layout.total)
        throw std::invalid_argument("log_posterior: theta has " + std::to_string(theta.size()) +
                                    " entries, layout needs " + std::to_string(layout.total));
    auto blocks = build_block_data(panel, spec);
    double lp = 0.0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& lb = layout.blocks[b];
        lp += block_log_posterior(theta.segment(lb.offset, lb.size()), blocks[b], priors.blocks[b],
                                  priors.log_sigma_prior, lb);
    }
    return lp;
}

ChainOutput sample_chain(const SamplerConfig& config, const ModelSpec& spec,
                         const PriorSpec& priors, const Panel& panel) {
    if (config.iterations < 1 || config.burn_in < 1)
        throw std::invalid_argument("sample_chain: iterations and burn_in must be >= 1");
    if (config.thin < 1) throw std::invalid_argument("sample_chain: thin must be >= 1");
    if (!(config.target_acceptance > 0.0 && config.target_acceptance < 1.0))
        throw std::invalid_argument("sample_chain: target_acceptance must be in (0,1)");
    validate_priors(priors, spec);

    ParamLayout layout = ParamLayout::from_spec(spec);
    auto blocks = build_block_data(panel, spec);
    const int n_blocks = static_cast<int>(blocks.size());

    // initial point: block MLE when clean, zeros otherwise
    Eigen::VectorXd theta = Eigen::VectorXd::Zero(layout.total);
    for (int b = 0; b < n_blocks; ++b) {
        const auto& lb = layout.blocks[b];
        FitResult fit = fit_mle(blocks[b].X, blocks[b].y, blocks[b].family);
        if (fit.converged && !fit.divergence_flag) {
            theta.segment(lb.offset, lb.n_coef) = fit.coef;
            if (lb.has_log_sigma) theta[lb.offset + lb.n_coef] = std::log(fit.sigma);
        }
    }

    std::vector<double> block_lp(n_blocks);
    for (int b = 0; b < n_blocks; ++b) {
        const auto& lb = layout.blocks[b];
        block_lp[b] = block_log_posterior(theta.segment(lb.offset, lb.size()), blocks[b],
                                          priors.blocks[b], priors.log_sigma_prior, lb);
        if (!std::isfinite(block_lp[b]))
            throw std::runtime_error("non-finite initial log-posterior in block '" +
                                     blocks[b].label + "'");
    }

    Rng rng(config.seed);
    std::vector<double> scales(n_blocks, config.initial_step_scale);
    std::vector<int> window_n(n_blocks, 0), window_accepts(n_blocks, 0);
    std::vector<long> post_accepts(n_blocks, 0);
    const int total_iters = config.burn_in + config.iterations;
    const int n_draws = config.iterations / config.thin;

    ChainOutput out;
    out.layout = layout;
    out.param_names = layout.param_names(spec);
    out.draws.resize(n_draws, layout.total);
    out.log_posterior.reserve(n_draws);

    Eigen::VectorXd proposal(layout.total);
    int stored = 0;
    for (int iter = 0; iter < total_iters; ++iter) {
        const bool in_burn_in = iter < config.burn_in;
        for (int b = 0; b < n_blocks; ++b) {
            const auto& lb = layout.blocks[b];
            Eigen::VectorXd cand(lb.size());
            for (int j = 0; j < lb.size(); ++j)
                cand[j] = theta[lb.offset + j] + scales[b] * rng.normal();
            double cand_lp = block_log_posterior(cand, blocks[b], priors.blocks[b],
                                                 priors.log_sigma_prior, lb);
            bool accept = std::log(rng.uniform_pos()) < cand_lp - block_lp[b];
            if (accept) {
                theta.segment(lb.offset, lb.size()) = cand;
                block_lp[b] = cand_lp;
            }
            if (in_burn_in) {
                if (config.adapt) {
                    window_n[b] += 1;
                    window_accepts[b] += accept ? 1 : 0;
                    if (window_n[b] == 50) {
                        double rate = window_accepts[b] / 50.0;
                        if (rate > config.target_acceptance + 0.1)
                            scales[b] *= 1.1;
                        else if (rate < config.target_acceptance - 0.1)
                            scales[b] /= 1.1;
                        window_n[b] = 0;
                        window_accepts[b] = 0;
                    }
                }
            } else {
                post_accepts[b] += accept ? 1 : 0;
            }
        }
        if (!in_burn_in) {
            int j = iter - config.burn_in;
            if ((j + 1) % config.thin == 0 && stored < n_draws) {
                out.draws.row(stored) = theta;
                double total_lp = 0.0;
                for (double lp : block_lp) total_lp += lp;
                out.log_posterior.push_back(total_lp);
                ++stored;
            }
        }
    }

    out.acceptance_rate.resize(n_blocks);
    for (int b = 0; b < n_blocks; ++b)
        out.acceptance_rate[b] =
            static_cast<double>(post_accepts[b]) / static_cast<double>(config.iterations);
    out.step_scales = scales;
    return out;
}

void write_draws_csv(const ChainOutput& chain, int thin, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write draws file: " + path);
    out << "iter";
    for (const auto& n : chain.param_names) out << ',' << n;
    out << ",log_post\n";
    char buf[64];
    for (Eigen::Index r = 0; r < chain.draws.rows(); ++r) {
        out << (r + 1) * static_cast<Eigen::Index>(thin);
        for (Eigen::Index c = 0; c < chain.draws.cols(); ++c) {
            std::snprintf(buf, sizeof(buf), "%.10g", chain.draws(r, c));
            out << ',' << buf;
        }
        std::snprintf(buf, sizeof(buf), "%.10g", chain.log_posterior[static_cast<std::size_t>(r)]);
        out << ',' << buf << '\n';
    }
}

} // namespace gformula
