#include "gformula/gformula.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <stdexcept>

namespace gformula {

namespace {

constexpr double kWaldZ = 1.96;
constexpr long kMaxPaths = 1L << 20;

// Term-evaluation context over a simulated history: exposure pinned to the
// regime at every time, modeled covariates filled in as simulation proceeds,
// non-modeled covariates carried forward from baseline.
class SimulatedContext : public EvalContext {
public:
    SimulatedContext(const Panel& panel, double regime_exposure, int horizon)
        : panel_(panel), g_(regime_exposure) {
        values_.assign(panel.cov_names.size(), std::vector<double>(horizon + 1, 0.0));
    }

    void set_baseline(const std::vector<double>& baseline) {
        for (std::size_t c = 0; c < values_.size(); ++c)
            std::fill(values_[c].begin(), values_[c].end(), baseline[c]);
    }

    void set(int cov, int t, double v) { values_[cov][t] = v; }

    double value(std::string_view column, int t) const override {
        if (column == "x") return g_;
        int c = panel_.cov_index(column);
        if (c < 0) throw std::invalid_argument("unknown column '" + std::string(column) + "'");
        return values_[c][t];
    }

private:
    const Panel& panel_;
    double g_;
    std::vector<std::vector<double>> values_;
};

// empirical distribution of the baseline covariate vector, collapsed to
// unique patterns; deterministic (lexicographic) order
std::map<std::vector<double>, int> baseline_patterns(const Panel& panel) {
    std::map<std::vector<double>, int> counts;
    std::vector<double> pattern(panel.cov_names.size());
    for (int i = 0; i < panel.n_subjects; ++i) {
        int row = panel.row_at(i, 0);
        for (std::size_t c = 0; c < panel.covs.size(); ++c) pattern[c] = panel.covs[c][row];
        counts[pattern] += 1;
    }
    return counts;
}

std::vector<double> subject_baseline(const Panel& panel, int subject) {
    std::vector<double> pattern(panel.cov_names.size());
    int row = panel.row_at(subject, 0);
    for (std::size_t c = 0; c < panel.covs.size(); ++c) pattern[c] = panel.covs[c][row];
    return pattern;
}

Eigen::RowVectorXd eval_row(const TermList& terms, const EvalContext& ctx, int t) {
    Eigen::RowVectorXd row(terms.size());
    for (int j = 0; j < terms.size(); ++j) row[j] = eval_term(terms.terms[j], ctx, t);
    return row;
}

// covariates that vary within a subject must have a model to be simulated
void check_unmodeled_covariates(const ModelSpec& spec, const Panel& panel, int horizon) {
    if (horizon < 1) return;
    for (std::size_t c = 0; c < panel.cov_names.size(); ++c) {
        bool modeled = false;
        for (const auto& cm : spec.covariate_models)
            if (cm.name == panel.cov_names[c]) modeled = true;
        if (modeled) continue;
        for (int i = 0; i < panel.n_subjects; ++i) {
            int base = panel.row_at(i, 0);
            for (int r = panel.offsets[i]; r < panel.offsets[i + 1]; ++r) {
                if (panel.covs[c][r] != panel.covs[c][base])
                    throw std::invalid_argument(
                        "covariate '" + panel.cov_names[c] +
                        "' varies over time but has no covariate model");
            }
        }
    }
}

} // namespace

bool exact_feasible(const ModelSpec& spec, const Panel& panel, int horizon) {
    for (const auto& cm : spec.covariate_models)
        if (cm.family != Family::BernoulliLogit) return false;
    long exponent = static_cast<long>(spec.covariate_models.size()) * std::max(horizon, 0);
    if (exponent > 20) return false;
    long n_patterns = static_cast<long>(baseline_patterns(panel).size());
    return n_patterns <= (kMaxPaths >> exponent);
}

ExactStandardizer::ExactStandardizer(const ModelSpec& spec, const Panel& panel,
                                     const Regime& regime, int horizon)
    : horizon_(horizon), outcome_family_(spec.outcome.family) {
    if (horizon < 0) throw std::invalid_argument("standardize: horizon must be >= 0");
    if (regime.g != 0 && regime.g != 1)
        throw std::invalid_argument("standardize: regime exposure must be 0 or 1");
    validate_model_spec(spec, panel);
    check_unmodeled_covariates(spec, panel, horizon);
    n_models_ = static_cast<int>(spec.covariate_models.size());
    coef_counts_.push_back(spec.outcome.terms.size());
    for (const auto& cm : spec.covariate_models) {
        if (horizon >= 1 && cm.family != Family::BernoulliLogit)
            throw std::invalid_argument("standardize_exact: covariate model '" + cm.name +
                                        "' is not Bernoulli; continuous covariates cannot be "
                                        "enumerated");
        coef_counts_.push_back(cm.terms.size());
    }
    long exponent = static_cast<long>(n_models_) * std::max(horizon, 0);
    auto patterns = baseline_patterns(panel);
    if (exponent > 20 ||
        static_cast<long>(patterns.size()) > (kMaxPaths >> std::min(exponent, 20L)))
        throw std::invalid_argument("standardize_exact: path count exceeds 2^20 guard");

    std::vector<int> cov_of_model(n_models_);
    for (int j = 0; j < n_models_; ++j)
        cov_of_model[j] = panel.cov_index(spec.covariate_models[j].name);

    const double n = static_cast<double>(panel.n_subjects);
    SimulatedContext ctx(panel, static_cast<double>(regime.g), std::max(horizon, 0));

    std::vector<CovStep> steps;
    std::vector<Eigen::RowVectorXd> outcome_rows;
    double weight = 0.0;

    // depth-first enumeration over covariate values at each time
    auto walk = [&](int t, int model, auto&& self) -> void {
        if (t > horizon_) {
            paths_.push_back({weight, steps, outcome_rows});
            return;
        }
        if (model == n_models_) {
            outcome_rows.push_back(eval_row(spec.outcome.terms, ctx, t));
            self(t + 1, 0, self);
            outcome_rows.pop_back();
            return;
        }
        Eigen::RowVectorXd row = eval_row(spec.covariate_models[model].terms, ctx, t);
        for (double v : {0.0, 1.0}) {
            steps.push_back({model, row, v});
            ctx.set(cov_of_model[model], t, v);
            self(t, model + 1, self);
            steps.pop_back();
        }
    };

    for (const auto& [pattern, count] : patterns) {
        ctx.set_baseline(pattern);
        weight = static_cast<double>(count) / n;
        if (horizon_ == 0) {
            paths_.push_back({weight, {}, {eval_row(spec.outcome.terms, ctx, 0)}});
        } else {
            walk(1, 0, walk);
        }
    }
}

std::vector<double> ExactStandardizer::run(const std::vector<Eigen::VectorXd>& coefs) const {
    if (coefs.size() != coef_counts_.size())
        throw std::invalid_argument("ExactStandardizer::run: wrong number of coefficient blocks");
    for (std::size_t b = 0; b < coefs.size(); ++b)
        if (coefs[b].size() != coef_counts_[b])
            throw std::invalid_argument("ExactStandardizer::run: coefficient size mismatch");

    std::vector<double> out(static_cast<std::size_t>(horizon_) + 1, 0.0);
    const bool bernoulli = outcome_family_ == Family::BernoulliLogit;
    for (const auto& path : paths_) {
        double pw = path.weight;
        for (const auto& step : path.steps) {
            double p = expit(step.row.dot(coefs[1 + static_cast<std::size_t>(step.model)]));
            pw *= (step.value == 1.0) ? p : 1.0 - p;
        }
        if (horizon_ == 0) {
            double z = path.outcome_rows[0].dot(coefs[0]);
            out[0] += pw * (bernoulli ? expit(z) : z);
            continue;
        }
        double surv = 1.0;
        for (int t = 1; t <= horizon_; ++t) {
            double z = path.outcome_rows[static_cast<std::size_t>(t - 1)].dot(coefs[0]);
            if (bernoulli) {
                double h = expit(z);
                out[static_cast<std::size_t>(t)] += pw * surv * h;
                surv *= 1.0 - h;
            } else {
                out[static_cast<std::size_t>(t)] += pw * z;
            }
        }
    }
    if (bernoulli && horizon_ >= 1) {
        // event-at-t increments to cumulative incidence
        for (int t = 2; t <= horizon_; ++t)
            out[static_cast<std::size_t>(t)] += out[static_cast<std::size_t>(t - 1)];
    }
    return out;
}

namespace {

std::vector<Eigen::VectorXd> spec_coefs(const ModelSpec& spec) {
    std::vector<Eigen::VectorXd> coefs;
    coefs.push_back(spec.outcome.coef);
    for (const auto& cm : spec.covariate_models) coefs.push_back(cm.coef);
    return coefs;
}

} // namespace

std::vector<double> standardize_exact(const ModelSpec& spec, const Panel& panel,
                                      const Regime& regime, int horizon) {
    ExactStandardizer standardizer(spec, panel, regime, horizon);
    return standardizer.run(spec_coefs(spec));
}

std::vector<double> standardize_mc(const ModelSpec& spec, const Panel& panel,
                                   const Regime& regime, int horizon, int n_pseudo, Rng& rng) {
    if (n_pseudo < 1) throw std::invalid_argument("standardize_mc: n_pseudo must be >= 1");
    if (horizon < 0) throw std::invalid_argument("standardize_mc: horizon must be >= 0");
    if (regime.g != 0 && regime.g != 1)
        throw std::invalid_argument("standardize_mc: regime exposure must be 0 or 1");
    validate_model_spec(spec, panel);
    check_unmodeled_covariates(spec, panel, horizon);

    const int n_models = static_cast<int>(spec.covariate_models.size());
    std::vector<int> cov_of_model(n_models);
    for (int j = 0; j < n_models; ++j)
        cov_of_model[j] = panel.cov_index(spec.covariate_models[j].name);

    const bool bernoulli = spec.outcome.family == Family::BernoulliLogit;
    std::vector<double> out(static_cast<std::size_t>(horizon) + 1, 0.0);
    SimulatedContext ctx(panel, static_cast<double>(regime.g), std::max(horizon, 0));

    for (int s = 0; s < n_pseudo; ++s) {
        int subject = rng.uniform_int(panel.n_subjects);
        ctx.set_baseline(subject_baseline(panel, subject));
        if (horizon == 0) {
            double z = eval_row(spec.outcome.terms, ctx, 0).dot(spec.outcome.coef);
            out[0] += bernoulli ? (rng.bernoulli(expit(z)) ? 1.0 : 0.0)
                                : z + spec.outcome.sigma * rng.normal();
            continue;
        }
        bool alive = true;
        for (int t = 1; t <= horizon; ++t) {
            if (bernoulli && !alive) {
                out[static_cast<std::size_t>(t)] += 1.0; // event already occurred
                continue;
            }
            for (int j = 0; j < n_models; ++j) {
                const auto& cm = spec.covariate_models[j];
                double z = eval_row(cm.terms, ctx, t).dot(cm.coef);
                double v = cm.family == Family::BernoulliLogit
                               ? (rng.bernoulli(expit(z)) ? 1.0 : 0.0)
                               : z + cm.sigma * rng.normal();
                ctx.set(cov_of_model[j], t, v);
            }
            double z = eval_row(spec.outcome.terms, ctx, t).dot(spec.outcome.coef);
            if (bernoulli) {
                if (rng.bernoulli(expit(z))) {
                    alive = false;
                    out[static_cast<std::size_t>(t)] += 1.0;
                }
            } else {
                out[static_cast<std::size_t>(t)] += z + spec.outcome.sigma * rng.normal();
            }
        }
    }
    for (auto& v : out) v /= static_cast<double>(n_pseudo);
    return out;
}

EffectSummary summarize_effect(std::vector<double> draws, std::optional<double> truth) {
    if (draws.size() < 2) throw std::invalid_argument("summarize_effect: need at least 2 draws");
    EffectSummary s;
    double point = mean_of(draws);
    double se = sample_sd(draws);
    s.wald.point = point;
    s.wald.se = se;
    s.wald.ci_low = point - kWaldZ * se;
    s.wald.ci_high = point + kWaldZ * se;
    s.wald.ci_method = CiMethod::Wald;
    s.percentile.point = point;
    s.percentile.se = se;
    s.percentile.ci_low = quantile_of(draws, 0.025);
    s.percentile.ci_high = quantile_of(draws, 0.975);
    s.percentile.ci_method = CiMethod::Percentile;
    if (truth) s.covered = (s.wald.ci_low <= *truth && *truth <= s.wald.ci_high);
    s.wald.draws = std::move(draws);
    return s;
}

namespace {

Panel subject_resample(const Panel& panel, Rng& rng) {
    PanelBuilder builder(panel.cov_names, panel.cov_binary, panel.y_binary);
    std::vector<double> cov_values(panel.covs.size());
    for (int i = 0; i < panel.n_subjects; ++i) {
        int pick = rng.uniform_int(panel.n_subjects);
        builder.start_subject();
        for (int r = panel.offsets[pick]; r < panel.offsets[pick + 1]; ++r) {
            for (std::size_t c = 0; c < panel.covs.size(); ++c) cov_values[c] = panel.covs[c][r];
            builder.add_row(panel.times[r], panel.y[r], panel.x[r], cov_values);
        }
    }
    Panel out = builder.finish();
    out.horizon = panel.horizon; // resample may lack rows at the last times
    return out;
}

struct TrajectoryAccumulator {
    std::vector<std::vector<double>> draws_by_time; // [time][draw]

    void add(const std::vector<double>& traj) {
        if (draws_by_time.empty()) draws_by_time.resize(traj.size());
        for (std::size_t t = 0; t < traj.size(); ++t) draws_by_time[t].push_back(traj[t]);
    }
    TrajectorySummary summarize() const {
        TrajectorySummary s;
        for (const auto& d : draws_by_time) {
            s.mean.push_back(mean_of(d));
            s.se.push_back(sample_sd(d));
        }
        return s;
    }
};

} // namespace

GFormulaResult frequentist_gformula(const Panel& panel, const ModelSpec& spec,
                                    const std::pair<Regime, Regime>& regimes, int horizon,
                                    int bootstrap_samples, Rng& rng, int mc_pseudo) {
    if (bootstrap_samples < 2)
        throw std::invalid_argument("frequentist_gformula: need at least 2 bootstrap samples");
    validate_model_spec(spec, panel);
    const bool use_exact = exact_feasible(spec, panel, horizon);

    GFormulaResult result;
    TrajectoryAccumulator acc1, acc0;
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(bootstrap_samples));

    ModelSpec fitted = spec;
    for (int s = 0; s < bootstrap_samples; ++s) {
        Panel bs = subject_resample(panel, rng);
        auto blocks = build_block_data(bs, spec);
        bool flagged = false;
        {
            FitResult fit = fit_mle(blocks[0].X, blocks[0].y, spec.outcome.family);
            fitted.outcome.coef = fit.coef;
            if (!spec.outcome.sigma_fixed) fitted.outcome.sigma = fit.sigma;
            flagged |= fit.divergence_flag;
        }
        for (std::size_t j = 0; j < spec.covariate_models.size(); ++j) {
            FitResult fit = fit_mle(blocks[1 + j].X, blocks[1 + j].y,
                                    spec.covariate_models[j].family);
            fitted.covariate_models[j].coef = fit.coef;
            if (!spec.covariate_models[j].sigma_fixed) fitted.covariate_models[j].sigma = fit.sigma;
            flagged |= fit.divergence_flag;
        }
        if (flagged) result.divergence_count += 1;

        std::vector<double> traj1, traj0;
        if (use_exact) {
            traj1 = standardize_exact(fitted, bs, regimes.first, horizon);
            traj0 = standardize_exact(fitted, bs, regimes.second, horizon);
        } else {
            traj1 = standardize_mc(fitted, bs, regimes.first, horizon, mc_pseudo, rng);
            traj0 = standardize_mc(fitted, bs, regimes.second, horizon, mc_pseudo, rng);
        }
        acc1.add(traj1);
        acc0.add(traj0);
        draws.push_back(traj1.back() - traj0.back());
    }

    EffectSummary summary = summarize_effect(std::move(draws));
    result.effect = std::move(summary.wald);
    result.effect_percentile = std::move(summary.percentile);
    result.trajectories = {acc1.summarize(), acc0.summarize()};
    return result;
}

GFormulaResult bayesian_gformula(const Panel& panel, const ModelSpec& spec,
                                 const PriorSpec& priors,
                                 const std::pair<Regime, Regime>& regimes, int horizon,
                                 const SamplerConfig& sampler, int mc_pseudo) {
    validate_model_spec(spec, panel);
    validate_priors(priors, spec);
    const bool use_exact = exact_feasible(spec, panel, horizon);

    ChainOutput chain = sample_chain(sampler, spec, priors, panel);
    const auto& layout = chain.layout;

    GFormulaResult result;
    result.acceptance_rates = chain.acceptance_rate;

    // count initialization fits that fell back to zeros
    {
        auto blocks = build_block_data(panel, spec);
        for (std::size_t b = 0; b < blocks.size(); ++b) {
            FitResult fit = fit_mle(blocks[b].X, blocks[b].y, blocks[b].family);
            if (!fit.converged || fit.divergence_flag) result.divergence_count += 1;
        }
    }

    TrajectoryAccumulator acc1, acc0;
    std::vector<double> draws;
    draws.reserve(static_cast<std::size_t>(chain.draws.rows()));

    std::optional<ExactStandardizer> std1, std0;
    if (use_exact) {
        std1.emplace(spec, panel, regimes.first, horizon);
        std0.emplace(spec, panel, regimes.second, horizon);
    }

    ModelSpec fitted = spec; // reused for Monte Carlo fallback
    std::vector<Eigen::VectorXd> coefs(layout.blocks.size());
    for (Eigen::Index r = 0; r < chain.draws.rows(); ++r) {
        for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
            const auto& lb = layout.blocks[b];
            coefs[b] = chain.draws.row(r).segment(lb.offset, lb.n_coef).transpose();
        }
        std::vector<double> traj1, traj0;
        if (use_exact) {
            traj1 = std1->run(coefs);
            traj0 = std0->run(coefs);
        } else {
            fitted.outcome.coef = coefs[0];
            if (layout.blocks[0].has_log_sigma)
                fitted.outcome.sigma =
                    std::exp(chain.draws(r, layout.blocks[0].offset + layout.blocks[0].n_coef));
            for (std::size_t j = 0; j < fitted.covariate_models.size(); ++j) {
                const auto& lb = layout.blocks[1 + j];
                fitted.covariate_models[j].coef = coefs[1 + j];
                if (lb.has_log_sigma)
                    fitted.covariate_models[j].sigma =
                        std::exp(chain.draws(r, lb.offset + lb.n_coef));
            }
            Rng draw_rng = Rng::stream(sampler.seed ^ UINT64_C(0x5ca1ab1e),
                                       static_cast<std::uint64_t>(r));
            traj1 = standardize_mc(fitted, panel, regimes.first, horizon, mc_pseudo, draw_rng);
            traj0 = standardize_mc(fitted, panel, regimes.second, horizon, mc_pseudo, draw_rng);
        }
        acc1.add(traj1);
        acc0.add(traj0);
        draws.push_back(traj1.back() - traj0.back());
    }

    EffectSummary summary = summarize_effect(std::move(draws));
    result.effect = std::move(summary.wald);
    result.effect_percentile = std::move(summary.percentile);
    result.trajectories = {acc1.summarize(), acc0.summarize()};
    return result;
}

void write_effect_csv(const GFormulaResult& result, const std::pair<Regime, Regime>& regimes,
                      const std::vector<std::pair<std::string, std::string>>& metadata,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write effect file: " + path);
    for (const auto& [key, value] : metadata) out << "# " << key << " = " << value << '\n';
    out << "regime,time,mean,se,ci_low,ci_high,ci_method\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        out << buf;
    };
    auto label = [](const Regime& g) { return g.g == 1 ? "always" : "never"; };
    const Regime regs[2] = {regimes.first, regimes.second};
    for (int rix = 0; rix < 2; ++rix) {
        const auto& traj = result.trajectories[static_cast<std::size_t>(rix)];
        std::size_t t0 = traj.mean.size() == 1 ? 0 : 1; // no outcome at baseline when k >= 1
        for (std::size_t t = t0; t < traj.mean.size(); ++t) {
            out << label(regs[rix]) << ',' << t << ',';
            put(traj.mean[t]);
            out << ',';
            put(traj.se[t]);
            out << ',';
            put(traj.mean[t] - kWaldZ * traj.se[t]);
            out << ',';
            put(traj.mean[t] + kWaldZ * traj.se[t]);
            out << ",wald\n";
        }
    }
    const int final_time = static_cast<int>(result.trajectories[0].mean.size()) - 1;
    for (const EffectEstimate* e : {&result.effect, &result.effect_percentile}) {
        out << "contrast," << final_time << ',';
        put(e->point);
        out << ',';
        put(e->se);
        out << ',';
        put(e->ci_low);
        out << ',';
        put(e->ci_high);
        out << (e->ci_method == CiMethod::Wald ? ",wald\n" : ",percentile\n");
    }
}

} // namespace gformula
