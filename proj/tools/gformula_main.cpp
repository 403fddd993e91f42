// Command-line driver: simulate panels, fit models, estimate regime
// contrasts, and replicate the two simulation studies.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "gformula/gformula.hpp"
#include "gformula/harness.hpp"
#include "gformula/mcmc.hpp"
#include "gformula/modelspec_io.hpp"
#include "gformula/panel.hpp"
#include "gformula/simgen.hpp"

using namespace gformula;

namespace {

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : csv) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

std::pair<Regime, Regime> parse_regimes(const std::string& text) {
    auto parts = split_list(text);
    if (parts.size() != 2) throw CLI::ValidationError("--regime", "expected two values, e.g. 1,0");
    auto parse_one = [](const std::string& s) -> Regime {
        if (s == "1" || s == "always") return Regime{1};
        if (s == "0" || s == "never") return Regime{0};
        throw CLI::ValidationError("--regime", "regime must be 0/never or 1/always");
    };
    return {parse_one(parts[0]), parse_one(parts[1])};
}

void fit_blocks_mle(const Panel& panel, const ModelSpec& spec, std::ostream& out) {
    auto blocks = build_block_data(panel, spec);
    ParamLayout layout = ParamLayout::from_spec(spec);
    out << "model,term,estimate\n";
    char buf[64];
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        FitResult fit = fit_mle(blocks[b].X, blocks[b].y, blocks[b].family);
        const TermList& terms =
            b == 0 ? spec.outcome.terms : spec.covariate_models[b - 1].terms;
        for (int j = 0; j < terms.size(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.10g", fit.coef[j]);
            out << blocks[b].label << ',' << terms.terms[j].to_string() << ',' << buf << '\n';
        }
        if (blocks[b].family == Family::GaussianIdentity && !blocks[b].sigma_fixed) {
            std::snprintf(buf, sizeof(buf), "%.10g", fit.sigma);
            out << blocks[b].label << ",sigma," << buf << '\n';
        }
        std::fprintf(stderr, "[%s] %s in %d iterations, loglik %.6g%s\n",
                     blocks[b].label.c_str(), fit.converged ? "converged" : "not converged",
                     fit.iterations, fit.log_likelihood,
                     fit.divergence_flag ? ", divergence flagged" : "");
    }
}

void fit_blocks_bayes(const Panel& panel, const ModelSpec& spec, const PriorSpec& priors,
                      const SamplerConfig& config, const std::string& dump_path,
                      std::ostream& out) {
    ChainOutput chain = sample_chain(config, spec, priors, panel);
    out << "param,mean,sd,q2.5,q97.5\n";
    char buf[128];
    for (Eigen::Index c = 0; c < chain.draws.cols(); ++c) {
        std::vector<double> col(chain.draws.col(c).data(),
                                chain.draws.col(c).data() + chain.draws.rows());
        double m = mean_of(col);
        double sd = sample_sd(col);
        out << chain.param_names[static_cast<std::size_t>(c)];
        std::snprintf(buf, sizeof(buf), ",%.10g,%.10g,%.10g,%.10g", m, sd,
                      quantile_of(col, 0.025), quantile_of(col, 0.975));
        out << buf << '\n';
    }
    for (std::size_t b = 0; b < chain.acceptance_rate.size(); ++b)
        std::fprintf(stderr, "[%s] acceptance %.3f, step scale %.4f\n",
                     chain.layout.blocks[b].label.c_str(), chain.acceptance_rate[b],
                     chain.step_scales[b]);
    if (!dump_path.empty()) write_draws_csv(chain, config.thin, dump_path);
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Parametric g-formula estimation, frequentist and Bayesian"};
    app.require_subcommand(1);
    app.set_config("--config");

    // ---- simulate ----
    auto* sim = app.add_subcommand("simulate", "generate a synthetic panel CSV");
    std::string sim_scenario = "time_fixed";
    int sim_n = 100, sim_horizon = 3;
    double sim_rho = 0.8, sim_rd = 0.2;
    std::uint64_t sim_seed = 1;
    std::string sim_out = "panel.csv";
    sim->add_option("--scenario", sim_scenario, "time_fixed | time_varying | demo")
        ->check(CLI::IsMember({"time_fixed", "time_varying", "demo"}));
    sim->add_option("--n", sim_n, "subjects");
    sim->add_option("--rho", sim_rho, "exposure-confounder correlation (time_fixed)");
    sim->add_option("--rd", sim_rd, "true risk difference");
    sim->add_option("--horizon", sim_horizon, "follow-up times (demo)");
    sim->add_option("--seed", sim_seed, "rng seed");
    sim->add_option("--out", sim_out, "output CSV path")->required();

    // ---- fit ----
    auto* fit = app.add_subcommand("fit", "fit the model blocks to a panel");
    std::string fit_data, fit_model, fit_priors, fit_method = "mle", fit_out, fit_dump;
    std::string fit_real_cols;
    int fit_iters = 10000, fit_burnin = 1000, fit_thin = 1;
    double fit_step = 0.1;
    std::uint64_t fit_seed = 1;
    fit->add_option("--data", fit_data, "panel CSV")->required();
    fit->add_option("--model", fit_model, "model file")->required();
    fit->add_option("--priors", fit_priors, "prior file (bayes)");
    fit->add_option("--method", fit_method, "mle | bayes")
        ->check(CLI::IsMember({"mle", "bayes"}));
    fit->add_option("--iterations", fit_iters, "post burn-in iterations C");
    fit->add_option("--burnin", fit_burnin, "burn-in iterations B");
    fit->add_option("--thin", fit_thin, "thinning interval");
    fit->add_option("--step-scale", fit_step, "initial proposal scale");
    fit->add_option("--seed", fit_seed, "rng seed");
    fit->add_option("--out", fit_out, "coefficient CSV (default stdout)");
    fit->add_option("--dump-draws", fit_dump, "write retained draws to CSV");
    fit->add_option("--real-cols", fit_real_cols, "comma-separated real-valued columns");

    // ---- effect ----
    auto* eff = app.add_subcommand("effect", "estimate a regime contrast");
    std::string eff_data, eff_model, eff_priors, eff_method = "freq", eff_out = "effect.csv";
    std::string eff_regimes = "1,0", eff_real_cols;
    int eff_boot = 1000, eff_iters = 10000, eff_burnin = 1000, eff_thin = 1, eff_pseudo = 20000;
    double eff_step = 0.1;
    std::uint64_t eff_seed = 1;
    eff->add_option("--data", eff_data, "panel CSV")->required();
    eff->add_option("--model", eff_model, "model file")->required();
    eff->add_option("--priors", eff_priors, "prior file (bayes)");
    eff->add_option("--method", eff_method, "freq | bayes")
        ->check(CLI::IsMember({"freq", "bayes"}));
    eff->add_option("--regime,--regimes", eff_regimes, "contrast pair, e.g. always,never or 1,0");
    eff->add_option("--bootstrap", eff_boot, "bootstrap samples S (freq)");
    eff->add_option("--iterations", eff_iters, "post burn-in iterations C (bayes)");
    eff->add_option("--burnin", eff_burnin, "burn-in iterations B (bayes)");
    eff->add_option("--thin", eff_thin, "thinning interval (bayes)");
    eff->add_option("--step-scale", eff_step, "initial proposal scale (bayes)");
    eff->add_option("--pseudo", eff_pseudo, "Monte Carlo pseudo-subjects when exact "
                                            "standardization is infeasible");
    eff->add_option("--seed", eff_seed, "rng seed");
    eff->add_option("--out", eff_out, "effect report CSV");
    eff->add_option("--real-cols", eff_real_cols, "comma-separated real-valued columns");

    // ---- replicate ----
    auto* rep = app.add_subcommand("replicate", "run a simulation study table");
    int rep_table = 2;
    std::string rep_scale = "desk", rep_out_dir = ".";
    std::uint64_t rep_seed = 7;
    int rep_workers = 0;
    rep->add_option("--table", rep_table, "1 (time-fixed) or 2 (time-varying)")
        ->check(CLI::IsMember({1, 2}));
    rep->add_option("--scale", rep_scale, "desk | full")
        ->check(CLI::IsMember({"desk", "full"}));
    rep->add_option("--seed", rep_seed, "base seed");
    rep->add_option("--out", rep_out_dir, "output directory");
    rep->add_option("--workers", rep_workers, "worker threads (0 = all cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*sim) {
            Rng rng(sim_seed);
            Panel panel;
            std::vector<std::pair<std::string, std::string>> meta;
            meta.emplace_back("gformula_version", kVersion);
            meta.emplace_back("scenario", sim_scenario);
            meta.emplace_back("seed", std::to_string(sim_seed));
            meta.emplace_back("n", std::to_string(sim_n));
            if (sim_scenario == "time_fixed") {
                panel = gen_time_fixed(TimeFixedDGP::make(sim_n, sim_rho, sim_rd), rng);
                meta.emplace_back("rho", std::to_string(sim_rho));
                meta.emplace_back("true_rd", std::to_string(sim_rd));
            } else if (sim_scenario == "time_varying") {
                panel = gen_time_varying(TimeVaryingDGP{sim_n, sim_rd}, rng);
                meta.emplace_back("true_rd", std::to_string(sim_rd));
            } else {
                panel = gen_demo_longitudinal(sim_n, sim_horizon, rng);
                meta.emplace_back("note", "synthetic demo, not a replication of any dataset");
            }
            write_panel_csv(panel, sim_out, meta);
            std::fprintf(stderr, "wrote %d subjects, horizon %d to %s\n", panel.n_subjects,
                         panel.horizon, sim_out.c_str());
        } else if (*fit) {
            ColumnTypes types{split_list(fit_real_cols)};
            Panel panel = read_panel_csv(fit_data, types);
            auto violations = validate_panel(panel);
            for (const auto& v : violations)
                std::fprintf(stderr, "panel violation (subject %d, time %d): %s\n", v.subject,
                             v.time, v.message.c_str());
            if (!violations.empty()) return 1;
            ModelSpec spec = read_model_file(fit_model);
            std::ofstream file;
            if (!fit_out.empty()) file.open(fit_out);
            std::ostream& out = fit_out.empty() ? std::cout : file;
            if (fit_method == "mle") {
                fit_blocks_mle(panel, spec, out);
            } else {
                PriorSpec priors = fit_priors.empty() ? flat_priors(spec)
                                                      : read_prior_file(fit_priors, spec);
                SamplerConfig config;
                config.iterations = fit_iters;
                config.burn_in = fit_burnin;
                config.thin = fit_thin;
                config.seed = fit_seed;
                config.initial_step_scale = fit_step;
                fit_blocks_bayes(panel, spec, priors, config, fit_dump, out);
            }
        } else if (*eff) {
            ColumnTypes types{split_list(eff_real_cols)};
            Panel panel = read_panel_csv(eff_data, types);
            ModelSpec spec = read_model_file(eff_model);
            auto regimes = parse_regimes(eff_regimes);
            GFormulaResult result;
            std::vector<std::pair<std::string, std::string>> meta;
            meta.emplace_back("gformula_version", kVersion);
            meta.emplace_back("data", eff_data);
            meta.emplace_back("method", eff_method);
            meta.emplace_back("seed", std::to_string(eff_seed));
            if (eff_method == "freq") {
                Rng rng(eff_seed);
                result = frequentist_gformula(panel, spec, regimes, panel.horizon, eff_boot, rng,
                                              eff_pseudo);
                meta.emplace_back("bootstrap_samples", std::to_string(eff_boot));
            } else {
                PriorSpec priors = eff_priors.empty() ? flat_priors(spec)
                                                      : read_prior_file(eff_priors, spec);
                SamplerConfig config;
                config.iterations = eff_iters;
                config.burn_in = eff_burnin;
                config.thin = eff_thin;
                config.seed = eff_seed;
                config.initial_step_scale = eff_step;
                result = bayesian_gformula(panel, spec, priors, regimes, panel.horizon, config,
                                           eff_pseudo);
                meta.emplace_back("iterations", std::to_string(eff_iters));
                meta.emplace_back("burn_in", std::to_string(eff_burnin));
            }
            write_effect_csv(result, regimes, meta, eff_out);
            std::fprintf(stderr, "contrast %.4f (se %.4f), wald [%.4f, %.4f]; wrote %s\n",
                         result.effect.point, result.effect.se, result.effect.ci_low,
                         result.effect.ci_high, eff_out.c_str());
        } else if (*rep) {
            std::filesystem::create_directories(rep_out_dir);
            std::string path = rep_out_dir + "/table" + std::to_string(rep_table) + "_" +
                               rep_scale + ".csv";
            replicate_table(rep_table, rep_scale, rep_seed, path, rep_workers);
            std::fprintf(stderr, "wrote %s\n", path.c_str());
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
