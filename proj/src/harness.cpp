#include "gformula/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "gformula/simgen.hpp"

namespace gformula {

ModelSpec analysis_spec_time_fixed() {
    ModelSpec spec;
    spec.outcome.terms = parse_terms("1 + x + l");
    spec.outcome.family = Family::BernoulliLogit;
    return spec;
}

ModelSpec analysis_spec_time_varying() {
    ModelSpec spec;
    // outcome at t=1: intercept, x(0) via lag-1 cumulative, x(1), l(1)
    spec.outcome.terms = parse_terms("1 + cum(x,1) + x + l");
    spec.outcome.family = Family::BernoulliLogit;
    CovariateModel cm;
    cm.name = "l";
    cm.terms = parse_terms("1 + cum(x,1)");
    cm.family = Family::BernoulliLogit;
    spec.covariate_models.push_back(std::move(cm));
    return spec;
}

void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
    if (workers <= 0) workers = static_cast<int>(std::thread::hardware_concurrency());
    if (workers <= 1 || n <= 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&]() {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < std::min(workers, n); ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

namespace {

struct ReplicateOutcome {
    double est_standard = 0.0;
    double se_standard = 0.0;
    bool covered_standard = false;
    int divergent_refits = 0;
    double est_bayes = 0.0;
    double se_bayes = 0.0;
    bool covered_bayes = false;
    int divergent_inits = 0;
    bool acceptance_violation = false;
    double wall_standard = 0.0;
    double wall_bayes = 0.0;
};

} // namespace

MethodMetrics compute_method_metrics(const std::vector<double>& estimates,
                                     const std::vector<char>& covered, double truth) {
    const double m = static_cast<double>(estimates.size());
    std::vector<double> bias(estimates.size());
    for (std::size_t i = 0; i < estimates.size(); ++i) bias[i] = truth - estimates[i];
    MethodMetrics out;
    out.mean_bias = mean_of(bias);
    out.sd_bias = sample_sd(bias);
    double var_pop = 0.0;
    for (double b : bias) var_pop += (b - out.mean_bias) * (b - out.mean_bias);
    var_pop /= m;
    out.mse = out.mean_bias * out.mean_bias + var_pop;
    double cov = 0.0;
    for (char c : covered) cov += c ? 1.0 : 0.0;
    out.coverage = cov / m;
    return out;
}

CellResult run_cell(const Cell& cell, const StudyConfig& config) {
    if (config.replicates < 2 || config.bootstrap_samples < 2)
        throw std::invalid_argument("run_cell: replicates and bootstrap samples must be >= 2");

    const int M = config.replicates;
    const double truth = cell.true_rd;
    const std::pair<Regime, Regime> regimes{Regime{1}, Regime{0}};
    const ModelSpec spec = config.scenario == Scenario::TimeFixed ? analysis_spec_time_fixed()
                                                                  : analysis_spec_time_varying();
    const PriorSpec priors = default_priors(spec, config.intercept_prior, config.other_prior);
    const int horizon = config.scenario == Scenario::TimeFixed ? 0 : 1;

    std::vector<ReplicateOutcome> results(static_cast<std::size_t>(M));
    parallel_for(M, config.workers, [&](int i) {
        const int m = i + 1;
        const std::uint64_t rep_seed = config.base_seed + static_cast<std::uint64_t>(m);
        ReplicateOutcome& out = results[static_cast<std::size_t>(i)];
        try {
            Rng gen_rng = Rng::stream(rep_seed, 0);
            Panel panel;
            if (config.scenario == Scenario::TimeFixed) {
                panel = gen_time_fixed(TimeFixedDGP::make(cell.n, cell.rho, cell.true_rd),
                                       gen_rng);
            } else {
                panel = gen_time_varying(TimeVaryingDGP{cell.n, cell.true_rd}, gen_rng);
            }

            auto t0 = std::chrono::steady_clock::now();
            Rng boot_rng = Rng::stream(rep_seed, 1);
            GFormulaResult freq = frequentist_gformula(panel, spec, regimes, horizon,
                                                       config.bootstrap_samples, boot_rng);
            auto t1 = std::chrono::steady_clock::now();

            SamplerConfig sampler;
            sampler.iterations = config.iterations;
            sampler.burn_in = config.burn_in;
            sampler.thin = config.thin;
            sampler.seed = derive_stream(rep_seed, 2);
            sampler.initial_step_scale = config.initial_step_scale;
            GFormulaResult bayes =
                bayesian_gformula(panel, spec, priors, regimes, horizon, sampler);
            auto t2 = std::chrono::steady_clock::now();

            out.est_standard = freq.effect.point;
            out.se_standard = freq.effect.se;
            out.covered_standard =
                freq.effect.ci_low <= truth && truth <= freq.effect.ci_high;
            out.divergent_refits = freq.divergence_count;
            out.est_bayes = bayes.effect.point;
            out.se_bayes = bayes.effect.se;
            out.covered_bayes = bayes.effect.ci_low <= truth && truth <= bayes.effect.ci_high;
            out.divergent_inits = bayes.divergence_count;
            for (double a : bayes.acceptance_rates)
                if (a <= 0.1 || a >= 0.6) out.acceptance_violation = true;
            out.wall_standard = std::chrono::duration<double>(t1 - t0).count();
            out.wall_bayes = std::chrono::duration<double>(t2 - t1).count();
        } catch (const std::exception& e) {
            throw std::runtime_error("replicate " + std::to_string(m) + " (n=" +
                                     std::to_string(cell.n) + ", rho=" + std::to_string(cell.rho) +
                                     ", rd=" + std::to_string(cell.true_rd) + ") failed: " +
                                     e.what());
        }
    });

    std::vector<double> est_std(results.size()), est_bay(results.size());
    std::vector<char> cov_std(results.size()), cov_bay(results.size());
    double div_std = 0.0, div_bay = 0.0, wall_std = 0.0, wall_bay = 0.0;
    int violations = 0;
    for (std::size_t i = 0; i < results.size(); ++i) {
        est_std[i] = results[i].est_standard;
        est_bay[i] = results[i].est_bayes;
        cov_std[i] = results[i].covered_standard ? 1 : 0;
        cov_bay[i] = results[i].covered_bayes ? 1 : 0;
        div_std += static_cast<double>(results[i].divergent_refits) /
                   static_cast<double>(config.bootstrap_samples);
        div_bay += results[i].divergent_inits > 0 ? 1.0 : 0.0;
        wall_std += results[i].wall_standard;
        wall_bay += results[i].wall_bayes;
        violations += results[i].acceptance_violation ? 1 : 0;
    }

    CellResult out;
    out.cell = cell;
    out.standard = compute_method_metrics(est_std, cov_std, truth);
    out.standard.divergence = div_std / static_cast<double>(M);
    out.standard.wall_seconds = wall_std;
    out.bayes = compute_method_metrics(est_bay, cov_bay, truth);
    out.bayes.divergence = div_bay / static_cast<double>(M);
    out.bayes.wall_seconds = wall_bay;
    out.standard.mse_ratio = 1.0;
    out.bayes.mse_ratio = out.standard.mse > 0.0 ? out.bayes.mse / out.standard.mse
                                                 : std::numeric_limits<double>::quiet_NaN();
    out.acceptance_violations = violations;
    return out;
}

SimReport run_study(const StudyConfig& config) {
    if (config.grid.empty()) throw std::invalid_argument("run_study: empty cell grid");
    SimReport report;
    for (const auto& cell : config.grid) {
        CellResult r = run_cell(cell, config);
        std::fprintf(stderr,
                     "[cell n=%d rho=%.2f rd=%.2f] standard %.1fs, bayes %.1fs, "
                     "acceptance violations %d/%d\n",
                     cell.n, cell.rho, cell.true_rd, r.standard.wall_seconds,
                     r.bayes.wall_seconds, r.acceptance_violations, config.replicates);
        report.cells.push_back(std::move(r));
    }
    return report;
}

StudyConfig table_config(int table_id, const std::string& scale, std::uint64_t seed,
                         int workers) {
    StudyConfig config;
    config.base_seed = seed;
    config.workers = workers;
    if (scale == "desk") {
        config.replicates = 200;
        config.bootstrap_samples = 200;
        config.iterations = 2000;
        config.burn_in = 500;
    } else if (scale == "full") {
        config.replicates = 1000;
        config.bootstrap_samples = 1000;
        config.iterations = 10000;
        config.burn_in = 1000;
    } else {
        throw std::invalid_argument("table_config: scale must be 'desk' or 'full'");
    }
    if (table_id == 1) {
        config.scenario = Scenario::TimeFixed;
        for (double rho : {0.4, 0.8, 0.9, 0.98})
            for (double rd : {0.0, 0.2}) config.grid.push_back(Cell{100, rho, rd});
    } else if (table_id == 2) {
        config.scenario = Scenario::TimeVarying;
        for (int n : {20, 60, 100})
            for (double rd : {0.0, 0.2}) config.grid.push_back(Cell{n, 0.0, rd});
    } else {
        throw std::invalid_argument("table_config: table must be 1 or 2");
    }
    return config;
}

void write_report_csv(const SimReport& report, const StudyConfig& config, int table_id,
                      const std::string& scale, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write report file: " + path);
    out << "# gformula_version = " << kVersion << '\n';
    out << "# table = " << table_id << '\n';
    out << "# scale = " << scale << '\n';
    out << "# seed = " << config.base_seed << '\n';
    out << "# replicates = " << config.replicates << '\n';
    out << "# bootstrap_samples = " << config.bootstrap_samples << '\n';
    out << "# iterations = " << config.iterations << '\n';
    out << "# burn_in = " << config.burn_in << '\n';
    out << "# thin = " << config.thin << '\n';
    out << "# priors = intercept normal(log(0.5), 1000), others normal(0, 3)\n";
    out << "# bias_sign = truth_minus_estimate\n";
    const bool time_fixed = config.scenario == Scenario::TimeFixed;
    out << "method," << (time_fixed ? "rho" : "n")
        << ",true_rd,mean_bias,sd_bias,mse,coverage,mse_ratio,divergence\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6g", v);
        out << buf;
    };
    for (const auto& cell : report.cells) {
        for (int which = 0; which < 2; ++which) {
            const MethodMetrics& mm = which == 0 ? cell.standard : cell.bayes;
            out << (which == 0 ? "standard," : "bayes,");
            if (time_fixed)
                put(cell.cell.rho);
            else
                out << cell.cell.n;
            out << ',';
            put(cell.cell.true_rd);
            out << ',';
            put(mm.mean_bias);
            out << ',';
            put(mm.sd_bias);
            out << ',';
            put(mm.mse);
            out << ',';
            put(mm.coverage);
            out << ',';
            put(mm.mse_ratio);
            out << ',';
            put(mm.divergence);
            out << '\n';
        }
    }
}

SimReport replicate_table(int table_id, const std::string& scale, std::uint64_t seed,
                          const std::string& out_path, int workers) {
    StudyConfig config = table_config(table_id, scale, seed, workers);
    SimReport report = run_study(config);
    write_report_csv(report, config, table_id, scale, out_path);

    if (table_id == 1) {
        // expected pattern: standard sd_bias non-decreasing over rho 0.4 -> 0.9 at rd = 0
        double prev = -1.0;
        bool monotone = true;
        for (const auto& cell : report.cells) {
            if (cell.cell.true_rd != 0.0 || cell.cell.rho > 0.9) continue;
            if (cell.standard.sd_bias < prev) monotone = false;
            prev = cell.standard.sd_bias;
        }
        std::fprintf(stderr, "[table 1] standard sd_bias monotone over rho 0.4..0.9 at rd=0: %s\n",
                     monotone ? "yes" : "no");
    }
    return report;
}

} // namespace gformula
