#ifndef GFORMULA_HARNESS_HPP
#define GFORMULA_HARNESS_HPP

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "gformula/gformula.hpp"
#include "gformula/model.hpp"

namespace gformula {

inline constexpr const char* kVersion = "0.1.0";

enum class Scenario { TimeFixed, TimeVarying };

// One grid cell: rho applies to the time-fixed scenario, n to both.
struct Cell {
    int n = 100;
    double rho = 0.0;
    double true_rd = 0.0;
};

struct StudyConfig {
    Scenario scenario = Scenario::TimeFixed;
    std::vector<Cell> grid;
    int replicates = 200;        // M
    int bootstrap_samples = 200; // S
    int iterations = 2000;       // C
    int burn_in = 500;           // B
    int thin = 1;
    double initial_step_scale = 0.5;
    Prior intercept_prior = Prior::normal(std::log(0.5), 1000.0);
    Prior other_prior = Prior::normal(0.0, 3.0);
    std::uint64_t base_seed = 7;
    int workers = 0; // 0 = hardware concurrency
};

// Per (method, cell) metrics. Bias is truth minus estimate; mse is the mean
// squared error of the point estimates, identically (mean bias)^2 plus the
// population variance of the bias. mse_ratio is Bayes over Standard within
// the cell (1 for Standard rows).
struct MethodMetrics {
    double mean_bias = 0.0;
    double sd_bias = 0.0;
    double mse = 0.0;
    double coverage = 0.0;
    double mse_ratio = 1.0;
    double divergence = 0.0; // flagged-refit fraction (Standard) or flagged-init fraction (Bayes)
    double wall_seconds = 0.0;
};

struct CellResult {
    Cell cell;
    MethodMetrics standard;
    MethodMetrics bayes;
    int acceptance_violations = 0; // replicates with a block acceptance outside (0.1, 0.6)
};

struct SimReport {
    std::vector<CellResult> cells;
};

// analysis models used by the simulation studies
ModelSpec analysis_spec_time_fixed();
ModelSpec analysis_spec_time_varying();

// bias_m = truth - estimate_m; mse = (mean bias)^2 + population variance,
// identically the mean of squared errors
MethodMetrics compute_method_metrics(const std::vector<double>& estimates,
                                     const std::vector<char>& covered, double truth);

// M replicates of generate -> standard g-formula -> Bayesian g-formula;
// replicate m uses seed base_seed + m. Any replicate failure aborts the cell.
CellResult run_cell(const Cell& cell, const StudyConfig& config);

SimReport run_study(const StudyConfig& config);

// Grid and settings for the two simulation studies. table_id 1 is the
// time-fixed correlated-exposure study (rho grid, n = 100), table_id 2 the
// two-period time-varying study (n grid). scale: "desk" (M=200, S=200,
// C=2000, B=500) or "full" (M=1000, S=1000, C=10000, B=1000).
StudyConfig table_config(int table_id, const std::string& scale, std::uint64_t seed,
                         int workers = 0);

// Runs the table grid and writes the report CSV (deterministic bytes for a
// given seed, independent of worker count). Returns the report.
SimReport replicate_table(int table_id, const std::string& scale, std::uint64_t seed,
                          const std::string& out_path, int workers = 0);

void write_report_csv(const SimReport& report, const StudyConfig& config, int table_id,
                      const std::string& scale, const std::string& path);

// deterministic worker pool: fn(i) for i in [0, n); results must be stored
// by index so output does not depend on scheduling
void parallel_for(int n, int workers, const std::function<void(int)>& fn);

} // namespace gformula

#endif
