#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gformula/harness.hpp"
#include "gformula/rng.hpp"

using namespace gformula;

namespace {

std::string file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace

TEST_CASE("an estimator always returning the truth scores perfectly") {
    std::vector<double> est(50, 0.2);
    std::vector<char> covered(50, 1);
    MethodMetrics m = compute_method_metrics(est, covered, 0.2);
    CHECK(m.mean_bias == 0.0);
    CHECK(m.sd_bias == 0.0);
    CHECK(m.mse == 0.0);
    CHECK(m.coverage == 1.0);
}

TEST_CASE("a constant truth+0.1 estimator with se 0.1 has the documented metrics") {
    const double truth = 0.2;
    const double se = 0.1;
    std::vector<double> est(40, truth + 0.1);
    std::vector<char> covered;
    for (double e : est)
        covered.push_back(e - 1.96 * se <= truth && truth <= e + 1.96 * se ? 1 : 0);
    MethodMetrics m = compute_method_metrics(est, covered, truth);
    CHECK(m.mean_bias == doctest::Approx(-0.1).epsilon(1e-12)); // truth - estimate
    CHECK(m.sd_bias < 1e-15);
    CHECK(m.mse == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(m.coverage == 1.0); // CI half-width 0.196 > 0.1
}

TEST_CASE("mse identity: (mean bias)^2 + variance equals mean squared error") {
    Rng rng(7);
    for (int rep = 0; rep < 20; ++rep) {
        int m = 10 + rng.uniform_int(200);
        std::vector<double> est;
        std::vector<char> covered;
        double truth = rng.normal();
        for (int i = 0; i < m; ++i) {
            est.push_back(truth + 0.3 * rng.normal());
            covered.push_back(1);
        }
        MethodMetrics mm = compute_method_metrics(est, covered, truth);
        double mean_sq = 0;
        for (double e : est) mean_sq += (truth - e) * (truth - e);
        mean_sq /= m;
        CHECK(std::abs(mm.mse - mean_sq) < 1e-12);
    }
}

TEST_CASE("table configurations match the study grids") {
    StudyConfig t1 = table_config(1, "desk", 7);
    CHECK(t1.scenario == Scenario::TimeFixed);
    CHECK(t1.grid.size() == 8);
    CHECK(t1.grid[0].rho == 0.4);
    CHECK(t1.grid[0].n == 100);
    CHECK(t1.replicates == 200);
    CHECK(t1.iterations == 2000);

    StudyConfig t2 = table_config(2, "full", 7);
    CHECK(t2.scenario == Scenario::TimeVarying);
    CHECK(t2.grid.size() == 6);
    CHECK(t2.grid[0].n == 20);
    CHECK(t2.replicates == 1000);
    CHECK(t2.iterations == 10000);
    CHECK(t2.burn_in == 1000);

    CHECK_THROWS_AS(table_config(3, "desk", 7), std::invalid_argument);
    CHECK_THROWS_AS(table_config(1, "huge", 7), std::invalid_argument);
}

TEST_CASE("analysis model specs have the study shapes") {
    ModelSpec tf = analysis_spec_time_fixed();
    CHECK(tf.outcome.terms.to_string() == "1 + x + l");
    CHECK(tf.covariate_models.empty());
    ModelSpec tv = analysis_spec_time_varying();
    CHECK(tv.outcome.terms.to_string() == "1 + cum(x,1) + x + l");
    REQUIRE(tv.covariate_models.size() == 1);
    CHECK(tv.covariate_models[0].terms.to_string() == "1 + cum(x,1)");
}

TEST_CASE("cell results do not depend on the worker count") {
    StudyConfig cfg;
    cfg.scenario = Scenario::TimeVarying;
    cfg.replicates = 12;
    cfg.bootstrap_samples = 30;
    cfg.iterations = 200;
    cfg.burn_in = 100;
    cfg.base_seed = 5;
    Cell cell{20, 0.0, 0.2};

    cfg.workers = 1;
    CellResult a = run_cell(cell, cfg);
    cfg.workers = 4;
    CellResult b = run_cell(cell, cfg);
    CHECK(a.standard.mean_bias == b.standard.mean_bias);
    CHECK(a.standard.sd_bias == b.standard.sd_bias);
    CHECK(a.standard.mse == b.standard.mse);
    CHECK(a.standard.coverage == b.standard.coverage);
    CHECK(a.bayes.mean_bias == b.bayes.mean_bias);
    CHECK(a.bayes.mse == b.bayes.mse);
    CHECK(a.bayes.coverage == b.bayes.coverage);
    CHECK(a.standard.mse_ratio == 1.0);
    CHECK(a.bayes.mse_ratio == doctest::Approx(a.bayes.mse / a.standard.mse).epsilon(1e-15));
}

TEST_CASE("report CSVs are byte-identical across runs and worker counts") {
    StudyConfig cfg;
    cfg.scenario = Scenario::TimeVarying;
    cfg.grid = {Cell{20, 0.0, 0.0}, Cell{20, 0.0, 0.2}};
    cfg.replicates = 8;
    cfg.bootstrap_samples = 20;
    cfg.iterations = 150;
    cfg.burn_in = 80;
    cfg.base_seed = 9;

    auto dir = std::filesystem::temp_directory_path();
    auto p1 = dir / "gf_report_a.csv";
    auto p2 = dir / "gf_report_b.csv";

    cfg.workers = 1;
    write_report_csv(run_study(cfg), cfg, 2, "unit", p1.string());
    cfg.workers = 4;
    write_report_csv(run_study(cfg), cfg, 2, "unit", p2.string());
    CHECK(file_bytes(p1.string()) == file_bytes(p2.string()));

    // header block carries the run settings
    std::ifstream in(p1);
    std::string line;
    std::getline(in, line);
    CHECK(line.rfind("# gformula_version", 0) == 0);
    bool saw_seed = false, saw_sign = false;
    while (std::getline(in, line) && line.rfind("#", 0) == 0) {
        if (line == "# seed = 9") saw_seed = true;
        if (line == "# bias_sign = truth_minus_estimate") saw_sign = true;
    }
    CHECK(saw_seed);
    CHECK(saw_sign);
    CHECK(line == "method,n,true_rd,mean_bias,sd_bias,mse,coverage,mse_ratio,divergence");
    std::filesystem::remove(p1);
    std::filesystem::remove(p2);
}

TEST_CASE("replicate failures abort the cell with a diagnostic") {
    StudyConfig cfg;
    cfg.scenario = Scenario::TimeFixed;
    cfg.replicates = 4;
    cfg.bootstrap_samples = 5;
    cfg.iterations = 50;
    cfg.burn_in = 20;
    Cell bad{0, 0.4, 0.0}; // n = 0 subjects cannot be generated
    CHECK_THROWS_WITH_AS(run_cell(bad, cfg), doctest::Contains("replicate"), std::runtime_error);
}
