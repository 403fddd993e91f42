#ifndef GFORMULA_GLM_HPP
#define GFORMULA_GLM_HPP

#include <Eigen/Dense>
#include <vector>

#include "gformula/model.hpp"

namespace gformula {

// Coefficients whose magnitude reaches this bound are clamped and the fit is
// flagged divergent. Bootstrap refits on tiny resamples separate routinely;
// clamped fits are kept and counted rather than dropped.
inline constexpr double kCoefClamp = 15.0;
inline constexpr double kIrlsRidge = 1e-8;
inline constexpr double kScoreTol = 1e-8;
inline constexpr int kMaxIrlsIterations = 50;

double expit(double z);
double logit(double p);
// log(1 + exp(z)) without overflow
double log1pexp(double z);

double loglik_bernoulli(const Eigen::VectorXd& beta, const Eigen::MatrixXd& design,
                        const Eigen::VectorXd& y);
Eigen::VectorXd score_bernoulli(const Eigen::VectorXd& beta, const Eigen::MatrixXd& design,
                                const Eigen::VectorXd& y);

double loglik_gaussian(const Eigen::VectorXd& beta, double sigma, const Eigen::MatrixXd& design,
                       const Eigen::VectorXd& y);
Eigen::VectorXd score_gaussian(const Eigen::VectorXd& beta, double sigma,
                               const Eigen::MatrixXd& design, const Eigen::VectorXd& y);
double score_gaussian_log_sigma(const Eigen::VectorXd& beta, double log_sigma,
                                const Eigen::MatrixXd& design, const Eigen::VectorXd& y);

struct FitResult {
    Eigen::VectorXd coef;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;
    bool divergence_flag = false;
    double sigma = 1.0;                  // Gaussian residual-scale MLE
    std::vector<double> loglik_trace;    // per accepted IRLS iterate, starting at beta = 0
};

// Bernoulli: IRLS (Newton with step halving) until max |score| < 1e-8 or 50
// iterations, ridge 1e-8 I in the solves, clamp at +-15 with divergence flag.
// Gaussian: closed-form ridge least squares with sigma^2 = RSS / n.
FitResult fit_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, Family family);

// sample mean / SD / percentile helpers shared by the estimation modules
double mean_of(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);
// linear-interpolation quantile on a copy of the data, p in [0, 1]
double quantile_of(std::vector<double> v, double p);

} // namespace gformula

#endif
