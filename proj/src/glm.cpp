#include "gformula/glm.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace gformula {

double expit(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    double e = std::exp(z);
    return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

double log1pexp(double z) {
    if (z > 33.0) return z; // exp(-z) below double epsilon
    if (z < -37.0) return std::exp(z);
    return std::log1p(std::exp(z));
}

namespace {

void check_dims(const Eigen::VectorXd& beta, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                const char* what) {
    if (X.cols() != beta.size() || X.rows() != y.size())
        throw std::invalid_argument(std::string(what) + ": dimension mismatch (X " +
                                    std::to_string(X.rows()) + "x" + std::to_string(X.cols()) +
                                    ", beta " + std::to_string(beta.size()) + ", y " +
                                    std::to_string(y.size()) + ")");
}

} // namespace

double loglik_bernoulli(const Eigen::VectorXd& beta, const Eigen::MatrixXd& design,
                        const Eigen::VectorXd& y) {
    check_dims(beta, design, y, "loglik_bernoulli");
    Eigen::VectorXd z = design * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        // y log p + (1-y) log(1-p) = -log1pexp(-z) when y=1, -log1pexp(z) when y=0
        ll += y[i] * -log1pexp(-z[i]) + (1.0 - y[i]) * -log1pexp(z[i]);
    }
    return ll;
}

Eigen::VectorXd score_bernoulli(const Eigen::VectorXd& beta, const Eigen::MatrixXd& design,
                                const Eigen::VectorXd& y) {
    check_dims(beta, design, y, "score_bernoulli");
    Eigen::VectorXd p = (design * beta).unaryExpr([](double z) { return expit(z); });
    return design.transpose() * (y - p);
}

double loglik_gaussian(const Eigen::VectorXd& beta, double sigma, const Eigen::MatrixXd& design,
                       const Eigen::VectorXd& y) {
    check_dims(beta, design, y, "loglik_gaussian");
    if (!(sigma > 0.0)) throw std::invalid_argument("loglik_gaussian: sigma must be > 0");
    const double log2pi = 1.8378770664093454836;
    Eigen::VectorXd r = y - design * beta;
    double n = static_cast<double>(y.size());
    return -0.5 * n * (log2pi + 2.0 * std::log(sigma)) - r.squaredNorm() / (2.0 * sigma * sigma);
}

Eigen::VectorXd score_gaussian(const Eigen::VectorXd& beta, double sigma,
                               const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    check_dims(beta, design, y, "score_gaussian");
    if (!(sigma > 0.0)) throw std::invalid_argument("score_gaussian: sigma must be > 0");
    return design.transpose() * (y - design * beta) / (sigma * sigma);
}

double score_gaussian_log_sigma(const Eigen::VectorXd& beta, double log_sigma,
                                const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    double sigma = std::exp(log_sigma);
    Eigen::VectorXd r = y - design * beta;
    double n = static_cast<double>(y.size());
    return -n + r.squaredNorm() / (sigma * sigma);
}

namespace {

FitResult fit_gaussian(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    FitResult out;
    Eigen::MatrixXd xtx = X.transpose() * X;
    xtx.diagonal().array() += kIrlsRidge;
    out.coef = xtx.ldlt().solve(X.transpose() * y);
    double rss = (y - X * out.coef).squaredNorm();
    double n = static_cast<double>(y.size());
    out.sigma = std::sqrt(std::max(rss / n, 1e-300));
    out.log_likelihood = loglik_gaussian(out.coef, out.sigma, X, y);
    out.converged = true;
    out.iterations = 1;
    return out;
}

FitResult fit_bernoulli(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    const Eigen::Index p = X.cols();
    FitResult out;
    out.coef = Eigen::VectorXd::Zero(p);
    double ll = loglik_bernoulli(out.coef, X, y);
    out.loglik_trace.push_back(ll);

    for (int iter = 1; iter <= kMaxIrlsIterations; ++iter) {
        out.iterations = iter;
        Eigen::VectorXd prob = (X * out.coef).unaryExpr([](double z) { return expit(z); });
        Eigen::VectorXd score = X.transpose() * (y - prob);
        if (score.lpNorm<Eigen::Infinity>() < kScoreTol) {
            out.converged = true;
            break;
        }
        Eigen::VectorXd w = prob.array() * (1.0 - prob.array());
        Eigen::MatrixXd hess = X.transpose() * w.asDiagonal() * X;
        hess.diagonal().array() += kIrlsRidge;
        Eigen::VectorXd step = hess.ldlt().solve(score);

        // step halving keeps the log-likelihood non-decreasing
        double factor = 1.0;
        Eigen::VectorXd cand;
        double cand_ll = -std::numeric_limits<double>::infinity();
        bool cand_clamped = false;
        for (int h = 0; h < 30; ++h) {
            cand = out.coef + factor * step;
            cand_clamped = false;
            for (Eigen::Index j = 0; j < p; ++j) {
                if (cand[j] > kCoefClamp) {
                    cand[j] = kCoefClamp;
                    cand_clamped = true;
                } else if (cand[j] < -kCoefClamp) {
                    cand[j] = -kCoefClamp;
                    cand_clamped = true;
                }
            }
            cand_ll = loglik_bernoulli(cand, X, y);
            if (cand_ll >= ll - 1e-12) break;
            factor *= 0.5;
        }
        if (cand_ll < ll) break; // no improving step; stop where we are
        out.coef = cand;
        ll = cand_ll;
        out.loglik_trace.push_back(ll);
        if (cand_clamped) out.divergence_flag = true;
    }
    out.log_likelihood = ll;
    return out;
}

} // namespace

FitResult fit_mle(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, Family family) {
    if (design.rows() == 0) throw std::invalid_argument("fit_mle: empty data");
    if (design.rows() != y.size()) throw std::invalid_argument("fit_mle: dimension mismatch");
    return family == Family::GaussianIdentity ? fit_gaussian(design, y)
                                              : fit_bernoulli(design, y);
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double quantile_of(std::vector<double> v, double p) {
    if (v.empty()) throw std::invalid_argument("quantile_of: empty data");
    std::sort(v.begin(), v.end());
    double h = p * static_cast<double>(v.size() - 1);
    auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= v.size()) return v.back();
    double frac = h - static_cast<double>(lo);
    return v[lo] + frac * (v[lo + 1] - v[lo]);
}

} // namespace gformula
