#ifndef GFORMULA_SIMGEN_HPP
#define GFORMULA_SIMGEN_HPP

#include <array>
#include <vector>

#include "gformula/panel.hpp"
#include "gformula/rng.hpp"

namespace gformula {

// Time-fixed generator: binary confounder l and exposure x with a chosen
// correlation rho, both with marginal mean 0.5; outcome probability
// 0.4 + U/10 + true_rd * x with U uniform(0,1) shared by l and y.
struct TimeFixedDGP {
    int n = 100;
    double rho = 0.0;
    double true_rd = 0.0;
    std::array<double, 4> nu{}; // cross-tab cell proportions of (x, l)

    static TimeFixedDGP make(int n, double rho, double true_rd);
};

// Two-period generator: x(0) Bernoulli(0.5), confounder l(1) depends on x(0)
// and a latent U uniform(0.4, 0.5), x(1) depends on x(0) and l(1), terminal
// outcome probability U + true_rd * (x(0) + x(1)) / 2.
struct TimeVaryingDGP {
    int n = 100;
    double true_rd = 0.0;
};

// Unique cell proportions (nu1..nu4) with sum 1, both margins 0.5, and
// correlation rho: nu1 = nu4 = 0.25 + rho/4, nu2 = nu3 = 0.25 - rho/4.
std::array<double, 4> nu_from_rho(double rho);

// correlation implied by cell proportions; used as the back-substitution check
double rho_from_nu(const std::array<double, 4>& nu);

// u_debug, when given, receives the latent U draws; U never enters the Panel.
Panel gen_time_fixed(const TimeFixedDGP& dgp, Rng& rng, std::vector<double>* u_debug = nullptr);
Panel gen_time_varying(const TimeVaryingDGP& dgp, Rng& rng,
                       std::vector<double>* u_debug = nullptr);

// Synthetic longitudinal panel shaped like a small cohort study: a real
// outcome measured at each visit, a binary time-varying covariate, binary
// exposure, and two baseline covariates. Arbitrary coefficients; exercises
// the Gaussian-outcome and shrinkage-prior paths. Not a replication of any
// published dataset.
Panel gen_demo_longitudinal(int n, int horizon, Rng& rng);

} // namespace gformula

#endif
