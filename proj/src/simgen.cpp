#include "gformula/simgen.hpp"

#include <cmath>
#include <stdexcept>

#include "gformula/glm.hpp"

namespace gformula {

std::array<double, 4> nu_from_rho(double rho) {
    if (!(rho >= 0.0 && rho < 1.0))
        throw std::invalid_argument("nu_from_rho: rho must be in [0, 1)");
    double d = rho / 4.0;
    return {0.25 + d, 0.25 - d, 0.25 - d, 0.25 + d};
}

double rho_from_nu(const std::array<double, 4>& nu) {
    double num = nu[0] * nu[3] - nu[1] * nu[2];
    double den = std::sqrt((nu[0] + nu[2]) * (nu[1] + nu[3]) * (nu[0] + nu[1]) * (nu[2] + nu[3]));
    return num / den;
}

TimeFixedDGP TimeFixedDGP::make(int n, double rho, double true_rd) {
    TimeFixedDGP dgp;
    dgp.n = n;
    dgp.rho = rho;
    dgp.true_rd = true_rd;
    dgp.nu = nu_from_rho(rho);
    return dgp;
}

Panel gen_time_fixed(const TimeFixedDGP& dgp, Rng& rng, std::vector<double>* u_debug) {
    if (dgp.n < 1) throw std::invalid_argument("gen_time_fixed: n must be >= 1");
    const auto& nu = dgp.nu;
    PanelBuilder builder({"l"}, {1});
    std::uint64_t base = rng.next_u64();
    if (u_debug) u_debug->clear();
    for (int i = 0; i < dgp.n; ++i) {
        Rng sub = Rng::stream(base, static_cast<std::uint64_t>(i));
        double u = sub.uniform();
        double l = u < nu[0] + nu[1] ? 1.0 : 0.0;
        double px = l == 1.0 ? nu[0] + nu[3] : nu[1] + nu[2];
        double x = sub.bernoulli(px) ? 1.0 : 0.0;
        double py = 0.4 + u / 10.0 + dgp.true_rd * x;
        if (py < 0.0 || py > 1.0)
            throw std::invalid_argument("gen_time_fixed: outcome probability outside [0,1]");
        double y = sub.bernoulli(py) ? 1.0 : 0.0;
        builder.start_subject();
        builder.add_row(0, y, x, {l});
        if (u_debug) u_debug->push_back(u);
    }
    return builder.finish();
}

Panel gen_time_varying(const TimeVaryingDGP& dgp, Rng& rng, std::vector<double>* u_debug) {
    if (dgp.n < 1) throw std::invalid_argument("gen_time_varying: n must be >= 1");
    if (dgp.true_rd < 0.0 || dgp.true_rd > 0.5)
        throw std::invalid_argument("gen_time_varying: true_rd must be in [0, 0.5] to keep the "
                                    "outcome probability in [0,1]");
    PanelBuilder builder({"l"}, {1});
    std::uint64_t base = rng.next_u64();
    if (u_debug) u_debug->clear();
    for (int i = 0; i < dgp.n; ++i) {
        Rng sub = Rng::stream(base, static_cast<std::uint64_t>(i));
        double u = 0.4 + 0.1 * sub.uniform();
        double x0 = sub.bernoulli(0.5) ? 1.0 : 0.0;
        double l1 = sub.bernoulli(expit(-1.0 + x0 + u)) ? 1.0 : 0.0;
        double x1 = sub.bernoulli(expit(-1.0 + x0 + l1)) ? 1.0 : 0.0;
        double py = u + dgp.true_rd * (x0 + x1) / 2.0;
        double y1 = sub.bernoulli(py) ? 1.0 : 0.0;
        builder.start_subject();
        builder.add_row(0, 0.0, x0, {0.0});
        builder.add_row(1, y1, x1, {l1});
        if (u_debug) u_debug->push_back(u);
    }
    return builder.finish();
}

Panel gen_demo_longitudinal(int n, int horizon, Rng& rng) {
    if (n < 1 || horizon < 1) throw std::invalid_argument("gen_demo_longitudinal: bad size");
    // columns: active (binary, time-varying), age0 and risk0 (real, baseline)
    PanelBuilder builder({"active", "age0", "risk0"}, {1, 0, 0}, /*y_binary=*/false);
    std::uint64_t base = rng.next_u64();
    for (int i = 0; i < n; ++i) {
        Rng sub = Rng::stream(base, static_cast<std::uint64_t>(i));
        double age0 = 4.0 + 2.0 * sub.uniform();
        double risk0 = sub.normal();
        double frailty = 0.4 * sub.normal();
        double active = sub.bernoulli(0.6) ? 1.0 : 0.0;
        double exposed = sub.bernoulli(expit(-0.8 + 0.5 * risk0)) ? 1.0 : 0.0;
        double cum_x = 0.0;
        builder.start_subject();
        for (int t = 0; t <= horizon; ++t) {
            if (t > 0) {
                active = sub.bernoulli(expit(0.6 - 0.4 * cum_x + 0.3 * active)) ? 1.0 : 0.0;
                exposed = sub.bernoulli(expit(-0.9 + 1.2 * exposed + 0.1 * risk0)) ? 1.0 : 0.0;
            }
            cum_x += exposed;
            double z = 0.3 + 0.15 * cum_x - 0.2 * active + 0.1 * risk0 +
                       0.02 * (age0 - 5.0) + frailty + 0.3 * sub.normal();
            builder.add_row(t, z, exposed, {active, age0, risk0});
        }
    }
    return builder.finish();
}

} // namespace gformula
