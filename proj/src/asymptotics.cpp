#include "spicov/asymptotics.hpp"

#include <cmath>
#include <numbers>

namespace spicov {

bool RegimeParams::supercritical(double gamma) const {
    return gamma > std::sqrt(c) * sigma2;
}

bool RegimeParams::all_supercritical() const {
    for (double g : gammas)
        if (!supercritical(g))
            return false;
    return true;
}

void validate(const RegimeParams& params) {
    if (!(params.c > 0.0) || !(params.c < 1.0))
        throw domain_error("RegimeParams: c must lie in (0, 1)");
    if (!(params.sigma2 > 0.0))
        throw domain_error("RegimeParams: sigma2 must be positive");
    for (std::size_t k = 0; k < params.gammas.size(); ++k) {
        if (params.gammas[k] <= 0.0)
            throw domain_error("RegimeParams: spikes must be positive");
        if (k > 0 && params.gammas[k] >= params.gammas[k - 1])
            throw domain_error("RegimeParams: spikes must be strictly decreasing");
    }
}

double eigenvalue_limit(double gamma_k, const RegimeParams& params) {
    validate(params);
    if (gamma_k <= 0.0)
        throw domain_error("eigenvalue_limit: spike must be positive");
    const double s2 = params.sigma2;
    if (gamma_k > std::sqrt(params.c) * s2)
        return (gamma_k + s2) * (gamma_k + params.c * s2) / gamma_k;
    return std::pow(1.0 + std::sqrt(params.c), 2) * s2;
}

double mp_inverse_moment(int m, const RegimeParams& params) {
    validate(params);
    if (m < 1)
        throw domain_error("mp_inverse_moment: order must be >= 1");
    return 1.0 / (std::pow(1.0 - params.c, 2 * m - 1) * std::pow(params.sigma2, m));
}

StieltjesLimits stieltjes_limits(double gamma_k, const RegimeParams& params) {
    validate(params);
    if (!params.supercritical(gamma_k))
        throw domain_error("stieltjes_limits: spike is subcritical; the sums do not converge");
    const double s2 = params.sigma2;
    const double shifted = gamma_k + params.c * s2;
    StieltjesLimits out;
    out.weighted = s2 / gamma_k;
    out.plain = 1.0 / shifted;
    out.inverse_weighted = gamma_k / ((1.0 - params.c) * s2 * shifted * shifted);
    return out;
}

CltConstants clt_constants(const RegimeParams& params,
                           const std::vector<double>& gamma_bar) {
    validate(params);
    const std::vector<double>& bar = gamma_bar.empty() ? params.gammas : gamma_bar;
    if (bar.size() != params.gammas.size())
        throw domain_error("clt_constants: gamma_bar must match gammas in length");

    const double c = params.c;
    const double s2 = params.sigma2;
    const double rho = static_cast<double>(params.gammas.size());
    const double omc2 = std::pow(1.0 - c, 2);
    const double omsq = std::pow(1.0 - std::sqrt(c), 2);

    double bound_gap_plus = 0.0;   // term unique to mu+
    double bound_gap_minus = 0.0;  // terms unique to mu-
    double shared = 0.0;
    for (std::size_t k = 0; k < params.gammas.size(); ++k) {
        const double g = params.gammas[k];
        const double gb = bar[k];
        const double d1 = g + s2;
        const double d2 = g + c * s2;
        bound_gap_plus += -omc2 / c * (s2 * s2 * s2) * g * g / (d1 * d1 * d2 * d2);
        bound_gap_minus += (1.0 + c) / c * (s2 * s2) * g / (d1 * d2);
        bound_gap_minus += -3.0 * c * gb * (s2 * s2) / (d2 * d2);
        shared += omc2 / c * g * g * gb * (s2 * s2) / (d1 * d1 * d2 * d2);
        shared += g * gb * s2 / (d1 * d2);
        shared += -2.0 * g * gb * s2 / (d2 * d2);
    }

    CltConstants out;
    const double common = (2.0 * c * rho - 1.0) * s2 / omc2 + shared;
    out.mu_plus = common + (2.0 - c) * (1.0 + c) * rho * s2 / omsq + bound_gap_plus;
    out.mu_minus = common - omc2 * rho * s2 / (c * omsq) + bound_gap_minus;
    out.variance = 2.0 * c * std::pow(1.0 + c, 2) * s2 * s2 / std::pow(1.0 - c, 4);
    return out;
}

double tv_bound(double c, double M, int r) {
    if (!(c > 0.0) || !(c < 1.0))
        throw domain_error("tv_bound: c must lie in (0, 1)");
    if (!(M > 0.0))
        throw domain_error("tv_bound: M must be positive");
    if (r < 1)
        throw domain_error("tv_bound: ball order must be >= 1");
    if (r > 1)
        return 0.0;
    return std::sqrt(1.0 - std::exp(-c * M * M / 2.0));
}

double minimax_M(double c, double epsilon) {
    if (!(c > 0.0) || !(c < 1.0))
        throw domain_error("minimax_M: c must lie in (0, 1)");
    if (!(epsilon > 0.0) || !(epsilon < 0.25))
        throw domain_error("minimax_M: epsilon must lie in (0, 1/4)");
    const double t = 1.0 - 4.0 * epsilon;
    return std::sqrt(-(2.0 / c) * std::log(1.0 - t * t));
}

double mp_density(double t, double c, double sigma2) {
    if (!(c > 0.0) || !(c < 1.0))
        throw domain_error("mp_density: c must lie in (0, 1)");
    if (!(sigma2 > 0.0))
        throw domain_error("mp_density: sigma2 must be positive");
    const double lo = sigma2 * std::pow(1.0 - std::sqrt(c), 2);
    const double hi = sigma2 * std::pow(1.0 + std::sqrt(c), 2);
    if (t <= lo || t >= hi)
        return 0.0;
    return std::sqrt((hi - t) * (t - lo)) / (2.0 * std::numbers::pi * c * sigma2 * t);
}

} // namespace spicov
