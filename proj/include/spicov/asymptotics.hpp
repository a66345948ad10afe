#pragma once

#include <vector>

#include "spicov/types.hpp"

namespace spicov {

// High-dimensional regime p/n -> c in (0, 1) over a spiked truth.
struct RegimeParams {
    double c = 0.5;
    double sigma2 = 1.0;
    std::vector<double> gammas;

    // BBP detectability: gamma > sqrt(c) * sigma2.
    bool supercritical(double gamma) const;
    bool all_supercritical() const;
};

void validate(const RegimeParams& params);

// Almost-sure limit of the k-th sample eigenvalue over a spike gamma_k:
//   (gamma_k + sigma2)(gamma_k + c sigma2) / gamma_k     if supercritical,
//   (1 + sqrt(c))^2 sigma2                               otherwise.
// Continuous at gamma_k = sqrt(c) sigma2 (both branches meet at the edge).
double eigenvalue_limit(double gamma_k, const RegimeParams& params);

// lim (p - rho)^-1 sum_{c > rho} 1 / l_c^m = 1 / ((1-c)^{2m-1} sigma2^m)
// for m >= 2; the m = 1 case extends to 1 / ((1-c) sigma2).
double mp_inverse_moment(int m, const RegimeParams& params);

// The three normalized trailing sums evaluated at a supercritical spike:
//   weighted          lim (p-rho)^-1 sum l_c / (l_k - l_c)  = sigma2 / gamma_k
//   plain             lim (p-rho)^-1 sum 1 / (l_k - l_c)    = 1 / (gamma_k + c sigma2)
//   inverse_weighted  lim (p-rho)^-1 sum 1 / (l_c (l_k-l_c))
//                       = gamma_k / ((1-c) sigma2 (gamma_k + c sigma2)^2)
struct StieltjesLimits {
    double weighted = 0.0;
    double plain = 0.0;
    double inverse_weighted = 0.0;
};
StieltjesLimits stieltjes_limits(double gamma_k, const RegimeParams& params);

// Centering bounds and variance for n(sigma2_tilde - sigma2):
//   X^-_n <= n(sigma2_tilde - sigma2) <= X^+_n with X^+- asymptotically
//   N(mu^-+, 2c(1+c)^2 sigma2^2 / (1-c)^4). gamma_bar are the a.s. limits
//   of the chosen spike estimates (gamma_bar = gamma for consistent ones).
// mu^- and mu^+ are bounds' centerings, not the exact CLT mean; consumers
// should use the band [mu_minus, mu_plus], never a point target.
struct CltConstants {
    double mu_minus = 0.0;
    double mu_plus = 0.0;
    double variance = 0.0;
};
CltConstants clt_constants(const RegimeParams& params,
                           const std::vector<double>& gamma_bar = {});

// Asymptotic total-variation bound between N(0, Sigma)^n over an
// eigenvalue-perturbation ball of order r:
//   sqrt(1 - exp(-c M^2 / 2)) for r = 1, and 0 for r > 1.
double tv_bound(double c, double M, int r);

// Critical radius of the two-point minimax argument:
//   M_eps = sqrt(-(2/c) log(1 - (1 - 4 eps)^2)), for eps in (0, 1/4).
double minimax_M(double c, double epsilon);

// Density of the scaled Marchenko-Pastur law sigma2 * MP(c) at t:
//   sqrt((sigma2 c+ - t)(t - sigma2 c-)) / (2 pi c sigma2 t)
// on [sigma2 c-, sigma2 c+], c+- = (1 +- sqrt(c))^2; zero outside.
double mp_density(double t, double c, double sigma2);

} // namespace spicov
