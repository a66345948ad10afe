#include "spicov/noise.hpp"

#include <cmath>
#include <vector>

#include "spicov/ure.hpp"

namespace spicov {

NoiseSolution minimize_noise(const SpectralData& spec,
                             std::span<const double> gamma_hat,
                             int rho_hat) {
    const int p = spec.p;
    const double n = spec.n;
    const double dp = p;
    if (rho_hat < 0 || rho_hat >= p)
        throw rank_error("minimize_noise: requires 0 <= rho_hat < p (r = p falls back to S)");
    if (static_cast<int>(gamma_hat.size()) != rho_hat)
        throw rank_error("minimize_noise: gamma_hat length must equal rho_hat");
    if (rho_hat >= 1 && spec.near_degenerate)
        throw near_degenerate_error("minimize_noise: near-degenerate spectrum");

    const Vector& l = spec.eigenvalues;
    const double c2 = (n - dp - 1.0) * (n - dp - 2.0) / (n * n * dp);
    const double c1 = (n - dp - 1.0) / (n * n * dp);
    const double c0 = 1.0 / (n * n * dp);

    detail::Accumulator inv_sum, inv2_sum;
    for (int c = 0; c < p; ++c) {
        inv_sum.add(1.0 / l(c));
        inv2_sum.add(1.0 / (l(c) * l(c)));
    }

    // A is the exact stationarity numerator of the dominant URE term:
    // dF/dsigma2 = 2 (B sigma2 - A) pointwise in the eigenvalues, with the
    // spike differences entering through xbar_{k,b} = (g_k - g_b)/(l_k - l_b)
    // for the zero-extended spike vector g.
    detail::Accumulator a_acc;
    a_acc.add((n - dp - 1.0) / (n * dp) * inv_sum.value());
    if (rho_hat > 0) {
        detail::Accumulator spike_inv2, spike_inv;
        for (int k = 0; k < rho_hat; ++k) {
            const double g = gamma_hat[static_cast<std::size_t>(k)];
            spike_inv2.add(g / (l(k) * l(k)));
            spike_inv.add(g / l(k));
        }
        a_acc.add(-c2 * spike_inv2.value());
        a_acc.add(c1 * inv_sum.value() * spike_inv.value());

        std::vector<double> g(static_cast<std::size_t>(p), 0.0);
        for (int k = 0; k < rho_hat; ++k)
            g[static_cast<std::size_t>(k)] = gamma_hat[static_cast<std::size_t>(k)];

        detail::Accumulator cross, triple;
        for (int k = 0; k < p; ++k) {
            detail::Accumulator s1_acc, r1_acc, q1_acc;
            for (int b = 0; b < p; ++b) {
                if (b == k)
                    continue;
                const double r = 1.0 / (l(k) - l(b));
                r1_acc.add(r);
                if (k >= rho_hat && b >= rho_hat)
                    continue;  // xbar vanishes off the spike rows/columns
                const double x = (g[static_cast<std::size_t>(k)] -
                                  g[static_cast<std::size_t>(b)]) * r;
                s1_acc.add(x);
                q1_acc.add(x * r);
            }
            const double s1 = s1_acc.value();
            cross.add(s1 / l(k));
            triple.add(r1_acc.value() * s1 - q1_acc.value());
        }
        a_acc.add(-2.0 * c1 * cross.value());
        a_acc.add(-2.0 * c0 * triple.value());
    }

    NoiseSolution out;
    out.a = a_acc.value();
    out.b = c2 * inv2_sum.value() - c1 * inv_sum.value() * inv_sum.value();
    const double b_scale = c2 * inv2_sum.value();
    if (std::abs(out.b) <= 1e-14 * b_scale)
        throw ill_posed_error("minimize_noise: denominator B is numerically zero");
    out.sigma2_tilde = out.a / out.b;
    out.nonpositive = !(out.sigma2_tilde > 0.0);
    return out;
}

double stationarity_residual(const SpectralData& spec,
                             std::span<const double> gamma_hat,
                             int rho_hat,
                             double sigma2) {
    if (rho_hat < 0 || rho_hat >= spec.p)
        throw rank_error("stationarity_residual: requires 0 <= rho_hat < p");
    if (static_cast<int>(gamma_hat.size()) != rho_hat)
        throw rank_error("stationarity_residual: gamma_hat length must equal rho_hat");

    const auto f_at = [&](double s2) {
        EstimatorProfile profile;
        profile.psi = Vector::Constant(spec.p, s2);
        for (int k = 0; k < rho_hat; ++k)
            profile.psi(k) += gamma_hat[static_cast<std::size_t>(k)];
        profile.rho_hat = rho_hat;
        return evaluate_F(spec, profile);
    };

    // F is exactly quadratic in sigma2, so the central difference carries no
    // truncation error; a wide step keeps roundoff negligible.
    const double h = 0.5 * std::max(std::abs(sigma2), trailing_mean(spec, 0));
    return (f_at(sigma2 + h) - f_at(sigma2 - h)) / (2.0 * h);
}

} // namespace spicov
