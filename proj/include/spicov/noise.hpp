#pragma once

#include <span>

#include "spicov/spectra.hpp"
#include "spicov/types.hpp"

namespace spicov {

// Closed-form minimizer of the dominant URE term over the noise component:
// sigma2_tilde = A / B. A negative value is reported as-is with the
// nonpositive flag set; downstream rank selection rejects such candidates.
struct NoiseSolution {
    double a = 0.0;
    double b = 0.0;
    double sigma2_tilde = 0.0;
    bool nonpositive = false;
};

// Computes A and B for the given spiked component (gamma_hat of length
// rho_hat) and sigma2_tilde = A/B. The coefficients are the exact
// stationarity coefficients of evaluate_F in sigma2:
//     dF/dsigma2 = 2 (B sigma2 - A)   pointwise,
// so sigma2_tilde minimizes F over sigma2 whenever B > 0 (guaranteed for
// n >= 2p+2 on a nondegenerate spectrum).
// Throws rank_error for rho_hat >= p, ill_posed_error when |B| vanishes,
// near_degenerate_error when rho_hat >= 1 on a near-degenerate spectrum.
NoiseSolution minimize_noise(const SpectralData& spec,
                             std::span<const double> gamma_hat,
                             int rho_hat);

// dF/dsigma2 at the given sigma2, holding the spectrum and gamma_hat fixed,
// computed by central finite difference on evaluate_F. F is exactly
// quadratic in sigma2, so the central difference has no truncation error
// and a wide step is used to suppress roundoff.
double stationarity_residual(const SpectralData& spec,
                             std::span<const double> gamma_hat,
                             int rho_hat,
                             double sigma2);

} // namespace spicov
