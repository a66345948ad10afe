#pragma once

#include <functional>
#include <vector>

#include "spicov/spectra.hpp"
#include "spicov/types.hpp"

namespace spicov {

// Inputs the unbiased risk estimator consumes, for an orthogonally
// invariant estimator with eigenvalues psi_k = gamma_hat_k + sigma2_hat
// (k <= rho_hat) and psi_k = sigma2_hat (k > rho_hat):
//   psi          the p estimator eigenvalues, matched to l
//   jacobian     row k = gradient of psi_k with respect to (l_1, ..., l_p)
//   second_diag  d^2 psi_k / d l_k^2
struct EstimatorProfile {
    Vector psi;
    Matrix jacobian;
    Vector second_diag;
    int rho_hat = 0;
};

struct UreValue {
    double f = 0.0;      // dominant term, derivative-free
    double g = 0.0;      // dominated term, carries all derivatives
    double total = 0.0;  // f + g exactly as computed
};

// Dominant functional F. Depends on (l, psi) only. Requires n >= p+1 and a
// spectrum with gaps above the genericity tolerance.
double evaluate_F(const SpectralData& spec, const EstimatorProfile& profile);

// Dominated functional G: every term carries at least one derivative factor.
double evaluate_G(const SpectralData& spec, const EstimatorProfile& profile);

UreValue evaluate_ure(const SpectralData& spec, const EstimatorProfile& profile);

// An eigenvalue-estimator rule: descending spectrum -> (gamma_hat, sigma2_hat).
// The rank is the length of gammas and must not vary over the evaluation
// neighborhood used by finite differencing.
struct EigenvalueFit {
    std::vector<double> gammas;
    double sigma2 = 0.0;
};
using EigenvalueEstimator = std::function<EigenvalueFit(const Vector& l)>;

// Relative step for the central-difference profile: cube root of double
// epsilon, scaled. Used for both first and second derivatives.
inline constexpr double kDefaultFdStep = 4e-6;

// Central-difference Jacobian and diagonal second derivatives of the rule's
// psi map. Step h_b = step * max(l_b, l_p), clipped so perturbed spectra
// stay strictly ordered. Throws near_degenerate_error when no valid step
// exists, rank_error if the rule's rank changes under perturbation.
EstimatorProfile profile_finite_difference(const EigenvalueEstimator& estimator,
                                           const SpectralData& spec,
                                           double rel_step = kDefaultFdStep);

// Builds psi from a fit: psi_k = gamma_k + sigma2 for k < rank, else sigma2.
Vector fit_to_psi(const EigenvalueFit& fit, int p);

// L_H(est, truth) = tr[(est truth^-1 - I)^2] / p, evaluated through the
// symmetrized form ||truth^-1/2 est truth^-1/2 - I||_F^2 / p (solves
// against a Cholesky factor of the truth, never forms the inverse).
double haff_loss(const Matrix& estimate, const Matrix& truth);

// L_F(est, truth) = ||est - truth||_F^2 / p.
double frobenius_loss(const Matrix& estimate, const Matrix& truth);

} // namespace spicov
