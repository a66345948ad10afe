#pragma once

#include <utility>
#include <vector>

#include "spicov/noise.hpp"
#include "spicov/spectra.hpp"
#include "spicov/types.hpp"
#include "spicov/ure.hpp"

namespace spicov {

// Assembled spiked estimate: O diag(gammas_hat, 0) O' + sigma2_hat I.
// rho_hat == p is the boundary case (gammas_hat = l, sigma2_hat = 0),
// where the estimate is the sample covariance matrix itself.
struct SpikedEstimate {
    std::vector<double> gammas_hat;
    double sigma2_hat = 0.0;
    Matrix basis;  // eigenvectors of S, columns in descending eigenvalue order
    int rho_hat = 0;
    int n = 0;
    int p = 0;
};

// Spiked eigenvalue estimates at rank r:
//   gamma_tilde_k = (sum_{c>r} l_c) / (sum_{c>r} l_c / (l_k - l_c)).
// Returns r values (empty for r = 0). Throws rank_error for r >= p,
// near_degenerate_error when a denominator term would blow up.
std::vector<double> estimate_gammas(const SpectralData& spec, int r);

// Detection-threshold statistic for candidate rank r < p:
//   (1 / l_{r+1}) * (1 + sqrt(p/n))^2 / (p - r) * sum_{c >= r+1} l_c,
// i.e. the next eigenvalue is compared against the estimated bulk edge.
// Candidate r is above threshold when the statistic is >= 1.
double threshold_statistic(const SpectralData& spec, int r);

struct RankCandidate {
    int r = 0;
    double threshold_stat = 0.0;
    bool threshold_ok = false;
    double sigma2 = 0.0;
    bool sigma2_ok = false;      // finite and positive
    bool ure_evaluated = false;  // profile + F_r + G_r were computed
    double f = 0.0;
    double g = 0.0;
    double ure_total = 0.0;
    bool ure_ok = false;         // |F_r + G_r| <= (p+1)/n
    bool admissible = false;
};

struct RankDiagnostics {
    std::vector<RankCandidate> candidates;  // one per examined r
    int selected = -1;
};

struct SelectOptions {
    double fd_step = kDefaultFdStep;
};

// The fixed-rank member of the estimator family: l -> (gamma_tilde(r),
// sigma2_tilde_r). Copies n and r by value; evaluable at perturbed spectra.
EigenvalueEstimator fixed_rank_estimator(int r, int n);

// Central-difference profile of the fixed-rank rule, numerically equal to
// profile_finite_difference(fixed_rank_estimator(r, n), spec, step) but
// evaluated in O(rank * p) per perturbation: the pairwise reciprocal sums
// of the base spectrum are reused across the 2p one-coordinate shifts
// instead of being rebuilt from scratch.
EstimatorProfile profile_fixed_rank(const SpectralData& spec, int r,
                                    double step = kDefaultFdStep);

// Smallest admissible rank: candidate r < p is admissible when the
// threshold statistic is >= 1, sigma2_tilde_r is finite and positive, and
// |F_r + G_r| <= (p+1)/n with the finite-difference profile. r = p is
// admissible by convention, so the search never fails. Candidates are
// examined in ascending order and the loop stops at the first admissible
// one; the URE is evaluated only for candidates that pass the threshold
// and noise checks (it cannot change the verdict otherwise).
std::pair<int, RankDiagnostics> select_rank(const SpectralData& spec,
                                            const SelectOptions& options = {});

// Full pipeline: select the rank, then build the estimate at that rank.
SpikedEstimate assemble(const SpectralData& spec, const SelectOptions& options = {});
SpikedEstimate assemble_at_rank(const SpectralData& spec, int r);

// Materializes O diag(psi) O'.
Matrix to_matrix(const SpikedEstimate& estimate);
// Same, but returns the original S (entrywise) when rho_hat == p.
Matrix to_matrix(const SpikedEstimate& estimate, const Matrix& S);

// Eigenvalue shrinker optimal under Frobenius/Haff loss when the noise is
// known and fixed at sigma2 = 1:
//   gamma_hat = [l - 1 + c l / (l - 1)] * (1 - c/(l-1)^2) / (1 + c/(l-1)),
// valid for l > (1 + sqrt(c))^2. Throws below_bulk_error otherwise.
double donoho_gavish_gamma(double l_k, double c);

} // namespace spicov
