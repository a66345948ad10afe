#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "spicov/rng.hpp"
#include "spicov/types.hpp"

namespace spicov {

// Spiked covariance truth: Sigma = diag(gamma, 0) + sigma2 * I_p.
// Eigenvalues are gamma_k + sigma2 for k <= rho and sigma2 with
// multiplicity p - rho. rho = 0 (pure noise) is valid.
struct SpikedModel {
    std::vector<double> gammas;  // strictly decreasing, all > 0
    double sigma2 = 1.0;
    int p = 0;

    int rank() const { return static_cast<int>(gammas.size()); }
};

// Autoregressive truth: Sigma_ij = kappa^|i-j|, kappa in [0, 1).
struct ARModel {
    double kappa = 0.0;
    int p = 0;
};

using CovarianceModel = std::variant<SpikedModel, ARModel>;

struct SampleSpec {
    int n = 0;
    int p = 0;
    std::uint64_t seed = 0;
};

void validate(const SpikedModel& model);
void validate(const ARModel& model);

Matrix materialize(const SpikedModel& model);
Matrix materialize(const ARModel& model);
Matrix materialize(const CovarianceModel& model);

// n x p data matrix with i.i.d. N(0, Sigma) rows, filled row-by-row from
// the stream so the draw is bit-reproducible for a given seed.
Matrix sample_data(const CovarianceModel& model, const SampleSpec& spec);
Matrix sample_data(const CovarianceModel& model, const SampleSpec& spec, GaussianStream& stream);

// S = X'X / n. Requires n >= p.
Matrix sample_covariance(const CovarianceModel& model, const SampleSpec& spec);
Matrix sample_covariance_of(const Matrix& data);

double true_noise(const SpikedModel& model);
const std::vector<double>& true_spikes(const SpikedModel& model);

// Copy of the model with the dimension replaced; used by the harness to
// instantiate one declarative model over a grid of (n, p) pairs.
CovarianceModel with_dimension(const CovarianceModel& model, int p);

} // namespace spicov
