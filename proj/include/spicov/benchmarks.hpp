#pragma once

#include <string>

#include "spicov/spectra.hpp"
#include "spicov/types.hpp"

namespace spicov {

struct BenchmarkEstimate {
    Matrix matrix;
    std::string method;
    bool floored = false;  // Stein only: pooled value hit the positivity floor
};

// Linear shrinkage toward the scaled identity, following Ledoit & Wolf
// (2004). With S = X'X/n, m = tr(S)/p and the norm ||A||^2 = tr(A A')/p:
//   d2 = ||S - m I||^2,  bbar2 = n^-2 sum_i ||x_i x_i' - S||^2,
//   b2 = min(bbar2, d2), and the estimate is (b2/d2) m I + (1 - b2/d2) S.
// Rows of X are observations; no centering (zero-mean model).
BenchmarkEstimate ledoit_wolf(const Matrix& X);

// Stein's isotonized eigenvalue estimator in the Lin-Perlman style:
// raw values phi_k = n l_k / alpha_k with
//   alpha_k = n - p + 1 + 2 l_k sum_{b != k} 1 / (l_k - l_b),
// then pool-adjacent-violators isotonization carried out on the pairs
// (n l_k, alpha_k): a single stack pass merges a block into its
// predecessor while either pooled alpha is nonpositive or the ratios
// violate monotonicity, so each surviving block equals the alpha-weighted
// mean of its members. Any value still nonpositive afterwards is floored
// at 1e-8 * l_p with the floored flag set.
BenchmarkEstimate stein_isotonized(const SpectralData& spec);

// Eigenvalues of the Stein estimate before reassembly; exposed for tests.
std::vector<double> stein_isotonized_values(const SpectralData& spec, bool* floored = nullptr);

} // namespace spicov
