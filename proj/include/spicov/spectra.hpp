#pragma once

#include "spicov/types.hpp"

namespace spicov {

// Relative eigenvalue-gap tolerance below which a spectrum is flagged
// near-degenerate. The URE formulas divide by l_k - l_b; Wishart spectra
// are a.s. simple, but user-supplied matrices may not be, and failing
// loudly beats returning cancellation noise.
inline constexpr double kGenericityTol = 1e-10;

// Decreasing spectral decomposition S = O diag(l) O' with l_1 >= ... >= l_p.
struct SpectralData {
    Vector eigenvalues;   // descending
    Matrix eigenvectors;  // columns matched to eigenvalues
    int n = 0;
    int p = 0;
    bool near_degenerate = false;  // warning: some gap < kGenericityTol * l_1
    double min_gap = 0.0;
};

// Full-accuracy self-adjoint decomposition with a deterministic sign
// convention (largest-magnitude entry of each eigenvector positive).
// Throws shape_error for non-symmetric input, regime_error for n < p,
// degenerate_spectrum_error if any eigenvalue is <= 0.
SpectralData decompose(const Matrix& S, int n);

// Arithmetic mean of l_{r+1}, ..., l_p (0-based: eigenvalues[r..p-1]).
double trailing_mean(const SpectralData& spec, int r);

} // namespace spicov
