#pragma once

#include <limits>
#include <random>
#include <vector>

#include "spicov/model.hpp"
#include "spicov/spectra.hpp"

namespace test_util {

// SpectralData from hand-picked eigenvalues (basis = identity) so tests can
// exercise formulas on exact inputs without a decomposition.
inline spicov::SpectralData make_spectral(const std::vector<double>& l, int n) {
    spicov::SpectralData spec;
    const int p = static_cast<int>(l.size());
    spec.p = p;
    spec.n = n;
    spec.eigenvalues.resize(p);
    for (int i = 0; i < p; ++i)
        spec.eigenvalues(i) = l[static_cast<std::size_t>(i)];
    spec.eigenvectors = spicov::Matrix::Identity(p, p);
    spec.min_gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i + 1 < p; ++i)
        spec.min_gap = std::min(spec.min_gap, spec.eigenvalues(i) - spec.eigenvalues(i + 1));
    spec.near_degenerate =
        p > 1 && spec.min_gap < spicov::kGenericityTol * spec.eigenvalues(0);
    return spec;
}

// Strictly decreasing positive eigenvalues drawn from a seeded generator.
inline std::vector<double> random_decreasing(int p, std::uint64_t seed,
                                             double lo = 0.3, double hi = 10.0) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> unif(lo, hi);
    std::vector<double> l(static_cast<std::size_t>(p));
    for (double& v : l)
        v = unif(eng);
    std::sort(l.begin(), l.end(), std::greater<>());
    // enforce distinctness well above the genericity tolerance
    for (std::size_t i = 1; i < l.size(); ++i)
        if (l[i - 1] - l[i] < 1e-3)
            l[i] = l[i - 1] - 1e-3 * (1.0 + static_cast<double>(i));
    return l;
}

// Spectrum of an actual Wishart draw from the given model.
inline spicov::SpectralData wishart_spectrum(const spicov::CovarianceModel& model,
                                             int n, std::uint64_t seed) {
    const int p = std::visit([](const auto& m) { return m.p; }, model);
    const spicov::Matrix S = spicov::sample_covariance(model, {n, p, seed});
    return spicov::decompose(S, n);
}

} // namespace test_util
