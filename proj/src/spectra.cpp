#include "spicov/spectra.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>
#include <limits>

namespace spicov {

SpectralData decompose(const Matrix& S, int n) {
    const auto p = S.rows();
    if (p == 0 || S.cols() != p)
        throw shape_error("decompose: matrix must be square and nonempty");
    if (n < p)
        throw regime_error("decompose: requires n >= p");

    const double scale = S.cwiseAbs().maxCoeff();
    const double asym = (S - S.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(scale, 1.0))
        throw shape_error("decompose: input is not symmetric");

    Eigen::SelfAdjointEigenSolver<Matrix> solver(S);
    if (solver.info() != Eigen::Success)
        throw degenerate_spectrum_error("decompose: eigensolver failed to converge");

    SpectralData out;
    out.n = n;
    out.p = static_cast<int>(p);
    out.eigenvalues = solver.eigenvalues().reverse();
    out.eigenvectors = solver.eigenvectors().rowwise().reverse();

    if (out.eigenvalues(p - 1) <= 0.0)
        throw degenerate_spectrum_error("decompose: spectrum is not positive");

    // Deterministic sign convention: largest-magnitude entry positive.
    for (int k = 0; k < p; ++k) {
        int arg = 0;
        out.eigenvectors.col(k).cwiseAbs().maxCoeff(&arg);
        if (out.eigenvectors(arg, k) < 0.0)
            out.eigenvectors.col(k) = -out.eigenvectors.col(k);
    }

    out.min_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < p; ++k)
        out.min_gap = std::min(out.min_gap, out.eigenvalues(k) - out.eigenvalues(k + 1));
    if (p == 1)
        out.min_gap = std::numeric_limits<double>::infinity();
    out.near_degenerate = out.min_gap < kGenericityTol * out.eigenvalues(0);
    return out;
}

double trailing_mean(const SpectralData& spec, int r) {
    if (r < 0 || r >= spec.p)
        throw rank_error("trailing_mean: rank must satisfy 0 <= r < p");
    double sum = 0.0;
    for (int c = r; c < spec.p; ++c)
        sum += spec.eigenvalues(c);
    return sum / static_cast<double>(spec.p - r);
}

} // namespace spicov
