#include "spicov/benchmarks.hpp"

#include <cmath>
#include <vector>

namespace spicov {

BenchmarkEstimate ledoit_wolf(const Matrix& X) {
    const auto n = X.rows();
    const auto p = X.cols();
    if (n < 2)
        throw regime_error("ledoit_wolf: needs at least two observations");

    const Matrix S = (X.transpose() * X) / static_cast<double>(n);
    const double m = S.trace() / static_cast<double>(p);
    Matrix centered = S;
    for (Eigen::Index i = 0; i < p; ++i)
        centered(i, i) -= m;
    const double d2 = centered.squaredNorm() / static_cast<double>(p);

    double bbar2 = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Matrix outer = X.row(i).transpose() * X.row(i);
        bbar2 += (outer - S).squaredNorm() /
                 (static_cast<double>(n) * static_cast<double>(n) * static_cast<double>(p));
    }
    const double b2 = std::min(bbar2, d2);

    BenchmarkEstimate out;
    out.method = "ledoit-wolf";
    if (d2 <= 0.0) {
        out.matrix = S;  // S already equals m I; nothing to shrink
        return out;
    }
    const double weight = b2 / d2;  // in [0, 1]
    out.matrix = weight * m * Matrix::Identity(p, p) + (1.0 - weight) * S;
    return out;
}

std::vector<double> stein_isotonized_values(const SpectralData& spec, bool* floored) {
    const int p = spec.p;
    const double n = spec.n;
    if (spec.near_degenerate)
        throw near_degenerate_error("stein_isotonized: near-degenerate spectrum");
    const Vector& l = spec.eigenvalues;

    // Raw Stein pairs (nu_k, alpha_k) with phi_k = nu_k / alpha_k.
    std::vector<double> nu(static_cast<std::size_t>(p));
    std::vector<double> alpha(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) {
        detail::Accumulator acc;
        for (int b = 0; b < p; ++b)
            if (b != k)
                acc.add(1.0 / (l(k) - l(b)));
        nu[static_cast<std::size_t>(k)] = n * l(k);
        alpha[static_cast<std::size_t>(k)] = n - p + 1 + 2.0 * l(k) * acc.value();
    }

    // Lin-Perlman pooling: first merge nonpositive-alpha entries upward, then
    // pool adjacent ratio violations. Blocks carry (sum nu, sum alpha, count);
    // each pooled block value is the alpha-weighted mean of its members.
    struct Block {
        double nu, alpha;
        int count;
    };
    std::vector<Block> blocks;
    blocks.reserve(static_cast<std::size_t>(p));
    for (int k = 0; k < p; ++k) {
        Block blk{nu[static_cast<std::size_t>(k)], alpha[static_cast<std::size_t>(k)], 1};
        blocks.push_back(blk);
        auto violates = [](const Block& prev, const Block& cur) {
            if (cur.alpha <= 0.0 || prev.alpha <= 0.0)
                return true;
            return prev.nu / prev.alpha <= cur.nu / cur.alpha;
        };
        while (blocks.size() >= 2 && violates(blocks[blocks.size() - 2], blocks.back())) {
            const Block last = blocks.back();
            blocks.pop_back();
            blocks.back().nu += last.nu;
            blocks.back().alpha += last.alpha;
            blocks.back().count += last.count;
        }
    }

    bool hit_floor = false;
    const double floor = 1e-8 * l(p - 1);
    std::vector<double> values;
    values.reserve(static_cast<std::size_t>(p));
    for (const Block& blk : blocks) {
        double phi = blk.alpha > 0.0 ? blk.nu / blk.alpha : -1.0;
        if (!(phi > 0.0)) {
            phi = floor;
            hit_floor = true;
        }
        for (int i = 0; i < blk.count; ++i)
            values.push_back(phi);
    }
    // Flooring can only break monotonicity if a whole prefix collapsed; clamp.
    for (std::size_t k = 1; k < values.size(); ++k)
        if (values[k] > values[k - 1]) {
            values[k] = values[k - 1];
            hit_floor = true;
        }
    if (floored != nullptr)
        *floored = hit_floor;
    return values;
}

BenchmarkEstimate stein_isotonized(const SpectralData& spec) {
    BenchmarkEstimate out;
    out.method = "stein";
    const std::vector<double> values = stein_isotonized_values(spec, &out.floored);
    Vector phi(spec.p);
    for (int k = 0; k < spec.p; ++k)
        phi(k) = values[static_cast<std::size_t>(k)];
    out.matrix = spec.eigenvectors * phi.asDiagonal() * spec.eigenvectors.transpose();
    return out;
}

} // namespace spicov
