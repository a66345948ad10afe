#include "spicov/spiked.hpp"

#include <cmath>

namespace spicov {

std::vector<double> estimate_gammas(const SpectralData& spec, int r) {
    const int p = spec.p;
    if (r < 0 || r >= p)
        throw rank_error("estimate_gammas: requires 0 <= r < p");
    if (r == 0)
        return {};
    const Vector& l = spec.eigenvalues;
    double trailing_sum = 0.0;
    for (int c = r; c < p; ++c)
        trailing_sum += l(c);
    std::vector<double> gammas(static_cast<std::size_t>(r));
    for (int k = 0; k < r; ++k) {
        detail::Accumulator denom;
        for (int c = r; c < p; ++c) {
            const double gap = l(k) - l(c);
            if (!(gap > kGenericityTol * l(0)))
                throw near_degenerate_error("estimate_gammas: l_k too close to a trailing eigenvalue");
            denom.add(l(c) / gap);
        }
        gammas[static_cast<std::size_t>(k)] = trailing_sum / denom.value();
    }
    return gammas;
}

double threshold_statistic(const SpectralData& spec, int r) {
    const int p = spec.p;
    if (r < 0 || r > p)
        throw rank_error("threshold_statistic: requires 0 <= r <= p");
    if (r == p)
        return 0.0;  // the indicator 1{r < p} kills the statistic
    const double edge = std::pow(1.0 + std::sqrt(static_cast<double>(p) / spec.n), 2);
    return edge * trailing_mean(spec, r) / spec.eigenvalues(r);
}

EigenvalueEstimator fixed_rank_estimator(int r, int n) {
    return [r, n](const Vector& l) {
        SpectralData spec;
        spec.eigenvalues = l;
        spec.p = static_cast<int>(l.size());
        spec.n = n;
        spec.min_gap = std::numeric_limits<double>::infinity();
        EigenvalueFit fit;
        fit.gammas = estimate_gammas(spec, r);
        fit.sigma2 = minimize_noise(spec, fit.gammas, r).sigma2_tilde;
        return fit;
    };
}

namespace {

// Workspace for the fixed-rank profile. A finite-difference column moves a
// single eigenvalue, so the O(p^2) reciprocal-gap sums of the base spectrum
// are corrected in O(p) instead of recomputed; everything that involves the
// spike estimates is O(rank * p) and rebuilt per evaluation.
class FixedRankProfiler {
  public:
    FixedRankProfiler(const SpectralData& spec, int r)
        : l_(spec.eigenvalues), n_(spec.n), p_(spec.p), r_(r) {
        base_r1_ = Vector::Zero(p_);
        for (int k = 0; k < p_; ++k) {
            detail::Accumulator acc;
            for (int b = 0; b < p_; ++b)
                if (b != k)
                    acc.add(1.0 / (l_(k) - l_(b)));
            base_r1_(k) = acc.value();
        }
        base_inv_ = 0.0;
        base_inv2_ = 0.0;
        for (int c = 0; c < p_; ++c) {
            base_inv_ += 1.0 / l_(c);
            base_inv2_ += 1.0 / (l_(c) * l_(c));
        }
    }

    // gamma_tilde and sigma2_tilde at the base spectrum with coordinate
    // `moved` shifted by `delta` (moved = -1 evaluates the base itself).
    EigenvalueFit evaluate(int moved, double delta) const {
        const auto lv = [&](int i) { return i == moved ? l_(i) + delta : l_(i); };

        EigenvalueFit fit;
        fit.gammas.resize(static_cast<std::size_t>(r_));
        double a1 = 0.0;
        for (int c = r_; c < p_; ++c)
            a1 += lv(c);
        for (int k = 0; k < r_; ++k) {
            double s = 0.0;
            for (int c = r_; c < p_; ++c)
                s += lv(c) / (lv(k) - lv(c));
            fit.gammas[static_cast<std::size_t>(k)] = a1 / s;
        }

        double inv = base_inv_;
        double inv2 = base_inv2_;
        if (moved >= 0) {
            inv += 1.0 / lv(moved) - 1.0 / l_(moved);
            inv2 += 1.0 / (lv(moved) * lv(moved)) - 1.0 / (l_(moved) * l_(moved));
        }

        const double dn = n_;
        const double dp = p_;
        const double c2 = (dn - dp - 1.0) * (dn - dp - 2.0) / (dn * dn * dp);
        const double c1 = (dn - dp - 1.0) / (dn * dn * dp);
        const double c0 = 1.0 / (dn * dn * dp);

        double a = (dn - dp - 1.0) / (dn * dp) * inv;
        if (r_ > 0) {
            double spike_inv2 = 0.0;
            double spike_inv = 0.0;
            double cross = 0.0;
            for (int k = 0; k < r_; ++k) {
                const double g = fit.gammas[static_cast<std::size_t>(k)];
                spike_inv2 += g / (lv(k) * lv(k));
                spike_inv += g / lv(k);
                for (int b = 0; b < r_; ++b)
                    if (b != k)
                        cross += (g - fit.gammas[static_cast<std::size_t>(b)]) /
                                 (lv(k) - lv(b)) / lv(k);
                for (int c = r_; c < p_; ++c)
                    cross += (1.0 / lv(k) + 1.0 / lv(c)) * g / (lv(k) - lv(c));
            }
            a -= c2 * spike_inv2;
            a += c1 * inv * spike_inv;
            a -= 2.0 * c1 * cross;

            // triple term: sum_k R1_k S1_k - Q1_k over the thin xbar array
            double triple = 0.0;
            std::vector<double> s1(static_cast<std::size_t>(p_), 0.0);
            std::vector<double> q1(static_cast<std::size_t>(p_), 0.0);
            for (int k = 0; k < r_; ++k) {
                const double g = fit.gammas[static_cast<std::size_t>(k)];
                double s1k = 0.0;
                double q1k = 0.0;
                for (int b = 0; b < r_; ++b) {
                    if (b == k)
                        continue;
                    const double rr = 1.0 / (lv(k) - lv(b));
                    const double x = (g - fit.gammas[static_cast<std::size_t>(b)]) * rr;
                    s1k += x;
                    q1k += x * rr;
                }
                for (int c = r_; c < p_; ++c) {
                    const double rr = 1.0 / (lv(k) - lv(c));
                    const double x = g * rr;
                    s1k += x;
                    q1k += x * rr;
                    s1[static_cast<std::size_t>(c)] += x;       // xbar_{c,k} = x
                    q1[static_cast<std::size_t>(c)] -= x * rr;  // times 1/(l_c - l_k)
                }
                s1[static_cast<std::size_t>(k)] = s1k;
                q1[static_cast<std::size_t>(k)] = q1k;
            }
            for (int k = 0; k < p_; ++k) {
                double r1 = base_r1_(k);
                if (moved >= 0) {
                    if (k == moved) {
                        r1 = 0.0;
                        for (int b = 0; b < p_; ++b)
                            if (b != k)
                                r1 += 1.0 / (lv(k) - l_(b));
                    } else {
                        r1 += 1.0 / (l_(k) - lv(moved)) - 1.0 / (l_(k) - l_(moved));
                    }
                }
                triple += r1 * s1[static_cast<std::size_t>(k)] - q1[static_cast<std::size_t>(k)];
            }
            a -= 2.0 * c0 * triple;
        }

        const double b_val = c2 * inv2 - c1 * inv * inv;
        fit.sigma2 = a / b_val;
        return fit;
    }

  private:
    const Vector& l_;
    int n_, p_, r_;
    Vector base_r1_;
    double base_inv_ = 0.0, base_inv2_ = 0.0;
};

} // namespace

EstimatorProfile profile_fixed_rank(const SpectralData& spec, int r, double step) {
    const int p = spec.p;
    if (r < 0 || r >= p)
        throw rank_error("profile_fixed_rank: requires 0 <= r < p");
    if (spec.near_degenerate)
        throw near_degenerate_error("profile: spectrum too close to degeneracy for differencing");
    const Vector& l = spec.eigenvalues;
    const FixedRankProfiler profiler(spec, r);

    EstimatorProfile out;
    const EigenvalueFit center = profiler.evaluate(-1, 0.0);
    out.psi = fit_to_psi(center, p);
    out.jacobian = Matrix::Zero(p, p);
    out.second_diag = Vector::Zero(p);
    out.rho_hat = r;

    for (int b = 0; b < p; ++b) {
        double gap = std::numeric_limits<double>::infinity();
        if (b > 0)
            gap = std::min(gap, l(b - 1) - l(b));
        if (b + 1 < p)
            gap = std::min(gap, l(b) - l(b + 1));
        double h = step * std::max(l(b), l(p - 1));
        if (std::isfinite(gap))
            h = std::min(h, 0.4 * gap);
        if (!(h > 0.0))
            throw near_degenerate_error("profile: no valid step preserves eigenvalue ordering");
        const Vector psi_up = fit_to_psi(profiler.evaluate(b, h), p);
        const Vector psi_down = fit_to_psi(profiler.evaluate(b, -h), p);
        out.jacobian.col(b) = (psi_up - psi_down) / (2.0 * h);
        out.second_diag(b) = (psi_up(b) - 2.0 * out.psi(b) + psi_down(b)) / (h * h);
    }
    return out;
}

std::pair<int, RankDiagnostics> select_rank(const SpectralData& spec,
                                            const SelectOptions& options) {
    const int p = spec.p;
    const double ure_budget = (p + 1.0) / spec.n;
    RankDiagnostics diags;

    for (int r = 0; r < p; ++r) {
        RankCandidate cand;
        cand.r = r;
        cand.threshold_stat = threshold_statistic(spec, r);
        cand.threshold_ok = cand.threshold_stat >= 1.0;

        bool candidate_failed = false;
        std::vector<double> gammas;
        try {
            gammas = estimate_gammas(spec, r);
            const NoiseSolution noise = minimize_noise(spec, gammas, r);
            cand.sigma2 = noise.sigma2_tilde;
            cand.sigma2_ok = std::isfinite(noise.sigma2_tilde) && !noise.nonpositive;
        } catch (const error&) {
            candidate_failed = true;
        }

        if (!candidate_failed && cand.threshold_ok && cand.sigma2_ok) {
            try {
                const EstimatorProfile profile = profile_fixed_rank(spec, r, options.fd_step);
                const UreValue ure = evaluate_ure(spec, profile);
                cand.ure_evaluated = true;
                cand.f = ure.f;
                cand.g = ure.g;
                cand.ure_total = ure.total;
                cand.ure_ok = std::abs(ure.total) <= ure_budget;
            } catch (const error&) {
                candidate_failed = true;
            }
        }

        cand.admissible = !candidate_failed && cand.threshold_ok && cand.sigma2_ok && cand.ure_ok;
        diags.candidates.push_back(cand);
        if (cand.admissible) {
            diags.selected = r;
            return {r, diags};
        }
    }

    // r = p is admissible by convention: the selection set is never empty and
    // the estimate falls back to S. At the boundary profile (gamma = l,
    // sigma2 = 0) the URE equals (p+1)/n identically.
    RankCandidate cand;
    cand.r = p;
    cand.threshold_stat = 0.0;
    cand.threshold_ok = false;
    cand.sigma2 = 0.0;
    cand.sigma2_ok = true;
    cand.ure_evaluated = true;
    cand.f = ure_budget;
    cand.g = 0.0;
    cand.ure_total = ure_budget;
    cand.ure_ok = true;
    cand.admissible = true;
    diags.candidates.push_back(cand);
    diags.selected = p;
    return {p, diags};
}

SpikedEstimate assemble_at_rank(const SpectralData& spec, int r) {
    SpikedEstimate est;
    est.basis = spec.eigenvectors;
    est.rho_hat = r;
    est.n = spec.n;
    est.p = spec.p;
    if (r == spec.p) {
        est.gammas_hat.assign(spec.eigenvalues.data(), spec.eigenvalues.data() + spec.p);
        est.sigma2_hat = 0.0;
        return est;
    }
    est.gammas_hat = estimate_gammas(spec, r);
    est.sigma2_hat = minimize_noise(spec, est.gammas_hat, r).sigma2_tilde;
    return est;
}

SpikedEstimate assemble(const SpectralData& spec, const SelectOptions& options) {
    const auto [rank, diags] = select_rank(spec, options);
    (void)diags;
    return assemble_at_rank(spec, rank);
}

Matrix to_matrix(const SpikedEstimate& estimate) {
    const int p = estimate.p;
    Vector psi = Vector::Constant(p, estimate.sigma2_hat);
    for (std::size_t k = 0; k < estimate.gammas_hat.size(); ++k)
        psi(static_cast<Eigen::Index>(k)) += estimate.gammas_hat[k];
    return estimate.basis * psi.asDiagonal() * estimate.basis.transpose();
}

Matrix to_matrix(const SpikedEstimate& estimate, const Matrix& S) {
    if (estimate.rho_hat == estimate.p)
        return S;
    return to_matrix(estimate);
}

double donoho_gavish_gamma(double l_k, double c) {
    if (!(c > 0.0) || !(c < 1.0))
        throw domain_error("donoho_gavish_gamma: aspect ratio must lie in (0, 1)");
    const double edge = std::pow(1.0 + std::sqrt(c), 2);
    if (!(l_k > edge))
        throw below_bulk_error("donoho_gavish_gamma: eigenvalue is below the bulk edge");
    const double d = l_k - 1.0;
    return (d + c * l_k / d) * (1.0 - c / (d * d)) / (1.0 + c / d);
}

} // namespace spicov
