#include "spicov/ure.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

namespace spicov {

namespace {

void check_profile(const SpectralData& spec, const EstimatorProfile& profile) {
    if (profile.psi.size() != spec.p)
        throw shape_error("URE: psi length must equal p");
    if (profile.rho_hat < 0 || profile.rho_hat > spec.p)
        throw rank_error("URE: rho_hat out of range");
}

void check_regime(const SpectralData& spec) {
    if (spec.n < spec.p + 1)
        throw regime_error("URE: requires n >= p + 1");
    if (spec.near_degenerate)
        throw near_degenerate_error("URE: spectrum has near-degenerate gaps");
}

struct PairSums {
    // Per-index sums over b != k of the divided differences
    //   x_{k,b} = (psi_k - psi_b)/(l_k - l_b) and r_{k,b} = 1/(l_k - l_b).
    Vector S1, S2, R1, Q1, P, W;
};

PairSums pair_sums(const Vector& l, const Vector& psi) {
    const int p = static_cast<int>(l.size());
    PairSums out;
    out.S1 = Vector::Zero(p);
    out.S2 = Vector::Zero(p);
    out.R1 = Vector::Zero(p);
    out.Q1 = Vector::Zero(p);
    out.P = Vector::Zero(p);
    out.W = Vector::Zero(p);
    std::vector<detail::Accumulator> s1(p), s2(p), r1(p), q1(p), pa(p), w(p);
    for (int k = 0; k < p; ++k) {
        for (int b = 0; b < p; ++b) {
            if (b == k)
                continue;
            const double r = 1.0 / (l(k) - l(b));  // r_{k,b}
            const double x = (psi(k) - psi(b)) * r;  // x_{k,b}, symmetric in (k,b)
            s1[k].add(x);
            s2[k].add(x * x);
            r1[k].add(r);
            q1[k].add(x * r);
            pa[b].add(psi(k) * r);      // P_b = sum_{k != b} psi_k r_{k,b}
            w[b].add(psi(k) * x * r);   // W_b = sum_{k != b} psi_k x_{b,k} r_{k,b}
        }
    }
    for (int k = 0; k < p; ++k) {
        out.S1(k) = s1[k].value();
        out.S2(k) = s2[k].value();
        out.R1(k) = r1[k].value();
        out.Q1(k) = q1[k].value();
        out.P(k) = pa[k].value();
        out.W(k) = w[k].value();
    }
    return out;
}

} // namespace

double evaluate_F(const SpectralData& spec, const EstimatorProfile& profile) {
    check_regime(spec);
    check_profile(spec, profile);
    const int p = spec.p;
    const double n = spec.n;
    const double dp = p;
    const double c2 = (n - dp - 1.0) * (n - dp - 2.0) / (n * n * dp);
    const double c1 = (n - dp - 1.0) / (n * n * dp);
    const double c0 = 1.0 / (n * n * dp);

    const Vector& l = spec.eigenvalues;
    const Vector& psi = profile.psi;
    const PairSums s = pair_sums(l, psi);

    detail::Accumulator u_sum, u2_sum, us1_sum, s1_sum, triple_a, triple_b;
    for (int k = 0; k < p; ++k) {
        const double u = psi(k) / l(k);
        u_sum.add(u);
        u2_sum.add(u * u);
        us1_sum.add(u * s.S1(k));
        s1_sum.add(s.S1(k));
        // sum_{k != b != e} x_{k,b} x_{k,e} regrouped per leading index.
        triple_a.add(s.S1(k) * s.S1(k) - s.S2(k));
        // sum_{k != b != e} psi_k/(l_k-l_b) [x_{k,e} - x_{b,e}] regrouped as
        // sum_k psi_k (R1_k S1_k - Q1_k) - sum_b (P_b S1_b - W_b).
        triple_b.add(psi(k) * (s.R1(k) * s.S1(k) - s.Q1(k)));
        triple_b.add(-(s.P(k) * s.S1(k) - s.W(k)));
    }

    detail::Accumulator f;
    f.add(1.0);
    f.add(c2 * u2_sum.value());
    f.add(-c1 * u_sum.value() * u_sum.value());
    f.add(4.0 * c1 * us1_sum.value());
    f.add(2.0 * c0 * triple_a.value());
    f.add(2.0 * c0 * triple_b.value());
    f.add(-2.0 * (n - dp - 1.0) / (n * dp) * u_sum.value());
    f.add(-2.0 / (n * dp) * s1_sum.value());
    return f.value();
}

double evaluate_G(const SpectralData& spec, const EstimatorProfile& profile) {
    check_regime(spec);
    check_profile(spec, profile);
    if (profile.jacobian.rows() != spec.p || profile.jacobian.cols() != spec.p)
        throw shape_error("URE: jacobian must be p x p");
    if (profile.second_diag.size() != spec.p)
        throw shape_error("URE: second_diag length must equal p");

    const int p = spec.p;
    const double n = spec.n;
    const double dp = p;
    const double c0 = 1.0 / (n * n * dp);

    const Vector& l = spec.eigenvalues;
    const Vector& psi = profile.psi;
    const Matrix& jac = profile.jacobian;

    detail::Accumulator diag_sq, curvature, mixed, d_sum, cross;
    for (int k = 0; k < p; ++k) {
        const double d = jac(k, k);
        diag_sq.add(d * d);
        curvature.add(psi(k) * profile.second_diag(k));
        mixed.add(psi(k) / l(k) * d);
        d_sum.add(d);
        for (int b = 0; b < p; ++b) {
            if (b == k)
                continue;
            const double r = 1.0 / (l(k) - l(b));
            const double x = (psi(k) - psi(b)) * r;
            cross.add(8.0 * d * x);
            cross.add(4.0 * psi(k) * (d - jac(b, b)) * r);
            cross.add(4.0 * psi(k) * (d - jac(b, k)) * r);
        }
    }

    detail::Accumulator g;
    g.add(8.0 * c0 * diag_sq.value());
    g.add(8.0 * c0 * curvature.value());
    g.add(8.0 * c0 * (n - dp - 1.0) * mixed.value());
    g.add(c0 * cross.value());
    g.add(-4.0 / (n * dp) * d_sum.value());
    return g.value();
}

UreValue evaluate_ure(const SpectralData& spec, const EstimatorProfile& profile) {
    UreValue out;
    out.f = evaluate_F(spec, profile);
    out.g = evaluate_G(spec, profile);
    out.total = out.f + out.g;
    return out;
}

Vector fit_to_psi(const EigenvalueFit& fit, int p) {
    const int rank = static_cast<int>(fit.gammas.size());
    if (rank > p)
        throw rank_error("fit_to_psi: rank exceeds dimension");
    Vector psi = Vector::Constant(p, fit.sigma2);
    for (int k = 0; k < rank; ++k)
        psi(k) += fit.gammas[static_cast<std::size_t>(k)];
    return psi;
}

EstimatorProfile profile_finite_difference(const EigenvalueEstimator& estimator,
                                           const SpectralData& spec,
                                           double rel_step) {
    const int p = spec.p;
    const Vector& l = spec.eigenvalues;
    if (spec.near_degenerate)
        throw near_degenerate_error("profile: spectrum too close to degeneracy for differencing");

    const EigenvalueFit center = estimator(l);
    const int rank = static_cast<int>(center.gammas.size());
    const Vector psi0 = fit_to_psi(center, p);

    EstimatorProfile out;
    out.psi = psi0;
    out.jacobian = Matrix::Zero(p, p);
    out.second_diag = Vector::Zero(p);
    out.rho_hat = rank;

    Vector perturbed = l;
    for (int b = 0; b < p; ++b) {
        double gap = std::numeric_limits<double>::infinity();
        if (b > 0)
            gap = std::min(gap, l(b - 1) - l(b));
        if (b + 1 < p)
            gap = std::min(gap, l(b) - l(b + 1));
        double h = rel_step * std::max(l(b), l(p - 1));
        if (std::isfinite(gap))
            h = std::min(h, 0.4 * gap);
        if (!(h > 0.0))
            throw near_degenerate_error("profile: no valid step preserves eigenvalue ordering");

        perturbed(b) = l(b) + h;
        const EigenvalueFit up = estimator(perturbed);
        perturbed(b) = l(b) - h;
        const EigenvalueFit down = estimator(perturbed);
        perturbed(b) = l(b);
        if (static_cast<int>(up.gammas.size()) != rank ||
            static_cast<int>(down.gammas.size()) != rank)
            throw rank_error("profile: estimator rank changed under perturbation");

        const Vector psi_up = fit_to_psi(up, p);
        const Vector psi_down = fit_to_psi(down, p);
        out.jacobian.col(b) = (psi_up - psi_down) / (2.0 * h);
        out.second_diag(b) = (psi_up(b) - 2.0 * psi0(b) + psi_down(b)) / (h * h);
    }
    return out;
}

double haff_loss(const Matrix& estimate, const Matrix& truth) {
    const auto p = truth.rows();
    if (estimate.rows() != p || estimate.cols() != truth.cols() || truth.cols() != p)
        throw shape_error("haff_loss: estimate and truth must be p x p");
    Eigen::LLT<Matrix> llt(truth);
    if (llt.info() != Eigen::Success)
        throw ill_posed_error("haff_loss: truth is not positive-definite");
    const auto& L = llt.matrixL();
    // T = L^-1 est L^-T; loss = ||T - I||_F^2 / p == tr[(est truth^-1 - I)^2]/p.
    Matrix T = L.solve(estimate);
    T = L.solve(T.transpose()).transpose();
    for (Eigen::Index i = 0; i < p; ++i)
        T(i, i) -= 1.0;
    return T.squaredNorm() / static_cast<double>(p);
}

double frobenius_loss(const Matrix& estimate, const Matrix& truth) {
    if (estimate.rows() != truth.rows() || estimate.cols() != truth.cols())
        throw shape_error("frobenius_loss: shape mismatch");
    return (estimate - truth).squaredNorm() / static_cast<double>(truth.rows());
}

} // namespace spicov
