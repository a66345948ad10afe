#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "spicov/model.hpp"
#include "spicov/spectra.hpp"
#include "test_util.hpp"

using namespace spicov;

TEST_CASE("identity input flags near-degeneracy but stays valid") {
    const SpectralData spec = decompose(Matrix::Identity(3, 3), 10);
    CHECK(spec.near_degenerate);
    for (int i = 0; i < 3; ++i)
        CHECK(spec.eigenvalues(i) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK((spec.eigenvectors * spec.eigenvectors.transpose() - Matrix::Identity(3, 3))
              .cwiseAbs()
              .maxCoeff() <= 1e-12);
}

TEST_CASE("diagonal input reproduces its eigenpairs") {
    Matrix S = Matrix::Zero(2, 2);
    S(0, 0) = 4.0;
    S(1, 1) = 1.0;
    const SpectralData spec = decompose(S, 10);
    CHECK(spec.eigenvalues(0) == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(spec.eigenvalues(1) == doctest::Approx(1.0).epsilon(1e-15));
    // Sign convention pins the basis to the identity exactly.
    CHECK((spec.eigenvectors - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("random wishart reconstruction is tight") {
    const CovarianceModel model = ARModel{0.5, 12};
    const Matrix S = sample_covariance(model, {40, 12, 5});
    const SpectralData spec = decompose(S, 40);
    const Matrix rebuilt = spec.eigenvectors * spec.eigenvalues.asDiagonal() *
                           spec.eigenvectors.transpose();
    const double scale = S.cwiseAbs().maxCoeff();
    CHECK((rebuilt - S).cwiseAbs().maxCoeff() <= 1e-8 * scale);
    CHECK((spec.eigenvectors.transpose() * spec.eigenvectors - Matrix::Identity(12, 12))
              .cwiseAbs()
              .maxCoeff() <= 1e-8);
}

TEST_CASE("decompose of a materialized spiked model returns its eigenvalues") {
    const SpikedModel model{{5.0, 4.0, 3.0, 2.0}, 1.0, 8};
    const SpectralData spec = decompose(materialize(model), 20);
    const double expected[8] = {6.0, 5.0, 4.0, 3.0, 1.0, 1.0, 1.0, 1.0};
    for (int i = 0; i < 8; ++i)
        CHECK(spec.eigenvalues(i) == doctest::Approx(expected[i]).epsilon(1e-12));
}

TEST_CASE("wishart spectra are almost surely simple") {
    const CovarianceModel model = SpikedModel{{2.0}, 1.0, 10};
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const SpectralData spec = test_util::wishart_spectrum(model, 40, seed);
        CHECK_FALSE(spec.near_degenerate);
        min_gap = std::min(min_gap, spec.min_gap);
    }
    CHECK(min_gap > 0.0);
}

TEST_CASE("invalid inputs are rejected") {
    Matrix asym(2, 2);
    asym << 1.0, 0.5, 0.2, 1.0;
    CHECK_THROWS_AS(decompose(asym, 10), shape_error);
    CHECK_THROWS_AS(decompose(Matrix::Identity(4, 4), 3), regime_error);
    Matrix indefinite = Matrix::Identity(3, 3);
    indefinite(2, 2) = -0.5;
    CHECK_THROWS_AS(decompose(indefinite, 10), degenerate_spectrum_error);
}

TEST_CASE("trailing mean") {
    const SpectralData spec = test_util::make_spectral({4.0, 2.0, 1.0}, 10);
    CHECK(trailing_mean(spec, 1) == doctest::Approx(1.5).epsilon(1e-15));
    CHECK(trailing_mean(spec, 0) == doctest::Approx(7.0 / 3.0).epsilon(1e-15));
    CHECK(trailing_mean(spec, 2) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK_THROWS_AS(trailing_mean(spec, 3), rank_error);
    CHECK_THROWS_AS(trailing_mean(spec, -1), rank_error);
}
