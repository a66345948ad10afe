#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spicov/benchmarks.hpp"
#include "spicov/model.hpp"
#include "spicov/ure.hpp"
#include "test_util.hpp"

using namespace spicov;

namespace {

double shrinkage_weight(const Matrix& X) {
    const Matrix S = (X.transpose() * X) / static_cast<double>(X.rows());
    const double m = S.trace() / static_cast<double>(S.rows());
    const Matrix est = ledoit_wolf(X).matrix;
    const Matrix toward = m * Matrix::Identity(S.rows(), S.cols());
    const double denom = (toward - S).norm();
    if (denom == 0.0)
        return 1.0;
    return (est - S).norm() / denom;
}

Matrix random_orthogonal(int p, std::uint64_t seed) {
    std::mt19937_64 eng(seed);
    std::normal_distribution<double> normal;
    Matrix raw = Matrix::NullaryExpr(p, p, [&](Eigen::Index, Eigen::Index) { return normal(eng); });
    return Eigen::HouseholderQR<Matrix>(raw).householderQ();
}

} // namespace

TEST_CASE("zero dispersion forces the ledoit-wolf estimate onto S") {
    Matrix X(4, 2);
    X << 1, 0, -1, 0, 0, 1, 0, -1;
    const Matrix S = (X.transpose() * X) / 4.0;
    const BenchmarkEstimate est = ledoit_wolf(X);
    CHECK((est.matrix - S).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(est.method == "ledoit-wolf");
}

TEST_CASE("noisy high-dimensional samples are strongly shrunk") {
    // p > n data, built directly (the model sampler enforces n >= p).
    GaussianStream stream(12);
    Matrix X(50, 100);
    for (Eigen::Index i = 0; i < X.rows(); ++i)
        for (Eigen::Index j = 0; j < X.cols(); ++j)
            X(i, j) = stream.normal();
    CHECK(shrinkage_weight(X) > 0.5);
}

TEST_CASE("shrinkage vanishes as n grows") {
    const CovarianceModel model = ARModel{0.4, 5};
    const double w100 = shrinkage_weight(sample_data(model, {100, 5, 3}));
    const double w1000 = shrinkage_weight(sample_data(model, {1000, 5, 3}));
    const double w10000 = shrinkage_weight(sample_data(model, {10000, 5, 3}));
    CHECK(w100 > w1000);
    CHECK(w1000 > w10000);
    CHECK(w10000 < 0.05);
}

TEST_CASE("ledoit-wolf output is positive-definite and rotation-stable") {
    const CovarianceModel model = SpikedModel{{4.0}, 1.0, 20};
    const Matrix X = sample_data(model, {30, 20, 8});
    const BenchmarkEstimate est = ledoit_wolf(X);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(est.matrix);
    CHECK(eig.eigenvalues().minCoeff() > 0.0);

    const Matrix Q = random_orthogonal(20, 4);
    const BenchmarkEstimate rotated = ledoit_wolf(X * Q);
    Eigen::SelfAdjointEigenSolver<Matrix> eig_rot(rotated.matrix);
    Vector a = eig.eigenvalues();
    Vector b = eig_rot.eigenvalues();
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-9 * a.maxCoeff());
}

TEST_CASE("ledoit-wolf requires two observations") {
    CHECK_THROWS_AS(ledoit_wolf(Matrix::Ones(1, 3)), regime_error);
}

TEST_CASE("stein at p = 1 returns the eigenvalue") {
    const auto spec = test_util::make_spectral({3.4}, 25);
    const std::vector<double> values = stein_isotonized_values(spec);
    REQUIRE(values.size() == 1);
    CHECK(values[0] == doctest::Approx(3.4).epsilon(1e-14));
}

TEST_CASE("well separated spectra need no pooling") {
    const auto spec = test_util::make_spectral({10.0, 5.0, 1.0}, 50);
    const Vector& l = spec.eigenvalues;
    const std::vector<double> values = stein_isotonized_values(spec);
    for (int k = 0; k < 3; ++k) {
        double alpha = 50 - 3 + 1;
        for (int b = 0; b < 3; ++b)
            if (b != k)
                alpha += 2.0 * l(k) / (l(k) - l(b));
        CHECK(values[static_cast<std::size_t>(k)] ==
              doctest::Approx(50.0 * l(k) / alpha).epsilon(1e-12));
    }
}

TEST_CASE("isotonized values solve the weighted monotone regression") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int p = 6 + static_cast<int>(seed % 10);
        const int n = p + 2 + static_cast<int>(seed % 15);
        const auto spec = test_util::wishart_spectrum(SpikedModel{{3.0}, 1.0, p}, n, seed);
        bool floored = false;
        const std::vector<double> values = stein_isotonized_values(spec, &floored);
        REQUIRE(static_cast<int>(values.size()) == p);
        // ordered and positive
        for (int k = 0; k < p; ++k) {
            CHECK(values[static_cast<std::size_t>(k)] > 0.0);
            if (k > 0)
                CHECK(values[static_cast<std::size_t>(k)] <=
                      values[static_cast<std::size_t>(k - 1)] * (1.0 + 1e-12));
        }
        if (floored)
            continue;
        // pooled blocks equal the alpha-weighted means of their members
        const Vector& l = spec.eigenvalues;
        std::vector<double> alpha(static_cast<std::size_t>(p));
        for (int k = 0; k < p; ++k) {
            double acc = n - p + 1;
            for (int b = 0; b < p; ++b)
                if (b != k)
                    acc += 2.0 * l(k) / (l(k) - l(b));
            alpha[static_cast<std::size_t>(k)] = acc;
        }
        int start = 0;
        while (start < p) {
            int stop = start;
            while (stop + 1 < p &&
                   values[static_cast<std::size_t>(stop + 1)] ==
                       values[static_cast<std::size_t>(start)])
                ++stop;
            double nu_sum = 0.0;
            double alpha_sum = 0.0;
            for (int k = start; k <= stop; ++k) {
                nu_sum += static_cast<double>(n) * l(k);
                alpha_sum += alpha[static_cast<std::size_t>(k)];
            }
            CHECK(values[static_cast<std::size_t>(start)] ==
                  doctest::Approx(nu_sum / alpha_sum).epsilon(1e-10));
            start = stop + 1;
        }
    }
}

TEST_CASE("stein beats the sample covariance on spiked truths") {
    const SpikedModel truth{{6.0, 3.0}, 1.0, 50};
    const Matrix sigma = materialize(truth);
    double risk_sample = 0.0;
    double risk_stein = 0.0;
    for (std::uint64_t seed = 0; seed < 25; ++seed) {
        const Matrix S = sample_covariance(truth, {100, 50, 100 + seed});
        const SpectralData spec = decompose(S, 100);
        risk_sample += haff_loss(S, sigma);
        risk_stein += haff_loss(stein_isotonized(spec).matrix, sigma);
    }
    CHECK(risk_stein < risk_sample);
}

TEST_CASE("stein rejects near-degenerate spectra") {
    const auto flat = test_util::make_spectral({2.0, 2.0, 1.0}, 10);
    CHECK_THROWS_AS(stein_isotonized(flat), near_degenerate_error);
}
