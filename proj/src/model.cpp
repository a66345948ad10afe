#include "spicov/model.hpp"

#include <Eigen/Cholesky>
#include <cmath>

namespace spicov {

void validate(const SpikedModel& model) {
    if (model.p <= 0)
        throw invalid_model_error("SpikedModel: dimension must be positive");
    if (model.sigma2 <= 0.0)
        throw invalid_model_error("SpikedModel: sigma2 must be positive");
    if (model.rank() > model.p)
        throw invalid_model_error("SpikedModel: more spikes than dimensions");
    for (std::size_t k = 0; k < model.gammas.size(); ++k) {
        if (model.gammas[k] <= 0.0)
            throw invalid_model_error("SpikedModel: spike strengths must be positive");
        if (k > 0 && model.gammas[k] >= model.gammas[k - 1])
            throw invalid_model_error("SpikedModel: spikes must be strictly decreasing");
    }
}

void validate(const ARModel& model) {
    if (model.p <= 0)
        throw invalid_model_error("ARModel: dimension must be positive");
    if (model.kappa < 0.0 || model.kappa >= 1.0)
        throw invalid_model_error("ARModel: kappa must lie in [0, 1)");
}

Matrix materialize(const SpikedModel& model) {
    validate(model);
    Matrix sigma = Matrix::Zero(model.p, model.p);
    for (int i = 0; i < model.p; ++i)
        sigma(i, i) = model.sigma2;
    for (int k = 0; k < model.rank(); ++k)
        sigma(k, k) += model.gammas[static_cast<std::size_t>(k)];
    return sigma;
}

Matrix materialize(const ARModel& model) {
    validate(model);
    Matrix sigma(model.p, model.p);
    for (int i = 0; i < model.p; ++i)
        for (int j = 0; j < model.p; ++j)
            sigma(i, j) = std::pow(model.kappa, std::abs(i - j));
    return sigma;
}

Matrix materialize(const CovarianceModel& model) {
    return std::visit([](const auto& m) { return materialize(m); }, model);
}

namespace {

// Square-root factor R with Sigma = R R'. Diagonal closed form for the
// spiked model (exact), Cholesky for anything else.
Matrix sqrt_factor(const CovarianceModel& model) {
    if (const auto* spiked = std::get_if<SpikedModel>(&model)) {
        validate(*spiked);
        Matrix root = Matrix::Zero(spiked->p, spiked->p);
        for (int i = 0; i < spiked->p; ++i) {
            double eig = spiked->sigma2;
            if (i < spiked->rank())
                eig += spiked->gammas[static_cast<std::size_t>(i)];
            root(i, i) = std::sqrt(eig);
        }
        return root;
    }
    const Matrix sigma = materialize(model);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success)
        throw invalid_model_error("model covariance is not positive-definite");
    return llt.matrixL();
}

void check_spec(const SampleSpec& spec, int model_p) {
    if (spec.n < spec.p)
        throw regime_error("sample size n must be at least the dimension p");
    if (spec.p != model_p)
        throw invalid_model_error("SampleSpec dimension does not match the model");
}

} // namespace

Matrix sample_data(const CovarianceModel& model, const SampleSpec& spec, GaussianStream& stream) {
    const int model_p = std::visit([](const auto& m) { return m.p; }, model);
    check_spec(spec, model_p);
    const Matrix root = sqrt_factor(model);
    Matrix z(spec.n, spec.p);
    for (int i = 0; i < spec.n; ++i)
        for (int j = 0; j < spec.p; ++j)
            z(i, j) = stream.normal();
    return z * root.transpose();
}

Matrix sample_data(const CovarianceModel& model, const SampleSpec& spec) {
    GaussianStream stream(spec.seed);
    return sample_data(model, spec, stream);
}

Matrix sample_covariance_of(const Matrix& data) {
    if (data.rows() < data.cols())
        throw regime_error("degenerate sample: fewer observations than dimensions");
    return (data.transpose() * data) / static_cast<double>(data.rows());
}

Matrix sample_covariance(const CovarianceModel& model, const SampleSpec& spec) {
    return sample_covariance_of(sample_data(model, spec));
}

double true_noise(const SpikedModel& model) { return model.sigma2; }

const std::vector<double>& true_spikes(const SpikedModel& model) { return model.gammas; }

CovarianceModel with_dimension(const CovarianceModel& model, int p) {
    CovarianceModel copy = model;
    std::visit([p](auto& m) { m.p = p; }, copy);
    return copy;
}

} // namespace spicov
