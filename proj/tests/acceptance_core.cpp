// Acceptance suite, part 1: the statistically cheap criteria. Each test
// case prints one [criterion N] PASS/FAIL line. Base seed fixed up front.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "spicov/harness.hpp"
#include "spicov/model.hpp"
#include "spicov/noise.hpp"
#include "spicov/spiked.hpp"
#include "spicov/ure.hpp"
#include "test_util.hpp"

using namespace spicov;

namespace {

constexpr std::uint64_t kBaseSeed = 20250810;

void report(int criterion, const char* tag, bool pass, const std::string& detail) {
    std::printf("[criterion %d%s] %s: %s\n", criterion, tag, pass ? "PASS" : "FAIL",
                detail.c_str());
    std::fflush(stdout);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace

TEST_CASE("criterion 1: URE unbiasedness at the theorem's fixed rank") {
    // Truth diag(5,4,3,2,1,...,1): spikes (4,3,2,1) over unit noise. The
    // URE theorem requires a spiked rank independent of the data, so the
    // gate runs the fixed-rank member at the true rank; the data-driven
    // selection gap is reported separately below.
    const SpikedModel truth{{4.0, 3.0, 2.0, 1.0}, 1.0, 10};
    const UreCheckReport fixed = verify_ure(truth, 40, 2000, 4, kBaseSeed, 1);
    const double combined_se =
        std::sqrt(fixed.ure_se * fixed.ure_se + fixed.loss_se * fixed.loss_se);
    const double gap = std::abs(fixed.ure_mean - fixed.loss_mean);
    const bool pass_fixed = gap <= 3.0 * combined_se;

    // The sample covariance matrix is the boundary member: F + G is the
    // constant (p+1)/n, so the same check pins the loss side of the pairing.
    const UreCheckReport sample = verify_ure(truth, 40, 2000, 10, kBaseSeed + 1, 1);
    const bool pass_sample =
        sample.ure_mean == doctest::Approx(11.0 / 40.0).epsilon(1e-12) &&
        std::abs(sample.loss_mean - 11.0 / 40.0) <= 3.0 * sample.loss_se;

    char detail[256];
    std::snprintf(detail, sizeof(detail),
                  "fixed rank 4: mean(F+G)=%.5f mean(L_H)=%.5f gap=%.5f tol=%.5f; "
                  "sample member: mean(L_H)=%.5f vs %.5f",
                  fixed.ure_mean, fixed.loss_mean, gap, 3.0 * combined_se,
                  sample.loss_mean, 11.0 / 40.0);
    report(1, "", pass_fixed && pass_sample, detail);
    CHECK(pass_fixed);
    CHECK(pass_sample);

    // Smaller-dimension variant of the same pairing (p = 5, n = 4p).
    const SpikedModel small{{4.0, 3.0, 2.0, 1.0}, 1.0, 5};
    const UreCheckReport tiny = verify_ure(small, 20, 2000, 4, kBaseSeed + 2, 1);
    const double tiny_se =
        std::sqrt(tiny.ure_se * tiny.ure_se + tiny.loss_se * tiny.loss_se);
    CHECK(std::abs(tiny.ure_mean - tiny.loss_mean) <= 3.0 * tiny_se);

    // Informational: the data-driven rank reuses the URE it minimizes, so a
    // selection bias appears; quantified here, not gated.
    const UreCheckReport selected = verify_ure(truth, 40, 400, -1, kBaseSeed + 3, 1);
    std::printf("[criterion 1 note] data-driven rank: mean(F+G)=%.5f mean(L_H)=%.5f "
                "(selection gap z=%.1f)\n",
                selected.ure_mean, selected.loss_mean, selected.z);
}

TEST_CASE("criterion 2: Haff risk of the sample covariance matrix") {
    ExperimentConfig config;
    config.model = SpikedModel{{}, 1.0, 0};
    config.sizes = {{60, 20}};
    config.replicates = 2000;
    config.estimators = {EstimatorKind::sample};
    config.losses = {LossKind::haff};
    config.seed = kBaseSeed;
    config.threads = 0;
    const RiskReport out = run_risk_experiment(config);
    REQUIRE(out.cells.size() == 1);
    const double risk = out.cells[0].risk;
    const bool pass = std::abs(risk - 0.35) <= 0.02 * 0.35;
    char detail[128];
    std::snprintf(detail, sizeof(detail), "MC risk=%.5f target (p+1)/n=0.35 tol 2%%", risk);
    report(2, "", pass, detail);
    CHECK(pass);
}

TEST_CASE("criterion 8: Stein-Haff identities") {
    bool all = true;
    std::ostringstream detail;
    for (PsiFamily family : {PsiFamily::identity, PsiFamily::square, PsiFamily::constant}) {
        for (int order : {1, 2}) {
            const SteinHaffReport rep =
                verify_stein_haff(family, 5, 20, 1.0, 5000, kBaseSeed + 10 * order, order);
            const bool ok = std::abs(rep.z) <= 3.0;
            all = all && ok;
            detail << to_string(family) << "/o" << order << " z=" << rep.z << "  ";
            CHECK(ok);
            if (family == PsiFamily::identity && order == 1) {
                // the right-hand side collapses to the constant p
                CHECK(rep.rhs_mean == doctest::Approx(5.0).epsilon(1e-12));
                CHECK(std::abs(rep.lhs_mean - 5.0) <= 3.0 * rep.lhs_se);
            }
        }
    }
    report(8, "", all, detail.str());
}

TEST_CASE("criterion 9: stationarity of the noise minimizer") {
    std::mt19937_64 eng(kBaseSeed);
    bool residual_ok = true;
    bool grid_ok = true;
    double worst_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 5 + static_cast<int>(eng() % 16);
        const int n = 2 * p + 2 + static_cast<int>(eng() % 20);
        const int r = static_cast<int>(eng() % 4) % p;
        const auto spec = test_util::wishart_spectrum(
            SpikedModel{{8.0, 5.0, 3.5, 2.2}, 1.0, p}, n, kBaseSeed + 100 + trial);
        const std::vector<double> g = estimate_gammas(spec, r);
        const NoiseSolution sol = minimize_noise(spec, g, r);
        const double residual = stationarity_residual(spec, g, r, sol.sigma2_tilde);
        const double tol = 1e-8 * std::abs(2.0 * sol.b) * std::abs(sol.sigma2_tilde);
        worst_rel = std::max(worst_rel, std::abs(residual) / tol * 1e-8);
        if (std::abs(residual) > tol)
            residual_ok = false;

        if (sol.sigma2_tilde > 0.0) {
            EstimatorProfile profile;
            profile.rho_hat = r;
            int best = -1;
            double best_value = std::numeric_limits<double>::infinity();
            int nearest = -1;
            double nearest_gap = std::numeric_limits<double>::infinity();
            for (int i = 0; i <= 40; ++i) {
                const double s2 = sol.sigma2_tilde * (0.51 + 0.025 * i);
                profile.psi = fit_to_psi({g, s2}, p);
                const double value = evaluate_F(spec, profile);
                if (value < best_value) {
                    best_value = value;
                    best = i;
                }
                if (std::abs(s2 - sol.sigma2_tilde) < nearest_gap) {
                    nearest_gap = std::abs(s2 - sol.sigma2_tilde);
                    nearest = i;
                }
            }
            if (best != nearest)
                grid_ok = false;
        }
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "100 spectra with n >= 2p+2: worst |dF/ds2| = %.2e relative to "
                  "curvature*s2 (tol 1e-8); grid argmin %s",
                  worst_rel, grid_ok ? "always nearest s2~" : "MISPLACED");
    report(9, "", residual_ok && grid_ok, detail);
    CHECK(residual_ok);
    CHECK(grid_ok);
}

TEST_CASE("criterion 12: derivative provider against analytic partials") {
    std::mt19937_64 eng(kBaseSeed + 7);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int p = 6 + static_cast<int>(eng() % 11);
        const int n = 3 * p + static_cast<int>(eng() % (2 * p));
        const int r = 1 + static_cast<int>(eng() % 3);
        const auto spec = test_util::wishart_spectrum(
            SpikedModel{{9.0, 6.0, 4.0}, 1.0, p}, n, kBaseSeed + 500 + trial);
        const EigenvalueEstimator rule = [&](const Vector& l) {
            SpectralData local;
            local.eigenvalues = l;
            local.p = p;
            local.n = n;
            return EigenvalueFit{estimate_gammas(local, r), 1.0};
        };
        const EstimatorProfile profile = profile_finite_difference(rule, spec);
        const Vector& l = spec.eigenvalues;
        double a1 = 0.0;
        for (int c = r; c < p; ++c)
            a1 += l(c);
        for (int k = 0; k < r; ++k) {
            double s = 0.0, a2 = 0.0;
            for (int c = r; c < p; ++c) {
                const double gap = l(k) - l(c);
                s += l(c) / gap;
                a2 += l(c) / (gap * gap);
            }
            const double gk = a1 / s;
            const double dkk = gk * gk * a2 / a1;
            worst = std::max(worst, std::abs(profile.jacobian(k, k) - dkk) / std::abs(dkk));
            for (int c = r; c < p; ++c) {
                const double gap = l(k) - l(c);
                const double dkc = gk / a1 * (1.0 - gk / gap - gk * l(c) / (gap * gap));
                worst = std::max(worst,
                                 std::abs(profile.jacobian(k, c) - dkc) / std::abs(dkc));
            }
        }
    }
    const bool fd_ok = worst <= 1e-5;

    // Equal-eigenvalue closed form sigma2 = n l / (n - 2p - 2), exact.
    bool closed_ok = true;
    for (const auto& [n, p, level] :
         {std::tuple{12, 2, 1.0}, std::tuple{31, 6, 0.37}, std::tuple{101, 20, 5.5}}) {
        const auto spec = test_util::make_spectral(
            std::vector<double>(static_cast<std::size_t>(p), level), n);
        const double got = minimize_noise(spec, {}, 0).sigma2_tilde;
        const double want = n * level / (n - 2.0 * p - 2.0);
        if (std::abs(got - want) > 1e-12 * std::abs(want))
            closed_ok = false;
    }
    char detail[160];
    std::snprintf(detail, sizeof(detail),
                  "worst finite-difference vs analytic relative error = %.2e (tol 1e-5); "
                  "equal-spectrum closed form %s",
                  worst, closed_ok ? "exact" : "WRONG");
    report(12, "", fd_ok && closed_ok, detail);
    CHECK(fd_ok);
    CHECK(closed_ok);
}

TEST_CASE("criterion 13: byte-identical simulation output across parallelism") {
    namespace fs = std::filesystem;
    const fs::path cli = SPICOV_CLI_PATH;
    const fs::path config = fs::path(SPICOV_SOURCE_DIR) / "figures" / "spiked.cfg";
    REQUIRE(fs::exists(cli));
    REQUIRE(fs::exists(config));
    const fs::path base = fs::temp_directory_path() / "spicov_acceptance13";
    fs::remove_all(base);
    fs::create_directories(base);

    const auto run = [&](const std::string& out, int threads) {
        std::ostringstream cmd;
        cmd << '"' << cli.string() << '"' << " --threads " << threads
            << " simulate --config \"" << config.string() << "\" --out \""
            << (base / out).string() << "\" > /dev/null";
        return std::system(cmd.str().c_str());
    };
    REQUIRE(run("serial", 1) == 0);
    REQUIRE(run("par8", 8) == 0);
    REQUIRE(run("par8_again", 8) == 0);

    const std::string serial = read_file(base / "serial" / "risks.csv");
    const std::string par8 = read_file(base / "par8" / "risks.csv");
    const std::string again = read_file(base / "par8_again" / "risks.csv");
    const bool pass = serial == par8 && par8 == again && !serial.empty();
    char detail[128];
    std::snprintf(detail, sizeof(detail), "%zu bytes, identical across {1, 8} threads and reruns",
                  serial.size());
    report(13, "", pass, detail);
    CHECK(pass);
}
