#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "spicov/model.hpp"
#include "spicov/types.hpp"

namespace spicov {

enum class EstimatorKind {
    sample,        // S itself
    spiked,        // the rank-selected spiked correction
    ledoit_wolf,
    stein,
    donoho_gavish, // known-noise shrinker, sigma2 = 1
    oracle_truth,  // returns the true Sigma; risk 0 by construction
};

enum class LossKind { haff, frobenius };

std::string to_string(EstimatorKind kind);
std::string to_string(LossKind kind);
EstimatorKind estimator_from_string(const std::string& name);
LossKind loss_from_string(const std::string& name);

struct SizePair {
    int n = 0;
    int p = 0;
};

struct ExperimentConfig {
    CovarianceModel model;  // dimension field ignored; filled per size pair
    std::vector<SizePair> sizes;
    int replicates = 100;
    std::vector<EstimatorKind> estimators;
    std::vector<LossKind> losses;
    std::uint64_t seed = 0;
    int threads = 1;  // 0 = hardware concurrency
};

void validate(const ExperimentConfig& config);

struct RiskCell {
    std::string method;
    std::string loss;
    int n = 0;
    int p = 0;
    double risk = 0.0;
    double se = 0.0;
    int replicates = 0;  // included in the mean
    int excluded = 0;    // estimator failures, never silently dropped
    std::optional<double> gain;  // Risk(S)/Risk(est) - 1, when S is present
};

inline constexpr int kReportSchemaVersion = 1;

struct RiskReport {
    int schema_version = kReportSchemaVersion;
    ExperimentConfig config;
    std::vector<RiskCell> cells;
};

// Paired Monte Carlo risk estimation: within a replicate every estimator
// sees the same data draw. Replicates own independent streams derived from
// (seed, cell, replicate), and aggregation order is fixed by replicate
// index, so the report is identical for any thread count.
RiskReport run_risk_experiment(const ExperimentConfig& config);

// CSV emission: header "method,loss,n,p,risk,se,gain,excluded", one row per
// estimator x loss x size, doubles printed with 17 significant digits so
// identical reports give identical bytes.
void write_csv(const RiskReport& report, std::ostream& out);

std::string to_json(const ExperimentConfig& config);
std::string to_json(const RiskReport& report);
ExperimentConfig config_from_json(const std::string& text);
RiskReport report_from_json(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Writes <dir>/risks.csv and <dir>/report.json.
void emit(const RiskReport& report, const std::string& directory);

// ---- identity verifiers ----------------------------------------------

// Built-in psi families with known derivatives.
enum class PsiFamily { identity, square, constant };
PsiFamily psi_family_from_string(const std::string& name);
std::string to_string(PsiFamily family);

// Monte Carlo check of the Stein-Haff identity (order 1) and its
// second-order version (order 2) for W ~ W_p(n, sigma2 I), W/n = O L O'.
// Both sides are evaluated per replicate and the z-score of the paired
// difference is reported. For psi = identity at order 1 the right-hand
// side is the constant p, and exact_value is set.
struct SteinHaffReport {
    PsiFamily family;
    int order = 1;
    int p = 0;
    int n = 0;
    int replicates = 0;
    double lhs_mean = 0.0;
    double lhs_se = 0.0;
    double rhs_mean = 0.0;
    double rhs_se = 0.0;
    double diff_mean = 0.0;
    double diff_se = 0.0;
    double z = 0.0;
    std::optional<double> exact_value;
};
SteinHaffReport verify_stein_haff(PsiFamily family, int p, int n, double sigma2,
                                  int replicates, std::uint64_t seed, int order);

// Monte Carlo check that mean(F + G) tracks mean(L_H) for the spiked
// estimator over a spiked truth. fixed_rank >= 0 evaluates the fixed-rank
// family member (the setting of the URE theorem, whose spiked rank must be
// independent of the data); fixed_rank < 0 runs the data-driven rank
// selection, where the URE acquires a selection bias that this report
// quantifies rather than hides.
struct UreCheckReport {
    int p = 0;
    int n = 0;
    int replicates = 0;
    int rank = -1;  // -1 = data-driven
    double ure_mean = 0.0;
    double ure_se = 0.0;
    double loss_mean = 0.0;
    double loss_se = 0.0;
    double diff_mean = 0.0;
    double diff_se = 0.0;
    double z = 0.0;
};
UreCheckReport verify_ure(const SpikedModel& truth, int n, int replicates,
                          int fixed_rank, std::uint64_t seed, int threads = 1);

} // namespace spicov
