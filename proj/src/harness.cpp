#include "spicov/harness.hpp"

#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "spicov/benchmarks.hpp"
#include "spicov/spiked.hpp"
#include "spicov/ure.hpp"

namespace spicov {

using nlohmann::json;

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::sample: return "sample";
        case EstimatorKind::spiked: return "spiked";
        case EstimatorKind::ledoit_wolf: return "ledoit-wolf";
        case EstimatorKind::stein: return "stein";
        case EstimatorKind::donoho_gavish: return "donoho-gavish";
        case EstimatorKind::oracle_truth: return "oracle-truth";
    }
    throw config_error("unknown estimator kind");
}

std::string to_string(LossKind kind) {
    return kind == LossKind::haff ? "haff" : "frobenius";
}

EstimatorKind estimator_from_string(const std::string& name) {
    if (name == "sample") return EstimatorKind::sample;
    if (name == "spiked") return EstimatorKind::spiked;
    if (name == "ledoit-wolf") return EstimatorKind::ledoit_wolf;
    if (name == "stein") return EstimatorKind::stein;
    if (name == "donoho-gavish") return EstimatorKind::donoho_gavish;
    if (name == "oracle-truth") return EstimatorKind::oracle_truth;
    throw config_error("unknown estimator: " + name);
}

LossKind loss_from_string(const std::string& name) {
    if (name == "haff") return LossKind::haff;
    if (name == "frobenius") return LossKind::frobenius;
    throw config_error("unknown loss: " + name);
}

PsiFamily psi_family_from_string(const std::string& name) {
    if (name == "l" || name == "identity") return PsiFamily::identity;
    if (name == "l2" || name == "square") return PsiFamily::square;
    if (name == "const" || name == "constant") return PsiFamily::constant;
    throw config_error("unknown psi family: " + name);
}

std::string to_string(PsiFamily family) {
    switch (family) {
        case PsiFamily::identity: return "l";
        case PsiFamily::square: return "l2";
        case PsiFamily::constant: return "const";
    }
    throw config_error("unknown psi family");
}

void validate(const ExperimentConfig& config) {
    if (config.replicates < 1)
        throw config_error("config: replicates must be >= 1");
    if (config.sizes.empty())
        throw config_error("config: at least one (n, p) pair is required");
    for (const SizePair& size : config.sizes) {
        if (size.p < 1)
            throw config_error("config: dimensions must be positive");
        if (size.n < size.p)
            throw config_error("config: every pair must satisfy n >= p");
    }
    if (config.losses.empty())
        throw config_error("config: at least one loss is required");
    if (config.threads < 0)
        throw config_error("config: threads must be >= 0 (0 = auto)");
    std::visit([](const auto& m) {
        auto copy = m;
        copy.p = 1;
        if constexpr (std::is_same_v<std::decay_t<decltype(copy)>, SpikedModel>)
            copy.p = std::max<int>(1, copy.rank());
        validate(copy);
    }, config.model);
}

namespace {

int resolve_threads(int requested) {
    if (requested > 0)
        return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Runs fn(i) for i in [0, count) across the requested number of threads.
// Exceptions are rethrown on the calling thread.
void parallel_for(int count, int threads, const std::function<void(int)>& fn) {
    const int workers = std::min(std::max(threads, 1), std::max(count, 1));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i)
            fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(workers));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1))
                    fn(i);
            } catch (...) {
                errors[static_cast<std::size_t>(w)] = std::current_exception();
            }
        });
    }
    for (std::thread& t : pool)
        t.join();
    for (const std::exception_ptr& err : errors)
        if (err)
            std::rethrow_exception(err);
}

struct ReplicateLosses {
    // losses[estimator][loss]; NaN marks an estimator failure.
    std::vector<std::vector<double>> values;
};

Matrix evaluate_estimator(EstimatorKind kind, const Matrix& X, const Matrix& S,
                          const SpectralData& spec, const Matrix& truth) {
    switch (kind) {
        case EstimatorKind::sample:
            return S;
        case EstimatorKind::spiked: {
            const SpikedEstimate est = assemble(spec);
            return to_matrix(est, S);
        }
        case EstimatorKind::ledoit_wolf:
            return ledoit_wolf(X).matrix;
        case EstimatorKind::stein:
            return stein_isotonized(spec).matrix;
        case EstimatorKind::donoho_gavish: {
            // Known-noise shrinker: sigma2 fixed at 1, spikes are the
            // eigenvalues above the bulk edge.
            const double c = static_cast<double>(spec.p) / spec.n;
            const double edge = std::pow(1.0 + std::sqrt(c), 2);
            Vector psi = Vector::Ones(spec.p);
            for (int k = 0; k < spec.p; ++k) {
                if (spec.eigenvalues(k) > edge)
                    psi(k) = 1.0 + donoho_gavish_gamma(spec.eigenvalues(k), c);
                else
                    break;  // eigenvalues are sorted; the rest are bulk
            }
            return spec.eigenvectors * psi.asDiagonal() * spec.eigenvectors.transpose();
        }
        case EstimatorKind::oracle_truth:
            return truth;
    }
    throw config_error("unknown estimator kind");
}

} // namespace

RiskReport run_risk_experiment(const ExperimentConfig& config) {
    validate(config);
    const int threads = resolve_threads(config.threads);
    const int n_est = static_cast<int>(config.estimators.size());
    const int n_loss = static_cast<int>(config.losses.size());

    RiskReport report;
    report.config = config;

    for (std::size_t cell_index = 0; cell_index < config.sizes.size(); ++cell_index) {
        const SizePair size = config.sizes[cell_index];
        const CovarianceModel model = with_dimension(config.model, size.p);
        const Matrix truth = materialize(model);
        const std::uint64_t cell_seed =
            derive_stream_seed(config.seed, 0x5349ULL + static_cast<std::uint64_t>(cell_index));

        std::vector<ReplicateLosses> results(static_cast<std::size_t>(config.replicates));
        parallel_for(config.replicates, threads, [&](int rep) {
            // One independent stream per replicate: seed ^ replicate index,
            // then mixed. All estimators see the same draw (paired design).
            GaussianStream stream(derive_stream_seed(cell_seed, static_cast<std::uint64_t>(rep)));
            SampleSpec spec_draw{size.n, size.p, 0};
            const Matrix X = sample_data(model, spec_draw, stream);
            const Matrix S = sample_covariance_of(X);
            const SpectralData spec = decompose(S, size.n);

            ReplicateLosses& out = results[static_cast<std::size_t>(rep)];
            out.values.assign(static_cast<std::size_t>(n_est),
                              std::vector<double>(static_cast<std::size_t>(n_loss), 0.0));
            for (int e = 0; e < n_est; ++e) {
                try {
                    const Matrix est = evaluate_estimator(
                        config.estimators[static_cast<std::size_t>(e)], X, S, spec, truth);
                    for (int q = 0; q < n_loss; ++q) {
                        const double loss =
                            config.losses[static_cast<std::size_t>(q)] == LossKind::haff
                                ? haff_loss(est, truth)
                                : frobenius_loss(est, truth);
                        out.values[static_cast<std::size_t>(e)][static_cast<std::size_t>(q)] = loss;
                    }
                } catch (const error&) {
                    for (int q = 0; q < n_loss; ++q)
                        out.values[static_cast<std::size_t>(e)][static_cast<std::size_t>(q)] =
                            std::numeric_limits<double>::quiet_NaN();
                }
            }
        });

        // Sequential aggregation in replicate order keeps sums reproducible
        // for any thread count.
        for (int e = 0; e < n_est; ++e) {
            for (int q = 0; q < n_loss; ++q) {
                detail::Accumulator sum, sumsq;
                int included = 0;
                for (int rep = 0; rep < config.replicates; ++rep) {
                    const double v =
                        results[static_cast<std::size_t>(rep)]
                            .values[static_cast<std::size_t>(e)][static_cast<std::size_t>(q)];
                    if (std::isnan(v))
                        continue;
                    sum.add(v);
                    sumsq.add(v * v);
                    ++included;
                }
                RiskCell cell;
                cell.method = to_string(config.estimators[static_cast<std::size_t>(e)]);
                cell.loss = to_string(config.losses[static_cast<std::size_t>(q)]);
                cell.n = size.n;
                cell.p = size.p;
                cell.replicates = included;
                cell.excluded = config.replicates - included;
                if (included > 0) {
                    cell.risk = sum.value() / included;
                    if (included > 1) {
                        const double var =
                            (sumsq.value() - included * cell.risk * cell.risk) /
                            (included - 1);
                        cell.se = std::sqrt(std::max(var, 0.0) / included);
                    }
                }
                report.cells.push_back(cell);
            }
        }
    }

    // Gains relative to the sample covariance matrix within each
    // (loss, n, p) group, when S participates.
    for (RiskCell& cell : report.cells) {
        if (cell.risk <= 0.0)
            continue;
        for (const RiskCell& base : report.cells) {
            if (base.method == "sample" && base.loss == cell.loss && base.n == cell.n &&
                base.p == cell.p && base.replicates > 0) {
                cell.gain = base.risk / cell.risk - 1.0;
                break;
            }
        }
    }
    return report;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

json model_to_json(const CovarianceModel& model) {
    json j;
    if (const auto* spiked = std::get_if<SpikedModel>(&model)) {
        j["type"] = "spiked";
        j["gammas"] = spiked->gammas;
        j["sigma2"] = spiked->sigma2;
    } else {
        const auto& ar = std::get<ARModel>(model);
        j["type"] = "ar";
        j["kappa"] = ar.kappa;
    }
    return j;
}

CovarianceModel model_from_json(const json& j) {
    const std::string type = j.at("type").get<std::string>();
    if (type == "spiked") {
        SpikedModel model;
        model.gammas = j.value("gammas", std::vector<double>{});
        model.sigma2 = j.value("sigma2", 1.0);
        return model;
    }
    if (type == "ar") {
        ARModel model;
        model.kappa = j.at("kappa").get<double>();
        return model;
    }
    throw config_error("config: model type must be 'spiked' or 'ar'");
}

json config_to_json_object(const ExperimentConfig& config) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["model"] = model_to_json(config.model);
    json sizes = json::array();
    for (const SizePair& size : config.sizes)
        sizes.push_back({{"n", size.n}, {"p", size.p}});
    j["sizes"] = sizes;
    j["replicates"] = config.replicates;
    json estimators = json::array();
    for (EstimatorKind kind : config.estimators)
        estimators.push_back(to_string(kind));
    j["estimators"] = estimators;
    json losses = json::array();
    for (LossKind kind : config.losses)
        losses.push_back(to_string(kind));
    j["losses"] = losses;
    j["seed"] = config.seed;
    j["threads"] = config.threads;
    return j;
}

ExperimentConfig config_from_json_object(const json& j) {
    ExperimentConfig config;
    try {
        config.model = model_from_json(j.at("model"));
        for (const json& size : j.at("sizes"))
            config.sizes.push_back({size.at("n").get<int>(), size.at("p").get<int>()});
        config.replicates = j.value("replicates", 100);
        for (const json& name : j.at("estimators"))
            config.estimators.push_back(estimator_from_string(name.get<std::string>()));
        if (j.contains("losses"))
            for (const json& name : j.at("losses"))
                config.losses.push_back(loss_from_string(name.get<std::string>()));
        else
            config.losses = {LossKind::haff, LossKind::frobenius};
        config.seed = j.value("seed", std::uint64_t{0});
        config.threads = j.value("threads", 1);
    } catch (const json::exception& ex) {
        throw config_error(std::string("config: ") + ex.what());
    }
    validate(config);
    return config;
}

} // namespace

void write_csv(const RiskReport& report, std::ostream& out) {
    out << "method,loss,n,p,risk,se,gain,excluded\n";
    for (const RiskCell& cell : report.cells) {
        out << cell.method << ',' << cell.loss << ',' << cell.n << ',' << cell.p << ','
            << format_double(cell.risk) << ',' << format_double(cell.se) << ',';
        if (cell.gain.has_value())
            out << format_double(*cell.gain);
        out << ',' << cell.excluded << '\n';
    }
}

std::string to_json(const ExperimentConfig& config) {
    return config_to_json_object(config).dump(2) + "\n";
}

std::string to_json(const RiskReport& report) {
    json j;
    j["schema_version"] = report.schema_version;
    j["config"] = config_to_json_object(report.config);
    json cells = json::array();
    for (const RiskCell& cell : report.cells) {
        json c;
        c["method"] = cell.method;
        c["loss"] = cell.loss;
        c["n"] = cell.n;
        c["p"] = cell.p;
        c["risk"] = cell.risk;
        c["se"] = cell.se;
        c["replicates"] = cell.replicates;
        c["excluded"] = cell.excluded;
        if (cell.gain.has_value())
            c["gain"] = *cell.gain;
        else
            c["gain"] = nullptr;
        cells.push_back(c);
    }
    j["results"] = cells;
    return j.dump(2) + "\n";
}

ExperimentConfig config_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw config_error(std::string("config: invalid JSON: ") + ex.what());
    }
    return config_from_json_object(j);
}

RiskReport report_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& ex) {
        throw config_error(std::string("report: invalid JSON: ") + ex.what());
    }
    RiskReport report;
    try {
        report.schema_version = j.at("schema_version").get<int>();
        report.config = config_from_json_object(j.at("config"));
        for (const json& c : j.at("results")) {
            RiskCell cell;
            cell.method = c.at("method").get<std::string>();
            cell.loss = c.at("loss").get<std::string>();
            cell.n = c.at("n").get<int>();
            cell.p = c.at("p").get<int>();
            cell.risk = c.at("risk").get<double>();
            cell.se = c.at("se").get<double>();
            cell.replicates = c.at("replicates").get<int>();
            cell.excluded = c.at("excluded").get<int>();
            if (!c.at("gain").is_null())
                cell.gain = c.at("gain").get<double>();
            report.cells.push_back(cell);
        }
    } catch (const json::exception& ex) {
        throw config_error(std::string("report: ") + ex.what());
    }
    return report;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw io_error("cannot open config file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return config_from_json(buffer.str());
}

void emit(const RiskReport& report, const std::string& directory) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(directory, ec);
    if (ec)
        throw io_error("cannot create output directory: " + directory);
    {
        std::ofstream csv(fs::path(directory) / "risks.csv", std::ios::binary);
        if (!csv)
            throw io_error("cannot write risks.csv in " + directory);
        write_csv(report, csv);
    }
    {
        std::ofstream js(fs::path(directory) / "report.json", std::ios::binary);
        if (!js)
            throw io_error("cannot write report.json in " + directory);
        js << to_json(report);
    }
}

// ---- Stein-Haff identity verification ----------------------------------

namespace {

struct PsiEval {
    Vector psi, dpsi, d2psi;  // separable families: psi_k = f(l_k)
};

PsiEval evaluate_family(PsiFamily family, const Vector& l) {
    const auto p = l.size();
    PsiEval out;
    out.psi.resize(p);
    out.dpsi.resize(p);
    out.d2psi.resize(p);
    switch (family) {
        case PsiFamily::identity:
            out.psi = l;
            out.dpsi.setOnes();
            out.d2psi.setZero();
            break;
        case PsiFamily::square:
            out.psi = l.array().square();
            out.dpsi = 2.0 * l;
            out.d2psi.setConstant(2.0);
            break;
        case PsiFamily::constant:
            out.psi.setOnes();
            out.dpsi.setZero();
            out.d2psi.setZero();
            break;
    }
    return out;
}

// RHS of the first-order identity for given (psi, dpsi) values.
double stein_haff_rhs(const Vector& l, const Vector& psi, const Vector& dpsi, int n) {
    const auto p = l.size();
    const double dn = n;
    detail::Accumulator acc;
    for (Eigen::Index k = 0; k < p; ++k) {
        acc.add((dn - p - 1.0) / dn * psi(k) / l(k));
        acc.add(2.0 / dn * dpsi(k));
        for (Eigen::Index b = 0; b < p; ++b)
            if (b != k)
                acc.add((psi(k) - psi(b)) / (l(k) - l(b)) / dn);
    }
    return acc.value();
}

} // namespace

SteinHaffReport verify_stein_haff(PsiFamily family, int p, int n, double sigma2,
                                  int replicates, std::uint64_t seed, int order) {
    if (p < 1 || n < p)
        throw config_error("verify_stein_haff: requires n >= p >= 1");
    if (replicates < 2)
        throw config_error("verify_stein_haff: needs at least two replicates");
    if (order != 1 && order != 2)
        throw config_error("verify_stein_haff: order must be 1 or 2");
    if (!(sigma2 > 0.0))
        throw config_error("verify_stein_haff: sigma2 must be positive");

    SteinHaffReport report;
    report.family = family;
    report.order = order;
    report.p = p;
    report.n = n;
    report.replicates = replicates;

    const SpikedModel truth{{}, sigma2, p};
    detail::Accumulator lhs_sum, lhs_sq, rhs_sum, rhs_sq, diff_sum, diff_sq;
    for (int rep = 0; rep < replicates; ++rep) {
        GaussianStream stream(derive_stream_seed(seed, static_cast<std::uint64_t>(rep)));
        SampleSpec draw{n, p, 0};
        const Matrix S = sample_covariance_of(sample_data(truth, draw, stream));
        const SpectralData spec = decompose(S, n);
        const Vector& l = spec.eigenvalues;
        const PsiEval fam = evaluate_family(family, l);

        double lhs = 0.0;
        double rhs = 0.0;
        if (order == 1) {
            // tr(Sigma^-1 O Psi O') with Sigma = sigma2 I is sum_k psi_k / sigma2.
            lhs = fam.psi.sum() / sigma2;
            rhs = stein_haff_rhs(l, fam.psi, fam.dpsi, n);
        } else {
            // tr([Sigma^-1 O Psi O']^2) = sum_k psi_k^2 / sigma2^2.
            lhs = fam.psi.squaredNorm() / (sigma2 * sigma2);
            // psi*_k and its l_k-derivative; off-diagonal dpsi_b/dl_k = 0
            // for separable families.
            const double dn = n;
            const double a = (dn - p - 1.0) / dn;
            Vector D(p), dD(p);
            for (int k = 0; k < p; ++k) {
                detail::Accumulator dk, ddk;
                for (int b = 0; b < p; ++b) {
                    if (b == k)
                        continue;
                    const double r = 1.0 / (l(k) - l(b));
                    const double x = (fam.psi(k) - fam.psi(b)) * r;
                    dk.add(x);
                    ddk.add((fam.dpsi(k)) * r - x * r);
                }
                D(k) = dk.value();
                dD(k) = ddk.value();
            }
            Vector psis(p), dpsis(p);
            for (int k = 0; k < p; ++k) {
                psis(k) = a * fam.psi(k) * fam.psi(k) / l(k) +
                          4.0 / dn * fam.psi(k) * fam.dpsi(k) +
                          2.0 / dn * fam.psi(k) * D(k);
                dpsis(k) = a * (2.0 * fam.psi(k) * fam.dpsi(k) / l(k) -
                                fam.psi(k) * fam.psi(k) / (l(k) * l(k))) +
                           4.0 / dn * (fam.dpsi(k) * fam.dpsi(k) +
                                       fam.psi(k) * fam.d2psi(k)) +
                           2.0 / dn * (fam.dpsi(k) * D(k) + fam.psi(k) * dD(k));
            }
            rhs = stein_haff_rhs(l, psis, dpsis, n);
        }
        lhs_sum.add(lhs);
        lhs_sq.add(lhs * lhs);
        rhs_sum.add(rhs);
        rhs_sq.add(rhs * rhs);
        const double diff = lhs - rhs;
        diff_sum.add(diff);
        diff_sq.add(diff * diff);
    }

    const double R = replicates;
    const auto finalize = [R](const detail::Accumulator& sum, const detail::Accumulator& sq,
                              double& mean, double& se) {
        mean = sum.value() / R;
        const double var = (sq.value() - R * mean * mean) / (R - 1.0);
        se = std::sqrt(std::max(var, 0.0) / R);
    };
    finalize(lhs_sum, lhs_sq, report.lhs_mean, report.lhs_se);
    finalize(rhs_sum, rhs_sq, report.rhs_mean, report.rhs_se);
    finalize(diff_sum, diff_sq, report.diff_mean, report.diff_se);
    report.z = report.diff_se > 0.0 ? report.diff_mean / report.diff_se : 0.0;
    if (family == PsiFamily::identity && order == 1)
        report.exact_value = static_cast<double>(p);
    return report;
}

UreCheckReport verify_ure(const SpikedModel& truth, int n, int replicates,
                          int fixed_rank, std::uint64_t seed, int threads) {
    if (truth.p < 1 || n < truth.p + 1)
        throw config_error("verify_ure: requires n >= p + 1");
    if (replicates < 2)
        throw config_error("verify_ure: needs at least two replicates");
    if (fixed_rank >= truth.p)
        throw config_error("verify_ure: fixed rank must be < p");
    validate(truth);

    const Matrix sigma = materialize(truth);
    std::vector<double> ure_values(static_cast<std::size_t>(replicates));
    std::vector<double> loss_values(static_cast<std::size_t>(replicates));

    parallel_for(replicates, resolve_threads(threads), [&](int rep) {
        GaussianStream stream(derive_stream_seed(seed, static_cast<std::uint64_t>(rep)));
        SampleSpec draw{n, truth.p, 0};
        const Matrix S = sample_covariance_of(sample_data(truth, draw, stream));
        const SpectralData spec = decompose(S, n);

        int rank = fixed_rank;
        if (rank < 0)
            rank = select_rank(spec).first;

        double ure_total;
        Matrix est;
        if (rank == truth.p) {
            ure_total = (truth.p + 1.0) / n;
            est = S;
        } else {
            const EstimatorProfile profile =
                profile_finite_difference(fixed_rank_estimator(rank, n), spec);
            ure_total = evaluate_ure(spec, profile).total;
            est = to_matrix(assemble_at_rank(spec, rank), S);
        }
        ure_values[static_cast<std::size_t>(rep)] = ure_total;
        loss_values[static_cast<std::size_t>(rep)] = haff_loss(est, sigma);
    });

    UreCheckReport report;
    report.p = truth.p;
    report.n = n;
    report.replicates = replicates;
    report.rank = fixed_rank;
    detail::Accumulator u_sum, u_sq, h_sum, h_sq, d_sum, d_sq;
    for (int rep = 0; rep < replicates; ++rep) {
        const double u = ure_values[static_cast<std::size_t>(rep)];
        const double h = loss_values[static_cast<std::size_t>(rep)];
        u_sum.add(u);
        u_sq.add(u * u);
        h_sum.add(h);
        h_sq.add(h * h);
        d_sum.add(u - h);
        d_sq.add((u - h) * (u - h));
    }
    const double R = replicates;
    const auto finalize = [R](const detail::Accumulator& sum, const detail::Accumulator& sq,
                              double& mean, double& se) {
        mean = sum.value() / R;
        const double var = (sq.value() - R * mean * mean) / (R - 1.0);
        se = std::sqrt(std::max(var, 0.0) / R);
    };
    finalize(u_sum, u_sq, report.ure_mean, report.ure_se);
    finalize(h_sum, h_sq, report.loss_mean, report.loss_se);
    finalize(d_sum, d_sq, report.diff_mean, report.diff_se);
    report.z = report.diff_se > 0.0 ? report.diff_mean / report.diff_se : 0.0;
    return report;
}

} // namespace spicov
