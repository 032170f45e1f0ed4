#include "pals/simlab.hpp"

#include "pals/baselines.hpp"
#include "pals/errors.hpp"
#include "pals/kernel.hpp"
#include "pals/metrics.hpp"
#include "pals/pals.hpp"
#include "pals/parallel.hpp"
#include "pals/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

namespace pals {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

} // namespace

std::string to_string(ModelId id) {
    switch (id) {
        case ModelId::I: return "I";
        case ModelId::II: return "II";
        case ModelId::III: return "III";
        case ModelId::IV: return "IV";
        case ModelId::V: return "V";
    }
    return "?";
}

std::string to_string(PredictorCase c) {
    switch (c) {
        case PredictorCase::i: return "i";
        case PredictorCase::ii: return "ii";
        case PredictorCase::iii: return "iii";
    }
    return "?";
}

ModelId model_from_string(const std::string& s) {
    if (s == "I" || s == "1") return ModelId::I;
    if (s == "II" || s == "2") return ModelId::II;
    if (s == "III" || s == "3") return ModelId::III;
    if (s == "IV" || s == "4") return ModelId::IV;
    if (s == "V" || s == "5") return ModelId::V;
    throw std::invalid_argument("unknown model '" + s + "' (expected I..V)");
}

PredictorCase case_from_string(const std::string& s) {
    if (s == "i") return PredictorCase::i;
    if (s == "ii") return PredictorCase::ii;
    if (s == "iii") return PredictorCase::iii;
    throw std::invalid_argument("unknown predictor case '" + s + "' (expected i, ii or iii)");
}

std::string method_name(Method m) {
    switch (m) {
        case Method::SIR: return "SIR";
        case Method::SAVE: return "SAVE";
        case Method::PALS: return "PALS";
        case Method::DcPals: return "DC-PALS";
        case Method::KernelPals: return "kPALS";
        case Method::DcKernelPals: return "DC-kPALS";
    }
    return "?";
}

Method method_from_string(const std::string& s) {
    if (s == "SIR") return Method::SIR;
    if (s == "SAVE") return Method::SAVE;
    if (s == "PALS") return Method::PALS;
    if (s == "DC-PALS") return Method::DcPals;
    if (s == "kPALS") return Method::KernelPals;
    if (s == "DC-kPALS") return Method::DcKernelPals;
    throw std::invalid_argument("unknown method '" + s + "'");
}

int SimModel::true_dim() const {
    switch (id) {
        case ModelId::I:
        case ModelId::II:
        case ModelId::III: return 2;
        case ModelId::IV: return 1;
        case ModelId::V: return 2;
    }
    return 0;
}

Eigen::MatrixXd SimModel::true_basis() const {
    if (is_nonlinear()) throw std::invalid_argument("true_basis: models IV and V have no linear basis");
    Eigen::MatrixXd basis = Eigen::MatrixXd::Zero(p, 2);
    if (id == ModelId::II) {
        basis(0, 0) = basis(1, 0) = 1.0; // e1 + e2
        basis(2, 1) = basis(3, 1) = 1.0; // e3 + e4
    } else {
        basis(0, 0) = 1.0;
        basis(1, 1) = 1.0;
    }
    return basis;
}

namespace {

Eigen::MatrixXd ar1_sqrt(int p) {
    Eigen::MatrixXd sigma(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) sigma(i, j) = std::pow(0.5, std::abs(i - j));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sigma);
    return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           eig.eigenvectors().transpose();
}

} // namespace

Generated generate(const SimModel& model, int n, std::uint64_t seed, const GenerateOptions& options) {
    if (n < 2) throw std::invalid_argument("generate: need n >= 2");
    const int min_p = model.id == ModelId::II ? 4 : 2;
    if (model.p < min_p)
        throw std::invalid_argument("generate: model " + to_string(model.id) + " needs p >= " + std::to_string(min_p));
    if (model.is_nonlinear() && model.predictor_case != PredictorCase::i)
        throw std::invalid_argument("generate: models IV and V are defined for standard normal predictors only");

    Rng rng(seed);
    const int p = model.p;
    Eigen::MatrixXd X(n, p);
    if (model.predictor_case == PredictorCase::ii) {
        const Eigen::MatrixXd root = ar1_sqrt(p);
        for (int i = 0; i < n; ++i) X.row(i) = (root * rng.normal_vector(p)).transpose();
    } else if (model.predictor_case == PredictorCase::iii) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) X(i, j) = rng.uniform(-1.0, 1.0);
    } else {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < p; ++j) X(i, j) = rng.normal();
    }

    const double noise_sd =
        model.is_nonlinear() ? std::sqrt(options.nonlinear_noise_variance) * options.noise_scale : options.noise_scale;
    Eigen::VectorXd eps(n);
    for (int i = 0; i < n; ++i) eps(i) = noise_sd * rng.normal();

    Eigen::VectorXd y(n);
    Eigen::MatrixXd truth;
    switch (model.id) {
        case ModelId::I:
            for (int i = 0; i < n; ++i) {
                const double x2 = X(i, 1) + 1.5;
                y(i) = X(i, 0) / (0.5 + x2 * x2) + eps(i);
            }
            truth = model.true_basis();
            break;
        case ModelId::II:
            for (int i = 0; i < n; ++i)
                y(i) = 3.0 * std::sin(0.25 * (X(i, 0) + X(i, 1))) + 3.0 * std::sin(0.25 * (X(i, 2) + X(i, 3))) + eps(i);
            truth = model.true_basis();
            break;
        case ModelId::III:
            for (int i = 0; i < n; ++i) y(i) = X(i, 0) + 0.5 * std::exp(0.15 * X(i, 1)) * eps(i);
            truth = model.true_basis();
            break;
        case ModelId::IV: {
            truth.resize(n, 1);
            for (int i = 0; i < n; ++i) {
                const double phi1 = std::sqrt(X(i, 0) * X(i, 0) + X(i, 1) * X(i, 1));
                truth(i, 0) = phi1;
                const double root = std::sqrt(phi1);
                y(i) = (root > 0.0 ? root * std::log(root) : 0.0) + 0.5 * eps(i);
            }
            break;
        }
        case ModelId::V: {
            truth.resize(n, 2);
            for (int i = 0; i < n; ++i) {
                const double phi1 = std::sqrt(X(i, 0) * X(i, 0) + X(i, 1) * X(i, 1));
                const double phi2 = std::sin(X(i, 1));
                truth(i, 0) = phi1;
                truth(i, 1) = phi2;
                y(i) = phi1 * phi1 + 0.5 * phi2 * eps(i);
            }
            break;
        }
    }
    return Generated{Dataset(std::move(X), std::move(y)), std::move(truth)};
}

namespace {

std::string format_lambda(double lambda) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", lambda);
    return buf;
}

struct CellValues {
    std::string method;
    std::string lambda_policy;
    std::vector<double> values;
};

double mean_of(const std::vector<double>& values) {
    double s = 0.0;
    int count = 0;
    for (const double v : values)
        if (std::isfinite(v)) {
            s += v;
            ++count;
        }
    return count > 0 ? s / count : kNaN;
}

MCReport summarize(const SimModel& model, const TableConfig& config, CellValues cell) {
    MCReport report;
    report.model = to_string(model.id);
    report.predictor_case = model.is_nonlinear() ? "i" : to_string(model.predictor_case);
    report.n = config.n;
    report.p = model.p;
    report.method = std::move(cell.method);
    report.lambda_policy = std::move(cell.lambda_policy);
    report.reps = config.reps;
    report.base_seed = config.base_seed;
    report.values = std::move(cell.values);

    int valid = 0;
    double mean = 0.0;
    for (const double v : report.values)
        if (std::isfinite(v)) {
            mean += v;
            ++valid;
        }
    report.failures = report.reps - valid;
    report.aborted = report.failures > 0.05 * report.reps;
    if (report.aborted || valid == 0) {
        report.mean = kNaN;
        report.se = kNaN;
        return report;
    }
    mean /= valid;
    report.mean = mean;
    if (valid >= 2) {
        double ss = 0.0;
        for (const double v : report.values)
            if (std::isfinite(v)) ss += (v - mean) * (v - mean);
        report.se = std::sqrt(ss / (valid - 1)) / std::sqrt(static_cast<double>(valid));
    } else {
        report.se = kNaN;
    }
    return report;
}

} // namespace

std::vector<MCReport> run_table(const TableConfig& config) {
    if (config.models.empty()) throw std::invalid_argument("run_table: no models");
    if (config.methods.empty()) throw std::invalid_argument("run_table: no methods");
    if (config.reps < 1) throw std::invalid_argument("run_table: reps must be >= 1");
    if (config.lambda_grid.empty()) throw std::invalid_argument("run_table: empty lambda grid");

    const LevelGrid grid = config.taus.empty() ? LevelGrid::deciles() : LevelGrid(config.taus);
    std::vector<double> lambdas = config.lambda_grid;
    std::sort(lambdas.begin(), lambdas.end());

    for (const SimModel& model : config.models)
        for (const Method method : config.methods) {
            const bool kernel_method = method == Method::KernelPals || method == Method::DcKernelPals;
            if (model.is_nonlinear() != kernel_method)
                throw std::invalid_argument("run_table: method " + method_name(method) + " does not apply to model " +
                                            to_string(model.id));
        }

    std::vector<MCReport> reports;
    for (const SimModel& model : config.models) {
        const bool want_pals = std::count(config.methods.begin(), config.methods.end(), Method::PALS) > 0;
        const bool want_dc = std::count(config.methods.begin(), config.methods.end(), Method::DcPals) > 0;
        const bool want_kpals = std::count(config.methods.begin(), config.methods.end(), Method::KernelPals) > 0;
        const bool want_kdc = std::count(config.methods.begin(), config.methods.end(), Method::DcKernelPals) > 0;
        const bool want_sir = std::count(config.methods.begin(), config.methods.end(), Method::SIR) > 0;
        const bool want_save = std::count(config.methods.begin(), config.methods.end(), Method::SAVE) > 0;
        const int d = model.true_dim();

        // Primitive cells, filled per repetition.
        std::vector<CellValues> cells;
        auto add_cell = [&](const std::string& method, const std::string& policy) {
            cells.push_back(CellValues{method, policy, std::vector<double>(config.reps, kNaN)});
            return cells.size() - 1;
        };
        std::size_t sir_cell = want_sir ? add_cell("SIR", "") : 0;
        std::size_t save_cell = want_save ? add_cell("SAVE", "") : 0;
        std::vector<std::size_t> pals_cells;
        if (want_pals || want_dc)
            for (const double lambda : lambdas) pals_cells.push_back(add_cell("PALS", "fixed:" + format_lambda(lambda)));
        std::size_t dc_cell = want_dc ? add_cell("DC-PALS", "dc") : 0;
        std::vector<std::size_t> kpals_cells;
        if (want_kpals || want_kdc)
            for (const double lambda : lambdas) kpals_cells.push_back(add_cell("kPALS", "fixed:" + format_lambda(lambda)));
        std::size_t kdc_cell = want_kdc ? add_cell("DC-kPALS", "dc") : 0;

        parallel_for(static_cast<std::size_t>(config.reps), config.jobs, [&](std::size_t rep) {
            const Generated gen = generate(model, config.n, config.base_seed + rep, config.generate);
            if (want_sir) {
                try {
                    cells[sir_cell].values[rep] = delta(gen.truth, fit_sir(gen.data, config.sir_slices, d).basis);
                } catch (const std::exception&) {
                }
            }
            if (want_save) {
                try {
                    cells[save_cell].values[rep] = delta(gen.truth, fit_save(gen.data, config.save_slices, d).basis);
                } catch (const std::exception&) {
                }
            }
            if (want_pals || want_dc) {
                double best_score = 0.0;
                bool have_best = false;
                double dc_value = kNaN;
                for (std::size_t li = 0; li < lambdas.size(); ++li) {
                    try {
                        const PalsResult fit = fit_pals(gen.data, grid, lambdas[li], d);
                        const double value = delta(gen.truth, fit.subspace.basis);
                        cells[pals_cells[li]].values[rep] = value;
                        if (want_dc) {
                            const double score = dcor2(gen.data.Y, gen.data.X * fit.subspace.basis);
                            if (!have_best || score > best_score) {
                                have_best = true;
                                best_score = score;
                                dc_value = value;
                            }
                        }
                    } catch (const std::exception&) {
                    }
                }
                if (want_dc && have_best) cells[dc_cell].values[rep] = dc_value;
            }
            if (want_kpals || want_kdc) {
                try {
                    const int m = std::min(config.n / 2, config.n);
                    const KernelBasis basis =
                        build_basis(gen.data.X, default_bandwidth(model.p), std::max(1, m));
                    double best_score = 0.0;
                    bool have_best = false;
                    double dc_value = kNaN;
                    for (std::size_t li = 0; li < lambdas.size(); ++li) {
                        try {
                            const NonlinearEstimate fit = fit_kernel_pals(gen.data, grid, lambdas[li], d, basis);
                            const Eigen::MatrixXd predicted = fit.predict(gen.data.X);
                            const double value = upsilon(gen.truth, predicted);
                            cells[kpals_cells[li]].values[rep] = value;
                            if (want_kdc) {
                                const double score = dcor2(gen.data.Y, predicted);
                                if (!have_best || score > best_score) {
                                    have_best = true;
                                    best_score = score;
                                    dc_value = value;
                                }
                            }
                        } catch (const std::exception&) {
                        }
                    }
                    if (want_kdc && have_best) cells[kdc_cell].values[rep] = dc_value;
                } catch (const std::exception&) {
                }
            }
        });

        const std::size_t first_report = reports.size();
        for (CellValues& cell : cells) reports.push_back(summarize(model, config, std::move(cell)));

        // Per-cell best fixed lambda: lowest mean distance for linear models,
        // highest mean correlation for nonlinear ones.
        auto append_best = [&](const std::vector<std::size_t>& cell_ids, const std::string& method, bool larger_better) {
            if (cell_ids.empty()) return;
            const MCReport* best = nullptr;
            for (const std::size_t id : cell_ids) {
                const MCReport& candidate = reports[first_report + id];
                if (!std::isfinite(candidate.mean)) continue;
                if (best == nullptr || (larger_better ? candidate.mean > best->mean : candidate.mean < best->mean))
                    best = &candidate;
            }
            if (best == nullptr) return;
            MCReport copy = *best;
            copy.method = method;
            copy.lambda_policy = "best:" + copy.lambda_policy.substr(std::string("fixed:").size());
            reports.push_back(std::move(copy));
        };
        if (want_pals) append_best(pals_cells, "PALS", false);
        if (want_kpals) append_best(kpals_cells, "kPALS", true);
        // Per-lambda cells computed only to drive the dc selection are
        // internal; drop them unless the fixed-lambda method was requested.
        if (!want_pals && want_dc)
            reports.erase(reports.begin() + static_cast<std::ptrdiff_t>(first_report + pals_cells.front()),
                          reports.begin() + static_cast<std::ptrdiff_t>(first_report + pals_cells.back() + 1));
        if (!want_kpals && want_kdc)
            reports.erase(reports.begin() + static_cast<std::ptrdiff_t>(first_report + kpals_cells.front()),
                          reports.begin() + static_cast<std::ptrdiff_t>(first_report + kpals_cells.back() + 1));
    }
    return reports;
}

namespace {

std::string format_value(double v) {
    if (!std::isfinite(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

} // namespace

void write_reports_csv(const std::vector<MCReport>& reports, std::ostream& out,
                       const std::optional<std::string>& timestamp) {
    out << "# schema=pals.table.v1\n";
    if (timestamp) out << "# generated_at=" << *timestamp << "\n";
    out << "model,case,n,p,method,lambda_policy,reps,mean,se,failures\n";
    for (const MCReport& r : reports) {
        out << r.model << ',' << r.predictor_case << ',' << r.n << ',' << r.p << ',' << r.method << ','
            << r.lambda_policy << ',' << r.reps << ',' << format_value(r.mean) << ',' << format_value(r.se) << ','
            << r.failures << '\n';
    }
}

nlohmann::json reports_to_json(const std::vector<MCReport>& reports, const std::optional<std::string>& timestamp) {
    nlohmann::json doc;
    doc["schema"] = "pals.table.v1";
    if (timestamp) doc["generated_at"] = *timestamp;
    doc["reports"] = nlohmann::json::array();
    for (const MCReport& r : reports) {
        nlohmann::json row;
        row["model"] = r.model;
        row["case"] = r.predictor_case;
        row["n"] = r.n;
        row["p"] = r.p;
        row["method"] = r.method;
        row["lambda_policy"] = r.lambda_policy;
        row["reps"] = r.reps;
        row["mean"] = std::isfinite(r.mean) ? nlohmann::json(r.mean) : nlohmann::json();
        row["se"] = std::isfinite(r.se) ? nlohmann::json(r.se) : nlohmann::json();
        row["failures"] = r.failures;
        row["aborted"] = r.aborted;
        row["base_seed"] = r.base_seed;
        row["values"] = nlohmann::json::array();
        for (const double v : r.values) row["values"].push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json());
        doc["reports"].push_back(std::move(row));
    }
    return doc;
}

ConsistencyReport consistency_diagnostic(const ConsistencyConfig& config) {
    if (config.n_list.size() < 2) throw std::invalid_argument("consistency_diagnostic: need at least two sample sizes");
    if (!std::is_sorted(config.n_list.begin(), config.n_list.end()))
        throw std::invalid_argument("consistency_diagnostic: n_list must be increasing");
    if (config.reps < 2) throw std::invalid_argument("consistency_diagnostic: need reps >= 2");
    if (config.model.is_nonlinear())
        throw std::invalid_argument("consistency_diagnostic: defined for the linear models");

    const LevelGrid grid = LevelGrid::deciles();
    ConsistencyReport report;
    report.n_list = config.n_list;
    report.low_confidence = config.reps < 10;

    std::vector<double> functional;
    for (std::size_t ni = 0; ni < config.n_list.size(); ++ni) {
        const int n = config.n_list[ni];
        const bool largest = ni + 1 == config.n_list.size();
        const int reps = largest ? std::max(config.reps, config.moment_reps) : config.reps;
        std::vector<double> deltas(static_cast<std::size_t>(reps), kNaN);
        std::vector<double> sums(static_cast<std::size_t>(reps), kNaN);
        parallel_for(static_cast<std::size_t>(reps), config.jobs, [&](std::size_t rep) {
            const Generated gen = generate(config.model, n, config.base_seed + rep);
            const PalsResult fit = fit_pals(gen.data, grid, config.lambda, config.d);
            deltas[rep] = delta(gen.truth, fit.subspace.basis);
            sums[rep] = fit.candidate.lambda_matrix.sum();
        });
        deltas.resize(static_cast<std::size_t>(config.reps));
        report.mean_delta.push_back(mean_of(deltas));
        if (largest) {
            sums.resize(static_cast<std::size_t>(std::max(config.reps, config.moment_reps)));
            functional = std::move(sums);
        }
    }

    // Log-log least squares slope of mean distance against sample size.
    {
        const auto k = static_cast<double>(config.n_list.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < config.n_list.size(); ++i) {
            const double x = std::log(static_cast<double>(config.n_list[i]));
            const double y = std::log(report.mean_delta[i]);
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        report.slope = (k * sxy - sx * sy) / (k * sxx - sx * sx);
    }

    {
        const auto m = static_cast<double>(functional.size());
        double mean = 0.0;
        for (const double v : functional) mean += v;
        mean /= m;
        double m2 = 0, m3 = 0, m4 = 0;
        for (const double v : functional) {
            const double c = v - mean;
            m2 += c * c;
            m3 += c * c * c;
            m4 += c * c * c * c;
        }
        m2 /= m;
        m3 /= m;
        m4 /= m;
        report.skewness = m3 / std::pow(m2, 1.5);
        report.excess_kurtosis = m4 / (m2 * m2) - 3.0;
        if (m < 10) report.low_confidence = true;
    }
    return report;
}

} // namespace pals
