#ifndef PALS_SIMLAB_HPP
#define PALS_SIMLAB_HPP

#include "pals/dataset.hpp"

#include <Eigen/Dense>

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace pals {

enum class ModelId { I, II, III, IV, V };
enum class PredictorCase { i, ii, iii };

std::string to_string(ModelId id);
std::string to_string(PredictorCase c);
ModelId model_from_string(const std::string& s);
PredictorCase case_from_string(const std::string& s);

// One simulation scenario: response model, predictor dimension and, for the
// linear models, the predictor distribution.
struct SimModel {
    ModelId id = ModelId::I;
    int p = 10;
    PredictorCase predictor_case = PredictorCase::ii;

    bool is_nonlinear() const { return id == ModelId::IV || id == ModelId::V; }
    int true_dim() const;
    // Basis of the true linear reduction (linear models only).
    Eigen::MatrixXd true_basis() const;
};

struct GenerateOptions {
    double noise_scale = 1.0;
    // Variance of the nonlinear-model noise; override point for reading the
    // stated N(0, 0.2) as a standard deviation instead.
    double nonlinear_noise_variance = 0.2;
};

struct Generated {
    Dataset data;
    // Linear models: p x d true basis. Nonlinear models: n x d true
    // predictor values at the drawn points.
    Eigen::MatrixXd truth;
};

// Deterministic draw: the same (model, n, seed) always yields bit-identical
// output on any worker count.
Generated generate(const SimModel& model, int n, std::uint64_t seed, const GenerateOptions& options = {});

enum class Method { SIR, SAVE, PALS, DcPals, KernelPals, DcKernelPals };
std::string method_name(Method m);
Method method_from_string(const std::string& s);

// One table cell: per-repetition metric values and their summary.
struct MCReport {
    std::string model;
    std::string predictor_case;
    int n = 0;
    int p = 0;
    std::string method;
    std::string lambda_policy; // "", "fixed:<l>", "best:<l>", "dc"
    int reps = 0;
    std::vector<double> values; // by repetition index; NaN marks a failure
    double mean = 0.0;
    double se = 0.0; // NaN when reps < 2 or the cell aborted
    int failures = 0;
    bool aborted = false; // more than 5% of repetitions failed
    std::uint64_t base_seed = 0;
};

struct TableConfig {
    std::vector<SimModel> models;
    std::vector<Method> methods;
    int n = 100;
    int reps = 100;
    std::vector<double> lambda_grid{0.1, 1.0, 10.0, 100.0};
    std::vector<double> taus; // empty selects the decile grid
    std::uint64_t base_seed = 2024;
    int jobs = 1;
    int sir_slices = 10;
    int save_slices = 4;
    GenerateOptions generate;
};

// Paired Monte Carlo: every method inside a repetition consumes the same
// dataset (seed = base_seed + repetition index). Linear models score the
// projection distance against the true basis, nonlinear models the squared
// distance correlation against the true predictor values.
std::vector<MCReport> run_table(const TableConfig& config);

// Serialization of the table schema:
// model,case,n,p,method,lambda_policy,reps,mean,se,failures
void write_reports_csv(const std::vector<MCReport>& reports, std::ostream& out,
                       const std::optional<std::string>& timestamp = std::nullopt);
nlohmann::json reports_to_json(const std::vector<MCReport>& reports,
                               const std::optional<std::string>& timestamp = std::nullopt);

struct ConsistencyConfig {
    SimModel model;
    std::vector<int> n_list{200, 800, 3200};
    int reps = 100;
    int moment_reps = 200; // repetitions for the shape diagnostics at the largest n
    double lambda = 1.0;
    int d = 2;
    std::uint64_t base_seed = 2024;
    int jobs = 1;
};

// Empirical rate/shape diagnostics: mean projection distance per sample
// size with its log-log slope, plus skewness and excess kurtosis of a fixed
// linear functional (the entry sum) of the accumulated candidate matrix at
// the largest n.
struct ConsistencyReport {
    std::vector<int> n_list;
    std::vector<double> mean_delta;
    double slope = 0.0;
    double skewness = 0.0;
    double excess_kurtosis = 0.0;
    bool low_confidence = false; // too few repetitions to trust the shape numbers
};

ConsistencyReport consistency_diagnostic(const ConsistencyConfig& config);

} // namespace pals

#endif
