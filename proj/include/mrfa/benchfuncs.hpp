#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mrfa/model.hpp"

namespace mrfa {

/// Closed-form test function with declared input ranges and an optional
/// replicate-noise level.
struct TestFunction {
    std::string name;
    int d = 0;
    std::vector<std::pair<double, double>> ranges;  // original units
    double noise_sigma = 0.0;
    std::function<double(const double*)> eval;
};

const std::vector<std::string>& test_function_names();
const TestFunction& test_function(const std::string& name);  // throws on unknown name

/// Exact closed-form value; sets *out_of_range when any coordinate violates
/// the declared range (the value is still returned).
double eval_function(const std::string& name, const std::vector<double>& x,
                     bool* out_of_range = nullptr);

/// iid uniform rows over the given ranges, reproducible from the seed. With
/// replicate > 1, generates n/replicate unique rows and repeats each one
/// `replicate` times consecutively (n must divide evenly).
Eigen::MatrixXd generate_design(int n, const std::vector<std::pair<double, double>>& ranges,
                                std::uint64_t seed, int replicate = 1);

struct BenchConfig {
    FitConfig fit;
    int pad_dim = -1;  // pad with U[0,1] inert inputs up to this dimension
    bool with_ci = false;
    double alpha = 0.05;
    int ci_points = 200;  // CI metrics evaluated on this many test points
    std::string ci_variant = "ridge";
};

struct BenchResult {
    std::string name;
    int n = 0;
    int n_test = 0;
    int d = 0;
    std::uint64_t seed = 0;
    double fit_seconds = 0.0;
    double predict_seconds = 0.0;
    double rmse = std::numeric_limits<double>::quiet_NaN();
    bool variable_detection = false;  // additive10: active effects within {1,2,3}
    std::optional<double> coverage_percent;
    std::optional<double> avg_width;
    std::optional<double> avg_interval_score;
    double lambda = 0.0;
    std::string criterion;
    std::vector<std::string> active_effects;
};

/// End-to-end benchmark: design -> fit -> select -> fresh-test metrics.
/// n_test = 0 yields a fit-only result with no metrics.
BenchResult run_benchmark(const std::string& name, int n, int n_test, std::uint64_t seed,
                          const BenchConfig& config);

/// (coverage %, average width, average interval score) over paired
/// intervals/truths.
struct CoverageMetrics {
    double coverage_percent = 0.0;
    double avg_width = 0.0;
    double avg_score = 0.0;
};
CoverageMetrics coverage_metrics(const std::vector<std::pair<double, double>>& intervals,
                                 const std::vector<double>& truths, double alpha);

std::string bench_csv_header();
std::string bench_csv_row(const BenchResult& r);

}  // namespace mrfa
