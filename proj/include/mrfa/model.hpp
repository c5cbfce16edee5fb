#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrfa/path.hpp"

namespace mrfa {

/// Per-column affine map of training inputs onto [0,1]^d.
struct ScalingRecord {
    Eigen::VectorXd lo, hi;

    static ScalingRecord from_data(const Eigen::MatrixXd& X);
    static ScalingRecord from_ranges(const std::vector<std::pair<double, double>>& ranges);

    Eigen::MatrixXd to_unit(const Eigen::MatrixXd& X) const;
    int dim() const { return static_cast<int>(lo.size()); }
};

/// One basis term with a nonzero coefficient.
struct ModelTerm {
    EffectResolution er;
    int atom_index = 0;  // lexicographic index within the (u, r) grid
    std::vector<double> center;
    double bandwidth = 0.75;
    double coef = 0.0;
};

struct PredictResult {
    Eigen::VectorXd y;
    std::vector<bool> extrapolated;  // row outside the training box
};

/// Immutable fitted emulator: selected path point plus everything needed to
/// predict and to rebuild the candidate basis for score-based intervals.
struct FittedModel {
    int schema_version = 1;
    int d = 0;
    ScalingRecord scaling;
    BasisSchedule schedule;
    double intercept = 0.0;
    std::vector<ModelTerm> terms;
    std::vector<EffectResolution> candidates;  // final candidate groups
    double lambda = 0.0;
    double rss = 0.0;
    int n = 0;
    int s = 0;
    std::optional<double> sigma2;
    std::string criterion = "deterministic";
    std::vector<std::string> column_names;  // empty => x1..xd
    std::string response_name = "y";

    PredictResult predict(const Eigen::MatrixXd& X_orig, int threads = 1) const;
};

enum class Criterion { Deterministic, Aic, Bic, Cv };

std::string criterion_name(Criterion c, int cv_folds);

struct SelectionReport {
    std::string criterion;
    struct Row {
        double lambda = 0.0;
        double rss = 0.0;
        int s = 0;
        double score = 0.0;
    };
    std::vector<Row> rows;
    int chosen = -1;
    bool perfect_fit = false;
};

/// AIC: n log(RSS/n) + 2s.  BIC: n log(RSS/n) + s log n.  Ties break toward
/// larger lambda; RSS = 0 scores -inf and flags perfect_fit.
SelectionReport information_criterion(const PathResult& path, Criterion kind, int n);

/// Deterministic fold ids for rows 0..n-1; pure function of (n, K, seed).
std::vector<int> fold_assignment(int n, int K, std::uint64_t seed);

/// Fold ids where bit-identical rows (replicated design locations) share a
/// fold, so held-out locations are genuinely unseen by the fold fit.
std::vector<int> fold_assignment_grouped(const Eigen::MatrixXd& X, int K, std::uint64_t seed);

/// K-fold CV over the full-data path's lambda grid; score is mean squared
/// held-out error. Folds may run on up to `threads` threads.
SelectionReport cross_validate(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y,
                               const PathConfig& config, const PathResult& full_path, int K,
                               std::uint64_t seed, int threads = 1);

double sigma2_residual(double rss, int n, int s);

/// min over lambda of the K-fold mean squared held-out error.
double sigma2_cv(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y, const PathConfig& config,
                 const PathResult& full_path, int K, std::uint64_t seed, int threads = 1);

struct FitConfig {
    PathConfig path;
    Criterion criterion = Criterion::Deterministic;
    int cv_folds = 10;
    std::uint64_t seed = 0;
    int threads = 1;
};

struct FitResult {
    FittedModel model;
    PathResult path;
    SelectionReport selection;
};

/// End-to-end fit on inputs in original units: scale, run the path, select a
/// point, attach sigma^2 (residual estimator when defined).
FitResult fit_model(const Eigen::MatrixXd& X_orig, const Eigen::VectorXd& y,
                    const FitConfig& config,
                    const std::optional<ScalingRecord>& declared_scaling = std::nullopt);

/// Build a FittedModel from one path point.
FittedModel make_model(const PathResult& path, int point_index, const ScalingRecord& scaling,
                       const std::string& criterion);

struct ModelIoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ModelSchemaError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ModelVersionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void save_model(const FittedModel& model, const std::string& file);
FittedModel load_model(const std::string& file);
std::string model_to_json(const FittedModel& model);
FittedModel model_from_json(const std::string& text);

}  // namespace mrfa
