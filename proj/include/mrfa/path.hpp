#pragma once

#include <Eigen/Core>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mrfa/heredity.hpp"
#include "mrfa/kernels.hpp"
#include "mrfa/solver.hpp"

namespace mrfa {

struct PathConfig {
    int d_max = 10;
    int r_max = 10;
    double rho = 0.96;               // geometric lambda decrease
    double lambda_min_ratio = 1e-4;  // stop at lambda < ratio * lambda_max
    int max_terms = -1;              // unique nonzero coefficients; -1 disables the bound
    int rss_window = 5;
    double rss_tol = 1e-6;           // relative improvement over the window
    std::int64_t atom_cap = 100000;  // per (u, r)
    std::int64_t max_columns = 50000;
    double whiten_tol = 1e-5;            // relative rank-truncation threshold
    std::int64_t whiten_rank_cap = 768;  // per-group orthonormal basis cap
    BasisSchedule schedule;
    SolverOptions solver;
};

/// One step of the regularization path.
struct PathPoint {
    double lambda = 0.0;
    double intercept = 0.0;
    std::map<int, Eigen::VectorXd> nonzero_blocks;  // group index -> duplicated block
    Eigen::VectorXd beta;                           // collapsed coefficients
    EffectSet active;                               // ancestor closure of block-active groups
    EffectSet block_active;                         // groups with a nonzero block
    double rss = 0.0;
    int nnz_unique = 0;  // s
    int sweeps = 0;
    double kkt = 0.0;
    bool stable = true;
};

struct PathResult {
    std::vector<PathPoint> points;
    std::vector<EffectResolution> group_order;  // candidates in insertion order
    std::vector<CoefGroup> groups;              // realized member columns + weight N
    std::vector<BasisAtom> atoms;               // global column registry
    std::vector<SparseColumn> columns;          // training design over atoms
    GroupStructure structure;
    BasisSchedule schedule;
    double lambda_max = 0.0;
    EffectResolution lambda_max_group;  // attains the zero-solution KKT bound
    std::string stop_reason;
    int n = 0;
    int d = 0;

    /// Index of the last stable point (deterministic-case selection).
    int last_stable() const;
};

/// Decreasing-lambda path with heredity-driven candidate expansion over
/// inputs already scaled to [0,1]^d. Deterministic for fixed inputs.
PathResult solve_path(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y,
                      const PathConfig& config);

/// Same driver over an explicit decreasing lambda grid (used by CV folds so
/// scores stay comparable across folds).
PathResult solve_path_grid(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y,
                           const PathConfig& config, const std::vector<double>& lambdas);

}  // namespace mrfa
