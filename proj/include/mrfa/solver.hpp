#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrfa/kernels.hpp"

namespace mrfa {

/// One penalty group of the duplicated-coefficient problem: the member
/// columns (unique coefficient ids) and the integer weight N entering the
/// penalty as lambda * sqrt(N) * ||block||_2. `weight` may exceed
/// cols.size() when all-zero columns were dropped from the block.
struct CoefGroup {
    std::vector<int> cols;
    std::int64_t weight = 0;
};

/// Shared, lambda-independent view of one least-squares group-lasso problem
/// with loss (1/2n)||y - intercept - Phi * collapse(beta_z)||^2.
struct GroupProblem {
    const std::vector<SparseColumn>* columns = nullptr;  // unique columns, n rows
    Eigen::VectorXd y;
    std::vector<CoefGroup> groups;
    bool fit_intercept = true;
};

struct SolverOptions {
    double kkt_tol = 1e-4;      // scaled by sd(y) internally
    double obj_tol = 1e-7;      // relative objective change per inner pass
    int max_sweeps = 10000;
    int inner_per_outer = 10;   // active-set passes between full sweeps
};

/// Per-group duplicated coefficient blocks; the estimator is the slot sum.
struct DuplicatedCoefficients {
    std::vector<Eigen::VectorXd> blocks;  // blocks[j].size() == groups[j].cols.size()

    static DuplicatedCoefficients zeros(const std::vector<CoefGroup>& groups);
    /// beta_hat[k] = sum of all replicate slots of coefficient k.
    Eigen::VectorXd collapse(const std::vector<CoefGroup>& groups, int p) const;
};

struct FitDiagnostics {
    int sweeps = 0;
    double kkt_residual = 0.0;
    double objective = 0.0;
    double max_objective_increase = 0.0;  // largest uphill step seen (roundoff scale)
    bool converged = false;
};

struct SolverError : std::runtime_error {
    double kkt_residual = 0.0;
    SolverError(const std::string& msg, double residual)
        : std::runtime_error(msg), kkt_residual(residual) {}
};

/// Smallest lambda at which the all-zero solution satisfies the KKT
/// conditions: max over groups of ||Phi_g^T y_c||_2 / (n sqrt(N_g)), with
/// y_c the intercept-centered response.
double lambda_max(const GroupProblem& problem);

/// Eq.-(3.1) objective in duplicated form at the given point.
double objective_value(const GroupProblem& problem, const DuplicatedCoefficients& beta_z,
                       double lambda, double intercept);

/// Max KKT violation over groups: active blocks check stationarity in the
/// infinity norm, inactive blocks the subgradient bound.
double kkt_residual(const GroupProblem& problem, const DuplicatedCoefficients& beta_z,
                    double lambda, double intercept);

/// Block coordinate descent with per-block majorization; monotone in the
/// objective, warm-startable, deterministic. Throws SolverError carrying the
/// achieved residual when max_sweeps is exhausted.
DuplicatedCoefficients fit_at_lambda(const GroupProblem& problem, double lambda,
                                     DuplicatedCoefficients warm, double& intercept,
                                     FitDiagnostics* diag = nullptr,
                                     const SolverOptions& options = {});

}  // namespace mrfa
