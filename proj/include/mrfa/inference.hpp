#pragma once

#include <Eigen/Core>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mrfa/model.hpp"

namespace mrfa {

struct DegeneratePointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct IllConditionedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// How the nuisance projection w is estimated.
struct WOptions {
    enum class Variant { Ridge, Lasso };
    Variant variant = Variant::Ridge;
    double ridge_eta = -1.0;     // <0: 1e-6 * trace(QtQ)/dim
    double lasso_lambda = -1.0;  // <0: small CV grid with 0.1*lambda_max fallback
    int lasso_max_sweeps = 20000;
    double lasso_tol = 1e-12;
};

/// Everything interval_at needs at one prediction point: the pivoted
/// reparameterization, the fitted projection w, and the score pieces.
struct ScoreContext {
    int n = 0;
    int p = 0;
    int pivot = 0;
    Eigen::VectorXd phi_star;
    Eigen::VectorXd ztilde;  // phi_{i,pivot} / phi*_pivot
    Eigen::VectorXd w;       // length p-1
    double sigma2 = 1.0;
    double shat = 0.0;  // S(0, eta_{-1})
    double b = 0.0;     // (1/(n sigma^2)) sum Ztilde (Ztilde - w'Qtilde)
    std::string variant = "ridge-w";
};

struct Interval {
    double lower = 0.0;
    double upper = 0.0;
    double alpha = 0.05;
    double sigma2 = 0.0;
    std::string variant;
    double width() const { return upper - lower; }
};

/// Standard normal quantile (Wichura's AS241, double precision).
double normal_quantile(double p);

/// w from the ridge normal equations (sum QQ' + eta I) w = sum Q Ztilde.
Eigen::VectorXd estimate_w_ridge(const Eigen::MatrixXd& qtilde, const Eigen::VectorXd& ztilde,
                                 double eta);

/// w minimizing ||(1/n) sum Qtilde (Ztilde - w'Qtilde)||_2^2 + lambda2 ||w||_1
/// by coordinate descent.
Eigen::VectorXd estimate_w_lasso(const Eigen::MatrixXd& qtilde, const Eigen::VectorXd& ztilde,
                                 double lambda2, int max_sweeps = 20000, double tol = 1e-12);

/// Build the score context from explicit design/coefficients: columns of Phi
/// are the p basis evaluations over n rows, beta_hat the fitted coefficients,
/// phi_star the basis vector at the prediction point.
ScoreContext build_context(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& phi_star,
                           double sigma2, const WOptions& wopts = {});

/// Score-inverted confidence interval [c_{a/2}/b, c_{1-a/2}/b].
Interval interval_at(const ScoreContext& context, double alpha);

/// Interval score S_alpha(l, u; x).
double interval_score(double lower, double upper, double x, double alpha);

/// Reusable confidence-interval machinery for one fitted model + training
/// data: caches the candidate-basis design and its moments so per-point work
/// stays O(n p) plus one symmetric solve.
class CiEngine {
public:
    CiEngine(const FittedModel& model, const Eigen::MatrixXd& X_orig, const Eigen::VectorXd& y,
             WOptions wopts = {}, std::optional<double> sigma2_override = std::nullopt);

    ScoreContext context(const Eigen::VectorXd& x_star_orig) const;
    Interval interval(const Eigen::VectorXd& x_star_orig, double alpha) const;

    double sigma2() const { return sigma2_; }
    int basis_size() const { return p_; }

private:
    friend struct CiEngineAccess;
    const FittedModel* model_;
    WOptions wopts_;
    int n_ = 0, p_ = 0;  // p_ includes the constant column (last)
    std::vector<BasisAtom> atoms_;
    std::vector<int> atom_offset_of_group_;  // first column of each candidate group
    std::vector<SparseColumn> cols_;         // training design, no constant column
    Eigen::VectorXd y_;
    Eigen::VectorXd beta_aug_;  // atom coefficients then intercept
    Eigen::MatrixXd S_;         // Phi' Phi including constant column
    Eigen::VectorXd q_;         // Phi' y
    double sigma2_ = 1.0;

    Eigen::VectorXd phi_star_at(const Eigen::VectorXd& x01) const;
    ScoreContext context_from_phi(const Eigen::VectorXd& phi_star) const;
};

struct ApleyResult {
    double sigma2 = 0.0;
    double fold_coverage = 0.0;  // achieved K-fold coverage at the chosen sigma^2
    bool flat_objective = false;
    int usable_points = 0;
};

/// Post-hoc sigma^2 for the deterministic case: searches log sigma^2 for the
/// value whose K-fold out-of-fold interval coverage is closest to 1 - alpha
/// (ties toward smaller sigma^2).
ApleyResult apley_sigma2(const Eigen::MatrixXd& X_orig, const Eigen::VectorXd& y,
                         const FitConfig& config, double alpha, int K,
                         const WOptions& wopts = {});

}  // namespace mrfa
