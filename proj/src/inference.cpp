#include "mrfa/inference.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>

#include "mrfa/rng.hpp"

namespace mrfa {

double normal_quantile(double p) {
    // Wichura (1988), algorithm AS 241, PPND16.
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("normal_quantile: p outside (0,1)");
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                     6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
                   1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
                 1.3314166789178437745e2) * r + 3.3871328727963666080e0) /
               (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                     3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
                   5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
                 4.2313330701600911252e1) * r + 1.0);
    }
    r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double v;
    if (r <= 5.0) {
        r -= 1.6;
        v = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                  2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
              4.63033784615654529590e0) * r + 1.42343711074968357734e0) /
            (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                  1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
              2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        v = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                  1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
              5.46378491116411436990e0) * r + 6.65790464350110377720e0) /
            (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                  1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
              5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -v : v;
}

Eigen::VectorXd estimate_w_ridge(const Eigen::MatrixXd& qtilde, const Eigen::VectorXd& ztilde,
                                 double eta) {
    if (qtilde.cols() == 0) return Eigen::VectorXd();
    Eigen::MatrixXd G = qtilde.transpose() * qtilde;
    const Eigen::VectorXd rhs = qtilde.transpose() * ztilde;
    if (eta < 0.0) eta = 1e-6 * G.trace() / static_cast<double>(G.rows());
    if (eta <= 0.0) throw std::invalid_argument("estimate_w_ridge: eta must be positive");
    G.diagonal().array() += eta;
    return Eigen::LDLT<Eigen::MatrixXd>(G).solve(rhs);
}

namespace {

// Shared coordinate-descent core for || v - M w ||_2^2 + lambda2 ||w||_1.
Eigen::VectorXd lasso_cd(const Eigen::MatrixXd& M, const Eigen::VectorXd& v, double lambda2,
                         int max_sweeps, double tol) {
    const int q = static_cast<int>(M.cols());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(q);
    if (q == 0) return w;
    Eigen::VectorXd col_ss(q);
    for (int j = 0; j < q; ++j) col_ss[j] = M.col(j).squaredNorm();
    Eigen::VectorXd resid = v;  // v - M w
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_delta = 0.0;
        for (int j = 0; j < q; ++j) {
            if (col_ss[j] <= 0.0) continue;
            const double rho = M.col(j).dot(resid) + col_ss[j] * w[j];
            const double thr = lambda2 / 2.0;
            double wj = 0.0;
            if (rho > thr)
                wj = (rho - thr) / col_ss[j];
            else if (rho < -thr)
                wj = (rho + thr) / col_ss[j];
            const double delta = wj - w[j];
            if (delta != 0.0) {
                resid -= delta * M.col(j);
                w[j] = wj;
                max_delta = std::max(max_delta, std::abs(delta));
            }
        }
        if (max_delta <= tol) return w;
    }
    throw IllConditionedError("estimate_w_lasso: coordinate descent did not converge");
}

double lasso_lambda_max(const Eigen::MatrixXd& M, const Eigen::VectorXd& v) {
    return 2.0 * (M.transpose() * v).cwiseAbs().maxCoeff();
}

// Small row-wise CV over the (M, v) regression to pick lambda''.
double pick_lasso_lambda(const Eigen::MatrixXd& M, const Eigen::VectorXd& v, int max_sweeps,
                         double tol) {
    const int q = static_cast<int>(M.rows());
    const double lmax = lasso_lambda_max(M, v);
    if (lmax <= 0.0 || q < 10) return 0.1 * std::max(lmax, 1e-300);
    const std::vector<double> grid = {3e-3 * lmax, 1e-2 * lmax, 3e-2 * lmax,
                                      1e-1 * lmax, 3e-1 * lmax};
    const int K = 5;
    Rng rng(0x5eedULL);
    const std::vector<int> perm = rng.permutation(q);
    double best_sse = std::numeric_limits<double>::infinity();
    double best_lambda = 0.1 * lmax;
    for (const double lam : grid) {
        double sse = 0.0;
        for (int k = 0; k < K; ++k) {
            std::vector<int> tr, te;
            for (int t = 0; t < q; ++t) (t % K == k ? te : tr).push_back(perm[static_cast<size_t>(t)]);
            Eigen::MatrixXd Mtr(tr.size(), M.cols()), Mte(te.size(), M.cols());
            Eigen::VectorXd vtr(tr.size()), vte(te.size());
            for (size_t i = 0; i < tr.size(); ++i) {
                Mtr.row(static_cast<Eigen::Index>(i)) = M.row(tr[i]);
                vtr[static_cast<Eigen::Index>(i)] = v[tr[i]];
            }
            for (size_t i = 0; i < te.size(); ++i) {
                Mte.row(static_cast<Eigen::Index>(i)) = M.row(te[i]);
                vte[static_cast<Eigen::Index>(i)] = v[te[i]];
            }
            const Eigen::VectorXd w = lasso_cd(Mtr, vtr, lam * tr.size() / q, max_sweeps, tol);
            sse += (vte - Mte * w).squaredNorm();
        }
        if (sse < best_sse - 1e-15 * std::max(1.0, best_sse)) {
            best_sse = sse;
            best_lambda = lam;
        }
    }
    return best_lambda;
}

}  // namespace

Eigen::VectorXd estimate_w_lasso(const Eigen::MatrixXd& qtilde, const Eigen::VectorXd& ztilde,
                                 double lambda2, int max_sweeps, double tol) {
    if (qtilde.cols() == 0) return Eigen::VectorXd();
    const double n = static_cast<double>(qtilde.rows());
    const Eigen::MatrixXd M = (qtilde.transpose() * qtilde) / n;
    const Eigen::VectorXd v = (qtilde.transpose() * ztilde) / n;
    return lasso_cd(M, v, lambda2, max_sweeps, tol);
}

namespace {

struct Moments {
    const std::vector<SparseColumn>* cols = nullptr;  // p-1 real columns; constant handled apart
    bool constant_last = false;
    int n = 0, p = 0;
    const Eigen::MatrixXd* S = nullptr;
    const Eigen::VectorXd* q = nullptr;
    const Eigen::VectorXd* y = nullptr;
    const Eigen::VectorXd* beta = nullptr;

    Eigen::VectorXd dense_column(int j) const {
        Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
        if (constant_last && j == p - 1)
            out.setOnes();
        else
            (*cols)[static_cast<size_t>(j)].axpy(1.0, out);
        return out;
    }
    void axpy_column(int j, double a, Eigen::VectorXd& target) const {
        if (constant_last && j == p - 1)
            target.array() += a;
        else
            (*cols)[static_cast<size_t>(j)].axpy(a, target);
    }
};

ScoreContext context_from_moments(const Moments& mom, const Eigen::VectorXd& phi_star,
                                  double sigma2, const WOptions& wopts) {
    const int n = mom.n;
    const int p = mom.p;
    if (phi_star.size() != p)
        throw std::invalid_argument("build_context: phi_star has wrong length");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("build_context: sigma2 must be positive");

    int pivot = 0;
    double best = -1.0;
    for (int j = 0; j < p; ++j)
        if (std::abs(phi_star[j]) > best) {
            best = std::abs(phi_star[j]);
            pivot = j;
        }
    if (!(best > 0.0))
        throw DegeneratePointError(
            "build_context: phi* is identically zero at this point (outside every atom support); "
            "only an intercept-only interval is meaningful here");

    const double c = phi_star[pivot];
    const Eigen::MatrixXd& S = *mom.S;
    const Eigen::VectorXd& q = *mom.q;

    // Drop the pivot index to form the nuisance block.
    const int m = p - 1;
    std::vector<int> keep;
    keep.reserve(static_cast<size_t>(m));
    for (int j = 0; j < p; ++j)
        if (j != pivot) keep.push_back(j);

    Eigen::VectorXd phi_rest(m), a(m), qr(m), beta_rest(m);
    for (int j = 0; j < m; ++j) {
        phi_rest[j] = phi_star[keep[static_cast<size_t>(j)]];
        a[j] = S(keep[static_cast<size_t>(j)], pivot) / c;
        qr[j] = q[keep[static_cast<size_t>(j)]];
        beta_rest[j] = (*mom.beta)[keep[static_cast<size_t>(j)]];
    }
    const double z2 = S(pivot, pivot) / (c * c);  // ||Ztilde||^2

    // G = Qt'Qt and rhs = Qt'Zt assembled from the cached moments.
    Eigen::MatrixXd G(m, m);
    for (int j = 0; j < m; ++j)
        for (int i = 0; i < m; ++i)
            G(i, j) = S(keep[static_cast<size_t>(i)], keep[static_cast<size_t>(j)]) -
                      a[i] * phi_rest[j] - phi_rest[i] * a[j] + z2 * phi_rest[i] * phi_rest[j];
    const Eigen::VectorXd rhs = a - z2 * phi_rest;

    ScoreContext ctx;
    ctx.n = n;
    ctx.p = p;
    ctx.pivot = pivot;
    ctx.phi_star = phi_star;
    ctx.sigma2 = sigma2;

    if (wopts.variant == WOptions::Variant::Ridge) {
        double eta = wopts.ridge_eta;
        if (eta < 0.0) eta = 1e-6 * G.trace() / std::max(1, m);
        if (m > 0) {
            Eigen::MatrixXd Gr = G;
            Gr.diagonal().array() += std::max(eta, 1e-300);
            ctx.w = Eigen::LDLT<Eigen::MatrixXd>(Gr).solve(rhs);
        }
        ctx.variant = "ridge-w";
    } else {
        const Eigen::MatrixXd M = G / n;
        const Eigen::VectorXd v = rhs / n;
        double lam = wopts.lasso_lambda;
        if (lam < 0.0) lam = pick_lasso_lambda(M, v, wopts.lasso_max_sweeps, wopts.lasso_tol);
        ctx.w = lasso_cd(M, v, lam, wopts.lasso_max_sweeps, wopts.lasso_tol);
        ctx.variant = "lasso-w";
    }

    // Ztilde and the two projected n-vectors.
    Eigen::VectorXd zt = mom.dense_column(pivot) / c;
    ctx.ztilde = zt;
    const double w_dot_phi = (m > 0) ? ctx.w.dot(phi_rest) : 0.0;
    Eigen::VectorXd r = zt * (1.0 + w_dot_phi);
    for (int j = 0; j < m; ++j)
        if (ctx.w.size() > 0 && ctx.w[j] != 0.0) mom.axpy_column(keep[static_cast<size_t>(j)], -ctx.w[j], r);

    const double eta_dot_phi = beta_rest.dot(phi_rest);
    Eigen::VectorXd e = *mom.y + zt * eta_dot_phi;
    for (int j = 0; j < m; ++j)
        if (beta_rest[j] != 0.0) mom.axpy_column(keep[static_cast<size_t>(j)], -beta_rest[j], e);

    ctx.shat = -e.dot(r) / (n * sigma2);
    ctx.b = zt.dot(r) / (n * sigma2);
    return ctx;
}

}  // namespace

ScoreContext build_context(const Eigen::MatrixXd& Phi, const Eigen::VectorXd& y,
                           const Eigen::VectorXd& beta_hat, const Eigen::VectorXd& phi_star,
                           double sigma2, const WOptions& wopts) {
    if (Phi.rows() != y.size()) throw std::invalid_argument("build_context: Phi/y row mismatch");
    if (Phi.cols() != beta_hat.size())
        throw std::invalid_argument("build_context: Phi/beta_hat column mismatch");
    const int n = static_cast<int>(Phi.rows());
    const int p = static_cast<int>(Phi.cols());
    std::vector<SparseColumn> cols(static_cast<size_t>(p));
    for (int j = 0; j < p; ++j) {
        auto& col = cols[static_cast<size_t>(j)];
        for (int i = 0; i < n; ++i)
            if (Phi(i, j) != 0.0) {
                col.rows.push_back(i);
                col.vals.push_back(Phi(i, j));
            }
    }
    const Eigen::MatrixXd S = Phi.transpose() * Phi;
    const Eigen::VectorXd q = Phi.transpose() * y;
    Moments mom;
    mom.cols = &cols;
    mom.constant_last = false;
    mom.n = n;
    mom.p = p;
    mom.S = &S;
    mom.q = &q;
    mom.y = &y;
    mom.beta = &beta_hat;
    return context_from_moments(mom, phi_star, sigma2, wopts);
}

Interval interval_at(const ScoreContext& ctx, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("interval_at: alpha outside (0,1)");
    if (!(ctx.b > 0.0))
        throw IllConditionedError(
            "interval_at: information term b <= 0; the decorrelated score is degenerate here");
    const double zlo = normal_quantile(alpha / 2.0);
    const double zhi = normal_quantile(1.0 - alpha / 2.0);
    const double root = std::sqrt(ctx.b / ctx.n);
    Interval out;
    out.lower = (-ctx.shat + root * zlo) / ctx.b;
    out.upper = (-ctx.shat + root * zhi) / ctx.b;
    out.alpha = alpha;
    out.sigma2 = ctx.sigma2;
    out.variant = ctx.variant;
    return out;
}

double interval_score(double lower, double upper, double x, double alpha) {
    if (lower > upper) throw std::invalid_argument("interval_score: lower > upper");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("interval_score: alpha outside (0,1)");
    double s = upper - lower;
    if (x < lower) s += (2.0 / alpha) * (lower - x);
    if (x > upper) s += (2.0 / alpha) * (x - upper);
    return s;
}

CiEngine::CiEngine(const FittedModel& model, const Eigen::MatrixXd& X_orig,
                   const Eigen::VectorXd& y, WOptions wopts, std::optional<double> sigma2_override)
    : model_(&model), wopts_(wopts), y_(y) {
    if (X_orig.rows() != y.size()) throw std::invalid_argument("CiEngine: X/y row mismatch");
    const Eigen::MatrixXd X01 = model.scaling.to_unit(X_orig);
    n_ = static_cast<int>(X01.rows());

    // Candidate-basis dictionary in canonical group order.
    std::vector<EffectResolution> cands = model.candidates;
    std::sort(cands.begin(), cands.end());
    int offset = 0;
    for (const auto& g : cands) {
        atom_offset_of_group_.push_back(offset);
        auto atoms = build_atoms(g, model.schedule, std::max(g.r, 1), std::numeric_limits<std::int64_t>::max());
        offset += static_cast<int>(atoms.size());
        for (auto& a : atoms) atoms_.push_back(std::move(a));
    }
    p_ = offset + 1;  // + constant column
    cols_ = design_columns(atoms_, X01);

    beta_aug_ = Eigen::VectorXd::Zero(p_);
    for (const auto& t : model.terms) {
        const auto it = std::lower_bound(cands.begin(), cands.end(), t.er);
        if (it == cands.end() || !(*it == t.er))
            throw ModelSchemaError("model term group " + t.er.str() + " missing from candidates");
        const int gi = static_cast<int>(it - cands.begin());
        beta_aug_[atom_offset_of_group_[static_cast<size_t>(gi)] + t.atom_index] = t.coef;
    }
    beta_aug_[p_ - 1] = model.intercept;

    // S = Phi'Phi and q = Phi'y built one densified column at a time.
    S_.resize(p_, p_);
    q_.resize(p_);
    Eigen::VectorXd dense_j(n_);
    for (int j = 0; j < p_; ++j) {
        dense_j.setZero();
        if (j == p_ - 1)
            dense_j.setOnes();
        else
            cols_[static_cast<size_t>(j)].axpy(1.0, dense_j);
        for (int i = 0; i <= j; ++i) {
            const double v = (i == p_ - 1) ? dense_j.sum() : cols_[static_cast<size_t>(i)].dot(dense_j);
            S_(i, j) = v;
            S_(j, i) = v;
        }
        q_[j] = dense_j.dot(y_);
    }

    if (sigma2_override) {
        sigma2_ = *sigma2_override;
    } else if (model.sigma2 && *model.sigma2 > 0.0) {
        sigma2_ = *model.sigma2;
    } else {
        // Deterministic near-interpolation: conservative floor.
        const double var_y = (y_.array() - y_.mean()).square().mean();
        const double base = model.sigma2 ? *model.sigma2 : 0.0;
        sigma2_ = std::max(base, 1e-8 * std::max(var_y, 1e-300));
    }
    if (!(sigma2_ > 0.0)) throw std::invalid_argument("CiEngine: sigma2 must be positive");
}

Eigen::VectorXd CiEngine::phi_star_at(const Eigen::VectorXd& x01) const {
    Eigen::VectorXd phi(p_);
    std::vector<double> xrow(x01.begin(), x01.end());
    bool any_atom = false;
    for (size_t a = 0; a < atoms_.size(); ++a) {
        const double v = atoms_[a].eval(xrow);
        phi[static_cast<Eigen::Index>(a)] = v;
        if (v != 0.0) any_atom = true;
    }
    phi[p_ - 1] = 1.0;
    if (!any_atom)
        throw DegeneratePointError(
            "ci: prediction point lies outside every candidate atom support; only an "
            "intercept-only interval is meaningful here");
    return phi;
}

ScoreContext CiEngine::context_from_phi(const Eigen::VectorXd& phi_star) const {
    Moments mom;
    mom.cols = &cols_;
    mom.constant_last = true;
    mom.n = n_;
    mom.p = p_;
    mom.S = &S_;
    mom.q = &q_;
    mom.y = &y_;
    mom.beta = &beta_aug_;
    return context_from_moments(mom, phi_star, sigma2_, wopts_);
}

ScoreContext CiEngine::context(const Eigen::VectorXd& x_star_orig) const {
    if (x_star_orig.size() != model_->d)
        throw std::invalid_argument("ci: prediction point has wrong dimension");
    Eigen::MatrixXd row(1, model_->d);
    row.row(0) = x_star_orig;
    const Eigen::MatrixXd x01 = model_->scaling.to_unit(row);
    return context_from_phi(phi_star_at(x01.row(0)));
}

Interval CiEngine::interval(const Eigen::VectorXd& x_star_orig, double alpha) const {
    return interval_at(context(x_star_orig), alpha);
}

ApleyResult apley_sigma2(const Eigen::MatrixXd& X_orig, const Eigen::VectorXd& y,
                         const FitConfig& config, double alpha, int K, const WOptions& wopts) {
    const int n = static_cast<int>(X_orig.rows());
    if (K < 2) throw std::invalid_argument("apley_sigma2: need K >= 2");
    if (!(alpha > 0.0 && alpha < 1.0))
        throw std::invalid_argument("apley_sigma2: alpha outside (0,1)");
    const auto fold = fold_assignment_grouped(X_orig, K, config.seed);
    const double z = normal_quantile(1.0 - alpha / 2.0);

    // Out-of-fold interval centers and per-sigma half-width factors; an
    // interval at noise level s2 is center +- z*sqrt(s2)*tau.
    std::vector<double> center, tau, truth;
    for (int k = 0; k < K; ++k) {
        std::vector<int> tr, te;
        for (int i = 0; i < n; ++i) (fold[static_cast<size_t>(i)] == k ? te : tr).push_back(i);
        if (te.empty()) continue;
        Eigen::MatrixXd Xtr(tr.size(), X_orig.cols());
        Eigen::VectorXd ytr(tr.size());
        for (size_t i = 0; i < tr.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = X_orig.row(tr[i]);
            ytr[static_cast<Eigen::Index>(i)] = y[tr[i]];
        }
        const FitResult fr = fit_model(Xtr, ytr, config);
        const CiEngine engine(fr.model, Xtr, ytr, wopts, 1.0);
        for (const int i : te) {
            try {
                const ScoreContext ctx = engine.context(X_orig.row(i).transpose());
                if (!(ctx.b > 0.0)) continue;
                center.push_back(-ctx.shat / ctx.b);
                tau.push_back(1.0 / std::sqrt(static_cast<double>(ctx.n) * ctx.b));
                truth.push_back(y[i]);
            } catch (const DegeneratePointError&) {
                continue;
            }
        }
    }
    if (center.empty())
        throw IllConditionedError("apley_sigma2: no usable out-of-fold points");

    auto coverage = [&](double s2) {
        const double s = std::sqrt(s2);
        int hit = 0;
        for (size_t i = 0; i < center.size(); ++i)
            if (std::abs(truth[i] - center[i]) <= z * s * tau[i]) ++hit;
        return static_cast<double>(hit) / static_cast<double>(center.size());
    };
    const double target = 1.0 - alpha;

    // Base scale: residual estimator of the full fit, or Var(y) fallback.
    const FitResult full = fit_model(X_orig, y, config);
    double base = 0.0;
    if (full.path.n > full.model.s && full.model.rss > 0.0)
        base = full.model.rss / (full.path.n - full.model.s);
    if (base <= 0.0) base = std::max((y.array() - y.mean()).square().mean(), 1e-300);

    std::vector<double> grid(25);
    for (int i = 0; i < 25; ++i)
        grid[static_cast<size_t>(i)] = base * std::pow(10.0, -6.0 + 8.0 * i / 24.0);

    double best_s2 = grid[0];
    double best_obj = std::numeric_limits<double>::infinity();
    bool flat = true;
    double first_cov = coverage(grid[0]);
    for (const double s2 : grid) {
        const double cov = coverage(s2);
        if (cov != first_cov) flat = false;
        const double obj = std::abs(cov - target);
        if (obj < best_obj - 1e-15 || (std::abs(obj - best_obj) <= 1e-15 && s2 < best_s2)) {
            best_obj = obj;
            best_s2 = s2;
        }
    }

    // Golden-section refinement on log sigma^2 around the grid winner.
    {
        const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
        double lo = std::log(best_s2) - std::log(10.0) / 3.0;
        double hi = std::log(best_s2) + std::log(10.0) / 3.0;
        for (int it = 0; it < 60; ++it) {
            const double m1 = hi - phi * (hi - lo);
            const double m2 = lo + phi * (hi - lo);
            const double f1 = std::abs(coverage(std::exp(m1)) - target);
            const double f2 = std::abs(coverage(std::exp(m2)) - target);
            if (f1 <= f2)
                hi = m2;
            else
                lo = m1;
        }
        const double refined = std::exp(0.5 * (lo + hi));
        const double obj = std::abs(coverage(refined) - target);
        if (obj < best_obj - 1e-15 || (std::abs(obj - best_obj) <= 1e-15 && refined < best_s2)) {
            best_obj = obj;
            best_s2 = refined;
        }
    }

    ApleyResult out;
    out.sigma2 = best_s2;
    out.fold_coverage = coverage(best_s2);
    out.flat_objective = flat;
    out.usable_points = static_cast<int>(center.size());
    return out;
}

}  // namespace mrfa
