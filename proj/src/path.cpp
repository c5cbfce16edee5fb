#include "mrfa/path.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mrfa {

namespace {

struct ColumnRange {
    int start = 0;
    int count = 0;
};

// One candidate group in solver geometry: its realized member columns
// orthonormalized, Phi_kept = Q R with Q'Q = I. Blocks are exactly solvable
// by a single soft-threshold in these coordinates.
struct WhitenedGroup {
    std::int64_t weight = 0;  // N_u(r)
    std::vector<int> kept;    // accepted member columns (global atom ids)
    Eigen::MatrixXd Q;        // n x rank
    Eigen::MatrixXd R;        // rank x rank, upper triangular
};

class PathDriver {
public:
    PathDriver(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const PathConfig& config)
        : X_(X),
          y_(y),
          config_(config),
          bounds_{static_cast<int>(X.cols()), config.d_max, config.r_max},
          result_{.structure = GroupStructure(bounds_)} {
        if (X_.rows() != y_.size()) throw std::invalid_argument("solve_path: X/y row mismatch");
        if (X_.rows() < 2) throw std::invalid_argument("solve_path: need at least two rows");
        if (!X_.allFinite()) throw std::invalid_argument("solve_path: inputs contain NaN/Inf");
        if (!y_.allFinite()) throw std::invalid_argument("solve_path: response contains NaN/Inf");
        result_.n = static_cast<int>(X_.rows());
        result_.d = static_cast<int>(X_.cols());
        result_.schedule = config.schedule;
    }

    PathResult run(const std::vector<double>* grid) {
        seed_main_effects();

        intercept_ = y_.mean();
        residual_ = y_.array() - intercept_;
        result_.lambda_max = 0.0;
        for (size_t j = 0; j < whitened_.size(); ++j) {
            const double g = gradient_norm(whitened_[j]);
            if (g > result_.lambda_max) {
                result_.lambda_max = g;
                result_.lambda_max_group = result_.group_order[j];
            }
        }

        const int max_terms =
            config_.max_terms > 0 ? config_.max_terms : std::numeric_limits<int>::max();
        const double lmin = config_.lambda_min_ratio * result_.lambda_max;
        const double ysd = std::sqrt(std::max((y_.array() - y_.mean()).square().mean(), 0.0));
        kkt_abs_ = config_.solver.kkt_tol * std::max(ysd, 1e-12);

        EffectSet prev_block_active;
        double lambda = result_.lambda_max;
        size_t grid_pos = 0;
        if (grid) {
            if (grid->empty()) throw std::invalid_argument("solve_path_grid: empty lambda grid");
            lambda = (*grid)[0];
            grid_pos = 1;
        } else if (result_.lambda_max <= 0.0) {
            // constant response: the intercept is the whole model
            const FitDiagnostics diag = fit(0.0);
            result_.points.push_back(make_point(0.0, diag));
            result_.stop_reason = "lambda_max is zero";
            return std::move(result_);
        }

        while (true) {
            const FitDiagnostics diag = fit(lambda);
            PathPoint pt = make_point(lambda, diag);
            const bool was_stable = pt.stable;
            result_.points.push_back(pt);

            if (!was_stable) {
                result_.stop_reason = "numeric instability";
                break;
            }
            if (pt.nnz_unique >= max_terms) {
                result_.stop_reason = "max terms reached";
                break;
            }
            if (rss_plateau()) {
                result_.stop_reason = "rss plateau";
                break;
            }
            if (pt.block_active != prev_block_active) {
                prev_block_active = pt.block_active;
                if (!expand(pt.active)) {
                    result_.stop_reason = "column budget reached";
                    break;
                }
            }
            if (grid) {
                if (grid_pos >= grid->size()) {
                    result_.stop_reason = "grid exhausted";
                    break;
                }
                lambda = (*grid)[grid_pos++];
            } else {
                lambda *= config_.rho;
                if (lambda < lmin) {
                    result_.stop_reason = "lambda_min reached";
                    break;
                }
            }
        }
        return std::move(result_);
    }

private:
    // ||Q' residual|| / (sqrt(n) sqrt(N)): the smallest lambda at which the
    // group's zero block still satisfies the KKT bound.
    double gradient_norm(const WhitenedGroup& wg) const {
        if (wg.Q.cols() == 0) return 0.0;
        return (wg.Q.transpose() * residual_).norm() /
               (std::sqrt(static_cast<double>(result_.n)) *
                std::sqrt(static_cast<double>(wg.weight)));
    }

    void add_group(const EffectResolution& g) {
        auto atoms = build_atoms(g, config_.schedule, config_.r_max, config_.atom_cap);
        auto cols = design_columns(atoms, X_);
        ranges_[g] = {static_cast<int>(result_.columns.size()), static_cast<int>(cols.size())};
        result_.structure.register_atom_count(g, static_cast<std::int64_t>(atoms.size()));
        result_.structure.add_candidate(g);
        for (auto& a : atoms) result_.atoms.push_back(std::move(a));
        for (auto& c : cols) result_.columns.push_back(std::move(c));

        const int n = result_.n;
        CoefGroup cg;
        cg.weight = result_.structure.group_weight(g);
        for (const auto& member : result_.structure.member_effects(g)) {
            const auto& r = ranges_.at(member);
            for (int i = 0; i < r.count; ++i)
                if (!result_.columns[static_cast<size_t>(r.start + i)].empty())
                    cg.cols.push_back(r.start + i);
        }
        result_.groups.push_back(cg);
        result_.group_order.push_back(g);

        // Streaming Gram-Schmidt over the member columns, ancestors first,
        // with re-orthogonalization and relative rank truncation.
        WhitenedGroup wg;
        wg.weight = cg.weight;
        const int cap = static_cast<int>(
            std::min<std::int64_t>({config_.whiten_rank_cap, static_cast<std::int64_t>(n),
                                    static_cast<std::int64_t>(cg.cols.size())}));
        Eigen::MatrixXd Q(n, cap);
        Eigen::MatrixXd R(cap, cap);
        R.setZero();
        int rank = 0;
        Eigen::VectorXd v(n);
        for (const int mcol : cg.cols) {
            if (rank >= cap) break;
            v.setZero();
            result_.columns[static_cast<size_t>(mcol)].axpy(1.0, v);
            const double orig_ss = v.squaredNorm();
            Eigen::VectorXd coeff = Eigen::VectorXd::Zero(rank);
            if (rank > 0) {
                const Eigen::VectorXd proj1 = Q.leftCols(rank).transpose() * v;
                v.noalias() -= Q.leftCols(rank) * proj1;
                const Eigen::VectorXd proj2 = Q.leftCols(rank).transpose() * v;
                v.noalias() -= Q.leftCols(rank) * proj2;
                coeff = proj1 + proj2;
            }
            const double left = v.squaredNorm();
            if (left > config_.whiten_tol * std::max(orig_ss, 1e-300)) {
                const double norm = std::sqrt(left);
                Q.col(rank) = v / norm;
                R.col(rank).head(rank) = coeff;
                R(rank, rank) = norm;
                wg.kept.push_back(mcol);
                ++rank;
            }
        }
        wg.Q = Q.leftCols(rank);
        wg.R = R.topLeftCorner(rank, rank);
        blocks_.emplace_back(Eigen::VectorXd::Zero(rank));
        whitened_.push_back(std::move(wg));
    }

    void seed_main_effects() {
        for (int j = 0; j < bounds_.d; ++j) add_group(EffectResolution({j}, 1));
    }

    bool expand(const EffectSet& active) {
        result_.structure.set_active(active);
        const EffectSet enlarged =
            expand_candidates(active, result_.structure.candidates(), bounds_);
        std::vector<EffectResolution> fresh;
        for (const auto& g : enlarged)
            if (!result_.structure.is_candidate(g)) fresh.push_back(g);
        if (fresh.empty()) return true;
        std::sort(fresh.begin(), fresh.end());

        std::int64_t extra = 0;
        for (const auto& g : fresh) extra += config_.schedule.atom_count(g.order(), g.r);
        if (static_cast<std::int64_t>(result_.columns.size()) + extra > config_.max_columns)
            return false;
        for (const auto& g : fresh) add_group(g);
        return true;
    }

    // Exact block soft-threshold; returns the largest slot change.
    double update_block(size_t j, double lambda) {
        WhitenedGroup& wg = whitened_[j];
        if (wg.Q.cols() == 0) return 0.0;
        const double sqrt_n = std::sqrt(static_cast<double>(result_.n));
        Eigen::VectorXd u = blocks_[j] + wg.Q.transpose() * residual_ / sqrt_n;
        const double thr = lambda * std::sqrt(static_cast<double>(wg.weight));
        const double norm = u.norm();
        const double scale = (norm > thr) ? (1.0 - thr / norm) : 0.0;
        u *= scale;
        const Eigen::VectorXd delta = u - blocks_[j];
        const double max_change = delta.size() ? delta.cwiseAbs().maxCoeff() : 0.0;
        if (max_change != 0.0) {
            residual_.noalias() -= sqrt_n * (wg.Q * delta);
            blocks_[j] = u;
        }
        return max_change;
    }

    void update_intercept() {
        const double shift = residual_.mean();
        if (shift != 0.0) {
            intercept_ += shift;
            residual_.array() -= shift;
        }
    }

    double kkt_residual_white(double lambda) const {
        const double sqrt_n = std::sqrt(static_cast<double>(result_.n));
        double worst = std::abs(residual_.mean());
        for (size_t j = 0; j < whitened_.size(); ++j) {
            const WhitenedGroup& wg = whitened_[j];
            if (wg.Q.cols() == 0) continue;
            const Eigen::VectorXd grad = wg.Q.transpose() * residual_ / sqrt_n;
            const double wj = lambda * std::sqrt(static_cast<double>(wg.weight));
            const double bnorm = blocks_[j].norm();
            if (bnorm > 0.0)
                worst = std::max(worst, (grad - wj * blocks_[j] / bnorm).cwiseAbs().maxCoeff());
            else
                worst = std::max(worst, grad.norm() - wj);
        }
        return worst;
    }

    double objective(double lambda) const {
        double pen = 0.0;
        for (size_t j = 0; j < whitened_.size(); ++j)
            pen += std::sqrt(static_cast<double>(whitened_[j].weight)) * blocks_[j].norm();
        return residual_.squaredNorm() / (2.0 * result_.n) + lambda * pen;
    }

    FitDiagnostics fit(double lambda) {
        FitDiagnostics diag;
        double prev_obj = objective(lambda);
        double max_increase = 0.0;
        int sweeps = 0;
        while (sweeps < config_.solver.max_sweeps) {
            for (size_t j = 0; j < whitened_.size(); ++j) update_block(j, lambda);
            update_intercept();
            ++sweeps;
            for (int inner = 0;
                 inner < config_.solver.inner_per_outer && sweeps < config_.solver.max_sweeps;
                 ++inner) {
                double change = 0.0;
                for (size_t j = 0; j < whitened_.size(); ++j)
                    if (blocks_[j].size() > 0 && blocks_[j].norm() > 0.0)
                        change = std::max(change, update_block(j, lambda));
                update_intercept();
                ++sweeps;
                if (change <= 1e-3 * kkt_abs_) break;
            }
            const double obj = objective(lambda);
            max_increase = std::max(max_increase, obj - prev_obj);
            const double rel_change =
                std::abs(prev_obj - obj) / std::max({std::abs(prev_obj), std::abs(obj), 1e-300});
            prev_obj = obj;
            diag.kkt_residual = kkt_residual_white(lambda);
            if (diag.kkt_residual <= kkt_abs_) {
                diag.converged = true;
                break;
            }
            if (rel_change < 1e-15 && sweeps > 20) break;
        }
        diag.sweeps = sweeps;
        diag.objective = prev_obj;
        diag.max_objective_increase = max_increase;
        return diag;
    }

    PathPoint make_point(double lambda, const FitDiagnostics& diag) {
        PathPoint pt;
        pt.lambda = lambda;
        pt.intercept = intercept_;
        pt.beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(result_.columns.size()));
        const double sqrt_n = std::sqrt(static_cast<double>(result_.n));
        for (size_t j = 0; j < whitened_.size(); ++j) {
            if (blocks_[j].size() == 0 || blocks_[j].norm() == 0.0) continue;
            pt.nonzero_blocks.emplace(static_cast<int>(j), blocks_[j]);
            pt.block_active.insert(result_.group_order[j]);
            // atom coefficients: Phi_kept b = sqrt(n) Q btilde  =>  R b = sqrt(n) btilde
            const WhitenedGroup& wg = whitened_[j];
            const Eigen::VectorXd b = wg.R.triangularView<Eigen::Upper>().solve(sqrt_n * blocks_[j]);
            for (size_t c = 0; c < wg.kept.size(); ++c)
                pt.beta[wg.kept[c]] += b[static_cast<Eigen::Index>(c)];
        }
        pt.active = heredity_closure(pt.block_active);
        pt.rss = residual_.squaredNorm();
        pt.nnz_unique = static_cast<int>((pt.beta.array() != 0.0).count());
        pt.sweeps = diag.sweeps;
        pt.kkt = diag.kkt_residual;
        const double obj_scale = std::max(1.0, std::abs(diag.objective));
        pt.stable = diag.converged && diag.max_objective_increase <= 1e-8 * obj_scale;
        return pt;
    }

    bool rss_plateau() const {
        const int w = config_.rss_window;
        const int t = static_cast<int>(result_.points.size());
        if (w <= 0 || t <= w) return false;
        const double before = result_.points[static_cast<size_t>(t - 1 - w)].rss;
        const double now = result_.points.back().rss;
        if (before <= 0.0) return true;
        return (before - now) < config_.rss_tol * before;
    }

    const Eigen::MatrixXd& X_;
    const Eigen::VectorXd& y_;
    const PathConfig& config_;
    LatticeBounds bounds_;
    PathResult result_;
    std::map<EffectResolution, ColumnRange> ranges_;
    std::vector<WhitenedGroup> whitened_;
    std::vector<Eigen::VectorXd> blocks_;
    Eigen::VectorXd residual_;
    double intercept_ = 0.0;
    double kkt_abs_ = 1e-6;
};

}  // namespace

int PathResult::last_stable() const {
    for (int i = static_cast<int>(points.size()) - 1; i >= 0; --i)
        if (points[static_cast<size_t>(i)].stable) return i;
    return -1;
}

PathResult solve_path(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y,
                      const PathConfig& config) {
    return PathDriver(X01, y, config).run(nullptr);
}

PathResult solve_path_grid(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y,
                           const PathConfig& config, const std::vector<double>& lambdas) {
    return PathDriver(X01, y, config).run(&lambdas);
}

}  // namespace mrfa
