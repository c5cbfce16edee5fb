#pragma once

// Reference solver for the duplicated-coefficient group lasso, used only by
// tests: plain proximal gradient (ISTA) on the full duplicated design with a
// global step size. Deliberately independent of the production block
// coordinate descent.

#include <Eigen/Dense>
#include <vector>

#include "mrfa/solver.hpp"

namespace oracle {

struct ProxResult {
    std::vector<Eigen::VectorXd> blocks;
    double intercept = 0.0;
    double objective = 0.0;
    int iterations = 0;
};

inline ProxResult prox_reference(const mrfa::GroupProblem& problem, double lambda,
                                 int max_iters = 500000, double tol = 1e-14) {
    const int n = static_cast<int>(problem.y.size());
    const size_t ng = problem.groups.size();

    int total_slots = 0;
    for (const auto& g : problem.groups) total_slots += static_cast<int>(g.cols.size());

    // Dense duplicated design: one column per slot.
    Eigen::MatrixXd Z(n, total_slots);
    {
        int c = 0;
        for (const auto& g : problem.groups)
            for (const int col : g.cols) {
                Eigen::VectorXd dense = Eigen::VectorXd::Zero(n);
                (*problem.columns)[static_cast<size_t>(col)].axpy(1.0, dense);
                Z.col(c++) = dense;
            }
    }

    const Eigen::MatrixXd H = Z.transpose() * Z / n;
    double L = 1e-12;
    if (total_slots > 0) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(H);
        L = std::max(es.eigenvalues().maxCoeff() * (1.0 + 1e-10), 1e-12);
    }

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(total_slots);
    double intercept = problem.fit_intercept ? problem.y.mean() : 0.0;

    auto objective = [&](const Eigen::VectorXd& b, double c0) {
        const Eigen::VectorXd res = problem.y - Eigen::VectorXd::Constant(n, c0) - Z * b;
        double pen = 0.0;
        int off = 0;
        for (const auto& g : problem.groups) {
            pen += std::sqrt(static_cast<double>(g.weight)) *
                   b.segment(off, static_cast<int>(g.cols.size())).norm();
            off += static_cast<int>(g.cols.size());
        }
        return res.squaredNorm() / (2.0 * n) + lambda * pen;
    };

    double prev = objective(beta, intercept);
    int it = 0;
    for (; it < max_iters; ++it) {
        const Eigen::VectorXd res = problem.y - Eigen::VectorXd::Constant(n, intercept) - Z * beta;
        const Eigen::VectorXd grad = -Z.transpose() * res / n;
        Eigen::VectorXd v = beta - grad / L;
        int off = 0;
        for (const auto& g : problem.groups) {
            const int m = static_cast<int>(g.cols.size());
            auto seg = v.segment(off, m);
            const double thr = lambda * std::sqrt(static_cast<double>(g.weight)) / L;
            const double norm = seg.norm();
            seg *= (norm > thr) ? (1.0 - thr / norm) : 0.0;
            off += m;
        }
        beta = v;
        if (problem.fit_intercept)
            intercept = (problem.y - Z * beta).mean();
        const double obj = objective(beta, intercept);
        if (std::abs(prev - obj) <= tol * std::max(1.0, std::abs(obj)) && it > 10) break;
        prev = obj;
    }

    ProxResult out;
    out.intercept = intercept;
    out.objective = objective(beta, intercept);
    out.iterations = it;
    int off = 0;
    for (const auto& g : problem.groups) {
        const int m = static_cast<int>(g.cols.size());
        out.blocks.push_back(beta.segment(off, m));
        off += m;
    }
    return out;
}

inline Eigen::VectorXd collapse_blocks(const std::vector<Eigen::VectorXd>& blocks,
                                       const std::vector<mrfa::CoefGroup>& groups, int p) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(p);
    for (size_t j = 0; j < groups.size(); ++j)
        for (size_t k = 0; k < groups[j].cols.size(); ++k)
            out[groups[j].cols[k]] += blocks[j][static_cast<Eigen::Index>(k)];
    return out;
}

}  // namespace oracle
