#include <doctest.h>

#include <Eigen/Dense>

#include "mrfa/rng.hpp"
#include "mrfa/solver.hpp"
#include "oracle_prox.hpp"

using namespace mrfa;

namespace {

std::vector<SparseColumn> to_columns(const Eigen::MatrixXd& Phi) {
    std::vector<SparseColumn> cols(static_cast<size_t>(Phi.cols()));
    for (int j = 0; j < Phi.cols(); ++j)
        for (int i = 0; i < Phi.rows(); ++i)
            if (Phi(i, j) != 0.0) {
                cols[static_cast<size_t>(j)].rows.push_back(i);
                cols[static_cast<size_t>(j)].vals.push_back(Phi(i, j));
            }
    return cols;
}

Eigen::MatrixXd scaled_orthonormal(int n, int p, Rng& rng) {
    Eigen::MatrixXd A(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) A(i, j) = rng.normal();
    const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(A).householderQ() *
                              Eigen::MatrixXd::Identity(n, p);
    return std::sqrt(static_cast<double>(n)) * Q;  // Phi'Phi / n = I
}

struct RandomInstance {
    Eigen::MatrixXd Phi;
    std::vector<SparseColumn> cols;
    GroupProblem problem;
};

// Overlapping groups over a shared column pool.
RandomInstance random_instance(std::uint64_t seed, bool with_intercept) {
    Rng rng(seed);
    const int n = 50;
    const int p = 6 + static_cast<int>(rng.integer(10));
    const int ng = 2 + static_cast<int>(rng.integer(7));
    RandomInstance inst;
    inst.Phi.resize(n, p);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < p; ++j) inst.Phi(i, j) = rng.normal();
    inst.cols = to_columns(inst.Phi);

    int total_slots = 0;
    for (int g = 0; g < ng; ++g) {
        CoefGroup cg;
        for (int j = 0; j < p; ++j)
            if (rng.uniform() < 0.4) cg.cols.push_back(j);
        if (cg.cols.empty()) cg.cols.push_back(static_cast<int>(rng.integer(p)));
        if (total_slots + static_cast<int>(cg.cols.size()) > 60) break;
        total_slots += static_cast<int>(cg.cols.size());
        cg.weight = static_cast<std::int64_t>(cg.cols.size());
        inst.problem.groups.push_back(std::move(cg));
    }
    if (inst.problem.groups.empty()) {
        CoefGroup cg;
        cg.cols = {0, 1};
        cg.weight = 2;
        inst.problem.groups.push_back(cg);
    }

    Eigen::VectorXd beta_true = Eigen::VectorXd::Zero(p);
    for (int j = 0; j < p; ++j)
        if (rng.uniform() < 0.5) beta_true[j] = rng.normal();
    inst.problem.y = inst.Phi * beta_true;
    for (int i = 0; i < n; ++i)
        inst.problem.y[i] += 0.3 * rng.normal() + (with_intercept ? 1.7 : 0.0);
    inst.problem.fit_intercept = with_intercept;
    inst.problem.columns = &inst.cols;
    return inst;
}

}  // namespace

TEST_CASE("lambda_max: constant response gives zero") {
    Rng rng(1);
    const Eigen::MatrixXd Phi = scaled_orthonormal(30, 4, rng);
    auto cols = to_columns(Phi);
    GroupProblem pb;
    pb.columns = &cols;
    pb.y = Eigen::VectorXd::Constant(30, 3.25);
    pb.groups.push_back({{0, 1, 2, 3}, 4});
    pb.fit_intercept = true;
    CHECK(lambda_max(pb) == doctest::Approx(0.0).epsilon(1e-12));

    GroupProblem empty = pb;
    empty.groups.clear();
    CHECK_THROWS_AS(lambda_max(empty), std::invalid_argument);
}

TEST_CASE("lambda_max: closed form for a single group") {
    Rng rng(2);
    const int n = 40;
    const Eigen::MatrixXd Phi = scaled_orthonormal(n, 5, rng);
    auto cols = to_columns(Phi);
    GroupProblem pb;
    pb.columns = &cols;
    pb.y.resize(n);
    for (int i = 0; i < n; ++i) pb.y[i] = rng.normal();
    pb.fit_intercept = false;
    pb.groups.push_back({{0, 1, 2, 3, 4}, 5});
    const double expect = (Phi.transpose() * pb.y).norm() / (n * std::sqrt(5.0));
    CHECK(lambda_max(pb) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("fit at lambda >= lambda_max returns zero coefficients") {
    for (std::uint64_t seed : {11u, 12u, 13u}) {
        auto inst = random_instance(seed, true);
        const double lmax = lambda_max(inst.problem);
        double intercept = 0.0;
        FitDiagnostics diag;
        const auto fit = fit_at_lambda(inst.problem, 1.001 * lmax,
                                       DuplicatedCoefficients::zeros(inst.problem.groups),
                                       intercept, &diag);
        for (const auto& b : fit.blocks) CHECK(b.norm() == 0.0);
        CHECK(intercept == doctest::Approx(inst.problem.y.mean()).epsilon(1e-12));
        CHECK(diag.converged);
    }
}

TEST_CASE("lambda = 0 with square full-rank design reproduces least squares") {
    Rng rng(3);
    const int n = 8;
    Eigen::MatrixXd Phi(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) Phi(i, j) = rng.normal() + (i == j ? 3.0 : 0.0);
    auto cols = to_columns(Phi);
    GroupProblem pb;
    pb.columns = &cols;
    pb.y.resize(n);
    for (int i = 0; i < n; ++i) pb.y[i] = rng.normal();
    pb.fit_intercept = false;
    for (int j = 0; j < n; ++j) pb.groups.push_back({{j}, 1});  // no overlap

    double intercept = 0.0;
    SolverOptions opts;
    opts.kkt_tol = 1e-10;
    opts.max_sweeps = 200000;
    const auto fit = fit_at_lambda(pb, 0.0, DuplicatedCoefficients::zeros(pb.groups), intercept,
                                   nullptr, opts);
    const Eigen::VectorXd beta = fit.collapse(pb.groups, n);
    const Eigen::VectorXd ls = Phi.colPivHouseholderQr().solve(pb.y);
    CHECK((beta - ls).cwiseAbs().maxCoeff() <= 1e-8);
}

TEST_CASE("single orthonormal group solves to the block soft threshold") {
    Rng rng(4);
    const int n = 60, p = 6;
    const Eigen::MatrixXd Phi = scaled_orthonormal(n, p, rng);
    auto cols = to_columns(Phi);
    GroupProblem pb;
    pb.columns = &cols;
    pb.y.resize(n);
    for (int i = 0; i < n; ++i) pb.y[i] = rng.normal() * 2.0;
    pb.fit_intercept = false;
    pb.groups.push_back({{0, 1, 2, 3, 4, 5}, 6});

    const Eigen::VectorXd b_ols = Phi.transpose() * pb.y / n;
    const double lambda = 0.4 * lambda_max(pb);
    double intercept = 0.0;
    const auto fit = fit_at_lambda(pb, lambda, DuplicatedCoefficients::zeros(pb.groups), intercept);
    const double shrink = std::max(0.0, 1.0 - lambda * std::sqrt(6.0) / b_ols.norm());
    const Eigen::VectorXd expect = shrink * b_ols;
    CHECK((fit.blocks[0] - expect).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("kkt_residual behaves as an optimality certificate") {
    auto inst = random_instance(21, false);
    const double lmax = lambda_max(inst.problem);
    const double lambda = 0.5 * lmax;

    const auto zero = DuplicatedCoefficients::zeros(inst.problem.groups);
    CHECK(kkt_residual(inst.problem, zero, lambda, 0.0) > 0.0);

    double intercept = 0.0;
    FitDiagnostics diag;
    auto fit = fit_at_lambda(inst.problem, lambda, zero, intercept, &diag);
    const double at_opt = kkt_residual(inst.problem, fit, lambda, intercept);
    const double ysd = std::sqrt((inst.problem.y.array() - inst.problem.y.mean()).square().mean());
    CHECK(at_opt <= 1e-4 * ysd);

    for (size_t j = 0; j < fit.blocks.size(); ++j) {
        if (fit.blocks[j].size() == 0) continue;
        auto perturbed = fit;
        perturbed.blocks[j][0] += 0.1;
        CHECK(kkt_residual(inst.problem, perturbed, lambda, intercept) > at_opt);
        break;
    }
}

TEST_CASE("collapse sums replicate slots") {
    std::vector<CoefGroup> groups;
    groups.push_back({{0, 1}, 2});
    groups.push_back({{1, 2}, 2});
    DuplicatedCoefficients bz;
    bz.blocks = {Eigen::Vector2d(0.1, 0.3), Eigen::Vector2d(0.2, -0.4)};
    const Eigen::VectorXd beta = bz.collapse(groups, 3);
    CHECK(beta[0] == doctest::Approx(0.1));
    CHECK(beta[1] == doctest::Approx(0.5));
    CHECK(beta[2] == doctest::Approx(-0.4));

    const auto zero = DuplicatedCoefficients::zeros(groups);
    CHECK(zero.collapse(groups, 3).norm() == 0.0);

    Rng rng(31);
    DuplicatedCoefficients rnd;
    rnd.blocks = {Eigen::Vector2d(rng.normal(), rng.normal()),
                  Eigen::Vector2d(rng.normal(), rng.normal())};
    const Eigen::VectorXd got = rnd.collapse(groups, 3);
    for (int k = 0; k < 3; ++k) {
        double expect = 0.0;
        for (size_t j = 0; j < groups.size(); ++j)
            for (size_t m = 0; m < groups[j].cols.size(); ++m)
                if (groups[j].cols[m] == k) expect += rnd.blocks[j][static_cast<Eigen::Index>(m)];
        CHECK(got[k] == doctest::Approx(expect).epsilon(1e-15));
    }
}

TEST_CASE("objective is monotone over sweeps on random instances") {
    for (std::uint64_t seed = 40; seed < 48; ++seed) {
        auto inst = random_instance(seed, seed % 2 == 0);
        const double lmax = lambda_max(inst.problem);
        Rng rng(seed * 7 + 1);
        const double lambda = lmax * rng.uniform(0.05, 0.9);
        double intercept = 0.0;
        FitDiagnostics diag;
        fit_at_lambda(inst.problem, lambda, DuplicatedCoefficients::zeros(inst.problem.groups),
                      intercept, &diag);
        CHECK(diag.max_objective_increase <= 1e-10 * std::max(1.0, std::abs(diag.objective)));
        CHECK(diag.converged);
    }
}

TEST_CASE("warm starts never worsen the objective") {
    auto inst = random_instance(55, true);
    const double lmax = lambda_max(inst.problem);
    double intercept = 0.0;
    auto warm = DuplicatedCoefficients::zeros(inst.problem.groups);
    warm = fit_at_lambda(inst.problem, 0.5 * lmax, std::move(warm), intercept);
    const double before = objective_value(inst.problem, warm, 0.3 * lmax, intercept);
    FitDiagnostics diag;
    fit_at_lambda(inst.problem, 0.3 * lmax, warm, intercept, &diag);
    CHECK(diag.objective <= before + 1e-12 * std::max(1.0, std::abs(before)));
}

TEST_CASE("BCD agrees with the proximal-gradient reference on random instances") {
    for (std::uint64_t seed = 100; seed < 110; ++seed) {
        auto inst = random_instance(seed, seed % 3 == 0);
        const double lmax = lambda_max(inst.problem);
        Rng rng(seed + 1000);
        const double lambda = lmax * rng.uniform(0.05, 0.95);

        double intercept = 0.0;
        SolverOptions opts;
        opts.kkt_tol = 1e-7;
        const auto fit = fit_at_lambda(inst.problem, lambda,
                                       DuplicatedCoefficients::zeros(inst.problem.groups),
                                       intercept, nullptr, opts);
        const double obj = objective_value(inst.problem, fit, lambda, intercept);

        const auto ref = oracle::prox_reference(inst.problem, lambda);
        CHECK(std::abs(obj - ref.objective) <= 1e-6 * std::max(1.0, std::abs(ref.objective)));

        const int p = static_cast<int>(inst.cols.size());
        const Eigen::VectorXd ours = fit.collapse(inst.problem.groups, p);
        const Eigen::VectorXd theirs = oracle::collapse_blocks(ref.blocks, inst.problem.groups, p);
        CHECK((ours - theirs).cwiseAbs().maxCoeff() <= 1e-4);
    }
}

TEST_CASE("fit_at_lambda rejects NaN input; SolverError carries the residual") {
    auto inst = random_instance(77, false);
    auto bad = inst.problem;
    Eigen::VectorXd y2 = bad.y;
    y2[3] = std::numeric_limits<double>::quiet_NaN();
    bad.y = y2;
    double intercept = 0.0;
    CHECK_THROWS_AS(fit_at_lambda(bad, 0.1, DuplicatedCoefficients::zeros(bad.groups), intercept),
                    std::invalid_argument);

    SolverOptions strangled;
    strangled.max_sweeps = 1;
    strangled.kkt_tol = 1e-14;
    strangled.inner_per_outer = 0;
    try {
        double c0 = 0.0;
        fit_at_lambda(inst.problem, 1e-9, DuplicatedCoefficients::zeros(inst.problem.groups), c0,
                      nullptr, strangled);
    } catch (const SolverError& e) {
        CHECK(e.kkt_residual > 0.0);
    }
}

TEST_CASE("solver runs are bit-deterministic") {
    auto inst1 = random_instance(321, true);
    auto inst2 = random_instance(321, true);
    const double lambda = 0.2 * lambda_max(inst1.problem);
    double c1 = 0.0, c2 = 0.0;
    const auto f1 = fit_at_lambda(inst1.problem, lambda,
                                  DuplicatedCoefficients::zeros(inst1.problem.groups), c1);
    const auto f2 = fit_at_lambda(inst2.problem, lambda,
                                  DuplicatedCoefficients::zeros(inst2.problem.groups), c2);
    CHECK(c1 == c2);
    for (size_t j = 0; j < f1.blocks.size(); ++j)
        for (Eigen::Index k = 0; k < f1.blocks[j].size(); ++k)
            CHECK(f1.blocks[j][k] == f2.blocks[j][k]);
}
