#include "mrfa/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "mrfa/rng.hpp"

namespace mrfa {

using nlohmann::json;

ScalingRecord ScalingRecord::from_data(const Eigen::MatrixXd& X) {
    ScalingRecord r;
    r.lo = X.colwise().minCoeff();
    r.hi = X.colwise().maxCoeff();
    return r;
}

ScalingRecord ScalingRecord::from_ranges(const std::vector<std::pair<double, double>>& ranges) {
    ScalingRecord r;
    r.lo.resize(static_cast<Eigen::Index>(ranges.size()));
    r.hi.resize(static_cast<Eigen::Index>(ranges.size()));
    for (size_t j = 0; j < ranges.size(); ++j) {
        r.lo[static_cast<Eigen::Index>(j)] = ranges[j].first;
        r.hi[static_cast<Eigen::Index>(j)] = ranges[j].second;
    }
    return r;
}

Eigen::MatrixXd ScalingRecord::to_unit(const Eigen::MatrixXd& X) const {
    if (X.cols() != lo.size())
        throw std::invalid_argument("scaling: expected " + std::to_string(lo.size()) +
                                    " columns, got " + std::to_string(X.cols()));
    Eigen::MatrixXd out(X.rows(), X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
        const double span = hi[j] - lo[j];
        if (span > 0.0)
            out.col(j) = (X.col(j).array() - lo[j]) / span;
        else
            out.col(j).setZero();  // constant training column
    }
    return out;
}

PredictResult FittedModel::predict(const Eigen::MatrixXd& X_orig, int threads) const {
    if (X_orig.cols() != d)
        throw std::invalid_argument("predict: model expects " + std::to_string(d) +
                                    " input columns, got " + std::to_string(X_orig.cols()));
    const Eigen::MatrixXd X = scaling.to_unit(X_orig);
    const int n = static_cast<int>(X.rows());
    PredictResult out;
    out.y = Eigen::VectorXd::Constant(n, intercept);
    out.extrapolated.assign(static_cast<size_t>(n), false);

    auto run_rows = [&](int lo_row, int hi_row) {
        std::vector<double> xrow(static_cast<size_t>(d));
        for (int i = lo_row; i < hi_row; ++i) {
            bool outside = false;
            for (int j = 0; j < d; ++j) {
                xrow[static_cast<size_t>(j)] = X(i, j);
                if (X(i, j) < 0.0 || X(i, j) > 1.0) outside = true;
            }
            out.extrapolated[static_cast<size_t>(i)] = outside;
            double acc = 0.0;
            for (const auto& t : terms) {
                double ss = 0.0;
                for (size_t k = 0; k < t.center.size(); ++k) {
                    const double dd = xrow[static_cast<size_t>(t.er.u[k])] - t.center[k];
                    ss += dd * dd;
                }
                const double v =
                    wendland_profile(std::sqrt(ss) / t.bandwidth, t.er.order(), schedule.kernel_k);
                acc += t.coef * v;
            }
            out.y[i] += acc;
        }
    };

    const int nthreads = std::max(1, std::min(threads, n));
    if (nthreads == 1 || n < 256) {
        run_rows(0, n);
    } else {
        std::vector<std::thread> pool;
        const int chunk = (n + nthreads - 1) / nthreads;
        for (int t = 0; t < nthreads; ++t) {
            const int lo_row = t * chunk;
            const int hi_row = std::min(n, lo_row + chunk);
            if (lo_row < hi_row) pool.emplace_back(run_rows, lo_row, hi_row);
        }
        for (auto& th : pool) th.join();
    }
    return out;
}

std::string criterion_name(Criterion c, int cv_folds) {
    switch (c) {
        case Criterion::Deterministic: return "deterministic";
        case Criterion::Aic: return "aic";
        case Criterion::Bic: return "bic";
        case Criterion::Cv: return "cv:" + std::to_string(cv_folds);
    }
    return "unknown";
}

SelectionReport information_criterion(const PathResult& path, Criterion kind, int n) {
    if (path.points.empty()) throw std::invalid_argument("information_criterion: empty path");
    if (kind != Criterion::Aic && kind != Criterion::Bic)
        throw std::invalid_argument("information_criterion: kind must be AIC or BIC");
    SelectionReport rep;
    rep.criterion = criterion_name(kind, 0);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : path.points) {
        SelectionReport::Row row;
        row.lambda = pt.lambda;
        row.rss = pt.rss;
        row.s = pt.nnz_unique;
        if (pt.rss <= 0.0) {
            row.score = -std::numeric_limits<double>::infinity();
            rep.perfect_fit = true;
        } else {
            const double penalty = (kind == Criterion::Aic)
                                       ? 2.0 * row.s
                                       : row.s * std::log(static_cast<double>(n));
            row.score = n * std::log(pt.rss / n) + penalty;
        }
        rep.rows.push_back(row);
        if (row.score < best) {  // strict: ties keep the earlier (larger) lambda
            best = row.score;
            rep.chosen = static_cast<int>(rep.rows.size()) - 1;
        }
    }
    return rep;
}

std::vector<int> fold_assignment(int n, int K, std::uint64_t seed) {
    if (K < 2) throw std::invalid_argument("cross_validate: need K >= 2");
    if (K > n) throw std::invalid_argument("cross_validate: more folds than rows");
    Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
    const std::vector<int> perm = rng.permutation(n);
    std::vector<int> fold(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) fold[static_cast<size_t>(perm[static_cast<size_t>(t)])] = t % K;
    return fold;
}

std::vector<int> fold_assignment_grouped(const Eigen::MatrixXd& X, int K, std::uint64_t seed) {
    const int n = static_cast<int>(X.rows());
    std::map<std::vector<double>, int> group_of;
    std::vector<int> row_group(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        std::vector<double> key(X.row(i).begin(), X.row(i).end());
        const auto [it, fresh] = group_of.emplace(std::move(key), static_cast<int>(group_of.size()));
        row_group[static_cast<size_t>(i)] = it->second;
    }
    const int m = static_cast<int>(group_of.size());
    const std::vector<int> group_fold = fold_assignment(m, K, seed);
    std::vector<int> fold(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
        fold[static_cast<size_t>(i)] = group_fold[static_cast<size_t>(row_group[static_cast<size_t>(i)])];
    return fold;
}

namespace {

// Held-out predictions for every lambda of `grid`, padding past the end of a
// fold path that stopped early.
Eigen::MatrixXd fold_predictions(const PathResult& fold_path, const Eigen::MatrixXd& X_test,
                                 size_t grid_size) {
    const auto cols = design_columns(fold_path.atoms, X_test);
    const int m = static_cast<int>(X_test.rows());
    Eigen::MatrixXd pred(m, static_cast<Eigen::Index>(grid_size));
    Eigen::VectorXd yhat(m);
    for (size_t t = 0; t < grid_size; ++t) {
        const size_t use = std::min(t, fold_path.points.size() - 1);
        const auto& pt = fold_path.points[use];
        yhat.setConstant(pt.intercept);
        for (int c = 0; c < pt.beta.size(); ++c)
            if (pt.beta[c] != 0.0) cols[static_cast<size_t>(c)].axpy(pt.beta[c], yhat);
        pred.col(static_cast<Eigen::Index>(t)) = yhat;
    }
    return pred;
}

struct CvCurve {
    std::vector<double> lambdas;
    std::vector<double> mse;  // mean squared held-out error per lambda
};

CvCurve cv_curve(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y, const PathConfig& config,
                 const PathResult& full_path, int K, std::uint64_t seed, int threads) {
    const int n = static_cast<int>(X01.rows());
    if (full_path.points.empty()) throw std::invalid_argument("cross_validate: empty path");
    const auto fold = fold_assignment_grouped(X01, K, seed);

    std::vector<double> grid;
    grid.reserve(full_path.points.size());
    for (const auto& pt : full_path.points) grid.push_back(pt.lambda);

    Eigen::VectorXd sq_err = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(grid.size()));
    std::vector<Eigen::VectorXd> fold_err(static_cast<size_t>(K));

    auto run_fold = [&](int k) {
        std::vector<int> train_rows, test_rows;
        for (int i = 0; i < n; ++i)
            (fold[static_cast<size_t>(i)] == k ? test_rows : train_rows).push_back(i);
        Eigen::MatrixXd Xtr(train_rows.size(), X01.cols()), Xte(test_rows.size(), X01.cols());
        Eigen::VectorXd ytr(train_rows.size()), yte(test_rows.size());
        for (size_t i = 0; i < train_rows.size(); ++i) {
            Xtr.row(static_cast<Eigen::Index>(i)) = X01.row(train_rows[i]);
            ytr[static_cast<Eigen::Index>(i)] = y[train_rows[i]];
        }
        for (size_t i = 0; i < test_rows.size(); ++i) {
            Xte.row(static_cast<Eigen::Index>(i)) = X01.row(test_rows[i]);
            yte[static_cast<Eigen::Index>(i)] = y[test_rows[i]];
        }
        const PathResult fp = solve_path_grid(Xtr, ytr, config, grid);
        const Eigen::MatrixXd pred = fold_predictions(fp, Xte, grid.size());
        Eigen::VectorXd err(static_cast<Eigen::Index>(grid.size()));
        for (size_t t = 0; t < grid.size(); ++t)
            err[static_cast<Eigen::Index>(t)] =
                (pred.col(static_cast<Eigen::Index>(t)) - yte).squaredNorm();
        fold_err[static_cast<size_t>(k)] = std::move(err);
    };

    const int nthreads = std::max(1, std::min(threads, K));
    if (nthreads == 1) {
        for (int k = 0; k < K; ++k) run_fold(k);
    } else {
        for (int base = 0; base < K; base += nthreads) {
            std::vector<std::thread> pool;
            for (int k = base; k < std::min(K, base + nthreads); ++k) pool.emplace_back(run_fold, k);
            for (auto& th : pool) th.join();
        }
    }
    for (int k = 0; k < K; ++k) sq_err += fold_err[static_cast<size_t>(k)];

    CvCurve curve;
    curve.lambdas = grid;
    curve.mse.resize(grid.size());
    for (size_t t = 0; t < grid.size(); ++t)
        curve.mse[t] = sq_err[static_cast<Eigen::Index>(t)] / n;
    return curve;
}

}  // namespace

SelectionReport cross_validate(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y,
                               const PathConfig& config, const PathResult& full_path, int K,
                               std::uint64_t seed, int threads) {
    const CvCurve curve = cv_curve(X01, y, config, full_path, K, seed, threads);
    SelectionReport rep;
    rep.criterion = "cv:" + std::to_string(K);
    double best = std::numeric_limits<double>::infinity();
    for (size_t t = 0; t < curve.lambdas.size(); ++t) {
        SelectionReport::Row row;
        row.lambda = curve.lambdas[t];
        row.rss = full_path.points[t].rss;
        row.s = full_path.points[t].nnz_unique;
        row.score = curve.mse[t];
        rep.rows.push_back(row);
        if (row.score < best) {
            best = row.score;
            rep.chosen = static_cast<int>(t);
        }
    }
    return rep;
}

double sigma2_residual(double rss, int n, int s) {
    if (n <= s)
        throw std::invalid_argument("sigma2_residual: undefined for n <= s (n=" +
                                    std::to_string(n) + ", s=" + std::to_string(s) + ")");
    return rss / (n - s);
}

double sigma2_cv(const Eigen::MatrixXd& X01, const Eigen::VectorXd& y, const PathConfig& config,
                 const PathResult& full_path, int K, std::uint64_t seed, int threads) {
    const CvCurve curve = cv_curve(X01, y, config, full_path, K, seed, threads);
    return *std::min_element(curve.mse.begin(), curve.mse.end());
}

FittedModel make_model(const PathResult& path, int point_index, const ScalingRecord& scaling,
                       const std::string& criterion) {
    if (point_index < 0 || point_index >= static_cast<int>(path.points.size()))
        throw std::out_of_range("make_model: path point index out of range");
    const PathPoint& pt = path.points[static_cast<size_t>(point_index)];

    FittedModel m;
    m.d = path.d;
    m.scaling = scaling;
    m.schedule = path.schedule;
    m.intercept = pt.intercept;
    m.lambda = pt.lambda;
    m.rss = pt.rss;
    m.n = path.n;
    m.s = pt.nnz_unique;
    m.criterion = criterion;
    m.candidates = path.group_order;
    std::sort(m.candidates.begin(), m.candidates.end());

    // Atom index within its own (u, r) grid = global column offset minus the
    // group's first column.
    std::map<EffectResolution, int> first_col;
    {
        int c = 0;
        for (const auto& g : path.group_order) {
            first_col[g] = c;
            c += static_cast<int>(path.structure.atom_count(g));
        }
    }
    for (int c = 0; c < pt.beta.size(); ++c) {
        if (pt.beta[c] == 0.0) continue;
        const BasisAtom& atom = path.atoms[static_cast<size_t>(c)];
        ModelTerm t;
        t.er = atom.owner;
        t.atom_index = c - first_col.at(atom.owner);
        t.center = atom.center;
        t.bandwidth = atom.bandwidth;
        t.coef = pt.beta[c];
        m.terms.push_back(std::move(t));
    }
    return m;
}

FitResult fit_model(const Eigen::MatrixXd& X_orig, const Eigen::VectorXd& y,
                    const FitConfig& config, const std::optional<ScalingRecord>& declared_scaling) {
    const ScalingRecord scaling =
        declared_scaling ? *declared_scaling : ScalingRecord::from_data(X_orig);
    const Eigen::MatrixXd X01 = scaling.to_unit(X_orig);

    FitResult out{.model = {}, .path = solve_path(X01, y, config.path), .selection = {}};

    int chosen = -1;
    switch (config.criterion) {
        case Criterion::Deterministic: {
            chosen = out.path.last_stable();
            if (chosen < 0) throw SolverError("fit_model: no stable path point", 0.0);
            out.selection.criterion = "deterministic";
            for (const auto& pt : out.path.points)
                out.selection.rows.push_back({pt.lambda, pt.rss, pt.nnz_unique, 0.0});
            out.selection.chosen = chosen;
            break;
        }
        case Criterion::Aic:
        case Criterion::Bic:
            out.selection = information_criterion(out.path, config.criterion, out.path.n);
            chosen = out.selection.chosen;
            break;
        case Criterion::Cv:
            out.selection = cross_validate(X01, y, config.path, out.path, config.cv_folds,
                                           config.seed, config.threads);
            chosen = out.selection.chosen;
            break;
    }

    out.model = make_model(out.path, chosen, scaling,
                           criterion_name(config.criterion, config.cv_folds));
    if (out.path.n > out.model.s)
        out.model.sigma2 = sigma2_residual(out.model.rss, out.path.n, out.model.s);
    return out;
}

namespace {

json effect_to_json(const EffectResolution& er) {
    json u = json::array();
    for (const int i : er.u) u.push_back(i + 1);  // 1-based on disk
    return json{{"u", u}, {"r", er.r}};
}

EffectResolution effect_from_json(const json& j) {
    std::vector<int> u;
    for (const auto& v : j.at("u")) u.push_back(v.get<int>() - 1);
    return EffectResolution(u, j.at("r").get<int>());
}

}  // namespace

std::string model_to_json(const FittedModel& m) {
    json j;
    j["schema_version"] = m.schema_version;
    j["d"] = m.d;
    j["scaling"] = {{"min", std::vector<double>(m.scaling.lo.begin(), m.scaling.lo.end())},
                    {"max", std::vector<double>(m.scaling.hi.begin(), m.scaling.hi.end())}};
    j["kernel"] = {{"k", m.schedule.kernel_k}};
    j["schedule"] = {{"g0", m.schedule.g0},
                     {"growth", m.schedule.growth},
                     {"h0", m.schedule.h0},
                     {"decay", m.schedule.decay}};
    j["intercept"] = m.intercept;
    json terms = json::array();
    for (const auto& t : m.terms) {
        json jt = effect_to_json(t.er);
        jt["atom_index"] = t.atom_index;
        jt["center"] = t.center;
        jt["bandwidth"] = t.bandwidth;
        jt["coef"] = t.coef;
        terms.push_back(std::move(jt));
    }
    j["terms"] = std::move(terms);
    json cands = json::array();
    for (const auto& g : m.candidates) cands.push_back(effect_to_json(g));
    j["candidates"] = std::move(cands);
    j["lambda"] = m.lambda;
    j["rss"] = m.rss;
    j["n"] = m.n;
    j["s"] = m.s;
    if (m.sigma2) j["sigma2"] = *m.sigma2;
    j["criterion"] = m.criterion;
    if (!m.column_names.empty()) j["columns"] = m.column_names;
    j["response"] = m.response_name;
    return j.dump(2);
}

FittedModel model_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelSchemaError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        const int version = j.at("schema_version").get<int>();
        if (version != 1)
            throw ModelVersionError("model file has schema_version " + std::to_string(version) +
                                    " but this build reads version 1");
        FittedModel m;
        m.schema_version = version;
        m.d = j.at("d").get<int>();
        const auto lo = j.at("scaling").at("min").get<std::vector<double>>();
        const auto hi = j.at("scaling").at("max").get<std::vector<double>>();
        if (static_cast<int>(lo.size()) != m.d || static_cast<int>(hi.size()) != m.d)
            throw ModelSchemaError("model file scaling arrays do not match d");
        m.scaling.lo = Eigen::Map<const Eigen::VectorXd>(lo.data(), m.d);
        m.scaling.hi = Eigen::Map<const Eigen::VectorXd>(hi.data(), m.d);
        m.schedule.kernel_k = j.at("kernel").at("k").get<int>();
        m.schedule.g0 = j.at("schedule").at("g0").get<int>();
        m.schedule.growth = j.at("schedule").at("growth").get<int>();
        m.schedule.h0 = j.at("schedule").at("h0").get<double>();
        m.schedule.decay = j.at("schedule").at("decay").get<double>();
        m.intercept = j.at("intercept").get<double>();
        for (const auto& jt : j.at("terms")) {
            ModelTerm t;
            t.er = effect_from_json(jt);
            t.atom_index = jt.at("atom_index").get<int>();
            t.center = jt.at("center").get<std::vector<double>>();
            if (t.center.size() != t.er.u.size())
                throw ModelSchemaError("model term center length does not match effect order");
            t.bandwidth = jt.at("bandwidth").get<double>();
            t.coef = jt.at("coef").get<double>();
            m.terms.push_back(std::move(t));
        }
        for (const auto& jg : j.at("candidates")) m.candidates.push_back(effect_from_json(jg));
        m.lambda = j.at("lambda").get<double>();
        m.rss = j.at("rss").get<double>();
        m.n = j.at("n").get<int>();
        m.s = j.at("s").get<int>();
        if (j.contains("sigma2")) m.sigma2 = j.at("sigma2").get<double>();
        if (j.contains("criterion")) m.criterion = j.at("criterion").get<std::string>();
        if (j.contains("columns")) {
            m.column_names = j.at("columns").get<std::vector<std::string>>();
            if (static_cast<int>(m.column_names.size()) != m.d)
                throw ModelSchemaError("model file columns array does not match d");
        }
        if (j.contains("response")) m.response_name = j.at("response").get<std::string>();
        return m;
    } catch (const json::exception& e) {
        throw ModelSchemaError(std::string("model file violates the schema: ") + e.what());
    }
}

void save_model(const FittedModel& model, const std::string& file) {
    std::ofstream out(file);
    if (!out) throw ModelIoError("cannot open " + file + " for writing");
    out << model_to_json(model) << "\n";
    if (!out) throw ModelIoError("failed while writing " + file);
}

FittedModel load_model(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ModelIoError("cannot open " + file + " for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return model_from_json(ss.str());
}

}  // namespace mrfa
