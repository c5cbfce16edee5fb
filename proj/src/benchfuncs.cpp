#include "mrfa/benchfuncs.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

#include "mrfa/inference.hpp"
#include "mrfa/rng.hpp"

namespace mrfa {

namespace {

constexpr double kPi = 3.14159265358979323846;

double additive10(const double* x) {
    return std::sin(1.5 * x[0] * kPi) + 3.0 * std::cos(3.5 * x[1] * kPi) + 5.0 * std::exp(x[2]) +
           2.0 * std::cos(x[1] * kPi) * std::sin(x[2] * kPi);
}

double borehole(const double* x) {
    const double rw = x[0], r = x[1], Tu = x[2], Hu = x[3], Tl = x[4], Hl = x[5], L = x[6],
                 Kw = x[7];
    const double lnr = std::log(r / rw);
    return 2.0 * kPi * Tu * (Hu - Hl) /
           (lnr * (1.0 + 2.0 * L * Tu / (lnr * rw * rw * Kw) + Tu / Tl));
}

double gramacy_lee(const double* x) {
    const double t = std::pow(0.9 * (x[0] + 0.48), 10.0);
    return std::exp(std::sin(t)) + x[1] * x[2] + x[3];
}

double bending(const double* x) {
    const double L = x[0], b = x[1], h = x[2];
    return 4e-9 * L * L * L / (b * h * h * h);
}

double otl_circuit(const double* x) {
    const double Rb1 = x[0], Rb2 = x[1], Rf = x[2], Rc1 = x[3], Rc2 = x[4], B = x[5];
    const double Vb1 = 12.0 * Rb2 / (Rb1 + Rb2);
    const double denom = B * (Rc2 + 9.0) + Rf;
    return (Vb1 + 0.74) * B * (Rc2 + 9.0) / denom + 11.35 * Rf / denom +
           0.74 * Rf * B * (Rc2 + 9.0) / (denom * Rc1);
}

double wing_weight(const double* x) {
    const double Sw = x[0], Wfw = x[1], A = x[2], Lam = x[3] * kPi / 180.0, q = x[4], R = x[5],
                 tc = x[6], Nz = x[7], Wdg = x[8], Wp = x[9];
    const double c = std::cos(Lam);
    return 0.036 * std::pow(Sw, 0.758) * std::pow(Wfw, 0.0035) * std::pow(A / (c * c), 0.6) *
               std::pow(q, 0.006) * std::pow(R, 0.04) * std::pow(100.0 * tc / c, -0.3) *
               std::pow(Nz * Wdg, 0.49) +
           Sw * Wp;
}

std::vector<TestFunction> make_registry() {
    std::vector<TestFunction> fns;
    fns.push_back({"additive10", 10, std::vector<std::pair<double, double>>(10, {0.0, 1.0}), 0.0,
                   additive10});
    fns.push_back({"borehole",
                   8,
                   {{0.05, 0.15},
                    {100.0, 50000.0},
                    {63070.0, 115600.0},
                    {990.0, 1110.0},
                    {63.1, 116.0},
                    {700.0, 820.0},
                    {1120.0, 1680.0},
                    {9855.0, 12045.0}},
                   0.0,
                   borehole});
    fns.push_back({"gramacy-lee", 6, std::vector<std::pair<double, double>>(6, {0.0, 1.0}), 0.05,
                   gramacy_lee});
    fns.push_back({"bending", 3, {{10.0, 20.0}, {1.0, 2.0}, {0.1, 0.2}}, 0.0, bending});
    fns.push_back({"otl-circuit",
                   6,
                   {{50.0, 150.0}, {25.0, 70.0}, {0.5, 3.0}, {1.2, 2.5}, {0.25, 1.2}, {50.0, 300.0}},
                   0.0,
                   otl_circuit});
    fns.push_back({"wing-weight",
                   10,
                   {{150.0, 200.0},
                    {220.0, 300.0},
                    {6.0, 10.0},
                    {-10.0, 10.0},
                    {16.0, 45.0},
                    {0.5, 1.0},
                    {0.08, 0.18},
                    {2.5, 6.0},
                    {1700.0, 2500.0},
                    {0.025, 0.08}},
                   0.0,
                   wing_weight});
    return fns;
}

const std::vector<TestFunction>& registry() {
    static const std::vector<TestFunction> fns = make_registry();
    return fns;
}

}  // namespace

const std::vector<std::string>& test_function_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> out;
        for (const auto& f : registry()) out.push_back(f.name);
        return out;
    }();
    return names;
}

const TestFunction& test_function(const std::string& name) {
    for (const auto& f : registry())
        if (f.name == name) return f;
    std::string all;
    for (const auto& f : registry()) all += (all.empty() ? "" : ", ") + f.name;
    throw std::invalid_argument("unknown test function '" + name + "' (valid: " + all + ")");
}

double eval_function(const std::string& name, const std::vector<double>& x, bool* out_of_range) {
    const TestFunction& f = test_function(name);
    if (static_cast<int>(x.size()) != f.d)
        throw std::invalid_argument(f.name + " expects " + std::to_string(f.d) +
                                    " inputs, got " + std::to_string(x.size()));
    if (out_of_range) {
        *out_of_range = false;
        for (int j = 0; j < f.d; ++j)
            if (x[static_cast<size_t>(j)] < f.ranges[static_cast<size_t>(j)].first ||
                x[static_cast<size_t>(j)] > f.ranges[static_cast<size_t>(j)].second)
                *out_of_range = true;
    }
    return f.eval(x.data());
}

Eigen::MatrixXd generate_design(int n, const std::vector<std::pair<double, double>>& ranges,
                                std::uint64_t seed, int replicate) {
    if (n < 1) throw std::invalid_argument("generate_design: n must be >= 1");
    if (replicate < 1) throw std::invalid_argument("generate_design: replicate must be >= 1");
    if (n % replicate != 0)
        throw std::invalid_argument("generate_design: replicate must divide n");
    const int d = static_cast<int>(ranges.size());
    const int unique = n / replicate;
    Rng rng(seed);
    Eigen::MatrixXd X(n, d);
    for (int i = 0; i < unique; ++i) {
        for (int j = 0; j < d; ++j)
            X(static_cast<Eigen::Index>(i) * replicate, j) =
                rng.uniform(ranges[static_cast<size_t>(j)].first, ranges[static_cast<size_t>(j)].second);
        for (int r = 1; r < replicate; ++r)
            X.row(static_cast<Eigen::Index>(i) * replicate + r) =
                X.row(static_cast<Eigen::Index>(i) * replicate);
    }
    return X;
}

CoverageMetrics coverage_metrics(const std::vector<std::pair<double, double>>& intervals,
                                 const std::vector<double>& truths, double alpha) {
    if (intervals.empty()) throw std::invalid_argument("coverage_metrics: empty input");
    if (intervals.size() != truths.size())
        throw std::invalid_argument("coverage_metrics: intervals/truths length mismatch");
    CoverageMetrics m;
    for (size_t i = 0; i < intervals.size(); ++i) {
        const auto [lo, hi] = intervals[i];
        if (truths[i] >= lo && truths[i] <= hi) m.coverage_percent += 1.0;
        m.avg_width += hi - lo;
        m.avg_score += interval_score(lo, hi, truths[i], alpha);
    }
    const double count = static_cast<double>(intervals.size());
    m.coverage_percent *= 100.0 / count;
    m.avg_width /= count;
    m.avg_score /= count;
    return m;
}

BenchResult run_benchmark(const std::string& name, int n, int n_test, std::uint64_t seed,
                          const BenchConfig& config) {
    const TestFunction& fn = test_function(name);
    const int d = (config.pad_dim > fn.d) ? config.pad_dim : fn.d;

    std::vector<std::pair<double, double>> ranges = fn.ranges;
    for (int j = fn.d; j < d; ++j) ranges.emplace_back(0.0, 1.0);  // inert padding

    const int replicate = (fn.noise_sigma > 0.0) ? 5 : 1;
    const Eigen::MatrixXd X = generate_design(n, ranges, seed, replicate);

    std::vector<double> row(static_cast<size_t>(fn.d));
    auto eval_row = [&](const Eigen::MatrixXd& M, int i) {
        for (int j = 0; j < fn.d; ++j) row[static_cast<size_t>(j)] = M(i, j);
        return fn.eval(row.data());
    };

    Eigen::VectorXd y(n);
    {
        Rng noise(seed ^ 0xabcdef1234567890ULL);
        for (int i = 0; i < n; ++i) {
            y[i] = eval_row(X, i);
            if (fn.noise_sigma > 0.0) y[i] += fn.noise_sigma * noise.normal();
        }
    }

    BenchResult result;
    result.name = name;
    result.n = n;
    result.n_test = n_test;
    result.d = d;
    result.seed = seed;
    result.criterion = criterion_name(config.fit.criterion, config.fit.cv_folds);

    const auto t0 = std::chrono::steady_clock::now();
    const FitResult fit = fit_model(X, y, config.fit, ScalingRecord::from_ranges(ranges));
    const auto t1 = std::chrono::steady_clock::now();
    result.fit_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.lambda = fit.model.lambda;

    const auto& chosen = fit.path.points[static_cast<size_t>(fit.selection.chosen)];
    for (const auto& g : chosen.active) result.active_effects.push_back(g.str());
    result.variable_detection = true;
    for (const auto& g : chosen.active)
        for (const int idx : g.u)
            if (idx > 2) result.variable_detection = false;

    if (n_test > 0) {
        const Eigen::MatrixXd Xt = generate_design(n_test, ranges, seed + 1, 1);
        Eigen::VectorXd truth(n_test);
        for (int i = 0; i < n_test; ++i) truth[i] = eval_row(Xt, i);

        const auto t2 = std::chrono::steady_clock::now();
        const PredictResult pred = fit.model.predict(Xt, config.fit.threads);
        const auto t3 = std::chrono::steady_clock::now();
        result.predict_seconds = std::chrono::duration<double>(t3 - t2).count();
        result.rmse = std::sqrt((pred.y - truth).squaredNorm() / n_test);

        if (config.with_ci) {
            WOptions wopts;
            wopts.variant = (config.ci_variant == "lasso") ? WOptions::Variant::Lasso
                                                           : WOptions::Variant::Ridge;
            const CiEngine engine(fit.model, X, y, wopts);
            std::vector<std::pair<double, double>> intervals;
            std::vector<double> truths;
            const int m = std::min(n_test, config.ci_points);
            for (int i = 0; i < m; ++i) {
                try {
                    const Interval iv = engine.interval(Xt.row(i).transpose(), config.alpha);
                    intervals.emplace_back(iv.lower, iv.upper);
                    truths.push_back(truth[i]);
                } catch (const DegeneratePointError&) {
                } catch (const IllConditionedError&) {
                }
            }
            if (!intervals.empty()) {
                const CoverageMetrics cm = coverage_metrics(intervals, truths, config.alpha);
                result.coverage_percent = cm.coverage_percent;
                result.avg_width = cm.avg_width;
                result.avg_interval_score = cm.avg_score;
            }
        }
    }
    return result;
}

std::string bench_csv_header() {
    return "name,n,n_test,d,seed,criterion,lambda,fit_seconds,predict_seconds,rmse,"
           "variable_detection,coverage_percent,avg_width,avg_interval_score";
}

namespace {
std::string num(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}
}  // namespace

std::string bench_csv_row(const BenchResult& r) {
    std::ostringstream ss;
    ss << r.name << ',' << r.n << ',' << r.n_test << ',' << r.d << ',' << r.seed << ','
       << r.criterion << ',' << num(r.lambda) << ',' << num(r.fit_seconds) << ','
       << num(r.predict_seconds) << ',' << num(r.rmse) << ','
       << (r.variable_detection ? "true" : "false") << ','
       << (r.coverage_percent ? num(*r.coverage_percent) : "") << ','
       << (r.avg_width ? num(*r.avg_width) : "") << ','
       << (r.avg_interval_score ? num(*r.avg_interval_score) : "");
    return ss.str();
}

}  // namespace mrfa
