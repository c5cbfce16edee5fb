#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "mrfa/benchfuncs.hpp"
#include "mrfa/csvio.hpp"
#include "mrfa/inference.hpp"
#include "mrfa/model.hpp"

namespace {

constexpr int kExitUser = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitCapacity = 4;

struct CliOptions {
    std::string train_csv;
    std::string test_csv;
    std::string model_file = "model.json";
    std::string out;
    std::string response;
    std::string criterion = "det";
    std::string ci_variant = "ridge";
    std::string bench_fn;
    int dmax = 10;
    int rmax = 10;
    double rho = 0.96;
    double lambda_min_ratio = 1e-4;
    double alpha = 0.05;
    std::uint64_t seed = 0;
    int threads = 0;
    int bench_n = 1000;
    int bench_ntest = 10000;
    bool bench_ci = false;
};

mrfa::FitConfig make_fit_config(const CliOptions& opt) {
    mrfa::FitConfig cfg;
    cfg.path.d_max = opt.dmax;
    cfg.path.r_max = opt.rmax;
    cfg.path.rho = opt.rho;
    cfg.path.lambda_min_ratio = opt.lambda_min_ratio;
    cfg.seed = opt.seed;
    cfg.threads = opt.threads;

    std::string c = opt.criterion;
    if (c == "det" || c == "deterministic") {
        cfg.criterion = mrfa::Criterion::Deterministic;
    } else if (c == "aic") {
        cfg.criterion = mrfa::Criterion::Aic;
    } else if (c == "bic") {
        cfg.criterion = mrfa::Criterion::Bic;
    } else if (c.rfind("cv:", 0) == 0) {
        cfg.criterion = mrfa::Criterion::Cv;
        cfg.cv_folds = std::stoi(c.substr(3));
    } else {
        throw mrfa::CsvError("unknown --criterion '" + c + "' (use det, aic, bic or cv:K)");
    }
    return cfg;
}

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("MRFA_THREADS")) {
        const int v = std::atoi(env);
        if (v > 0) return v;
    }
    return 1;
}

struct Frame {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    bool has_response = false;
    std::vector<std::string> columns;
};

Frame split_response(const mrfa::CsvTable& table, const std::string& response, bool require) {
    const int rcol = table.column(response);
    if (rcol < 0 && require)
        throw mrfa::CsvError("response column '" + response +
                             "' not found; name it with --response");
    Frame f;
    f.has_response = rcol >= 0;
    const int d = static_cast<int>(table.header.size()) - (f.has_response ? 1 : 0);
    f.X.resize(table.values.rows(), d);
    if (f.has_response) f.y.resize(table.values.rows());
    int k = 0;
    for (size_t j = 0; j < table.header.size(); ++j) {
        if (static_cast<int>(j) == rcol) {
            f.y = table.values.col(static_cast<Eigen::Index>(j));
            continue;
        }
        f.columns.push_back(table.header[j]);
        f.X.col(k++) = table.values.col(static_cast<Eigen::Index>(j));
    }
    return f;
}

// Reorder test columns by the model's training column names.
Eigen::MatrixXd align_columns(const mrfa::CsvTable& table, const mrfa::FittedModel& model) {
    Eigen::MatrixXd X(table.values.rows(), model.d);
    for (int j = 0; j < model.d; ++j) {
        const std::string& name = model.column_names.empty()
                                      ? ("x" + std::to_string(j + 1))
                                      : model.column_names[static_cast<size_t>(j)];
        const int col = table.column(name);
        if (col < 0)
            throw mrfa::CsvError("test file is missing training column '" + name + "'");
        X.col(j) = table.values.col(col);
    }
    return X;
}

void write_path_report(const std::string& file, const mrfa::PathResult& path) {
    std::ofstream out(file);
    if (!out) throw mrfa::CsvError(file + ": cannot open for writing");
    out << "lambda,rss,s,active\n";
    for (const auto& pt : path.points) {
        out << mrfa::format_double(pt.lambda) << ',' << mrfa::format_double(pt.rss) << ','
            << pt.nnz_unique << ",\"";
        bool first = true;
        for (const auto& g : pt.active) {
            if (!first) out << ';';
            out << g.str();
            first = false;
        }
        out << "\"\n";
    }
}

int cmd_fit(const CliOptions& opt) {
    const mrfa::CsvTable table = mrfa::read_csv(opt.train_csv);
    Frame frame = split_response(table, opt.response, true);
    if (frame.X.cols() == 0) throw mrfa::CsvError("no input columns besides the response");

    mrfa::FitConfig cfg = make_fit_config(opt);
    mrfa::FitResult fit = mrfa::fit_model(frame.X, frame.y, cfg);
    fit.model.column_names = frame.columns;
    fit.model.response_name = opt.response;

    mrfa::save_model(fit.model, opt.model_file);
    const std::string report = opt.out.empty() ? opt.model_file + ".path.csv" : opt.out;
    write_path_report(report, fit.path);
    std::cout << "fit: n=" << fit.path.n << " d=" << fit.path.d
              << " points=" << fit.path.points.size() << " chosen lambda="
              << mrfa::format_double(fit.model.lambda) << " s=" << fit.model.s
              << " rss=" << mrfa::format_double(fit.model.rss) << "\n"
              << "model written to " << opt.model_file << ", path report to " << report << "\n";
    return 0;
}

int cmd_predict(const CliOptions& opt) {
    const mrfa::FittedModel model = mrfa::load_model(opt.model_file);
    const mrfa::CsvTable table = mrfa::read_csv(opt.test_csv);
    const Eigen::MatrixXd X = align_columns(table, model);
    const mrfa::PredictResult pred = model.predict(X, resolve_threads(opt.threads));

    const std::string out_file = opt.out.empty() ? "predictions.csv" : opt.out;
    std::ofstream out(out_file);
    if (!out) throw mrfa::CsvError(out_file + ": cannot open for writing");
    out << "y_hat,extrapolated\n";
    for (Eigen::Index i = 0; i < pred.y.size(); ++i)
        out << mrfa::format_double(pred.y[i]) << ','
            << (pred.extrapolated[static_cast<size_t>(i)] ? "true" : "false") << "\n";
    std::cout << "predictions written to " << out_file << " (" << pred.y.size() << " rows)\n";
    return 0;
}

int cmd_ci(const CliOptions& opt) {
    mrfa::FittedModel model = mrfa::load_model(opt.model_file);
    const mrfa::CsvTable train = mrfa::read_csv(opt.train_csv);
    const int rcol = train.column(model.response_name);
    if (rcol < 0)
        throw mrfa::CsvError("training file is missing response column '" + model.response_name +
                             "'");
    const Eigen::MatrixXd Xtr = align_columns(train, model);
    const Eigen::VectorXd ytr = train.values.col(rcol);

    const mrfa::CsvTable test = mrfa::read_csv(opt.test_csv);
    const Eigen::MatrixXd Xte = align_columns(test, model);
    const int truth_col = test.column(model.response_name);

    mrfa::WOptions wopts;
    std::optional<double> sigma2_override;
    if (opt.ci_variant == "lasso") {
        wopts.variant = mrfa::WOptions::Variant::Lasso;
    } else if (opt.ci_variant == "apley") {
        wopts.variant = mrfa::WOptions::Variant::Ridge;
        mrfa::FitConfig cfg = make_fit_config(opt);
        const mrfa::ApleyResult apley =
            mrfa::apley_sigma2(Xtr, ytr, cfg, opt.alpha, std::min<int>(10, Xtr.rows() / 2), wopts);
        sigma2_override = apley.sigma2;
        std::cout << "apley: corrected sigma2=" << mrfa::format_double(apley.sigma2)
                  << " fold coverage=" << apley.fold_coverage * 100.0 << "%"
                  << (apley.flat_objective ? " (flat objective)" : "") << "\n";
    } else if (opt.ci_variant != "ridge") {
        throw mrfa::CsvError("unknown --ci-variant '" + opt.ci_variant +
                             "' (use ridge, lasso or apley)");
    }

    const mrfa::CiEngine engine(model, Xtr, ytr, wopts, sigma2_override);
    const mrfa::PredictResult pred = model.predict(Xte, resolve_threads(opt.threads));

    const std::string out_file = opt.out.empty() ? "intervals.csv" : opt.out;
    std::ofstream out(out_file);
    if (!out) throw mrfa::CsvError(out_file + ": cannot open for writing");
    out << "y_hat,lower,upper,degenerate\n";
    std::vector<std::pair<double, double>> intervals;
    std::vector<double> truths;
    for (Eigen::Index i = 0; i < Xte.rows(); ++i) {
        try {
            const mrfa::Interval iv = engine.interval(Xte.row(i).transpose(), opt.alpha);
            out << mrfa::format_double(pred.y[i]) << ',' << mrfa::format_double(iv.lower) << ','
                << mrfa::format_double(iv.upper) << ",false\n";
            if (truth_col >= 0) {
                intervals.emplace_back(iv.lower, iv.upper);
                truths.push_back(test.values(i, truth_col));
            }
        } catch (const mrfa::DegeneratePointError&) {
            out << mrfa::format_double(pred.y[i]) << ",,,true\n";
        }
    }
    if (truth_col >= 0 && !intervals.empty()) {
        const mrfa::CoverageMetrics m = mrfa::coverage_metrics(intervals, truths, opt.alpha);
        out << "# coverage_percent=" << m.coverage_percent << ",avg_width=" << m.avg_width
            << ",avg_interval_score=" << m.avg_score << "\n";
        std::cout << "coverage=" << m.coverage_percent << "% avg_width=" << m.avg_width
                  << " avg_interval_score=" << m.avg_score << "\n";
    }
    std::cout << "intervals written to " << out_file << "\n";
    return 0;
}

int cmd_bench(const CliOptions& opt) {
    mrfa::BenchConfig cfg;
    cfg.fit = make_fit_config(opt);
    cfg.with_ci = opt.bench_ci;
    cfg.alpha = opt.alpha;
    cfg.ci_variant = opt.ci_variant == "apley" ? "ridge" : opt.ci_variant;

    const mrfa::BenchResult r =
        mrfa::run_benchmark(opt.bench_fn, opt.bench_n, opt.bench_ntest, opt.seed, cfg);

    std::cout << "function        " << r.name << "\n"
              << "n / n_test / d  " << r.n << " / " << r.n_test << " / " << r.d << "\n"
              << "criterion       " << r.criterion << " (lambda=" << mrfa::format_double(r.lambda)
              << ")\n"
              << "fit time (s)    " << r.fit_seconds << "\n"
              << "predict time(s) " << r.predict_seconds << "\n"
              << "RMSE            " << (r.n_test > 0 ? mrfa::format_double(r.rmse) : "-") << "\n"
              << "detection       " << (r.variable_detection ? "true" : "false") << "\n";
    if (r.coverage_percent)
        std::cout << "coverage        " << *r.coverage_percent << "%\n"
                  << "avg width       " << *r.avg_width << "\n"
                  << "interval score  " << *r.avg_interval_score << "\n";

    if (!opt.out.empty()) {
        std::ofstream out(opt.out);
        if (!out) throw mrfa::CsvError(opt.out + ": cannot open for writing");
        out << mrfa::bench_csv_header() << "\n" << mrfa::bench_csv_row(r) << "\n";
        std::cout << "results written to " << opt.out << "\n";
    } else {
        std::cout << mrfa::bench_csv_header() << "\n" << mrfa::bench_csv_row(r) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-resolution functional ANOVA emulator"};
    app.set_config("--config", "", "Config file with the same keys as the long flags");
    CliOptions opt;

    auto add_fit_flags = [&](CLI::App* cmd) {
        cmd->add_option("--dmax", opt.dmax, "Maximal interaction order");
        cmd->add_option("--rmax", opt.rmax, "Maximal resolution level");
        cmd->add_option("--rho", opt.rho, "Geometric lambda decrease factor")
            ->check(CLI::Range(1e-6, 0.999999));
        cmd->add_option("--lambda-min-ratio", opt.lambda_min_ratio,
                        "Stop the path at lambda_max times this ratio");
        cmd->add_option("--criterion", opt.criterion, "det | aic | bic | cv:K");
        cmd->add_option("--seed", opt.seed, "Random seed (folds, designs)");
        cmd->add_option("--threads", opt.threads,
                        "Worker threads (0: MRFA_THREADS env var, then 1)");
    };

    CLI::App* fit = app.add_subcommand("fit", "Fit a model from a CSV file");
    fit->add_option("train", opt.train_csv, "Training CSV with header")->required();
    fit->add_option("--response", opt.response, "Response column name")->required();
    fit->add_option("--model", opt.model_file, "Output model file");
    fit->add_option("--out", opt.out, "Path report CSV (default: <model>.path.csv)");
    add_fit_flags(fit);

    CLI::App* predict = app.add_subcommand("predict", "Predict at new inputs");
    predict->add_option("test", opt.test_csv, "Test CSV with header")->required();
    predict->add_option("--model", opt.model_file, "Model file")->required();
    predict->add_option("--out", opt.out, "Predictions CSV");
    predict->add_option("--threads", opt.threads, "Worker threads");

    CLI::App* ci = app.add_subcommand("ci", "Pointwise confidence intervals");
    ci->add_option("test", opt.test_csv, "Test CSV with header")->required();
    ci->add_option("--model", opt.model_file, "Model file")->required();
    ci->add_option("--train", opt.train_csv, "Training CSV (the score needs it)")->required();
    ci->add_option("--alpha", opt.alpha, "1 - confidence level")->check(CLI::Range(1e-9, 0.999999));
    ci->add_option("--ci-variant", opt.ci_variant, "ridge | lasso | apley");
    ci->add_option("--out", opt.out, "Intervals CSV");
    add_fit_flags(ci);

    CLI::App* bench = app.add_subcommand("bench", "Run a benchmark function end to end");
    bench->add_option("--fn", opt.bench_fn, "Test function name")->required();
    bench->add_option("--n", opt.bench_n, "Training size");
    bench->add_option("--ntest", opt.bench_ntest, "Test size (0: fit only)");
    bench->add_option("--alpha", opt.alpha, "CI level for --ci");
    bench->add_flag("--ci", opt.bench_ci, "Also compute interval metrics");
    bench->add_option("--ci-variant", opt.ci_variant, "ridge | lasso");
    bench->add_option("--out", opt.out, "Results CSV");
    add_fit_flags(bench);

    app.require_subcommand(1);
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUser;
    }

    try {
        if (fit->parsed()) return cmd_fit(opt);
        if (predict->parsed()) return cmd_predict(opt);
        if (ci->parsed()) return cmd_ci(opt);
        if (bench->parsed()) return cmd_bench(opt);
    } catch (const mrfa::CapacityError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitCapacity;
    } catch (const mrfa::SolverError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const mrfa::IllConditionedError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const mrfa::CsvError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const mrfa::ModelIoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const mrfa::ModelSchemaError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const mrfa::ModelVersionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
