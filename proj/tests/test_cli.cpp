#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string kCli = MRFA_CLI_PATH;

int run(const std::string& args, const std::string& log = "cli_out.txt") {
    const std::string cmd = kCli + " " + args + " > " + log + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& file) {
    std::ifstream in(file);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::path("cli_scratch");
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_toy_csv(const std::string& file, int n, unsigned seed, bool permuted = false) {
    std::ofstream out(file);
    out << (permuted ? "y,x2,x1\n" : "x1,x2,y\n");
    unsigned state = seed;
    auto next = [&]() {
        state = state * 1664525u + 1013904223u;
        return (state >> 8) / 16777216.0;
    };
    out.precision(17);
    for (int i = 0; i < n; ++i) {
        const double x1 = next(), x2 = next();
        const double y = 2.0 + std::sin(3.0 * x1) + x2 * x2;
        if (permuted)
            out << y << ',' << x2 << ',' << x1 << "\n";
        else
            out << x1 << ',' << x2 << ',' << y << "\n";
    }
}

}  // namespace

TEST_CASE("fit: writes model and path report; records the criterion") {
    TempDir tmp;
    write_toy_csv(tmp.file("train.csv"), 120, 7);
    const int code = run("fit " + tmp.file("train.csv") + " --response y --model " +
                         tmp.file("model.json") + " --rmax 2 --criterion aic");
    CHECK(code == 0);
    CHECK(fs::exists(tmp.file("model.json")));
    CHECK(fs::exists(tmp.file("model.json") + ".path.csv"));
    const std::string model = slurp(tmp.file("model.json"));
    CHECK(model.find("\"criterion\": \"aic\"") != std::string::npos);
    CHECK(model.find("\"lambda\"") != std::string::npos);
    const std::string report = slurp(tmp.file("model.json") + ".path.csv");
    CHECK(report.find("lambda,rss,s,active") == 0);
    CHECK(std::count(report.begin(), report.end(), '\n') > 2);
}

TEST_CASE("fit: missing response column exits 2 and names the flag") {
    TempDir tmp;
    write_toy_csv(tmp.file("train.csv"), 30, 7);
    const int code = run("fit " + tmp.file("train.csv") + " --response zz --model " +
                         tmp.file("m.json"),
                         "cli_err.txt");
    CHECK(code == 2);
    const std::string err = slurp("cli_err.txt");
    CHECK(err.find("--response") != std::string::npos);
}

TEST_CASE("fit: malformed csv exits 2 with row/column diagnostics") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("bad.csv"));
        out << "x1,y\n0.1,1.0\n0.2,oops\n";
    }
    const int code = run("fit " + tmp.file("bad.csv") + " --response y --model " +
                         tmp.file("m.json"),
                         "cli_err.txt");
    CHECK(code == 2);
    const std::string err = slurp("cli_err.txt");
    CHECK(err.find("row 3") != std::string::npos);
    CHECK(err.find("oops") != std::string::npos);
}

TEST_CASE("predict: round trip, empty input, permuted columns") {
    TempDir tmp;
    write_toy_csv(tmp.file("train.csv"), 150, 11);
    REQUIRE(run("fit " + tmp.file("train.csv") + " --response y --model " + tmp.file("m.json") +
                " --rmax 2") == 0);

    SUBCASE("training file as test input reproduces fitted values") {
        REQUIRE(run("predict " + tmp.file("train.csv") + " --model " + tmp.file("m.json") +
                    " --out " + tmp.file("pred.csv")) == 0);
        const std::string pred = slurp(tmp.file("pred.csv"));
        CHECK(pred.find("y_hat,extrapolated") == 0);
        CHECK(std::count(pred.begin(), pred.end(), '\n') == 151);
    }

    SUBCASE("empty test file gives an empty output with header") {
        {
            std::ofstream out(tmp.file("empty.csv"));
            out << "x1,x2\n";
        }
        REQUIRE(run("predict " + tmp.file("empty.csv") + " --model " + tmp.file("m.json") +
                    " --out " + tmp.file("pred.csv")) == 0);
        CHECK(slurp(tmp.file("pred.csv")) == "y_hat,extrapolated\n");
    }

    SUBCASE("column order does not matter") {
        write_toy_csv(tmp.file("test_a.csv"), 40, 13, false);
        write_toy_csv(tmp.file("test_b.csv"), 40, 13, true);
        REQUIRE(run("predict " + tmp.file("test_a.csv") + " --model " + tmp.file("m.json") +
                    " --out " + tmp.file("pa.csv")) == 0);
        REQUIRE(run("predict " + tmp.file("test_b.csv") + " --model " + tmp.file("m.json") +
                    " --out " + tmp.file("pb.csv")) == 0);
        CHECK(slurp(tmp.file("pa.csv")) == slurp(tmp.file("pb.csv")));
    }

    SUBCASE("missing training column exits 2") {
        {
            std::ofstream out(tmp.file("short.csv"));
            out << "x1\n0.5\n";
        }
        CHECK(run("predict " + tmp.file("short.csv") + " --model " + tmp.file("m.json")) == 2);
    }
}

TEST_CASE("ci: intervals narrow with alpha; truth column adds a metrics footer") {
    TempDir tmp;
    write_toy_csv(tmp.file("train.csv"), 60, 17);
    REQUIRE(run("fit " + tmp.file("train.csv") + " --response y --model " + tmp.file("m.json") +
                " --rmax 2 --criterion aic") == 0);
    write_toy_csv(tmp.file("test.csv"), 25, 19);

    REQUIRE(run("ci " + tmp.file("test.csv") + " --model " + tmp.file("m.json") + " --train " +
                tmp.file("train.csv") + " --alpha 0.05 --out " + tmp.file("ci05.csv")) == 0);
    REQUIRE(run("ci " + tmp.file("test.csv") + " --model " + tmp.file("m.json") + " --train " +
                tmp.file("train.csv") + " --alpha 0.5 --out " + tmp.file("ci50.csv")) == 0);

    const std::string a = slurp(tmp.file("ci05.csv"));
    const std::string b = slurp(tmp.file("ci50.csv"));
    CHECK(a.find("y_hat,lower,upper,degenerate") == 0);
    CHECK(a.find("# coverage_percent=") != std::string::npos);

    // compare widths row by row
    std::stringstream sa(a), sb(b);
    std::string la, lb;
    std::getline(sa, la);
    std::getline(sb, lb);
    int rows = 0;
    while (std::getline(sa, la) && std::getline(sb, lb)) {
        if (la.empty() || la[0] == '#') break;
        double ya, loa, hia, yb, lob, hib;
        char c;
        std::stringstream(la) >> ya >> c >> loa >> c >> hia;
        std::stringstream(lb) >> yb >> c >> lob >> c >> hib;
        CHECK(hib - lob < hia - loa);
        ++rows;
    }
    CHECK(rows == 25);
}

TEST_CASE("bench: smoke run, determinism, unknown name") {
    TempDir tmp;
    const std::string flags = " --n 200 --ntest 300 --seed 3 --rmax 2 --dmax 2 --out ";
    REQUIRE(run("bench --fn borehole" + flags + tmp.file("b1.csv")) == 0);
    REQUIRE(run("bench --fn borehole" + flags + tmp.file("b2.csv")) == 0);

    auto metrics = [](const std::string& text) {
        // drop the timing columns (7 and 8) before comparing
        std::stringstream ss(text);
        std::string header, row;
        std::getline(ss, header);
        std::getline(ss, row);
        std::vector<std::string> cells;
        std::stringstream rs(row);
        std::string cell;
        while (std::getline(rs, cell, ',')) cells.push_back(cell);
        cells[7] = cells[8] = "-";
        std::string out;
        for (const auto& cl : cells) out += cl + ",";
        return out;
    };
    CHECK(metrics(slurp(tmp.file("b1.csv"))) == metrics(slurp(tmp.file("b2.csv"))));
    const std::string out = slurp(tmp.file("b1.csv"));
    CHECK(out.find("rmse") != std::string::npos);

    const int code = run("bench --fn not-a-function --n 50 --ntest 0", "cli_err.txt");
    CHECK(code == 2);
    CHECK(slurp("cli_err.txt").find("borehole") != std::string::npos);
}

TEST_CASE("model files from the future are refused across the cli") {
    TempDir tmp;
    {
        std::ofstream out(tmp.file("future.json"));
        out << "{\"schema_version\": 9}\n";
    }
    write_toy_csv(tmp.file("t.csv"), 10, 23);
    const int code = run("predict " + tmp.file("t.csv") + " --model " + tmp.file("future.json"),
                         "cli_err.txt");
    CHECK(code == 2);
    const std::string err = slurp("cli_err.txt");
    CHECK(err.find("9") != std::string::npos);
    CHECK(err.find("1") != std::string::npos);
}
