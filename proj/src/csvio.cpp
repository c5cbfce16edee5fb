#include "mrfa/csvio.hpp"

#include <cmath>
#include <charconv>
#include <fstream>
#include <sstream>

namespace mrfa {

int CsvTable::column(const std::string& name) const {
    for (size_t j = 0; j < header.size(); ++j)
        if (header[j] == name) return static_cast<int>(j);
    return -1;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& origin) {
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line)) throw CsvError(origin + ": empty file (header required)");
    CsvTable table;
    for (const auto& h : split_line(line)) {
        const std::string name = trim(h);
        if (name.empty()) throw CsvError(origin + ": empty column name in header");
        table.header.push_back(name);
    }
    const size_t ncol = table.header.size();

    std::vector<double> data;
    int nrow = 0;
    int lineno = 1;
    while (std::getline(ss, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != ncol)
            throw CsvError(origin + ": row " + std::to_string(lineno) + " has " +
                           std::to_string(cells.size()) + " cells, expected " +
                           std::to_string(ncol));
        for (size_t j = 0; j < ncol; ++j) {
            const std::string cell = trim(cells[j]);
            if (cell.empty())
                throw CsvError(origin + ": empty cell at row " + std::to_string(lineno) +
                               ", column '" + table.header[j] + "'");
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc() || ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw CsvError(origin + ": non-numeric value '" + cell + "' at row " +
                               std::to_string(lineno) + ", column '" + table.header[j] + "'");
            data.push_back(v);
        }
        ++nrow;
    }
    table.values.resize(nrow, static_cast<Eigen::Index>(ncol));
    for (int i = 0; i < nrow; ++i)
        for (size_t j = 0; j < ncol; ++j)
            table.values(i, static_cast<Eigen::Index>(j)) = data[static_cast<size_t>(i) * ncol + j];
    return table;
}

CsvTable read_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw CsvError(file + ": cannot open for reading");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_csv(ss.str(), file);
}

std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

void write_csv(const std::string& file, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values) {
    std::ofstream out(file);
    if (!out) throw CsvError(file + ": cannot open for writing");
    for (size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << "\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        for (Eigen::Index j = 0; j < values.cols(); ++j)
            out << (j ? "," : "") << format_double(values(i, j));
        out << "\n";
    }
    if (!out) throw CsvError(file + ": failed while writing");
}

}  // namespace mrfa
