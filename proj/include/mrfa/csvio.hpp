#pragma once

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

namespace mrfa {

struct CsvError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Comma-separated numeric table with a required header row. NaN and empty
/// cells are rejected with row/column diagnostics.
struct CsvTable {
    std::vector<std::string> header;
    Eigen::MatrixXd values;  // rows x header.size()

    int column(const std::string& name) const;  // -1 when absent
};

CsvTable read_csv(const std::string& file);
CsvTable parse_csv(const std::string& text, const std::string& origin);

void write_csv(const std::string& file, const std::vector<std::string>& header,
               const Eigen::MatrixXd& values);

std::string format_double(double v);  // 17 significant digits

}  // namespace mrfa
