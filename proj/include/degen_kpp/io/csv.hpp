#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "../errors.hpp"

namespace degen_kpp::io {

/// Shortest text that round-trips a double: 17 significant digits, with
/// inf, -inf and nan spelled out.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// CSV table with `#` comment lines before the header row.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    /// Optional leading text column (curve labels); empty when unused.
    std::string label_column;
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row, std::string label = {}) {
        if (row.size() != columns.size()) throw DomainError("CSV row width does not match the header");
        if (!label_column.empty()) labels.push_back(std::move(label));
        rows.push_back(std::move(row));
    }

    void write(std::ostream& os) const {
        for (const auto& c : comments) os << "# " << c << '\n';
        bool first = true;
        if (!label_column.empty()) {
            os << label_column;
            first = false;
        }
        for (const auto& c : columns) {
            if (!first) os << ',';
            os << c;
            first = false;
        }
        os << '\n';
        for (std::size_t i = 0; i < rows.size(); ++i) {
            first = true;
            if (!label_column.empty()) {
                os << labels[i];
                first = false;
            }
            for (double v : rows[i]) {
                if (!first) os << ',';
                os << format_double(v);
                first = false;
            }
            os << '\n';
        }
    }
};

}  // namespace degen_kpp::io
