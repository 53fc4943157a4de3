#pragma once

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

namespace degen_kpp::io {

using Json = nlohmann::ordered_json;

/// JSON has no infinities: non-finite values become the strings "inf", "-inf", "nan".
inline Json number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0.0 ? "inf" : "-inf";
    return v;
}

inline Json numbers(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(number(x));
    return a;
}

/// Inverse of number(): accepts numbers and the three spelled-out strings.
inline double to_double(const Json& j) {
    if (j.is_number()) return j.get<double>();
    const auto s = j.get<std::string>();
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (s == "inf") return inf;
    if (s == "-inf") return -inf;
    return std::numeric_limits<double>::quiet_NaN();
}

}  // namespace degen_kpp::io
