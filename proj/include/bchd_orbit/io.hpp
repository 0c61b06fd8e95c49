#pragma once

#include <charconv>
#include <complex>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "linalg.hpp"

namespace bchd_orbit {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v)
{
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc()) return std::to_string(v);
    return std::string(buf, res.ptr);
}

inline std::string format_vector(const Vec& v, const char* sep = ",")
{
    std::string s;
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (i) s += sep;
        s += format_double(v(i));
    }
    return s;
}

inline std::string format_matrix(const Mat& m)
{
    std::string s = "[";
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        s += i ? ";" : "";
        for (Eigen::Index j = 0; j < m.cols(); ++j) s += (j ? "," : "") + format_double(m(i, j));
    }
    return s + "]";
}

inline std::string format_complex_list(const std::vector<std::complex<double>>& v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) s += ";";
        s += format_double(v[i].real());
        if (v[i].imag() != 0.0) s += (v[i].imag() > 0 ? "+" : "") + format_double(v[i].imag()) + "i";
    }
    return s;
}

/// RFC 4180 quoting for a single CSV field.
inline std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

} // namespace bchd_orbit
