#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "error.hpp"

namespace bchd_orbit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline bool all_finite(const Vec& v) { return v.allFinite(); }

inline void require_size(const Vec& v, Eigen::Index n, const char* what)
{
    if (v.size() != n) {
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                             std::to_string(v.size()));
    }
}

/// Eigenvalues of a general square matrix, sorted by descending real part.
inline std::vector<std::complex<double>> eigenvalues(const Mat& a)
{
    if (a.rows() != a.cols()) throw DimensionError("eigenvalues: matrix not square");
    Eigen::EigenSolver<Mat> es(a, false);
    if (es.info() != Eigen::Success) throw Error("eigenvalues: solver did not converge");
    std::vector<std::complex<double>> ev(es.eigenvalues().data(), es.eigenvalues().data() + a.rows());
    std::sort(ev.begin(), ev.end(), [](auto x, auto y) {
        return x.real() != y.real() ? x.real() > y.real() : x.imag() > y.imag();
    });
    return ev;
}

inline bool is_hurwitz(const Mat& a)
{
    for (auto l : eigenvalues(a))
        if (!(l.real() < 0.0)) return false;
    return true;
}

/// Largest eigenvalue of a symmetric matrix.
inline double max_symmetric_eigenvalue(const Mat& s)
{
    Eigen::SelfAdjointEigenSolver<Mat> es(s, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

inline bool is_symmetric_positive_definite(const Mat& m, double sym_tol = 1e-12)
{
    if (m.rows() != m.cols()) return false;
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > sym_tol * std::max(1.0, m.cwiseAbs().maxCoeff())) return false;
    Eigen::LLT<Mat> llt(m);
    return llt.info() == Eigen::Success;
}

/// 2-norm condition number via singular values; infinity for singular input.
inline double condition_number(const Mat& a)
{
    Eigen::JacobiSVD<Mat> svd(a);
    const auto& s = svd.singularValues();
    if (s.size() == 0) return 0.0;
    const double smin = s(s.size() - 1);
    if (smin == 0.0) return std::numeric_limits<double>::infinity();
    return s(0) / smin;
}

/// sqrt((a-b)^T M (a-b))
inline double metric_distance(const Mat& metric, const Vec& a, const Vec& b)
{
    const Vec d = a - b;
    return std::sqrt(std::max(0.0, d.dot(metric * d)));
}

} // namespace bchd_orbit
