#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace fos {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using ComplexMatrix = Eigen::MatrixXcd;
using Complex = std::complex<double>;

// Time series are stored one sample per row, one channel per column.
using Series = Eigen::MatrixXd;

namespace detail {

inline void require_dims(bool ok, const std::string& what) {
    if (!ok) throw DimensionError(what);
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

// Numerical rank with the relative threshold sigma_i > scale * sigma_max * rel_tol.
inline Index numerical_rank(const Vector& singular_values, double scale, double rel_tol) {
    if (singular_values.size() == 0) return 0;
    const double smax = singular_values.maxCoeff();
    if (smax <= 0.0) return 0;
    const double thresh = scale * smax * rel_tol;
    Index r = 0;
    for (Index i = 0; i < singular_values.size(); ++i)
        if (singular_values[i] > thresh) ++r;
    return r;
}

inline double reciprocal_condition(const Matrix& m) {
    if (m.size() == 0) return 1.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const Vector& s = svd.singularValues();
    const double smax = s.maxCoeff();
    if (smax == 0.0) return 0.0;
    return s.minCoeff() / smax;
}

inline Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

}  // namespace detail
}  // namespace fos
