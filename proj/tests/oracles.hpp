#pragma once

// Independent reference computations used by the tests. Nothing here calls the
// library's kernels; each routine is written from the defining formula.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Generalised binomial coefficient binom(a, j) as a plain product.
inline double binom(double a, int j) {
    double v = 1.0;
    for (int i = 0; i < j; ++i) v *= (a - i) / (i + 1);
    return v;
}

/// (-1)^j binom(a, j).
inline double gl(double a, int j) { return ((j % 2) ? -1.0 : 1.0) * binom(a, j); }

/// Direct evaluation of  sum_j gl(a_i, j) x_i[k+1-j] = (A x[k] + B u[k] + w[k])_i
/// solved for x[k+1]; rows of the result are time.
inline Matrix gl_simulate(const Vector& alpha, const Matrix& A, const Matrix& B, const Vector& x0, const Matrix& u,
                          const Matrix& w, int K) {
    const int n = static_cast<int>(A.rows());
    Matrix x = Matrix::Zero(K + 1, n);
    x.row(0) = x0.transpose();
    for (int k = 0; k < K; ++k) {
        Vector rhs = A * x.row(k).transpose();
        if (u.size() > 0) rhs += B * u.row(k).transpose();
        if (w.size() > 0) rhs += w.row(k).transpose();
        for (int i = 0; i < n; ++i) {
            double mem = 0.0;
            for (int j = 1; j <= k + 1; ++j) mem += gl(alpha[i], j) * x(k + 1 - j, i);
            x(k + 1, i) = rhs[i] - mem;
        }
    }
    return x;
}

/// x[k+1] = (A + I) x[k] + B u[k] + w[k].
inline Matrix lti_simulate(const Matrix& A, const Matrix& B, const Vector& x0, const Matrix& u, const Matrix& w, int K) {
    const int n = static_cast<int>(A.rows());
    const Matrix F = A + Matrix::Identity(n, n);
    Matrix x(K + 1, n);
    x.row(0) = x0.transpose();
    for (int k = 0; k < K; ++k) {
        Vector nx = F * x.row(k).transpose();
        if (u.size() > 0) nx += B * u.row(k).transpose();
        if (w.size() > 0) nx += w.row(k).transpose();
        x.row(k + 1) = nx.transpose();
    }
    return x;
}

inline int rank(const Matrix& m, double rel = 1e-10) {
    if (m.size() == 0) return 0;
    Eigen::JacobiSVD<Matrix> svd(m);
    const auto& s = svd.singularValues();
    if (s.size() == 0 || s[0] == 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > rel * s[0]) ++r;
    return r;
}

struct Rng {
    std::mt19937_64 gen;
    explicit Rng(std::uint64_t seed) : gen(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen); }
    int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen); }
    Matrix matrix(Eigen::Index r, Eigen::Index c, double lo = -1.0, double hi = 1.0) {
        Matrix m(r, c);
        for (Eigen::Index i = 0; i < r; ++i)
            for (Eigen::Index j = 0; j < c; ++j) m(i, j) = uniform(lo, hi);
        return m;
    }
    Vector vector(Eigen::Index n, double lo = -1.0, double hi = 1.0) { return matrix(n, 1, lo, hi); }
};

}  // namespace oracle
