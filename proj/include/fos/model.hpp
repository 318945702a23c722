#pragma once

#include <string>
#include <vector>

#include "fraccore.hpp"
#include "types.hpp"

namespace fos {

// Single-term discrete-time fractional-order system
//
//     Delta^alpha x[k+1] = A x[k] + B u[k] + Bw w[k]
//
// with one fractional order per state channel.
struct FosModel {
    Vector alpha;
    Matrix A;
    Matrix B;
    Matrix Bw;

    [[nodiscard]] Index n() const noexcept { return A.rows(); }
    [[nodiscard]] Index m() const noexcept { return B.cols(); }
    [[nodiscard]] Index p() const noexcept { return Bw.cols(); }

    void validate() const {
        const Index nn = A.rows();
        detail::require_dims(A.cols() == nn, "FosModel: A must be square");
        detail::require_dims(alpha.size() == nn, "FosModel: alpha length must equal state dimension");
        detail::require_dims(B.rows() == nn, "FosModel: B must have n rows");
        detail::require_dims(Bw.rows() == nn, "FosModel: Bw must have n rows");
        if (!alpha.allFinite() || !A.allFinite() || !B.allFinite() || !Bw.allFinite())
            throw DomainError("FosModel: non-finite entry");
        for (Index i = 0; i < nn; ++i)
            if (alpha[i] < -1.0 || alpha[i] >= 2.0)
                throw DomainError("FosModel: alpha[" + std::to_string(i) + "] = " + std::to_string(alpha[i]) +
                                  " outside [-1, 2)");
    }

    /// Model with noise entering every state directly (Bw = I).
    static FosModel make(Vector alpha, Matrix A, Matrix B) {
        const Index nn = A.rows();
        return make(std::move(alpha), std::move(A), std::move(B), Matrix::Identity(nn, nn));
    }

    static FosModel make(Vector alpha, Matrix A, Matrix B, Matrix Bw) {
        FosModel model{std::move(alpha), std::move(A), std::move(B), std::move(Bw)};
        model.validate();
        return model;
    }
};

/// Memory matrices A_0 .. A_J of x[k+1] = sum_j A_j x[k-j] + B u[k] + Bw w[k]:
/// A_0 = A + diag(alpha), A_j = -D(alpha, j+1) for j >= 1.
[[nodiscard]] inline std::vector<Matrix> aj_series(const FosModel& model, std::size_t J) {
    const Index n = model.n();
    std::vector<Matrix> out;
    if (n == 0) return out;
    const FracWeightTable table = build_weight_table(model.alpha, J + 1);
    out.reserve(J + 1);
    out.push_back(model.A - Matrix(table.column(1).asDiagonal()));
    for (std::size_t j = 1; j <= J; ++j) out.push_back(-Matrix(table.column(j + 1).asDiagonal()));
    return out;
}

struct FracTerm {
    double exponent = 0.0;
    Matrix matrix;
};

// Multi-term network
//
//     sum_i A_i Delta^{a_i} x[k+1] = sum_i B_i Delta^{b_i} u[k] + sum_i G_i Delta^{g_i} w[k]
//     z[k] = C x[k] + v[k]
struct MultiTermNetwork {
    std::vector<FracTerm> state_terms;
    std::vector<FracTerm> input_terms;
    std::vector<FracTerm> disturbance_terms;
    Matrix C;

    [[nodiscard]] Index n() const { return state_terms.empty() ? 0 : state_terms.front().matrix.rows(); }
    [[nodiscard]] Index m() const { return input_terms.empty() ? 0 : input_terms.front().matrix.cols(); }
    [[nodiscard]] Index p() const { return disturbance_terms.empty() ? 0 : disturbance_terms.front().matrix.cols(); }
    [[nodiscard]] Index q() const { return C.rows(); }

    [[nodiscard]] Matrix state_sum() const {
        Matrix s = Matrix::Zero(n(), n());
        for (const auto& t : state_terms) s += t.matrix;
        return s;
    }

    void validate() const {
        if (state_terms.empty()) throw DimensionError("MultiTermNetwork: at least one state term required");
        const Index nn = n();
        auto check = [&](const std::vector<FracTerm>& terms, const char* name, bool square) {
            Index cols = -1;
            for (const auto& t : terms) {
                if (!std::isfinite(t.exponent) || t.exponent < 0.0)
                    throw DomainError(std::string("MultiTermNetwork: ") + name + " exponent must be >= 0");
                detail::require_dims(t.matrix.rows() == nn, std::string("MultiTermNetwork: ") + name + " rows != n");
                if (square) detail::require_dims(t.matrix.cols() == nn, "MultiTermNetwork: state term must be n x n");
                if (cols >= 0) detail::require_dims(t.matrix.cols() == cols, std::string("MultiTermNetwork: ") + name + " column mismatch");
                cols = t.matrix.cols();
                if (!t.matrix.allFinite()) throw DomainError("MultiTermNetwork: non-finite matrix entry");
            }
        };
        check(state_terms, "state term", true);
        check(input_terms, "input term", false);
        check(disturbance_terms, "disturbance term", false);
        detail::require_dims(C.cols() == nn, "MultiTermNetwork: C must have n columns");
        const double rc = detail::reciprocal_condition(state_sum());
        if (rc < 1e-12)
            throw SingularError("MultiTermNetwork: sum of state matrices is singular (rcond " + std::to_string(rc) + ")");
    }
};

/// Exact multi-term form of a single-term model: per-channel selector terms at
/// the channel orders, plus -A at order 0 and A at order 1 (together -A x[k]).
[[nodiscard]] inline MultiTermNetwork to_network(const FosModel& model, const Matrix& C) {
    model.validate();
    const Index n = model.n();
    MultiTermNetwork net;
    for (Index i = 0; i < n; ++i) {
        Matrix sel = Matrix::Zero(n, n);
        sel(i, i) = 1.0;
        net.state_terms.push_back({model.alpha[i], sel});
    }
    net.state_terms.push_back({0.0, -model.A});
    net.state_terms.push_back({1.0, model.A});
    net.input_terms.push_back({0.0, model.B});
    net.disturbance_terms.push_back({0.0, model.Bw});
    net.C = C;
    return net;
}

// Coefficients of x[k+1] = sum_{j>=1} Acheck_j x[k+1-j] + sum_{j>=0} Bcheck_j u[k-j] + sum_{j>=0} Gcheck_j w[k-j].
// A_check[0] is unused and kept as zero so indices line up with lags.
struct NetworkSeries {
    std::vector<Matrix> A_check;
    std::vector<Matrix> B_check;
    std::vector<Matrix> G_check;
};

namespace detail {

inline std::vector<Matrix> hat_series(const std::vector<FracTerm>& terms, Index rows, Index cols, std::size_t J) {
    std::vector<Matrix> out(J + 1, Matrix::Zero(rows, cols));
    for (const auto& t : terms) {
        const auto w = gl_weights(t.exponent, J);
        for (std::size_t j = 0; j <= J; ++j)
            if (w[j] != 0.0) out[j] += w[j] * t.matrix;
    }
    return out;
}

}  // namespace detail

[[nodiscard]] inline NetworkSeries network_series(const MultiTermNetwork& net, std::size_t J) {
    net.validate();
    const Index n = net.n();
    const auto A_hat = detail::hat_series(net.state_terms, n, n, J);
    const auto B_hat = detail::hat_series(net.input_terms, n, net.m(), J);
    const auto G_hat = detail::hat_series(net.disturbance_terms, n, net.p(), J);
    if (detail::reciprocal_condition(A_hat[0]) < 1e-12) throw SingularError("network_series: A_hat_0 is singular");
    const Eigen::PartialPivLU<Matrix> lu(A_hat[0]);

    NetworkSeries s;
    s.A_check.resize(J + 1);
    s.B_check.resize(J + 1);
    s.G_check.resize(J + 1);
    s.A_check[0] = Matrix::Zero(n, n);
    for (std::size_t j = 1; j <= J; ++j) s.A_check[j] = -lu.solve(A_hat[j]);
    for (std::size_t j = 0; j <= J; ++j) {
        s.B_check[j] = net.m() > 0 ? Matrix(lu.solve(B_hat[j])) : Matrix::Zero(n, 0);
        s.G_check[j] = net.p() > 0 ? Matrix(lu.solve(G_hat[j])) : Matrix::Zero(n, 0);
    }
    return s;
}

enum class LiftKind { p_augment, v_approx };

// Finite-memory LTI lift  xt[k+1] = A xt[k] + B u[k] + G w[k],  y = C xt.
//
// p_augment: xt = [x[k]; ...; x[k-p+1]], G injects the model noise through Bw.
// v_approx:  xt = [x[k]; ...; x[k-v+1]; u[k-1]; ...; u[k-v]], G injects the
//            n-dimensional lumped remainder r[k] into the newest state block.
struct AugmentedModel {
    LiftKind kind = LiftKind::p_augment;
    Index depth = 0;
    Matrix A;
    Matrix B;
    Matrix G;
    Matrix C;
    Index n = 0;
    Index m = 0;
    Index q = 0;

    [[nodiscard]] Index dim() const noexcept { return A.rows(); }

    /// Lifted state with x0 in the newest block and zeros elsewhere.
    [[nodiscard]] Vector lift(const Vector& x0) const {
        detail::require_dims(x0.size() == n, "AugmentedModel::lift: x0 must have n entries");
        Vector xt = Vector::Zero(dim());
        xt.head(n) = x0;
        return xt;
    }
};

[[nodiscard]] inline AugmentedModel augment_p(const FosModel& model, Index p) {
    if (p < 1) throw DimensionError("augment_p: depth must be >= 1");
    model.validate();
    const Index n = model.n();
    const auto Aj = aj_series(model, static_cast<std::size_t>(p - 1));
    AugmentedModel aug;
    aug.kind = LiftKind::p_augment;
    aug.depth = p;
    aug.n = n;
    aug.m = model.m();
    aug.q = n;
    aug.A = Matrix::Zero(n * p, n * p);
    for (Index j = 0; j < p; ++j) aug.A.block(0, j * n, n, n) = Aj[static_cast<std::size_t>(j)];
    if (p > 1) aug.A.block(n, 0, n * (p - 1), n * (p - 1)).setIdentity();
    aug.B = Matrix::Zero(n * p, model.m());
    aug.B.topRows(n) = model.B;
    aug.G = Matrix::Zero(n * p, model.p());
    aug.G.topRows(n) = model.Bw;
    aug.C = Matrix::Zero(n, n * p);
    aug.C.leftCols(n).setIdentity();
    return aug;
}

[[nodiscard]] inline AugmentedModel augment_v(const MultiTermNetwork& net, Index v) {
    if (v < 1) throw DimensionError("augment_v: depth must be >= 1");
    const auto s = network_series(net, static_cast<std::size_t>(v));
    const Index n = net.n();
    const Index m = net.m();
    const Index xs = n * v;
    const Index dim = (n + m) * v;

    AugmentedModel aug;
    aug.kind = LiftKind::v_approx;
    aug.depth = v;
    aug.n = n;
    aug.m = m;
    aug.q = net.q();
    aug.A = Matrix::Zero(dim, dim);
    for (Index j = 1; j <= v; ++j) {
        aug.A.block(0, (j - 1) * n, n, n) = s.A_check[static_cast<std::size_t>(j)];
        if (m > 0) aug.A.block(0, xs + (j - 1) * m, n, m) = s.B_check[static_cast<std::size_t>(j)];
    }
    if (v > 1) {
        aug.A.block(n, 0, n * (v - 1), n * (v - 1)).setIdentity();
        if (m > 0) aug.A.block(xs + m, xs, m * (v - 1), m * (v - 1)).setIdentity();
    }
    aug.B = Matrix::Zero(dim, m);
    if (m > 0) {
        aug.B.topRows(n) = s.B_check[0];
        aug.B.block(xs, 0, m, m).setIdentity();
    }
    aug.G = Matrix::Zero(dim, n);
    aug.G.topRows(n).setIdentity();
    aug.C = Matrix::Zero(net.q(), dim);
    aug.C.leftCols(n) = net.C;
    return aug;
}

}  // namespace fos
