#pragma once

// Bilevel identification of a single-term fractional model: per-channel
// bisection over the fractional order in [-1, 1], with the spatial row of A
// refit by least squares at every candidate order.

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "simulate.hpp"

namespace fos {

struct Window {
    Index offset = 0;
    Index length = 100;
};

inline constexpr Index kFullMemory = std::numeric_limits<Index>::max();

[[nodiscard]] inline int bisection_bound(double epsilon) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("bisection_bound: epsilon must be positive");
    const double v = std::ceil(std::log2(2.0 / epsilon));
    return v > 0.0 ? static_cast<int>(v) : 0;
}

namespace detail {

inline void check_window(const Trajectory& traj, const Window& w) {
    if (w.offset < 0 || w.length < 1 || w.offset + w.length > traj.steps())
        throw IndexError("window [" + std::to_string(w.offset) + ", " + std::to_string(w.offset + w.length) +
                         ") does not fit a trajectory with " + std::to_string(traj.steps()) + " transitions");
}

// z[k] = sum_{j=0}^{min(k+1, depth)} psi(alpha, j) x_i[k+1-j] for the window rows.
inline Vector fractional_targets(const Matrix& states, Index channel, double alpha, const Window& w, Index depth) {
    const Index last = w.offset + w.length;  // largest k+1
    const Index lags = std::min<Index>(last, depth);
    const auto psi = gl_weights(alpha, static_cast<std::size_t>(lags));
    Vector z(w.length);
    for (Index r = 0; r < w.length; ++r) {
        const Index k1 = w.offset + r + 1;
        const Index top = std::min(k1, depth);
        double acc = 0.0;
        for (Index j = 0; j <= top; ++j) acc += psi[static_cast<std::size_t>(j)] * states(k1 - j, channel);
        z[r] = acc;
    }
    return z;
}

// Least-squares solver for a fixed regressor block X (rows = samples).
class Regression {
public:
    explicit Regression(Matrix X) : X_(std::move(X)) {
        const Matrix gram = X_.transpose() * X_;
        const double tr = gram.trace();
        if (tr == 0.0 || !std::isfinite(tr)) throw SingularError("least squares: regressors are identically zero");
        if (detail::reciprocal_condition(gram) < 1e-12) {
            ridge_ = true;
            ridge_lambda_ = 1e-10 * tr;
        }
        ldlt_.compute(gram + ridge_lambda_ * Matrix::Identity(gram.rows(), gram.cols()));
        if (ldlt_.info() != Eigen::Success) throw SingularError("least squares: factorization failed");
    }

    [[nodiscard]] Vector solve(const Vector& z) const { return ldlt_.solve(X_.transpose() * z); }
    [[nodiscard]] const Matrix& X() const noexcept { return X_; }
    [[nodiscard]] bool ridge() const noexcept { return ridge_; }

private:
    Matrix X_;
    bool ridge_ = false;
    double ridge_lambda_ = 0.0;
    Eigen::LDLT<Matrix> ldlt_;
};

inline Matrix window_regressors(const Matrix& states, const Window& w) { return states.middleRows(w.offset, w.length); }

}  // namespace detail

struct OlsResult {
    Matrix A_hat;        // n x n
    Matrix residuals;    // window length x n
    bool ridge = false;
    double normal_residual = 0.0;  // ||X^T residuals|| / ||data||
};

/// Spatial matrix for fixed candidate orders: regress Delta^alpha x[k+1] on x[k].
[[nodiscard]] inline OlsResult ols_spatial(const Trajectory& traj, const Vector& alphas, const Window& window,
                                           Index depth = kFullMemory) {
    detail::check_window(traj, window);
    const Index n = traj.n();
    detail::require_dims(alphas.size() == n, "ols_spatial: one order per channel required");
    detail::Regression reg(detail::window_regressors(traj.states, window));
    OlsResult out;
    out.A_hat.resize(n, n);
    out.residuals.resize(window.length, n);
    out.ridge = reg.ridge();
    double data_norm = 0.0;
    for (Index i = 0; i < n; ++i) {
        const Vector z = detail::fractional_targets(traj.states, i, alphas[i], window, depth);
        const Vector a = reg.solve(z);
        out.A_hat.row(i) = a.transpose();
        out.residuals.col(i) = z - reg.X() * a;
        data_norm = std::max(data_norm, z.norm());
    }
    const double scale = std::max(1.0, data_norm) * std::max(1.0, reg.X().norm());
    out.normal_residual = (reg.X().transpose() * out.residuals).norm() / scale;
    return out;
}

enum IdentifyFlag : unsigned {
    flag_none = 0,
    flag_degenerate = 1u << 0,
    flag_low_confidence = 1u << 1,
    flag_non_unimodal = 1u << 2,
    flag_tie = 1u << 3,
    flag_ridge = 1u << 4,
};

[[nodiscard]] inline std::string flag_string(unsigned flags) {
    if (flags == flag_none) return "ok";
    std::string s;
    auto add = [&](unsigned bit, const char* name) {
        if (flags & bit) {
            if (!s.empty()) s += '|';
            s += name;
        }
    };
    add(flag_degenerate, "degenerate");
    add(flag_low_confidence, "low_confidence");
    add(flag_non_unimodal, "non_unimodal");
    add(flag_tie, "tie");
    add(flag_ridge, "ridge");
    return s;
}

struct IdentifyOptions {
    Index depth = kFullMemory;
    double epsilon = 1e-3;
    Window window{};
    double low_confidence_spread = 0.01;  // relative endpoint-MSE spread
    double min_predictive_gain = 0.1;     // relative MSE gain over predicting zero
};

struct ChannelFit {
    double alpha = 0.0;
    Vector row;            // row of A
    double mse = 0.0;      // at the final order
    int iterations = 0;
    double mse_lower = 0.0;   // at the surviving interval endpoints
    double mse_upper = 0.0;
    double lower = -1.0;
    double upper = 1.0;
    unsigned flags = flag_none;
};

struct IdentificationResult {
    Vector alpha_hat;
    Matrix A_hat;
    std::vector<ChannelFit> channels;
    Window window;
    Index depth = kFullMemory;
    double epsilon = 0.0;

    /// Identified model with B = 0 (n x 0) and Bw = I.
    [[nodiscard]] FosModel model() const {
        const Index n = A_hat.rows();
        return FosModel::make(alpha_hat, A_hat, Matrix::Zero(n, 0));
    }
};

[[nodiscard]] inline IdentificationResult identify(const Trajectory& traj, const IdentifyOptions& opts = {}) {
    const Index n = traj.n();
    const Window& w = opts.window;
    detail::check_window(traj, w);
    if (w.length < 10 * (n + 1))
        throw DomainError("identify: window length " + std::to_string(w.length) + " < 10 (n + 1)");
    if (!(opts.epsilon > 0.0 && opts.epsilon < 2.0)) throw DomainError("identify: epsilon must lie in (0, 2)");
    if (opts.depth < 1) throw DomainError("identify: memory depth must be >= 1");

    const int cap = bisection_bound(opts.epsilon);
    const detail::Regression reg(detail::window_regressors(traj.states, w));

    IdentificationResult result;
    result.alpha_hat.resize(n);
    result.A_hat.resize(n, n);
    result.window = w;
    result.depth = opts.depth;
    result.epsilon = opts.epsilon;

    for (Index i = 0; i < n; ++i) {
        ChannelFit fit;
        if (reg.ridge()) fit.flags |= flag_ridge;
        auto evaluate = [&](double alpha, Vector* row) {
            const Vector z = detail::fractional_targets(traj.states, i, alpha, w, opts.depth);
            const Vector a = reg.solve(z);
            if (row) *row = a;
            return (z - reg.X() * a).squaredNorm() / static_cast<double>(w.length);
        };

        const auto column = traj.states.col(i).segment(w.offset, w.length + 1);
        if (column.maxCoeff() == column.minCoeff()) {
            fit.flags |= flag_degenerate;
            fit.alpha = 0.0;
            fit.mse = evaluate(0.0, &fit.row);
            fit.lower = fit.upper = 0.0;
            fit.mse_lower = fit.mse_upper = fit.mse;
            result.alpha_hat[i] = fit.alpha;
            result.A_hat.row(i) = fit.row.transpose();
            result.channels.push_back(std::move(fit));
            continue;
        }

        double lo = -1.0, hi = 1.0;
        double f_lo = evaluate(lo, nullptr);
        double f_hi = evaluate(hi, nullptr);
        const double top = std::max(f_lo, f_hi);
        if (top == 0.0 || (top - std::min(f_lo, f_hi)) / top < opts.low_confidence_spread) fit.flags |= flag_low_confidence;

        while (hi - lo > opts.epsilon) {
            const double c = 0.5 * (lo + hi);
            const double f_c = evaluate(c, nullptr);
            ++fit.iterations;
            if (f_c > std::max(f_lo, f_hi)) fit.flags |= flag_non_unimodal;
            if (f_lo < f_hi) {
                hi = c;
                f_hi = f_c;
            } else if (f_hi < f_lo) {
                lo = c;
                f_lo = f_c;
            } else {
                fit.flags |= flag_tie;
                hi = c;
                f_hi = f_c;
            }
        }
        if (fit.iterations > cap)
            throw std::logic_error("identify: bisection exceeded its iteration bound");

        fit.lower = lo;
        fit.upper = hi;
        fit.mse_lower = f_lo;
        fit.mse_upper = f_hi;
        fit.alpha = 0.5 * (lo + hi);
        fit.mse = evaluate(fit.alpha, &fit.row);
        // no gain over the zero predictor: nothing temporal was learned
        const double raw = column.tail(w.length).squaredNorm() / static_cast<double>(w.length);
        if (fit.mse >= (1.0 - opts.min_predictive_gain) * raw) fit.flags |= flag_low_confidence;
        result.alpha_hat[i] = fit.alpha;
        result.A_hat.row(i) = fit.row.transpose();
        result.channels.push_back(std::move(fit));
    }
    return result;
}

/// Mean squared one-step prediction error of `model` on observed data over the
/// window; each prediction uses the observed history (full memory).
[[nodiscard]] inline double one_step_mse(const FosModel& model, const Trajectory& traj, const Window& w) {
    detail::check_window(traj, w);
    model.validate();
    detail::require_dims(traj.n() == model.n(), "one_step_mse: dimension mismatch");
    const Index last = w.offset + w.length;
    const auto table = build_weight_table(model.alpha, static_cast<std::size_t>(last));
    const bool use_inputs = model.m() > 0 && traj.inputs.rows() == traj.steps() && traj.inputs.cols() == model.m();
    double acc = 0.0;
    for (Index k = w.offset; k < last; ++k) {
        Vector pred = model.A * traj.states.row(k).transpose();
        if (use_inputs) pred += model.B * traj.inputs.row(k).transpose();
        for (Index j = 1; j <= k + 1; ++j)
            pred -= table.column(static_cast<std::size_t>(j)).cwiseProduct(traj.states.row(k + 1 - j).transpose());
        acc += (traj.states.row(k + 1).transpose() - pred).squaredNorm();
    }
    return acc / static_cast<double>(w.length * model.n());
}

/// W_t = sum_{j=0}^{t-1} A^j (A^j)^T.
[[nodiscard]] inline Matrix finite_time_gramian(const Matrix& Atil, Index t) {
    detail::require_dims(Atil.rows() == Atil.cols(), "finite_time_gramian: matrix must be square");
    if (t < 1) throw DomainError("finite_time_gramian: t must be >= 1");
    const Index d = Atil.rows();
    Matrix W = Matrix::Zero(d, d);
    Matrix P = Matrix::Identity(d, d);
    for (Index j = 0; j < t; ++j) {
        W.noalias() += P * P.transpose();
        if (j + 1 < t) P = Atil * P;
    }
    return W;
}

struct OlsBoundInputs {
    Index K = 0;          // samples
    Index k = 1;          // reference Gramian horizon
    double delta = 0.1;   // failure probability
    double sigma = 1.0;   // noise scale; cancels in the ratio
    double C = 1.0;       // universal constants, unknown; 1 by default
    double c = 1.0;
};

struct OlsBound {
    double bound = 0.0;            // up to universal constants
    double lambda_min = 0.0;       // of W_k
    double log_det_ratio = 0.0;    // log det(W_K W_k^{-1})
    double side_ratio = 0.0;       // K / k
    double side_required = 0.0;    // c (d log(d/delta) + log det ratio)
    [[nodiscard]] bool side_condition_met() const noexcept { return side_ratio >= side_required; }
};

/// Operator-norm OLS error bound (C / sqrt(K lambda_min(W_k))) sqrt(d log(d/delta) + log det(W_K W_k^{-1})).
[[nodiscard]] inline OlsBound ols_error_bound(const Matrix& Atil, const OlsBoundInputs& in) {
    detail::require_dims(Atil.rows() == Atil.cols(), "ols_error_bound: matrix must be square");
    if (in.K < 1 || in.k < 1) throw DomainError("ols_error_bound: K and k must be >= 1");
    if (!(in.delta > 0.0 && in.delta <= 1.0)) throw DomainError("ols_error_bound: delta must lie in (0, 1]");
    if (!(in.sigma > 0.0)) throw DomainError("ols_error_bound: sigma must be positive");
    const Index d = Atil.rows();
    if (d > 0) {
        Eigen::EigenSolver<Matrix> es(Atil, false);
        if (es.info() != Eigen::Success) throw EigenFailure("ols_error_bound: eigensolver failed");
        const double rho = es.eigenvalues().cwiseAbs().maxCoeff();
        if (rho > 1.0 + 1e-9) throw DomainError("ols_error_bound: spectral radius " + std::to_string(rho) + " > 1");
    }
    const Matrix Wk = finite_time_gramian(Atil, in.k);
    const Matrix WK = finite_time_gramian(Atil, in.K);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(Wk);
    OlsBound out;
    out.lambda_min = d > 0 ? eig.eigenvalues().minCoeff() : 0.0;
    if (!(out.lambda_min > 0.0)) throw DomainError("ols_error_bound: W_k is singular");
    // log det(W_K) - log det(W_k), both SPD.
    const Eigen::LLT<Matrix> lK(WK), lk(Wk);
    out.log_det_ratio = 2.0 * (lK.matrixLLT().diagonal().array().log().sum() - lk.matrixLLT().diagonal().array().log().sum());
    const double dd = static_cast<double>(d);
    const double inner = dd * std::log(dd / in.delta) + out.log_det_ratio;
    out.bound = in.C / std::sqrt(static_cast<double>(in.K) * out.lambda_min) * std::sqrt(std::max(inner, 0.0));
    out.side_ratio = static_cast<double>(in.K) / static_cast<double>(in.k);
    out.side_required = in.c * inner;
    return out;
}

/// Operator norm (largest singular value).
[[nodiscard]] inline double op_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    return Eigen::JacobiSVD<Matrix>(m).singularValues()[0];
}

}  // namespace fos
