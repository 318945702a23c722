#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "simulate.hpp"

namespace fos {

// ---------------------------------------------------------------------------
// Stability
// ---------------------------------------------------------------------------

enum class Verdict { stable, unstable, marginal };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::stable: return "stable";
        case Verdict::unstable: return "unstable";
        case Verdict::marginal: return "marginal";
    }
    return "?";
}

struct StabilityReport {
    std::vector<Complex> eigenvalues;
    std::vector<double> margins;  // |arg(lambda)| - alpha * pi / 2, radians
    Verdict verdict = Verdict::stable;
};

inline constexpr double kMarginalTolerance = 1e-9;

/// Sector test for the commensurate system D^alpha x = A x: stable iff every
/// eigenvalue satisfies |arg(lambda)| > alpha * pi / 2 (principal argument).
[[nodiscard]] inline StabilityReport commensurate_stability(const Matrix& A, double alpha,
                                                            double tol = kMarginalTolerance) {
    detail::require_dims(A.rows() == A.cols(), "commensurate_stability: A must be square");
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("commensurate_stability: alpha must lie in (0, 2)");
    StabilityReport report;
    if (A.size() == 0) return report;
    Eigen::EigenSolver<Matrix> es(A, false);
    if (es.info() != Eigen::Success) throw EigenFailure("commensurate_stability: eigensolver did not converge");
    const double sector = alpha * std::numbers::pi / 2.0;
    bool any_marginal = false;
    bool any_unstable = false;
    for (Index i = 0; i < A.rows(); ++i) {
        const Complex lambda = es.eigenvalues()[i];
        const double margin = std::abs(std::arg(lambda)) - sector;
        report.eigenvalues.push_back(lambda);
        report.margins.push_back(margin);
        if (std::abs(margin) <= tol) any_marginal = true;
        else if (margin < 0.0) any_unstable = true;
    }
    report.verdict = any_unstable ? Verdict::unstable : any_marginal ? Verdict::marginal : Verdict::stable;
    return report;
}

/// Spectral radius of the p-augmented lift. There is no exact test for
/// non-commensurate discrete-time systems; this number is only a heuristic.
[[nodiscard]] inline double lift_spectral_radius_heuristic(const FosModel& model, Index depth) {
    const auto aug = augment_p(model, depth);
    Eigen::EigenSolver<Matrix> es(aug.A, false);
    if (es.info() != Eigen::Success) throw EigenFailure("lift_spectral_radius_heuristic: eigensolver failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

// ---------------------------------------------------------------------------
// Controllability / observability
// ---------------------------------------------------------------------------

enum class GramianKind { controllability, observability };

struct GramianReport {
    GramianKind kind = GramianKind::controllability;
    Index K = 0;
    Matrix matrix;
    Vector singular_values;
    Index rank = 0;
    double smallest_retained = 0.0;

    [[nodiscard]] bool full_rank() const noexcept { return rank == matrix.rows(); }
};

struct RankOptions {
    double rel_tol = 1e-12;  // sigma_i retained iff sigma_i > max(n, K) * sigma_max * rel_tol
};

namespace detail {

inline void fill_rank(GramianReport& r, const Matrix& rank_source, Index n, Index K, const RankOptions& opts) {
    Eigen::JacobiSVD<Matrix> svd(rank_source);
    r.singular_values = svd.singularValues();
    r.rank = numerical_rank(r.singular_values, static_cast<double>(std::max(n, K)), opts.rel_tol);
    r.smallest_retained = r.rank > 0 ? r.singular_values[r.rank - 1] : 0.0;
}

inline Matrix controllability_stack(const std::vector<Matrix>& G, const Matrix& B, Index K) {
    const Index n = B.rows();
    const Index m = B.cols();
    Matrix Cs(n, m * K);
    for (Index j = 0; j < K; ++j) Cs.middleCols(j * m, m) = G[static_cast<std::size_t>(j)] * B;
    return Cs;
}

inline Eigen::FullPivLU<Matrix> checked_gk(const Matrix& GK, Index n) {
    Eigen::FullPivLU<Matrix> lu(GK);
    if (n > 0 && detail::reciprocal_condition(GK) < 1e-12)
        throw SingularError("transition matrix G_K is singular; the conjugated Gramian is undefined");
    return lu;
}

}  // namespace detail

/// W_c(0,K) = G_K^{-1} (sum_{j<K} G_j B B^T G_j^T) G_K^{-T}.
[[nodiscard]] inline GramianReport controllability_gramian(const FosModel& model, const Matrix& B, Index K,
                                                           const RankOptions& opts = {}) {
    if (K < 1) throw DimensionError("controllability_gramian: K must be >= 1");
    const Index n = model.n();
    detail::require_dims(B.rows() == n, "controllability_gramian: B must have n rows");
    const auto G = transition_matrices(model, K);
    const auto lu = detail::checked_gk(G[static_cast<std::size_t>(K)], n);
    const Matrix Cs = detail::controllability_stack(G, B, K);
    const Matrix inner = Cs * Cs.transpose();
    const Matrix left = lu.solve(inner);                        // G_K^{-1} S
    const Matrix W = lu.solve(left.transpose()).transpose();    // (G_K^{-1} (G_K^{-1} S)^T)^T
    GramianReport r;
    r.kind = GramianKind::controllability;
    r.K = K;
    r.matrix = detail::symmetrize(W);
    detail::fill_rank(r, r.matrix, n, K, opts);
    return r;
}

/// Minimum-norm input sequence (rows u[0] .. u[K-1]) steering x0 to the origin at step K.
[[nodiscard]] inline Matrix deadbeat_input(const FosModel& model, const Matrix& B, const Vector& x0, Index K,
                                           const RankOptions& opts = {}) {
    const Index n = model.n();
    const Index m = B.cols();
    detail::require_dims(x0.size() == n, "deadbeat_input: x0 must have n entries");
    const auto report = controllability_gramian(model, B, K, opts);
    if (report.rank < n)
        throw NotControllable("deadbeat_input: Gramian rank " + std::to_string(report.rank) + " < " + std::to_string(n));
    const auto G = transition_matrices(model, K);
    const Matrix& GK = G[static_cast<std::size_t>(K)];
    const Matrix Cs = detail::controllability_stack(G, B, K);
    // stack = -Cs^T G_K^{-T} W_c^{-1} x0, ordered [u[K-1]; ...; u[0]].
    const Vector a = report.matrix.ldlt().solve(x0);
    const Vector b = GK.transpose().fullPivLu().solve(a);
    const Vector stack = -Cs.transpose() * b;
    Matrix u(K, m);
    for (Index j = 0; j < K; ++j) u.row(K - 1 - j) = stack.segment(j * m, m).transpose();
    return u;
}

struct ObservabilityMatrices {
    Matrix O;   // [C G_0; ...; C G_{K-1}]
    Matrix Wo;  // O^T O
    Matrix M;   // block-Toeplitz input-to-output map
    Index rank = 0;
    Vector singular_values;

    [[nodiscard]] bool observable(Index n) const noexcept { return rank == n; }
};

[[nodiscard]] inline ObservabilityMatrices observability_matrices(const FosModel& model, const Matrix& B, const Matrix& C,
                                                                  Index K, const RankOptions& opts = {}) {
    if (K < 1) throw DimensionError("observability_matrices: K must be >= 1");
    const Index n = model.n();
    const Index q = C.rows();
    const Index m = B.cols();
    detail::require_dims(C.cols() == n, "observability_matrices: C must have n columns");
    detail::require_dims(B.rows() == n, "observability_matrices: B must have n rows");
    const auto G = transition_matrices(model, K);
    ObservabilityMatrices r;
    r.O.resize(q * K, n);
    for (Index j = 0; j < K; ++j) r.O.middleRows(j * q, q) = C * G[static_cast<std::size_t>(j)];
    r.Wo = Matrix::Zero(n, n);
    for (Index j = 0; j < K; ++j) {
        const Matrix CG = C * G[static_cast<std::size_t>(j)];
        r.Wo.noalias() += CG.transpose() * CG;
    }
    r.M = Matrix::Zero(q * K, m * K);
    for (Index row = 1; row < K; ++row)
        for (Index col = 0; col < row; ++col)
            r.M.block(row * q, col * m, q, m) = C * G[static_cast<std::size_t>(row - 1 - col)] * B;
    Eigen::JacobiSVD<Matrix> svd(r.O);
    r.singular_values = svd.singularValues();
    r.rank = detail::numerical_rank(r.singular_values, static_cast<double>(std::max(n, K)), opts.rel_tol);
    return r;
}

/// Overload for autonomous use (no input matrix).
[[nodiscard]] inline ObservabilityMatrices observability_matrices(const FosModel& model, const Matrix& C, Index K,
                                                                  const RankOptions& opts = {}) {
    return observability_matrices(model, model.B, C, K, opts);
}

/// x0 = W_o^{-1} O^T (Y - M U) from u[0..K-1] and y[0..K-1] (rows are time).
[[nodiscard]] inline Vector reconstruct_initial_state(const FosModel& model, const Matrix& B, const Matrix& C,
                                                      const Matrix& u, const Matrix& y, Index K,
                                                      const RankOptions& opts = {}) {
    const Index n = model.n();
    const Index q = C.rows();
    const Index m = B.cols();
    detail::require_dims(y.rows() >= K && y.cols() == q, "reconstruct_initial_state: y must be K x q");
    const Matrix uu = detail::rows_or_zeros(u, K, m, "reconstruct_initial_state inputs");
    const auto obs = observability_matrices(model, B, C, K, opts);
    if (obs.rank < n)
        throw NotObservable("reconstruct_initial_state: rank " + std::to_string(obs.rank) + " < " + std::to_string(n));
    Vector Y(q * K), U(m * K);
    for (Index k = 0; k < K; ++k) {
        Y.segment(k * q, q) = y.row(k).transpose();
        U.segment(k * m, m) = uu.row(k).transpose();
    }
    const Vector rhs = obs.O.transpose() * (Y - obs.M * U);
    return obs.Wo.ldlt().solve(rhs);
}

// ---------------------------------------------------------------------------
// Frequency response
// ---------------------------------------------------------------------------

struct PowerTerm {
    double coefficient = 0.0;
    double exponent = 0.0;
};

// sum_k b_k s^{beta_k} / sum_k a_k s^{alpha_k}
struct RationalPowerForm {
    std::vector<PowerTerm> numerator;
    std::vector<PowerTerm> denominator;
};

// C (s^alpha I - A)^{-1} B + D, single-input single-output entry (0, 0) of the
// matrix response unless the caller reads the full matrix.
struct CommensurateStateSpace {
    Matrix A, B, C, D;
    double alpha = 1.0;
};

using FractionalTransferFunction = std::variant<RationalPowerForm, CommensurateStateSpace>;

struct TfEvaluation {
    ComplexMatrix value;        // q x m (1 x 1 for the rational form)
    bool branch_cut = false;    // s on the negative real axis with a non-integer exponent

    [[nodiscard]] Complex scalar() const { return value(0, 0); }
};

namespace detail {

inline bool is_integer(double x) { return x == std::floor(x); }

// Principal branch s^a = exp(a log s); integer exponents use exact powers.
inline Complex principal_pow(Complex s, double a, bool& branch_cut) {
    if (is_integer(a) && std::abs(a) < 64.0) {
        const int k = static_cast<int>(a);
        Complex r(1.0, 0.0);
        const Complex base = k >= 0 ? s : Complex(1.0, 0.0) / s;
        for (int i = 0; i < std::abs(k); ++i) r *= base;
        return r;
    }
    if (s.imag() == 0.0 && s.real() < 0.0) branch_cut = true;
    if (s == Complex(0.0, 0.0)) {
        if (a > 0.0) return {0.0, 0.0};
        throw DomainError("tf_eval: s = 0 with a non-positive fractional exponent");
    }
    return std::exp(a * std::log(s));
}

}  // namespace detail

[[nodiscard]] inline TfEvaluation tf_eval(const FractionalTransferFunction& tf, Complex s) {
    TfEvaluation out;
    if (const auto* r = std::get_if<RationalPowerForm>(&tf)) {
        if (r->denominator.empty()) throw DomainError("tf_eval: empty denominator");
        Complex num(0.0, 0.0), den(0.0, 0.0);
        for (const auto& t : r->numerator) {
            if (t.exponent < 0.0) throw DomainError("tf_eval: negative exponent");
            num += t.coefficient * detail::principal_pow(s, t.exponent, out.branch_cut);
        }
        for (const auto& t : r->denominator) {
            if (t.exponent < 0.0) throw DomainError("tf_eval: negative exponent");
            den += t.coefficient * detail::principal_pow(s, t.exponent, out.branch_cut);
        }
        out.value = ComplexMatrix::Constant(1, 1, num / den);
        return out;
    }
    const auto& ss = std::get<CommensurateStateSpace>(tf);
    const Index n = ss.A.rows();
    detail::require_dims(ss.A.cols() == n && ss.B.rows() == n && ss.C.cols() == n,
                         "tf_eval: inconsistent state-space dimensions");
    const Complex sa = detail::principal_pow(s, ss.alpha, out.branch_cut);
    ComplexMatrix M = sa * ComplexMatrix::Identity(n, n) - ss.A.cast<Complex>();
    ComplexMatrix value = ss.C.cast<Complex>() * M.fullPivLu().solve(ss.B.cast<Complex>());
    if (ss.D.size() > 0) {
        detail::require_dims(ss.D.rows() == ss.C.rows() && ss.D.cols() == ss.B.cols(), "tf_eval: D has wrong shape");
        value += ss.D.cast<Complex>();
    }
    out.value = std::move(value);
    return out;
}

struct BodePoint {
    double omega = 0.0;
    Complex value;
    double mag_db = 0.0;
    double phase_deg = 0.0;
};

[[nodiscard]] inline BodePoint make_bode_point(double omega, Complex value) {
    return {omega, value, 20.0 * std::log10(std::abs(value)), std::arg(value) * 180.0 / std::numbers::pi};
}

/// C(j w) = kp + ki (j w)^{-lambda} + kd (j w)^{mu}.
[[nodiscard]] inline std::vector<BodePoint> fopid_response(double kp, double ki, double kd, double lambda, double mu,
                                                           const std::vector<double>& omegas) {
    std::vector<BodePoint> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        if (!(w > 0.0)) throw DomainError("fopid_response: frequencies must be positive");
        bool cut = false;
        const Complex s(0.0, w);
        const Complex value = kp + ki / detail::principal_pow(s, lambda, cut) + kd * detail::principal_pow(s, mu, cut);
        out.push_back(make_bode_point(w, value));
    }
    return out;
}

[[nodiscard]] inline std::vector<BodePoint> bode(const FractionalTransferFunction& tf, const std::vector<double>& omegas) {
    std::vector<BodePoint> out;
    out.reserve(omegas.size());
    for (double w : omegas) {
        if (!(w > 0.0)) throw DomainError("bode: frequencies must be positive");
        out.push_back(make_bode_point(w, tf_eval(tf, Complex(0.0, w)).scalar()));
    }
    return out;
}

/// n log-spaced frequencies on [lo, hi].
[[nodiscard]] inline std::vector<double> logspace(double lo, double hi, std::size_t count) {
    std::vector<double> out;
    if (count == 0) return out;
    if (count == 1) return {lo};
    const double a = std::log10(lo), b = std::log10(hi);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(std::pow(10.0, a + (b - a) * static_cast<double>(i) / static_cast<double>(count - 1)));
    return out;
}

}  // namespace fos
