#pragma once

#include <cstdint>
#include <iostream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "model.hpp"

namespace fos {

struct Trajectory {
    Matrix states;                   // (K+1) x n
    Matrix inputs;                   // K x m
    std::optional<Matrix> outputs;   // (K+1) x q
    std::optional<Matrix> noises;    // K x p
    double dt = 1.0;

    [[nodiscard]] Index steps() const noexcept { return states.rows() > 0 ? states.rows() - 1 : 0; }
    [[nodiscard]] Index n() const noexcept { return states.cols(); }
    [[nodiscard]] Index m() const noexcept { return inputs.cols(); }

    void validate() const {
        const Index K = steps();
        detail::require_dims(inputs.rows() == K || (inputs.rows() == 0 && inputs.cols() == 0),
                             "Trajectory: inputs must have K rows");
        if (outputs) detail::require_dims(outputs->rows() == K + 1, "Trajectory: outputs must have K+1 rows");
        if (noises) detail::require_dims(noises->rows() == K, "Trajectory: noises must have K rows");
        if (!states.allFinite() || !inputs.allFinite() || (outputs && !outputs->allFinite()))
            throw DomainError("Trajectory: non-finite entry");
    }
};

struct SimulationOptions {
    // History beyond this many lags is dropped; unset means full memory.
    std::optional<Index> memory_cap;
    double dt = 1.0;
};

inline void log_warning(const std::string& msg) { std::clog << "warning: " << msg << '\n'; }

// Step-by-step full-memory simulator of a FosModel. The weight table is sized
// once for `capacity` steps.
class FosSimulator {
public:
    FosSimulator(const FosModel& model, const Vector& x0, Index capacity, std::optional<Index> memory_cap = {})
        : model_(model), memory_cap_(memory_cap) {
        model_.validate();
        detail::require_dims(x0.size() == model_.n(), "FosSimulator: x0 must have n entries");
        if (capacity < 0) throw DimensionError("FosSimulator: negative capacity");
        if (memory_cap_ && *memory_cap_ < 1) throw DimensionError("FosSimulator: memory cap must be >= 1");
        table_ = build_weight_table(model_.alpha, static_cast<std::size_t>(capacity) + 1);
        states_.reserve(static_cast<std::size_t>(capacity) + 1);
        states_.push_back(x0);
    }

    [[nodiscard]] Index k() const noexcept { return static_cast<Index>(states_.size()) - 1; }
    [[nodiscard]] const std::vector<Vector>& history() const noexcept { return states_; }
    [[nodiscard]] const Vector& current() const { return states_.back(); }
    [[nodiscard]] const FosModel& model() const noexcept { return model_; }

    /// x[k+1] = A x[k] - sum_{j=1}^{k+1} D(alpha, j) x[k+1-j] + B u + Bw w.
    const Vector& step(const Vector& u, const Vector& w) {
        const Index kk = k();
        if (static_cast<std::size_t>(kk + 1) > table_.horizon())
            throw IndexError("FosSimulator: capacity exceeded at step " + std::to_string(kk));
        Vector next = model_.A * states_.back();
        if (model_.m() > 0) next.noalias() += model_.B * u;
        if (model_.p() > 0) next.noalias() += model_.Bw * w;
        Index lags = kk + 1;
        if (memory_cap_ && lags > *memory_cap_) lags = *memory_cap_;
        for (Index j = 1; j <= lags; ++j)
            next -= table_.column(static_cast<std::size_t>(j)).cwiseProduct(states_[static_cast<std::size_t>(kk + 1 - j)]);
        if (!next.allFinite()) throw NonFiniteError("simulation diverged", static_cast<long>(kk + 1));
        states_.push_back(std::move(next));
        return states_.back();
    }

private:
    FosModel model_;
    std::optional<Index> memory_cap_;
    FracWeightTable table_;
    std::vector<Vector> states_;
};

namespace detail {

inline Matrix rows_or_zeros(const Matrix& m, Index rows, Index cols, const char* what) {
    if (m.size() == 0) return Matrix::Zero(rows, cols);
    require_dims(m.rows() >= rows && m.cols() == cols, std::string(what) + ": expected " + std::to_string(rows) + " x " +
                                                           std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                                                           " x " + std::to_string(m.cols()));
    return m.topRows(rows);
}

inline Matrix stack_rows(const std::vector<Vector>& rows, Index cols) {
    Matrix out(static_cast<Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Index>(i)) = rows[i].transpose();
    return out;
}

}  // namespace detail

/// Full-memory simulation. Empty `u` / `w` mean zero input / zero noise.
[[nodiscard]] inline Trajectory simulate_fos(const FosModel& model, const Vector& x0, const Matrix& u, const Matrix& w,
                                             Index K, const SimulationOptions& opts = {}) {
    if (K < 0) throw DimensionError("simulate_fos: K must be >= 0");
    model.validate();
    const Matrix uu = detail::rows_or_zeros(u, K, model.m(), "simulate_fos inputs");
    const Matrix ww = detail::rows_or_zeros(w, K, model.p(), "simulate_fos noise");
    if (opts.memory_cap) log_warning("simulate_fos: history truncated to " + std::to_string(*opts.memory_cap) + " lags");
    FosSimulator sim(model, x0, K, opts.memory_cap);
    for (Index k = 0; k < K; ++k) sim.step(uu.row(k).transpose(), ww.row(k).transpose());
    Trajectory t;
    t.states = detail::stack_rows(sim.history(), model.n());
    t.inputs = uu;
    t.noises = ww;
    t.dt = opts.dt;
    return t;
}

/// Zero-mean Gaussian samples, steps x dim, deterministic in the seed.
[[nodiscard]] inline Matrix gaussian_noise(std::uint64_t seed, Index steps, Index dim, double sigma) {
    if (sigma < 0.0 || !std::isfinite(sigma)) throw DomainError("gaussian_noise: sigma must be finite and >= 0");
    Matrix out = Matrix::Zero(steps, dim);
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, sigma);
    for (Index k = 0; k < steps; ++k)
        for (Index i = 0; i < dim; ++i) out(k, i) = dist(rng);
    return out;
}

[[nodiscard]] inline Trajectory simulate_fos(const FosModel& model, const Vector& x0, const Matrix& u, std::uint64_t seed,
                                             double sigma, Index K, const SimulationOptions& opts = {}) {
    return simulate_fos(model, x0, u, gaussian_noise(seed, K, model.p(), sigma), K, opts);
}

/// G_0 = I, G_k = sum_{j=0}^{k-1} A_j G_{k-1-j}; free response x[k] = G_k x[0].
[[nodiscard]] inline std::vector<Matrix> transition_matrices(const FosModel& model, Index K) {
    if (K < 0) throw DimensionError("transition_matrices: K must be >= 0");
    const Index n = model.n();
    const auto Aj = aj_series(model, static_cast<std::size_t>(K > 0 ? K - 1 : 0));
    std::vector<Matrix> G;
    G.reserve(static_cast<std::size_t>(K) + 1);
    G.push_back(Matrix::Identity(n, n));
    for (Index k = 1; k <= K; ++k) {
        Matrix acc = Matrix::Zero(n, n);
        for (Index j = 0; j < k; ++j) acc.noalias() += Aj[static_cast<std::size_t>(j)] * G[static_cast<std::size_t>(k - 1 - j)];
        G.push_back(std::move(acc));
    }
    return G;
}

/// Lifted-state propagation xt[k+1] = A xt[k] + B u[k] + G w[k]; rows are time.
[[nodiscard]] inline Matrix propagate_lift(const AugmentedModel& aug, const Vector& xt0, const Matrix& u, const Matrix& w,
                                           Index K) {
    if (K < 0) throw DimensionError("propagate_lift: K must be >= 0");
    detail::require_dims(xt0.size() == aug.dim(), "propagate_lift: initial lift has wrong size");
    const Matrix uu = detail::rows_or_zeros(u, K, aug.B.cols(), "propagate_lift inputs");
    const Matrix ww = detail::rows_or_zeros(w, K, aug.G.cols(), "propagate_lift noise");
    Matrix out(K + 1, aug.dim());
    out.row(0) = xt0.transpose();
    for (Index k = 0; k < K; ++k) {
        Vector next = aug.A * out.row(k).transpose();
        if (uu.cols() > 0) next.noalias() += aug.B * uu.row(k).transpose();
        if (ww.cols() > 0) next.noalias() += aug.G * ww.row(k).transpose();
        if (!next.allFinite()) throw NonFiniteError("lifted simulation diverged", static_cast<long>(k + 1));
        out.row(k + 1) = next.transpose();
    }
    return out;
}

/// Simulation of the lift from a base initial state (or a full lifted state);
/// the returned trajectory carries the newest base-state block.
[[nodiscard]] inline Trajectory simulate_augmented(const AugmentedModel& aug, const Vector& x0, const Matrix& u,
                                                   const Matrix& w, Index K) {
    Vector xt0;
    if (x0.size() == aug.dim()) xt0 = x0;
    else if (x0.size() == aug.n) xt0 = aug.lift(x0);
    else throw DimensionError("simulate_augmented: x0 must have n or lift-dimension entries");
    const Matrix lifted = propagate_lift(aug, xt0, u, w, K);
    Trajectory t;
    t.states = lifted.leftCols(aug.n);
    t.inputs = detail::rows_or_zeros(u, K, aug.B.cols(), "simulate_augmented inputs");
    t.noises = detail::rows_or_zeros(w, K, aug.G.cols(), "simulate_augmented noise");
    return t;
}

/// Full-memory simulation of a multi-term network through its series form.
/// `v` is measurement noise with K+1 rows (empty for none); outputs are C x + v.
[[nodiscard]] inline Trajectory simulate_network(const MultiTermNetwork& net, const Vector& x0, const Matrix& u,
                                                 const Matrix& w, const Matrix& v, Index K) {
    if (K < 0) throw DimensionError("simulate_network: K must be >= 0");
    const Index n = net.n();
    detail::require_dims(x0.size() == n, "simulate_network: x0 must have n entries");
    const auto s = network_series(net, static_cast<std::size_t>(K + 1));
    const Matrix uu = detail::rows_or_zeros(u, K, net.m(), "simulate_network inputs");
    const Matrix ww = detail::rows_or_zeros(w, K, net.p(), "simulate_network noise");
    const Matrix vv = detail::rows_or_zeros(v, K + 1, net.q(), "simulate_network measurement noise");
    Matrix x(K + 1, n);
    x.row(0) = x0.transpose();
    for (Index k = 0; k < K; ++k) {
        Vector next = Vector::Zero(n);
        for (Index j = 1; j <= k + 1; ++j) next.noalias() += s.A_check[static_cast<std::size_t>(j)] * x.row(k + 1 - j).transpose();
        for (Index j = 0; j <= k; ++j) {
            if (net.m() > 0) next.noalias() += s.B_check[static_cast<std::size_t>(j)] * uu.row(k - j).transpose();
            if (net.p() > 0) next.noalias() += s.G_check[static_cast<std::size_t>(j)] * ww.row(k - j).transpose();
        }
        if (!next.allFinite()) throw NonFiniteError("network simulation diverged", static_cast<long>(k + 1));
        x.row(k + 1) = next.transpose();
    }
    Trajectory t;
    t.states = x;
    t.inputs = uu;
    t.noises = ww;
    t.outputs = Matrix(x * net.C.transpose() + vv);
    return t;
}

[[nodiscard]] inline double energy(const Matrix& states) { return states.squaredNorm(); }

}  // namespace fos
