#pragma once

// Minimum-energy estimation on a finite-memory lift
//
//     xt[k+1] = A xt[k] + B u[k] + G r[k],      y[k+1] = C xt[k+1] + v[k+1],
//
// minimising sum r' Q^{-1} r + sum v' R^{-1} v + (xt[0] - xhat0)' P0^{-1} (xt[0] - xhat0).

#include <optional>
#include <string>
#include <vector>

#include "simulate.hpp"

namespace fos {

struct EstimatorConfig {
    // One matrix broadcasts over all steps; otherwise Q[i] applies at step i
    // and R[j - 1] to the measurement y[j].
    std::vector<Matrix> Q;
    std::vector<Matrix> R;
    Matrix P0;
    Vector xhat0;

    [[nodiscard]] const Matrix& Q_at(Index i) const {
        return Q.size() == 1 ? Q.front() : Q.at(static_cast<std::size_t>(i));
    }
    [[nodiscard]] const Matrix& R_at(Index j) const {
        return R.size() == 1 ? R.front() : R.at(static_cast<std::size_t>(j - 1));
    }

    static EstimatorConfig constant(Matrix Q, Matrix R, Matrix P0, Vector xhat0) {
        return {{std::move(Q)}, {std::move(R)}, std::move(P0), std::move(xhat0)};
    }
};

namespace detail {

inline void require_spd(const Matrix& m, const std::string& name) {
    if (m.rows() != m.cols()) throw DimensionError(name + " must be square");
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-10 * std::max(1.0, m.cwiseAbs().maxCoeff()))
        throw NotSPD(name + " is not symmetric");
    if (m.size() == 0) return;
    Eigen::SelfAdjointEigenSolver<Matrix> es(m);
    if (es.eigenvalues().minCoeff() <= 0.0) throw NotSPD(name + " is not positive definite");
}

inline void validate_config(const AugmentedModel& aug, const EstimatorConfig& cfg) {
    const Index d = aug.dim();
    require_dims(cfg.P0.rows() == d && cfg.P0.cols() == d, "estimator: P0 must match the lift dimension");
    require_dims(cfg.xhat0.size() == d, "estimator: xhat0 must match the lift dimension");
    if (cfg.Q.empty() || cfg.R.empty()) throw DimensionError("estimator: Q and R schedules must be non-empty");
    require_spd(cfg.P0, "P0");
    for (const auto& q : cfg.Q) {
        require_dims(q.rows() == aug.G.cols(), "estimator: Q must match the disturbance dimension");
        require_spd(q, "Q");
    }
    for (const auto& r : cfg.R) {
        require_dims(r.rows() == aug.C.rows(), "estimator: R must match the output dimension");
        require_spd(r, "R");
    }
}

}  // namespace detail

struct EstimatorState {
    Index k = 0;
    Vector xhat;
    Matrix P;
    Matrix K;  // last gain
    Matrix M;  // last propagated weight
};

class MinimumEnergyFilter {
public:
    MinimumEnergyFilter(AugmentedModel aug, EstimatorConfig cfg) : aug_(std::move(aug)), cfg_(std::move(cfg)) {
        detail::validate_config(aug_, cfg_);
        state_.k = 0;
        state_.xhat = cfg_.xhat0;
        state_.P = cfg_.P0;
        state_.K = Matrix::Zero(aug_.dim(), aug_.C.rows());
        state_.M = cfg_.P0;
    }

    [[nodiscard]] const EstimatorState& state() const noexcept { return state_; }
    [[nodiscard]] const AugmentedModel& model() const noexcept { return aug_; }

    /// Consumes u[k] and y[k+1].
    const EstimatorState& step(const Vector& u, const Vector& y) {
        const Matrix& A = aug_.A;
        const Matrix& C = aug_.C;
        const Index k = state_.k;
        detail::require_dims(y.size() == C.rows(), "filter step: measurement has wrong size");
        detail::require_dims(u.size() == aug_.B.cols(), "filter step: input has wrong size");

        Matrix M = A * state_.P * A.transpose() + aug_.G * cfg_.Q_at(k) * aug_.G.transpose();
        M = detail::symmetrize(M);
        const Matrix& R = cfg_.R_at(k + 1);
        const Matrix S = C * M * C.transpose() + R;
        const Eigen::LLT<Matrix> llt(S);
        if (llt.info() != Eigen::Success) throw InnovationSingular("filter step: innovation matrix is not positive definite");
        // K = M C' S^{-1}  <=>  K' = S^{-1} C M
        const Matrix K = llt.solve(C * M).transpose();

        Vector pred = A * state_.xhat;
        if (u.size() > 0) pred.noalias() += aug_.B * u;
        state_.xhat = pred + K * (y - C * pred);
        const Index d = aug_.dim();
        state_.P = detail::symmetrize((Matrix::Identity(d, d) - K * C) * M);
        state_.K = K;
        state_.M = std::move(M);
        state_.k = k + 1;
        return state_;
    }

private:
    AugmentedModel aug_;
    EstimatorConfig cfg_;
    EstimatorState state_;
};

[[nodiscard]] inline EstimatorState me_filter_init(const AugmentedModel& aug, const EstimatorConfig& cfg) {
    return MinimumEnergyFilter(aug, cfg).state();
}

/// Joseph-form weight update (I - KC) M (I - KC)' + K R K'.
[[nodiscard]] inline Matrix joseph_update(const Matrix& M, const Matrix& K, const Matrix& C, const Matrix& R) {
    const Index d = M.rows();
    const Matrix IKC = Matrix::Identity(d, d) - K * C;
    return IKC * M * IKC.transpose() + K * R * K.transpose();
}

struct BatchEstimate {
    Matrix xhat;   // (N+1) x dim, minimising trajectory
    Matrix r;      // N x disturbance dim
    double cost = 0.0;
};

/// Exact minimiser of the weighted least-squares objective over xt[0] and
/// r[0..N-1]; u has N rows, y has N rows holding y[1..N].
[[nodiscard]] inline BatchEstimate me_batch(const AugmentedModel& aug, const EstimatorConfig& cfg, const Matrix& u,
                                            const Matrix& y) {
    detail::validate_config(aug, cfg);
    const Index N = y.rows();
    if (N < 1) throw DimensionError("me_batch: N must be >= 1");
    const Index d = aug.dim();
    const Index nr = aug.G.cols();
    const Index q = aug.C.rows();
    detail::require_dims(y.cols() == q, "me_batch: y has wrong width");
    const Matrix uu = detail::rows_or_zeros(u, N, aug.B.cols(), "me_batch inputs");
    const Index nz = d + N * nr;

    // xt[k] = Phi_k z + c_k
    std::vector<Matrix> Phi(static_cast<std::size_t>(N) + 1);
    std::vector<Vector> off(static_cast<std::size_t>(N) + 1);
    Phi[0] = Matrix::Zero(d, nz);
    Phi[0].leftCols(d).setIdentity();
    off[0] = Vector::Zero(d);
    for (Index k = 0; k < N; ++k) {
        Phi[k + 1] = aug.A * Phi[k];
        Phi[k + 1].middleCols(d + k * nr, nr) += aug.G;
        off[k + 1] = aug.A * off[k];
        if (uu.cols() > 0) off[k + 1] += aug.B * uu.row(k).transpose();
    }

    Matrix H = Matrix::Zero(nz, nz);
    Vector b = Vector::Zero(nz);
    const Eigen::LLT<Matrix> P0llt(cfg.P0);
    const Matrix P0inv = P0llt.solve(Matrix::Identity(d, d));
    H.topLeftCorner(d, d) += P0inv;
    b.head(d) += P0inv * cfg.xhat0;
    for (Index i = 0; i < N; ++i) {
        const Eigen::LLT<Matrix> Qllt(cfg.Q_at(i));
        H.block(d + i * nr, d + i * nr, nr, nr) += Qllt.solve(Matrix::Identity(nr, nr));
    }
    for (Index j = 1; j <= N; ++j) {
        const Eigen::LLT<Matrix> Rllt(cfg.R_at(j));
        const Matrix CPhi = aug.C * Phi[static_cast<std::size_t>(j)];
        const Matrix W = Rllt.solve(CPhi);  // R^{-1} C Phi
        H.noalias() += CPhi.transpose() * W;
        const Vector resid = y.row(j - 1).transpose() - aug.C * off[static_cast<std::size_t>(j)];
        b.noalias() += W.transpose() * resid;
    }
    const Vector z = H.ldlt().solve(b);

    BatchEstimate out;
    out.xhat.resize(N + 1, d);
    for (Index k = 0; k <= N; ++k)
        out.xhat.row(k) = (Phi[static_cast<std::size_t>(k)] * z + off[static_cast<std::size_t>(k)]).transpose();
    out.r.resize(N, nr);
    for (Index i = 0; i < N; ++i) out.r.row(i) = z.segment(d + i * nr, nr).transpose();

    const Vector dx = z.head(d) - cfg.xhat0;
    double cost = dx.dot(P0llt.solve(dx));
    for (Index i = 0; i < N; ++i) {
        const Vector ri = out.r.row(i).transpose();
        cost += ri.dot(cfg.Q_at(i).llt().solve(ri));
    }
    for (Index j = 1; j <= N; ++j) {
        const Vector v = y.row(j - 1).transpose() - aug.C * out.xhat.row(j).transpose();
        cost += v.dot(cfg.R_at(j).llt().solve(v));
    }
    out.cost = cost;
    return out;
}

struct EstimationRun {
    Matrix estimates;               // (K+1) x n, base-state block of the lift
    std::optional<Vector> errors;   // per-step ||xhat - x|| when truth is available
    double terminal_error = 0.0;
    double sup_error = 0.0;
};

/// v-approximation filter over the measured outputs of `traj` (y[0] is not used).
[[nodiscard]] inline EstimationRun run_estimator(const MultiTermNetwork& net, Index v, const EstimatorConfig& cfg,
                                                 const Trajectory& traj, bool have_truth = true) {
    if (!traj.outputs) throw DimensionError("run_estimator: trajectory has no outputs");
    const auto aug = augment_v(net, v);
    MinimumEnergyFilter filter(aug, cfg);
    const Index K = traj.steps();
    const Index n = net.n();
    const Matrix uu = detail::rows_or_zeros(traj.inputs, K, net.m(), "run_estimator inputs");
    EstimationRun run;
    run.estimates.resize(K + 1, n);
    run.estimates.row(0) = filter.state().xhat.head(n).transpose();
    for (Index k = 0; k < K; ++k) {
        filter.step(uu.row(k).transpose(), traj.outputs->row(k + 1).transpose());
        run.estimates.row(k + 1) = filter.state().xhat.head(n).transpose();
    }
    if (have_truth && traj.states.rows() == K + 1 && traj.states.cols() == n) {
        Vector e(K + 1);
        for (Index k = 0; k <= K; ++k) e[k] = (run.estimates.row(k) - traj.states.row(k)).norm();
        run.terminal_error = e[K];
        run.sup_error = e.maxCoeff();
        run.errors = std::move(e);
    }
    return run;
}

}  // namespace fos
