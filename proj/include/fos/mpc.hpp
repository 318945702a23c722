#pragma once

// Certainty-equivalent model predictive control on the p-augmented lift of a
// single-term fractional model. Dynamics are eliminated by condensing; the
// resulting box-constrained (optionally state-constrained) convex QP is solved
// with the dual active-set solver in qp.hpp.

#include <optional>
#include <string>
#include <vector>

#include "qp.hpp"
#include "simulate.hpp"

namespace fos {

// Linear state constraints G x[k+j] <= h for every predicted step.
struct StateConstraints {
    Matrix G;
    Vector h;
    bool hard = false;
    double penalty = 1e6;  // soft mode: penalty * ||max(0, G x - h)||^2
};

struct MpcProblem {
    Index depth = 1;             // p, memory of the predictive lift
    Index horizon = 1;           // P
    Index control_horizon = 1;   // M
    std::vector<Matrix> Q;       // size 1 (broadcast) or P, for x[k+1..k+P]
    std::vector<Matrix> R;       // size 1 or P, for u[k..k+P-1]
    std::vector<Vector> c;       // empty, size 1 or P
    Vector u_lo;
    Vector u_hi;
    std::optional<StateConstraints> state_constraints;

    [[nodiscard]] const Matrix& Q_at(Index j) const { return Q.size() == 1 ? Q.front() : Q.at(static_cast<std::size_t>(j)); }
    [[nodiscard]] const Matrix& R_at(Index j) const { return R.size() == 1 ? R.front() : R.at(static_cast<std::size_t>(j)); }

    void validate(Index n, Index m) const {
        if (depth < 1) throw DomainError("MpcProblem: depth must be >= 1");
        if (horizon < 1) throw DomainError("MpcProblem: horizon must be >= 1");
        if (control_horizon < 1 || control_horizon > horizon)
            throw DomainError("MpcProblem: control_horizon must satisfy 1 <= M <= P");
        auto sched_ok = [&](std::size_t size) { return size == 1 || size == static_cast<std::size_t>(horizon); };
        if (!sched_ok(Q.size())) throw DimensionError("MpcProblem: Q schedule must have 1 or P entries");
        if (!sched_ok(R.size())) throw DimensionError("MpcProblem: R schedule must have 1 or P entries");
        if (!c.empty() && !sched_ok(c.size())) throw DimensionError("MpcProblem: c schedule must have 0, 1 or P entries");
        for (const auto& q : Q) {
            detail::require_dims(q.rows() == n && q.cols() == n, "MpcProblem: Q must be n x n");
            Eigen::SelfAdjointEigenSolver<Matrix> es(detail::symmetrize(q));
            if (n > 0 && es.eigenvalues().minCoeff() < -1e-12 * std::max(1.0, q.norm()))
                throw DomainError("MpcProblem: Q must be positive semidefinite");
        }
        for (const auto& r : R) {
            detail::require_dims(r.rows() == m && r.cols() == m, "MpcProblem: R must be m x m");
            Eigen::SelfAdjointEigenSolver<Matrix> es(detail::symmetrize(r));
            if (m > 0 && es.eigenvalues().minCoeff() <= 0.0) throw DomainError("MpcProblem: R must be positive definite");
        }
        for (const auto& ci : c) detail::require_dims(ci.size() == n, "MpcProblem: c must have n entries");
        detail::require_dims(u_lo.size() == m && u_hi.size() == m, "MpcProblem: bounds must have m entries");
        for (Index i = 0; i < m; ++i)
            if (u_lo[i] > u_hi[i])
                throw DomainError("MpcProblem: u_lo[" + std::to_string(i) + "] > u_hi[" + std::to_string(i) + "]");
        if (state_constraints) {
            detail::require_dims(state_constraints->G.cols() == n, "MpcProblem: state constraint G must have n columns");
            detail::require_dims(state_constraints->h.size() == state_constraints->G.rows(),
                                 "MpcProblem: state constraint h length mismatch");
            if (!(state_constraints->penalty > 0.0)) throw DomainError("MpcProblem: penalty must be positive");
        }
    }
};

// Predicted base states X = Sx xt + Su U, X = [x[k+1]; ...; x[k+P]], U = [u[k]; ...; u[k+P-1]].
struct CondensedPrediction {
    Matrix Sx;
    Matrix Su;
};

[[nodiscard]] inline CondensedPrediction condense(const AugmentedModel& aug, Index horizon) {
    const Index d = aug.dim();
    const Index n = aug.n;
    const Index m = aug.B.cols();
    CondensedPrediction c;
    c.Sx.resize(n * horizon, d);
    c.Su = Matrix::Zero(n * horizon, m * horizon);
    // AB[i] = A^i B (top n rows only needed, but full lift required for recursion)
    std::vector<Matrix> AB;
    AB.reserve(static_cast<std::size_t>(horizon));
    Matrix Apow = Matrix::Identity(d, d);
    Matrix cur = aug.B;
    for (Index j = 0; j < horizon; ++j) {
        Apow = aug.A * Apow;
        c.Sx.middleRows(j * n, n) = Apow.topRows(n);
        AB.push_back(cur);
        cur = aug.A * cur;
    }
    for (Index j = 0; j < horizon; ++j)
        for (Index i = 0; i <= j; ++i)
            c.Su.block(j * n, i * m, n, m) = AB[static_cast<std::size_t>(j - i)].topRows(n);
    return c;
}

/// Lift [x[k]; x[k-1]; ...; x[k-p+1]] from a history whose rows are x[0..k]; zero before time 0.
[[nodiscard]] inline Vector lift_history(const Matrix& history, Index depth) {
    detail::require_dims(history.rows() >= 1, "lift_history: history must contain the current state");
    const Index n = history.cols();
    const Index k = history.rows() - 1;
    Vector xt = Vector::Zero(n * depth);
    for (Index j = 0; j < depth && k - j >= 0; ++j) xt.segment(j * n, n) = history.row(k - j).transpose();
    return xt;
}

enum class BoundState : signed char { lower = -1, free = 0, upper = 1 };

struct MpcSolution {
    Matrix u;                 // P x m
    Matrix x_pred;            // P x n
    double cost = 0.0;        // objective at u
    double cost_at_zero = 0.0;
    double kkt_residual = 0.0;
    double gradient_at_zero = 0.0;  // ||g(0)||
    std::vector<BoundState> bounds;  // per entry of the input stack
    bool any_active = false;
    double max_state_violation = 0.0;
};

namespace detail {

struct CondensedQp {
    Matrix H;        // Hessian of the input-stack cost, 2 (Su' Qb Su + Rb)
    Matrix SuTQ2;    // 2 Su' Qb
    Vector cbar;     // stacked c
    Matrix Qbar;
};

inline CondensedQp build_qp(const MpcProblem& pb, const CondensedPrediction& cp, Index n, Index m) {
    const Index P = pb.horizon;
    CondensedQp q;
    q.Qbar = Matrix::Zero(n * P, n * P);
    Matrix Rbar = Matrix::Zero(m * P, m * P);
    q.cbar = Vector::Zero(n * P);
    for (Index j = 0; j < P; ++j) {
        q.Qbar.block(j * n, j * n, n, n) = symmetrize(pb.Q_at(j));
        Rbar.block(j * m, j * m, m, m) = symmetrize(pb.R_at(j));
        if (!pb.c.empty()) q.cbar.segment(j * n, n) = pb.c.size() == 1 ? pb.c.front() : pb.c[static_cast<std::size_t>(j)];
    }
    q.SuTQ2 = 2.0 * cp.Su.transpose() * q.Qbar;
    q.H = symmetrize(q.SuTQ2 * cp.Su + 2.0 * Rbar);
    return q;
}

inline double stage_cost(const MpcProblem& pb, const Matrix& x_pred, const Matrix& u) {
    double J = 0.0;
    for (Index j = 0; j < pb.horizon; ++j) {
        const Vector x = x_pred.row(j).transpose();
        const Vector uj = u.row(j).transpose();
        J += x.dot(pb.Q_at(j) * x) + uj.dot(pb.R_at(j) * uj);
        if (!pb.c.empty()) J += (pb.c.size() == 1 ? pb.c.front() : pb.c[static_cast<std::size_t>(j)]).dot(x);
    }
    return J;
}

}  // namespace detail

/// One receding-horizon solve. `aug` must be augment_p(model, problem.depth).
[[nodiscard]] inline MpcSolution solve_horizon(const MpcProblem& pb, const AugmentedModel& aug,
                                               const CondensedPrediction& cp, const Matrix& history) {
    const Index n = aug.n;
    const Index m = aug.B.cols();
    const Index P = pb.horizon;
    const Index nu = m * P;
    detail::require_dims(history.cols() == n, "solve_horizon: history width must equal n");
    const Vector xt = lift_history(history, pb.depth);
    const Vector f = cp.Sx * xt;  // free response
    const auto qp = detail::build_qp(pb, cp, n, m);
    const Vector g = qp.SuTQ2 * f + cp.Su.transpose() * qp.cbar;

    // Decision vector [U; slack]; slack only in soft state-constraint mode.
    const auto& sc = pb.state_constraints;
    const Index nrow = sc ? sc->G.rows() : 0;
    const bool soft = sc && !sc->hard && nrow > 0;
    const Index ns = soft ? nrow * P : 0;
    const Index nz = nu + ns;

    Matrix H = Matrix::Zero(nz, nz);
    H.topLeftCorner(nu, nu) = qp.H;
    Vector gz = Vector::Zero(nz);
    gz.head(nu) = g;
    if (soft) H.bottomRightCorner(ns, ns) = 2.0 * sc->penalty * Matrix::Identity(ns, ns);

    const Index n_state_rows = sc ? nrow * P : 0;
    const Index nc = 2 * nu + n_state_rows + ns;
    Matrix Ain = Matrix::Zero(nc, nz);
    Vector bin(nc);
    for (Index i = 0; i < nu; ++i) {
        const Index comp = i % m;
        Ain(2 * i, i) = 1.0;
        bin[2 * i] = pb.u_lo[comp];
        Ain(2 * i + 1, i) = -1.0;
        bin[2 * i + 1] = -pb.u_hi[comp];
    }
    if (sc) {
        // -G (f_j + Su_j U) + s >= -h
        for (Index j = 0; j < P; ++j) {
            const Index r0 = 2 * nu + j * nrow;
            Ain.block(r0, 0, nrow, nu) = -sc->G * cp.Su.middleRows(j * n, n);
            bin.segment(r0, nrow) = -sc->h + sc->G * f.segment(j * n, n);
            if (soft) Ain.block(r0, nu + j * nrow, nrow, nrow).setIdentity();
        }
        if (soft)
            for (Index i = 0; i < ns; ++i) {
                Ain(2 * nu + n_state_rows + i, nu + i) = 1.0;
                bin[2 * nu + n_state_rows + i] = 0.0;
            }
    }

    QpResult res;
    try {
        res = solve_qp(H, gz, Ain, bin);
    } catch (const QpInfeasible& e) {
        throw InfeasibleStateConstraints(std::string("solve_horizon: ") + e.what());
    }

    Vector U = res.z.head(nu);
    // active bounds come back from the solver with round-off; snap them
    for (Index i = 0; i < nu; ++i) {
        const double lo = pb.u_lo[i % m], hi = pb.u_hi[i % m];
        const double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        U[i] = std::clamp(U[i], lo, hi);
        if (U[i] <= lo + tol) U[i] = lo;
        else if (U[i] >= hi - tol) U[i] = hi;
    }

    MpcSolution sol;
    sol.u.resize(P, m);
    for (Index j = 0; j < P; ++j) sol.u.row(j) = U.segment(j * m, m).transpose();
    const Vector X = f + cp.Su * U;
    sol.x_pred.resize(P, n);
    for (Index j = 0; j < P; ++j) sol.x_pred.row(j) = X.segment(j * n, n).transpose();

    Matrix zero_u = Matrix::Zero(P, m);
    Matrix x_free(P, n);
    for (Index j = 0; j < P; ++j) x_free.row(j) = f.segment(j * n, n).transpose();
    sol.cost = detail::stage_cost(pb, sol.x_pred, sol.u);
    sol.cost_at_zero = detail::stage_cost(pb, x_free, zero_u);
    sol.gradient_at_zero = g.norm();

    const Vector grad = qp.H * U + g;
    sol.bounds.assign(static_cast<std::size_t>(nu), BoundState::free);
    Vector projected = grad;
    for (Index i = 0; i < nu; ++i) {
        const double lo = pb.u_lo[i % m], hi = pb.u_hi[i % m];
        const double tol = 1e-12 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
        if (U[i] <= lo + tol) {
            sol.bounds[static_cast<std::size_t>(i)] = BoundState::lower;
            if (grad[i] > 0.0) projected[i] = 0.0;
        } else if (U[i] >= hi - tol) {
            sol.bounds[static_cast<std::size_t>(i)] = BoundState::upper;
            if (grad[i] < 0.0) projected[i] = 0.0;
        }
    }
    sol.any_active = std::any_of(sol.bounds.begin(), sol.bounds.end(), [](BoundState b) { return b != BoundState::free; });
    if (!sc) {
        sol.kkt_residual = projected.norm();
    } else {
        const Vector stat = H * res.z + gz - Ain.transpose() * res.multipliers;
        sol.kkt_residual = stat.norm();
        for (Index j = 0; j < P; ++j) {
            const Vector viol = sc->G * X.segment(j * n, n) - sc->h;
            sol.max_state_violation = std::max(sol.max_state_violation, viol.maxCoeff());
        }
    }
    return sol;
}

[[nodiscard]] inline MpcSolution solve_horizon(const MpcProblem& pb, const FosModel& model, const Matrix& history) {
    pb.validate(model.n(), model.m());
    const auto aug = augment_p(model, pb.depth);
    return solve_horizon(pb, aug, condense(aug, pb.horizon), history);
}

struct ClosedLoopRun {
    Trajectory trajectory;
    std::vector<double> cycle_costs;   // optimal cost of each solve
    std::vector<Index> solve_steps;    // plant step at which each solve happened
    std::vector<Matrix> plans;         // full input plan of each solve
};

/// Receding-horizon loop: solve at step k, apply the first M inputs, re-solve at k + M.
/// The plant keeps full memory; the controller predicts with the depth-p lift.
[[nodiscard]] inline ClosedLoopRun run_closed_loop(const FosModel& plant, const MpcProblem& pb, const Vector& x0, Index K,
                                                   const Matrix& noise) {
    if (K < 1) throw DomainError("run_closed_loop: K must be >= 1");
    pb.validate(plant.n(), plant.m());
    const Matrix w = detail::rows_or_zeros(noise, K, plant.p(), "run_closed_loop noise");
    const auto aug = augment_p(plant, pb.depth);
    const auto cp = condense(aug, pb.horizon);
    FosSimulator sim(plant, x0, K);
    ClosedLoopRun run;
    Matrix applied = Matrix::Zero(K, plant.m());
    Index k = 0;
    while (k < K) {
        const Matrix hist = detail::stack_rows(sim.history(), plant.n());
        const auto sol = solve_horizon(pb, aug, cp, hist);
        run.solve_steps.push_back(k);
        run.cycle_costs.push_back(sol.cost);
        run.plans.push_back(sol.u);
        for (Index i = 0; i < pb.control_horizon && k < K; ++i, ++k) {
            applied.row(k) = sol.u.row(i);
            sim.step(sol.u.row(i).transpose(), w.row(k).transpose());
        }
    }
    run.trajectory.states = detail::stack_rows(sim.history(), plant.n());
    run.trajectory.inputs = applied;
    run.trajectory.noises = w;
    return run;
}

[[nodiscard]] inline Trajectory uncontrolled_baseline(const FosModel& plant, const Vector& x0, Index K, const Matrix& noise) {
    return simulate_fos(plant, x0, Matrix(), noise, K);
}

}  // namespace fos
