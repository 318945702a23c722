#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "fixtures.hpp"
#include "fos/io.hpp"
#include "fos/mpc.hpp"
#include "oracles.hpp"

using namespace fos;

namespace {

MpcProblem problem(Index n, Index m, Index depth, Index P, Index M, double bound) {
    MpcProblem pb;
    pb.depth = depth;
    pb.horizon = P;
    pb.control_horizon = M;
    pb.Q = {Matrix::Identity(n, n)};
    pb.R = {Matrix::Identity(m, m)};
    pb.u_lo = Vector::Constant(m, -bound);
    pb.u_hi = Vector::Constant(m, bound);
    return pb;
}

FosModel scalar_plant(double A = -0.3, double alpha = 0.7) {
    return FosModel::make(Vector::Constant(1, alpha), Matrix::Constant(1, 1, A), Matrix::Ones(1, 1));
}

Matrix history_of(std::initializer_list<double> xs) {
    Matrix h(static_cast<Index>(xs.size()), 1);
    Index i = 0;
    for (double x : xs) h(i++, 0) = x;
    return h;
}

std::string bytes_of(const Matrix& m) {
    return std::string(reinterpret_cast<const char*>(m.data()), static_cast<std::size_t>(m.size()) * sizeof(double));
}

}  // namespace

TEST(SolveHorizon, ZeroHistoryGivesZero) {
    const auto plant = scalar_plant();
    const auto sol = solve_horizon(problem(1, 1, 5, 6, 3, 1.0), plant, Matrix::Zero(1, 1));
    EXPECT_EQ(sol.u.norm(), 0.0);
    EXPECT_EQ(sol.cost, 0.0);
}

TEST(SolveHorizon, OneStepClosedForm) {
    const double A = -0.3, alpha = 0.7, B = 1.0, Q = 1.0, R = 1.0;
    const auto plant = scalar_plant(A, alpha);
    const Index p = 4;
    const Matrix hist = history_of({0.4, -0.2, 0.9, 1.3});  // x[0..3], current x[3]
    // A_0 x[k] + sum_{j>=1} A_j x[k-j], A_0 = A + alpha, A_j = -gl(alpha, j+1)
    double f = (A + alpha) * hist(3, 0);
    for (int j = 1; j < p; ++j) f += -oracle::gl(alpha, j + 1) * hist(3 - j, 0);
    const double expect = -B * Q * f / (B * Q * B + R);
    const auto sol = solve_horizon(problem(1, 1, p, 1, 1, 1e6), plant, hist);
    EXPECT_NEAR(sol.u(0, 0), expect, 1e-10);
    EXPECT_FALSE(sol.any_active);
}

TEST(SolveHorizon, ClippedAtUpperBound) {
    const auto plant = scalar_plant(-0.3, 0.7);
    const Matrix hist = history_of({-1.0, -2.0, -3.0});
    auto pb = problem(1, 1, 3, 1, 1, 1e6);
    const double free_u = solve_horizon(pb, plant, hist).u(0, 0);
    ASSERT_GT(free_u, 0.1);
    pb.u_hi[0] = 0.1;
    const auto sol = solve_horizon(pb, plant, hist);
    EXPECT_EQ(sol.u(0, 0), 0.1);
    EXPECT_TRUE(sol.any_active);
    EXPECT_EQ(sol.bounds[0], BoundState::upper);
}

TEST(SolveHorizon, CondensedMatchesLiftSimulation) {
    oracle::Rng rng(51);
    for (int trial = 0; trial < 10; ++trial) {
        const Index n = rng.integer(1, 3), m = rng.integer(1, 2), p = rng.integer(1, 6), P = rng.integer(1, 12);
        const auto model = FosModel::make(rng.vector(n, 0.3, 1.6), rng.matrix(n, n, -0.4, 0.4), rng.matrix(n, m));
        const auto aug = augment_p(model, p);
        const auto cp = condense(aug, P);
        const Vector xt = rng.vector(n * p);
        const Matrix U = rng.matrix(P, m);
        Vector Us(m * P);
        for (Index j = 0; j < P; ++j) Us.segment(j * m, m) = U.row(j).transpose();
        const Vector X = cp.Sx * xt + cp.Su * Us;
        const auto t = simulate_augmented(aug, xt, U, Matrix(), P);
        for (Index j = 0; j < P; ++j)
            EXPECT_LE((X.segment(j * n, n) - t.states.row(j + 1).transpose()).norm(), 1e-10);
    }
}

TEST(SolveHorizon, DominatesZeroAndSatisfiesKkt) {
    oracle::Rng rng(52);
    for (int trial = 0; trial < 30; ++trial) {
        const Index n = rng.integer(1, 3), m = rng.integer(1, 2);
        const auto model = FosModel::make(rng.vector(n, 0.3, 1.6), rng.matrix(n, n, -0.4, 0.4), rng.matrix(n, m));
        auto pb = problem(n, m, rng.integer(1, 6), rng.integer(1, 10), 1, rng.uniform(0.05, 2.0));
        pb.control_horizon = rng.integer(1, static_cast<int>(pb.horizon));
        if (trial % 3 == 0) pb.c = {rng.vector(n)};
        const Matrix hist = rng.matrix(rng.integer(1, 8), n, -3, 3);
        const auto sol = solve_horizon(pb, model, hist);
        EXPECT_LE(sol.cost, sol.cost_at_zero + 1e-12 * (1.0 + std::abs(sol.cost_at_zero)));
        EXPECT_LE(sol.kkt_residual, 1e-8 * (1.0 + sol.gradient_at_zero));
        for (Index i = 0; i < sol.u.rows(); ++i)
            for (Index j = 0; j < m; ++j) {
                EXPECT_GE(sol.u(i, j), pb.u_lo[j]);
                EXPECT_LE(sol.u(i, j), pb.u_hi[j]);
            }
    }
}

TEST(SolveHorizon, ValidationNamesBounds) {
    auto pb = problem(1, 1, 2, 3, 2, 1.0);
    pb.u_lo[0] = 2.0;
    try {
        (void)solve_horizon(pb, scalar_plant(), Matrix::Zero(1, 1));
        FAIL() << "expected DomainError";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("u_lo"), std::string::npos);
    }
    auto bad = problem(1, 1, 2, 3, 4, 1.0);
    EXPECT_THROW((void)solve_horizon(bad, scalar_plant(), Matrix::Zero(1, 1)), DomainError);
    auto badR = problem(1, 1, 2, 3, 2, 1.0);
    badR.R = {Matrix::Zero(1, 1)};
    EXPECT_THROW((void)solve_horizon(badR, scalar_plant(), Matrix::Zero(1, 1)), DomainError);
}

TEST(SolveHorizon, SoftStateConstraint) {
    const auto plant = scalar_plant(0.05, 0.9);
    auto pb = problem(1, 1, 4, 6, 2, 5.0);
    pb.Q = {Matrix::Zero(1, 1)};
    pb.R = {1e-3 * Matrix::Identity(1, 1)};
    pb.state_constraints = StateConstraints{Matrix::Ones(1, 1), Vector::Constant(1, 0.5), false, 1e6};
    const auto sol = solve_horizon(pb, plant, history_of({2.0}));
    EXPECT_LE(sol.max_state_violation, 1e-3);
    EXPECT_LE(sol.x_pred.maxCoeff(), 0.5 + 1e-3);
}

TEST(SolveHorizon, HardInfeasibleStateConstraint) {
    const auto plant = scalar_plant(-0.3, 0.7);
    auto pb = problem(1, 1, 3, 4, 2, 0.01);
    pb.state_constraints = StateConstraints{-Matrix::Ones(1, 1), Vector::Constant(1, -10.0), true, 1e6};
    EXPECT_THROW((void)solve_horizon(pb, plant, history_of({0.0})), InfeasibleStateConstraints);
}

TEST(SolveHorizon, HardFeasibleStateConstraint) {
    const auto plant = scalar_plant(0.05, 0.9);
    auto pb = problem(1, 1, 4, 6, 2, 5.0);
    pb.Q = {Matrix::Zero(1, 1)};
    pb.R = {Matrix::Identity(1, 1)};
    pb.state_constraints = StateConstraints{Matrix::Ones(1, 1), Vector::Constant(1, 0.5), true, 1e6};
    const auto sol = solve_horizon(pb, plant, history_of({2.0}));
    EXPECT_LE(sol.x_pred.maxCoeff(), 0.5 + 1e-9);
    EXPECT_LE(sol.kkt_residual, 1e-8 * (1.0 + sol.gradient_at_zero));
}

TEST(Qp, BoxConstrainedMinimum) {
    const Matrix H = Matrix::Identity(2, 2);
    Vector g(2);
    g << -3.0, 0.5;
    Matrix Ain(4, 2);
    Ain << 1, 0, -1, 0, 0, 1, 0, -1;
    Vector bin(4);
    bin << -1, -1, -1, -1;  // |z_i| <= 1
    const auto r = solve_qp(H, g, Ain, bin);
    EXPECT_NEAR(r.z[0], 1.0, 1e-14);
    EXPECT_NEAR(r.z[1], -0.5, 1e-14);
    EXPECT_EQ(r.active.size(), 1u);
}

TEST(Qp, UnconstrainedMinimum) {
    Matrix H(2, 2);
    H << 4, 1, 1, 3;
    Vector g(2);
    g << 1, 2;
    const auto r = solve_qp(H, g, Matrix(0, 2), Vector(0));
    EXPECT_LE((H * r.z + g).norm(), 1e-14);
}

TEST(Qp, DetectsInfeasibility) {
    Matrix Ain(2, 1);
    Ain << 1, -1;
    Vector bin(2);
    bin << 1, 0;  // z >= 1 and z <= 0
    EXPECT_THROW((void)solve_qp(Matrix::Identity(1, 1), Vector::Zero(1), Ain, bin), QpInfeasible);
}

TEST(Qp, RandomKkt) {
    oracle::Rng rng(53);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = rng.integer(1, 6);
        const Matrix L = rng.matrix(n, n);
        const Matrix H = L * L.transpose() + 0.1 * Matrix::Identity(n, n);
        const Vector g = rng.vector(n, -3, 3);
        Matrix Ain(2 * n, n);
        Vector bin(2 * n);
        Ain.setZero();
        for (int i = 0; i < n; ++i) {
            Ain(2 * i, i) = 1;
            Ain(2 * i + 1, i) = -1;
            bin[2 * i] = -0.5;
            bin[2 * i + 1] = -0.5;
        }
        const auto r = solve_qp(H, g, Ain, bin);
        EXPECT_TRUE(((Ain * r.z - bin).array() >= -1e-12).all());
        EXPECT_TRUE((r.multipliers.array() >= 0.0).all());
        EXPECT_LE((H * r.z + g - Ain.transpose() * r.multipliers).norm(), 1e-10);
        EXPECT_LE(std::abs(r.multipliers.dot(Ain * r.z - bin)), 1e-10);
    }
}

TEST(ClosedLoop, ZeroStartNoNoise) {
    const auto run = run_closed_loop(scalar_plant(), problem(1, 1, 5, 8, 4, 1.0), Vector::Zero(1), 20, Matrix());
    EXPECT_EQ(run.trajectory.states.norm(), 0.0);
    EXPECT_EQ(run.trajectory.inputs.norm(), 0.0);
}

TEST(ClosedLoop, RecedingHorizonBookkeeping) {
    const auto plant = fixture::load_model("martinet.json");
    const Index K = 23, M = 5;
    const Matrix w = gaussian_noise(3, K, plant.p(), 1.0);
    const auto run = run_closed_loop(plant, problem(4, 1, 6, 7, M, 100.0), Vector::Ones(4), K, w);
    ASSERT_EQ(run.solve_steps.size(), static_cast<std::size_t>((K + M - 1) / M));
    ASSERT_EQ(run.plans.size(), run.solve_steps.size());
    for (std::size_t s = 0; s < run.solve_steps.size(); ++s) {
        EXPECT_EQ(run.solve_steps[s], static_cast<Index>(s) * M);
        for (Index i = 0; i < M && run.solve_steps[s] + i < K; ++i)
            EXPECT_EQ(bytes_of(run.trajectory.inputs.row(run.solve_steps[s] + i)), bytes_of(run.plans[s].row(i)));
    }
    EXPECT_THROW((void)run_closed_loop(plant, problem(4, 1, 6, 7, M, 100.0), Vector::Ones(4), 0, w), DomainError);
}

TEST(ClosedLoop, Deterministic) {
    const auto plant = fixture::load_model("jansen_rit.json");
    const auto pb = problem(1, 1, 15, 20, 10, 5.0);
    const Matrix w = gaussian_noise(42, 200, 1, 1.0);
    const auto a = run_closed_loop(plant, pb, Vector::Zero(1), 200, w);
    const auto b = run_closed_loop(plant, pb, Vector::Zero(1), 200, gaussian_noise(42, 200, 1, 1.0));
    EXPECT_EQ(bytes_of(a.trajectory.states), bytes_of(b.trajectory.states));
    EXPECT_EQ(bytes_of(a.trajectory.inputs), bytes_of(b.trajectory.inputs));
}

TEST(Baseline, ZeroNoiseZeroState) {
    EXPECT_EQ(uncontrolled_baseline(scalar_plant(), Vector::Zero(1), 30, Matrix()).states.norm(), 0.0);
}

TEST(Baseline, ConsumesIdenticalNoise) {
    const auto plant = fixture::load_model("jansen_rit.json");
    const Matrix w = gaussian_noise(42, 300, 1, 1.0);
    const auto run = run_closed_loop(plant, problem(1, 1, 15, 20, 10, 5.0), Vector::Zero(1), 300, w);
    const auto base = uncontrolled_baseline(plant, Vector::Zero(1), 300, w);
    EXPECT_EQ(io::fnv1a64(bytes_of(*run.trajectory.noises)), io::fnv1a64(bytes_of(*base.noises)));
    EXPECT_EQ(base.inputs.norm(), 0.0);
}

TEST(Baseline, ControlledEnergyIsLower) {
    const auto plant = fixture::load_model("jansen_rit.json");
    const Matrix w = gaussian_noise(42, 1000, 1, 1.0);
    const auto run = run_closed_loop(plant, problem(1, 1, 15, 20, 10, 5.0), Vector::Zero(1), 1000, w);
    const auto base = uncontrolled_baseline(plant, Vector::Zero(1), 1000, w);
    EXPECT_LT(energy(run.trajectory.states), energy(base.states));
}
