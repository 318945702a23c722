#include <gtest/gtest.h>

#include "fos/io.hpp"
#include "fos/model.hpp"
#include "fos/simulate.hpp"
#include "oracles.hpp"

using namespace fos;

namespace {

FosModel scalar(double a, double alpha) {
    return FosModel::make(Vector::Constant(1, alpha), Matrix::Constant(1, 1, a), Matrix::Ones(1, 1));
}

}  // namespace

TEST(AjSeries, IntegerOrderCollapse) {
    oracle::Rng rng(1);
    const Matrix A = rng.matrix(3, 3);
    const auto m = FosModel::make(Vector::Ones(3), A, Matrix::Zero(3, 1));
    const auto Aj = aj_series(m, 2);
    ASSERT_EQ(Aj.size(), 3u);
    EXPECT_TRUE(Aj[0].isApprox(A + Matrix::Identity(3, 3)));
    EXPECT_EQ(Aj[1].norm(), 0.0);
    EXPECT_EQ(Aj[2].norm(), 0.0);
}

TEST(AjSeries, ScalarHalfOrder) {
    const auto Aj = aj_series(scalar(0.2, 0.5), 1);
    EXPECT_NEAR(Aj[0](0, 0), 0.7, 1e-15);
    EXPECT_NEAR(Aj[1](0, 0), 0.125, 1e-15);
}

TEST(AjSeries, EmptyModel) {
    const auto m = FosModel::make(Vector(0), Matrix(0, 0), Matrix(0, 0));
    const auto Aj = aj_series(m, 3);
    for (const auto& a : Aj) EXPECT_EQ(a.size(), 0);
}

TEST(AjSeries, SignOfLeadingTerm) {
    oracle::Rng rng(2);
    for (int trial = 0; trial < 10; ++trial) {
        const Vector alpha = rng.vector(3, 0.1, 1.9);
        const Matrix A = rng.matrix(3, 3, -0.3, 0.3);
        const auto m = FosModel::make(alpha, A, Matrix::Zero(3, 0));
        EXPECT_TRUE(aj_series(m, 0)[0].isApprox(A + Matrix(alpha.asDiagonal())));
        // Delta^alpha x[k+1] = A x[k] along a 20-step run
        const Vector x0 = rng.vector(3);
        const auto t = simulate_fos(m, x0, Matrix(), Matrix(), 20);
        for (Index k = 0; k < 20; ++k) {
            const Vector lhs = frac_difference(t.states, alpha, k + 1);
            const Vector rhs = A * t.states.row(k).transpose();
            EXPECT_LE((lhs - rhs).norm(), 1e-10);
        }
    }
}

TEST(AugmentP, DepthOne) {
    const auto aug = augment_p(scalar(0.2, 0.5), 1);
    ASSERT_EQ(aug.dim(), 1);
    EXPECT_NEAR(aug.A(0, 0), 0.7, 1e-15);
}

TEST(AugmentP, Structure) {
    oracle::Rng rng(3);
    const auto m = FosModel::make(rng.vector(2, 0.2, 0.9), rng.matrix(2, 2), rng.matrix(2, 1));
    const auto aug = augment_p(m, 3);
    ASSERT_EQ(aug.A.rows(), 6);
    ASSERT_EQ(aug.A.cols(), 6);
    const auto Aj = aj_series(m, 2);
    for (Index j = 0; j < 3; ++j) EXPECT_TRUE(aug.A.block(0, 2 * j, 2, 2).isApprox(Aj[static_cast<std::size_t>(j)]));
    EXPECT_TRUE(aug.A.block(2, 0, 4, 4).isIdentity());
    EXPECT_EQ(aug.A.block(2, 4, 4, 2).norm(), 0.0);
    EXPECT_TRUE(aug.B.topRows(2).isApprox(m.B));
    EXPECT_EQ(aug.B.bottomRows(4).norm(), 0.0);
}

TEST(AugmentP, ScalarDepthTwo) {
    const auto aug = augment_p(scalar(0.2, 0.5), 2);
    Matrix expect(2, 2);
    expect << 0.7, 0.125, 1, 0;
    EXPECT_LE((aug.A - expect).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AugmentP, RejectsZeroDepth) { EXPECT_THROW((void)augment_p(scalar(0.2, 0.5), 0), DimensionError); }

TEST(AugmentP, CompanionSquareTwoWays) {
    oracle::Rng rng(4);
    const auto m = FosModel::make(rng.vector(3, 0.2, 1.5), rng.matrix(3, 3), Matrix::Zero(3, 0));
    const Index p = 4, n = 3;
    const auto aug = augment_p(m, p);
    const Matrix dense = aug.A * aug.A;
    // shift structure: row block 0 is top*A, row block 1 is top, lower blocks shift by two
    Matrix structured = Matrix::Zero(n * p, n * p);
    const Matrix top = aug.A.topRows(n);
    structured.topRows(n) = top * aug.A;
    structured.middleRows(n, n) = top;
    structured.block(2 * n, 0, n * (p - 2), n * (p - 2)).setIdentity();
    EXPECT_LE((dense - structured).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NetworkSeries, SingleTermFirstDifference) {
    MultiTermNetwork net;
    net.state_terms.push_back({1.0, Matrix::Identity(2, 2)});
    net.input_terms.push_back({0.0, Matrix::Ones(2, 1)});
    net.C = Matrix::Identity(2, 2);
    const auto s = network_series(net, 4);
    EXPECT_TRUE(s.A_check[1].isApprox(Matrix::Identity(2, 2)));
    for (std::size_t j = 2; j <= 4; ++j) EXPECT_EQ(s.A_check[j].norm(), 0.0);
    EXPECT_TRUE(s.B_check[0].isApprox(Matrix::Ones(2, 1)));
}

TEST(NetworkSeries, ZeroDisturbanceGains) {
    MultiTermNetwork net;
    net.state_terms.push_back({0.5, Matrix::Identity(2, 2)});
    net.disturbance_terms.push_back({0.3, Matrix::Zero(2, 2)});
    net.C = Matrix::Identity(2, 2);
    for (const auto& g : network_series(net, 5).G_check) EXPECT_EQ(g.norm(), 0.0);
}

TEST(NetworkSeries, TwoTermScalar) {
    MultiTermNetwork net;
    net.state_terms.push_back({0.5, Matrix::Ones(1, 1)});
    net.state_terms.push_back({0.25, Matrix::Ones(1, 1)});
    net.C = Matrix::Ones(1, 1);
    const auto s = network_series(net, 1);
    EXPECT_NEAR(s.A_check[1](0, 0), 0.375, 1e-15);
}

TEST(NetworkSeries, SingularLeadingSum) {
    MultiTermNetwork net;
    net.state_terms.push_back({0.5, Matrix::Identity(2, 2)});
    net.state_terms.push_back({0.7, -Matrix::Identity(2, 2)});
    net.C = Matrix::Identity(2, 2);
    EXPECT_THROW((void)network_series(net, 3), SingularError);
}

TEST(NetworkSeries, ToNetworkReproducesAjSeries) {
    oracle::Rng rng(5);
    const auto m = FosModel::make(rng.vector(3, 0.2, 1.4), rng.matrix(3, 3), rng.matrix(3, 2));
    const auto net = to_network(m, Matrix::Identity(3, 3));
    const auto s = network_series(net, 6);
    const auto Aj = aj_series(m, 5);
    for (std::size_t j = 1; j <= 6; ++j) EXPECT_LE((s.A_check[j] - Aj[j - 1]).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_TRUE(s.B_check[0].isApprox(m.B));
    for (std::size_t j = 1; j <= 6; ++j) EXPECT_EQ(s.B_check[j].norm(), 0.0);
}

TEST(AugmentV, ScalarStructure) {
    const auto net = to_network(scalar(0.2, 0.5), Matrix::Ones(1, 1));
    const auto aug = augment_v(net, 1);
    EXPECT_EQ(aug.dim(), 2);
    EXPECT_EQ(aug.kind, LiftKind::v_approx);
}

TEST(AugmentV, ExactForFirstDepthSteps) {
    oracle::Rng rng(6);
    for (Index v : {1, 2, 3, 5}) {
        MultiTermNetwork net;
        net.state_terms.push_back({0.6, Matrix::Identity(2, 2)});
        net.state_terms.push_back({0.3, rng.matrix(2, 2, -0.2, 0.2)});
        net.state_terms.push_back({1.0, rng.matrix(2, 2, -0.2, 0.2)});
        net.input_terms.push_back({0.4, rng.matrix(2, 1)});
        net.C = Matrix::Identity(2, 2);
        const Vector x0 = rng.vector(2);
        const Matrix u = rng.matrix(v, 1);
        const auto full = simulate_network(net, x0, u, Matrix(), Matrix(), v);
        const auto aug = augment_v(net, v);
        const auto lifted = simulate_augmented(aug, x0, u, Matrix(), v);
        EXPECT_LE((full.states - lifted.states).cwiseAbs().maxCoeff(), 1e-13) << "v=" << v;
    }
}

TEST(AugmentV, ScalarZeroInputTwoSteps) {
    MultiTermNetwork net;
    net.state_terms.push_back({0.5, Matrix::Ones(1, 1)});
    net.state_terms.push_back({0.0, Matrix::Constant(1, 1, 0.4)});
    net.C = Matrix::Ones(1, 1);
    const auto aug = augment_v(net, 2);
    const auto full = simulate_network(net, Vector::Ones(1), Matrix(), Matrix(), Matrix(), 2);
    const auto lifted = simulate_augmented(aug, Vector::Ones(1), Matrix(), Matrix(), 2);
    EXPECT_LE((full.states - lifted.states).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(AugmentV, NoTailIsExactForever) {
    // integer exponents only: the series stops after one lag
    MultiTermNetwork net;
    net.state_terms.push_back({1.0, Matrix::Identity(2, 2)});
    net.state_terms.push_back({0.0, Matrix::Constant(2, 2, 0.1)});
    net.input_terms.push_back({0.0, Matrix::Ones(2, 1)});
    net.C = Matrix::Identity(2, 2);
    oracle::Rng rng(7);
    const Matrix u = rng.matrix(40, 1);
    const auto full = simulate_network(net, Vector::Ones(2), u, Matrix(), Matrix(), 40);
    const auto lifted = simulate_augmented(augment_v(net, 1), Vector::Ones(2), u, Matrix(), 40);
    EXPECT_LE((full.states - lifted.states).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(NetworkValidation, RejectsNegativeExponent) {
    MultiTermNetwork net;
    net.state_terms.push_back({-0.5, Matrix::Identity(1, 1)});
    net.C = Matrix::Ones(1, 1);
    EXPECT_THROW(net.validate(), DomainError);
}

TEST(ModelValidation, RejectsBadShapes) {
    EXPECT_THROW((void)FosModel::make(Vector::Ones(2), Matrix::Zero(2, 3), Matrix::Zero(2, 1)), DimensionError);
    EXPECT_THROW((void)FosModel::make(Vector::Ones(3), Matrix::Zero(2, 2), Matrix::Zero(2, 1)), DimensionError);
    EXPECT_THROW((void)FosModel::make(Vector::Constant(1, 2.5), Matrix::Zero(1, 1), Matrix::Zero(1, 1)), DomainError);
}

TEST(ModelIo, RoundTripIsByteIdentical) {
    oracle::Rng rng(8);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = FosModel::make(rng.vector(3, -0.9, 1.9), rng.matrix(3, 3), rng.matrix(3, 2), rng.matrix(3, 3));
        const std::string a = io::dump(io::to_json(m));
        const auto back = io::fos_model_from_json(io::parse_json(a, "test"));
        EXPECT_EQ(io::dump(io::to_json(back)), a);
        EXPECT_EQ(back.A, m.A);
        EXPECT_EQ(back.alpha, m.alpha);
    }
}

TEST(ModelIo, CanonicalKeyOrder) {
    const std::string s = io::dump(io::to_json(scalar(0.2, 0.5)));
    const auto pos = [&](const char* k) { return s.find(std::string("\"") + k + "\""); };
    EXPECT_LT(pos("n"), pos("m"));
    EXPECT_LT(pos("m"), pos("alpha"));
    EXPECT_LT(pos("alpha"), pos("A"));
    EXPECT_LT(pos("A"), pos("B"));
    EXPECT_LT(pos("B"), pos("Bw"));
}

TEST(NetworkIo, RoundTrip) {
    oracle::Rng rng(9);
    const auto net = to_network(FosModel::make(rng.vector(2, 0.2, 0.9), rng.matrix(2, 2), rng.matrix(2, 1)),
                                rng.matrix(1, 2));
    const std::string a = io::dump(io::to_json(net));
    const auto back = io::network_from_json(io::parse_json(a, "test"));
    EXPECT_EQ(io::dump(io::to_json(back)), a);
}

TEST(ModelIo, NoInputModel) {
    const auto m = FosModel::make(Vector::Constant(2, 0.5), Matrix::Identity(2, 2), Matrix::Zero(2, 0));
    const std::string a = io::dump(io::to_json(m));
    const auto back = io::fos_model_from_json(io::parse_json(a, "test"));
    EXPECT_EQ(back.m(), 0);
    EXPECT_EQ(back.B.rows(), 2);
    EXPECT_EQ(io::dump(io::to_json(back)), a);
}

TEST(ModelIo, MalformedInputs) {
    EXPECT_THROW((void)io::parse_json("{", "x"), ParseError);
    EXPECT_THROW((void)io::fos_model_from_json(io::parse_json(R"({"n":1})", "x")), ParseError);
    EXPECT_THROW((void)io::fos_model_from_json(io::parse_json(R"({"n":2,"m":0,"alpha":[1,1],"A":[[1,0],[0]]})", "x")),
                 ParseError);
}

TEST(FormatDouble, ShortestDigitsRoundTrip) {
    oracle::Rng rng(10);
    for (int i = 0; i < 1000; ++i) {
        const double v = rng.uniform(-1e6, 1e6) * std::pow(10.0, rng.integer(-20, 20));
        EXPECT_EQ(io::parse_double(io::format_double(v)), v);
    }
    EXPECT_EQ(io::format_double(0.7), "0.69999999999999996");
    EXPECT_EQ(io::format_double(1.0), "1");
}
