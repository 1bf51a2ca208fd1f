#include "test_support.hpp"

#include <gtest/gtest.h>

using namespace hgda;
using hgda::testing::gradient_error;
using hgda::testing::random_matrix;
using hgda::testing::weighted_sum;
using ad::Tensor;

namespace {

constexpr double kTol = 1e-4;

// entries bounded away from zero so ReLU kinks are never straddled
Matrix away_from_zero(Index r, Index c, SplitMix64& rng) {
    Matrix m = random_matrix(r, c, rng);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) m(i, j) += m(i, j) >= 0 ? 0.05 : -0.05;
    return m;
}

}  // namespace

TEST(Gradients, Matmul) {
    SplitMix64 rng(1);
    for (int trial = 0; trial < 20; ++trial) {
        auto a = Tensor::parameter(random_matrix(4, 3, rng));
        auto b = Tensor::parameter(random_matrix(3, 5, rng));
        const Matrix r = random_matrix(4, 5, rng);
        const auto f = [&] { return weighted_sum(ad::matmul(a, b), r); };
        EXPECT_LT(gradient_error(a, f), kTol);
        EXPECT_LT(gradient_error(b, f), kTol);
    }
}

TEST(Gradients, AddAndRowBroadcast) {
    SplitMix64 rng(2);
    auto a = Tensor::parameter(random_matrix(4, 3, rng));
    auto b = Tensor::parameter(random_matrix(4, 3, rng));
    auto row = Tensor::parameter(random_matrix(1, 3, rng));
    const Matrix r = random_matrix(4, 3, rng);
    const auto f = [&] { return weighted_sum(ad::add_row(ad::add(a, b), row), r); };
    EXPECT_LT(gradient_error(a, f), kTol);
    EXPECT_LT(gradient_error(b, f), kTol);
    EXPECT_LT(gradient_error(row, f), kTol);
}

TEST(Gradients, ScaleReluSumScalarMul) {
    SplitMix64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        auto s = Tensor::scalar(0.5 + rng.uniform(), true);
        auto a = Tensor::parameter(away_from_zero(5, 4, rng));
        const auto f = [&] { return ad::scalar_mul(ad::sum(ad::relu(ad::scale(s, a))), -1.7); };
        EXPECT_LT(gradient_error(s, f), kTol);
        EXPECT_LT(gradient_error(a, f), kTol);
    }
}

TEST(Gradients, Softmax) {
    SplitMix64 rng(4);
    auto a = Tensor::parameter(random_matrix(3, 4, rng, 3.0));
    const Matrix r = random_matrix(3, 4, rng);
    EXPECT_LT(gradient_error(a, [&] { return weighted_sum(ad::softmax_rows(a), r); }), kTol);
}

TEST(Gradients, Propagate) {
    SplitMix64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        const Graph g = hgda::testing::random_graph(8, 0.4, 1, 2, rng);
        auto op = std::make_shared<const SparseOperator>(trial % 2 ? normalized_laplacian(g) : normalized_adjacency(g));
        auto a = Tensor::parameter(random_matrix(8, 3, rng));
        const Matrix r = random_matrix(8, 3, rng);
        EXPECT_LT(gradient_error(a, [&] { return weighted_sum(ad::propagate(op, a), r); }), kTol);
    }
}

TEST(Gradients, Losses) {
    SplitMix64 rng(6);
    for (int trial = 0; trial < 20; ++trial) {
        auto logits = Tensor::parameter(random_matrix(6, 3, rng, 2.0));
        std::vector<int> y(6);
        for (auto& v : y) v = static_cast<int>(rng.below(3));
        EXPECT_LT(gradient_error(logits, [&] { return ad::cross_entropy(logits, y); }), kTol);
        EXPECT_LT(gradient_error(logits, [&] { return ad::mean_entropy(logits); }), kTol);

        auto zs = Tensor::parameter(random_matrix(7, 4, rng));
        auto zt = Tensor::parameter(random_matrix(5, 4, rng, 2.0));
        const auto kl = [&] { return ad::gaussian_kl(zs, zt); };
        EXPECT_LT(gradient_error(zs, kl), kTol);
        EXPECT_LT(gradient_error(zt, kl), kTol);
    }
}

TEST(Backward, SharedSubexpressionAccumulates) {
    auto a = Tensor::parameter(Matrix::Constant(2, 2, 3.0));
    const auto b = ad::add(a, a);
    ad::backward(ad::sum(ad::add(b, b)));
    EXPECT_EQ(a.grad(), Matrix::Constant(2, 2, 4.0));
    // leaf gradients keep accumulating until cleared
    ad::backward(ad::sum(a));
    EXPECT_EQ(a.grad(), Matrix::Constant(2, 2, 5.0));
    a.zero_grad();
    EXPECT_FALSE(a.has_grad());
}

TEST(Backward, ConstantsGetNoGradient) {
    auto a = Tensor::parameter(Matrix::Ones(2, 2));
    auto c = Tensor::constant(Matrix::Ones(2, 2));
    ad::backward(ad::sum(ad::matmul(a, c)));
    EXPECT_FALSE(c.has_grad());
    EXPECT_TRUE(a.has_grad());
}

TEST(Backward, RejectsNonScalar) {
    auto a = Tensor::parameter(Matrix::Ones(2, 2));
    EXPECT_THROW(ad::backward(a), std::invalid_argument);
}

TEST(Ops, ShapeErrors) {
    auto a = Tensor::constant(Matrix::Ones(2, 3));
    EXPECT_THROW(ad::matmul(a, a), std::invalid_argument);
    EXPECT_THROW(ad::add(a, Tensor::constant(Matrix::Ones(3, 2))), std::invalid_argument);
    EXPECT_THROW(ad::add_row(a, Tensor::constant(Matrix::Ones(1, 2))), std::invalid_argument);
    EXPECT_THROW(ad::scale(a, a), std::invalid_argument);
}

TEST(Softmax, StableAndNormalized) {
    Matrix x(2, 3);
    x << 1000, 1001, 1002, -1000, 0, 1000;
    const Matrix p = ad::softmax_rows_value(x);
    EXPECT_TRUE(p.allFinite());
    EXPECT_NEAR(p.row(0).sum(), 1.0, 1e-15);
    EXPECT_NEAR(p(1, 2), 1.0, 1e-15);
    EXPECT_NEAR(ad::log_softmax_rows_value(x)(0, 2), -std::log(1 + std::exp(-1.0) + std::exp(-2.0)), 1e-12);
}

TEST(Losses, KnownValues) {
    const auto zeros = Tensor::constant(Matrix::Zero(4, 3));
    const std::vector<int> y{0, 1, 2, 0};
    EXPECT_NEAR(ad::cross_entropy(zeros, y).item(), std::log(3.0), 1e-15);
    EXPECT_NEAR(ad::mean_entropy(zeros).item(), std::log(3.0), 1e-15);
    Matrix confident = Matrix::Zero(1, 3);
    confident(0, 0) = 100;
    EXPECT_LT(ad::mean_entropy(Tensor::constant(confident)).item(), 1e-40);
    const std::vector<int> bad{0, 1, 3, 0};
    EXPECT_THROW(ad::cross_entropy(zeros, bad), std::out_of_range);
    EXPECT_THROW(ad::cross_entropy(zeros, std::vector<int>{0}), std::invalid_argument);
}

TEST(Losses, NonFiniteLogitsRejected) {
    Matrix x = Matrix::Zero(2, 2);
    x(0, 0) = std::nan("");
    EXPECT_THROW(ad::mean_entropy(Tensor::constant(x)), std::domain_error);
    EXPECT_THROW(ad::gaussian_kl_value(x, Matrix::Zero(2, 2)), std::domain_error);
}

TEST(GaussianKl, ClosedForm) {
    // source N(0, 1), target N(1, 1) per column -> 0.5 per column
    Matrix zs(2, 2), zt(2, 2);
    zs << -1, 1, 1, -1;
    zt << 0, 2, 2, 0;
    EXPECT_NEAR(ad::gaussian_kl_value(zs, zt), 1.0, 1e-12);
    EXPECT_NEAR(ad::gaussian_kl_value(zs, zs), 0.0, 1e-15);
    // target variance 4 -> 0.5 ln 4 + 1/8 - 1/2
    EXPECT_NEAR(ad::gaussian_kl_value(zs.col(0), 2.0 * zs.col(0)), 0.5 * std::log(4.0) + 0.125 - 0.5, 1e-12);
}

TEST(GaussianKl, VarianceFloorAndErrors) {
    const Matrix dead = Matrix::Zero(5, 2);
    const double kl = ad::gaussian_kl_value(dead, dead);
    EXPECT_EQ(kl, 0.0);
    EXPECT_THROW(ad::gaussian_kl_value(Matrix::Zero(1, 2), dead), std::invalid_argument);
    EXPECT_THROW(ad::gaussian_kl_value(Matrix::Zero(3, 3), dead), std::invalid_argument);
}

TEST(Dropout, Behaviour) {
    SplitMix64 rng(8);
    auto a = Tensor::parameter(Matrix::Ones(200, 50));
    EXPECT_EQ(ad::dropout(a, 0.5, false, rng).value(), a.value());
    EXPECT_EQ(ad::dropout(a, 0.0, true, rng).value(), a.value());
    EXPECT_THROW(ad::dropout(a, 1.0, true, rng), std::invalid_argument);
    EXPECT_THROW(ad::dropout(a, -0.1, true, rng), std::invalid_argument);

    const auto d = ad::dropout(a, 0.5, true, rng);
    EXPECT_NEAR(d.value().mean(), 1.0, 0.05);
    for (Index i = 0; i < 200; ++i)
        for (Index j = 0; j < 50; ++j) EXPECT_TRUE(d.value()(i, j) == 0.0 || d.value()(i, j) == 2.0);
    ad::backward(ad::sum(d));
    EXPECT_EQ(a.grad(), d.value());  // gradient uses the same mask

    SplitMix64 r1(9), r2(9);
    EXPECT_EQ(ad::dropout(a, 0.3, true, r1).value(), ad::dropout(a, 0.3, true, r2).value());
}

TEST(Adam, MatchesScalarReference) {
    ad::AdamState state;
    state.config = {0.01, 0.9, 0.999, 1e-8, 0.1};
    auto p = Tensor::parameter(Matrix::Constant(1, 1, 2.0));
    std::vector<Tensor> params{p};
    double theta = 2.0, m = 0.0, v = 0.0;
    for (int t = 1; t <= 5; ++t) {
        p.zero_grad();
        ad::backward(ad::sum(ad::scalar_mul(ad::relu(p), 3.0 * t)));  // grad 3t
        ad::adam_step(params, state);
        const double g = 3.0 * t;
        theta *= 1.0 - 0.01 * 0.1;
        m = 0.9 * m + 0.1 * g;
        v = 0.999 * v + 0.001 * g * g;
        theta -= 0.01 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-8);
        EXPECT_NEAR(p.value()(0, 0), theta, 1e-14);
    }
    EXPECT_EQ(state.t, 5);
}

TEST(Adam, FirstStepIsLearningRateTimesSign) {
    ad::AdamState state;
    state.config.lr = 0.1;
    auto p = Tensor::parameter(Matrix::Zero(1, 2));
    p.node().grad = (Matrix(1, 2) << 0.3, -50.0).finished();
    std::vector<Tensor> params{p};
    ad::adam_step(params, state);
    EXPECT_NEAR(p.value()(0, 0), -0.1, 1e-7);
    EXPECT_NEAR(p.value()(0, 1), 0.1, 1e-7);
}
