#include <gtest/gtest.h>

#include <cmath>

#include "shq/diff/grad_check.hpp"
#include "shq/diff/ops.hpp"
#include "shq/errors.hpp"
#include "primitive_cases.hpp"
#include "support.hpp"

using namespace shq;
using shq::testing::probe;
using shq::testing::primitive_cases;
using shq::testing::GradCase;
using shq::testing::random_tensor;

namespace {

constexpr double kTol = 1e-4;

}  // namespace

// ---- worked examples --------------------------------------------------------

TEST(Matmul, IdentityAndHandProduct) {
  Tape tape;
  const Var i = tape.constant(Tensor::matrix({{1, 0}, {0, 1}}));
  const Var b = tape.constant(Tensor::matrix({{3, 4}, {5, 6}}));
  EXPECT_EQ(matmul(i, b).value().to_vector(), (std::vector<double>{3, 4, 5, 6}));
  const Var r = tape.constant(Tensor::matrix({{1, 2}}));
  const Var c = tape.constant(Tensor::matrix({{3}, {4}}));
  EXPECT_EQ(matmul(r, c).value().to_vector(), (std::vector<double>{11}));
}

TEST(Matmul, GradientOfSumWrtA) {
  Tape tape;
  const Var a = tape.parameter(Tensor::matrix({{1, 2}}));
  const Var b = tape.constant(Tensor::matrix({{3}, {4}}));
  const Gradients g = tape.backward(sum(matmul(a, b)));
  EXPECT_EQ(g.of(a).to_vector(), (std::vector<double>{3, 4}));
}

TEST(Matmul, ShapeMismatchNamesBothShapes) {
  Tape tape;
  const Var a = tape.constant(Tensor::zeros({2, 3}));
  const Var b = tape.constant(Tensor::zeros({4, 5}));
  try {
    matmul(a, b);
    FAIL() << "expected DimensionError";
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("[2,3]"), std::string::npos) << msg;
    EXPECT_NE(msg.find("[4,5]"), std::string::npos) << msg;
  }
}

TEST(Conv2d, ScalarKernel) {
  Tape tape;
  const Var x = tape.constant(Tensor::full({1, 1, 3, 3}, 1.0));
  const Var k = tape.constant(Tensor::full({1, 1, 1, 1}, 2.0));
  const Var y = conv2d(x, k, 1, 0);
  EXPECT_EQ(y.shape(), (Shape{1, 1, 3, 3}));
  for (double v : y.value().data()) EXPECT_EQ(v, 2.0);
}

TEST(Conv2d, HandValueAndKernelGradient) {
  Tape tape;
  const Var x = tape.constant(Tensor({1, 1, 2, 2}, {1, 2, 3, 4}));
  const Var k = tape.parameter(Tensor::full({1, 1, 2, 2}, 1.0));
  const Var y = conv2d(x, k, 1, 0);
  EXPECT_EQ(y.value().to_vector(), (std::vector<double>{10}));
  const Gradients g = tape.backward(sum(y));
  EXPECT_EQ(g.of(k).to_vector(), (std::vector<double>{1, 2, 3, 4}));
}

TEST(Conv2d, OutputShapeAndOversizeKernel) {
  Tape tape;
  const Var x = tape.constant(Tensor::zeros({2, 3, 7, 5}));
  const Var k = tape.constant(Tensor::zeros({4, 3, 3, 3}));
  EXPECT_EQ(conv2d(x, k, 2, 1).shape(), (Shape{2, 4, 4, 3}));
  const Var big = tape.constant(Tensor::zeros({1, 3, 9, 9}));
  EXPECT_THROW(conv2d(x, big, 1, 0), DimensionError);
}

TEST(Elementwise, Examples) {
  Tape tape;
  const Var a = tape.constant(Tensor::vector({1, 2}));
  EXPECT_EQ(add(a, tape.constant(Tensor::vector({0, 0}))).value().to_vector(), (std::vector<double>{1, 2}));
  EXPECT_EQ(mul(tape.constant(Tensor::vector({2, 3})), tape.constant(Tensor::vector({4, 5}))).value().to_vector(),
            (std::vector<double>{8, 15}));
  EXPECT_EQ(scale(tape.constant(Tensor::vector({1, -1})), 0.5).value().to_vector(),
            (std::vector<double>{0.5, -0.5}));
  EXPECT_EQ(add(a, tape.constant(Tensor::scalar(3))).value().to_vector(), (std::vector<double>{4, 5}));
  EXPECT_THROW(add(a, tape.constant(Tensor::vector({1, 2, 3}))), DimensionError);
}

TEST(CustomGrad, RoundWithUnitMask) {
  Tape tape;
  const Var x = tape.parameter(Tensor::vector({0.3}));
  const auto round_fn = [](const Tensor& t) {
    std::vector<double> v = t.to_vector();
    for (double& e : v) e = std::nearbyint(e);
    return Tensor(t.shape(), v);
  };
  const auto ones = [](const Tensor& t) { return Tensor::full(t.shape(), 1.0); };
  const Var y = custom_grad(x, round_fn, ones);
  EXPECT_EQ(y.value()[0], 0.0);
  EXPECT_EQ(tape.backward(sum(y)).of(x)[0], 1.0);
}

TEST(CustomGrad, ClippedMaskZeroOutside) {
  Tape tape;
  const Var x = tape.parameter(Tensor::vector({2.0, 0.5}));
  const auto clip = [](const Tensor& t) {
    std::vector<double> v = t.to_vector();
    for (double& e : v) e = std::clamp(e, 0.0, 1.0);
    return Tensor(t.shape(), v);
  };
  const auto inside = [](const Tensor& t) {
    std::vector<double> v = t.to_vector();
    for (double& e : v) e = (e >= 0.0 && e <= 1.0) ? 1.0 : 0.0;
    return Tensor(t.shape(), v);
  };
  const Tensor g = tape.backward(sum(custom_grad(x, clip, inside))).of(x);
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 1.0);
}

TEST(CustomGrad, MaskShapeMismatchThrows) {
  Tape tape;
  const Var x = tape.parameter(Tensor::vector({1.0, 2.0}));
  const auto id = [](const Tensor& t) { return t; };
  const auto bad = [](const Tensor&) { return Tensor::vector({1.0}); };
  EXPECT_THROW(custom_grad(x, id, bad), DimensionError);
}

TEST(CrossEntropy, Examples) {
  Tape tape;
  const std::uint32_t zero[] = {0};
  const Var uniform = tape.parameter(Tensor::matrix({{0, 0}}));
  const Var l = softmax_cross_entropy(uniform, zero);
  EXPECT_NEAR(l.value().item(), std::log(2.0), 1e-15);
  const Tensor g = tape.backward(l).of(uniform);
  EXPECT_NEAR(g[0], -0.5, 1e-15);
  EXPECT_NEAR(g[1], 0.5, 1e-15);
  const Var confident = tape.constant(Tensor::matrix({{10, 0}}));
  EXPECT_NEAR(softmax_cross_entropy(confident, zero).value().item(), std::log1p(std::exp(-10.0)), 1e-15);
  const std::uint32_t bad[] = {2};
  EXPECT_THROW(softmax_cross_entropy(uniform, bad), ValidationError);
}

TEST(CrossEntropy, StableForLargeLogits) {
  Tape tape;
  const std::uint32_t one[] = {1};
  const Var l = softmax_cross_entropy(tape.constant(Tensor::matrix({{1000, 0}})), one);
  EXPECT_NEAR(l.value().item(), 1000.0, 1e-9);
}

TEST(GradCheck, Examples) {
  const ScalarFn squares = [](Tape&, const Var& x) { return sum(mul(x, x)); };
  EXPECT_LT(grad_check(squares, Tensor::vector({1, 2, 3}), 1e-5), 1e-6);
  const ScalarFn constant = [](Tape& t, const Var&) { return sum(t.constant(Tensor::vector({4.0}))); };
  EXPECT_EQ(grad_check(constant, Tensor::vector({1, 2})), 0.0);
  Rng rng(5);
  const Tensor b = random_tensor(rng, {3, 2});
  const ScalarFn chain = [&](Tape& t, const Var& x) { return sum(matmul(matmul(x, t.constant(b)), t.constant(b.reshape({2, 3})))); };
  EXPECT_LT(grad_check(chain, random_tensor(rng, {2, 3})), 1e-5);
}

// ---- gradient suite: every primitive against central differences -------------

class PrimitiveGrad : public ::testing::TestWithParam<int> {};

TEST_P(PrimitiveGrad, MatchesCentralDifferences) {
  const auto cases = primitive_cases(1000 + static_cast<std::uint64_t>(GetParam()));
  const GradCase& c = cases[static_cast<std::size_t>(GetParam()) % cases.size()];
  EXPECT_LT(grad_check(c.f, c.x), kTol) << c.name;
}

INSTANTIATE_TEST_SUITE_P(AllPrimitives, PrimitiveGrad, ::testing::Range(0, 28));

// ---- tape properties ---------------------------------------------------------

TEST(Tape, FanOutAccumulatesBranchGradients) {
  Tape tape;
  const Var x = tape.parameter(Tensor::vector({1.5, -2.0}));
  const Var y = add(add(scale(x, 2.0), scale(x, 3.0)), mul(x, x));
  const Tensor g = tape.backward(sum(y)).of(x);
  EXPECT_EQ(g[0], 5.0 + 2 * 1.5);
  EXPECT_EQ(g[1], 5.0 + 2 * -2.0);
}

TEST(Tape, BackwardVisitsEveryEntryOnce) {
  Tape tape;
  const Var x = tape.parameter(Tensor::vector({1, 2, 3}));
  Var y = x;
  for (int i = 0; i < 10; ++i) y = add_scalar(scale(y, 1.1), 0.1);
  const Var root = sum(y);
  const Gradients g = tape.backward(root);
  EXPECT_EQ(g.visited_entries(), tape.entry_count());
}

TEST(Tape, RepeatedBackwardDoesNotAccumulate) {
  Tape tape;
  const Var x = tape.parameter(Tensor::vector({2.0}));
  const Var y = sum(mul(x, x));
  EXPECT_EQ(tape.backward(y).of(x)[0], 4.0);
  EXPECT_EQ(tape.backward(y).of(x)[0], 4.0);
}

TEST(Tape, ForwardDeterministic) {
  Rng rng(3);
  const Tensor a = random_tensor(rng, {5, 7}), b = random_tensor(rng, {7, 4});
  Tape t1, t2;
  const Tensor r1 = matmul(t1.constant(a), t1.constant(b)).value();
  const Tensor r2 = matmul(t2.constant(a), t2.constant(b)).value();
  EXPECT_TRUE(r1.identical(r2));
}

TEST(StraightThroughOnehot, ForwardOneHotIdentityGradient) {
  Tape tape;
  const Var soft = tape.parameter(Tensor::vector({0.1, 0.6, 0.3}));
  const Var h = straight_through_onehot(soft);
  EXPECT_EQ(h.value().to_vector(), (std::vector<double>{0, 1, 0}));
  const Tensor g = tape.backward(dot_constant(h, std::vector<double>{1, 2, 3})).of(soft);
  EXPECT_EQ(g.to_vector(), (std::vector<double>{1, 2, 3}));
}
