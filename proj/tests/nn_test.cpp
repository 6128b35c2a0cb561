// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "motiac/nn.hpp"

namespace motiac::nn {
namespace {

// Fixed [3, 4, 2] tanh net; flat entry i = 0.1 * ((7 i mod 11) - 5).
Params HandNet() {
  Params p(NetLayout({3, 4, 2}, Activation::kTanh));
  std::vector<double> flat(p.size());
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = 0.1 * (static_cast<double>((i * 7) % 11) - 5.0);
  p.Assign(flat);
  return p;
}

TEST(NetLayout, CountsParameters) {
  const NetLayout layout({8, 64, 64, 2}, Activation::kTanh);
  EXPECT_EQ(layout.num_layers(), 3u);
  EXPECT_EQ(layout.parameter_count(), 8u * 64 + 64 + 64 * 64 + 64 + 64 * 2 + 2);
  EXPECT_EQ(layout.activation(2), Activation::kIdentity);
}

TEST(NetLayout, RejectsBadShapes) {
  EXPECT_THROW(NetLayout({4}, Activation::kTanh), std::invalid_argument);
  EXPECT_THROW(NetLayout({4, 0, 1}, Activation::kTanh), std::invalid_argument);
  EXPECT_THROW(NetLayout({4, 3, 1}, std::vector<Activation>{}), std::invalid_argument);
  EXPECT_THROW(ParseActivation("sigmoid"), std::invalid_argument);
  EXPECT_EQ(ParseActivation("relu"), Activation::kRelu);
}

TEST(Forward, MatchesNumpyOracle) {
  const auto p = HandNet();
  const std::vector<double> x{0.5, -1.0, 2.0};
  const auto out = Forward(p, x).output;
  EXPECT_NEAR(out(0, 0), -0.02849901017446485, 1e-14);
  EXPECT_NEAR(out(1, 0), 0.321166010878431, 1e-14);
}

TEST(Forward, PredictAgreesWithForward) {
  const auto p = InitParams(NetLayout({5, 7, 7, 3}, Activation::kTanh), 3);
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(5, 300);
  EXPECT_TRUE(Predict(p, x).isApprox(Forward(p, x).output, 1e-15));
}

TEST(Forward, TanhIsAccurateAndSaturates) {
  Params p(NetLayout({1, 1, 1}, Activation::kTanh));
  p.Assign(std::vector<double>{1.0, 0.0, 1.0, 0.0});
  for (double x : {-800.0, -25.0, -3.0, -1e-3, 0.0, 1e-9, 0.7, 19.0, 800.0}) {
    const double got = Predict(p, Eigen::MatrixXd::Constant(1, 1, x))(0, 0);
    EXPECT_NEAR(got, std::tanh(x), 1e-15) << x;
  }
}

TEST(Backward, MatchesNumpyOracle) {
  const auto p = HandNet();
  const std::vector<double> x{0.5, -1.0, 2.0};
  const std::vector<double> g{1.0, -2.0};
  const auto grad = Backward(p, Forward(p, x).cache, g).Flatten();
  const double want[] = {-0.3029370524443084, 0.6058741048886168, -1.2117482097772336, 0.2019580349628723,
                         -0.4039160699257446, 0.8078321398514892, 0.4950331454237199, -0.9900662908474398,
                         1.9801325816948796,  -0.26927737995049633, 0.5385547599009927, -1.0771095198019853,
                         -0.6058741048886168, 0.4039160699257446, 0.9900662908474398, -0.5385547599009927,
                         -0.5716699660851173, -0.5716699660851173, -0.0996679946249559, -0.5716699660851172,
                         1.1433399321702347,  1.1433399321702347, 0.1993359892499118, 1.1433399321702344,
                         1.0,                 -2.0};
  ASSERT_EQ(grad.size(), std::size(want));
  for (std::size_t i = 0; i < grad.size(); ++i) EXPECT_NEAR(grad[i], want[i], 1e-14) << i;
}

TEST(Backward, MatchesFiniteDifferencesOnRandomNets) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> width(1, 7);
  for (int n = 0; n < 20; ++n) {
    const std::vector<std::size_t> sizes{static_cast<std::size_t>(width(rng)), static_cast<std::size_t>(width(rng)),
                                         static_cast<std::size_t>(width(rng))};
    const Activation act = n % 2 == 0 ? Activation::kTanh : Activation::kIdentity;
    const auto p = InitParams(NetLayout(sizes, act), rng());
    const Eigen::MatrixXd x = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(sizes[0]), 3);
    const Eigen::MatrixXd g = Eigen::MatrixXd::Random(static_cast<Eigen::Index>(sizes[2]), 3);
    const auto analytic = Backward(p, Forward(p, x).cache, g);
    const auto numeric =
        FiniteDiffGrad(p, [&](const Params& q) { return (Predict(q, x).array() * g.array()).sum(); }, 1e-5);
    EXPECT_LE(MaxRelativeError(analytic, numeric), 1e-4) << n;
  }
}

TEST(Backward, ReluMasksNegativePreActivations) {
  Params p(NetLayout({1, 1, 1}, Activation::kRelu));
  p.Assign(std::vector<double>{1.0, 0.0, 2.0, 0.0});
  const std::vector<double> neg{-1.0};
  const std::vector<double> one{1.0};
  const auto g = Backward(p, Forward(p, neg).cache, one);
  EXPECT_EQ(g.layer(0).weight(0, 0), 0.0);
  EXPECT_EQ(g.layer(1).bias(0), 1.0);
}

TEST(Backward, RejectsMismatchedGradient) {
  const auto p = HandNet();
  const std::vector<double> x{0.5, -1.0, 2.0};
  const std::vector<double> g{1.0};
  EXPECT_THROW(Backward(p, Forward(p, x).cache, g), std::invalid_argument);
  EXPECT_THROW(Forward(p, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(Adam, TwoStepsMatchOracle) {
  Params p(NetLayout({1, 1}, std::vector<Activation>{}));
  p.Assign(std::vector<double>{0.5, -0.3});
  AdamState adam(p.layout());
  Grad g(p.layout());
  g.Assign(std::vector<double>{0.2, -0.1});
  adam.Apply(p, g);
  g.Assign(std::vector<double>{0.4, 0.05});
  adam.Apply(p, g);
  EXPECT_EQ(adam.step(), 2);
  EXPECT_NEAR(p.entry(0), 0.4980348180546954, 1e-15);
  EXPECT_NEAR(p.entry(1), -0.29873366309403393, 1e-15);
}

TEST(Adam, FirstStepMovesEachEntryByStepSize) {
  auto p = InitParams(NetLayout({3, 2}, std::vector<Activation>{}), 4);
  const auto before = p.Flatten();
  Grad g(p.layout());
  std::vector<double> flat(g.size());
  for (std::size_t i = 0; i < flat.size(); ++i) flat[i] = (i % 2 == 0 ? 1.0 : -1.0) * (0.5 + static_cast<double>(i));
  g.Assign(flat);
  AdamState adam(p.layout(), AdamConfig{.step_size = 0.01});
  adam.Apply(p, g);
  const auto after = p.Flatten();
  for (std::size_t i = 0; i < flat.size(); ++i) {
    EXPECT_NEAR(before[i] - after[i], 0.01 * (flat[i] > 0 ? 1.0 : -1.0), 1e-9);
  }
}

TEST(Adam, NonFiniteGradientLeavesStateUntouched) {
  auto p = HandNet();
  const auto before = p;
  AdamState adam(p.layout());
  Grad g(p.layout());
  g.layer(1).bias(0) = std::numeric_limits<double>::quiet_NaN();
  try {
    adam.Apply(p, g);
    FAIL() << "expected NonFiniteGradient";
  } catch (const NonFiniteGradient& e) {
    EXPECT_EQ(e.layer(), 1u);
  }
  EXPECT_EQ(adam.step(), 0);
  EXPECT_EQ(p, before);
}

TEST(Adam, FunctionalStepMatchesInPlace) {
  auto p = HandNet();
  Grad g = Grad::ZerosLike(p);
  g.layer(0).weight.setConstant(0.3);
  AdamState a(p.layout());
  auto [q, b] = AdamStep(a, p, g);
  a.Apply(p, g);
  EXPECT_EQ(p, q);
  EXPECT_EQ(b.step(), 1);
}

TEST(LayerStack, ArithmeticAndFlatOrder) {
  auto a = HandNet();
  auto b = a;
  b *= 2.0;
  b -= a;
  EXPECT_EQ(a, b);
  b += a;
  EXPECT_DOUBLE_EQ(b.entry(0), 2.0 * a.entry(0));
  // Weight row-major, then bias: entry 3 is W0(1, 0).
  EXPECT_EQ(a.entry(3), a.layer(0).weight(1, 0));
  EXPECT_EQ(a.entry(12), a.layer(0).bias(0));
  EXPECT_THROW(a += Params(NetLayout({3, 2}, std::vector<Activation>{})), std::invalid_argument);
  EXPECT_THROW(a.entry(a.size()), std::out_of_range);
}

TEST(Checkpoint, RoundTripsExactly) {
  const auto p = InitParams(NetLayout({4, 6, 2}, std::vector<Activation>{Activation::kRelu}), 12);
  std::stringstream s;
  WriteParams(s, p);
  const auto q = ReadParams(s);
  EXPECT_EQ(p, q);
  EXPECT_EQ(q.layout().activation(0), Activation::kRelu);
}

TEST(InitParams, SeededAndBounded) {
  const NetLayout layout({16, 8, 1}, Activation::kTanh);
  EXPECT_EQ(InitParams(layout, 5), InitParams(layout, 5));
  EXPECT_NE(InitParams(layout, 5), InitParams(layout, 6));
  const auto p = InitParams(layout, 5);
  EXPECT_LE(p.layer(0).weight.cwiseAbs().maxCoeff(), 0.25);
  EXPECT_EQ(p.layer(0).bias.cwiseAbs().maxCoeff(), 0.0);
}

}  // namespace
}  // namespace motiac::nn
