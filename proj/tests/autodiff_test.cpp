/*
 * Copyright 2026 The PSZ Lab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "psz/autodiff.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "psz/error.hpp"

namespace psz::ad {
namespace {

using Fn = std::function<Tensor(const std::vector<Tensor>&)>;

Tensor Param(std::mt19937_64& rng, Shape shape, double lo = -1.0,
             double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(NumElements(shape));
  for (double& x : v) x = u(rng);
  return Tensor::Parameter(std::move(shape), std::move(v));
}

// Central differences computed here, independently of CheckGradients, and
// compared entry by entry against Backward().
void ExpectGradientsMatch(const Fn& f, std::vector<Tensor> params,
                          double tol = 1e-7) {
  for (Tensor& p : params) p.ZeroGrad();
  Backward(f(params));
  const double h = 1e-6;
  for (std::size_t k = 0; k < params.size(); ++k) {
    const std::vector<double> analytic = params[k].grad();
    ASSERT_EQ(analytic.size(), params[k].size()) << "input " << k;
    auto& x = params[k].mutable_value();
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double saved = x[i];
      x[i] = saved + h;
      const double fp = f(params).item();
      x[i] = saved - h;
      const double fm = f(params).item();
      x[i] = saved;
      const double numeric = (fp - fm) / (2.0 * h);
      EXPECT_NEAR(analytic[i], numeric, tol * std::max(1.0, std::abs(numeric)))
          << "input " << k << " entry " << i;
    }
  }
}

// A fixed random weighting makes every output entry matter.
Tensor Project(const Tensor& y, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w(y.size());
  for (double& v : w) v = u(rng);
  return Sum(Mul(y, Tensor::Constant(y.shape(), std::move(w))));
}

class PrimitiveTest : public ::testing::Test {
 protected:
  std::mt19937_64 rng_{5};
};

TEST_F(PrimitiveTest, AddSubMulSameShape) {
  const Tensor a = Param(rng_, {3, 4}), b = Param(rng_, {3, 4});
  ExpectGradientsMatch([](auto& p) { return Project(Add(p[0], p[1])); }, {a, b});
  ExpectGradientsMatch([](auto& p) { return Project(Sub(p[0], p[1])); }, {a, b});
  ExpectGradientsMatch([](auto& p) { return Project(Mul(p[0], p[1])); }, {a, b});
}

TEST_F(PrimitiveTest, SuffixBroadcasting) {
  const Tensor a = Param(rng_, {2, 3, 4}), row = Param(rng_, {4}),
               mat = Param(rng_, {3, 4}), s = Param(rng_, {});
  for (const Tensor& b : {row, mat, s}) {
    ExpectGradientsMatch([](auto& p) { return Project(Add(p[0], p[1])); }, {a, b});
    ExpectGradientsMatch([](auto& p) { return Project(Sub(p[1], p[0])); }, {a, b});
    ExpectGradientsMatch([](auto& p) { return Project(Mul(p[1], p[0])); }, {a, b});
  }
  const Tensor r = Add(a, row);
  EXPECT_EQ(r.shape(), (Shape{2, 3, 4}));
  EXPECT_DOUBLE_EQ(r.value()[13], a.value()[13] + row.value()[1]);
  EXPECT_THROW(Add(a, Param(rng_, {3})), StructuralError);
  EXPECT_THROW(Add(a, Param(rng_, {2, 3})), StructuralError);
}

TEST_F(PrimitiveTest, UnaryOps) {
  const Tensor a = Param(rng_, {5, 3});
  const Tensor pos = Param(rng_, {5, 3}, 0.2, 2.0);
  ExpectGradientsMatch([](auto& p) { return Project(Scale(p[0], -2.5)); }, {a});
  ExpectGradientsMatch([](auto& p) { return Project(AddConstant(p[0], 3.0)); }, {a});
  ExpectGradientsMatch([](auto& p) { return Project(Relu(p[0])); }, {a});
  ExpectGradientsMatch([](auto& p) { return Project(Sin(p[0])); }, {a});
  ExpectGradientsMatch([](auto& p) { return Project(Cos(p[0])); }, {a});
  ExpectGradientsMatch([](auto& p) { return Project(Square(p[0])); }, {a});
  ExpectGradientsMatch([](auto& p) { return Project(Sqrt(p[0])); }, {pos});
  ExpectGradientsMatch(
      [](auto& p) { return Project(MaxWithConstant(p[0], 0.1)); }, {a});
}

TEST_F(PrimitiveTest, UnaryValues) {
  const Tensor a = Tensor::Constant({4}, {-1.0, 0.0, 0.25, 4.0});
  EXPECT_EQ(Relu(a).value(), (std::vector<double>{0.0, 0.0, 0.25, 4.0}));
  EXPECT_EQ(MaxWithConstant(a, 0.5).value(),
            (std::vector<double>{0.5, 0.5, 0.5, 4.0}));
  EXPECT_EQ(Sqrt(Tensor::Constant({2}, {0.25, 4.0})).value(),
            (std::vector<double>{0.5, 2.0}));
  EXPECT_DOUBLE_EQ(Sin(a).value()[3], std::sin(4.0));
  EXPECT_DOUBLE_EQ(Cos(a).value()[2], std::cos(0.25));
}

TEST_F(PrimitiveTest, KinksHaveZeroSubgradient) {
  const Tensor x = Tensor::Parameter({3}, {0.0, 0.5, 1.0});
  Backward(Sum(Add(Relu(x), MaxWithConstant(x, 0.5))));
  // Relu passes where x > 0, max passes where x > 0.5.
  EXPECT_EQ(x.grad(), (std::vector<double>{0.0, 1.0, 2.0}));
}

TEST_F(PrimitiveTest, MatMul) {
  const Tensor a = Param(rng_, {3, 5}), b = Param(rng_, {5, 2});
  ExpectGradientsMatch([](auto& p) { return Project(MatMul(p[0], p[1])); }, {a, b});
  const Tensor c = MatMul(a, b);
  ASSERT_EQ(c.shape(), (Shape{3, 2}));
  double expect = 0.0;
  for (int p = 0; p < 5; ++p) expect += a.value()[5 + p] * b.value()[p * 2 + 1];
  EXPECT_NEAR(c.value()[3], expect, 1e-15);
  EXPECT_THROW(MatMul(a, a), StructuralError);
}

TEST_F(PrimitiveTest, Reductions) {
  const Tensor a = Param(rng_, {2, 3, 4});
  ExpectGradientsMatch([](auto& p) { return Sum(p[0]); }, {a});
  ExpectGradientsMatch([](auto& p) { return Mean(Square(p[0])); }, {a});
  for (std::size_t axis = 0; axis < 3; ++axis) {
    ExpectGradientsMatch(
        [axis](auto& p) { return Project(SumAxis(p[0], axis)); }, {a});
  }
  const Tensor s = SumAxis(a, 1);
  ASSERT_EQ(s.shape(), (Shape{2, 4}));
  const auto& v = a.value();
  EXPECT_NEAR(s.value()[5], v[12 + 1] + v[12 + 4 + 1] + v[12 + 8 + 1], 1e-15);
  double total = 0.0;
  for (double x : v) total += x;
  EXPECT_NEAR(Sum(a).item(), total, 1e-14);
  EXPECT_NEAR(Mean(a).item(), total / 24.0, 1e-15);
}

TEST_F(PrimitiveTest, ShapeOps) {
  const Tensor a = Param(rng_, {4, 3}), b = Param(rng_, {2, 3}),
               c = Param(rng_, {4, 2});
  const std::size_t idx[] = {2, 0, 2, 1};
  ExpectGradientsMatch([](auto& p) { return Project(Reshape(p[0], {2, 6})); }, {a});
  ExpectGradientsMatch(
      [&](auto& p) { return Project(Gather(p[0], 1, idx)); }, {a});
  ExpectGradientsMatch(
      [&](auto& p) { return Project(GatherRows(p[0], idx)); }, {a});
  ExpectGradientsMatch(
      [](auto& p) { return Project(Concat({p[0], p[1]}, 0)); }, {a, b});
  ExpectGradientsMatch(
      [](auto& p) { return Project(Concat({p[0], p[1]}, 1)); }, {a, c});
  EXPECT_THROW(Reshape(a, {5, 2}), StructuralError);
  const std::size_t bad[] = {3};
  EXPECT_THROW(Gather(a, 1, bad), StructuralError);
  EXPECT_THROW(Concat({a, b}, 1), StructuralError);
}

TEST_F(PrimitiveTest, GatherRepeatsScatterAdd) {
  const Tensor x = Tensor::Parameter({3}, {1.0, 2.0, 3.0});
  const std::size_t idx[] = {2, 2, 0, 2};
  const Tensor g = Gather(x, 0, idx);
  EXPECT_EQ(g.value(), (std::vector<double>{3.0, 3.0, 1.0, 3.0}));
  Backward(Sum(g));
  EXPECT_EQ(x.grad(), (std::vector<double>{1.0, 0.0, 3.0}));
}

TEST_F(PrimitiveTest, LinearIdftValuesAndGradients) {
  const std::size_t n = 16;
  const Tensor re = Param(rng_, {3, n}), im = Param(rng_, {3, n});
  const Tensor x = LinearIdft(re, im);
  ASSERT_EQ(x.shape(), (Shape{3, n}));
  for (std::size_t r = 0; r < 3; ++r) {
    for (std::size_t t = 0; t < n; ++t) {
      double acc = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        const double ang = 2.0 * std::numbers::pi * k * t / n;
        acc += re.value()[r * n + k] * std::cos(ang) -
               im.value()[r * n + k] * std::sin(ang);
      }
      EXPECT_NEAR(x.value()[r * n + t], acc / n, 1e-14);
    }
  }
  ExpectGradientsMatch(
      [](auto& p) { return Project(LinearIdft(p[0], p[1])); }, {re, im});
  ExpectGradientsMatch(
      [](auto& p) { return Sum(Square(LinearIdft(p[0], p[1]))); }, {re, im});
  EXPECT_THROW(LinearIdft(Param(rng_, {12}), Param(rng_, {12})),
               StructuralError);
  EXPECT_THROW(LinearIdft(Param(rng_, {8}), Param(rng_, {16})),
               StructuralError);
}

TEST(GraphTest, SharedSubexpressionAccumulates) {
  const Tensor x = Tensor::Parameter({}, {3.0});
  const Tensor y = Mul(x, x);            // x^2
  Backward(Add(Mul(y, y), y));           // x^4 + x^2
  EXPECT_DOUBLE_EQ(x.grad()[0], 4.0 * 27.0 + 6.0);
}

TEST(GraphTest, SecondBackwardThrows) {
  const Tensor x = Tensor::Parameter({2}, {1.0, 2.0});
  const Tensor y = Square(x);
  const Tensor loss = Sum(y);
  Backward(loss);
  EXPECT_THROW(Backward(loss), StructuralError);
  // Reusing a released intermediate in a new graph is also rejected.
  EXPECT_THROW(Backward(Sum(Scale(y, 2.0))), StructuralError);
}

TEST(GraphTest, NonScalarLossThrows) {
  const Tensor x = Tensor::Parameter({2}, {1.0, 2.0});
  EXPECT_THROW(Backward(Square(x)), StructuralError);
  EXPECT_THROW(Backward(Tensor()), StructuralError);
}

TEST(GraphTest, LeafGradsAccumulateAcrossGraphs) {
  const Tensor x = Tensor::Parameter({2}, {1.0, -2.0});
  Backward(Sum(Square(x)));
  Backward(Sum(Scale(x, 3.0)));
  EXPECT_EQ(x.grad(), (std::vector<double>{2.0 + 3.0, -4.0 + 3.0}));
  Tensor y = x;
  y.ZeroGrad();
  EXPECT_EQ(x.grad(), (std::vector<double>{0.0, 0.0}));
}

TEST(GraphTest, NoGradGuardRecordsNothing) {
  const Tensor x = Tensor::Parameter({2}, {1.0, 2.0});
  {
    NoGradGuard guard;
    EXPECT_FALSE(GradEnabled());
    const Tensor y = Sum(Square(x));
    EXPECT_FALSE(y.requires_grad());
    EXPECT_DOUBLE_EQ(y.item(), 5.0);
  }
  EXPECT_TRUE(GradEnabled());
  EXPECT_TRUE(Sum(Square(x)).requires_grad());
}

TEST(GraphTest, ConstantsCarryNoGradient) {
  const Tensor c = Tensor::Constant({2}, {1.0, 2.0});
  const Tensor x = Tensor::Parameter({2}, {3.0, 4.0});
  Backward(Sum(Mul(c, x)));
  EXPECT_TRUE(c.grad().empty());
  EXPECT_EQ(x.grad(), (std::vector<double>{1.0, 2.0}));
  EXPECT_THROW(Tensor::Constant({3}, std::vector<double>{1.0}), StructuralError);
}

TEST(AdamTest, FirstStepsMatchClosedForm) {
  Tensor w = Tensor::Parameter({2}, {1.0, -1.0});
  AdamOptions opt;
  opt.lr = 0.1;
  Adam adam({w}, opt);
  double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -1.0};
  for (int step = 1; step <= 3; ++step) {
    adam.ZeroGrad();
    // loss = 0.5 * w0^2 + 2 * w1
    Backward(Add(Scale(Square(GatherRows(w, std::vector<std::size_t>{0})), 0.5),
                 Scale(Sum(GatherRows(w, std::vector<std::size_t>{1})), 2.0)));
    const double g[2] = {ref[0], 2.0};
    for (int i = 0; i < 2; ++i) {
      m[i] = 0.9 * m[i] + 0.1 * g[i];
      v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
      const double mh = m[i] / (1.0 - std::pow(0.9, step));
      const double vh = v[i] / (1.0 - std::pow(0.999, step));
      ref[i] -= 0.1 * mh / (std::sqrt(vh) + 1e-8);
    }
    adam.Step();
    EXPECT_NEAR(w.value()[0], ref[0], 1e-14);
    EXPECT_NEAR(w.value()[1], ref[1], 1e-14);
  }
  EXPECT_EQ(adam.step_count(), 3);
}

TEST(AdamTest, NonFiniteGradientLeavesParametersUntouched) {
  Tensor a = Tensor::Parameter({2}, {1.0, 2.0});
  Tensor b = Tensor::Parameter({1}, {0.5});
  Adam adam({a, b});
  a.mutable_grad() = {0.1, 0.2};
  b.mutable_grad() = {std::numeric_limits<double>::quiet_NaN()};
  EXPECT_THROW(adam.Step(), NumericalError);
  EXPECT_EQ(a.value(), (std::vector<double>{1.0, 2.0}));
  EXPECT_EQ(b.value(), (std::vector<double>{0.5}));
  EXPECT_EQ(adam.step_count(), 0);
  EXPECT_THROW(Adam({Tensor::Constant({1}, 0.0)}), StructuralError);
}

TEST(AdamTest, MinimizesQuadratic) {
  std::mt19937_64 rng(8);
  Tensor w = Param(rng, {4});
  const Tensor target = Tensor::Constant({4}, {0.3, -0.2, 0.9, 0.0});
  AdamOptions opt;
  opt.lr = 0.05;
  Adam adam({w}, opt);
  for (int i = 0; i < 2000; ++i) {
    adam.ZeroGrad();
    Backward(Sum(Square(Sub(w, target))));
    adam.Step();
  }
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_NEAR(w.value()[i], target.value()[i], 1e-3);
  }
}

TEST(GradCheckTest, ReportsSmallErrorForCorrectGraph) {
  std::mt19937_64 rng(3);
  const std::vector<Tensor> in = {Param(rng, {3, 4}), Param(rng, {4})};
  const GradCheckReport r = CheckGradients(
      [](auto& p) { return Sum(Sin(Mul(p[0], p[1]))); }, in);
  EXPECT_LT(r.max_rel_error, 1e-7);
  EXPECT_EQ(r.checked, 16u);
  EXPECT_THROW(CheckGradients([](auto& p) { return Sum(p[0]); },
                              {Tensor::Constant({1}, 1.0)}),
               StructuralError);
}

}  // namespace
}  // namespace psz::ad
