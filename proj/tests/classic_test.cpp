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

#include "psz/classic.hpp"

#include <gtest/gtest.h>

#include <Eigen/SVD>
#include <cmath>
#include <random>

#include "psz/error.hpp"
#include "psz/target.hpp"
#include "test_util.hpp"

namespace psz {
namespace {

using testing::RandomComplex;
using testing::RandomMatrix;

DesignProblem RandomProblem(Rng& rng, double lambda_factor = 0.05) {
  std::uniform_int_distribution<int> rows(1, 5), speakers(1, 8);
  DesignProblem p;
  const int l = speakers(rng);
  p.hb = RandomMatrix(rng, rows(rng), l);
  p.hd = RandomMatrix(rng, rows(rng), l);
  p.target.resize(p.hb.rows());
  for (Eigen::Index i = 0; i < p.target.size(); ++i) {
    p.target(i) = RandomComplex(rng);
  }
  Eigen::JacobiSVD<CMatrix> svd(p.Stacked());
  p.lambda = lambda_factor * svd.singularValues()(0);
  return p;
}

// Gradient descent on ||p - H g||^2 + lambda ||g||^2 with step 1 / Lipschitz,
// the constant taken from an SVD.
CVector GradientDescentOracle(const DesignProblem& p) {
  const CMatrix h = p.Stacked();
  const CVector t = p.StackedTarget();
  Eigen::JacobiSVD<CMatrix> svd(h);
  const double smax = svd.singularValues()(0);
  const double step = 1.0 / (smax * smax + p.lambda);
  CVector g = CVector::Zero(h.cols());
  for (int it = 0; it < 200000; ++it) {
    const CVector grad = h.adjoint() * (h * g - t) + p.lambda * g;
    g -= step * grad;
    if (grad.norm() < 1e-15 * (1.0 + t.norm())) break;
  }
  return g;
}

TEST(PmTest, MatchesIterativeMinimizer) {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const DesignProblem p = RandomProblem(rng);
    const CVector g = PmSolve(p);
    const CVector oracle = GradientDescentOracle(p);
    EXPECT_LT((g - oracle).norm() / oracle.norm(), 1e-6) << "trial " << trial;
    EXPECT_LE(PmCost(p, g), PmCost(p, oracle) * (1.0 + 1e-12));
  }
}

TEST(PmTest, SatisfiesNormalEquations) {
  Rng rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const DesignProblem p = RandomProblem(rng);
    const CMatrix h = p.Stacked();
    const CVector g = PmSolve(p);
    CMatrix a = h.adjoint() * h;
    a.diagonal().array() += p.lambda;
    const CVector rhs = h.adjoint() * p.StackedTarget();
    EXPECT_LT((a * g - rhs).norm() / rhs.norm(), 1e-10);
  }
}

TEST(PmTest, SingularWithoutRegularization) {
  Rng rng(13);
  DesignProblem p;
  p.hb = RandomMatrix(rng, 2, 4);  // rank 2 < 4 speakers
  p.hd = CMatrix(0, 4);
  p.target = CVector::Ones(2);
  p.lambda = 0.0;
  EXPECT_THROW(PmSolve(p), NumericalError);
  p.lambda = 1e-3;
  EXPECT_NO_THROW(PmSolve(p));
  p.lambda = -1.0;
  EXPECT_THROW(PmSolve(p), ConfigError);
}

TEST(PmTest, DarkZoneOnlyIsZeroGain) {
  Rng rng(14);
  DesignProblem p = RandomProblem(rng);
  p.target.setZero();
  EXPECT_LT(PmSolve(p).norm(), 1e-15);
}

TEST(PmTest, ShapeMismatchIsStructural) {
  Rng rng(15);
  DesignProblem p;
  p.hb = RandomMatrix(rng, 3, 4);
  p.hd = RandomMatrix(rng, 3, 5);
  p.target = CVector::Ones(3);
  EXPECT_THROW(PmSolve(p), StructuralError);
  p.hd = RandomMatrix(rng, 3, 4);
  p.target = CVector::Ones(2);
  EXPECT_THROW(PmSolve(p), StructuralError);
}

TEST(RegLambdaTest, LargestSingularValueMatchesSvd) {
  Rng rng(21);
  std::uniform_int_distribution<int> rows(1, 30), cols(1, 8);
  for (int trial = 0; trial < 50; ++trial) {
    const CMatrix h = RandomMatrix(rng, rows(rng), cols(rng));
    Eigen::JacobiSVD<CMatrix> svd(h);
    const double expect = svd.singularValues()(0);
    EXPECT_NEAR(LargestSingularValue(h), expect, 1e-6 * expect);
    const RegLambda r = ComputeRegLambda(h, 0.05);
    EXPECT_NEAR(r.lambda, 0.05 * expect, 1e-6 * expect);
    EXPECT_FALSE(r.zero_matrix);
  }
}

TEST(RegLambdaTest, ZeroMatrix) {
  const RegLambda r = ComputeRegLambda(CMatrix::Zero(4, 3));
  EXPECT_EQ(r.lambda, 0.0);
  EXPECT_EQ(r.sigma_max, 0.0);
  EXPECT_TRUE(r.zero_matrix);
}

TEST(AmTest, CostSequenceNonIncreasing) {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const DesignProblem p = RandomProblem(rng);
    const AmResult r = AmSolve(p);
    ASSERT_GE(r.costs.size(), 2u);
    for (std::size_t i = 1; i < r.costs.size(); ++i) {
      EXPECT_LE(r.costs[i], r.costs[i - 1] * (1.0 + 1e-12) + 1e-300)
          << "trial " << trial << " iteration " << i;
    }
    EXPECT_NEAR(AmCost(p, r.gains), *std::min_element(r.costs.begin(),
                                                      r.costs.end()),
                1e-12 * (1.0 + r.costs.front()));
  }
}

TEST(AmTest, AmplitudeErrorNoWorseThanPm) {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const DesignProblem p = RandomProblem(rng);
    const CVector am = AmSolve(p).gains;
    const CVector pm = PmSolve(p);
    EXPECT_LE(AmCost(p, am), AmCost(p, pm) * (1.0 + 1e-12)) << trial;
    // Also against PM on the zero-phase target.
    DesignProblem zero = p;
    zero.target = p.target.cwiseAbs().cast<Complex>();
    EXPECT_LE(AmCost(p, am), AmCost(p, PmSolve(zero)) * (1.0 + 1e-12));
  }
}

TEST(AmTest, ReachesAttainableMagnitudes) {
  // Square invertible bright zone, no dark zone, no regularization: any
  // magnitude profile is attainable, so the amplitude error must vanish.
  Rng rng(33);
  DesignProblem p;
  p.hb = RandomMatrix(rng, 4, 4);
  p.hd = CMatrix(0, 4);
  p.target = CVector::Constant(4, Complex(0.7, 0.0));
  p.lambda = 0.0;
  AmOptions opts;
  opts.max_iters = 1000;
  opts.tol = 0.0;
  const AmResult r = AmSolve(p, opts);
  EXPECT_LT(AmCost(p, r.gains), 1e-20);
  const CVector pressure = p.hb * r.gains;
  for (Eigen::Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(std::abs(pressure(i)), 0.7, 1e-10);
  }
}

TEST(AmTest, HonoursInitialPoint) {
  Rng rng(34);
  const DesignProblem p = RandomProblem(rng);
  const CVector start = CVector::Constant(p.hb.cols(), Complex(0.1, -0.2));
  const AmResult r = AmSolve(p, {}, &start);
  EXPECT_DOUBLE_EQ(r.costs.front(), AmCost(p, start));
  AmOptions bad;
  bad.max_iters = 0;
  EXPECT_THROW(AmSolve(p, bad), ConfigError);
}

std::pair<std::size_t, std::size_t> Pair(std::size_t a, std::size_t b) {
  return {a, b};
}

TEST(TargetTest, EdgeAndCentreSpeakers) {
  EXPECT_EQ(TargetSpeakers(-0.3, 8), Pair(0, 3));
  EXPECT_EQ(TargetSpeakers(0.0, 8), Pair(7, 4));
  EXPECT_EQ(TargetSpeakers(0.5, 8), Pair(7, 4));
  EXPECT_EQ(TargetSpeakers(-1.0, 2), Pair(0, 0));
  EXPECT_THROW(TargetSpeakers(0.0, 1), ConfigError);

  Rng rng(41);
  const AtfBlock hb = testing::RandomBlock(rng, 3, 8, 5);
  const auto mag = TargetMagnitude(0.4, hb);
  const auto phased = TargetWithReferencePhase(0.4, hb);
  for (std::size_t m = 0; m < 3; ++m) {
    for (std::size_t n = 0; n < 5; ++n) {
      const double expect =
          0.5 * (std::abs(hb.at(m, 7, n)) + std::abs(hb.at(m, 4, n)));
      EXPECT_NEAR(mag[m * 5 + n], expect, 1e-15);
      EXPECT_NEAR(std::abs(phased[m * 5 + n]), expect, 1e-15);
      EXPECT_NEAR(std::arg(phased[m * 5 + n]),
                  std::arg(hb.at(m, 7, n) + hb.at(m, 4, n)), 1e-12);
    }
  }
}

class DesignClassicTest : public ::testing::Test {
 protected:
  void SetUp() override {
    grid_ = MakeGrid(RenderingArea{}, 0.05);
    atf_ = SimulateAnechoic(grid_, SpeakerArray::DefaultLinear(),
                            FrequencyGrid{48000, 8192, 18, 40});
  }
  SamplingGrid grid_;
  AtfTensor atf_;
  ZonePair pair_{{{0.5, 1.0}, 0.1}, {{-0.5, 1.2}, 0.1}};
};

TEST_F(DesignClassicTest, PmBinsMatchDirectSolve) {
  const ClassicDesign d = DesignClassic(ClassicMethod::kPm, atf_, pair_);
  const AtfBlock hb = atf_.Rows(SelectControlPoints(grid_, pair_.bz));
  const AtfBlock hd = atf_.Rows(SelectControlPoints(grid_, pair_.dz));
  const auto target = TargetWithReferencePhase(0.5, hb);
  for (std::size_t n = 0; n < atf_.freqs.size(); n += 7) {
    DesignProblem p;
    p.hb = BinMatrix(hb, n);
    p.hd = BinMatrix(hd, n);
    p.target.resize(p.hb.rows());
    for (Eigen::Index m = 0; m < p.target.size(); ++m) {
      p.target(m) = target[static_cast<std::size_t>(m) * hb.bins + n];
    }
    Eigen::JacobiSVD<CMatrix> svd(p.Stacked());
    p.lambda = 0.05 * svd.singularValues()(0);
    const CVector g = GradientDescentOracle(p);
    EXPECT_LT((d.filters.Bin(n) - g).norm() / g.norm(), 1e-6) << "bin " << n;
  }
  EXPECT_EQ(d.zero_lambda_bins, 0u);
}

TEST_F(DesignClassicTest, AmNoWorseThanPmPerBin) {
  const auto pm = DesignClassic(ClassicMethod::kPm, atf_, pair_).filters;
  const auto am = DesignClassic(ClassicMethod::kAm, atf_, pair_).filters;
  const AtfBlock hb = atf_.Rows(SelectControlPoints(grid_, pair_.bz));
  const AtfBlock hd = atf_.Rows(SelectControlPoints(grid_, pair_.dz));
  const auto target = TargetMagnitude(0.5, hb);
  for (std::size_t n = 0; n < atf_.freqs.size(); ++n) {
    DesignProblem p;
    p.hb = BinMatrix(hb, n);
    p.hd = BinMatrix(hd, n);
    p.target.resize(p.hb.rows());
    for (Eigen::Index m = 0; m < p.target.size(); ++m) {
      p.target(m) = target[static_cast<std::size_t>(m) * hb.bins + n];
    }
    p.lambda = ComputeRegLambda(p.Stacked()).lambda;
    EXPECT_LE(AmCost(p, am.Bin(n)), AmCost(p, pm.Bin(n)) * (1.0 + 1e-9));
  }
}

TEST_F(DesignClassicTest, EmptyZoneIsDomainError) {
  const ZonePair off{{{0.5, 1.0}, 0.1}, {{3.0, 1.0}, 0.1}};
  EXPECT_THROW(DesignClassic(ClassicMethod::kPm, atf_, off), DomainError);
}

}  // namespace
}  // namespace psz
