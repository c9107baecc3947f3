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

#include "psz/eval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "psz/error.hpp"
#include "psz/target.hpp"
#include "test_util.hpp"

namespace psz {
namespace {

using testing::RandomBlock;
using testing::RandomFilters;

// ||H_n g_n||^2 through Eigen, independent of the metric loops.
double EigenEnergy(const AtfBlock& h, const FilterSet& g, std::size_t n) {
  CVector gv(static_cast<Eigen::Index>(g.num_speakers()));
  for (std::size_t l = 0; l < g.num_speakers(); ++l) gv(static_cast<Eigen::Index>(l)) = g.at(l, n);
  return (BinMatrix(h, n) * gv).squaredNorm();
}

class MetricTest : public ::testing::Test {
 protected:
  MetricTest() {
    h1_ = RandomBlock(rng_, 7, 4, 6);
    h2_ = RandomBlock(rng_, 5, 4, 6);
    g_ = RandomFilters(rng_, 4, 6);
    g_other_ = RandomFilters(rng_, 4, 6);
  }
  Rng rng_{31};
  AtfBlock h1_, h2_;
  FilterSet g_, g_other_;
};

TEST_F(MetricTest, IziAndIpiMatchBruteForce) {
  const MetricCurve izi = Izi(h1_, h2_, g_);
  const MetricCurve ipi = Ipi(h1_, g_, g_other_);
  for (std::size_t n = 0; n < 6; ++n) {
    const double r = EigenEnergy(h1_, g_, n) / EigenEnergy(h2_, g_, n);
    EXPECT_LT(testing::RelErr(izi.ratio[n], r), 1e-10);
    EXPECT_NEAR(izi.db[n], 10 * std::log10(r), 1e-9);
    EXPECT_EQ(izi.valid[n], 1);
    const double q = EigenEnergy(h1_, g_, n) / EigenEnergy(h1_, g_other_, n);
    EXPECT_LT(testing::RelErr(ipi.ratio[n], q), 1e-10);
  }
}

TEST_F(MetricTest, RatiosIgnoreCommonScale) {
  FilterSet scaled = g_, scaled_other = g_other_;
  for (Complex& v : scaled.gains) v *= Complex(-3.0, 2.0);
  for (Complex& v : scaled_other.gains) v *= Complex(-3.0, 2.0);
  const auto a = Izi(h1_, h2_, g_), b = Izi(h1_, h2_, scaled);
  const auto c = Ipi(h1_, g_, g_other_), d = Ipi(h1_, scaled, scaled_other);
  for (std::size_t n = 0; n < 6; ++n) {
    EXPECT_NEAR(a.db[n], b.db[n], 1e-10);
    EXPECT_NEAR(c.db[n], d.db[n], 1e-10);
  }
}

TEST_F(MetricTest, ZeroDenominatorIsInvalid) {
  FilterSet zero = g_;
  for (std::size_t l = 0; l < 4; ++l) zero.at(l, 2) = 0.0;
  const auto izi = Izi(h1_, h2_, zero);
  EXPECT_EQ(izi.valid[2], 0);
  EXPECT_TRUE(std::isinf(izi.db[2]));
  EXPECT_EQ(izi.valid[1], 1);
  EXPECT_EQ(Ipi(h1_, g_, zero).valid[2], 0);
}

TEST_F(MetricTest, NmseMatchesBruteForce) {
  std::vector<double> target(7 * 6);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  for (double& t : target) t = u(rng_);
  const NmseResult r = Nmse(g_, h1_, target);
  double mean = 0.0;
  for (std::size_t n = 0; n < 6; ++n) {
    CVector gv(4);
    for (std::size_t l = 0; l < 4; ++l) gv(static_cast<Eigen::Index>(l)) = g_.at(l, n);
    const CVector p = BinMatrix(h1_, n) * gv;
    double err = 0.0, ref = 0.0;
    for (Eigen::Index m = 0; m < 7; ++m) {
      const double t = target[static_cast<std::size_t>(m) * 6 + n];
      err += std::pow(t - std::abs(p(m)), 2);
      ref += t * t;
    }
    const double expect = err / ref / 7.0;
    EXPECT_LT(testing::RelErr(r.per_bin[n], expect), 1e-10);
    mean += expect / 6.0;
  }
  EXPECT_LT(testing::RelErr(r.value, mean), 1e-10);
}

TEST_F(MetricTest, NmseOfSilenceIsOneOverM) {
  FilterSet zero = g_;
  for (Complex& v : zero.gains) v = 0.0;
  std::vector<double> target(7 * 6, 0.5);
  target[3] = 2.0;
  const NmseResult r = Nmse(zero, h1_, target);
  for (double v : r.per_bin) EXPECT_NEAR(v, 1.0 / 7.0, 1e-15);
  std::fill(target.begin(), target.end(), 0.0);
  const NmseResult empty = Nmse(zero, h1_, target);
  EXPECT_TRUE(std::isnan(empty.value));
  EXPECT_EQ(empty.valid[0], 0);
  EXPECT_THROW(Nmse(g_, h1_, std::span(target).first(5)), StructuralError);
}

TEST(LogMeanTest, WeightsByInverseFrequency) {
  const double f[] = {100.0, 200.0, 400.0};
  const double c[] = {-7.0, -7.0, -7.0};
  EXPECT_DOUBLE_EQ(LogMean(c, f), -7.0);
  // Exact, not merely close, for any constant over a long grid.
  const auto paper = FrequencyGrid::FullBand().bin_freqs();
  for (double v : {-12.3, 0.1, 37.77}) {
    const std::vector<double> flat(paper.size(), v);
    EXPECT_EQ(LogMean(flat, paper), v);
  }
  const double x[] = {1.0, 2.0, 4.0};
  EXPECT_NEAR(LogMean(x, f), (0.01 + 0.01 + 0.01) / (0.01 + 0.005 + 0.0025),
              1e-12);
  const double inf = std::numeric_limits<double>::infinity();
  const double skip[] = {1.0, inf, std::nan("")};
  EXPECT_DOUBLE_EQ(LogMean(skip, f), 1.0);
  const double none[] = {inf, inf, inf};
  EXPECT_TRUE(std::isnan(LogMean(none, f)));
  const double bad_f[] = {0.0, 1.0, 2.0};
  EXPECT_THROW(LogMean(x, bad_f), ConfigError);
  EXPECT_THROW(LogMean(std::span(x).first(2), f), StructuralError);
}

TEST(OctaveSmoothTest, MatchesWindowedMean) {
  const auto freqs = FrequencyGrid::FullBand().bin_freqs();
  Rng rng(5);
  std::normal_distribution<double> nd(0.0, 3.0);
  std::vector<double> x(freqs.size());
  for (double& v : x) v = nd(rng);
  x[40] = std::numeric_limits<double>::infinity();
  for (double frac : {1.0 / 6.0, 1.0 / 3.0}) {
    const auto s = OctaveSmooth(x, freqs, frac);
    const double lo = std::pow(2.0, -frac / 2), hi = std::pow(2.0, frac / 2);
    for (std::size_t k = 0; k < freqs.size(); ++k) {
      double sum = 0.0;
      int count = 0;
      for (std::size_t j = 0; j < freqs.size(); ++j) {
        if (freqs[j] >= freqs[k] * lo && freqs[j] <= freqs[k] * hi &&
            std::isfinite(x[j])) {
          sum += x[j];
          ++count;
        }
      }
      EXPECT_NEAR(s[k], sum / count, 1e-12) << k;
    }
  }
  const std::vector<double> flat(freqs.size(), 2.5);
  for (double v : OctaveSmooth(flat, freqs)) EXPECT_DOUBLE_EQ(v, 2.5);
  EXPECT_THROW(OctaveSmooth(flat, freqs, 0.0), ConfigError);
}

class MapTest : public ::testing::Test {
 protected:
  MapTest() {
    const FrequencyGrid f{16000, 256, 2, 12};
    atf_ = SimulateAnechoic(MakeGrid(RenderingArea{}, 0.1),
                            SpeakerArray::DefaultLinear(), f);
  }
  AtfTensor atf_;
};

TEST_F(MapTest, SizesAndOneCellByHand) {
  const FilterSource pm = [&](const ZonePair& p) {
    return DesignClassic(ClassicMethod::kPm, atf_, p).filters;
  };
  const Zone fixed{{-0.5, 1.0}, 0.1};
  const SamplingGrid moving = MakeGrid(RenderingArea{}, 0.5);
  const auto maps = SpatialMaps(pm, "pm", atf_, fixed, moving, 1);
  ASSERT_EQ(maps.size(), 3u);
  EXPECT_EQ(maps[0].kind, MetricKind::kIzi);
  EXPECT_EQ(maps[2].kind, MetricKind::kNmse);
  for (const MetricMap& m : maps) {
    EXPECT_EQ(m.rows, 4u);
    EXPECT_EQ(m.cols, 5u);
    EXPECT_EQ(m.values_db.size(), 20u);
    EXPECT_EQ(m.method, "pm");
  }
  const std::size_t cell = moving.index(2, 4);  // (1.0, 1.5)
  const Zone z2{moving.point(cell), 0.1};
  const AtfBlock h1 = atf_.Rows(SelectControlPoints(atf_.grid, fixed));
  const AtfBlock h2 = atf_.Rows(SelectControlPoints(atf_.grid, z2));
  const FilterSet g1 = pm({fixed, z2}), g2 = pm({z2, fixed});
  const auto f = atf_.freqs.bin_freqs();
  EXPECT_NEAR(maps[0].values_db[cell], LogMean(Izi(h1, h2, g1).db, f), 1e-9);
  EXPECT_NEAR(maps[1].values_db[cell], LogMean(Ipi(h1, g1, g2).db, f), 1e-9);
  auto nmse = Nmse(g1, h1, TargetMagnitude(fixed.center.x, h1)).per_bin;
  for (double& v : nmse) v = 10 * std::log10(v);
  EXPECT_NEAR(maps[2].values_db[cell], LogMean(nmse, f), 1e-9);
  // Separated zones give positive isolation.
  EXPECT_GT(maps[0].values_db[cell], 5.0);
}

TEST_F(MapTest, FailingCellsStayInvalid) {
  const FilterSource flaky = [&](const ZonePair& p) -> FilterSet {
    if (p.bz.center.x > 0.9 || p.dz.center.x > 0.9) throw DomainError("no");
    return DesignClassic(ClassicMethod::kPm, atf_, p).filters;
  };
  const SamplingGrid moving = MakeGrid(RenderingArea{}, 0.5);
  const auto maps = SpatialMaps(flaky, "pm", atf_, {{0.0, 1.0}, 0.1}, moving, 2);
  for (std::size_t i = 0; i < moving.size(); ++i) {
    const bool edge = moving.point(i).x > 0.9;
    EXPECT_EQ(maps[0].valid[i], edge ? 0 : 1) << i;
  }
}

TEST_F(MapTest, BenchReportsMedians) {
  SannConfig c;
  c.hidden = {8};
  c.freqs = atf_.freqs;
  const SannModel model(c, 1);
  const ZonePair q[] = {{{{-0.5, 1.0}, 0.1}, {{0.5, 1.0}, 0.1}}};
  const BenchResult r = BenchTiming(model, atf_, q, 3, 1);
  EXPECT_GT(r.nn_ms, 0.0);
  EXPECT_GT(r.pm_ms, 0.0);
  EXPECT_DOUBLE_EQ(r.ratio, r.pm_ms / r.nn_ms);
  EXPECT_EQ(r.queries, 1u);
  EXPECT_EQ(r.repetitions, 3u);
  EXPECT_EQ(r.weight_bytes, 8 * model.ParameterCount());
  EXPECT_THROW(BenchTiming(model, atf_, {}, 3), ConfigError);
  EXPECT_THROW(BenchTiming(model, atf_, q, 0), ConfigError);
}

}  // namespace
}  // namespace psz
