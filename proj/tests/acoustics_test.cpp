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

#include "psz/acoustics.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "psz/error.hpp"
#include "test_util.hpp"

namespace psz {
namespace {

constexpr double kPi = std::numbers::pi;

TEST(FrequencyGridTest, DefaultBand) {
  const FrequencyGrid f;
  EXPECT_EQ(f.size(), 239u);
  EXPECT_NEAR(f.freq(0), 105.46875, 1e-12);
  EXPECT_DOUBLE_EQ(f.freq(f.size() - 1), 1500.0);
  const auto all = f.bin_freqs();
  ASSERT_EQ(all.size(), 239u);
  for (std::size_t i = 1; i < all.size(); ++i) {
    EXPECT_NEAR(all[i] - all[i - 1], 48000.0 / 8192.0, 1e-9);
  }
}

TEST(FrequencyGridTest, Validation) {
  EXPECT_NO_THROW(FrequencyGrid{}.Validate());
  EXPECT_THROW((FrequencyGrid{48000, 8192, 0, 10}).Validate(), ConfigError);
  EXPECT_THROW((FrequencyGrid{48000, 8192, 20, 10}).Validate(), ConfigError);
  EXPECT_THROW((FrequencyGrid{48000, 8192, 18, 4096}).Validate(), ConfigError);
  EXPECT_THROW((FrequencyGrid{0, 8192, 18, 256}).Validate(), ConfigError);
}

TEST(SpeakerArrayTest, DefaultLinearLayout) {
  const SpeakerArray s = SpeakerArray::DefaultLinear();
  ASSERT_EQ(s.size(), 8u);
  EXPECT_NEAR(s.positions.front().x, -0.7, 1e-12);
  EXPECT_NEAR(s.positions.back().x, 0.7, 1e-12);
  for (const Point3& p : s.positions) {
    EXPECT_EQ(p.y, 0.0);
    EXPECT_EQ(p.z, kDefaultListeningHeight);
  }
  SpeakerArray dup = s;
  dup.positions[1] = dup.positions[0];
  EXPECT_THROW(dup.Validate(), ConfigError);
  EXPECT_THROW(SpeakerArray{}.Validate(), ConfigError);
}

TEST(FreefieldTest, MatchesGreensFunction) {
  const Point3 s{0.0, 0.0, 1.2};
  const Point3 r{0.3, 1.1, 1.2};
  const double d = std::sqrt(0.3 * 0.3 + 1.1 * 1.1);
  for (double f : {100.0, 733.0, 1500.0}) {
    const Complex h = FreefieldAtf(s, r, f);
    const double k = 2.0 * kPi * f / 343.0;
    const Complex expect =
        Complex(std::cos(k * d), -std::sin(k * d)) / (4.0 * kPi * d);
    EXPECT_NEAR(std::abs(h - expect), 0.0, 1e-15);
  }
  EXPECT_THROW(FreefieldAtf(s, s, 100.0), DomainError);
}

TEST(AnechoicTest, TensorLayoutAndValues) {
  const SamplingGrid g = MakeGrid(RenderingArea{}, 0.25);
  const FrequencyGrid f{48000, 8192, 18, 30};
  const SpeakerArray s = SpeakerArray::DefaultLinear();
  const AtfTensor atf = SimulateAnechoic(g, s, f);
  ASSERT_EQ(atf.data.rows, g.size());
  ASSERT_EQ(atf.data.speakers, 8u);
  ASSERT_EQ(atf.data.bins, f.size());
  for (std::size_t m : {std::size_t{0}, std::size_t{17}, g.size() - 1}) {
    const Point3 rcv{g.point(m).x, g.point(m).y, kDefaultListeningHeight};
    for (std::size_t l = 0; l < 8; ++l) {
      for (std::size_t n = 0; n < f.size(); n += 5) {
        EXPECT_EQ(atf.data.at(m, l, n),
                  FreefieldAtf(s.positions[l], rcv, f.freq(n)));
      }
    }
  }
  const std::size_t ids[] = {5, 2};
  const AtfBlock rows = atf.Rows(ids);
  EXPECT_EQ(rows.rows, 2u);
  EXPECT_EQ(rows.at(0, 3, 4), atf.data.at(5, 3, 4));
  EXPECT_EQ(rows.at(1, 7, 12), atf.data.at(2, 7, 12));
}

TEST(DftAtTest, MatchesDirectSum) {
  Rng rng(1);
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> x(3000);
  for (double& v : x) v = n(rng);
  const std::vector<double> f = {0.0, 123.4, 1500.0, 7000.5};
  const auto got = DftAt(x, 16000.0, f);
  for (std::size_t i = 0; i < f.size(); ++i) {
    Complex acc = 0.0;
    for (std::size_t t = 0; t < x.size(); ++t) {
      acc += x[t] * std::polar(1.0, -2.0 * kPi * f[i] * t / 16000.0);
    }
    EXPECT_NEAR(std::abs(got[i] - acc), 0.0, 1e-9 * std::abs(acc) + 1e-9);
  }
}

TEST(AbsorptionTest, HundredCubicMetres) {
  // V = 100 m^3 and S = 130 m^2 from a 5 x 5 x 4 m room.
  const RoomConfig room{5.0, 5.0, 4.0, 0.24, {}, 0};
  ASSERT_DOUBLE_EQ(room.volume(), 100.0);
  ASSERT_DOUBLE_EQ(room.surface(), 130.0);
  EXPECT_NEAR(RtToAbsorption(room).alpha, 0.161 * 100.0 / (130.0 * 0.24),
              1e-15);
  EXPECT_NEAR(RtToAbsorption(room).alpha, 0.516, 5e-4);
}

TEST(AbsorptionTest, SabineInversion) {
  RoomConfig room{5.0, 4.0, 3.0, 0.24, {}, 0};
  const Absorption a = RtToAbsorption(room);
  const double expect = 0.161 * 60.0 / (94.0 * 0.24);
  EXPECT_NEAR(a.alpha, expect, 1e-15);
  EXPECT_NEAR(a.reflection, std::sqrt(1.0 - expect), 1e-15);
  EXPECT_FALSE(a.clamped);
  room.rt60 = 0.01;
  const Absorption c = RtToAbsorption(room);
  EXPECT_TRUE(c.clamped);
  EXPECT_EQ(c.alpha, 1.0);
  EXPECT_EQ(c.reflection, 0.0);
  room.rt60 = 0.0;
  EXPECT_THROW(RtToAbsorption(room), ConfigError);
}

TEST(IsmTest, OrderZeroMatchesFreeField) {
  RoomConfig room{6.0, 5.0, 3.0, 0.24, {3.0, 1.0, 0.0}, 0};
  const SamplingGrid g = MakeGrid(RenderingArea{}, 0.5);
  const SpeakerArray s = SpeakerArray::DefaultLinear();
  const FrequencyGrid f;
  IsmOptions opts;
  opts.max_order = 0;
  opts.ir_len = 8192;
  const AtfTensor room_atf = SimulateRoom(room, g, s, f, opts);
  const AtfTensor free_atf = SimulateAnechoic(g, s, f);
  double worst = 0.0;
  for (std::size_t i = 0; i < room_atf.data.values.size(); ++i) {
    const Complex a = room_atf.data.values[i];
    const Complex b = free_atf.data.values[i];
    worst = std::max(worst, std::abs(a - b) / std::abs(b));
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(IsmTest, OffLatticeFrequenciesUseDirectDft) {
  // n_fft does not divide ir_len * bin, forcing the arbitrary-frequency path.
  RoomConfig room{6.0, 5.0, 3.0, 0.3, {3.0, 1.0, 0.0}, 0};
  const SamplingGrid g = MakeGrid(RenderingArea{}, 0.5);
  const SpeakerArray s = SpeakerArray::DefaultLinear();
  const FrequencyGrid f{48000, 8192, 18, 40};
  IsmOptions opts;
  opts.max_order = 2;
  opts.ir_len = 6000;
  const AtfTensor atf = SimulateRoom(room, g, s, f, opts);
  const Point3 rcv = room.ToRoom({g.point(3).x, g.point(3).y, 1.2});
  const auto ir = SimulateRoomIr(room, room.ToRoom(s.positions[2]), rcv,
                                 48000.0, opts);
  const std::vector<double> hz = f.bin_freqs();
  const auto spec = DftAt(ir, 48000.0, hz);
  for (std::size_t n = 0; n < f.size(); ++n) {
    EXPECT_NEAR(std::abs(atf.data.at(3, 2, n) - spec[n]), 0.0, 1e-12);
  }
}

TEST(IsmTest, FirstOrderImagesPerAxis) {
  // The order limit applies per axis, so order 1 with lossless walls keeps
  // three images per axis (the source and its two mirrors): 27 in total.
  RoomConfig room{6.0, 5.0, 3.0, 0.3, {}, 0};
  IsmOptions opts;
  opts.max_order = 1;
  opts.reflection = 1.0;
  opts.ir_len = 8192;
  const Point3 src{2.0, 1.5, 1.2}, rcv{3.5, 3.0, 1.4};
  const auto ir = SimulateRoomIr(room, src, rcv, 48000.0, opts);
  const std::vector<double> hz = {300.0, 1200.0};
  const auto spec = DftAt(ir, 48000.0, hz);
  const double xs[] = {src.x, -src.x, 2 * 6.0 - src.x};
  const double ys[] = {src.y, -src.y, 2 * 5.0 - src.y};
  const double zs[] = {src.z, -src.z, 2 * 3.0 - src.z};
  for (std::size_t k = 0; k < hz.size(); ++k) {
    Complex expect = 0.0;
    for (double x : xs) {
      for (double y : ys) {
        for (double z : zs) expect += FreefieldAtf({x, y, z}, rcv, hz[k]);
      }
    }
    EXPECT_LT(std::abs(spec[k] - expect) / std::abs(expect), 1e-3);
  }
}

TEST(IsmTest, ZeroReflectionLeavesDirectPath) {
  RoomConfig room{6.0, 5.0, 3.0, 0.3, {}, 0};
  IsmOptions opts;
  opts.max_order = 3;
  opts.reflection = 0.0;
  opts.ir_len = 8192;
  const Point3 src{2.0, 1.5, 1.2}, rcv{3.5, 3.0, 1.4};
  IsmOptions direct = opts;
  direct.max_order = 0;
  EXPECT_EQ(SimulateRoomIr(room, src, rcv, 48000.0, opts),
            SimulateRoomIr(room, src, rcv, 48000.0, direct));
}

TEST(IsmTest, OutsideRoomIsDomainError) {
  RoomConfig room{4.0, 4.0, 3.0, 0.3, {}, 0};
  IsmOptions opts;
  opts.max_order = 1;
  EXPECT_THROW(SimulateRoomIr(room, {-0.1, 1.0, 1.0}, {1.0, 1.0, 1.0},
                              48000.0, opts),
               DomainError);
  EXPECT_THROW(SimulateRoomIr(room, {1.0, 1.0, 1.0}, {1.0, 1.0, 3.0},
                              48000.0, opts),
               DomainError);
}

TEST(IsmTest, DefaultMaxOrder) {
  const RoomConfig room{5.0, 6.0, 2.5, 0.24, {}, 0};
  // 343 * 0.24 / 2.5 = 32.9 -> 33, capped at 20.
  EXPECT_EQ(DefaultMaxOrder(room), 20);
  const RoomConfig short_rt{5.0, 6.0, 4.0, 0.03, {}, 0};
  EXPECT_EQ(DefaultMaxOrder(short_rt), 3);  // floor(2.57) + 1
}

TEST(RoomSamplingTest, DimensionsAndClearance) {
  Rng rng(5);
  const SpeakerArray s = SpeakerArray::DefaultLinear();
  const RenderingArea area;
  const SystemExtent e = ComputeSystemExtent(s, area, 1.2);
  EXPECT_EQ(e.y_min, 0.0);
  EXPECT_EQ(e.y_max, 2.0);
  for (int i = 0; i < 500; ++i) {
    const RoomConfig r = SampleRoomConfig(rng, 0.24, e);
    EXPECT_GE(r.lx, 4.0);
    EXPECT_LT(r.lx, 7.0);
    EXPECT_GE(r.ly, 4.0);
    EXPECT_LT(r.ly, 7.0);
    EXPECT_GE(r.lz, 2.0);
    EXPECT_LT(r.lz, 4.0);
    EXPECT_GE(r.array_origin.x + e.x_min, kWallMargin - 1e-12);
    EXPECT_LE(r.array_origin.x + e.x_max, r.lx - kWallMargin + 1e-12);
    EXPECT_GE(r.array_origin.y + e.y_min, kWallMargin - 1e-12);
    EXPECT_LE(r.array_origin.y + e.y_max, r.ly - kWallMargin + 1e-12);
  }
}

TEST(Rt60Test, ExactExponentialDecay) {
  // Noise-free exponential with a 0.5 s decay: the fit must be exact.
  const double fs = 8000.0, rt = 0.5;
  std::vector<double> ir(8000);
  for (std::size_t i = 0; i < ir.size(); ++i) {
    ir[i] = std::pow(10.0, -3.0 * static_cast<double>(i) / (fs * rt));
  }
  // The EDC of a truncated exponential bends near the end; keep it long.
  EXPECT_NEAR(MeasureRt60(ir, fs), rt, 0.01);
  EXPECT_THROW(MeasureRt60(std::vector<double>(10, 0.0), fs), NumericalError);
  EXPECT_THROW(MeasureRt60(std::vector<double>(100, 1.0), fs), NumericalError);
}

TEST(Rt60Test, SabineRoomOfFiveByFiveByThree) {
  // Plain Sabine absorption, no calibration.
  const RoomConfig room{5.0, 5.0, 3.0, 0.24, {2.5, 1.5, 0.0}, 0};
  IsmOptions opts;
  opts.ir_len = 16384;
  const auto ir = SimulateRoomIr(room, {1.8, 1.5, 1.2}, {2.7, 2.8, 1.2},
                                 48000.0, opts);
  EXPECT_NEAR(MeasureRt60(ir, 48000.0), 0.24, 0.2 * 0.24);
}

TEST(Rt60Test, CalibratedRandomRoomsMatchConfiguredDecay) {
  Rng rng(2024);
  const SpeakerArray s = SpeakerArray::DefaultLinear();
  const RenderingArea area;
  const SystemExtent e = ComputeSystemExtent(s, area, 1.2);
  // Receivers away from the calibration pair (area centre).
  const Point3 receivers[] = {{-0.6, 0.8, 1.2}, {0.7, 1.9, 1.2}};
  for (int i = 0; i < 3; ++i) {
    const RoomConfig room = SampleRoomConfig(rng, 0.24, e);
    IsmOptions opts;
    opts.ir_len = 16384;
    opts.reflection = CalibrateReflection(room, s, area, 1.2, 48000.0, opts);
    for (const Point3& r : receivers) {
      const auto ir = SimulateRoomIr(room, room.ToRoom(s.positions[7 - i]),
                                     room.ToRoom(r), 48000.0, opts);
      EXPECT_NEAR(MeasureRt60(ir, 48000.0), 0.24, 0.2 * 0.24) << "room " << i;
    }
  }
}

TEST(Rt60Test, CalibrationClampedRoomReturnsZero) {
  const RoomConfig room{5.0, 5.0, 3.0, 0.01, {2.5, 1.5, 0.0}, 0};
  IsmOptions opts;
  opts.ir_len = 4096;
  EXPECT_EQ(CalibrateReflection(room, {1.0, 1.0, 1.0}, {2.0, 2.0, 1.0},
                                48000.0, opts),
            0.0);
}

}  // namespace
}  // namespace psz
