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

// Acoustic transfer functions between loudspeakers and the rendering grid.
//
// Two propagation models are provided: free-field point sources and a
// shoebox room simulated with the image-source method. The PSZ system lives
// in its own frame: loudspeakers near y = 0, the rendering area in front of
// them, everything at one listening height. A RoomConfig places that frame
// inside the room through `array_origin`.

#ifndef PSZ_ACOUSTICS_HPP_
#define PSZ_ACOUSTICS_HPP_

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "psz/geometry.hpp"

namespace psz {

using Complex = std::complex<double>;
using Rng = std::mt19937_64;

inline constexpr double kSpeedOfSound = 343.0;

struct SpeakerArray {
  std::vector<Point3> positions;

  std::size_t size() const { return positions.size(); }
  // Throws ConfigError for an empty array or duplicate positions.
  void Validate() const;

  // Eight drivers on y = 0 at x = -0.7, -0.5, ..., 0.7 m, 1.2 m high.
  static SpeakerArray DefaultLinear();
};

inline constexpr double kDefaultListeningHeight = 1.2;

struct FrequencyGrid {
  std::uint32_t sample_rate = 48000;
  std::uint32_t n_fft = 8192;
  std::uint32_t bin_lo = 18;
  std::uint32_t bin_hi = 256;

  std::size_t size() const { return bin_hi - bin_lo + 1; }
  std::uint32_t bin(std::size_t i) const {
    return bin_lo + static_cast<std::uint32_t>(i);
  }
  double freq(std::size_t i) const {
    return static_cast<double>(sample_rate) * bin(i) / n_fft;
  }
  std::vector<double> bin_freqs() const;
  // Throws ConfigError unless 1 <= bin_lo <= bin_hi < n_fft / 2.
  void Validate() const;

  // 48 kHz, 8192-point FFT, bins 18..256 (105.47 .. 1500 Hz, 239 bins).
  static FrequencyGrid FullBand() { return {}; }
};

struct RoomConfig {
  double lx = 5.0;
  double ly = 5.0;
  double lz = 3.0;
  double rt60 = 0.24;
  Point3 array_origin;  // system frame origin in room coordinates
  std::uint64_t seed = 0;

  double volume() const { return lx * ly * lz; }
  double surface() const { return 2.0 * (lx * ly + lx * lz + ly * lz); }
  Point3 ToRoom(const Point3& p) const {
    return {p.x + array_origin.x, p.y + array_origin.y, p.z + array_origin.z};
  }
  bool Contains(const Point3& room_point) const;
};

enum class Condition : std::uint8_t {
  kAnechoic = 0,
  kRoom = 1,
  kPseudoMeasured = 2,
};

const char* ConditionName(Condition c);

// Dense complex block indexed (row, speaker, bin), bin fastest.
struct AtfBlock {
  std::size_t rows = 0;
  std::size_t speakers = 0;
  std::size_t bins = 0;
  std::vector<Complex> values;

  AtfBlock() = default;
  AtfBlock(std::size_t m, std::size_t l, std::size_t n)
      : rows(m), speakers(l), bins(n), values(m * l * n) {}

  std::size_t offset(std::size_t m, std::size_t l, std::size_t n) const {
    return (m * speakers + l) * bins + n;
  }
  Complex& at(std::size_t m, std::size_t l, std::size_t n) {
    return values[offset(m, l, n)];
  }
  const Complex& at(std::size_t m, std::size_t l, std::size_t n) const {
    return values[offset(m, l, n)];
  }
  bool empty() const { return values.empty(); }
};

// ATFs over a whole sampling grid.
struct AtfTensor {
  SamplingGrid grid;
  double height = kDefaultListeningHeight;
  SpeakerArray speakers;
  FrequencyGrid freqs;
  Condition condition = Condition::kAnechoic;
  std::optional<RoomConfig> room;
  AtfBlock data;

  Point3 receiver(std::size_t id) const {
    const Point2& p = grid.point(id);
    return {p.x, p.y, height};
  }
  // Copies the rows listed in `ids`, preserving order.
  AtfBlock Rows(std::span<const std::size_t> ids) const;
};

// exp(-j k r) / (4 pi r) with k = 2 pi f / c. Throws DomainError when the
// points coincide.
Complex FreefieldAtf(const Point3& source, const Point3& receiver, double f,
                     double c = kSpeedOfSound);

AtfTensor SimulateAnechoic(const SamplingGrid& grid,
                           const SpeakerArray& speakers,
                           const FrequencyGrid& freqs,
                           double height = kDefaultListeningHeight,
                           double c = kSpeedOfSound);

struct Absorption {
  double alpha = 0.0;       // energy absorption per wall, in (0, 1]
  double reflection = 1.0;  // pressure reflection coefficient sqrt(1 - alpha)
  bool clamped = false;     // Sabine gave alpha > 1
};

// Sabine inversion alpha = 0.161 V / (S RT60), uniform on all walls.
Absorption RtToAbsorption(const RoomConfig& room);

struct IsmOptions {
  int max_order = -1;  // per-axis reflection count; < 0 selects the default
  std::size_t ir_len = 16384;
  double c = kSpeedOfSound;
  // Replaces the Sabine-derived reflection coefficient when set.
  std::optional<double> reflection;
};

// Smallest per-axis order whose shortest image path exceeds c * rt60,
// capped at 20.
int DefaultMaxOrder(const RoomConfig& room, double c = kSpeedOfSound);

inline constexpr int kFractionalDelayTaps = 81;

// Image-source impulse response in room coordinates. Each image is placed
// with a Hann-windowed sinc; taps that would land before t = 0 wrap to the
// end of the buffer so the response stays exact under a circular DFT.
// Throws DomainError when either point is outside the room.
std::vector<double> SimulateRoomIr(const RoomConfig& room,
                                   const Point3& source,
                                   const Point3& receiver,
                                   double sample_rate,
                                   const IsmOptions& options);

// Room ATFs over the grid: for every (point, speaker) the DFT of the
// image-source IR evaluated at the grid's bin frequencies.
AtfTensor SimulateRoom(const RoomConfig& room, const SamplingGrid& grid,
                       const SpeakerArray& speakers,
                       const FrequencyGrid& freqs, const IsmOptions& options,
                       double height = kDefaultListeningHeight,
                       unsigned threads = 0);

// DFT of a real sequence at arbitrary frequencies (Hz).
std::vector<Complex> DftAt(std::span<const double> x, double sample_rate,
                           std::span<const double> freqs_hz);

struct SystemExtent {
  double x_min, x_max, y_min, y_max, z_min, z_max;
};

// Bounding box of speakers and rendering area in the system frame.
SystemExtent ComputeSystemExtent(const SpeakerArray& speakers,
                                 const RenderingArea& area, double height);

inline constexpr double kWallMargin = 0.1;

// Lx, Ly ~ U(4, 7) m, Lz ~ U(2, 4) m; the system is translated uniformly
// among placements that keep it at least kWallMargin from every wall.
RoomConfig SampleRoomConfig(Rng& rng, double rt60, const SystemExtent& extent);

// Uniform reflection coefficient for which the Schroeder RT60 of the IR
// between `source` and `receiver` (room coordinates) is within `tol`
// (relative) of room.rt60. Starts from the Sabine value and rescales
// log(reflection) by the measured-to-target ratio. Shoebox image sources
// with Sabine absorption run long in flat rooms and short in tall ones, so
// room datasets calibrate per room. Returns 0 when Sabine already clamps.
double CalibrateReflection(const RoomConfig& room, const Point3& source,
                           const Point3& receiver, double sample_rate,
                           const IsmOptions& options, double tol = 0.01);

// CalibrateReflection between the speaker centroid and the centre of the
// rendering area.
double CalibrateReflection(const RoomConfig& room,
                           const SpeakerArray& speakers,
                           const RenderingArea& area, double height,
                           double sample_rate, const IsmOptions& options);

// Schroeder backward integration with a least-squares line over the
// -5..-25 dB span, extrapolated to 60 dB. Throws NumericalError when the
// decay never reaches -25 dB.
double MeasureRt60(std::span<const double> ir, double sample_rate);

}  // namespace psz

#endif  // PSZ_ACOUSTICS_HPP_
