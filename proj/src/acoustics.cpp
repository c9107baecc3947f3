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

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "psz/error.hpp"
#include "psz/fft.hpp"
#include "psz/parallel.hpp"

namespace psz {
namespace {

constexpr double kPi = std::numbers::pi;

// One axis of the image lattice: signed offset from the receiver and the
// number of wall reflections along that axis.
struct AxisImage {
  double offset;
  int order;
};

std::vector<AxisImage> AxisImages(double length, double src, double rcv,
                                  int max_order) {
  std::vector<AxisImage> images;
  const int n_max = max_order / 2 + 1;
  for (int n = -n_max; n <= n_max; ++n) {
    for (int q = 0; q <= 1; ++q) {
      const int order = std::abs(n - q) + std::abs(n);
      if (order > max_order) continue;
      images.push_back({(1 - 2 * q) * src + 2.0 * n * length - rcv, order});
    }
  }
  return images;
}

// Adds amplitude * windowed-sinc(n - delay) into ir, wrapping negative taps.
void PlaceFractionalImpulse(std::vector<double>& ir, double delay,
                            double amplitude) {
  constexpr int kHalf = (kFractionalDelayTaps - 1) / 2;
  constexpr double kWindowWidth = 2.0 * (kHalf + 1);
  const long len = static_cast<long>(ir.size());
  const double whole = std::floor(delay);
  const double frac = delay - whole;
  const long base = static_cast<long>(whole);
  const double sin_frac = std::sin(kPi * frac);
  // Window phase advances by a fixed step per tap; rotate instead of
  // calling cos for every tap.
  const double step = 2.0 * kPi / kWindowWidth;
  const Complex rot = std::polar(1.0, step);
  Complex phase = std::polar(1.0, step * (-kHalf - frac));
  for (int k = -kHalf; k <= kHalf; ++k, phase *= rot) {
    long n = base + k;
    if (n >= len) break;
    if (n < 0) n += len;
    if (n < 0) continue;
    const double t = k - frac;
    double sinc;
    if (t == 0.0) {
      sinc = 1.0;
    } else {
      // sin(pi (k - frac)) = -(-1)^k sin(pi frac)
      const double s = (k % 2 == 0) ? -sin_frac : sin_frac;
      sinc = s / (kPi * t);
    }
    const double window = 0.5 * (1.0 + phase.real());
    ir[static_cast<std::size_t>(n)] += amplitude * window * sinc;
  }
}

void CheckInside(const RoomConfig& room, const Point3& p, const char* what) {
  if (!room.Contains(p)) {
    std::ostringstream msg;
    msg << what << " (" << p.x << ", " << p.y << ", " << p.z
        << ") is not strictly inside the " << room.lx << " x " << room.ly
        << " x " << room.lz << " m room";
    throw DomainError(msg.str());
  }
}

}  // namespace

void SpeakerArray::Validate() const {
  if (positions.empty()) throw ConfigError("speaker array is empty");
  for (std::size_t i = 0; i < positions.size(); ++i) {
    for (std::size_t j = i + 1; j < positions.size(); ++j) {
      if (Distance(positions[i], positions[j]) == 0.0) {
        throw ConfigError("speaker positions must be distinct");
      }
    }
  }
}

SpeakerArray SpeakerArray::DefaultLinear() {
  SpeakerArray array;
  for (int i = 0; i < 8; ++i) {
    array.positions.push_back({-0.7 + 0.2 * i, 0.0, kDefaultListeningHeight});
  }
  return array;
}

std::vector<double> FrequencyGrid::bin_freqs() const {
  std::vector<double> f(size());
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = freq(i);
  return f;
}

void FrequencyGrid::Validate() const {
  if (sample_rate == 0 || n_fft < 4) {
    throw ConfigError("frequency grid needs a positive sample rate and "
                      "n_fft >= 4");
  }
  if (bin_lo < 1 || bin_lo > bin_hi || bin_hi >= n_fft / 2) {
    throw ConfigError("frequency band must satisfy 1 <= bin_lo <= bin_hi < "
                      "n_fft / 2");
  }
}

bool RoomConfig::Contains(const Point3& p) const {
  return p.x > 0.0 && p.x < lx && p.y > 0.0 && p.y < ly && p.z > 0.0 &&
         p.z < lz;
}

const char* ConditionName(Condition c) {
  switch (c) {
    case Condition::kAnechoic:
      return "anechoic";
    case Condition::kRoom:
      return "room";
    case Condition::kPseudoMeasured:
      return "pseudo-measured";
  }
  return "unknown";
}

AtfBlock AtfTensor::Rows(std::span<const std::size_t> ids) const {
  AtfBlock out(ids.size(), data.speakers, data.bins);
  const std::size_t stride = data.speakers * data.bins;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto src = data.values.begin() +
                     static_cast<std::ptrdiff_t>(ids[i] * stride);
    std::copy(src, src + static_cast<std::ptrdiff_t>(stride),
              out.values.begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return out;
}

Complex FreefieldAtf(const Point3& source, const Point3& receiver, double f,
                     double c) {
  const double r = Distance(source, receiver);
  if (r == 0.0) {
    throw DomainError("free-field ATF is singular at zero distance");
  }
  const double k = 2.0 * kPi * f / c;
  return std::polar(1.0 / (4.0 * kPi * r), -k * r);
}

AtfTensor SimulateAnechoic(const SamplingGrid& grid,
                           const SpeakerArray& speakers,
                           const FrequencyGrid& freqs, double height,
                           double c) {
  speakers.Validate();
  freqs.Validate();
  AtfTensor atf;
  atf.grid = grid;
  atf.height = height;
  atf.speakers = speakers;
  atf.freqs = freqs;
  atf.condition = Condition::kAnechoic;
  atf.data = AtfBlock(grid.size(), speakers.size(), freqs.size());
  const std::vector<double> f = freqs.bin_freqs();
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const Point3 rcv = atf.receiver(m);
    for (std::size_t l = 0; l < speakers.size(); ++l) {
      for (std::size_t n = 0; n < f.size(); ++n) {
        atf.data.at(m, l, n) = FreefieldAtf(speakers.positions[l], rcv, f[n], c);
      }
    }
  }
  return atf;
}

Absorption RtToAbsorption(const RoomConfig& room) {
  if (!(room.rt60 > 0.0)) throw ConfigError("rt60 must be positive");
  Absorption a;
  a.alpha = 0.161 * room.volume() / (room.surface() * room.rt60);
  if (a.alpha > 1.0) {
    a.alpha = 1.0;
    a.clamped = true;
  }
  a.reflection = std::sqrt(1.0 - a.alpha);
  return a;
}

int DefaultMaxOrder(const RoomConfig& room, double c) {
  constexpr int kCap = 20;
  const double shortest = std::min({room.lx, room.ly, room.lz});
  const double reach = c * room.rt60;
  const int order = static_cast<int>(std::floor(reach / shortest)) + 1;
  return std::clamp(order, 1, kCap);
}

std::vector<double> SimulateRoomIr(const RoomConfig& room,
                                   const Point3& source,
                                   const Point3& receiver,
                                   double sample_rate,
                                   const IsmOptions& options) {
  CheckInside(room, source, "source");
  CheckInside(room, receiver, "receiver");
  if (options.ir_len == 0) throw ConfigError("ir_len must be positive");
  const double beta =
      options.reflection.value_or(RtToAbsorption(room).reflection);
  const int max_order =
      options.max_order < 0 ? DefaultMaxOrder(room, options.c) : options.max_order;

  std::vector<double> ir(options.ir_len, 0.0);
  const auto xs = AxisImages(room.lx, source.x, receiver.x, max_order);
  const auto ys = AxisImages(room.ly, source.y, receiver.y, max_order);
  const auto zs = AxisImages(room.lz, source.z, receiver.z, max_order);

  std::vector<double> beta_pow(3 * static_cast<std::size_t>(max_order) + 1);
  beta_pow[0] = 1.0;
  for (std::size_t i = 1; i < beta_pow.size(); ++i) {
    beta_pow[i] = beta_pow[i - 1] * beta;
  }

  const double samples_per_meter = sample_rate / options.c;
  const double max_dist =
      (static_cast<double>(options.ir_len) + kFractionalDelayTaps / 2) /
      samples_per_meter;
  const double max_dist2 = max_dist * max_dist;
  for (const AxisImage& ix : xs) {
    const double dx2 = ix.offset * ix.offset;
    if (dx2 > max_dist2) continue;
    for (const AxisImage& iy : ys) {
      const double dxy2 = dx2 + iy.offset * iy.offset;
      if (dxy2 > max_dist2) continue;
      for (const AxisImage& iz : zs) {
        const double d2 = dxy2 + iz.offset * iz.offset;
        if (d2 > max_dist2) continue;
        const double gain = beta_pow[ix.order + iy.order + iz.order];
        if (gain == 0.0) continue;
        const double dist = std::sqrt(d2);
        PlaceFractionalImpulse(ir, dist * samples_per_meter,
                               gain / (4.0 * kPi * dist));
      }
    }
  }
  return ir;
}

std::vector<Complex> DftAt(std::span<const double> x, double sample_rate,
                           std::span<const double> freqs_hz) {
  std::vector<Complex> out(freqs_hz.size());
  for (std::size_t i = 0; i < freqs_hz.size(); ++i) {
    const double w = -2.0 * kPi * freqs_hz[i] / sample_rate;
    // Phasor recurrence, re-anchored every 1024 samples to bound drift.
    Complex acc = 0.0;
    Complex phasor = 1.0;
    const Complex rot = std::polar(1.0, w);
    for (std::size_t n = 0; n < x.size(); ++n) {
      if ((n & 1023) == 0) phasor = std::polar(1.0, w * static_cast<double>(n));
      acc += x[n] * phasor;
      phasor *= rot;
    }
    out[i] = acc;
  }
  return out;
}

AtfTensor SimulateRoom(const RoomConfig& room, const SamplingGrid& grid,
                       const SpeakerArray& speakers,
                       const FrequencyGrid& freqs, const IsmOptions& options,
                       double height, unsigned threads) {
  speakers.Validate();
  freqs.Validate();
  AtfTensor atf;
  atf.grid = grid;
  atf.height = height;
  atf.speakers = speakers;
  atf.freqs = freqs;
  atf.condition = Condition::kRoom;
  atf.room = room;
  atf.data = AtfBlock(grid.size(), speakers.size(), freqs.size());

  // Validate geometry up front so no work is wasted on a bad placement.
  for (const Point3& s : speakers.positions) {
    CheckInside(room, room.ToRoom(s), "speaker");
  }
  for (std::size_t m = 0; m < grid.size(); ++m) {
    CheckInside(room, room.ToRoom(atf.receiver(m)), "receiver");
  }

  // Bin k of the n_fft grid is bin k * ir_len / n_fft of the IR's own DFT;
  // use a full FFT when every requested bin lands on that lattice.
  const std::size_t ir_len = options.ir_len;
  bool on_lattice = true;
  std::vector<std::size_t> fft_index(freqs.size());
  for (std::size_t n = 0; n < freqs.size(); ++n) {
    const std::size_t num = static_cast<std::size_t>(freqs.bin(n)) * ir_len;
    if (num % freqs.n_fft != 0) on_lattice = false;
    fft_index[n] = num / freqs.n_fft;
  }
  const std::vector<double> bin_hz = freqs.bin_freqs();
  const double fs = freqs.sample_rate;

  const std::size_t pairs = grid.size() * speakers.size();
  ParallelFor(pairs, threads, [&](std::size_t idx) {
    const std::size_t m = idx / speakers.size();
    const std::size_t l = idx % speakers.size();
    const std::vector<double> ir =
        SimulateRoomIr(room, room.ToRoom(speakers.positions[l]),
                       room.ToRoom(atf.receiver(m)), fs, options);
    if (on_lattice) {
      const std::vector<Complex> spec = fft::Forward(ir);
      for (std::size_t n = 0; n < fft_index.size(); ++n) {
        atf.data.at(m, l, n) = spec[fft_index[n]];
      }
    } else {
      const std::vector<Complex> spec = DftAt(ir, fs, bin_hz);
      for (std::size_t n = 0; n < spec.size(); ++n) atf.data.at(m, l, n) = spec[n];
    }
  });
  return atf;
}

SystemExtent ComputeSystemExtent(const SpeakerArray& speakers,
                                 const RenderingArea& area, double height) {
  SystemExtent e{area.x_min, area.x_max, area.y_min,
                 area.y_max, height,     height};
  for (const Point3& p : speakers.positions) {
    e.x_min = std::min(e.x_min, p.x);
    e.x_max = std::max(e.x_max, p.x);
    e.y_min = std::min(e.y_min, p.y);
    e.y_max = std::max(e.y_max, p.y);
    e.z_min = std::min(e.z_min, p.z);
    e.z_max = std::max(e.z_max, p.z);
  }
  return e;
}

RoomConfig SampleRoomConfig(Rng& rng, double rt60, const SystemExtent& extent) {
  std::uniform_real_distribution<double> horizontal(4.0, 7.0);
  std::uniform_real_distribution<double> vertical(2.0, 4.0);
  RoomConfig room;
  room.lx = horizontal(rng);
  room.ly = horizontal(rng);
  room.lz = vertical(rng);
  room.rt60 = rt60;

  const double ox_lo = kWallMargin - extent.x_min;
  const double ox_hi = room.lx - kWallMargin - extent.x_max;
  const double oy_lo = kWallMargin - extent.y_min;
  const double oy_hi = room.ly - kWallMargin - extent.y_max;
  if (ox_lo > ox_hi || oy_lo > oy_hi || extent.z_min < kWallMargin ||
      extent.z_max > room.lz - kWallMargin) {
    throw ConfigError("system does not fit inside the sampled room");
  }
  room.array_origin.x = std::uniform_real_distribution<double>(ox_lo, ox_hi)(rng);
  room.array_origin.y = std::uniform_real_distribution<double>(oy_lo, oy_hi)(rng);
  room.array_origin.z = 0.0;
  room.seed = rng();
  return room;
}

double CalibrateReflection(const RoomConfig& room, const Point3& source,
                           const Point3& receiver, double sample_rate,
                           const IsmOptions& options, double tol) {
  constexpr int kMaxIters = 12;
  const Absorption sabine = RtToAbsorption(room);
  if (sabine.reflection <= 0.0) return 0.0;
  IsmOptions o = options;
  double log_beta = std::log(sabine.reflection);
  for (int it = 0; it < kMaxIters; ++it) {
    o.reflection = std::exp(log_beta);
    const double rt = MeasureRt60(
        SimulateRoomIr(room, source, receiver, sample_rate, o), sample_rate);
    const double ratio = rt / room.rt60;
    if (std::abs(ratio - 1.0) <= tol) return *o.reflection;
    // Decay rate scales with -log(beta), so RT60 goes as 1 / -log(beta).
    log_beta *= ratio;
    if (!(log_beta < 0.0)) {
      throw NumericalError("reflection calibration left the valid range");
    }
  }
  throw NumericalError("reflection calibration did not converge to rt60");
}

double CalibrateReflection(const RoomConfig& room,
                           const SpeakerArray& speakers,
                           const RenderingArea& area, double height,
                           double sample_rate, const IsmOptions& options) {
  speakers.Validate();
  Point3 centroid;
  for (const Point3& p : speakers.positions) {
    centroid.x += p.x;
    centroid.y += p.y;
    centroid.z += p.z;
  }
  const double n = static_cast<double>(speakers.size());
  centroid = {centroid.x / n, centroid.y / n, centroid.z / n};
  const Point3 center{0.5 * (area.x_min + area.x_max),
                      0.5 * (area.y_min + area.y_max), height};
  return CalibrateReflection(room, room.ToRoom(centroid), room.ToRoom(center),
                             sample_rate, options);
}

double MeasureRt60(std::span<const double> ir, double sample_rate) {
  std::vector<double> edc(ir.size());
  double acc = 0.0;
  for (std::size_t i = ir.size(); i-- > 0;) {
    acc += ir[i] * ir[i];
    edc[i] = acc;
  }
  if (ir.empty() || !(acc > 0.0)) {
    throw NumericalError("impulse response is silent");
  }
  const double total = acc;
  // Least-squares fit of level (dB) against time over the -5..-25 dB span.
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  std::size_t count = 0;
  bool reached_end = false;
  for (std::size_t i = 0; i < edc.size(); ++i) {
    const double level = edc[i] > 0.0 ? 10.0 * std::log10(edc[i] / total)
                                      : -std::numeric_limits<double>::infinity();
    if (level < -25.0) {
      reached_end = true;
      break;
    }
    if (level <= -5.0) {
      const double t = static_cast<double>(i) / sample_rate;
      sx += t;
      sy += level;
      sxx += t * t;
      sxy += t * level;
      ++count;
    }
  }
  if (!reached_end || count < 2) {
    throw NumericalError("insufficient decay: the energy decay curve does not "
                         "span -5 to -25 dB");
  }
  const double nd = static_cast<double>(count);
  const double denom = nd * sxx - sx * sx;
  const double slope = (nd * sxy - sx * sy) / denom;
  if (!(slope < 0.0)) throw NumericalError("energy decay curve is not decaying");
  return 60.0 / -slope;
}

}  // namespace psz
