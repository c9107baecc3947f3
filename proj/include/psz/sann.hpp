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

// Spatially adaptive neural network: zone-center coordinates in, per-speaker
// complex band coefficients out.
//
// The network is an MLP over a Fourier-feature encoding of the normalized
// centers. Output entry c*L*N + l*N + n holds the real (c = 0) or imaginary
// (c = 1) part of the gain of speaker l at band bin n.

#ifndef PSZ_SANN_HPP_
#define PSZ_SANN_HPP_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psz/acoustics.hpp"
#include "psz/autodiff.hpp"
#include "psz/classic.hpp"
#include "psz/geometry.hpp"

namespace psz {

struct SannConfig {
  int K = 3;  // highest encoding order
  std::vector<std::size_t> hidden{512, 512, 512};
  SpeakerArray speakers = SpeakerArray::DefaultLinear();
  FrequencyGrid freqs;
  RenderingArea area;
  double margin = kDefaultMargin;
  // Cutoffs of the bandpass used outside the band and by the compactness
  // term.
  double band_lo_hz = 100.0;
  double band_hi_hz = 1500.0;

  static constexpr std::size_t input_width() { return 4; }
  std::size_t encoded_width() const { return 8 * static_cast<std::size_t>(K + 1); }
  std::size_t output_width() const {
    return speakers.size() * 2 * freqs.size();
  }
  // Widths from the encoded input to the output, e.g. {32, 512, 512, 512, 3824}.
  std::vector<std::size_t> LayerWidths() const;
  std::size_t ParameterCount() const;
  void Validate() const;
};

// Row-major [in x out] weight and [out] bias; y = x W + b.
struct DenseLayer {
  ad::Tensor w;
  ad::Tensor b;
};

class SannModel {
 public:
  // Uniform init in +-1/sqrt(fan_in) for weights and biases.
  SannModel(SannConfig config, std::uint64_t seed);
  static SannModel Zeros(SannConfig config);

  const SannConfig& config() const { return config_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& layers() { return layers_; }
  std::vector<ad::Tensor> Parameters() const;
  std::size_t ParameterCount() const;

  // Deep copies of the weights, for best-checkpoint snapshots.
  std::vector<std::vector<double>> SnapshotWeights() const;
  void RestoreWeights(const std::vector<std::vector<double>>& weights);

 private:
  explicit SannModel(SannConfig config);
  SannConfig config_;
  std::vector<DenseLayer> layers_;
};

// For k = 0..K: sin(2^k pi x) over the inputs, then cos(2^k pi x).
std::vector<double> PositionalEncode(std::span<const double> x, int K);

// Plain forward pass without graph recording.
std::vector<double> ForwardRaw(const SannModel& model, const ZonePair& pair);
FilterSet Forward(const SannModel& model, const ZonePair& pair);
FilterSet OutputToFilters(const SannConfig& config,
                          std::span<const double> output);

// Differentiable batched forward pass: [B, output_width].
ad::Tensor ForwardBatch(const SannModel& model,
                        std::span<const ZonePair> pairs);

struct ComplexTensor {
  ad::Tensor re;
  ad::Tensor im;
};

// Row b of a batched output as [L, N] real and imaginary parts.
ComplexTensor SplitOutput(const ad::Tensor& output, std::size_t b,
                          std::size_t speakers, std::size_t bins);

// Hermitian n_fft spectrum from in-band gains g[N] and a bandpass response
// F[n_fft/2 + 1]. Bins below the band follow F scaled so that |spectrum|
// equals |g| at bin_lo, above the band likewise at bin_hi. DC and Nyquist
// keep only their real parts. Throws NumericalError when |F| vanishes at a
// band edge.
std::vector<Complex> AssembleFullSpectrum(std::span<const Complex> g,
                                          const FrequencyGrid& freqs,
                                          std::span<const Complex> response);

// Real inverse DFT, circularly delayed by `shift` samples.
std::vector<double> ToImpulseResponse(std::span<const Complex> spectrum,
                                      std::size_t shift = 0);

void SaveCheckpoint(const SannModel& model, const std::string& path);
// Throws FormatError on a bad magic, unknown version or truncated payload,
// and when `expected` is given and differs from the stored config.
SannModel LoadCheckpoint(const std::string& path,
                         const SannConfig* expected = nullptr);

}  // namespace psz

#endif  // PSZ_SANN_HPP_
