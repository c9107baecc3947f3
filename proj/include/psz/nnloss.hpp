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

// Training loss of the neural design on autodiff tensors: bright-zone
// amplitude error (L1), dark-zone energy (L2), gain-limit penalty (L3) and
// time-domain compactness (L4).

#ifndef PSZ_NNLOSS_HPP_
#define PSZ_NNLOSS_HPP_

#include <cstddef>
#include <vector>

#include "psz/acoustics.hpp"
#include "psz/autodiff.hpp"
#include "psz/sann.hpp"

namespace psz {

struct LossWeights {
  double alpha = 0.5;
  double beta = 0.5;
  double gamma = 0.5;
  double g_max = 0.125;
  double measured_dz_factor = 2.0;

  void Validate() const;
};

// Complex modulus is sqrt(re^2 + im^2 + eps) so its derivative stays finite
// at zero.
inline constexpr double kModulusEps = 1e-24;

// Digital Butterworth bandpass (analog prototype of the given order, band
// transformation, bilinear transform with prewarped cutoffs) evaluated at
// bins 0..n_fft/2.
std::vector<Complex> ButterworthBandpass(std::size_t n_fft, double f_lo,
                                         double f_hi, double sample_rate,
                                         int order = 4);

// 1 - hamming(n) with denominator N - 1, circularly shifted by N/2 so the
// near-zero weights sit at n = 0.
std::vector<double> InvertedHammingWindow(std::size_t n);

struct CompactnessKernel {
  std::vector<Complex> response;  // [n_fft/2 + 1]
  std::vector<double> window;     // [n_fft]
};

// Throws ConfigError unless 0 < f_lo < f_hi < sample_rate / 2.
CompactnessKernel MakeCompactnessKernel(std::size_t n_fft, double f_lo,
                                        double f_hi, double sample_rate);

// [M, L, N] constant tensors from an ATF block.
ComplexTensor AtfToTensor(const AtfBlock& block);

// p[m, n] = sum_l H[m, l, n] g[l, n].
ComplexTensor Pressure(const ComplexTensor& h, const ComplexTensor& g);
ad::Tensor Modulus(const ComplexTensor& z);

// mean over (m, n) of (|p_T| - |H_B g|)^2; target is [M_B, N].
ad::Tensor LossL1(const ComplexTensor& g, const ComplexTensor& hb,
                  const ad::Tensor& target);
// mean over (m, n) of |H_D g|^2.
ad::Tensor LossL2(const ComplexTensor& g, const ComplexTensor& hd);
// mean over (l, n) of max(0, |g| - g_max)^2.
ad::Tensor LossL3(const ComplexTensor& g, double g_max);

// Differentiable counterpart of AssembleFullSpectrum: [L, n_fft] parts.
ComplexTensor AssembleFullSpectrumAd(const ComplexTensor& g,
                                     const FrequencyGrid& freqs,
                                     const std::vector<Complex>& response);
// mean over (l, t) of (w[t] * idft(F . spectrum_l)[t])^2.
ad::Tensor LossL4(const ComplexTensor& g, const FrequencyGrid& freqs,
                  const CompactnessKernel& kernel);

struct LossTerms {
  ad::Tensor total;
  double l1 = 0.0;
  double l2 = 0.0;
  double l3 = 0.0;
  double l4 = 0.0;
};

// alpha L1 + (1 - alpha) c L2 + beta L3 + gamma L4, with c = 0 for
// overlapping zones and measured_dz_factor for a measured dark zone. Terms
// with a zero coefficient are evaluated without graph recording, so they
// contribute no gradient at all.
LossTerms TotalLoss(const ComplexTensor& g, const ComplexTensor& hb,
                    const ComplexTensor& hd, const ad::Tensor& target,
                    const LossWeights& weights, const FrequencyGrid& freqs,
                    const CompactnessKernel& kernel, bool overlap,
                    bool dz_is_measured);

}  // namespace psz

#endif  // PSZ_NNLOSS_HPP_
