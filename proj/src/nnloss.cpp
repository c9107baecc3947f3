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

#include "psz/nnloss.hpp"

#include <cmath>
#include <numbers>

#include "psz/error.hpp"

namespace psz {
namespace {

using ad::Tensor;

bool InUnit(double v) { return v >= 0.0 && v <= 1.0; }

// Scaled term, or an undefined tensor when the coefficient is zero; `value`
// always receives the unscaled term.
template <typename F>
Tensor Weighted(double coef, double& value, F&& term) {
  if (coef == 0.0) {
    ad::NoGradGuard no_grad;
    value = term().item();
    return Tensor();
  }
  Tensor t = term();
  value = t.item();
  return ad::Scale(t, coef);
}

}  // namespace

void LossWeights::Validate() const {
  if (!InUnit(alpha) || !InUnit(beta) || !InUnit(gamma)) {
    throw ConfigError("loss weights alpha, beta, gamma must lie in [0, 1]");
  }
  if (!(g_max > 0.0)) throw ConfigError("g_max must be positive");
  if (!(measured_dz_factor >= 1.0)) {
    throw ConfigError("measured_dz_factor must be >= 1");
  }
}

std::vector<Complex> ButterworthBandpass(std::size_t n_fft, double f_lo,
                                         double f_hi, double sample_rate,
                                         int order) {
  if (!(f_lo > 0.0 && f_lo < f_hi && f_hi < 0.5 * sample_rate)) {
    throw ConfigError("bandpass cutoffs must satisfy 0 < lo < hi < fs/2");
  }
  if (order < 1) throw ConfigError("filter order must be >= 1");
  const double fs2 = 2.0 * sample_rate;
  const double w1 = fs2 * std::tan(std::numbers::pi * f_lo / sample_rate);
  const double w2 = fs2 * std::tan(std::numbers::pi * f_hi / sample_rate);
  const double bw = w2 - w1;
  const double w0sq = w1 * w2;

  // Band-transformed analog poles; each prototype pole p gives the two roots
  // of s^2 - p bw s + w0^2.
  std::vector<Complex> zpoles;
  Complex denom_gain = 1.0;
  for (int k = 0; k < order; ++k) {
    const Complex p = std::polar(
        1.0, std::numbers::pi * (2.0 * k + order + 1.0) / (2.0 * order));
    const Complex half = 0.5 * p * bw;
    const Complex root = std::sqrt(half * half - w0sq);
    for (const Complex q : {half + root, half - root}) {
      zpoles.push_back((fs2 + q) / (fs2 - q));
      denom_gain *= fs2 - q;
    }
  }
  const Complex gain = std::pow(bw * fs2, order) / denom_gain;

  const std::size_t half_n = n_fft / 2;
  std::vector<Complex> response(half_n + 1);
  for (std::size_t k = 0; k <= half_n; ++k) {
    const Complex z = std::polar(
        1.0, 2.0 * std::numbers::pi * static_cast<double>(k) / n_fft);
    Complex h = gain * std::pow((z - 1.0) * (z + 1.0), order);
    for (const Complex& zp : zpoles) h /= z - zp;
    response[k] = h;
  }
  return response;
}

std::vector<double> InvertedHammingWindow(std::size_t n) {
  std::vector<double> w(n);
  if (n == 1) return {0.0};
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t m = (i + n / 2) % n;
    w[i] = 1.0 - (0.54 - 0.46 * std::cos(2.0 * std::numbers::pi *
                                         static_cast<double>(m) /
                                         static_cast<double>(n - 1)));
  }
  return w;
}

CompactnessKernel MakeCompactnessKernel(std::size_t n_fft, double f_lo,
                                        double f_hi, double sample_rate) {
  return {ButterworthBandpass(n_fft, f_lo, f_hi, sample_rate),
          InvertedHammingWindow(n_fft)};
}

ComplexTensor AtfToTensor(const AtfBlock& block) {
  std::vector<double> re(block.values.size()), im(block.values.size());
  for (std::size_t i = 0; i < block.values.size(); ++i) {
    re[i] = block.values[i].real();
    im[i] = block.values[i].imag();
  }
  const ad::Shape shape{block.rows, block.speakers, block.bins};
  return {Tensor::Constant(shape, std::move(re)),
          Tensor::Constant(shape, std::move(im))};
}

ComplexTensor Pressure(const ComplexTensor& h, const ComplexTensor& g) {
  return {ad::SumAxis(ad::Sub(ad::Mul(h.re, g.re), ad::Mul(h.im, g.im)), 1),
          ad::SumAxis(ad::Add(ad::Mul(h.re, g.im), ad::Mul(h.im, g.re)), 1)};
}

Tensor Modulus(const ComplexTensor& z) {
  return ad::Sqrt(ad::AddConstant(
      ad::Add(ad::Square(z.re), ad::Square(z.im)), kModulusEps));
}

Tensor LossL1(const ComplexTensor& g, const ComplexTensor& hb,
              const Tensor& target) {
  return ad::Mean(ad::Square(ad::Sub(target, Modulus(Pressure(hb, g)))));
}

Tensor LossL2(const ComplexTensor& g, const ComplexTensor& hd) {
  const ComplexTensor p = Pressure(hd, g);
  return ad::Mean(ad::Add(ad::Square(p.re), ad::Square(p.im)));
}

Tensor LossL3(const ComplexTensor& g, double g_max) {
  return ad::Mean(ad::Square(
      ad::MaxWithConstant(ad::AddConstant(Modulus(g), -g_max), 0.0)));
}

ComplexTensor AssembleFullSpectrumAd(const ComplexTensor& g,
                                     const FrequencyGrid& freqs,
                                     const std::vector<Complex>& response) {
  const std::size_t n = freqs.n_fft;
  const std::size_t half = n / 2;
  const std::size_t bins = freqs.size();
  if (g.re.shape().size() != 2 || g.re.dim(1) != bins ||
      response.size() != half + 1) {
    throw StructuralError("spectrum assembly: size mismatch");
  }
  const double f_lo = std::abs(response[freqs.bin_lo]);
  const double f_hi = std::abs(response[freqs.bin_hi]);
  if (!(f_lo > 0.0) || !(f_hi > 0.0)) {
    throw NumericalError("bandpass response vanishes at a band edge; cannot "
                         "normalize the out-of-band coefficients");
  }

  // Out-of-band rows of F, with the imaginary parts at DC and Nyquist
  // dropped so those bins come out real.
  auto rows = [&](std::size_t from, std::size_t to, double norm) {
    std::vector<double> re, im;
    for (std::size_t k = from; k <= to; ++k) {
      re.push_back(response[k].real() / norm);
      im.push_back(k == 0 || k == half ? 0.0 : response[k].imag() / norm);
    }
    const std::size_t len = re.size();
    return std::pair{Tensor::Constant({1, len}, std::move(re)),
                     Tensor::Constant({1, len}, std::move(im))};
  };
  auto edge = [&](std::size_t bin) {
    const std::size_t idx[] = {bin};
    return Modulus({ad::Gather(g.re, 1, idx), ad::Gather(g.im, 1, idx)});
  };
  const auto [lo_re, lo_im] = rows(0, freqs.bin_lo - 1, f_lo);
  const auto [hi_re, hi_im] = rows(freqs.bin_hi + 1, half, f_hi);
  const Tensor s_lo = edge(0);
  const Tensor s_hi = edge(bins - 1);

  const Tensor pos_re = ad::Concat(
      {ad::MatMul(s_lo, lo_re), g.re, ad::MatMul(s_hi, hi_re)}, 1);
  const Tensor pos_im = ad::Concat(
      {ad::MatMul(s_lo, lo_im), g.im, ad::MatMul(s_hi, hi_im)}, 1);

  std::vector<std::size_t> mirror(n);
  std::vector<double> sign(n);
  for (std::size_t k = 0; k < n; ++k) {
    mirror[k] = k <= half ? k : n - k;
    sign[k] = k <= half ? 1.0 : -1.0;
  }
  return {ad::Gather(pos_re, 1, mirror),
          ad::Mul(ad::Gather(pos_im, 1, mirror),
                  Tensor::Constant({n}, std::move(sign)))};
}

Tensor LossL4(const ComplexTensor& g, const FrequencyGrid& freqs,
              const CompactnessKernel& kernel) {
  const std::size_t n = freqs.n_fft;
  const std::size_t half = n / 2;
  if (kernel.window.size() != n) {
    throw StructuralError("compactness kernel length differs from n_fft");
  }
  const ComplexTensor s = AssembleFullSpectrumAd(g, freqs, kernel.response);
  std::vector<double> f_re(n), f_im(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Complex f = k <= half ? kernel.response[k]
                                : std::conj(kernel.response[n - k]);
    f_re[k] = f.real();
    f_im[k] = f.imag();
  }
  const Tensor fr = Tensor::Constant({n}, std::move(f_re));
  const Tensor fi = Tensor::Constant({n}, std::move(f_im));
  const Tensor y = ad::LinearIdft(
      ad::Sub(ad::Mul(s.re, fr), ad::Mul(s.im, fi)),
      ad::Add(ad::Mul(s.re, fi), ad::Mul(s.im, fr)));
  return ad::Mean(ad::Square(ad::Mul(y, Tensor::Constant({n}, kernel.window))));
}

LossTerms TotalLoss(const ComplexTensor& g, const ComplexTensor& hb,
                    const ComplexTensor& hd, const Tensor& target,
                    const LossWeights& weights, const FrequencyGrid& freqs,
                    const CompactnessKernel& kernel, bool overlap,
                    bool dz_is_measured) {
  LossTerms terms;
  const double dz_coef =
      (1.0 - weights.alpha) * (overlap ? 0.0 : 1.0) *
      (dz_is_measured ? weights.measured_dz_factor : 1.0);
  const Tensor parts[] = {
      Weighted(weights.alpha, terms.l1,
               [&] { return LossL1(g, hb, target); }),
      Weighted(dz_coef, terms.l2, [&] { return LossL2(g, hd); }),
      Weighted(weights.beta, terms.l3,
               [&] { return LossL3(g, weights.g_max); }),
      Weighted(weights.gamma, terms.l4,
               [&] { return LossL4(g, freqs, kernel); }),
  };
  for (const Tensor& p : parts) {
    if (!p.defined()) continue;
    terms.total = terms.total.defined() ? ad::Add(terms.total, p) : p;
  }
  if (!terms.total.defined()) terms.total = Tensor::Scalar(0.0);
  return terms;
}

}  // namespace psz
