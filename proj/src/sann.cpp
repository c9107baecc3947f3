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

#include "psz/sann.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "binio.hpp"
#include "psz/error.hpp"
#include "psz/fft.hpp"
#include "psz/json_io.hpp"

namespace psz {
namespace {

constexpr char kCheckpointMagic[] = "PSZNN1";
constexpr int kCheckpointVersion = 1;

std::vector<double> EncodePair(const SannConfig& config, const ZonePair& pair) {
  const auto x = NormalizeCoords(pair, config.area, config.margin);
  return PositionalEncode(x, config.K);
}

}  // namespace

std::vector<std::size_t> SannConfig::LayerWidths() const {
  std::vector<std::size_t> widths{encoded_width()};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(output_width());
  return widths;
}

std::size_t SannConfig::ParameterCount() const {
  const auto w = LayerWidths();
  std::size_t n = 0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) n += w[i] * w[i + 1] + w[i + 1];
  return n;
}

void SannConfig::Validate() const {
  if (K < 0 || K > 30) throw ConfigError("encoding order K must be in [0, 30]");
  if (hidden.empty()) throw ConfigError("at least one hidden layer is needed");
  for (std::size_t h : hidden) {
    if (h == 0) throw ConfigError("hidden layer widths must be positive");
  }
  speakers.Validate();
  freqs.Validate();
  if (!fft::IsPowerOfTwo(freqs.n_fft)) {
    throw ConfigError("n_fft must be a power of two");
  }
  area.Validate();
  if (!(margin > 0.0 && margin < 1.0)) {
    throw ConfigError("margin must lie in (0, 1)");
  }
  if (!(band_lo_hz > 0.0 && band_lo_hz < band_hi_hz &&
        band_hi_hz < 0.5 * freqs.sample_rate)) {
    throw ConfigError("bandpass cutoffs must satisfy 0 < lo < hi < fs/2");
  }
}

SannModel::SannModel(SannConfig config) : config_(std::move(config)) {
  config_.Validate();
}

SannModel::SannModel(SannConfig config, std::uint64_t seed)
    : SannModel(std::move(config)) {
  Rng rng(seed);
  const auto widths = config_.LayerWidths();
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    std::uniform_real_distribution<double> u(-bound, bound);
    std::vector<double> w(in * out), b(out);
    for (double& v : w) v = u(rng);
    for (double& v : b) v = u(rng);
    layers_.push_back({ad::Tensor::Parameter({in, out}, std::move(w)),
                       ad::Tensor::Parameter({out}, std::move(b))});
  }
}

SannModel SannModel::Zeros(SannConfig config) {
  SannModel model(std::move(config));
  const auto widths = model.config_.LayerWidths();
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const std::size_t in = widths[i], out = widths[i + 1];
    model.layers_.push_back(
        {ad::Tensor::Parameter({in, out}, std::vector<double>(in * out, 0.0)),
         ad::Tensor::Parameter({out}, std::vector<double>(out, 0.0))});
  }
  return model;
}

std::vector<ad::Tensor> SannModel::Parameters() const {
  std::vector<ad::Tensor> params;
  for (const DenseLayer& layer : layers_) {
    params.push_back(layer.w);
    params.push_back(layer.b);
  }
  return params;
}

std::size_t SannModel::ParameterCount() const {
  std::size_t n = 0;
  for (const DenseLayer& layer : layers_) n += layer.w.size() + layer.b.size();
  return n;
}

std::vector<std::vector<double>> SannModel::SnapshotWeights() const {
  std::vector<std::vector<double>> out;
  for (const ad::Tensor& p : Parameters()) out.push_back(p.value());
  return out;
}

void SannModel::RestoreWeights(const std::vector<std::vector<double>>& weights) {
  auto params = Parameters();
  if (weights.size() != params.size()) {
    throw StructuralError("weight snapshot does not match the model");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (weights[i].size() != params[i].size()) {
      throw StructuralError("weight snapshot does not match the model");
    }
    params[i].mutable_value() = weights[i];
  }
}

std::vector<double> PositionalEncode(std::span<const double> x, int K) {
  std::vector<double> out;
  out.reserve(2 * x.size() * static_cast<std::size_t>(K + 1));
  for (int k = 0; k <= K; ++k) {
    const double scale = std::ldexp(std::numbers::pi, k);
    for (double v : x) out.push_back(std::sin(scale * v));
    for (double v : x) out.push_back(std::cos(scale * v));
  }
  return out;
}

std::vector<double> ForwardRaw(const SannModel& model, const ZonePair& pair) {
  std::vector<double> x = EncodePair(model.config(), pair);
  std::vector<double> y;
  const auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const std::size_t in = layers[i].w.dim(0), out = layers[i].w.dim(1);
    y.resize(out);
    ad::MatMulKernel(x.data(), layers[i].w.value().data(), y.data(), 1, in, out);
    const auto& b = layers[i].b.value();
    const bool last = i + 1 == layers.size();
    for (std::size_t j = 0; j < out; ++j) {
      const double v = y[j] + b[j];
      y[j] = last || v > 0.0 ? v : 0.0;
    }
    std::swap(x, y);
  }
  return x;
}

FilterSet OutputToFilters(const SannConfig& config,
                          std::span<const double> output) {
  FilterSet filters(config.speakers, config.freqs);
  const std::size_t half = filters.gains.size();
  if (output.size() != 2 * half) {
    throw StructuralError("network output has the wrong width");
  }
  for (std::size_t i = 0; i < half; ++i) {
    filters.gains[i] = {output[i], output[half + i]};
  }
  return filters;
}

FilterSet Forward(const SannModel& model, const ZonePair& pair) {
  return OutputToFilters(model.config(), ForwardRaw(model, pair));
}

ad::Tensor ForwardBatch(const SannModel& model,
                        std::span<const ZonePair> pairs) {
  const std::size_t width = model.config().encoded_width();
  std::vector<double> enc;
  enc.reserve(pairs.size() * width);
  for (const ZonePair& pair : pairs) {
    const auto e = EncodePair(model.config(), pair);
    enc.insert(enc.end(), e.begin(), e.end());
  }
  ad::Tensor x = ad::Tensor::Constant({pairs.size(), width}, std::move(enc));
  const auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = ad::Add(ad::MatMul(x, layers[i].w), layers[i].b);
    if (i + 1 < layers.size()) x = ad::Relu(x);
  }
  return x;
}

ComplexTensor SplitOutput(const ad::Tensor& output, std::size_t b,
                          std::size_t speakers, std::size_t bins) {
  const std::size_t row[] = {b};
  const ad::Tensor parts =
      ad::Reshape(ad::GatherRows(output, row), {2, speakers, bins});
  const std::size_t re_idx[] = {0};
  const std::size_t im_idx[] = {1};
  return {ad::Reshape(ad::Gather(parts, 0, re_idx), {speakers, bins}),
          ad::Reshape(ad::Gather(parts, 0, im_idx), {speakers, bins})};
}

std::vector<Complex> AssembleFullSpectrum(std::span<const Complex> g,
                                          const FrequencyGrid& freqs,
                                          std::span<const Complex> response) {
  const std::size_t n = freqs.n_fft;
  const std::size_t half = n / 2;
  if (g.size() != freqs.size() || response.size() != half + 1) {
    throw StructuralError("spectrum assembly: size mismatch");
  }
  const double f_lo = std::abs(response[freqs.bin_lo]);
  const double f_hi = std::abs(response[freqs.bin_hi]);
  if (!(f_lo > 0.0) || !(f_hi > 0.0)) {
    throw NumericalError("bandpass response vanishes at a band edge; cannot "
                         "normalize the out-of-band coefficients");
  }
  const double s_lo = std::abs(g.front()) / f_lo;
  const double s_hi = std::abs(g.back()) / f_hi;
  std::vector<Complex> spec(n);
  for (std::size_t k = 0; k <= half; ++k) {
    if (k < freqs.bin_lo) {
      spec[k] = s_lo * response[k];
    } else if (k <= freqs.bin_hi) {
      spec[k] = g[k - freqs.bin_lo];
    } else {
      spec[k] = s_hi * response[k];
    }
  }
  spec[0] = spec[0].real();
  spec[half] = spec[half].real();
  for (std::size_t k = 1; k < half; ++k) spec[n - k] = std::conj(spec[k]);
  return spec;
}

std::vector<double> ToImpulseResponse(std::span<const Complex> spectrum,
                                      std::size_t shift) {
  const std::size_t n = spectrum.size();
  std::vector<Complex> buf(spectrum.begin(), spectrum.end());
  fft::Backward(buf, buf);
  std::vector<double> ir(n);
  for (std::size_t t = 0; t < n; ++t) {
    ir[(t + shift) % n] = buf[t].real() / static_cast<double>(n);
  }
  return ir;
}

void SaveCheckpoint(const SannModel& model, const std::string& path) {
  Json header = {{"version", kCheckpointVersion},
                 {"config", model.config()},
                 {"parameter_count", model.ParameterCount()}};
  Json shapes = Json::array();
  for (const ad::Tensor& p : model.Parameters()) shapes.push_back(p.shape());
  header["shapes"] = shapes;
  const std::string text = header.dump();

  binio::Writer w(path);
  w.Bytes(kCheckpointMagic, sizeof(kCheckpointMagic) - 1);
  w.Put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.Bytes(text.data(), text.size());
  for (const ad::Tensor& p : model.Parameters()) {
    w.Doubles(p.value().data(), p.size());
  }
  w.Close();
}

SannModel LoadCheckpoint(const std::string& path, const SannConfig* expected) {
  binio::Reader r(path);
  r.ExpectMagic(kCheckpointMagic);
  const auto len = r.Get<std::uint32_t>();
  if (len > (1u << 26)) throw FormatError(path + ": implausible header size");
  std::string text(len, '\0');
  r.Bytes(text.data(), len);

  SannConfig config;
  Json header;
  try {
    header = Json::parse(text);
    if (header.at("version").get<int>() != kCheckpointVersion) {
      throw FormatError(path + ": unsupported checkpoint version " +
                        header.at("version").dump());
    }
    config = header.at("config").get<SannConfig>();
  } catch (const Json::exception& e) {
    throw FormatError(path + ": bad checkpoint header: " + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(path + ": bad checkpoint header: " + e.what());
  }
  if (expected != nullptr && Json(*expected) != Json(config)) {
    throw FormatError(path + ": checkpoint config does not match the "
                      "requested model config");
  }
  SannModel model = SannModel::Zeros(config);
  Json shapes = Json::array();
  for (const ad::Tensor& p : model.Parameters()) shapes.push_back(p.shape());
  if (header.value("shapes", Json()) != shapes) {
    throw FormatError(path + ": stored layer shapes disagree with the config");
  }
  for (ad::Tensor& p : model.Parameters()) {
    r.Doubles(p.mutable_value().data(), p.size());
  }
  if (!r.AtEnd()) throw FormatError(path + ": trailing bytes after weights");
  return model;
}

}  // namespace psz
