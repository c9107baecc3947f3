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

#include "psz/augment.hpp"

#include <cmath>
#include <numbers>

#include "psz/error.hpp"

namespace psz {

void PerturbParams::Validate() const {
  if (!(amp_lo > 0.0 && amp_lo <= amp_hi && std::isfinite(amp_hi))) {
    throw ConfigError("amplitude range must satisfy 0 < lo <= hi");
  }
  if (!(disp_max >= 0.0 && std::isfinite(disp_max))) {
    throw ConfigError("displacement bound must be finite and >= 0");
  }
  if (std::isnan(snr_db)) throw ConfigError("snr_db must not be NaN");
  if (!(c > 0.0)) throw ConfigError("speed of sound must be positive");
}

AtfBlock PerturbAtf(const AtfBlock& h, std::span<const double> freqs_hz,
                    const PerturbParams& params, Rng& rng) {
  params.Validate();
  if (h.empty()) return h;
  if (freqs_hz.size() != h.bins) {
    throw StructuralError("perturbation needs one frequency per bin");
  }
  double ref_power = 0.0;
  for (const Complex& v : h.values) ref_power += std::norm(v);
  ref_power /= static_cast<double>(h.values.size());
  const bool noisy = std::isfinite(params.snr_db);
  const double noise_sigma =
      noisy ? std::sqrt(0.5 * ref_power * std::pow(10.0, -params.snr_db / 10.0))
            : 0.0;

  std::uniform_real_distribution<double> amp(params.amp_lo, params.amp_hi);
  std::uniform_real_distribution<double> disp(-params.disp_max,
                                              params.disp_max);
  std::normal_distribution<double> noise(0.0, 1.0);

  AtfBlock out = h;
  for (std::size_t m = 0; m < h.rows; ++m) {
    for (std::size_t l = 0; l < h.speakers; ++l) {
      const double a = params.amp_lo == params.amp_hi ? params.amp_lo : amp(rng);
      const double d = params.disp_max == 0.0 ? 0.0 : disp(rng);
      for (std::size_t n = 0; n < h.bins; ++n) {
        const double phase =
            2.0 * std::numbers::pi * freqs_hz[n] * d / params.c;
        Complex v = a * h.at(m, l, n) * std::polar(1.0, phase);
        if (noisy) {
          const double re = noise(rng);
          const double im = noise(rng);
          v += noise_sigma * Complex(re, im);
        }
        out.at(m, l, n) = v;
      }
    }
  }
  return out;
}

}  // namespace psz
