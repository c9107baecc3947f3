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

#include "psz/target.hpp"

#include <cmath>

#include "psz/error.hpp"

namespace psz {

std::pair<std::size_t, std::size_t> TargetSpeakers(double bz_x,
                                                   std::size_t speakers) {
  if (speakers < 2) {
    throw ConfigError("the target rule needs at least two speakers");
  }
  const std::size_t left_center = speakers / 2 - 1;
  if (bz_x < 0.0) return {0, left_center};
  return {speakers - 1, speakers - 1 - left_center};
}

std::vector<double> TargetMagnitude(double bz_x, const AtfBlock& hb) {
  const auto [edge, center] = TargetSpeakers(bz_x, hb.speakers);
  std::vector<double> target(hb.rows * hb.bins);
  for (std::size_t m = 0; m < hb.rows; ++m) {
    for (std::size_t n = 0; n < hb.bins; ++n) {
      target[m * hb.bins + n] =
          0.5 * (std::abs(hb.at(m, edge, n)) + std::abs(hb.at(m, center, n)));
    }
  }
  return target;
}

std::vector<Complex> TargetWithReferencePhase(double bz_x, const AtfBlock& hb) {
  const auto [edge, center] = TargetSpeakers(bz_x, hb.speakers);
  const std::vector<double> mag = TargetMagnitude(bz_x, hb);
  std::vector<Complex> target(mag.size());
  for (std::size_t m = 0; m < hb.rows; ++m) {
    for (std::size_t n = 0; n < hb.bins; ++n) {
      const Complex ref = hb.at(m, edge, n) + hb.at(m, center, n);
      const double phase = ref == Complex(0.0) ? 0.0 : std::arg(ref);
      target[m * hb.bins + n] = std::polar(mag[m * hb.bins + n], phase);
    }
  }
  return target;
}

}  // namespace psz
