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

// Random perturbation of transfer functions that models driver gain
// mismatch, driver displacement and measurement noise.

#ifndef PSZ_AUGMENT_HPP_
#define PSZ_AUGMENT_HPP_

#include <limits>
#include <span>

#include "psz/acoustics.hpp"

namespace psz {

struct PerturbParams {
  double amp_lo = 0.79;
  double amp_hi = 1.26;
  double disp_max = 0.03;  // metres, symmetric
  double snr_db = 40.0;    // +inf disables the noise term
  double c = kSpeedOfSound;

  void Validate() const;
  static PerturbParams None() {
    return {1.0, 1.0, 0.0, std::numeric_limits<double>::infinity(),
            kSpeedOfSound};
  }
};

// H' = eps_A H exp(j 2 pi f d / c) + eps_n. eps_A ~ U(amp_lo, amp_hi) and
// d ~ U(-disp_max, disp_max) are drawn once per (row, speaker) and shared by
// all bins; eps_n is circular complex Gaussian per entry with power
// mean|H|^2 * 10^(-snr_db / 10), the mean taken over the whole block.
AtfBlock PerturbAtf(const AtfBlock& h, std::span<const double> freqs_hz,
                    const PerturbParams& params, Rng& rng);

}  // namespace psz

#endif  // PSZ_AUGMENT_HPP_
