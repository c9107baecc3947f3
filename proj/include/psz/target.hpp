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

// Bright-zone target pressure shared by the neural and classic designs.

#ifndef PSZ_TARGET_HPP_
#define PSZ_TARGET_HPP_

#include <cstddef>
#include <utility>
#include <vector>

#include "psz/acoustics.hpp"

namespace psz {

// (edge, center) speaker indices, 0-based. A bright zone left of x = 0 uses
// the leftmost speaker and the left-center one; otherwise the mirror pair.
std::pair<std::size_t, std::size_t> TargetSpeakers(double bz_x,
                                                   std::size_t speakers);

// |p_T,B| as a [rows x bins] row-major array: the mean of the magnitudes of
// the two reference speakers at every control point and bin.
std::vector<double> TargetMagnitude(double bz_x, const AtfBlock& hb);

// Complex target with the magnitude above and the phase of the mean of the
// two reference speakers' ATFs. Used as the pressure-matching target.
std::vector<Complex> TargetWithReferencePhase(double bz_x, const AtfBlock& hb);

}  // namespace psz

#endif  // PSZ_TARGET_HPP_
