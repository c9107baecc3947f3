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

// Thin wrapper over FFTW. Plans are created once per (size, direction) and
// shared; execution uses the new-array interface so concurrent calls are
// safe.

#ifndef PSZ_FFT_HPP_
#define PSZ_FFT_HPP_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace psz::fft {

using Complex = std::complex<double>;

bool IsPowerOfTwo(std::size_t n);

// out[k] = sum_n in[n] exp(-2 pi j k n / N). in and out may alias.
void Forward(std::span<const Complex> in, std::span<Complex> out);

// out[n] = sum_k in[k] exp(+2 pi j k n / N), unnormalized.
void Backward(std::span<const Complex> in, std::span<Complex> out);

std::vector<Complex> Forward(std::span<const double> real_in);

}  // namespace psz::fft

#endif  // PSZ_FFT_HPP_
