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

#include "psz/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <map>
#include <mutex>
#include <utility>

#include "psz/error.hpp"

namespace psz::fft {
namespace {

class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [key, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan Get(std::size_t n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    const auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    // FFTW_ESTIMATE leaves the scratch arrays untouched; FFTW_UNALIGNED
    // lets the plan run on std::vector storage of any alignment.
    std::vector<Complex> scratch(n);
    auto* buf = reinterpret_cast<fftw_complex*>(scratch.data());
    fftw_plan plan =
        fftw_plan_dft_1d(static_cast<int>(n), buf, buf, sign,
                         FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw StructuralError("FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mu_;
  std::map<std::pair<std::size_t, int>, fftw_plan> plans_;
};

PlanCache& Cache() {
  static PlanCache cache;
  return cache;
}

void Execute(std::span<const Complex> in, std::span<Complex> out, int sign) {
  if (in.size() != out.size()) {
    throw StructuralError("fft input and output lengths differ");
  }
  if (in.empty()) return;
  fftw_plan plan = Cache().Get(in.size(), sign);
  // Always transform in place on the output; the plan was made in-place.
  if (in.data() != out.data()) std::copy(in.begin(), in.end(), out.begin());
  fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(out.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace

bool IsPowerOfTwo(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void Forward(std::span<const Complex> in, std::span<Complex> out) {
  Execute(in, out, FFTW_FORWARD);
}

void Backward(std::span<const Complex> in, std::span<Complex> out) {
  Execute(in, out, FFTW_BACKWARD);
}

std::vector<Complex> Forward(std::span<const double> real_in) {
  std::vector<Complex> buf(real_in.begin(), real_in.end());
  Forward(buf, buf);
  return buf;
}

}  // namespace psz::fft
