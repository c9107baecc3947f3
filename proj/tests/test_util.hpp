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

// Small helpers shared by the unit tests.

#ifndef PSZ_TESTS_TEST_UTIL_HPP_
#define PSZ_TESTS_TEST_UTIL_HPP_

#include <complex>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "psz/acoustics.hpp"
#include "psz/classic.hpp"

namespace psz::testing {

inline Complex RandomComplex(Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return {n(rng), n(rng)};
}

inline CMatrix RandomMatrix(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  CMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = RandomComplex(rng);
  }
  return m;
}

inline AtfBlock RandomBlock(Rng& rng, std::size_t m, std::size_t l,
                            std::size_t n) {
  AtfBlock b(m, l, n);
  for (Complex& v : b.values) v = RandomComplex(rng);
  return b;
}

inline FilterSet RandomFilters(Rng& rng, std::size_t speakers,
                               std::size_t bins) {
  SpeakerArray s;
  for (std::size_t l = 0; l < speakers; ++l) {
    s.positions.push_back({0.1 * static_cast<double>(l), 0.0, 1.2});
  }
  FrequencyGrid f{48000, 8192, 18, static_cast<std::uint32_t>(18 + bins - 1)};
  FilterSet g(s, f);
  for (Complex& v : g.gains) v = RandomComplex(rng);
  return g;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("psz_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string File(const std::string& name) const {
    return (path_ / name).string();
  }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

inline double RelErr(double a, double b) {
  const double d = std::max(std::abs(a), std::abs(b));
  return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

}  // namespace psz::testing

#endif  // PSZ_TESTS_TEST_UTIL_HPP_
