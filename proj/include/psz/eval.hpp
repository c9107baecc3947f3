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

// Isolation and accuracy metrics, frequency reductions, spatial sweeps and
// the inference timing benchmark.

#ifndef PSZ_EVAL_HPP_
#define PSZ_EVAL_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "psz/acoustics.hpp"
#include "psz/classic.hpp"
#include "psz/geometry.hpp"
#include "psz/sann.hpp"

namespace psz {

// Per-bin ratio and its dB value. A zero denominator gives +inf with
// valid = 0.
struct MetricCurve {
  std::vector<double> ratio;
  std::vector<double> db;
  std::vector<std::uint8_t> valid;
};

// sum_m |sum_l H[m, l, n] g[l, n]|^2 at bin n.
double ZoneEnergy(const AtfBlock& h, const FilterSet& g, std::size_t n);

// ||H1 g||^2 / ||H2 g||^2 per bin (sums over control points, not means).
MetricCurve Izi(const AtfBlock& h1, const AtfBlock& h2, const FilterSet& g);
// ||H1 g_own||^2 / ||H1 g_other||^2 per bin.
MetricCurve Ipi(const AtfBlock& h1, const FilterSet& g_own,
                const FilterSet& g_other);

struct NmseResult {
  double value = 0.0;            // mean over valid bins
  std::vector<double> per_bin;   // NaN where the target vanishes
  std::vector<std::uint8_t> valid;
};

// (1 / M_B) || |p_T| - |H_B g| ||^2 / ||p_T||^2 per bin; target is
// [M_B x N] row-major.
NmseResult Nmse(const FilterSet& g, const AtfBlock& hb,
                std::span<const double> target);

// sum x/f / sum 1/f over the finite entries; NaN if there are none. Throws
// ConfigError for a non-positive frequency.
double LogMean(std::span<const double> x, std::span<const double> freqs);

// Mean over the bins within [f 2^(-fraction/2), f 2^(fraction/2)] of each
// bin's frequency f, skipping non-finite entries.
std::vector<double> OctaveSmooth(std::span<const double> x,
                                 std::span<const double> freqs,
                                 double fraction = 1.0 / 6.0);

enum class MetricKind { kIzi, kIpi, kNmse };
const char* MetricName(MetricKind k);

// Filters for a pair whose bright zone is `bz`.
using FilterSource = std::function<FilterSet(const ZonePair&)>;

struct MetricMap {
  MetricKind kind = MetricKind::kIzi;
  std::string method;
  Zone fixed;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Point2> centers;     // moving-zone centres, row-major
  std::vector<double> values_db;   // frequency-reduced with LogMean
  std::vector<std::uint8_t> valid;
};

// Sweeps the moving zone over `moving` with the fixed zone as Z1. Returns
// the IZI_1, IPI_1 and NMSE (Z1 bright) maps, in that order. Cells whose
// zones select no control points or whose design fails are marked invalid.
std::vector<MetricMap> SpatialMaps(const FilterSource& source,
                                   const std::string& method,
                                   const AtfTensor& atf, const Zone& fixed,
                                   const SamplingGrid& moving,
                                   unsigned threads = 0);

struct BenchResult {
  double nn_ms = 0.0;
  double pm_ms = 0.0;
  double ratio = 0.0;  // pm_ms / nn_ms
  std::size_t queries = 0;
  std::size_t repetitions = 0;
  std::size_t parameter_count = 0;
  std::size_t weight_bytes = 0;
};

// Median wall time of a single filter generation per method, on the same
// queries, after `warmup` untimed passes. Runs on the calling thread.
BenchResult BenchTiming(const SannModel& model, const AtfTensor& atf,
                        std::span<const ZonePair> queries, int repetitions,
                        int warmup = 2);

}  // namespace psz

#endif  // PSZ_EVAL_HPP_
