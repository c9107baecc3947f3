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

// Binary data files and CSV exports.
//
// PSZATF1: magic, u32 sample_rate, n_fft, bin_lo, bin_hi, M, L, u8
// condition, M grid points and L speakers as f64 (x, y, z) triples, then
// M * L * N interleaved f64 (re, im) values, point-major, then speaker, then
// bin.
//
// PSZFLT1: magic, u32 L, N, sample_rate, n_fft, N u32 bin indices, L
// speaker triples, then L * N interleaved complex values, speaker-major.
//
// All multi-byte fields are little-endian.

#ifndef PSZ_IO_HPP_
#define PSZ_IO_HPP_

#include <string>
#include <vector>

#include "psz/acoustics.hpp"
#include "psz/classic.hpp"
#include "psz/eval.hpp"
#include "psz/json_io.hpp"

namespace psz {

void WriteAtf(const AtfTensor& atf, const std::string& path);
// The sampling grid is rebuilt from the stored coordinates; FormatError if
// they do not form a regular lattice.
AtfTensor ReadAtf(const std::string& path);

void WriteFilterSet(const FilterSet& filters, const std::string& path);
FilterSet ReadFilterSet(const std::string& path);

// CSV with x_m, y_m, value_db, valid and a JSON sidecar at
// `csv_path + ".json"` holding `meta` plus the map's own fields.
void WriteMetricMap(const MetricMap& map, const std::string& csv_path,
                    const Json& meta);

// Writes `json` pretty-printed. Throws IoError.
void WriteJsonFile(const Json& json, const std::string& path);
// Throws IoError when unreadable and ConfigError when not valid JSON.
Json ReadJsonFile(const std::string& path);

}  // namespace psz

#endif  // PSZ_IO_HPP_
