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

#include "psz/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "binio.hpp"
#include "psz/error.hpp"

namespace psz {
namespace {

constexpr char kAtfMagic[] = "PSZATF1";
constexpr char kFilterMagic[] = "PSZFLT1";
constexpr std::uint32_t kMaxCount = 1u << 28;

void PutTriple(binio::Writer& w, const Point3& p) {
  w.Put(p.x);
  w.Put(p.y);
  w.Put(p.z);
}

Point3 GetTriple(binio::Reader& r) {
  Point3 p;
  p.x = r.Get<double>();
  p.y = r.Get<double>();
  p.z = r.Get<double>();
  return p;
}

std::uint32_t GetCount(binio::Reader& r, const char* what) {
  const auto v = r.Get<std::uint32_t>();
  if (v > kMaxCount) {
    throw FormatError(r.path() + ": implausible " + what + " " +
                      std::to_string(v));
  }
  return v;
}

void PutComplex(binio::Writer& w, const std::vector<Complex>& values) {
  // std::complex<double> is layout-compatible with double[2].
  w.Doubles(reinterpret_cast<const double*>(values.data()), 2 * values.size());
}

void GetComplex(binio::Reader& r, std::vector<Complex>& values) {
  r.Doubles(reinterpret_cast<double*>(values.data()), 2 * values.size());
}

SamplingGrid GridFromPoints(const std::vector<Point3>& pts,
                            const std::string& path) {
  if (pts.size() < 2) throw FormatError(path + ": grid has fewer than 2 points");
  RenderingArea area{pts[0].x, pts[0].x, pts[0].y, pts[0].y};
  for (const Point3& p : pts) {
    area.x_min = std::min(area.x_min, p.x);
    area.x_max = std::max(area.x_max, p.x);
    area.y_min = std::min(area.y_min, p.y);
    area.y_max = std::max(area.y_max, p.y);
  }
  std::size_t cols = 0;
  while (cols < pts.size() && pts[cols].y == pts[0].y) ++cols;
  if (cols < 2 || pts.size() % cols != 0) {
    throw FormatError(path + ": grid points do not form a lattice");
  }
  const double res = (area.x_max - area.x_min) / static_cast<double>(cols - 1);
  SamplingGrid grid;
  try {
    grid = MakeGrid(area, res);
  } catch (const ConfigError& e) {
    throw FormatError(path + ": grid points do not form a lattice: " + e.what());
  }
  if (grid.size() != pts.size()) {
    throw FormatError(path + ": grid points do not form a lattice");
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (std::abs(grid.point(i).x - pts[i].x) > 1e-9 ||
        std::abs(grid.point(i).y - pts[i].y) > 1e-9 ||
        pts[i].z != pts[0].z) {
      throw FormatError(path + ": grid points do not form a lattice");
    }
  }
  return grid;
}

}  // namespace

void WriteAtf(const AtfTensor& atf, const std::string& path) {
  const std::size_t m = atf.grid.size();
  const std::size_t l = atf.speakers.size();
  if (atf.data.values.size() != m * l * atf.freqs.size()) {
    throw StructuralError("ATF payload does not match its header");
  }
  binio::Writer w(path);
  w.Bytes(kAtfMagic, sizeof(kAtfMagic) - 1);
  w.Put(atf.freqs.sample_rate);
  w.Put(atf.freqs.n_fft);
  w.Put(atf.freqs.bin_lo);
  w.Put(atf.freqs.bin_hi);
  w.Put(static_cast<std::uint32_t>(m));
  w.Put(static_cast<std::uint32_t>(l));
  w.Put(static_cast<std::uint8_t>(atf.condition));
  for (std::size_t i = 0; i < m; ++i) PutTriple(w, atf.receiver(i));
  for (const Point3& p : atf.speakers.positions) PutTriple(w, p);
  PutComplex(w, atf.data.values);
  w.Close();
}

AtfTensor ReadAtf(const std::string& path) {
  binio::Reader r(path);
  r.ExpectMagic(kAtfMagic);
  AtfTensor atf;
  atf.freqs.sample_rate = r.Get<std::uint32_t>();
  atf.freqs.n_fft = r.Get<std::uint32_t>();
  atf.freqs.bin_lo = r.Get<std::uint32_t>();
  atf.freqs.bin_hi = r.Get<std::uint32_t>();
  try {
    atf.freqs.Validate();
  } catch (const ConfigError& e) {
    throw FormatError(path + ": bad frequency header: " + e.what());
  }
  const std::uint32_t m = GetCount(r, "point count");
  const std::uint32_t l = GetCount(r, "speaker count");
  const auto tag = r.Get<std::uint8_t>();
  if (tag > static_cast<std::uint8_t>(Condition::kPseudoMeasured)) {
    throw FormatError(path + ": unknown condition tag " + std::to_string(tag));
  }
  atf.condition = static_cast<Condition>(tag);
  std::vector<Point3> pts(m);
  for (Point3& p : pts) p = GetTriple(r);
  for (std::uint32_t i = 0; i < l; ++i) atf.speakers.positions.push_back(GetTriple(r));
  atf.grid = GridFromPoints(pts, path);
  atf.height = pts[0].z;
  atf.data = AtfBlock(m, l, atf.freqs.size());
  GetComplex(r, atf.data.values);
  if (!r.AtEnd()) throw FormatError(path + ": trailing bytes after payload");
  return atf;
}

void WriteFilterSet(const FilterSet& filters, const std::string& path) {
  binio::Writer w(path);
  w.Bytes(kFilterMagic, sizeof(kFilterMagic) - 1);
  w.Put(static_cast<std::uint32_t>(filters.num_speakers()));
  w.Put(static_cast<std::uint32_t>(filters.num_bins()));
  w.Put(filters.freqs.sample_rate);
  w.Put(filters.freqs.n_fft);
  for (std::size_t n = 0; n < filters.num_bins(); ++n) w.Put(filters.freqs.bin(n));
  for (const Point3& p : filters.speakers.positions) PutTriple(w, p);
  PutComplex(w, filters.gains);
  w.Close();
}

FilterSet ReadFilterSet(const std::string& path) {
  binio::Reader r(path);
  r.ExpectMagic(kFilterMagic);
  const std::uint32_t l = GetCount(r, "speaker count");
  const std::uint32_t n = GetCount(r, "bin count");
  FrequencyGrid freqs;
  freqs.sample_rate = r.Get<std::uint32_t>();
  freqs.n_fft = r.Get<std::uint32_t>();
  std::vector<std::uint32_t> bins(n);
  for (auto& b : bins) b = r.Get<std::uint32_t>();
  if (n == 0) throw FormatError(path + ": no frequency bins");
  for (std::uint32_t i = 1; i < n; ++i) {
    if (bins[i] != bins[0] + i) {
      throw FormatError(path + ": bin indices are not contiguous");
    }
  }
  freqs.bin_lo = bins.front();
  freqs.bin_hi = bins.back();
  try {
    freqs.Validate();
  } catch (const ConfigError& e) {
    throw FormatError(path + ": bad frequency header: " + e.what());
  }
  SpeakerArray speakers;
  for (std::uint32_t i = 0; i < l; ++i) speakers.positions.push_back(GetTriple(r));
  FilterSet filters(std::move(speakers), freqs);
  GetComplex(r, filters.gains);
  if (!r.AtEnd()) throw FormatError(path + ": trailing bytes after payload");
  return filters;
}

void WriteMetricMap(const MetricMap& map, const std::string& csv_path,
                    const Json& meta) {
  std::ofstream os(csv_path);
  if (!os) throw IoError("cannot open " + csv_path + " for writing");
  os << "x_m,y_m,value_db,valid\n";
  char line[128];
  for (std::size_t i = 0; i < map.centers.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.6f,%.6f,%.17g,%d\n", map.centers[i].x,
                  map.centers[i].y, map.values_db[i],
                  static_cast<int>(map.valid[i]));
    os << line;
  }
  if (!os) throw IoError("write to " + csv_path + " failed");
  Json side = meta;
  side["metric"] = MetricName(map.kind);
  side["method"] = map.method;
  side["fixed_zone"] = map.fixed;
  side["rows"] = map.rows;
  side["cols"] = map.cols;
  side["reduction"] = "logmean of per-bin dB values";
  WriteJsonFile(side, csv_path + ".json");
}

void WriteJsonFile(const Json& json, const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << json.dump(2) << '\n';
  if (!os) throw IoError("write to " + path + " failed");
}

Json ReadJsonFile(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  try {
    return Json::parse(ss.str());
  } catch (const Json::exception& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
}

}  // namespace psz
