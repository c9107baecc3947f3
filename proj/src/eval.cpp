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

#include "psz/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

#include "psz/error.hpp"
#include "psz/parallel.hpp"
#include "psz/target.hpp"

namespace psz {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

void CheckShapes(const AtfBlock& h, const FilterSet& g) {
  if (h.speakers != g.num_speakers() || h.bins != g.num_bins()) {
    throw StructuralError("ATF block and filters disagree in shape");
  }
}

MetricCurve Ratio(const std::vector<double>& num,
                  const std::vector<double>& den) {
  MetricCurve c;
  for (std::size_t n = 0; n < num.size(); ++n) {
    const bool ok = den[n] > 0.0;
    const double r = ok ? num[n] / den[n] : kInf;
    c.ratio.push_back(r);
    c.db.push_back(ok ? 10.0 * std::log10(r) : kInf);
    c.valid.push_back(ok && std::isfinite(c.db.back()) ? 1 : 0);
  }
  return c;
}

double Median(std::vector<double> v) {
  if (v.empty()) return kNan;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid),
                   v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    m = 0.5 * (m + *std::max_element(
                       v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  return m;
}

}  // namespace

double ZoneEnergy(const AtfBlock& h, const FilterSet& g, std::size_t n) {
  double e = 0.0;
  for (std::size_t m = 0; m < h.rows; ++m) {
    Complex p = 0.0;
    for (std::size_t l = 0; l < h.speakers; ++l) p += h.at(m, l, n) * g.at(l, n);
    e += std::norm(p);
  }
  return e;
}

MetricCurve Izi(const AtfBlock& h1, const AtfBlock& h2, const FilterSet& g) {
  CheckShapes(h1, g);
  CheckShapes(h2, g);
  std::vector<double> num(g.num_bins()), den(g.num_bins());
  for (std::size_t n = 0; n < g.num_bins(); ++n) {
    num[n] = ZoneEnergy(h1, g, n);
    den[n] = ZoneEnergy(h2, g, n);
  }
  return Ratio(num, den);
}

MetricCurve Ipi(const AtfBlock& h1, const FilterSet& g_own,
                const FilterSet& g_other) {
  CheckShapes(h1, g_own);
  CheckShapes(h1, g_other);
  std::vector<double> num(g_own.num_bins()), den(g_own.num_bins());
  for (std::size_t n = 0; n < g_own.num_bins(); ++n) {
    num[n] = ZoneEnergy(h1, g_own, n);
    den[n] = ZoneEnergy(h1, g_other, n);
  }
  return Ratio(num, den);
}

NmseResult Nmse(const FilterSet& g, const AtfBlock& hb,
                std::span<const double> target) {
  CheckShapes(hb, g);
  if (target.size() != hb.rows * hb.bins) {
    throw StructuralError("NMSE target must be [rows x bins]");
  }
  NmseResult r;
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t n = 0; n < hb.bins; ++n) {
    double err = 0.0, ref = 0.0;
    for (std::size_t m = 0; m < hb.rows; ++m) {
      Complex p = 0.0;
      for (std::size_t l = 0; l < hb.speakers; ++l) {
        p += hb.at(m, l, n) * g.at(l, n);
      }
      const double t = target[m * hb.bins + n];
      err += (t - std::abs(p)) * (t - std::abs(p));
      ref += t * t;
    }
    if (ref > 0.0) {
      r.per_bin.push_back(err / ref / static_cast<double>(hb.rows));
      r.valid.push_back(1);
      sum += r.per_bin.back();
      ++count;
    } else {
      r.per_bin.push_back(kNan);
      r.valid.push_back(0);
    }
  }
  r.value = count > 0 ? sum / static_cast<double>(count) : kNan;
  return r;
}

double LogMean(std::span<const double> x, std::span<const double> freqs) {
  if (x.size() != freqs.size()) {
    throw StructuralError("LogMean needs one frequency per value");
  }
  // Deviations from the first finite value are accumulated, so a constant
  // curve comes back exactly.
  double ref = kNan, num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(freqs[i] > 0.0)) throw ConfigError("frequencies must be positive");
    if (!std::isfinite(x[i])) continue;
    if (std::isnan(ref)) ref = x[i];
    num += (x[i] - ref) / freqs[i];
    den += 1.0 / freqs[i];
  }
  return den > 0.0 ? ref + num / den : kNan;
}

std::vector<double> OctaveSmooth(std::span<const double> x,
                                 std::span<const double> freqs,
                                 double fraction) {
  if (x.size() != freqs.size()) {
    throw StructuralError("OctaveSmooth needs one frequency per value");
  }
  if (!(fraction > 0.0)) throw ConfigError("octave fraction must be positive");
  const double half = std::exp2(0.5 * fraction);
  std::vector<double> out(x.size(), kNan);
  std::size_t lo = 0, hi = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double f_lo = freqs[k] / half;
    const double f_hi = freqs[k] * half;
    while (lo < x.size() && freqs[lo] < f_lo) ++lo;
    if (hi < lo) hi = lo;
    while (hi < x.size() && freqs[hi] <= f_hi) ++hi;
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t j = lo; j < hi; ++j) {
      if (!std::isfinite(x[j])) continue;
      sum += x[j];
      ++count;
    }
    if (count > 0) out[k] = sum / static_cast<double>(count);
  }
  return out;
}

const char* MetricName(MetricKind k) {
  switch (k) {
    case MetricKind::kIzi: return "izi";
    case MetricKind::kIpi: return "ipi";
    case MetricKind::kNmse: return "nmse";
  }
  return "unknown";
}

std::vector<MetricMap> SpatialMaps(const FilterSource& source,
                                   const std::string& method,
                                   const AtfTensor& atf, const Zone& fixed,
                                   const SamplingGrid& moving,
                                   unsigned threads) {
  std::vector<MetricMap> maps(3);
  const MetricKind kinds[] = {MetricKind::kIzi, MetricKind::kIpi,
                              MetricKind::kNmse};
  for (std::size_t i = 0; i < 3; ++i) {
    maps[i].kind = kinds[i];
    maps[i].method = method;
    maps[i].fixed = fixed;
    maps[i].rows = moving.rows();
    maps[i].cols = moving.cols();
    maps[i].centers = moving.points();
    maps[i].values_db.assign(moving.size(), kNan);
    maps[i].valid.assign(moving.size(), 0);
  }
  const std::vector<double> freqs = atf.freqs.bin_freqs();
  const auto z1_ids = SelectControlPoints(atf.grid, fixed);
  const AtfBlock h1 = atf.Rows(z1_ids);
  const std::vector<double> target = TargetMagnitude(fixed.center.x, h1);

  auto store = [&](std::size_t k, std::size_t cell, double v) {
    maps[k].values_db[cell] = v;
    maps[k].valid[cell] = std::isfinite(v) ? 1 : 0;
  };
  ParallelFor(moving.size(), ResolveThreads(threads), [&](std::size_t cell) {
    const Zone z2{moving.point(cell), fixed.radius};
    try {
      const AtfBlock h2 = atf.Rows(SelectControlPoints(atf.grid, z2));
      const FilterSet g1 = source({fixed, z2});
      const FilterSet g2 = source({z2, fixed});
      store(0, cell, LogMean(Izi(h1, h2, g1).db, freqs));
      store(1, cell, LogMean(Ipi(h1, g1, g2).db, freqs));
      std::vector<double> nmse_db = Nmse(g1, h1, target).per_bin;
      for (double& v : nmse_db) v = 10.0 * std::log10(v);
      store(2, cell, LogMean(nmse_db, freqs));
    } catch (const DomainError&) {
      // left invalid
    } catch (const NumericalError&) {
    }
  });
  return maps;
}

BenchResult BenchTiming(const SannModel& model, const AtfTensor& atf,
                        std::span<const ZonePair> queries, int repetitions,
                        int warmup) {
  if (queries.empty()) throw ConfigError("benchmark needs at least one query");
  if (repetitions < 1) throw ConfigError("repetitions must be >= 1");
  using Clock = std::chrono::steady_clock;
  auto time_one = [](auto&& fn) {
    const auto t0 = Clock::now();
    fn();
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  };
  double sink = 0.0;
  auto nn = [&](const ZonePair& q) { sink += Forward(model, q).gains[0].real(); };
  auto pm = [&](const ZonePair& q) {
    sink += DesignClassic(ClassicMethod::kPm, atf, q).filters.gains[0].real();
  };
  for (int w = 0; w < warmup; ++w) {
    for (const ZonePair& q : queries) {
      nn(q);
      pm(q);
    }
  }
  std::vector<double> nn_ms, pm_ms;
  for (int r = 0; r < repetitions; ++r) {
    for (const ZonePair& q : queries) {
      nn_ms.push_back(time_one([&] { nn(q); }));
      pm_ms.push_back(time_one([&] { pm(q); }));
    }
  }
  BenchResult res;
  res.nn_ms = Median(nn_ms);
  res.pm_ms = Median(pm_ms);
  res.ratio = res.pm_ms / res.nn_ms;
  res.queries = queries.size();
  res.repetitions = static_cast<std::size_t>(repetitions);
  res.parameter_count = model.ParameterCount();
  res.weight_bytes = res.parameter_count * sizeof(double);
  if (sink == kInf) res.ratio = kNan;  // keeps the work observable
  return res;
}

}  // namespace psz
