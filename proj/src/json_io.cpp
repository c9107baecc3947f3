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

#include "psz/json_io.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>

#include "psz/error.hpp"

namespace psz {
namespace {

template <typename T>
void Read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::vector<double> Triple(const Json& j, std::size_t n, const char* what) {
  if (!j.is_array() || j.size() != n) {
    throw ConfigError(std::string(what) + " must be an array of " +
                      std::to_string(n) + " numbers");
  }
  return j.get<std::vector<double>>();
}

}  // namespace

void CheckKeys(const Json& j, std::initializer_list<const char*> allowed,
               const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  for (const auto& item : j.items()) {
    bool known = false;
    for (const char* k : allowed) known = known || item.key() == k;
    if (!known) {
      throw ConfigError("unknown key '" + item.key() + "' in " + where);
    }
  }
}

void to_json(Json& j, const Point2& p) { j = Json::array({p.x, p.y}); }
void from_json(const Json& j, Point2& p) {
  const auto v = Triple(j, 2, "a 2-D point");
  p = {v[0], v[1]};
}

void to_json(Json& j, const Point3& p) { j = Json::array({p.x, p.y, p.z}); }
void from_json(const Json& j, Point3& p) {
  const auto v = Triple(j, 3, "a 3-D point");
  p = {v[0], v[1], v[2]};
}

void to_json(Json& j, const RenderingArea& a) {
  j = {{"x_min", a.x_min}, {"x_max", a.x_max}, {"y_min", a.y_min},
       {"y_max", a.y_max}};
}
void from_json(const Json& j, RenderingArea& a) {
  CheckKeys(j, {"x_min", "x_max", "y_min", "y_max"}, "area");
  Read(j, "x_min", a.x_min);
  Read(j, "x_max", a.x_max);
  Read(j, "y_min", a.y_min);
  Read(j, "y_max", a.y_max);
}

void to_json(Json& j, const FrequencyGrid& f) {
  j = {{"sample_rate", f.sample_rate}, {"n_fft", f.n_fft},
       {"bin_lo", f.bin_lo}, {"bin_hi", f.bin_hi}};
}
void from_json(const Json& j, FrequencyGrid& f) {
  CheckKeys(j, {"sample_rate", "n_fft", "bin_lo", "bin_hi"}, "freqs");
  Read(j, "sample_rate", f.sample_rate);
  Read(j, "n_fft", f.n_fft);
  Read(j, "bin_lo", f.bin_lo);
  Read(j, "bin_hi", f.bin_hi);
}

void to_json(Json& j, const SpeakerArray& s) { j = s.positions; }
void from_json(const Json& j, SpeakerArray& s) {
  if (!j.is_array()) throw ConfigError("speakers must be an array of points");
  s.positions = j.get<std::vector<Point3>>();
}

void to_json(Json& j, const RoomConfig& r) {
  j = {{"lx", r.lx},       {"ly", r.ly},
       {"lz", r.lz},       {"rt60", r.rt60},
       {"array_origin", r.array_origin}, {"seed", r.seed}};
}
void from_json(const Json& j, RoomConfig& r) {
  CheckKeys(j, {"lx", "ly", "lz", "rt60", "array_origin", "seed"}, "room");
  Read(j, "lx", r.lx);
  Read(j, "ly", r.ly);
  Read(j, "lz", r.lz);
  Read(j, "rt60", r.rt60);
  Read(j, "array_origin", r.array_origin);
  Read(j, "seed", r.seed);
}

void to_json(Json& j, const Zone& z) {
  j = {{"center", z.center}, {"radius", z.radius}};
}
void from_json(const Json& j, Zone& z) {
  CheckKeys(j, {"center", "radius"}, "zone");
  Read(j, "center", z.center);
  Read(j, "radius", z.radius);
}

void to_json(Json& j, const SannConfig& c) {
  j = {{"K", c.K},
       {"hidden", c.hidden},
       {"speakers", c.speakers},
       {"freqs", c.freqs},
       {"area", c.area},
       {"margin", c.margin},
       {"band_lo_hz", c.band_lo_hz},
       {"band_hi_hz", c.band_hi_hz}};
}
void from_json(const Json& j, SannConfig& c) {
  CheckKeys(j,
            {"K", "hidden", "speakers", "freqs", "area", "margin",
             "band_lo_hz", "band_hi_hz"},
            "model");
  Read(j, "K", c.K);
  Read(j, "hidden", c.hidden);
  Read(j, "speakers", c.speakers);
  Read(j, "freqs", c.freqs);
  Read(j, "area", c.area);
  Read(j, "margin", c.margin);
  Read(j, "band_lo_hz", c.band_lo_hz);
  Read(j, "band_hi_hz", c.band_hi_hz);
}

void to_json(Json& j, const LossWeights& w) {
  j = {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma},
       {"g_max", w.g_max}, {"measured_dz_factor", w.measured_dz_factor}};
}
void from_json(const Json& j, LossWeights& w) {
  CheckKeys(j, {"alpha", "beta", "gamma", "g_max", "measured_dz_factor"},
            "weights");
  Read(j, "alpha", w.alpha);
  Read(j, "beta", w.beta);
  Read(j, "gamma", w.gamma);
  Read(j, "g_max", w.g_max);
  Read(j, "measured_dz_factor", w.measured_dz_factor);
}

void to_json(Json& j, const PerturbParams& p) {
  j = {{"amp_lo", p.amp_lo}, {"amp_hi", p.amp_hi}, {"disp_max", p.disp_max},
       {"snr_db", std::isfinite(p.snr_db) ? Json(p.snr_db) : Json(nullptr)},
       {"c", p.c}};
}
void from_json(const Json& j, PerturbParams& p) {
  CheckKeys(j, {"amp_lo", "amp_hi", "disp_max", "snr_db", "c"},
            "augmentation");
  Read(j, "amp_lo", p.amp_lo);
  Read(j, "amp_hi", p.amp_hi);
  Read(j, "disp_max", p.disp_max);
  if (j.contains("snr_db")) {
    p.snr_db = j.at("snr_db").is_null()
                   ? std::numeric_limits<double>::infinity()
                   : j.at("snr_db").get<double>();
  }
  Read(j, "c", p.c);
}

void to_json(Json& j, const RoomsSpec& r) {
  j = {{"count", r.count}, {"rt60", r.rt60}, {"max_order", r.max_order},
       {"ir_len", r.ir_len}, {"calibrate_rt60", r.calibrate_rt60}};
}
void from_json(const Json& j, RoomsSpec& r) {
  CheckKeys(j, {"count", "rt60", "max_order", "ir_len", "calibrate_rt60"},
            "rooms");
  Read(j, "calibrate_rt60", r.calibrate_rt60);
  Read(j, "count", r.count);
  Read(j, "rt60", r.rt60);
  Read(j, "max_order", r.max_order);
  Read(j, "ir_len", r.ir_len);
}

void to_json(Json& j, const MixedSpec& m) {
  j = {{"spacing", std::isfinite(m.spacing) ? Json(m.spacing) : Json(nullptr)},
       {"region", m.region},
       {"radius", m.radius},
       {"truth_seed", m.truth_seed}};
}
void from_json(const Json& j, MixedSpec& m) {
  CheckKeys(j, {"spacing", "region", "radius", "truth_seed"}, "mixed");
  if (j.contains("spacing")) {
    m.spacing = j.at("spacing").is_null()
                    ? std::numeric_limits<double>::infinity()
                    : j.at("spacing").get<double>();
  }
  Read(j, "region", m.region);
  Read(j, "radius", m.radius);
  Read(j, "truth_seed", m.truth_seed);
}

void to_json(Json& j, const TrainConfig& c) {
  j = {{"n_samples", c.n_samples},
       {"n_val", c.n_val},
       {"batch_size", c.batch_size},
       {"epochs", c.epochs},
       {"lr", c.lr},
       {"zone_radius", c.zone_radius},
       {"grid_resolution", c.grid_resolution},
       {"weights", c.weights},
       {"augmentation",
        c.augmentation ? Json(*c.augmentation) : Json(nullptr)},
       {"condition", DatasetKindName(c.condition)},
       {"rooms", c.rooms},
       {"mixed", c.mixed},
       {"seed", c.seed}};
}
void from_json(const Json& j, TrainConfig& c) {
  CheckKeys(j,
            {"n_samples", "n_val", "batch_size", "epochs", "lr", "zone_radius",
             "grid_resolution", "weights", "augmentation", "condition",
             "rooms", "mixed", "seed"},
            "train");
  Read(j, "n_samples", c.n_samples);
  Read(j, "n_val", c.n_val);
  Read(j, "batch_size", c.batch_size);
  Read(j, "epochs", c.epochs);
  Read(j, "lr", c.lr);
  Read(j, "zone_radius", c.zone_radius);
  Read(j, "grid_resolution", c.grid_resolution);
  Read(j, "weights", c.weights);
  if (j.contains("augmentation")) {
    if (j.at("augmentation").is_null()) {
      c.augmentation.reset();
    } else {
      c.augmentation = j.at("augmentation").get<PerturbParams>();
    }
  }
  if (j.contains("condition")) {
    c.condition = ParseDatasetKind(j.at("condition").get<std::string>());
  }
  Read(j, "rooms", c.rooms);
  Read(j, "mixed", c.mixed);
  Read(j, "seed", c.seed);
}

void to_json(Json& j, const ClassicOptions& o) {
  j = {{"lambda_factor", o.lambda_factor},
       {"pm_phase",
        o.pm_phase == PmTargetPhase::kReference ? "reference" : "zero"},
       {"am_max_iters", o.am.max_iters},
       {"am_tol", o.am.tol}};
}
void from_json(const Json& j, ClassicOptions& o) {
  CheckKeys(j, {"lambda_factor", "pm_phase", "am_max_iters", "am_tol"},
            "classic");
  Read(j, "lambda_factor", o.lambda_factor);
  if (j.contains("pm_phase")) {
    const auto s = j.at("pm_phase").get<std::string>();
    if (s == "reference") {
      o.pm_phase = PmTargetPhase::kReference;
    } else if (s == "zero") {
      o.pm_phase = PmTargetPhase::kZero;
    } else {
      throw ConfigError("pm_phase must be 'reference' or 'zero'");
    }
  }
  Read(j, "am_max_iters", o.am.max_iters);
  Read(j, "am_tol", o.am.tol);
}

std::string ConfigHash(const Json& j) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : j.dump()) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace psz
