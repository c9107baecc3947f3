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

#include "psz/psz.h"

#include <atomic>
#include <cstring>
#include <exception>
#include <memory>
#include <mutex>
#include <new>
#include <string>

#include "app.hpp"
#include "psz/classic.hpp"
#include "psz/error.hpp"
#include "psz/io.hpp"
#include "psz/json_io.hpp"
#include "psz/sann.hpp"

struct psz_model {
  psz::SannModel model;
};

struct psz_atf {
  psz::AtfTensor atf;
};

namespace {

thread_local std::string g_last_error;
std::atomic<unsigned> g_threads{0};

std::mutex g_log_mu;
psz_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

psz_status Fail(psz_status s, const std::string& msg) {
  g_last_error = msg;
  return s;
}

// Runs f and maps any escaping exception to a status code.
template <typename F>
psz_status Guard(F&& f) {
  try {
    f();
    return PSZ_OK;
  } catch (const psz::Error& e) {
    return Fail(static_cast<psz_status>(e.kind()), e.what());
  } catch (const psz::Json::exception& e) {
    return Fail(PSZ_ERR_CONFIG, std::string("invalid JSON: ") + e.what());
  } catch (const std::bad_alloc&) {
    return Fail(PSZ_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(PSZ_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(PSZ_ERR_INTERNAL, "unknown error");
  }
}

void Require(const void* p, const char* what) {
  if (p == nullptr) throw psz::ConfigError(std::string(what) + " is null");
}

psz::Json ParseJson(const char* text) {
  Require(text, "config_json");
  try {
    return psz::Json::parse(text);
  } catch (const psz::Json::parse_error& e) {
    throw psz::ConfigError(std::string("config is not valid JSON: ") +
                           e.what());
  }
}

psz::app::Context MakeContext() {
  psz::app::Context ctx;
  ctx.threads = g_threads.load();
  ctx.log = [](const std::string& line) {
    std::lock_guard<std::mutex> lock(g_log_mu);
    if (g_log_fn != nullptr) g_log_fn(line.c_str(), g_log_user);
  };
  return ctx;
}

psz::SannConfig ModelConfig(const char* config_json) {
  psz::SannConfig cfg;
  if (config_json != nullptr) cfg = ParseJson(config_json).get<psz::SannConfig>();
  cfg.Validate();
  return cfg;
}

void CopyFilters(const psz::FilterSet& f, double* re, double* im,
                 std::size_t capacity) {
  Require(re, "re");
  Require(im, "im");
  if (capacity < f.gains.size()) {
    throw psz::ConfigError("output buffers hold " + std::to_string(capacity) +
                           " values, need " + std::to_string(f.gains.size()));
  }
  for (std::size_t i = 0; i < f.gains.size(); ++i) {
    re[i] = f.gains[i].real();
    im[i] = f.gains[i].imag();
  }
}

using CommandFn = void (*)(const psz::Json&, const std::string&,
                           const psz::app::Context&);

psz_status RunCommand(CommandFn fn, const char* config_json,
                      const char* out_dir) {
  return Guard([&] {
    Require(out_dir, "out_dir");
    fn(ParseJson(config_json), out_dir, MakeContext());
  });
}

}  // namespace

extern "C" {

const char* psz_version(void) { return "0.1.0"; }

const char* psz_status_name(psz_status status) {
  switch (status) {
    case PSZ_OK: return "ok";
    case PSZ_ERR_INTERNAL: return "internal error";
    case PSZ_ERR_CONFIG: return "config error";
    case PSZ_ERR_DOMAIN: return "domain error";
    case PSZ_ERR_NUMERICAL: return "numerical error";
    case PSZ_ERR_IO: return "io error";
    case PSZ_ERR_FORMAT: return "format error";
  }
  return "unknown status";
}

const char* psz_last_error(void) { return g_last_error.c_str(); }

void psz_set_threads(unsigned threads) { g_threads.store(threads); }

void psz_set_log_callback(psz_log_fn fn, void* user) {
  std::lock_guard<std::mutex> lock(g_log_mu);
  g_log_fn = fn;
  g_log_user = user;
}

psz_status psz_model_create(const char* config_json, uint64_t seed,
                            psz_model** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new psz_model{psz::SannModel(ModelConfig(config_json), seed)};
  });
}

psz_status psz_model_create_zeros(const char* config_json, psz_model** out) {
  return Guard([&] {
    Require(out, "out");
    *out = new psz_model{psz::SannModel::Zeros(ModelConfig(config_json))};
  });
}

psz_status psz_model_load(const char* path, psz_model** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new psz_model{psz::LoadCheckpoint(path)};
  });
}

psz_status psz_model_save(const psz_model* model, const char* path) {
  return Guard([&] {
    Require(model, "model");
    Require(path, "path");
    psz::SaveCheckpoint(model->model, path);
  });
}

void psz_model_free(psz_model* model) { delete model; }

psz_status psz_model_info(const psz_model* model, size_t* speakers,
                          size_t* bins, size_t* parameters) {
  return Guard([&] {
    Require(model, "model");
    const psz::SannConfig& c = model->model.config();
    if (speakers != nullptr) *speakers = c.speakers.size();
    if (bins != nullptr) *bins = c.freqs.size();
    if (parameters != nullptr) *parameters = model->model.ParameterCount();
  });
}

psz_status psz_model_config(const psz_model* model, char* buf,
                            size_t capacity, size_t* needed) {
  return Guard([&] {
    Require(model, "model");
    const std::string text = psz::Json(model->model.config()).dump();
    if (needed != nullptr) *needed = text.size() + 1;
    if (buf == nullptr) return;
    if (capacity < text.size() + 1) {
      throw psz::ConfigError("buffer too small for the model config");
    }
    std::memcpy(buf, text.c_str(), text.size() + 1);
  });
}

psz_status psz_model_infer(const psz_model* model, double bz_x, double bz_y,
                           double dz_x, double dz_y, double* re, double* im,
                           size_t capacity) {
  return Guard([&] {
    Require(model, "model");
    const psz::ZonePair pair{{{bz_x, bz_y}, 0.1}, {{dz_x, dz_y}, 0.1}};
    CopyFilters(psz::Forward(model->model, pair), re, im, capacity);
  });
}

psz_status psz_atf_simulate_anechoic(const char* config_json, psz_atf** out) {
  return Guard([&] {
    Require(out, "out");
    const psz::Json j = ParseJson(config_json);
    psz::CheckKeys(j, {"area", "resolution", "height", "speakers", "freqs"},
                   "anechoic ATF");
    const auto area = j.value("area", psz::RenderingArea{});
    const double resolution = j.value("resolution", 0.05);
    const double height = j.value("height", psz::kDefaultListeningHeight);
    const auto speakers =
        j.value("speakers", psz::SpeakerArray::DefaultLinear());
    const auto freqs = j.value("freqs", psz::FrequencyGrid{});
    speakers.Validate();
    freqs.Validate();
    *out = new psz_atf{psz::SimulateAnechoic(psz::MakeGrid(area, resolution),
                                             speakers, freqs, height)};
  });
}

psz_status psz_atf_load(const char* path, psz_atf** out) {
  return Guard([&] {
    Require(path, "path");
    Require(out, "out");
    *out = new psz_atf{psz::ReadAtf(path)};
  });
}

psz_status psz_atf_save(const psz_atf* atf, const char* path) {
  return Guard([&] {
    Require(atf, "atf");
    Require(path, "path");
    psz::WriteAtf(atf->atf, path);
  });
}

void psz_atf_free(psz_atf* atf) { delete atf; }

psz_status psz_atf_info(const psz_atf* atf, size_t* points, size_t* speakers,
                        size_t* bins) {
  return Guard([&] {
    Require(atf, "atf");
    if (points != nullptr) *points = atf->atf.grid.size();
    if (speakers != nullptr) *speakers = atf->atf.speakers.size();
    if (bins != nullptr) *bins = atf->atf.freqs.size();
  });
}

psz_status psz_design_classic(const psz_atf* atf, const char* method,
                              double bz_x, double bz_y, double dz_x,
                              double dz_y, double radius,
                              const char* options_json, double* re,
                              double* im, size_t capacity) {
  return Guard([&] {
    Require(atf, "atf");
    Require(method, "method");
    psz::ClassicMethod m;
    if (std::strcmp(method, "pm") == 0) {
      m = psz::ClassicMethod::kPm;
    } else if (std::strcmp(method, "am") == 0) {
      m = psz::ClassicMethod::kAm;
    } else {
      throw psz::ConfigError("method must be \"pm\" or \"am\"");
    }
    if (!(radius > 0.0)) throw psz::ConfigError("radius must be positive");
    psz::ClassicOptions opts;
    if (options_json != nullptr) {
      opts = ParseJson(options_json).get<psz::ClassicOptions>();
    }
    const psz::ZonePair pair{{{bz_x, bz_y}, radius}, {{dz_x, dz_y}, radius}};
    CopyFilters(psz::DesignClassic(m, atf->atf, pair, opts).filters, re, im,
                capacity);
  });
}

psz_status psz_cmd_simulate(const char* config_json, const char* out_dir) {
  return RunCommand(&psz::app::Simulate, config_json, out_dir);
}

psz_status psz_cmd_train(const char* config_json, const char* out_dir) {
  return RunCommand(&psz::app::Train, config_json, out_dir);
}

psz_status psz_cmd_eval_map(const char* config_json, const char* out_dir) {
  return RunCommand(&psz::app::EvalMap, config_json, out_dir);
}

psz_status psz_cmd_compare(const char* config_json, const char* out_dir) {
  return RunCommand(&psz::app::Compare, config_json, out_dir);
}

psz_status psz_cmd_bench(const char* config_json, const char* out_dir) {
  return RunCommand(&psz::app::Bench, config_json, out_dir);
}

psz_status psz_cmd_gradcheck(const char* config_json, const char* out_dir) {
  return RunCommand(&psz::app::Gradcheck, config_json, out_dir);
}

psz_status psz_cmd_infer(const char* checkpoint, double bz_x, double bz_y,
                         double dz_x, double dz_y, const char* out_path,
                         const char* ir_csv, long ir_shift) {
  return Guard([&] {
    Require(checkpoint, "checkpoint");
    Require(out_path, "out_path");
    psz::app::InferRequest req;
    req.checkpoint = checkpoint;
    req.bz = {bz_x, bz_y};
    req.dz = {dz_x, dz_y};
    req.out_path = out_path;
    req.ir_csv = ir_csv != nullptr ? ir_csv : "";
    req.ir_shift = ir_shift;
    psz::app::Infer(req, MakeContext());
  });
}

}  // extern "C"
