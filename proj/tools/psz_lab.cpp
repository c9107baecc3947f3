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

// psz_lab: command-line front end over the C API.
//
//   psz_lab [--threads N] [--quiet] <command> ...
//
// Exit status is the library's status code: 0 ok, 1 internal, 2 config,
// 3 domain, 4 numerical, 5 io, 6 format.

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "psz/psz.h"

namespace {

void PrintLine(const char* line, void*) {
  std::fprintf(stderr, "%s\n", line);
  std::fflush(stderr);
}

int Report(psz_status s) {
  if (s != PSZ_OK) {
    std::fprintf(stderr, "psz_lab: %s: %s\n", psz_status_name(s),
                 psz_last_error());
  }
  return static_cast<int>(s);
}

// Reads a run config; an empty path means "all defaults".
bool ReadConfig(const std::string& path, std::string* text) {
  if (path.empty()) {
    *text = "{}";
    return true;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) return false;
  std::ostringstream ss;
  ss << in.rdbuf();
  *text = ss.str();
  return static_cast<bool>(in) || in.eof();
}

struct JsonCommand {
  const char* name;
  const char* help;
  psz_status (*run)(const char*, const char*);
  bool config_required;
};

struct Parsed {
  std::string config;
  std::string out;
  CLI::App* app = nullptr;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Personal sound zone filter design lab"};
  cli.require_subcommand(1);
  unsigned threads = 0;
  bool quiet = false;
  cli.add_option("--threads", threads,
                 "Cap on worker threads (0: PSZ_LAB_THREADS, then hardware)");
  cli.add_flag("-q,--quiet", quiet, "Suppress progress output");

  const JsonCommand commands[] = {
      {"simulate", "Simulate anechoic and room ATF datasets",
       &psz_cmd_simulate, true},
      {"train", "Train a SANN model", &psz_cmd_train, true},
      {"eval-map", "Spatial IZI / IPI / NMSE maps for one method",
       &psz_cmd_eval_map, true},
      {"compare", "Per-frequency SANN vs PM vs AM curves", &psz_cmd_compare,
       true},
      {"bench", "Single-query timing of SANN inference and PM design",
       &psz_cmd_bench, false},
      {"gradcheck", "Finite-difference checks of the autodiff engine",
       &psz_cmd_gradcheck, false},
  };
  std::vector<Parsed> parsed(std::size(commands));
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    Parsed& p = parsed[i];
    p.app = cli.add_subcommand(commands[i].name, commands[i].help);
    auto* opt = p.app->add_option("-c,--config", p.config, "JSON run config");
    if (commands[i].config_required) opt->required();
    p.app->add_option("-o,--out", p.out, "Output directory")->required();
  }

  std::string checkpoint, out_path, ir_csv;
  std::vector<double> bz, dz;
  long ir_shift = -1;
  CLI::App* infer = cli.add_subcommand("infer", "Filters for one zone pair");
  infer->add_option("--checkpoint", checkpoint, "Model checkpoint")->required();
  infer->add_option("--bz", bz, "Bright-zone centre x y (m)")
      ->expected(2)
      ->required();
  infer->add_option("--dz", dz, "Dark-zone centre x y (m)")
      ->expected(2)
      ->required();
  infer->add_option("-o,--out", out_path, "Output filter file")->required();
  infer->add_option("--ir-csv", ir_csv, "Also export impulse responses");
  infer->add_option("--ir-shift", ir_shift,
                    "Circular delay of the exported IRs (default n_fft/2+1)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = cli.exit(e);
    return rc == 0 ? 0 : static_cast<int>(PSZ_ERR_CONFIG);
  }

  psz_set_threads(threads);
  psz_set_log_callback(quiet ? nullptr : &PrintLine, nullptr);

  if (infer->parsed()) {
    return Report(psz_cmd_infer(checkpoint.c_str(), bz[0], bz[1], dz[0],
                                dz[1], out_path.c_str(),
                                ir_csv.empty() ? nullptr : ir_csv.c_str(),
                                ir_shift));
  }
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    const Parsed& p = parsed[i];
    if (!p.app->parsed()) continue;
    std::string text;
    if (!ReadConfig(p.config, &text)) {
      std::fprintf(stderr, "psz_lab: io error: cannot read %s\n",
                   p.config.c_str());
      return static_cast<int>(PSZ_ERR_IO);
    }
    return Report(commands[i].run(text.c_str(), p.out.c_str()));
  }
  return static_cast<int>(PSZ_ERR_INTERNAL);
}
