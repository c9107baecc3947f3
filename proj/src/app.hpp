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

// Command orchestration behind the C API: JSON run configs in, data files
// and reports out. Every command validates its whole config before doing
// expensive work and writes a resolved-config snapshot next to its outputs.

#ifndef PSZ_SRC_APP_HPP_
#define PSZ_SRC_APP_HPP_

#include <functional>
#include <string>

#include "psz/json_io.hpp"

namespace psz::app {

using Logger = std::function<void(const std::string&)>;

struct Context {
  unsigned threads = 0;  // 0: PSZ_LAB_THREADS, then hardware
  Logger log;
};

void Simulate(const Json& config, const std::string& out_dir,
              const Context& ctx);
void Train(const Json& config, const std::string& out_dir, const Context& ctx);

struct InferRequest {
  std::string checkpoint;
  Point2 bz;
  Point2 dz;
  std::string out_path;   // PSZFLT1 file
  std::string ir_csv;     // optional impulse-response export
  long ir_shift = -1;     // < 0: n_fft / 2 + 1
};
void Infer(const InferRequest& req, const Context& ctx);

void EvalMap(const Json& config, const std::string& out_dir,
             const Context& ctx);
void Compare(const Json& config, const std::string& out_dir,
             const Context& ctx);
void Bench(const Json& config, const std::string& out_dir, const Context& ctx);
// Throws NumericalError when any check exceeds its tolerance.
void Gradcheck(const Json& config, const std::string& out_dir,
               const Context& ctx);

}  // namespace psz::app

#endif  // PSZ_SRC_APP_HPP_
