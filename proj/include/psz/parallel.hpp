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

#ifndef PSZ_PARALLEL_HPP_
#define PSZ_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace psz {

// 0 means "no explicit cap": falls back to PSZ_LAB_THREADS, then to the
// hardware concurrency. Always returns at least 1.
unsigned ResolveThreads(unsigned requested);

// Runs body(i) for i in [0, n) on up to `threads` workers with a static
// interleaved partition. The first exception thrown by any worker is
// rethrown on the calling thread after all workers have joined.
void ParallelFor(std::size_t n, unsigned threads,
                 const std::function<void(std::size_t)>& body);

}  // namespace psz

#endif  // PSZ_PARALLEL_HPP_
