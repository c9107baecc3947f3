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

// JSON mappings for configuration records, found by nlohmann::json through
// ADL. Readers fill absent keys from the C++ defaults and reject unknown
// keys with ConfigError.

#ifndef PSZ_JSON_IO_HPP_
#define PSZ_JSON_IO_HPP_

#include <initializer_list>
#include <string>

#include "json.hpp"
#include "psz/acoustics.hpp"
#include "psz/geometry.hpp"
#include "psz/augment.hpp"
#include "psz/classic.hpp"
#include "psz/nnloss.hpp"
#include "psz/sann.hpp"
#include "psz/train.hpp"

namespace psz {

using Json = nlohmann::json;

// Throws ConfigError naming `where` if j has a key outside `allowed`, or is
// not an object.
void CheckKeys(const Json& j, std::initializer_list<const char*> allowed,
               const std::string& where);

void to_json(Json& j, const Point2& p);
void from_json(const Json& j, Point2& p);
void to_json(Json& j, const Point3& p);
void from_json(const Json& j, Point3& p);
void to_json(Json& j, const RenderingArea& a);
void from_json(const Json& j, RenderingArea& a);
void to_json(Json& j, const FrequencyGrid& f);
void from_json(const Json& j, FrequencyGrid& f);
void to_json(Json& j, const SpeakerArray& s);
void from_json(const Json& j, SpeakerArray& s);
void to_json(Json& j, const RoomConfig& r);
void from_json(const Json& j, RoomConfig& r);
void to_json(Json& j, const Zone& z);
void from_json(const Json& j, Zone& z);
void to_json(Json& j, const SannConfig& c);
void from_json(const Json& j, SannConfig& c);
void to_json(Json& j, const LossWeights& w);
void from_json(const Json& j, LossWeights& w);
// snr_db = +inf is written as null.
void to_json(Json& j, const PerturbParams& p);
void from_json(const Json& j, PerturbParams& p);
void to_json(Json& j, const RoomsSpec& r);
void from_json(const Json& j, RoomsSpec& r);
// spacing = +inf is written as null.
void to_json(Json& j, const MixedSpec& m);
void from_json(const Json& j, MixedSpec& m);
void to_json(Json& j, const TrainConfig& c);
void from_json(const Json& j, TrainConfig& c);
void to_json(Json& j, const ClassicOptions& o);
void from_json(const Json& j, ClassicOptions& o);

// Hex FNV-1a of the compact dump; stable for identical configs.
std::string ConfigHash(const Json& j);

}  // namespace psz

#endif  // PSZ_JSON_IO_HPP_
