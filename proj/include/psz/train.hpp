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

// Datasets and the training loop of the neural design.

#ifndef PSZ_TRAIN_HPP_
#define PSZ_TRAIN_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "psz/acoustics.hpp"
#include "psz/augment.hpp"
#include "psz/geometry.hpp"
#include "psz/nnloss.hpp"
#include "psz/sann.hpp"

namespace psz {

enum class DatasetKind { kAnechoic, kRooms, kMixed };

const char* DatasetKindName(DatasetKind k);
DatasetKind ParseDatasetKind(const std::string& name);  // ConfigError if unknown

struct RoomsSpec {
  std::size_t count = 50;  // training rooms; one more is used for validation
  double rt60 = 0.24;
  int max_order = -1;      // < 0 selects DefaultMaxOrder
  std::size_t ir_len = 16384;
  // Fit each room's wall reflection to hit rt60 (see CalibrateReflection).
  bool calibrate_rt60 = true;
};

// Ground-truth transfer functions replace the simulated ones inside circles
// centred on a square lattice of the given spacing, anchored at the centre
// of the measurement region. An infinite spacing selects no circles.
struct MixedSpec {
  double spacing = 0.2;
  RenderingArea region{-0.84, 0.84, 0.9, 1.3};
  double radius = 0.1;
  std::uint64_t truth_seed = 7;
};

struct TrainConfig {
  std::size_t n_samples = 10000;
  std::size_t n_val = 2000;
  std::size_t batch_size = 32;
  std::size_t epochs = 400;
  double lr = 1e-3;
  double zone_radius = 0.1;
  double grid_resolution = 0.05;
  LossWeights weights;
  std::optional<PerturbParams> augmentation;
  DatasetKind condition = DatasetKind::kAnechoic;
  RoomsSpec rooms;
  MixedSpec mixed;
  std::uint64_t seed = 0;
  unsigned threads = 0;

  std::size_t n_train() const { return n_samples - n_val; }
  void Validate() const;
};

// Both centres i.i.d. uniform over the area, drawn bz.x, bz.y, dz.x, dz.y.
ZonePair SampleZonePair(Rng& rng, const RenderingArea& area,
                        double radius = 0.1);

std::vector<Point2> MeasurementCenters(const MixedSpec& spec);
// 1 where a grid point lies within radius of some measurement centre.
std::vector<std::uint8_t> MeasuredFlags(const SamplingGrid& grid,
                                        const MixedSpec& spec);

struct TrainingData {
  std::vector<AtfTensor> train;  // the anechoic set or one per training room
  AtfTensor validation;
  std::optional<AtfTensor> truth;        // mixed condition only
  std::vector<std::uint8_t> measured;    // per grid point, mixed only

  // Throws ConfigError if the tensors disagree with each other or with the
  // model's speakers and frequency grid.
  void Validate(const SannConfig& model) const;
};

// Simulates everything a TrainConfig asks for on the model's area, speakers
// and frequency grid.
TrainingData BuildTrainingData(const TrainConfig& config,
                               const SannConfig& model);

// One training example after control-point selection.
struct TrainingSample {
  ZonePair pair;
  std::vector<std::size_t> bz_ids;
  std::vector<std::size_t> dz_ids;
  bool overlap = false;
  bool dz_is_measured = false;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the untrained model
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_terms[4] = {};
  double val_terms[4] = {};
  double seconds = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  std::size_t resampled_pairs = 0;  // pairs redrawn for empty zones
  std::vector<TrainingSample> validation;
};

// Draws n_samples pairs once, splits them by index (the last n_val go to
// validation), and runs epochs of Adam over shuffled batches. Rooms are
// reassigned uniformly per sample every epoch. The model ends holding the
// weights with the lowest validation loss. Throws NumericalError on a
// non-finite loss or gradient.
TrainResult Train(SannModel& model, const TrainConfig& config,
                  const TrainingData& data,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

// Loss of one sample on given ATFs, without gradient recording.
LossTerms EvaluateSample(const SannModel& model, const TrainingSample& sample,
                         const AtfBlock& hb, const AtfBlock& hd,
                         const std::vector<double>& target,
                         const LossWeights& weights,
                         const CompactnessKernel& kernel);

void WriteHistoryCsv(const std::vector<EpochRecord>& history,
                     const std::string& path);

}  // namespace psz

#endif  // PSZ_TRAIN_HPP_
