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

#include "psz/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "psz/error.hpp"
#include "psz/target.hpp"

namespace psz {
namespace {

constexpr int kMaxPairDraws = 1000;

bool SameFreqs(const FrequencyGrid& a, const FrequencyGrid& b) {
  return a.sample_rate == b.sample_rate && a.n_fft == b.n_fft &&
         a.bin_lo == b.bin_lo && a.bin_hi == b.bin_hi;
}

bool SameSpeakers(const SpeakerArray& a, const SpeakerArray& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const Point3& p = a.positions[i];
    const Point3& q = b.positions[i];
    if (p.x != q.x || p.y != q.y || p.z != q.z) return false;
  }
  return true;
}

// Rows of `atf`, with measured grid points taken from the ground truth.
AtfBlock FetchRows(const TrainingData& data, const AtfTensor& atf,
                   const std::vector<std::size_t>& ids) {
  if (!data.truth) return atf.Rows(ids);
  const std::size_t stride = atf.data.speakers * atf.data.bins;
  AtfBlock block(ids.size(), atf.data.speakers, atf.data.bins);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const AtfTensor& src = data.measured[ids[i]] ? *data.truth : atf;
    std::copy_n(src.data.values.begin() +
                    static_cast<std::ptrdiff_t>(ids[i] * stride),
                stride,
                block.values.begin() + static_cast<std::ptrdiff_t>(i * stride));
  }
  return block;
}

TrainingSample MakeSample(Rng& rng, const SamplingGrid& grid,
                          const RenderingArea& area, double radius,
                          const std::vector<std::uint8_t>& measured,
                          std::size_t& resampled) {
  for (int attempt = 0; attempt < kMaxPairDraws; ++attempt) {
    TrainingSample s;
    s.pair = SampleZonePair(rng, area, radius);
    try {
      s.bz_ids = SelectControlPoints(grid, s.pair.bz);
      s.dz_ids = SelectControlPoints(grid, s.pair.dz);
    } catch (const DomainError&) {
      ++resampled;
      continue;
    }
    s.overlap = ZonesOverlap(s.pair);
    for (std::size_t id : s.dz_ids) {
      if (!measured.empty() && measured[id]) s.dz_is_measured = true;
    }
    return s;
  }
  throw DomainError("could not draw a zone pair with control points in " +
                    std::to_string(kMaxPairDraws) + " attempts");
}

struct PassStats {
  double loss = 0.0;
  double terms[4] = {};
  std::size_t count = 0;

  void Add(const LossTerms& t) {
    loss += t.total.item();
    terms[0] += t.l1;
    terms[1] += t.l2;
    terms[2] += t.l3;
    terms[3] += t.l4;
    ++count;
  }
  void Finish() {
    if (count == 0) return;
    const double inv = 1.0 / static_cast<double>(count);
    loss *= inv;
    for (double& v : terms) v *= inv;
  }
};

std::string DescribePair(const ZonePair& p) {
  std::ostringstream os;
  os << "BZ (" << p.bz.center.x << ", " << p.bz.center.y << "), DZ ("
     << p.dz.center.x << ", " << p.dz.center.y << ")";
  return os.str();
}

class Trainer {
 public:
  Trainer(SannModel& model, const TrainConfig& config, const TrainingData& data)
      : model_(model),
        config_(config),
        data_(data),
        kernel_(MakeCompactnessKernel(model.config().freqs.n_fft,
                                      model.config().band_lo_hz,
                                      model.config().band_hi_hz,
                                      model.config().freqs.sample_rate)),
        freqs_hz_(model.config().freqs.bin_freqs()),
        rng_(config.seed) {}

  TrainResult Run(const std::function<void(const EpochRecord&)>& on_epoch) {
    TrainResult result;
    const SamplingGrid& grid = data_.train.front().grid;
    for (std::size_t i = 0; i < config_.n_samples; ++i) {
      samples_.push_back(MakeSample(rng_, grid, model_.config().area,
                                    config_.zone_radius, data_.measured,
                                    result.resampled_pairs));
    }
    const std::size_t n_train = config_.n_train();
    std::vector<std::size_t> order(n_train);
    for (std::size_t i = 0; i < n_train; ++i) order[i] = i;
    std::vector<std::size_t> val_ids;
    for (std::size_t i = n_train; i < samples_.size(); ++i) val_ids.push_back(i);

    ad::Adam adam(model_.Parameters(), {config_.lr});
    auto best = model_.SnapshotWeights();

    for (std::size_t epoch = 0; epoch <= config_.epochs; ++epoch) {
      const auto start = std::chrono::steady_clock::now();
      AssignRooms();
      PassStats train_stats;
      if (epoch == 0) {
        ad::NoGradGuard no_grad;
        for (std::size_t b = 0; b < n_train; b += config_.batch_size) {
          RunBatch(order, b, epoch, train_stats, nullptr);
        }
      } else {
        std::shuffle(order.begin(), order.end(), rng_);
        for (std::size_t b = 0; b < n_train; b += config_.batch_size) {
          RunBatch(order, b, epoch, train_stats, &adam);
        }
      }
      train_stats.Finish();
      const PassStats val_stats = Validate(val_ids);

      EpochRecord rec;
      rec.epoch = epoch;
      rec.train_loss = train_stats.loss;
      rec.val_loss = val_stats.loss;
      std::copy_n(train_stats.terms, 4, rec.train_terms);
      std::copy_n(val_stats.terms, 4, rec.val_terms);
      rec.seconds = std::chrono::duration<double>(
                        std::chrono::steady_clock::now() - start)
                        .count();
      result.history.push_back(rec);
      if (epoch == 0 || rec.val_loss < result.best_val_loss) {
        result.best_val_loss = rec.val_loss;
        result.best_epoch = epoch;
        best = model_.SnapshotWeights();
      }
      if (on_epoch) on_epoch(rec);
    }
    model_.RestoreWeights(best);
    for (std::size_t id : val_ids) result.validation.push_back(samples_[id]);
    return result;
  }

 private:
  void AssignRooms() {
    rooms_.assign(samples_.size(), 0);
    if (data_.train.size() < 2) return;
    std::uniform_int_distribution<std::size_t> pick(0, data_.train.size() - 1);
    for (std::size_t i = 0; i < config_.n_train(); ++i) rooms_[i] = pick(rng_);
  }

  LossTerms SampleLoss(const TrainingSample& s, const AtfTensor& atf,
                       const ComplexTensor& g, bool perturb) {
    AtfBlock hb = FetchRows(data_, atf, s.bz_ids);
    AtfBlock hd = FetchRows(data_, atf, s.dz_ids);
    std::vector<double> target = TargetMagnitude(s.pair.bz.center.x, hb);
    if (perturb && config_.augmentation) {
      hb = PerturbAtf(hb, freqs_hz_, *config_.augmentation, rng_);
      hd = PerturbAtf(hd, freqs_hz_, *config_.augmentation, rng_);
    }
    const ad::Tensor t = ad::Tensor::Constant(
        {hb.rows, hb.bins}, std::move(target));
    return TotalLoss(g, AtfToTensor(hb), AtfToTensor(hd), t, config_.weights,
                     model_.config().freqs, kernel_, s.overlap,
                     s.dz_is_measured);
  }

  void RunBatch(const std::vector<std::size_t>& order, std::size_t begin,
                std::size_t epoch, PassStats& stats, ad::Adam* adam) {
    const std::size_t end = std::min(order.size(), begin + config_.batch_size);
    std::vector<ZonePair> pairs;
    for (std::size_t i = begin; i < end; ++i) pairs.push_back(samples_[order[i]].pair);
    const ad::Tensor out = ForwardBatch(model_, pairs);
    const std::size_t L = model_.config().speakers.size();
    const std::size_t N = model_.config().freqs.size();
    ad::Tensor sum;
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      const TrainingSample& s = samples_[order[begin + b]];
      const LossTerms terms = SampleLoss(s, data_.train[rooms_[order[begin + b]]],
                                         SplitOutput(out, b, L, N), true);
      if (!std::isfinite(terms.total.item())) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " for sample "
            << order[begin + b] << " (" << DescribePair(s.pair) << "): L1 "
            << terms.l1 << ", L2 " << terms.l2 << ", L3 " << terms.l3
            << ", L4 " << terms.l4;
        throw NumericalError(msg.str());
      }
      stats.Add(terms);
      sum = sum.defined() ? ad::Add(sum, terms.total) : terms.total;
    }
    if (adam == nullptr) return;
    const ad::Tensor loss = ad::Scale(sum, 1.0 / static_cast<double>(pairs.size()));
    adam->ZeroGrad();
    ad::Backward(loss);
    adam->Step();
  }

  PassStats Validate(const std::vector<std::size_t>& ids) {
    ad::NoGradGuard no_grad;
    PassStats stats;
    const std::size_t L = model_.config().speakers.size();
    const std::size_t N = model_.config().freqs.size();
    for (std::size_t begin = 0; begin < ids.size(); begin += config_.batch_size) {
      const std::size_t end = std::min(ids.size(), begin + config_.batch_size);
      std::vector<ZonePair> pairs;
      for (std::size_t i = begin; i < end; ++i) pairs.push_back(samples_[ids[i]].pair);
      const ad::Tensor out = ForwardBatch(model_, pairs);
      for (std::size_t b = 0; b < pairs.size(); ++b) {
        const TrainingSample& s = samples_[ids[begin + b]];
        const LossTerms terms =
            SampleLoss(s, data_.validation, SplitOutput(out, b, L, N), false);
        if (!std::isfinite(terms.total.item())) {
          throw NumericalError("non-finite validation loss for " +
                               DescribePair(s.pair));
        }
        stats.Add(terms);
      }
    }
    stats.Finish();
    return stats;
  }

  SannModel& model_;
  const TrainConfig& config_;
  const TrainingData& data_;
  CompactnessKernel kernel_;
  std::vector<double> freqs_hz_;
  Rng rng_;
  std::vector<TrainingSample> samples_;
  std::vector<std::size_t> rooms_;
};

}  // namespace

const char* DatasetKindName(DatasetKind k) {
  switch (k) {
    case DatasetKind::kAnechoic: return "anechoic";
    case DatasetKind::kRooms: return "rooms";
    case DatasetKind::kMixed: return "mixed";
  }
  return "unknown";
}

DatasetKind ParseDatasetKind(const std::string& name) {
  if (name == "anechoic") return DatasetKind::kAnechoic;
  if (name == "rooms") return DatasetKind::kRooms;
  if (name == "mixed") return DatasetKind::kMixed;
  throw ConfigError("unknown condition '" + name +
                    "' (expected anechoic, rooms or mixed)");
}

void TrainConfig::Validate() const {
  if (n_val < 1 || n_val >= n_samples) {
    throw ConfigError("need 1 <= n_val < n_samples");
  }
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(zone_radius > 0.0)) throw ConfigError("zone_radius must be positive");
  if (!(grid_resolution > 0.0)) {
    throw ConfigError("grid_resolution must be positive");
  }
  weights.Validate();
  if (augmentation) augmentation->Validate();
  if (condition != DatasetKind::kAnechoic) {
    if (rooms.count < 1) throw ConfigError("rooms.count must be >= 1");
    if (!(rooms.rt60 > 0.0)) throw ConfigError("rooms.rt60 must be positive");
    if (rooms.ir_len < 64) throw ConfigError("rooms.ir_len is too short");
  }
  if (condition == DatasetKind::kMixed) {
    if (!(mixed.spacing > 0.0)) {
      throw ConfigError("measurement spacing must be positive");
    }
    mixed.region.Validate();
    if (!(mixed.radius > 0.0)) {
      throw ConfigError("measurement radius must be positive");
    }
  }
}

ZonePair SampleZonePair(Rng& rng, const RenderingArea& area, double radius) {
  std::uniform_real_distribution<double> ux(area.x_min, area.x_max);
  std::uniform_real_distribution<double> uy(area.y_min, area.y_max);
  ZonePair p;
  p.bz.radius = p.dz.radius = radius;
  p.bz.center.x = ux(rng);
  p.bz.center.y = uy(rng);
  p.dz.center.x = ux(rng);
  p.dz.center.y = uy(rng);
  return p;
}

std::vector<Point2> MeasurementCenters(const MixedSpec& spec) {
  if (!(spec.spacing > 0.0)) {
    throw ConfigError("measurement spacing must be positive");
  }
  spec.region.Validate();
  std::vector<Point2> centers;
  if (!std::isfinite(spec.spacing)) return centers;
  const double cx = 0.5 * (spec.region.x_min + spec.region.x_max);
  const double cy = 0.5 * (spec.region.y_min + spec.region.y_max);
  const long nx = static_cast<long>(
      std::floor(0.5 * spec.region.width() / spec.spacing + 1e-9));
  const long ny = static_cast<long>(
      std::floor(0.5 * spec.region.depth() / spec.spacing + 1e-9));
  for (long j = -ny; j <= ny; ++j) {
    for (long i = -nx; i <= nx; ++i) {
      centers.push_back({cx + static_cast<double>(i) * spec.spacing,
                         cy + static_cast<double>(j) * spec.spacing});
    }
  }
  return centers;
}

std::vector<std::uint8_t> MeasuredFlags(const SamplingGrid& grid,
                                        const MixedSpec& spec) {
  const auto centers = MeasurementCenters(spec);
  std::vector<std::uint8_t> flags(grid.size(), 0);
  for (std::size_t id = 0; id < grid.size(); ++id) {
    for (const Point2& c : centers) {
      if (Distance(grid.point(id), c) <= spec.radius + 1e-9) {
        flags[id] = 1;
        break;
      }
    }
  }
  return flags;
}

void TrainingData::Validate(const SannConfig& model) const {
  if (train.empty()) throw ConfigError("training data holds no ATF sets");
  auto check = [&](const AtfTensor& t, const char* what) {
    if (!SameFreqs(t.freqs, model.freqs)) {
      throw ConfigError(std::string(what) +
                        " ATFs use a different frequency grid than the model");
    }
    if (!SameSpeakers(t.speakers, model.speakers)) {
      throw ConfigError(std::string(what) +
                        " ATFs use different speakers than the model");
    }
    const SamplingGrid& g = train.front().grid;
    if (t.grid.size() != g.size() || t.grid.rows() != g.rows() ||
        t.grid.resolution() != g.resolution()) {
      throw ConfigError(std::string(what) + " ATFs use a different grid");
    }
    if (t.data.values.size() != t.grid.size() * t.speakers.size() *
                                    t.freqs.size()) {
      throw ConfigError(std::string(what) + " ATF payload has the wrong size");
    }
  };
  for (const AtfTensor& t : train) check(t, "training");
  check(validation, "validation");
  if (truth) {
    check(*truth, "ground-truth");
    if (measured.size() != truth->grid.size()) {
      throw ConfigError("measured flags do not cover the grid");
    }
  }
}

TrainingData BuildTrainingData(const TrainConfig& config,
                               const SannConfig& model) {
  config.Validate();
  model.Validate();
  const SamplingGrid grid = MakeGrid(model.area, config.grid_resolution);
  TrainingData data;
  if (config.condition == DatasetKind::kAnechoic) {
    data.train.push_back(SimulateAnechoic(grid, model.speakers, model.freqs));
    data.validation = data.train.front();
    return data;
  }

  const SystemExtent extent =
      ComputeSystemExtent(model.speakers, model.area, kDefaultListeningHeight);
  IsmOptions opts;
  opts.max_order = config.rooms.max_order;
  opts.ir_len = config.rooms.ir_len;
  Rng rng(config.seed ^ 0x5eed0f0a70037ULL);
  auto simulate = [&](const RoomConfig& room, IsmOptions o) {
    if (config.rooms.calibrate_rt60) {
      o.reflection = CalibrateReflection(room, model.speakers, model.area,
                                         kDefaultListeningHeight,
                                         model.freqs.sample_rate, o);
    }
    return SimulateRoom(room, grid, model.speakers, model.freqs, o,
                        kDefaultListeningHeight, config.threads);
  };
  for (std::size_t i = 0; i < config.rooms.count; ++i) {
    data.train.push_back(
        simulate(SampleRoomConfig(rng, config.rooms.rt60, extent), opts));
  }
  if (config.condition == DatasetKind::kRooms) {
    data.validation =
        simulate(SampleRoomConfig(rng, config.rooms.rt60, extent), opts);
    return data;
  }

  Rng truth_rng(config.mixed.truth_seed);
  const RoomConfig truth_room =
      SampleRoomConfig(truth_rng, config.rooms.rt60, extent);
  IsmOptions truth_opts = opts;
  truth_opts.max_order =
      (opts.max_order < 0 ? DefaultMaxOrder(truth_room) : opts.max_order) + 4;
  AtfTensor truth = simulate(truth_room, truth_opts);
  truth.condition = Condition::kPseudoMeasured;
  data.measured = MeasuredFlags(grid, config.mixed);
  data.validation = truth;
  data.truth = std::move(truth);
  return data;
}

LossTerms EvaluateSample(const SannModel& model, const TrainingSample& sample,
                         const AtfBlock& hb, const AtfBlock& hd,
                         const std::vector<double>& target,
                         const LossWeights& weights,
                         const CompactnessKernel& kernel) {
  ad::NoGradGuard no_grad;
  const ZonePair pairs[] = {sample.pair};
  const ad::Tensor out = ForwardBatch(model, pairs);
  const ComplexTensor g = SplitOutput(out, 0, model.config().speakers.size(),
                                      model.config().freqs.size());
  return TotalLoss(g, AtfToTensor(hb), AtfToTensor(hd),
                   ad::Tensor::Constant({hb.rows, hb.bins}, target), weights,
                   model.config().freqs, kernel, sample.overlap,
                   sample.dz_is_measured);
}

TrainResult Train(SannModel& model, const TrainConfig& config,
                  const TrainingData& data,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  config.Validate();
  data.Validate(model.config());
  Trainer trainer(model, config, data);
  return trainer.Run(on_epoch);
}

void WriteHistoryCsv(const std::vector<EpochRecord>& history,
                     const std::string& path) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot open " + path + " for writing");
  os << "epoch,train_loss,val_loss,train_l1,train_l2,train_l3,train_l4,"
        "val_l1,val_l2,val_l3,val_l4\n";
  os.precision(17);
  for (const EpochRecord& r : history) {
    os << r.epoch << ',' << r.train_loss << ',' << r.val_loss;
    for (double v : r.train_terms) os << ',' << v;
    for (double v : r.val_terms) os << ',' << v;
    os << '\n';
  }
  if (!os) throw IoError("write to " + path + " failed");
}

}  // namespace psz
