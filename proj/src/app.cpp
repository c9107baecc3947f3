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

#include "app.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>

#include "psz/classic.hpp"
#include "psz/error.hpp"
#include "psz/eval.hpp"
#include "psz/io.hpp"
#include "psz/nnloss.hpp"
#include "psz/sann.hpp"
#include "psz/target.hpp"
#include "psz/train.hpp"

namespace psz::app {
namespace {

constexpr const char* kVersion = "0.1.0";
// Reported next to the measured times; from the original CPU measurements.
constexpr double kReferenceNnMs = 0.65;
constexpr double kReferencePmMs = 8.4;

void Log(const Context& ctx, const std::string& msg) {
  if (ctx.log) ctx.log(msg);
}

std::string Join(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void EnsureDir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir);
  }
}

void WriteSnapshot(const std::string& path, const char* command,
                   const Json& resolved) {
  WriteJsonFile({{"command", command},
                 {"version", kVersion},
                 {"config_hash", ConfigHash(resolved)},
                 {"config", resolved}},
                path);
}

// Runs a parser, turning JSON type errors into ConfigError.
template <typename F>
auto Parse(const char* where, F&& f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("bad ") + where + " config: " + e.what());
  }
}

template <typename T>
T Opt(const Json& j, const char* key, T fallback) {
  return j.contains(key) && !j.at(key).is_null() ? j.at(key).get<T>() : fallback;
}

bool SameSpeakers(const SpeakerArray& a, const SpeakerArray& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.positions[i].x != b.positions[i].x ||
        a.positions[i].y != b.positions[i].y ||
        a.positions[i].z != b.positions[i].z) {
      return false;
    }
  }
  return true;
}

void CheckModelMatchesAtf(const SannConfig& model, const AtfTensor& atf) {
  const FrequencyGrid& a = model.freqs;
  const FrequencyGrid& b = atf.freqs;
  if (a.sample_rate != b.sample_rate || a.n_fft != b.n_fft ||
      a.bin_lo != b.bin_lo || a.bin_hi != b.bin_hi) {
    throw ConfigError("model and ATF file use different frequency grids");
  }
  if (!SameSpeakers(model.speakers, atf.speakers)) {
    throw ConfigError("model and ATF file use different speakers");
  }
}

FilterSource ClassicSource(ClassicMethod method, const AtfTensor& atf,
                           const ClassicOptions& opts) {
  return [method, &atf, opts](const ZonePair& pair) {
    return DesignClassic(method, atf, pair, opts).filters;
  };
}

FilterSource SannSource(const SannModel& model) {
  return [&model](const ZonePair& pair) { return Forward(model, pair); };
}

std::vector<Point3> SystemPoints(const SamplingGrid& grid,
                                 const SpeakerArray& speakers, double height) {
  std::vector<Point3> pts = speakers.positions;
  const RenderingArea& a = grid.area();
  for (double x : {a.x_min, a.x_max}) {
    for (double y : {a.y_min, a.y_max}) pts.push_back({x, y, height});
  }
  return pts;
}

// ---- simulate ------------------------------------------------------------

struct SimulateConfig {
  std::uint64_t seed = 0;
  RenderingArea area;
  double resolution = 0.05;
  double height = kDefaultListeningHeight;
  SpeakerArray speakers = SpeakerArray::DefaultLinear();
  FrequencyGrid freqs;
  bool anechoic = true;
  RoomsSpec random_rooms{0, 0.24, -1, 16384, true};
  std::vector<RoomConfig> rooms;
};

void from_json(const Json& j, SimulateConfig& c) {
  CheckKeys(j,
            {"seed", "area", "resolution", "height", "speakers", "freqs",
             "anechoic", "random_rooms", "rooms"},
            "simulate");
  c.seed = Opt(j, "seed", c.seed);
  c.area = Opt(j, "area", c.area);
  c.resolution = Opt(j, "resolution", c.resolution);
  c.height = Opt(j, "height", c.height);
  c.speakers = Opt(j, "speakers", c.speakers);
  c.freqs = Opt(j, "freqs", c.freqs);
  c.anechoic = Opt(j, "anechoic", c.anechoic);
  c.random_rooms = Opt(j, "random_rooms", c.random_rooms);
  c.rooms = Opt(j, "rooms", c.rooms);
}

void to_json(Json& j, const SimulateConfig& c) {
  j = {{"seed", c.seed},         {"area", c.area},
       {"resolution", c.resolution}, {"height", c.height},
       {"speakers", c.speakers}, {"freqs", c.freqs},
       {"anechoic", c.anechoic}, {"random_rooms", c.random_rooms},
       {"rooms", c.rooms}};
}

// ---- train ---------------------------------------------------------------

struct TrainRun {
  SannConfig model;
  TrainConfig train;
  std::uint64_t init_seed = 0;
  std::string init_checkpoint;
};

void from_json(const Json& j, TrainRun& r) {
  CheckKeys(j, {"model", "train", "init_seed", "init_checkpoint"}, "train run");
  r.model = Opt(j, "model", r.model);
  r.train = Opt(j, "train", r.train);
  r.init_seed = Opt(j, "init_seed", r.init_seed);
  r.init_checkpoint = Opt(j, "init_checkpoint", r.init_checkpoint);
}

void to_json(Json& j, const TrainRun& r) {
  j = {{"model", r.model},
       {"train", r.train},
       {"init_seed", r.init_seed},
       {"init_checkpoint", r.init_checkpoint}};
}

// ---- gradient checks -----------------------------------------------------

struct CheckOutcome {
  std::string name;
  ad::GradCheckReport report;
};

ad::Tensor RandomParam(Rng& rng, ad::Shape shape) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::vector<double> v(ad::NumElements(shape));
  for (double& x : v) x = n(rng);
  return ad::Tensor::Parameter(std::move(shape), std::move(v));
}

CheckOutcome CheckPrimitives(Rng& rng, double h) {
  const std::vector<ad::Tensor> in = {RandomParam(rng, {3, 4}),
                                      RandomParam(rng, {4, 5}),
                                      RandomParam(rng, {5})};
  auto f = [](const std::vector<ad::Tensor>& p) {
    using namespace ad;
    const Tensor z = Add(MatMul(p[0], p[1]), p[2]);           // [3, 5]
    const Tensor a = Mul(Relu(z), Sin(z));
    const Tensor b = Sub(Cos(z), Scale(Square(z), 0.3));
    const Tensor c = Sqrt(AddConstant(Square(a), 0.5));
    const Tensor d = MaxWithConstant(b, -0.2);
    const std::size_t rows[] = {2, 0, 2};
    const std::size_t cols[] = {4, 1};
    const Tensor e = Concat({GatherRows(c, rows), d}, 0);     // [6, 5]
    const Tensor g = Gather(e, 1, cols);                      // [6, 2]
    const Tensor s = SumAxis(Reshape(e, {2, 3, 5}), 1);       // [2, 5]
    return Add(Mean(Mul(g, g)), Add(Sum(s), Mean(Mul(e, p[2]))));
  };
  return {"primitives", ad::CheckGradients(f, in, h)};
}

CheckOutcome CheckIdft(Rng& rng, double h) {
  const std::size_t n = 64;
  const std::vector<ad::Tensor> in = {RandomParam(rng, {2, n}),
                                      RandomParam(rng, {2, n})};
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<double> wv(n);
  for (double& v : wv) v = nd(rng);
  const ad::Tensor w = ad::Tensor::Constant({n}, std::move(wv));
  auto f = [&w](const std::vector<ad::Tensor>& p) {
    const ad::Tensor x = ad::LinearIdft(p[0], p[1]);
    return ad::Add(ad::Sum(ad::Mul(x, w)), ad::Sum(ad::Square(x)));
  };
  return {"linear_idft", ad::CheckGradients(f, in, h)};
}

CheckOutcome CheckLossPipeline(std::uint64_t seed, double h) {
  SannConfig cfg;
  cfg.hidden = {16};
  cfg.freqs = {48000, 256, 1, 8};
  SannModel model(cfg, seed);
  const SamplingGrid grid = MakeGrid(cfg.area, 0.25);
  const AtfTensor atf = SimulateAnechoic(grid, cfg.speakers, cfg.freqs);
  const CompactnessKernel kernel = MakeCompactnessKernel(
      cfg.freqs.n_fft, cfg.band_lo_hz, cfg.band_hi_hz, cfg.freqs.sample_rate);
  LossWeights weights;
  weights.g_max = 0.02;  // keeps the gain penalty active
  const std::vector<ZonePair> pairs = {{{{-0.5, 1.0}, 0.3}, {{0.5, 1.5}, 0.3}},
                                       {{{0.25, 1.25}, 0.3}, {{0.3, 1.2}, 0.3}}};
  struct Prepared {
    ComplexTensor hb, hd;
    ad::Tensor target;
    bool overlap;
  };
  std::vector<Prepared> prep;
  for (const ZonePair& p : pairs) {
    const AtfBlock hb = atf.Rows(SelectControlPoints(grid, p.bz));
    const AtfBlock hd = atf.Rows(SelectControlPoints(grid, p.dz));
    prep.push_back({AtfToTensor(hb), AtfToTensor(hd),
                    ad::Tensor::Constant({hb.rows, hb.bins},
                                         TargetMagnitude(p.bz.center.x, hb)),
                    ZonesOverlap(p)});
  }
  auto f = [&](const std::vector<ad::Tensor>&) {
    const ad::Tensor out = ForwardBatch(model, pairs);
    ad::Tensor total;
    for (std::size_t b = 0; b < pairs.size(); ++b) {
      const ComplexTensor g = SplitOutput(out, b, cfg.speakers.size(),
                                          cfg.freqs.size());
      const LossTerms t = TotalLoss(g, prep[b].hb, prep[b].hd, prep[b].target,
                                    weights, cfg.freqs, kernel,
                                    prep[b].overlap, b == 1);
      total = total.defined() ? ad::Add(total, t.total) : t.total;
    }
    return ad::Scale(total, 0.5);
  };
  return {"loss_pipeline", ad::CheckGradients(f, model.Parameters(), h)};
}

}  // namespace

void Simulate(const Json& config, const std::string& out_dir,
              const Context& ctx) {
  const SimulateConfig cfg =
      Parse("simulate", [&] { return config.get<SimulateConfig>(); });
  cfg.speakers.Validate();
  cfg.freqs.Validate();
  const SamplingGrid grid = MakeGrid(cfg.area, cfg.resolution);
  if (!cfg.anechoic && cfg.random_rooms.count == 0 && cfg.rooms.empty()) {
    throw ConfigError("nothing to simulate: enable anechoic or list rooms");
  }
  if (cfg.random_rooms.count > 0 && !(cfg.random_rooms.rt60 > 0.0)) {
    throw ConfigError("random_rooms.rt60 must be positive");
  }
  const auto system = SystemPoints(grid, cfg.speakers, cfg.height);
  std::vector<RoomConfig> rooms = cfg.rooms;
  for (const RoomConfig& room : rooms) {
    for (const Point3& p : system) {
      if (!room.Contains(room.ToRoom(p))) {
        throw DomainError("the loudspeakers and rendering area do not fit "
                          "inside a listed room");
      }
    }
  }
  Rng rng(cfg.seed);
  const SystemExtent extent =
      ComputeSystemExtent(cfg.speakers, cfg.area, cfg.height);
  for (std::size_t i = 0; i < cfg.random_rooms.count; ++i) {
    rooms.push_back(SampleRoomConfig(rng, cfg.random_rooms.rt60, extent));
  }
  EnsureDir(out_dir);
  WriteSnapshot(Join(out_dir, "config.resolved.json"), "simulate", cfg);

  if (cfg.anechoic) {
    const std::string path = Join(out_dir, "anechoic.atf");
    WriteAtf(SimulateAnechoic(grid, cfg.speakers, cfg.freqs, cfg.height), path);
    WriteJsonFile({{"condition", "anechoic"}, {"points", grid.size()}},
                  path + ".json");
    Log(ctx, "wrote " + path);
  }
  IsmOptions opts;
  opts.max_order = cfg.random_rooms.max_order;
  opts.ir_len = cfg.random_rooms.ir_len;
  for (std::size_t i = 0; i < rooms.size(); ++i) {
    opts.reflection.reset();
    if (cfg.random_rooms.calibrate_rt60) {
      opts.reflection = CalibrateReflection(rooms[i], cfg.speakers, cfg.area,
                                            cfg.height, cfg.freqs.sample_rate,
                                            opts);
    }
    char name[32];
    std::snprintf(name, sizeof(name), "room_%03zu.atf", i);
    const std::string path = Join(out_dir, name);
    const AtfTensor atf = SimulateRoom(rooms[i], grid, cfg.speakers, cfg.freqs,
                                       opts, cfg.height, ctx.threads);
    WriteAtf(atf, path);
    const Absorption abs = RtToAbsorption(rooms[i]);
    WriteJsonFile({{"condition", "room"},
                   {"room", rooms[i]},
                   {"absorption", abs.alpha},
                   {"absorption_clamped", abs.clamped},
                   {"reflection", opts.reflection.value_or(abs.reflection)},
                   {"rt60_calibrated", opts.reflection.has_value()},
                   {"max_order", opts.max_order < 0 ? DefaultMaxOrder(rooms[i])
                                                    : opts.max_order},
                   {"ir_len", opts.ir_len}},
                  path + ".json");
    Log(ctx, "wrote " + path);
  }
}

void Train(const Json& config, const std::string& out_dir, const Context& ctx) {
  TrainRun run = Parse("train", [&] { return config.get<TrainRun>(); });
  run.model.Validate();
  run.train.Validate();
  run.train.threads = ctx.threads;
  MakeGrid(run.model.area, run.train.grid_resolution);
  std::unique_ptr<SannModel> model;
  if (!run.init_checkpoint.empty()) {
    model = std::make_unique<SannModel>(
        LoadCheckpoint(run.init_checkpoint, &run.model));
  } else {
    model = std::make_unique<SannModel>(run.model, run.init_seed);
  }
  EnsureDir(out_dir);
  WriteSnapshot(Join(out_dir, "config.resolved.json"), "train", run);

  const auto t0 = std::chrono::steady_clock::now();
  Log(ctx, "simulating training data (" +
               std::string(DatasetKindName(run.train.condition)) + ")");
  const TrainingData data = BuildTrainingData(run.train, run.model);
  const TrainResult result =
      psz::Train(*model, run.train, data, [&](const EpochRecord& r) {
        char line[160];
        std::snprintf(line, sizeof(line),
                      "epoch %zu  train %.6g  val %.6g  (%.2fs)", r.epoch,
                      r.train_loss, r.val_loss, r.seconds);
        Log(ctx, line);
      });
  SaveCheckpoint(*model, Join(out_dir, "model.psznn"));
  WriteHistoryCsv(result.history, Join(out_dir, "history.csv"));
  const double seconds = std::chrono::duration<double>(
                             std::chrono::steady_clock::now() - t0)
                             .count();
  WriteJsonFile({{"best_epoch", result.best_epoch},
                 {"best_val_loss", result.best_val_loss},
                 {"initial_val_loss", result.history.front().val_loss},
                 {"resampled_pairs", result.resampled_pairs},
                 {"parameter_count", model->ParameterCount()},
                 {"seconds", seconds}},
                Join(out_dir, "train_summary.json"));
  Log(ctx, "best epoch " + std::to_string(result.best_epoch));
}

void Infer(const InferRequest& req, const Context& ctx) {
  const SannModel model = LoadCheckpoint(req.checkpoint);
  const SannConfig& cfg = model.config();
  const ZonePair pair{{req.bz, 0.1}, {req.dz, 0.1}};
  NormalizeCoords(pair, cfg.area, cfg.margin);  // domain check up front
  const FilterSet filters = Forward(model, pair);
  WriteFilterSet(filters, req.out_path);
  WriteSnapshot(req.out_path + ".config.json", "infer",
                {{"checkpoint", req.checkpoint},
                 {"bz", req.bz},
                 {"dz", req.dz},
                 {"ir_csv", req.ir_csv},
                 {"ir_shift", req.ir_shift},
                 {"model", cfg}});
  Log(ctx, "wrote " + req.out_path);
  if (req.ir_csv.empty()) return;

  const std::size_t n = cfg.freqs.n_fft;
  const std::size_t shift =
      req.ir_shift < 0 ? n / 2 + 1 : static_cast<std::size_t>(req.ir_shift) % n;
  const auto response = ButterworthBandpass(n, cfg.band_lo_hz, cfg.band_hi_hz,
                                            cfg.freqs.sample_rate);
  std::vector<std::vector<double>> irs;
  for (std::size_t l = 0; l < filters.num_speakers(); ++l) {
    const std::vector<Complex> g(
        filters.gains.begin() + static_cast<std::ptrdiff_t>(l * filters.num_bins()),
        filters.gains.begin() +
            static_cast<std::ptrdiff_t>((l + 1) * filters.num_bins()));
    irs.push_back(ToImpulseResponse(
        AssembleFullSpectrum(g, cfg.freqs, response), shift));
  }
  std::ofstream os(req.ir_csv);
  if (!os) throw IoError("cannot open " + req.ir_csv + " for writing");
  os << "sample";
  for (std::size_t l = 0; l < irs.size(); ++l) os << ",speaker_" << l;
  os << '\n';
  os.precision(17);
  for (std::size_t t = 0; t < n; ++t) {
    os << t;
    for (const auto& ir : irs) os << ',' << ir[t];
    os << '\n';
  }
  if (!os) throw IoError("write to " + req.ir_csv + " failed");
  Log(ctx, "wrote " + req.ir_csv);
}

void EvalMap(const Json& config, const std::string& out_dir,
             const Context& ctx) {
  struct Cfg {
    std::string method, checkpoint, atf;
    Zone fixed{{-0.5, 1.0}, 0.1};
    double moving_resolution = 0.1;
    ClassicOptions classic;
  } cfg;
  Parse("eval_map", [&] {
    CheckKeys(config,
              {"method", "checkpoint", "atf", "fixed_zone",
               "moving_resolution", "classic"},
              "eval_map");
    cfg.method = Opt<std::string>(config, "method", "sann");
    cfg.checkpoint = Opt<std::string>(config, "checkpoint", "");
    cfg.atf = Opt<std::string>(config, "atf", "");
    cfg.fixed = Opt(config, "fixed_zone", cfg.fixed);
    cfg.moving_resolution = Opt(config, "moving_resolution", 0.1);
    cfg.classic = Opt(config, "classic", cfg.classic);
    return 0;
  });
  if (cfg.method != "sann" && cfg.method != "pm" && cfg.method != "am") {
    throw ConfigError("method must be sann, pm or am");
  }
  if (cfg.atf.empty()) throw ConfigError("eval_map needs an 'atf' file");
  if (cfg.method == "sann" && cfg.checkpoint.empty()) {
    throw ConfigError("method sann needs a 'checkpoint'");
  }
  const AtfTensor atf = ReadAtf(cfg.atf);
  const SamplingGrid moving = MakeGrid(atf.grid.area(), cfg.moving_resolution);
  if (!atf.grid.area().Contains(cfg.fixed.center)) {
    throw DomainError("fixed zone centre lies outside the ATF grid");
  }
  std::unique_ptr<SannModel> model;
  FilterSource source;
  if (cfg.method == "sann") {
    model = std::make_unique<SannModel>(LoadCheckpoint(cfg.checkpoint));
    CheckModelMatchesAtf(model->config(), atf);
    source = SannSource(*model);
  } else {
    source = ClassicSource(
        cfg.method == "pm" ? ClassicMethod::kPm : ClassicMethod::kAm, atf,
        cfg.classic);
  }
  const Json resolved = {{"method", cfg.method},
                         {"checkpoint", cfg.checkpoint},
                         {"atf", cfg.atf},
                         {"fixed_zone", cfg.fixed},
                         {"moving_resolution", cfg.moving_resolution},
                         {"classic", cfg.classic}};
  EnsureDir(out_dir);
  WriteSnapshot(Join(out_dir, "config.resolved.json"), "eval_map", resolved);
  const auto maps =
      SpatialMaps(source, cfg.method, atf, cfg.fixed, moving, ctx.threads);
  for (const MetricMap& m : maps) {
    const std::string path =
        Join(out_dir, std::string(MetricName(m.kind)) + "_map.csv");
    WriteMetricMap(m, path, {{"config_hash", ConfigHash(resolved)},
                             {"smoothing", "none"}});
    Log(ctx, "wrote " + path);
  }
}

void Compare(const Json& config, const std::string& out_dir,
             const Context& ctx) {
  struct Cfg {
    std::string checkpoint, atf;
    Point2 bz{0.6, 1.0}, dz{-0.6, 1.0};
    double radius = 0.1;
    double smoothing = 1.0 / 6.0;
    ClassicOptions classic;
    bool maps = false;
    double moving_resolution = 0.1;
  } cfg;
  Parse("compare", [&] {
    CheckKeys(config,
              {"checkpoint", "atf", "bz", "dz", "radius", "smoothing",
               "classic", "maps", "moving_resolution"},
              "compare");
    cfg.checkpoint = Opt<std::string>(config, "checkpoint", "");
    cfg.atf = Opt<std::string>(config, "atf", "");
    cfg.bz = Opt(config, "bz", cfg.bz);
    cfg.dz = Opt(config, "dz", cfg.dz);
    cfg.radius = Opt(config, "radius", cfg.radius);
    cfg.smoothing = Opt(config, "smoothing", cfg.smoothing);
    cfg.classic = Opt(config, "classic", cfg.classic);
    cfg.maps = Opt(config, "maps", cfg.maps);
    cfg.moving_resolution = Opt(config, "moving_resolution", 0.1);
    return 0;
  });
  if (cfg.checkpoint.empty() || cfg.atf.empty()) {
    throw ConfigError("compare needs 'checkpoint' and 'atf'");
  }
  if (!(cfg.radius > 0.0)) throw ConfigError("radius must be positive");
  const AtfTensor atf = ReadAtf(cfg.atf);
  const SannModel model = LoadCheckpoint(cfg.checkpoint);
  CheckModelMatchesAtf(model.config(), atf);
  const ZonePair pair{{cfg.bz, cfg.radius}, {cfg.dz, cfg.radius}};
  const ZonePair swapped{pair.dz, pair.bz};
  const AtfBlock h1 = atf.Rows(SelectControlPoints(atf.grid, pair.bz));
  const AtfBlock h2 = atf.Rows(SelectControlPoints(atf.grid, pair.dz));
  const Json resolved = {{"checkpoint", cfg.checkpoint}, {"atf", cfg.atf},
                         {"bz", cfg.bz},                 {"dz", cfg.dz},
                         {"radius", cfg.radius},         {"smoothing", cfg.smoothing},
                         {"classic", cfg.classic},       {"maps", cfg.maps},
                         {"moving_resolution", cfg.moving_resolution}};
  EnsureDir(out_dir);
  WriteSnapshot(Join(out_dir, "config.resolved.json"), "compare", resolved);

  const std::vector<std::pair<std::string, FilterSource>> sources = {
      {"sann", SannSource(model)},
      {"pm", ClassicSource(ClassicMethod::kPm, atf, cfg.classic)},
      {"am", ClassicSource(ClassicMethod::kAm, atf, cfg.classic)}};
  const std::vector<double> freqs = atf.freqs.bin_freqs();
  const std::vector<double> target = TargetMagnitude(pair.bz.center.x, h1);
  struct Curves {
    std::vector<double> izi, ipi, nmse;
  };
  std::vector<Curves> curves;
  for (const auto& [name, source] : sources) {
    const FilterSet g1 = source(pair);
    const FilterSet g2 = source(swapped);
    WriteFilterSet(g1, Join(out_dir, "filters_" + name + ".pszflt"));
    Curves c{Izi(h1, h2, g1).db, Ipi(h1, g1, g2).db,
             Nmse(g1, h1, target).per_bin};
    for (double& v : c.nmse) v = 10.0 * std::log10(v);
    curves.push_back(std::move(c));
  }
  std::vector<std::vector<double>> raw, smooth;
  std::vector<std::string> columns;
  Json summary = Json::object();
  const std::pair<const char*, std::vector<double> Curves::*> metrics[] = {
      {"izi", &Curves::izi}, {"ipi", &Curves::ipi}, {"nmse", &Curves::nmse}};
  for (const auto& [metric, member] : metrics) {
    for (std::size_t s = 0; s < sources.size(); ++s) {
      const std::vector<double>& db = curves[s].*member;
      const std::string& name = sources[s].first;
      summary[metric][name] = {{"logmean_db", LogMean(db, freqs)}};
      columns.push_back(std::string(metric) + "_" + name + "_db");
      smooth.push_back(OctaveSmooth(db, freqs, cfg.smoothing));
      raw.push_back(db);
    }
  }
  auto write_curves = [&](const std::string& path,
                          const std::vector<std::vector<double>>& data) {
    std::ofstream os(path);
    if (!os) throw IoError("cannot open " + path + " for writing");
    os << "freq_hz";
    for (const auto& c : columns) os << ',' << c;
    os << '\n';
    os.precision(17);
    for (std::size_t n = 0; n < freqs.size(); ++n) {
      os << freqs[n];
      for (const auto& col : data) os << ',' << col[n];
      os << '\n';
    }
    if (!os) throw IoError("write to " + path + " failed");
  };
  write_curves(Join(out_dir, "compare.csv"), smooth);
  write_curves(Join(out_dir, "compare_raw.csv"), raw);
  summary["smoothing_octaves"] = cfg.smoothing;
  summary["smoothing_kernel"] = "rectangular on log frequency";
  WriteJsonFile(summary, Join(out_dir, "compare_summary.json"));
  Log(ctx, "wrote " + Join(out_dir, "compare.csv"));

  if (!cfg.maps) return;
  const SamplingGrid moving = MakeGrid(atf.grid.area(), cfg.moving_resolution);
  for (const auto& [name, source] : sources) {
    for (const MetricMap& m :
         SpatialMaps(source, name, atf, pair.bz, moving, ctx.threads)) {
      const std::string path = Join(
          out_dir, name + "_" + std::string(MetricName(m.kind)) + "_map.csv");
      WriteMetricMap(m, path, {{"config_hash", ConfigHash(resolved)},
                               {"smoothing", "none"}});
    }
  }
}

void Bench(const Json& config, const std::string& out_dir, const Context& ctx) {
  struct Cfg {
    std::string checkpoint, atf;
    double resolution = 0.05;
    std::size_t queries = 20;
    int repetitions = 5;
    int warmup = 2;
    std::uint64_t seed = 0;
    double radius = 0.1;
  } cfg;
  Parse("bench", [&] {
    CheckKeys(config,
              {"checkpoint", "atf", "resolution", "queries", "repetitions",
               "warmup", "seed", "radius"},
              "bench");
    cfg.checkpoint = Opt<std::string>(config, "checkpoint", "");
    cfg.atf = Opt<std::string>(config, "atf", "");
    cfg.resolution = Opt(config, "resolution", cfg.resolution);
    cfg.queries = Opt(config, "queries", cfg.queries);
    cfg.repetitions = Opt(config, "repetitions", cfg.repetitions);
    cfg.warmup = Opt(config, "warmup", cfg.warmup);
    cfg.seed = Opt(config, "seed", cfg.seed);
    cfg.radius = Opt(config, "radius", cfg.radius);
    return 0;
  });
  if (cfg.queries < 1 || cfg.repetitions < 1 || cfg.warmup < 0) {
    throw ConfigError("queries and repetitions must be >= 1, warmup >= 0");
  }
  const SannModel model = cfg.checkpoint.empty()
                              ? SannModel(SannConfig{}, cfg.seed)
                              : LoadCheckpoint(cfg.checkpoint);
  const SannConfig& mc = model.config();
  const AtfTensor atf =
      cfg.atf.empty()
          ? SimulateAnechoic(MakeGrid(mc.area, cfg.resolution), mc.speakers,
                             mc.freqs)
          : ReadAtf(cfg.atf);
  CheckModelMatchesAtf(mc, atf);
  Rng rng(cfg.seed);
  std::vector<ZonePair> queries;
  while (queries.size() < cfg.queries) {
    const ZonePair p = SampleZonePair(rng, atf.grid.area(), cfg.radius);
    try {
      SelectControlPoints(atf.grid, p.bz);
      SelectControlPoints(atf.grid, p.dz);
      NormalizeCoords(p, mc.area, mc.margin);
    } catch (const DomainError&) {
      continue;
    }
    queries.push_back(p);
  }
  const Json resolved = {{"checkpoint", cfg.checkpoint}, {"atf", cfg.atf},
                         {"resolution", cfg.resolution}, {"queries", cfg.queries},
                         {"repetitions", cfg.repetitions}, {"warmup", cfg.warmup},
                         {"seed", cfg.seed},             {"radius", cfg.radius}};
  EnsureDir(out_dir);
  WriteSnapshot(Join(out_dir, "config.resolved.json"), "bench", resolved);
  const BenchResult r =
      BenchTiming(model, atf, queries, cfg.repetitions, cfg.warmup);
  WriteJsonFile({{"nn_ms", r.nn_ms},
                 {"pm_ms", r.pm_ms},
                 {"ratio", r.ratio},
                 {"queries", r.queries},
                 {"repetitions", r.repetitions},
                 {"parameter_count", r.parameter_count},
                 {"weight_bytes", r.weight_bytes},
                 {"reference_nn_ms", kReferenceNnMs},
                 {"reference_pm_ms", kReferencePmMs},
                 {"reference_ratio", kReferencePmMs / kReferenceNnMs}},
                Join(out_dir, "bench.json"));
  char line[160];
  std::snprintf(line, sizeof(line),
                "nn %.3f ms  pm %.3f ms  ratio %.2f  (reference %.2f / %.2f ms)",
                r.nn_ms, r.pm_ms, r.ratio, kReferenceNnMs, kReferencePmMs);
  Log(ctx, line);
}

void Gradcheck(const Json& config, const std::string& out_dir,
               const Context& ctx) {
  std::uint64_t seed = 0;
  double tol = 1e-4, h = 1e-6;
  Parse("gradcheck", [&] {
    CheckKeys(config, {"seed", "tolerance", "h"}, "gradcheck");
    seed = Opt(config, "seed", seed);
    tol = Opt(config, "tolerance", tol);
    h = Opt(config, "h", h);
    return 0;
  });
  if (!(tol > 0.0) || !(h > 0.0)) {
    throw ConfigError("tolerance and h must be positive");
  }
  const Json resolved = {{"seed", seed}, {"tolerance", tol}, {"h", h}};
  EnsureDir(out_dir);
  WriteSnapshot(Join(out_dir, "config.resolved.json"), "gradcheck", resolved);
  Rng rng(seed);
  std::vector<CheckOutcome> outcomes;
  outcomes.push_back(CheckPrimitives(rng, h));
  outcomes.push_back(CheckIdft(rng, h));
  outcomes.push_back(CheckLossPipeline(seed, h));
  Json report = Json::array();
  bool ok = true;
  for (const CheckOutcome& o : outcomes) {
    const bool pass = o.report.max_rel_error < tol;
    ok = ok && pass;
    report.push_back({{"check", o.name},
                      {"max_rel_error", o.report.max_rel_error},
                      {"entries", o.report.checked},
                      {"pass", pass}});
    char line[160];
    std::snprintf(line, sizeof(line), "%-14s max rel err %.3e over %zu  %s",
                  o.name.c_str(), o.report.max_rel_error, o.report.checked,
                  pass ? "ok" : "FAIL");
    Log(ctx, line);
  }
  WriteJsonFile({{"tolerance", tol}, {"checks", report}, {"pass", ok}},
                Join(out_dir, "gradcheck.json"));
  if (!ok) throw NumericalError("gradient check exceeded tolerance");
}

}  // namespace psz::app
