// Acceptance suite: one PASS/FAIL line per criterion. Trained models are
// cached in the work directory, keyed by a stamp of their configuration.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>

#include "grad_check.hpp"
#include "parkgen/parkgen.hpp"

using namespace parkgen;
namespace fs = std::filesystem;
using V = ag::Var<double>;

namespace {

// Pinned tolerances and budgets.
constexpr int kRoundTripMaps = 1000;
constexpr double kRoundTripBudgetS = 10;
constexpr double kTilingBudgetS = 5;
constexpr double kGradTol = 1e-3;
constexpr int kGradTrials = 5;
constexpr double kGradBudgetS = 120;
constexpr double kLossTol = 1e-9;
constexpr int kCorpusScenes = 200;
constexpr std::uint64_t kCorpusSeed = 1000;
constexpr double kTrainFraction = 0.88;
constexpr double kSegMargin = 0.15;
constexpr double kSegBudgetS = 1800;
constexpr int kSegEpochs = 6;
constexpr int kLayoutEpochs = 6;
constexpr double kConstraintBudgetS = 3600;
constexpr int kMinTestScenes = 20;
constexpr double kDiffusionBudgetS = 60;
constexpr double kClosedFormTol = 1e-5;
constexpr double kReconstructTol = 1e-9;
constexpr int kSchemeEpochs = 6;
constexpr double kAreaRatio = 64.0;
constexpr int kUpscale = 8;
constexpr double kStrength = 0.05;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int precision = 4) {
  std::ostringstream oss;
  oss.precision(precision);
  oss << v;
  return oss.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

void write_text(const fs::path& p, const std::string& text) {
  fs::create_directories(p.parent_path());
  std::ofstream(p, std::ios::binary) << text;
}

/// Loads `path` when its stamp matches, otherwise runs `make`, saves the
/// result with the stamp and records the wall time beside it.
struct Cached {
  Checkpoint ckpt;
  double train_seconds = 0;
  bool reused = false;
};

Cached cached_checkpoint(const fs::path& path, const std::string& stamp, const std::function<Checkpoint()>& make) {
  const fs::path stamp_path = path.string() + ".stamp", secs_path = path.string() + ".seconds";
  if (fs::exists(path) && fs::exists(stamp_path) && slurp(stamp_path) == stamp && fs::exists(secs_path))
    return {load_checkpoint(path.string()), std::stod(slurp(secs_path)), true};
  const auto t0 = Clock::now();
  auto c = make();
  const double secs = seconds_since(t0);
  fs::create_directories(path.parent_path());
  save_checkpoint(path.string(), c);
  write_text(stamp_path, stamp);
  write_text(secs_path, fmt(secs, 10));
  return {std::move(c), secs, false};
}

struct Work {
  fs::path dir;
  Corpus train_set, test_set;
  std::optional<Cached> seg, scheme, denoiser;
};

SceneParams corpus_params() { return SceneParams{}; }

void load_corpus_split(Work& w) {
  if (!w.train_set.empty()) return;
  auto [tr, te] = split_corpus(generate_corpus(kCorpusScenes, kCorpusSeed, corpus_params()), kTrainFraction);
  w.train_set = std::move(tr);
  w.test_set = std::move(te);
}

TrainConfig gan_config(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.seed = 1;
  return c;
}

std::string stamp_of(const std::string& what, const KeyValues& kv) {
  return what + "\n" + corpus_params().to_json().dump() + "\nscenes " + std::to_string(kCorpusScenes) + " seed " +
         std::to_string(kCorpusSeed) + " split " + fmt(kTrainFraction, 17) + "\n" + kv.dump();
}

const Cached& seg_model(Work& w) {
  if (!w.seg) {
    load_corpus_split(w);
    const auto cfg = gan_config(kSegEpochs);
    w.seg = cached_checkpoint(w.dir / "seg" / "seg_extract.generator.ckpt", stamp_of("seg_extract", cfg.to_kv()),
                              [&] { return train(Task::seg_extract, w.train_set, cfg).checkpoints.at("generator"); });
  }
  return *w.seg;
}

const Cached& scheme_model(Work& w) {
  if (!w.scheme) {
    load_corpus_split(w);
    const auto cfg = gan_config(kSchemeEpochs);
    w.scheme = cached_checkpoint(w.dir / "scheme" / "layout_to_scheme.generator.ckpt",
                                 stamp_of("layout_to_scheme", cfg.to_kv()), [&] {
                                   return train(Task::layout_to_scheme, w.train_set, cfg).checkpoints.at("generator");
                                 });
  }
  return *w.scheme;
}

const Cached& denoiser_model(Work& w) {
  if (!w.denoiser) {
    load_corpus_split(w);
    const DenoiserConfig cfg;
    KeyValues kv;
    kv.set("epochs", cfg.epochs);
    kv.set("steps", cfg.steps);
    kv.set("ema_decay", cfg.ema_decay);
    kv.set("arch", detail::concat(to_string(cfg.arch.kind), " ", cfg.arch.depth, " ", cfg.arch.base_width, " ",
                                  cfg.arch.time_embedding_dim));
    w.denoiser = cached_checkpoint(w.dir / "denoiser" / "denoiser.ckpt", stamp_of("denoiser", kv), [&] {
      std::vector<RasterImage> schemes;
      for (const auto& s : w.train_set.scenes) schemes.push_back(s.scheme);
      return train_denoiser(schemes, cfg).checkpoint;
    });
  }
  return *w.denoiser;
}

// ---------------------------------------------------------------------------
// 1. Round trip and legend

Outcome criterion_round_trip(Work& w) {
  const auto t0 = Clock::now();
  Rng rng(1);
  int failures = 0;
  const fs::path png = w.dir / "roundtrip.png";
  fs::create_directories(w.dir);
  for (int i = 0; i < kRoundTripMaps; ++i) {
    const auto legend = i % 2 ? Legend::park() : Legend::environment();
    ClassMap m(rng.uniform_int(1, 24), rng.uniform_int(1, 24), legend);
    for (auto& v : m.data) v = static_cast<std::uint8_t>(rng.uniform_int(0, static_cast<int>(legend->size()) - 1));
    if (!(quantize_to_classes(encode_classmap(m), legend) == m)) ++failures;
    write_classmap_png(png.string(), m);
    if (!(read_classmap_png(png.string(), legend) == m)) ++failures;
    write_png(png.string(), encode_classmap(m));
    if (!(quantize_to_classes(read_png(png.string()), legend) == m)) ++failures;
  }
  // Land use code table, byte exact, as written to an RGB PNG.
  const std::vector<std::pair<std::string, Rgb>> table{
      {"Green land", {0, 255, 0}}, {"Water", {0, 255, 255}},  {"Roads", {241, 145, 73}},
      {"Paving", {255, 255, 0}},   {"Structures", {255, 0, 255}}, {"Plant", {0, 152, 67}}};
  int colour_failures = 0;
  const auto park = Legend::park();
  for (const auto& [name, rgb] : table) {
    const int id = park->id_of(name);
    if (!((*park)[id].rgb == rgb)) ++colour_failures;
    ClassMap one(1, 1, park);
    one.at(0, 0) = static_cast<std::uint8_t>(id);
    write_png(png.string(), encode_classmap(one));
    const auto back = read_png(png.string());
    const std::uint8_t bytes[3] = {rgb.r, rgb.g, rgb.b};
    for (int c = 0; c < 3; ++c)
      if (std::lround(back.at(0, 0, c) * 255.0f) != bytes[c]) ++colour_failures;
  }
  fs::remove(png);
  const double secs = seconds_since(t0);
  const bool pass = failures == 0 && colour_failures == 0 && secs < kRoundTripBudgetS;
  return {pass, std::to_string(kRoundTripMaps) + " maps x 3 round trips, " + std::to_string(failures) +
                    " mismatches; legend colours " + std::to_string(colour_failures) + " mismatches; " +
                    fmt(secs, 3) + " s (budget " + fmt(kRoundTripBudgetS) + " s)"};
}

// ---------------------------------------------------------------------------
// 2. Tiling

Outcome criterion_tiling(Work&) {
  const auto t0 = Clock::now();
  int cases = 0, failures = 0;
  std::string first_failure;
  auto check = [&](int width, int height, int tile_size, int stride, std::optional<std::size_t> expected_count) {
    ++cases;
    const TileSpec spec{tile_size, stride};
    RasterImage img(width, height);
    for (std::size_t i = 0; i < img.data.size(); i += 3) img.data[i] = static_cast<float>(i % 251) / 251.0f;
    const auto tiles = tile(img, spec);
    // Expected origin count per axis: stride steps plus one edge-anchored tile.
    auto axis = [&](int dim) {
      const int steps = (dim - tile_size) / stride + 1;
      return static_cast<std::size_t>(steps + ((dim - tile_size) % stride != 0 ? 1 : 0));
    };
    std::vector<int> cover(static_cast<std::size_t>(width) * height, 0);
    bool ok = tiles.size() == axis(width) * axis(height);
    if (expected_count) ok = ok && tiles.size() == *expected_count;
    for (const auto& t : tiles) {
      ok = ok && t.image.width == tile_size && t.image.height == tile_size && t.x >= 0 && t.y >= 0 &&
           t.x + tile_size <= width && t.y + tile_size <= height;
      if (!ok) break;
      for (int y = 0; y < tile_size; ++y)
        for (int x = 0; x < tile_size; ++x) {
          ++cover[static_cast<std::size_t>(t.y + y) * width + t.x + x];
          ok = ok && t.image.at(x, y, 0) == img.at(t.x + x, t.y + y, 0);
        }
    }
    ok = ok && std::all_of(cover.begin(), cover.end(), [](int c) { return c >= 1; });
    if (!ok) {
      if (first_failure.empty())
        first_failure = "; first failure " + std::to_string(width) + "x" + std::to_string(height) + " tile " +
                        std::to_string(tile_size) + " stride " + std::to_string(stride);
      ++failures;
    }
  };
  check(1024, 1024, 512, 512, 4);
  check(700, 700, 512, 512, 4);
  check(700, 512, 512, 512, 2);
  for (int size : {16, 17, 31, 32, 33, 63, 64, 65, 100, 127, 130})
    for (int tile_size : {8, 16, 32})
      for (int stride : {tile_size, tile_size / 2, 3})
        if (size >= tile_size) check(size, size + (size % 3), tile_size, stride, std::nullopt);
  // Edge anchoring: the last tile of a 700-pixel axis ends exactly at 700.
  const auto offs = tile_offsets(700, TileSpec{512, 512});
  const bool anchored = offs == std::vector<int>{0, 188};
  const double secs = seconds_since(t0);
  const bool pass = failures == 0 && anchored && secs < kTilingBudgetS;
  return {pass, std::to_string(cases) + " size/tile/stride cases, " + std::to_string(failures) + " failures" +
                    first_failure + "; 700 -> offsets {0,188} " + (anchored ? "ok" : "wrong") + "; " + fmt(secs, 3) +
                    " s (budget " + fmt(kTilingBudgetS) + " s)"};
}

// ---------------------------------------------------------------------------
// 3. Gradient checks

Outcome criterion_gradients(Work&) {
  using gradcheck::project;
  const auto t0 = Clock::now();
  struct Block {
    std::string name;
    gradcheck::Fn f;
    std::vector<Shape> shapes;
    double scale = 1.0;
  };
  const ag::Var<double> no_bias;
  std::vector<Block> blocks{
      {"conv2d s1 p1", [](const auto& v) { return project(ag::conv2d(v[0], v[1], v[2], 1, 1), 1); },
       {{2, 3, 6, 6}, {4, 3, 3, 3}, {1, 4, 1, 1}}},
      {"conv2d s2 p1", [](const auto& v) { return project(ag::conv2d(v[0], v[1], v[2], 2, 1), 2); },
       {{2, 3, 6, 6}, {4, 3, 4, 4}, {1, 4, 1, 1}}},
      {"conv2d no bias", [no_bias](const auto& v) { return project(ag::conv2d(v[0], v[1], no_bias, 2, 0), 3); },
       {{1, 2, 8, 8}, {3, 2, 4, 4}}},
      {"conv_transpose2d", [](const auto& v) { return project(ag::conv_transpose2d(v[0], v[1], v[2], 2, 1), 4); },
       {{2, 3, 4, 4}, {3, 2, 4, 4}, {1, 2, 1, 1}}},
      {"instance_norm", [](const auto& v) { return project(ag::instance_norm(v[0], v[1], v[2]), 5); },
       {{2, 3, 4, 4}, {1, 3, 1, 1}, {1, 3, 1, 1}}},
      {"batch_norm", [](const auto& v) { return project(ag::batch_norm(v[0], v[1], v[2]), 6); },
       {{3, 2, 3, 3}, {1, 2, 1, 1}, {1, 2, 1, 1}}},
      {"leaky_relu", [](const auto& v) { return project(ag::leaky_relu(v[0], 0.2), 7); }, {{2, 2, 3, 3}}},
      {"relu", [](const auto& v) { return project(ag::relu(v[0]), 8); }, {{2, 2, 3, 3}}},
      {"tanh", [](const auto& v) { return project(ag::tanh(v[0]), 9); }, {{2, 2, 3, 3}}},
      {"add", [](const auto& v) { return project(ag::add(v[0], v[1]), 10); }, {{2, 3, 3, 3}, {2, 3, 3, 3}}},
      {"add_channel", [](const auto& v) { return project(ag::add_channel(v[0], v[1]), 11); },
       {{2, 3, 3, 3}, {2, 3, 1, 1}}},
      {"concat", [](const auto& v) { return project(ag::concat(v[0], v[1]), 12); }, {{2, 2, 3, 3}, {2, 1, 3, 3}}},
      {"bce_with_logits real", [](const auto& v) { return ag::bce_with_logits(v[0], 1.0); }, {{2, 1, 3, 3}}, 2.0},
      {"bce_with_logits fake", [](const auto& v) { return ag::bce_with_logits(v[0], 0.0); }, {{2, 1, 3, 3}}, 2.0},
      {"least_squares", [](const auto& v) { return ag::least_squares(v[0], 1.0); }, {{2, 1, 3, 3}}},
      {"l1_loss", [](const auto& v) { return ag::l1_loss(v[0], v[1]); }, {{2, 3, 3, 3}, {2, 3, 3, 3}}},
      {"mse_loss", [](const auto& v) { return ag::mse_loss(v[0], v[1]); }, {{2, 3, 3, 3}, {2, 3, 3, 3}}},
      {"weighted_sum",
       [](const auto& v) {
         return ag::weighted_sum<double>({{0.7, ag::mse_loss(v[0], v[1])}, {2.5, ag::l1_loss(v[0], v[1])}});
       },
       {{1, 2, 3, 3}, {1, 2, 3, 3}}},
  };
  double worst = 0;
  std::string worst_name;
  int checks = 0;
  for (const auto& b : blocks)
    for (int trial = 0; trial < kGradTrials; ++trial) {
      Rng rng(1000 + trial);
      std::vector<Tensor<double>> inputs;
      for (const auto& s : b.shapes) inputs.push_back(gradcheck::random_tensor(s, rng, b.scale));
      const double err = gradcheck::max_relative_error(b.f, inputs, 77 + trial);
      ++checks;
      if (err > worst) worst = err, worst_name = b.name;
    }
  const std::vector<std::pair<ArchSpec, Shape>> nets{{ArchSpec::unet(2, 4), {2, 3, 8, 8}},
                                                     {ArchSpec::resnet(1, 2), {1, 3, 8, 8}},
                                                     {ArchSpec::patch(3, 3, 4), {2, 3, 16, 16}},
                                                     {ArchSpec::denoiser(2, 4, 4), {2, 3, 8, 8}}};
  for (const auto& [spec, shape] : nets)
    for (int trial = 0; trial < kGradTrials; ++trial) {
      const double err = gradcheck::network_grad_error(spec, shape, 10 + trial);
      ++checks;
      if (err > worst) worst = err, worst_name = to_string(spec.kind);
    }
  const double secs = seconds_since(t0);
  const bool pass = worst < kGradTol && secs < kGradBudgetS;
  return {pass, std::to_string(blocks.size()) + " blocks + " + std::to_string(nets.size()) + " networks x " +
                    std::to_string(kGradTrials) + " trials (" + std::to_string(checks) +
                    " checks), worst relative error " + fmt(worst, 3) + " (" + worst_name + ", tol " +
                    fmt(kGradTol) + "); " + fmt(secs, 3) + " s (budget " + fmt(kGradBudgetS) + " s)"};
}

// ---------------------------------------------------------------------------
// 4. Loss oracles

Outcome criterion_losses(Work&) {
  // Stub networks: a discriminator that scores 0 everywhere, a constant
  // generator and the identity.
  const Net<double> zero_disc = [](const V& x) {
    return ag::conv2d(x, ag::constant(Tensor<double>(1, x->value.c(), 1, 1, 0.0)), V{}, 1, 0);
  };
  auto constant_gen = [](double c) -> Net<double> {
    return [c](const V& x) {
      return ag::conv2d(x, ag::constant(Tensor<double>(3, x->value.c(), 1, 1, 0.0)),
                        ag::constant(Tensor<double>(1, 3, 1, 1, c)), 1, 0);
    };
  };
  const Net<double> identity = [](const V& x) { return x; };
  const double ln2 = std::log(2.0);
  const auto x = ag::constant(Tensor<double>(2, 3, 4, 4, 0.5));
  const auto y = ag::constant(Tensor<double>(2, 3, 4, 4, 0.2));

  double worst = 0;
  int cases = 0;
  auto expect = [&](double got, double want) {
    ++cases;
    worst = std::max(worst, std::abs(got - want));
  };
  auto total = [](const LossTerms& t, std::initializer_list<const char*> names) {
    double s = 0;
    for (const auto& [k, v] : t)
      for (const char* n : names)
        if (k == n) s += v;
    return s;
  };

  // pix2pix, BCE, D at 0.5 probability: G_adv = ln 2, D = ln 2.
  {
    Pix2PixObjective obj;
    const auto l = pix2pix_losses(identity, zero_disc, x, y, obj);
    expect(l.terms[0].second, ln2);
    expect(l.terms[1].second, 100.0 * 0.3);  // |0.5 - 0.2| weighted by lambda_l1
    expect(l.generator->value.data[0], ln2 + 30.0);
    expect(l.discriminator->value.data[0], ln2);
    expect(total(l.terms, {"D_real", "D_fake"}), ln2);
  }
  // pix2pix with a perfect generator: L1 vanishes.
  {
    const auto l = pix2pix_losses(identity, zero_disc, x, x, Pix2PixObjective{});
    expect(l.terms[1].second, 0.0);
  }
  // Least squares: (0 - 1)^2 for G, 0.5 * (1 + 0) for D.
  {
    Pix2PixObjective obj;
    obj.adversarial = Adversarial::least_squares;
    obj.lambda_l1 = 0;
    const auto l = pix2pix_losses(identity, zero_disc, x, y, obj);
    expect(l.generator->value.data[0], 1.0);
    expect(l.discriminator->value.data[0], 0.5);
  }
  // CycleGAN with identity generators: zero cycle and identity terms.
  {
    const auto l = cyclegan_losses(identity, identity, zero_disc, zero_disc, x, y, CycleGANObjective{});
    expect(total(l.terms, {"cycle_x", "cycle_y", "identity_x", "identity_y"}), 0.0);
    expect(l.generator->value.data[0], 2 * ln2);
    expect(l.disc_x->value.data[0], ln2);
    expect(l.disc_y->value.data[0], ln2);
  }
  // CycleGAN with constant 0.2 generators against x = 0.5: cycle_x = 10 * 0.3,
  // cycle_y = 0 (y is already 0.2), identity_y = 0, identity_x = 5 * 0.3.
  {
    CycleGANObjective obj;
    obj.lambda_cycle = 10;
    obj.lambda_identity = 5;
    const auto g = constant_gen(0.2);
    const auto l = cyclegan_losses(g, g, zero_disc, zero_disc, x, y, obj);
    expect(total(l.terms, {"cycle_x"}), 3.0);
    expect(total(l.terms, {"cycle_y"}), 0.0);
    expect(total(l.terms, {"identity_y"}), 0.0);
    expect(total(l.terms, {"identity_x"}), 1.5);
    expect(l.generator->value.data[0], 2 * ln2 + 4.5);
  }
  const bool pass = worst <= kLossTol;
  return {pass, std::to_string(cases) + " fixture values incl. ln 2 = " + fmt(ln2, 6) +
                    " and identity zero-cycle; worst |error| " + fmt(worst, 3) + " (tol " + fmt(kLossTol) + ")"};
}

// ---------------------------------------------------------------------------
// 5. Segmentation learnability

Outcome criterion_segmentation(Work& w) {
  const auto& seg = seg_model(w);
  const auto env = Legend::environment();
  auto cm = empty_confusion(env);
  std::vector<double> h(env->size(), 0);
  for (const auto& s : w.test_set.scenes) {
    cm += confusion(quantize_to_classes(infer(seg.ckpt, s.remote), env), s.environment);
    const auto sh = class_histogram(s.environment);
    for (std::size_t i = 0; i < h.size(); ++i) h[i] += sh[i] / static_cast<double>(w.test_set.size());
  }
  write_text(w.dir / "seg" / "confusion.csv", cm.to_csv());
  const double baseline = *std::max_element(h.begin(), h.end());
  const double acc = cm.pixel_accuracy();
  const auto worst = cm.worst_confusion();
  const double worst_mass = static_cast<double>(worst.count) / static_cast<double>(cm.total());
  const std::string worst_desc =
      worst.count == 0 ? "none"
                       : (*env)[worst.truth].name + " -> " + (*env)[worst.pred].name + " (" + fmt(100 * worst_mass, 3) +
                             "% of pixels)";
  const bool pass = acc >= baseline + kSegMargin && seg.train_seconds <= kSegBudgetS &&
                    w.test_set.size() + w.train_set.size() == kCorpusScenes;
  return {pass, "CycleGAN, " + std::to_string(w.train_set.size()) + " train / " + std::to_string(w.test_set.size()) +
                    " held-out scenes, " + std::to_string(kSegEpochs) + " epochs: accuracy " + fmt(acc) +
                    " vs majority baseline " + fmt(baseline) + " + " + fmt(kSegMargin) + "; worst confusion " +
                    worst_desc + "; training " + fmt(seg.train_seconds, 4) + " s" + (seg.reused ? " (cached)" : "") +
                    " (budget " + fmt(kSegBudgetS) + " s)"};
}

// ---------------------------------------------------------------------------
// 6. Constraint effect

ExperimentConfig constraint_config() {
  ExperimentConfig c;
  c.train_fraction = kTrainFraction;
  c.gan = gan_config(kLayoutEpochs);
  c.seed = 1;
  c.reuse = true;
  return c;
}

Outcome criterion_constraint(Work& w) {
  load_corpus_split(w);
  const auto cfg = constraint_config();
  const fs::path dir = w.dir / "experiments";
  const auto stamp = stamp_of("E2/E3", cfg.gan.to_kv());
  const fs::path stamp_path = dir / "constraint.stamp", secs_path = dir / "constraint.seconds";
  if (!fs::exists(stamp_path) || slurp(stamp_path) != stamp) fs::remove_all(dir);
  const bool cached = fs::exists(secs_path);
  const auto t0 = Clock::now();
  const auto e2 = run_experiment(ExperimentId::E2, w.train_set, w.test_set, cfg, dir.string());
  const auto e3 = run_experiment(ExperimentId::E3, w.train_set, w.test_set, cfg, dir.string());
  if (!cached) {
    write_text(stamp_path, stamp);
    write_text(secs_path, fmt(seconds_since(t0), 10));
  }
  const double secs = std::stod(slurp(secs_path));
  const std::size_t col = 4;  // entrance_count
  const double m2 = *e2.table.mean(col), m3 = *e3.table.mean(col);
  const double truth = *e2.table.mean(5);
  const bool pass = m2 - m3 >= 0 && e2.table.rows.size() >= static_cast<std::size_t>(kMinTestScenes) &&
                    e2.test_seeds == e3.test_seeds && secs <= kConstraintBudgetS;
  return {pass, std::to_string(e2.table.rows.size()) + " test scenes: mean entrance_count E2 " + fmt(m2) + ", E3 " +
                    fmt(m3) + " (E2 - E3 = " + fmt(m2 - m3) + ", need >= 0; ground truth " + fmt(truth) + "); " +
                    fmt(secs, 4) + " s" + (cached ? " (cached)" : "") + " (budget " + fmt(kConstraintBudgetS) + " s)"};
}

// ---------------------------------------------------------------------------
// 7. Diffusion suite

Outcome criterion_diffusion(Work&) {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;
  const auto desk = NoiseSchedule::desk(200);
  const double ab = desk.alpha_bar(desk.steps());
  if (!(ab < 1e-4)) failed.push_back("alpha_bar_T");

  // Iterative forward process against the closed form with the equivalent
  // composite noise sum_s sqrt(beta_s) prod_{r>s} sqrt(alpha_r) e_s.
  double closed_err = 0;
  Rng rng(5);
  const auto x0 = normal_tensor<double>({1, 3, 4, 4}, rng);
  for (int t : {1, 10, 100, 200}) {
    Tensor<double> x = x0, composite(x0.shape);
    for (int k = 1; k <= t; ++k) {
      const auto e = normal_tensor<double>(x0.shape, rng);
      double c = std::sqrt(desk.beta(k));
      for (int r = k + 1; r <= t; ++r) c *= std::sqrt(desk.alpha(r));
      for (std::size_t i = 0; i < x.size(); ++i) {
        x.data[i] = std::sqrt(desk.alpha(k)) * x.data[i] + std::sqrt(desk.beta(k)) * e.data[i];
        composite.data[i] += c * e.data[i];
      }
    }
    for (auto& v : composite.data) v /= std::sqrt(1.0 - desk.alpha_bar(t));
    const auto closed = forward_diffuse(x0, t, composite, desk);
    for (std::size_t i = 0; i < x.size(); ++i) closed_err = std::max(closed_err, std::abs(closed.data[i] - x.data[i]));
  }
  if (!(closed_err < kClosedFormTol)) failed.push_back("closed form");

  // Refinement with a small jittered denoiser.
  Checkpoint den{build(ArchSpec::denoiser(2, 4, 4), 3), {}};
  Rng jitter(4);
  for (const auto& [_, v] : den.weights.params())
    for (auto& p : v->value.data) p += static_cast<float>(0.05 * jitter.normal());
  den.meta.set("image_size", 32);
  const auto sched = NoiseSchedule::desk(50);
  SceneParams p;
  p.canvas_size = 32;
  p.road_grid_spacing = 12;
  p.park_rect = {8, 8, 16, 16};
  p.park_jitter = 1;
  const auto a = generate_scene(1, p).scheme, b = generate_scene(2, p).scheme;
  const bool identity = refine(a, {0.0, "", 9}, den, sched) == a;
  if (!identity) failed.push_back("strength 0");
  const bool independent = refine(a, {1.0, "", 9}, den, sched) == refine(b, {1.0, "", 9}, den, sched) &&
                           !(refine(a, {1.0, "", 9}, den, sched) == a);
  if (!independent) failed.push_back("strength 1");

  // T = 1 with the true noise reconstructs x0 exactly up to rounding.
  const NoiseSchedule one({0.99995});
  const auto eps = normal_tensor<double>(x0.shape, rng);
  const auto x1 = forward_diffuse(x0, 1, eps, one);
  const auto back = reverse_step(x1, 1, eps, one, Tensor<double>());
  double rec_err = 0;
  for (std::size_t i = 0; i < x0.size(); ++i) rec_err = std::max(rec_err, std::abs(back.data[i] - x0.data[i]));
  if (!(rec_err < kReconstructTol)) failed.push_back("T=1 reconstruction");

  const double secs = seconds_since(t0);
  if (!(secs < kDiffusionBudgetS)) failed.push_back("runtime");
  std::string list;
  for (const auto& f : failed) list += (list.empty() ? "" : ", ") + f;
  return {failed.empty(), "alpha_bar_T " + fmt(ab, 3) + " (< 1e-4); closed vs iterative max " + fmt(closed_err, 3) +
                              " (tol " + fmt(kClosedFormTol) + "); strength 0 identity " + (identity ? "yes" : "no") +
                              "; strength 1 input-independent " + (independent ? "yes" : "no") +
                              "; T=1 reconstruction " + fmt(rec_err, 3) + " (tol " + fmt(kReconstructTol) + "); " +
                              fmt(secs, 3) + " s (budget " + fmt(kDiffusionBudgetS) + " s)" +
                              (failed.empty() ? "" : "; failed: " + list)};
}

// ---------------------------------------------------------------------------
// 8 and 9. Pipeline

PipelineConfig pipeline_config(Work& w) {
  seg_model(w);
  scheme_model(w);
  denoiser_model(w);
  // The layout generator is the E2 model: CycleGAN, inside and outside conditioning.
  const fs::path layout = w.dir / "experiments" / "E2" / "env_to_layout_unpaired.generator.ckpt";
  if (!fs::exists(layout)) criterion_constraint(w);
  PipelineConfig c;
  c.seg_extract = (w.dir / "seg" / "seg_extract.generator.ckpt").string();
  c.layout_gen = layout.string();
  c.scheme_gen = (w.dir / "scheme" / "layout_to_scheme.generator.ckpt").string();
  c.denoiser = (w.dir / "denoiser" / "denoiser.ckpt").string();
  c.tile = {corpus_params().canvas_size, corpus_params().canvas_size};
  c.strength = kStrength;
  c.upscale = kUpscale;
  c.seed = 7;
  return c;
}

Outcome criterion_resolution(Work& w) {
  const auto cfg = pipeline_config(w);
  const fs::path dir = w.dir / "pipeline";
  fs::remove_all(dir);
  int exact_area = 0;
  double scheme_noise = 0, refined_noise = 0;
  const int n = kMinTestScenes;
  if (w.test_set.size() < static_cast<std::size_t>(n)) return {false, "test split has fewer than 20 scenes"};
  for (int i = 0; i < n; ++i) {
    const auto& s = w.test_set.scenes[static_cast<std::size_t>(i)];
    const auto run = run_pipeline(s.remote, cfg, (dir / scene_dir_name(s.seed)).string());
    const auto scheme = read_png((dir / scene_dir_name(s.seed) / "scheme.png").string());
    const auto final_img = read_png((dir / scene_dir_name(s.seed) / "final.png").string());
    if (final_img.pixel_count() == static_cast<std::size_t>(kAreaRatio) * scheme.pixel_count()) ++exact_area;
    scheme_noise += run.metrics.at("scheme_boundary_noise") / n;
    refined_noise += run.metrics.at("refined_boundary_noise") / n;
  }
  const bool pass = exact_area == n && refined_noise <= scheme_noise;
  return {pass, std::to_string(n) + " scenes: final/scheme pixel ratio exactly " + fmt(kAreaRatio) + " in " +
                    std::to_string(exact_area) + "/" + std::to_string(n) + "; mean boundary_noise scheme " +
                    fmt(scheme_noise) + " -> refined " + fmt(refined_noise) + " (strength " + fmt(kStrength) +
                    ", need refined <= scheme)"};
}

Outcome criterion_determinism(Work& w) {
  const auto cfg = pipeline_config(w);
  const fs::path dir = w.dir / "determinism";
  fs::remove_all(dir);
  const auto& remote = w.test_set.scenes.front().remote;
  const auto a = run_pipeline(remote, cfg, (dir / "a").string());
  const auto b = run_pipeline(remote, cfg, (dir / "b").string());
  // Every persisted file must match byte for byte, except that the manifest
  // records wall-clock stage timings; those are compared after zeroing.
  std::set<std::string> names_a, names_b;
  for (const auto& e : fs::directory_iterator(dir / "a")) names_a.insert(e.path().filename().string());
  for (const auto& e : fs::directory_iterator(dir / "b")) names_b.insert(e.path().filename().string());
  int identical = 0, differing = 0;
  for (const auto& name : names_a) {
    if (name == kRunManifestName || !names_b.count(name)) continue;
    (slurp(dir / "a" / name) == slurp(dir / "b" / name) ? identical : differing)++;
  }
  auto untimed = [](PipelineRun r) {
    for (auto& s : r.stages) s.wall_ms = 0;
    return run_manifest_text(r);
  };
  const auto ra = load_run((dir / "a" / kRunManifestName).string());
  const auto rb = load_run((dir / "b" / kRunManifestName).string());
  const bool manifests = untimed(ra) == untimed(rb) && a.run_id == b.run_id;
  const bool pass = names_a == names_b && differing == 0 && identical > 0 && manifests;
  return {pass, std::to_string(identical) + " artifacts byte-identical, " + std::to_string(differing) +
                    " differing; file sets " + (names_a == names_b ? "equal" : "differ") + "; run_id " + a.run_id +
                    (a.run_id == b.run_id ? " on both runs" : " vs " + b.run_id) +
                    "; manifests equal apart from wall-clock timings: " + (manifests ? "yes" : "no")};
}

// ---------------------------------------------------------------------------
// 10. Exclusion

Outcome criterion_exclusion(Work&) {
  return {true,
          "excluded by design: qualitative figure comparisons and results on real city imagery need a dataset "
          "that is not available; criteria 5 to 8 run the synthetic-corpus substitutes"};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parkgen acceptance suite"};
  Work w;
  std::string work_dir = "acceptance_work";
  std::vector<int> only;
  app.add_option("--work-dir", work_dir, "Directory for cached models and run artifacts");
  app.add_option("--only", only, "Run only these criteria (1-10)")->delimiter(',');
  CLI11_PARSE(app, argc, argv);
  w.dir = fs::absolute(work_dir);
  fs::create_directories(w.dir);

  const std::vector<std::pair<std::string, std::function<Outcome(Work&)>>> criteria{
      {"legend and round trip", criterion_round_trip},
      {"tiling", criterion_tiling},
      {"gradient checks", criterion_gradients},
      {"loss oracles", criterion_losses},
      {"segmentation learnability", criterion_segmentation},
      {"constraint effect (E2 vs E3 entrances)", criterion_constraint},
      {"diffusion suite", criterion_diffusion},
      {"resolution expansion", criterion_resolution},
      {"determinism", criterion_determinism},
      {"excluded: figures and real-city results", criterion_exclusion},
  };
  int failures = 0;
  std::string log;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
    Outcome o;
    const auto t0 = Clock::now();
    try {
      o = criteria[i].second(w);
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const std::string line = "criterion " + std::to_string(id) + " " + (o.pass ? "PASS" : "FAIL") + "  " +
                             criteria[i].first + " | " + o.detail + " [" + fmt(seconds_since(t0), 4) + " s]";
    std::cout << line << std::endl;
    log += line + "\n";
    failures += !o.pass;
  }
  write_text(w.dir / "results.txt", log);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
