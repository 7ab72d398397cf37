#pragma once

// pix2pix and CycleGAN objectives, training loops and generator inference.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "parkgen/autograd.hpp"
#include "parkgen/checkpoint.hpp"
#include "parkgen/error.hpp"
#include "parkgen/kv.hpp"
#include "parkgen/nets.hpp"
#include "parkgen/optim.hpp"
#include "parkgen/random.hpp"
#include "parkgen/synthcity.hpp"

namespace parkgen {

enum class Adversarial { bce, least_squares };

struct Pix2PixObjective {
  double lambda_l1 = 100.0;
  Adversarial adversarial = Adversarial::bce;
  void validate() const { require<ConfigError>(lambda_l1 >= 0, "lambda_l1 must be >= 0"); }
};

struct CycleGANObjective {
  double lambda_cycle = 10.0;
  double lambda_identity = 5.0;
  Adversarial adversarial = Adversarial::bce;
  void validate() const {
    require<ConfigError>(lambda_cycle >= 0 && lambda_identity >= 0,
                         "cycle and identity weights must be >= 0");
  }
};

/// Ordered (name, value) addends of a loss.
using LossTerms = std::vector<std::pair<std::string, double>>;

template <typename T>
using Net = std::function<ag::Var<T>(const ag::Var<T>&)>;

template <typename T>
Net<T> as_net(const Weights<T>& w) {
  return [&w](const ag::Var<T>& x) { return forward(w, x); };
}

template <typename T>
struct Pix2PixLosses {
  ag::Var<T> generator;
  ag::Var<T> discriminator;
  LossTerms terms;  // G_adv, G_l1, D_real, D_fake
};

template <typename T>
struct CycleGANLosses {
  ag::Var<T> generator;
  ag::Var<T> disc_x;
  ag::Var<T> disc_y;
  LossTerms terms;
};

namespace detail {

template <typename T>
ag::Var<T> adversarial(const ag::Var<T>& scores, bool real, Adversarial kind) {
  const T target = real ? T(1) : T(0);
  return kind == Adversarial::bce ? ag::bce_with_logits(scores, target)
                                  : ag::least_squares(scores, target);
}

template <typename T>
ag::Var<T> half_sum(const ag::Var<T>& a, const ag::Var<T>& b) {
  return ag::weighted_sum<T>({{T(0.5), a}, {T(0.5), b}});
}

inline double scalar(const auto& v) { return static_cast<double>(v->value.data[0]); }

}  // namespace detail

/// Conditional GAN losses. The discriminator scores (input, output) pairs
/// concatenated along channels; loss_D uses the detached generator output.
template <typename T>
Pix2PixLosses<T> pix2pix_losses(const Net<T>& G, const Net<T>& D, const ag::Var<T>& x,
                                const ag::Var<T>& y, const Pix2PixObjective& obj) {
  obj.validate();
  const auto& X = x->value;
  const auto& Y = y->value;
  require(X.n() == Y.n() && X.h() == Y.h() && X.w() == Y.w(), "pix2pix: misaligned batches ",
          X.shape.str(), " vs ", Y.shape.str());
  const auto fake = G(x);
  require(fake->value.shape == Y.shape, "pix2pix: generator output ", fake->value.shape.str(),
          " does not match target ", Y.shape.str());
  const auto g_adv = detail::adversarial(D(ag::concat(x, fake)), true, obj.adversarial);
  const auto l1 = ag::l1_loss(fake, y);
  const auto d_real = detail::adversarial(D(ag::concat(x, y)), true, obj.adversarial);
  const auto d_fake =
      detail::adversarial(D(ag::concat(x, ag::detach(fake))), false, obj.adversarial);
  Pix2PixLosses<T> out;
  out.generator = ag::weighted_sum<T>({{T(1), g_adv}, {static_cast<T>(obj.lambda_l1), l1}});
  out.discriminator = detail::half_sum(d_real, d_fake);
  out.terms = {{"G_adv", detail::scalar(g_adv)},
               {"G_l1", obj.lambda_l1 * detail::scalar(l1)},
               {"D_real", 0.5 * detail::scalar(d_real)},
               {"D_fake", 0.5 * detail::scalar(d_fake)}};
  return out;
}

/// Cycle-consistent GAN losses with G: X->Y, F: Y->X.
template <typename T>
CycleGANLosses<T> cyclegan_losses(const Net<T>& G, const Net<T>& F, const Net<T>& DX,
                                  const Net<T>& DY, const ag::Var<T>& x, const ag::Var<T>& y,
                                  const CycleGANObjective& obj) {
  obj.validate();
  require(x->value.n() == y->value.n(), "cyclegan: batch sizes differ ", x->value.shape.str(),
          " vs ", y->value.shape.str());
  const auto fake_y = G(x);
  const auto fake_x = F(y);
  require(fake_y->value.shape == y->value.shape && fake_x->value.shape == x->value.shape,
          "cyclegan: generator outputs do not match domain shapes");
  const auto adv_g = detail::adversarial(DY(fake_y), true, obj.adversarial);
  const auto adv_f = detail::adversarial(DX(fake_x), true, obj.adversarial);
  const auto cyc_x = ag::l1_loss(F(fake_y), x);
  const auto cyc_y = ag::l1_loss(G(fake_x), y);
  const T lc = static_cast<T>(obj.lambda_cycle), li = static_cast<T>(obj.lambda_identity);
  std::vector<std::pair<T, ag::Var<T>>> parts{{T(1), adv_g}, {T(1), adv_f}, {lc, cyc_x}, {lc, cyc_y}};
  double id_y = 0, id_x = 0;
  if (obj.lambda_identity > 0) {
    const auto idy = ag::l1_loss(G(y), y);
    const auto idx = ag::l1_loss(F(x), x);
    parts.push_back({li, idy});
    parts.push_back({li, idx});
    id_y = obj.lambda_identity * detail::scalar(idy);
    id_x = obj.lambda_identity * detail::scalar(idx);
  }
  const auto dy_real = detail::adversarial(DY(y), true, obj.adversarial);
  const auto dy_fake = detail::adversarial(DY(ag::detach(fake_y)), false, obj.adversarial);
  const auto dx_real = detail::adversarial(DX(x), true, obj.adversarial);
  const auto dx_fake = detail::adversarial(DX(ag::detach(fake_x)), false, obj.adversarial);
  CycleGANLosses<T> out;
  out.generator = ag::weighted_sum<T>(parts);
  out.disc_x = detail::half_sum(dx_real, dx_fake);
  out.disc_y = detail::half_sum(dy_real, dy_fake);
  out.terms = {{"G_adv", detail::scalar(adv_g)},
               {"F_adv", detail::scalar(adv_f)},
               {"cycle_x", obj.lambda_cycle * detail::scalar(cyc_x)},
               {"cycle_y", obj.lambda_cycle * detail::scalar(cyc_y)},
               {"identity_y", id_y},
               {"identity_x", id_x},
               {"DX_real", 0.5 * detail::scalar(dx_real)},
               {"DX_fake", 0.5 * detail::scalar(dx_fake)},
               {"DY_real", 0.5 * detail::scalar(dy_real)},
               {"DY_fake", 0.5 * detail::scalar(dy_fake)}};
  return out;
}

// ---------------------------------------------------------------------------
// Training configuration and history

enum class Task { seg_extract, env_to_layout_supervised, env_to_layout_unpaired, layout_to_scheme };
enum class Objective { pix2pix, cyclegan };

inline const char* to_string(Task t) {
  switch (t) {
    case Task::seg_extract: return "seg_extract";
    case Task::env_to_layout_supervised: return "env_to_layout_supervised";
    case Task::env_to_layout_unpaired: return "env_to_layout_unpaired";
    case Task::layout_to_scheme: return "layout_to_scheme";
  }
  return "?";
}
inline Task task_from_string(const std::string& s) {
  for (auto t : {Task::seg_extract, Task::env_to_layout_supervised, Task::env_to_layout_unpaired,
                 Task::layout_to_scheme})
    if (s == to_string(t)) return t;
  fail<ConfigError>("unknown task '", s, "'");
}
inline const char* to_string(Objective o) { return o == Objective::pix2pix ? "pix2pix" : "cyclegan"; }

inline Objective default_objective(Task t) {
  return t == Task::env_to_layout_supervised ? Objective::pix2pix : Objective::cyclegan;
}

struct TrainConfig {
  int epochs = 10;
  int batch_size = 1;
  double learning_rate = 2e-4;
  double beta1 = 0.5;
  std::uint64_t seed = 0;
  int eval_every = 0;  // 0 disables intermediate checkpoints and evaluation
  std::optional<Objective> objective;  // task default when unset
  /// Mask the environment input to the site interior (environment tasks).
  bool interior_only = false;
  Pix2PixObjective pix2pix;
  CycleGANObjective cyclegan;
  std::optional<ArchSpec> generator;      // objective default when unset
  std::optional<ArchSpec> discriminator;  // objective default when unset

  void validate() const {
    require<ConfigError>(epochs >= 0, "epochs must be >= 0");
    require<ConfigError>(batch_size >= 1, "batch_size must be >= 1");
    require<ConfigError>(learning_rate > 0, "learning_rate must be > 0");
    require<ConfigError>(beta1 >= 0 && beta1 < 1, "beta1 must be in [0,1)");
    require<ConfigError>(eval_every >= 0, "eval_every must be >= 0");
    pix2pix.validate();
    cyclegan.validate();
  }

  Objective objective_for(Task t) const { return objective.value_or(default_objective(t)); }

  ArchSpec generator_for(Task t) const {
    if (generator) return *generator;
    return objective_for(t) == Objective::pix2pix ? ArchSpec::unet(3, 16) : ArchSpec::resnet(4, 16);
  }
  ArchSpec discriminator_for(Task t) const {
    ArchSpec d = discriminator.value_or(ArchSpec::patch(3, 4, 16));
    d.in_channels = objective_for(t) == Objective::pix2pix ? 6 : 3;
    return d;
  }

  static TrainConfig from_kv(const KeyValues& kv) {
    TrainConfig c;
    c.epochs = kv.get("epochs", c.epochs);
    c.batch_size = kv.get("batch_size", c.batch_size);
    c.learning_rate = kv.get("learning_rate", c.learning_rate);
    c.beta1 = kv.get("beta1", c.beta1);
    c.seed = kv.get<std::uint64_t>("seed", c.seed);
    c.eval_every = kv.get("eval_every", c.eval_every);
    c.interior_only = kv.get("interior_only", c.interior_only);
    if (kv.has("objective")) {
      const auto o = kv.str("objective");
      require<ConfigError>(o == "pix2pix" || o == "cyclegan", "unknown objective '", o, "'");
      c.objective = o == "pix2pix" ? Objective::pix2pix : Objective::cyclegan;
    }
    const auto adv = kv.str("adversarial", "bce");
    require<ConfigError>(adv == "bce" || adv == "least_squares", "unknown adversarial loss '", adv, "'");
    const auto kind = adv == "bce" ? Adversarial::bce : Adversarial::least_squares;
    c.pix2pix.adversarial = c.cyclegan.adversarial = kind;
    c.pix2pix.lambda_l1 = kv.get("lambda_l1", c.pix2pix.lambda_l1);
    c.cyclegan.lambda_cycle = kv.get("lambda_cycle", c.cyclegan.lambda_cycle);
    c.cyclegan.lambda_identity = kv.get("lambda_identity", 0.5 * c.cyclegan.lambda_cycle);
    if (kv.has("generator.kind")) {
      ArchSpec g;
      g.kind = arch_kind_from_string(kv.str("generator.kind"));
      g.base_width = kv.get("generator.base_width", g.base_width);
      g.depth = kv.get("generator.depth", g.kind == ArchKind::resnet_gen ? 4 : 3);
      g.norm = norm_kind_from_string(kv.str("generator.norm", "instance"));
      c.generator = g;
    }
    if (kv.has("discriminator.depth") || kv.has("discriminator.base_width")) {
      ArchSpec d = ArchSpec::patch(3, kv.get("discriminator.depth", 4),
                                   kv.get("discriminator.base_width", 16));
      d.norm = norm_kind_from_string(kv.str("discriminator.norm", "instance"));
      c.discriminator = d;
    }
    c.validate();
    return c;
  }

  KeyValues to_kv() const {
    KeyValues kv;
    kv.set("epochs", epochs);
    kv.set("batch_size", batch_size);
    kv.set("learning_rate", learning_rate);
    kv.set("beta1", beta1);
    kv.set("seed", seed);
    kv.set("eval_every", eval_every);
    kv.set("interior_only", std::string(interior_only ? "true" : "false"));
    if (objective) kv.set("objective", std::string(to_string(*objective)));
    kv.set("adversarial", std::string(pix2pix.adversarial == Adversarial::bce ? "bce" : "least_squares"));
    kv.set("lambda_l1", pix2pix.lambda_l1);
    kv.set("lambda_cycle", cyclegan.lambda_cycle);
    kv.set("lambda_identity", cyclegan.lambda_identity);
    if (generator) {
      kv.set("generator.kind", std::string(to_string(generator->kind)));
      kv.set("generator.base_width", generator->base_width);
      kv.set("generator.depth", generator->depth);
      kv.set("generator.norm", std::string(to_string(generator->norm)));
    }
    if (discriminator) {
      kv.set("discriminator.depth", discriminator->depth);
      kv.set("discriminator.base_width", discriminator->base_width);
      kv.set("discriminator.norm", std::string(to_string(discriminator->norm)));
    }
    return kv;
  }
};

struct EpochRecord {
  int epoch = 0;
  LossTerms values;
  bool operator==(const EpochRecord&) const = default;
};

struct History {
  std::vector<EpochRecord> records;

  bool empty() const { return records.empty(); }
  std::size_t size() const { return records.size(); }
  bool operator==(const History&) const = default;

  std::optional<double> value(std::size_t i, const std::string& term) const {
    for (const auto& [k, v] : records.at(i).values)
      if (k == term) return v;
    return std::nullopt;
  }

  std::string to_csv() const {
    std::ostringstream oss;
    oss.precision(17);
    oss << "epoch,term,value\n";
    for (const auto& r : records)
      for (const auto& [k, v] : r.values) oss << r.epoch << ',' << k << ',' << v << '\n';
    return oss.str();
  }

  std::string summary() const {
    std::ostringstream oss;
    oss.precision(6);
    oss << "epochs completed: " << records.size() << '\n';
    if (records.empty()) return oss.str();
    oss << "final epoch " << records.back().epoch << ":\n";
    for (const auto& [k, v] : records.back().values) oss << "  " << k << " = " << v << '\n';
    return oss.str();
  }
};

// ---------------------------------------------------------------------------
// Task data

/// Environment map with everything outside the site set to Background.
inline ClassMap mask_to_interior(const ClassMap& env) {
  const int site = env.legend->id_of("Red line");
  const auto background = static_cast<std::uint8_t>(env.legend->id_of("Background"));
  ClassMap out = env;
  for (auto& v : out.data)
    if (v != site) v = background;
  return out;
}

/// Input (A) and target (B) images of a task for one scene.
inline std::pair<RasterImage, RasterImage> task_pair(Task task, const SceneQuad& s,
                                                     bool interior_only) {
  auto env_image = [&] {
    return encode_classmap(interior_only ? mask_to_interior(s.environment) : s.environment);
  };
  switch (task) {
    case Task::seg_extract: return {s.remote, encode_classmap(s.environment)};
    case Task::env_to_layout_supervised:
    case Task::env_to_layout_unpaired: return {env_image(), encode_classmap(s.layout)};
    case Task::layout_to_scheme: return {encode_classmap(s.layout), s.scheme};
  }
  fail("unreachable");
}

/// Legend the task output is quantized against, if it is a class map.
inline LegendPtr task_output_legend(Task task) {
  switch (task) {
    case Task::seg_extract: return Legend::environment();
    case Task::env_to_layout_supervised:
    case Task::env_to_layout_unpaired: return Legend::park();
    case Task::layout_to_scheme: return nullptr;
  }
  return nullptr;
}

// ---------------------------------------------------------------------------
// Inference

inline RasterImage infer(const Checkpoint& ckpt, const RasterImage& img) {
  const auto& spec = ckpt.spec();
  require(spec.is_generator(), "infer needs a generator checkpoint, got ", to_string(spec.kind));
  require(spec.in_channels == 3 && spec.out_channels == 3, "generator must map RGB to RGB");
  if (ckpt.meta.has("image_size")) {
    const int size = ckpt.meta.get<int>("image_size");
    require(img.width == size && img.height == size, "checkpoint expects ", size, "x", size,
            " images, got ", img.width, "x", img.height);
  }
  spec.check_input(img.height, img.width);
  return to_image(predict(ckpt.weights, to_tensor<float>(img)));
}

// ---------------------------------------------------------------------------
// Training

struct TrainResult {
  /// generator (A->B), discriminator (scores B), and for CycleGAN inverse (B->A), disc_a.
  std::map<std::string, Checkpoint> checkpoints;
  History history;
};

namespace detail {

inline void check_finite(const LossTerms& terms, int epoch) {
  for (const auto& [k, v] : terms)
    if (!std::isfinite(v))
      fail<NumericError>("epoch ", epoch, ": loss term '", k, "' is not finite (", v, ")");
}

inline std::vector<std::size_t> permutation(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> p(n);
  std::iota(p.begin(), p.end(), 0);
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(p[i - 1], p[rng.next() % i]);
  return p;
}

inline Tensor<float> batch_of(const std::vector<RasterImage>& images,
                              const std::vector<std::size_t>& order, std::size_t begin,
                              std::size_t count) {
  std::vector<RasterImage> picked;
  for (std::size_t i = begin; i < begin + count; ++i) picked.push_back(images[order[i]]);
  return to_tensor<float>(std::span<const RasterImage>(picked));
}

inline Checkpoint make_checkpoint(const Weights<float>& w, Task task, const std::string& role,
                                  const TrainConfig& cfg, int epochs_done, int image_size) {
  Checkpoint c{w.clone(), {}};
  c.meta.set("task", std::string(to_string(task)));
  c.meta.set("role", role);
  c.meta.set("objective", std::string(to_string(cfg.objective_for(task))));
  c.meta.set("image_size", image_size);
  c.meta.set("epochs", epochs_done);
  c.meta.set("train_seed", cfg.seed);
  c.meta.set("interior_only", std::string(cfg.interior_only ? "true" : "false"));
  if (const auto legend = task_output_legend(task)) c.meta.set("output_legend", legend->id());
  return c;
}

}  // namespace detail

/// Mean pixel accuracy of quantized generator output against the task's
/// class-map targets; absent for tasks without a class-map output.
inline std::optional<double> evaluate_task_accuracy(const Checkpoint& gen, Task task,
                                                    const Corpus& corpus, bool interior_only) {
  const auto legend = task_output_legend(task);
  if (!legend || corpus.empty()) return std::nullopt;
  double correct = 0, total = 0;
  for (const auto& s : corpus.scenes) {
    const auto [in, _] = task_pair(task, s, interior_only);
    const auto pred = quantize_to_classes(infer(gen, in), legend);
    const auto& truth = task == Task::seg_extract ? s.environment : s.layout;
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred.data[i] == truth.data[i];
    total += static_cast<double>(pred.size());
  }
  return correct / total;
}

/// Trains the task's networks. Data order, initialization and all sampling
/// derive from `cfg.seed`. When `out_dir` is set, checkpoints are written
/// there at the end and every `eval_every` epochs, with the history CSV.
inline TrainResult train(Task task, const Corpus& corpus, const TrainConfig& cfg,
                         const Corpus* eval = nullptr, const std::string& out_dir = {}) {
  cfg.validate();
  require(!corpus.empty(), "cannot train ", to_string(task), " on an empty corpus");
  const Objective objective = cfg.objective_for(task);
  std::vector<RasterImage> A, B;
  for (const auto& s : corpus.scenes) {
    auto [a, b] = task_pair(task, s, cfg.interior_only);
    A.push_back(std::move(a));
    B.push_back(std::move(b));
  }
  const int size = A.front().width;
  require(A.front().height == size, "training images must be square");

  ArchSpec gspec = cfg.generator_for(task);
  require<ConfigError>(gspec.is_generator(), "generator kind must be unet_gen or resnet_gen");
  gspec.in_channels = gspec.out_channels = 3;
  const ArchSpec dspec = cfg.discriminator_for(task);
  gspec.check_input(size, size);
  dspec.check_input(size, size);

  auto G = build<float>(gspec, mix_seed(cfg.seed, 1));
  auto D = build<float>(dspec, mix_seed(cfg.seed, 2));
  std::optional<Weights<float>> F, DA;
  if (objective == Objective::cyclegan) {
    F = build<float>(gspec, mix_seed(cfg.seed, 3));
    DA = build<float>(dspec, mix_seed(cfg.seed, 4));
  }
  Adam<float> optG(G, cfg.learning_rate, cfg.beta1), optD(D, cfg.learning_rate, cfg.beta1);
  std::optional<Adam<float>> optF, optDA;
  if (F) {
    optF.emplace(*F, cfg.learning_rate, cfg.beta1);
    optDA.emplace(*DA, cfg.learning_rate, cfg.beta1);
  }

  const auto snapshot = [&](int epochs_done) {
    std::map<std::string, Checkpoint> out;
    out.emplace("generator", detail::make_checkpoint(G, task, "generator", cfg, epochs_done, size));
    out.emplace("discriminator", detail::make_checkpoint(D, task, "discriminator", cfg, epochs_done, size));
    if (F) {
      out.emplace("inverse", detail::make_checkpoint(*F, task, "inverse", cfg, epochs_done, size));
      out.emplace("disc_a", detail::make_checkpoint(*DA, task, "disc_a", cfg, epochs_done, size));
    }
    return out;
  };
  const auto write = [&](const std::map<std::string, Checkpoint>& ckpts, const std::string& suffix) {
    if (out_dir.empty()) return;
    std::filesystem::create_directories(out_dir);
    for (const auto& [role, c] : ckpts)
      save_checkpoint((std::filesystem::path(out_dir) /
                       (std::string(to_string(task)) + "." + role + suffix + ".ckpt"))
                          .string(),
                      c);
  };

  TrainResult result;
  const std::size_t n = A.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order_a = detail::permutation(n, mix_seed(cfg.seed, 1000 + epoch));
    // Unpaired objectives see targets in an independent order.
    const auto order_b = objective == Objective::cyclegan
                             ? detail::permutation(n, mix_seed(cfg.seed, 2000 + epoch))
                             : order_a;
    std::map<std::string, double> sums;
    std::vector<std::string> names;
    int steps = 0;
    for (std::size_t begin = 0; begin < n; begin += bs) {
      const std::size_t count = std::min(bs, n - begin);
      const auto x = ag::constant(detail::batch_of(A, order_a, begin, count));
      const auto y = ag::constant(detail::batch_of(B, order_b, begin, count));
      LossTerms terms;
      // Both losses are built from the same forward pass. The generator
      // step only moves generator weights; discriminator gradients picked
      // up on the way are cleared before the discriminator's own step.
      if (objective == Objective::pix2pix) {
        G.zero_grad();
        auto losses = pix2pix_losses<float>(as_net(G), as_net(D), x, y, cfg.pix2pix);
        terms = losses.terms;
        detail::check_finite(terms, epoch);
        ag::backward(losses.generator);
        optG.step();
        D.zero_grad();
        ag::backward(losses.discriminator);
        optD.step();
      } else {
        G.zero_grad();
        F->zero_grad();
        auto losses = cyclegan_losses<float>(as_net(G), as_net(*F), as_net(*DA), as_net(D), x, y,
                                             cfg.cyclegan);
        terms = losses.terms;
        detail::check_finite(terms, epoch);
        ag::backward(losses.generator);
        optG.step();
        optF->step();
        D.zero_grad();
        DA->zero_grad();
        ag::backward(losses.disc_y);
        ag::backward(losses.disc_x);
        optD.step();
        optDA->step();
      }
      for (const auto& [k, v] : terms) {
        if (!sums.count(k)) names.push_back(k);
        sums[k] += v;
      }
      ++steps;
    }
    if (!G.all_finite() || !D.all_finite() || (F && !F->all_finite()))
      fail<NumericError>("epoch ", epoch, ": parameters became non-finite");
    EpochRecord rec{epoch, {}};
    for (const auto& k : names) rec.values.push_back({k, sums[k] / steps});
    if (cfg.eval_every > 0 && epoch % cfg.eval_every == 0) {
      auto ckpts = snapshot(epoch);
      if (eval)
        if (auto acc = evaluate_task_accuracy(ckpts.at("generator"), task, *eval, cfg.interior_only))
          rec.values.push_back({"eval_pixel_accuracy", *acc});
      if (epoch != cfg.epochs) write(ckpts, ".e" + std::to_string(epoch));
    }
    result.history.records.push_back(std::move(rec));
  }
  result.checkpoints = snapshot(cfg.epochs);
  write(result.checkpoints, "");
  if (!out_dir.empty()) {
    std::ofstream(std::filesystem::path(out_dir) / (std::string(to_string(task)) + ".history.csv"))
        << result.history.to_csv();
    std::ofstream(std::filesystem::path(out_dir) / (std::string(to_string(task)) + ".summary.txt"))
        << "task: " << to_string(task) << "\nobjective: " << to_string(objective) << "\n"
        << result.history.summary();
  }
  return result;
}

}  // namespace parkgen
