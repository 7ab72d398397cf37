#pragma once

// Pixel-space DDPM: noise schedule, closed-form forward noising, ancestral
// reverse steps, denoiser training, img2img refinement and staged upscaling.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "parkgen/autograd.hpp"
#include "parkgen/checkpoint.hpp"
#include "parkgen/error.hpp"
#include "parkgen/gan.hpp"
#include "parkgen/kv.hpp"
#include "parkgen/nets.hpp"
#include "parkgen/optim.hpp"
#include "parkgen/random.hpp"
#include "parkgen/raster.hpp"
#include "parkgen/tensor.hpp"

namespace parkgen {

class NoiseSchedule {
 public:
  /// Linear betas from beta_start to beta_end inclusive.
  static NoiseSchedule linear(int steps, double beta_start, double beta_end) {
    return NoiseSchedule(linear_betas(steps, beta_start, beta_end));
  }

  /// The 1e-4..0.02 range of a 1000-step schedule rescaled to `steps`, so
  /// that the summed betas stay near 10 and the endpoint is pure noise.
  /// Below 21 steps the tail would reach 1, so betas are clipped at 0.9999.
  static NoiseSchedule desk(int steps = 200) {
    require<ConfigError>(steps >= 2, "desk schedule needs at least two steps");
    const double scale = 1000.0 / steps;
    auto b = linear_betas(steps, 1e-4 * scale, 0.02 * scale);
    for (auto& v : b) v = std::min(v, 0.9999);
    return NoiseSchedule(std::move(b));
  }

  explicit NoiseSchedule(std::vector<double> betas) : betas_(std::move(betas)) {
    require<ConfigError>(!betas_.empty(), "schedule needs at least one step");
    double prod = 1.0, prev = 0.0;
    for (std::size_t i = 0; i < betas_.size(); ++i) {
      const double b = betas_[i];
      require<ConfigError>(b > 0.0 && b < 1.0, "beta_", i + 1, " = ", b, " is outside (0,1)");
      require<ConfigError>(b >= prev, "betas must be non-decreasing (beta_", i + 1, ")");
      prev = b;
      prod *= 1.0 - b;
      alpha_bars_.push_back(prod);
    }
    require<ConfigError>(prod < 1e-4, "alpha_bar_T = ", prod,
                         " does not reach pure noise (needs < 1e-4)");
  }

  int steps() const { return static_cast<int>(betas_.size()); }
  /// Indexed from 1; alpha_bar(0) is 1.
  double beta(int t) const { return betas_.at(check(t, 1) - 1); }
  double alpha(int t) const { return 1.0 - beta(t); }
  double alpha_bar(int t) const { return check(t, 0) == 0 ? 1.0 : alpha_bars_[t - 1]; }
  const std::vector<double>& betas() const { return betas_; }

  /// Betas are stored in full so any validated schedule round-trips exactly.
  void write(KeyValues& kv, const std::string& prefix = "schedule.") const {
    kv.set(prefix + "steps", steps());
    std::ostringstream oss;
    oss.precision(17);
    for (std::size_t i = 0; i < betas_.size(); ++i) oss << (i ? "," : "") << betas_[i];
    kv.set(prefix + "betas", oss.str());
  }
  static NoiseSchedule read(const KeyValues& kv, const std::string& prefix = "schedule.") {
    const int steps = kv.get<int>(prefix + "steps");
    std::vector<double> b;
    std::istringstream iss(kv.str(prefix + "betas"));
    for (std::string tok; std::getline(iss, tok, ',');) {
      try {
        std::size_t used = 0;
        b.push_back(std::stod(tok, &used));
        require<ConfigError>(used == tok.size(), "bad beta '", tok, "'");
      } catch (const std::logic_error&) {
        fail<ConfigError>("bad beta '", tok, "' in ", prefix, "betas");
      }
    }
    require<ConfigError>(static_cast<int>(b.size()) == steps, prefix, "betas has ", b.size(),
                         " values, expected ", steps);
    return NoiseSchedule(std::move(b));
  }

  bool operator==(const NoiseSchedule& o) const { return betas_ == o.betas_; }

 private:
  int check(int t, int lo) const {
    require(t >= lo && t <= steps(), "timestep ", t, " outside [", lo, ", ", steps(), "]");
    return t;
  }

  std::vector<double> betas_;
  std::vector<double> alpha_bars_;

  static std::vector<double> linear_betas(int steps, double beta_start, double beta_end) {
    require<ConfigError>(steps >= 1, "schedule needs at least one step");
    std::vector<double> b(steps);
    for (int i = 0; i < steps; ++i)
      b[i] = steps == 1 ? beta_end : beta_start + (beta_end - beta_start) * i / (steps - 1);
    return b;
  }
};

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps. t = 0 returns x0.
template <typename T>
Tensor<T> forward_diffuse(const Tensor<T>& x0, int t, const Tensor<T>& eps, const NoiseSchedule& s) {
  require(t >= 0 && t <= s.steps(), "timestep ", t, " outside [0, ", s.steps(), "]");
  require(eps.shape == x0.shape, "noise shape ", eps.shape.str(), " does not match ", x0.shape.str());
  if (t == 0) return x0;
  const double a = std::sqrt(s.alpha_bar(t)), b = std::sqrt(1.0 - s.alpha_bar(t));
  Tensor<T> out(x0.shape);
  for (std::size_t i = 0; i < out.size(); ++i)
    out.data[i] = static_cast<T>(a * x0.data[i] + b * eps.data[i]);
  return out;
}

/// One ancestral step with sigma_t^2 = beta_t. The step into t = 0 is
/// deterministic and ignores z, which may then be empty.
template <typename T>
Tensor<T> reverse_step(const Tensor<T>& xt, int t, const Tensor<T>& eps_pred,
                       const NoiseSchedule& s, const Tensor<T>& z) {
  require(t >= 1 && t <= s.steps(), "timestep ", t, " outside [1, ", s.steps(), "]");
  require(eps_pred.shape == xt.shape, "eps_pred shape ", eps_pred.shape.str(), " does not match ",
          xt.shape.str());
  if (t > 1) require(z.shape == xt.shape, "z shape ", z.shape.str(), " does not match ", xt.shape.str());
  const double beta = s.beta(t);
  const double inv_sqrt_alpha = 1.0 / std::sqrt(1.0 - beta);
  const double coef = beta / std::sqrt(1.0 - s.alpha_bar(t));
  const double sigma = t > 1 ? std::sqrt(beta) : 0.0;
  Tensor<T> out(xt.shape);
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = inv_sqrt_alpha * (xt.data[i] - coef * eps_pred.data[i]);
    if (t > 1) v += sigma * z.data[i];
    out.data[i] = static_cast<T>(v);
  }
  return out;
}

template <typename T>
Tensor<T> normal_tensor(Shape shape, Rng& rng) {
  Tensor<T> out(shape);
  for (auto& v : out.data) v = static_cast<T>(rng.normal());
  return out;
}

// ---------------------------------------------------------------------------
// Denoiser training

struct DenoiserConfig {
  int epochs = 60;
  int batch_size = 4;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  std::uint64_t seed = 0;
  int steps = 200;
  /// Decay of the weight moving average that ends up in the checkpoint; 0 keeps raw weights.
  double ema_decay = 0.995;
  ArchSpec arch = ArchSpec::denoiser(2, 16, 32);

  void validate() const {
    require<ConfigError>(epochs >= 0, "epochs must be >= 0");
    require<ConfigError>(batch_size >= 1, "batch_size must be >= 1");
    require<ConfigError>(learning_rate > 0, "learning_rate must be > 0");
    require<ConfigError>(beta1 >= 0 && beta1 < 1, "beta1 must be in [0,1)");
    require<ConfigError>(ema_decay >= 0 && ema_decay < 1, "ema_decay must be in [0,1)");
    require<ConfigError>(arch.kind == ArchKind::diffusion_unet, "denoiser must be a diffusion_unet");
    arch.validate();
  }

  NoiseSchedule schedule() const { return NoiseSchedule::desk(steps); }

  static DenoiserConfig from_kv(const KeyValues& kv) {
    DenoiserConfig c;
    c.epochs = kv.get("epochs", c.epochs);
    c.batch_size = kv.get("batch_size", c.batch_size);
    c.learning_rate = kv.get("learning_rate", c.learning_rate);
    c.beta1 = kv.get("beta1", c.beta1);
    c.seed = kv.get<std::uint64_t>("seed", c.seed);
    c.steps = kv.get("steps", c.steps);
    c.ema_decay = kv.get("ema_decay", c.ema_decay);
    c.arch = ArchSpec::denoiser(kv.get("depth", c.arch.depth), kv.get("base_width", c.arch.base_width),
                                kv.get("time_embedding_dim", c.arch.time_embedding_dim));
    c.arch.norm = norm_kind_from_string(kv.str("norm", to_string(c.arch.norm)));
    c.validate();
    return c;
  }
};

struct DenoiserResult {
  Checkpoint checkpoint;
  History history;
};

/// Noise-prediction MSE on one batch at the given steps and noise.
template <typename T>
ag::Var<T> denoiser_loss(const Weights<T>& w, const Tensor<T>& x0, const std::vector<int>& steps,
                         const Tensor<T>& eps, const NoiseSchedule& s) {
  Tensor<T> xt(x0.shape);
  const std::size_t len = x0.size() / x0.n();
  for (int n = 0; n < x0.n(); ++n) {
    const double a = std::sqrt(s.alpha_bar(steps[n])), b = std::sqrt(1.0 - s.alpha_bar(steps[n]));
    for (std::size_t i = n * len; i < (n + 1) * len; ++i)
      xt.data[i] = static_cast<T>(a * x0.data[i] + b * eps.data[i]);
  }
  return ag::mse_loss(forward(w, ag::constant(std::move(xt)), &steps), ag::constant(eps));
}

inline DenoiserResult train_denoiser(const std::vector<RasterImage>& images, const DenoiserConfig& cfg) {
  cfg.validate();
  require(!images.empty(), "cannot train a denoiser on zero images");
  const int size = images.front().width;
  require(images.front().height == size, "denoiser images must be square");
  cfg.arch.check_input(size, size);
  const auto sched = cfg.schedule();
  auto w = build<float>(cfg.arch, mix_seed(cfg.seed, 11));
  Adam<float> opt(w, cfg.learning_rate, cfg.beta1);
  auto ema = w.clone();
  Rng rng(mix_seed(cfg.seed, 12));
  DenoiserResult result;
  const std::size_t n = images.size();
  const auto bs = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto order = detail::permutation(n, mix_seed(cfg.seed, 3000 + epoch));
    double sum = 0;
    int batches = 0;
    for (std::size_t begin = 0; begin < n; begin += bs) {
      const std::size_t count = std::min(bs, n - begin);
      const auto x0 = detail::batch_of(images, order, begin, count);
      std::vector<int> steps(count);
      for (auto& t : steps) t = rng.uniform_int(1, sched.steps());
      const auto eps = normal_tensor<float>(x0.shape, rng);
      w.zero_grad();
      const auto loss = denoiser_loss(w, x0, steps, eps, sched);
      const double v = loss->value.data[0];
      if (!std::isfinite(v)) fail<NumericError>("epoch ", epoch, ": loss term 'mse' is not finite (", v, ")");
      ag::backward(loss);
      opt.step();
      if (cfg.ema_decay > 0) {
        const auto d = static_cast<float>(cfg.ema_decay);
        for (std::size_t p = 0; p < w.params().size(); ++p) {
          auto& e = ema.params()[p].second->value.data;
          const auto& cur = w.params()[p].second->value.data;
          for (std::size_t i = 0; i < e.size(); ++i) e[i] = d * e[i] + (1.0f - d) * cur[i];
        }
      }
      sum += v;
      ++batches;
    }
    result.history.records.push_back({epoch, {{"mse", sum / batches}}});
  }
  result.checkpoint.weights = cfg.ema_decay > 0 ? std::move(ema) : std::move(w);
  auto& meta = result.checkpoint.meta;
  meta.set("role", std::string("denoiser"));
  meta.set("image_size", size);
  meta.set("epochs", cfg.epochs);
  meta.set("train_seed", cfg.seed);
  sched.write(meta);
  return result;
}

inline NoiseSchedule schedule_of(const Checkpoint& ckpt) {
  require(ckpt.meta.has("schedule.steps"), "checkpoint carries no noise schedule");
  return NoiseSchedule::read(ckpt.meta);
}

// ---------------------------------------------------------------------------
// Refinement

struct RefineParams {
  double strength = 0.3;
  std::string prompt = "urban park, top view";  // provenance only
  std::uint64_t seed = 0;

  void validate() const {
    require<ConfigError>(strength >= 0.0 && strength <= 1.0, "strength must be in [0,1], got ", strength);
  }
};

/// img2img: noise the input to round(strength * T), then denoise to 0.
/// Strength 1 starts from pure noise, so the input is ignored entirely.
inline RasterImage refine(const RasterImage& scheme, const RefineParams& params,
                          const Checkpoint& ckpt, const NoiseSchedule& sched) {
  params.validate();
  require(ckpt.spec().kind == ArchKind::diffusion_unet, "refine needs a denoiser checkpoint, got ",
          to_string(ckpt.spec().kind));
  const int size = ckpt.meta.get<int>("image_size", scheme.width);
  require(scheme.width == size && scheme.height == size, "denoiser was trained on ", size, "x",
          size, " images, got ", scheme.width, "x", scheme.height);
  const int t_star = static_cast<int>(std::lround(params.strength * sched.steps()));
  if (t_star == 0) return scheme;
  Rng rng(params.seed);
  const auto x0 = to_tensor<float>(scheme);
  const auto eps = normal_tensor<float>(x0.shape, rng);
  auto x = t_star == sched.steps() ? eps : forward_diffuse(x0, t_star, eps, sched);
  for (int t = t_star; t >= 1; --t) {
    const std::vector<int> steps{t};
    const auto eps_pred = predict(ckpt.weights, x, &steps);
    const auto z = t > 1 ? normal_tensor<float>(x.shape, rng) : Tensor<float>();
    x = reverse_step(x, t, eps_pred, sched, z);
    if (!x.all_finite()) fail<NumericError>("refine: non-finite sample at step ", t);
  }
  auto out = to_image(x);
  out.meters_per_pixel = scheme.meters_per_pixel;
  return out;
}

/// Refines an image of any size >= the denoiser's tile size by refining
/// overlapping tiles independently and averaging where they overlap.
inline RasterImage refine_tiled(const RasterImage& img, const RefineParams& params,
                                const Checkpoint& ckpt, const NoiseSchedule& sched, int stride = 0) {
  params.validate();
  const int size = ckpt.meta.get<int>("image_size");
  const TileSpec spec{size, stride > 0 ? stride : size};
  if (img.width == size && img.height == size) return refine(img, params, ckpt, sched);
  RasterImage sum(img.width, img.height);
  std::vector<int> hits(img.pixel_count(), 0);
  std::uint64_t index = 0;
  for (const auto& t : tile(img, spec)) {
    RefineParams p = params;
    p.seed = mix_seed(params.seed, index++);
    const auto r = refine(t.image, p, ckpt, sched);
    for (int y = 0; y < size; ++y)
      for (int x = 0; x < size; ++x) {
        ++hits[static_cast<std::size_t>(t.y + y) * img.width + t.x + x];
        for (int c = 0; c < 3; ++c) sum.at(t.x + x, t.y + y, c) += r.at(x, y, c);
      }
  }
  for (std::size_t i = 0; i < sum.data.size(); ++i) sum.data[i] /= static_cast<float>(hits[i / 3]);
  sum.meters_per_pixel = img.meters_per_pixel;
  return sum;
}

// ---------------------------------------------------------------------------
// Resolution expansion and canvas

/// Pixel-replication x2 upsample.
inline RasterImage upsample2(const RasterImage& img) {
  RasterImage out(img.width * 2, img.height * 2);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x / 2, y / 2, c);
  if (img.meters_per_pixel) out.meters_per_pixel = *img.meters_per_pixel / 2;
  return out;
}

/// Box-average downsample by an integer factor.
inline RasterImage downsample(const RasterImage& img, int factor) {
  require(factor >= 1 && img.width % factor == 0 && img.height % factor == 0, "cannot downsample ",
          img.width, "x", img.height, " by ", factor);
  RasterImage out(img.width / factor, img.height / factor);
  const double area = static_cast<double>(factor) * factor;
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < 3; ++c) {
        double s = 0;
        for (int dy = 0; dy < factor; ++dy)
          for (int dx = 0; dx < factor; ++dx) s += img.at(x * factor + dx, y * factor + dy, c);
        out.at(x, y, c) = static_cast<float>(s / area);
      }
  if (img.meters_per_pixel) out.meters_per_pixel = *img.meters_per_pixel * factor;
  return out;
}

inline bool is_power_of_two(int v) { return v >= 1 && (v & (v - 1)) == 0; }

/// log2(factor) rounds of x2 upsampling, each followed by a tiled refine at
/// params.strength. A null checkpoint is allowed only at strength 0.
inline RasterImage upscale(const RasterImage& img, int factor, const Checkpoint* ckpt,
                           const NoiseSchedule* sched, const RefineParams& params) {
  require(is_power_of_two(factor), "upscale factor must be a power of 2, got ", factor);
  params.validate();
  require(params.strength == 0.0 || (ckpt && sched), "upscale refinement needs a denoiser checkpoint");
  RasterImage out = img;
  std::uint64_t stage = 0;
  for (int f = factor; f > 1; f /= 2) {
    out = upsample2(out);
    if (params.strength > 0.0) {
      RefineParams p = params;
      p.seed = mix_seed(params.seed, 100 + stage);
      out = refine_tiled(out, p, *ckpt, *sched);
    }
    ++stage;
  }
  return out;
}

struct PaddedCanvas {
  RasterImage image;
  int x = 0, y = 0;  // where the original sits
  int width = 0, height = 0;

  RasterImage unpad(const RasterImage& img, int scale = 1) const {
    return crop(img, x * scale, y * scale, width * scale, height * scale);
  }
};

/// Centres the image on a white canvas with margin_fraction of each side
/// added on every edge.
inline PaddedCanvas pad_canvas(const RasterImage& img, double margin_fraction) {
  require<ConfigError>(margin_fraction >= 0.0 && std::isfinite(margin_fraction),
                       "margin fraction must be >= 0, got ", margin_fraction);
  const int mx = static_cast<int>(std::lround(margin_fraction * img.width));
  const int my = static_cast<int>(std::lround(margin_fraction * img.height));
  PaddedCanvas out{RasterImage(img.width + 2 * mx, img.height + 2 * my, 1.0f), mx, my, img.width,
                   img.height};
  out.image.meters_per_pixel = img.meters_per_pixel;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.image.at(x + mx, y + my, c) = img.at(x, y, c);
  return out;
}

}  // namespace parkgen
