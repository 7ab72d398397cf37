#pragma once

// Network architectures: U-Net and residual-block generators, the PatchGAN
// discriminator and a small time-conditioned U-Net noise predictor.

#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "parkgen/autograd.hpp"
#include "parkgen/error.hpp"
#include "parkgen/kv.hpp"
#include "parkgen/random.hpp"
#include "parkgen/tensor.hpp"

namespace parkgen {

enum class ArchKind { unet_gen, resnet_gen, patch_disc, diffusion_unet };
enum class NormKind { instance, batch, none };

inline const char* to_string(ArchKind k) {
  switch (k) {
    case ArchKind::unet_gen: return "unet_gen";
    case ArchKind::resnet_gen: return "resnet_gen";
    case ArchKind::patch_disc: return "patch_disc";
    case ArchKind::diffusion_unet: return "diffusion_unet";
  }
  return "?";
}
inline const char* to_string(NormKind k) {
  switch (k) {
    case NormKind::instance: return "instance";
    case NormKind::batch: return "batch";
    case NormKind::none: return "none";
  }
  return "?";
}
inline ArchKind arch_kind_from_string(const std::string& s) {
  for (auto k : {ArchKind::unet_gen, ArchKind::resnet_gen, ArchKind::patch_disc,
                 ArchKind::diffusion_unet})
    if (s == to_string(k)) return k;
  fail<ConfigError>("unknown architecture kind '", s, "'");
}
inline NormKind norm_kind_from_string(const std::string& s) {
  for (auto k : {NormKind::instance, NormKind::batch, NormKind::none})
    if (s == to_string(k)) return k;
  fail<ConfigError>("unknown norm kind '", s, "'");
}

struct ArchSpec {
  ArchKind kind = ArchKind::unet_gen;
  int in_channels = 3;
  int out_channels = 3;
  int base_width = 16;
  /// unet kinds: down/up levels; resnet_gen: residual blocks; patch_disc: conv layers.
  int depth = 3;
  NormKind norm = NormKind::instance;
  int time_embedding_dim = 0;

  bool operator==(const ArchSpec&) const = default;

  static ArchSpec unet(int depth = 3, int width = 16) {
    return {ArchKind::unet_gen, 3, 3, width, depth, NormKind::instance, 0};
  }
  static ArchSpec resnet(int blocks = 4, int width = 16) {
    return {ArchKind::resnet_gen, 3, 3, width, blocks, NormKind::instance, 0};
  }
  static ArchSpec patch(int in_channels = 3, int layers = 5, int width = 16) {
    return {ArchKind::patch_disc, in_channels, 1, width, layers, NormKind::instance, 0};
  }
  static ArchSpec denoiser(int depth = 2, int width = 16, int time_dim = 32) {
    return {ArchKind::diffusion_unet, 3, 3, width, depth, NormKind::none, time_dim};
  }

  bool is_generator() const { return kind == ArchKind::unet_gen || kind == ArchKind::resnet_gen; }

  /// Spatial divisor the input must respect.
  int size_multiple() const {
    switch (kind) {
      case ArchKind::unet_gen:
      case ArchKind::diffusion_unet: return 1 << depth;
      case ArchKind::resnet_gen: return 4;
      case ArchKind::patch_disc: return 1;
    }
    return 1;
  }

  void validate() const {
    require<ConfigError>(depth >= 1, "arch spec: depth must be >= 1, got ", depth);
    require<ConfigError>(base_width >= 1, "arch spec: base_width must be >= 1, got ", base_width);
    require<ConfigError>(in_channels >= 1 && out_channels >= 1,
                         "arch spec: channel counts must be >= 1");
    require<ConfigError>(depth <= 12, "arch spec: depth ", depth, " is unreasonably large");
    if (kind == ArchKind::patch_disc)
      require<ConfigError>(out_channels == 1, "arch spec: patch_disc emits one score channel");
    if (kind == ArchKind::diffusion_unet)
      require<ConfigError>(time_embedding_dim >= 2 && time_embedding_dim % 2 == 0,
                           "arch spec: diffusion_unet needs an even time_embedding_dim >= 2");
    else
      require<ConfigError>(time_embedding_dim == 0, "arch spec: time_embedding_dim is only for ",
                           "diffusion_unet");
  }

  void check_input(int h, int w) const {
    const int m = size_multiple();
    require(h % m == 0 && w % m == 0, to_string(kind), " with depth ", depth,
            " needs spatial size divisible by ", m, ", got ", h, "x", w);
    if (kind == ArchKind::patch_disc) {
      int oh = h, ow = w;
      for (int i = 0; i < depth; ++i) {
        const int s = disc_stride(i);
        oh = ag::conv_out_size(oh, 4, s, 1);
        ow = ag::conv_out_size(ow, 4, s, 1);
      }
      require(oh >= 1 && ow >= 1, "patch_disc input ", h, "x", w, " too small for ", depth,
              " layers");
    }
  }

  /// Stride of discriminator layer i: the last two layers keep resolution.
  int disc_stride(int i) const { return i < depth - 2 ? 2 : 1; }
  int disc_width(int i) const { return base_width * (1 << std::min(i, 3)); }

  void write(KeyValues& kv, const std::string& prefix = "arch.") const {
    kv.set(prefix + "kind", std::string(to_string(kind)));
    kv.set(prefix + "in_channels", in_channels);
    kv.set(prefix + "out_channels", out_channels);
    kv.set(prefix + "base_width", base_width);
    kv.set(prefix + "depth", depth);
    kv.set(prefix + "norm", std::string(to_string(norm)));
    kv.set(prefix + "time_embedding_dim", time_embedding_dim);
  }
  static ArchSpec read(const KeyValues& kv, const std::string& prefix = "arch.") {
    ArchSpec s;
    s.kind = arch_kind_from_string(kv.str(prefix + "kind"));
    s.in_channels = kv.get<int>(prefix + "in_channels");
    s.out_channels = kv.get<int>(prefix + "out_channels");
    s.base_width = kv.get<int>(prefix + "base_width");
    s.depth = kv.get<int>(prefix + "depth");
    s.norm = norm_kind_from_string(kv.str(prefix + "norm"));
    s.time_embedding_dim = kv.get<int>(prefix + "time_embedding_dim", 0);
    s.validate();
    return s;
  }
};

/// Output shape [n, c, h, w] for an input of h x w.
inline Shape output_shape(const ArchSpec& spec, int n, int h, int w) {
  spec.validate();
  spec.check_input(h, w);
  if (spec.kind != ArchKind::patch_disc) return {n, spec.out_channels, h, w};
  for (int i = 0; i < spec.depth; ++i) {
    h = ag::conv_out_size(h, 4, spec.disc_stride(i), 1);
    w = ag::conv_out_size(w, 4, spec.disc_stride(i), 1);
  }
  return {n, 1, h, w};
}

// ---------------------------------------------------------------------------
// Parameter layout

struct ParamDecl {
  std::string name;
  Shape shape;
  enum class Init { fan_in_normal, zeros, ones } init = Init::fan_in_normal;
  double fan_in = 1;
};

namespace detail {

class LayoutBuilder {
 public:
  explicit LayoutBuilder(NormKind norm) : norm_(norm) {}

  void conv(const std::string& name, int in, int out, int k, bool zero = false) {
    const auto init = zero ? ParamDecl::Init::zeros : ParamDecl::Init::fan_in_normal;
    decls.push_back({name + ".w", {out, in, k, k}, init, double(in) * k * k});
    decls.push_back({name + ".b", {1, out, 1, 1}, ParamDecl::Init::zeros, 1});
  }
  void deconv(const std::string& name, int in, int out, int k, int stride) {
    decls.push_back({name + ".w", {in, out, k, k}, ParamDecl::Init::fan_in_normal,
                     double(in) * k * k / (stride * stride)});
    decls.push_back({name + ".b", {1, out, 1, 1}, ParamDecl::Init::zeros, 1});
  }
  void norm(const std::string& name, int channels) {
    if (norm_ == NormKind::none) return;
    decls.push_back({name + ".g", {1, channels, 1, 1}, ParamDecl::Init::ones, 1});
    decls.push_back({name + ".b", {1, channels, 1, 1}, ParamDecl::Init::zeros, 1});
  }
  // Linear layers are 1x1 convolutions on [N, E, 1, 1].
  void linear(const std::string& name, int in, int out) { conv(name, in, out, 1); }

  std::vector<ParamDecl> decls;

 private:
  NormKind norm_;
};

inline int width_at(const ArchSpec& s, int level) { return s.base_width * (1 << level); }

}  // namespace detail

inline std::vector<ParamDecl> param_layout(const ArchSpec& spec) {
  spec.validate();
  detail::LayoutBuilder b(spec.norm);
  const int d = spec.depth;
  auto C = [&](int i) { return detail::width_at(spec, i); };
  switch (spec.kind) {
    case ArchKind::unet_gen: {
      b.conv("down0", spec.in_channels, C(0), 4);
      for (int i = 1; i < d; ++i) {
        b.conv("down" + std::to_string(i), C(i - 1), C(i), 4);
        b.norm("down" + std::to_string(i) + ".norm", C(i));
      }
      for (int i = d - 1; i >= 1; --i) {
        const int in = i == d - 1 ? C(i) : 2 * C(i);
        b.deconv("up" + std::to_string(i), in, C(i - 1), 4, 2);
        b.norm("up" + std::to_string(i) + ".norm", C(i - 1));
      }
      b.deconv("out", d > 1 ? 2 * C(0) : C(0), spec.out_channels, 4, 2);
      break;
    }
    case ArchKind::resnet_gen: {
      const int w = spec.base_width;
      b.conv("stem", spec.in_channels, w, 7);
      b.norm("stem.norm", w);
      b.conv("down1", w, 2 * w, 3);
      b.norm("down1.norm", 2 * w);
      b.conv("down2", 2 * w, 4 * w, 3);
      b.norm("down2.norm", 4 * w);
      for (int j = 0; j < d; ++j) {
        const auto p = "res" + std::to_string(j);
        b.conv(p + ".conv1", 4 * w, 4 * w, 3);
        b.norm(p + ".norm1", 4 * w);
        b.conv(p + ".conv2", 4 * w, 4 * w, 3);
        b.norm(p + ".norm2", 4 * w);
      }
      b.deconv("up1", 4 * w, 2 * w, 4, 2);
      b.norm("up1.norm", 2 * w);
      b.deconv("up2", 2 * w, w, 4, 2);
      b.norm("up2.norm", w);
      b.conv("out", w, spec.out_channels, 7);
      break;
    }
    case ArchKind::patch_disc: {
      int prev = spec.in_channels;
      for (int i = 0; i < d; ++i) {
        const auto p = "layer" + std::to_string(i);
        const int out = i == d - 1 ? 1 : spec.disc_width(i);
        b.conv(p, prev, out, 4);
        if (i > 0 && i < d - 1) b.norm(p + ".norm", out);
        prev = out;
      }
      break;
    }
    case ArchKind::diffusion_unet: {
      const int E = spec.time_embedding_dim;
      b.linear("temb", E, E);
      b.conv("stem", spec.in_channels, C(0), 3);
      for (int i = 0; i < d; ++i) {
        const auto p = "enc" + std::to_string(i);
        b.conv(p + ".conv", C(i), C(i), 3);
        b.norm(p + ".norm", C(i));
        b.linear(p + ".temb", E, C(i));
        b.conv(p + ".down", C(i), C(i + 1), 4);
      }
      b.conv("mid.conv", C(d), C(d), 3);
      b.norm("mid.norm", C(d));
      b.linear("mid.temb", E, C(d));
      for (int i = d - 1; i >= 0; --i) {
        const auto p = "dec" + std::to_string(i);
        b.deconv(p + ".up", C(i + 1), C(i), 4, 2);
        b.conv(p + ".conv", 2 * C(i), C(i), 3);
        b.norm(p + ".norm", C(i));
      }
      b.conv("out", C(0), spec.out_channels, 3, /*zero=*/true);
      break;
    }
  }
  return b.decls;
}

/// Closed-form scalar parameter count.
inline std::int64_t param_count(const ArchSpec& spec) {
  spec.validate();
  using I = std::int64_t;
  auto conv = [](I in, I out, I k) { return in * out * k * k + out; };
  const I norm = spec.norm == NormKind::none ? 0 : 2;
  const I d = spec.depth;
  auto C = [&](I i) { return I(spec.base_width) << i; };
  I total = 0;
  switch (spec.kind) {
    case ArchKind::unet_gen:
      total += conv(spec.in_channels, C(0), 4);
      for (I i = 1; i < d; ++i) total += conv(C(i - 1), C(i), 4) + norm * C(i);
      for (I i = d - 1; i >= 1; --i)
        total += conv(i == d - 1 ? C(i) : 2 * C(i), C(i - 1), 4) + norm * C(i - 1);
      total += conv(d > 1 ? 2 * C(0) : C(0), spec.out_channels, 4);
      break;
    case ArchKind::resnet_gen: {
      const I w = spec.base_width;
      total += conv(spec.in_channels, w, 7) + norm * w;
      total += conv(w, 2 * w, 3) + norm * 2 * w;
      total += conv(2 * w, 4 * w, 3) + norm * 4 * w;
      total += d * 2 * (conv(4 * w, 4 * w, 3) + norm * 4 * w);
      total += conv(4 * w, 2 * w, 4) + norm * 2 * w;
      total += conv(2 * w, w, 4) + norm * w;
      total += conv(w, spec.out_channels, 7);
      break;
    }
    case ArchKind::patch_disc: {
      I prev = spec.in_channels;
      for (I i = 0; i < d; ++i) {
        const I out = i == d - 1 ? 1 : spec.disc_width(static_cast<int>(i));
        total += conv(prev, out, 4);
        if (i > 0 && i < d - 1) total += norm * out;
        prev = out;
      }
      break;
    }
    case ArchKind::diffusion_unet: {
      const I E = spec.time_embedding_dim;
      total += conv(E, E, 1) + conv(spec.in_channels, C(0), 3);
      for (I i = 0; i < d; ++i)
        total += conv(C(i), C(i), 3) + norm * C(i) + conv(E, C(i), 1) + conv(C(i), C(i + 1), 4);
      total += conv(C(d), C(d), 3) + norm * C(d) + conv(E, C(d), 1);
      for (I i = d - 1; i >= 0; --i)
        total += conv(C(i + 1), C(i), 4) + conv(2 * C(i), C(i), 3) + norm * C(i);
      total += conv(C(0), spec.out_channels, 3);
      break;
    }
  }
  return total;
}

/// Receptive field in pixels of one discriminator score.
inline int receptive_field(const ArchSpec& spec) {
  spec.validate();
  require(spec.kind == ArchKind::patch_disc, "receptive_field is defined for patch_disc only, got ",
          to_string(spec.kind));
  int field = 1, jump = 1;
  for (int i = 0; i < spec.depth; ++i) {
    field += (4 - 1) * jump;
    jump *= spec.disc_stride(i);
  }
  return field;
}

// ---------------------------------------------------------------------------
// Weights

/// Named parameter tensors for one ArchSpec.
template <typename T>
class Weights {
 public:
  Weights() = default;
  Weights(ArchSpec spec, std::uint64_t seed) : spec_(spec), seed_(seed) {}

  const ArchSpec& spec() const { return spec_; }
  std::uint64_t seed() const { return seed_; }

  void add(const std::string& name, Tensor<T> value) {
    require(!index_.count(name), "duplicate parameter '", name, "'");
    index_[name] = params_.size();
    params_.push_back({name, ag::parameter(std::move(value))});
  }

  const ag::Var<T>& operator[](const std::string& name) const {
    auto it = index_.find(name);
    require(it != index_.end(), "missing parameter '", name, "' for ", to_string(spec_.kind));
    return params_[it->second].second;
  }
  ag::Var<T> find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].second;
  }

  const std::vector<std::pair<std::string, ag::Var<T>>>& params() const { return params_; }

  std::int64_t scalar_count() const {
    std::int64_t n = 0;
    for (const auto& [_, v] : params_) n += static_cast<std::int64_t>(v->value.size());
    return n;
  }

  void zero_grad() const {
    for (const auto& [_, v] : params_) v->grad = Tensor<T>();
  }
  void set_trainable(bool on) const {
    for (const auto& [_, v] : params_) v->requires_grad = on;
  }
  bool all_finite() const {
    for (const auto& [_, v] : params_)
      if (!v->value.all_finite()) return false;
    return true;
  }

  /// Deep copy with fresh parameter nodes.
  Weights clone() const {
    Weights out(spec_, seed_);
    for (const auto& [name, v] : params_) out.add(name, v->value);
    return out;
  }

  template <typename U>
  Weights<U> cast() const {
    Weights<U> out(spec_, seed_);
    for (const auto& [name, v] : params_) out.add(name, v->value.template cast<U>());
    return out;
  }

  bool operator==(const Weights& o) const {
    if (!(spec_ == o.spec_) || params_.size() != o.params_.size()) return false;
    for (std::size_t i = 0; i < params_.size(); ++i)
      if (params_[i].first != o.params_[i].first ||
          params_[i].second->value != o.params_[i].second->value)
        return false;
    return true;
  }

 private:
  ArchSpec spec_;
  std::uint64_t seed_ = 0;
  std::vector<std::pair<std::string, ag::Var<T>>> params_;
  std::map<std::string, std::size_t> index_;
};

/// Deterministic initialization: fan-in scaled normal weights, zero biases,
/// unit norm gains. The diffusion output layer starts at zero.
template <typename T = float>
Weights<T> build(const ArchSpec& spec, std::uint64_t seed) {
  spec.validate();
  Weights<T> w(spec, seed);
  Rng rng(seed);
  for (const auto& d : param_layout(spec)) {
    Tensor<T> t(d.shape);
    switch (d.init) {
      case ParamDecl::Init::zeros: break;
      case ParamDecl::Init::ones: std::fill(t.data.begin(), t.data.end(), T(1)); break;
      case ParamDecl::Init::fan_in_normal: {
        const double stddev = 1.0 / std::sqrt(d.fan_in);
        for (auto& v : t.data) v = static_cast<T>(rng.normal() * stddev);
        break;
      }
    }
    w.add(d.name, std::move(t));
  }
  return w;
}

// ---------------------------------------------------------------------------
// Forward passes

namespace detail {

template <typename T>
class Layers {
 public:
  explicit Layers(const Weights<T>& w) : w_(w), norm_(w.spec().norm) {}

  ag::Var<T> conv(const std::string& name, const ag::Var<T>& x, int stride, int pad) const {
    return ag::conv2d(x, w_[name + ".w"], w_[name + ".b"], stride, pad);
  }
  ag::Var<T> deconv(const std::string& name, const ag::Var<T>& x) const {
    return ag::conv_transpose2d(x, w_[name + ".w"], w_[name + ".b"], 2, 1);
  }
  ag::Var<T> norm(const std::string& name, const ag::Var<T>& x) const {
    switch (norm_) {
      case NormKind::instance: return ag::instance_norm(x, w_[name + ".g"], w_[name + ".b"]);
      case NormKind::batch: return ag::batch_norm(x, w_[name + ".g"], w_[name + ".b"]);
      case NormKind::none: return x;
    }
    return x;
  }

 private:
  const Weights<T>& w_;
  NormKind norm_;
};

template <typename T>
ag::Var<T> unet_forward(const Weights<T>& w, const ag::Var<T>& x) {
  const Layers<T> L(w);
  const int d = w.spec().depth;
  const T slope = T(0.2);
  std::vector<ag::Var<T>> skips;
  auto h = ag::leaky_relu(L.conv("down0", x, 2, 1), slope);
  skips.push_back(h);
  for (int i = 1; i < d; ++i) {
    const auto p = "down" + std::to_string(i);
    h = ag::leaky_relu(L.norm(p + ".norm", L.conv(p, h, 2, 1)), slope);
    skips.push_back(h);
  }
  for (int i = d - 1; i >= 1; --i) {
    const auto p = "up" + std::to_string(i);
    auto u = ag::relu(L.norm(p + ".norm", L.deconv(p, h)));
    h = ag::concat(u, skips[i - 1]);
  }
  return ag::tanh(L.deconv("out", h));
}

template <typename T>
ag::Var<T> resnet_forward(const Weights<T>& w, const ag::Var<T>& x) {
  const Layers<T> L(w);
  auto h = ag::relu(L.norm("stem.norm", L.conv("stem", x, 1, 3)));
  h = ag::relu(L.norm("down1.norm", L.conv("down1", h, 2, 1)));
  h = ag::relu(L.norm("down2.norm", L.conv("down2", h, 2, 1)));
  for (int j = 0; j < w.spec().depth; ++j) {
    const auto p = "res" + std::to_string(j);
    auto r = ag::relu(L.norm(p + ".norm1", L.conv(p + ".conv1", h, 1, 1)));
    r = L.norm(p + ".norm2", L.conv(p + ".conv2", r, 1, 1));
    h = ag::add(h, r);
  }
  h = ag::relu(L.norm("up1.norm", L.deconv("up1", h)));
  h = ag::relu(L.norm("up2.norm", L.deconv("up2", h)));
  return ag::tanh(L.conv("out", h, 1, 3));
}

template <typename T>
ag::Var<T> disc_forward(const Weights<T>& w, const ag::Var<T>& x) {
  const Layers<T> L(w);
  const auto& spec = w.spec();
  const int d = spec.depth;
  auto h = x;
  for (int i = 0; i < d; ++i) {
    const auto p = "layer" + std::to_string(i);
    h = L.conv(p, h, spec.disc_stride(i), 1);
    if (i == d - 1) break;
    if (i > 0) h = L.norm(p + ".norm", h);
    h = ag::leaky_relu(h, T(0.2));
  }
  return h;
}

}  // namespace detail

/// Sinusoidal embedding of integer timesteps, shape [N, dim, 1, 1].
template <typename T>
Tensor<T> timestep_embedding(const std::vector<int>& steps, int dim) {
  Tensor<T> out(static_cast<int>(steps.size()), dim, 1, 1);
  const int half = dim / 2;
  for (std::size_t n = 0; n < steps.size(); ++n)
    for (int j = 0; j < half; ++j) {
      const double freq = std::exp(-std::log(10000.0) * j / half);
      const double a = steps[n] * freq;
      out.at(static_cast<int>(n), j, 0, 0) = static_cast<T>(std::sin(a));
      out.at(static_cast<int>(n), j + half, 0, 0) = static_cast<T>(std::cos(a));
    }
  return out;
}

namespace detail {

template <typename T>
ag::Var<T> diffusion_forward(const Weights<T>& w, const ag::Var<T>& x,
                             const std::vector<int>& steps) {
  const Layers<T> L(w);
  const auto& spec = w.spec();
  const int d = spec.depth;
  const auto emb = ag::constant(timestep_embedding<T>(steps, spec.time_embedding_dim));
  const auto temb = ag::relu(L.conv("temb", emb, 1, 0));
  auto h = L.conv("stem", x, 1, 1);
  std::vector<ag::Var<T>> skips;
  for (int i = 0; i < d; ++i) {
    const auto p = "enc" + std::to_string(i);
    auto s = L.norm(p + ".norm", L.conv(p + ".conv", h, 1, 1));
    s = ag::relu(ag::add_channel(s, L.conv(p + ".temb", temb, 1, 0)));
    skips.push_back(s);
    h = ag::relu(L.conv(p + ".down", s, 2, 1));
  }
  h = L.norm("mid.norm", L.conv("mid.conv", h, 1, 1));
  h = ag::relu(ag::add_channel(h, L.conv("mid.temb", temb, 1, 0)));
  for (int i = d - 1; i >= 0; --i) {
    const auto p = "dec" + std::to_string(i);
    auto u = ag::relu(L.deconv(p + ".up", h));
    h = ag::relu(L.norm(p + ".norm", L.conv(p + ".conv", ag::concat(u, skips[i]), 1, 1)));
  }
  return L.conv("out", h, 1, 1);
}

}  // namespace detail

/// Differentiable forward pass. `steps` is required iff the kind is diffusion_unet.
template <typename T>
ag::Var<T> forward(const Weights<T>& w, const ag::Var<T>& x,
                   const std::vector<int>* steps = nullptr) {
  const auto& spec = w.spec();
  const auto& X = x->value;
  require(X.c() == spec.in_channels, to_string(spec.kind), ": expected input [N x ",
          spec.in_channels, " x H x W], got ", X.shape.str());
  spec.check_input(X.h(), X.w());
  const bool timed = spec.kind == ArchKind::diffusion_unet;
  require(timed == (steps != nullptr), to_string(spec.kind),
          timed ? " requires timesteps" : " does not take timesteps");
  if (timed)
    require(steps->size() == static_cast<std::size_t>(X.n()), "expected ", X.n(),
            " timesteps, got ", steps->size());
  switch (spec.kind) {
    case ArchKind::unet_gen: return detail::unet_forward(w, x);
    case ArchKind::resnet_gen: return detail::resnet_forward(w, x);
    case ArchKind::patch_disc: return detail::disc_forward(w, x);
    case ArchKind::diffusion_unet: return detail::diffusion_forward(w, x, *steps);
  }
  fail("unreachable");
}

/// Inference-only forward on plain tensors.
template <typename T>
Tensor<T> predict(const Weights<T>& w, const Tensor<T>& x, const std::vector<int>* steps = nullptr) {
  ag::NoGradGuard guard;
  return forward(w, ag::constant(x), steps)->value;
}

}  // namespace parkgen
