#pragma once

// Tape-based reverse-mode differentiation over NCHW tensors. Every op builds
// a node holding its value and a closure that pushes the node's gradient
// into its parents. Convolutions lower to GEMM through Eigen.

#include <Eigen/Core>

#include <cmath>
#include <functional>
#include <memory>
#include <numeric>
#include <unordered_set>
#include <utility>
#include <vector>

#include "parkgen/error.hpp"
#include "parkgen/tensor.hpp"

namespace parkgen::ag {

template <typename T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void accumulate(const Tensor<T>& g) {
    if (grad.empty()) {
      grad = g;
    } else {
      for (std::size_t i = 0; i < g.size(); ++i) grad.data[i] += g.data[i];
    }
  }
  Tensor<T>& grad_buffer() {
    if (grad.empty()) grad = Tensor<T>(value.shape);
    return grad;
  }
};

template <typename T>
using Var = std::shared_ptr<Node<T>>;

namespace detail {
inline thread_local bool grad_mode = true;
}

/// Disables graph construction in the current thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::grad_mode) { detail::grad_mode = false; }
  ~NoGradGuard() { detail::grad_mode = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

template <typename T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return n;
}

template <typename T>
Var<T> parameter(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

/// Same value, cut from the graph.
template <typename T>
Var<T> detach(const Var<T>& v) {
  return constant(v->value);
}

namespace detail {

template <typename T>
bool wants_grad(const Var<T>& v) {
  return v && v->requires_grad;
}

template <typename T, typename F>
Var<T> make_node(Tensor<T> value, std::vector<Var<T>> parents, F&& backward) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  const bool any = std::any_of(parents.begin(), parents.end(), [](const Var<T>& p) {
    return p && p->requires_grad;
  });
  if (grad_mode && any) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward = std::forward<F>(backward);
  }
  return n;
}

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using CMapMat = Eigen::Map<const RowMat<T>>;

struct ConvGeom {
  int channels, in_h, in_w, k, stride, pad, out_h, out_w;
  std::size_t rows() const { return static_cast<std::size_t>(channels) * k * k; }
  std::size_t cols() const { return static_cast<std::size_t>(out_h) * out_w; }
};

// cols[(c*k + ky)*k + kx][oy*out_w + ox] = in[c][oy*s - p + ky][ox*s - p + kx]
template <typename T>
void im2col(const T* in, const ConvGeom& g, T* cols) {
  const std::size_t ncols = g.cols();
  for (int c = 0; c < g.channels; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        T* row = cols + ((static_cast<std::size_t>(c) * g.k + ky) * g.k + kx) * ncols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          T* dst = row + static_cast<std::size_t>(oy) * g.out_w;
          if (iy < 0 || iy >= g.in_h) {
            std::fill_n(dst, g.out_w, T(0));
            continue;
          }
          const T* src = in + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            dst[ox] = (ix >= 0 && ix < g.in_w) ? src[ix] : T(0);
          }
        }
      }
}

// Adjoint of im2col: scatters-adds columns back into an image.
template <typename T>
void col2im(const T* cols, const ConvGeom& g, T* out) {
  const std::size_t ncols = g.cols();
  for (int c = 0; c < g.channels; ++c)
    for (int ky = 0; ky < g.k; ++ky)
      for (int kx = 0; kx < g.k; ++kx) {
        const T* row = cols + ((static_cast<std::size_t>(c) * g.k + ky) * g.k + kx) * ncols;
        for (int oy = 0; oy < g.out_h; ++oy) {
          const int iy = oy * g.stride - g.pad + ky;
          if (iy < 0 || iy >= g.in_h) continue;
          const T* src = row + static_cast<std::size_t>(oy) * g.out_w;
          T* dst = out + (static_cast<std::size_t>(c) * g.in_h + iy) * g.in_w;
          for (int ox = 0; ox < g.out_w; ++ox) {
            const int ix = ox * g.stride - g.pad + kx;
            if (ix >= 0 && ix < g.in_w) dst[ix] += src[ox];
          }
        }
      }
}

}  // namespace detail

inline int conv_out_size(int in, int k, int stride, int pad) {
  return (in + 2 * pad - k) / stride + 1;
}
inline int conv_transpose_out_size(int in, int k, int stride, int pad) {
  return (in - 1) * stride - 2 * pad + k;
}

/// 2-D convolution. weight: [out, in, k, k]; bias: [1, out, 1, 1] or null.
template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride, int pad) {
  using namespace detail;
  const auto& X = x->value;
  const auto& W = weight->value;
  const int k = W.h();
  require(W.w() == k, "conv2d: kernel must be square, got ", W.shape.str());
  require(X.c() == W.c(), "conv2d: expected ", W.c(), " input channels, got ", X.shape.str());
  const int oh = conv_out_size(X.h(), k, stride, pad);
  const int ow = conv_out_size(X.w(), k, stride, pad);
  require(oh >= 1 && ow >= 1, "conv2d: input ", X.shape.str(), " too small for kernel ", k);
  const ConvGeom g{X.c(), X.h(), X.w(), k, stride, pad, oh, ow};
  const int cout = W.n();
  Tensor<T> Y(X.n(), cout, oh, ow);
  Buffer<T> cols(g.rows() * g.cols());
  CMapMat<T> Wm(W.data.data(), cout, static_cast<Eigen::Index>(g.rows()));
  for (int n = 0; n < X.n(); ++n) {
    im2col(X.sample(n).data(), g, cols.data());
    CMapMat<T> C(cols.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
    MapMat<T> Ym(Y.sample(n).data(), cout, static_cast<Eigen::Index>(g.cols()));
    Ym.noalias() = Wm * C;
    if (bias)
      for (int c = 0; c < cout; ++c) Ym.row(c).array() += bias->value.data[c];
  }
  return make_node<T>(std::move(Y), {x, weight, bias}, [g, cout](Node<T>& self) {
    auto& x = self.parents[0];
    auto& weight = self.parents[1];
    auto& bias = self.parents[2];
    const auto& dY = self.grad;
    const int N = dY.n();
    Buffer<T> cols(g.rows() * g.cols());
    CMapMat<T> Wm(weight->value.data.data(), cout, static_cast<Eigen::Index>(g.rows()));
    for (int n = 0; n < N; ++n) {
      CMapMat<T> dYm(dY.sample(n).data(), cout, static_cast<Eigen::Index>(g.cols()));
      if (wants_grad(weight)) {
        im2col(x->value.sample(n).data(), g, cols.data());
        CMapMat<T> C(cols.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
        MapMat<T> dW(weight->grad_buffer().data.data(), cout, static_cast<Eigen::Index>(g.rows()));
        dW.noalias() += dYm * C.transpose();
      }
      if (wants_grad(bias)) {
        auto& db = bias->grad_buffer().data;
        for (int c = 0; c < cout; ++c) db[c] += dYm.row(c).sum();
      }
      if (wants_grad(x)) {
        MapMat<T> dC(cols.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
        dC.noalias() = Wm.transpose() * dYm;
        col2im(cols.data(), g, x->grad_buffer().sample(n).data());
      }
    }
  });
}

/// Transposed convolution (adjoint of conv2d). weight: [in, out, k, k].
template <typename T>
Var<T> conv_transpose2d(const Var<T>& x, const Var<T>& weight, const Var<T>& bias, int stride,
                        int pad) {
  using namespace detail;
  const auto& X = x->value;
  const auto& W = weight->value;
  const int k = W.h();
  require(W.w() == k, "conv_transpose2d: kernel must be square");
  require(X.c() == W.n(), "conv_transpose2d: expected ", W.n(), " input channels, got ",
          X.shape.str());
  const int cout = W.c();
  const int oh = conv_transpose_out_size(X.h(), k, stride, pad);
  const int ow = conv_transpose_out_size(X.w(), k, stride, pad);
  require(oh >= 1 && ow >= 1, "conv_transpose2d: empty output for ", X.shape.str());
  // Geometry of the conv whose adjoint this is: image = output, columns = input positions.
  const ConvGeom g{cout, oh, ow, k, stride, pad, X.h(), X.w()};
  const int cin = X.c();
  Tensor<T> Y(X.n(), cout, oh, ow);
  Buffer<T> cols(g.rows() * g.cols());
  CMapMat<T> Wm(W.data.data(), cin, static_cast<Eigen::Index>(g.rows()));
  for (int n = 0; n < X.n(); ++n) {
    CMapMat<T> Xm(X.sample(n).data(), cin, static_cast<Eigen::Index>(g.cols()));
    MapMat<T> C(cols.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
    C.noalias() = Wm.transpose() * Xm;
    T* y = Y.sample(n).data();
    col2im(cols.data(), g, y);
    if (bias)
      for (int c = 0; c < cout; ++c) {
        T* p = y + static_cast<std::size_t>(c) * oh * ow;
        const T b = bias->value.data[c];
        for (std::size_t i = 0; i < static_cast<std::size_t>(oh) * ow; ++i) p[i] += b;
      }
  }
  return make_node<T>(std::move(Y), {x, weight, bias}, [g, cin, cout](Node<T>& self) {
    auto& x = self.parents[0];
    auto& weight = self.parents[1];
    auto& bias = self.parents[2];
    const auto& dY = self.grad;
    Buffer<T> cols(g.rows() * g.cols());
    CMapMat<T> Wm(weight->value.data.data(), cin, static_cast<Eigen::Index>(g.rows()));
    for (int n = 0; n < dY.n(); ++n) {
      const T* dy = dY.sample(n).data();
      if (wants_grad(bias)) {
        auto& db = bias->grad_buffer().data;
        const std::size_t plane = static_cast<std::size_t>(g.in_h) * g.in_w;
        for (int c = 0; c < cout; ++c) {
          const T* p = dy + c * plane;
          db[c] += std::accumulate(p, p + plane, T(0));
        }
      }
      if (!wants_grad(weight) && !wants_grad(x)) continue;
      im2col(dy, g, cols.data());
      CMapMat<T> dC(cols.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
      if (wants_grad(weight)) {
        CMapMat<T> Xm(x->value.sample(n).data(), cin, static_cast<Eigen::Index>(g.cols()));
        MapMat<T> dW(weight->grad_buffer().data.data(), cin, static_cast<Eigen::Index>(g.rows()));
        dW.noalias() += Xm * dC.transpose();
      }
      if (wants_grad(x)) {
        MapMat<T> dX(x->grad_buffer().sample(n).data(), cin, static_cast<Eigen::Index>(g.cols()));
        dX.noalias() += Wm * dC;
      }
    }
  });
}

namespace detail {

// Normalizes groups of elements. For instance norm a group is one (n, c)
// plane; for batch norm it is channel c across the batch.
template <typename T>
Var<T> normalize(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, bool per_sample,
                 T eps) {
  const auto& X = x->value;
  const int N = X.n(), C = X.c();
  const std::size_t P = X.plane();
  require(gamma->value.size() == static_cast<std::size_t>(C) &&
              beta->value.size() == static_cast<std::size_t>(C),
          "norm: affine parameters do not match ", C, " channels");
  const int groups = per_sample ? N * C : C;
  const std::size_t group_len = per_sample ? P : P * N;
  auto index = [=](int grp, std::size_t j) -> std::size_t {
    if (per_sample) return static_cast<std::size_t>(grp) * P + j;
    const int n = static_cast<int>(j / P);
    return (static_cast<std::size_t>(n) * C + grp) * P + j % P;
  };
  auto channel_of = [=](int grp) { return per_sample ? grp % C : grp; };
  Tensor<T> xhat(X.shape), Y(X.shape);
  std::vector<T> inv_std(groups);
  for (int grp = 0; grp < groups; ++grp) {
    T mean = 0;
    for (std::size_t j = 0; j < group_len; ++j) mean += X.data[index(grp, j)];
    mean /= static_cast<T>(group_len);
    T var = 0;
    for (std::size_t j = 0; j < group_len; ++j) {
      const T d = X.data[index(grp, j)] - mean;
      var += d * d;
    }
    var /= static_cast<T>(group_len);
    inv_std[grp] = T(1) / std::sqrt(var + eps);
    const T g = gamma->value.data[channel_of(grp)], b = beta->value.data[channel_of(grp)];
    for (std::size_t j = 0; j < group_len; ++j) {
      const auto i = index(grp, j);
      xhat.data[i] = (X.data[i] - mean) * inv_std[grp];
      Y.data[i] = g * xhat.data[i] + b;
    }
  }
  return make_node<T>(
      std::move(Y), {x, gamma, beta},
      [xhat = std::move(xhat), inv_std = std::move(inv_std), groups, group_len, index,
       channel_of](Node<T>& self) {
        auto& x = self.parents[0];
        auto& gamma = self.parents[1];
        auto& beta = self.parents[2];
        const auto& dY = self.grad;
        const T M = static_cast<T>(group_len);
        for (int grp = 0; grp < groups; ++grp) {
          const int c = channel_of(grp);
          const T g = gamma->value.data[c];
          T sum_dy = 0, sum_dy_xhat = 0;
          for (std::size_t j = 0; j < group_len; ++j) {
            const auto i = index(grp, j);
            sum_dy += dY.data[i];
            sum_dy_xhat += dY.data[i] * xhat.data[i];
          }
          if (wants_grad(gamma)) gamma->grad_buffer().data[c] += sum_dy_xhat;
          if (wants_grad(beta)) beta->grad_buffer().data[c] += sum_dy;
          if (wants_grad(x)) {
            auto& dX = x->grad_buffer().data;
            const T scale = g * inv_std[grp] / M;
            for (std::size_t j = 0; j < group_len; ++j) {
              const auto i = index(grp, j);
              dX[i] += scale * (M * dY.data[i] - sum_dy - xhat.data[i] * sum_dy_xhat);
            }
          }
        }
      });
}

}  // namespace detail

/// Per-sample, per-channel normalization with affine gamma/beta of shape [1, C, 1, 1].
template <typename T>
Var<T> instance_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
  return detail::normalize(x, gamma, beta, true, eps);
}

/// Per-channel normalization over the batch, always using batch statistics.
template <typename T>
Var<T> batch_norm(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta, T eps = T(1e-5)) {
  return detail::normalize(x, gamma, beta, false, eps);
}

template <typename T>
Var<T> leaky_relu(const Var<T>& x, T slope) {
  Tensor<T> Y = x->value;
  for (auto& v : Y.data) v = v > 0 ? v : slope * v;
  return detail::make_node<T>(std::move(Y), {x}, [slope](Node<T>& self) {
    auto& x = self.parents[0];
    auto& dX = x->grad_buffer().data;
    for (std::size_t i = 0; i < dX.size(); ++i)
      dX[i] += self.grad.data[i] * (x->value.data[i] > 0 ? T(1) : slope);
  });
}

template <typename T>
Var<T> relu(const Var<T>& x) {
  return leaky_relu(x, T(0));
}

template <typename T>
Var<T> tanh(const Var<T>& x) {
  Tensor<T> Y = x->value;
  for (auto& v : Y.data) v = std::tanh(v);
  return detail::make_node<T>(std::move(Y), {x}, [](Node<T>& self) {
    auto& dX = self.parents[0]->grad_buffer().data;
    for (std::size_t i = 0; i < dX.size(); ++i) {
      const T y = self.value.data[i];
      dX[i] += self.grad.data[i] * (T(1) - y * y);
    }
  });
}

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  require(a->value.shape == b->value.shape, "add: shape mismatch ", a->value.shape.str(), " vs ",
          b->value.shape.str());
  Tensor<T> Y = a->value;
  for (std::size_t i = 0; i < Y.size(); ++i) Y.data[i] += b->value.data[i];
  return detail::make_node<T>(std::move(Y), {a, b}, [](Node<T>& self) {
    for (int p = 0; p < 2; ++p)
      if (detail::wants_grad(self.parents[p])) self.parents[p]->accumulate(self.grad);
  });
}

/// Adds v[n, c] (shape [N, C, 1, 1]) to every spatial position of x[n, c].
template <typename T>
Var<T> add_channel(const Var<T>& x, const Var<T>& v) {
  const auto& X = x->value;
  require(v->value.n() == X.n() && v->value.c() == X.c() && v->value.plane() == 1,
          "add_channel: expected [", X.n(), "x", X.c(), "x1x1], got ", v->value.shape.str());
  Tensor<T> Y = X;
  const std::size_t P = X.plane();
  for (std::size_t g = 0; g < v->value.size(); ++g)
    for (std::size_t j = 0; j < P; ++j) Y.data[g * P + j] += v->value.data[g];
  return detail::make_node<T>(std::move(Y), {x, v}, [P](Node<T>& self) {
    auto& x = self.parents[0];
    auto& v = self.parents[1];
    if (detail::wants_grad(x)) x->accumulate(self.grad);
    if (detail::wants_grad(v)) {
      auto& dv = v->grad_buffer().data;
      for (std::size_t g = 0; g < dv.size(); ++g)
        for (std::size_t j = 0; j < P; ++j) dv[g] += self.grad.data[g * P + j];
    }
  });
}

/// Channel concatenation.
template <typename T>
Var<T> concat(const Var<T>& a, const Var<T>& b) {
  const auto& A = a->value;
  const auto& B = b->value;
  require(A.n() == B.n() && A.h() == B.h() && A.w() == B.w(), "concat: spatial mismatch ",
          A.shape.str(), " vs ", B.shape.str());
  Tensor<T> Y(A.n(), A.c() + B.c(), A.h(), A.w());
  const std::size_t la = A.c() * A.plane(), lb = B.c() * B.plane();
  for (int n = 0; n < A.n(); ++n) {
    std::copy_n(A.sample(n).data(), la, Y.sample(n).data());
    std::copy_n(B.sample(n).data(), lb, Y.sample(n).data() + la);
  }
  return detail::make_node<T>(std::move(Y), {a, b}, [la, lb](Node<T>& self) {
    auto& a = self.parents[0];
    auto& b = self.parents[1];
    for (int n = 0; n < self.grad.n(); ++n) {
      const T* g = self.grad.sample(n).data();
      if (detail::wants_grad(a)) {
        T* d = a->grad_buffer().sample(n).data();
        for (std::size_t i = 0; i < la; ++i) d[i] += g[i];
      }
      if (detail::wants_grad(b)) {
        T* d = b->grad_buffer().sample(n).data();
        for (std::size_t i = 0; i < lb; ++i) d[i] += g[la + i];
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Scalar losses. Each returns a [1,1,1,1] node.

namespace detail {

template <typename T, typename Fwd, typename Bwd>
Var<T> elementwise_mean(std::vector<Var<T>> inputs, Fwd fwd, Bwd bwd) {
  const auto& X = inputs[0]->value;
  T sum = 0;
  for (std::size_t i = 0; i < X.size(); ++i) sum += fwd(i);
  const T inv = T(1) / static_cast<T>(X.size());
  return make_node<T>(Tensor<T>(1, 1, 1, 1, sum * inv), std::move(inputs),
                      [bwd, inv](Node<T>& self) { bwd(self, self.grad.data[0] * inv); });
}

}  // namespace detail

/// mean(BCE(sigmoid(logits), target)), computed stably from logits.
template <typename T>
Var<T> bce_with_logits(const Var<T>& logits, T target) {
  const auto& X = logits->value.data;
  return detail::elementwise_mean<T>(
      {logits},
      [&X, target](std::size_t i) {
        const T x = X[i];
        return std::max(x, T(0)) - x * target + std::log1p(std::exp(-std::abs(x)));
      },
      [target](Node<T>& self, T scale) {
        auto& p = self.parents[0];
        auto& d = p->grad_buffer().data;
        for (std::size_t i = 0; i < d.size(); ++i) {
          const T s = T(1) / (T(1) + std::exp(-p->value.data[i]));
          d[i] += scale * (s - target);
        }
      });
}

/// mean((x - target)^2) against a constant target.
template <typename T>
Var<T> least_squares(const Var<T>& x, T target) {
  const auto& X = x->value.data;
  return detail::elementwise_mean<T>(
      {x}, [&X, target](std::size_t i) { return (X[i] - target) * (X[i] - target); },
      [target](Node<T>& self, T scale) {
        auto& p = self.parents[0];
        auto& d = p->grad_buffer().data;
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += scale * T(2) * (p->value.data[i] - target);
      });
}

template <typename T>
Var<T> l1_loss(const Var<T>& a, const Var<T>& b) {
  require(a->value.shape == b->value.shape, "l1_loss: shape mismatch ", a->value.shape.str(),
          " vs ", b->value.shape.str());
  const auto& A = a->value.data;
  const auto& B = b->value.data;
  return detail::elementwise_mean<T>(
      {a, b}, [&A, &B](std::size_t i) { return std::abs(A[i] - B[i]); },
      [](Node<T>& self, T scale) {
        auto& a = self.parents[0];
        auto& b = self.parents[1];
        for (std::size_t i = 0; i < a->value.size(); ++i) {
          const T diff = a->value.data[i] - b->value.data[i];
          const T s = diff > 0 ? scale : (diff < 0 ? -scale : T(0));
          if (detail::wants_grad(a)) a->grad_buffer().data[i] += s;
          if (detail::wants_grad(b)) b->grad_buffer().data[i] -= s;
        }
      });
}

template <typename T>
Var<T> mse_loss(const Var<T>& a, const Var<T>& b) {
  require(a->value.shape == b->value.shape, "mse_loss: shape mismatch ", a->value.shape.str(),
          " vs ", b->value.shape.str());
  const auto& A = a->value.data;
  const auto& B = b->value.data;
  return detail::elementwise_mean<T>(
      {a, b}, [&A, &B](std::size_t i) { return (A[i] - B[i]) * (A[i] - B[i]); },
      [](Node<T>& self, T scale) {
        auto& a = self.parents[0];
        auto& b = self.parents[1];
        for (std::size_t i = 0; i < a->value.size(); ++i) {
          const T s = scale * T(2) * (a->value.data[i] - b->value.data[i]);
          if (detail::wants_grad(a)) a->grad_buffer().data[i] += s;
          if (detail::wants_grad(b)) b->grad_buffer().data[i] -= s;
        }
      });
}

/// sum_i weight_i * term_i over scalar nodes.
template <typename T>
Var<T> weighted_sum(const std::vector<std::pair<T, Var<T>>>& terms) {
  T total = 0;
  std::vector<Var<T>> parents;
  std::vector<T> weights;
  for (const auto& [w, v] : terms) {
    require(v->value.size() == 1, "weighted_sum expects scalar terms");
    total += w * v->value.data[0];
    parents.push_back(v);
    weights.push_back(w);
  }
  return detail::make_node<T>(Tensor<T>(1, 1, 1, 1, total), std::move(parents),
                              [weights](Node<T>& self) {
                                for (std::size_t i = 0; i < weights.size(); ++i) {
                                  auto& p = self.parents[i];
                                  if (detail::wants_grad(p))
                                    p->grad_buffer().data[0] += weights[i] * self.grad.data[0];
                                }
                              });
}

/// Runs reverse-mode accumulation from a scalar root.
template <typename T>
void backward(const Var<T>& root) {
  require(root->value.size() == 1, "backward expects a scalar root");
  if (!root->requires_grad) return;
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{root.get(), 0}};
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node<T>* p = node->parents[next++].get();
      if (p && p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root->grad = Tensor<T>(root->value.shape, T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward && !n->grad.empty()) n->backward(*n);
  }
}

}  // namespace parkgen::ag
