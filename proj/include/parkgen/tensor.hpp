#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "parkgen/error.hpp"
#include "parkgen/raster.hpp"

namespace parkgen {

struct Shape {
  int n = 0, c = 0, h = 0, w = 0;

  std::size_t numel() const { return static_cast<std::size_t>(n) * c * h * w; }
  auto operator<=>(const Shape&) const = default;
  std::string str() const { return detail::concat("[", n, "x", c, "x", h, "x", w, "]"); }
};

/// Storage aligned to the widest SIMD packet. Eigen picks vectorized or
/// scalar paths from runtime alignment, so unaligned buffers make sums
/// depend on where the allocator happened to place them.
template <typename T>
using Buffer = std::vector<T, Eigen::aligned_allocator<T>>;

/// Dense NCHW tensor.
template <typename T>
struct Tensor {
  Shape shape;
  Buffer<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(s), data(s.numel(), fill) {}
  Tensor(int n, int c, int h, int w, T fill = T(0)) : Tensor(Shape{n, c, h, w}, fill) {}

  std::size_t size() const { return data.size(); }
  bool empty() const { return data.empty(); }
  int n() const { return shape.n; }
  int c() const { return shape.c; }
  int h() const { return shape.h; }
  int w() const { return shape.w; }
  std::size_t plane() const { return static_cast<std::size_t>(shape.h) * shape.w; }

  T& at(int n, int c, int y, int x) {
    return data[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
  }
  T at(int n, int c, int y, int x) const {
    return data[((static_cast<std::size_t>(n) * shape.c + c) * shape.h + y) * shape.w + x];
  }
  std::span<T> sample(int n) {
    const std::size_t len = static_cast<std::size_t>(shape.c) * plane();
    return {data.data() + n * len, len};
  }
  std::span<const T> sample(int n) const {
    const std::size_t len = static_cast<std::size_t>(shape.c) * plane();
    return {data.data() + n * len, len};
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape);
    std::transform(data.begin(), data.end(), out.data.begin(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
  }

  bool operator==(const Tensor&) const = default;
};

/// Stacks images into a batch, mapping [0,1] to [-1,1].
template <typename T>
Tensor<T> to_tensor(std::span<const RasterImage> images) {
  require(!images.empty(), "cannot batch zero images");
  const int h = images[0].height, w = images[0].width;
  Tensor<T> out(static_cast<int>(images.size()), 3, h, w);
  for (std::size_t i = 0; i < images.size(); ++i) {
    require(images[i].width == w && images[i].height == h, "batch images differ in size: ",
            images[i].width, "x", images[i].height, " vs ", w, "x", h);
    for (int c = 0; c < 3; ++c)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          out.at(static_cast<int>(i), c, y, x) = static_cast<T>(images[i].at(x, y, c)) * T(2) - T(1);
  }
  return out;
}

template <typename T>
Tensor<T> to_tensor(const RasterImage& image) {
  return to_tensor<T>(std::span<const RasterImage>(&image, 1));
}

/// Inverse of to_tensor for one batch entry; values are clamped into [0,1].
template <typename T>
RasterImage to_image(const Tensor<T>& t, int index = 0) {
  require(t.c() == 3, "expected a 3-channel tensor, got ", t.shape.str());
  RasterImage img(t.w(), t.h());
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < t.h(); ++y)
      for (int x = 0; x < t.w(); ++x) {
        const double v = (static_cast<double>(t.at(index, c, y, x)) + 1.0) * 0.5;
        img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
  return img;
}

}  // namespace parkgen
