#pragma once

// Procedural (remote image, environment map, park layout, rendered scheme)
// quadruples. Scenes are a Manhattan road grid with building blocks and an
// optional water body; one rectangular park site carries a loop path,
// entrance connectors where urban roads abut the site, paved nodes, small
// structures, an optional pond and scattered plant discs.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "parkgen/error.hpp"
#include "parkgen/kv.hpp"
#include "parkgen/png_io.hpp"
#include "parkgen/random.hpp"
#include "parkgen/raster.hpp"

namespace parkgen {

struct Rect {
  int x = 0, y = 0, w = 0, h = 0;
  bool contains(int px, int py) const { return px >= x && py >= y && px < x + w && py < y + h; }
  bool operator==(const Rect&) const = default;
};

struct SceneParams {
  int canvas_size = 64;
  int road_grid_spacing = 22;
  double building_density = 0.6;
  double water_probability = 0.35;
  /// Nominal park site; each scene jitters its origin and size by up to
  /// `park_jitter` pixels while keeping it inside the canvas.
  Rect park_rect{16, 16, 32, 32};
  int park_jitter = 4;
  double texture_noise = 0.2;

  /// Smallest park side that can host the loop path and its connectors.
  static constexpr int kMinParkSide = 12;

  int road_width() const { return std::max(1, canvas_size / 32); }

  void validate() const {
    require<ConfigError>(canvas_size >= 16, "canvas_size must be >= 16");
    require<ConfigError>(road_grid_spacing >= 4 * road_width(), "road_grid_spacing too small");
    require<ConfigError>(building_density >= 0 && building_density <= 1,
                         "building_density must be in [0,1]");
    require<ConfigError>(water_probability >= 0 && water_probability <= 1,
                         "water_probability must be in [0,1]");
    require<ConfigError>(texture_noise >= 0 && texture_noise <= 1, "texture_noise must be in [0,1]");
    require<ConfigError>(park_jitter >= 0, "park_jitter must be >= 0");
    const auto& r = park_rect;
    require<ConfigError>(r.x >= 1 && r.y >= 1 && r.x + r.w <= canvas_size - 1 &&
                             r.y + r.h <= canvas_size - 1,
                         "park_rect must lie inside the canvas with a 1-pixel margin");
    require(r.w - 2 * park_jitter >= kMinParkSide && r.h - 2 * park_jitter >= kMinParkSide,
            "park_rect ", r.w, "x", r.h, " with jitter ", park_jitter,
            " cannot host a connected path network (minimum side ", kMinParkSide, ")");
  }

  nlohmann::json to_json() const {
    return {{"canvas_size", canvas_size},
            {"road_grid_spacing", road_grid_spacing},
            {"building_density", building_density},
            {"water_probability", water_probability},
            {"park_rect", {park_rect.x, park_rect.y, park_rect.w, park_rect.h}},
            {"park_jitter", park_jitter},
            {"texture_noise", texture_noise}};
  }
  static SceneParams from_json(const nlohmann::json& j) {
    SceneParams p;
    p.canvas_size = j.at("canvas_size");
    p.road_grid_spacing = j.at("road_grid_spacing");
    p.building_density = j.at("building_density");
    p.water_probability = j.at("water_probability");
    const auto& r = j.at("park_rect");
    p.park_rect = {r.at(0), r.at(1), r.at(2), r.at(3)};
    p.park_jitter = j.at("park_jitter");
    p.texture_noise = j.at("texture_noise");
    return p;
  }
  /// Keys: canvas_size, road_grid_spacing, building_density,
  /// water_probability, park_x, park_y, park_w, park_h, park_jitter, texture_noise.
  static SceneParams from_kv(const KeyValues& kv) {
    SceneParams p;
    p.canvas_size = kv.get("canvas_size", p.canvas_size);
    p.road_grid_spacing = kv.get("road_grid_spacing", p.road_grid_spacing);
    p.building_density = kv.get("building_density", p.building_density);
    p.water_probability = kv.get("water_probability", p.water_probability);
    p.park_rect.x = kv.get("park_x", p.park_rect.x);
    p.park_rect.y = kv.get("park_y", p.park_rect.y);
    p.park_rect.w = kv.get("park_w", p.park_rect.w);
    p.park_rect.h = kv.get("park_h", p.park_rect.h);
    p.park_jitter = kv.get("park_jitter", p.park_jitter);
    p.texture_noise = kv.get("texture_noise", p.texture_noise);
    return p;
  }
  bool operator==(const SceneParams&) const = default;
};

struct SceneQuad {
  RasterImage remote;
  ClassMap environment;
  ClassMap layout;
  RasterImage scheme;
  std::uint64_t seed = 0;
  Rect park;

  bool operator==(const SceneQuad& o) const {
    return remote == o.remote && environment == o.environment && layout == o.layout &&
           scheme == o.scheme && seed == o.seed && park == o.park;
  }
};

namespace detail {

struct Disc {
  int cx, cy, r;
};

template <typename F>
void fill_rect(ClassMap& m, int x0, int y0, int w, int h, F&& value_at) {
  for (int y = std::max(0, y0); y < std::min(m.height, y0 + h); ++y)
    for (int x = std::max(0, x0); x < std::min(m.width, x0 + w); ++x) value_at(m.at(x, y));
}

inline void paint_rect(ClassMap& m, int x0, int y0, int w, int h, std::uint8_t c) {
  fill_rect(m, x0, y0, w, h, [c](std::uint8_t& v) { v = c; });
}

/// Maximal runs of `pred` along a side, as (start, length).
template <typename P>
std::vector<std::pair<int, int>> runs(int len, P&& pred) {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < len;) {
    if (!pred(i)) {
      ++i;
      continue;
    }
    int j = i;
    while (j < len && pred(j)) ++j;
    out.push_back({i, j - i});
    i = j;
  }
  return out;
}

inline ClassMap make_environment(Rng& rng, const SceneParams& p, const Rect& park) {
  const auto legend = Legend::environment();
  const auto road = static_cast<std::uint8_t>(legend->id_of("Urban road"));
  const auto building = static_cast<std::uint8_t>(legend->id_of("Building"));
  const auto bare = static_cast<std::uint8_t>(legend->id_of("Bare ground"));
  const auto water = static_cast<std::uint8_t>(legend->id_of("Water"));
  const auto site = static_cast<std::uint8_t>(legend->id_of("Red line"));
  const int N = p.canvas_size, S = p.road_grid_spacing, rw = p.road_width();
  ClassMap env(N, N, legend, bare);

  const int ox = rng.uniform_int(0, S - 1);
  const int oy = rng.uniform_int(0, S - 1);
  std::vector<int> xs, ys;
  for (int x = ox - S; x < N; x += S)
    if (x + rw > 0) xs.push_back(x);
  for (int y = oy - S; y < N; y += S)
    if (y + rw > 0) ys.push_back(y);

  // Buildings: up to two lots per block.
  for (std::size_t by = 0; by + 1 <= ys.size(); ++by)
    for (std::size_t bx = 0; bx + 1 <= xs.size(); ++bx) {
      const int bx0 = xs[bx] + rw + 1, by0 = ys[by] + rw + 1;
      const int bx1 = (bx + 1 < xs.size() ? xs[bx + 1] : xs[bx] + S) - 1;
      const int by1 = (by + 1 < ys.size() ? ys[by + 1] : ys[by] + S) - 1;
      const int bw = bx1 - bx0, bh = by1 - by0;
      if (bw < 3 || bh < 3) continue;
      for (int lot = 0; lot < 2; ++lot) {
        if (!rng.bernoulli(p.building_density)) continue;
        const int w = rng.uniform_int(std::max(2, bw / 4), std::max(2, bw / 2));
        const int h = rng.uniform_int(std::max(2, bh / 4), std::max(2, bh / 2));
        const int x = bx0 + rng.uniform_int(0, std::max(0, bw - w));
        const int y = by0 + rng.uniform_int(0, std::max(0, bh - h));
        paint_rect(env, x, y, w, h, building);
      }
    }

  if (rng.bernoulli(p.water_probability)) {
    const double cx = rng.uniform(0, N), cy = rng.uniform(0, N);
    const double rx = rng.uniform(N / 16.0, N / 8.0), ry = rng.uniform(N / 16.0, N / 8.0);
    for (int y = 0; y < N; ++y)
      for (int x = 0; x < N; ++x) {
        const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
        if (dx * dx + dy * dy <= 1.0) env.at(x, y) = water;
      }
  }

  for (int x : xs) paint_rect(env, x, 0, rw, N, road);
  for (int y : ys) paint_rect(env, 0, y, N, rw, road);

  paint_rect(env, park.x, park.y, park.w, park.h, site);

  // Every site must touch at least one urban road; otherwise run a stub road
  // from the top edge of the site to the canvas border.
  bool touches = false;
  for (int x = park.x; x < park.x + park.w && !touches; ++x)
    touches = env.at(x, park.y - 1) == road || env.at(x, park.y + park.h) == road;
  for (int y = park.y; y < park.y + park.h && !touches; ++y)
    touches = env.at(park.x - 1, y) == road || env.at(park.x + park.w, y) == road;
  if (!touches) {
    const int x = park.x + rng.uniform_int(2, park.w - 2 - rw);
    paint_rect(env, x, 0, rw, park.y, road);
  }
  return env;
}

inline ClassMap make_layout(Rng& rng, const SceneParams& p, const Rect& park,
                            const ClassMap& env, std::vector<Disc>& plants) {
  const auto legend = Legend::park();
  const auto green = static_cast<std::uint8_t>(legend->id_of("Green land"));
  const auto water = static_cast<std::uint8_t>(legend->id_of("Water"));
  const auto road = static_cast<std::uint8_t>(legend->id_of("Roads"));
  const auto paving = static_cast<std::uint8_t>(legend->id_of("Paving"));
  const auto structure = static_cast<std::uint8_t>(legend->id_of("Structures"));
  const auto plant = static_cast<std::uint8_t>(legend->id_of("Plant"));
  const auto background = static_cast<std::uint8_t>(legend->id_of("Background"));
  const auto urban_road = static_cast<std::uint8_t>(env.legend->id_of("Urban road"));
  const int N = p.canvas_size, rw = p.road_width();

  ClassMap lay(N, N, legend, background);
  paint_rect(lay, park.x, park.y, park.w, park.h, green);

  // Loop path inset from the site edge.
  const int m = std::max(2, std::min(park.w, park.h) / 4);
  const Rect ring{park.x + m, park.y + m, park.w - 2 * m, park.h - 2 * m};

  if (rng.bernoulli(0.6)) {
    const int iw = ring.w - 2 * rw - 2, ih = ring.h - 2 * rw - 2;
    if (iw >= 3 && ih >= 3) {
      const double cx = ring.x + ring.w / 2.0, cy = ring.y + ring.h / 2.0;
      const double rx = rng.uniform(1.5, iw / 2.0), ry = rng.uniform(1.5, ih / 2.0);
      for (int y = ring.y; y < ring.y + ring.h; ++y)
        for (int x = ring.x; x < ring.x + ring.w; ++x) {
          const double dx = (x + 0.5 - cx) / rx, dy = (y + 0.5 - cy) / ry;
          if (dx * dx + dy * dy <= 1.0) lay.at(x, y) = water;
        }
    }
  }

  // Paved nodes on ring corners or side midpoints, each possibly with a structure.
  const std::array<std::pair<int, int>, 8> anchors{{
      {ring.x, ring.y},
      {ring.x + ring.w - 1, ring.y},
      {ring.x, ring.y + ring.h - 1},
      {ring.x + ring.w - 1, ring.y + ring.h - 1},
      {ring.x + ring.w / 2, ring.y},
      {ring.x + ring.w / 2, ring.y + ring.h - 1},
      {ring.x, ring.y + ring.h / 2},
      {ring.x + ring.w - 1, ring.y + ring.h / 2},
  }};
  const int nodes = rng.uniform_int(1, 3);
  std::array<bool, 8> used{};
  for (int k = 0; k < nodes; ++k) {
    int a = rng.uniform_int(0, 7);
    while (used[a]) a = (a + 1) % 8;
    used[a] = true;
    const int side = rng.uniform_int(4, std::max(4, m + 2));
    const int x0 = anchors[a].first - side / 2, y0 = anchors[a].second - side / 2;
    fill_rect(lay, x0, y0, side, side, [&](std::uint8_t& v) {
      if (v == green) v = paving;
    });
    if (rng.bernoulli(0.75)) {
      const int s = rng.uniform_int(2, 3);
      // Outer corner of the paved square, away from the path.
      const int sx = anchors[a].first < ring.x + ring.w / 2 ? x0 : x0 + side - s;
      const int sy = anchors[a].second < ring.y + ring.h / 2 ? y0 : y0 + side - s;
      fill_rect(lay, sx, sy, s, s, [&](std::uint8_t& v) {
        if (v == paving) v = structure;
      });
    }
  }

  // Ring.
  paint_rect(lay, ring.x, ring.y, ring.w, rw, road);
  paint_rect(lay, ring.x, ring.y + ring.h - rw, ring.w, rw, road);
  paint_rect(lay, ring.x, ring.y, rw, ring.h, road);
  paint_rect(lay, ring.x + ring.w - rw, ring.y, rw, ring.h, road);

  // Entrance connectors where urban roads meet the site boundary.
  auto connect = [&](int along0, int len, bool horizontal_side, bool near_side) {
    if (len > 2 * rw) {
      along0 += (len - rw) / 2;
      len = rw;
    }
    for (int a = along0; a < along0 + len; ++a) {
      if (horizontal_side) {
        // Vertical connector from the top/bottom edge to the ring row band.
        const int y_edge = near_side ? park.y : park.y + park.h - 1;
        const int y_ring = near_side ? ring.y : ring.y + ring.h - rw;
        const int y0 = std::min(y_edge, y_ring), y1 = std::max(y_edge, y_ring + rw - 1);
        paint_rect(lay, a, y0, 1, y1 - y0 + 1, road);
        const int xc = std::clamp(a, ring.x, ring.x + ring.w - 1);
        paint_rect(lay, std::min(a, xc), y_ring, std::abs(a - xc) + 1, rw, road);
      } else {
        const int x_edge = near_side ? park.x : park.x + park.w - 1;
        const int x_ring = near_side ? ring.x : ring.x + ring.w - rw;
        const int x0 = std::min(x_edge, x_ring), x1 = std::max(x_edge, x_ring + rw - 1);
        paint_rect(lay, x0, a, x1 - x0 + 1, 1, road);
        const int yc = std::clamp(a, ring.y, ring.y + ring.h - 1);
        paint_rect(lay, x_ring, std::min(a, yc), rw, std::abs(a - yc) + 1, road);
      }
    }
  };
  for (auto [s, len] : runs(park.w, [&](int i) { return env.at(park.x + i, park.y - 1) == urban_road; }))
    connect(park.x + s, len, true, true);
  for (auto [s, len] : runs(park.w, [&](int i) { return env.at(park.x + i, park.y + park.h) == urban_road; }))
    connect(park.x + s, len, true, false);
  for (auto [s, len] : runs(park.h, [&](int i) { return env.at(park.x - 1, park.y + i) == urban_road; }))
    connect(park.y + s, len, false, true);
  for (auto [s, len] : runs(park.h, [&](int i) { return env.at(park.x + park.w, park.y + i) == urban_road; }))
    connect(park.y + s, len, false, false);

  // Plant discs on remaining green land.
  const int count = std::max(2, park.w * park.h / 60);
  for (int k = 0; k < count; ++k) {
    const Disc d{park.x + rng.uniform_int(1, park.w - 2), park.y + rng.uniform_int(1, park.h - 2),
                 rng.uniform_int(1, 2)};
    if (lay.at(d.cx, d.cy) != green) continue;
    plants.push_back(d);
    for (int y = d.cy - d.r; y <= d.cy + d.r; ++y)
      for (int x = d.cx - d.r; x <= d.cx + d.r; ++x) {
        if (!park.contains(x, y)) continue;
        const int dx = x - d.cx, dy = y - d.cy;
        if (dx * dx + dy * dy <= d.r * d.r + d.r && lay.at(x, y) == green) lay.at(x, y) = plant;
      }
  }
  return lay;
}

/// Smooth field in roughly [-1, 1] from bilinear interpolation of a coarse grid.
inline std::vector<double> blotch_field(Rng& rng, int n, int cells) {
  std::vector<double> grid(static_cast<std::size_t>(cells + 1) * (cells + 1));
  for (auto& g : grid) g = rng.uniform(-1.0, 1.0);
  std::vector<double> out(static_cast<std::size_t>(n) * n);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) {
      const double gx = static_cast<double>(x) * cells / n, gy = static_cast<double>(y) * cells / n;
      const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
      const double fx = gx - ix, fy = gy - iy;
      auto G = [&](int a, int b) { return grid[static_cast<std::size_t>(b) * (cells + 1) + a]; };
      out[static_cast<std::size_t>(y) * n + x] =
          (1 - fy) * ((1 - fx) * G(ix, iy) + fx * G(ix + 1, iy)) +
          fy * ((1 - fx) * G(ix, iy + 1) + fx * G(ix + 1, iy + 1));
    }
  return out;
}

/// Legend colours plus per-class tint, pixel noise and low-frequency shading,
/// all scaled by `noise`. At noise 0 the image is the exact encoding.
inline RasterImage make_remote(Rng& rng, const ClassMap& env, double noise) {
  RasterImage img = encode_classmap(env);
  if (noise <= 0) return img;
  const std::size_t K = env.legend->size();
  std::vector<std::array<double, 3>> tint(K);
  for (auto& t : tint)
    for (auto& c : t) c = rng.uniform(-0.3, 0.3);
  const auto field = blotch_field(rng, env.width, 4);
  for (int y = 0; y < env.height; ++y)
    for (int x = 0; x < env.width; ++x) {
      const auto k = env.at(x, y);
      const double shade = 0.3 * field[static_cast<std::size_t>(y) * env.width + x];
      for (int c = 0; c < 3; ++c) {
        const double v = img.at(x, y, c) + noise * (tint[k][c] + shade + 0.5 * rng.normal());
        img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  return img;
}

/// Layout rendered as a colour plan: per-class texture and circular plant symbols.
inline RasterImage render_scheme(const ClassMap& layout, const std::vector<Disc>& plants) {
  const auto& L = *layout.legend;
  const int green = L.id_of("Green land"), water = L.id_of("Water"), road = L.id_of("Roads"),
            paving = L.id_of("Paving"), structure = L.id_of("Structures"), plant = L.id_of("Plant");
  RasterImage img = encode_classmap(layout);
  auto shade = [&](int x, int y, double f) {
    for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(std::clamp(img.at(x, y, c) * f, 0.0, 1.0));
  };
  for (int y = 0; y < layout.height; ++y)
    for (int x = 0; x < layout.width; ++x) {
      const int k = layout.at(x, y);
      if (k == green) {
        if ((x * 7 + y * 13) % 5 == 0) shade(x, y, 0.88);
      } else if (k == water) {
        if (y % 3 == 0) img.at(x, y, 0) = 0.25f;
      } else if (k == paving) {
        if (x % 3 == 0 || y % 3 == 0) shade(x, y, 0.9);
      } else if (k == structure) {
        const bool edge = !layout.in_bounds(x - 1, y) || layout.at(x - 1, y) != k ||
                          !layout.in_bounds(x, y - 1) || layout.at(x, y - 1) != k;
        if (edge) shade(x, y, 0.75);
      } else if (k == road) {
        if ((x + y) % 4 == 0) shade(x, y, 0.95);
      }
    }
  for (const auto& d : plants)
    for (int y = d.cy - d.r; y <= d.cy + d.r; ++y)
      for (int x = d.cx - d.r; x <= d.cx + d.r; ++x) {
        if (!layout.in_bounds(x, y) || layout.at(x, y) != plant) continue;
        const int dd = (x - d.cx) * (x - d.cx) + (y - d.cy) * (y - d.cy);
        if (dd >= d.r * d.r) shade(x, y, 0.72);  // symbol outline
        else if (dd == 0) {
          img.at(x, y, 1) = std::min(1.0f, img.at(x, y, 1) * 1.2f);
        }
      }
  return img;
}

}  // namespace detail

inline SceneQuad generate_scene(std::uint64_t seed, const SceneParams& params) {
  params.validate();
  Rng rng(seed);
  const int j = params.park_jitter;
  Rect park = params.park_rect;
  park.x += rng.uniform_int(-j, j);
  park.y += rng.uniform_int(-j, j);
  park.w += rng.uniform_int(-j, j);
  park.h += rng.uniform_int(-j, j);
  const int N = params.canvas_size;
  park.x = std::clamp(park.x, 1, N - 1 - SceneParams::kMinParkSide);
  park.y = std::clamp(park.y, 1, N - 1 - SceneParams::kMinParkSide);
  park.w = std::clamp(park.w, SceneParams::kMinParkSide, N - 1 - park.x);
  park.h = std::clamp(park.h, SceneParams::kMinParkSide, N - 1 - park.y);

  SceneQuad q;
  q.seed = seed;
  q.park = park;
  q.environment = detail::make_environment(rng, params, park);
  std::vector<detail::Disc> plants;
  q.layout = detail::make_layout(rng, params, park, q.environment, plants);
  q.scheme = detail::render_scheme(q.layout, plants);
  q.remote = detail::make_remote(rng, q.environment, params.texture_noise);
  return q;
}

struct Corpus {
  SceneParams params;
  std::vector<SceneQuad> scenes;

  std::size_t size() const { return scenes.size(); }
  bool empty() const { return scenes.empty(); }

  /// Mean per-pixel class fractions over all scene layouts (park legend).
  std::vector<double> layout_histogram() const {
    std::vector<double> acc(Legend::park()->size(), 0.0);
    for (const auto& s : scenes) {
      const auto h = class_histogram(s.layout);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += h[i] / static_cast<double>(scenes.size());
    }
    return acc;
  }
  std::vector<double> environment_histogram() const {
    std::vector<double> acc(Legend::environment()->size(), 0.0);
    for (const auto& s : scenes) {
      const auto h = class_histogram(s.environment);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += h[i] / static_cast<double>(scenes.size());
    }
    return acc;
  }

  nlohmann::json manifest() const {
    nlohmann::json seeds = nlohmann::json::array();
    for (const auto& s : scenes) seeds.push_back(s.seed);
    auto hist = [](const std::vector<double>& h, const LegendPtr& l) {
      nlohmann::json j = nlohmann::json::object();
      for (std::size_t i = 0; i < h.size(); ++i) j[(*l)[i].name] = h[i];
      return j;
    };
    return {{"kind", "parkgen-corpus"},
            {"schema_version", 1},
            {"prng", Rng::algorithm},
            {"params", params.to_json()},
            {"seeds", seeds},
            {"layout_histogram", hist(layout_histogram(), Legend::park())},
            {"environment_histogram", hist(environment_histogram(), Legend::environment())}};
  }
};

inline Corpus generate_corpus(std::size_t n, std::uint64_t seed, const SceneParams& params) {
  require(n >= 1, "corpus size must be >= 1");
  params.validate();
  Corpus c;
  c.params = params;
  c.scenes.reserve(n);
  for (std::size_t i = 0; i < n; ++i) c.scenes.push_back(generate_scene(seed + i, params));
  return c;
}

/// First floor(n * fraction) scenes (in seed order) train, the rest test.
inline std::pair<Corpus, Corpus> split_corpus(const Corpus& corpus, double train_fraction) {
  require<ConfigError>(train_fraction > 0 && train_fraction < 1,
                       "train_fraction must be in (0,1), got ", train_fraction);
  const auto n = corpus.size();
  const auto n_train = static_cast<std::size_t>(std::floor(n * train_fraction + 1e-9));
  require(n_train >= 1 && n_train < n, "train_fraction ", train_fraction, " on ", n,
          " scenes leaves one side empty");
  Corpus train{corpus.params, {}}, test{corpus.params, {}};
  train.scenes.assign(corpus.scenes.begin(), corpus.scenes.begin() + static_cast<std::ptrdiff_t>(n_train));
  test.scenes.assign(corpus.scenes.begin() + static_cast<std::ptrdiff_t>(n_train), corpus.scenes.end());
  return {std::move(train), std::move(test)};
}

inline std::string scene_dir_name(std::uint64_t seed) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scene_%08llu", static_cast<unsigned long long>(seed));
  return buf;
}

inline void save_corpus(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const auto& s : corpus.scenes) {
    const auto sd = fs::path(dir) / scene_dir_name(s.seed);
    fs::create_directories(sd);
    write_png((sd / "remote.png").string(), s.remote);
    write_classmap_png((sd / "environment.png").string(), s.environment);
    write_classmap_png((sd / "layout.png").string(), s.layout);
    write_png((sd / "scheme.png").string(), s.scheme);
  }
  auto m = corpus.manifest();
  nlohmann::json parks = nlohmann::json::array();
  for (const auto& s : corpus.scenes) parks.push_back({s.park.x, s.park.y, s.park.w, s.park.h});
  m["park_rects"] = parks;
  std::ofstream f(fs::path(dir) / "manifest.json");
  require(static_cast<bool>(f), "cannot write corpus manifest in '", dir, "'");
  f << m.dump(2) << '\n';
}

inline Corpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto mpath = fs::path(dir) / "manifest.json";
  std::ifstream f(mpath);
  require(static_cast<bool>(f), "no corpus manifest at '", mpath.string(), "'");
  nlohmann::json m;
  try {
    m = nlohmann::json::parse(f);
  } catch (const std::exception& e) {
    fail("corrupt corpus manifest '", mpath.string(), "': ", e.what());
  }
  require(m.value("kind", "") == "parkgen-corpus", "'", mpath.string(), "' is not a corpus manifest");
  if (m.value("schema_version", 0) != 1)
    fail<VersionError>("corpus schema version ", m.value("schema_version", 0), " is not supported");
  Corpus c;
  c.params = SceneParams::from_json(m.at("params"));
  const auto& seeds = m.at("seeds");
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    SceneQuad q;
    q.seed = seeds[i].get<std::uint64_t>();
    const auto sd = fs::path(dir) / scene_dir_name(q.seed);
    q.remote = read_png((sd / "remote.png").string());
    q.environment = read_classmap_png((sd / "environment.png").string(), Legend::environment());
    q.layout = read_classmap_png((sd / "layout.png").string(), Legend::park());
    q.scheme = read_png((sd / "scheme.png").string());
    if (m.contains("park_rects")) {
      const auto& r = m["park_rects"].at(i);
      q.park = {r.at(0), r.at(1), r.at(2), r.at(3)};
    }
    c.scenes.push_back(std::move(q));
  }
  return c;
}

}  // namespace parkgen
