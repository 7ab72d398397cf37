#pragma once

// Land-use legend, class maps, RGB rasters and tiling.

#include <algorithm>
#include <array>
#include <compare>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "parkgen/error.hpp"
#include "parkgen/kv.hpp"

namespace parkgen {

enum class Role { park_element, environment_element, mask };

inline const char* to_string(Role r) {
  switch (r) {
    case Role::park_element: return "park_element";
    case Role::environment_element: return "environment_element";
    case Role::mask: return "mask";
  }
  return "?";
}

inline Role role_from_string(const std::string& s) {
  if (s == "park_element") return Role::park_element;
  if (s == "environment_element") return Role::environment_element;
  if (s == "mask") return Role::mask;
  fail<ConfigError>("unknown legend role '", s, "'");
}

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
  auto operator<=>(const Rgb&) const = default;
};

struct LegendEntry {
  int class_id = 0;
  std::string name;
  Rgb rgb;
  Role role = Role::park_element;
  bool operator==(const LegendEntry&) const = default;
};

/// The six park design element classes of the land use code table.
inline const std::array<LegendEntry, 6>& table1_entries() {
  static const std::array<LegendEntry, 6> entries{{
      {0, "Green land", {0, 255, 0}, Role::park_element},
      {1, "Water", {0, 255, 255}, Role::park_element},
      {2, "Roads", {241, 145, 73}, Role::park_element},
      {3, "Paving", {255, 255, 0}, Role::park_element},
      {4, "Structures", {255, 0, 255}, Role::park_element},
      {5, "Plant", {0, 152, 67}, Role::park_element},
  }};
  return entries;
}

/// Ordered class -> colour mapping. Class ids are contiguous from zero and
/// colours are pairwise distinct, so exact legend colours quantize exactly.
class Legend {
 public:
  Legend() = default;

  Legend(std::string id, std::vector<LegendEntry> entries)
      : id_(std::move(id)), entries_(std::move(entries)) {
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      require(entries_[i].class_id == static_cast<int>(i), "legend '", id_,
              "': class ids must be contiguous from 0; entry ", i, " has id ",
              entries_[i].class_id);
      for (std::size_t j = 0; j < i; ++j)
        require(entries_[i].rgb != entries_[j].rgb, "legend '", id_, "': classes ", j, " and ",
                i, " share a colour");
    }
    require(entries_.size() <= 256, "legend '", id_, "': at most 256 classes");
    const bool has_park = std::any_of(entries_.begin(), entries_.end(), [](const auto& e) {
      return e.role == Role::park_element;
    });
    if (has_park) {
      std::size_t n = 0;
      for (const auto& e : entries_) {
        if (e.role != Role::park_element) continue;
        ++n;
        const bool known = std::any_of(table1_entries().begin(), table1_entries().end(),
                                       [&](const auto& t) {
                                         return t.name == e.name && t.rgb == e.rgb;
                                       });
        require(known, "legend '", id_, "': park element '", e.name,
                "' does not match the land use code table");
      }
      require(n == table1_entries().size(), "legend '", id_,
              "': park legends carry exactly the six land use code table classes");
    }
  }

  const std::string& id() const { return id_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const LegendEntry& operator[](std::size_t i) const { return entries_.at(i); }
  const std::vector<LegendEntry>& entries() const { return entries_; }
  bool contains(int class_id) const {
    return class_id >= 0 && class_id < static_cast<int>(entries_.size());
  }

  std::optional<int> find(const std::string& name) const {
    for (const auto& e : entries_)
      if (e.name == name) return e.class_id;
    return std::nullopt;
  }
  int id_of(const std::string& name) const {
    auto c = find(name);
    require(c.has_value(), "legend '", id_, "' has no class named '", name, "'");
    return *c;
  }

  bool operator==(const Legend&) const = default;

  /// Park layout legend: the six design classes plus a Background class
  /// for everything outside the site.
  static std::shared_ptr<const Legend> park() {
    static const auto legend = [] {
      std::vector<LegendEntry> e(table1_entries().begin(), table1_entries().end());
      e.push_back({6, "Background", {255, 255, 255}, Role::environment_element});
      return std::make_shared<const Legend>("park", std::move(e));
    }();
    return legend;
  }

  /// External-environment legend. The colours are configuration; Building
  /// reuses the Structures colour, which is why it lives in its own legend.
  static std::shared_ptr<const Legend> environment() {
    static const auto legend = std::make_shared<const Legend>(
        "environment", std::vector<LegendEntry>{
                           {0, "Urban road", {128, 128, 128}, Role::environment_element},
                           {1, "Building", {255, 0, 255}, Role::environment_element},
                           {2, "Bare ground", {200, 200, 200}, Role::environment_element},
                           {3, "Water", {0, 255, 255}, Role::environment_element},
                           {4, "Background", {255, 255, 255}, Role::environment_element},
                           {5, "Red line", {255, 0, 0}, Role::mask},
                       });
    return legend;
  }

  /// Serializes as blank-line separated blocks of key = value lines.
  std::string to_text() const {
    std::ostringstream oss;
    oss << "legend = " << id_ << "\n";
    for (const auto& e : entries_) {
      oss << "\nclass_id = " << e.class_id << "\nname = " << e.name
          << "\nr = " << int(e.rgb.r) << "\ng = " << int(e.rgb.g) << "\nb = " << int(e.rgb.b)
          << "\nrole = " << to_string(e.role) << "\n";
    }
    return oss.str();
  }

  static Legend from_text(const std::string& text) {
    std::istringstream in(text);
    std::string line, block, id;
    std::vector<std::string> blocks;
    while (std::getline(in, line)) {
      if (trim(line).empty()) {
        if (!trim(block).empty()) blocks.push_back(block);
        block.clear();
      } else {
        block += line + "\n";
      }
    }
    if (!trim(block).empty()) blocks.push_back(block);
    require<ConfigError>(!blocks.empty(), "legend document is empty");
    const auto head = KeyValues::parse(blocks.front(), "legend");
    id = head.str("legend");
    std::vector<LegendEntry> entries;
    for (std::size_t i = 1; i < blocks.size(); ++i) {
      const auto kv = KeyValues::parse(blocks[i], "legend");
      auto channel = [&](const char* k) {
        const int v = kv.get<int>(k);
        require<ConfigError>(v >= 0 && v <= 255, "legend: channel ", k, " out of range");
        return static_cast<std::uint8_t>(v);
      };
      entries.push_back({kv.get<int>("class_id"), kv.str("name"),
                         {channel("r"), channel("g"), channel("b")},
                         role_from_string(kv.str("role"))});
    }
    return Legend(id, std::move(entries));
  }

 private:
  std::string id_;
  std::vector<LegendEntry> entries_;
};

using LegendPtr = std::shared_ptr<const Legend>;

/// Row-major grid of class ids tied to a legend.
struct ClassMap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;
  LegendPtr legend;

  ClassMap() = default;
  ClassMap(int w, int h, LegendPtr l, std::uint8_t fill = 0)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill), legend(std::move(l)) {
    require(w >= 0 && h >= 0, "class map dimensions must be non-negative");
  }

  std::size_t size() const { return data.size(); }
  std::uint8_t& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
  std::uint8_t at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && y >= 0 && x < width && y < height; }

  void validate() const {
    require(legend != nullptr, "class map has no legend");
    require(data.size() == static_cast<std::size_t>(width) * height,
            "class map data size does not match ", width, "x", height);
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        require(legend->contains(at(x, y)), "unknown class id ", int(at(x, y)), " at (", x,
                ", ", y, ") for legend '", legend->id(), "'");
  }

  bool operator==(const ClassMap& o) const {
    const bool same_legend = legend == o.legend || (legend && o.legend && *legend == *o.legend);
    return width == o.width && height == o.height && data == o.data && same_legend;
  }
};

/// H x W x 3 image with channel values in [0,1].
struct RasterImage {
  int width = 0;
  int height = 0;
  std::vector<float> data;  // interleaved RGB, row-major
  std::optional<double> meters_per_pixel;

  RasterImage() = default;
  RasterImage(int w, int h, float fill = 0.0f)
      : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, fill) {
    require(w >= 1 && h >= 1, "raster image dimensions must be at least 1x1, got ", w, "x", h);
  }

  static constexpr int channels = 3;
  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  float& at(int x, int y, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int x, int y, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }

  void validate() const {
    require(width >= 1 && height >= 1, "raster image must be at least 1x1");
    require(data.size() == pixel_count() * 3, "raster image data size mismatch");
    for (float v : data) require(v >= 0.0f && v <= 1.0f, "raster value ", v, " outside [0,1]");
  }

  bool operator==(const RasterImage& o) const {
    return width == o.width && height == o.height && data == o.data;
  }
};

struct TileSpec {
  int tile_size = 64;
  int stride = 64;

  void validate() const {
    require<ConfigError>(tile_size >= 1, "tile_size must be >= 1");
    require<ConfigError>(stride >= 1 && stride <= tile_size, "tile stride must be in [1, ",
                         tile_size, "], got ", stride);
  }
};

inline RasterImage encode_classmap(const ClassMap& map) {
  map.validate();
  RasterImage img(map.width, map.height);
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      const Rgb c = (*map.legend)[map.at(x, y)].rgb;
      img.at(x, y, 0) = c.r / 255.0f;
      img.at(x, y, 1) = c.g / 255.0f;
      img.at(x, y, 2) = c.b / 255.0f;
    }
  return img;
}

/// Nearest legend colour by Euclidean RGB distance; ties go to the lower id.
inline int nearest_class(const Legend& legend, double r, double g, double b) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& e : legend.entries()) {
    const double dr = r - e.rgb.r / 255.0;
    const double dg = g - e.rgb.g / 255.0;
    const double db = b - e.rgb.b / 255.0;
    const double d = dr * dr + dg * dg + db * db;
    // Distinct 8-bit distances differ by at least 1/255^2, so a smaller
    // margin only absorbs float rounding and keeps exact ties on the lower id.
    if (d < best_d - 1e-6) {
      best_d = d;
      best = e.class_id;
    }
  }
  return best;
}

inline ClassMap quantize_to_classes(const RasterImage& img, const LegendPtr& legend) {
  require(legend != nullptr && !legend->empty(), "cannot quantize against an empty legend");
  require(img.data.size() == img.pixel_count() * 3, "quantize expects a 3-channel image");
  ClassMap out(img.width, img.height, legend);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      out.at(x, y) = static_cast<std::uint8_t>(
          nearest_class(*legend, img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2)));
  return out;
}

inline std::vector<double> class_histogram(const ClassMap& map) {
  map.validate();
  require(map.size() > 0, "class histogram of a zero-area map");
  std::vector<std::size_t> counts(map.legend->size(), 0);
  for (auto c : map.data) ++counts[c];
  std::vector<double> out(counts.size());
  const double total = static_cast<double>(map.size());
  for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] / total;
  return out;
}

/// Tile origins along one axis: stride steps, plus one edge-anchored tile
/// when the remainder is not a multiple of the stride.
inline std::vector<int> tile_offsets(int dim, const TileSpec& spec) {
  spec.validate();
  require(dim >= spec.tile_size, "image dimension ", dim, " is smaller than tile size ",
          spec.tile_size);
  std::vector<int> out;
  int off = 0;
  for (; off + spec.tile_size <= dim; off += spec.stride) out.push_back(off);
  if (out.back() + spec.tile_size < dim) out.push_back(dim - spec.tile_size);
  return out;
}

template <typename Image>
struct Tile {
  Image image;
  int x = 0;
  int y = 0;
};

inline RasterImage crop(const RasterImage& img, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && x0 + w <= img.width && y0 + h <= img.height,
          "crop window exceeds image bounds");
  RasterImage out(w, h);
  out.meters_per_pixel = img.meters_per_pixel;
  for (int y = 0; y < h; ++y)
    std::copy_n(&img.data[(static_cast<std::size_t>(y0 + y) * img.width + x0) * 3], w * 3,
                &out.data[static_cast<std::size_t>(y) * w * 3]);
  return out;
}

inline ClassMap crop(const ClassMap& map, int x0, int y0, int w, int h) {
  require(x0 >= 0 && y0 >= 0 && x0 + w <= map.width && y0 + h <= map.height,
          "crop window exceeds map bounds");
  ClassMap out(w, h, map.legend);
  for (int y = 0; y < h; ++y)
    std::copy_n(&map.data[static_cast<std::size_t>(y0 + y) * map.width + x0], w,
                &out.data[static_cast<std::size_t>(y) * w]);
  return out;
}

template <typename Image>
std::vector<Tile<Image>> tile(const Image& img, const TileSpec& spec) {
  spec.validate();
  require(img.width >= spec.tile_size && img.height >= spec.tile_size, "image ", img.width, "x",
          img.height, " is smaller than tile size ", spec.tile_size);
  std::vector<Tile<Image>> out;
  for (int y : tile_offsets(img.height, spec))
    for (int x : tile_offsets(img.width, spec))
      out.push_back({crop(img, x, y, spec.tile_size, spec.tile_size), x, y});
  return out;
}

}  // namespace parkgen
