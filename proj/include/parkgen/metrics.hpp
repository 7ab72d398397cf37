#pragma once

// Class-map quality measures. Everything here reads class ids only.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "parkgen/error.hpp"
#include "parkgen/raster.hpp"

namespace parkgen {

namespace detail {

inline void require_comparable(const ClassMap& a, const ClassMap& b, const char* what) {
  require(a.legend && b.legend && (a.legend == b.legend || *a.legend == *b.legend), what,
          ": legends differ ('", a.legend ? a.legend->id() : "none", "' vs '",
          b.legend ? b.legend->id() : "none", "')");
}

}  // namespace detail

struct ConfusionMatrix {
  LegendPtr legend;
  std::vector<std::int64_t> counts;  // row = truth, column = prediction

  int classes() const { return static_cast<int>(legend->size()); }
  std::int64_t at(int truth, int pred) const { return counts[truth * classes() + pred]; }

  std::int64_t total() const {
    std::int64_t s = 0;
    for (auto c : counts) s += c;
    return s;
  }

  double pixel_accuracy() const {
    std::int64_t diag = 0;
    for (int k = 0; k < classes(); ++k) diag += at(k, k);
    return static_cast<double>(diag) / static_cast<double>(total());
  }

  /// TP / (TP + FP + FN); absent for a class in neither map.
  std::optional<double> iou(int k) const {
    std::int64_t fp = 0, fn = 0;
    for (int j = 0; j < classes(); ++j)
      if (j != k) {
        fp += at(j, k);
        fn += at(k, j);
      }
    const auto denom = at(k, k) + fp + fn;
    if (denom == 0) return std::nullopt;
    return static_cast<double>(at(k, k)) / static_cast<double>(denom);
  }

  std::optional<double> mean_iou() const {
    double s = 0;
    int n = 0;
    for (int k = 0; k < classes(); ++k)
      if (auto v = iou(k)) {
        s += *v;
        ++n;
      }
    if (n == 0) return std::nullopt;
    return s / n;
  }

  struct Cell {
    int truth = -1, pred = -1;
    std::int64_t count = 0;
  };
  /// Largest off-diagonal entry; count 0 when predictions are perfect.
  Cell worst_confusion() const {
    Cell best;
    for (int t = 0; t < classes(); ++t)
      for (int p = 0; p < classes(); ++p)
        if (t != p && at(t, p) > best.count) best = {t, p, at(t, p)};
    return best;
  }

  ConfusionMatrix& operator+=(const ConfusionMatrix& o) {
    require(legend == o.legend || *legend == *o.legend, "cannot add confusion matrices over different legends");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += o.counts[i];
    return *this;
  }

  std::string to_csv() const {
    std::ostringstream oss;
    oss << "truth\\pred";
    for (int k = 0; k < classes(); ++k) oss << ',' << (*legend)[k].name;
    oss << '\n';
    for (int t = 0; t < classes(); ++t) {
      oss << (*legend)[t].name;
      for (int p = 0; p < classes(); ++p) oss << ',' << at(t, p);
      oss << '\n';
    }
    return oss.str();
  }
};

inline ConfusionMatrix empty_confusion(const LegendPtr& legend) {
  return {legend, std::vector<std::int64_t>(legend->size() * legend->size(), 0)};
}

inline ConfusionMatrix confusion(const ClassMap& pred, const ClassMap& truth) {
  detail::require_comparable(pred, truth, "confusion");
  require(pred.width == truth.width && pred.height == truth.height, "confusion: size mismatch ",
          pred.width, "x", pred.height, " vs ", truth.width, "x", truth.height);
  pred.validate();
  truth.validate();
  auto m = empty_confusion(truth.legend);
  const int k = m.classes();
  for (std::size_t i = 0; i < pred.size(); ++i) ++m.counts[truth.data[i] * k + pred.data[i]];
  return m;
}

namespace detail {

/// Sizes of the connected components of pixels with class `cls`.
inline std::vector<std::int64_t> component_sizes(const ClassMap& map, int cls, bool eight) {
  std::vector<std::int64_t> sizes;
  std::vector<std::uint8_t> seen(map.size(), 0);
  std::vector<int> stack;
  for (int start = 0; start < static_cast<int>(map.size()); ++start) {
    if (seen[start] || map.data[start] != cls) continue;
    std::int64_t n = 0;
    stack.push_back(start);
    seen[start] = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      ++n;
      const int x = i % map.width, y = i / map.width;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if ((dx == 0 && dy == 0) || (!eight && dx != 0 && dy != 0)) continue;
          const int nx = x + dx, ny = y + dy;
          if (!map.in_bounds(nx, ny)) continue;
          const int j = ny * map.width + nx;
          if (!seen[j] && map.data[j] == cls) {
            seen[j] = 1;
            stack.push_back(j);
          }
        }
    }
    sizes.push_back(n);
  }
  return sizes;
}

}  // namespace detail

enum class Connectivity { four, eight };

/// Share of Roads pixels in the largest Roads component; absent without roads.
inline std::optional<double> road_connectivity(const ClassMap& map,
                                               Connectivity conn = Connectivity::four) {
  const auto roads = map.legend->find("Roads");
  require(roads.has_value(), "road_connectivity: legend '", map.legend->id(), "' has no Roads class");
  const auto sizes = detail::component_sizes(map, *roads, conn == Connectivity::eight);
  if (sizes.empty()) return std::nullopt;
  std::int64_t total = 0, best = 0;
  for (auto s : sizes) {
    total += s;
    best = std::max(best, s);
  }
  return static_cast<double>(best) / static_cast<double>(total);
}

/// Fraction of pixels whose 3x3 neighbourhood (clipped at the border) holds
/// three or more distinct classes.
inline double boundary_noise(const ClassMap& map) {
  require(map.size() > 0, "boundary_noise of an empty map");
  std::int64_t noisy = 0;
  for (int y = 0; y < map.height; ++y)
    for (int x = 0; x < map.width; ++x) {
      std::array<std::uint8_t, 9> seen{};
      int distinct = 0;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          if (!map.in_bounds(x + dx, y + dy)) continue;
          const auto v = map.at(x + dx, y + dy);
          if (std::find(seen.begin(), seen.begin() + distinct, v) == seen.begin() + distinct)
            seen[distinct++] = v;
        }
      noisy += distinct >= 3;
    }
  return static_cast<double>(noisy) / static_cast<double>(map.size());
}

/// Total-variation distance between class-fraction vectors.
inline double histogram_distance(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), "histogram_distance: lengths differ (", a.size(), " vs ", b.size(), ")");
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

inline double histogram_distance(const ClassMap& a, const ClassMap& b) {
  detail::require_comparable(a, b, "histogram_distance");
  return histogram_distance(class_histogram(a), class_histogram(b));
}

/// Number of separate places where layout roads on the site boundary meet
/// an urban road. The site is the environment's mask class; boundary cells
/// are site cells with a 4-neighbour outside the site (or off the map).
/// Touching boundary road pixels (8-neighbours) form one entrance.
inline int entrance_count(const ClassMap& layout, const ClassMap& environment) {
  require(layout.width == environment.width && layout.height == environment.height,
          "entrance_count: layout ", layout.width, "x", layout.height, " and environment ",
          environment.width, "x", environment.height, " are not aligned");
  int site = -1;
  for (const auto& e : environment.legend->entries())
    if (e.role == Role::mask) site = e.class_id;
  require(site >= 0, "entrance_count: environment legend '", environment.legend->id(),
          "' has no site mask class");
  require(std::find(environment.data.begin(), environment.data.end(), site) != environment.data.end(),
          "entrance_count: environment map contains no site mask pixels");
  const auto roads = layout.legend->find("Roads");
  require(roads.has_value(), "entrance_count: layout legend has no Roads class");
  const auto urban = environment.legend->find("Urban road");
  require(urban.has_value(), "entrance_count: environment legend has no Urban road class");

  const int W = environment.width, H = environment.height;
  auto in_site = [&](int x, int y) {
    return environment.in_bounds(x, y) && environment.at(x, y) == site;
  };
  constexpr int d4[4][2] = {{1, 0}, {-1, 0}, {0, 1}, {0, -1}};
  std::vector<std::uint8_t> marked(layout.size(), 0);
  for (int y = 0; y < H; ++y)
    for (int x = 0; x < W; ++x) {
      if (!in_site(x, y) || layout.at(x, y) != *roads) continue;
      bool edge = false, meets_road = false;
      for (const auto& d : d4) {
        const int nx = x + d[0], ny = y + d[1];
        if (!in_site(nx, ny)) edge = true;
        if (environment.in_bounds(nx, ny) && environment.at(nx, ny) == *urban) meets_road = true;
      }
      marked[static_cast<std::size_t>(y) * W + x] = edge && meets_road;
    }
  ClassMap runs(W, H, layout.legend, 0);
  for (std::size_t i = 0; i < marked.size(); ++i) runs.data[i] = marked[i];
  return static_cast<int>(detail::component_sizes(runs, 1, true).size());
}

struct LayoutReport {
  std::optional<double> road_connectivity;
  double boundary_noise = 0;
  std::optional<double> histogram_distance;  // against a reference when one is given
  std::optional<int> entrance_count;         // when an environment is given
  std::vector<double> class_fractions;

  nlohmann::json to_json(const Legend& legend) const {
    nlohmann::json j;
    j["road_connectivity"] = road_connectivity ? nlohmann::json(*road_connectivity) : nlohmann::json();
    j["boundary_noise"] = boundary_noise;
    j["histogram_distance"] = histogram_distance ? nlohmann::json(*histogram_distance) : nlohmann::json();
    j["entrance_count"] = entrance_count ? nlohmann::json(*entrance_count) : nlohmann::json();
    auto& f = j["class_fractions"] = nlohmann::json::object();
    for (std::size_t k = 0; k < class_fractions.size(); ++k) f[legend[static_cast<int>(k)].name] = class_fractions[k];
    return j;
  }
};

inline LayoutReport layout_report(const ClassMap& layout, const ClassMap* reference = nullptr,
                                  const ClassMap* environment = nullptr) {
  LayoutReport r;
  r.road_connectivity = road_connectivity(layout);
  r.boundary_noise = boundary_noise(layout);
  r.class_fractions = class_histogram(layout);
  if (reference) r.histogram_distance = histogram_distance(layout, *reference);
  if (environment) r.entrance_count = entrance_count(layout, *environment);
  return r;
}

/// One CSV row per item plus a JSON summary with means over defined values.
struct ReportTable {
  std::vector<std::string> columns;
  std::vector<std::pair<std::string, std::vector<std::optional<double>>>> rows;

  void add(const std::string& id, std::vector<std::optional<double>> values) {
    require(values.size() == columns.size(), "report row has ", values.size(), " values, expected ",
            columns.size());
    rows.emplace_back(id, std::move(values));
  }

  std::optional<double> mean(std::size_t col) const {
    double s = 0;
    int n = 0;
    for (const auto& [_, v] : rows)
      if (v[col]) {
        s += *v[col];
        ++n;
      }
    if (n == 0) return std::nullopt;
    return s / n;
  }

  std::optional<double> mean(const std::string& column) const {
    const auto it = std::find(columns.begin(), columns.end(), column);
    require(it != columns.end(), "no report column '", column, "'");
    return mean(static_cast<std::size_t>(it - columns.begin()));
  }

  std::string to_csv() const {
    std::ostringstream oss;
    oss.precision(10);
    oss << "id";
    for (const auto& c : columns) oss << ',' << c;
    oss << '\n';
    for (const auto& [id, v] : rows) {
      oss << id;
      for (const auto& x : v) {
        oss << ',';
        if (x) oss << *x;
      }
      oss << '\n';
    }
    return oss.str();
  }

  nlohmann::json summary() const {
    nlohmann::json j;
    j["count"] = rows.size();
    auto& means = j["means"] = nlohmann::json::object();
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const auto m = mean(c);
      means[columns[c]] = m ? nlohmann::json(*m) : nlohmann::json();
    }
    return j;
  }
};

}  // namespace parkgen
