#include <gtest/gtest.h>

#include <filesystem>
#include <set>

#include "parkgen/hash.hpp"
#include "parkgen/metrics.hpp"
#include "parkgen/synthcity.hpp"

using namespace parkgen;
namespace fs = std::filesystem;

namespace {

const SceneParams kDefault{};

std::string scene_digest(const SceneQuad& q) {
  std::string bytes(reinterpret_cast<const char*>(q.remote.data.data()), q.remote.data.size() * 4);
  bytes.append(q.environment.data.begin(), q.environment.data.end());
  bytes.append(q.layout.data.begin(), q.layout.data.end());
  bytes.append(reinterpret_cast<const char*>(q.scheme.data.data()), q.scheme.data.size() * 4);
  return sha256_hex(bytes);
}

// Independent BFS: number of 4-connected components of one class.
int components(const ClassMap& m, int cls) {
  std::vector<int> seen(m.size(), 0);
  int n = 0;
  for (int s = 0; s < static_cast<int>(m.size()); ++s) {
    if (seen[s] || m.data[s] != cls) continue;
    ++n;
    std::vector<int> queue{s};
    seen[s] = 1;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int x = queue[q] % m.width, y = queue[q] / m.width;
      const int nb[4][2] = {{x + 1, y}, {x - 1, y}, {x, y + 1}, {x, y - 1}};
      for (const auto& p : nb) {
        if (!m.in_bounds(p[0], p[1])) continue;
        const int j = p[1] * m.width + p[0];
        if (!seen[j] && m.data[j] == cls) {
          seen[j] = 1;
          queue.push_back(j);
        }
      }
    }
  }
  return n;
}

}  // namespace

TEST(Scene, Deterministic) {
  EXPECT_EQ(generate_scene(17, kDefault), generate_scene(17, kDefault));
}

TEST(Scene, SharedDimensions) {
  const auto q = generate_scene(3, kDefault);
  for (int d : {q.remote.width, q.remote.height, q.environment.width, q.environment.height, q.layout.width,
                q.layout.height, q.scheme.width, q.scheme.height})
    EXPECT_EQ(d, kDefault.canvas_size);
}

TEST(Scene, NoiseFreeRemoteQuantizesExactly) {
  SceneParams p;
  p.texture_noise = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = generate_scene(seed, p);
    EXPECT_EQ(quantize_to_classes(q.remote, Legend::environment()), q.environment) << seed;
  }
}

TEST(Scene, AlignmentAtDefaultNoise) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto q = generate_scene(seed, kDefault);
    const auto m = confusion(quantize_to_classes(q.remote, Legend::environment()), q.environment);
    EXPECT_GE(m.pixel_accuracy(), 0.85) << seed;
  }
}

TEST(Scene, SchemeQuantizesToLayout) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto q = generate_scene(seed, kDefault);
    EXPECT_EQ(quantize_to_classes(q.scheme, Legend::park()), q.layout) << seed;
  }
}

TEST(Scene, LayoutOnlyInsidePark) {
  const int background = Legend::park()->id_of("Background");
  const int site = Legend::environment()->id_of("Red line");
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto q = generate_scene(seed, kDefault);
    for (int y = 0; y < q.layout.height; ++y)
      for (int x = 0; x < q.layout.width; ++x) {
        const bool inside = q.park.contains(x, y);
        if (inside) {
          EXPECT_NE(q.layout.at(x, y), background);
        } else {
          EXPECT_EQ(q.layout.at(x, y), background);
        }
        EXPECT_EQ(q.environment.at(x, y) == site, inside);
      }
  }
}

TEST(Scene, RoadsFormOneComponentReachingUrbanRoads) {
  const int roads = Legend::park()->id_of("Roads");
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    const auto q = generate_scene(seed, kDefault);
    EXPECT_EQ(components(q.layout, roads), 1) << seed;
    EXPECT_EQ(road_connectivity(q.layout), 1.0) << seed;
    EXPECT_GE(entrance_count(q.layout, q.environment), 1) << seed;
  }
}

TEST(Scene, TooSmallParkIsStructural) {
  SceneParams p;
  p.park_rect = {20, 20, 10, 10};
  p.park_jitter = 0;
  EXPECT_THROW(generate_scene(1, p), StructuralError);
}

TEST(Scene, InvalidParamsAreConfigErrors) {
  SceneParams p;
  p.building_density = 1.5;
  EXPECT_THROW(generate_scene(1, p), ConfigError);
  p = SceneParams{};
  p.park_rect = {40, 40, 32, 32};
  EXPECT_THROW(generate_scene(1, p), ConfigError);
}

TEST(Corpus, SeedsAndSingleScene) {
  const auto c = generate_corpus(1, 42, kDefault);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c.scenes[0], generate_scene(42, kDefault));
  const auto c5 = generate_corpus(5, 100, kDefault);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(c5.scenes[i].seed, 100 + i);
}

TEST(Corpus, ZeroScenesIsAnError) { EXPECT_THROW(generate_corpus(0, 1, kDefault), StructuralError); }

TEST(Corpus, AllParkClassesAboveFloor) {
  const auto c = generate_corpus(50, 0, kDefault);
  const auto h = c.layout_histogram();
  const auto park = Legend::park();
  for (const auto& e : park->entries())
    if (e.role == Role::park_element) {
      EXPECT_GE(h[e.class_id], 1e-3) << e.name;
    }
}

TEST(Corpus, DisjointSeedRangesShareNoScene) {
  const auto a = generate_corpus(25, 0, kDefault);
  const auto b = generate_corpus(25, 25, kDefault);
  std::set<std::string> digests;
  for (const auto& s : a.scenes) digests.insert(scene_digest(s));
  for (const auto& s : b.scenes) EXPECT_FALSE(digests.count(scene_digest(s))) << s.seed;
}

TEST(Corpus, ManifestRecordsProvenance) {
  const auto m = generate_corpus(3, 9, kDefault).manifest();
  EXPECT_EQ(m.at("prng"), Rng::algorithm);
  EXPECT_EQ(m.at("seeds"), nlohmann::json({9, 10, 11}));
  EXPECT_EQ(SceneParams::from_json(m.at("params")), kDefault);
  EXPECT_TRUE(m.at("layout_histogram").contains("Plant"));
}

TEST(Split, FloorArithmetic) {
  const auto c = generate_corpus(50, 0, kDefault);
  const auto [train, test] = split_corpus(c, 0.88);
  EXPECT_EQ(train.size(), 44u);
  EXPECT_EQ(test.size(), 6u);
  std::set<std::uint64_t> seeds;
  for (const auto& s : train.scenes) seeds.insert(s.seed);
  for (const auto& s : test.scenes) EXPECT_TRUE(seeds.insert(s.seed).second);
  EXPECT_EQ(seeds.size(), 50u);
}

TEST(Split, TwoScenesHalf) {
  const auto [train, test] = split_corpus(generate_corpus(2, 0, kDefault), 0.5);
  EXPECT_EQ(train.size(), 1u);
  EXPECT_EQ(test.size(), 1u);
}

TEST(Split, EmptySideIsAnError) {
  const auto c = generate_corpus(3, 0, kDefault);
  EXPECT_THROW(split_corpus(c, 0.1), StructuralError);
  EXPECT_THROW(split_corpus(generate_corpus(1, 0, kDefault), 0.99), StructuralError);
  EXPECT_THROW(split_corpus(c, 1.0), ConfigError);
}

TEST(Corpus, DiskRoundTrip) {
  const auto dir = fs::temp_directory_path() / "parkgen_test_corpus";
  fs::remove_all(dir);
  SceneParams p;
  p.texture_noise = 0;  // keeps remote images exact through 8-bit PNG
  const auto c = generate_corpus(3, 7, p);
  save_corpus(c, dir.string());
  EXPECT_TRUE(fs::exists(dir / "scene_00000007" / "environment.png"));
  const auto back = load_corpus(dir.string());
  ASSERT_EQ(back.size(), 3u);
  EXPECT_EQ(back.params, p);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(back.scenes[i].environment, c.scenes[i].environment);
    EXPECT_EQ(back.scenes[i].layout, c.scenes[i].layout);
    EXPECT_EQ(back.scenes[i].park, c.scenes[i].park);
    EXPECT_EQ(back.scenes[i].remote, c.scenes[i].remote);
  }
}
