#pragma once

// Checkpoint file: versioned magic line, plain-text header (architecture,
// metadata and a name/shape/offset index), the line "END", then raw
// little-endian float32 tensor data.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "parkgen/error.hpp"
#include "parkgen/kv.hpp"
#include "parkgen/nets.hpp"

namespace parkgen {

inline constexpr const char* kCheckpointMagic = "PARKGEN-CKPT v1";

struct Checkpoint {
  Weights<float> weights;
  KeyValues meta;

  const ArchSpec& spec() const { return weights.spec(); }

  bool operator==(const Checkpoint& o) const { return weights == o.weights && meta == o.meta; }
};

namespace detail {

inline std::uint32_t float_bits_le(float v) {
  auto bits = std::bit_cast<std::uint32_t>(v);
  if constexpr (std::endian::native == std::endian::big)
    bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
  return bits;
}
inline float float_from_le(std::uint32_t bits) {
  if constexpr (std::endian::native == std::endian::big)
    bits = ((bits & 0xFFu) << 24) | ((bits & 0xFF00u) << 8) | ((bits >> 8) & 0xFF00u) | (bits >> 24);
  return std::bit_cast<float>(bits);
}

/// Writes through a temporary file and renames it into place.
inline void write_atomically(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), "cannot open '", tmp, "' for writing");
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    require(static_cast<bool>(f), "failed writing '", tmp, "'");
  }
  std::filesystem::rename(tmp, path);
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), "cannot open '", path, "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& ckpt) {
  KeyValues header;
  ckpt.spec().write(header);
  header.set("init_seed", ckpt.weights.seed());
  for (const auto& k : ckpt.meta.keys()) header.set("meta." + k, ckpt.meta.str(k));
  const auto& params = ckpt.weights.params();
  header.set("tensor.count", params.size());
  std::size_t offset = 0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& [name, var] = params[i];
    const auto& s = var->value.shape;
    const auto p = "tensor." + std::to_string(i);
    header.set(p + ".name", name);
    header.set(p + ".shape", detail::concat(s.n, " ", s.c, " ", s.h, " ", s.w));
    header.set(p + ".offset", offset);
    offset += var->value.size();
  }
  std::string out = std::string(kCheckpointMagic) + "\n" + header.dump() + "END\n";
  const std::size_t base = out.size();
  out.resize(base + offset * 4);
  std::size_t pos = base;
  for (const auto& [_, var] : params)
    for (float v : var->value.data) {
      const auto bits = detail::float_bits_le(v);
      std::memcpy(&out[pos], &bits, 4);
      pos += 4;
    }
  return out;
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin) {
  const auto nl = bytes.find('\n');
  require(nl != std::string::npos, "'", origin, "' is not a checkpoint");
  const auto magic = bytes.substr(0, nl);
  if (magic != kCheckpointMagic) {
    if (magic.rfind("PARKGEN-CKPT", 0) == 0)
      fail<VersionError>("'", origin, "' has checkpoint version '", magic, "', expected '",
                         kCheckpointMagic, "'");
    fail("'", origin, "' is not a checkpoint (bad magic)");
  }
  const auto end = bytes.find("\nEND\n", nl);
  require(end != std::string::npos, "'", origin, "': truncated checkpoint header");
  const auto header = KeyValues::parse(bytes.substr(nl + 1, end - nl), origin);
  const auto spec = ArchSpec::read(header);
  Checkpoint ckpt;
  ckpt.weights = Weights<float>(spec, header.get<std::uint64_t>("init_seed"));
  for (const auto& k : header.keys())
    if (k.rfind("meta.", 0) == 0) ckpt.meta.set(k.substr(5), header.str(k));
  const std::size_t data_begin = end + 5;
  const std::size_t n_floats = (bytes.size() - data_begin) / 4;
  require((bytes.size() - data_begin) % 4 == 0, "'", origin, "': tensor data is not float32-aligned");
  const auto count = header.get<std::size_t>("tensor.count");
  for (std::size_t i = 0; i < count; ++i) {
    const auto p = "tensor." + std::to_string(i);
    std::istringstream ss(header.str(p + ".shape"));
    Shape s;
    ss >> s.n >> s.c >> s.h >> s.w;
    require(static_cast<bool>(ss), "'", origin, "': bad shape for ", p);
    const auto offset = header.get<std::size_t>(p + ".offset");
    require(offset + s.numel() <= n_floats, "'", origin, "': tensor ", header.str(p + ".name"),
            " exceeds data section");
    Tensor<float> t(s);
    for (std::size_t j = 0; j < t.size(); ++j) {
      std::uint32_t bits;
      std::memcpy(&bits, &bytes[data_begin + (offset + j) * 4], 4);
      t.data[j] = detail::float_from_le(bits);
    }
    ckpt.weights.add(header.str(p + ".name"), std::move(t));
  }
  // Names and shapes are fully determined by the architecture.
  const auto layout = param_layout(spec);
  require(layout.size() == count, "'", origin, "': expected ", layout.size(), " tensors for ",
          to_string(spec.kind), ", found ", count);
  for (const auto& d : layout) {
    const auto v = ckpt.weights.find(d.name);
    require(v != nullptr, "'", origin, "': missing tensor ", d.name);
    require(v->value.shape == d.shape, "'", origin, "': tensor ", d.name, " has shape ",
            v->value.shape.str(), ", expected ", d.shape.str());
  }
  return ckpt;
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  detail::write_atomically(path, serialize_checkpoint(ckpt));
}

inline Checkpoint load_checkpoint(const std::string& path) {
  return deserialize_checkpoint(detail::read_file(path), path);
}

}  // namespace parkgen
