#pragma once

#include <array>
#include <string>
#include <string_view>

#include <openssl/evp.h>

#include "parkgen/checkpoint.hpp"
#include "parkgen/error.hpp"

namespace parkgen {

/// Lower-case hex SHA-256 of a byte string.
inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  require(EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) == 1,
          "SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

inline std::string sha256_file(const std::string& path) { return sha256_hex(detail::read_file(path)); }

}  // namespace parkgen
