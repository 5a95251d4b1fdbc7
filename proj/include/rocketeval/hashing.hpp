// Copyright 2026 The RocketEval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Stable hashes and counter-based random numbers. Everything here is a pure
// function of its inputs, independent of platform, thread or call order.

#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <memory>
#include <string>
#include <string_view>

#include "rocketeval/error.hpp"

namespace rocketeval {

namespace detail {

struct EvpCtxDeleter {
  void operator()(EVP_MD_CTX* ctx) const { EVP_MD_CTX_free(ctx); }
};

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) {
      throw Error("sha256: cannot initialise digest context");
    }
  }

  void Update(std::string_view data) {
    EVP_DigestUpdate(ctx_.get(), data.data(), data.size());
  }

  std::array<unsigned char, 32> Final() {
    std::array<unsigned char, 32> out{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), out.data(), &len);
    return out;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, EvpCtxDeleter> ctx_;
};

inline std::string ToHex(const std::array<unsigned char, 32>& digest) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(64);
  for (unsigned char b : digest) {
    hex.push_back(kDigits[b >> 4]);
    hex.push_back(kDigits[b & 0xf]);
  }
  return hex;
}

}  // namespace detail

// Lowercase hex SHA-256 of `data`.
inline std::string Sha256Hex(std::string_view data) {
  detail::Sha256 h;
  h.Update(data);
  return detail::ToHex(h.Final());
}

// Lowercase hex SHA-256 of a file's bytes.
inline std::string FileSha256Hex(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open " + path.string());
  detail::Sha256 h;
  std::array<char, 1 << 14> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    h.Update(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())));
  }
  return detail::ToHex(h.Final());
}

// First 8 bytes of SHA-256 over the given parts, each part length-prefixed so
// ("ab","c") and ("a","bc") differ.
inline std::uint64_t StableHash64(std::initializer_list<std::string_view> parts) {
  detail::Sha256 h;
  for (std::string_view p : parts) {
    const std::string len = std::to_string(p.size()) + ":";
    h.Update(len);
    h.Update(p);
  }
  const auto d = h.Final();
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | d[i];
  return v;
}

// splitmix64 finaliser.
constexpr std::uint64_t Mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives a child key from a parent key and a salt. Used to key RNG streams
// hierarchically (seed -> tree -> node -> candidate).
constexpr std::uint64_t DeriveKey(std::uint64_t parent, std::uint64_t salt) {
  return Mix64(parent ^ Mix64(salt + 0x632be59bd9b4e019ULL));
}

// Uniform double in the open interval (0, 1) from a key.
constexpr double UnitOpen(std::uint64_t key) {
  const std::uint64_t bits = Mix64(key) >> 11;  // 53 bits
  return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

// Sequential generator over a keyed stream; satisfies
// UniformRandomBitGenerator so it plugs into <random> if needed.
class KeyedRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr KeyedRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  constexpr result_type operator()() { return Mix64(DeriveKey(key_, counter_++)); }

  constexpr double NextUnit() { return UnitOpen(DeriveKey(key_, counter_++)); }

  // Uniform integer in [0, n). Rejection-free multiply-shift; bias is
  // below 2^-64 * n, irrelevant for resampling sizes used here.
  std::uint64_t NextBelow(std::uint64_t n) {
    const unsigned __int128 m =
        static_cast<unsigned __int128>((*this)()) * static_cast<unsigned __int128>(n);
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace rocketeval
